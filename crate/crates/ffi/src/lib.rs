//! C ABI over the proxemics toolkit.
//!
//! Every function returns a [`PxStatus`]; on failure a message is available
//! from [`px_last_error_message`] on the same thread. Frame stores are opaque
//! handles created by `px_frame_store_*` constructors and released with
//! [`px_frame_store_free`]. Strings returned to the caller must be released
//! with [`px_string_free`]. No function unwinds across the boundary.

use proxemics::engine::{self, EngineError, ProxemicZone};
use proxemics::geom::Vec3;
use proxemics::ingest::read_log;
use proxemics::resample::{resample_session, FrameStore};
use proxemics::telemetry::validate_tick;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Validation = 5,
    Empty = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PxZone {
    Intimate = 0,
    Personal = 1,
    Social = 2,
    Public = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PxVec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<PxVec3> for Vec3 {
    fn from(v: PxVec3) -> Self {
        Vec3::new(v.x, v.y, v.z)
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PxSummary {
    pub users: usize,
    pub frames: usize,
    pub pose_count: usize,
    pub rooms: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PxExtent {
    pub min_x: f64,
    pub max_x: f64,
    pub min_z: f64,
    pub max_z: f64,
}

/// Resampled frames of one room.
pub struct PxFrameStore {
    inner: FrameStore,
}

struct Failure {
    status: PxStatus,
    message: String,
}

impl Failure {
    fn new(status: PxStatus, message: impl Into<String>) -> Self {
        Failure { status, message: message.into() }
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        let status = match e {
            EngineError::Empty(_) => PxStatus::Empty,
            _ => PxStatus::InvalidArgument,
        };
        Failure::new(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PxStatus::Ok,
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(_) => {
            set_last_error("internal panic");
            PxStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure::new(PxStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    non_null(p, what)?;
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(PxStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn store_arg<'a>(p: *const PxFrameStore) -> Result<&'a FrameStore, Failure> {
    non_null(p, "store")?;
    Ok(&(*p).inner)
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    non_null(p, what)?;
    Ok(std::slice::from_raw_parts(p, len))
}

fn boxed(store: FrameStore) -> *mut PxFrameStore {
    Box::into_raw(Box::new(PxFrameStore { inner: store }))
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn px_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn px_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a frame store written by `proxemics resample`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn px_frame_store_load_json(path: *const c_char, out: *mut *mut PxFrameStore) -> PxStatus {
    guard(|| {
        non_null(out, "out")?;
        let path = str_arg(path, "path")?;
        let text = std::fs::read_to_string(path).map_err(|e| Failure::new(PxStatus::Io, format!("{path}: {e}")))?;
        let store = FrameStore::from_json(&text).map_err(|e| Failure::new(PxStatus::Parse, e.to_string()))?;
        *out = boxed(store);
        Ok(())
    })
}

/// Reads a JSON-lines tick log and resamples one room. A null `room_id`
/// selects the first room in id order.
///
/// # Safety
/// `path` and a non-null `room_id` must be NUL-terminated strings; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn px_frame_store_from_log(
    path: *const c_char,
    frame_period_ms: i64,
    room_id: *const c_char,
    out: *mut *mut PxFrameStore,
) -> PxStatus {
    guard(|| {
        non_null(out, "out")?;
        let path = str_arg(path, "path")?;
        let room = if room_id.is_null() { None } else { Some(str_arg(room_id, "room_id")?) };
        let readout = read_log(path).map_err(|e| Failure::new(PxStatus::Io, format!("{path}: {e}")))?;
        let stores = resample_session(readout.log, frame_period_ms, None)
            .map_err(|e| Failure::new(PxStatus::InvalidArgument, e.to_string()))?;
        let store = stores
            .into_iter()
            .find(|s| room.is_none_or(|r| s.room_id() == r))
            .ok_or_else(|| Failure::new(PxStatus::Empty, "no ticks for the requested room"))?;
        *out = boxed(store);
        Ok(())
    })
}

/// Releases a store. Null is ignored.
///
/// # Safety
/// `store` must come from a `px_frame_store_*` constructor and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn px_frame_store_free(store: *mut PxFrameStore) {
    if !store.is_null() {
        drop(Box::from_raw(store));
    }
}

/// # Safety
/// `store` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn px_frame_store_summary(store: *const PxFrameStore, out: *mut PxSummary) -> PxStatus {
    guard(|| {
        non_null(out, "out")?;
        let s = store_arg(store)?.summary();
        *out = PxSummary { users: s.users, frames: s.frames, pose_count: s.pose_count, rooms: s.rooms };
        Ok(())
    })
}

/// Zone of an interpersonal distance under the default boundaries.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn px_classify_zone(distance: f64, out: *mut PxZone) -> PxStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = match engine::classify_zone(distance)? {
            ProxemicZone::Intimate => PxZone::Intimate,
            ProxemicZone::Personal => PxZone::Personal,
            ProxemicZone::Social => PxZone::Social,
            ProxemicZone::Public => PxZone::Public,
        };
        Ok(())
    })
}

/// Nearest-neighbour distance probabilities. `out_bins` always receives the
/// bin count; when it exceeds `capacity` nothing else is written and
/// `BufferTooSmall` is returned.
///
/// # Safety
/// `out_probabilities` must hold `capacity` doubles; `out_bins` writable.
#[no_mangle]
pub unsafe extern "C" fn px_nn_histogram(
    store: *const PxFrameStore,
    bin_width: f64,
    range: f64,
    out_probabilities: *mut f64,
    capacity: usize,
    out_bins: *mut usize,
) -> PxStatus {
    guard(|| {
        non_null(out_bins, "out_bins")?;
        let samples: Vec<f64> = engine::nearest_neighbour_series(store_arg(store)?)
            .into_iter()
            .map(|s| s.distance)
            .collect();
        let h = engine::zone_histogram(&samples, bin_width, range)?;
        *out_bins = h.bins();
        if h.bins() > capacity {
            return Err(Failure::new(PxStatus::BufferTooSmall, format!("need {} bins", h.bins())));
        }
        non_null(out_probabilities, "out_probabilities")?;
        std::slice::from_raw_parts_mut(out_probabilities, h.bins()).copy_from_slice(&h.probabilities);
        Ok(())
    })
}

/// Share of nearest-neighbour samples closer than `threshold`.
///
/// # Safety
/// `store` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn px_intimate_collision_rate(store: *const PxFrameStore, threshold: f64, out: *mut f64) -> PxStatus {
    guard(|| {
        non_null(out, "out")?;
        let samples: Vec<f64> = engine::nearest_neighbour_series(store_arg(store)?)
            .into_iter()
            .map(|s| s.distance)
            .collect();
        *out = engine::intimate_collision_rate(&samples, threshold)?;
        Ok(())
    })
}

/// # Safety
/// `store` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn px_fov_containment(
    store: *const PxFrameStore,
    target: PxVec3,
    half_angle_rad: f64,
    out: *mut f64,
) -> PxStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = engine::fov_containment(store_arg(store)?, target.into(), half_angle_rad)?.fraction;
        Ok(())
    })
}

/// # Safety
/// `store` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn px_occupied_extent(store: *const PxFrameStore, quantile: f64, out: *mut PxExtent) -> PxStatus {
    guard(|| {
        non_null(out, "out")?;
        let e = engine::occupied_extent(store_arg(store)?, quantile)?;
        *out = PxExtent { min_x: e.min_x, max_x: e.max_x, min_z: e.min_z, max_z: e.max_z };
        Ok(())
    })
}

/// Row-major `n x n` distance and ego-bearing angle matrices. Undefined
/// angles (diagonal, coincident users) are written as NaN.
///
/// # Safety
/// `positions` and `directions` must hold `n` elements; both outputs must
/// hold `n * n` doubles.
#[no_mangle]
pub unsafe extern "C" fn px_pairwise(
    positions: *const PxVec3,
    directions: *const PxVec3,
    n: usize,
    out_distance: *mut f64,
    out_angle: *mut f64,
) -> PxStatus {
    guard(|| {
        let cells = n.checked_mul(n).ok_or_else(|| Failure::new(PxStatus::InvalidArgument, "n too large"))?;
        let pos: Vec<Vec3> = slice_arg(positions, n, "positions")?.iter().map(|&p| p.into()).collect();
        let dir: Vec<Vec3> = slice_arg(directions, n, "directions")?.iter().map(|&p| p.into()).collect();
        let (distance, angle) = engine::pairwise_points(&pos, &dir)?;
        if cells == 0 {
            return Ok(());
        }
        non_null(out_distance, "out_distance")?;
        non_null(out_angle, "out_angle")?;
        std::slice::from_raw_parts_mut(out_distance, cells).copy_from_slice(distance.as_slice());
        let out = std::slice::from_raw_parts_mut(out_angle, cells);
        for (o, a) in out.iter_mut().zip(angle.as_slice()) {
            *o = a.unwrap_or(f64::NAN);
        }
        Ok(())
    })
}

/// Density clustering of `n` points: `out_labels[i]` is the cluster of
/// point `i` or -1 for noise; `out_clusters` receives the cluster count.
///
/// # Safety
/// `positions` and `out_labels` must hold `n` elements; `out_clusters`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn px_detect_groups(
    positions: *const PxVec3,
    n: usize,
    eps: f64,
    min_size: usize,
    out_labels: *mut i64,
    out_clusters: *mut usize,
) -> PxStatus {
    guard(|| {
        non_null(out_clusters, "out_clusters")?;
        let pos: Vec<Vec3> = slice_arg(positions, n, "positions")?.iter().map(|&p| p.into()).collect();
        let labels = engine::dbscan(&pos, eps, min_size)?;
        if n > 0 {
            non_null(out_labels, "out_labels")?;
            let out = std::slice::from_raw_parts_mut(out_labels, n);
            for (o, l) in out.iter_mut().zip(&labels) {
                *o = l.map_or(-1, |c| c as i64);
            }
        }
        *out_clusters = labels.iter().flatten().max().map_or(0, |m| m + 1);
        Ok(())
    })
}

/// Validates one tick event given as JSON. On success `out_canonical`
/// (if non-null) receives the canonical encoding, to be released with
/// [`px_string_free`].
///
/// # Safety
/// `json` must be a NUL-terminated string; `out_canonical` null or writable.
#[no_mangle]
pub unsafe extern "C" fn px_validate_tick_json(json: *const c_char, out_canonical: *mut *mut c_char) -> PxStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Failure::new(PxStatus::Parse, e.to_string()))?;
        let event = validate_tick(&value).map_err(|e| Failure::new(PxStatus::Validation, e.to_string()))?;
        if !out_canonical.is_null() {
            let line = CString::new(event.to_json_line())
                .map_err(|_| Failure::new(PxStatus::Validation, "event contains NUL"))?;
            *out_canonical = line.into_raw();
        }
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn px_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zone_codes() {
        let mut z = PxZone::Public;
        unsafe {
            assert_eq!(px_classify_zone(0.449, &mut z), PxStatus::Ok);
            assert_eq!(z, PxZone::Intimate);
            assert_eq!(px_classify_zone(3.6, &mut z), PxStatus::Ok);
            assert_eq!(z, PxZone::Public);
            assert_eq!(px_classify_zone(-1.0, &mut z), PxStatus::InvalidArgument);
            assert_eq!(px_classify_zone(1.0, ptr::null_mut()), PxStatus::NullPointer);
        }
        let msg = unsafe { CStr::from_ptr(px_last_error_message()) };
        assert_eq!(msg.to_str().unwrap(), "out is null");
    }

    #[test]
    fn version_is_cargo_version() {
        let v = unsafe { CStr::from_ptr(px_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }

    #[test]
    fn panics_are_contained() {
        assert_eq!(guard(|| panic!("boom")), PxStatus::Panic);
    }
}
