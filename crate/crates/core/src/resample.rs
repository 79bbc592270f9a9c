//! Fixed-rate frame store built from variable-rate tick streams.
//!
//! Clients log at whatever rate their hardware renders, so raw streams have
//! very different densities per user. Resampling buckets every stream into
//! fixed-length time bins ("frames") and keeps the last observed tick of each
//! user in each bin. Nothing is interpolated and empty bins stay empty, so a
//! user who dropped out is visibly absent.

use crate::geom::{Quat, Vec3};
use crate::telemetry::{EpochMillis, SessionLog, Streams, TickEvent};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use thiserror::Error;

/// Ten frames per minute.
pub const DEFAULT_FRAME_PERIOD_MS: i64 = 6_000;

const MINUTE_MS: i64 = 60_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResampleError {
    #[error("frame period must be positive (got {0} ms)")]
    InvalidPeriod(i64),
    #[error("frames per minute must divide evenly into milliseconds (got {0})")]
    InvalidRate(f64),
    #[error("pose for `{user}` at {ts} lies outside frame {frame}")]
    OutOfBin { frame: u64, user: String, ts: EpochMillis },
    #[error("pose for `{user}` in frame {frame} is invalid: {reason}")]
    InvalidPose { frame: u64, user: String, reason: String },
    #[error("user `{user}` appears twice in frame {frame}")]
    DuplicateUser { frame: u64, user: String },
}

/// Frame period expressed as a frames-per-minute rate.
pub fn period_from_rate(frames_per_minute: f64) -> Result<i64, ResampleError> {
    if !(frames_per_minute.is_finite() && frames_per_minute > 0.0) {
        return Err(ResampleError::InvalidRate(frames_per_minute));
    }
    let period = MINUTE_MS as f64 / frames_per_minute;
    if period < 1.0 || (period - period.round()).abs() > 1e-9 {
        return Err(ResampleError::InvalidRate(frames_per_minute));
    }
    Ok(period.round() as i64)
}

/// Maps timestamps to frame indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameClock {
    pub period_ms: i64,
    pub origin_ts: EpochMillis,
}

impl FrameClock {
    pub fn new(period_ms: i64, origin_ts: EpochMillis) -> Result<Self, ResampleError> {
        if period_ms <= 0 {
            return Err(ResampleError::InvalidPeriod(period_ms));
        }
        Ok(FrameClock { period_ms, origin_ts })
    }

    /// Origin aligned to the wall-clock minute containing `first_ts`.
    pub fn minute_aligned(period_ms: i64, first_ts: EpochMillis) -> Result<Self, ResampleError> {
        Self::new(period_ms, first_ts.div_euclid(MINUTE_MS) * MINUTE_MS)
    }

    /// Frame containing `ts`, or `None` for timestamps before the origin.
    pub fn frame_of(&self, ts: EpochMillis) -> Option<u64> {
        let offset = ts.checked_sub(self.origin_ts)?;
        (offset >= 0).then(|| (offset / self.period_ms) as u64)
    }

    pub fn frame_start(&self, frame: u64) -> EpochMillis {
        self.origin_ts + frame as i64 * self.period_ms
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec3,
    pub direction: Vec3,
    pub orientation: Quat,
    pub source_ts: EpochMillis,
}

impl From<&TickEvent> for Pose {
    fn from(e: &TickEvent) -> Self {
        Pose {
            position: e.position,
            direction: e.direction,
            orientation: e.orientation,
            source_ts: e.ts_utc,
        }
    }
}

/// Poses of one frame, keyed by user id.
pub type Frame = BTreeMap<String, Pose>;

#[derive(Debug, Clone, PartialEq)]
pub struct FrameStore {
    room_id: String,
    clock: FrameClock,
    frames: BTreeMap<u64, Frame>,
}

impl FrameStore {
    pub fn new(room_id: impl Into<String>, clock: FrameClock) -> Self {
        FrameStore { room_id: room_id.into(), clock, frames: BTreeMap::new() }
    }

    pub fn room_id(&self) -> &str {
        &self.room_id
    }

    pub fn clock(&self) -> FrameClock {
        self.clock
    }

    pub fn frame_period_ms(&self) -> i64 {
        self.clock.period_ms
    }

    pub fn origin_ts(&self) -> EpochMillis {
        self.clock.origin_ts
    }

    pub fn frame_index_to_utc(&self, frame: u64) -> EpochMillis {
        self.clock.frame_start(frame)
    }

    /// Inserts a pose, checking that it belongs to the frame's time bin.
    pub fn insert(&mut self, frame: u64, user_id: impl Into<String>, pose: Pose) -> Result<(), ResampleError> {
        let user = user_id.into();
        if self.clock.frame_of(pose.source_ts) != Some(frame) {
            return Err(ResampleError::OutOfBin { frame, user, ts: pose.source_ts });
        }
        let entry = self.frames.entry(frame).or_default();
        if entry.contains_key(&user) {
            return Err(ResampleError::DuplicateUser { frame, user });
        }
        entry.insert(user, pose);
        Ok(())
    }

    pub fn frames(&self) -> impl Iterator<Item = (u64, &Frame)> {
        self.frames.iter().map(|(&i, f)| (i, f))
    }

    pub fn frame(&self, index: u64) -> Option<&Frame> {
        self.frames.get(&index)
    }

    /// Every pose in frame order, then user order.
    pub fn poses(&self) -> impl Iterator<Item = (u64, &str, &Pose)> {
        self.frames
            .iter()
            .flat_map(|(&i, f)| f.iter().map(move |(u, p)| (i, u.as_str(), p)))
    }

    pub fn frame_count(&self) -> usize {
        self.frames.values().filter(|f| !f.is_empty()).count()
    }

    pub fn pose_count(&self) -> usize {
        self.frames.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.pose_count() == 0
    }

    pub fn users(&self) -> BTreeSet<&str> {
        self.frames.values().flat_map(|f| f.keys().map(String::as_str)).collect()
    }

    /// Keeps only frames whose index falls in `range`.
    pub fn slice(&self, range: std::ops::Range<u64>) -> FrameStore {
        FrameStore {
            room_id: self.room_id.clone(),
            clock: self.clock,
            frames: self.frames.range(range).map(|(&i, f)| (i, f.clone())).collect(),
        }
    }

    pub fn summary(&self) -> DatasetSummary {
        dataset_summary(std::slice::from_ref(self))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("frame stores always serialise")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Flat `frame,user_id,x,y,z,dx,dy,dz` table.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("frame,user_id,x,y,z,dx,dy,dz\n");
        for (frame, user, p) in self.poses() {
            let (pos, dir) = (p.position, p.direction);
            let _ = writeln!(
                out,
                "{frame},{user},{},{},{},{},{},{}",
                pos.x, pos.y, pos.z, dir.x, dir.y, dir.z
            );
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
struct PoseRecord {
    user_id: String,
    position: Vec3,
    direction: Vec3,
    orientation: Quat,
    source_ts: EpochMillis,
}

#[derive(Serialize, Deserialize)]
struct FrameRecord {
    frame: u64,
    ts_utc: EpochMillis,
    poses: Vec<PoseRecord>,
}

#[derive(Serialize, Deserialize)]
struct FrameStoreRecord {
    room_id: String,
    frame_period_ms: i64,
    origin_ts: EpochMillis,
    frames: Vec<FrameRecord>,
}

impl Serialize for FrameStore {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let record = FrameStoreRecord {
            room_id: self.room_id.clone(),
            frame_period_ms: self.clock.period_ms,
            origin_ts: self.clock.origin_ts,
            frames: self
                .frames
                .iter()
                .filter(|(_, f)| !f.is_empty())
                .map(|(&frame, poses)| FrameRecord {
                    frame,
                    ts_utc: self.clock.frame_start(frame),
                    poses: poses
                        .iter()
                        .map(|(u, p)| PoseRecord {
                            user_id: u.clone(),
                            position: p.position,
                            direction: p.direction,
                            orientation: p.orientation,
                            source_ts: p.source_ts,
                        })
                        .collect(),
                })
                .collect(),
        };
        record.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FrameStore {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let record = FrameStoreRecord::deserialize(deserializer)?;
        let clock = FrameClock::new(record.frame_period_ms, record.origin_ts).map_err(D::Error::custom)?;
        let mut store = FrameStore::new(record.room_id, clock);
        for frame in record.frames {
            for p in frame.poses {
                let unit = |n: f64| (n - 1.0).abs() <= 1e-6;
                if !(p.position.is_finite() && unit(p.direction.norm()) && unit(p.orientation.norm())) {
                    return Err(D::Error::custom(ResampleError::InvalidPose {
                        frame: frame.frame,
                        user: p.user_id,
                        reason: "non-finite position or non-unit direction/orientation".into(),
                    }));
                }
                let pose = Pose {
                    position: p.position,
                    direction: p.direction,
                    orientation: p.orientation,
                    source_ts: p.source_ts,
                };
                store.insert(frame.frame, p.user_id, pose).map_err(D::Error::custom)?;
            }
        }
        Ok(store)
    }
}

/// Incremental last-tick-per-bin decimator for one room.
#[derive(Debug, Clone)]
pub struct Resampler {
    store: FrameStore,
    skipped: usize,
}

impl Resampler {
    pub fn new(room_id: impl Into<String>, clock: FrameClock) -> Self {
        Resampler { store: FrameStore::new(room_id, clock), skipped: 0 }
    }

    /// Feeds one tick. Ticks from other rooms or before the origin are
    /// skipped and counted. A later tick (or an equal timestamp arriving
    /// later) replaces the user's pose for that bin.
    pub fn push(&mut self, event: &TickEvent) -> bool {
        let frame = match self.store.clock.frame_of(event.ts_utc) {
            Some(f) if event.room_id == self.store.room_id => f,
            _ => {
                self.skipped += 1;
                return false;
            }
        };
        let poses = self.store.frames.entry(frame).or_default();
        match poses.get_mut(&event.user_id) {
            Some(existing) if event.ts_utc >= existing.source_ts => *existing = Pose::from(event),
            Some(_) => {}
            None => {
                poses.insert(event.user_id.clone(), Pose::from(event));
            }
        }
        true
    }

    pub fn skipped(&self) -> usize {
        self.skipped
    }

    pub fn finish(self) -> FrameStore {
        self.store
    }
}

/// Resamples the streams of one room.
///
/// `origin_ts` defaults to the earliest tick of the room, floored to the
/// minute. Returns an empty store when the room has no ticks.
pub fn resample(
    streams: &Streams,
    room_id: &str,
    frame_period_ms: i64,
    origin_ts: Option<EpochMillis>,
) -> Result<FrameStore, ResampleError> {
    let room_streams: Vec<&Vec<TickEvent>> = streams
        .iter()
        .filter(|(k, _)| k.room_id == room_id)
        .map(|(_, s)| s)
        .collect();
    let first = room_streams.iter().flat_map(|s| s.iter().map(|e| e.ts_utc)).min();
    let clock = match (origin_ts, first) {
        (Some(origin), _) => FrameClock::new(frame_period_ms, origin)?,
        (None, Some(first)) => FrameClock::minute_aligned(frame_period_ms, first)?,
        (None, None) => FrameClock::new(frame_period_ms, 0)?,
    };
    let mut resampler = Resampler::new(room_id, clock);
    for stream in room_streams {
        for event in stream {
            resampler.push(event);
        }
    }
    Ok(resampler.finish())
}

/// Resamples every room of a session, one store per room in room-id order.
pub fn resample_session(
    log: SessionLog,
    frame_period_ms: i64,
    origin_ts: Option<EpochMillis>,
) -> Result<Vec<FrameStore>, ResampleError> {
    let rooms: Vec<String> = log.room_ids().into_iter().map(str::to_owned).collect();
    let streams = crate::telemetry::sort_and_segment(log);
    rooms
        .iter()
        .map(|room| resample(&streams, room, frame_period_ms, origin_ts))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub users: usize,
    pub frames: usize,
    pub pose_count: usize,
    pub rooms: usize,
}

/// Distinct users and rooms, plus non-empty frames and poses summed over stores.
pub fn dataset_summary(stores: &[FrameStore]) -> DatasetSummary {
    let users: BTreeSet<&str> = stores.iter().flat_map(FrameStore::users).collect();
    let rooms: BTreeSet<&str> = stores
        .iter()
        .filter(|s| !s.is_empty())
        .map(FrameStore::room_id)
        .collect();
    DatasetSummary {
        users: users.len(),
        frames: stores.iter().map(FrameStore::frame_count).sum(),
        pose_count: stores.iter().map(FrameStore::pose_count).sum(),
        rooms: rooms.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::telemetry::{sort_and_segment, SessionLog};
    use proptest::prelude::*;

    const T0: i64 = 1_588_169_400_000; // minute aligned

    fn tick(user: &str, ts: i64, x: f64) -> TickEvent {
        TickEvent {
            user_id: user.into(),
            ts_utc: ts,
            entered: true,
            position: Vec3::new(x, 0.0, 0.0),
            direction: Vec3::new(0.0, 0.0, -1.0),
            orientation: Quat::IDENTITY,
            fps: 60.0,
            muted: false,
            mic_level: None,
            audio_dampened: None,
            room_id: "hall".into(),
        }
    }

    #[test]
    fn ten_hz_minute_gives_ten_frames() {
        let events: Vec<_> = (0..600).map(|k| tick("u", T0 + k * 100, k as f64)).collect();
        let streams = sort_and_segment(SessionLog::new(events));
        let store = resample(&streams, "hall", DEFAULT_FRAME_PERIOD_MS, None).unwrap();
        assert_eq!(store.origin_ts(), T0);
        assert_eq!(store.frame_count(), 10);
        for (i, frame) in store.frames() {
            let pose = &frame["u"];
            assert_eq!(pose.source_ts, T0 + (i as i64 + 1) * 6_000 - 100);
            assert_eq!(store.frame_index_to_utc(i), T0 + i as i64 * 6_000);
        }
    }

    #[test]
    fn no_fill_for_empty_bins() {
        let events: Vec<_> = (0..50).map(|k| tick("u", T0 + k * 100, 0.0)).collect();
        let streams = sort_and_segment(SessionLog::new(events));
        let store = resample(&streams, "hall", DEFAULT_FRAME_PERIOD_MS, None).unwrap();
        assert_eq!(store.frame_count(), 1);
        assert!(store.frame(0).is_some());
        assert!((1..10).all(|i| store.frame(i).is_none()));
    }

    #[test]
    fn origin_is_floored_to_minute() {
        let events = vec![tick("u", T0 + 42_123, 0.0)];
        let streams = sort_and_segment(SessionLog::new(events));
        let store = resample(&streams, "hall", DEFAULT_FRAME_PERIOD_MS, None).unwrap();
        assert_eq!(store.origin_ts(), T0);
        assert!(store.frame(7).is_some());
    }

    #[test]
    fn duplicate_timestamps_later_wins() {
        let events = vec![tick("u", T0 + 10, 1.0), tick("u", T0 + 10, 2.0)];
        let streams = sort_and_segment(SessionLog::new(events));
        let store = resample(&streams, "hall", DEFAULT_FRAME_PERIOD_MS, None).unwrap();
        assert_eq!(store.frame(0).unwrap()["u"].position.x, 2.0);
    }

    #[test]
    fn empty_input_and_bad_period() {
        let store = resample(&Streams::new(), "hall", DEFAULT_FRAME_PERIOD_MS, None).unwrap();
        assert!(store.is_empty());
        assert_eq!(store.summary(), DatasetSummary::default());
        assert_eq!(
            resample(&Streams::new(), "hall", 0, None).unwrap_err(),
            ResampleError::InvalidPeriod(0)
        );
    }

    #[test]
    fn rate_conversion() {
        assert_eq!(period_from_rate(10.0).unwrap(), 6_000);
        assert_eq!(period_from_rate(60.0).unwrap(), 1_000);
        assert!(period_from_rate(0.0).is_err());
        assert!(period_from_rate(-3.0).is_err());
        assert!(period_from_rate(7.0).is_err());
    }

    #[test]
    fn summary_of_two_full_users() {
        let mut events = Vec::new();
        for k in 0..100 {
            events.push(tick("a", T0 + k * 6_000 + 1, 0.0));
            events.push(tick("b", T0 + k * 6_000 + 2, 1.0));
        }
        let streams = sort_and_segment(SessionLog::new(events));
        let store = resample(&streams, "hall", DEFAULT_FRAME_PERIOD_MS, None).unwrap();
        assert_eq!(
            store.summary(),
            DatasetSummary { users: 2, frames: 100, pose_count: 200, rooms: 1 }
        );
    }

    #[test]
    fn sessions_split_by_room() {
        let mut other = tick("a", T0 + 5, 0.0);
        other.room_id = "lake".into();
        let log = SessionLog::new(vec![tick("a", T0, 0.0), other, tick("b", T0 + 9, 0.0)]);
        let stores = resample_session(log, DEFAULT_FRAME_PERIOD_MS, None).unwrap();
        assert_eq!(stores.len(), 2);
        assert_eq!(
            dataset_summary(&stores),
            DatasetSummary { users: 2, frames: 2, pose_count: 3, rooms: 2 }
        );
    }

    #[test]
    fn json_round_trip_and_validation() {
        let events: Vec<_> = (0..30).map(|k| tick(if k % 2 == 0 { "a" } else { "b" }, T0 + k * 700, k as f64)).collect();
        let streams = sort_and_segment(SessionLog::new(events));
        let store = resample(&streams, "hall", DEFAULT_FRAME_PERIOD_MS, None).unwrap();
        let text = store.to_json();
        let back = FrameStore::from_json(&text).unwrap();
        assert_eq!(back, store);
        assert_eq!(back.to_json(), text);

        let tampered = text.replacen("\"frame\":0", "\"frame\":3", 1);
        assert!(FrameStore::from_json(&tampered).is_err());
        let zero_period = text.replacen("\"frame_period_ms\":6000", "\"frame_period_ms\":0", 1);
        assert!(FrameStore::from_json(&zero_period).is_err());
    }

    #[test]
    fn csv_has_one_row_per_pose() {
        let events: Vec<_> = (0..12).map(|k| tick("a", T0 + k * 1000, 0.5)).collect();
        let streams = sort_and_segment(SessionLog::new(events));
        let store = resample(&streams, "hall", 3_000, None).unwrap();
        let csv = store.to_csv();
        assert_eq!(csv.lines().count(), 1 + store.pose_count());
        assert!(csv.lines().nth(1).unwrap().starts_with("0,a,0.5,0,0,0,0,-1"));
    }

    proptest! {
        #[test]
        fn never_invents_poses(ts in prop::collection::vec((0u8..5, 0i64..120_000), 0..200), period in 100i64..20_000) {
            let events: Vec<_> = ts.iter().map(|&(u, t)| tick(&format!("u{u}"), T0 + t, 0.0)).collect();
            let n = events.len();
            let streams = sort_and_segment(SessionLog::new(events));
            let store = resample(&streams, "hall", period, None).unwrap();
            prop_assert!(store.pose_count() <= n);
            for (frame, _, pose) in store.poses() {
                prop_assert_eq!(store.clock().frame_of(pose.source_ts), Some(frame));
            }
        }

        #[test]
        fn native_period_is_identity_on_positions(n in 1usize..50, spacing in 50i64..5_000) {
            let events: Vec<_> = (0..n).map(|k| tick("u", T0 + k as i64 * spacing, k as f64 * 0.5)).collect();
            let streams = sort_and_segment(SessionLog::new(events.clone()));
            let store = resample(&streams, "hall", spacing, Some(T0)).unwrap();
            let xs: Vec<f64> = store.poses().map(|(_, _, p)| p.position.x).collect();
            let want: Vec<f64> = events.iter().map(|e| e.position.x).collect();
            prop_assert_eq!(xs, want);
        }
    }
}
