use proxemics::ingest::encode_lines;
use proxemics::sim::{presets, run_scenario};
use proxemics_ffi::*;
use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

fn last_error() -> String {
    let p = px_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn breakout_log(dir: &Path) -> CString {
    let events = run_scenario(&presets::breakout_circle(42, 5, 1.5)).unwrap();
    let path = dir.join("ticks.jsonl");
    std::fs::write(&path, encode_lines(&events)).unwrap();
    CString::new(path.to_str().unwrap()).unwrap()
}

#[test]
fn store_lifecycle_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let path = breakout_log(dir.path());
    let mut store = ptr::null_mut();
    unsafe {
        assert_eq!(px_frame_store_from_log(path.as_ptr(), 6000, ptr::null(), &mut store), PxStatus::Ok);
        assert!(!store.is_null());

        let mut summary = PxSummary::default();
        assert_eq!(px_frame_store_summary(store, &mut summary), PxStatus::Ok);
        assert_eq!(summary.users, 5);
        assert_eq!(summary.rooms, 1);
        assert!(summary.frames >= 90);

        let mut bins = 0usize;
        assert_eq!(px_nn_histogram(store, 0.25, 6.0, ptr::null_mut(), 0, &mut bins), PxStatus::BufferTooSmall);
        assert_eq!(bins, 24);
        let mut probs = vec![0.0; bins];
        assert_eq!(px_nn_histogram(store, 0.25, 6.0, probs.as_mut_ptr(), probs.len(), &mut bins), PxStatus::Ok);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);

        let mut rate = -1.0;
        assert_eq!(px_intimate_collision_rate(store, 0.45, &mut rate), PxStatus::Ok);
        assert_eq!(rate, 0.0);

        let mut extent = PxExtent::default();
        assert_eq!(px_occupied_extent(store, 1.0, &mut extent), PxStatus::Ok);
        assert!(extent.max_x - extent.min_x > 2.0 && extent.max_x - extent.min_x < 3.5);

        let mut fov = -1.0;
        let centre = PxVec3 { x: 0.0, y: 1.7, z: 0.0 };
        assert_eq!(px_fov_containment(store, centre, 0.5, &mut fov), PxStatus::Ok);
        assert!((0.0..=1.0).contains(&fov));

        px_frame_store_free(store);
        px_frame_store_free(ptr::null_mut());
    }
}

#[test]
fn json_store_matches_log_store() {
    let dir = tempfile::tempdir().unwrap();
    let log = breakout_log(dir.path());
    let events = run_scenario(&presets::breakout_circle(42, 5, 1.5)).unwrap();
    let stores = proxemics::resample::resample_session(proxemics::SessionLog::new(events), 6000, None).unwrap();
    let json = dir.path().join("frames.json");
    std::fs::write(&json, stores[0].to_json()).unwrap();
    let cjson = CString::new(json.to_str().unwrap()).unwrap();

    let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
    let (mut sa, mut sb) = (PxSummary::default(), PxSummary::default());
    unsafe {
        assert_eq!(px_frame_store_from_log(log.as_ptr(), 6000, ptr::null(), &mut a), PxStatus::Ok);
        assert_eq!(px_frame_store_load_json(cjson.as_ptr(), &mut b), PxStatus::Ok);
        px_frame_store_summary(a, &mut sa);
        px_frame_store_summary(b, &mut sb);
        px_frame_store_free(a);
        px_frame_store_free(b);
    }
    assert_eq!(sa, sb);

    std::fs::write(&json, "{").unwrap();
    unsafe {
        assert_eq!(px_frame_store_load_json(cjson.as_ptr(), &mut b), PxStatus::Parse);
    }
}

#[test]
fn error_paths() {
    let missing = CString::new("/nonexistent/ticks.jsonl").unwrap();
    let mut store = ptr::null_mut();
    unsafe {
        assert_eq!(px_frame_store_from_log(missing.as_ptr(), 6000, ptr::null(), &mut store), PxStatus::Io);
        assert!(store.is_null());
        assert!(last_error().contains("nonexistent"));
        assert_eq!(px_frame_store_from_log(ptr::null(), 6000, ptr::null(), &mut store), PxStatus::NullPointer);
        let mut s = PxSummary::default();
        assert_eq!(px_frame_store_summary(ptr::null(), &mut s), PxStatus::NullPointer);

        let dir = tempfile::tempdir().unwrap();
        let log = breakout_log(dir.path());
        assert_eq!(px_frame_store_from_log(log.as_ptr(), 0, ptr::null(), &mut store), PxStatus::InvalidArgument);
        let other = CString::new("no-such-room").unwrap();
        assert_eq!(px_frame_store_from_log(log.as_ptr(), 6000, other.as_ptr(), &mut store), PxStatus::Empty);
    }
}

#[test]
fn pairwise_matches_direct_geometry() {
    let pos = [
        PxVec3 { x: 0.0, y: 0.0, z: 0.0 },
        PxVec3 { x: 3.0, y: 0.0, z: 4.0 },
        PxVec3 { x: 0.0, y: 0.0, z: 0.0 },
    ];
    let dir = [PxVec3 { x: 0.0, y: 0.0, z: 1.0 }; 3];
    let mut d = [0.0; 9];
    let mut a = [0.0; 9];
    unsafe {
        assert_eq!(px_pairwise(pos.as_ptr(), dir.as_ptr(), 3, d.as_mut_ptr(), a.as_mut_ptr()), PxStatus::Ok);
    }
    assert_eq!(d[1], 5.0);
    assert_eq!(d[3], 5.0);
    assert_eq!(d[2], 0.0);
    assert!(a[0].is_nan() && a[4].is_nan());
    assert!(a[2].is_nan(), "coincident users have no bearing");
    assert!((a[1] - (3.0f64 / 5.0).asin()).abs() < 1e-12);
}

#[test]
fn groups_label_noise_negative() {
    let mut pos: Vec<PxVec3> = (0..4).map(|i| PxVec3 { x: i as f64 * 0.5, y: 0.0, z: 0.0 }).collect();
    pos.extend((0..3).map(|i| PxVec3 { x: 20.0 + i as f64 * 0.5, y: 0.0, z: 0.0 }));
    pos.push(PxVec3 { x: -30.0, y: 0.0, z: 0.0 });
    let mut labels = vec![99i64; pos.len()];
    let mut clusters = 0usize;
    unsafe {
        assert_eq!(
            px_detect_groups(pos.as_ptr(), pos.len(), 1.2, 2, labels.as_mut_ptr(), &mut clusters),
            PxStatus::Ok
        );
    }
    assert_eq!(clusters, 2);
    assert_eq!(&labels[..4], &[labels[0]; 4]);
    assert_eq!(&labels[4..7], &[labels[4]; 3]);
    assert_ne!(labels[0], labels[4]);
    assert_eq!(labels[7], -1);
}

#[test]
fn tick_validation() {
    let good = CString::new(
        r#"{"user_id":"u1","ts_utc":1588169400000,"entered":true,"position":[0,1.7,0],
            "direction":[0,0,2],"orientation":[0,0,0,1],"fps":60,"muted":false,"room_id":"lake-office"}"#,
    )
    .unwrap();
    let bad = CString::new(r#"{"user_id":"u1"}"#).unwrap();
    let junk = CString::new("{").unwrap();
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(px_validate_tick_json(good.as_ptr(), &mut out), PxStatus::Validation);
        let fixed = good.to_str().unwrap().replace("[0,0,2]", "[0,0,1]");
        let fixed = CString::new(fixed).unwrap();
        assert_eq!(px_validate_tick_json(fixed.as_ptr(), &mut out), PxStatus::Ok);
        let canonical = CStr::from_ptr(out).to_str().unwrap().to_owned();
        px_string_free(out);
        let v: serde_json::Value = serde_json::from_str(&canonical).unwrap();
        assert_eq!(v["user_id"], "u1");
        assert_eq!(px_validate_tick_json(fixed.as_ptr(), ptr::null_mut()), PxStatus::Ok);
        assert_eq!(px_validate_tick_json(bad.as_ptr(), ptr::null_mut()), PxStatus::Validation);
        assert!(last_error().contains("missing"));
        assert_eq!(px_validate_tick_json(junk.as_ptr(), ptr::null_mut()), PxStatus::Parse);
    }
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/proxemics.h")
}

fn have_cc() -> bool {
    Command::new("cc").arg("--version").output().is_ok_and(|o| o.status.success())
}

#[test]
fn header_declares_every_entry_point() {
    let text = std::fs::read_to_string(header()).unwrap();
    for f in [
        "px_last_error_message",
        "px_version",
        "px_frame_store_load_json",
        "px_frame_store_from_log",
        "px_frame_store_free",
        "px_frame_store_summary",
        "px_classify_zone",
        "px_nn_histogram",
        "px_intimate_collision_rate",
        "px_fov_containment",
        "px_occupied_extent",
        "px_pairwise",
        "px_detect_groups",
        "px_validate_tick_json",
        "px_string_free",
    ] {
        assert!(text.contains(&format!("{f}(")), "{f} missing from header");
    }
    assert!(text.contains("typedef struct PxFrameStore PxFrameStore;"));
}

#[test]
fn header_compiles_as_c() {
    if !have_cc() {
        eprintln!("cc not found, skipping");
        return;
    }
    let out = Command::new("cc")
        .args(["-fsyntax-only", "-std=c99", "-Wall", "-Werror", "-x", "c"])
        .arg(header())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn c_program_links_against_static_library() {
    if !have_cc() {
        eprintln!("cc not found, skipping");
        return;
    }
    // The test binary sits next to the freshly built library in target/<profile>/deps.
    let exe = std::env::current_exe().unwrap();
    let lib = exe.parent().unwrap().join("libproxemics_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built, skipping", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "proxemics.h"
int main(void) {
    PxZone z;
    if (px_classify_zone(1.0, &z) != PX_STATUS_OK || z != PX_ZONE_PERSONAL) return 1;
    if (px_classify_zone(-1.0, &z) != PX_STATUS_INVALID_ARGUMENT) return 2;
    if (px_last_error_message() == NULL) return 3;
    PxVec3 p[2] = {{0, 0, 0}, {0, 0, 2}};
    int64_t labels[2];
    size_t n = 0;
    if (px_detect_groups(p, 2, 3.0, 2, labels, &n) != PX_STATUS_OK || n != 1) return 4;
    printf("%s\n", px_version());
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("main");
    let out = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), env!("CARGO_PKG_VERSION"));
}
