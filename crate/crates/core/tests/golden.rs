//! Byte-exact renders of the seed-42 keynote. Set `UPDATE_GOLDEN=1` to
//! rewrite the files after an intended change.

use proxemics::engine::{occupancy, quiver};
use proxemics::render::{render_heatmap, render_quiver, Format, Product, RenderSpec};
use proxemics::resample::resample_session;
use proxemics::sim::{presets, run_scenario};
use proxemics::telemetry::{RoomGeometry, SessionLog};
use std::path::PathBuf;

fn check(name: &str, bytes: &[u8]) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, bytes).unwrap();
        return;
    }
    let want = std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}; run with UPDATE_GOLDEN=1", path.display()));
    assert!(want == bytes, "{name} differs from the golden file");
}

#[test]
fn keynote_renders_match_golden_files() {
    let events = run_scenario(&presets::keynote(42)).unwrap();
    let store = resample_session(SessionLog::new(events), 6000, None).unwrap().remove(0);
    let room = RoomGeometry::outdoor_meetup();
    let grid = occupancy(&store, &room, 1.0).unwrap();
    let field = quiver(&store, &room, 1.0).unwrap();

    check("keynote_heatmap.svg", &render_heatmap(&grid, &RenderSpec::new(Product::Heatmap, Format::Svg)).unwrap());
    check("keynote_heatmap.pgm", &render_heatmap(&grid, &RenderSpec::new(Product::Heatmap, Format::Pgm)).unwrap());
    check("keynote_quiver.svg", &render_quiver(&field, &grid, &RenderSpec::new(Product::Quiver, Format::Svg)).unwrap());
}
