//! Proxemic telemetry pipeline for 3D virtual environments.
//!
//! Avatar pose ticks are collected over HTTP ([`ingest`]), resampled to a
//! fixed frame rate ([`resample`]) and analysed for interpersonal distance,
//! attention and grouping ([`engine`]). [`render`] turns the results into
//! SVG/PGM figures and [`sim`] generates deterministic synthetic crowds.

pub mod cli;
pub mod engine;
pub mod geom;
pub mod ingest;
pub mod render;
pub mod resample;
pub mod sim;
pub mod telemetry;

pub use geom::{Quat, Vec3};
pub use telemetry::{RoomGeometry, SessionLog, TickEvent};
