//! Figure output for engine products.
//!
//! Renders are pure functions of their inputs: no timestamps, no randomness,
//! fixed float formatting. Every value drawn is also carried in the paired
//! CSV export (and in `data-*` attributes of SVG elements), so a figure can
//! always be checked against its numbers.

mod chart;
mod floor;
mod ramp;
pub mod tables;

pub use chart::{chart_csv, render_histogram, HistogramSeries};
pub use floor::{render_heatmap, render_quiver};
pub use ramp::Ramp;

use crate::engine::ZoneBoundaries;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

pub const MAX_CANVAS: u32 = 16_384;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Product {
    Heatmap,
    Quiver,
    Histogram,
}

impl Product {
    pub fn name(self) -> &'static str {
        match self {
            Product::Heatmap => "heatmap",
            Product::Quiver => "quiver",
            Product::Histogram => "histogram",
        }
    }
}

impl fmt::Display for Product {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Svg,
    Pgm,
    Csv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Svg => "svg",
            Format::Pgm => "pgm",
            Format::Csv => "csv",
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.extension())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Overlays {
    /// Cell boundary lines.
    pub grid: bool,
    pub room_outline: bool,
    /// Markers at `RenderSpec::portal_points`.
    pub portals: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderSpec {
    pub product: Product,
    pub ramp: Ramp,
    pub format: Format,
    pub width: u32,
    pub height: u32,
    #[serde(default)]
    pub overlays: Overlays,
    /// Floor coordinates `[x, z]` of room entry points.
    #[serde(default)]
    pub portal_points: Vec<[f64; 2]>,
    /// Marker positions on nearest-neighbour charts.
    #[serde(default)]
    pub zones: ZoneBoundaries,
}

impl RenderSpec {
    pub fn new(product: Product, format: Format) -> Self {
        RenderSpec {
            product,
            ramp: Ramp::Heat,
            format,
            width: 800,
            height: 600,
            overlays: Overlays { grid: false, room_outline: true, portals: false },
            portal_points: Vec::new(),
            zones: ZoneBoundaries::default(),
        }
    }

    pub fn with_size(mut self, width: u32, height: u32) -> Self {
        self.width = width;
        self.height = height;
        self
    }

    pub fn check(&self) -> Result<(), RenderError> {
        if self.width == 0 || self.height == 0 || self.width > MAX_CANVAS || self.height > MAX_CANVAS {
            return Err(RenderError::InvalidSpec(format!(
                "canvas {}x{} outside 1..={MAX_CANVAS}",
                self.width, self.height
            )));
        }
        Ok(())
    }

    fn expect(&self, product: Product) -> Result<(), RenderError> {
        self.check()?;
        if self.product != product {
            return Err(RenderError::InvalidSpec(format!("spec is for {}, not {product}", self.product)));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("invalid render spec: {0}")]
    InvalidSpec(String),
    #[error("{product} cannot be rendered as {format}")]
    UnsupportedFormat { product: Product, format: Format },
    #[error("grid dimensions differ: {left:?} vs {right:?}")]
    DimensionMismatch { left: (usize, usize), right: (usize, usize) },
    #[error("series binning differs")]
    BinningMismatch,
    #[error("charts hold one or two series, got {0}")]
    SeriesCount(usize),
    #[error("cannot read table: {0}")]
    Table(String),
}

/// `<session>_<product>_<params>.<ext>`, with parameters joined by `-` and
/// any character outside `[A-Za-z0-9.-]` replaced by `-`.
pub fn artifact_name(session: &str, product: Product, params: &[(&str, String)], format: Format) -> String {
    let clean = |s: &str| -> String {
        s.chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '-' })
            .collect()
    };
    let params = if params.is_empty() {
        "default".to_owned()
    } else {
        params.iter().map(|(k, v)| clean(&format!("{k}{v}"))).collect::<Vec<_>>().join("-")
    };
    format!("{}_{}_{}.{}", clean(session), product, params, format.extension())
}

/// Minimal SVG text builder with fixed number formatting.
pub(crate) struct Svg {
    out: String,
}

impl Svg {
    pub(crate) fn new(width: u32, height: u32) -> Self {
        let mut out = String::new();
        out.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n"
        ));
        Svg { out }
    }

    pub(crate) fn line(&mut self, text: &str) {
        self.out.push_str(text);
        self.out.push('\n');
    }

    pub(crate) fn finish(mut self) -> Vec<u8> {
        self.out.push_str("</svg>\n");
        self.out.into_bytes()
    }
}

/// Coordinates in SVG output are written with two decimals.
pub(crate) fn px(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" { "0.00".into() } else { s }
}

pub(crate) fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn artifact_names() {
        assert_eq!(
            artifact_name("keynote", Product::Heatmap, &[("cell", "1".into())], Format::Svg),
            "keynote_heatmap_cell1.svg"
        );
        assert_eq!(artifact_name("a b/c", Product::Histogram, &[], Format::Csv), "a-b-c_histogram_default.csv");
        assert_eq!(
            artifact_name("s", Product::Quiver, &[("cell", "0.5".into()), ("q", "x".into())], Format::Pgm),
            "s_quiver_cell0.5-qx.pgm"
        );
    }

    #[test]
    fn canvas_must_be_positive() {
        assert!(RenderSpec::new(Product::Heatmap, Format::Svg).with_size(0, 10).check().is_err());
        assert!(RenderSpec::new(Product::Heatmap, Format::Svg).with_size(10, 10).check().is_ok());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = RenderSpec::new(Product::Quiver, Format::Pgm);
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<RenderSpec>(&text).unwrap(), spec);
    }
}
