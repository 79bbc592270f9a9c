use super::{escape, px, Format, Product, RenderError, RenderSpec, Svg};
use crate::engine::{Histogram, HistogramKind, ProxemicZone};
use serde::{Deserialize, Serialize};

const SERIES_COLOURS: [&str; 2] = ["#1f77b4", "#ff7f0e"];
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

/// One bar series: `values[i]` belongs to `[origin + i*w, origin + (i+1)*w)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramSeries {
    pub label: String,
    pub kind: HistogramKind,
    pub origin: f64,
    pub bin_width: f64,
    pub values: Vec<f64>,
}

impl HistogramSeries {
    /// Probabilities of an engine histogram.
    pub fn from_histogram(label: impl Into<String>, h: &Histogram) -> Self {
        HistogramSeries {
            label: label.into(),
            kind: h.kind,
            origin: h.origin,
            bin_width: h.bin_width,
            values: h.probabilities.clone(),
        }
    }

    pub fn bin_range(&self, i: usize) -> (f64, f64) {
        let lo = self.origin + i as f64 * self.bin_width;
        (lo, lo + self.bin_width)
    }

    pub fn upper(&self) -> f64 {
        self.origin + self.values.len() as f64 * self.bin_width
    }

    /// Index of the largest value, first one on ties.
    pub fn mode(&self) -> Option<usize> {
        let max = self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.values.iter().position(|&v| v == max)
    }

    /// Sum of values in bins whose lower edge is at or above `threshold`.
    pub fn mass_from(&self, threshold: f64) -> f64 {
        (0..self.values.len())
            .filter(|&i| self.bin_range(i).0 >= threshold - 1e-12)
            .map(|i| self.values[i])
            .sum()
    }
}

fn same_binning(a: &HistogramSeries, b: &HistogramSeries) -> bool {
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0);
    a.kind == b.kind && a.values.len() == b.values.len() && close(a.origin, b.origin) && close(a.bin_width, b.bin_width)
}

fn check_series(series: &[HistogramSeries]) -> Result<(), RenderError> {
    if series.is_empty() || series.len() > 2 {
        return Err(RenderError::SeriesCount(series.len()));
    }
    for s in series {
        if s.values.is_empty() || !(s.bin_width.is_finite() && s.bin_width > 0.0) || !s.origin.is_finite() {
            return Err(RenderError::InvalidSpec(format!("series `{}` has no valid bins", s.label)));
        }
        if s.values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(RenderError::InvalidSpec(format!("series `{}` has negative or non-finite values", s.label)));
        }
    }
    if series.len() == 2 && !same_binning(&series[0], &series[1]) {
        return Err(RenderError::BinningMismatch);
    }
    Ok(())
}

/// `series,kind,bin,bin_lo,bin_hi,value`, values at full precision.
pub fn chart_csv(series: &[HistogramSeries]) -> Result<String, RenderError> {
    check_series(series)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let table = |e: csv::Error| RenderError::Table(e.to_string());
    w.write_record(["series", "kind", "bin", "bin_lo", "bin_hi", "value"]).map_err(table)?;
    for s in series {
        let kind = serde_json::to_value(s.kind).expect("kind serialises");
        let kind = kind.as_str().unwrap_or_default();
        for (i, v) in s.values.iter().enumerate() {
            let (lo, hi) = s.bin_range(i);
            w.write_record([&s.label, kind, &i.to_string(), &lo.to_string(), &hi.to_string(), &v.to_string()])
                .map_err(table)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| RenderError::Table(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields"))
}

fn axis_label(kind: HistogramKind) -> &'static str {
    match kind {
        HistogramKind::NearestNeighbour => "distance to nearest neighbour (m)",
        HistogramKind::Height => "height (m)",
    }
}

/// Grouped bar chart of one or two series with equal binning. Bars are
/// drawn for non-zero values only. Nearest-neighbour charts get dashed
/// markers at the zone boundaries and zone names along the x axis.
pub fn render_histogram(series: &[HistogramSeries], spec: &RenderSpec) -> Result<Vec<u8>, RenderError> {
    spec.expect(Product::Histogram)?;
    check_series(series)?;
    match spec.format {
        Format::Csv => return Ok(chart_csv(series)?.into_bytes()),
        Format::Pgm => return Err(RenderError::UnsupportedFormat { product: Product::Histogram, format: Format::Pgm }),
        Format::Svg => {}
    }
    let (w, h) = (spec.width as f64, spec.height as f64);
    let (pw, ph) = ((w - LEFT - RIGHT).max(1.0), (h - TOP - BOTTOM).max(1.0));
    let first = &series[0];
    let bins = first.values.len();
    let group = pw / bins as f64;
    let bar = group * 0.8 / series.len() as f64;
    let ymax = series.iter().flat_map(|s| s.values.iter().copied()).fold(0.0, f64::max);
    let base = TOP + ph;
    let x_of = |v: f64| LEFT + (v - first.origin) / first.bin_width * group;

    let mut svg = Svg::new(spec.width, spec.height);
    svg.line(&format!("<rect class=\"background\" x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>", spec.width, spec.height));
    svg.line("<g class=\"bars\">");
    for (k, s) in series.iter().enumerate() {
        for (i, &v) in s.values.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let height = if ymax > 0.0 { v / ymax * ph } else { 0.0 };
            svg.line(&format!(
                "<rect class=\"bar\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" data-series=\"{}\" data-bin=\"{i}\" data-value=\"{v}\"/>",
                px(LEFT + i as f64 * group + group * 0.1 + k as f64 * bar),
                px(base - height),
                px(bar),
                px(height),
                SERIES_COLOURS[k],
                escape(&s.label),
            ));
        }
    }
    svg.line("</g>");

    svg.line("<g class=\"axes\" stroke=\"#000000\" stroke-width=\"1\">");
    svg.line(&format!("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>", px(LEFT), px(base), px(LEFT + pw), px(base)));
    svg.line(&format!("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>", px(LEFT), px(TOP), px(LEFT), px(base)));
    svg.line("</g>");
    let step = bins.div_ceil(12).max(1);
    svg.line("<g class=\"ticks\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">");
    for i in (0..=bins).step_by(step) {
        let v = first.origin + i as f64 * first.bin_width;
        svg.line(&format!("<text x=\"{}\" y=\"{}\">{}</text>", px(x_of(v)), px(base + 14.0), px(v)));
    }
    for k in 0..=4 {
        let v = ymax * k as f64 / 4.0;
        let y = base - ph * k as f64 / 4.0;
        svg.line(&format!("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{:.3}</text>", px(LEFT - 6.0), px(y + 3.0), v));
    }
    svg.line(&format!("<text x=\"{}\" y=\"{}\">{}</text>", px(LEFT + pw / 2.0), px(h - 8.0), axis_label(first.kind)));
    svg.line("</g>");

    if first.kind == HistogramKind::NearestNeighbour {
        let (lo, hi) = (first.origin, first.upper());
        svg.line("<g class=\"zones\" stroke=\"#555555\" stroke-dasharray=\"4 3\">");
        for edge in spec.zones.edges() {
            if edge > lo && edge < hi {
                svg.line(&format!(
                    "<line class=\"zone-edge\" x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" data-edge=\"{edge}\"/>",
                    px(TOP),
                    px(base),
                    x = px(x_of(edge))
                ));
            }
        }
        svg.line("</g>");
        svg.line("<g class=\"zone-labels\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\" fill=\"#555555\">");
        let edges = spec.zones.edges();
        let bounds = [lo, edges[0], edges[1], edges[2], hi.max(edges[2])];
        for (z, zone) in ProxemicZone::ALL.iter().enumerate() {
            let (a, b) = (bounds[z].max(lo), bounds[z + 1].min(hi));
            if b > a {
                svg.line(&format!("<text x=\"{}\" y=\"{}\">{}</text>", px(x_of((a + b) / 2.0)), px(base + 28.0), zone.name()));
            }
        }
        svg.line("</g>");
    }

    svg.line("<g class=\"legend\" font-family=\"sans-serif\" font-size=\"11\">");
    for (k, s) in series.iter().enumerate() {
        let x = LEFT + 10.0 + k as f64 * 150.0;
        svg.line(&format!("<rect x=\"{}\" y=\"8\" width=\"10\" height=\"10\" fill=\"{}\"/>", px(x), SERIES_COLOURS[k]));
        svg.line(&format!("<text x=\"{}\" y=\"17\">{}</text>", px(x + 14.0), escape(&s.label)));
    }
    svg.line("</g>");
    Ok(svg.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(label: &str, values: Vec<f64>) -> HistogramSeries {
        HistogramSeries { label: label.into(), kind: HistogramKind::NearestNeighbour, origin: 0.0, bin_width: 0.25, values }
    }

    fn svg(series: &[HistogramSeries]) -> String {
        String::from_utf8(render_histogram(series, &RenderSpec::new(Product::Histogram, Format::Svg)).unwrap()).unwrap()
    }

    #[test]
    fn one_nonzero_bin_is_one_bar() {
        let mut v = vec![0.0; 24];
        v[4] = 1.0;
        let out = svg(&[series("a", v)]);
        assert_eq!(out.matches("class=\"bar\"").count(), 1);
        assert!(out.contains("data-bin=\"4\" data-value=\"1\""));
    }

    #[test]
    fn zone_markers_on_distance_charts_only() {
        let out = svg(&[series("a", vec![0.1; 24])]);
        assert_eq!(out.matches("class=\"zone-edge\"").count(), 3);
        for name in ["intimate", "personal", "social", "public"] {
            assert!(out.contains(&format!(">{name}</text>")));
        }
        let mut h = series("a", vec![0.1; 14]);
        h.kind = HistogramKind::Height;
        h.bin_width = 0.5;
        assert_eq!(svg(&[h]).matches("zone-edge").count(), 0);
    }

    #[test]
    fn binning_must_match() {
        let a = series("a", vec![0.5; 24]);
        let mut b = series("b", vec![0.5; 24]);
        b.bin_width = 0.5;
        let spec = RenderSpec::new(Product::Histogram, Format::Svg);
        assert!(matches!(render_histogram(&[a.clone(), b], &spec), Err(RenderError::BinningMismatch)));
        assert!(matches!(render_histogram(&[a.clone(), a.clone(), a.clone()], &spec), Err(RenderError::SeriesCount(3))));
        assert!(matches!(render_histogram(&[], &spec), Err(RenderError::SeriesCount(0))));
        let pgm = RenderSpec::new(Product::Histogram, Format::Pgm);
        assert!(matches!(render_histogram(&[a], &pgm), Err(RenderError::UnsupportedFormat { .. })));
    }

    #[test]
    fn bar_values_match_csv() {
        let a = series("Keynote, hall", vec![0.1, 0.0, 1.0 / 3.0, 0.2]);
        let b = series("Room A", vec![0.3, 0.7, 0.0, 0.0]);
        let out = svg(&[a.clone(), b.clone()]);
        let csv = chart_csv(&[a.clone(), b.clone()]).unwrap();
        let back = super::super::tables::parse_chart_csv(&csv).unwrap();
        assert_eq!(back, vec![a.clone(), b]);
        for line in out.lines().filter(|l| l.contains("class=\"bar\"")) {
            let get = |k: &str| line.split(&format!("{k}=\"")).nth(1).unwrap().split('"').next().unwrap().to_owned();
            let bin: usize = get("data-bin").parse().unwrap();
            let v: f64 = get("data-value").parse().unwrap();
            let s = back.iter().find(|s| escape(&s.label) == get("data-series")).unwrap();
            assert_eq!(s.values[bin], v);
        }
        assert_eq!(a.mode(), Some(2));
    }
}
