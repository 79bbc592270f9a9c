use super::{px, Format, Product, RenderError, RenderSpec, Svg};
use crate::engine::export::{grid_csv, quiver_csv};
use crate::engine::{GridSpec, OccupancyGrid, QuiverField};

const MARGIN: f64 = 10.0;
/// Arrow length for a unit-magnitude cell, as a fraction of the cell size.
const ARROW_SCALE: f64 = 0.9;
/// Heatmap ceiling in PGM quivers, leaving full white for arrows.
const PGM_QUIVER_CEILING: f64 = 191.0;

/// Placement of the floor grid on the canvas. Row 0 (minimum `z`) is at
/// the top, so the `+z` wall is the bottom edge of the image.
struct Layout {
    grid: GridSpec,
    scale: f64,
    ox: f64,
    oy: f64,
}

impl Layout {
    fn new(grid: GridSpec, spec: &RenderSpec) -> Result<Self, RenderError> {
        if grid.is_empty() {
            return Err(RenderError::InvalidSpec("grid has no cells".into()));
        }
        let (w, h) = (spec.width as f64, spec.height as f64);
        let margin = if w > 4.0 * MARGIN && h > 4.0 * MARGIN { MARGIN } else { 0.0 };
        let scale = ((w - 2.0 * margin) / grid.cols as f64).min((h - 2.0 * margin) / grid.rows as f64);
        Ok(Layout {
            grid,
            scale,
            ox: (w - scale * grid.cols as f64) / 2.0,
            oy: (h - scale * grid.rows as f64) / 2.0,
        })
    }

    fn floor_to_px(&self, x: f64, z: f64) -> (f64, f64) {
        (
            self.ox + (x - self.grid.min_x) / self.grid.cell_size * self.scale,
            self.oy + (z - self.grid.min_z) / self.grid.cell_size * self.scale,
        )
    }

    fn cell_origin(&self, row: usize, col: usize) -> (f64, f64) {
        (self.ox + col as f64 * self.scale, self.oy + row as f64 * self.scale)
    }

    /// Cell under the pixel centre `(px, py)`, if any.
    fn cell_at(&self, px: u32, py: u32) -> Option<(usize, usize)> {
        let fx = (px as f64 + 0.5 - self.ox) / self.scale;
        let fy = (py as f64 + 0.5 - self.oy) / self.scale;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let (col, row) = (fx as usize, fy as usize);
        (col < self.grid.cols && row < self.grid.rows).then_some((row, col))
    }
}

/// `log(1 + count) / log(1 + max)`, or 0 everywhere for an all-zero grid.
fn intensity(count: u64, max: u64) -> f64 {
    if max == 0 {
        0.0
    } else {
        (count as f64).ln_1p() / (max as f64).ln_1p()
    }
}

fn heatmap_svg(grid: &OccupancyGrid, spec: &RenderSpec, layout: &Layout, svg: &mut Svg) {
    let max = grid.max();
    svg.line(&format!(
        "<rect class=\"background\" x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"{}\"/>",
        spec.width,
        spec.height,
        spec.ramp.hex(0.0)
    ));
    svg.line("<g class=\"cells\" shape-rendering=\"crispEdges\">");
    let size = px(layout.scale);
    for row in 0..grid.grid.rows {
        for col in 0..grid.grid.cols {
            let count = grid.count(row, col);
            let (x, y) = layout.cell_origin(row, col);
            svg.line(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{size}\" height=\"{size}\" fill=\"{}\" data-row=\"{row}\" data-col=\"{col}\" data-count=\"{count}\"/>",
                px(x),
                px(y),
                spec.ramp.hex(intensity(count, max)),
            ));
        }
    }
    svg.line("</g>");
    overlays_svg(spec, layout, svg);
}

fn overlays_svg(spec: &RenderSpec, layout: &Layout, svg: &mut Svg) {
    let g = &layout.grid;
    let (x0, y0) = layout.cell_origin(0, 0);
    let (x1, y1) = layout.cell_origin(g.rows, g.cols);
    if spec.overlays.grid {
        svg.line("<g class=\"grid\" stroke=\"#999999\" stroke-width=\"0.5\">");
        for col in 1..g.cols {
            let x = px(layout.cell_origin(0, col).0);
            svg.line(&format!("<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\"/>", px(y0), px(y1)));
        }
        for row in 1..g.rows {
            let y = px(layout.cell_origin(row, 0).1);
            svg.line(&format!("<line x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\"/>", px(x0), px(x1)));
        }
        svg.line("</g>");
    }
    if spec.overlays.room_outline {
        svg.line(&format!(
            "<rect class=\"outline\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1\"/>",
            px(x0),
            px(y0),
            px(x1 - x0),
            px(y1 - y0)
        ));
    }
    if spec.overlays.portals {
        for p in &spec.portal_points {
            let (x, y) = layout.floor_to_px(p[0], p[1]);
            svg.line(&format!(
                "<circle class=\"portal\" cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"none\" stroke=\"#0050c8\" stroke-width=\"2\"/>",
                px(x),
                px(y),
                px((layout.scale * 0.8).max(3.0))
            ));
        }
    }
}

struct Raster {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl Raster {
    fn heatmap(grid: &OccupancyGrid, spec: &RenderSpec, layout: &Layout, ceiling: f64) -> Self {
        let max = grid.max();
        let mut pixels = Vec::with_capacity((spec.width * spec.height) as usize);
        for py in 0..spec.height {
            for px in 0..spec.width {
                let v = layout
                    .cell_at(px, py)
                    .map_or(0.0, |(r, c)| (ceiling * intensity(grid.count(r, c), max)).round());
                pixels.push(v as u8);
            }
        }
        Raster { width: spec.width, height: spec.height, pixels }
    }

    fn set(&mut self, x: i64, y: i64, v: u8) {
        if x >= 0 && y >= 0 && (x as u32) < self.width && (y as u32) < self.height {
            self.pixels[y as usize * self.width as usize + x as usize] = v;
        }
    }

    /// Bresenham segment between pixel centres.
    fn segment(&mut self, from: (f64, f64), to: (f64, f64), v: u8) {
        let (mut x, mut y) = (from.0.floor() as i64, from.1.floor() as i64);
        let (x1, y1) = (to.0.floor() as i64, to.1.floor() as i64);
        let (dx, dy) = ((x1 - x).abs(), -(y1 - y).abs());
        let (sx, sy) = (if x < x1 { 1 } else { -1 }, if y < y1 { 1 } else { -1 });
        let mut err = dx + dy;
        loop {
            self.set(x, y, v);
            if x == x1 && y == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }

    fn into_pgm(self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.pixels);
        out
    }
}

/// Occupancy heatmap. Cell intensity is `log(1 + count)` scaled so the
/// busiest cell hits the top of the ramp. PGM output is grayscale with the
/// same scaling; CSV output is the grid table.
pub fn render_heatmap(grid: &OccupancyGrid, spec: &RenderSpec) -> Result<Vec<u8>, RenderError> {
    spec.expect(Product::Heatmap)?;
    if grid.counts.len() != grid.grid.len() {
        return Err(RenderError::DimensionMismatch {
            left: (grid.grid.rows, grid.grid.cols),
            right: (grid.counts.len(), 1),
        });
    }
    let layout = Layout::new(grid.grid, spec)?;
    Ok(match spec.format {
        Format::Svg => {
            let mut svg = Svg::new(spec.width, spec.height);
            heatmap_svg(grid, spec, &layout, &mut svg);
            svg.finish()
        }
        Format::Pgm => Raster::heatmap(grid, spec, &layout, 255.0).into_pgm(),
        Format::Csv => grid_csv(grid).into_bytes(),
    })
}

/// Arrow endpoints for a cell, centred on the cell with length
/// proportional to `magnitude`.
fn arrow(layout: &Layout, row: usize, col: usize, dir: [f64; 2], magnitude: f64) -> ((f64, f64), (f64, f64)) {
    let (x, y) = layout.cell_origin(row, col);
    let (cx, cy) = (x + layout.scale / 2.0, y + layout.scale / 2.0);
    let half = magnitude.min(1.0) * ARROW_SCALE * layout.scale / 2.0;
    ((cx - dir[0] * half, cy - dir[1] * half), (cx + dir[0] * half, cy + dir[1] * half))
}

/// Heatmap of `grid` overlaid with one arrow per cell of `field` that has a
/// defined mean direction.
pub fn render_quiver(field: &QuiverField, grid: &OccupancyGrid, spec: &RenderSpec) -> Result<Vec<u8>, RenderError> {
    spec.expect(Product::Quiver)?;
    let (a, b) = ((field.grid.rows, field.grid.cols), (grid.grid.rows, grid.grid.cols));
    if a != b || field.cells.len() != field.grid.len() || grid.counts.len() != grid.grid.len() {
        return Err(RenderError::DimensionMismatch { left: a, right: b });
    }
    let layout = Layout::new(grid.grid, spec)?;
    Ok(match spec.format {
        Format::Svg => {
            let mut svg = Svg::new(spec.width, spec.height);
            svg.line("<defs><marker id=\"head\" viewBox=\"0 0 10 10\" refX=\"9\" refY=\"5\" markerWidth=\"4\" markerHeight=\"4\" orient=\"auto\"><path d=\"M0,0 L10,5 L0,10 z\" fill=\"#000000\"/></marker></defs>");
            heatmap_svg(grid, &RenderSpec { product: Product::Heatmap, ..spec.clone() }, &layout, &mut svg);
            svg.line("<g class=\"arrows\" stroke=\"#000000\" stroke-width=\"1.2\">");
            for (row, col, dir, magnitude) in field.defined() {
                let ((x1, y1), (x2, y2)) = arrow(&layout, row, col, dir, magnitude);
                svg.line(&format!(
                    "<line class=\"arrow\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" marker-end=\"url(#head)\" data-row=\"{row}\" data-col=\"{col}\" data-dx=\"{}\" data-dz=\"{}\" data-magnitude=\"{magnitude}\"/>",
                    px(x1), px(y1), px(x2), px(y2), dir[0], dir[1],
                ));
            }
            svg.line("</g>");
            svg.finish()
        }
        Format::Pgm => {
            let mut raster = Raster::heatmap(grid, spec, &layout, PGM_QUIVER_CEILING);
            for (row, col, dir, magnitude) in field.defined() {
                let (from, to) = arrow(&layout, row, col, dir, magnitude);
                raster.segment(from, to, 255);
            }
            raster.into_pgm()
        }
        Format::Csv => quiver_csv(field).into_bytes(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::QuiverCell;
    use crate::telemetry::RoomGeometry;

    fn grid(w: f64, d: f64) -> OccupancyGrid {
        OccupancyGrid::empty(GridSpec::for_room(&RoomGeometry::new("r", w, d, "").unwrap(), 1.0).unwrap())
    }

    fn text(bytes: Vec<u8>) -> String {
        String::from_utf8(bytes).unwrap()
    }

    fn fills(svg: &str) -> Vec<&str> {
        svg.lines()
            .filter(|l| l.contains("data-count"))
            .map(|l| l.split("fill=\"").nth(1).unwrap().split('"').next().unwrap())
            .collect()
    }

    #[test]
    fn all_zero_grid_is_uniform() {
        let g = grid(6.0, 4.0);
        let spec = RenderSpec::new(Product::Heatmap, Format::Svg);
        let svg = text(render_heatmap(&g, &spec).unwrap());
        let f = fills(&svg);
        assert_eq!(f.len(), 24);
        assert!(f.iter().all(|c| *c == spec.ramp.hex(0.0)));

        let pgm = render_heatmap(&g, &RenderSpec::new(Product::Heatmap, Format::Pgm)).unwrap();
        assert!(pgm.starts_with(b"P5\n800 600\n255\n"));
        assert!(pgm[15..].iter().all(|&p| p == 0));
    }

    #[test]
    fn single_hot_cell_is_the_only_maximum() {
        let mut g = grid(6.0, 4.0);
        g.counts[7] = 12;
        let spec = RenderSpec::new(Product::Heatmap, Format::Svg);
        let svg = text(render_heatmap(&g, &spec).unwrap());
        let top = spec.ramp.hex(1.0);
        assert_eq!(fills(&svg).iter().filter(|c| **c == top).count(), 1);
        assert!(svg.contains("data-row=\"1\" data-col=\"1\" data-count=\"12\""));

        let pgm = render_heatmap(&g, &RenderSpec::new(Product::Heatmap, Format::Pgm).with_size(60, 40)).unwrap();
        let body = &pgm[b"P5\n60 40\n255\n".len()..];
        let hot = body.iter().filter(|&&p| p == 255).count();
        assert!(hot > 0 && body.iter().all(|&p| p == 0 || p == 255));
    }

    #[test]
    fn renders_are_deterministic() {
        let mut g = grid(10.0, 8.0);
        for (i, c) in g.counts.iter_mut().enumerate() {
            *c = (i * 7 % 11) as u64;
        }
        let spec = RenderSpec::new(Product::Heatmap, Format::Svg);
        assert_eq!(render_heatmap(&g, &spec).unwrap(), render_heatmap(&g, &spec).unwrap());
    }

    fn field(g: &OccupancyGrid) -> QuiverField {
        QuiverField {
            grid: g.grid,
            cells: vec![QuiverCell { direction: None, magnitude: 0.0, samples: 0 }; g.grid.len()],
        }
    }

    #[test]
    fn undefined_field_draws_no_arrows() {
        let g = grid(6.0, 4.0);
        let svg = text(render_quiver(&field(&g), &g, &RenderSpec::new(Product::Quiver, Format::Svg)).unwrap());
        assert_eq!(svg.matches("class=\"arrow\"").count(), 0);
        assert_eq!(fills(&svg).len(), 24);
    }

    #[test]
    fn plus_x_cell_draws_one_horizontal_arrow() {
        let g = grid(6.0, 4.0);
        let mut f = field(&g);
        f.cells[g.grid.index(2, 3)] = QuiverCell { direction: Some([1.0, 0.0]), magnitude: 1.0, samples: 3 };
        let svg = text(render_quiver(&f, &g, &RenderSpec::new(Product::Quiver, Format::Svg)).unwrap());
        let arrows: Vec<&str> = svg.lines().filter(|l| l.contains("class=\"arrow\"")).collect();
        assert_eq!(arrows.len(), 1);
        let attr = |name: &str| -> f64 {
            arrows[0].split(&format!(" {name}=\"")).nth(1).unwrap().split('"').next().unwrap().parse().unwrap()
        };
        assert_eq!(attr("y1"), attr("y2"));
        assert!(attr("x2") > attr("x1"));
    }

    #[test]
    fn arrow_length_follows_magnitude() {
        let g = grid(4.0, 4.0);
        let layout = Layout::new(g.grid, &RenderSpec::new(Product::Quiver, Format::Svg)).unwrap();
        let (a, b) = arrow(&layout, 0, 0, [0.0, 1.0], 0.5);
        let (c, d) = arrow(&layout, 0, 0, [0.0, 1.0], 1.0);
        assert!(((b.1 - a.1) * 2.0 - (d.1 - c.1)).abs() < 1e-9);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let g = grid(6.0, 4.0);
        let other = grid(5.0, 4.0);
        let err = render_quiver(&field(&other), &g, &RenderSpec::new(Product::Quiver, Format::Svg)).unwrap_err();
        assert!(matches!(err, RenderError::DimensionMismatch { .. }));
    }

    #[test]
    fn overlays_are_drawn_on_request() {
        let g = grid(6.0, 4.0);
        let mut spec = RenderSpec::new(Product::Heatmap, Format::Svg);
        spec.overlays.grid = true;
        spec.overlays.portals = true;
        spec.portal_points = vec![[0.0, 1.5]];
        let svg = text(render_heatmap(&g, &spec).unwrap());
        assert_eq!(svg.matches("class=\"portal\"").count(), 1);
        assert!(svg.contains("class=\"grid\""));
        assert!(svg.contains("class=\"outline\""));
    }

    #[test]
    fn pgm_quiver_draws_white_arrows() {
        let g = grid(6.0, 4.0);
        let mut f = field(&g);
        f.cells[0] = QuiverCell { direction: Some([0.0, 1.0]), magnitude: 1.0, samples: 1 };
        let pgm = render_quiver(&f, &g, &RenderSpec::new(Product::Quiver, Format::Pgm).with_size(120, 80)).unwrap();
        assert!(pgm.iter().skip(b"P5\n120 80\n255\n".len()).any(|&p| p == 255));
    }
}
