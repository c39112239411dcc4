//! Standalone SVG 1.1 renderings of embeddings, determinant heatmaps and
//! indicatrix overlays. Output depends only on the inputs.

use std::fmt::Write as _;

use crate::diagnostics::{HeatmapValues, Indicatrix, Point};
use crate::error::{Error, Result};

/// Categorical palette for labels, cycled when there are more labels.
pub const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

const EXCLUDED: &str = "#000000";

#[derive(Debug, Clone, PartialEq)]
pub struct PlotStyle {
    pub width: f64,
    pub height: f64,
    pub margin: f64,
    pub point_radius: f64,
    pub title: Option<String>,
}

impl Default for PlotStyle {
    fn default() -> Self {
        Self {
            width: 640.0,
            height: 640.0,
            margin: 40.0,
            point_radius: 2.0,
            title: None,
        }
    }
}

/// Equal-aspect map from data coordinates into the plot area.
struct Frame {
    scale: f64,
    x0: f64,
    y0: f64,
    left: f64,
    bottom: f64,
}

impl Frame {
    fn fit<'a>(pts: impl Iterator<Item = &'a Point<f64>>, left: f64, top: f64, w: f64, h: f64) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in pts {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let span = [(hi[0] - lo[0]).max(1e-12), (hi[1] - lo[1]).max(1e-12)];
        let scale = (w / span[0]).min(h / span[1]);
        // center the data inside the plot area
        let x0 = lo[0] - (w / scale - span[0]) / 2.0;
        let y0 = lo[1] - (h / scale - span[1]) / 2.0;
        Self {
            scale,
            x0,
            y0,
            left,
            bottom: top + h,
        }
    }

    fn map(&self, p: Point<f64>) -> (f64, f64) {
        (
            self.left + (p[0] - self.x0) * self.scale,
            self.bottom - (p[1] - self.y0) * self.scale,
        )
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn open(style: &PlotStyle) -> String {
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = style.width,
        h = style.height
    );
    let _ = writeln!(
        s,
        r##"<rect x="0" y="0" width="{}" height="{}" fill="#ffffff"/>"##,
        style.width, style.height
    );
    if let Some(t) = &style.title {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
            style.width / 2.0,
            style.margin * 0.6,
            escape(t)
        );
    }
    s
}

fn check_points(points: &[Point<f64>], n: usize, what: &str) -> Result<()> {
    if points.is_empty() {
        return Err(Error::Invalid("nothing to plot: empty frame".into()));
    }
    if points.len() != n {
        return Err(Error::shape("plot", format!("{} points but {n} {what}", points.len())));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { op: "plot" });
    }
    Ok(())
}

/// Color of label `l` in [`PALETTE`] order of first appearance among the sorted distinct labels.
fn label_colors(labels: &[i64]) -> Vec<(i64, &'static str)> {
    let mut distinct: Vec<i64> = labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    distinct
        .into_iter()
        .enumerate()
        .map(|(i, l)| (l, PALETTE[i % PALETTE.len()]))
        .collect()
}

fn legend(s: &mut String, colors: &[(i64, &str)], names: &[String], x: f64, y: f64) {
    for (i, (l, c)) in colors.iter().enumerate() {
        let name = usize::try_from(*l)
            .ok()
            .and_then(|k| names.get(k))
            .cloned()
            .unwrap_or_else(|| l.to_string());
        let yy = y + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{x:.2}" y="{:.2}" width="10" height="10" fill="{c}"/>"#,
            yy - 9.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{yy:.2}" font-family="sans-serif" font-size="11">{}</text>"#,
            x + 14.0,
            escape(&name)
        );
    }
}

fn circles(
    s: &mut String,
    frame: &Frame,
    points: &[Point<f64>],
    fills: impl Iterator<Item = String>,
    r: f64,
    opacity: f64,
) {
    for (p, fill) in points.iter().zip(fills) {
        let (x, y) = frame.map(*p);
        let _ = writeln!(
            s,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r:.2}" fill="{fill}" fill-opacity="{opacity}"/>"#
        );
    }
}

/// Scatter plot colored by label, with a legend naming each label.
pub fn scatter_svg(points: &[Point<f64>], labels: &[i64], names: &[String], style: &PlotStyle) -> Result<String> {
    check_points(points, labels.len(), "labels")?;
    let legend_w = 130.0;
    let m = style.margin;
    let frame = Frame::fit(
        points.iter(),
        m,
        m,
        style.width - 2.0 * m - legend_w,
        style.height - 2.0 * m,
    );
    let colors = label_colors(labels);
    let mut s = open(style);
    let lookup = |l: i64| {
        colors
            .iter()
            .find(|(k, _)| *k == l)
            .map(|(_, c)| *c)
            .unwrap_or(PALETTE[0])
    };
    circles(
        &mut s,
        &frame,
        points,
        labels.iter().map(|&l| lookup(l).to_string()),
        style.point_radius,
        0.8,
    );
    legend(&mut s, &colors, names, style.width - m - legend_w + 10.0, m + 10.0);
    s.push_str("</svg>\n");
    Ok(s)
}

fn mix(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    [
        a[0] + (b[0] - a[0]) * t,
        a[1] + (b[1] - a[1]) * t,
        a[2] + (b[2] - a[2]) * t,
    ]
}

const BLUE: [f64; 3] = [33.0, 102.0, 172.0];
const WHITE: [f64; 3] = [255.0, 255.0, 255.0];
const RED: [f64; 3] = [178.0, 24.0, 43.0];

/// Blue-white-red color for `v` with white at 0, full blue at `lo` and full red at `hi`.
pub fn diverging_color(v: f64, lo: f64, hi: f64) -> String {
    let c = if v < 0.0 && lo < 0.0 {
        mix(WHITE, BLUE, (v / lo).clamp(0.0, 1.0))
    } else if v > 0.0 && hi > 0.0 {
        mix(WHITE, RED, (v / hi).clamp(0.0, 1.0))
    } else {
        WHITE
    };
    format!(
        "#{:02x}{:02x}{:02x}",
        c[0].round() as u8,
        c[1].round() as u8,
        c[2].round() as u8
    )
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

/// Heatmap colored with [`diverging_color`]. Excluded points are black.
pub fn heatmap_svg(points: &[Point<f64>], heat: &HeatmapValues<f64>, style: &PlotStyle) -> Result<String> {
    check_points(points, heat.values.len(), "values")?;
    let bar_w = 90.0;
    let m = style.margin;
    let plot_h = style.height - 2.0 * m;
    let frame = Frame::fit(points.iter(), m, m, style.width - 2.0 * m - bar_w, plot_h);
    let (lo, hi) = heat.clip_bounds;
    let mut s = open(style);
    circles(
        &mut s,
        &frame,
        points,
        heat.values
            .iter()
            .map(|v| v.map_or(EXCLUDED.to_string(), |v| diverging_color(v, lo, hi))),
        style.point_radius,
        1.0,
    );
    // colorbar
    let bx = style.width - m - bar_w + 20.0;
    let steps = 64;
    let seg = plot_h / steps as f64;
    let value_at = |k: f64| lo + (hi - lo) * k;
    for i in 0..steps {
        let v = value_at((i as f64 + 0.5) / steps as f64);
        let y = m + plot_h - seg * (i + 1) as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{bx:.2}" y="{y:.2}" width="16" height="{:.2}" fill="{}"/>"#,
            seg + 0.5,
            diverging_color(v, lo, hi)
        );
    }
    let _ = writeln!(
        s,
        r##"<rect x="{bx:.2}" y="{m:.2}" width="16" height="{plot_h:.2}" fill="none" stroke="#000000"/>"##
    );
    let mut ticks = vec![lo];
    if lo < 0.0 && hi > 0.0 {
        ticks.push(0.0);
    }
    if hi != lo {
        ticks.push(hi);
    }
    for t in ticks {
        let frac = if hi > lo { (t - lo) / (hi - lo) } else { 0.5 };
        let y = m + plot_h * (1.0 - frac);
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#000000"/>"##,
            bx + 16.0,
            bx + 20.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11">{}</text>"#,
            bx + 23.0,
            y + 4.0,
            tick_label(t)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Embedding scatter in light colors with indicatrix polygons on top.
/// Degenerate indicatrices are marked with a small cross.
pub fn indicatrix_svg(
    points: &[Point<f64>],
    labels: &[i64],
    items: &[Indicatrix<f64>],
    style: &PlotStyle,
) -> Result<String> {
    check_points(points, labels.len(), "labels")?;
    let m = style.margin;
    let all = points.iter().chain(items.iter().flat_map(|i| i.vertices.iter()));
    let frame = Frame::fit(all, m, m, style.width - 2.0 * m, style.height - 2.0 * m);
    let colors = label_colors(labels);
    let lookup = |l: i64| {
        colors
            .iter()
            .find(|(k, _)| *k == l)
            .map(|(_, c)| *c)
            .unwrap_or(PALETTE[0])
    };
    let mut s = open(style);
    circles(
        &mut s,
        &frame,
        points,
        labels.iter().map(|&l| lookup(l).to_string()),
        style.point_radius,
        0.3,
    );
    for ind in items {
        if ind.degenerate {
            let (x, y) = frame.map(ind.center);
            let _ = writeln!(
                s,
                r##"<path d="M {:.2} {:.2} L {:.2} {:.2} M {:.2} {:.2} L {:.2} {:.2}" stroke="#d62728" stroke-width="1.5"/>"##,
                x - 3.0,
                y - 3.0,
                x + 3.0,
                y + 3.0,
                x - 3.0,
                y + 3.0,
                x + 3.0,
                y - 3.0
            );
            continue;
        }
        let pts: Vec<String> = ind
            .vertices
            .iter()
            .map(|v| {
                let (x, y) = frame.map(*v);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            s,
            r##"<polygon points="{}" fill="#ff7f0e" fill-opacity="0.6" stroke="#000000" stroke-width="0.5"/>"##,
            pts.join(" ")
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts() -> Vec<Point<f64>> {
        vec![[0.0, 0.0], [1.0, 0.5], [-1.0, 2.0]]
    }

    #[test]
    fn scatter_has_one_circle_per_point() {
        let svg = scatter_svg(&pts(), &[0, 1, 1], &[], &PlotStyle::default()).unwrap();
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.starts_with("<?xml"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(
            svg,
            scatter_svg(&pts(), &[0, 1, 1], &[], &PlotStyle::default()).unwrap()
        );
    }

    #[test]
    fn zero_heatmap_is_white() {
        let heat = HeatmapValues {
            values: vec![Some(0.0); 3],
            raw: vec![Some(0.0); 3],
            clip_bounds: (0.0, 0.0),
            centered_fallback: false,
        };
        let svg = heatmap_svg(&pts(), &heat, &PlotStyle::default()).unwrap();
        let fills: Vec<&str> = svg
            .lines()
            .filter(|l| l.starts_with("<circle"))
            .map(|l| l.split("fill=\"").nth(1).unwrap().split('"').next().unwrap())
            .collect();
        assert_eq!(fills, vec!["#ffffff"; 3]);
    }

    #[test]
    fn colormap_endpoints() {
        assert_eq!(diverging_color(0.0, -1.0, 2.0), "#ffffff");
        assert_eq!(diverging_color(-1.0, -1.0, 2.0), "#2166ac");
        assert_eq!(diverging_color(2.0, -1.0, 2.0), "#b2182b");
    }

    #[test]
    fn colorbar_ticks_at_bounds_and_zero() {
        let heat = HeatmapValues {
            values: vec![Some(-0.5), Some(0.1), Some(0.25)],
            raw: vec![Some(-0.5), Some(0.1), Some(0.25)],
            clip_bounds: (-0.5, 0.25),
            centered_fallback: false,
        };
        let svg = heatmap_svg(&pts(), &heat, &PlotStyle::default()).unwrap();
        for t in ["-0.500", "0.000", "0.250"] {
            assert!(svg.contains(&format!(">{t}</text>")), "{t}");
        }
    }

    #[test]
    fn empty_frame_is_an_error() {
        assert!(scatter_svg(&[], &[], &[], &PlotStyle::default()).is_err());
        assert!(scatter_svg(&pts(), &[0], &[], &PlotStyle::default()).is_err());
    }
}
