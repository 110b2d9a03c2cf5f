//! Static SVG figures: 2-D scatter plots and Betti-curve step plots.

use std::fmt::Write;

use topoembed_core::{BettiCurve, Points};

use crate::error::{Result, TopoError};

/// Categorical palette; label classes take colors in ascending label order.
pub const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 40.0;

/// Color of each label: rank of the label among the distinct labels,
/// cycled through [`PALETTE`].
pub fn label_colors(labels: &[i64]) -> Vec<&'static str> {
    let mut classes: Vec<i64> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    labels
        .iter()
        .map(|l| PALETTE[classes.binary_search(l).unwrap() % PALETTE.len()])
        .collect()
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Frame {
        let span = |it: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
            if !(hi > lo) {
                let c = if lo.is_finite() { lo } else { 0.0 };
                (c - 0.5, c + 0.5)
            } else {
                (lo, hi)
            }
        };
        let (x0, x1) = span(&mut xs.clone());
        let (y0, y1) = span(&mut ys.clone());
        Frame { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// One `<circle>` per point.
pub fn scatter_svg(points: &dyn Points, labels: Option<&[i64]>, title: &str) -> Result<String> {
    if points.dim() != 2 {
        return Err(TopoError::Usage(format!("scatter plots need 2-D coordinates, got {}", points.dim())));
    }
    if let Some(l) = labels {
        if l.len() != points.n() {
            return Err(TopoError::Usage(format!("{} labels for {} points", l.len(), points.n())));
        }
    }
    let colors = labels.map(label_colors);
    let data = points.data();
    let frame = Frame::fit(data.iter().step_by(2).copied(), data.iter().skip(1).step_by(2).copied());
    let mut out = String::new();
    header(&mut out, title);
    let _ = writeln!(out, r#"<g stroke="none" fill-opacity="0.8">"#);
    for i in 0..points.n() {
        let (x, y) = (data[2 * i], data[2 * i + 1]);
        let fill = colors.as_ref().map_or(PALETTE[0], |c| c[i]);
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{fill}"/>"#,
            frame.px(x),
            frame.py(y)
        );
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}

/// One `<polyline>` per curve with a vertex at every grid point.
pub fn betti_svg(curves: &[BettiCurve], title: &str) -> Result<String> {
    if curves.is_empty() {
        return Err(TopoError::Usage("no Betti curves to plot".into()));
    }
    let frame = Frame::fit(
        curves.iter().flat_map(|c| c.grid.iter().copied()),
        curves.iter().flat_map(|c| c.counts.iter().map(|&k| k as f64)).chain([0.0]),
    );
    let mut out = String::new();
    header(&mut out, title);
    for (k, c) in curves.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = c
            .grid
            .iter()
            .zip(&c.counts)
            .map(|(&t, &n)| format!("{:.2},{:.2}", frame.px(t), frame.py(n as f64)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline data-dim="{}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            c.dim,
            pts.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{color}">β{}</text>"#,
            WIDTH - MARGIN - 30.0,
            MARGIN + 16.0 * k as f64,
            c.dim
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Line chart of several named series over shared x values.
pub fn lines_svg(xs: &[f64], series: &[(&str, Vec<f64>)], title: &str) -> String {
    let frame = Frame::fit(
        xs.iter().copied(),
        series.iter().flat_map(|(_, v)| v.iter().copied()).chain([0.0]),
    );
    let mut out = String::new();
    header(&mut out, title);
    for (k, (name, ys)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = xs
            .iter()
            .zip(ys)
            .map(|(&x, &y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{color}">{}</text>"#,
            MARGIN + 8.0,
            MARGIN + 16.0 * k as f64,
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use topoembed_core::Embedding;

    #[test]
    fn two_points_two_circles() {
        let e = Embedding::new(vec![0.0, 0.0, 1.0, 1.0], 2, 2).unwrap();
        let svg = scatter_svg(&e, None, "t").unwrap();
        assert_eq!(svg.matches("<circle").count(), 2);
    }

    #[test]
    fn scatter_needs_two_dims() {
        let e = Embedding::new(vec![0.0, 0.0, 1.0], 1, 3).unwrap();
        assert!(scatter_svg(&e, None, "t").is_err());
    }

    #[test]
    fn palette_is_by_label_rank() {
        let c = label_colors(&[7, 3, 7, 11]);
        assert_eq!(c, vec![PALETTE[1], PALETTE[0], PALETTE[1], PALETTE[2]]);
        let e = Embedding::new(vec![0.0, 0.0, 1.0, 1.0, 2.0, 0.5], 3, 2).unwrap();
        let a = scatter_svg(&e, Some(&[5, 9, 5]), "t").unwrap();
        assert_eq!(a, scatter_svg(&e, Some(&[5, 9, 5]), "t").unwrap());
        assert_eq!(a.matches(PALETTE[0]).count(), 2);
        assert_eq!(a.matches(PALETTE[1]).count(), 1);
    }

    #[test]
    fn betti_polyline_has_grid_size_vertices() {
        let c = BettiCurve { dim: 1, grid: (0..200).map(|i| i as f64 / 199.0).collect(), counts: vec![1; 200] };
        let svg = betti_svg(&[c], "b").unwrap();
        let pts = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        assert_eq!(pts.split(' ').count(), 200);
    }
}
