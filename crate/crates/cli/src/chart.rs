//! Minimal SVG line charts.
//!
//! Output depends only on the input data: coordinates are printed with two
//! decimals and series longer than [`MAX_POINTS`] are decimated by keeping
//! the minimum and maximum of each bucket, so spikes stay visible.

use std::fmt::Write;

pub const MAX_POINTS: usize = 1200;

const PANEL_WIDTH: f64 = 640.0;
const PANEL_HEIGHT: f64 = 300.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 32.0;
const MARGIN_BOTTOM: f64 = 40.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Optional lower and upper envelope, drawn as a shaded band.
    pub band: Option<Vec<(f64, f64, f64)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub series: Vec<Series>,
}

/// Min/max decimation to at most `max` points.
pub fn decimate(points: &[(f64, f64)], max: usize) -> Vec<(f64, f64)> {
    if points.len() <= max || max < 4 {
        return points.to_vec();
    }
    let buckets = (max - 2) / 2;
    let inner = &points[1..points.len() - 1];
    let mut out = Vec::with_capacity(max);
    out.push(points[0]);
    for b in 0..buckets {
        let lo = b * inner.len() / buckets;
        let hi = ((b + 1) * inner.len() / buckets).max(lo + 1);
        let chunk = &inner[lo..hi];
        let (mut imin, mut imax) = (0, 0);
        for (i, p) in chunk.iter().enumerate() {
            if p.1 < chunk[imin].1 {
                imin = i;
            }
            if p.1 > chunk[imax].1 {
                imax = i;
            }
        }
        let (a, b) = (imin.min(imax), imin.max(imax));
        out.push(chunk[a]);
        if b != a {
            out.push(chunk[b]);
        }
    }
    out.push(points[points.len() - 1]);
    out
}

fn nice_step(span: f64, target: usize) -> f64 {
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn ticks(lo: f64, hi: f64, target: usize) -> (f64, f64, Vec<f64>) {
    if hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        return ticks(lo - pad, hi + pad, target);
    }
    let step = nice_step(hi - lo, target);
    let start = (lo / step).floor() * step;
    let end = (hi / step).ceil() * step;
    let n = ((end - start) / step).round() as usize;
    let values = (0..=n).map(|i| start + i as f64 * step).collect();
    (start, end, values)
}

pub fn tick_label(v: f64) -> String {
    let a = v.abs();
    let (scaled, suffix) = if a >= 1e12 {
        (v / 1e12, "T")
    } else if a >= 1e9 {
        (v / 1e9, "G")
    } else if a >= 1e6 {
        (v / 1e6, "M")
    } else if a >= 1e4 {
        (v / 1e3, "k")
    } else {
        (v, "")
    };
    let mut s = if scaled.abs() < 1.0 {
        format!("{:.6}", scaled)
    } else {
        format!("{:.3}", scaled)
    };
    while s.contains('.') && (s.ends_with('0') || s.ends_with('.')) {
        s.pop();
    }
    if s == "-0" {
        s = "0".into();
    }
    format!("{s}{suffix}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Renders `panels` in a grid `columns` wide.
pub fn render(panels: &[Panel], columns: usize) -> String {
    let columns = columns.clamp(1, panels.len().max(1));
    let rows = panels.len().div_ceil(columns).max(1);
    let width = PANEL_WIDTH * columns as f64;
    let height = PANEL_HEIGHT * rows as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{width}" height="{height}" fill="white"/>"#
    );
    for (k, panel) in panels.iter().enumerate() {
        let ox = (k % columns) as f64 * PANEL_WIDTH;
        let oy = (k / columns) as f64 * PANEL_HEIGHT;
        render_panel(&mut svg, panel, ox, oy);
    }
    svg.push_str("</svg>\n");
    svg
}

fn render_panel(svg: &mut String, panel: &Panel, ox: f64, oy: f64) {
    let left = ox + MARGIN_LEFT;
    let right = ox + PANEL_WIDTH - MARGIN_RIGHT;
    let top = oy + MARGIN_TOP;
    let bottom = oy + PANEL_HEIGHT - MARGIN_BOTTOM;

    let decimated: Vec<Vec<(f64, f64)>> = panel
        .series
        .iter()
        .map(|s| decimate(&s.points, MAX_POINTS))
        .collect();
    let mut xs = (f64::INFINITY, f64::NEG_INFINITY);
    let mut ys = (f64::INFINITY, f64::NEG_INFINITY);
    for (s, pts) in panel.series.iter().zip(&decimated) {
        for &(x, y) in pts {
            xs = (xs.0.min(x), xs.1.max(x));
            ys = (ys.0.min(y), ys.1.max(y));
        }
        for &(x, lo, hi) in s.band.iter().flatten() {
            xs = (xs.0.min(x), xs.1.max(x));
            ys = (ys.0.min(lo), ys.1.max(hi));
        }
    }
    if !xs.0.is_finite() {
        xs = (0.0, 1.0);
        ys = (0.0, 1.0);
    }
    let (x0, x1, xt) = ticks(xs.0, xs.1, 6);
    let (y0, y1, yt) = ticks(ys.0, ys.1, 5);
    let px = |x: f64| left + (x - x0) / (x1 - x0) * (right - left);
    let py = |y: f64| bottom - (y - y0) / (y1 - y0) * (bottom - top);

    let _ = writeln!(svg, "<g>");
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-size="13" font-weight="bold">{}</text>"#,
        left,
        oy + 20.0,
        escape(&panel.title)
    );
    for &v in &yt {
        let y = py(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{left:.2}" y1="{y:.2}" x2="{right:.2}" y2="{y:.2}" stroke="#e0e0e0"/>"##
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            left - 6.0,
            y + 4.0,
            tick_label(v)
        );
    }
    for &v in &xt {
        let x = px(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{bottom:.2}" x2="{x:.2}" y2="{:.2}" stroke="#444"/>"##,
            bottom + 4.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            bottom + 16.0,
            tick_label(v)
        );
    }
    let _ = writeln!(
        svg,
        r##"<rect x="{left:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#444"/>"##,
        right - left,
        bottom - top
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (left + right) / 2.0,
        bottom + 32.0,
        escape(&panel.x_label)
    );

    for (k, (s, pts)) in panel.series.iter().zip(&decimated).enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        if let Some(band) = &s.band {
            let upper: Vec<(f64, f64)> = band.iter().map(|&(x, _, hi)| (x, hi)).collect();
            let lower: Vec<(f64, f64)> = band.iter().map(|&(x, lo, _)| (x, lo)).collect();
            let upper = decimate(&upper, MAX_POINTS);
            let lower = decimate(&lower, MAX_POINTS);
            let mut d = String::new();
            for (i, &(x, y)) in upper.iter().chain(lower.iter().rev()).enumerate() {
                let _ = write!(
                    d,
                    "{}{:.2},{:.2} ",
                    if i == 0 { "M" } else { "L" },
                    px(x),
                    py(y)
                );
            }
            d.push('Z');
            let _ = writeln!(
                svg,
                r#"<path d="{d}" fill="{color}" fill-opacity="0.15" stroke="none"/>"#
            );
        }
        if !pts.is_empty() {
            let mut d = String::new();
            for (i, &(x, y)) in pts.iter().enumerate() {
                let _ = write!(
                    d,
                    "{}{:.2},{:.2}",
                    if i == 0 { "M" } else { " L" },
                    px(x),
                    py(y)
                );
            }
            let _ = writeln!(
                svg,
                r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>"#
            );
        }
        let ly = top + 14.0 * k as f64 + 8.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            right + 10.0,
            right + 26.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            right + 30.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    let _ = writeln!(svg, "</g>");
}
