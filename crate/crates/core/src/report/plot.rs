//! Static SVG charts for the selection diagnostics.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const MARK_COLOR: &str = "#d62728";
const SERIES_COLOR: &str = "#1f77b4";

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Step from {1, 2, 5}·10^e giving about `target` intervals over `span`.
fn nice_step(span: f64, target: usize) -> f64 {
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let m = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn fmt_tick(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 {
        0
    } else {
        (-step.log10().floor()) as usize
    };
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    y_step: f64,
}

impl Frame {
    fn new(x_min: f64, x_max: f64, lo: f64, hi: f64) -> Self {
        let (mut lo, mut hi) = (lo.min(0.0), hi.max(0.0));
        if hi - lo <= f64::EPSILON {
            hi = lo + 1.0;
        }
        let y_step = nice_step(hi - lo, 5);
        lo = (lo / y_step).floor() * y_step;
        hi = (hi / y_step).ceil() * y_step;
        let (x_min, x_max) = if x_max > x_min {
            (x_min, x_max)
        } else {
            (x_min - 1.0, x_max + 1.0)
        };
        Frame {
            x_min,
            x_max,
            y_min: lo,
            y_max: hi,
            y_step,
        }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x_min) / (self.x_max - self.x_min) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - TOP - BOTTOM)
    }
}

fn open(out: &mut String, title: &str, x_label: &str, y_label: &str) {
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        out,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + (WIDTH - LEFT - RIGHT) / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        TOP + (HEIGHT - TOP - BOTTOM) / 2.0,
        TOP + (HEIGHT - TOP - BOTTOM) / 2.0,
        escape(y_label)
    )
    .unwrap();
}

fn axes(out: &mut String, f: &Frame, x_ticks: &[f64]) {
    let x0 = LEFT;
    let x1 = WIDTH - RIGHT;
    let y0 = HEIGHT - BOTTOM;
    writeln!(out, r#"<g class="axes" stroke="black" fill="none">"#).unwrap();
    writeln!(
        out,
        r#"<line x1="{x0:.1}" y1="{y0:.1}" x2="{x1:.1}" y2="{y0:.1}"/>"#
    )
    .unwrap();
    writeln!(
        out,
        r#"<line x1="{x0:.1}" y1="{TOP:.1}" x2="{x0:.1}" y2="{y0:.1}"/>"#
    )
    .unwrap();
    writeln!(out, "</g>").unwrap();

    writeln!(out, r#"<g class="y-ticks" text-anchor="end">"#).unwrap();
    let steps = ((f.y_max - f.y_min) / f.y_step).round() as i64;
    for s in 0..=steps {
        let v = f.y_min + s as f64 * f.y_step;
        let y = f.py(v);
        writeln!(
            out,
            r##"<line x1="{:.1}" y1="{y:.1}" x2="{x1:.1}" y2="{y:.1}" stroke="#e0e0e0"/><text x="{:.1}" y="{:.1}">{}</text>"##,
            x0,
            x0 - 6.0,
            y + 4.0,
            fmt_tick(v, f.y_step)
        )
        .unwrap();
    }
    writeln!(out, "</g>").unwrap();

    writeln!(out, r#"<g class="x-ticks" text-anchor="middle">"#).unwrap();
    for &t in x_ticks {
        let x = f.px(t);
        writeln!(
            out,
            r#"<line x1="{x:.1}" y1="{y0:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/><text x="{x:.1}" y="{:.1}">{}</text>"#,
            y0 + 5.0,
            y0 + 18.0,
            t as i64
        )
        .unwrap();
    }
    writeln!(out, "</g>").unwrap();
}

/// Integer ticks from `lo` to `hi`, thinned to at most ~15 labels.
fn integer_ticks(lo: usize, hi: usize) -> Vec<f64> {
    let span = hi.saturating_sub(lo).max(1);
    let stride = span.div_ceil(15).max(1);
    let mut t: Vec<f64> = (lo..=hi).step_by(stride).map(|v| v as f64).collect();
    if t.last() != Some(&(hi as f64)) {
        t.push(hi as f64);
    }
    t
}

fn marker(out: &mut String, f: &Frame, k: usize) {
    let x = f.px(k as f64);
    writeln!(
        out,
        r#"<line class="chosen-k" data-k="{k}" x1="{x:.1}" y1="{TOP:.1}" x2="{x:.1}" y2="{:.1}" stroke="{MARK_COLOR}" stroke-width="1.5" stroke-dasharray="6 4"/>"#,
        HEIGHT - BOTTOM
    )
    .unwrap();
}

fn polyline(out: &mut String, f: &Frame, pts: &[(f64, f64)]) {
    let path: Vec<String> = pts
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
        .collect();
    writeln!(
        out,
        r#"<polyline class="series" fill="none" stroke="{SERIES_COLOR}" stroke-width="2" points="{}"/>"#,
        path.join(" ")
    )
    .unwrap();
    for &(x, y) in pts {
        writeln!(
            out,
            r#"<circle class="point" data-x="{x}" data-y="{y}" cx="{:.2}" cy="{:.2}" r="3.5" fill="{SERIES_COLOR}"/>"#,
            f.px(x),
            f.py(y)
        )
        .unwrap();
    }
}

fn bounds(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

/// Ascending eigenvalues against their 1-based index, with the chosen k marked.
pub fn scree_svg(eigenvalues: &[f64], chosen_k: Option<usize>) -> String {
    let n = eigenvalues.len().max(1);
    let (lo, hi) = bounds(eigenvalues);
    let f = Frame::new(1.0, n as f64, lo, hi);
    let mut out = String::new();
    open(&mut out, "Eigenvalues", "Index", "Eigenvalue");
    axes(&mut out, &f, &integer_ticks(1, n));
    if let Some(k) = chosen_k {
        marker(&mut out, &f, k);
    }
    let pts: Vec<(f64, f64)> = eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &v)| ((i + 1) as f64, v))
        .collect();
    polyline(&mut out, &f, &pts);
    out.push_str("</svg>\n");
    out
}

/// Bars of `Δ_i` against i, with a dashed rule at the chosen k.
pub fn gap_svg(gaps: &[f64], chosen_k: usize) -> String {
    let n = gaps.len().max(1);
    let (lo, hi) = bounds(gaps);
    let f = Frame::new(0.5, n as f64 + 0.5, lo, hi);
    let mut out = String::new();
    open(&mut out, "Eigen-gaps", "Index i", "Gap (λ[i+1] − λ[i])");
    axes(&mut out, &f, &integer_ticks(1, n));
    let bar = ((f.px(1.0) - f.px(0.0)) * 0.7).max(1.0);
    writeln!(out, r#"<g class="bars" fill="{SERIES_COLOR}">"#).unwrap();
    for (i, &g) in gaps.iter().enumerate() {
        let idx = i + 1;
        let x = f.px(idx as f64) - bar / 2.0;
        let (y_top, y_bot) = (f.py(g.max(0.0)), f.py(g.min(0.0)));
        writeln!(
            out,
            r#"<rect data-index="{idx}" data-gap="{g}" x="{x:.2}" y="{y_top:.2}" width="{bar:.2}" height="{:.2}"/>"#,
            (y_bot - y_top).max(0.0)
        )
        .unwrap();
    }
    writeln!(out, "</g>").unwrap();
    marker(&mut out, &f, chosen_k);
    out.push_str("</svg>\n");
    out
}

/// Mean silhouette against the number of clusters.
pub fn silhouette_svg(by_k: &[(usize, f64)], chosen_k: Option<usize>) -> String {
    let ks: Vec<usize> = by_k.iter().map(|(k, _)| *k).collect();
    let (k_lo, k_hi) = (
        ks.iter().copied().min().unwrap_or(2),
        ks.iter().copied().max().unwrap_or(2),
    );
    let values: Vec<f64> = by_k.iter().map(|(_, s)| *s).collect();
    let (lo, hi) = bounds(&values);
    let f = Frame::new(k_lo as f64, k_hi as f64, lo.max(-1.0), hi.min(1.0).max(lo));
    let mut out = String::new();
    open(
        &mut out,
        "Silhouette coefficient",
        "Number of clusters",
        "Mean silhouette",
    );
    axes(&mut out, &f, &integer_ticks(k_lo, k_hi));
    if let Some(k) = chosen_k {
        marker(&mut out, &f, k);
    }
    let pts: Vec<(f64, f64)> = by_k.iter().map(|&(k, s)| (k as f64, s)).collect();
    polyline(&mut out, &f, &pts);
    out.push_str("</svg>\n");
    out
}
