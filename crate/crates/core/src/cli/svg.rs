//! Minimal SVG line charts for sweep results.

use super::sweep::SweepRow;
use std::fmt::Write as _;

const WIDTH: f64 = 520.0;
const HEIGHT: f64 = 340.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 110.0;
const MARGIN_Y: f64 = 40.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// File stem, axis label and accessor of a plotted metric.
pub type Metric = (&'static str, &'static str, fn(&SweepRow) -> f64);

/// Metrics plotted by [`sweep_charts`].
pub const METRICS: [Metric; 4] = [
    ("corr_mean", "normalized correlation", |r| r.corr_mean),
    ("rank_r_frac", "fraction rank r", |r| r.rank_r_frac),
    ("rank_def_frac", "fraction rank deficient", |r| r.rank_def_frac),
    ("time_mean_s", "solve time (s)", |r| r.time_mean_s),
];

/// One chart per metric against sigma, one series per p.
pub fn sweep_charts(rows: &[SweepRow]) -> Vec<(String, String)> {
    METRICS
        .iter()
        .map(|(stem, label, get)| (format!("{stem}.svg"), line_chart(rows, label, *get)))
        .collect()
}

fn line_chart(rows: &[SweepRow], label: &str, get: fn(&SweepRow) -> f64) -> String {
    let mut ps: Vec<usize> = rows.iter().map(|r| r.p).collect();
    ps.sort_unstable();
    ps.dedup();
    let finite = |v: f64| v.is_finite();
    let xs: Vec<f64> = rows.iter().map(|r| r.sigma).collect();
    let ys: Vec<f64> = rows.iter().map(get).filter(|v| finite(*v)).collect();
    let (x0, x1) = bounds(&xs);
    let (mut y0, mut y1) = bounds(&ys);
    y0 = y0.min(0.0);
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - 2.0 * MARGIN_Y;
    let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| HEIGHT - MARGIN_Y - (y - y0) / (y1 - y0) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (bx, by) = (MARGIN_LEFT, HEIGHT - MARGIN_Y);
    let _ = writeln!(
        s,
        r#"<path d="M{bx} {top} V{by} H{right}" stroke="black" fill="none"/>"#,
        top = MARGIN_Y,
        right = MARGIN_LEFT + plot_w
    );
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            sx(fx),
            by + 16.0,
            tick(fx)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            bx - 6.0,
            sy(fy) + 4.0,
            tick(fy)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">sigma</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 6.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="20" text-anchor="middle">{label}</text>"#,
        MARGIN_LEFT + plot_w / 2.0
    );
    for (k, p) in ps.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> = rows
            .iter()
            .filter(|r| r.p == *p && finite(get(r)))
            .map(|r| format!("{:.2},{:.2}", sx(r.sigma), sy(get(r))))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" stroke="{color}" stroke-width="2" fill="none"/>"#,
            pts.join(" ")
        );
        let ly = MARGIN_Y + 18.0 * k as f64;
        let lx = MARGIN_LEFT + plot_w + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">p = {p}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        (0.0, 1.0)
    } else if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}

fn tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}
