//! Plain SVG plots: heatmaps over the (Φ_lat, D) plane and gait diagrams.
//!
//! Heatmaps use a five-stop viridis ramp, linear between stops, from the
//! minimum to the maximum of the data (or a fixed range). Missing cells are
//! grey.

use std::fmt::Write;

const VIRIDIS: [(u8, u8, u8); 5] = [
    (0x44, 0x01, 0x54),
    (0x3b, 0x52, 0x8b),
    (0x21, 0x91, 0x8c),
    (0x5e, 0xc9, 0x62),
    (0xfd, 0xe7, 0x25),
];
const MISSING: &str = "#bbbbbb";

pub fn colormap(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let x = t * (VIRIDIS.len() - 1) as f64;
    let i = (x.floor() as usize).min(VIRIDIS.len() - 2);
    let f = x - i as f64;
    let lerp = |a: u8, b: u8| (a as f64 + f * (b as f64 - a as f64)).round() as u8;
    let (a, b) = (VIRIDIS[i], VIRIDIS[i + 1]);
    format!("#{:02x}{:02x}{:02x}", lerp(a.0, b.0), lerp(a.1, b.1), lerp(a.2, b.2))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub struct Heatmap<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub value_label: &'a str,
    pub xs: &'a [f64],
    pub ys: &'a [f64],
    /// Row-major by `ys`: `values[iy * xs.len() + ix]`.
    pub values: &'a [Option<f64>],
    /// Color range; `None` uses the data range.
    pub range: Option<(f64, f64)>,
}

impl Heatmap<'_> {
    pub fn render(&self) -> String {
        let (nx, ny) = (self.xs.len(), self.ys.len());
        let cell = (360.0 / nx.max(ny) as f64).clamp(8.0, 40.0);
        let (left, top) = (70.0, 40.0);
        let (w, h) = (cell * nx as f64, cell * ny as f64);
        let bar_x = left + w + 30.0;
        let width = bar_x + 90.0;
        let height = top + h + 60.0;

        let finite = self.values.iter().flatten().copied().filter(|v| v.is_finite());
        let (lo, hi) = self.range.unwrap_or_else(|| {
            finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
        });
        let (lo, hi) = if lo.is_finite() && hi.is_finite() { (lo, hi) } else { (0.0, 1.0) };
        let span = if hi > lo { hi - lo } else { 1.0 };

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="13">{}</text>"#,
            left + w / 2.0,
            escape(self.title)
        );
        for iy in 0..ny {
            // Larger y values at the top.
            let y = top + (ny - 1 - iy) as f64 * cell;
            for ix in 0..nx {
                let x = left + ix as f64 * cell;
                let fill = match self.values[iy * nx + ix] {
                    Some(v) if v.is_finite() => colormap((v - lo) / span),
                    _ => MISSING.to_string(),
                };
                let _ = writeln!(
                    s,
                    r#"<rect x="{x:.1}" y="{y:.1}" width="{cell:.1}" height="{cell:.1}" fill="{fill}"/>"#
                );
            }
        }
        let tick_every = |n: usize| (n / 6).max(1);
        for ix in (0..nx).step_by(tick_every(nx)) {
            let x = left + (ix as f64 + 0.5) * cell;
            let _ = writeln!(
                s,
                r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{:.2}</text>"#,
                top + h + 14.0,
                self.xs[ix]
            );
        }
        for iy in (0..ny).step_by(tick_every(ny)) {
            let y = top + (ny - 1 - iy) as f64 * cell + cell / 2.0 + 4.0;
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{y:.1}" text-anchor="end">{:.2}</text>"#,
                left - 6.0,
                self.ys[iy]
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            left + w / 2.0,
            top + h + 34.0,
            escape(self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="20" y="{:.1}" text-anchor="middle" transform="rotate(-90 20 {:.1})">{}</text>"#,
            top + h / 2.0,
            top + h / 2.0,
            escape(self.y_label)
        );

        // Color bar with five numeric ticks.
        let steps = 50;
        for k in 0..steps {
            let t = k as f64 / (steps - 1) as f64;
            let y = top + h - (k + 1) as f64 * h / steps as f64;
            let _ = writeln!(
                s,
                r#"<rect x="{bar_x:.1}" y="{y:.1}" width="14" height="{:.2}" fill="{}"/>"#,
                h / steps as f64 + 0.5,
                colormap(t)
            );
        }
        for k in 0..5 {
            let t = k as f64 / 4.0;
            let y = top + h - t * h;
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}">{:.3}</text>"#,
                bar_x + 18.0,
                y + 4.0,
                lo + t * span
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            bar_x + 30.0,
            top - 8.0,
            escape(self.value_label)
        );
        s.push_str("</svg>\n");
        s
    }
}

/// Stance blocks per leg over one cycle; `rows` are `(label, stance flags)`.
pub fn gait_diagram(title: &str, rows: &[(String, Vec<bool>)]) -> String {
    let n = rows.first().map(|r| r.1.len()).unwrap_or(0).max(1);
    let (left, top, w, row_h) = (50.0, 40.0, 540.0, 18.0);
    let height = top + row_h * rows.len() as f64 + 40.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{height:.0}" font-family="sans-serif" font-size="11">"#,
        left + w + 20.0
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="13">{}</text>"#,
        left + w / 2.0,
        escape(title)
    );
    for (r, (label, flags)) in rows.iter().enumerate() {
        let y = top + r as f64 * row_h;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            left - 6.0,
            y + row_h * 0.7,
            escape(label)
        );
        // Merge consecutive stance samples into one block.
        let mut k = 0;
        while k < flags.len() {
            if !flags[k] {
                k += 1;
                continue;
            }
            let start = k;
            while k < flags.len() && flags[k] {
                k += 1;
            }
            let x = left + w * start as f64 / n as f64;
            let bw = w * (k - start) as f64 / n as f64;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.2}" y="{:.1}" width="{bw:.2}" height="{:.1}" fill="black"/>"#,
                y + 2.0,
                row_h - 4.0
            );
        }
    }
    let axis_y = top + row_h * rows.len() as f64 + 14.0;
    for k in 0..=4 {
        let x = left + w * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{x:.1}" y="{axis_y:.1}" text-anchor="middle">{}</text>"#,
            90 * k
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">contact phase (deg), black = stance</text>"#,
        left + w / 2.0,
        axis_y + 16.0
    );
    s.push_str("</svg>\n");
    s
}
