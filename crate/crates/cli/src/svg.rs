//! Minimal deterministic SVG charts: fixed canvas, fixed number formatting
//! and no timestamps, so equal inputs give equal bytes.

use std::fmt::Write as _;

pub const WIDTH: f64 = 640.0;
pub const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

pub fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

pub fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            c => out.push(c),
        }
    }
    out
}

/// A chart area mapping data ranges onto the canvas.
pub struct Chart {
    body: String,
    x_range: (f64, f64),
    y_range: (f64, f64),
}

impl Chart {
    pub fn new(title: &str, x_label: &str, y_label: &str, x_range: (f64, f64), y_range: (f64, f64)) -> Self {
        let mut c = Self {
            body: String::new(),
            x_range,
            y_range,
        };
        let (x0, y0, x1, y1) = (LEFT, HEIGHT - BOTTOM, WIDTH - RIGHT, TOP);
        let _ = writeln!(
            c.body,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="16">{}</text>"#,
            WIDTH / 2.0,
            escape(title)
        );
        let _ = writeln!(c.body, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}" stroke="black"/>"#);
        let _ = writeln!(c.body, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}" stroke="black"/>"#);
        let _ = writeln!(
            c.body,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">{}</text>"#,
            (x0 + x1) / 2.0,
            HEIGHT - 15.0,
            escape(x_label)
        );
        let _ = writeln!(
            c.body,
            r#"<text x="18" y="{:.2}" text-anchor="middle" font-size="12" transform="rotate(-90 18 {:.2})">{}</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            escape(y_label)
        );
        c
    }

    pub fn px(&self, x: f64) -> f64 {
        let (a, b) = self.x_range;
        LEFT + (x - a) / (b - a) * (WIDTH - LEFT - RIGHT)
    }

    pub fn py(&self, y: f64) -> f64 {
        let (a, b) = self.y_range;
        HEIGHT - BOTTOM - (y - a) / (b - a) * (HEIGHT - TOP - BOTTOM)
    }

    pub fn x_ticks(&mut self, ticks: &[(f64, String)]) {
        for (v, label) in ticks {
            let x = self.px(*v);
            let y = HEIGHT - BOTTOM;
            let _ = writeln!(self.body, r#"<line x1="{x:.2}" y1="{y:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, y + 5.0);
            let _ = writeln!(
                self.body,
                r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="11">{}</text>"#,
                y + 18.0,
                escape(label)
            );
        }
    }

    pub fn y_ticks(&mut self, ticks: &[(f64, String)]) {
        for (v, label) in ticks {
            let y = self.py(*v);
            let _ = writeln!(self.body, r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT:.2}" y2="{y:.2}" stroke="black"/>"#, LEFT - 5.0);
            let _ = writeln!(
                self.body,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{}</text>"#,
                LEFT - 8.0,
                y + 4.0,
                escape(label)
            );
        }
    }

    pub fn point(&mut self, x: f64, y: f64, color: &str, label: &str) {
        let (cx, cy) = (self.px(x), self.py(y));
        let _ = writeln!(self.body, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="5" fill="{color}"/>"#);
        let _ = writeln!(
            self.body,
            r#"<text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
            cx + 8.0,
            cy - 6.0,
            escape(label)
        );
    }

    /// Bar spanning `[x0, x1]` horizontally from 0 up to `y`.
    pub fn bar(&mut self, x0: f64, x1: f64, y: f64, color: &str) {
        let (l, r) = (self.px(x0), self.px(x1));
        let (top, base) = (self.py(y), self.py(0.0));
        let _ = writeln!(
            self.body,
            r#"<rect x="{l:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{color}"/>"#,
            r - l,
            base - top
        );
    }

    pub fn legend(&mut self, entries: &[(String, &str)]) {
        for (i, (name, color)) in entries.iter().enumerate() {
            let y = TOP + 8.0 + 16.0 * i as f64;
            let x = WIDTH - RIGHT - 150.0;
            let _ = writeln!(self.body, r#"<rect x="{x:.2}" y="{:.2}" width="10" height="10" fill="{color}"/>"#, y - 9.0);
            let _ = writeln!(self.body, r#"<text x="{:.2}" y="{y:.2}" font-size="11">{}</text>"#, x + 14.0, escape(name));
        }
    }

    pub fn finish(self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">"#
        );
        let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        out.push_str(&self.body);
        out.push_str("</svg>\n");
        out
    }
}

/// `n + 1` evenly spaced ticks over `[lo, hi]` labelled with `decimals` digits.
pub fn linear_ticks(lo: f64, hi: f64, n: usize, decimals: usize) -> Vec<(f64, String)> {
    (0..=n)
        .map(|i| {
            let v = lo + (hi - lo) * i as f64 / n as f64;
            (v, format!("{v:.decimals$}"))
        })
        .collect()
}
