//! Minimal SVG 1.1 writer for line, step and cell-grid charts.

use std::fmt::Write;

pub const WIDTH: f64 = 900.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 130.0;

pub const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

pub struct Document {
    height: f64,
    body: String,
}

impl Document {
    pub fn new(height: f64) -> Self {
        Self {
            height,
            body: String::new(),
        }
    }

    pub fn title(&mut self, text: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{:.1}" y="22" font-size="16" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            escape(text)
        );
    }

    pub fn push(&mut self, element: &str) {
        self.body.push_str(element);
        self.body.push('\n');
    }

    pub fn finish(self) -> String {
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
             <svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\">\n\
             <rect width=\"{w}\" height=\"{h}\" fill=\"#ffffff\"/>\n{body}</svg>\n",
            w = WIDTH,
            h = self.height,
            body = self.body
        )
    }
}

pub fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// A plotting area with linear data-to-pixel mapping.
pub struct Panel {
    pub top: f64,
    pub height: f64,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
}

impl Panel {
    pub fn new(top: f64, height: f64, x_range: (f64, f64), y_range: (f64, f64)) -> Self {
        let widen = |(lo, hi): (f64, f64)| {
            if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        };
        Self {
            top,
            height,
            x_range: widen(x_range),
            y_range: widen(y_range),
        }
    }

    /// Y range covering `values` plus 5% padding on each side.
    pub fn fit(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
        let (lo, hi) = values
            .into_iter()
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            return (0.0, 1.0);
        }
        let pad = ((hi - lo) * 0.05).max(1e-6);
        (lo - pad, hi + pad)
    }

    pub fn left(&self) -> f64 {
        MARGIN_L
    }

    pub fn width(&self) -> f64 {
        WIDTH - MARGIN_L - MARGIN_R
    }

    pub fn px(&self, x: f64) -> f64 {
        let (a, b) = self.x_range;
        MARGIN_L + (x - a) / (b - a) * self.width()
    }

    pub fn py(&self, y: f64) -> f64 {
        let (a, b) = self.y_range;
        self.top + self.height - (y - a) / (b - a) * self.height
    }

    pub fn frame(&self, doc: &mut Document, y_label: &str, x_label: &str) {
        doc.push(&format!(
            r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#333333"/>"##,
            self.left(),
            self.top,
            self.width(),
            self.height
        ));
        for k in 0..=4 {
            let y = self.y_range.0 + (self.y_range.1 - self.y_range.0) * k as f64 / 4.0;
            doc.push(&format!(
                r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{}</text>"#,
                self.left() - 4.0,
                self.py(y) + 3.0,
                tick(y)
            ));
            let x = self.x_range.0 + (self.x_range.1 - self.x_range.0) * k as f64 / 4.0;
            doc.push(&format!(
                r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="middle">{}</text>"#,
                self.px(x),
                self.top + self.height + 13.0,
                tick(x)
            ));
        }
        doc.push(&format!(
            r#"<text x="14" y="{:.1}" font-size="11" transform="rotate(-90 14 {:.1})" text-anchor="middle">{}</text>"#,
            self.top + self.height / 2.0,
            self.top + self.height / 2.0,
            escape(y_label)
        ));
        if !x_label.is_empty() {
            doc.push(&format!(
                r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"#,
                self.left() + self.width() / 2.0,
                self.top + self.height + 27.0,
                escape(x_label)
            ));
        }
    }

    pub fn polyline(&self, doc: &mut Document, xs: &[f64], ys: &[f64], color: &str, dashed: bool) {
        let pts: Vec<String> = xs
            .iter()
            .zip(ys)
            .filter(|(_, y)| y.is_finite())
            .map(|(&x, &y)| format!("{:.2},{:.2}", self.px(x), self.py(y)))
            .collect();
        let dash = if dashed { r#" stroke-dasharray="6 3""# } else { "" };
        doc.push(&format!(
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
            pts.join(" ")
        ));
    }

    /// Step chart: value `ys[k]` holds over `[xs[k], xs[k] + 1)`.
    pub fn step_line(&self, doc: &mut Document, xs: &[f64], ys: &[f64], color: &str, dashed: bool) {
        let mut sx = Vec::with_capacity(xs.len() * 2);
        let mut sy = Vec::with_capacity(xs.len() * 2);
        for (&x, &y) in xs.iter().zip(ys) {
            sx.extend([x, x + 1.0]);
            sy.extend([y, y]);
        }
        self.polyline(doc, &sx, &sy, color, dashed);
    }

    pub fn hrule(&self, doc: &mut Document, y: f64, color: &str) {
        if y < self.y_range.0 || y > self.y_range.1 {
            return;
        }
        doc.push(&format!(
            r#"<line class="band" x1="{:.1}" y1="{:.2}" x2="{:.1}" y2="{:.2}" stroke="{color}" stroke-dasharray="4 4"/>"#,
            self.left(),
            self.py(y),
            self.left() + self.width(),
            self.py(y)
        ));
    }

    /// Shaded span covering steps `start..=end`.
    pub fn span(&self, doc: &mut Document, start: f64, end: f64, color: &str, label: &str) {
        let x0 = self.px(start);
        let x1 = self.px(end + 1.0).min(self.left() + self.width());
        doc.push(&format!(
            r#"<rect class="attack-span" x="{:.2}" y="{:.1}" width="{:.2}" height="{:.1}" fill="{color}" fill-opacity="0.15"><title>{}</title></rect>"#,
            x0,
            self.top,
            (x1 - x0).max(0.5),
            self.height,
            escape(label)
        ));
    }

    pub fn marker(&self, doc: &mut Document, x: f64, y: f64, color: &str) {
        doc.push(&format!(
            r#"<circle class="anomaly" cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
            self.px(x),
            self.py(y)
        ));
    }

    pub fn legend(&self, doc: &mut Document, entries: &[(String, &str, bool)]) {
        let x = self.left() + self.width() + 10.0;
        for (k, (label, color, dashed)) in entries.iter().enumerate() {
            let y = self.top + 12.0 + 15.0 * k as f64;
            let dash = if *dashed { r#" stroke-dasharray="6 3""# } else { "" };
            doc.push(&format!(
                r#"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{color}" stroke-width="2"{dash}/><text x="{:.1}" y="{:.1}" font-size="10">{}</text>"#,
                x,
                x + 18.0,
                x + 22.0,
                y + 3.0,
                escape(label)
            ));
        }
    }
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && (a < 1e-3 || a >= 1e5) {
        format!("{v:.2e}")
    } else if a >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

fn lerp(a: (f64, f64, f64), b: (f64, f64, f64), t: f64) -> (f64, f64, f64) {
    (a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t, a.2 + (b.2 - a.2) * t)
}

fn hex((r, g, b): (f64, f64, f64)) -> String {
    let c = |v: f64| v.round().clamp(0.0, 255.0) as u8;
    format!("#{:02x}{:02x}{:02x}", c(r), c(g), c(b))
}

/// Sequential scale, dark blue at 0 to yellow at 1.
pub fn sequential(t: f64) -> String {
    let stops = [(68.0, 1.0, 84.0), (33.0, 145.0, 140.0), (253.0, 231.0, 37.0)];
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.5 };
    if t <= 0.5 {
        hex(lerp(stops[0], stops[1], t * 2.0))
    } else {
        hex(lerp(stops[1], stops[2], (t - 0.5) * 2.0))
    }
}

/// Diverging scale over `[-1, 1]`: blue, white at 0, red.
pub fn diverging(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(-1.0, 1.0) } else { 0.0 };
    let white = (255.0, 255.0, 255.0);
    if t < 0.0 {
        hex(lerp(white, (33.0, 102.0, 172.0), -t))
    } else {
        hex(lerp(white, (178.0, 24.0, 43.0), t))
    }
}
