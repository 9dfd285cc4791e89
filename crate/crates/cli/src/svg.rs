//! Minimal SVG line plots.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;

pub struct Series {
    pub points: Vec<(f64, f64)>,
    /// Optional `(lower, upper)` band around each point.
    pub band: Option<Vec<(f64, f64)>>,
    pub color: &'static str,
    pub markers: bool,
}

pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_axes: bool,
    pub series: Vec<Series>,
    pub vertical_marker: Option<f64>,
    pub note: Option<String>,
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    log: bool,
}

impl Frame {
    fn tx(&self, v: f64) -> f64 {
        self.tx_raw(if self.log { v.ln() } else { v })
    }

    fn tx_raw(&self, v: f64) -> f64 {
        MARGIN + (v - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn ty(&self, v: f64) -> f64 {
        let v = if self.log { v.ln() } else { v };
        HEIGHT - MARGIN - (v - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

impl Plot {
    pub fn render(&self) -> String {
        let usable = |v: f64| v.is_finite() && (!self.log_axes || v > 0.0);
        let map = |v: f64| if self.log_axes { v.ln() } else { v };
        let xs = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.0))
            .filter(|v| usable(*v))
            .map(map);
        let (x0, x1) = span(xs);
        let ys = self.series.iter().flat_map(|s| {
            let band = s.band.iter().flatten().flat_map(|b| [b.0, b.1]);
            s.points.iter().map(|p| p.1).chain(band).collect::<Vec<_>>()
        });
        let (y0, y1) = span(ys.filter(|v| usable(*v)).map(map));
        let frame = Frame {
            x0,
            x1,
            y0,
            y1,
            log: self.log_axes,
        };

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
        let _ = writeln!(
            out,
            r#"<path d="M{left} {top} L{left} {bottom} L{right} {bottom}" stroke="black" fill="none"/>"#
        );
        for k in 0..=4 {
            let fx = x0 + (x1 - x0) * k as f64 / 4.0;
            let fy = y0 + (y1 - y0) * k as f64 / 4.0;
            let px = frame.tx_raw(fx);
            let py = bottom - (fy - y0) / (y1 - y0) * (bottom - top);
            let (lx, ly) = if self.log_axes { (fx.exp(), fy.exp()) } else { (fx, fy) };
            let _ = writeln!(
                out,
                r#"<text x="{px:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"#,
                bottom + 16.0,
                tick(lx)
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{py:.1}" font-size="11" text-anchor="end">{}</text>"#,
                left - 6.0,
                tick(ly)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="24" font-size="14" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 16.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&self.y_label)
        );

        for s in &self.series {
            if let Some(band) = &s.band {
                let pts: Vec<_> = s
                    .points
                    .iter()
                    .zip(band)
                    .filter(|(p, b)| usable(p.0) && usable(b.0) && usable(b.1))
                    .map(|(p, b)| (p.0, b.0, b.1))
                    .collect();
                if !pts.is_empty() {
                    let mut d = String::new();
                    for (i, (x, _, hi)) in pts.iter().enumerate() {
                        let _ = write!(d, "{}{:.2} {:.2} ", if i == 0 { "M" } else { "L" }, frame.tx(*x), frame.ty(*hi));
                    }
                    for (x, lo, _) in pts.iter().rev() {
                        let _ = write!(d, "L{:.2} {:.2} ", frame.tx(*x), frame.ty(*lo));
                    }
                    let _ = writeln!(out, r#"<path d="{}Z" fill="{}" fill-opacity="0.2" stroke="none"/>"#, d, s.color);
                }
            }
            let pts: Vec<_> = s.points.iter().filter(|p| usable(p.0) && usable(p.1)).collect();
            let line: Vec<String> = pts
                .iter()
                .map(|p| format!("{:.2},{:.2}", frame.tx(p.0), frame.ty(p.1)))
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                line.join(" "),
                s.color
            );
            if s.markers {
                for p in pts {
                    let _ = writeln!(
                        out,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#,
                        frame.tx(p.0),
                        frame.ty(p.1),
                        s.color
                    );
                }
            }
        }
        if let Some(v) = self.vertical_marker.filter(|v| usable(*v)) {
            let x = frame.tx(v);
            let _ = writeln!(
                out,
                r#"<line x1="{x:.2}" y1="{top}" x2="{x:.2}" y2="{bottom}" stroke="gray" stroke-dasharray="4 3"/>"#
            );
        }
        if let Some(note) = &self.note {
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" font-size="12">{}</text>"#,
                left + 10.0,
                top + 16.0,
                escape(note)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{v:.2}")
    }
}
