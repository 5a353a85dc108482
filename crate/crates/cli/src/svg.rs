use std::fmt::Write;

use rsform::classify::Sector;
use rsform::Complex64;

const SIZE: f64 = 480.0;
const PAD: f64 = 24.0;

/// Static drawing of a window of the complex `x`-plane.
pub struct Plot {
    lo: Complex64,
    span: f64,
    body: String,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Plot {
    /// Square window centred at `center` with half-width `half`.
    pub fn new(center: Complex64, half: f64) -> Self {
        let half = if half > 0.0 && half.is_finite() { half } else { 1.0 };
        Plot { lo: center - Complex64::new(half, half), span: 2.0 * half, body: String::new() }
    }

    fn px(&self, z: Complex64) -> (f64, f64) {
        let s = (SIZE - 2.0 * PAD) / self.span;
        (PAD + (z.re - self.lo.re) * s, SIZE - PAD - (z.im - self.lo.im) * s)
    }

    pub fn polyline(&mut self, pts: &[Complex64], color: &str, width: f64) {
        let coords: Vec<String> = pts
            .iter()
            .filter(|z| z.re.is_finite() && z.im.is_finite())
            .map(|&z| {
                let (a, b) = self.px(z);
                format!("{a:.2},{b:.2}")
            })
            .collect();
        if coords.len() < 2 {
            return;
        }
        let _ = writeln!(
            self.body,
            r#"<polyline fill="none" stroke="{color}" stroke-width="{width}" points="{}"/>"#,
            coords.join(" ")
        );
    }

    pub fn polygon(&mut self, pts: &[Complex64], fill: &str, stroke: &str) {
        let coords: Vec<String> = pts
            .iter()
            .map(|&z| {
                let (a, b) = self.px(z);
                format!("{a:.2},{b:.2}")
            })
            .collect();
        let _ = writeln!(
            self.body,
            r#"<polygon fill="{fill}" fill-opacity="0.25" stroke="{stroke}" points="{}"/>"#,
            coords.join(" ")
        );
    }

    pub fn dot(&mut self, z: Complex64, color: &str) {
        let (a, b) = self.px(z);
        let _ = writeln!(self.body, r#"<circle cx="{a:.2}" cy="{b:.2}" r="3" fill="{color}"/>"#);
    }

    pub fn label(&mut self, z: Complex64, text: &str) {
        let (a, b) = self.px(z);
        let _ = writeln!(
            self.body,
            r#"<text x="{:.2}" y="{:.2}" font-family="monospace" font-size="11">{}</text>"#,
            a + 4.0,
            b - 4.0,
            esc(text)
        );
    }

    /// Outline of `sector` rotated by `xi`.
    pub fn sector(&mut self, sector: &Sector, xi: Complex64, stroke: &str) {
        let n = 48;
        let radii: Vec<f64> = (1..=n).map(|i| sector.eps * i as f64 / n as f64).collect();
        let mut lower = vec![Complex64::new(0.0, 0.0)];
        let mut upper = Vec::new();
        for &r in &radii {
            let (lo, hi) = sector.theta_bounds(r);
            lower.push(xi * Complex64::from_polar(r, lo));
            upper.push(xi * Complex64::from_polar(r, hi));
        }
        let (lo, hi) = sector.theta_bounds(sector.eps);
        let arc: Vec<Complex64> =
            (0..=16).map(|i| xi * Complex64::from_polar(sector.eps, lo + (hi - lo) * i as f64 / 16.0)).collect();
        lower.extend(arc);
        upper.reverse();
        lower.extend(upper);
        self.polygon(&lower, stroke, stroke);
    }

    pub fn finish(self, title: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{PAD}" y="16" font-family="monospace" font-size="12">{}</text>"#, esc(title));
        let o = self.px(Complex64::new(0.0, 0.0));
        let _ = writeln!(
            s,
            r##"<line x1="{PAD}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#bbb"/>"##,
            o.1,
            SIZE - PAD,
            o.1
        );
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{PAD}" x2="{:.2}" y2="{:.2}" stroke="#bbb"/>"##,
            o.0,
            o.0,
            SIZE - PAD
        );
        s.push_str(&self.body);
        s.push_str("</svg>\n");
        s
    }
}
