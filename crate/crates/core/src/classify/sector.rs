use num_complex::Complex64;

/// `R_{d,e,ε} = {|x| < ε, −d(Re x)^{r+1} < Im x < e(Re x)^{r+1}}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sector {
    pub d: f64,
    pub e: f64,
    pub eps: f64,
    pub r: u32,
}

impl Sector {
    pub fn contains(&self, x: Complex64) -> bool {
        if !(x.norm() < self.eps) || x.re <= 0.0 {
            return false;
        }
        let w = x.re.powi(self.r as i32 + 1);
        -self.d * w < x.im && x.im < self.e * w
    }

    /// Admissible arguments at radius `rad`, as an open interval.
    pub fn theta_bounds(&self, rad: f64) -> (f64, f64) {
        let edge = |a: f64| {
            // sin θ = a rad^r cos^{r+1} θ has one root in (0, π/2)
            let g = |t: f64| t.sin() - a * rad.powi(self.r as i32) * t.cos().powi(self.r as i32 + 1);
            let (mut lo, mut hi) = (0.0, std::f64::consts::FRAC_PI_2);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if g(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        (-edge(self.d), edge(self.e))
    }

    /// Geometric radii from `ε·lo_frac` to just below `ε`.
    pub fn radii(&self, n: usize, lo_frac: f64) -> Vec<f64> {
        let (a, b) = ((self.eps * lo_frac).ln(), (self.eps * (1.0 - 1e-3)).ln());
        (0..n).map(|i| (a + (b - a) * i as f64 / (n.max(2) - 1) as f64).exp()).collect()
    }

    /// `nr × nθ` interior polar samples; radii span four decades below `ε`.
    pub fn grid(&self, nr: usize, nth: usize) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(nr * nth);
        for rad in self.radii(nr, 1e-4) {
            let (lo, hi) = self.theta_bounds(rad);
            for j in 0..nth {
                let th = lo + (hi - lo) * (j as f64 + 0.5) / nth as f64;
                out.push(Complex64::from_polar(rad, th));
            }
        }
        out
    }
}
