use num_complex::Complex64;

use super::ManifoldError;
use crate::jets::{Jet, Mat};

type C = Complex64;

/// `E(x) = exp(−P(x))`, `P' = (D̄₂(x) + x^p C₂) / (x^{p+1}(1 − ρx^p))`.
///
/// `P` is a Laurent polynomial plus `R log x`; the geometric series in `ρx^p` is cut once its terms drop
/// below `1e-18` on `|x| ≤ ε`. All coefficient matrices commute, so `E(x₀)E(x₁)^{-1} = exp(P(x₁) − P(x₀))`.
#[derive(Clone, Debug)]
pub struct Cocycle {
    pub nz: usize,
    pub rho: C,
    /// `pos[a−1]` is the coefficient block of `x^a`, `neg[a−1]` that of `x^{−a}`.
    pos: Vec<Vec<C>>,
    neg: Vec<Vec<C>>,
    log: Vec<C>,
}

impl Cocycle {
    pub fn new(k: u32, p: u32, b: C, d2_bar: &[Jet<C>], c2: &Mat<C>, eps: f64) -> Result<Self, ManifoldError> {
        let nz = d2_bar.len();
        let rho = if k == 0 { b - (p as f64 + 1.0) / 2.0 } else { C::new(0.0, 0.0) };
        // M(x) = D̄₂(x) + x^p C₂, degree ≤ p.
        let mcoef: Vec<Vec<C>> = (0..=p)
            .map(|a| {
                let mut m = vec![C::new(0.0, 0.0); nz * nz];
                for i in 0..nz {
                    if a < p {
                        m[i * nz + i] = d2_bar[i].uc(a);
                    }
                    if a == p {
                        for j in 0..nz {
                            m[i * nz + j] = *c2.get(i, j);
                        }
                    }
                }
                m
            })
            .collect();
        let geo = rho.norm() * eps.powi(p as i32);
        let imax = if rho.norm() == 0.0 || p == 0 {
            0
        } else if geo >= 1.0 {
            return Err(ManifoldError::Shape(format!("|ρ| ε^p = {geo:.3} ≥ 1")));
        } else {
            ((18.0 * std::f64::consts::LN_10) / -geo.ln()).ceil().min(400.0) as u32
        };
        let mut g: std::collections::BTreeMap<i32, Vec<C>> = Default::default();
        for i in 0..=imax {
            let r = rho.powu(i);
            for (a, ma) in mcoef.iter().enumerate() {
                let e = a as i32 + (i * p) as i32 - p as i32 - 1;
                let slot = g.entry(e).or_insert_with(|| vec![C::new(0.0, 0.0); nz * nz]);
                for (s, v) in slot.iter_mut().zip(ma) {
                    *s += r * v;
                }
            }
        }
        let log = g.remove(&-1).unwrap_or_else(|| vec![C::new(0.0, 0.0); nz * nz]);
        let (mut pos, mut neg) = (Vec::new(), Vec::new());
        for (e, m) in g {
            let a = e + 1;
            let blk: Vec<C> = m.into_iter().map(|v| v / a as f64).collect();
            let (list, idx) = if a > 0 { (&mut pos, a as usize - 1) } else { (&mut neg, (-a) as usize - 1) };
            if list.len() <= idx {
                list.resize(idx + 1, vec![C::new(0.0, 0.0); nz * nz]);
            }
            list[idx] = blk;
        }
        Ok(Cocycle { nz, rho, pos, neg, log })
    }

    /// `P(x)` as a row-major `nz × nz` block.
    pub fn primitive(&self, x: C) -> Vec<C> {
        let mut out = vec![C::new(0.0, 0.0); self.nz * self.nz];
        self.primitive_into(x, &mut out);
        out
    }

    pub fn primitive_into(&self, x: C, out: &mut [C]) {
        let lx = x.ln();
        let xi = x.inv();
        for (t, o) in out.iter_mut().enumerate() {
            let mut hp = C::new(0.0, 0.0);
            for blk in self.pos.iter().rev() {
                hp = (hp + blk[t]) * x;
            }
            let mut hn = C::new(0.0, 0.0);
            for blk in self.neg.iter().rev() {
                hn = (hn + blk[t]) * xi;
            }
            *o = self.log[t] * lx + hp + hn;
        }
    }

    /// `exp(P₁ − P₀)` for primitives computed by [`Cocycle::primitive_into`].
    pub fn ratio_from(&self, p0: &[C], p1: &[C], out: &mut [C]) {
        if self.nz == 1 {
            out[0] = (p1[0] - p0[0]).exp();
            return;
        }
        let d = Mat::from_fn(self.nz, self.nz, |i, j| p1[i * self.nz + j] - p0[i * self.nz + j]);
        let e = expm(&d);
        for (t, o) in out.iter_mut().enumerate() {
            *o = *e.get(t / self.nz, t % self.nz);
        }
    }

    /// `E(x)`; overflows for `x` deep inside a saddle sector, where only ratios are meaningful.
    pub fn e(&self, x: C) -> Mat<C> {
        let p = self.primitive(x);
        expm(&Mat::from_fn(self.nz, self.nz, |i, j| -p[i * self.nz + j]))
    }

    /// `E(x₀)E(x₁)^{-1}` as a row-major block.
    pub fn ratio(&self, x0: C, x1: C) -> Vec<C> {
        let (p0, p1) = (self.primitive(x0), self.primitive(x1));
        let mut out = vec![C::new(0.0, 0.0); self.nz * self.nz];
        self.ratio_from(&p0, &p1, &mut out);
        out
    }
}

/// Scaling and squaring with a degree-18 Taylor polynomial.
pub fn expm(a: &Mat<C>) -> Mat<C> {
    let n = a.rows();
    let norm = a.max_abs() * n as f64;
    let sq = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let s = a.scale(&C::new(0.5f64.powi(sq as i32), 0.0));
    let mut term = Mat::identity(n);
    let mut sum = Mat::identity(n);
    for k in 1..=18 {
        term = term.mul(&s).scale(&C::new(1.0 / k as f64, 0.0));
        sum = sum.add(&term);
    }
    for _ in 0..sq {
        sum = sum.mul(&sum);
    }
    sum
}
