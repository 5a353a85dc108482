use std::f64::consts::PI;

use num_complex::Complex64;
use smallvec::{smallvec, SmallVec};

use crate::classify::Sector;

type C = Complex64;

const STENCIL: usize = 8;
/// Barycentric weights of 8 equispaced nodes, `(−1)^j C(7, j)`.
const EQUI_WEIGHTS: [f64; STENCIL] = [1.0, -7.0, 21.0, -35.0, 35.0, -21.0, 7.0, -1.0];

/// Sample points of `S^m_{d,e,ε}` in the coordinates `(ln|x|, v, u)`, `v = Im x/(Re x)^{r+1}`, `u = w/|x|^{m−1}`.
///
/// Radii are geometric, `v` sits on Chebyshev points of `(−d, e)` and each `u`-component on a circle of
/// radius `ρ_w/√(s−1)`. Interpolation is barycentric: local 8-point stencils in `ln|x|` and `v`, global in `u`.
#[derive(Clone, Debug)]
pub struct GraphDomain {
    pub sector: Sector,
    pub m: u32,
    pub radii: Vec<f64>,
    pub vnodes: Vec<f64>,
    /// Circle nodes of one `u`-component.
    pub unodes: Vec<C>,
    pub dim_w: usize,
    lnr0: f64,
    h: f64,
    vweights: Vec<[f64; STENCIL]>,
    /// `(x, w)` for every grid index.
    pub points: Vec<(C, Vec<C>)>,
}

fn chebyshev(n: usize, a: f64, b: f64) -> Vec<f64> {
    let mut v: Vec<f64> =
        (0..n).map(|i| 0.5 * (a + b) + 0.5 * (b - a) * (PI * (2 * i + 1) as f64 / (2 * n) as f64).cos()).collect();
    v.reverse();
    v
}

fn stencil_weights(nodes: &[f64]) -> [f64; STENCIL] {
    let mut w = [1.0; STENCIL];
    for j in 0..STENCIL {
        for i in 0..STENCIL {
            if i != j {
                w[j] /= nodes[j] - nodes[i];
            }
        }
    }
    w
}

/// Barycentric evaluation weights at `t` for nodes with weights `bw`.
fn bary(t: f64, nodes: &[f64], bw: &[f64], out: &mut [f64]) {
    for (i, &n) in nodes.iter().enumerate() {
        if t == n {
            out.iter_mut().for_each(|o| *o = 0.0);
            out[i] = 1.0;
            return;
        }
    }
    let mut s = 0.0;
    for i in 0..nodes.len() {
        out[i] = bw[i] / (t - nodes[i]);
        s += out[i];
    }
    out.iter_mut().for_each(|o| *o /= s);
}

impl GraphDomain {
    pub fn new(sector: Sector, m: u32, dim_w: usize, nr: usize, nv: usize, nw: usize, r_min: f64) -> Self {
        assert!(nr >= STENCIL && nv >= STENCIL);
        let r_max = sector.eps * (1.0 - 1e-3);
        let lnr0 = r_min.ln();
        let h = (r_max.ln() - lnr0) / (nr - 1) as f64;
        let radii: Vec<f64> = (0..nr).map(|i| (lnr0 + h * i as f64).exp()).collect();
        let vnodes = chebyshev(nv, -sector.d, sector.e);
        let vweights = (0..=nv - STENCIL).map(|s| stencil_weights(&vnodes[s..s + STENCIL])).collect();
        let rho_w = 0.9 / (dim_w.max(1) as f64).sqrt();
        let unodes: Vec<C> = (0..nw).map(|k| C::from_polar(rho_w, 2.0 * PI * k as f64 / nw as f64)).collect();
        let mut dom = GraphDomain { sector, m, radii, vnodes, unodes, dim_w, lnr0, h, vweights, points: Vec::new() };
        let mut pts = Vec::with_capacity(dom.len());
        for ir in 0..nr {
            for iv in 0..nv {
                let x = dom.x_at(dom.radii[ir], dom.vnodes[iv]);
                let scale = x.norm().powi(m as i32 - 1);
                for iw in 0..dom.nw_total() {
                    let w = dom.u_at(iw).into_iter().map(|u| u * scale).collect();
                    pts.push((x, w));
                }
            }
        }
        dom.points = pts;
        dom
    }

    pub fn nw_total(&self) -> usize {
        self.unodes.len().pow(self.dim_w as u32)
    }

    pub fn ring_len(&self) -> usize {
        self.vnodes.len() * self.nw_total()
    }

    pub fn len(&self) -> usize {
        self.radii.len() * self.ring_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Ring of a grid index.
    pub fn ring(&self, idx: usize) -> usize {
        idx / self.ring_len()
    }

    fn u_at(&self, iw: usize) -> Vec<C> {
        let nw = self.unodes.len();
        (0..self.dim_w).map(|c| self.unodes[(iw / nw.pow(c as u32)) % nw]).collect()
    }

    /// The point with `|x| = rad` and `Im x = v (Re x)^{r+1}`.
    fn x_at(&self, rad: f64, v: f64) -> C {
        let r1 = self.sector.r as i32 + 1;
        let mut a = rad / (1.0 + v * v).sqrt();
        for _ in 0..60 {
            let g = a * a + v * v * a.powi(2 * r1) - rad * rad;
            let dg = 2.0 * a + 2.0 * r1 as f64 * v * v * a.powi(2 * r1 - 1);
            let step = g / dg;
            a -= step;
            if step.abs() <= 1e-17 * rad {
                break;
            }
        }
        C::new(a, v * a.powi(r1))
    }

    /// Interpolated value of a grid function with `nz` entries per point; zero below the innermost ring.
    ///
    /// `rings` limits the radial stencil to rings `< rings`.
    pub fn interp(&self, values: &[C], nz: usize, x: C, w: &[C], rings: usize, out: &mut [C]) {
        out.iter_mut().for_each(|o| *o = C::new(0.0, 0.0));
        let rad = x.norm();
        if nz == 0 || rad < self.radii[0] || rings < STENCIL {
            return;
        }
        let t = (rad.ln() - self.lnr0) / self.h;
        let r0 = ((t.floor() as i64) - 3).clamp(0, (rings - STENCIL) as i64) as usize;
        let rnodes: [f64; STENCIL] = std::array::from_fn(|i| (r0 + i) as f64);
        let mut rw = [0.0; STENCIL];
        bary(t, &rnodes, &EQUI_WEIGHTS, &mut rw);

        let v = x.im / x.re.powi(self.sector.r as i32 + 1);
        let pos = self.vnodes.partition_point(|&n| n < v) as i64;
        let v0 = (pos - 4).clamp(0, (self.vnodes.len() - STENCIL) as i64) as usize;
        let mut vw = [0.0; STENCIL];
        bary(v, &self.vnodes[v0..v0 + STENCIL], &self.vweights[v0], &mut vw);

        let nw = self.unodes.len();
        let ntot = self.nw_total();
        let mut ww: SmallVec<[C; 64]> = smallvec![C::new(1.0, 0.0); ntot];
        if self.dim_w > 0 {
            let scale = rad.powi(self.m as i32 - 1);
            let mut comp: SmallVec<[C; 16]> = smallvec![C::new(0.0, 0.0); nw];
            for c in 0..self.dim_w {
                let u = w[c] / scale;
                circle_weights(u, &self.unodes, &mut comp);
                let stride = nw.pow(c as u32);
                for (iw, v) in ww.iter_mut().enumerate() {
                    *v *= comp[(iw / stride) % nw];
                }
            }
        }
        let nv = self.vnodes.len();
        let mut acc: SmallVec<[C; 4]> = smallvec![C::new(0.0, 0.0); nz];
        for (a, &wr) in rw.iter().enumerate() {
            if wr == 0.0 {
                continue;
            }
            for (b, &wv) in vw.iter().enumerate() {
                let f = wr * wv;
                if f == 0.0 {
                    continue;
                }
                let base = ((r0 + a) * nv + v0 + b) * ntot * nz;
                let blk = &values[base..base + ntot * nz];
                if nz == 1 {
                    let s: C = ww.iter().zip(blk).map(|(g, v)| g * v).sum();
                    out[0] += s * f;
                } else {
                    acc.iter_mut().for_each(|v| *v = C::new(0.0, 0.0));
                    for (g, vals) in ww.iter().zip(blk.chunks_exact(nz)) {
                        for (o, v) in acc.iter_mut().zip(vals) {
                            *o += g * v;
                        }
                    }
                    for (o, v) in out.iter_mut().zip(&acc) {
                        *o += v * f;
                    }
                }
            }
        }
    }
}

/// Barycentric weights for nodes `ρω^k` on a circle; the nodal weights are proportional to the nodes.
fn circle_weights(u: C, nodes: &[C], out: &mut [C]) {
    for (i, n) in nodes.iter().enumerate() {
        if u == *n {
            out.iter_mut().for_each(|o| *o = C::new(0.0, 0.0));
            out[i] = C::new(1.0, 0.0);
            return;
        }
    }
    let mut s = C::new(0.0, 0.0);
    for (o, n) in out.iter_mut().zip(nodes) {
        *o = n / (u - n);
        s += *o;
    }
    out.iter_mut().for_each(|o| *o /= s);
}
