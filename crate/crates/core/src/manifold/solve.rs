use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use super::{GraphDomain, ManifoldError, StableProblem};

type C = Complex64;

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub nr: usize,
    pub nv: usize,
    pub nw: usize,
    /// Innermost radius; defaults to `max(tol^{1/m}, 1e-4 ε)`.
    pub r_min: Option<f64>,
    /// Step cap for a single orbit sum.
    pub max_steps: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: 1e-10, max_iter: 200, nr: 64, nv: 64, nw: 8, r_min: None, max_steps: 2_000_000 }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    pub sweeps: usize,
    /// Sup-norm change per sweep.
    pub deltas: Vec<f64>,
    pub residual: f64,
    /// Sweeps' clamp counts against `‖φ‖ ≤ |x|^{m−1}`.
    pub clamps: Vec<usize>,
    /// `sup ‖φ‖ / |x|^{m−1}` for the final iterate.
    pub sup_ratio: f64,
    pub rate: f64,
    pub steps: usize,
}

impl Diagnostics {
    pub fn to_json(&self) -> Value {
        json!({
            "sweeps": self.sweeps,
            "deltas": self.deltas,
            "residual": self.residual,
            "clamps": self.clamps,
            "sup_ratio": self.sup_ratio,
            "contraction_rate": self.rate,
            "orbit_steps_last_sweep": self.steps,
        })
    }
}

/// Fixed point `z = φ(x, w)` of `T` sampled on a [`GraphDomain`].
#[derive(Clone, Debug)]
pub struct StableGraph {
    pub domain: GraphDomain,
    pub nz: usize,
    pub values: Vec<C>,
    pub diagnostics: Diagnostics,
}

impl StableGraph {
    pub fn eval(&self, x: C, w: &[C]) -> Vec<C> {
        let mut out = vec![C::new(0.0, 0.0); self.nz];
        self.domain.interp(&self.values, self.nz, x, w, self.domain.radii.len(), &mut out);
        out
    }

    /// `sup ‖φ(f_φ, F̄_{1,φ}) − F̄₂(·, φ)‖` over the grid.
    pub fn residual(&self, prob: &StableProblem) -> f64 {
        let s = prob.s;
        (0..self.domain.len())
            .into_par_iter()
            .map(|idx| {
                let (x, w) = &self.domain.points[idx];
                let z = &self.values[idx * self.nz..(idx + 1) * self.nz];
                let mut pt = vec![*x];
                pt.extend_from_slice(w);
                pt.extend_from_slice(z);
                let mut next = vec![C::new(0.0, 0.0); prob.n];
                prob.fast.eval_into(&pt, &mut next);
                let phi = self.eval(next[0], &next[1..s]);
                phi.iter().zip(&next[s..]).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
            })
            .reduce(|| 0.0, f64::max)
    }

    /// CSV rows `x_re, x_im, w…, φ…`.
    pub fn to_csv(&self) -> String {
        let dw = self.domain.dim_w;
        let mut s = String::from("x_re,x_im");
        for i in 0..dw {
            s += &format!(",w{i}_re,w{i}_im");
        }
        for i in 0..self.nz {
            s += &format!(",phi{i}_re,phi{i}_im");
        }
        s.push('\n');
        for (idx, (x, w)) in self.domain.points.iter().enumerate() {
            s += &format!("{:.12e},{:.12e}", x.re, x.im);
            for v in w {
                s += &format!(",{:.12e},{:.12e}", v.re, v.im);
            }
            for v in &self.values[idx * self.nz..(idx + 1) * self.nz] {
                s += &format!(",{:.12e},{:.12e}", v.re, v.im);
            }
            s.push('\n');
        }
        s
    }
}

struct Walk {
    sum: Vec<C>,
    /// Accumulated cocycle `E(x₀)E(x_J)^{-1}`.
    acc: Vec<C>,
    x: C,
    w: Vec<C>,
    steps: usize,
}

/// Sums `E(x₀)E(x_j)^{-1} H(x_j, w_j, φ(x_j, w_j))` along the `φ`-orbit until `stop(x_j, tail)` holds.
fn walk(
    prob: &StableProblem,
    dom: &GraphDomain,
    phi: &[C],
    x0: C,
    w0: &[C],
    max_steps: usize,
    stop: impl Fn(C, f64, usize) -> bool,
) -> Result<Walk, ManifoldError> {
    let (s, nz, n) = (prob.s, prob.nz(), prob.n);
    let l = (prob.k + prob.p + prob.m) as i32;
    let mut acc = vec![C::new(0.0, 0.0); nz * nz];
    for i in 0..nz {
        acc[i * nz + i] = C::new(1.0, 0.0);
    }
    let mut sum = vec![C::new(0.0, 0.0); nz];
    let (mut x, mut w) = (x0, w0.to_vec());
    let mut pt = vec![C::new(0.0, 0.0); n];
    let mut next = vec![C::new(0.0, 0.0); n];
    let mut zj = vec![C::new(0.0, 0.0); nz];
    let mut hmax: f64 = 0.0;
    let rings = dom.radii.len();
    let mut pcur = prob.cocycle.primitive(x0);
    let mut pnext = pcur.clone();
    let mut fac = vec![C::new(0.0, 0.0); nz * nz];
    for step in 0..max_steps {
        let tail = hmax * x.norm().powi(prob.m as i32) / prob.m as f64;
        if stop(x, tail, step) {
            return Ok(Walk { sum, acc, x, w, steps: step });
        }
        if !prob.in_domain(x, &w) {
            return Err(ManifoldError::LeftDomain { step, detail: format!("x = {x:.6e}") });
        }
        dom.interp(phi, nz, x, &w, rings, &mut zj);
        pt[0] = x;
        pt[1..s].copy_from_slice(&w);
        pt[s..].copy_from_slice(&zj);
        prob.fast.eval_into(&pt, &mut next);
        prob.cocycle.primitive_into(next[0], &mut pnext);
        prob.cocycle.ratio_from(&pcur, &pnext, &mut fac);
        std::mem::swap(&mut pcur, &mut pnext);
        let mut hn = 0.0;
        for i in 0..nz {
            let mut h = zj[i];
            for j in 0..nz {
                h -= fac[i * nz + j] * next[s + j];
            }
            hn += h.norm_sqr();
            for (r, a) in sum.iter_mut().enumerate() {
                *a += acc[r * nz + i] * h;
            }
        }
        hmax = hmax.max(hn.sqrt() / x.norm().powi(l));
        acc = matmul(&acc, &fac, nz);
        x = next[0];
        w.copy_from_slice(&next[1..s]);
    }
    let tail = hmax * x.norm().powi(prob.m as i32) / prob.m as f64;
    Err(ManifoldError::SeriesCap { steps: max_steps, tail })
}

fn matmul(a: &[C], b: &[C], n: usize) -> Vec<C> {
    if n == 1 {
        return vec![a[0] * b[0]];
    }
    let mut out = vec![C::new(0.0, 0.0); n * n];
    for i in 0..n {
        for k in 0..n {
            let v = a[i * n + k];
            for j in 0..n {
                out[i * n + j] += v * b[k * n + j];
            }
        }
    }
    out
}

/// `Tφ(x₀, w₀)` by direct summation, cut when the estimated tail `sup|H|/|x|^{k+p+m} · |x_j|^m / m` drops
/// below `tol/10`.
pub fn apply_t(
    prob: &StableProblem,
    graph: &StableGraph,
    x0: C,
    w0: &[C],
    tol: f64,
    max_steps: usize,
) -> Result<Vec<C>, ManifoldError> {
    let stop = |_x: C, tail: f64, step: usize| step > 0 && tail < 0.1 * tol;
    Ok(walk(prob, &graph.domain, &graph.values, x0, w0, max_steps, stop)?.sum)
}

fn clamp(v: &mut [C], bound: f64) -> bool {
    let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if nrm > bound {
        let f = bound / nrm;
        v.iter_mut().for_each(|z| *z *= f);
        true
    } else {
        false
    }
}

/// One application of `T` on every grid point, marching outward from the innermost ring.
///
/// For ring `i ≥ 8` the orbit is followed until it passes ring `i − 2`, and the remainder of the series is
/// `E(x₀)E(x_J)^{-1} (Tφ)(x_J, w_J)`, interpolated from the rings already computed in this sweep. Inner rings
/// sum down past the grid, where `φ` is extended by zero.
fn sweep(
    prob: &StableProblem,
    dom: &GraphDomain,
    phi: &[C],
    opts: &SolveOptions,
) -> Result<(Vec<C>, usize, usize), ManifoldError> {
    let nz = prob.nz();
    let ring_len = dom.ring_len();
    let mut out = vec![C::new(0.0, 0.0); phi.len()];
    let mut clamps = 0;
    let mut steps = 0;
    for ring in 0..dom.radii.len() {
        let target = if ring >= 8 { dom.radii[ring - 2] } else { dom.radii[0] };
        let done = &out;
        let vals: Vec<(Vec<C>, bool, usize)> = (ring * ring_len..(ring + 1) * ring_len)
            .into_par_iter()
            .map(|idx| {
                let (x0, w0) = &dom.points[idx];
                let wk = walk(prob, dom, phi, *x0, w0, opts.max_steps, |x, _, _| x.norm() < target)?;
                let mut v = wk.sum;
                if ring >= 8 {
                    let mut rest = vec![C::new(0.0, 0.0); nz];
                    dom.interp(done, nz, wk.x, &wk.w, ring, &mut rest);
                    for i in 0..nz {
                        for j in 0..nz {
                            v[i] += wk.acc[i * nz + j] * rest[j];
                        }
                    }
                }
                let hit = clamp(&mut v, x0.norm().powi(prob.m as i32 - 1));
                Ok((v, hit, wk.steps))
            })
            .collect::<Result<_, ManifoldError>>()?;
        for (k, (v, hit, st)) in vals.into_iter().enumerate() {
            let idx = ring * ring_len + k;
            out[idx * nz..(idx + 1) * nz].copy_from_slice(&v);
            clamps += hit as usize;
            steps += st;
        }
    }
    Ok((out, clamps, steps))
}

/// Picard iteration `φ ← Tφ` from `φ ≡ 0`.
pub fn solve_stable_graph(prob: &StableProblem, opts: &SolveOptions) -> Result<StableGraph, ManifoldError> {
    let nz = prob.nz();
    let r_min = opts.r_min.unwrap_or_else(|| opts.tol.powf(1.0 / prob.m as f64).max(prob.sector.eps * 1e-4));
    let dom = GraphDomain::new(prob.sector, prob.m, prob.s - 1, opts.nr, opts.nv, opts.nw, r_min);
    let mut phi = vec![C::new(0.0, 0.0); dom.len() * nz];
    let mut diag = Diagnostics::default();
    if nz > 0 {
        loop {
            let (next, clamps, steps) = sweep(prob, &dom, &phi, opts)?;
            let delta = next.iter().zip(&phi).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            phi = next;
            diag.sweeps += 1;
            diag.deltas.push(delta);
            diag.clamps.push(clamps);
            diag.steps = steps;
            let k = diag.deltas.len();
            if k >= 2 && diag.deltas[k - 2] > 0.0 {
                diag.rate = delta / diag.deltas[k - 2];
            }
            if delta < opts.tol {
                break;
            }
            if diag.sweeps >= opts.max_iter {
                return Err(ManifoldError::NoConvergence { sweeps: diag.sweeps, delta, rate: diag.rate });
            }
        }
    }
    let mut graph = StableGraph { domain: dom, nz, values: phi, diagnostics: diag };
    graph.diagnostics.sup_ratio = graph
        .domain
        .points
        .iter()
        .enumerate()
        .map(|(i, (x, _))| {
            let v = &graph.values[i * nz..(i + 1) * nz];
            v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() / x.norm().powi(prob.m as i32 - 1)
        })
        .fold(0.0, f64::max);
    graph.diagnostics.residual = if nz > 0 { graph.residual(prob) } else { 0.0 };
    Ok(graph)
}
