//! Stable manifolds along an attracting direction: the graph operator `T`, its fixed point, and orbit tests.

mod cocycle;
mod grid;
mod orbit;
mod solve;

use num_complex::Complex64;
use smallvec::{smallvec, SmallVec};

use crate::classify::{
    block_partition, classify_direction, dominant_constant, synthesize_sector, ClassifyError, Direction,
    PartitionedForm, Sector, SectorParams,
};
use crate::dynamics::{CurveParam, DiffeoJet, DynError};
use crate::jets::{Coeff, Jet, JetError, Mat};
use crate::rspipeline::RSDiffeo;

pub use cocycle::{expm, Cocycle};
pub use grid::GraphDomain;
pub use orbit::{
    iterate_on_graph, iterate_orbit, membership_and_asymptoticity, MembershipReport, OrbitOptions, OrbitTrace,
};
pub use solve::{apply_t, solve_stable_graph, Diagnostics, SolveOptions, StableGraph};

type C = Complex64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ManifoldError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Dyn(#[from] DynError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error("x = {0} is outside the sector or on the branch cut")]
    OutsideSector(C),
    #[error("orbit left the domain at step {step}: {detail}")]
    LeftDomain { step: usize, detail: String },
    #[error("series not converged after {steps} steps (tail estimate {tail:.3e})")]
    SeriesCap { steps: usize, tail: f64 },
    #[error("Picard iteration not converged after {sweeps} sweeps: Δ = {delta:.3e}, contraction ≈ {rate:.3}")]
    NoConvergence { sweeps: usize, delta: f64, rate: f64 },
    #[error("invariant graph is resonant at degree {0}")]
    Resonant(u32),
    #[error("shape mismatch: {0}")]
    Shape(String),
}

/// A map that can be evaluated at points.
pub trait PointMap: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, p: &[C]) -> Vec<C>;
}

/// Polynomial map with precomputed term lists.
#[derive(Clone, Debug)]
pub struct FastMap {
    n: usize,
    comps: Vec<Vec<(Vec<u16>, C)>>,
    maxdeg: Vec<usize>,
}

impl FastMap {
    pub fn new(map: &DiffeoJet<C>) -> Self {
        let n = map.dim();
        let mut maxdeg = vec![0usize; n];
        let comps = map
            .components()
            .iter()
            .map(|j| {
                j.terms()
                    .map(|(e, c)| {
                        for (i, &k) in e.iter().enumerate() {
                            maxdeg[i] = maxdeg[i].max(k as usize);
                        }
                        (e.to_vec(), *c)
                    })
                    .collect()
            })
            .collect();
        FastMap { n, comps, maxdeg }
    }

    pub fn eval_into(&self, p: &[C], out: &mut [C]) {
        let stride = self.maxdeg.iter().max().map_or(1, |d| d + 1);
        let mut pw: SmallVec<[C; 64]> = smallvec![C::new(1.0, 0.0); self.n * stride];
        for i in 0..self.n {
            for k in 1..=self.maxdeg[i] {
                pw[i * stride + k] = pw[i * stride + k - 1] * p[i];
            }
        }
        for (o, terms) in out.iter_mut().zip(&self.comps) {
            let mut s = C::new(0.0, 0.0);
            for (e, c) in terms {
                let mut t = *c;
                for (i, &k) in e.iter().enumerate() {
                    if k > 0 {
                        t *= pw[i * stride + k as usize];
                    }
                }
                s += t;
            }
            *o = s;
        }
    }
}

impl PointMap for FastMap {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, p: &[C]) -> Vec<C> {
        let mut out = vec![C::new(0.0, 0.0); self.n];
        self.eval_into(p, &mut out);
        out
    }
}

/// Formal invariant graph `y = γ̄(x)` of `F`, solved degree by degree when `∂F̄/∂y(0) − I` is invertible.
pub fn invariant_graph(map: &DiffeoJet<C>, order: u32) -> Result<CurveParam<C>, ManifoldError> {
    let n = map.dim();
    let lin = map.linear_part();
    let m = n - 1;
    let a = Mat::from_fn(m, m, |i, j| lin.get(i + 1, j + 1) - if i == j { 1.0 } else { 0.0 });
    let ainv = a.inverse().ok_or(ManifoldError::Resonant(1))?;
    let x = Jet::var(1, order, 0);
    let mut g: Vec<Jet<C>> = vec![Jet::zero(1, order); m];
    for deg in 1..=order {
        let mut inner = vec![x.clone()];
        inner.extend(g.iter().cloned());
        let fx = map.component(0).compose(&inner)?;
        let r: Vec<C> = (0..m)
            .map(|i| -> Result<C, JetError> {
                let lhs = map.component(i + 1).compose(&inner)?;
                let rhs = g[i].compose(&[fx.clone()])?;
                Ok(lhs.uc(deg) - rhs.uc(deg))
            })
            .collect::<Result<_, _>>()?;
        let delta = ainv.mul_vec(&r);
        for i in 0..m {
            let t = Jet::monomial(1, order, &[deg as u16], -delta[i]);
            g[i] = g[i].add(&t)?;
        }
    }
    Ok(CurveParam::graph(g, order)?)
}

/// `F` in the coordinates `ỹ = y − h(x)`.
pub fn straighten(map: &DiffeoJet<C>, h: &[Jet<C>]) -> Result<DiffeoJet<C>, ManifoldError> {
    let n = map.dim();
    let order = map.order();
    let mut inner = vec![Jet::var(n, order, 0)];
    for (i, hi) in h.iter().enumerate() {
        let lifted = hi.with_order(order).compose(&[Jet::var(n, order, 0)])?;
        inner.push(Jet::var(n, order, i + 1).add(&lifted)?);
    }
    let fx = map.component(0).compose(&inner)?;
    let mut comps = vec![fx.clone()];
    for (i, hi) in h.iter().enumerate() {
        let yi = map.component(i + 1).compose(&inner)?;
        let back = hi.with_order(order).compose(&[fx.clone()])?;
        comps.push(yi.sub(&back)?);
    }
    Ok(DiffeoJet::new(comps)?)
}

/// A partitioned form with its graph domain data, in coordinates where `Γ` is flat to order `p + m − 1`.
#[derive(Clone, Debug)]
pub struct StableProblem {
    pub k: u32,
    pub p: u32,
    pub m: u32,
    /// `1 + dim w`.
    pub s: usize,
    pub n: usize,
    pub sector: Sector,
    /// `J_{p+m−1} γ̄` in the partitioned frame.
    pub shift: Vec<Jet<C>>,
    pub curve: CurveParam<C>,
    pub map: DiffeoJet<C>,
    pub fast: FastMap,
    pub cocycle: Cocycle,
}

impl StableProblem {
    pub fn new(part: &PartitionedForm, params: &SectorParams, m: u32) -> Result<Self, ManifoldError> {
        let f = &part.form;
        if m < f.p + 2 {
            return Err(ManifoldError::Shape(format!("m = {m} < p + 2 = {}", f.p + 2)));
        }
        let n = f.map.dim();
        let cut = f.p + m - 1;
        let shift: Vec<Jet<C>> = part.form.curve.graph_functions()?.iter().map(|h| h.truncate(cut)).collect();
        let map = straighten(&f.map, &shift)?;
        let cocycle = Cocycle::new(f.k, f.p, f.b, &part.d2_bar(), &part.c2(), params.sector.eps)?;
        Ok(StableProblem {
            k: f.k,
            p: f.p,
            m,
            s: part.s,
            n,
            sector: params.sector,
            shift,
            curve: f.curve.clone(),
            fast: FastMap::new(&map),
            map,
            cocycle,
        })
    }

    pub fn nz(&self) -> usize {
        self.n - self.s
    }

    /// Working coordinates to the partitioned frame.
    pub fn to_frame(&self, p: &[C]) -> Vec<C> {
        let mut out = p.to_vec();
        for (i, h) in self.shift.iter().enumerate() {
            out[i + 1] += h.eval_c64(&[p[0]]);
        }
        out
    }

    pub fn from_frame(&self, p: &[C]) -> Vec<C> {
        let mut out = p.to_vec();
        for (i, h) in self.shift.iter().enumerate() {
            out[i + 1] -= h.eval_c64(&[p[0]]);
        }
        out
    }

    /// `(x, w)` lies in `S^m_{d,e,ε}`.
    pub fn in_domain(&self, x: C, w: &[C]) -> bool {
        let wn = w.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        self.sector.contains(x) && wn < x.norm().powi(self.m as i32 - 1)
    }
}

/// Classifies `form` along `dir`, partitions it, certifies a sector and sets up the graph problem for `m`.
pub fn prepare<K: Coeff>(
    form: &RSDiffeo<K>,
    dir: Direction,
    m: u32,
) -> Result<(PartitionedForm, SectorParams, StableProblem), ManifoldError> {
    let report = classify_direction(form, dir)?;
    let frame = dir.frame(form);
    let part = block_partition(&frame, &report, dominant_constant(&frame, &report))?;
    let params = synthesize_sector(&part)?;
    let prob = StableProblem::new(&part, &params, m)?;
    Ok((part, params, prob))
}
