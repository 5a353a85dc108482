//! Formal reduction of linear systems `x^{s+1} w' = Λ(x) w` to Ramis–Sibuya linear form.

use serde_json::{json, Value};

use crate::jets::json::{mat_from_value, mat_to_value, polymatrix_from_value, polymatrix_to_value};
use crate::jets::{solve_sylvester, Coeff, JetError, Mat, PolyMatrix};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TurrittinError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("matrix is not square")]
    NotSquare,
    #[error("leading matrix has a single eigenvalue")]
    SingleEigenvalue,
    #[error("eigenvalues of {0} are not Gaussian rationals")]
    Irrational(String),
    #[error("transformation produces a pole")]
    Pole,
    #[error("working order exhausted: need {needed}, have {available}")]
    OrderExhausted { needed: u32, available: u32 },
    #[error("singular gauge or Sylvester system")]
    Singular,
    #[error("degenerate system: {0}")]
    Degenerate(String),
    #[error("reduction did not stabilize after {0} steps")]
    NoConvergence(usize),
    #[error("malformed input: {0}")]
    Input(String),
}

/// `x^{s+1} w' = Λ(x) w`.
#[derive(Clone, PartialEq, Debug)]
pub struct LinearSystem<K: Coeff> {
    pub s: u32,
    pub lambda: PolyMatrix<K>,
}

impl<K: Coeff> LinearSystem<K> {
    pub fn new(s: u32, lambda: PolyMatrix<K>) -> Result<Self, TurrittinError> {
        if lambda.rows() != lambda.cols() {
            return Err(TurrittinError::NotSquare);
        }
        Ok(LinearSystem { s, lambda })
    }
    pub fn dim(&self) -> usize {
        self.lambda.rows()
    }
    pub fn order(&self) -> u32 {
        self.lambda.order()
    }

    /// `w = P(x) w̃`.
    pub fn gauge(&self, p: &PolyMatrix<K>) -> Result<Self, TurrittinError> {
        let n = self.order().min(p.order());
        let p = p.truncate(n);
        let pinv = p.inverse().ok_or(TurrittinError::Singular)?;
        let dp = p.derive().pad(n).shift_up(self.s + 1);
        let lam = pinv.mul(&self.lambda.truncate(n).mul(&p).sub(&dp));
        Ok(LinearSystem { s: self.s, lambda: lam })
    }

    /// `w = diag(x^{k_i}) w̃`.
    pub fn shear(&self, k: &[u32]) -> Result<Self, TurrittinError> {
        let m = self.dim();
        if k.len() != m {
            return Err(TurrittinError::Input("shear exponent length".into()));
        }
        let (kmin, kmax) = (*k.iter().min().unwrap_or(&0), *k.iter().max().unwrap_or(&0));
        let spread = kmax - kmin;
        if spread > self.order() {
            return Err(TurrittinError::OrderExhausted { needed: spread, available: self.order() });
        }
        let order = self.order() - spread;
        let mut out = PolyMatrix::zeros(m, m, order);
        for (e, c) in self.lambda.coeffs().iter().enumerate() {
            for a in 0..m {
                for b in 0..m {
                    let v = c.get(a, b);
                    if v.is_zero() {
                        continue;
                    }
                    let ne = e as i64 + k[b] as i64 - k[a] as i64;
                    if ne < 0 {
                        return Err(TurrittinError::Pole);
                    }
                    if ne as u32 <= order {
                        let mut cm = out.coeff(ne as u32);
                        cm.set(a, b, v.clone());
                        out.set_coeff(ne as u32, cm);
                    }
                }
            }
        }
        if self.s <= order {
            let mut cm = out.coeff(self.s);
            for a in 0..m {
                let v = cm.get(a, a).sub_ref(&K::from_i64(k[a] as i64));
                cm.set(a, a, v);
            }
            out.set_coeff(self.s, cm);
        }
        Ok(LinearSystem { s: self.s, lambda: out })
    }

    /// `x = t^α`.
    pub fn ramify(&self, alpha: u32) -> Self {
        let order = alpha * (self.order() + 1) - 1;
        let lam = self.lambda.ramify(alpha).pad(order).scale(&K::from_i64(alpha as i64));
        LinearSystem { s: alpha * self.s, lambda: lam }
    }

    /// Divide the equation by `x^g`.
    pub fn reduce_rank(&self, g: u32) -> Result<Self, TurrittinError> {
        if g > self.s {
            return Err(TurrittinError::Input(format!("cannot lower rank {} by {g}", self.s)));
        }
        let lam = self.lambda.shift_down(g).ok_or(TurrittinError::Pole)?;
        Ok(LinearSystem { s: self.s - g, lambda: lam })
    }

    pub fn apply(&self, step: &Step<K>) -> Result<Self, TurrittinError> {
        match step {
            Step::Gauge(p) => self.gauge(p),
            Step::Shear(k) => self.shear(k),
            Step::Ramify(a) => Ok(self.ramify(*a)),
            Step::ReduceRank(g) => self.reduce_rank(*g),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({"kind": "linear-system", "s": self.s, "dim": self.dim(), "lambda": polymatrix_to_value(&self.lambda)})
    }

    pub fn from_json(v: &Value) -> Result<Self, TurrittinError> {
        let s = v.get("s").and_then(|s| s.as_u64()).ok_or_else(|| TurrittinError::Input("missing s".into()))?;
        let lam = polymatrix_from_value(v.get("lambda").ok_or_else(|| TurrittinError::Input("missing lambda".into()))?)?;
        Self::new(s as u32, lam)
    }
}

/// One T-transformation.
#[derive(Clone, PartialEq, Debug)]
pub enum Step<K: Coeff> {
    Gauge(PolyMatrix<K>),
    Shear(Vec<u32>),
    Ramify(u32),
    ReduceRank(u32),
}

impl<K: Coeff> Step<K> {
    pub fn to_json(&self) -> Value {
        match self {
            Step::Gauge(p) => json!({"op": "gauge", "p": polymatrix_to_value(p)}),
            Step::Shear(k) => json!({"op": "shear", "k": k}),
            Step::Ramify(a) => json!({"op": "ramify", "alpha": a}),
            Step::ReduceRank(g) => json!({"op": "reduce-rank", "g": g}),
        }
    }
    pub fn from_json(v: &Value) -> Result<Self, TurrittinError> {
        let bad = |m: &str| TurrittinError::Input(m.to_string());
        let uint = |k: &str| v.get(k).and_then(|x| x.as_u64()).map(|x| x as u32).ok_or_else(|| bad(k));
        match v.get("op").and_then(|o| o.as_str()).ok_or_else(|| bad("op"))? {
            "gauge" => Ok(Step::Gauge(polymatrix_from_value(v.get("p").ok_or_else(|| bad("p"))?)?)),
            "shear" => Ok(Step::Shear(
                v.get("k")
                    .and_then(|k| k.as_array())
                    .ok_or_else(|| bad("k"))?
                    .iter()
                    .map(|x| x.as_u64().map(|x| x as u32).ok_or_else(|| bad("k")))
                    .collect::<Result<_, _>>()?,
            )),
            "ramify" => {
                let a = uint("alpha")?;
                if a == 0 {
                    return Err(bad("alpha must be positive"));
                }
                Ok(Step::Ramify(a))
            }
            "reduce-rank" => Ok(Step::ReduceRank(uint("g")?)),
            other => Err(bad(&format!("unknown op {other}"))),
        }
    }
}

/// Ordered list of T-transformations.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct GaugeCertificate<K: Coeff> {
    pub steps: Vec<Step<K>>,
}

impl<K: Coeff> GaugeCertificate<K> {
    pub fn replay(&self, sys: &LinearSystem<K>) -> Result<LinearSystem<K>, TurrittinError> {
        let mut cur = sys.clone();
        for s in &self.steps {
            cur = cur.apply(s)?;
        }
        Ok(cur)
    }
    /// Product of all ramification indices.
    pub fn ramification(&self) -> u32 {
        self.steps.iter().map(|s| if let Step::Ramify(a) = s { *a } else { 1 }).product()
    }
    pub fn to_json(&self) -> Value {
        json!({"kind": "certificate", "steps": self.steps.iter().map(|s| s.to_json()).collect::<Vec<_>>()})
    }
    pub fn from_json(v: &Value) -> Result<Self, TurrittinError> {
        let arr = v.get("steps").and_then(|s| s.as_array()).ok_or_else(|| TurrittinError::Input("missing steps".into()))?;
        Ok(GaugeCertificate { steps: arr.iter().map(Step::from_json).collect::<Result<_, _>>()? })
    }
}

/// `x^{p+1} w' = (D̄(x) + x^p C̄ + x^{p+1}(…)) w`.
#[derive(Clone, PartialEq, Debug)]
pub struct RSLinearForm<K: Coeff> {
    pub p: u32,
    /// Coefficients `d_i0..d_i,p−1` of each diagonal entry.
    pub d: Vec<Vec<K>>,
    pub c: Mat<K>,
    pub remainder: PolyMatrix<K>,
}

impl<K: Coeff> RSLinearForm<K> {
    pub fn dim(&self) -> usize {
        self.c.rows()
    }

    pub fn d_matrix(&self, order: u32) -> PolyMatrix<K> {
        let m = self.dim();
        let mut out = PolyMatrix::zeros(m, m, order);
        for k in 0..self.p.min(order + 1) {
            out.set_coeff(k, Mat::diag(&self.d.iter().map(|di| di[k as usize].clone()).collect::<Vec<_>>()));
        }
        out
    }

    pub fn system(&self) -> LinearSystem<K> {
        let order = self.remainder.order();
        let mut lam = self.d_matrix(order).add(&self.remainder);
        if self.p <= order {
            lam.set_coeff(self.p, lam.coeff(self.p).add(&self.c));
        }
        LinearSystem { s: self.p, lambda: lam }
    }

    /// Checks the defining invariants; returns the first violation.
    pub fn validate(&self) -> Result<(), String> {
        let m = self.dim();
        let p = self.p as usize;
        if self.d.len() != m || self.d.iter().any(|di| di.len() != p) {
            return Err("diagonal data has the wrong shape".into());
        }
        if p == 0 {
            if self.c.is_zero() {
                return Err("p = 0 with C = 0".into());
            }
        } else if self.d.iter().all(|di| di[0].is_zero()) {
            return Err("D(0) = 0".into());
        }
        for i in 0..m {
            for j in 0..m {
                if i != j && !self.c.get(i, j).is_zero() && self.d[i] != self.d[j] {
                    return Err(format!("[D, C] ≠ 0 at ({i}, {j})"));
                }
            }
        }
        if self.remainder.order() < self.p + 1 {
            return Err("remainder truncated below p + 1".into());
        }
        if (0..=self.p).any(|k| !self.remainder.coeff(k).is_zero()) {
            return Err("remainder has terms of order ≤ p".into());
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        json!({
            "kind": "rs-linear",
            "p": self.p,
            "d": self.d.iter().map(|di| di.iter().map(|c| { let (re, im) = c.json_parts(); json!({"re": re, "im": im}) }).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "c": mat_to_value(&self.c),
            "remainder": polymatrix_to_value(&self.remainder),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self, TurrittinError> {
        let bad = |m: &str| TurrittinError::Input(m.to_string());
        let p = v.get("p").and_then(|p| p.as_u64()).ok_or_else(|| bad("p"))? as u32;
        let d = v
            .get("d")
            .and_then(|d| d.as_array())
            .ok_or_else(|| bad("d"))?
            .iter()
            .map(|row| {
                row.as_array()
                    .ok_or_else(|| bad("d"))?
                    .iter()
                    .map(|c| {
                        let part = |k: &str| c.get(k).and_then(|x| x.as_str()).unwrap_or("0").to_string();
                        K::parse_parts(&part("re"), &part("im")).map_err(TurrittinError::from)
                    })
                    .collect::<Result<Vec<K>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        let c = mat_from_value(v.get("c").ok_or_else(|| bad("c"))?)?;
        let remainder = polymatrix_from_value(v.get("remainder").ok_or_else(|| bad("remainder"))?)?;
        Ok(RSLinearForm { p, d, c, remainder })
    }
}

/// Output of [`reduce_linear_system`].
#[derive(Clone, Debug)]
pub struct Reduction<K: Coeff> {
    pub form: RSLinearForm<K>,
    pub certificate: GaugeCertificate<K>,
    /// Poincaré rank before and after every automatic shearing, in the current variable.
    pub rank_trace: Vec<(u32, u32)>,
}

impl<K: Coeff> Reduction<K> {
    pub fn to_json(&self) -> Value {
        json!({
            "form": self.form.to_json(),
            "certificate": self.certificate.to_json(),
            "ramification": self.certificate.ramification(),
            "rank_trace": self.rank_trace,
        })
    }
}

/// Largest coefficient of `replay(input) − output` on the common truncation.
pub fn replay_residual<K: Coeff>(
    input: &LinearSystem<K>,
    cert: &GaugeCertificate<K>,
    output: &LinearSystem<K>,
) -> Result<f64, TurrittinError> {
    let r = cert.replay(input)?;
    if r.s != output.s || r.dim() != output.dim() {
        return Ok(f64::INFINITY);
    }
    let n = r.order().min(output.order());
    let d = r.lambda.truncate(n).sub(&output.lambda.truncate(n));
    Ok(if K::EXACT && d.is_zero() { 0.0 } else { d.max_abs() })
}

fn factorial(m: usize) -> u32 {
    (1..=m as u32).product::<u32>().max(1)
}

/// Input truncation demanded by [`reduce_linear_system`].
pub fn required_order(s: u32, m: usize) -> u32 {
    let a = factorial(m);
    (s + 1) * m as u32 * a + s * a + 2
}

/// Full reduction with the up-front truncation check.
pub fn reduce_linear_system<K: Coeff>(sys: &LinearSystem<K>) -> Result<Reduction<K>, TurrittinError> {
    let needed = required_order(sys.s, sys.dim());
    if sys.order() < needed {
        return Err(TurrittinError::OrderExhausted { needed, available: sys.order() });
    }
    reduce_with_available_order(sys)
}

/// Reduction that only fails when the truncation actually runs out.
pub fn reduce_with_available_order<K: Coeff>(sys: &LinearSystem<K>) -> Result<Reduction<K>, TurrittinError> {
    let mut d = Driver { sys: sys.clone(), steps: Vec::new(), blocks: vec![(0, sys.dim())], rank_trace: Vec::new() };
    d.normalize_rank()?;
    for _ in 0..MAX_STEPS {
        let s = d.sys.s;
        let pending = (0..d.blocks.len()).find_map(|b| {
            let (lv, prime) = d.block_level(b);
            (lv < s).then_some((b, lv, prime))
        });
        let Some((b, v, prime)) = pending else {
            return d.finish();
        };
        let mlead = prime.coeff(v);
        let eig = mlead.eigenvalues().ok_or_else(|| TurrittinError::Irrational(format!("{mlead:?}")))?;
        if eig.len() >= 2 {
            d.split(b, v, &eig)?;
        } else {
            d.nilpotent_step(b, v)?;
        }
    }
    Err(TurrittinError::NoConvergence(MAX_STEPS))
}

/// Block-diagonalize along the generalized eigenspaces of `Λ(0)`.
pub fn split_blocks<K: Coeff>(sys: &LinearSystem<K>) -> Result<(LinearSystem<K>, GaugeCertificate<K>, Vec<usize>), TurrittinError> {
    if sys.s == 0 {
        return Err(TurrittinError::Input("splitting needs positive rank".into()));
    }
    let l0 = sys.lambda.coeff(0);
    let eig = l0.eigenvalues().ok_or_else(|| TurrittinError::Irrational(format!("{l0:?}")))?;
    if eig.len() < 2 {
        return Err(TurrittinError::SingleEigenvalue);
    }
    let mut d = Driver { sys: sys.clone(), steps: Vec::new(), blocks: vec![(0, sys.dim())], rank_trace: Vec::new() };
    d.split_at(0, 0, &eig, false)?;
    let sizes = d.blocks.iter().map(|b| b.1).collect();
    Ok((d.sys, GaugeCertificate { steps: d.steps }, sizes))
}

const MAX_STEPS: usize = 200;

struct Driver<K: Coeff> {
    sys: LinearSystem<K>,
    steps: Vec<Step<K>>,
    blocks: Vec<(usize, usize)>,
    rank_trace: Vec<(u32, u32)>,
}

impl<K: Coeff> Driver<K> {
    fn apply(&mut self, step: Step<K>) -> Result<(), TurrittinError> {
        self.sys = self.sys.apply(&step)?;
        self.steps.push(step);
        Ok(())
    }

    fn normalize_rank(&mut self) -> Result<(), TurrittinError> {
        let g = self.sys.lambda.valuation().ok_or_else(|| TurrittinError::Degenerate("Λ vanishes to working order".into()))?;
        if g > self.sys.s {
            return Err(TurrittinError::Degenerate("no singular part".into()));
        }
        if g > 0 {
            self.apply(Step::ReduceRank(g))?;
        }
        Ok(())
    }

    fn block(&self, b: usize) -> PolyMatrix<K> {
        let (r, l) = self.blocks[b];
        self.sys.lambda.block(r, r + l, r, r + l)
    }

    /// Scalar polynomial `trace/len` of degree `< s` on block `b`.
    fn block_scalar(&self, b: usize) -> Vec<K> {
        let bl = self.block(b);
        let inv = K::from_i64(bl.rows() as i64).inv().expect("nonzero");
        (0..self.sys.s).map(|k| bl.coeff(k).trace().mul_ref(&inv)).collect()
    }

    /// Valuation of `Λ_b − q I` and that matrix.
    fn block_level(&self, b: usize) -> (u32, PolyMatrix<K>) {
        let mut bl = self.block(b);
        let q = self.block_scalar(b);
        let n = bl.rows();
        for (k, qk) in q.iter().enumerate() {
            let c = bl.coeff(k as u32).sub(&Mat::identity(n).scale(qk));
            bl.set_coeff(k as u32, c);
        }
        let v = if n == 1 { u32::MAX } else { bl.valuation().unwrap_or(u32::MAX) };
        (v, bl)
    }

    fn embed(&self, b: usize, p: &PolyMatrix<K>) -> PolyMatrix<K> {
        let m = self.sys.dim();
        let (r, l) = self.blocks[b];
        let mut out = PolyMatrix::identity(m, p.order());
        for k in 0..=p.order() {
            let mut c = out.coeff(k);
            let pk = p.coeff(k);
            for i in 0..l {
                for j in 0..l {
                    c.set(r + i, r + j, pk.get(i, j).clone());
                }
            }
            out.set_coeff(k, c);
        }
        out
    }

    fn split(&mut self, b: usize, v: u32, eig: &[(K, usize)]) -> Result<(), TurrittinError> {
        self.split_at(b, v, eig, true)
    }

    fn split_at(&mut self, b: usize, v: u32, eig: &[(K, usize)], shifted: bool) -> Result<(), TurrittinError> {
        let (r, l) = self.blocks[b];
        let lead = if shifted { self.block_level(b).1.coeff(v) } else { self.block(b).coeff(v) };
        let mut cols: Vec<Vec<K>> = Vec::new();
        let mut sizes = Vec::new();
        for (ev, _) in eig {
            let sp = lead.generalized_eigenspace(ev);
            sizes.push(sp.len());
            cols.extend(sp);
        }
        if cols.len() != l {
            return Err(TurrittinError::Singular);
        }
        let t = Mat::from_fn(l, l, |i, j| cols[j][i].clone());
        let order = self.sys.order();
        self.apply(Step::Gauge(self.embed(b, &PolyMatrix::constant(&t, order))))?;

        let prime = if shifted { self.block_level(b).1 } else { self.block(b) };
        let rr = prime.shift_down(v).ok_or(TurrittinError::Pole)?;
        let dd = self.sys.s + 1 - v;
        let p = split_gauge(&rr, &sizes, dd)?;
        let p = p.pad(order.min(self.sys.order()));
        self.apply(Step::Gauge(self.embed(b, &p)))?;

        let mut start = r;
        let sub: Vec<(usize, usize)> = sizes
            .iter()
            .map(|&sz| {
                let blk = (start, sz);
                start += sz;
                blk
            })
            .collect();
        self.blocks.splice(b..=b, sub);
        Ok(())
    }

    fn nilpotent_step(&mut self, b: usize, v: u32) -> Result<(), TurrittinError> {
        let (_, l) = self.blocks[b];
        let lead = self.block_level(b).1.coeff(v);
        let t = flag_basis(&lead);
        let order = self.sys.order();
        self.apply(Step::Gauge(self.embed(b, &PolyMatrix::constant(&t, order))))?;

        let prime = self.block_level(b).1;
        let w: Vec<Vec<Option<i64>>> = (0..l)
            .map(|i| (0..l).map(|j| prime.entry(i, j).valuation().map(|x| x as i64 - v as i64)).collect())
            .collect();
        let cap = (self.sys.s - v) as i64;
        let (cn, cd) = match min_mean_cycle(&w) {
            Some((n, d)) if n < cap * d => (n, d),
            _ => (cap, 1),
        };
        if cd > 1 {
            self.apply(Step::Ramify(cd as u32))?;
        }
        let k = bellman_ford(&w, cd, cn);
        self.shear_block(b, &k)
    }

    fn shear_block(&mut self, b: usize, kb: &[i64]) -> Result<(), TurrittinError> {
        let (r, l) = self.blocks[b];
        let mut k = vec![0u32; self.sys.dim()];
        for i in 0..l {
            k[r + i] = kb[i] as u32;
        }
        let before = self.sys.s;
        self.apply(Step::Shear(k))?;
        self.normalize_rank()?;
        let after = self.sys.s;
        assert!(after <= before, "shearing raised the Poincaré rank");
        self.rank_trace.push((before, after));
        Ok(())
    }

    fn finish(self) -> Result<Reduction<K>, TurrittinError> {
        let p = self.sys.s;
        let order = self.sys.order();
        if order < p + 1 {
            return Err(TurrittinError::OrderExhausted { needed: p + 1, available: order });
        }
        let m = self.sys.dim();
        let mut d = vec![Vec::new(); m];
        for b in 0..self.blocks.len() {
            let (r, l) = self.blocks[b];
            let q = self.block_scalar(b);
            for i in r..r + l {
                d[i] = q.clone();
            }
        }
        let c = self.sys.lambda.coeff(p);
        let mut remainder = self.sys.lambda.clone();
        for k in 0..=p {
            remainder.set_coeff(k, Mat::zeros(m, m));
        }
        let form = RSLinearForm { p, d, c, remainder };
        if let Err(e) = form.validate() {
            return Err(TurrittinError::Degenerate(e));
        }
        debug_assert_eq!(form.system(), self.sys);
        Ok(Reduction { form, certificate: GaugeCertificate { steps: self.steps }, rank_trace: self.rank_trace })
    }
}

/// Gauge `P = I + O(x)` with `R P − P R̃ = x^d P'` and `R̃` block diagonal.
fn split_gauge<K: Coeff>(r: &PolyMatrix<K>, sizes: &[usize], d: u32) -> Result<PolyMatrix<K>, TurrittinError> {
    let n = r.rows();
    let order = r.order();
    let m0 = r.coeff(0);
    let mut starts = vec![0];
    for s in sizes {
        starts.push(starts.last().unwrap() + s);
    }
    let mut p: Vec<Mat<K>> = vec![Mat::identity(n)];
    let mut rt: Vec<Mat<K>> = vec![m0.clone()];
    for k in 1..=order as usize {
        let mut e = r.coeff(k as u32);
        for j in 1..k {
            e = e.add(&r.coeff((k - j) as u32).mul(&p[j])).sub(&p[j].mul(&rt[k - j]));
        }
        if k + 1 > d as usize {
            let idx = k + 1 - d as usize;
            e = e.sub(&p[idx].scale(&K::from_i64(idx as i64)));
        }
        let mut pk = Mat::zeros(n, n);
        let mut rk = Mat::zeros(n, n);
        for bi in 0..sizes.len() {
            for bj in 0..sizes.len() {
                let (r0, r1, c0, c1) = (starts[bi], starts[bi + 1], starts[bj], starts[bj + 1]);
                let eb = e.block(r0, r1, c0, c1);
                if bi == bj {
                    rk.set_block(r0, c0, &eb);
                } else if !eb.is_zero() {
                    let x = solve_sylvester(&m0.block(r0, r1, r0, r1), &m0.block(c0, c1, c0, c1), &eb.neg())
                        .ok_or(TurrittinError::Singular)?;
                    pk.set_block(r0, c0, &x);
                }
            }
        }
        p.push(pk);
        rt.push(rk);
    }
    Ok(PolyMatrix::from_coeffs(p))
}

/// Basis adapted to `ker M ⊂ ker M² ⊂ …`; conjugating a nilpotent `M` by it gives a strictly upper triangular matrix.
fn flag_basis<K: Coeff>(m: &Mat<K>) -> Mat<K> {
    let n = m.rows();
    let mut basis: Vec<Vec<K>> = Vec::new();
    let mut pw = Mat::identity(n);
    for _ in 0..n {
        pw = pw.mul(m);
        for v in pw.kernel() {
            let mut cand = basis.clone();
            cand.push(v);
            let mat = Mat::from_fn(n, cand.len(), |i, j| cand[j][i].clone());
            if mat.rank() == cand.len() {
                basis = cand;
            }
        }
        if basis.len() == n {
            break;
        }
    }
    Mat::from_fn(n, n, |i, j| basis[j][i].clone())
}

/// Minimum mean weight of a cycle (Karp), as a reduced fraction.
pub fn min_mean_cycle(w: &[Vec<Option<i64>>]) -> Option<(i64, i64)> {
    let n = w.len();
    let mut dist: Vec<Vec<Option<i64>>> = vec![vec![Some(0); n]];
    for k in 1..=n {
        let prev = &dist[k - 1];
        let row = (0..n)
            .map(|v| (0..n).filter_map(|u| Some(prev[u]? + w[u][v]?)).min())
            .collect();
        dist.push(row);
    }
    let mut best: Option<(i64, i64)> = None;
    for v in 0..n {
        let Some(dn) = dist[n][v] else { continue };
        let mut worst: Option<(i64, i64)> = None;
        for k in 0..n {
            if let Some(dk) = dist[k][v] {
                let cand = (dn - dk, (n - k) as i64);
                if worst.is_none_or(|w| cand.0 * w.1 > w.0 * cand.1) {
                    worst = Some(cand);
                }
            }
        }
        if let Some(c) = worst {
            if best.is_none_or(|b| c.0 * b.1 < b.0 * c.1) {
                best = Some(c);
            }
        }
    }
    best.map(|(a, b)| {
        let g = num_integer::gcd(a, b).max(1);
        (a / g, b / g)
    })
}

/// Potentials `k ≥ 0` with `α·w_ab + k_b − k_a ≥ c` on every edge.
fn bellman_ford(w: &[Vec<Option<i64>>], alpha: i64, c: i64) -> Vec<i64> {
    let n = w.len();
    let mut dist = vec![0i64; n];
    for _ in 0..n {
        for a in 0..n {
            for b in 0..n {
                if let Some(wab) = w[a][b] {
                    let cand = dist[b] + alpha * wab - c;
                    if cand < dist[a] {
                        dist[a] = cand;
                    }
                }
            }
        }
    }
    let lo = *dist.iter().min().unwrap_or(&0);
    dist.iter().map(|d| d - lo).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::{qmat, Qi};

    fn sys(s: u32, coeffs: &[&[&[i64]]], order: u32) -> LinearSystem<Qi> {
        let c: Vec<Mat<Qi>> = coeffs.iter().map(|m| qmat(m)).collect();
        LinearSystem::new(s, PolyMatrix::from_coeffs(c).pad(order)).unwrap()
    }

    fn check(sys: &LinearSystem<Qi>) -> Reduction<Qi> {
        let red = reduce_linear_system(sys).unwrap();
        red.form.validate().unwrap();
        assert_eq!(replay_residual(sys, &red.certificate, &red.form.system()).unwrap(), 0.0);
        assert!(red.rank_trace.iter().all(|(b, a)| a <= b));
        red
    }

    #[test]
    fn distinct_diagonal() {
        let s = sys(1, &[&[&[1, 0], &[0, -1]], &[&[2, 1], &[3, 0]]], 12);
        let red = check(&s);
        assert_eq!(red.form.p, 1);
        assert_eq!(red.form.d, vec![vec![Qi::int(1)], vec![Qi::int(-1)]]);
        assert_eq!(red.form.c, qmat(&[&[2, 0], &[0, 0]]));
    }

    #[test]
    fn scalar_system() {
        let s = sys(1, &[&[&[1]], &[&[1]]], 6);
        let red = check(&s);
        assert_eq!((red.form.p, red.form.d.clone(), red.form.c.clone()), (1, vec![vec![Qi::int(1)]], qmat(&[&[1]])));
    }

    #[test]
    fn airy() {
        let s = sys(1, &[&[&[0, 1], &[0, 0]], &[&[0, 0], &[1, 0]]], required_order(1, 2));
        let red = check(&s);
        assert_eq!(red.certificate.ramification(), 2);
        assert_eq!(red.form.p, 1);
        let (a, b) = (&red.form.d[0][0], &red.form.d[1][0]);
        assert!(a != b && !a.is_zero() && a.add_ref(b).is_zero());
    }

    #[test]
    fn split_needs_two_eigenvalues() {
        let s = sys(1, &[&[&[0, 1], &[0, 0]]], 4);
        assert_eq!(split_blocks(&s).unwrap_err(), TurrittinError::SingleEigenvalue);
        let d = sys(1, &[&[&[1, 0], &[0, 2]]], 4);
        let (out, cert, sizes) = split_blocks(&d).unwrap();
        assert_eq!(out, d);
        assert_eq!(sizes, vec![1, 1]);
        assert!(cert.steps.iter().all(|st| matches!(st, Step::Gauge(p) if p.coeff(0) == Mat::identity(2) && p.valuation() == Some(0) && (1..=p.order()).all(|k| p.coeff(k).is_zero()))));
    }

    #[test]
    fn ramify_and_shear_steps() {
        let s = sys(1, &[&[&[0, 1], &[0, 0]], &[&[0, 0], &[1, 0]]], 3);
        let r = s.ramify(2);
        assert_eq!(r.s, 2);
        assert_eq!(r.order(), 7);
        assert_eq!(r.lambda.coeff(2), qmat(&[&[0, 0], &[2, 0]]));
        let sh = s.shear(&[0, 1]).unwrap();
        assert_eq!(sh.lambda.coeff(0), qmat(&[&[0, 0], &[1, 0]]));
        assert_eq!(sh.lambda.coeff(1), qmat(&[&[0, 1], &[0, -1]]));
        let scalar = sys(1, &[&[&[1]]], 3);
        assert_eq!(scalar.shear(&[0]).unwrap(), scalar);
    }

    #[test]
    fn karp() {
        let w = vec![vec![None, Some(0)], vec![Some(1), None]];
        assert_eq!(min_mean_cycle(&w), Some((1, 2)));
        assert_eq!(min_mean_cycle(&[vec![None, Some(0)], vec![None, None]]), None);
    }
}
