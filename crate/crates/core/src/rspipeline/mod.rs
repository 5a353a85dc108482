//! Reduction of `(X, Γ)` and `(F, Γ)` to Ramis–Sibuya form, with clause-by-clause validation.

mod reduce;

use serde_json::{json, Value};

use crate::dynamics::{is_invariant_curve, CurveParam, DiffeoJet, DynError, Invariance, Object, VectorField};
use crate::infgen::InfgenError;
use crate::jets::json::{jet_from_value, jet_to_value, mat_from_value, mat_to_value};
use crate::jets::{Coeff, Jet, JetError, Mat, PolyMatrix};
use crate::transforms::TransformError;
use crate::turrittin::TurrittinError;

pub use reduce::{
    desingularize_curve, normalize_pre_rs, pre_rs_order, reduce_diffeo_to_rs, reduce_vf_to_rs, DiffeoReduction,
    VfReduction, Verdict, M_EXTRA,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Dyn(#[from] DynError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Turrittin(#[from] TurrittinError),
    #[error(transparent)]
    Infgen(#[from] InfgenError),
    #[error("curve is not invariant (component {0})")]
    NotInvariant(usize),
    #[error("curve is contained in the singular locus")]
    CurveInSingularLocus,
    #[error("curve is not rationally neutral: {0}")]
    NotNeutral(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("no perturbation m ≤ {m_max} reached pre-RS form: {tried:?}")]
    NoPerturbation { m_max: u32, tried: Vec<(u32, String)> },
}

/// One checked condition.
#[derive(Clone, Debug, PartialEq)]
pub struct Clause {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

/// Pass/fail per clause of the normal form.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RsReport {
    pub clauses: Vec<Clause>,
}

impl RsReport {
    fn push(&mut self, name: &'static str, pass: bool, detail: impl Into<String>) {
        self.clauses.push(Clause { name, pass, detail: detail.into() });
    }
    pub fn ok(&self) -> bool {
        self.clauses.iter().all(|c| c.pass)
    }
    pub fn first_failure(&self) -> Option<&Clause> {
        self.clauses.iter().find(|c| !c.pass)
    }
    pub fn clause(&self, name: &str) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.name == name)
    }
    pub fn to_json(&self) -> Value {
        json!({
            "ok": self.ok(),
            "clauses": self.clauses.iter().map(|c| json!({"name": c.name, "pass": c.pass, "detail": c.detail})).collect::<Vec<_>>(),
        })
    }
}

/// Anything [`validate_rs`] accepts.
pub trait RsValidate {
    fn validate_rs(&self) -> RsReport;
}

pub fn validate_rs<T: RsValidate + ?Sized>(form: &T) -> RsReport {
    form.validate_rs()
}

/// `X = x^{q+1}(λ + b x^{max(1,q)} + x^{q+1}A)∂x + ((D(x) + x^q C)y + x^{q+1}B)∂y`.
#[derive(Clone, Debug, PartialEq)]
pub struct RSVectorField<K: Coeff> {
    pub q: u32,
    /// Order of `D + x^q C` at `x = 0`.
    pub nu: u32,
    pub p: u32,
    pub lambda: K,
    pub b: K,
    /// Diagonal of `D(x)`, univariate, degree ≤ q−1.
    pub d: Vec<Jet<K>>,
    pub c: Mat<K>,
    pub field: VectorField<K>,
    pub curve: CurveParam<K>,
}

/// `x∘F = x − x^{q+1} + b x^{2q+1} + …`, `y∘F = exp(D(x) + x^q C)y + O(x^{q+1})`.
#[derive(Clone, Debug, PartialEq)]
pub struct RSDiffeo<K: Coeff> {
    pub q: u32,
    /// Order of `D + x^q C`; the contact order with the identity is `k + 1`.
    pub k: u32,
    pub p: u32,
    pub b: K,
    pub d: Vec<Jet<K>>,
    pub c: Mat<K>,
    pub map: DiffeoJet<K>,
    pub curve: CurveParam<K>,
}

fn tol_for<K: Coeff>(scale: f64) -> f64 {
    if K::EXACT {
        0.0
    } else {
        1e-8 * (1.0 + scale)
    }
}

fn negligible<K: Coeff>(c: &K, tol: f64) -> bool {
    if K::EXACT {
        c.is_zero()
    } else {
        c.abs() <= tol
    }
}

fn y_degree(e: &[u16]) -> u32 {
    e[1..].iter().map(|&v| v as u32).sum()
}

/// `j(x, 0)` as a univariate jet.
pub(crate) fn axis_series<K: Coeff>(j: &Jet<K>) -> Jet<K> {
    let terms = j.terms().filter(|(e, _)| y_degree(e) == 0).map(|(e, c)| (vec![e[0]], c.clone()));
    Jet::from_terms(1, j.order(), terms)
}

/// Coefficient matrix of the `y`-linear part of the `y`-components, as a polynomial in `x`.
pub(crate) fn linear_y<K: Coeff>(comps: &[Jet<K>]) -> PolyMatrix<K> {
    let n = comps.len();
    let order = comps.iter().map(|c| c.order()).min().unwrap_or(1).saturating_sub(1);
    let mut out: Vec<Mat<K>> = (0..=order).map(|_| Mat::zeros(n - 1, n - 1)).collect();
    for (j, comp) in comps.iter().enumerate().skip(1) {
        for (e, c) in comp.terms() {
            if y_degree(e) != 1 || e[0] as u32 > order {
                continue;
            }
            let i = (1..n).find(|&i| e[i] == 1).expect("linear term");
            out[e[0] as usize].set(j - 1, i - 1, c.clone());
        }
    }
    PolyMatrix::from_coeffs(out)
}

/// `D(x) + x^q C` as a polynomial matrix of order `q`.
pub(crate) fn principal_matrix<K: Coeff>(d: &[Jet<K>], c: &Mat<K>, q: u32) -> PolyMatrix<K> {
    let m = c.rows();
    let mut out = PolyMatrix::zeros(m, m, q);
    for k in 0..q {
        out.set_coeff(k, Mat::diag(&d.iter().map(|dj| dj.uc(k)).collect::<Vec<_>>()));
    }
    out.set_coeff(q, out.coeff(q).add(c));
    out
}

fn poly_valuation<K: Coeff>(m: &PolyMatrix<K>, tol: f64) -> Option<u32> {
    (0..=m.order()).find(|&k| m.coeff(k).max_abs() > tol && (!K::EXACT || !m.coeff(k).is_zero()))
}

fn check_d_and_c<K: Coeff>(r: &mut RsReport, d: &[Jet<K>], c: &Mat<K>, q: u32, m: usize, tol: f64) {
    let shape = d.len() == m && c.rows() == m && c.cols() == m;
    let deg = d.iter().all(|dj| dj.terms().all(|(e, v)| (e[0] as u32) < q || negligible(v, tol)));
    r.push("d-diagonal", shape && deg, if shape { format!("deg D ≤ {}", q as i64 - 1) } else { "dimension mismatch".into() });
    if !shape {
        return;
    }
    let mut worst = 0.0f64;
    let mut exact_ok = true;
    for k in 0..q {
        let dk = Mat::diag(&d.iter().map(|dj| dj.uc(k)).collect::<Vec<_>>());
        let br = dk.commutator(c);
        worst = worst.max(br.max_abs());
        exact_ok &= br.is_zero();
    }
    let pass = if K::EXACT { exact_ok } else { worst <= tol };
    r.push("commute", pass, format!("max |[D_k, C]| = {worst:e}"));
    let nonzero = m == 0
        || d.iter().any(|dj| dj.terms().any(|(_, v)| !negligible(v, tol))) || c.max_abs() > tol && (!K::EXACT || !c.is_zero());
    r.push("nonzero", nonzero, "D + x^q C ≢ 0");
}

fn check_curve<K: Coeff>(r: &mut RsReport, curve: &CurveParam<K>, n: usize) {
    let ok = curve.dim() == n && curve.component(0).valuation() == Some(1);
    r.push("curve-transverse", ok, "Γ nonsingular and transverse to {x = 0}");
}

impl<K: Coeff> RSVectorField<K> {
    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn principal(&self) -> PolyMatrix<K> {
        principal_matrix(&self.d, &self.c, self.q)
    }

    /// Tails `A` and `B` of the defining expression.
    pub fn tails(&self) -> Result<(Jet<K>, Vec<Jet<K>>), PipelineError> {
        let n = self.dim();
        let q = self.q;
        let order = self.field.order();
        let comps = self.field.components();
        let mut head = vec![0u16; n];
        head[0] = (q + 1) as u16;
        let mut lead = Jet::monomial(n, order, &head, self.lambda.clone());
        head[0] = (q + 1 + q.max(1)) as u16;
        lead = lead.add(&Jet::monomial(n, order, &head, self.b.clone()))?;
        let a = comps[0].sub(&lead)?.div_var_pow(0, 2 * q + 2)?;
        let m = self.principal();
        let mut bs = Vec::with_capacity(n - 1);
        for j in 1..n {
            let mut lin = Jet::zero(n, order);
            for i in 1..n {
                for k in 0..=q {
                    let mut e = vec![0u16; n];
                    e[0] = k as u16;
                    e[i] = 1;
                    lin = lin.add(&Jet::monomial(n, order, &e, m.coeff(k).get(j - 1, i - 1).clone()))?;
                }
            }
            bs.push(comps[j].sub(&lin)?.div_var_pow(0, q + 1)?);
        }
        Ok((a, bs))
    }

    pub fn to_json(&self) -> Value {
        let (lr, li) = self.lambda.json_parts();
        let (br, bi) = self.b.json_parts();
        json!({
            "kind": "rs-vector-field",
            "q": self.q,
            "nu": self.nu,
            "p": self.p,
            "lambda": {"re": lr, "im": li},
            "b": {"re": br, "im": bi},
            "d": self.d.iter().map(jet_to_value).collect::<Vec<_>>(),
            "c": mat_to_value(&self.c),
            "field": self.field.to_json(),
            "curve": self.curve.to_json(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self, PipelineError> {
        let bad = |m: &str| PipelineError::Shape(m.to_string());
        let int = |k: &str| v.get(k).and_then(Value::as_u64).map(|x| x as u32).ok_or_else(|| bad(k));
        let d = v
            .get("d")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("d"))?
            .iter()
            .map(jet_from_value)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RSVectorField {
            q: int("q")?,
            nu: int("nu")?,
            p: int("p")?,
            lambda: scalar_from(v.get("lambda"))?,
            b: scalar_from(v.get("b"))?,
            d,
            c: mat_from_value(v.get("c").ok_or_else(|| bad("c"))?)?,
            field: VectorField::from_json(v.get("field").ok_or_else(|| bad("field"))?)?,
            curve: CurveParam::from_json(v.get("curve").ok_or_else(|| bad("curve"))?)?,
        })
    }
}

fn scalar_from<K: Coeff>(v: Option<&Value>) -> Result<K, PipelineError> {
    let v = v.ok_or_else(|| PipelineError::Shape("missing scalar".into()))?;
    let part = |k: &str| v.get(k).and_then(Value::as_str).unwrap_or("0").to_string();
    Ok(K::parse_parts(&part("re"), &part("im"))?)
}

impl<K: Coeff> RsValidate for RSVectorField<K> {
    fn validate_rs(&self) -> RsReport {
        let mut r = RsReport::default();
        let n = self.dim();
        let q = self.q;
        let comps = self.field.components();
        let tol = tol_for::<K>(self.field.components().iter().map(|c| c.max_abs()).fold(0.0, f64::max));
        check_curve(&mut r, &self.curve, n);

        let a = &comps[0];
        let mut bad: Option<String> = None;
        for (e, c) in a.terms() {
            if negligible(c, tol) {
                continue;
            }
            let xd = e[0] as u32;
            let ok = if y_degree(e) > 0 { xd >= 2 * q + 2 } else { xd >= q + 1 && !(q >= 1 && xd >= q + 2 && xd <= 2 * q) };
            if !ok && bad.is_none() {
                bad = Some(format!("unexpected term {e:?}"));
            }
        }
        let ax = axis_series(a);
        let lam_ok = !negligible(&self.lambda, tol) && negligible(&ax.uc(q + 1).sub_ref(&self.lambda), tol);
        let b_ok = negligible(&ax.uc(q + 1 + q.max(1)).sub_ref(&self.b), tol);
        if !lam_ok {
            bad.get_or_insert_with(|| "λ does not match the x^{q+1} coefficient".into());
        }
        if !b_ok {
            bad.get_or_insert_with(|| "b does not match".into());
        }
        r.push("x-shape", bad.is_none(), bad.unwrap_or_else(|| "x^{q+1}(λ + b x^{max(1,q)} + x^{q+1}A)".into()));

        let m = self.principal();
        let mut bad: Option<String> = None;
        if self.d.len() + 1 == n && self.c.rows() + 1 == n {
            for (j, comp) in comps.iter().enumerate().skip(1) {
                for (e, c) in comp.terms() {
                    if negligible(c, tol) {
                        continue;
                    }
                    let xd = e[0] as u32;
                    if y_degree(e) != 1 && xd < q + 1 && bad.is_none() {
                        bad = Some(format!("component {j}: term {e:?} below x^{}", q + 1));
                    }
                }
                for i in 1..n {
                    for k in 0..=q {
                        let mut e = vec![0u16; n];
                        e[0] = k as u16;
                        e[i] = 1;
                        let diff = comp.coeff(&e).sub_ref(m.coeff(k).get(j - 1, i - 1));
                        if !negligible(&diff, tol) && bad.is_none() {
                            bad = Some(format!("linear coefficient x^{k} y_{i} of component {j} differs from D + x^q C"));
                        }
                    }
                }
            }
        } else {
            bad = Some("dimension mismatch".into());
        }
        r.push("y-shape", bad.is_none(), bad.unwrap_or_else(|| "(D + x^q C)y + x^{q+1}B".into()));

        check_d_and_c(&mut r, &self.d, &self.c, q, n - 1, tol);

        let rest = match is_invariant_curve(Object::Field(&self.field), &self.curve) {
            Ok(Invariance::Invariant(h)) => {
                let h = if K::EXACT { h } else { h.chop(tol) };
                match h.valuation() {
                    Some(v) => (v == q + 1, format!("ν(X|Γ) = {v}")),
                    None => (false, "X|Γ vanishes to order".into()),
                }
            }
            Ok(Invariance::NotInvariant { component }) => (false, format!("Γ not invariant (component {component})")),
            Err(e) => (false, e.to_string()),
        };
        r.push("restriction-order", rest.0, rest.1);

        let nu = if n == 1 { Some(q) } else { poly_valuation(&m, tol) };
        let ok = nu == Some(self.nu) && self.p + self.nu == q;
        r.push("rank", ok, format!("ord(D + x^q C) = {nu:?}, ν = {}, p = {}", self.nu, self.p));
        r
    }
}

/// `exp(M)` modulo `x^{order+1}`.
pub(crate) fn exp_polymatrix<K: Coeff>(m: &PolyMatrix<K>) -> Option<PolyMatrix<K>> {
    let n = m.rows();
    let order = m.order();
    let m0_nilpotent = m.coeff(0).pow(n as u32).is_zero();
    if K::EXACT && !m0_nilpotent {
        return None;
    }
    let mut acc = PolyMatrix::identity(n, order);
    let mut term = PolyMatrix::identity(n, order);
    let cap = if m0_nilpotent { (order as usize + 1) * n + 1 } else { 200 };
    for j in 1..=cap {
        term = term.mul(m).scale(&K::from_i64(j as i64).inv().expect("nonzero"));
        if term.is_zero() {
            break;
        }
        acc = acc.add(&term);
        if !K::EXACT && term.max_abs() < 1e-18 * (1.0 + acc.max_abs()) {
            break;
        }
    }
    Some(acc)
}

impl<K: Coeff> RSDiffeo<K> {
    pub fn dim(&self) -> usize {
        self.map.dim()
    }

    pub fn principal(&self) -> PolyMatrix<K> {
        principal_matrix(&self.d, &self.c, self.q)
    }

    /// Exponentiated data of a normalized field (`λ = −1`).
    pub fn from_field(form: &RSVectorField<K>, map: DiffeoJet<K>) -> Self {
        let q = form.q;
        let b = axis_series(map.component(0)).uc(2 * q + 1);
        RSDiffeo { q, k: form.nu, p: form.p, b, d: form.d.clone(), c: form.c.clone(), map, curve: form.curve.clone() }
    }

    pub fn to_json(&self) -> Value {
        let (br, bi) = self.b.json_parts();
        json!({
            "kind": "rs-diffeo",
            "q": self.q,
            "k": self.k,
            "p": self.p,
            "b": {"re": br, "im": bi},
            "d": self.d.iter().map(jet_to_value).collect::<Vec<_>>(),
            "c": mat_to_value(&self.c),
            "map": self.map.to_json(),
            "curve": self.curve.to_json(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self, PipelineError> {
        let bad = |m: &str| PipelineError::Shape(m.to_string());
        let int = |k: &str| v.get(k).and_then(Value::as_u64).map(|x| x as u32).ok_or_else(|| bad(k));
        let d = v
            .get("d")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("d"))?
            .iter()
            .map(jet_from_value)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RSDiffeo {
            q: int("q")?,
            k: int("k")?,
            p: int("p")?,
            b: scalar_from(v.get("b"))?,
            d,
            c: mat_from_value(v.get("c").ok_or_else(|| bad("c"))?)?,
            map: DiffeoJet::from_json(v.get("map").ok_or_else(|| bad("map"))?)?,
            curve: CurveParam::from_json(v.get("curve").ok_or_else(|| bad("curve"))?)?,
        })
    }
}

impl<K: Coeff> RsValidate for RSDiffeo<K> {
    fn validate_rs(&self) -> RsReport {
        let mut r = RsReport::default();
        let n = self.dim();
        let q = self.q;
        let comps = self.map.components();
        let tol = tol_for::<K>(comps.iter().map(|c| c.max_abs()).fold(0.0, f64::max));
        check_curve(&mut r, &self.curve, n);
        r.push("q-positive", q >= 1, format!("q = {q}"));

        let mut expect = vec![(1u32, K::one()), (q + 1, K::one().neg_ref())];
        if q >= 1 {
            expect.push((2 * q + 1, self.b.clone()));
        }
        let mut bad: Option<String> = None;
        let x0 = &comps[0];
        for (e, c) in x0.terms() {
            let xd = e[0] as u32;
            if xd >= 2 * q + 2 {
                continue;
            }
            let want = if y_degree(e) == 0 {
                expect.iter().filter(|(k, _)| *k == xd).fold(K::zero(), |a, (_, v)| a.add_ref(v))
            } else {
                K::zero()
            };
            if !negligible(&c.sub_ref(&want), tol) && bad.is_none() {
                bad = Some(format!("term {e:?}"));
            }
        }
        for (k, v) in &expect {
            let mut e = vec![0u16; n];
            e[0] = *k as u16;
            if x0.coeff(&e).is_zero() && !negligible(v, tol) && bad.is_none() {
                bad = Some(format!("missing x^{k}"));
            }
        }
        r.push("x-shape", bad.is_none(), bad.unwrap_or_else(|| "x − x^{q+1} + b x^{2q+1} + O(x^{2q+2})".into()));

        let mut bad: Option<String> = None;
        if self.d.len() + 1 == n && self.c.rows() + 1 == n {
            match exp_polymatrix(&self.principal()) {
                None => bad = Some("exp(D + x^q C) needs the float field".into()),
                Some(ex) => {
                    for (j, comp) in comps.iter().enumerate().skip(1) {
                        for (e, c) in comp.terms() {
                            if e[0] as u32 <= q && y_degree(e) != 1 && !negligible(c, tol) && bad.is_none() {
                                bad = Some(format!("component {j}: term {e:?} below x^{}", q + 1));
                            }
                        }
                        for i in 1..n {
                            for k in 0..=q {
                                let mut e = vec![0u16; n];
                                e[0] = k as u16;
                                e[i] = 1;
                                let diff = comp.coeff(&e).sub_ref(ex.coeff(k).get(j - 1, i - 1));
                                if !negligible(&diff, tol) && bad.is_none() {
                                    bad = Some(format!("coefficient x^{k} y_{i} of component {j} differs from exp(D + x^q C)"));
                                }
                            }
                        }
                    }
                }
            }
        } else {
            bad = Some("dimension mismatch".into());
        }
        r.push("y-shape", bad.is_none(), bad.unwrap_or_else(|| "exp(D + x^q C)y + O(x^{q+1})".into()));

        check_d_and_c(&mut r, &self.d, &self.c, q, n - 1, tol);

        let inv = is_invariant_curve(Object::Diffeo(&self.map), &self.curve).map(|i| i.is_invariant()).unwrap_or(false);
        r.push("curve-invariant", inv, "F(Γ) = Γ");

        let m = self.principal();
        let k = poly_valuation(&m, tol);
        let contact = comps
            .iter()
            .enumerate()
            .filter_map(|(i, c)| {
                let id = Jet::var(n, c.order(), i);
                let d = c.sub(&id).ok()?;
                let d = if K::EXACT { d } else { d.chop(tol) };
                d.valuation()
            })
            .min();
        let ok = k == Some(self.k) && contact == Some(self.k + 1) && self.p + self.k == q;
        r.push("contact", ok, format!("ord(D + x^q C) = {k:?}, ord(F − id) = {contact:?}, k = {}, p = {}", self.k, self.p));
        r
    }
}

#[cfg(test)]
mod tests;
