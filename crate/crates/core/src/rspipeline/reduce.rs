use serde_json::{json, Value};

use super::{
    axis_series, linear_y, negligible, poly_valuation, principal_matrix, tol_for, y_degree, PipelineError, RSDiffeo,
    RSVectorField, RsValidate,
};
use crate::dynamics::{exp_flow, is_invariant_curve, CurveParam, DiffeoJet, Invariance, Object, VectorField};
use crate::infgen::{infinitesimal_generator, resonance_lattices, PolarEigenvalue};
use crate::jets::{Coeff, Jet, JetError, Mat, PolyMatrix};
use crate::transforms::{PermissibleMap, TransformSequence};
use crate::turrittin::{reduce_with_available_order, LinearSystem, Reduction, Step};

/// The perturbation loop tries `m = p+2, …, p+M_EXTRA`.
pub const M_EXTRA: u32 = 12;

const MAX_CURVE_BLOWUPS: usize = 64;

#[derive(Clone, Debug)]
pub struct VfReduction<K: Coeff> {
    pub form: RSVectorField<K>,
    pub sequence: TransformSequence<K>,
    /// `ν(X|Γ) − 1` on the input.
    pub q_in: u32,
    /// Product of the ramification orders in the sequence.
    pub ramification: u32,
    pub linear: Option<Reduction<K>>,
    /// Perturbation index chosen by the loop, if the linear branch ran.
    pub m: Option<u32>,
}

impl<K: Coeff> VfReduction<K> {
    pub fn to_json(&self) -> Value {
        json!({
            "rs_form": self.form.to_json(),
            "certificate": self.sequence.to_json(),
            "verdict": Verdict::Reduced.to_json(),
            "q_in": self.q_in,
            "ramification": self.ramification,
            "perturbation": self.m,
            "linear": self.linear.as_ref().map(|r| r.to_json()),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Reduced,
    /// `F^m|Γ` is the identity up to the stated order.
    PeriodicCurve { order: u32 },
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Reduced => "case (ii): rs-form",
            Verdict::PeriodicCurve { .. } => "case (i): periodic-curve",
        }
    }
    pub fn to_json(&self) -> Value {
        match self {
            Verdict::Reduced => json!({"label": self.label()}),
            Verdict::PeriodicCurve { order } => json!({"label": self.label(), "to_order": order}),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DiffeoReduction<K: Coeff> {
    pub verdict: Verdict,
    pub m: u32,
    pub form: Option<RSDiffeo<K>>,
    pub field: Option<RSVectorField<K>>,
    pub sequence: TransformSequence<K>,
    /// Distance between `exp` of the reduced field and `F^m` transported through the sequence.
    pub coherence: Option<f64>,
}

impl<K: Coeff> DiffeoReduction<K> {
    pub fn to_json(&self) -> Value {
        json!({
            "rs_form": self.form.as_ref().map(|f| f.to_json()),
            "generator_form": self.field.as_ref().map(|f| f.to_json()),
            "certificate": self.sequence.to_json(),
            "verdict": self.verdict.to_json(),
            "m": self.m,
            "coherence": self.coherence,
        })
    }
}

fn tidy_jet<K: Coeff>(j: &Jet<K>) -> Jet<K> {
    if K::EXACT {
        j.clone()
    } else {
        j.chop(1e-10 * (1.0 + j.max_abs()))
    }
}

fn tidy_vf<K: Coeff>(x: &VectorField<K>) -> Result<VectorField<K>, PipelineError> {
    if K::EXACT {
        return Ok(x.clone());
    }
    let s = x.components().iter().map(|c| c.max_abs()).fold(0.0, f64::max);
    Ok(VectorField::new(x.components().iter().map(|c| c.chop(1e-10 * (1.0 + s))).collect())?)
}

fn tidy_diffeo<K: Coeff>(f: &DiffeoJet<K>) -> Result<DiffeoJet<K>, PipelineError> {
    if K::EXACT {
        return Ok(f.clone());
    }
    Ok(DiffeoJet::new(f.components().iter().map(tidy_jet).collect())?)
}

fn tidy_curve<K: Coeff>(g: &CurveParam<K>) -> Result<CurveParam<K>, PipelineError> {
    if K::EXACT {
        return Ok(g.clone());
    }
    let s = g.components().iter().map(|c| c.max_abs()).fold(0.0, f64::max);
    Ok(CurveParam::new(g.components().iter().map(|c| c.chop(1e-10 * (1.0 + s))).collect())?)
}

/// `h(x)` as a jet in `n` variables.
fn lift_x<K: Coeff>(h: &Jet<K>, n: usize, order: u32) -> Jet<K> {
    Jet::from_terms(
        n,
        order,
        h.terms().map(|(e, c)| {
            let mut f = vec![0u16; n];
            f[0] = e[0];
            (f, c.clone())
        }),
    )
}

fn change<K: Coeff>(comps: Vec<Jet<K>>) -> Result<PermissibleMap<K>, PipelineError> {
    Ok(PermissibleMap::Change(DiffeoJet::new(comps)?))
}

/// `(x, y) ↦ (x, y + h(x))`.
fn graph_shift<K: Coeff>(hs: &[Jet<K>], n: usize, order: u32) -> Result<PermissibleMap<K>, PipelineError> {
    let mut comps = vec![Jet::var(n, order, 0)];
    for (j, h) in hs.iter().enumerate() {
        comps.push(Jet::var(n, order, j + 1).add(&lift_x(h, n, order))?);
    }
    change(comps)
}

fn x_divisibility<K: Coeff>(x: &VectorField<K>) -> u32 {
    x.components().iter().filter_map(|c| c.valuation_in(0)).min().unwrap_or(0)
}

struct State<K: Coeff> {
    x: VectorField<K>,
    g: CurveParam<K>,
    seq: TransformSequence<K>,
}

impl<K: Coeff> Clone for State<K> {
    fn clone(&self) -> Self {
        State { x: self.x.clone(), g: self.g.clone(), seq: self.seq.clone() }
    }
}

impl<K: Coeff> State<K> {
    fn apply(&mut self, m: PermissibleMap<K>) -> Result<(), PipelineError> {
        let (x, g) = m.apply_to_vf(&self.x, &self.g)?;
        self.x = tidy_vf(&x)?;
        self.g = tidy_curve(&g)?;
        self.seq.push(m);
        Ok(())
    }

    fn blow_up(&mut self) -> Result<(), PipelineError> {
        let m = PermissibleMap::punctual(&self.g)?;
        self.apply(m)
    }

    /// Make `Γ = {y = 0}` by `y ↦ y + γ̄(x)`, truncated at `cut`.
    fn straighten(&mut self, cut: u32) -> Result<(), PipelineError> {
        let n = self.x.dim();
        if n == 1 {
            return Ok(());
        }
        let hs: Vec<Jet<K>> = self.g.graph_functions()?.iter().map(|h| tidy_jet(&h.truncate(cut))).collect();
        if hs.iter().all(|h| h.is_zero()) {
            return Ok(());
        }
        let order = self.x.order();
        self.apply(graph_shift(&hs, n, order)?)
    }
}

/// Punctual blow-ups until `Γ` is nonsingular and transverse to the last exceptional divisor.
pub fn desingularize_curve<K: Coeff>(g: &CurveParam<K>) -> Result<(TransformSequence<K>, CurveParam<K>), PipelineError> {
    let mut seq = TransformSequence::new();
    let mut g = g.clone();
    let mut last_chart = None;
    while g.multiplicity() > 1 {
        if seq.len() >= MAX_CURVE_BLOWUPS || g.order() <= g.multiplicity() {
            return Err(JetError::OrderExhausted { needed: g.multiplicity() + 1, available: g.order() }.into());
        }
        let m = PermissibleMap::punctual(&g)?;
        if let PermissibleMap::BlowUp { chart, .. } = &m {
            last_chart = Some(*chart);
        }
        g = m.apply_to_curve(&g)?;
        seq.push(m);
    }
    if let Some(c) = last_chart {
        if g.component(c).valuation() != Some(1) {
            let m = PermissibleMap::punctual(&g)?;
            g = m.apply_to_curve(&g)?;
            seq.push(m);
        }
    }
    Ok((seq, g))
}

/// `q` when `X` has the pre-RS shape along `{y = 0}`; otherwise the first violated condition.
pub fn pre_rs_order<K: Coeff>(x: &VectorField<K>) -> Result<u32, String> {
    let comps = x.components();
    let n = comps.len();
    let tol = tol_for::<K>(comps.iter().map(|c| c.max_abs()).fold(0.0, f64::max));
    let ax = axis_series(&comps[0]);
    let ax = if K::EXACT { ax } else { ax.chop(tol) };
    let v = ax.valuation().ok_or("x-component vanishes on y = 0")?;
    if v == 0 {
        return Err("vector field is nonsingular".into());
    }
    let q = v - 1;
    for (e, c) in comps[0].terms() {
        if y_degree(e) > 0 && (e[0] as u32) < q + 1 && !negligible(c, tol) {
            return Err(format!("x-component term {e:?} is not divisible by x^{}", q + 1));
        }
    }
    if n == 1 {
        return Ok(q);
    }
    let l = linear_y(comps);
    if l.order() < q {
        return Err(format!("linear part known to x^{} only, need x^{q}", l.order()));
    }
    let c = l.coeff(q);
    let mut any = c.max_abs() > tol && (!K::EXACT || !c.is_zero());
    for k in 0..q {
        let lk = l.coeff(k);
        let off = Mat::from_fn(n - 1, n - 1, |i, j| if i == j { K::zero() } else { lk.get(i, j).clone() });
        if off.max_abs() > tol && (!K::EXACT || !off.is_zero()) {
            return Err(format!("coefficient x^{k} of the linear part is not diagonal"));
        }
        let br = lk.commutator(&c);
        if br.max_abs() > tol && (!K::EXACT || !br.is_zero()) {
            return Err(format!("D_{k} and C do not commute"));
        }
        any |= lk.max_abs() > tol && (!K::EXACT || !lk.is_zero());
    }
    if !any {
        return Err("D + x^q C vanishes".into());
    }
    Ok(q)
}

fn tails_ok<K: Coeff>(x: &VectorField<K>, q: u32) -> bool {
    let comps = x.components();
    let tol = tol_for::<K>(comps.iter().map(|c| c.max_abs()).fold(0.0, f64::max));
    let xs = comps[0].terms().all(|(e, c)| y_degree(e) == 0 || e[0] as u32 >= 2 * q + 2 || negligible(c, tol));
    let ys = comps[1..].iter().all(|comp| {
        comp.terms().all(|(e, c)| y_degree(e) == 1 || e[0] as u32 >= q + 1 || negligible(c, tol))
    });
    xs && ys
}

fn rs_candidate<K: Coeff>(x: &VectorField<K>, g: &CurveParam<K>, q: u32) -> RSVectorField<K> {
    let comps = x.components();
    let n = comps.len();
    let ax = axis_series(&comps[0]);
    let lambda = ax.uc(q + 1);
    let b = ax.uc(q + 1 + q.max(1));
    let l = linear_y(comps).pad(q);
    let d: Vec<Jet<K>> =
        (0..n - 1).map(|j| Jet::univariate(q, &(0..q).map(|k| l.coeff(k).get(j, j).clone()).collect::<Vec<_>>())).collect();
    let c = l.coeff(q);
    let tol = tol_for::<K>(comps.iter().map(|c| c.max_abs()).fold(0.0, f64::max));
    let nu = poly_valuation(&principal_matrix(&d, &c, q), tol).unwrap_or(q);
    RSVectorField { q, nu, p: q - nu, lambda, b, d, c, field: x.clone(), curve: g.clone() }
}

/// Bring a pre-RS pair to RS form with `λ = −1` when an exact root allows it.
pub fn normalize_pre_rs<K: Coeff>(
    x: &VectorField<K>,
    g: &CurveParam<K>,
) -> Result<(RSVectorField<K>, TransformSequence<K>), PipelineError> {
    let mut st = State { x: tidy_vf(x)?, g: tidy_curve(g)?, seq: TransformSequence::new() };
    normalize_state(&mut st)?;
    let q = pre_rs_order(&st.x).map_err(PipelineError::Shape)?;
    let form = rs_candidate(&st.x, &st.g, q);
    let rep = form.validate_rs();
    if let Some(c) = rep.first_failure() {
        return Err(PipelineError::Shape(format!("{}: {}", c.name, c.detail)));
    }
    Ok((form, st.seq))
}

fn normalize_state<K: Coeff>(st: &mut State<K>) -> Result<(), PipelineError> {
    let n = st.x.dim();
    let q = pre_rs_order(&st.x).map_err(PipelineError::Shape)?;
    if st.x.order() < 2 * q + 2 {
        return Err(JetError::OrderExhausted { needed: 2 * q + 2, available: st.x.order() }.into());
    }
    st.straighten(2 * q + 1)?;
    if !tails_ok(&st.x, q) {
        for _ in 0..=q {
            st.blow_up()?;
        }
    }
    let order = st.x.order();
    if q >= 2 {
        let mut cur = axis_series(st.x.component(0));
        let mut total = Jet::var(1, order, 0);
        for j in 1..q {
            let v = cur.div_var_pow(0, q + 1)?;
            let coef = v.uc(j).mul_ref(&K::from_i64((q - j) as i64).mul_ref(&v.uc(0)).inv().expect("λ ≠ 0")).neg_ref();
            if negligible(&coef, tol_for::<K>(v.max_abs())) {
                continue;
            }
            let mut e = [0u16];
            e[0] = (j + 1) as u16;
            let psi = Jet::var(1, order, 0).add(&Jet::monomial(1, order, &e, coef))?;
            cur = tidy_jet(&cur.compose(std::slice::from_ref(&psi))?.div_unit(&psi.derive(0))?);
            total = total.compose(&[psi])?;
        }
        if total != Jet::var(1, order, 0) {
            let mut comps = vec![lift_x(&total, n, order)];
            comps.extend((1..n).map(|i| Jet::var(n, order, i)));
            st.apply(change(comps)?)?;
        }
    }
    if q >= 1 {
        let lambda = axis_series(st.x.component(0)).uc(q + 1);
        let target = K::one().neg_ref().mul_ref(&lambda.inv().expect("λ ≠ 0"));
        if let Some(c) = target.nth_root(q) {
            if c != K::one() {
                let order = st.x.order();
                let mut comps = vec![Jet::var(n, order, 0).scale(&c)];
                comps.extend((1..n).map(|i| Jet::var(n, order, i)));
                st.apply(change(comps)?)?;
            }
        }
    }
    Ok(())
}

/// A T-transformation as a permissible map in `n` variables.
fn step_map<K: Coeff>(step: &Step<K>, n: usize, order: u32) -> Result<Option<PermissibleMap<K>>, PipelineError> {
    Ok(match step {
        Step::Gauge(p) => {
            let mut comps = vec![Jet::var(n, order, 0)];
            for i in 0..n - 1 {
                let mut terms = Vec::new();
                for j in 0..n - 1 {
                    for k in 0..=p.order().min(order.saturating_sub(1)) {
                        let c = p.coeff(k).get(i, j).clone();
                        if !c.is_zero() {
                            let mut e = vec![0u16; n];
                            e[0] = k as u16;
                            e[j + 1] = 1;
                            terms.push((e, c));
                        }
                    }
                }
                comps.push(Jet::from_terms(n, order, terms));
            }
            Some(change(comps)?)
        }
        Step::Shear(k) => {
            let mut kk = vec![0];
            kk.extend(k.iter().copied());
            Some(PermissibleMap::Shearing { k: kk })
        }
        Step::Ramify(a) => Some(PermissibleMap::Ramification { l: *a }),
        Step::ReduceRank(_) => None,
    })
}

/// Drive `(X, Γ)` with `Γ = {y = 0}` to pre-RS shape.
fn to_pre_rs<K: Coeff>(st: &mut State<K>) -> Result<(Option<Reduction<K>>, Option<u32>), PipelineError> {
    let n = st.x.dim();
    let e = x_divisibility(&st.x);
    let nonsingular = st.x.components().iter().any(|c| c.div_var_pow(0, e).map(|d| !d.constant_term().is_zero()).unwrap_or(false));
    if nonsingular {
        if e == 0 {
            return Err(PipelineError::Shape("vector field is nonsingular".into()));
        }
        st.blow_up()?;
        return Ok((None, None));
    }
    let total = axis_series(st.x.component(0)).valuation().ok_or(PipelineError::CurveInSingularLocus)?;
    let r = total - e;
    for _ in 0..=r {
        st.blow_up()?;
    }
    let mut e = x_divisibility(&st.x);
    let ax = axis_series(st.x.component(0));
    let total = ax.valuation().ok_or(PipelineError::CurveInSingularLocus)?;
    let mut r = total - e;
    let tol = tol_for::<K>(st.x.components().iter().map(|c| c.max_abs()).fold(0.0, f64::max));
    let mut a = linear_y(st.x.components()).shift_down(e).ok_or_else(|| PipelineError::Shape("linear part not divisible by x^e".into()))?;
    let nu_a = poly_valuation(&a, tol);
    match nu_a {
        Some(v) if v < r => {
            e += v;
            r -= v;
            a = a.shift_down(v).expect("valuation");
        }
        _ => {
            st.blow_up()?;
            return Ok((None, None));
        }
    }
    let s = r - 1;
    if s == 0 {
        return Ok((None, None));
    }
    let u = ax.div_var_pow(0, e + r)?;
    let uinv = u.inv_unit()?;
    let order = a.order().min(uinv.order());
    let m = n - 1;
    let lam = PolyMatrix::from_entries(m, m, order, |i, j| tidy_jet(&a.entry(i, j).mul_to(&uinv, order)));
    let sys = LinearSystem::new(s, lam)?;
    let red = reduce_with_available_order(&sys)?;
    let p = red.form.p;
    let mut tried = Vec::new();
    for mm in p + 2..=p + M_EXTRA {
        let mut trial = st.clone();
        let attempt = (|| -> Result<u32, PipelineError> {
            let mut k = vec![0u32];
            k.extend((1..n).map(|_| mm));
            trial.apply(PermissibleMap::Shearing { k })?;
            for step in &red.certificate.steps {
                if let Some(map) = step_map(step, n, trial.x.order())? {
                    trial.apply(map)?;
                }
            }
            pre_rs_order(&trial.x).map_err(PipelineError::Shape)
        })();
        match attempt {
            Ok(_) => {
                *st = trial;
                return Ok((Some(red), Some(mm)));
            }
            Err(err) => tried.push((mm, err.to_string())),
        }
    }
    Err(PipelineError::NoPerturbation { m_max: p + M_EXTRA, tried })
}

fn restriction_valuation<K: Coeff>(x: &VectorField<K>, g: &CurveParam<K>) -> Result<u32, PipelineError> {
    match is_invariant_curve(Object::Field(x), g)? {
        Invariance::Invariant(h) => tidy_jet(&h).valuation().ok_or(PipelineError::CurveInSingularLocus),
        Invariance::NotInvariant { component } => Err(PipelineError::NotInvariant(component)),
    }
}

/// Full reduction of an invariant curve of a vector field to RS form.
pub fn reduce_vf_to_rs<K: Coeff>(x: &VectorField<K>, g: &CurveParam<K>) -> Result<VfReduction<K>, PipelineError> {
    let n = x.dim();
    if g.dim() != n {
        return Err(JetError::ArityMismatch { expected: n, got: g.dim() }.into());
    }
    let x = tidy_vf(x)?;
    let q_in = restriction_valuation(&x, g)?.saturating_sub(1);
    let mut st = State { x, g: tidy_curve(g)?, seq: TransformSequence::new() };
    let (dseq, _) = desingularize_curve(&st.g)?;
    for m in dseq.maps {
        st.apply(m)?;
    }
    let c = match st.seq.maps.last() {
        Some(PermissibleMap::BlowUp { chart, .. }) => *chart,
        _ => st.g.chart(),
    };
    if st.g.component(c).valuation() != Some(1) {
        return Err(PipelineError::Shape("curve is not transverse after desingularization".into()));
    }
    if c != 0 {
        let order = st.x.order();
        let comps = (0..n)
            .map(|i| {
                let j = if i == 0 { c } else if i == c { 0 } else { i };
                Jet::var(n, order, j)
            })
            .collect();
        st.apply(change(comps)?)?;
    }
    let cut = st.x.order();
    st.straighten(cut)?;
    let (linear, m) = if pre_rs_order(&st.x).is_ok() { (None, None) } else { to_pre_rs(&mut st)? };
    normalize_state(&mut st)?;
    let q = pre_rs_order(&st.x).map_err(PipelineError::Shape)?;
    let form = rs_candidate(&st.x, &st.g, q);
    if let Some(c) = form.validate_rs().first_failure() {
        return Err(PipelineError::Shape(format!("{}: {}", c.name, c.detail)));
    }
    let ramification = st
        .seq
        .maps
        .iter()
        .map(|m| if let PermissibleMap::Ramification { l } = m { *l } else { 1 })
        .product();
    Ok(VfReduction { form, sequence: st.seq, q_in, ramification, linear, m })
}

/// Reduction of `(F^m, Γ)` through an infinitesimal generator of `F^m`.
pub fn reduce_diffeo_to_rs<K: Coeff>(
    f: &DiffeoJet<K>,
    g: &CurveParam<K>,
    spec: &[PolarEigenvalue],
) -> Result<DiffeoReduction<K>, PipelineError> {
    let lat = resonance_lattices(spec)?;
    let m = lat.index as u32;
    let fm = tidy_diffeo(&f.power(m))?;
    let theta = match is_invariant_curve(Object::Diffeo(&fm), g)? {
        Invariance::Invariant(t) => tidy_jet(&t),
        Invariance::NotInvariant { component } => return Err(PipelineError::NotInvariant(component)),
    };
    let tol = tol_for::<K>(1.0);
    let mult = theta.uc(1);
    if !negligible(&mult.sub_ref(&K::one()), tol) {
        return Err(PipelineError::NotNeutral(format!("F^{m}|Γ has multiplier {mult}")));
    }
    let ident = Jet::var(1, theta.order(), 0);
    let diff = tidy_jet(&theta.sub(&ident)?);
    if diff.is_zero() {
        return Ok(DiffeoReduction {
            verdict: Verdict::PeriodicCurve { order: theta.order() },
            m,
            form: None,
            field: None,
            sequence: TransformSequence::new(),
            coherence: None,
        });
    }
    let gen = infinitesimal_generator(f, spec, m)?;
    let x = tidy_vf(&gen.field)?;
    let nu = restriction_valuation(&x, g)?;
    if nu < 2 {
        return Err(PipelineError::NotNeutral(format!("ν(X|Γ) = {nu}")));
    }
    let vr = reduce_vf_to_rs(&x, g)?;
    if !negligible(&vr.form.lambda.add_ref(&K::one()), tol) {
        return Err(PipelineError::Shape(format!(
            "λ = {} cannot be scaled to −1 in this field (no exact {}-th root)",
            vr.form.lambda, vr.form.q
        )));
    }
    let order = vr.form.field.order();
    let map = tidy_diffeo(&exp_flow(&vr.form.field, &K::one(), order)?)?;
    let form = RSDiffeo::from_field(&vr.form, map);
    let coherence = transport(&fm, g, &vr.sequence).ok().map(|ft| {
        let o = ft.order().min(form.map.order());
        ft.truncate(o).distance(&form.map.truncate(o))
    });
    Ok(DiffeoReduction { verdict: Verdict::Reduced, m, form: Some(form), field: Some(vr.form), sequence: vr.sequence, coherence })
}

fn transport<K: Coeff>(
    f: &DiffeoJet<K>,
    g: &CurveParam<K>,
    seq: &TransformSequence<K>,
) -> Result<DiffeoJet<K>, PipelineError> {
    let mut f = f.clone();
    let mut g = g.clone();
    for m in &seq.maps {
        let (ft, gt) = m.apply_to_diffeo(&f, &g)?;
        f = tidy_diffeo(&ft)?;
        g = tidy_curve(&gt)?;
    }
    Ok(f)
}
