use std::cmp::Ordering;

use num_complex::Complex64;
use num_integer::Integer;
use serde_json::{json, Value};

use crate::jets::json::jet_to_value;
use crate::jets::{compose_tuple, functional_inverse, Coeff, Jet, JetError};

use super::{parse_components, DiffeoJet, DynError, VectorField};

/// Parametrization `s ↦ γ(s)` of a formal curve through the origin.
#[derive(Clone, PartialEq, Debug)]
pub struct CurveParam<K: Coeff> {
    comps: Vec<Jet<K>>,
}

impl<K: Coeff> CurveParam<K> {
    pub fn new(comps: Vec<Jet<K>>) -> Result<Self, DynError> {
        if comps.is_empty() {
            return Err(DynError::BadCurve("no components".into()));
        }
        for (i, c) in comps.iter().enumerate() {
            if c.nvars() != 1 {
                return Err(DynError::BadCurve(format!("component {i} is not univariate")));
            }
            if !c.constant_term().is_zero() {
                return Err(DynError::NotSingular(i));
            }
        }
        if comps.iter().all(|c| c.is_zero()) {
            return Err(DynError::BadCurve("all components vanish".into()));
        }
        let order = comps.iter().map(|c| c.order()).min().unwrap_or(0);
        let comps: Vec<Jet<K>> = comps.into_iter().map(|c| c.truncate(order)).collect();
        let mut g = 0u32;
        for c in &comps {
            for (e, _) in c.terms() {
                g = g.gcd(&(e[0] as u32));
            }
        }
        if g > 1 {
            return Err(DynError::BadCurve(format!("parametrization is not reduced (exponent gcd {g})")));
        }
        Ok(CurveParam { comps })
    }

    /// The curve `s ↦ (s, h_2(s), …, h_n(s))`.
    pub fn graph(hs: Vec<Jet<K>>, order: u32) -> Result<Self, DynError> {
        let mut comps = vec![Jet::var(1, order, 0)];
        comps.extend(hs.into_iter().map(|h| h.truncate(order)));
        Self::new(comps)
    }

    /// The first coordinate axis.
    pub fn axis(n: usize, order: u32) -> Self {
        let mut comps = vec![Jet::var(1, order, 0)];
        comps.extend((1..n).map(|_| Jet::zero(1, order)));
        CurveParam { comps }
    }

    pub fn components(&self) -> &[Jet<K>] {
        &self.comps
    }
    pub fn component(&self, i: usize) -> &Jet<K> {
        &self.comps[i]
    }
    pub fn dim(&self) -> usize {
        self.comps.len()
    }
    pub fn order(&self) -> u32 {
        self.comps.iter().map(|c| c.order()).min().unwrap_or(0)
    }
    pub fn multiplicity(&self) -> u32 {
        self.comps.iter().filter_map(|c| c.valuation()).min().expect("nonzero curve")
    }
    /// First coordinate realizing the multiplicity.
    pub fn chart(&self) -> usize {
        let nu = self.multiplicity();
        self.comps.iter().position(|c| c.valuation() == Some(nu)).expect("nonzero curve")
    }
    /// Coefficients of `s^ν`: a vector spanning the tangent line.
    pub fn tangent(&self) -> Vec<K> {
        let nu = self.multiplicity();
        self.comps.iter().map(|c| c.uc(nu)).collect()
    }
    pub fn truncate(&self, order: u32) -> Self {
        CurveParam { comps: self.comps.iter().map(|c| c.truncate(order)).collect() }
    }
    pub fn to_float(&self) -> CurveParam<Complex64> {
        CurveParam { comps: self.comps.iter().map(|c| c.to_float()).collect() }
    }

    /// Reparametrize as a graph over coordinate 0: returns `h_j` with `Γ = {y_j = h_j(x)}`.
    pub fn graph_functions(&self) -> Result<Vec<Jet<K>>, DynError> {
        if self.comps[0].valuation() != Some(1) {
            return Err(DynError::NotGraph);
        }
        let inv = functional_inverse(&[self.comps[0].clone()])?;
        Ok(self.comps[1..]
            .iter()
            .map(|c| c.compose(&inv).expect("univariate"))
            .collect())
    }

    /// Strict transform under the blow-up of the origin centered at the tangent direction.
    ///
    /// Chart coordinate `c` is kept; the others become `γ_j/γ_c - ξ_j`.
    pub fn blow_up(&self) -> Result<(Self, Vec<K>), DynError> {
        let nu = self.multiplicity();
        let c = self.chart();
        let order = self.order();
        if 2 * nu > order {
            return Err(JetError::OrderExhausted { needed: 2 * nu, available: order }.into());
        }
        let t = self.tangent();
        let lead = t[c].inv().expect("chart coefficient");
        let xi: Vec<K> = t.iter().map(|v| v.mul_ref(&lead)).collect();
        let mut comps = Vec::with_capacity(self.dim());
        for (j, g) in self.comps.iter().enumerate() {
            if j == c {
                comps.push(g.clone());
            } else {
                let q = g.series_div(&self.comps[c])?;
                let shifted = q.sub(&Jet::constant(1, q.order(), xi[j].clone()))?;
                comps.push(shifted);
            }
        }
        Ok((CurveParam::new(comps)?, xi))
    }

    pub fn to_json(&self) -> Value {
        json!({"kind": "curve", "components": self.comps.iter().map(jet_to_value).collect::<Vec<_>>()})
    }
    pub fn from_json(v: &Value) -> Result<Self, DynError> {
        Self::new(parse_components(v, "curve")?)
    }
}

/// Either kind of formal dynamical object.
#[derive(Debug)]
pub enum Object<'a, K: Coeff> {
    Diffeo(&'a DiffeoJet<K>),
    Field(&'a VectorField<K>),
}

impl<K: Coeff> Clone for Object<'_, K> {
    fn clone(&self) -> Self {
        *self
    }
}
impl<K: Coeff> Copy for Object<'_, K> {}

impl<'a, K: Coeff> Object<'a, K> {
    fn components(&self) -> &'a [Jet<K>] {
        match self {
            Object::Diffeo(f) => f.components(),
            Object::Field(x) => x.components(),
        }
    }
    fn linear_part(&self) -> crate::jets::Mat<K> {
        match self {
            Object::Diffeo(f) => f.linear_part(),
            Object::Field(x) => x.linear_part(),
        }
    }
}

/// Outcome of an invariance test.
#[derive(Clone, PartialEq, Debug)]
pub enum Invariance<K: Coeff> {
    /// `θ(s)` for diffeomorphisms or `h(s)` for vector fields.
    Invariant(Jet<K>),
    NotInvariant { component: usize },
}

impl<K: Coeff> Invariance<K> {
    pub fn is_invariant(&self) -> bool {
        matches!(self, Invariance::Invariant(_))
    }
    pub fn series(&self) -> Option<&Jet<K>> {
        match self {
            Invariance::Invariant(s) => Some(s),
            _ => None,
        }
    }
}

fn same_to<K: Coeff>(a: &Jet<K>, b: &Jet<K>, order: u32) -> bool {
    let tol = if K::EXACT { 0.0 } else { 1e-9 * (1.0 + a.max_abs().max(b.max_abs())) };
    match a.truncate(order).sub(&b.truncate(order)) {
        Ok(d) => {
            if K::EXACT {
                d.is_zero()
            } else {
                d.max_abs() <= tol
            }
        }
        Err(_) => false,
    }
}

fn first_mismatch<K: Coeff>(lhs: &[Jet<K>], rhs: &[Jet<K>], order: u32) -> Option<usize> {
    (0..lhs.len()).find(|&j| !same_to(&lhs[j], &rhs[j], order))
}

fn diffeo_invariance<K: Coeff>(f: &DiffeoJet<K>, g: &CurveParam<K>) -> Result<Invariance<K>, DynError> {
    let nu = g.multiplicity();
    let c = g.chart();
    let image = compose_tuple(f.components(), g.components())?;
    let order = image.iter().map(|j| j.order()).min().unwrap_or(0);
    if order < nu {
        return Err(JetError::OrderExhausted { needed: nu, available: order }.into());
    }
    let a_inv = g.comps[c].uc(nu).inv().expect("leading coefficient");
    let u = g.comps[c].div_var_pow(0, nu)?.scale(&a_inv);
    let psi = u.nth_root_unit(nu, &K::one())?.mul_var_pow(0, 1);
    let psi_inv = functional_inverse(&[psi])?.remove(0);
    let w = image[c].scale(&a_inv);
    if w.valuation() != Some(nu) {
        return Ok(Invariance::NotInvariant { component: c });
    }
    let mu = w.uc(nu);
    let wu = w.div_var_pow(0, nu)?.scale(&mu.inv().expect("nonzero"));
    let root = wu.nth_root_unit(nu, &K::one())?.mul_var_pow(0, 1);
    let mut first_fail = c;
    for (k, omega) in mu.nth_roots(nu).into_iter().enumerate() {
        let theta = psi_inv.compose(&[root.scale(&omega)])?;
        let padded = theta.with_order(order);
        let back = compose_tuple(g.components(), &[padded])?;
        match first_mismatch(&image, &back, order) {
            None => return Ok(Invariance::Invariant(theta)),
            Some(j) if k == 0 => first_fail = j,
            _ => {}
        }
    }
    Ok(Invariance::NotInvariant { component: first_fail })
}

fn field_invariance<K: Coeff>(x: &VectorField<K>, g: &CurveParam<K>) -> Result<Invariance<K>, DynError> {
    let c = g.chart();
    let image = compose_tuple(x.components(), g.components())?;
    let order = image.iter().map(|j| j.order()).min().unwrap_or(0);
    let d: Vec<Jet<K>> = g.comps.iter().map(|j| j.derive(0)).collect();
    let check = order.min(g.order()).saturating_sub(1);
    let h = match image[c].series_div(&d[c]) {
        Ok(h) => h,
        Err(JetError::NotDivisible) => return Ok(Invariance::NotInvariant { component: c }),
        Err(e) => return Err(e.into()),
    };
    let padded = h.with_order(order);
    let rhs: Vec<Jet<K>> = d.iter().map(|dj| padded.mul_to(dj, check)).collect();
    match first_mismatch(&image, &rhs, check) {
        None => Ok(Invariance::Invariant(h)),
        Some(j) => Ok(Invariance::NotInvariant { component: j }),
    }
}

/// Test `F∘γ = γ∘θ` or `X∘γ = h·γ'` to the available order.
pub fn is_invariant_curve<K: Coeff>(obj: Object<'_, K>, g: &CurveParam<K>) -> Result<Invariance<K>, DynError> {
    if obj.components().len() != g.dim() {
        return Err(JetError::ArityMismatch { expected: obj.components().len(), got: g.dim() }.into());
    }
    match obj {
        Object::Diffeo(f) => diffeo_invariance(f, g),
        Object::Field(x) => field_invariance(x, g),
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RestrictClass {
    HyperbolicAttracting,
    RationallyNeutral,
    Other,
    /// The multiplier sits on the unit circle within float noise.
    Undecided,
}

#[derive(Clone, PartialEq, Debug)]
pub struct RestrictionData<K: Coeff> {
    pub kind: &'static str,
    pub series: Jet<K>,
    pub inner_eigenvalue: K,
    pub tangent_eigenvalue: K,
    pub multiplicity: u32,
    pub class: RestrictClass,
}

impl<K: Coeff> RestrictionData<K> {
    pub fn to_json(&self) -> Value {
        let (ir, ii) = self.inner_eigenvalue.json_parts();
        let (tr, ti) = self.tangent_eigenvalue.json_parts();
        json!({
            "kind": self.kind,
            "series": jet_to_value(&self.series),
            "inner_eigenvalue": {"re": ir, "im": ii},
            "tangent_eigenvalue": {"re": tr, "im": ti},
            "multiplicity": self.multiplicity,
            "class": self.class,
        })
    }
}

fn classify_multiplier<K: Coeff>(l: &K) -> RestrictClass {
    if K::EXACT {
        if l.pow(4) == K::one() {
            return RestrictClass::RationallyNeutral;
        }
        return match l.cmp_abs_one(0.0) {
            Some(Ordering::Less) => RestrictClass::HyperbolicAttracting,
            _ => RestrictClass::Other,
        };
    }
    match l.cmp_abs_one(1e-9) {
        Some(Ordering::Less) => RestrictClass::HyperbolicAttracting,
        Some(_) => RestrictClass::Other,
        None => RestrictClass::Undecided,
    }
}

fn classify_field_eigenvalue<K: Coeff>(v: &K) -> RestrictClass {
    if K::EXACT && v.is_zero() {
        return RestrictClass::RationallyNeutral;
    }
    match v.re_sign(1e-9) {
        Some(Ordering::Less) => RestrictClass::HyperbolicAttracting,
        Some(_) if K::EXACT => RestrictClass::Other,
        Some(Ordering::Greater) => RestrictClass::Other,
        _ => RestrictClass::Undecided,
    }
}

/// Restriction of the object to an invariant curve, with its eigenvalue data.
pub fn restrict<K: Coeff>(obj: Object<'_, K>, g: &CurveParam<K>) -> Result<RestrictionData<K>, DynError> {
    let series = match is_invariant_curve(obj, g)? {
        Invariance::Invariant(s) => s,
        Invariance::NotInvariant { component } => return Err(DynError::NotInvariant(component)),
    };
    let nu = g.multiplicity();
    let c = g.chart();
    let t = g.tangent();
    let lt = obj.linear_part().mul_vec(&t);
    let tangent = lt[c].mul_ref(&t[c].inv().expect("chart coefficient"));
    let inner = series.uc(1);
    let (kind, class, related) = match obj {
        Object::Diffeo(_) => ("diffeo", classify_multiplier(&inner), inner.pow(nu)),
        Object::Field(_) => ("vector_field", classify_field_eigenvalue(&inner), inner.mul_ref(&K::from_i64(nu as i64))),
    };
    let ok = if K::EXACT { related == tangent } else { related.sub_ref(&tangent).abs() < 1e-8 };
    if !ok {
        return Err(DynError::BadCurve("eigenvalue relation fails at this truncation".into()));
    }
    Ok(RestrictionData { kind, series, inner_eigenvalue: inner, tangent_eigenvalue: tangent, multiplicity: nu, class })
}

/// One infinitely near point of a curve.
#[derive(Clone, PartialEq, Debug)]
pub struct Tangent<K: Coeff> {
    /// Tangent vector normalized so the chart coordinate is 1.
    pub direction: Vec<K>,
    pub chart: usize,
    /// The curve whose tangent this is.
    pub curve: CurveParam<K>,
}

/// Tangent directions at the first `depth` infinitely near points.
pub fn iterated_tangents<K: Coeff>(g: &CurveParam<K>, depth: usize) -> Result<Vec<Tangent<K>>, DynError> {
    let mut out = Vec::with_capacity(depth);
    let mut cur = g.clone();
    for level in 0..depth {
        let nu = cur.multiplicity();
        if nu > cur.order() {
            return Err(JetError::OrderExhausted { needed: nu, available: cur.order() }.into());
        }
        let c = cur.chart();
        let t = cur.tangent();
        let lead = t[c].inv().expect("chart coefficient");
        out.push(Tangent { direction: t.iter().map(|v| v.mul_ref(&lead)).collect(), chart: c, curve: cur.clone() });
        if level + 1 < depth {
            cur = cur.blow_up()?.0;
        }
    }
    Ok(out)
}

fn residual_norm(hs: &[Jet<Complex64>], n: u32, point: &[Complex64]) -> f64 {
    let x = point[0];
    hs.iter()
        .zip(&point[1..])
        .map(|(h, y)| (y - h.truncate(n).eval_c64(&[x])).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Largest `N` such that `‖y - J_N h(x)‖ ≤ |x|^{N+1/2}` holds for every order up to `N`.
pub fn asymptotic_contact_order(g: &CurveParam<Complex64>, point: &[Complex64]) -> Result<Option<u32>, DynError> {
    let hs = g.graph_functions()?;
    if point.len() != g.dim() {
        return Err(JetError::ArityMismatch { expected: g.dim(), got: point.len() }.into());
    }
    let ax = point[0].norm();
    if ax == 0.0 {
        return Err(DynError::OnDivisor);
    }
    let mut best = None;
    for n in 0..=g.order() {
        if residual_norm(&hs, n, point) <= ax.powf(n as f64 + 0.5) {
            best = Some(n);
        } else {
            break;
        }
    }
    Ok(best)
}

/// Least-squares slope of `log‖y - J_N h(x)‖` against `log|x|`.
///
/// Returns infinity when every residual vanishes.
pub fn contact_slope(g: &CurveParam<Complex64>, points: &[Vec<Complex64>], n: u32) -> Result<f64, DynError> {
    let hs = g.graph_functions()?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for p in points {
        let ax = p[0].norm();
        if ax == 0.0 {
            return Err(DynError::OnDivisor);
        }
        let r = residual_norm(&hs, n, p);
        if r > 0.0 && r.is_finite() {
            xs.push(ax.ln());
            ys.push(r.ln());
        }
    }
    if xs.len() < 2 {
        return Ok(f64::INFINITY);
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::Qi;

    fn j(n: usize, order: u32, t: &[(&[u16], i64)]) -> Jet<Qi> {
        Jet::from_terms(n, order, t.iter().map(|(e, c)| (e.to_vec(), Qi::int(*c))))
    }
    fn u(order: u32, t: &[(u16, i64)]) -> Jet<Qi> {
        Jet::from_terms(1, order, t.iter().map(|(e, c)| (vec![*e], Qi::int(*c))))
    }

    #[test]
    fn radial_field_on_diagonal() {
        let x = VectorField::new(vec![j(2, 4, &[(&[1, 0], 1)]), j(2, 4, &[(&[0, 1], 1)])]).unwrap();
        let g = CurveParam::new(vec![u(4, &[(1, 1)]), u(4, &[(1, 1)])]).unwrap();
        let inv = is_invariant_curve(Object::Field(&x), &g).unwrap();
        assert_eq!(inv.series().unwrap().truncate(3), u(3, &[(1, 1)]));
    }

    #[test]
    fn linear_map_on_cusp() {
        let f = DiffeoJet::new(vec![j(2, 6, &[(&[1, 0], 4)]), j(2, 6, &[(&[0, 1], 8)])]).unwrap();
        let g = CurveParam::new(vec![u(6, &[(2, 1)]), u(6, &[(3, 1)])]).unwrap();
        let r = restrict(Object::Diffeo(&f), &g).unwrap();
        assert_eq!(r.series.truncate(3), u(3, &[(1, 2)]));
        assert_eq!(r.inner_eigenvalue, Qi::int(2));
        assert_eq!(r.tangent_eigenvalue, Qi::int(4));
        assert_eq!(r.multiplicity, 2);
    }

    #[test]
    fn diagonal_not_invariant() {
        let f = DiffeoJet::new(vec![j(2, 4, &[(&[1, 0], 1), (&[2, 0], 1)]), j(2, 4, &[(&[0, 1], 1)])]).unwrap();
        let g = CurveParam::new(vec![u(4, &[(1, 1)]), u(4, &[(1, 1)])]).unwrap();
        let r = is_invariant_curve(Object::Diffeo(&f), &g).unwrap();
        assert_eq!(r, Invariance::NotInvariant { component: 1 });
    }

    #[test]
    fn neutral_restriction() {
        let f = DiffeoJet::new(vec![
            j(2, 4, &[(&[1, 0], 1), (&[2, 0], -1)]),
            Jet::from_terms(2, 4, vec![(vec![0, 1], Qi::ratio(1, 2))]),
        ])
        .unwrap();
        let r = restrict(Object::Diffeo(&f), &CurveParam::axis(2, 4)).unwrap();
        assert_eq!(r.series, u(4, &[(1, 1), (2, -1)]));
        assert_eq!(r.class, RestrictClass::RationallyNeutral);
    }

    #[test]
    fn field_with_zero_inner_eigenvalue() {
        let x = VectorField::new(vec![j(2, 4, &[(&[2, 0], 1)]), j(2, 4, &[(&[1, 1], 2)])]).unwrap();
        let r = restrict(Object::Field(&x), &CurveParam::axis(2, 4)).unwrap();
        assert_eq!(r.series.truncate(3), u(3, &[(2, 1)]));
        assert!(r.inner_eigenvalue.is_zero());
    }

    #[test]
    fn cusp_tangents() {
        let g = CurveParam::new(vec![u(8, &[(2, 1)]), u(8, &[(3, 1)])]).unwrap();
        let t = iterated_tangents(&g, 2).unwrap();
        assert_eq!(t[0].direction, vec![Qi::int(1), Qi::zero()]);
        assert_eq!(t[1].curve.component(1).truncate(3), u(3, &[(1, 1)]));
        assert_eq!(t[1].chart, 1);
        let line = CurveParam::new(vec![u(6, &[(1, 1)]), u(6, &[(2, 1)])]).unwrap();
        assert_eq!(iterated_tangents(&line, 1).unwrap()[0].direction, vec![Qi::int(1), Qi::zero()]);
        let axis = CurveParam::<Qi>::axis(2, 5);
        assert!(iterated_tangents(&axis, 3).unwrap().iter().all(|t| t.chart == 0));
    }

    #[test]
    fn rejects_non_reduced_parametrization() {
        assert!(CurveParam::new(vec![u(6, &[(2, 1)]), u(6, &[(4, 1)])]).is_err());
    }

    #[test]
    fn contact_orders() {
        let c = |v: f64| Complex64::new(v, 0.0);
        let h = Jet::from_terms(1, 5, (1..=5).map(|k| (vec![k as u16], c(1.0))));
        let g = CurveParam::graph(vec![h.clone()], 5).unwrap();
        let x = c(0.01);
        let on = h.eval_c64(&[x]);
        assert!(asymptotic_contact_order(&g, &[x, on]).unwrap().unwrap() >= 5);
        let off = h.truncate(2).eval_c64(&[x]) + x.powi(3);
        let h2 = Jet::from_terms(1, 5, vec![(vec![1], c(1.0)), (vec![2], c(1.0)), (vec![3], c(3.0))]);
        let g2 = CurveParam::graph(vec![h2], 5).unwrap();
        assert_eq!(asymptotic_contact_order(&g2, &[x, off]).unwrap(), Some(2));
        assert_eq!(asymptotic_contact_order(&g, &[c(0.0), c(0.0)]), Err(DynError::OnDivisor));
    }
}
