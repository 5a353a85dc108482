//! Formal diffeomorphisms, vector fields, invariant curves and restrictions.

mod curve;
mod flow;

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::jets::json::{jet_from_value, jet_to_value};
use crate::jets::{compose_tuple, functional_inverse, identity_tuple, Coeff, Jet, JetError, Mat};

pub use curve::{
    asymptotic_contact_order, contact_slope, is_invariant_curve, iterated_tangents, restrict, CurveParam,
    Invariance, Object, RestrictClass, RestrictionData, Tangent,
};
pub use flow::{exp_flow, log_unipotent};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DynError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("component {0} has a nonzero constant term")]
    NotSingular(usize),
    #[error("linear part is not invertible")]
    NotInvertible,
    #[error("linear part is not nilpotent; use the float field")]
    NotNilpotent,
    #[error("linear part is not unipotent")]
    NotUnipotent,
    #[error("series did not terminate within {0} terms")]
    NoConvergence(usize),
    #[error("curve is not invariant (component {0})")]
    NotInvariant(usize),
    #[error("invalid curve: {0}")]
    BadCurve(String),
    #[error("curve is not a graph over the first coordinate")]
    NotGraph,
    #[error("point lies on the excluded hyperplane")]
    OnDivisor,
    #[error("malformed input: {0}")]
    Input(String),
}

fn check_tuple<K: Coeff>(comps: &[Jet<K>]) -> Result<(), DynError> {
    let n = comps.len();
    if n == 0 {
        return Err(JetError::Empty.into());
    }
    for (i, c) in comps.iter().enumerate() {
        if c.nvars() != n {
            return Err(JetError::ArityMismatch { expected: n, got: c.nvars() }.into());
        }
        if !c.constant_term().is_zero() {
            return Err(DynError::NotSingular(i));
        }
    }
    Ok(())
}

fn linear_part<K: Coeff>(comps: &[Jet<K>]) -> Mat<K> {
    let n = comps.len();
    Mat::from_fn(n, n, |i, j| comps[i].linear_coeff(j))
}

fn common_order<K: Coeff>(comps: &[Jet<K>]) -> u32 {
    comps.iter().map(|c| c.order()).min().unwrap_or(0)
}

/// Jet of a local biholomorphism fixing the origin.
#[derive(Clone, PartialEq, Debug)]
pub struct DiffeoJet<K: Coeff> {
    comps: Vec<Jet<K>>,
}

impl<K: Coeff> DiffeoJet<K> {
    pub fn new(comps: Vec<Jet<K>>) -> Result<Self, DynError> {
        check_tuple(&comps)?;
        if linear_part(&comps).inverse().is_none() {
            return Err(DynError::NotInvertible);
        }
        let order = common_order(&comps);
        Ok(DiffeoJet { comps: comps.into_iter().map(|c| c.truncate(order)).collect() })
    }
    pub fn identity(n: usize, order: u32) -> Self {
        DiffeoJet { comps: identity_tuple(n, order) }
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
        common_order(&self.comps)
    }
    pub fn linear_part(&self) -> Mat<K> {
        linear_part(&self.comps)
    }
    pub fn truncate(&self, order: u32) -> Self {
        DiffeoJet { comps: self.comps.iter().map(|c| c.truncate(order)).collect() }
    }
    /// `self ∘ g`.
    pub fn compose(&self, g: &Self) -> Self {
        DiffeoJet { comps: compose_tuple(&self.comps, &g.comps).expect("compatible tuples") }
    }
    pub fn inverse(&self) -> Self {
        DiffeoJet { comps: functional_inverse(&self.comps).expect("invertible linear part") }
    }
    pub fn power(&self, m: u32) -> Self {
        let mut acc = DiffeoJet::identity(self.dim(), self.order());
        for _ in 0..m {
            acc = self.compose(&acc);
        }
        acc
    }
    pub fn is_identity(&self) -> bool {
        self.comps == identity_tuple(self.dim(), self.order())
    }
    pub fn to_float(&self) -> DiffeoJet<Complex64> {
        DiffeoJet { comps: self.comps.iter().map(|c| c.to_float()).collect() }
    }
    pub fn eval_c64(&self, p: &[Complex64]) -> Vec<Complex64> {
        self.comps.iter().map(|c| c.eval_c64(p)).collect()
    }
    /// Largest coefficient difference against another jet at the shared order.
    pub fn distance(&self, o: &Self) -> f64 {
        tuple_distance(&self.comps, &o.comps)
    }
    pub fn to_json(&self) -> Value {
        json!({"kind": "diffeo", "components": self.comps.iter().map(jet_to_value).collect::<Vec<_>>()})
    }
    pub fn from_json(v: &Value) -> Result<Self, DynError> {
        Self::new(parse_components(v, "diffeo")?)
    }
}

/// Jet of a singular formal vector field `Σ a_j ∂_j`.
#[derive(Clone, PartialEq, Debug)]
pub struct VectorField<K: Coeff> {
    comps: Vec<Jet<K>>,
}

impl<K: Coeff> VectorField<K> {
    pub fn new(comps: Vec<Jet<K>>) -> Result<Self, DynError> {
        check_tuple(&comps)?;
        let order = common_order(&comps);
        Ok(VectorField { comps: comps.into_iter().map(|c| c.truncate(order)).collect() })
    }
    pub fn zero(n: usize, order: u32) -> Self {
        VectorField { comps: (0..n).map(|_| Jet::zero(n, order)).collect() }
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
        common_order(&self.comps)
    }
    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(|c| c.is_zero())
    }
    pub fn linear_part(&self) -> Mat<K> {
        linear_part(&self.comps)
    }
    /// Multiplicity: minimum valuation of the components.
    pub fn multiplicity(&self) -> Option<u32> {
        self.comps.iter().filter_map(|c| c.valuation()).min()
    }
    pub fn truncate(&self, order: u32) -> Self {
        VectorField { comps: self.comps.iter().map(|c| c.truncate(order)).collect() }
    }
    pub fn add(&self, o: &Self) -> Self {
        VectorField { comps: self.comps.iter().zip(&o.comps).map(|(a, b)| a.add(b).expect("same arity")).collect() }
    }
    pub fn sub(&self, o: &Self) -> Self {
        VectorField { comps: self.comps.iter().zip(&o.comps).map(|(a, b)| a.sub(b).expect("same arity")).collect() }
    }
    pub fn scale(&self, t: &K) -> Self {
        VectorField { comps: self.comps.iter().map(|c| c.scale(t)).collect() }
    }
    /// Derivation `g ↦ Σ a_j ∂_j g`, keeping the order of `g`.
    pub fn apply(&self, g: &Jet<K>) -> Jet<K> {
        let order = g.order().min(self.order());
        let mut acc = Jet::zero(g.nvars(), order);
        for (j, a) in self.comps.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let d = g.derive(j);
            if d.is_zero() {
                continue;
            }
            let t = a.mul_to(&d, order);
            acc = acc.add(&t).expect("same arity");
        }
        acc
    }
    /// Lie bracket `[self, o]`.
    pub fn bracket(&self, o: &Self) -> Self {
        VectorField {
            comps: (0..self.dim())
                .map(|i| self.apply(&o.comps[i]).sub(&o.apply(&self.comps[i])).expect("same arity"))
                .collect(),
        }
    }
    /// Transport by a diffeomorphism: the field `Y` with `Y ∘ φ = Dφ · X`.
    pub fn pushforward(&self, phi: &DiffeoJet<K>) -> Self {
        let dphi: Vec<Jet<K>> = phi.comps.iter().map(|c| self.apply(c)).collect();
        let inv = phi.inverse();
        VectorField { comps: compose_tuple(&dphi, &inv.comps).expect("compatible") }
    }
    pub fn to_float(&self) -> VectorField<Complex64> {
        VectorField { comps: self.comps.iter().map(|c| c.to_float()).collect() }
    }
    pub fn eval_c64(&self, p: &[Complex64]) -> Vec<Complex64> {
        self.comps.iter().map(|c| c.eval_c64(p)).collect()
    }
    pub fn distance(&self, o: &Self) -> f64 {
        tuple_distance(&self.comps, &o.comps)
    }
    pub fn to_json(&self) -> Value {
        json!({"kind": "vf", "components": self.comps.iter().map(jet_to_value).collect::<Vec<_>>()})
    }
    pub fn from_json(v: &Value) -> Result<Self, DynError> {
        Self::new(parse_components(v, "vf")?)
    }
}

pub(crate) fn tuple_distance<K: Coeff>(a: &[Jet<K>], b: &[Jet<K>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let o = x.order().min(y.order());
            x.truncate(o).sub(&y.truncate(o)).map(|d| d.max_abs()).unwrap_or(f64::INFINITY)
        })
        .fold(0.0, f64::max)
}

pub(crate) fn parse_components<K: Coeff>(v: &Value, kind: &str) -> Result<Vec<Jet<K>>, DynError> {
    if let Some(k) = v.get("kind").and_then(|k| k.as_str()) {
        if k != kind {
            return Err(DynError::Input(format!("expected kind {kind}, found {k}")));
        }
    }
    let arr = v
        .get("components")
        .and_then(|c| c.as_array())
        .ok_or_else(|| DynError::Input("missing components array".into()))?;
    arr.iter().map(|c| jet_from_value(c).map_err(DynError::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::Qi;

    fn j(n: usize, order: u32, t: &[(&[u16], i64)]) -> Jet<Qi> {
        Jet::from_terms(n, order, t.iter().map(|(e, c)| (e.to_vec(), Qi::int(*c))))
    }

    #[test]
    fn bracket_of_euler_and_x2() {
        // [x∂x, x²∂x] = x²∂x
        let e = VectorField::new(vec![j(1, 4, &[(&[1], 1)])]).unwrap();
        let f = VectorField::new(vec![j(1, 4, &[(&[2], 1)])]).unwrap();
        assert_eq!(e.bracket(&f).component(0), &j(1, 4, &[(&[2], 1)]));
    }

    #[test]
    fn diffeo_rejects_singular_linear_part() {
        let r = DiffeoJet::new(vec![j(1, 3, &[(&[2], 1)])]);
        assert_eq!(r, Err(DynError::NotInvertible));
    }

    #[test]
    fn json_roundtrip() {
        let f = DiffeoJet::new(vec![j(2, 3, &[(&[1, 0], 2), (&[0, 2], 1)]), j(2, 3, &[(&[0, 1], 1)])]).unwrap();
        assert_eq!(DiffeoJet::from_json(&f.to_json()).unwrap(), f);
    }
}
