//! Permissible transformations acting on vector fields, diffeomorphisms, curves and points.

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::dynamics::{is_invariant_curve, CurveParam, DiffeoJet, DynError, Invariance, Object, VectorField};
use crate::jets::{compose_tuple, identity_tuple, Coeff, Jet, JetError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TransformError {
    #[error(transparent)]
    Dyn(#[from] DynError),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("center is not invariant (component {0})")]
    CenterNotInvariant(usize),
    #[error("curve is contained in the center")]
    CurveInCenter,
    #[error("tangent line of the curve is not invariant")]
    TangentNotInvariant,
    #[error("curve must be nonsingular and transverse to the ramification hyperplane")]
    SingularCurve,
    #[error("unit extraction failed: {0}")]
    Unit(String),
    #[error("restriction order decreased from {before} to {after}")]
    RestrictionOrder { before: u32, after: u32 },
    #[error("point lies on the exceptional divisor or center")]
    OnDivisor,
    #[error("conjugacy check failed")]
    Conjugacy,
    #[error("malformed transform: {0}")]
    Input(String),
}

/// One permissible transformation `φ` (new coordinates ↦ old coordinates).
#[derive(Clone, PartialEq, Debug)]
pub enum PermissibleMap<K: Coeff> {
    /// Old coordinates are `ψ(new)`.
    Change(DiffeoJet<K>),
    /// Center `{z_i = 0 : i ∈ center}`, chart coordinate `chart ∈ center`,
    /// `z_j = z_c (z̃_j + ξ_j)` for the other center coordinates.
    BlowUp { center: Vec<usize>, chart: usize, xi: Vec<K> },
    /// `x = x̃^l` on the first coordinate.
    Ramification { l: u32 },
    /// `w_j = x^{k_j} w̃_j`; `k[0]` is unused and zero.
    Shearing { k: Vec<u32> },
}

impl<K: Coeff> PermissibleMap<K> {
    /// Blow-up of the coordinate center following `Γ`.
    pub fn blow_up_along(center: Vec<usize>, g: &CurveParam<K>) -> Result<Self, TransformError> {
        let vals: Vec<Option<u32>> = center.iter().map(|&i| g.component(i).valuation()).collect();
        let (pos, nu) = vals
            .iter()
            .enumerate()
            .filter_map(|(p, v)| v.map(|v| (p, v)))
            .min_by_key(|(_, v)| *v)
            .ok_or(TransformError::CurveInCenter)?;
        let chart = center[pos];
        let lead = g.component(chart).uc(nu).inv().expect("nonzero");
        let n = g.dim();
        let xi = (0..n)
            .map(|i| if center.contains(&i) && i != chart { g.component(i).uc(nu).mul_ref(&lead) } else { K::zero() })
            .collect();
        Ok(PermissibleMap::BlowUp { center, chart, xi })
    }

    /// Blow-up of the origin following `Γ`.
    pub fn punctual(g: &CurveParam<K>) -> Result<Self, TransformError> {
        Self::blow_up_along((0..g.dim()).collect(), g)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            PermissibleMap::Change(_) => "change",
            PermissibleMap::BlowUp { .. } => "blowup",
            PermissibleMap::Ramification { .. } => "ramification",
            PermissibleMap::Shearing { .. } => "shearing",
        }
    }

    /// `φ` as a tuple of jets in the new coordinates.
    pub fn tuple(&self, n: usize, order: u32) -> Vec<Jet<K>> {
        let mut out = identity_tuple::<K>(n, order);
        match self {
            PermissibleMap::Change(psi) => return psi.truncate(order).components().to_vec(),
            PermissibleMap::BlowUp { center, chart, xi } => {
                let zc = Jet::var(n, order, *chart);
                for &j in center {
                    if j != *chart {
                        let s = Jet::var(n, order, j).add(&Jet::constant(n, order, xi[j].clone())).expect("same arity");
                        out[j] = zc.mul_to(&s, order);
                    }
                }
            }
            PermissibleMap::Ramification { l } => {
                let mut e = vec![0u16; n];
                e[0] = *l as u16;
                out[0] = Jet::monomial(n, order, &e, K::one());
            }
            PermissibleMap::Shearing { k } => {
                for j in 1..n {
                    let mut e = vec![0u16; n];
                    e[0] = k[j] as u16;
                    e[j] = 1;
                    out[j] = Jet::monomial(n, order, &e, K::one());
                }
            }
        }
        out
    }

    fn check_center_invariant(&self, comps: &[Jet<K>]) -> Result<(), TransformError> {
        let idx: Vec<usize> = match self {
            PermissibleMap::BlowUp { center, .. } => center.clone(),
            PermissibleMap::Ramification { .. } | PermissibleMap::Shearing { .. } => vec![0],
            PermissibleMap::Change(_) => vec![],
        };
        for &i in &idx {
            let mut r = comps[i].clone();
            for &j in &idx {
                r = r.restrict_zero(j);
            }
            let tol = if K::EXACT { 0.0 } else { 1e-9 * (1.0 + comps[i].max_abs()) };
            if !r.is_zero() && r.max_abs() > tol {
                return Err(TransformError::CenterNotInvariant(i));
            }
        }
        Ok(())
    }

    /// Strict transform of a curve.
    pub fn apply_to_curve(&self, g: &CurveParam<K>) -> Result<CurveParam<K>, TransformError> {
        let n = g.dim();
        match self {
            PermissibleMap::Change(psi) => {
                let inv = psi.inverse();
                Ok(CurveParam::new(compose_tuple(inv.components(), g.components())?)?)
            }
            PermissibleMap::BlowUp { center, chart, xi } => {
                let gc = g.component(*chart);
                let mut comps = g.components().to_vec();
                for &j in center {
                    if j != *chart {
                        let q = g.component(j).series_div(gc)?;
                        comps[j] = q.sub(&Jet::constant(1, q.order(), xi[j].clone()))?;
                    }
                }
                Ok(CurveParam::new(comps)?)
            }
            PermissibleMap::Ramification { l } => {
                if g.component(0).valuation() != Some(1) {
                    return Err(TransformError::SingularCurve);
                }
                let hs = g.graph_functions()?;
                let order = g.order();
                let mut comps = vec![Jet::var(1, order, 0)];
                comps.extend(hs.iter().map(|h| h.ramify_var(0, *l).truncate(order)));
                Ok(CurveParam::new(comps)?)
            }
            PermissibleMap::Shearing { k } => {
                let g0 = g.component(0);
                let v0 = g0.valuation().ok_or(TransformError::CurveInCenter)?;
                let mut comps = g.components().to_vec();
                for j in 1..n {
                    if k[j] > 0 {
                        let d = g0.pow(k[j]).with_order(g0.order() + (k[j] - 1) * v0);
                        comps[j] = g.component(j).series_div(&d)?;
                    }
                }
                Ok(CurveParam::new(comps)?)
            }
        }
    }

    /// Transform `X̃` with `φ_* X̃ = X`, plus the strict transform of `Γ`.
    pub fn apply_to_vf(&self, x: &VectorField<K>, g: &CurveParam<K>) -> Result<(VectorField<K>, CurveParam<K>), TransformError> {
        let n = x.dim();
        let order = x.order();
        self.check_center_invariant(x.components())?;
        let before = restriction_order(x, g)?;
        let xt = match self {
            PermissibleMap::Change(psi) => x.pushforward(&psi.inverse()),
            _ => {
                let phi = self.tuple(n, order);
                let pulled = compose_tuple(x.components(), &phi)?;
                let mut comps = pulled.clone();
                match self {
                    PermissibleMap::BlowUp { center, chart, xi } => {
                        let c = *chart;
                        for &j in center {
                            if j == c {
                                continue;
                            }
                            let s = Jet::var(n, order, j).add(&Jet::constant(n, order, xi[j].clone()))?;
                            let num = pulled[j].sub(&s.mul_to(&pulled[c], order))?;
                            comps[j] = num.div_var_pow(c, 1).map_err(|e| center_error(e, j))?;
                        }
                    }
                    PermissibleMap::Ramification { l } => {
                        let inv_l = K::from_i64(*l as i64).inv().expect("nonzero");
                        comps[0] = pulled[0].div_var_pow(0, l - 1).map_err(|e| center_error(e, 0))?.scale(&inv_l);
                    }
                    PermissibleMap::Shearing { k } => {
                        for j in 1..n {
                            if k[j] == 0 {
                                continue;
                            }
                            let mut e = vec![0u16; n];
                            e[0] = (k[j] - 1) as u16;
                            e[j] = 1;
                            let corr = Jet::monomial(n, order, &e, K::from_i64(k[j] as i64)).mul_to(&pulled[0], order);
                            comps[j] = pulled[j].sub(&corr)?.div_var_pow(0, k[j]).map_err(|e| center_error(e, j))?;
                        }
                    }
                    PermissibleMap::Change(_) => unreachable!(),
                }
                let o = comps.iter().map(|c| c.order()).min().unwrap_or(0);
                VectorField::new(comps.into_iter().map(|c| c.truncate(o)).collect())?
            }
        };
        let gt = self.apply_to_curve(g)?;
        let after = restriction_order(&xt, &gt)?;
        if let (Some(b), Some(a)) = (before, after) {
            if a < b {
                return Err(TransformError::RestrictionOrder { before: b, after: a });
            }
        }
        Ok((xt, gt))
    }

    /// Transform `F̃` with `φ∘F̃ = F∘φ`, plus the strict transform of `Γ`.
    pub fn apply_to_diffeo(&self, f: &DiffeoJet<K>, g: &CurveParam<K>) -> Result<(DiffeoJet<K>, CurveParam<K>), TransformError> {
        let n = f.dim();
        let order = f.order();
        self.check_center_invariant(f.components())?;
        let ft = match self {
            PermissibleMap::Change(psi) => psi.inverse().compose(f).compose(psi),
            _ => {
                let phi = self.tuple(n, order);
                let pulled = compose_tuple(f.components(), &phi)?;
                let mut comps = pulled.clone();
                match self {
                    PermissibleMap::BlowUp { center, chart, xi } => {
                        let c = *chart;
                        let den = pulled[c].div_var_pow(c, 1).map_err(|e| center_error(e, c))?;
                        if den.constant_term().is_zero() {
                            return Err(TransformError::TangentNotInvariant);
                        }
                        for &j in center {
                            if j == c {
                                continue;
                            }
                            let num = pulled[j].div_var_pow(c, 1).map_err(|e| center_error(e, j))?;
                            let q = num.div_unit(&den)?;
                            let r = q.sub(&Jet::constant(n, q.order(), xi[j].clone()))?;
                            if !r.constant_term().is_zero() {
                                return Err(TransformError::TangentNotInvariant);
                            }
                            comps[j] = r;
                        }
                    }
                    PermissibleMap::Ramification { l } => {
                        let u = pulled[0].div_var_pow(0, *l).map_err(|e| center_error(e, 0))?;
                        let a = u.constant_term();
                        if a.is_zero() {
                            return Err(TransformError::Unit("x∘F is not x times a unit".into()));
                        }
                        let root = a.nth_root(*l).ok_or_else(|| TransformError::Unit(format!("{a} has no exact {l}-th root")))?;
                        let r = u.nth_root_unit(*l, &root)?;
                        comps[0] = r.mul_var_pow(0, 1);
                    }
                    PermissibleMap::Shearing { k } => {
                        let u = pulled[0].div_var_pow(0, 1).map_err(|e| center_error(e, 0))?;
                        if u.constant_term().is_zero() {
                            return Err(TransformError::Unit("x∘F is not x times a unit".into()));
                        }
                        for j in 1..n {
                            if k[j] == 0 {
                                continue;
                            }
                            let num = pulled[j].div_var_pow(0, k[j]).map_err(|e| center_error(e, j))?;
                            comps[j] = num.div_unit(&u.pow(k[j]))?;
                        }
                    }
                    PermissibleMap::Change(_) => unreachable!(),
                }
                let o = comps.iter().map(|c| c.order()).min().unwrap_or(0);
                DiffeoJet::new(comps.into_iter().map(|c| c.truncate(o)).collect())?
            }
        };
        let gt = self.apply_to_curve(g)?;
        if !conjugacy_holds(self, f, &ft) {
            return Err(TransformError::Conjugacy);
        }
        Ok((ft, gt))
    }

    /// Apply `φ` to a point in the new coordinates.
    pub fn map_point(&self, p: &[Complex64]) -> Result<Vec<Complex64>, TransformError> {
        let mut q = p.to_vec();
        match self {
            PermissibleMap::Change(psi) => return Ok(psi.eval_c64(p)),
            PermissibleMap::BlowUp { center, chart, xi } => {
                if p[*chart] == Complex64::new(0.0, 0.0) {
                    return Err(TransformError::OnDivisor);
                }
                for &j in center {
                    if j != *chart {
                        q[j] = p[*chart] * (p[j] + xi[j].to_c64());
                    }
                }
            }
            PermissibleMap::Ramification { l } => {
                if p[0] == Complex64::new(0.0, 0.0) {
                    return Err(TransformError::OnDivisor);
                }
                q[0] = p[0].powu(*l);
            }
            PermissibleMap::Shearing { k } => {
                if p[0] == Complex64::new(0.0, 0.0) {
                    return Err(TransformError::OnDivisor);
                }
                for j in 1..p.len() {
                    q[j] = p[0].powu(k[j]) * p[j];
                }
            }
        }
        Ok(q)
    }

    /// Inverse of [`map_point`](Self::map_point) off the center; ramifications use the principal root.
    pub fn unmap_point(&self, p: &[Complex64]) -> Result<Vec<Complex64>, TransformError> {
        let mut q = p.to_vec();
        match self {
            PermissibleMap::Change(psi) => return Ok(psi.to_float().inverse().eval_c64(p)),
            PermissibleMap::BlowUp { center, chart, xi } => {
                if p[*chart] == Complex64::new(0.0, 0.0) {
                    return Err(TransformError::OnDivisor);
                }
                for &j in center {
                    if j != *chart {
                        q[j] = p[j] / p[*chart] - xi[j].to_c64();
                    }
                }
            }
            PermissibleMap::Ramification { l } => {
                if p[0] == Complex64::new(0.0, 0.0) {
                    return Err(TransformError::OnDivisor);
                }
                q[0] = p[0].powf(1.0 / *l as f64);
            }
            PermissibleMap::Shearing { k } => {
                if p[0] == Complex64::new(0.0, 0.0) {
                    return Err(TransformError::OnDivisor);
                }
                for j in 1..p.len() {
                    q[j] = p[j] / p[0].powu(k[j]);
                }
            }
        }
        Ok(q)
    }

    pub fn to_json(&self) -> Value {
        match self {
            PermissibleMap::Change(psi) => json!({"kind": "change", "map": psi.to_json()}),
            PermissibleMap::BlowUp { center, chart, xi } => json!({
                "kind": "blowup",
                "center": center,
                "chart": chart,
                "xi": xi.iter().map(|c| { let (re, im) = c.json_parts(); json!({"re": re, "im": im}) }).collect::<Vec<_>>(),
            }),
            PermissibleMap::Ramification { l } => json!({"kind": "ramification", "l": l}),
            PermissibleMap::Shearing { k } => json!({"kind": "shearing", "k": k}),
        }
    }

    pub fn from_json(v: &Value) -> Result<Self, TransformError> {
        let bad = |m: &str| TransformError::Input(m.to_string());
        let kind = v.get("kind").and_then(|k| k.as_str()).ok_or_else(|| bad("missing kind"))?;
        let uints = |key: &str| -> Result<Vec<u64>, TransformError> {
            v.get(key)
                .and_then(|a| a.as_array())
                .ok_or_else(|| bad(key))?
                .iter()
                .map(|x| x.as_u64().ok_or_else(|| bad(key)))
                .collect()
        };
        match kind {
            "change" => Ok(PermissibleMap::Change(DiffeoJet::from_json(v.get("map").ok_or_else(|| bad("map"))?)?)),
            "blowup" => {
                let center: Vec<usize> = uints("center")?.into_iter().map(|x| x as usize).collect();
                let chart = v.get("chart").and_then(|c| c.as_u64()).ok_or_else(|| bad("chart"))? as usize;
                let xi = v
                    .get("xi")
                    .and_then(|a| a.as_array())
                    .ok_or_else(|| bad("xi"))?
                    .iter()
                    .map(|c| {
                        let re = c.get("re").and_then(|x| x.as_str()).unwrap_or("0");
                        let im = c.get("im").and_then(|x| x.as_str()).unwrap_or("0");
                        K::parse_parts(re, im).map_err(TransformError::from)
                    })
                    .collect::<Result<Vec<K>, _>>()?;
                if !center.contains(&chart) {
                    return Err(bad("chart outside center"));
                }
                Ok(PermissibleMap::BlowUp { center, chart, xi })
            }
            "ramification" => {
                let l = v.get("l").and_then(|l| l.as_u64()).ok_or_else(|| bad("l"))?;
                if l == 0 {
                    return Err(bad("l must be positive"));
                }
                Ok(PermissibleMap::Ramification { l: l as u32 })
            }
            "shearing" => Ok(PermissibleMap::Shearing { k: uints("k")?.into_iter().map(|x| x as u32).collect() }),
            other => Err(bad(&format!("unknown kind {other}"))),
        }
    }
}

fn center_error(e: JetError, j: usize) -> TransformError {
    match e {
        JetError::NotDivisible => TransformError::CenterNotInvariant(j),
        other => other.into(),
    }
}

fn restriction_order<K: Coeff>(x: &VectorField<K>, g: &CurveParam<K>) -> Result<Option<u32>, TransformError> {
    Ok(match is_invariant_curve(Object::Field(x), g)? {
        Invariance::Invariant(h) if K::EXACT => h.valuation(),
        Invariance::Invariant(h) => h.chop(1e-9 * (1.0 + h.max_abs())).valuation(),
        Invariance::NotInvariant { .. } => None,
    })
}

/// Jet-level check of `φ∘F̃ = F∘φ` at the shared order.
pub fn conjugacy_holds<K: Coeff>(map: &PermissibleMap<K>, f: &DiffeoJet<K>, ft: &DiffeoJet<K>) -> bool {
    let n = f.dim();
    let order = ft.order();
    let phi = map.tuple(n, order);
    let lhs = match compose_tuple(&phi, ft.components()) {
        Ok(v) => v,
        Err(_) => return false,
    };
    let rhs = match compose_tuple(f.components(), &phi) {
        Ok(v) => v,
        Err(_) => return false,
    };
    lhs.iter().zip(&rhs).all(|(a, b)| {
        let d = a.truncate(order).sub(&b.truncate(order)).expect("same arity");
        if K::EXACT {
            d.is_zero()
        } else {
            d.max_abs() <= 1e-9 * (1.0 + a.max_abs())
        }
    })
}

/// Ordered list of permissible maps; the composite is `φ_1 ∘ φ_2 ∘ …`.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct TransformSequence<K: Coeff> {
    pub maps: Vec<PermissibleMap<K>>,
}

impl<K: Coeff> TransformSequence<K> {
    pub fn new() -> Self {
        TransformSequence { maps: Vec::new() }
    }
    pub fn push(&mut self, m: PermissibleMap<K>) {
        self.maps.push(m);
    }
    pub fn extend(&mut self, o: TransformSequence<K>) {
        self.maps.extend(o.maps);
    }
    pub fn len(&self) -> usize {
        self.maps.len()
    }
    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }
    pub fn apply_to_vf(&self, x: &VectorField<K>, g: &CurveParam<K>) -> Result<(VectorField<K>, CurveParam<K>), TransformError> {
        let (mut x, mut g) = (x.clone(), g.clone());
        for m in &self.maps {
            (x, g) = m.apply_to_vf(&x, &g)?;
        }
        Ok((x, g))
    }
    pub fn apply_to_diffeo(&self, f: &DiffeoJet<K>, g: &CurveParam<K>) -> Result<(DiffeoJet<K>, CurveParam<K>), TransformError> {
        let (mut f, mut g) = (f.clone(), g.clone());
        for m in &self.maps {
            (f, g) = m.apply_to_diffeo(&f, &g)?;
        }
        Ok((f, g))
    }
    pub fn apply_to_curve(&self, g: &CurveParam<K>) -> Result<CurveParam<K>, TransformError> {
        let mut g = g.clone();
        for m in &self.maps {
            g = m.apply_to_curve(&g)?;
        }
        Ok(g)
    }
    /// Composite `φ` as a jet tuple in the final coordinates.
    pub fn composite(&self, n: usize, order: u32) -> Vec<Jet<K>> {
        let mut acc = identity_tuple(n, order);
        for m in &self.maps {
            acc = compose_tuple(&acc, &m.tuple(n, order)).expect("compatible");
        }
        acc
    }
    pub fn map_point(&self, p: &[Complex64]) -> Result<Vec<Complex64>, TransformError> {
        let mut q = p.to_vec();
        for m in self.maps.iter().rev() {
            q = m.map_point(&q)?;
        }
        Ok(q)
    }
    pub fn unmap_point(&self, p: &[Complex64]) -> Result<Vec<Complex64>, TransformError> {
        let mut q = p.to_vec();
        for m in &self.maps {
            q = m.unmap_point(&q)?;
        }
        Ok(q)
    }
    pub fn to_json(&self) -> Value {
        Value::Array(self.maps.iter().map(|m| m.to_json()).collect())
    }
    pub fn from_json(v: &Value) -> Result<Self, TransformError> {
        let arr = v.as_array().ok_or_else(|| TransformError::Input("expected an array".into()))?;
        Ok(TransformSequence { maps: arr.iter().map(PermissibleMap::from_json).collect::<Result<_, _>>()? })
    }
}

/// Spectrum after `k` blow-ups along iterated tangents with eigenvalue `λ`.
pub fn blowup_spectrum<K: Coeff>(spec: &[K], lambda: &K, k: u32) -> Vec<K> {
    let mut rest = spec.to_vec();
    if let Some(i) = rest.iter().position(|v| v == lambda) {
        rest.remove(i);
    } else if !K::EXACT {
        if let Some(i) = (0..rest.len()).min_by(|&a, &b| {
            let da = rest[a].sub_ref(lambda).abs();
            let db = rest[b].sub_ref(lambda).abs();
            da.partial_cmp(&db).unwrap()
        }) {
            rest.remove(i);
        }
    }
    let lk = lambda.pow(k).inv().expect("nonzero eigenvalue");
    let mut out = vec![lambda.clone()];
    out.extend(rest.iter().map(|m| m.mul_ref(&lk)));
    out
}

/// Least `k` with `|μ_j/λ^k| > 1` for every `μ_j ≠ λ` in `spec`; `None` unless `0 < |λ| < 1`.
pub fn hyperbolic_blowup_count<K: Coeff>(spec: &[K], lambda: &K) -> Option<u32> {
    if lambda.is_zero() || lambda.cmp_abs_one(1e-12) != Some(std::cmp::Ordering::Less) {
        return None;
    }
    let rest = &blowup_spectrum(spec, lambda, 0)[1..];
    if rest.iter().any(|m| m.is_zero()) {
        return None;
    }
    (0..=4096u32).find(|&k| {
        let lk = lambda.pow(k);
        rest.iter().all(|m| m.div_ref(&lk).and_then(|r| r.cmp_abs_one(1e-12)) == Some(std::cmp::Ordering::Greater))
    })
}

/// `k` punctual blow-ups following `Γ`, with the strict transforms.
pub fn blow_up_iterated<K: Coeff>(
    f: &DiffeoJet<K>,
    g: &CurveParam<K>,
    k: u32,
) -> Result<(DiffeoJet<K>, CurveParam<K>, TransformSequence<K>), TransformError> {
    let (mut f, mut g) = (f.clone(), g.clone());
    let mut seq = TransformSequence::new();
    for _ in 0..k {
        let m = PermissibleMap::punctual(&g)?;
        let (ft, gt) = m.apply_to_diffeo(&f, &g)?;
        seq.push(m);
        f = ft;
        g = gt;
    }
    Ok((f, g, seq))
}

/// Blow-ups realizing the shearing `w_j ↦ x^{k_j} w_j`.
pub fn shearing_as_blowups<K: Coeff>(k: &[u32]) -> TransformSequence<K> {
    let n = k.len() + 1;
    let kmax = k.iter().copied().max().unwrap_or(0);
    let mut seq = TransformSequence::new();
    for d in 1..=kmax {
        let mut center = vec![0];
        center.extend((0..k.len()).filter(|&j| k[j] >= d).map(|j| j + 1));
        seq.push(PermissibleMap::BlowUp { center, chart: 0, xi: vec![K::zero(); n] });
    }
    seq
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::Qi;

    fn j(n: usize, order: u32, t: &[(&[u16], i64)]) -> Jet<Qi> {
        Jet::from_terms(n, order, t.iter().map(|(e, c)| (e.to_vec(), Qi::int(*c))))
    }

    #[test]
    fn punctual_blowup_of_linear_field() {
        let x = VectorField::new(vec![j(2, 5, &[(&[1, 0], 1)]), j(2, 5, &[(&[0, 1], 2)])]).unwrap();
        let g = CurveParam::axis(2, 5);
        let m = PermissibleMap::punctual(&g).unwrap();
        let (xt, _) = m.apply_to_vf(&x, &g).unwrap();
        assert_eq!(xt.component(0).truncate(3), j(2, 3, &[(&[1, 0], 1)]));
        assert_eq!(xt.component(1).truncate(3), j(2, 3, &[(&[0, 1], 1)]));
    }

    #[test]
    fn ramified_field() {
        let x = VectorField::new(vec![j(1, 6, &[(&[2], 1)])]).unwrap();
        let g = CurveParam::axis(1, 6);
        let (xt, _) = PermissibleMap::Ramification { l: 2 }.apply_to_vf(&x, &g).unwrap();
        assert_eq!(xt.component(0).truncate(4), Jet::from_terms(1, 4, vec![(vec![3], Qi::ratio(1, 2))]));
    }

    #[test]
    fn blowup_of_linear_diffeo() {
        let f = DiffeoJet::new(vec![j(2, 4, &[(&[1, 0], 2)]), j(2, 4, &[(&[0, 1], 4)])]).unwrap();
        let g = CurveParam::axis(2, 4);
        let (ft, _) = PermissibleMap::punctual(&g).unwrap().apply_to_diffeo(&f, &g).unwrap();
        assert_eq!(ft.component(1).truncate(3), j(2, 3, &[(&[0, 1], 2)]));
    }

    #[test]
    fn ramified_diffeo_squares_back() {
        let f = DiffeoJet::new(vec![j(2, 6, &[(&[1, 0], 1), (&[2, 0], -1)]), j(2, 6, &[(&[0, 1], 1)])]).unwrap();
        let g = CurveParam::axis(2, 6);
        let (ft, _) = PermissibleMap::Ramification { l: 2 }.apply_to_diffeo(&f, &g).unwrap();
        let x0 = ft.component(0);
        assert_eq!(x0.coeff(&[3, 0]), Qi::ratio(-1, 2));
        let sq = x0.mul_to(x0, x0.order());
        assert_eq!(sq, j(2, 6, &[(&[2, 0], 1), (&[4, 0], -1)]).truncate(x0.order()));
    }

    #[test]
    fn identity_change_is_neutral() {
        let f = DiffeoJet::new(vec![j(2, 4, &[(&[1, 0], 2), (&[0, 2], 1)]), j(2, 4, &[(&[0, 1], 3)])]).unwrap();
        let g = CurveParam::axis(2, 4);
        let m = PermissibleMap::Change(DiffeoJet::identity(2, 4));
        assert_eq!(m.apply_to_diffeo(&f, &g).unwrap().0, f);
    }

    #[test]
    fn spectra() {
        let s = blowup_spectrum(&[Qi::ratio(1, 2), Qi::int(1)], &Qi::ratio(1, 2), 1);
        assert_eq!(s, vec![Qi::ratio(1, 2), Qi::int(2)]);
        let s = blowup_spectrum(&[Qi::ratio(1, 2), Qi::int(3)], &Qi::ratio(1, 2), 2);
        assert_eq!(s, vec![Qi::ratio(1, 2), Qi::int(12)]);
        let s = blowup_spectrum(&[Qi::int(5), Qi::int(3)], &Qi::int(3), 0);
        assert_eq!(s, vec![Qi::int(3), Qi::int(5)]);
    }

    #[test]
    fn hyperbolic_count() {
        let h = |v: &[Qi], l: Qi| hyperbolic_blowup_count(v, &l);
        assert_eq!(h(&[Qi::ratio(1, 2), Qi::ratio(1, 4), Qi::ratio(1, 3)], Qi::ratio(1, 2)), Some(3));
        assert_eq!(h(&[Qi::ratio(1, 2), Qi::int(3)], Qi::ratio(1, 2)), Some(0));
        assert_eq!(h(&[Qi::int(2), Qi::int(3)], Qi::int(2)), None);
        // |μ/λ^k| = 1 exactly is not enough.
        assert_eq!(h(&[Qi::ratio(1, 2), Qi::ratio(1, 4)], Qi::ratio(1, 2)), Some(3));
    }

    #[test]
    fn shearing_centers() {
        let s = shearing_as_blowups::<Qi>(&[1, 0]);
        assert_eq!(s.len(), 1);
        assert!(matches!(&s.maps[0], PermissibleMap::BlowUp { center, .. } if center == &vec![0, 2 - 1]));
        let s = shearing_as_blowups::<Qi>(&[2, 1]);
        let centers: Vec<Vec<usize>> = s
            .maps
            .iter()
            .map(|m| match m {
                PermissibleMap::BlowUp { center, .. } => center.clone(),
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(centers, vec![vec![0, 1, 2], vec![0, 1]]);
        assert!(shearing_as_blowups::<Qi>(&[0, 0]).is_empty());
        let sh = PermissibleMap::<Qi>::Shearing { k: vec![0, 2, 1] };
        assert_eq!(s.composite(3, 4), sh.tuple(3, 4));
    }

    #[test]
    fn points() {
        let c = |a: f64| Complex64::new(a, 0.0);
        let m = PermissibleMap::<Qi>::BlowUp { center: vec![0, 1], chart: 0, xi: vec![Qi::zero(), Qi::zero()] };
        let p = m.map_point(&[c(0.1), c(0.02)]).unwrap();
        assert!((p[1] - c(0.002)).norm() < 1e-15);
        let back = m.unmap_point(&p).unwrap();
        assert!((back[1] - c(0.02)).norm() < 1e-15);
        let r = PermissibleMap::<Qi>::Ramification { l: 2 };
        assert!((r.map_point(&[c(0.3)]).unwrap()[0] - c(0.09)).norm() < 1e-15);
        assert_eq!(m.map_point(&[c(0.0), c(1.0)]), Err(TransformError::OnDivisor));
    }
}
