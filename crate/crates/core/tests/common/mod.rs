#![allow(dead_code)]

use rand::Rng;
use rsform::dynamics::{CurveParam, DiffeoJet, VectorField};
use rsform::jets::{qmat, rationalize, Coeff, Jet, Qi};
use rsform::manifold::invariant_graph;
use rsform::rspipeline::RSDiffeo;
use rsform::transforms::PermissibleMap;
use rsform::turrittin::{required_order, LinearSystem};
use rsform::{Complex64, Mat, PolyMatrix};

/// Random field with strictly upper-triangular linear part and sparse higher terms.
pub fn random_nilpotent_field<R: Rng>(rng: &mut R, n: usize, order: u32) -> VectorField<Qi> {
    let mut comps = Vec::with_capacity(n);
    for i in 0..n {
        let mut terms: Vec<(Vec<u16>, Qi)> = Vec::new();
        for j in i + 1..n {
            if rng.gen_bool(0.6) {
                let mut e = vec![0u16; n];
                e[j] = 1;
                terms.push((e, Qi::int(rng.gen_range(-3..=3))));
            }
        }
        let extra = rng.gen_range(1..=4);
        for _ in 0..extra {
            let d = rng.gen_range(2..=order.min(5));
            let mut e = vec![0u16; n];
            for _ in 0..d {
                e[rng.gen_range(0..n)] += 1;
            }
            let num = rng.gen_range(-4..=4);
            let den = rng.gen_range(1..=3);
            terms.push((e, Qi::ratio(num, den)));
        }
        comps.push(Jet::from_terms(n, order, terms));
    }
    VectorField::new(comps).expect("zero constant terms")
}

fn lin(s: u32, coeffs: &[&[&[i64]]]) -> LinearSystem<Qi> {
    let c: Vec<Mat<Qi>> = coeffs.iter().map(|m| qmat(m)).collect();
    let m = c[0].rows();
    LinearSystem::new(s, PolyMatrix::from_coeffs(c).pad(required_order(s, m))).unwrap()
}

/// Linear systems of dimension ≤ 3 for the reduction driver.
pub fn linear_corpus() -> Vec<(&'static str, LinearSystem<Qi>)> {
    vec![
        ("split-diagonal", lin(1, &[&[&[1, 0], &[0, -1]], &[&[2, 1], &[3, 0]]])),
        ("scalar", lin(1, &[&[&[1]], &[&[1]]])),
        ("airy", lin(1, &[&[&[0, 1], &[0, 0]], &[&[0, 0], &[1, 0]]])),
        ("euler", lin(1, &[&[&[1, 0], &[0, 0]], &[&[0, -1], &[0, 0]]])),
        ("regular-singular", lin(0, &[&[&[1, 2], &[0, 3]]])),
        ("jordan-3-partial", lin(1, &[&[&[0, 1, 0], &[0, 0, 1], &[0, 0, 0]], &[&[0, 0, 0], &[0, 0, 0], &[0, 1, 0]]])),
        ("drop-to-regular", lin(1, &[&[&[0, 1], &[0, 0]], &[&[0, 0], &[0, 0]], &[&[0, 0], &[1, 0]]])),
        ("scalar-plus-nilpotent", lin(1, &[&[&[1, 1], &[0, 1]], &[&[0, 0], &[1, 0]]])),
        ("distinct-3", lin(1, &[&[&[1, 1, 0], &[0, 2, 1], &[0, 0, 3]], &[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]])),
        ("mixed-3", lin(1, &[&[&[1, 0, 0], &[0, 0, 1], &[0, 0, 0]], &[&[0, 1, 1], &[1, 0, 0], &[1, 1, 0]]])),
        ("rank-2-cubic", lin(2, &[&[&[0, 1], &[0, 0]], &[&[0, 0], &[0, 0]], &[&[0, 0], &[0, 0]], &[&[0, 0], &[1, 0]]])),
        ("rank-2-airy", lin(2, &[&[&[0, 1], &[0, 0]], &[&[0, 0], &[1, 0]]])),
        ("rotation", lin(1, &[&[&[0, 1], &[-1, 0]], &[&[1, 2], &[0, 1]]])),
        ("jordan-3-square", lin(1, &[&[&[0, 1, 0], &[0, 0, 1], &[0, 0, 0]], &[&[0; 3], &[0; 3], &[0; 3]], &[&[0, 0, 0], &[0, 0, 0], &[0, 1, 0]]])),
    ]
}

/// Nilpotent 3-cycle whose reduction needs cube roots of unity.
pub fn cyclic_three() -> LinearSystem<Qi> {
    lin(1, &[&[&[0, 1, 0], &[0, 0, 1], &[0, 0, 0]], &[&[0, 0, 0], &[0, 0, 0], &[1, 0, 0]]])
}

pub fn qj(n: usize, order: u32, terms: &[(&[u16], i64, i64)]) -> Jet<Qi> {
    Jet::from_terms(n, order, terms.iter().map(|(e, a, b)| (e.to_vec(), Qi::ratio(*a, *b))))
}

pub fn qdiffeo(order: u32, comps: &[&[(&[u16], i64, i64)]]) -> DiffeoJet<Qi> {
    let n = comps.len();
    DiffeoJet::new(comps.iter().map(|c| qj(n, order, c)).collect()).expect("zero constant terms")
}

pub fn qfield(order: u32, comps: &[&[(&[u16], i64, i64)]]) -> VectorField<Qi> {
    let n = comps.len();
    VectorField::new(comps.iter().map(|c| qj(n, order, c)).collect()).expect("zero constant terms")
}

/// Curve `s ↦ (Σ a s^e, …)` with integer coefficients.
pub fn qcurve(order: u32, comps: &[&[(u16, i64)]]) -> CurveParam<Qi> {
    CurveParam::new(
        comps.iter().map(|c| Jet::from_terms(1, order, c.iter().map(|&(e, v)| (vec![e], Qi::int(v))))).collect(),
    )
    .expect("valid curve")
}

/// Diffeomorphisms paired with a permissible map whose center they preserve.
pub fn transform_fixtures() -> Vec<(&'static str, DiffeoJet<Qi>, CurveParam<Qi>, PermissibleMap<Qi>)> {
    let o = 12;
    let parabolic = qdiffeo(o, &[&[(&[1, 0], 1, 1), (&[2, 0], -1, 1)], &[(&[0, 1], 1, 2), (&[1, 1], 1, 1), (&[0, 2], 1, 1)]]);
    let axis2 = CurveParam::axis(2, o);
    let tangent = qdiffeo(o, &[&[(&[1, 0], 1, 2), (&[0, 2], 1, 1)], &[(&[0, 1], 1, 2), (&[2, 0], 1, 1)]]);
    let line = qcurve(o, &[&[(1, 1)], &[(1, 2)]]);
    let three = qdiffeo(o, &[
        &[(&[1, 0, 0], 1, 1), (&[2, 0, 0], 1, 1)],
        &[(&[0, 1, 0], 2, 1), (&[1, 0, 1], 1, 1)],
        &[(&[0, 0, 1], 3, 1), (&[0, 2, 0], 1, 1), (&[1, 0, 1], 1, 1)],
    ]);
    let axis3 = CurveParam::axis(3, o);
    let sheared = qdiffeo(o, &[
        &[(&[1, 0, 0], 1, 1), (&[2, 0, 0], -1, 1)],
        &[(&[0, 1, 0], 1, 2), (&[1, 1, 0], 1, 1)],
        &[(&[0, 0, 1], 1, 3), (&[1, 0, 1], 1, 1), (&[0, 2, 0], 1, 1)],
    ]);
    let psi = qdiffeo(o, &[&[(&[1, 0], 1, 1)], &[(&[0, 1], 1, 1), (&[2, 0], 1, 1)]]);
    vec![
        ("punctual blow-up, parabolic", parabolic.clone(), axis2.clone(), PermissibleMap::punctual(&axis2).unwrap()),
        ("punctual blow-up, tilted tangent", tangent, line.clone(), PermissibleMap::punctual(&line).unwrap()),
        (
            "codimension-two center",
            three.clone(),
            axis3.clone(),
            PermissibleMap::blow_up_along(vec![0, 1], &axis3).unwrap(),
        ),
        ("ramification", parabolic.clone(), axis2.clone(), PermissibleMap::Ramification { l: 2 }),
        ("shearing", sheared, axis3, PermissibleMap::Shearing { k: vec![0, 1, 2] }),
        ("coordinate change", parabolic, axis2, PermissibleMap::Change(psi)),
    ]
}

/// Vector fields with an invariant curve, for the reduction to normal form.
pub fn vf_fixtures() -> Vec<(&'static str, VectorField<Qi>, CurveParam<Qi>)> {
    vec![
        ("saddle-node", qfield(8, &[&[(&[2, 0], 1, 1)], &[(&[0, 1], -1, 1), (&[1, 1], -1, 1)]]), CurveParam::axis(2, 8)),
        ("quadratic y", qfield(10, &[&[(&[2, 0], 1, 1)], &[(&[0, 2], 1, 1)]]), CurveParam::axis(2, 10)),
        ("nonsingular quotient", qfield(8, &[&[(&[1, 0], 1, 1)], &[(&[1, 1], 1, 1)]]), CurveParam::axis(2, 8)),
        ("one-dimensional", qfield(10, &[&[(&[3], 1, 1), (&[4], 5, 1), (&[5], 1, 1)]]), CurveParam::axis(1, 10)),
        (
            "ramified 3-dim",
            qfield(22, &[&[(&[3, 0, 0], 1, 1)], &[(&[0, 0, 1], 1, 1)], &[(&[1, 1, 0], 1, 1)]]),
            CurveParam::axis(3, 22),
        ),
        (
            "two saddle-node directions",
            qfield(10, &[&[(&[3, 0, 0], 1, 1)], &[(&[0, 1, 0], -1, 1), (&[2, 1, 0], 1, 1)], &[(&[0, 0, 1], 2, 1), (&[1, 0, 1], 1, 1)]]),
            CurveParam::axis(3, 10),
        ),
    ]
}

/// `exp(g)` for a univariate polynomial `g` with `g(0)` arbitrary, truncated at degree `order`.
pub fn exp_series(g: &[Complex64], order: usize) -> Vec<Complex64> {
    let mut e = vec![Complex64::new(0.0, 0.0); order + 1];
    e[0] = g.first().copied().unwrap_or_default().exp();
    for n in 1..=order {
        let mut s = Complex64::new(0.0, 0.0);
        for a in 1..=n.min(g.len().saturating_sub(1)) {
            s += g[a] * e[n - a] * a as f64;
        }
        e[n] = s / n as f64;
    }
    e
}

/// `x − x^{q+1}`, `y_j ↦ exp(D_j(x) + x^q C_jj) y_j` with exact `D`, `C` and the multiplier series
/// rounded to rationals with denominators up to `10^12`; `d[j]` lists `D_j` from `x^0`.
pub fn diagonal_rs(q: u32, k: u32, d: &[&[Qi]], c: &[Qi], order: u32) -> RSDiffeo<Qi> {
    let n = d.len() + 1;
    let unit = |i: usize, p: u16, x: u16| {
        let mut e = vec![0u16; n];
        e[i] = p;
        e[0] += x;
        e
    };
    let round = |z: Complex64| {
        let re = rationalize(z.re, 1_000_000_000_000).expect("finite");
        let im = rationalize(z.im, 1_000_000_000_000).expect("finite");
        Qi::from_rational(&re, &im)
    };
    let mut comps = vec![Jet::from_terms(n, order, [(unit(0, 1, 0), Qi::one()), (unit(0, q as u16 + 1, 0), Qi::int(-1))])];
    for (j, dj) in d.iter().enumerate() {
        let mut g = vec![Complex64::new(0.0, 0.0); q as usize + 1];
        for (a, v) in dj.iter().enumerate() {
            g[a] += v.to_c64();
        }
        g[q as usize] += c[j].to_c64();
        let e = exp_series(&g, order as usize - 1);
        comps.push(Jet::from_terms(n, order, e.iter().enumerate().map(|(a, v)| (unit(j + 1, 1, a as u16), round(*v)))));
    }
    RSDiffeo {
        q,
        k,
        p: q - k,
        b: Qi::zero(),
        d: d.iter().map(|dj| Jet::univariate(order, dj)).collect(),
        c: Mat::from_fn(n - 1, n - 1, |i, j| if i == j { c[i].clone() } else { Qi::zero() }),
        map: DiffeoJet::new(comps).expect("diffeomorphism"),
        curve: CurveParam::axis(n, order),
    }
}

/// `(x − x², e^{−1/2} w + x² w, e^{1/2} z + x³)` with the formal invariant curve through its z-forcing.
pub fn saddle_fixture(order: u32) -> RSDiffeo<Complex64> {
    let h = 0.5f64;
    let r = |v: f64| Complex64::new(v, 0.0);
    let map = DiffeoJet::new(vec![
        Jet::from_terms(3, order, [(vec![1, 0, 0], r(1.0)), (vec![2, 0, 0], r(-1.0))]),
        Jet::from_terms(3, order, [(vec![0, 1, 0], r((-h).exp())), (vec![2, 1, 0], r(1.0))]),
        Jet::from_terms(3, order, [(vec![0, 0, 1], r(h.exp())), (vec![3, 0, 0], r(1.0))]),
    ])
    .expect("diffeomorphism");
    let curve = invariant_graph(&map, order).expect("nonresonant");
    RSDiffeo {
        q: 1,
        k: 0,
        p: 1,
        b: r(0.0),
        d: vec![Jet::univariate(order, &[r(-h)]), Jet::univariate(order, &[r(h)])],
        c: Mat::from_fn(2, 2, |_, _| r(0.0)),
        map,
        curve,
    }
}
