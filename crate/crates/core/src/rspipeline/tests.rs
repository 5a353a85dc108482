use super::*;
use crate::infgen::PolarEigenvalue;
use crate::jets::{qmat, Complex64, Qi};
use crate::transforms::PermissibleMap;

fn poly<K: Coeff>(n: usize, order: u32, terms: &[(&[u16], K)]) -> Jet<K> {
    Jet::from_terms(n, order, terms.iter().map(|(e, c)| (e.to_vec(), c.clone())))
}

fn q(n: i64) -> Qi {
    Qi::int(n)
}

fn field(comps: Vec<Jet<Qi>>) -> VectorField<Qi> {
    VectorField::new(comps).unwrap()
}

fn curve(comps: &[&[(u16, i64)]], order: u32) -> CurveParam<Qi> {
    CurveParam::new(
        comps.iter().map(|c| Jet::from_terms(1, order, c.iter().map(|&(e, v)| (vec![e], q(v))))).collect(),
    )
    .unwrap()
}

#[test]
fn desingularization_counts() {
    let (s, g) = desingularize_curve(&curve(&[&[(1, 1)], &[(2, 1)]], 12)).unwrap();
    assert!(s.is_empty());
    assert_eq!(g.multiplicity(), 1);

    let (s, g) = desingularize_curve(&curve(&[&[(2, 1)], &[(3, 1)]], 12)).unwrap();
    assert_eq!(s.len(), 2);
    assert_eq!(g.multiplicity(), 1);

    let (s, g) = desingularize_curve(&curve(&[&[(2, 1)], &[(5, 1)]], 16)).unwrap();
    assert_eq!(s.len(), 3);
    assert_eq!(g.multiplicity(), 1);
}

#[test]
fn already_rs_field() {
    let n = 2;
    let o = 8;
    let x = field(vec![
        poly(n, o, &[(&[2, 0], q(1))]),
        poly(n, o, &[(&[0, 1], q(-1)), (&[1, 1], q(-1))]),
    ]);
    let r = reduce_vf_to_rs(&x, &CurveParam::axis(2, o)).unwrap();
    let f = &r.form;
    assert_eq!((f.q, f.nu, f.p), (1, 0, 1));
    assert_eq!(f.lambda, q(-1));
    assert_eq!(f.d[0].uc(0), q(-1));
    // x ↦ −x flips the sign of the x^q C term.
    assert_eq!(f.c, qmat(&[&[1]]));
    assert!(validate_rs(f).ok());
    assert_eq!(r.sequence.len(), 1);
    let (replayed, _) = r.sequence.apply_to_vf(&x, &CurveParam::axis(2, o)).unwrap();
    assert_eq!(replayed, f.field);
}

#[test]
fn quadratic_y_needs_resplit() {
    let n = 2;
    let o = 10;
    let x = field(vec![poly(n, o, &[(&[2, 0], q(1))]), poly(n, o, &[(&[0, 2], q(1))])]);
    let r = reduce_vf_to_rs(&x, &CurveParam::axis(2, o)).unwrap();
    let f = &r.form;
    assert_eq!((f.q, f.nu, f.p), (1, 1, 0));
    assert_eq!(f.c, qmat(&[&[3]]));
    assert!(validate_rs(f).ok());
    assert_eq!(r.q_in, f.q);
}

#[test]
fn nonsingular_quotient_branch() {
    let n = 2;
    let o = 8;
    let x = field(vec![poly(n, o, &[(&[1, 0], q(1))]), poly(n, o, &[(&[1, 1], q(1))])]);
    let r = reduce_vf_to_rs(&x, &CurveParam::axis(2, o)).unwrap();
    let f = &r.form;
    assert_eq!((f.q, f.nu, f.p), (0, 0, 0));
    assert_eq!(f.c, qmat(&[&[-1]]));
    assert!(validate_rs(f).ok());
}

#[test]
fn one_dimensional_normalization() {
    let o = 10;
    let a = poly(1, o, &[(&[3], q(1)), (&[4], q(5)), (&[5], q(1))]);
    let x = field(vec![a.clone()]);
    let g = CurveParam::axis(1, o);
    let (f, seq) = normalize_pre_rs(&x, &g).unwrap();
    assert_eq!(f.q, 2);
    assert_eq!(f.lambda, q(-1));
    // Residue of dx/a is a conjugacy invariant: −b/λ² = res.
    let unit = a.div_var_pow(0, 3).unwrap().inv_unit().unwrap();
    let res = unit.uc(2);
    assert_eq!(f.b.neg_ref(), res);
    match &seq.maps[0] {
        PermissibleMap::Change(psi) => {
            assert_eq!(psi.component(0).coeff(&[2]), q(-5));
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(validate_rs(&f).ok());
}

#[test]
fn turrittin_branch_with_ramification() {
    let n = 3;
    let o = 22;
    let x = field(vec![
        poly(n, o, &[(&[3, 0, 0], q(1))]),
        poly(n, o, &[(&[0, 0, 1], q(1))]),
        poly(n, o, &[(&[1, 1, 0], q(1))]),
    ]);
    let r = reduce_vf_to_rs(&x, &CurveParam::axis(3, o)).unwrap();
    assert!(validate_rs(&r.form).ok(), "{:?}", validate_rs(&r.form));
    assert_eq!(r.ramification, 2);
    assert_eq!(r.form.q, r.ramification * r.q_in);
    assert!(r.linear.is_some());
}

#[test]
fn validator_reports_noncommuting_data() {
    let n = 3;
    let o = 6;
    let x = field(vec![
        poly(n, o, &[(&[2, 0, 0], q(-1))]),
        poly(n, o, &[(&[0, 1, 0], q(1)), (&[1, 0, 1], q(1))]),
        poly(n, o, &[(&[0, 0, 1], q(2))]),
    ]);
    let form = RSVectorField {
        q: 1,
        nu: 0,
        p: 1,
        lambda: q(-1),
        b: q(0),
        d: vec![Jet::univariate(1, &[q(1)]), Jet::univariate(1, &[q(2)])],
        c: qmat(&[&[0, 1], &[0, 0]]),
        field: x,
        curve: CurveParam::axis(3, o),
    };
    let rep = validate_rs(&form);
    assert!(!rep.clause("commute").unwrap().pass);
    assert!(rep.clause("y-shape").unwrap().pass);
}

#[test]
fn float_flow_reduces_to_diffeo_form() {
    let n = 2;
    let o = 8;
    let l2 = std::f64::consts::LN_2;
    let c = |v: f64| Complex64::new(v, 0.0);
    let x = VectorField::new(vec![
        poly(n, o, &[(&[2, 0], c(1.0))]),
        poly(n, o, &[(&[0, 1], c(-l2)), (&[1, 1], c(-l2))]),
    ])
    .unwrap();
    let f = exp_flow_for_tests(&x, o);
    let spec = [PolarEigenvalue::from_ints(1, 1, 0, 1), PolarEigenvalue::from_ints(1, 2, 0, 1)];
    let red = reduce_diffeo_to_rs(&f, &CurveParam::axis(2, o), &spec).unwrap();
    assert_eq!(red.verdict, Verdict::Reduced);
    assert_eq!(red.m, 1);
    let form = red.form.unwrap();
    assert_eq!((form.q, form.k, form.p), (1, 0, 1));
    assert!((form.d[0].uc(0) - c(-l2)).norm() < 1e-9);
    assert!((form.c.get(0, 0) - c(l2)).norm() < 1e-9);
    assert!(validate_rs(&form).ok(), "{:?}", validate_rs(&form));
    assert!(red.coherence.unwrap() < 1e-9);
}

fn exp_flow_for_tests(x: &VectorField<Complex64>, o: u32) -> DiffeoJet<Complex64> {
    crate::dynamics::exp_flow(x, &Complex64::new(1.0, 0.0), o).unwrap()
}

#[test]
fn period_two_map_uses_second_iterate() {
    let n = 2;
    let o = 8;
    let f = DiffeoJet::new(vec![
        poly(n, o, &[(&[1, 0], q(-1)), (&[3, 0], Qi::ratio(-1, 2))]),
        poly(n, o, &[(&[0, 1], q(-1)), (&[1, 1], q(1))]),
    ])
    .unwrap();
    let spec = [PolarEigenvalue::from_ints(1, 1, 1, 2), PolarEigenvalue::from_ints(1, 1, 1, 2)];
    let red = reduce_diffeo_to_rs(&f, &CurveParam::axis(2, o), &spec).unwrap();
    assert_eq!(red.m, 2);
    let form = red.form.unwrap();
    assert_eq!(form.q, 2);
    assert!(validate_rs(&form).ok(), "{:?}", validate_rs(&form));
}

#[test]
fn periodic_curve_verdict() {
    let n = 2;
    let o = 6;
    let f = DiffeoJet::new(vec![poly(n, o, &[(&[1, 0], q(-1))]), poly(n, o, &[(&[0, 1], q(-1)), (&[2, 0], q(0))])]).unwrap();
    let spec = [PolarEigenvalue::from_ints(1, 1, 1, 2), PolarEigenvalue::from_ints(1, 1, 1, 2)];
    let red = reduce_diffeo_to_rs(&f, &CurveParam::axis(2, o), &spec).unwrap();
    assert_eq!(red.verdict.label(), "case (i): periodic-curve");
    assert!(red.form.is_none());
}

#[test]
fn contact_mismatch_is_reported() {
    let n = 2;
    let o = 8;
    let x = field(vec![poly(n, o, &[(&[2, 0], q(1))]), poly(n, o, &[(&[1, 1], q(1))])]);
    let r = reduce_vf_to_rs(&x, &CurveParam::axis(2, o)).unwrap();
    let map = crate::dynamics::exp_flow(&r.form.field, &q(1), r.form.field.order()).unwrap();
    let mut form = RSDiffeo::from_field(&r.form, map);
    assert!(validate_rs(&form).ok(), "{:?}", validate_rs(&form));
    form.k += 1;
    form.p = form.q.saturating_sub(form.k);
    let rep = validate_rs(&form);
    assert!(!rep.clause("contact").unwrap().pass);
}
