use super::*;
use crate::jets::{qmat, Qi};

const ORDER: u32 = 8;

/// `x∘F = x − x^{q+1}`, `y_j∘F = (3 + D_jj + x^q C_jj) y_j`; enough for the classification data.
fn model<K: Coeff>(q: u32, k: u32, d: &[&[K]], c: Mat<K>) -> RSDiffeo<K> {
    let n = d.len() + 1;
    let mono = |e: Vec<u16>, v: K| (e, v);
    let mut comps = vec![Jet::from_terms(n, ORDER, [
        mono(unit(n, 0, 1), K::one()),
        mono(unit(n, 0, q as u16 + 1), K::one().neg_ref()),
    ])];
    let mut ds = Vec::new();
    for (j, coeffs) in d.iter().enumerate() {
        let mut full = vec![K::zero(); k as usize];
        full.extend(coeffs.iter().cloned());
        let dj = Jet::univariate(q, &full);
        let mut terms = vec![mono(unit(n, j + 1, 1), K::from_ratio(3, 1))];
        for (a, v) in full.iter().enumerate() {
            let mut e = unit(n, j + 1, 1);
            e[0] = a as u16;
            terms.push(mono(e, v.clone()));
        }
        let mut e = unit(n, j + 1, 1);
        e[0] = q as u16;
        terms.push(mono(e, c.get(j, j).clone()));
        comps.push(Jet::from_terms(n, ORDER, terms));
        ds.push(dj);
    }
    RSDiffeo {
        q,
        k,
        p: q - k,
        b: K::zero(),
        d: ds,
        c,
        map: DiffeoJet::new(comps).unwrap(),
        curve: CurveParam::axis(n, ORDER),
    }
}

fn unit(n: usize, i: usize, pw: u16) -> Vec<u16> {
    let mut e = vec![0; n];
    e[i] = pw;
    e
}

fn q(v: i64) -> Qi {
    Qi::int(v)
}

#[test]
fn direction_counts() {
    for (qq, expect) in [(1u32, vec![(1.0, 0.0)]), (2, vec![(1.0, 0.0), (-1.0, 0.0)])] {
        let f = model(qq, qq, &[&[]], qmat(&[&[1]]));
        let xs: Vec<_> = attracting_directions(&f).iter().map(|d| d.xi()).collect();
        for (x, (re, im)) in xs.iter().zip(expect) {
            assert!((x - Complex64::new(re, im)).norm() < 1e-15);
        }
    }
    let f = model(4, 4, &[&[]], qmat(&[&[1]]));
    let dirs = attracting_directions(&f);
    assert_eq!(dirs.len(), 4);
    for d in dirs {
        assert!((d.xi().powu(4) - 1.0).norm() < 1e-14);
    }
}

#[test]
fn node_and_saddle_for_p_one() {
    let f = model(1, 0, &[&[q(-1)]], qmat(&[&[0]]));
    let rep = classify_direction(&f, Direction { index: 0, q: 1 }).unwrap();
    assert_eq!(rep.tags, vec![Tag::Node]);
    assert_eq!((rep.r[0], rep.s), (0, 2));

    let f = model(1, 0, &[&[q(1)]], qmat(&[&[0]]));
    let rep = classify_direction(&f, Direction { index: 0, q: 1 }).unwrap();
    assert_eq!(rep.tags, vec![Tag::Saddle]);
    assert_eq!((rep.r[0], rep.s), (0, 1));
}

#[test]
fn p_zero_is_saddle_everywhere() {
    let f = model(2, 2, &[&[], &[]], qmat(&[&[-3, 0], &[0, 5]]));
    for dir in attracting_directions(&f) {
        let rep = classify_direction(&f, dir).unwrap();
        assert_eq!(rep.tags, vec![Tag::Saddle, Tag::Saddle]);
        assert_eq!(rep.r, vec![0, 0]);
        assert_eq!(rep.s, 1);
    }
}

#[test]
fn lexicographic_order_skips_vanishing_real_parts() {
    // d = i − x with k = 0, p = 2: Re(i) = 0, so the sign comes from the x coefficient.
    let f = model(2, 0, &[&[Qi::complex((0, 1), (1, 1)), q(-1)]], qmat(&[&[0]]));
    let rep = classify_direction(&f, Direction { index: 0, q: 2 }).unwrap();
    assert_eq!((rep.tags[0], rep.nu[0], rep.r[0]), (Tag::Node, Some(0), 1));
    // ξ = −1 flips the x coefficient: ξ·(−1) = 1 > 0.
    let rep = classify_direction(&f, Direction { index: 1, q: 2 }).unwrap();
    assert_eq!((rep.tags[0], rep.r[0]), (Tag::Saddle, 1));
}

#[test]
fn eighth_root_zero_is_exact_but_float_is_indeterminate() {
    // k = 1, q = 8: coefficient of x^1 is rotated by ξ = e^{iπ/4}; Re((1+i)ξ) = 0.
    let a = Qi::complex((1, 1), (1, 1));
    let f = model(8, 1, &[&[a, q(0), q(-1)]], qmat(&[&[1]]));
    let rep = classify_direction(&f, Direction { index: 1, q: 8 }).unwrap();
    assert_eq!(rep.nu[0], Some(0));
    // Re(ξ^3 · (−1)) = −cos(3π/4) > 0: saddle, decided at order 2.
    assert_eq!((rep.tags[0], rep.r[0]), (Tag::Saddle, 2));

    let ff = RSDiffeo {
        q: f.q,
        k: f.k,
        p: f.p,
        b: Complex64::new(0.0, 0.0),
        d: f.d.iter().map(Jet::to_float).collect(),
        c: f.c.to_float(),
        map: f.map.to_float(),
        curve: f.curve.to_float(),
    };
    let err = classify_direction(&ff, Direction { index: 1, q: 8 }).unwrap_err();
    assert!(matches!(err, ClassifyError::Indeterminate { var: 2, order: 0, .. }));
}

#[test]
fn blow_up_shift_keeps_tags() {
    let d: &[&[Qi]] = &[&[q(-1), q(2)], &[q(0), q(3)], &[]];
    let c = qmat(&[&[1, 0, 0], &[0, 2, 0], &[0, 0, -1]]);
    let c_up = c.add(&Mat::identity(3));
    let f = model(3, 1, d, c);
    let g = model(3, 1, d, c_up);
    for dir in attracting_directions(&f) {
        let a = classify_direction(&f, dir).unwrap();
        let b = classify_direction(&g, dir).unwrap();
        assert_eq!(a.tags, b.tags);
        assert_eq!(a.r, b.r);
    }
}

#[test]
fn partition_orders_nodes_first_and_rescales_jordan_block() {
    // y2, y3 saddle Jordan block (C = [[1,1],[0,1]]), y4 node.
    let d: &[&[Qi]] = &[&[q(1)], &[q(1)], &[q(-1)]];
    let c = qmat(&[&[1, 1, 0], &[0, 1, 0], &[0, 0, 0]]);
    let f = model(1, 0, d, c);
    let dir = Direction { index: 0, q: 1 };
    let rep = classify_direction(&f, dir).unwrap();
    let frame = dir.frame(&f);
    let part = block_partition(&frame, &rep, 0.5).unwrap();
    assert_eq!(part.perm, vec![2, 0, 1]);
    assert_eq!(part.s, 2);
    assert_eq!(part.report.tags, vec![Tag::Node, Tag::Saddle, Tag::Saddle]);
    assert!((part.form.c.get(1, 2) - Complex64::new(0.25, 0.0)).norm() < 1e-15);
    let c2 = part.c2();
    assert_eq!((c2.rows(), c2.cols()), (2, 2));
    // The node variable's multiplier now sits in component 1.
    let lin = part.form.map.linear_part();
    assert!((lin.get(1, 1) - Complex64::new(2.0, 0.0)).norm() < 1e-15);
    assert!((lin.get(2, 2) - Complex64::new(4.0, 0.0)).norm() < 1e-15);
}

#[test]
fn diagonal_c_is_not_rescaled() {
    let f = model(1, 0, &[&[q(1)], &[q(1)]], qmat(&[&[2, 0], &[0, 3]]));
    let dir = Direction { index: 0, q: 1 };
    let rep = classify_direction(&f, dir).unwrap();
    let part = block_partition(&dir.frame(&f), &rep, 0.1).unwrap();
    assert!(part.scale.iter().all(|s| *s == Complex64::new(1.0, 0.0)));
    assert_eq!(part.form.c, f.c.to_float());
}

#[test]
fn non_jordan_c_is_rejected() {
    let f = model(1, 0, &[&[q(1)], &[q(2)]], qmat(&[&[1, 1], &[0, 2]]));
    let dir = Direction { index: 0, q: 1 };
    let rep = classify_direction(&f, dir).unwrap();
    assert!(matches!(block_partition(&dir.frame(&f), &rep, 0.1), Err(ClassifyError::NotJordan(_))));
}

#[test]
fn sector_for_node_example() {
    let f = model(1, 0, &[&[q(-1)]], qmat(&[&[0]]));
    let dir = Direction { index: 0, q: 1 };
    let rep = classify_direction(&f, dir).unwrap();
    let frame = dir.frame(&f);
    let c = dominant_constant(&frame, &rep);
    assert!((c - 1.0 / 3.0).abs() < 1e-15);
    let part = block_partition(&frame, &rep, c).unwrap();
    let sp = synthesize_sector(&part).unwrap();
    assert_eq!(sp.sector.eps, 0.2);
    assert_eq!(sp.m, 3);
    // Fresh, finer grid.
    let (mi, mii) = check_inequalities(&part, &sp.sector, c, 128, 128);
    assert!(mi.unwrap() >= 0.0);
    assert!(mii.is_none());
}

#[test]
fn sector_for_imaginary_d_uses_c2() {
    let f = model(1, 0, &[&[Qi::complex((0, 1), (1, 1))]], qmat(&[&[1]]));
    let dir = Direction { index: 0, q: 1 };
    let rep = classify_direction(&f, dir).unwrap();
    assert_eq!((rep.tags[0], rep.r[0]), (Tag::Saddle, 1));
    assert!(rep.c2_positive);
    let frame = dir.frame(&f);
    let part = block_partition(&frame, &rep, dominant_constant(&frame, &rep)).unwrap();
    let sp = synthesize_sector(&part).unwrap();
    let (mi, mii) = check_inequalities(&part, &sp.sector, sp.c, 128, 128);
    assert!(mi.is_none());
    assert!(mii.unwrap() >= 0.0);
}

#[test]
fn all_saddle_identity_c() {
    let f = model(1, 1, &[&[], &[]], qmat(&[&[1, 0], &[0, 1]]));
    let dir = Direction { index: 0, q: 1 };
    let rep = classify_direction(&f, dir).unwrap();
    let frame = dir.frame(&f);
    let c = dominant_constant(&frame, &rep);
    assert!((c - 1.0 / 3.0).abs() < 1e-15);
    let part = block_partition(&frame, &rep, c).unwrap();
    assert_eq!(part.s, 1);
    assert!(synthesize_sector(&part).is_ok());
}

#[test]
fn negative_c_saddle_is_reported() {
    let f = model(1, 1, &[&[]], qmat(&[&[-1]]));
    let dir = Direction { index: 0, q: 1 };
    let rep = classify_direction(&f, dir).unwrap();
    assert!(!rep.c2_positive);
    let frame = dir.frame(&f);
    let part = block_partition(&frame, &rep, 1.0 / 3.0).unwrap();
    assert!(matches!(synthesize_sector(&part), Err(ClassifyError::NonPositiveC { var: 2, .. })));
}

#[test]
fn frame_rotates_coefficients() {
    let f = model(2, 0, &[&[q(0), q(1)]], qmat(&[&[0]]));
    let dir = Direction { index: 1, q: 2 };
    let g = dir.frame(&f);
    // x∘F keeps the shape x − x³; d(x) = x becomes −x.
    assert!((g.map.component(0).coeff(&[3, 0]) + 1.0).norm() < 1e-15);
    assert!((g.d[0].uc(1) + 1.0).norm() < 1e-15);
}
