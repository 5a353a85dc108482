//! Acceptance suite: one line per criterion, nonzero exit if any fails.

mod common;

use std::collections::HashSet;
use std::f64::consts::TAU;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rsform::classify::{attracting_directions, classify_direction, Direction, Tag};
use rsform::dynamics::{exp_flow, log_unipotent, restrict, Object};
use rsform::infgen::{resonance_lattices, PolarEigenvalue};
use rsform::manifold::{
    iterate_on_graph, iterate_orbit, membership_and_asymptoticity, prepare, solve_stable_graph, FastMap, OrbitOptions,
    PointMap, SolveOptions, StableGraph, StableProblem,
};
use rsform::rspipeline::{reduce_vf_to_rs, validate_rs};
use rsform::transforms::{blow_up_iterated, blowup_spectrum, conjugacy_holds, hyperbolic_blowup_count};
use rsform::turrittin::{reduce_linear_system, replay_residual};
use rsform::{Coeff, Complex64, Jet, Qi};

type C = Complex64;

struct Outcome {
    pass: bool,
    detail: String,
}

fn ok(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn c1_exp_log() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut bad = Vec::new();
    for i in 0..100 {
        let n = rng.gen_range(1..=3);
        let x = common::random_nilpotent_field(&mut rng, n, 8);
        let f = exp_flow(&x, &Qi::one(), 8).expect("flow");
        let back = log_unipotent(&f).expect("log");
        if back != x {
            bad.push(i);
        }
    }
    let el = t.elapsed();
    ok(bad.is_empty() && el < Duration::from_secs(30), format!("100 fields, mismatches {bad:?}, {el:.2?} (< 30 s)"))
}

/// Prime-exponent vector of a small positive rational.
fn exponents(num: i64, den: i64) -> Vec<i64> {
    const PRIMES: [i64; 4] = [2, 3, 5, 7];
    let mut v = vec![0; PRIMES.len()];
    for (k, p) in PRIMES.iter().enumerate() {
        let (mut a, mut b) = (num, den);
        while a % p == 0 {
            a /= p;
            v[k] += 1;
        }
        while b % p == 0 {
            b /= p;
            v[k] -= 1;
        }
    }
    v
}

fn c2_index() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let moduli = [(1, 1), (1, 1), (2, 1), (1, 2), (3, 1), (4, 1), (2, 3)];
    let dens = [1, 2, 3, 4, 6];
    let mut bad = Vec::new();
    for case in 0..50 {
        let n = rng.gen_range(1..=4);
        let spec: Vec<((i64, i64), (i64, i64))> = (0..n)
            .map(|_| {
                let m = moduli[rng.gen_range(0..moduli.len())];
                let d = dens[rng.gen_range(0..dens.len())];
                (m, (rng.gen_range(0..d), d))
            })
            .collect();
        let lat = resonance_lattices(
            &spec.iter().map(|&((a, b), (p, q))| PolarEigenvalue::from_ints(a, b, p, q)).collect::<Vec<_>>(),
        )
        .expect("lattices");
        // Brute force: angles in units of 1/12, |m_j| ≤ 12.
        let ex: Vec<Vec<i64>> = spec.iter().map(|&((a, b), _)| exponents(a, b)).collect();
        let ang: Vec<i64> = spec.iter().map(|&(_, (p, q))| p * 12 / q).collect();
        let mut seen = HashSet::new();
        let mut m = vec![-12i64; n];
        loop {
            let modulus_one = (0..4).all(|k| (0..n).map(|j| m[j] * ex[j][k]).sum::<i64>() == 0);
            if modulus_one {
                seen.insert((0..n).map(|j| m[j] * ang[j]).sum::<i64>().rem_euclid(12));
            }
            let mut j = 0;
            while j < n && m[j] == 12 {
                m[j] = -12;
                j += 1;
            }
            if j == n {
                break;
            }
            m[j] += 1;
        }
        if lat.index.to_u64() != Some(seen.len() as u64) {
            bad.push((case, lat.index, seen.len()));
        }
    }
    ok(bad.is_empty(), format!("50 spectra, disagreements {bad:?}"))
}

fn c3_blowup_conjugacy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: (f64, &str) = (0.0, "");
    let mut failures = Vec::new();
    let fixtures = common::transform_fixtures();
    for (name, f, g, m) in &fixtures {
        let (ft, _) = match m.apply_to_diffeo(f, g) {
            Ok(v) => v,
            Err(e) => {
                failures.push(format!("{name}: {e}"));
                continue;
            }
        };
        if !conjugacy_holds(m, f, &ft) {
            failures.push(format!("{name}: jet-level conjugacy"));
        }
        let (ff, ftf) = (f.to_float(), ft.to_float());
        let n = f.dim();
        for _ in 0..100 {
            let p: Vec<C> = (0..n)
                .map(|_| C::from_polar(rng.gen_range(0.002..0.01), rng.gen_range(-0.5..0.5)))
                .collect();
            let lhs = m.map_point(&ftf.eval_c64(&p)).expect("off divisor");
            let rhs = ff.eval_c64(&m.map_point(&p).expect("off divisor"));
            let d = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            if d > worst.0 {
                worst = (d, name);
            }
        }
    }
    ok(
        failures.is_empty() && worst.0 <= 1e-10,
        format!(
            "{} transforms, jet failures {failures:?}, max point defect {:.2e} at {} (≤ 1e-10)",
            fixtures.len(),
            worst.0,
            worst.1
        ),
    )
}

fn c4_turrittin() -> Outcome {
    let corpus = common::linear_corpus();
    let names: Vec<&str> = corpus.iter().map(|(n, _)| *n).collect();
    let mut failures = Vec::new();
    for (name, sys) in &corpus {
        let red = match reduce_linear_system(sys) {
            Ok(r) => r,
            Err(e) => {
                failures.push(format!("{name}: {e}"));
                continue;
            }
        };
        if let Err(e) = red.form.validate() {
            failures.push(format!("{name}: {e}"));
        }
        match replay_residual(sys, &red.certificate, &red.form.system()) {
            Ok(r) if r == 0.0 => {}
            other => failures.push(format!("{name}: replay {other:?}")),
        }
        if red.rank_trace.iter().any(|(b, a)| a > b) {
            failures.push(format!("{name}: rank increased"));
        }
    }
    let typed = names.contains(&"euler") && names.contains(&"airy");
    ok(
        failures.is_empty() && corpus.len() >= 10 && typed,
        format!("{} systems (Euler, Airy included), failures {failures:?}", corpus.len()),
    )
}

fn c5_rs_validation() -> Outcome {
    let mut failures = Vec::new();
    let fixtures = common::vf_fixtures();
    for (name, x, g) in &fixtures {
        let r = match reduce_vf_to_rs(x, g) {
            Ok(r) => r,
            Err(e) => {
                failures.push(format!("{name}: {e}"));
                continue;
            }
        };
        let rep = validate_rs(&r.form);
        if !rep.ok() {
            failures.push(format!("{name}: clause {:?}", rep.first_failure().map(|c| c.name)));
        }
        let h = restrict(Object::Field(x), g).expect("invariant curve").series;
        let q_gamma = h.valuation().expect("nonzero restriction") - 1;
        if r.form.q != r.ramification * q_gamma {
            failures.push(format!("{name}: q = {} but X|Γ gives {q_gamma} (ramification {})", r.form.q, r.ramification));
        }
    }
    ok(failures.is_empty(), format!("{} fields, failures {failures:?}", fixtures.len()))
}

fn c6_orbit_estimate() -> Outcome {
    let t = Instant::now();
    let mut vals = Vec::new();
    for q in 1..=3u16 {
        let f = Jet::from_terms(1, 8, [(vec![1], C::new(1.0, 0.0)), (vec![q + 1], C::new(-1.0, 0.0))]);
        let map = FastMap::new(&rsform::dynamics::DiffeoJet::new(vec![f]).expect("map"));
        let tr = iterate_orbit(&map, &[C::new(0.1, 0.0)], &OrbitOptions { max_steps: 10_000, escape_radius: 1.0, q: q as u32 }, None);
        vals.push(tr.asym[9_999].re);
    }
    let el = t.elapsed();
    let pass = vals.iter().all(|v| (v - 1.0).abs() <= 0.05) && el < Duration::from_secs(5);
    ok(pass, format!("(k+p)·j·x_j^(k+p) at j = 1e4 for q = 1,2,3: {vals:.4?}, {el:.2?} (< 5 s)"))
}

fn c7_stable_graph(state: &mut Option<(StableProblem, StableGraph)>) -> Outcome {
    let form = common::saddle_fixture(6);
    let valid = validate_rs(&form).ok();
    let (_, _, prob) = prepare(&form, Direction { index: 0, q: 1 }, 3).expect("prepared problem");
    let t = Instant::now();
    let opts = SolveOptions { tol: 1e-10, max_iter: 200, nr: 64, nv: 64, nw: 8, ..SolveOptions::default() };
    let res = solve_stable_graph(&prob, &opts);
    let el = t.elapsed();
    match res {
        Ok(g) => {
            let d = g.diagnostics.clone();
            let pass = valid && d.sweeps <= 200 && d.residual < 1e-8 && el < Duration::from_secs(60);
            *state = Some((prob, g));
            ok(
                pass,
                format!(
                    "rs-form valid {valid}, {} sweeps (≤ 200), residual {:.2e} (< 1e-8), grid 64×64×8, {el:.1?} (< 60 s)",
                    d.sweeps, d.residual
                ),
            )
        }
        Err(e) => ok(false, format!("solver error: {e}")),
    }
}

fn c8_dichotomy(state: &Option<(StableProblem, StableGraph)>) -> Outcome {
    let Some((prob, graph)) = state else {
        return ok(false, "no stable graph from criterion 7");
    };
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut on_ok, mut off_ok) = (0, 0);
    let mut worst_slope = f64::INFINITY;
    let mut worst_escape = 0;
    for _ in 0..20 {
        let r = rng.gen_range(0.05..0.15);
        let v: f64 = rng.gen_range(-0.3..0.3);
        let x0 = C::new(r / (1.0 + v * v).sqrt(), r * v / (1.0 + v * v).sqrt());
        let w0 = [C::from_polar(0.5 * rng.gen_range(0.0..1.0) * r * r, rng.gen_range(0.0..TAU))];
        let tr = iterate_on_graph(prob, graph, x0, &w0, 10_000);
        let rep = membership_and_asymptoticity(prob, &tr, graph, 1e-8);
        worst_slope = worst_slope.min(rep.slope);
        if tr.converged && tr.stayed_in_sector && rep.tangent && rep.slope_ok {
            on_ok += 1;
        }
        let mut start = tr.points[0].clone();
        start[2] += C::from_polar(1e-3, rng.gen_range(0.0..TAU));
        let off = iterate_orbit(&prob.fast, &start, &OrbitOptions { max_steps: 10_000, escape_radius: 1.0, q: 1 }, Some(&prob.sector));
        if off.escaped {
            off_ok += 1;
            worst_escape = worst_escape.max(off.escape_step.unwrap_or(0));
        }
    }
    ok(
        on_ok == 20 && off_ok == 20,
        format!(
            "on-graph {on_ok}/20 convergent, tangent, slope ≥ {} (min {worst_slope:.2}); offset 1e-3 escaped {off_ok}/20 (latest at step {worst_escape})",
            prob.m - 1
        ),
    )
}

/// Mean per-step `log|y_j|` growth over steps 500..1000 along the direction `ξ`.
fn growth_rates(map: &dyn PointMap, xi: C, nvars: usize) -> Vec<f64> {
    let mut p = vec![C::new(1e-8, 0.0); nvars];
    p[0] = xi * 0.1;
    let mut sums = vec![0.0; nvars - 1];
    for step in 0..1000 {
        let next = map.apply(&p);
        for j in 1..nvars {
            let g = (next[j].norm() / p[j].norm()).ln();
            if step >= 500 {
                sums[j - 1] += g / 500.0;
            }
        }
        p[0] = next[0];
    }
    sums
}

fn c9_ground_truth() -> Outcome {
    let r = |a: i64, b: i64| Qi::ratio(a, b);
    let i = |a: i64, b: i64| Qi::complex((0, 1), (a, b));
    let z = Qi::zero();
    let fixtures: Vec<(&str, rsform::rspipeline::RSDiffeo<Qi>)> = vec![
        ("k=0 node", common::diagonal_rs(1, 0, &[&[r(-1, 2)]], &[z.clone()], 8)),
        ("k=0 saddle", common::diagonal_rs(1, 0, &[&[r(1, 2)]], &[z.clone()], 8)),
        ("k=1 two directions", common::diagonal_rs(2, 1, &[&[z.clone(), r(-1, 1)]], &[z.clone()], 8)),
        ("p=0", common::diagonal_rs(1, 1, &[&[]], &[r(1, 2)], 8)),
        ("imaginary lead", common::diagonal_rs(2, 0, &[&[i(1, 1), r(-1, 1)]], &[z.clone()], 8)),
        ("C decides", common::diagonal_rs(1, 0, &[&[i(3, 10)]], &[r(2, 5)], 8)),
        ("3-dim k=0", common::diagonal_rs(1, 0, &[&[r(-1, 2)], &[r(1, 4)]], &[z.clone(), z.clone()], 8)),
        ("3-dim k=1", common::diagonal_rs(2, 1, &[&[z.clone(), r(-1, 1)], &[z.clone(), r(1, 1)]], &[z.clone(), z.clone()], 8)),
        ("3-dim cube roots", common::diagonal_rs(3, 0, &[&[i(1, 2), r(1, 1)], &[r(-1, 5)]], &[z.clone(), z.clone()], 8)),
        ("3-dim node and C", common::diagonal_rs(1, 0, &[&[r(-1, 2)], &[i(1, 2)]], &[r(1, 5), r(3, 10)], 8)),
    ];
    let mut checked = 0;
    let mut failures = Vec::new();
    for (name, f) in &fixtures {
        let map = FastMap::new(&f.map.to_float());
        for dir in attracting_directions(f) {
            let rep = match classify_direction(f, dir) {
                Ok(r) => r,
                Err(e) => {
                    failures.push(format!("{name}: {e}"));
                    continue;
                }
            };
            let rates = growth_rates(&map, dir.xi(), f.dim());
            for (j, (tag, rate)) in rep.tags.iter().zip(&rates).enumerate() {
                checked += 1;
                let agree = match tag {
                    Tag::Node => *rate < 0.0,
                    Tag::Saddle => *rate > 0.0,
                };
                if !agree {
                    failures.push(format!("{name} ξ#{} y{}: {} vs rate {rate:.3e}", dir.index, j + 1, tag.label()));
                }
            }
        }
    }
    ok(failures.is_empty(), format!("{} fixtures, {checked} (direction, variable) tags, failures {failures:?}", fixtures.len()))
}

fn c10_hyperbolic() -> Outcome {
    let f1 = common::qdiffeo(10, &[&[(&[1, 0], 1, 2), (&[2, 0], 1, 1)], &[(&[0, 1], 1, 4), (&[1, 1], 1, 1), (&[0, 2], 1, 1)]]);
    let f2 = common::qdiffeo(10, &[
        &[(&[1, 0, 0], 1, 2), (&[0, 1, 1], 1, 1)],
        &[(&[0, 1, 0], 1, 3), (&[1, 1, 0], 1, 1)],
        &[(&[0, 0, 1], 1, 5), (&[0, 0, 2], 1, 1), (&[1, 0, 1], 1, 1)],
    ]);
    let half_i = Qi::complex((0, 1), (1, 2));
    let f3 = rsform::dynamics::DiffeoJet::new(vec![
        Jet::from_terms(2, 10, [(vec![1, 0], half_i.clone())]),
        Jet::from_terms(2, 10, [(vec![0, 1], Qi::ratio(1, 8)), (vec![1, 1], Qi::one())]),
    ])
    .expect("map");
    // y = −12x² is invariant for (x/2, y/3 + x²).
    let f4 = common::qdiffeo(10, &[&[(&[1, 0], 1, 2)], &[(&[0, 1], 1, 3), (&[2, 0], 1, 1)]]);
    let fixtures = vec![
        ("2-dim", f1, rsform::dynamics::CurveParam::axis(2, 10)),
        ("3-dim", f2, rsform::dynamics::CurveParam::axis(3, 10)),
        ("complex λ", f3, rsform::dynamics::CurveParam::axis(2, 10)),
        ("parabola", f4, common::qcurve(10, &[&[(1, 1)], &[(2, -12)]])),
    ];
    let mut failures = Vec::new();
    let mut ks = Vec::new();
    for (name, f, g) in &fixtures {
        let lin = f.linear_part();
        let spec: Vec<Qi> = (0..f.dim()).map(|i| lin.get(i, i).clone()).collect();
        let lambda = restrict(Object::Diffeo(f), g).expect("invariant").inner_eigenvalue;
        let Some(k) = hyperbolic_blowup_count(&spec, &lambda) else {
            failures.push(format!("{name}: not hyperbolic"));
            continue;
        };
        ks.push(k);
        let predicted = blowup_spectrum(&spec, &lambda, k);
        let (ft, _, _) = blow_up_iterated(f, g, k).expect("blow-ups");
        let lt = ft.linear_part();
        let n = ft.dim();
        let triangular = (0..n).all(|a| (0..a).all(|b| lt.get(a, b).is_zero())) || (0..n).all(|a| (a + 1..n).all(|b| lt.get(a, b).is_zero()));
        let mut direct: Vec<Qi> = (0..n).map(|a| lt.get(a, a).clone()).collect();
        let mut same = direct.len() == predicted.len();
        for p in &predicted {
            match direct.iter().position(|d| d == p) {
                Some(pos) => {
                    direct.remove(pos);
                }
                None => same = false,
            }
        }
        let beyond = predicted[1..].iter().all(|m| m.cmp_abs_one(0.0) == Some(std::cmp::Ordering::Greater));
        if !(triangular && same && beyond) {
            failures.push(format!("{name}: triangular {triangular}, equal {same}, |μ/λ^k| > 1 {beyond}"));
        }
    }
    ok(failures.is_empty(), format!("{} fixtures, blow-up counts {ks:?}, failures {failures:?}", fixtures.len()))
}

fn run(id: u32, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
        ok(false, format!("panicked: {}", msg.unwrap_or_default()))
    });
    println!(
        "criterion {id:>2} [{}] {name}: {} ({:.1?})",
        if out.pass { "PASS" } else { "FAIL" },
        out.detail,
        t.elapsed()
    );
    out.pass
}

fn main() {
    let mut state = None;
    let results = [
        run(1, "exp/log roundtrip", c1_exp_log),
        run(2, "embeddability index", c2_index),
        run(3, "blow-up conjugacy", c3_blowup_conjugacy),
        run(4, "linear reduction soundness", c4_turrittin),
        run(5, "normal-form validation", c5_rs_validation),
        run(6, "classical orbit estimate", c6_orbit_estimate),
        run(7, "stable graph", || c7_stable_graph(&mut state)),
        run(8, "saddle dichotomy", || c8_dichotomy(&state)),
        run(9, "node/saddle ground truth", c9_ground_truth),
        run(10, "hyperbolic branch", c10_hyperbolic),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
