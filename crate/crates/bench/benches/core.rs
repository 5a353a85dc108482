use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rsform::classify::Direction;
use rsform::dynamics::{exp_flow, log_unipotent, DiffeoJet, VectorField};
use rsform::manifold::{iterate_orbit, prepare, solve_stable_graph, FastMap, OrbitOptions, SolveOptions};
use rsform::rspipeline::RSDiffeo;
use rsform::{Coeff, Complex64, Jet, Qi};

fn unipotent(order: u32) -> DiffeoJet<Qi> {
    let q = |a, b| Qi::ratio(a, b);
    DiffeoJet::new(vec![
        Jet::from_terms(2, order, [(vec![1, 0], q(1, 1)), (vec![2, 0], q(-1, 1)), (vec![1, 1], q(1, 3))]),
        Jet::from_terms(2, order, [(vec![0, 1], q(1, 1)), (vec![2, 0], q(1, 1)), (vec![0, 2], q(-1, 2))]),
    ])
    .unwrap()
}

fn saddle() -> RSDiffeo<Complex64> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../cli/tests/data/saddle_rs.json");
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    RSDiffeo::from_json(&v["payload"]).unwrap()
}

fn jets(c: &mut Criterion) {
    let f = unipotent(10);
    c.bench_function("compose order 10", |b| b.iter(|| black_box(&f).compose(&f)));
    c.bench_function("inverse order 10", |b| b.iter(|| black_box(&f).inverse()));
    let x: VectorField<Qi> = log_unipotent(&f).unwrap();
    c.bench_function("log order 10", |b| b.iter(|| log_unipotent(black_box(&f)).unwrap()));
    c.bench_function("exp order 10", |b| b.iter(|| exp_flow(black_box(&x), &Qi::one(), 10).unwrap()));
}

fn manifold(c: &mut Criterion) {
    let form = saddle();
    let (_, _, prob) = prepare(&form, Direction { index: 0, q: 1 }, 3).unwrap();
    let opts = SolveOptions { tol: 1e-9, nr: 16, nv: 12, nw: 4, ..SolveOptions::default() };
    let mut g = c.benchmark_group("stable graph");
    g.sample_size(10);
    g.bench_function("16x12x4", |b| b.iter(|| solve_stable_graph(black_box(&prob), &opts).unwrap()));
    g.finish();

    let map = FastMap::new(&unipotent(10).to_float());
    let start = [Complex64::new(0.1, 0.0), Complex64::new(0.0, 0.0)];
    let o = OrbitOptions { max_steps: 10_000, escape_radius: 1.0, q: 1 };
    c.bench_function("orbit 1e4 steps", |b| b.iter(|| iterate_orbit(&map, black_box(&start), &o, None)));
}

criterion_group!(benches, jets, manifold);
criterion_main!(benches);
