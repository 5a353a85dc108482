use std::cmp::Ordering;

use anyhow::anyhow;
use num_rational::BigRational;
use num_traits::One;
use rsform::classify::{attracting_directions, classify_direction, Direction, DirectionReport, SectorParams};
use rsform::dynamics::{exp_flow, log_unipotent, restrict, CurveParam, DiffeoJet, Object, RestrictClass};
use rsform::infgen::{infinitesimal_generator, resonance_lattices, PolarEigenvalue};
use rsform::jets::json::mat_to_value;
use rsform::jets::{Coeff, Jet};
use rsform::manifold::{
    iterate_on_graph, iterate_orbit, prepare, solve_stable_graph, FastMap, OrbitOptions, SolveOptions,
    StableGraph, StableProblem,
};
use rsform::rspipeline::{reduce_diffeo_to_rs, reduce_vf_to_rs, validate_rs, RSDiffeo, Verdict};
use rsform::transforms::{conjugacy_holds, hyperbolic_blowup_count, PermissibleMap, TransformSequence};
use rsform::turrittin::{reduce_linear_system, replay_residual, required_order, GaugeCertificate, RSLinearForm};
use rsform::Complex64;
use serde_json::{json, Value};

use crate::output::{num, Artifact, Csv};
use crate::problem::{read_json, Kind, Problem};
use crate::svg::Plot;
use crate::Failure;

type C = Complex64;

/// Settings shared by every command.
pub struct Ctx {
    pub order: Option<u32>,
    pub tol: f64,
    pub precision: &'static str,
}

/// Result JSON, extra files, and the reason for a mathematical failure if there was one.
pub struct Outcome {
    pub result: Value,
    pub files: Vec<Artifact>,
    pub failure: Option<String>,
}

impl Outcome {
    fn ok(result: Value) -> Self {
        Outcome { result, files: Vec::new(), failure: None }
    }

    fn file(mut self, a: Artifact) -> Self {
        self.files.push(a);
        self
    }

    fn fail_if(mut self, bad: bool, why: impl Into<String>) -> Self {
        if bad {
            self.failure = Some(why.into());
        }
        self
    }
}

fn math<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Math(anyhow!("{e}"))
}

fn cj(z: C) -> Value {
    json!({"re": z.re, "im": z.im})
}

fn problem_file(kind: &str, payload: Value, p: &Problem, curve: Option<Value>) -> Value {
    let mut v = json!({"kind": kind, "payload": payload});
    if let Some(c) = curve.or_else(|| p.curve.clone()) {
        v["curve"] = c;
    }
    if let Some(s) = &p.spectrum {
        v["spectrum"] = s.clone();
    }
    v
}

pub fn validate<K: Coeff>(p: &Problem, ctx: &Ctx) -> Result<Outcome, Failure> {
    let base = json!({"kind": p.kind.label(), "precision": ctx.precision});
    let mut out = base;
    let failure = match p.kind {
        Kind::RsDiffeo | Kind::RsVf => {
            let rep = if p.kind == Kind::RsDiffeo { validate_rs(&p.rs_diffeo::<K>()?) } else { validate_rs(&p.rs_vf::<K>()?) };
            out["report"] = rep.to_json();
            rep.first_failure().map(|c| format!("clause {} fails: {}", c.name, c.detail))
        }
        Kind::Vf | Kind::Diffeo => {
            let (dim, order) = if p.kind == Kind::Vf {
                let x = p.field::<K>(ctx.order)?;
                (x.dim(), x.order())
            } else {
                let f = p.diffeo::<K>(ctx.order)?;
                (f.dim(), f.order())
            };
            out["dim"] = json!(dim);
            out["order"] = json!(order);
            if let Some(s) = &p.spectrum {
                let spec = p.spectrum()?;
                if spec.len() != dim {
                    return Err(Failure::Input(anyhow!("spectrum has {} entries, payload has dimension {dim}", spec.len())));
                }
                out["spectrum"] = s.clone();
                out["lattices"] = resonance_lattices(&spec).map_err(math)?.to_json();
            }
            if p.curve.is_some() {
                let g = p.curve::<K>(dim)?;
                let r = if p.kind == Kind::Vf {
                    let x = p.field::<K>(ctx.order)?;
                    restrict(Object::Field(&x), &g)
                } else {
                    let f = p.diffeo::<K>(ctx.order)?;
                    restrict(Object::Diffeo(&f), &g)
                };
                match r {
                    Ok(d) => {
                        out["restriction"] = d.to_json();
                        None
                    }
                    Err(e) => Some(format!("curve: {e}")),
                }
            } else {
                None
            }
        }
        Kind::LinearSystem => {
            let sys = p.linear_system::<K>()?;
            let needed = required_order(sys.s, sys.dim());
            out["dim"] = json!(sys.dim());
            out["s"] = json!(sys.s);
            out["order"] = json!(sys.order());
            out["required_order"] = json!(needed);
            (sys.order() < needed).then(|| format!("order {} is below the required {needed}", sys.order()))
        }
    };
    out["ok"] = json!(failure.is_none());
    Ok(Outcome { result: out, files: Vec::new(), failure })
}

pub fn exp<K: Coeff>(p: &Problem, ctx: &Ctx, time: &str) -> Result<Outcome, Failure> {
    p.expect(&[Kind::Vf])?;
    let x = p.field::<K>(ctx.order)?;
    let t = K::parse_parts(time, "0").map_err(|e| Failure::Input(anyhow!("--time: {e}")))?;
    let f = exp_flow(&x, &t, x.order()).map_err(math)?;
    let res = json!({"time": time, "precision": ctx.precision, "diffeo": f.to_json()});
    Ok(Outcome::ok(res).file(Artifact::json("diffeo.json", problem_file("diffeo", f.to_json(), p, None))))
}

pub fn log<K: Coeff>(p: &Problem, ctx: &Ctx) -> Result<Outcome, Failure> {
    p.expect(&[Kind::Diffeo])?;
    let f = p.diffeo::<K>(ctx.order)?;
    let x = log_unipotent(&f).map_err(math)?;
    let res = json!({"precision": ctx.precision, "field": x.to_json()});
    Ok(Outcome::ok(res).file(Artifact::json("field.json", problem_file("vf", x.to_json(), p, None))))
}

pub fn infgen<K: Coeff>(p: &Problem, ctx: &Ctx) -> Result<Outcome, Failure> {
    p.expect(&[Kind::Diffeo])?;
    let f = p.diffeo::<K>(ctx.order)?;
    let spec = p.spectrum()?;
    let lat = resonance_lattices(&spec).map_err(math)?;
    let m = u32::try_from(lat.index).map_err(|_| math("resonance index does not fit in 32 bits"))?;
    let g = infinitesimal_generator(&f, &spec, m).map_err(math)?;
    let res = json!({
        "precision": ctx.precision,
        "m": g.m,
        "lattices": lat.to_json(),
        "branch": g.branch,
        "residual": g.residual,
        "linear_log": mat_to_value(&g.linear_log),
        "unipotent_log": g.unipotent_log.to_json(),
        "field": g.field.to_json(),
    });
    let bad = g.residual > ctx.tol;
    Ok(Outcome::ok(res)
        .file(Artifact::json("generator.json", problem_file("vf", g.field.to_json(), p, None)))
        .fail_if(bad, format!("exp(X) differs from F^{m} by {:e}", g.residual)))
}

pub struct BlowupArgs {
    pub times: u32,
    pub center: Vec<usize>,
    pub ramify: Option<u32>,
    pub shear: Vec<u32>,
}

fn next_map<K: Coeff>(a: &BlowupArgs, g: &CurveParam<K>) -> Result<PermissibleMap<K>, Failure> {
    let m = if let Some(l) = a.ramify {
        if l == 0 {
            return Err(Failure::Input(anyhow!("--ramify must be positive")));
        }
        PermissibleMap::Ramification { l }
    } else if !a.shear.is_empty() {
        if a.shear.len() != g.dim() || a.shear[0] != 0 {
            return Err(Failure::Input(anyhow!("--shear needs {} exponents starting with 0", g.dim())));
        }
        PermissibleMap::Shearing { k: a.shear.clone() }
    } else if !a.center.is_empty() {
        if a.center.iter().any(|&i| i >= g.dim()) {
            return Err(Failure::Input(anyhow!("--center index out of range")));
        }
        PermissibleMap::blow_up_along(a.center.clone(), g).map_err(math)?
    } else {
        PermissibleMap::punctual(g).map_err(math)?
    };
    Ok(m)
}

pub fn blowup<K: Coeff>(p: &Problem, ctx: &Ctx, a: &BlowupArgs) -> Result<Outcome, Failure> {
    p.expect(&[Kind::Vf, Kind::Diffeo])?;
    let mut seq = TransformSequence::<K>::new();
    let mut conj = Vec::new();
    let (payload, curve, kind) = if p.kind == Kind::Diffeo {
        let mut f = p.diffeo::<K>(ctx.order)?;
        let mut g = p.curve::<K>(f.dim())?;
        for _ in 0..a.times {
            let m = next_map(a, &g)?;
            let (ft, gt) = m.apply_to_diffeo(&f, &g).map_err(math)?;
            conj.push(conjugacy_holds(&m, &f, &ft));
            seq.push(m);
            (f, g) = (ft, gt);
        }
        (f.to_json(), g.to_json(), "diffeo")
    } else {
        let mut x = p.field::<K>(ctx.order)?;
        let mut g = p.curve::<K>(x.dim())?;
        for _ in 0..a.times {
            let m = next_map(a, &g)?;
            let (xt, gt) = m.apply_to_vf(&x, &g).map_err(math)?;
            seq.push(m);
            (x, g) = (xt, gt);
        }
        (x.to_json(), g.to_json(), "vf")
    };
    let bad = conj.iter().any(|c| !c);
    let res = json!({
        "precision": ctx.precision,
        "sequence": seq.to_json(),
        "transformed": payload,
        "curve": curve,
        "conjugacy": conj,
    });
    Ok(Outcome::ok(res)
        .file(Artifact::json("transformed.json", problem_file(kind, payload, p, Some(curve))))
        .fail_if(bad, "jet-level conjugacy check failed"))
}

pub fn reduce_linear<K: Coeff>(p: &Problem, ctx: &Ctx) -> Result<Outcome, Failure> {
    p.expect(&[Kind::LinearSystem])?;
    let sys = p.linear_system::<K>()?;
    let red = reduce_linear_system(&sys).map_err(math)?;
    let residual = replay_residual(&sys, &red.certificate, &red.form.system()).map_err(math)?;
    let valid = red.form.validate();
    let mut res = red.to_json();
    res["precision"] = json!(ctx.precision);
    res["replay_residual"] = json!(residual);
    res["valid"] = json!(valid.is_ok());
    let bad = if K::EXACT { residual != 0.0 } else { residual > ctx.tol };
    Ok(Outcome::ok(res)
        .file(Artifact::json("rs_form.json", red.form.to_json()))
        .file(Artifact::json("certificate.json", red.certificate.to_json()))
        .fail_if(bad, format!("certificate replay residual {residual:e}"))
        .fail_if(valid.is_err(), valid.err().unwrap_or_default()))
}

pub fn verify_certificate<K: Coeff>(
    p: &Problem,
    ctx: &Ctx,
    cert: &std::path::Path,
    form: &std::path::Path,
) -> Result<Outcome, Failure> {
    p.expect(&[Kind::LinearSystem])?;
    let sys = p.linear_system::<K>()?;
    let cv = read_json(cert)?;
    let cert = GaugeCertificate::<K>::from_json(cv.get("certificate").unwrap_or(&cv))
        .map_err(|e| Failure::Input(anyhow!("certificate: {e}")))?;
    let fv = read_json(form)?;
    let form = RSLinearForm::<K>::from_json(fv.get("form").unwrap_or(&fv))
        .map_err(|e| Failure::Input(anyhow!("form: {e}")))?;
    let residual = replay_residual(&sys, &cert, &form.system()).map_err(math)?;
    let valid = form.validate();
    let bad = if K::EXACT { residual != 0.0 } else { residual > ctx.tol };
    let res = json!({
        "precision": ctx.precision,
        "steps": cert.steps.len(),
        "replay_residual": residual,
        "form_valid": valid.is_ok(),
        "form_error": valid.as_ref().err(),
        "ok": !bad && valid.is_ok(),
    });
    Ok(Outcome::ok(res)
        .fail_if(bad, format!("replay residual {residual:e}"))
        .fail_if(valid.is_err(), valid.err().unwrap_or_default()))
}

pub fn reduce<K: Coeff>(p: &Problem, ctx: &Ctx) -> Result<Outcome, Failure> {
    p.expect(&[Kind::Vf, Kind::Diffeo])?;
    if p.kind == Kind::Vf {
        let x = p.field::<K>(ctx.order)?;
        let g = p.curve::<K>(x.dim())?;
        let red = reduce_vf_to_rs(&x, &g).map_err(math)?;
        let mut res = red.to_json();
        res["precision"] = json!(ctx.precision);
        let rs = json!({"kind": "rs-vf", "payload": red.form.to_json()});
        return Ok(Outcome::ok(res)
            .file(Artifact::json("rs_form.json", rs))
            .file(Artifact::json("certificate.json", red.sequence.to_json())));
    }
    let f = p.diffeo::<K>(ctx.order)?;
    let g = p.curve::<K>(f.dim())?;
    let spec = p.spectrum()?;
    let red = reduce_diffeo_to_rs(&f, &g, &spec).map_err(math)?;
    let mut res = red.to_json();
    res["precision"] = json!(ctx.precision);
    let mut out = Outcome::ok(res).file(Artifact::json("certificate.json", red.sequence.to_json()));
    if let Some(form) = &red.form {
        out = out.file(Artifact::json("rs_form.json", json!({"kind": "rs-diffeo", "payload": form.to_json()})));
    }
    Ok(out)
}

/// The RS form of the problem, reducing a diffeomorphism first when needed.
fn rs_form<K: Coeff>(p: &Problem, ctx: &Ctx) -> Result<RSDiffeo<K>, Failure> {
    p.expect(&[Kind::RsDiffeo, Kind::Diffeo])?;
    if p.kind == Kind::RsDiffeo {
        return p.rs_diffeo();
    }
    let f = p.diffeo::<K>(ctx.order)?;
    let g = p.curve::<K>(f.dim())?;
    let red = reduce_diffeo_to_rs(&f, &g, &p.spectrum()?).map_err(math)?;
    match (red.verdict, red.form) {
        (Verdict::Reduced, Some(form)) => Ok(form),
        (Verdict::PeriodicCurve { order }, _) => {
            Err(math(format!("case (i): F^m restricted to the curve is the identity to order {order}; no rs-form")))
        }
        _ => Err(math("reduction produced no rs-form")),
    }
}

struct Classified {
    report: DirectionReport,
    sector: Result<SectorParams, String>,
}

fn classify_all<K: Coeff>(form: &RSDiffeo<K>, m: u32) -> Result<Vec<Classified>, Failure> {
    attracting_directions(form)
        .into_iter()
        .map(|dir| {
            let report = classify_direction(form, dir).map_err(math)?;
            let sector = prepare(form, dir, m).map(|(_, s, _)| s).map_err(|e| e.to_string());
            Ok(Classified { report, sector })
        })
        .collect()
}

fn classified_json(c: &Classified) -> Value {
    let mut v = c.report.to_json();
    match &c.sector {
        Ok(s) => v["sector"] = s.to_json(),
        Err(e) => v["sector_error"] = json!(e),
    }
    v
}

fn directions_svg(form_q: u32, items: &[Classified]) -> String {
    let eps = items.iter().filter_map(|c| c.sector.as_ref().ok()).map(|s| s.sector.eps).fold(0.2, f64::max);
    let mut plot = Plot::new(C::new(0.0, 0.0), 1.15 * eps);
    for c in items {
        let xi = c.report.direction.xi();
        if let Ok(s) = &c.sector {
            plot.sector(&s.sector, xi, "#4a7");
        }
        plot.polyline(&[C::new(0.0, 0.0), xi * eps], "#333", 1.5);
        let tags: Vec<&str> = c.report.tags.iter().map(|t| t.label()).collect();
        plot.dot(xi * eps, "#333");
        plot.label(xi * eps, &format!("{}: {}", c.report.direction.index, tags.join(",")));
    }
    plot.finish(&format!("attracting directions, k+p = {form_q}"))
}

pub fn classify<K: Coeff>(p: &Problem, ctx: &Ctx, m: Option<u32>) -> Result<Outcome, Failure> {
    let form = rs_form::<K>(p, ctx)?;
    let m = m.unwrap_or(form.p + 2);
    let items = classify_all(&form, m)?;
    let mut csv = Csv::new(&["index", "xi_re", "xi_im", "variable", "tag", "nu", "r", "s"].map(String::from));
    for c in &items {
        let r = &c.report;
        let xi = r.direction.xi();
        for (j, tag) in r.tags.iter().enumerate() {
            csv.row([
                r.direction.index.to_string(),
                num(xi.re),
                num(xi.im),
                format!("y{}", j + 2),
                tag.label().to_string(),
                r.nu[j].map_or(String::new(), |v| v.to_string()),
                r.r[j].to_string(),
                r.s.to_string(),
            ]);
        }
    }
    let res = json!({
        "precision": ctx.precision,
        "q": form.q,
        "k": form.k,
        "p": form.p,
        "m": m,
        "directions": items.iter().map(classified_json).collect::<Vec<_>>(),
    });
    Ok(Outcome::ok(res)
        .file(Artifact::text("directions.csv", csv.finish()))
        .file(Artifact::text("directions.svg", directions_svg(form.k + form.p, &items))))
}

pub struct StableArgs {
    pub m: Option<u32>,
    pub max_iter: usize,
    pub grid: (usize, usize, usize),
    pub direction: usize,
    pub orbits: usize,
    pub max_residual: f64,
}

fn pick_direction<K: Coeff>(form: &RSDiffeo<K>, i: usize) -> Result<Direction, Failure> {
    let dirs = attracting_directions(form);
    dirs.get(i)
        .copied()
        .ok_or_else(|| Failure::Input(anyhow!("direction {i} out of range; the form has {} attracting directions", dirs.len())))
}

fn graph_csv(prob: &StableProblem, g: &StableGraph) -> String {
    let s = prob.s;
    let mut header = vec!["x_re".to_string(), "x_im".to_string()];
    for j in 1..s {
        header.push(format!("w{j}_re"));
        header.push(format!("w{j}_im"));
    }
    for j in 0..g.nz {
        header.push(format!("phi{}_re", j + 1));
        header.push(format!("phi{}_im", j + 1));
    }
    let mut csv = Csv::new(&header);
    for (i, (x, w)) in g.domain.points.iter().enumerate() {
        let mut row = vec![num(x.re), num(x.im)];
        for v in w.iter().chain(&g.values[i * g.nz..(i + 1) * g.nz]) {
            row.push(num(v.re));
            row.push(num(v.im));
        }
        csv.row(row);
    }
    csv.finish()
}

pub fn stable<K: Coeff>(p: &Problem, ctx: &Ctx, a: &StableArgs) -> Result<Outcome, Failure> {
    let form = rs_form::<K>(p, ctx)?;
    let dir = pick_direction(&form, a.direction)?;
    let m = a.m.unwrap_or(form.p + 2);
    let (part, params, prob) = prepare(&form, dir, m).map_err(math)?;
    let (nr, nv, nw) = a.grid;
    let opts = SolveOptions { tol: ctx.tol, max_iter: a.max_iter, nr, nv, nw, ..SolveOptions::default() };
    let g = solve_stable_graph(&prob, &opts).map_err(math)?;
    let xi = dir.xi();
    let mut plot = Plot::new(xi * (0.5 * params.sector.eps), 0.6 * params.sector.eps);
    plot.sector(&params.sector, xi, "#4a7");
    let mut orbits = Vec::new();
    let ring = g.domain.radii.len() * 3 / 4;
    for o in 0..a.orbits {
        let iv = (o * g.domain.vnodes.len()) / a.orbits.max(1);
        let (x0, w0) = g.domain.points[(ring * g.domain.vnodes.len() + iv) * g.domain.nw_total()].clone();
        let tr = iterate_on_graph(&prob, &g, x0, &w0, 2000);
        let xs: Vec<C> = tr.points.iter().map(|q| xi * q[0]).collect();
        plot.polyline(&xs, "#c33", 1.0);
        plot.dot(xs[0], "#c33");
        orbits.push(json!({"start": cj(x0), "converged": tr.converged, "escaped": tr.escaped}));
    }
    let diag = g.diagnostics.to_json();
    let res = json!({
        "precision": ctx.precision,
        "direction": classified_json(&Classified { report: part.report.clone(), sector: Ok(params.clone()) }),
        "m": m,
        "s": prob.s,
        "grid": [nr, nv, nw],
        "points": g.domain.len(),
        "coordinates": "partitioned frame, straightened along the invariant curve",
        "diagnostics": diag,
        "orbits": orbits,
    });
    let bad = g.diagnostics.residual.is_nan() || g.diagnostics.residual > a.max_residual;
    Ok(Outcome::ok(res)
        .file(Artifact::json("diagnostics.json", g.diagnostics.to_json()))
        .file(Artifact::text("phi.csv", graph_csv(&prob, &g)))
        .file(Artifact::text("stable.svg", plot.finish(&format!("stable graph, direction {}, m = {m}", dir.index))))
        .fail_if(bad, format!("invariance residual {:e}", g.diagnostics.residual)))
}

pub struct OrbitArgs {
    pub start: Vec<String>,
    pub steps: usize,
    pub escape_radius: f64,
}

fn parse_point(s: &[String]) -> Result<Vec<C>, Failure> {
    s.iter()
        .map(|c| {
            let (re, im) = c.split_once(':').unwrap_or((c.as_str(), "0"));
            match (re.trim().parse::<f64>(), im.trim().parse::<f64>()) {
                (Ok(a), Ok(b)) => Ok(C::new(a, b)),
                _ => Err(Failure::Input(anyhow!("--start coordinate {c:?} is not re:im"))),
            }
        })
        .collect()
}

fn curve_point<K: Coeff>(g: &CurveParam<K>, x: C) -> Result<Vec<C>, Failure> {
    let h = g.graph_functions().map_err(math)?;
    let mut p = vec![x];
    p.extend(h.iter().map(|j: &Jet<K>| j.eval_c64(&[x])));
    Ok(p)
}

pub fn orbit<K: Coeff>(p: &Problem, ctx: &Ctx, a: &OrbitArgs) -> Result<Outcome, Failure> {
    p.expect(&[Kind::Diffeo, Kind::RsDiffeo])?;
    let (map, curve, q): (DiffeoJet<K>, Option<CurveParam<K>>, u32) = if p.kind == Kind::RsDiffeo {
        let f = p.rs_diffeo::<K>()?;
        (f.map, Some(f.curve), f.k + f.p)
    } else {
        let f = p.diffeo::<K>(ctx.order)?;
        let g = if p.curve.is_some() { Some(p.curve::<K>(f.dim())?) } else { None };
        (f, g, 1)
    };
    let start = if !a.start.is_empty() {
        parse_point(&a.start)?
    } else if let Some(g) = &curve {
        curve_point(g, C::new(0.1, 0.0))?
    } else {
        return Err(Failure::Input(anyhow!("--start is required when the problem has no curve")));
    };
    if start.len() != map.dim() {
        return Err(Failure::Input(anyhow!("--start has {} coordinates, the map has {}", start.len(), map.dim())));
    }
    let fast = FastMap::new(&map.to_float());
    let opts = OrbitOptions { max_steps: a.steps, escape_radius: a.escape_radius, q };
    let tr = iterate_orbit(&fast, &start, &opts, None);
    let mut header = vec!["step".to_string()];
    for j in 0..map.dim() {
        header.push(format!("z{j}_re"));
        header.push(format!("z{j}_im"));
    }
    let mut csv = Csv::new(&header);
    for (j, pt) in tr.points.iter().enumerate() {
        csv.row(std::iter::once(j.to_string()).chain(pt.iter().flat_map(|v| [num(v.re), num(v.im)])));
    }
    let xs: Vec<C> = tr.points.iter().map(|pt| pt[0]).collect();
    let half = xs.iter().map(|z| z.norm()).filter(|v| v.is_finite()).fold(0.0, f64::max).min(a.escape_radius);
    let mut plot = Plot::new(C::new(0.0, 0.0), 1.1 * half);
    plot.polyline(&xs, "#36c", 1.0);
    plot.dot(xs[0], "#36c");
    let mut res = tr.to_json();
    res["precision"] = json!(ctx.precision);
    res["start"] = Value::Array(start.iter().map(|&z| cj(z)).collect());
    Ok(Outcome::ok(res)
        .file(Artifact::text("orbit.csv", csv.finish()))
        .file(Artifact::text("orbit.svg", plot.finish("orbit, x-projection"))))
}

/// Decides a float multiplier on the unit circle from the exact spectrum entry it matches.
fn settle_with_spectrum(lambda: C, spec: &[PolarEigenvalue]) -> RestrictClass {
    let hit = spec.iter().find(|e| (e.to_c64() - lambda).norm() < 1e-9);
    match hit.map(|e| e.modulus.cmp(&BigRational::one())) {
        Some(Ordering::Equal) => RestrictClass::RationallyNeutral,
        Some(Ordering::Less) => RestrictClass::HyperbolicAttracting,
        Some(Ordering::Greater) => RestrictClass::Other,
        None => RestrictClass::Undecided,
    }
}

/// Diagonal of the linear part when it is triangular.
fn triangular_spectrum<K: Coeff>(f: &DiffeoJet<K>) -> Option<Vec<K>> {
    let l = f.linear_part();
    let n = f.dim();
    let upper = (0..n).all(|i| (0..i).all(|j| l.get(i, j).is_zero()));
    let lower = (0..n).all(|i| (i + 1..n).all(|j| l.get(i, j).is_zero()));
    (upper || lower).then(|| (0..n).map(|i| l.get(i, i).clone()).collect())
}

pub fn report<K: Coeff>(p: &Problem, ctx: &Ctx) -> Result<Outcome, Failure> {
    p.expect(&[Kind::Diffeo])?;
    let f = p.diffeo::<K>(ctx.order)?;
    let g = p.curve::<K>(f.dim())?;
    let data = restrict(Object::Diffeo(&f), &g).map_err(math)?;
    let mut res = json!({"precision": ctx.precision, "order": f.order(), "restriction": data.to_json()});
    let lambda = &data.inner_eigenvalue;
    let class = match (data.class, &p.spectrum) {
        (RestrictClass::Undecided, Some(_)) => settle_with_spectrum(lambda.to_c64(), &p.spectrum()?),
        (c, _) => c,
    };
    match class {
        RestrictClass::HyperbolicAttracting => {
            res["verdict"] = json!("hyperbolic attracting: Γ convergent; Γ∖{0} is the stable set");
            res["case"] = json!("hyperbolic");
            let count = triangular_spectrum(&f).and_then(|s| hyperbolic_blowup_count(&s, lambda));
            res["blowups_to_saddle"] = json!(count);
            res["stable_set"] = json!("maximal stable set composed of orbits on Γ∖{0}");
            Ok(Outcome::ok(res))
        }
        RestrictClass::RationallyNeutral => {
            let spec = p.spectrum()?;
            let red = reduce_diffeo_to_rs(&f, &g, &spec).map_err(math)?;
            res["m"] = json!(red.m);
            match (&red.verdict, &red.form) {
                (Verdict::PeriodicCurve { order }, _) => {
                    res["case"] = json!("i");
                    res["verdict"] = json!(format!(
                        "case (i): Γ is contained in the set of fixed points of F^{}, to order {order}",
                        red.m
                    ));
                }
                (Verdict::Reduced, Some(form)) => {
                    let items = classify_all(form, form.p + 2)?;
                    let manifolds: Vec<Value> = items
                        .iter()
                        .enumerate()
                        .map(|(i, c)| {
                            let mut v = classified_json(c);
                            v["name"] = json!(format!("S_{}", i + 1));
                            v["dimension"] = json!(c.report.s);
                            v
                        })
                        .collect();
                    res["case"] = json!("ii");
                    let names = match manifolds.len() {
                        1 => "S_1".to_string(),
                        r => format!("S_1..S_{r}"),
                    };
                    res["verdict"] =
                        json!(format!("case (ii): finite family of pairwise disjoint stable manifolds {names}"));
                    res["stable_manifolds"] = Value::Array(manifolds);
                    res["rs_form"] = form.to_json();
                }
                _ => return Err(math("reduction produced no rs-form")),
            }
            Ok(Outcome::ok(res))
        }
        RestrictClass::Other => {
            res["case"] = json!("outside");
            res["verdict"] =
                json!("multiplier on Γ is neither attracting nor a root of unity; no stable-manifold statement applies");
            Ok(Outcome::ok(res))
        }
        RestrictClass::Undecided => {
            res["case"] = json!("undecided");
            res["verdict"] = json!("|λ_Γ| = 1 within float noise; rerun with exact input");
            Ok(Outcome::ok(res).fail_if(true, "multiplier class undecided in float arithmetic"))
        }
    }
}
