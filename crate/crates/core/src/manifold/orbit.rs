use num_complex::Complex64;
use serde_json::{json, Value};

use super::{PointMap, StableGraph, StableProblem};
use crate::classify::Sector;
use crate::dynamics::{asymptotic_contact_order, contact_slope};

type C = Complex64;

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitOptions {
    pub max_steps: usize,
    /// The orbit escapes once `‖p‖` exceeds this.
    pub escape_radius: f64,
    /// `k + p` for the `(k+p)·j·x_j^{k+p}` diagnostic.
    pub q: u32,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        OrbitOptions { max_steps: 10_000, escape_radius: 1.0, q: 1 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitTrace {
    pub points: Vec<Vec<C>>,
    pub stayed_in_sector: bool,
    pub converged: bool,
    pub escaped: bool,
    pub escape_step: Option<usize>,
    /// `(k+p)·j·x_j^{k+p}` for `j = 1, 2, …`.
    pub asym: Vec<C>,
    /// Graph orbits: `‖F̄₂(x_j, w_j, φ_j) − φ(x_{j+1}, w_{j+1})‖` per step.
    pub defects: Vec<f64>,
}

impl OrbitTrace {
    pub fn last(&self) -> &[C] {
        self.points.last().expect("orbit has a start point")
    }

    pub fn to_json(&self) -> Value {
        let last = self.last();
        json!({
            "steps": self.points.len() - 1,
            "stayed_in_sector": self.stayed_in_sector,
            "converged": self.converged,
            "escaped": self.escaped,
            "escape_step": self.escape_step,
            "final_x": {"re": last[0].re, "im": last[0].im},
            "final_asym": self.asym.last().map(|v| json!({"re": v.re, "im": v.im})),
            "max_defect": self.defects.iter().cloned().fold(0.0, f64::max),
        })
    }

    fn finish(&mut self) {
        let first = &self.points[0];
        let last = self.points.last().unwrap();
        let yn = last[1..].iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        self.converged = !self.escaped && last[0].norm() <= 0.5 * first[0].norm() && yn <= last[0].norm();
    }
}

fn norm(p: &[C]) -> f64 {
    p.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Iterates `F` from `start`, flagging escape, sector exits and convergence.
pub fn iterate_orbit(map: &dyn PointMap, start: &[C], opts: &OrbitOptions, sector: Option<&Sector>) -> OrbitTrace {
    let mut tr = OrbitTrace {
        points: vec![start.to_vec()],
        stayed_in_sector: sector.map_or(true, |s| s.contains(start[0])),
        converged: false,
        escaped: false,
        escape_step: None,
        asym: Vec::new(),
        defects: Vec::new(),
    };
    let mut p = start.to_vec();
    for j in 1..=opts.max_steps {
        p = map.apply(&p);
        let bad = p.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) || norm(&p) > opts.escape_radius;
        if bad {
            tr.escaped = true;
            tr.escape_step = Some(j);
            tr.points.push(p);
            break;
        }
        if let Some(s) = sector {
            tr.stayed_in_sector &= s.contains(p[0]);
        }
        tr.asym.push(p[0].powu(opts.q) * (opts.q as f64 * j as f64));
        tr.points.push(p.clone());
    }
    tr.finish();
    tr
}

/// Iterates the restriction of `F` to the computed graph: `z_j = φ(x_j, w_j)`, with the defect of each step.
pub fn iterate_on_graph(prob: &StableProblem, graph: &StableGraph, x0: C, w0: &[C], steps: usize) -> OrbitTrace {
    let s = prob.s;
    let mut p = vec![x0];
    p.extend_from_slice(w0);
    p.extend(graph.eval(x0, w0));
    let q = prob.k + prob.p;
    let mut tr = OrbitTrace {
        points: vec![p.clone()],
        stayed_in_sector: prob.sector.contains(x0),
        converged: false,
        escaped: false,
        escape_step: None,
        asym: Vec::new(),
        defects: Vec::new(),
    };
    let mut next = vec![C::new(0.0, 0.0); prob.n];
    for j in 1..=steps {
        prob.fast.eval_into(&p, &mut next);
        if !prob.in_domain(next[0], &next[1..s]) {
            tr.escaped = true;
            tr.escape_step = Some(j);
            tr.points.push(next.clone());
            break;
        }
        let z = graph.eval(next[0], &next[1..s]);
        tr.defects.push(norm(&z.iter().zip(&next[s..]).map(|(a, b)| a - b).collect::<Vec<_>>()));
        p[..s].copy_from_slice(&next[..s]);
        p[s..].copy_from_slice(&z);
        tr.stayed_in_sector &= prob.sector.contains(p[0]);
        tr.asym.push(p[0].powu(q) * (q as f64 * j as f64));
        tr.points.push(p.clone());
    }
    tr.finish();
    tr
}

#[derive(Clone, Debug, PartialEq)]
pub struct MembershipReport {
    /// First step from which the orbit stays in the domain and within `dist_tol` of the graph.
    pub member_from: Option<usize>,
    pub tangent: bool,
    /// Contact order with `Γ` at the last point, for `N ≤ m − 1`.
    pub contact_order: Option<u32>,
    /// Slope of `log‖y − J_{m−1}γ̄(x)‖` against `log|x|` over the second half of the orbit.
    pub slope: f64,
    pub slope_ok: bool,
    /// Share of second-half points with `‖w‖ < ½|x|^m`.
    pub w_bound_share: f64,
    pub predicted_contact: u32,
}

impl MembershipReport {
    pub fn to_json(&self) -> Value {
        json!({
            "member_from": self.member_from,
            "tangent": self.tangent,
            "contact_order": self.contact_order,
            "slope": if self.slope.is_finite() { json!(self.slope) } else { json!("inf") },
            "slope_ok": self.slope_ok,
            "w_bound_share": self.w_bound_share,
            "predicted_contact": self.predicted_contact,
        })
    }
}

/// Membership in the graph, tangency to `R⁺` and contact with `Γ` for an orbit in working coordinates.
pub fn membership_and_asymptoticity(
    prob: &StableProblem,
    trace: &OrbitTrace,
    graph: &StableGraph,
    dist_tol: f64,
) -> MembershipReport {
    let s = prob.s;
    let pts = &trace.points[..trace.points.len() - trace.escaped as usize];
    let mut member_from = None;
    for (j, p) in pts.iter().enumerate().rev() {
        let ok = prob.in_domain(p[0], &p[1..s]) && {
            let z = graph.eval(p[0], &p[1..s]);
            norm(&z.iter().zip(&p[s..]).map(|(a, b)| a - b).collect::<Vec<_>>()) <= dist_tol
        };
        if ok {
            member_from = Some(j);
        } else {
            break;
        }
    }
    let half = &pts[pts.len() / 2..];
    let last = pts.last().expect("nonempty orbit");
    let tangent = trace.converged && last[0].arg().abs() <= half[0][0].arg().abs() + 1e-12 && last[0].arg().abs() < 0.1;
    let frame: Vec<Vec<C>> = half.iter().map(|p| prob.to_frame(p)).collect();
    let n_contact = prob.m - 1;
    let contact_order = asymptotic_contact_order(&prob.curve, frame.last().unwrap())
        .ok()
        .flatten()
        .map(|o| o.min(n_contact));
    let slope = contact_slope(&prob.curve, &frame, n_contact).unwrap_or(f64::NAN);
    let slope_ok = slope >= n_contact as f64;
    let w_ok = half
        .iter()
        .filter(|p| norm(&p[1..s]) < 0.5 * p[0].norm().powi(prob.m as i32))
        .count();
    MembershipReport {
        member_from,
        tangent,
        contact_order,
        slope,
        slope_ok,
        w_bound_share: w_ok as f64 / half.len() as f64,
        predicted_contact: n_contact,
    }
}
