//! Attracting directions of a diffeomorphism in Ramis–Sibuya form, node/saddle tags and sector synthesis.

mod sector;

use std::cmp::Ordering;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::dynamics::{CurveParam, DiffeoJet};
use crate::jets::{Coeff, Jet, Mat};
use crate::rspipeline::RSDiffeo;

pub use sector::Sector;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClassifyError {
    #[error("direction index {index} out of range for q = {q}")]
    BadDirection { index: u32, q: u32 },
    #[error("sign of Re(ξ^{power} A[{var}][{order}]) is within the float margin; exact input required")]
    Indeterminate { var: usize, order: u32, power: u32 },
    #[error("C is not in Jordan form: {0}")]
    NotJordan(String),
    #[error("saddle variable y{var} needs Re(C[{var}][{var}]) > 0 (got {re:.3e}); blow up first")]
    NonPositiveC { var: usize, re: f64 },
    #[error("no sector found after {halvings} halvings: inequality ({which}) fails, worst margin {margin:.3e}")]
    NoSector { which: &'static str, margin: f64, halvings: u32 },
}

/// One of the `q` half-lines `ξ·R⁺`, `ξ = exp(2πi·index/q)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Direction {
    pub index: u32,
    pub q: u32,
}

impl Direction {
    pub fn xi(&self) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * PI * self.index as f64 / self.q as f64)
    }

    /// The form in the coordinate `x = ξ x̃`, where this direction becomes `R⁺`.
    pub fn frame<K: Coeff>(&self, form: &RSDiffeo<K>) -> RSDiffeo<Complex64> {
        let xi = self.xi();
        let pw = |a: i32| xi.powi(a);
        let rot = |j: &Jet<K>, shift: i32| {
            Jet::from_terms(
                j.nvars(),
                j.order(),
                j.terms().map(|(e, c)| (e.to_vec(), c.to_c64() * pw(e[0] as i32 + shift))),
            )
        };
        let comps: Vec<_> =
            form.map.components().iter().enumerate().map(|(i, c)| rot(c, if i == 0 { -1 } else { 0 })).collect();
        let curve: Vec<_> =
            form.curve.components().iter().enumerate().map(|(i, c)| rot(c, if i == 0 { -1 } else { 0 })).collect();
        RSDiffeo {
            q: form.q,
            k: form.k,
            p: form.p,
            b: form.b.to_c64(),
            d: form.d.iter().map(|j| rot(j, 0)).collect(),
            c: form.c.to_float(),
            map: DiffeoJet::new(comps).expect("rotation keeps the shape"),
            curve: CurveParam::new(curve).expect("rotation keeps the shape"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tag {
    Node,
    Saddle,
}

impl Tag {
    pub fn label(&self) -> &'static str {
        match self {
            Tag::Node => "node",
            Tag::Saddle => "saddle",
        }
    }
}

/// Classification of one attracting direction. Vectors are indexed by `y`-variable (`y_2..y_n`).
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionReport {
    pub direction: Direction,
    pub k: u32,
    pub p: u32,
    pub tags: Vec<Tag>,
    /// Order of `d_j` where `D = x^k diag(d_j)`; `None` when `d_j ≡ 0`.
    pub nu: Vec<Option<u32>>,
    /// First asymptotic significant orders.
    pub r: Vec<u32>,
    pub r_max: u32,
    /// Dimension of the stable manifold: one plus the number of node variables.
    pub s: usize,
    /// Every saddle variable with `r_j = p` has `Re(ξ^{k+p} C_jj) > 0`.
    pub c2_positive: bool,
}

impl DirectionReport {
    pub fn node_count(&self) -> usize {
        self.tags.iter().filter(|t| **t == Tag::Node).count()
    }

    /// Largest node `r_j`, if any variable is a node.
    pub fn t(&self) -> Option<u32> {
        self.tags.iter().zip(&self.r).filter(|(t, _)| **t == Tag::Node).map(|(_, r)| *r).max()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "index": self.direction.index,
            "xi": {"re": self.direction.xi().re, "im": self.direction.xi().im},
            "k": self.k,
            "p": self.p,
            "tags": self.tags.iter().map(Tag::label).collect::<Vec<_>>(),
            "nu": self.nu,
            "r": self.r,
            "r_max": self.r_max,
            "s": self.s,
            "c2_positive": self.c2_positive,
        })
    }
}

pub fn attracting_directions<K: Coeff>(form: &RSDiffeo<K>) -> Vec<Direction> {
    (0..form.q).map(|index| Direction { index, q: form.q }).collect()
}

/// Sign of `Re(ξ^e a)` for `ξ = exp(2πi·l/q)`.
///
/// Exact coefficients: the product is exact when `ξ^e` is an eighth root of unity; otherwise the real
/// part of a nonzero Gaussian rational times `ξ^e` cannot vanish, so the float sign is reliable.
fn rotated_re_sign<K: Coeff>(a: &K, l: u32, q: u32, e: u32) -> Option<Ordering> {
    let num = (l as u64 * e as u64) % q as u64;
    let g = num_integer::gcd(num, q as u64);
    let (num, den) = (num / g, q as u64 / g);
    let z = Complex64::from_polar(1.0, 2.0 * PI * num as f64 / den as f64);
    if K::EXACT {
        if a.is_zero() {
            return Some(Ordering::Equal);
        }
        let i = K::imag_unit();
        let unit = |k: u64| match k % 4 {
            0 => K::one(),
            1 => i.clone(),
            2 => K::one().neg_ref(),
            _ => i.neg_ref(),
        };
        match den {
            1 | 2 | 4 => return a.mul_ref(&unit(num * 4 / den)).re_sign(0.0),
            // ξ^e = i^{(num-1)/2} (1 + i)/√2
            8 => return a.mul_ref(&unit((num - 1) / 2)).mul_ref(&K::one().add_ref(&i)).re_sign(0.0),
            _ => {}
        }
        let v = (a.to_c64() * z).re;
        return Some(if v > 0.0 { Ordering::Greater } else { Ordering::Less });
    }
    let ac = a.to_c64();
    let tol = 1e-9 * (1.0 + ac.norm());
    if ac.norm() <= tol {
        return Some(Ordering::Equal);
    }
    (ac * z).re_sign(tol)
}

pub fn classify_direction<K: Coeff>(form: &RSDiffeo<K>, dir: Direction) -> Result<DirectionReport, ClassifyError> {
    let (q, k, p) = (form.q, form.k, form.p);
    if dir.q != q || dir.index >= q {
        return Err(ClassifyError::BadDirection { index: dir.index, q });
    }
    let m = form.d.len();
    let mut tags = Vec::with_capacity(m);
    let mut nus = Vec::with_capacity(m);
    let mut rs = Vec::with_capacity(m);
    let mut c2_positive = true;
    for j in 0..m {
        let dj = &form.d[j];
        let coeff = |l: u32| dj.uc(k + l);
        let nu = if p == 0 { None } else { (0..p).find(|&l| !negligible(&coeff(l))) };
        nus.push(nu);
        let mut r = p;
        let mut node = false;
        if let Some(nu) = nu {
            for l in nu..p {
                let sign = rotated_re_sign(&coeff(l), dir.index, q, k + l)
                    .ok_or(ClassifyError::Indeterminate { var: j + 2, order: l, power: k + l })?;
                if sign != Ordering::Equal {
                    r = l;
                    node = sign == Ordering::Less;
                    break;
                }
            }
        }
        if !node && r == p {
            let cjj = form.c.get(j, j);
            let sign = rotated_re_sign(cjj, dir.index, q, q)
                .ok_or(ClassifyError::Indeterminate { var: j + 2, order: p, power: q })?;
            c2_positive &= sign == Ordering::Greater;
        }
        tags.push(if node { Tag::Node } else { Tag::Saddle });
        rs.push(r);
    }
    let s = 1 + tags.iter().filter(|t| **t == Tag::Node).count();
    let r_max = rs.iter().copied().max().unwrap_or(p);
    Ok(DirectionReport { direction: dir, k, p, tags, nu: nus, r: rs, r_max, s, c2_positive })
}

fn negligible<K: Coeff>(c: &K) -> bool {
    if K::EXACT {
        c.is_zero()
    } else {
        c.abs() <= 1e-12
    }
}

/// `min |Re A_{j, r_j}| / 3` over all variables, read in the rotated frame.
pub fn dominant_constant(frame: &RSDiffeo<Complex64>, report: &DirectionReport) -> f64 {
    let k = report.k;
    let mut c = f64::INFINITY;
    for (j, &r) in report.r.iter().enumerate() {
        let a = if r == report.p { *frame.c.get(j, j) } else { frame.d[j].uc(k + r) };
        c = c.min(a.re.abs() / 3.0);
    }
    if c.is_finite() {
        c
    } else {
        1.0 / 3.0
    }
}

/// A rotated form with node variables first and the nilpotent part of `C₂` rescaled.
#[derive(Clone, Debug)]
pub struct PartitionedForm {
    pub form: RSDiffeo<Complex64>,
    pub report: DirectionReport,
    /// Number of `x, w` coordinates; `w` has `s - 1` entries.
    pub s: usize,
    /// `perm[i]` is the original `y`-index placed at position `i`.
    pub perm: Vec<usize>,
    /// `z = diag(scale) z̃` on the saddle block.
    pub scale: Vec<Complex64>,
    pub c: f64,
}

impl PartitionedForm {
    pub fn n(&self) -> usize {
        self.form.map.dim()
    }

    /// `D̄` entries (`D = x^k D̄`) of the saddle block.
    pub fn d2_bar(&self) -> Vec<Jet<Complex64>> {
        let k = self.form.k;
        self.form.d[self.s - 1..]
            .iter()
            .map(|d| d.div_var_pow(0, k).unwrap_or_else(|_| Jet::zero(1, d.order())))
            .collect()
    }

    pub fn c2(&self) -> Mat<Complex64> {
        let m = self.form.c.rows();
        self.form.c.block(self.s - 1, m, self.s - 1, m)
    }
}

fn jordan_check(c: &Mat<Complex64>) -> Result<(), ClassifyError> {
    let tol = 1e-9 * (1.0 + c.max_abs());
    let m = c.rows();
    for i in 0..m {
        for j in 0..m {
            let v = c.get(i, j).norm();
            if j == i + 1 {
                if v > tol && (c.get(i, i) - c.get(j, j)).norm() > tol {
                    return Err(ClassifyError::NotJordan(format!("entry ({i},{j}) joins distinct eigenvalues")));
                }
            } else if i != j && v > tol {
                return Err(ClassifyError::NotJordan(format!("entry ({i},{j}) is off the superdiagonal")));
            }
        }
    }
    Ok(())
}

/// Reorders the rotated form so node variables come first and makes every nonzero superdiagonal entry
/// of `C₂` equal to `c/2`.
pub fn block_partition(
    frame: &RSDiffeo<Complex64>,
    report: &DirectionReport,
    c: f64,
) -> Result<PartitionedForm, ClassifyError> {
    jordan_check(&frame.c)?;
    let m = frame.d.len();
    let mut perm: Vec<usize> = (0..m).filter(|&j| report.tags[j] == Tag::Node).collect();
    perm.extend((0..m).filter(|&j| report.tags[j] == Tag::Saddle));
    let s = 1 + report.node_count();
    for i in 0..m.saturating_sub(1) {
        if frame.c.get(i, i + 1).norm() > 0.0 && report.tags[i] != report.tags[i + 1] {
            return Err(ClassifyError::NotJordan(format!("Jordan chain through y{} mixes node and saddle", i + 2)));
        }
    }
    let c_perm = frame.c.permuted(&perm);
    let mut scale = vec![Complex64::new(1.0, 0.0); m];
    for i in s..m {
        let e = *c_perm.get(i - 1, i);
        if e.norm() > 0.0 {
            scale[i] = scale[i - 1] * Complex64::new(c / 2.0, 0.0) / e;
        }
    }
    // Variable order in the full space: x, then y's permuted.
    let mut full = vec![0usize];
    full.extend(perm.iter().map(|&j| j + 1));
    let inv_full = {
        let mut v = vec![0usize; m + 1];
        for (i, &f) in full.iter().enumerate() {
            v[f] = i;
        }
        v
    };
    let sc = |i: usize| if i == 0 { Complex64::new(1.0, 0.0) } else { scale[i - 1] };
    let comps: Vec<Jet<Complex64>> = full
        .iter()
        .enumerate()
        .map(|(i, &src)| {
            let jet = frame.map.component(src);
            Jet::from_terms(
                m + 1,
                jet.order(),
                jet.terms().map(|(e, v)| {
                    let mut ne = vec![0u16; m + 1];
                    let mut f = *v / sc(i);
                    for (old, &pw) in e.iter().enumerate() {
                        let new = inv_full[old];
                        ne[new] = pw;
                        f *= sc(new).powu(pw as u32);
                    }
                    (ne, f)
                }),
            )
        })
        .collect();
    let curve: Vec<_> = full
        .iter()
        .enumerate()
        .map(|(i, &src)| frame.curve.component(src).scale(&(Complex64::new(1.0, 0.0) / sc(i))))
        .collect();
    let mut c_new = c_perm.clone();
    for i in 0..m {
        for j in 0..m {
            let v = *c_perm.get(i, j) * scale[j] / scale[i];
            c_new.set(i, j, v);
        }
    }
    let mut rep = report.clone();
    rep.tags = perm.iter().map(|&j| report.tags[j]).collect();
    rep.nu = perm.iter().map(|&j| report.nu[j]).collect();
    rep.r = perm.iter().map(|&j| report.r[j]).collect();
    let form = RSDiffeo {
        q: frame.q,
        k: frame.k,
        p: frame.p,
        b: frame.b,
        d: perm.iter().map(|&j| frame.d[j].clone()).collect(),
        c: c_new,
        map: DiffeoJet::new(comps).expect("permutation keeps the shape"),
        curve: CurveParam::new(curve).expect("permutation keeps the shape"),
    };
    Ok(PartitionedForm { form, report: rep, s, perm, scale, c })
}

/// Constants for the sector `R_{d,e,ε}` on which both nodal-domain inequalities were checked.
#[derive(Clone, Debug, PartialEq)]
pub struct SectorParams {
    pub sector: Sector,
    pub c: f64,
    pub m: u32,
    pub halvings: u32,
    /// Grid size used for the check and the worst margins of inequalities (i) and (ii).
    pub grid: (usize, usize),
    pub margin_node: Option<f64>,
    pub margin_saddle: Option<f64>,
}

impl SectorParams {
    pub fn to_json(&self) -> Value {
        json!({
            "d": self.sector.d,
            "e": self.sector.e,
            "epsilon": self.sector.eps,
            "r": self.sector.r,
            "c": self.c,
            "m": self.m,
            "halvings": self.halvings,
            "grid": [self.grid.0, self.grid.1],
            "margin_node": self.margin_node,
            "margin_saddle": self.margin_saddle,
        })
    }
}

pub const MAX_HALVINGS: u32 = 40;

/// Worst margins of the two inequalities over an `nr × nθ` grid; negative means violated.
///
/// (i) `Re(D_jj(x)) ≤ −c|x|^{k+t}` for node variables, (ii) `Re(D_jj(x) + x^q C_jj) ≥ c|x|^q` for saddles.
pub fn check_inequalities(
    part: &PartitionedForm,
    sector: &Sector,
    c: f64,
    nr: usize,
    nth: usize,
) -> (Option<f64>, Option<f64>) {
    let f = &part.form;
    let k = f.k as i32;
    let q = f.q as i32;
    let t = part.report.t().unwrap_or(0) as i32;
    let m = f.d.len();
    let node: Vec<usize> = (0..m).filter(|&j| part.report.tags[j] == Tag::Node).collect();
    let saddle: Vec<usize> = (0..m).filter(|&j| part.report.tags[j] == Tag::Saddle).collect();
    let pts = sector.grid(nr, nth);
    let (mi, mii) = pts
        .par_iter()
        .map(|&x| {
            let ax = x.norm();
            let mut wi = f64::INFINITY;
            let mut wii = f64::INFINITY;
            for &j in &node {
                let v = f.d[j].eval_c64(&[x]).re;
                wi = wi.min((-c * ax.powi(k + t) - v) / ax.powi(k + t));
            }
            for &j in &saddle {
                let v = (f.d[j].eval_c64(&[x]) + x.powi(q) * f.c.get(j, j)).re;
                wii = wii.min((v - c * ax.powi(q)) / ax.powi(q));
            }
            (wi, wii)
        })
        .reduce(|| (f64::INFINITY, f64::INFINITY), |a, b| (a.0.min(b.0), a.1.min(b.1)));
    let opt = |v: f64, nonempty: bool| if nonempty { Some(v) } else { None };
    (opt(mi, !node.is_empty()), opt(mii, !saddle.is_empty()))
}

/// Halves `(d, e, ε)` from `(0.5, 0.5, 0.2)` until both inequalities hold on a 64×64 grid.
pub fn synthesize_sector(part: &PartitionedForm) -> Result<SectorParams, ClassifyError> {
    let rep = &part.report;
    for (j, tag) in rep.tags.iter().enumerate() {
        if *tag == Tag::Saddle && rep.r[j] == rep.p {
            let re = part.form.c.get(j, j).re;
            if re <= 0.0 {
                return Err(ClassifyError::NonPositiveC { var: part.perm[j] + 2, re });
            }
        }
    }
    let c = part.c;
    let (mut d, mut e, mut eps) = (0.5, 0.5, 0.2);
    let mut last = ("i", 0.0);
    for halvings in 0..=MAX_HALVINGS {
        let sector = Sector { d, e, eps, r: rep.r_max };
        let (mi, mii) = check_inequalities(part, &sector, c, 64, 64);
        let ok_i = mi.map_or(true, |v| v >= 0.0);
        let ok_ii = mii.map_or(true, |v| v >= 0.0);
        if ok_i && ok_ii {
            return Ok(SectorParams {
                sector,
                c,
                m: rep.p + 2,
                halvings,
                grid: (64, 64),
                margin_node: mi,
                margin_saddle: mii,
            });
        }
        last = if ok_i { ("ii", mii.unwrap()) } else { ("i", mi.unwrap()) };
        d /= 2.0;
        e /= 2.0;
        eps /= 2.0;
    }
    Err(ClassifyError::NoSector { which: last.0, margin: last.1, halvings: MAX_HALVINGS })
}

#[cfg(test)]
mod tests;
