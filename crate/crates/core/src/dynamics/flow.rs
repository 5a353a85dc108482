use crate::jets::{Coeff, Composer, Jet, Mat, FLOAT_BITS};

use super::{DiffeoJet, DynError, VectorField};

fn is_nilpotent<K: Coeff>(m: &Mat<K>) -> bool {
    let p = m.pow(m.rows() as u32);
    if K::EXACT {
        p.is_zero()
    } else {
        p.max_abs() <= 1e-10 * (1.0 + m.max_abs()).powi(m.rows() as i32)
    }
}

fn float_cutoff() -> f64 {
    2f64.powi(-2 * FLOAT_BITS as i32)
}

/// Time-`t` flow `g ↦ Σ t^j X^j(g)/j!` applied to the coordinate functions.
pub fn exp_flow<K: Coeff>(x: &VectorField<K>, t: &K, order: u32) -> Result<DiffeoJet<K>, DynError> {
    let order = order.min(x.order());
    let n = x.dim();
    if t.is_zero() {
        return Ok(DiffeoJet::identity(n, order));
    }
    let x = x.truncate(order).scale(t);
    let exact = K::EXACT;
    if exact && !is_nilpotent(&x.linear_part()) {
        return Err(DynError::NotNilpotent);
    }
    let cap = if exact { 64 * (order as usize + 1) * n } else { 10 * order.max(1) as usize };
    let mut comps = Vec::with_capacity(n);
    for i in 0..n {
        let mut term = Jet::var(n, order, i);
        let mut sum = term.clone();
        let mut k = 1usize;
        loop {
            if k > cap {
                if exact {
                    return Err(DynError::NoConvergence(cap));
                }
                break;
            }
            let inv = K::from_i64(k as i64).inv().expect("nonzero");
            term = x.apply(&term).scale(&inv);
            if term.is_zero() || (!exact && term.max_abs() < float_cutoff()) {
                break;
            }
            sum = sum.add(&term)?;
            k += 1;
        }
        comps.push(sum);
    }
    DiffeoJet::new(comps)
}

/// The unique vector field with nilpotent linear part whose time-one flow is `f`.
pub fn log_unipotent<K: Coeff>(f: &DiffeoJet<K>) -> Result<VectorField<K>, DynError> {
    let n = f.dim();
    let order = f.order();
    let l = f.linear_part().sub(&Mat::identity(n));
    if !is_nilpotent(&l) {
        return Err(DynError::NotUnipotent);
    }
    let comp = Composer::new(f.components())?;
    let cap = 64 * (order as usize + 1) * n;
    let mut comps = Vec::with_capacity(n);
    for i in 0..n {
        // log(F*) = Σ (-1)^{k+1} Δ^k / k with Δg = g∘F - g
        let mut u = Jet::var(n, order, i);
        let mut sum = Jet::zero(n, order);
        let mut k = 1usize;
        loop {
            u = comp.apply(&u).sub(&u)?;
            if u.is_zero() || (!K::EXACT && u.max_abs() < float_cutoff()) {
                break;
            }
            if k > cap {
                if K::EXACT {
                    return Err(DynError::NoConvergence(cap));
                }
                break;
            }
            let mut w = K::from_i64(k as i64).inv().expect("nonzero");
            if k % 2 == 0 {
                w = w.neg_ref();
            }
            sum = sum.add(&u.scale(&w))?;
            k += 1;
        }
        comps.push(sum);
    }
    VectorField::new(comps)
}
