use std::collections::BTreeMap;

use num_complex::Complex64;

use super::{Coeff, Jet, JetError};

/// Univariate truncated Laurent series: terms with exponent in `min_exp..=order`.
#[derive(Clone, PartialEq, Debug)]
pub struct LaurentJet<K> {
    min_exp: i32,
    order: i32,
    terms: BTreeMap<i32, K>,
}

impl<K: Coeff> LaurentJet<K> {
    pub fn zero(order: i32) -> Self {
        LaurentJet { min_exp: order.min(0), order, terms: BTreeMap::new() }
    }

    pub fn monomial(e: i32, order: i32, c: K) -> Self {
        let mut l = LaurentJet::zero(order);
        l.min_exp = e.min(order);
        if e <= order && !c.is_zero() {
            l.terms.insert(e, c);
        }
        l
    }

    /// `x^shift · j` for a univariate jet `j`.
    pub fn from_jet(j: &Jet<K>, shift: i32) -> Self {
        let order = j.order() as i32 + shift;
        let mut terms = BTreeMap::new();
        for (e, c) in j.terms() {
            terms.insert(e[0] as i32 + shift, c.clone());
        }
        LaurentJet { min_exp: shift.min(order), order, terms }
    }

    pub fn min_exp(&self) -> i32 {
        self.min_exp
    }
    pub fn order(&self) -> i32 {
        self.order
    }
    pub fn coeff(&self, e: i32) -> K {
        self.terms.get(&e).cloned().unwrap_or_else(K::zero)
    }
    pub fn terms(&self) -> impl Iterator<Item = (i32, &K)> {
        self.terms.iter().map(|(e, c)| (*e, c))
    }
    pub fn valuation(&self) -> Option<i32> {
        self.terms.keys().next().copied()
    }
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, o: &Self) -> Self {
        let order = self.order.min(o.order);
        let mut terms = BTreeMap::new();
        for (e, c) in self.terms.iter().chain(o.terms.iter()) {
            if *e > order {
                continue;
            }
            let s: &mut K = terms.entry(*e).or_insert_with(K::zero);
            s.add_assign_ref(c);
        }
        terms.retain(|_, c: &mut K| !c.is_zero());
        LaurentJet { min_exp: self.min_exp.min(o.min_exp).min(order), order, terms }
    }

    pub fn scale(&self, k: &K) -> Self {
        let mut out = self.clone();
        out.terms = self
            .terms
            .iter()
            .map(|(e, c)| (*e, c.mul_ref(k)))
            .filter(|(_, c)| !c.is_zero())
            .collect();
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(&K::one().neg_ref())
    }

    /// Product; the known range shifts by the other factor's valuation.
    pub fn mul(&self, o: &Self) -> Self {
        let va = self.valuation().unwrap_or(self.order);
        let vb = o.valuation().unwrap_or(o.order);
        let order = (self.order + vb).min(o.order + va);
        let mut terms: BTreeMap<i32, K> = BTreeMap::new();
        for (ea, ca) in self.terms.iter() {
            for (eb, cb) in o.terms.iter() {
                let e = ea + eb;
                if e > order {
                    break;
                }
                terms.entry(e).or_insert_with(K::zero).mul_add_assign(ca, cb);
            }
        }
        terms.retain(|_, c| !c.is_zero());
        LaurentJet { min_exp: (va + vb).min(order), order, terms }
    }

    /// Multiply by `x^k`.
    pub fn shift(&self, k: i32) -> Self {
        LaurentJet {
            min_exp: self.min_exp + k,
            order: self.order + k,
            terms: self.terms.iter().map(|(e, c)| (e + k, c.clone())).collect(),
        }
    }

    /// Multiplicative inverse; the leading coefficient must be invertible.
    pub fn inv(&self) -> Result<Self, JetError> {
        let v = self.valuation().ok_or(JetError::NotUnit)?;
        let rel = (self.order - v).max(0) as u32;
        let unit = Jet::from_terms(
            1,
            rel,
            self.terms.iter().map(|(e, c)| (vec![(e - v) as u16], c.clone())),
        );
        let inv = unit.inv_unit()?;
        Ok(LaurentJet::from_jet(&inv, -v))
    }

    /// Term-by-term antiderivative. Returns the series and the coefficient of `log x`.
    pub fn integrate(&self) -> (Self, K) {
        let mut log = K::zero();
        let mut terms = BTreeMap::new();
        for (e, c) in self.terms.iter() {
            if *e == -1 {
                log = c.clone();
            } else {
                let d = K::from_i64((*e + 1) as i64).inv().expect("nonzero");
                terms.insert(e + 1, c.mul_ref(&d));
            }
        }
        (LaurentJet { min_exp: self.min_exp + 1, order: self.order + 1, terms }, log)
    }

    pub fn eval_c64(&self, x: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (e, c) in self.terms.iter() {
            acc += c.to_c64() * x.powi(*e);
        }
        acc
    }

    /// Principal part (negative exponents only).
    pub fn principal(&self) -> Self {
        let mut out = self.clone();
        out.terms.retain(|e, _| *e < 0);
        out
    }

    pub fn map_coeffs<L: Coeff>(&self, f: impl Fn(&K) -> L) -> LaurentJet<L> {
        LaurentJet {
            min_exp: self.min_exp,
            order: self.order,
            terms: self.terms.iter().map(|(e, c)| (*e, f(c))).filter(|(_, c)| !c.is_zero()).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::Qi;

    #[test]
    fn inverse_of_shifted_unit() {
        // x^{-2}(1 - x) inverted is x^2(1 + x + x^2 + ...)
        let j = Jet::univariate(4, &[Qi::int(1), Qi::int(-1)]);
        let l = LaurentJet::from_jet(&j, -2);
        let inv = l.inv().unwrap();
        assert_eq!(inv.valuation(), Some(2));
        for e in 2..=6 {
            assert_eq!(inv.coeff(e), Qi::int(1));
        }
        let p = l.mul(&inv);
        assert_eq!(p.coeff(0), Qi::int(1));
        assert!((1..=p.order()).all(|e| p.coeff(e).is_zero()));
    }

    #[test]
    fn integrate_tracks_log() {
        let l = LaurentJet::monomial(-1, 3, Qi::int(3)).add(&LaurentJet::monomial(-3, 3, Qi::int(2)));
        let (i, log) = l.integrate();
        assert_eq!(log, Qi::int(3));
        assert_eq!(i.coeff(-2), Qi::int(-1));
    }
}
