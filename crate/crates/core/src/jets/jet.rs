use std::collections::{BTreeMap, HashMap};
use std::fmt;

use smallvec::SmallVec;

use super::{Coeff, JetError};

/// Exponent multi-index.
pub type Exps = SmallVec<[u16; 6]>;

/// Truncated power series `J_N f` in `nvars` variables.
///
/// Terms are stored without zero coefficients, so structural equality is
/// equality of jets.
#[derive(Clone, PartialEq)]
pub struct Jet<K> {
    nvars: usize,
    order: u32,
    terms: BTreeMap<Exps, K>,
}

pub fn degree(e: &[u16]) -> u32 {
    e.iter().map(|&v| v as u32).sum()
}

fn unit_exps(n: usize, i: usize) -> Exps {
    let mut e: Exps = SmallVec::from_elem(0, n);
    e[i] = 1;
    e
}

impl<K: Coeff> Jet<K> {
    pub fn zero(nvars: usize, order: u32) -> Self {
        Jet { nvars, order, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, order: u32, c: K) -> Self {
        let mut j = Jet::zero(nvars, order);
        if !c.is_zero() {
            j.terms.insert(SmallVec::from_elem(0, nvars), c);
        }
        j
    }

    pub fn one(nvars: usize, order: u32) -> Self {
        Jet::constant(nvars, order, K::one())
    }

    /// The coordinate function `x_i`.
    pub fn var(nvars: usize, order: u32, i: usize) -> Self {
        Jet::monomial(nvars, order, &unit_exps(nvars, i), K::one())
    }

    pub fn monomial(nvars: usize, order: u32, exps: &[u16], c: K) -> Self {
        assert_eq!(exps.len(), nvars, "exponent length mismatch");
        let mut j = Jet::zero(nvars, order);
        if degree(exps) <= order && !c.is_zero() {
            j.terms.insert(SmallVec::from_slice(exps), c);
        }
        j
    }

    pub fn from_terms<I>(nvars: usize, order: u32, terms: I) -> Self
    where
        I: IntoIterator<Item = (Vec<u16>, K)>,
    {
        let mut j = Jet::zero(nvars, order);
        for (e, c) in terms {
            assert_eq!(e.len(), nvars, "exponent length mismatch");
            if degree(&e) <= order {
                j.add_term(SmallVec::from_vec(e), &c);
            }
        }
        j
    }

    /// Univariate jet from a dense coefficient list `c_0, c_1, …`.
    pub fn univariate(order: u32, coeffs: &[K]) -> Self {
        let mut j = Jet::zero(1, order);
        for (k, c) in coeffs.iter().enumerate() {
            if (k as u32) <= order && !c.is_zero() {
                j.terms.insert(SmallVec::from_elem(k as u16, 1), c.clone());
            }
        }
        j
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }
    pub fn order(&self) -> u32 {
        self.order
    }
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    pub fn len(&self) -> usize {
        self.terms.len()
    }
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
    pub fn terms(&self) -> impl Iterator<Item = (&Exps, &K)> {
        self.terms.iter()
    }
    pub fn coeff(&self, exps: &[u16]) -> K {
        self.terms.get(exps).cloned().unwrap_or_else(K::zero)
    }
    pub fn constant_term(&self) -> K {
        self.coeff(&vec![0u16; self.nvars])
    }
    /// Coefficient of `x_i` in the linear part.
    pub fn linear_coeff(&self, i: usize) -> K {
        self.coeff(&unit_exps(self.nvars, i))
    }

    fn add_term(&mut self, e: Exps, c: &K) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c.clone());
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                o.get_mut().add_assign_ref(c);
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    /// Minimal total degree of a stored term, `None` for the zero jet.
    pub fn valuation(&self) -> Option<u32> {
        self.terms.keys().map(|e| degree(e)).min()
    }

    /// Minimal exponent of variable `i` among stored terms.
    pub fn valuation_in(&self, i: usize) -> Option<u32> {
        self.terms.keys().map(|e| e[i] as u32).min()
    }

    pub fn max_degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| degree(e)).max()
    }

    pub fn truncate(&self, order: u32) -> Self {
        let order = order.min(self.order);
        Jet {
            nvars: self.nvars,
            order,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| degree(e) <= order)
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    /// Same terms, different declared order (terms above `order` dropped).
    pub fn with_order(&self, order: u32) -> Self {
        Jet {
            nvars: self.nvars,
            order,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| degree(e) <= order)
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    /// Homogeneous part of total degree `d`.
    pub fn homogeneous(&self, d: u32) -> Self {
        Jet {
            nvars: self.nvars,
            order: self.order,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| degree(e) == d)
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    fn check_vars(&self, o: &Self) -> Result<(), JetError> {
        if self.nvars != o.nvars {
            Err(JetError::VarMismatch(self.nvars, o.nvars))
        } else {
            Ok(())
        }
    }

    pub fn add(&self, o: &Self) -> Result<Self, JetError> {
        self.check_vars(o)?;
        let order = self.order.min(o.order);
        let mut out = self.truncate(order);
        for (e, c) in o.terms.iter() {
            if degree(e) <= order {
                out.add_term(e.clone(), c);
            }
        }
        Ok(out)
    }

    pub fn sub(&self, o: &Self) -> Result<Self, JetError> {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        Jet {
            nvars: self.nvars,
            order: self.order,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c.neg_ref())).collect(),
        }
    }

    pub fn scale(&self, k: &K) -> Self {
        if k.is_zero() {
            return Jet::zero(self.nvars, self.order);
        }
        let mut out = Jet::zero(self.nvars, self.order);
        for (e, c) in self.terms.iter() {
            let v = c.mul_ref(k);
            if !v.is_zero() {
                out.terms.insert(e.clone(), v);
            }
        }
        out
    }

    /// Product truncated at `min(a.order, b.order)`.
    pub fn multiply(&self, o: &Self) -> Result<Self, JetError> {
        self.check_vars(o)?;
        Ok(self.mul_to(o, self.order.min(o.order)))
    }

    /// Product whose declared order accounts for valuations:
    /// `min(a.order + val b, b.order + val a)`.
    pub fn mul_val(&self, o: &Self) -> Result<Self, JetError> {
        self.check_vars(o)?;
        let va = self.valuation();
        let vb = o.valuation();
        let order = match (va, vb) {
            (Some(va), Some(vb)) => (self.order + vb).min(o.order + va),
            (None, Some(vb)) => self.order + vb,
            (Some(va), None) => o.order + va,
            (None, None) => self.order.max(o.order),
        };
        Ok(self.mul_to(o, order))
    }

    /// Product truncated at an explicit order.
    pub fn mul_to(&self, o: &Self, order: u32) -> Self {
        let mut a: Vec<(&Exps, u32, &K)> = self.terms.iter().map(|(e, c)| (e, degree(e), c)).collect();
        let mut b: Vec<(&Exps, u32, &K)> = o.terms.iter().map(|(e, c)| (e, degree(e), c)).collect();
        a.sort_by_key(|t| t.1);
        b.sort_by_key(|t| t.1);
        let mut acc: HashMap<Exps, K> = HashMap::new();
        for (ea, da, ca) in a.iter() {
            if *da > order {
                break;
            }
            for (eb, db, cb) in b.iter() {
                if da + db > order {
                    break;
                }
                let e: Exps = ea.iter().zip(eb.iter()).map(|(x, y)| x + y).collect();
                acc.entry(e).or_insert_with(K::zero).mul_add_assign(ca, cb);
            }
        }
        Jet {
            nvars: self.nvars,
            order,
            terms: acc.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Jet::one(self.nvars, self.order);
        for _ in 0..k {
            acc = acc.mul_to(self, self.order);
        }
        acc
    }

    /// Partial derivative in variable `i`; the order drops by one.
    pub fn derive(&self, i: usize) -> Self {
        assert!(i < self.nvars, "variable index out of range");
        let mut out = Jet::zero(self.nvars, self.order.saturating_sub(1));
        for (e, c) in self.terms.iter() {
            if e[i] == 0 {
                continue;
            }
            let mut f = e.clone();
            f[i] -= 1;
            if degree(&f) <= out.order {
                out.add_term(f, &c.mul_ref(&K::from_i64(e[i] as i64)));
            }
        }
        out
    }

    /// Antiderivative in variable `i` with zero constant; order rises by one.
    pub fn integrate(&self, i: usize) -> Self {
        let mut out = Jet::zero(self.nvars, self.order + 1);
        for (e, c) in self.terms.iter() {
            let mut f = e.clone();
            f[i] += 1;
            let k = K::from_i64(f[i] as i64).inv().expect("nonzero");
            out.add_term(f, &c.mul_ref(&k));
        }
        out
    }

    /// Exact division by `x_i^k`; every term must be divisible.
    ///
    /// Over floats, non-divisible terms below `1e-9` relative to the largest coefficient are dropped.
    pub fn div_var_pow(&self, i: usize, k: u32) -> Result<Self, JetError> {
        if k == 0 {
            return Ok(self.clone());
        }
        if self.order < k {
            return Err(JetError::OrderExhausted { needed: k, available: self.order });
        }
        let tol = if K::EXACT { 0.0 } else { 1e-9 * (1.0 + self.max_abs()) };
        let mut out = Jet::zero(self.nvars, self.order - k);
        for (e, c) in self.terms.iter() {
            if (e[i] as u32) < k {
                if !K::EXACT && c.abs() <= tol {
                    continue;
                }
                return Err(JetError::NotDivisible);
            }
            let mut f = e.clone();
            f[i] -= k as u16;
            out.terms.insert(f, c.clone());
        }
        Ok(out)
    }

    /// Multiplication by `x_i^k`; the declared order rises by `k`.
    pub fn mul_var_pow(&self, i: usize, k: u32) -> Self {
        let mut out = Jet::zero(self.nvars, self.order + k);
        for (e, c) in self.terms.iter() {
            let mut f = e.clone();
            f[i] += k as u16;
            out.terms.insert(f, c.clone());
        }
        out
    }

    /// Multiplicative inverse of a series with invertible constant term.
    pub fn inv_unit(&self) -> Result<Self, JetError> {
        let c0 = self.constant_term();
        let ic = c0.inv().ok_or(JetError::NotUnit)?;
        let one = Jet::one(self.nvars, self.order);
        // g_{k+1} = g_k (2 - f g_k), doubling the correct order each step
        let mut g = Jet::constant(self.nvars, self.order, ic);
        let mut correct = 0u32;
        while correct < self.order {
            let fg = self.mul_to(&g, self.order);
            let two_minus = one.scale(&K::from_i64(2)).sub(&fg)?;
            g = g.mul_to(&two_minus, self.order);
            correct = 2 * correct + 1;
        }
        Ok(g)
    }

    /// `self / d` for a unit `d`.
    pub fn div_unit(&self, d: &Self) -> Result<Self, JetError> {
        let inv = d.inv_unit()?;
        self.multiply(&inv)
    }

    /// `n`-th root of a unit series with prescribed root `c` of the constant term.
    pub fn nth_root_unit(&self, n: u32, c: &K) -> Result<Self, JetError> {
        let c0 = self.constant_term();
        if c0.is_zero() {
            return Err(JetError::NotUnit);
        }
        if c.pow(n) != c0 && K::EXACT {
            return Err(JetError::NoRoot);
        }
        // f = c0 (1 + t): root = c (1 + t)^{1/n} via the binomial series
        let t = self.scale(&c0.inv().ok_or(JetError::NotUnit)?).sub(&Jet::one(self.nvars, self.order))?;
        let nk = K::from_i64(n as i64).inv().expect("nonzero");
        let mut acc = Jet::one(self.nvars, self.order);
        let mut tp = Jet::one(self.nvars, self.order);
        let mut binom = K::one();
        for k in 1..=self.order {
            tp = tp.mul_to(&t, self.order);
            if tp.is_zero() {
                break;
            }
            // binom(1/n, k) = binom(1/n, k-1) * (1/n - (k-1)) / k
            let num = nk.sub_ref(&K::from_i64(k as i64 - 1));
            binom = binom.mul_ref(&num).mul_ref(&K::from_i64(k as i64).inv().expect("nonzero"));
            acc = acc.add(&tp.scale(&binom))?;
        }
        Ok(acc.scale(c))
    }

    /// Composition `self ∘ inner` (inner entries must vanish at the origin).
    pub fn compose(&self, inner: &[Jet<K>]) -> Result<Self, JetError> {
        let comp = Composer::new(inner)?;
        if inner.len() != self.nvars {
            return Err(JetError::ArityMismatch { expected: self.nvars, got: inner.len() });
        }
        Ok(comp.apply(self))
    }

    /// Evaluate at a point in the same field.
    pub fn eval(&self, point: &[K]) -> K {
        let mut total = K::zero();
        let mut cache: Vec<Vec<K>> = point.iter().map(|p| vec![K::one(), p.clone()]).collect();
        for (e, c) in self.terms.iter() {
            let mut t = c.clone();
            for (i, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                while cache[i].len() <= k as usize {
                    let last = cache[i].last().expect("nonempty").mul_ref(&point[i]);
                    cache[i].push(last);
                }
                t = t.mul_ref(&cache[i][k as usize]);
            }
            total.add_assign_ref(&t);
        }
        total
    }

    /// Evaluate at a complex point in floating arithmetic.
    pub fn eval_c64(&self, point: &[num_complex::Complex64]) -> num_complex::Complex64 {
        let mut total = num_complex::Complex64::new(0.0, 0.0);
        for (e, c) in self.terms.iter() {
            let mut t = c.to_c64();
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    t *= point[i].powu(k as u32);
                }
            }
            total += t;
        }
        total
    }

    pub fn map_coeffs<L: Coeff>(&self, f: impl Fn(&K) -> L) -> Jet<L> {
        let mut out = Jet::zero(self.nvars, self.order);
        for (e, c) in self.terms.iter() {
            let v = f(c);
            if !v.is_zero() {
                out.terms.insert(e.clone(), v);
            }
        }
        out
    }

    pub fn to_float(&self) -> Jet<num_complex::Complex64> {
        self.map_coeffs(|c| c.to_c64())
    }

    /// Drop float coefficients below `tol` in modulus.
    pub fn chop(&self, tol: f64) -> Self {
        let mut out = self.clone();
        out.terms.retain(|_, c| c.abs() > tol);
        out
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).fold(0.0, f64::max)
    }

    /// Embed into more variables (new variables appended, absent).
    pub fn extend_vars(&self, nvars: usize) -> Self {
        let mut out = Jet::zero(nvars, self.order);
        for (e, c) in self.terms.iter() {
            let mut f: Exps = SmallVec::from_elem(0, nvars);
            f[..self.nvars].copy_from_slice(e);
            out.terms.insert(f, c.clone());
        }
        out
    }

    /// Set variable `i` to zero.
    pub fn restrict_zero(&self, i: usize) -> Self {
        let mut out = self.clone();
        out.terms.retain(|e, _| e[i] == 0);
        out
    }

    /// Coefficient of `x_i^k` as a jet in the remaining positions (variable kept, exponent cleared).
    pub fn coeff_in(&self, i: usize, k: u16) -> Self {
        let mut out = Jet::zero(self.nvars, self.order.saturating_sub(k as u32));
        for (e, c) in self.terms.iter() {
            if e[i] == k {
                let mut f = e.clone();
                f[i] = 0;
                out.terms.insert(f, c.clone());
            }
        }
        out
    }

    /// Permute variables: new variable `perm[i]` is old variable `i`.
    pub fn permute_vars(&self, perm: &[usize]) -> Self {
        let mut out = Jet::zero(self.nvars, self.order);
        for (e, c) in self.terms.iter() {
            let mut f: Exps = SmallVec::from_elem(0, self.nvars);
            for (i, &k) in e.iter().enumerate() {
                f[perm[i]] = k;
            }
            out.terms.insert(f, c.clone());
        }
        out
    }

    // ---- univariate helpers ----

    /// Coefficient of `s^k` in a univariate jet.
    pub fn uc(&self, k: u32) -> K {
        debug_assert_eq!(self.nvars, 1);
        self.terms.get(&[k as u16][..]).cloned().unwrap_or_else(K::zero)
    }

    /// Dense coefficients `0..=order` of a univariate jet.
    pub fn dense(&self) -> Vec<K> {
        (0..=self.order).map(|k| self.uc(k)).collect()
    }

    /// Univariate quotient `self / d` where `d` has valuation `v` and `self` is divisible by `s^v`.
    pub fn series_div(&self, d: &Self) -> Result<Self, JetError> {
        let v = d.valuation().ok_or(JetError::NotUnit)?;
        let num = self.div_var_pow(0, v)?;
        let den = d.div_var_pow(0, v)?;
        let den = den.truncate(num.order);
        num.truncate(den.order).div_unit(&den)
    }

    /// Substitute `x_i -> x_i^l`.
    pub fn ramify_var(&self, i: usize, l: u32) -> Self {
        let mut out = Jet::zero(self.nvars, self.order * l);
        for (e, c) in self.terms.iter() {
            let mut f = e.clone();
            f[i] *= l as u16;
            out.terms.insert(f, c.clone());
        }
        out
    }
}

impl<K: Coeff> fmt::Debug for Jet<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet[n={}, N={}](", self.nvars, self.order)?;
        let mut first = true;
        for (e, c) in self.terms.iter() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({})", c)?;
            for (i, &k) in e.iter().enumerate() {
                if k == 1 {
                    write!(f, "·x{}", i)?;
                } else if k > 1 {
                    write!(f, "·x{}^{}", i, k)?;
                }
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, ")")
    }
}

impl<K: Coeff> fmt::Display for Jet<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Reusable composition context: caches monomials of the inner tuple.
pub struct Composer<K: Coeff> {
    inner: Vec<Jet<K>>,
    order: u32,
    nvars: usize,
    vals: Vec<u32>,
    cache: std::cell::RefCell<HashMap<Exps, Jet<K>>>,
}

impl<K: Coeff> Composer<K> {
    pub fn new(inner: &[Jet<K>]) -> Result<Self, JetError> {
        let first = inner.first().ok_or(JetError::Empty)?;
        let nvars = first.nvars;
        let mut order = u32::MAX;
        for (i, g) in inner.iter().enumerate() {
            if g.nvars != nvars {
                return Err(JetError::VarMismatch(nvars, g.nvars));
            }
            if !g.constant_term().is_zero() {
                return Err(JetError::NonzeroConstant(i));
            }
            order = order.min(g.order);
        }
        Ok(Composer {
            inner: inner.iter().map(|g| g.truncate(order)).collect(),
            order,
            nvars,
            vals: inner.iter().map(|g| g.valuation().unwrap_or(u32::MAX / 4)).collect(),
            cache: std::cell::RefCell::new(HashMap::new()),
        })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    fn power(&self, e: &Exps, order: u32) -> Jet<K> {
        if let Some(j) = self.cache.borrow().get(e) {
            if j.order >= order {
                return j.truncate(order);
            }
        }
        let out = match e.iter().rposition(|&k| k > 0) {
            None => Jet::one(self.nvars, order),
            Some(i) => {
                let mut prev = e.clone();
                prev[i] -= 1;
                let p = self.power(&prev, order);
                p.mul_to(&self.inner[i], order)
            }
        };
        self.cache.borrow_mut().insert(e.clone(), out.clone());
        out
    }

    /// `outer ∘ inner` truncated at `min(outer.order, inner order)`.
    pub fn apply(&self, outer: &Jet<K>) -> Jet<K> {
        let order = outer.order.min(self.order);
        let mut acc: HashMap<Exps, K> = HashMap::new();
        for (e, c) in outer.terms.iter() {
            let minv: u64 = e.iter().zip(self.vals.iter()).map(|(&k, &v)| k as u64 * v as u64).sum();
            if minv > order as u64 {
                continue;
            }
            let p = self.power(e, self.order);
            for (pe, pc) in p.terms.iter() {
                if degree(pe) <= order {
                    acc.entry(pe.clone()).or_insert_with(K::zero).mul_add_assign(c, pc);
                }
            }
        }
        Jet {
            nvars: self.nvars,
            order,
            terms: acc.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
        }
    }

    pub fn apply_all(&self, outer: &[Jet<K>]) -> Vec<Jet<K>> {
        outer.iter().map(|o| self.apply(o)).collect()
    }
}

/// Compose a tuple: `outer_i ∘ inner` for each component.
pub fn compose_tuple<K: Coeff>(outer: &[Jet<K>], inner: &[Jet<K>]) -> Result<Vec<Jet<K>>, JetError> {
    let comp = Composer::new(inner)?;
    for o in outer {
        if o.nvars != inner.len() {
            return Err(JetError::ArityMismatch { expected: o.nvars, got: inner.len() });
        }
    }
    Ok(comp.apply_all(outer))
}

/// Identity tuple `(x_1, …, x_n)`.
pub fn identity_tuple<K: Coeff>(nvars: usize, order: u32) -> Vec<Jet<K>> {
    (0..nvars).map(|i| Jet::var(nvars, order, i)).collect()
}

/// Two-sided compositional inverse of a tuple with invertible linear part.
pub fn functional_inverse<K: Coeff>(f: &[Jet<K>]) -> Result<Vec<Jet<K>>, JetError> {
    let n = f.len();
    if n == 0 {
        return Err(JetError::Empty);
    }
    for (i, g) in f.iter().enumerate() {
        if g.nvars != n {
            return Err(JetError::ArityMismatch { expected: n, got: g.nvars });
        }
        if !g.constant_term().is_zero() {
            return Err(JetError::NonzeroConstant(i));
        }
    }
    let order = f.iter().map(|g| g.order).min().unwrap_or(0);
    let lin = super::Mat::from_fn(n, n, |i, j| f[i].linear_coeff(j));
    let linv = lin.inverse().ok_or(JetError::SingularLinearPart)?;
    // f = L + H  =>  g = L^{-1}(id - H∘g), one order gained per sweep
    let h: Vec<Jet<K>> = f
        .iter()
        .map(|g| {
            let mut r = g.truncate(order);
            r.terms.retain(|e, _| degree(e) >= 2);
            r
        })
        .collect();
    let id = identity_tuple::<K>(n, order);
    let apply_linv = |v: &[Jet<K>]| -> Result<Vec<Jet<K>>, JetError> {
        (0..n)
            .map(|i| {
                let mut acc = Jet::zero(n, order);
                for (j, vj) in v.iter().enumerate() {
                    let c = linv.get(i, j);
                    if !c.is_zero() {
                        acc = acc.add(&vj.scale(c))?;
                    }
                }
                Ok(acc)
            })
            .collect()
    };
    let mut g = apply_linv(&id)?;
    for _ in 1..order.max(1) {
        let hg = compose_tuple(&h, &g)?;
        let rhs: Vec<Jet<K>> = id.iter().zip(hg.iter()).map(|(a, b)| a.sub(b)).collect::<Result<_, _>>()?;
        g = apply_linv(&rhs)?;
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::Qi;

    fn q(n: i64) -> Qi {
        Qi::int(n)
    }

    #[test]
    fn product_truncates() {
        let x = Jet::<Qi>::var(1, 2, 0);
        let one = Jet::<Qi>::one(1, 2);
        let a = one.add(&x).unwrap();
        let b = one.sub(&x).unwrap();
        let p = a.multiply(&b).unwrap();
        assert_eq!(p, Jet::univariate(2, &[q(1), q(0), q(-1)]));
        let x1 = Jet::<Qi>::var(1, 1, 0);
        assert!(x1.multiply(&x1).unwrap().is_zero());
    }

    #[test]
    fn square_of_trinomial() {
        // (1+x+y)^2 expanded by hand
        let f = Jet::<Qi>::from_terms(2, 2, vec![(vec![0, 0], q(1)), (vec![1, 0], q(1)), (vec![0, 1], q(1))]);
        let sq = f.multiply(&f).unwrap();
        let expect = Jet::from_terms(
            2,
            2,
            vec![
                (vec![0, 0], q(1)),
                (vec![1, 0], q(2)),
                (vec![0, 1], q(2)),
                (vec![2, 0], q(1)),
                (vec![1, 1], q(2)),
                (vec![0, 2], q(1)),
            ],
        );
        assert_eq!(sq, expect);
    }

    #[test]
    fn geometric_series_composed() {
        let geo = Jet::univariate(3, &[q(1), q(1), q(1), q(1)]);
        let inner = Jet::univariate(3, &[q(0), q(1), q(1)]);
        let c = geo.compose(&[inner]).unwrap();
        assert_eq!(c, Jet::univariate(3, &[q(1), q(1), q(2), q(3)]));
    }

    #[test]
    fn compose_rejects_constant() {
        let x = Jet::<Qi>::var(1, 3, 0);
        let bad = Jet::univariate(3, &[q(1), q(1)]);
        assert!(matches!(x.compose(&[bad]), Err(JetError::NonzeroConstant(0))));
    }

    #[test]
    fn inverse_of_x_plus_x2() {
        let f = Jet::univariate(3, &[q(0), q(1), q(1)]);
        let g = functional_inverse(&[f]).unwrap();
        assert_eq!(g[0], Jet::univariate(3, &[q(0), q(1), q(-1), q(2)]));
    }

    #[test]
    fn inverse_of_shear() {
        let x = Jet::<Qi>::var(2, 3, 0);
        let y = Jet::<Qi>::var(2, 3, 1);
        let g = functional_inverse(&[x.add(&y).unwrap(), y.clone()]).unwrap();
        assert_eq!(g, vec![x.sub(&y).unwrap(), y]);
    }

    #[test]
    fn derivatives() {
        let f = Jet::<Qi>::monomial(2, 4, &[2, 1], q(1));
        assert_eq!(f.derive(0), Jet::monomial(2, 3, &[1, 1], q(2)));
        let g = Jet::<Qi>::monomial(2, 4, &[2, 0], q(1));
        assert!(g.derive(1).is_zero());
        let h = Jet::univariate(3, &[q(0), q(1), q(0), q(1)]);
        assert_eq!(h.derive(0), Jet::univariate(2, &[q(1), q(0), q(3)]));
    }

    #[test]
    fn unit_inverse_and_root() {
        let f = Jet::univariate(5, &[q(1), q(1)]);
        let g = f.inv_unit().unwrap();
        assert_eq!(g, Jet::univariate(5, &[q(1), q(-1), q(1), q(-1), q(1), q(-1)]));
        let sq = Jet::univariate(6, &[q(4), q(4), q(1)]);
        let r = sq.nth_root_unit(2, &q(2)).unwrap();
        assert_eq!(r, Jet::univariate(6, &[q(2), q(1)]));
    }
}
