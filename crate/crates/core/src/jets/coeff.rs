use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::JetError;

/// Scalar field for jet coefficients.
///
/// The exact variant is [`Qi`] (Gaussian rationals with arbitrary precision),
/// the floating variant is [`Complex64`].
pub trait Coeff: Clone + PartialEq + fmt::Debug + fmt::Display + Send + Sync + 'static {
    /// `true` for fields with no rounding.
    const EXACT: bool;
    /// Short label used in serialized output.
    const FIELD: &'static str;

    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn from_i64(n: i64) -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn from_rational(re: &BigRational, im: &BigRational) -> Self;
    fn imag_unit() -> Self;

    fn add_ref(&self, o: &Self) -> Self;
    fn sub_ref(&self, o: &Self) -> Self;
    fn mul_ref(&self, o: &Self) -> Self;
    fn neg_ref(&self) -> Self;
    fn inv(&self) -> Option<Self>;
    fn add_assign_ref(&mut self, o: &Self);
    /// `self += a * b`
    fn mul_add_assign(&mut self, a: &Self, b: &Self);

    fn to_c64(&self) -> Complex64;
    /// Float values convert; exact fields refuse transcendental input.
    fn from_c64(z: Complex64) -> Option<Self>;

    /// Sign of the real part, `None` when it cannot be certified.
    fn re_sign(&self, margin: f64) -> Option<Ordering>;
    /// `|self|^2` compared with one, `None` when undecidable.
    fn cmp_abs_one(&self, margin: f64) -> Option<Ordering>;

    /// An `n`-th root representable in the field, closest to the principal branch.
    fn nth_root(&self, n: u32) -> Option<Self>;
    /// Every representable `n`-th root.
    fn nth_roots(&self, n: u32) -> Vec<Self>;

    /// `(re, im)` strings for serialization.
    fn json_parts(&self) -> (String, String);
    fn parse_parts(re: &str, im: &str) -> Result<Self, JetError>;

    fn div_ref(&self, o: &Self) -> Option<Self> {
        o.inv().map(|i| self.mul_ref(&i))
    }
    fn abs(&self) -> f64 {
        self.to_c64().norm()
    }
    fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_ref(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_ref(&base);
            }
        }
        acc
    }
    fn powi(&self, e: i64) -> Option<Self> {
        if e >= 0 {
            Some(self.pow(e as u32))
        } else {
            self.inv().map(|i| i.pow((-e) as u32))
        }
    }
    /// Absolute magnitude used for float-aware zero tests.
    fn is_negligible(&self, tol: f64) -> bool {
        if Self::EXACT {
            self.is_zero()
        } else {
            self.abs() <= tol
        }
    }
}

/// Gaussian rational `re + i·im` with arbitrary-precision parts.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Qi {
    pub re: BigRational,
    pub im: BigRational,
}

impl Qi {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        Qi { re, im }
    }
    pub fn real(re: BigRational) -> Self {
        Qi { re, im: BigRational::zero() }
    }
    pub fn int(n: i64) -> Self {
        Qi::real(BigRational::from_integer(BigInt::from(n)))
    }
    pub fn ratio(n: i64, d: i64) -> Self {
        Qi::real(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }
    pub fn complex(re: (i64, i64), im: (i64, i64)) -> Self {
        Qi {
            re: BigRational::new(BigInt::from(re.0), BigInt::from(re.1)),
            im: BigRational::new(BigInt::from(im.0), BigInt::from(im.1)),
        }
    }
    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }
    pub fn conj(&self) -> Self {
        Qi { re: self.re.clone(), im: -self.im.clone() }
    }
    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }
}

fn rat_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        let n = r.numer().to_f64().unwrap_or(f64::NAN);
        let d = r.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Exact `n`-th root of a nonnegative rational, if it exists.
pub fn rational_nth_root(r: &BigRational, n: u32) -> Option<BigRational> {
    if r.is_negative() {
        if n % 2 == 1 {
            return rational_nth_root(&-r.clone(), n).map(|x| -x);
        }
        return None;
    }
    let num = r.numer().nth_root(n);
    let den = r.denom().nth_root(n);
    if num.pow(n) == *r.numer() && den.pow(n) == *r.denom() {
        Some(BigRational::new(num, den))
    } else {
        None
    }
}

/// Best rational approximation with denominator at most `max_den`.
pub fn rationalize(x: f64, max_den: i64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut v = x;
    for _ in 0..64 {
        let a = v.floor();
        if a.abs() > 1e15 {
            break;
        }
        let ai = a as i128;
        let h2 = ai * h1 + h0;
        let k2 = ai * k1 + k0;
        if k2 > max_den as i128 {
            break;
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        let frac = v - a;
        if frac.abs() < 1e-15 {
            break;
        }
        v = 1.0 / frac;
    }
    if k1 == 0 {
        return None;
    }
    Some(BigRational::new(BigInt::from(h1), BigInt::from(k1)))
}

impl Coeff for Qi {
    const EXACT: bool = true;
    const FIELD: &'static str = "exact";

    fn zero() -> Self {
        Qi { re: BigRational::zero(), im: BigRational::zero() }
    }
    fn one() -> Self {
        Qi { re: BigRational::one(), im: BigRational::zero() }
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    fn from_i64(n: i64) -> Self {
        Qi::int(n)
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Qi::ratio(num, den)
    }
    fn from_rational(re: &BigRational, im: &BigRational) -> Self {
        Qi { re: re.clone(), im: im.clone() }
    }
    fn imag_unit() -> Self {
        Qi { re: BigRational::zero(), im: BigRational::one() }
    }
    fn add_ref(&self, o: &Self) -> Self {
        Qi { re: &self.re + &o.re, im: &self.im + &o.im }
    }
    fn sub_ref(&self, o: &Self) -> Self {
        Qi { re: &self.re - &o.re, im: &self.im - &o.im }
    }
    fn mul_ref(&self, o: &Self) -> Self {
        match (self.im.is_zero(), o.im.is_zero()) {
            (true, true) => Qi::real(&self.re * &o.re),
            (true, false) => Qi { re: &self.re * &o.re, im: &self.re * &o.im },
            (false, true) => Qi { re: &self.re * &o.re, im: &self.im * &o.re },
            (false, false) => Qi {
                re: &self.re * &o.re - &self.im * &o.im,
                im: &self.re * &o.im + &self.im * &o.re,
            },
        }
    }
    fn neg_ref(&self) -> Self {
        Qi { re: -self.re.clone(), im: -self.im.clone() }
    }
    fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        if self.im.is_zero() {
            return Some(Qi::real(self.re.recip()));
        }
        let n = self.norm_sqr();
        Some(Qi { re: &self.re / &n, im: -(&self.im / &n) })
    }
    fn add_assign_ref(&mut self, o: &Self) {
        if !o.re.is_zero() {
            self.re += &o.re;
        }
        if !o.im.is_zero() {
            self.im += &o.im;
        }
    }
    fn mul_add_assign(&mut self, a: &Self, b: &Self) {
        if a.im.is_zero() && b.im.is_zero() {
            self.re += &a.re * &b.re;
        } else {
            let p = a.mul_ref(b);
            self.add_assign_ref(&p);
        }
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(rat_to_f64(&self.re), rat_to_f64(&self.im))
    }
    fn from_c64(_z: Complex64) -> Option<Self> {
        None
    }
    fn re_sign(&self, _margin: f64) -> Option<Ordering> {
        Some(self.re.cmp(&BigRational::zero()))
    }
    fn cmp_abs_one(&self, _margin: f64) -> Option<Ordering> {
        Some(self.norm_sqr().cmp(&BigRational::one()))
    }
    fn nth_root(&self, n: u32) -> Option<Self> {
        let roots = self.nth_roots(n);
        if roots.is_empty() {
            return None;
        }
        let target = self.to_c64().powf(1.0 / n as f64);
        roots.into_iter().min_by(|a, b| {
            let da = (a.to_c64() - target).norm();
            let db = (b.to_c64() - target).norm();
            da.partial_cmp(&db).unwrap_or(Ordering::Equal)
        })
    }
    fn nth_roots(&self, n: u32) -> Vec<Self> {
        if n == 0 {
            return vec![];
        }
        if self.is_zero() {
            return vec![Qi::zero()];
        }
        let mut out: Vec<Qi> = Vec::new();
        let z = self.to_c64();
        let r = z.norm().powf(1.0 / n as f64);
        let th = z.arg();
        for k in 0..n {
            let ang = (th + 2.0 * std::f64::consts::PI * k as f64) / n as f64;
            let cand = Complex64::from_polar(r, ang);
            for den in [1i64, 2, 3, 4, 5, 6, 8, 9, 10, 12, 16, 25, 27, 32, 64, 81, 100, 125, 128, 243, 256, 1000] {
                let re = rationalize(cand.re, den * 1000);
                let im = rationalize(cand.im, den * 1000);
                if let (Some(re), Some(im)) = (re, im) {
                    let q = Qi { re, im };
                    if q.pow(n) == *self {
                        if !out.contains(&q) {
                            out.push(q);
                        }
                        break;
                    }
                }
            }
        }
        if self.is_real() && self.re.is_positive() && out.is_empty() {
            if let Some(r) = rational_nth_root(&self.re, n) {
                out.push(Qi::real(r));
            }
        }
        out
    }
    fn json_parts(&self) -> (String, String) {
        (self.re.to_string(), self.im.to_string())
    }
    fn parse_parts(re: &str, im: &str) -> Result<Self, JetError> {
        Ok(Qi { re: parse_rational(re)?, im: parse_rational(im)? })
    }
}

/// Parse `p/q`, an integer, or a terminating decimal into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational, JetError> {
    let t = s.trim();
    if let Ok(r) = BigRational::from_str(t) {
        return Ok(r);
    }
    let (mant, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| JetError::Parse(s.to_string()))?),
        None => (t, 0),
    };
    let neg = mant.starts_with('-');
    let body = mant.trim_start_matches(['-', '+']);
    let (ip, fp) = match body.find('.') {
        Some(i) => (&body[..i], &body[i + 1..]),
        None => (body, ""),
    };
    if ip.is_empty() && fp.is_empty() {
        return Err(JetError::Parse(s.to_string()));
    }
    let digits = format!("{}{}", ip, fp);
    let n = BigInt::from_str(if digits.is_empty() { "0" } else { &digits })
        .map_err(|_| JetError::Parse(s.to_string()))?;
    let scale = exp - fp.len() as i32;
    let ten = BigInt::from(10);
    let mut r = BigRational::from_integer(n);
    if scale >= 0 {
        r *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        r /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if neg { -r } else { r })
}

impl fmt::Display for Qi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else if self.re.is_zero() {
            write!(f, "{}i", self.im)
        } else if self.im.is_negative() {
            write!(f, "{}-{}i", self.re, -self.im.clone())
        } else {
            write!(f, "{}+{}i", self.re, self.im)
        }
    }
}

impl Add for Qi {
    type Output = Qi;
    fn add(self, o: Qi) -> Qi {
        self.add_ref(&o)
    }
}
impl Sub for Qi {
    type Output = Qi;
    fn sub(self, o: Qi) -> Qi {
        self.sub_ref(&o)
    }
}
impl Mul for Qi {
    type Output = Qi;
    fn mul(self, o: Qi) -> Qi {
        self.mul_ref(&o)
    }
}
impl Div for Qi {
    type Output = Qi;
    fn div(self, o: Qi) -> Qi {
        self.div_ref(&o).expect("division by zero")
    }
}
impl Neg for Qi {
    type Output = Qi;
    fn neg(self) -> Qi {
        self.neg_ref()
    }
}

/// Significant bits of the floating field.
pub const FLOAT_BITS: u32 = 53;

impl Coeff for Complex64 {
    const EXACT: bool = false;
    const FIELD: &'static str = "float";

    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn from_i64(n: i64) -> Self {
        Complex64::new(n as f64, 0.0)
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Complex64::new(num as f64 / den as f64, 0.0)
    }
    fn from_rational(re: &BigRational, im: &BigRational) -> Self {
        Complex64::new(rat_to_f64(re), rat_to_f64(im))
    }
    fn imag_unit() -> Self {
        Complex64::new(0.0, 1.0)
    }
    fn add_ref(&self, o: &Self) -> Self {
        self + o
    }
    fn sub_ref(&self, o: &Self) -> Self {
        self - o
    }
    fn mul_ref(&self, o: &Self) -> Self {
        self * o
    }
    fn neg_ref(&self) -> Self {
        -self
    }
    fn inv(&self) -> Option<Self> {
        if Coeff::is_zero(self) {
            None
        } else {
            Some(Complex64::new(1.0, 0.0) / self)
        }
    }
    fn add_assign_ref(&mut self, o: &Self) {
        *self += o;
    }
    fn mul_add_assign(&mut self, a: &Self, b: &Self) {
        *self += a * b;
    }
    fn to_c64(&self) -> Complex64 {
        *self
    }
    fn from_c64(z: Complex64) -> Option<Self> {
        Some(z)
    }
    fn re_sign(&self, margin: f64) -> Option<Ordering> {
        if self.re > margin {
            Some(Ordering::Greater)
        } else if self.re < -margin {
            Some(Ordering::Less)
        } else if self.re == 0.0 && margin <= 0.0 {
            Some(Ordering::Equal)
        } else {
            None
        }
    }
    fn cmp_abs_one(&self, margin: f64) -> Option<Ordering> {
        let a = self.norm();
        if a > 1.0 + margin {
            Some(Ordering::Greater)
        } else if a < 1.0 - margin {
            Some(Ordering::Less)
        } else {
            None
        }
    }
    fn nth_root(&self, n: u32) -> Option<Self> {
        if n == 0 {
            return None;
        }
        Some(self.powf(1.0 / n as f64))
    }
    fn nth_roots(&self, n: u32) -> Vec<Self> {
        if n == 0 {
            return vec![];
        }
        let r = self.norm().powf(1.0 / n as f64);
        let th = self.arg();
        (0..n)
            .map(|k| Complex64::from_polar(r, (th + 2.0 * std::f64::consts::PI * k as f64) / n as f64))
            .collect()
    }
    fn json_parts(&self) -> (String, String) {
        (fmt_float(self.re), fmt_float(self.im))
    }
    fn parse_parts(re: &str, im: &str) -> Result<Self, JetError> {
        Ok(Complex64::new(parse_float(re)?, parse_float(im)?))
    }
}

/// Fixed-precision decimal rendering used for every float in serialized output.
pub fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    format!("{:.16e}", x)
}

pub fn parse_float(s: &str) -> Result<f64, JetError> {
    let t = s.trim();
    if let Ok(v) = t.parse::<f64>() {
        return Ok(v);
    }
    parse_rational(t).map(|r| rat_to_f64(&r))
}

/// Convert exact coefficients to floats.
pub fn qi_to_c64(q: &Qi) -> Complex64 {
    q.to_c64()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_arithmetic() {
        let a = Qi::complex((1, 2), (3, 1));
        let b = Qi::complex((-2, 1), (1, 4));
        let p = a.mul_ref(&b);
        let back = p.div_ref(&b).unwrap();
        assert_eq!(back, a);
        assert_eq!(Qi::imag_unit().pow(2), Qi::int(-1));
        assert!(Qi::zero().inv().is_none());
    }

    #[test]
    fn exact_roots() {
        assert_eq!(Qi::int(4).nth_root(2), Some(Qi::int(2)));
        assert_eq!(Qi::ratio(8, 27).nth_root(3), Some(Qi::ratio(2, 3)));
        assert!(Qi::int(2).nth_root(2).is_none());
        let roots = Qi::int(1).nth_roots(4);
        assert_eq!(roots.len(), 4);
        assert!(roots.contains(&Qi::imag_unit()));
        assert_eq!(Qi::int(-4).nth_root(2), Some(Qi::complex((0, 1), (2, 1))));
    }

    #[test]
    fn decimal_parsing() {
        assert_eq!(parse_rational("0.25").unwrap(), BigRational::new(1.into(), 4.into()));
        assert_eq!(parse_rational("-3/6").unwrap(), BigRational::new((-1).into(), 2.into()));
        assert_eq!(parse_rational("1.5e2").unwrap(), BigRational::from_integer(150.into()));
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn float_roundtrip() {
        let z = Complex64::new(0.1, -2.5e-7);
        let (r, i) = z.json_parts();
        assert_eq!(Complex64::parse_parts(&r, &i).unwrap(), z);
    }

    #[test]
    fn continued_fraction() {
        assert_eq!(rationalize(0.75, 100).unwrap(), BigRational::new(3.into(), 4.into()));
        assert_eq!(rationalize(-1.0 / 3.0, 100).unwrap(), BigRational::new((-1).into(), 3.into()));
    }
}
