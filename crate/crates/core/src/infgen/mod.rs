//! Resonance lattices, embeddability index and infinitesimal generators.

pub mod lattice;

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::dynamics::{exp_flow, log_unipotent, DiffeoJet, DynError, VectorField};
use crate::jets::{parse_rational, Coeff, Jet, Mat};

use lattice::{abs_det, coordinates, factor, hermite_basis, integer_kernel, IVec};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InfgenError {
    #[error(transparent)]
    Dyn(#[from] DynError),
    #[error("invalid spectrum: {0}")]
    Spectrum(String),
    #[error("supplied m = {got} but the embeddability index is {expected}")]
    IndexMismatch { expected: u64, got: u32 },
    #[error("linear part of F^m is not unipotent; the generator needs the float field")]
    NeedsFloat,
    #[error("no logarithm branch annihilated by the saturated lattice")]
    NoBranch,
    #[error("[Y, Z] does not vanish (max coefficient {0:e})")]
    Commutator(f64),
    #[error("generator residual {0:e} exceeds tolerance")]
    Residual(f64),
    #[error("eigenvalue {0} of D0F^m is a root of unity different from 1")]
    RootOfUnity(usize),
}

/// `λ = modulus · e^{2πi·angle}` with exact rational data.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PolarEigenvalue {
    pub modulus: BigRational,
    /// Reduced to `[0, 1)`.
    pub angle: BigRational,
}

impl PolarEigenvalue {
    pub fn new(modulus: BigRational, angle: BigRational) -> Result<Self, InfgenError> {
        if !modulus.is_positive() {
            return Err(InfgenError::Spectrum("modulus must be positive".into()));
        }
        let a = &angle - angle.floor();
        Ok(PolarEigenvalue { modulus, angle: a })
    }
    pub fn from_ints(num: i64, den: i64, an: i64, ad: i64) -> Self {
        Self::new(BigRational::new(num.into(), den.into()), BigRational::new(an.into(), ad.into())).expect("positive")
    }
    pub fn to_c64(&self) -> Complex64 {
        let r = self.modulus.to_f64().unwrap_or(f64::NAN);
        let a = self.angle.to_f64().unwrap_or(f64::NAN);
        Complex64::from_polar(r, 2.0 * PI * a)
    }
    pub fn from_json(v: &Value) -> Result<Self, InfgenError> {
        let get = |k: &str| -> Result<BigRational, InfgenError> {
            let s = match v.get(k) {
                Some(Value::String(s)) => s.clone(),
                Some(Value::Number(n)) => n.to_string(),
                None if k == "angle" => "0".into(),
                _ => return Err(InfgenError::Spectrum(format!("missing field {k}"))),
            };
            parse_rational(&s).map_err(|e| InfgenError::Spectrum(e.to_string()))
        };
        Self::new(get("modulus")?, get("angle")?)
    }
    pub fn to_json(&self) -> Value {
        json!({"modulus": self.modulus.to_string(), "angle": self.angle.to_string()})
    }
}

/// Vector-field eigenvalue `a + 2πi·b`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct VfEigenvalue {
    pub a: BigRational,
    pub b: BigRational,
}

impl VfEigenvalue {
    pub fn from_ints(a: (i64, i64), b: (i64, i64)) -> Self {
        VfEigenvalue { a: BigRational::new(a.0.into(), a.1.into()), b: BigRational::new(b.0.into(), b.1.into()) }
    }
    pub fn from_json(v: &Value) -> Result<Self, InfgenError> {
        let get = |k: &str| -> Result<BigRational, InfgenError> {
            let s = match v.get(k) {
                Some(Value::String(s)) => s.clone(),
                Some(Value::Number(n)) => n.to_string(),
                None => "0".into(),
                _ => return Err(InfgenError::Spectrum(format!("bad field {k}"))),
            };
            parse_rational(&s).map_err(|e| InfgenError::Spectrum(e.to_string()))
        };
        Ok(VfEigenvalue { a: get("a")?, b: get("b")? })
    }
}

pub fn parse_spectrum(v: &Value) -> Result<Vec<PolarEigenvalue>, InfgenError> {
    v.as_array()
        .ok_or_else(|| InfgenError::Spectrum("expected an array".into()))?
        .iter()
        .map(PolarEigenvalue::from_json)
        .collect()
}

#[derive(Clone, PartialEq, Debug)]
pub struct ResonanceLattices {
    /// Hermite basis of `{m : Π λ_j^{m_j} = 1}`.
    pub s_lambda: Vec<IVec>,
    /// Hermite basis of `{m : Π |λ_j|^{m_j} = 1}`.
    pub s_prime: Vec<IVec>,
    pub index: u64,
}

impl ResonanceLattices {
    pub fn to_json(&self) -> Value {
        let f = |b: &[IVec]| -> Vec<Vec<String>> { b.iter().map(|v| v.iter().map(|x| x.to_string()).collect()).collect() };
        json!({"S_lambda": f(&self.s_lambda), "S_lambda_prime": f(&self.s_prime), "index": self.index})
    }
}

fn prime_exponent_rows(spec: &[PolarEigenvalue]) -> Result<Vec<IVec>, InfgenError> {
    let n = spec.len();
    let mut primes: Vec<u64> = Vec::new();
    let mut fact: Vec<Vec<(u64, i64)>> = Vec::with_capacity(n);
    for l in spec {
        let num = factor(l.modulus.numer()).ok_or_else(|| InfgenError::Spectrum("modulus too large to factor".into()))?;
        let den = factor(l.modulus.denom()).ok_or_else(|| InfgenError::Spectrum("modulus too large to factor".into()))?;
        let mut f = num;
        f.extend(den.into_iter().map(|(p, e)| (p, -e)));
        for (p, _) in &f {
            if !primes.contains(p) {
                primes.push(*p);
            }
        }
        fact.push(f);
    }
    primes.sort_unstable();
    Ok(primes
        .iter()
        .map(|p| {
            fact.iter()
                .map(|f| BigInt::from(f.iter().filter(|(q, _)| q == p).map(|(_, e)| *e).sum::<i64>()))
                .collect()
        })
        .collect())
}

fn dot_angle(v: &IVec, spec: &[PolarEigenvalue]) -> BigRational {
    v.iter()
        .zip(spec)
        .map(|(m, l)| BigRational::from_integer(m.clone()) * &l.angle)
        .fold(BigRational::zero(), |a, b| a + b)
}

/// Resonance lattice, its saturation, and the index `m(F) = |S′_λ : S_λ|`.
pub fn resonance_lattices(spec: &[PolarEigenvalue]) -> Result<ResonanceLattices, InfgenError> {
    let n = spec.len();
    if n == 0 {
        return Err(InfgenError::Spectrum("empty spectrum".into()));
    }
    let v = prime_exponent_rows(spec)?;
    let s_prime = hermite_basis(&integer_kernel(&v, n), n);
    let k = s_prime.len();
    if k == 0 {
        return Ok(ResonanceLattices { s_lambda: vec![], s_prime, index: 1 });
    }
    let t: Vec<BigRational> = s_prime.iter().map(|b| dot_angle(b, spec)).collect();
    let l = t.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let c: Vec<BigInt> = t.iter().map(|x| (x * BigRational::from_integer(l.clone())).to_integer().mod_floor(&l)).collect();
    let g = c.iter().fold(l.clone(), |acc, x| acc.gcd(x));
    let index = (&l / &g).to_u64().ok_or_else(|| InfgenError::Spectrum("index overflow".into()))?;
    let mut row: IVec = c.clone();
    row.push(-l.clone());
    let ker = integer_kernel(&[row], k + 1);
    let s_vecs: Vec<IVec> = ker
        .iter()
        .map(|kv| {
            (0..n)
                .map(|j| (0..k).map(|i| &kv[i] * &s_prime[i][j]).fold(BigInt::zero(), |a, b| a + b))
                .collect()
        })
        .collect();
    let s_lambda = hermite_basis(&s_vecs, n);
    // the index must also be the covolume ratio inside S′
    let coords: Vec<IVec> = s_lambda
        .iter()
        .map(|v| coordinates(&s_prime, v).expect("S ⊆ S′").into_iter().map(|c| c.to_integer()).collect())
        .collect();
    debug_assert_eq!(abs_det(&coords), BigInt::from(index));
    Ok(ResonanceLattices { s_lambda, s_prime, index })
}

/// Weak-resonance verdict with a witness when resonant.
#[derive(Clone, PartialEq, Debug)]
pub struct WeakResonance {
    pub resonant: bool,
    pub witness: Option<IVec>,
}

/// Some integer combination of the eigenvalues lies in `2πi·Q^*`.
pub fn is_weakly_resonant(spec: &[VfEigenvalue]) -> WeakResonance {
    let n = spec.len();
    let den = spec.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.a.denom()));
    let row: IVec = spec.iter().map(|v| (&v.a * BigRational::from_integer(den.clone())).to_integer()).collect();
    let ker = integer_kernel(&[row], n);
    for w in ker {
        let s = w
            .iter()
            .zip(spec)
            .map(|(m, v)| BigRational::from_integer(m.clone()) * &v.b)
            .fold(BigRational::zero(), |a, b| a + b);
        if !s.is_zero() {
            return WeakResonance { resonant: true, witness: Some(w) };
        }
    }
    WeakResonance { resonant: false, witness: None }
}

/// An infinitesimal generator of `F^m` and its pieces.
#[derive(Clone, Debug)]
pub struct Generator<K: Coeff> {
    pub field: VectorField<K>,
    /// Linear part `M` with `exp(M) = D0F^m`.
    pub linear_log: Mat<K>,
    /// `Z = log(F^m ∘ Exp(-Y))`.
    pub unipotent_log: VectorField<K>,
    pub m: u32,
    /// Branch integers `k_j` in `log λ_j^m = m log|λ_j| + 2πi(θ_j + k_j)`.
    pub branch: Vec<i64>,
    pub residual: f64,
}

fn is_unipotent<K: Coeff>(a: &Mat<K>) -> bool {
    let n = a.rows();
    let d = a.sub(&Mat::identity(n)).pow(n as u32);
    if K::EXACT {
        d.is_zero()
    } else {
        d.max_abs() <= 1e-10
    }
}

fn nilpotent_log<K: Coeff>(n_mat: &Mat<K>) -> Mat<K> {
    let d = n_mat.rows();
    let mut acc = Mat::zeros(d, d);
    let mut p = Mat::identity(d);
    for k in 1..=d {
        p = p.mul(n_mat);
        let mut w = K::from_i64(k as i64).inv().expect("nonzero");
        if k % 2 == 0 {
            w = w.neg_ref();
        }
        acc = acc.add(&p.scale(&w));
    }
    acc
}

/// Minimal-L1 integer branch vector annihilated by every vector of `S′_λ`.
fn choose_branch(theta: &[BigRational], s_prime: &[IVec]) -> Option<Vec<i64>> {
    let n = theta.len();
    let targets: Vec<BigRational> = s_prime.iter().map(|b| -dotq(b, theta)).collect();
    for radius in [2i64, 4, 6] {
        let mut best: Option<Vec<i64>> = None;
        let mut k = vec![-radius; n];
        loop {
            let ok = s_prime.iter().zip(&targets).all(|(b, t)| {
                let s: BigInt = b.iter().zip(&k).map(|(x, y)| x * BigInt::from(*y)).sum();
                BigRational::from_integer(s) == *t
            });
            if ok {
                let better = match &best {
                    None => true,
                    Some(b) => {
                        let l1 = |v: &[i64]| v.iter().map(|x| x.abs()).sum::<i64>();
                        (l1(&k), &k) < (l1(b), b)
                    }
                };
                if better {
                    best = Some(k.clone());
                }
            }
            let mut i = 0;
            while i < n {
                k[i] += 1;
                if k[i] <= radius {
                    break;
                }
                k[i] = -radius;
                i += 1;
            }
            if i == n {
                break;
            }
        }
        if best.is_some() {
            return best;
        }
    }
    None
}

fn dotq(b: &IVec, x: &[BigRational]) -> BigRational {
    b.iter()
        .zip(x)
        .map(|(m, v)| BigRational::from_integer(m.clone()) * v)
        .fold(BigRational::zero(), |a, c| a + c)
}

/// Principal representative of `m·angle` in `(-1/2, 1/2]`.
fn principal_angle(m: u32, angle: &BigRational) -> BigRational {
    let t = angle * BigRational::from_integer(BigInt::from(m));
    let half = BigRational::new(1.into(), 2.into());
    let mut r = &t - t.floor();
    if r > half {
        r -= BigRational::one();
    }
    r
}

fn linear_field<K: Coeff>(m: &Mat<K>, order: u32) -> VectorField<K> {
    let n = m.rows();
    VectorField::new(
        (0..n)
            .map(|i| Jet::from_terms(n, order, (0..n).map(|j| (lattice_unit(n, j), m.get(i, j).clone()))))
            .collect(),
    )
    .expect("linear")
}

fn lattice_unit(n: usize, j: usize) -> Vec<u16> {
    (0..n).map(|i| u16::from(i == j)).collect()
}

/// Logarithm of `a` in the algebraic hull, with the branch fixed by `logs` per spectrum entry.
fn structured_log(a: &Mat<Complex64>, lambda_m: &[Complex64], logs: &[Complex64]) -> Result<Mat<Complex64>, InfgenError> {
    let n = a.rows();
    let ev = a.eigenvalues().expect("float eigenvalues");
    let mut cols: Vec<Vec<Complex64>> = Vec::new();
    let mut blocks: Vec<Mat<Complex64>> = Vec::new();
    for (mu, mult) in ev {
        let idx = lambda_m
            .iter()
            .enumerate()
            .min_by(|x, y| (x.1 - mu).norm().partial_cmp(&(y.1 - mu).norm()).unwrap())
            .map(|(i, _)| i)
            .ok_or(InfgenError::NoBranch)?;
        if (lambda_m[idx] - mu).norm() > 1e-6 * (1.0 + mu.norm()) {
            return Err(InfgenError::Spectrum(format!("eigenvalue {mu} of D0F^m does not match the supplied spectrum")));
        }
        let basis = a.generalized_eigenspace(&mu);
        if basis.len() != mult {
            return Err(InfgenError::Spectrum("generalized eigenspace dimension mismatch".into()));
        }
        let d = basis.len();
        cols.extend(basis);
        blocks.push(Mat::from_fn(d, d, |i, j| if i == j { logs[idx] } else { Complex64::new(0.0, 0.0) }));
    }
    let q = Mat::from_fn(n, n, |i, j| cols[j][i]);
    let qinv = q.inverse().ok_or_else(|| InfgenError::Spectrum("eigenbasis is singular".into()))?;
    let b = qinv.mul(a).mul(&q);
    let mut logb = Mat::zeros(n, n);
    let mut off = 0;
    for blk in blocks {
        let d = blk.rows();
        let bb = b.block(off, off + d, off, off + d);
        let mu = bb.trace() / Complex64::new(d as f64, 0.0);
        let nmat = bb.scale(&(Complex64::new(1.0, 0.0) / mu)).sub(&Mat::identity(d));
        logb.set_block(off, off, &blk.add(&nilpotent_log(&nmat)));
        off += d;
    }
    Ok(q.mul(&logb).mul(&qinv))
}

/// Vector field `X` with `Exp(X) = F^m`, built from a linear log `Y` and `Z = log(F^m∘Exp(-Y))`.
pub fn infinitesimal_generator<K: Coeff>(
    f: &DiffeoJet<K>,
    spec: &[PolarEigenvalue],
    m: u32,
) -> Result<Generator<K>, InfgenError> {
    let n = f.dim();
    if spec.len() != n {
        return Err(InfgenError::Spectrum(format!("expected {n} eigenvalues, got {}", spec.len())));
    }
    let lat = resonance_lattices(spec)?;
    if lat.index != m as u64 {
        return Err(InfgenError::IndexMismatch { expected: lat.index, got: m });
    }
    for (j, l) in spec.iter().enumerate() {
        if l.modulus.is_one() && !(&l.angle * BigRational::from_integer(BigInt::from(m))).is_integer() {
            return Err(InfgenError::RootOfUnity(j));
        }
    }
    let order = f.order();
    let g = f.power(m);
    let a = g.linear_part();
    if is_unipotent(&a) {
        let z = log_unipotent(&g)?;
        let back = exp_flow(&z, &K::one(), order)?;
        let residual = back.distance(&g);
        return Ok(Generator {
            linear_log: z.linear_part(),
            field: z.clone(),
            unipotent_log: z,
            m,
            branch: vec![0; n],
            residual,
        });
    }
    if K::EXACT {
        return Err(InfgenError::NeedsFloat);
    }
    let theta: Vec<BigRational> = spec.iter().map(|l| principal_angle(m, &l.angle)).collect();
    let branch = choose_branch(&theta, &lat.s_prime).ok_or(InfgenError::NoBranch)?;
    let logs: Vec<Complex64> = spec
        .iter()
        .zip(&theta)
        .zip(&branch)
        .map(|((l, t), k)| {
            let re = m as f64 * l.modulus.to_f64().unwrap().ln();
            Complex64::new(re, 2.0 * PI * (t.to_f64().unwrap() + *k as f64))
        })
        .collect();
    let lambda_m: Vec<Complex64> = spec.iter().map(|l| l.to_c64().powu(m)).collect();
    let af = a.to_float();
    let mf = structured_log(&af, &lambda_m, &logs)?;
    let mk: Mat<K> = Mat::from_fn(n, n, |i, j| K::from_c64(*mf.get(i, j)).expect("float field"));
    let y = linear_field(&mk, order);
    let e = mf.neg().to_nalgebra().exp();
    let lin_inv: Vec<Jet<K>> = (0..n)
        .map(|i| Jet::from_terms(n, order, (0..n).map(|j| (lattice_unit(n, j), K::from_c64(e[(i, j)]).unwrap()))))
        .collect();
    let lin_inv = DiffeoJet::new(lin_inv)?;
    let unip = g.compose(&lin_inv);
    let z = log_unipotent(&unip)?;
    let br = y.bracket(&z);
    let comm = br.components().iter().map(|c| c.max_abs()).fold(0.0, f64::max);
    let scale = 1.0 + z.components().iter().map(|c| c.max_abs()).fold(0.0, f64::max);
    if comm > 1e-8 * scale {
        return Err(InfgenError::Commutator(comm));
    }
    let x = y.add(&z);
    let back = exp_flow(&x, &K::one(), order)?;
    let residual = back.distance(&g);
    if residual > 1e-8 {
        return Err(InfgenError::Residual(residual));
    }
    Ok(Generator { field: x, linear_log: mk, unipotent_log: z, m, branch, residual })
}

#[cfg(test)]
mod tests {
    use super::lattice::ivec;
    use super::*;
    use crate::jets::Qi;

    #[test]
    fn no_resonance() {
        let r = resonance_lattices(&[PolarEigenvalue::from_ints(2, 1, 0, 1), PolarEigenvalue::from_ints(3, 1, 0, 1)]).unwrap();
        assert!(r.s_lambda.is_empty() && r.s_prime.is_empty());
        assert_eq!(r.index, 1);
    }

    #[test]
    fn minus_one() {
        let r = resonance_lattices(&[PolarEigenvalue::from_ints(1, 1, 1, 2)]).unwrap();
        assert_eq!(r.s_lambda, vec![ivec(&[2])]);
        assert_eq!(r.s_prime, vec![ivec(&[1])]);
        assert_eq!(r.index, 2);
    }

    #[test]
    fn ones() {
        let one = PolarEigenvalue::from_ints(1, 1, 0, 1);
        let r = resonance_lattices(&[one.clone(), one]).unwrap();
        assert_eq!(r.s_lambda.len(), 2);
        assert_eq!(r.index, 1);
    }

    #[test]
    fn weak_resonance_examples() {
        let w = is_weakly_resonant(&[VfEigenvalue::from_ints((0, 1), (1, 1))]);
        assert!(w.resonant);
        assert_eq!(w.witness.unwrap().iter().map(|x| x.abs()).collect::<Vec<_>>(), ivec(&[1]));
        assert!(!is_weakly_resonant(&[VfEigenvalue::from_ints((1, 1), (0, 1)), VfEigenvalue::from_ints((-1, 1), (0, 1))]).resonant);
        assert!(!is_weakly_resonant(&vec![VfEigenvalue::from_ints((0, 1), (0, 1)); 3]).resonant);
    }

    fn j(n: usize, order: u32, t: &[(&[u16], i64)]) -> Jet<Qi> {
        Jet::from_terms(n, order, t.iter().map(|(e, c)| (e.to_vec(), Qi::int(*c))))
    }

    #[test]
    fn square_of_involution_like_map() {
        let f = DiffeoJet::new(vec![j(2, 5, &[(&[1, 0], -1), (&[2, 0], 1)]), j(2, 5, &[(&[0, 1], -1)])]).unwrap();
        let half = PolarEigenvalue::from_ints(1, 1, 1, 2);
        let g = infinitesimal_generator(&f, &[half.clone(), half], 2).unwrap();
        let f2 = f.power(2);
        assert_eq!(g.field, log_unipotent(&f2).unwrap());
        assert_eq!(exp_flow(&g.field, &Qi::one(), 5).unwrap(), f2);
    }

    #[test]
    fn hyperbolic_generator_in_float() {
        let f = DiffeoJet::new(vec![j(2, 6, &[(&[1, 0], 2)]), j(2, 6, &[(&[0, 1], 4), (&[2, 0], 1)])]).unwrap();
        let spec = [PolarEigenvalue::from_ints(2, 1, 0, 1), PolarEigenvalue::from_ints(4, 1, 0, 1)];
        assert_eq!(infinitesimal_generator(&f, &spec, 1).unwrap_err(), InfgenError::NeedsFloat);
        let g = infinitesimal_generator(&f.to_float(), &spec, 1).unwrap();
        assert!(g.residual <= 1e-10, "residual {}", g.residual);
        assert!((g.linear_log.get(0, 0).re - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn index_mismatch_rejected() {
        let f = DiffeoJet::new(vec![j(1, 3, &[(&[1], -1)])]).unwrap();
        let e = infinitesimal_generator(&f, &[PolarEigenvalue::from_ints(1, 1, 1, 2)], 1).unwrap_err();
        assert_eq!(e, InfgenError::IndexMismatch { expected: 2, got: 1 });
    }
}
