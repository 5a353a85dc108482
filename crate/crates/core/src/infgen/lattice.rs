//! Integer lattices: kernels, Hermite forms and determinants.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type IVec = Vec<BigInt>;

/// Column-style reduction of `a` (rows × n).
///
/// Returns `(h, u)` with `a·u = h`, `u` unimodular and `h` in column echelon form.
pub fn column_echelon(a: &[IVec], n: usize) -> (Vec<IVec>, Vec<IVec>) {
    let mut h: Vec<IVec> = a.to_vec();
    let mut u: Vec<IVec> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect();
    let rows = h.len();
    let mut piv_col = 0;
    for r in 0..rows {
        if piv_col >= n {
            break;
        }
        // gcd-combine columns piv_col.. so that only piv_col is nonzero in row r
        loop {
            let nz: Vec<usize> = (piv_col..n).filter(|&c| !h[r][c].is_zero()).collect();
            if nz.is_empty() {
                break;
            }
            let best = *nz.iter().min_by_key(|&&c| h[r][c].abs()).unwrap();
            swap_cols(&mut h, &mut u, piv_col, best);
            let mut done = true;
            for c in piv_col + 1..n {
                if h[r][c].is_zero() {
                    continue;
                }
                let q = h[r][c].div_floor(&h[r][piv_col]);
                sub_col(&mut h, &mut u, c, piv_col, &q);
                if !h[r][c].is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if !h[r][piv_col].is_zero() {
            if h[r][piv_col].is_negative() {
                neg_col(&mut h, &mut u, piv_col);
            }
            piv_col += 1;
        }
    }
    (h, u)
}

fn swap_cols(h: &mut [IVec], u: &mut [IVec], a: usize, b: usize) {
    if a == b {
        return;
    }
    for row in h.iter_mut().chain(u.iter_mut()) {
        row.swap(a, b);
    }
}

fn sub_col(h: &mut [IVec], u: &mut [IVec], target: usize, src: usize, q: &BigInt) {
    for row in h.iter_mut().chain(u.iter_mut()) {
        let v = &row[src] * q;
        row[target] -= v;
    }
}

fn neg_col(h: &mut [IVec], u: &mut [IVec], c: usize) {
    for row in h.iter_mut().chain(u.iter_mut()) {
        row[c] = -row[c].clone();
    }
}

/// Z-basis of `{m ∈ Z^n : a·m = 0}`.
pub fn integer_kernel(a: &[IVec], n: usize) -> Vec<IVec> {
    if a.is_empty() {
        return (0..n).map(|i| unit(n, i)).collect();
    }
    let (h, u) = column_echelon(a, n);
    (0..n)
        .filter(|&c| h.iter().all(|row| row[c].is_zero()))
        .map(|c| u.iter().map(|row| row[c].clone()).collect())
        .collect()
}

pub fn unit(n: usize, i: usize) -> IVec {
    (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect()
}

/// Row-style Hermite normal form of the lattice spanned by `basis`; zero rows dropped.
pub fn hermite_basis(basis: &[IVec], n: usize) -> Vec<IVec> {
    // transpose, column-reduce, transpose back
    let t: Vec<IVec> = (0..n).map(|j| basis.iter().map(|b| b[j].clone()).collect()).collect();
    let (h, _) = column_echelon(&t, basis.len());
    let mut out: Vec<IVec> = (0..basis.len())
        .map(|c| h.iter().map(|row| row[c].clone()).collect::<IVec>())
        .filter(|v| v.iter().any(|x| !x.is_zero()))
        .collect();
    // reduce entries above pivots
    let pivots: Vec<usize> = out.iter().map(|v| v.iter().position(|x| !x.is_zero()).unwrap()).collect();
    for i in 0..out.len() {
        let p = pivots[i];
        for k in 0..i {
            let q = out[k][p].div_floor(&out[i][p]);
            if !q.is_zero() {
                let row = out[i].clone();
                for (x, y) in out[k].iter_mut().zip(row.iter()) {
                    *x -= &q * y;
                }
            }
        }
    }
    out
}

/// Absolute determinant of a square integer matrix (Bareiss).
pub fn abs_det(m: &[IVec]) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut a: Vec<IVec> = m.to_vec();
    let mut prev = BigInt::one();
    for k in 0..n {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(i, k);
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = a[k][k].clone();
    }
    a[n - 1][n - 1].abs()
}

/// Coordinates of `v` in a lattice basis (exact rational solve); `None` if not in the span.
pub fn coordinates(basis: &[IVec], v: &IVec) -> Option<Vec<BigRational>> {
    use crate::jets::{Mat, Qi};
    let n = v.len();
    let k = basis.len();
    let a: Mat<Qi> = Mat::from_fn(n, k, |i, j| Qi::real(BigRational::from_integer(basis[j][i].clone())));
    let b: Mat<Qi> = Mat::from_fn(n, 1, |i, _| Qi::real(BigRational::from_integer(v[i].clone())));
    let x = a.solve(&b)?;
    if a.mul(&x) != b {
        return None;
    }
    Some((0..k).map(|i| x.get(i, 0).re.clone()).collect())
}

/// Prime factorization of a positive integer by trial division.
pub fn factor(n: &BigInt) -> Option<Vec<(u64, i64)>> {
    let mut m = n.to_u64()?;
    if m == 0 {
        return None;
    }
    let mut out = Vec::new();
    let mut p = 2u64;
    while p.saturating_mul(p) <= m {
        if m % p == 0 {
            let mut e = 0;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if m > 1 {
        out.push((m, 1));
    }
    Some(out)
}

pub fn ivec(v: &[i64]) -> IVec {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_of_single_row() {
        let k = integer_kernel(&[ivec(&[2, 4, -6])], 3);
        assert_eq!(k.len(), 2);
        for v in &k {
            let s: BigInt = v.iter().zip([2, 4, -6]).map(|(x, c)| x * c).sum();
            assert!(s.is_zero());
        }
        assert!(coordinates(&k, &ivec(&[1, 1, 1])).unwrap().iter().all(|c| c.is_integer()));
    }

    #[test]
    fn hermite_and_det() {
        let h = hermite_basis(&[ivec(&[2, 0]), ivec(&[1, 3])], 2);
        assert_eq!(abs_det(&h), BigInt::from(6));
        assert_eq!(abs_det(&[ivec(&[1, 2]), ivec(&[3, 4])]), BigInt::from(2));
    }

    #[test]
    fn factorization() {
        assert_eq!(factor(&BigInt::from(360)).unwrap(), vec![(2, 3), (3, 2), (5, 1)]);
        assert_eq!(factor(&BigInt::from(1)).unwrap(), vec![]);
    }
}
