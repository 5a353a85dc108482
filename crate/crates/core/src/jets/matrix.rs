use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::coeff::rationalize;
use super::{Coeff, Qi};

/// Dense matrix over a coefficient field.
#[derive(Clone, PartialEq)]
pub struct Mat<K> {
    rows: usize,
    cols: usize,
    data: Vec<K>,
}

impl<K: Coeff> Mat<K> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![K::zero(); rows * cols] }
    }
    pub fn identity(n: usize) -> Self {
        Mat::from_fn(n, n, |i, j| if i == j { K::one() } else { K::zero() })
    }
    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> K) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }
    pub fn from_rows(rows: Vec<Vec<K>>) -> Self {
        let r = rows.len();
        let c = rows.first().map(|v| v.len()).unwrap_or(0);
        assert!(rows.iter().all(|v| v.len() == c), "ragged rows");
        Mat { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }
    pub fn diag(d: &[K]) -> Self {
        let n = d.len();
        Mat::from_fn(n, n, |i, j| if i == j { d[i].clone() } else { K::zero() })
    }
    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }
    pub fn get(&self, i: usize, j: usize) -> &K {
        &self.data[i * self.cols + j]
    }
    pub fn set(&mut self, i: usize, j: usize, v: K) {
        self.data[i * self.cols + j] = v;
    }
    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut K {
        &mut self.data[i * self.cols + j]
    }
    pub fn row(&self, i: usize) -> Vec<K> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }
    pub fn col(&self, j: usize) -> Vec<K> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }
    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|c| c.is_zero())
    }
    pub fn is_diagonal(&self) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self.get(i, j).is_zero()))
    }
    pub fn diagonal(&self) -> Vec<K> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i).clone()).collect()
    }

    pub fn add(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols), "shape mismatch");
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(o.data.iter()).map(|(a, b)| a.add_ref(b)).collect(),
        }
    }
    pub fn sub(&self, o: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols), "shape mismatch");
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(o.data.iter()).map(|(a, b)| a.sub_ref(b)).collect(),
        }
    }
    pub fn scale(&self, k: &K) -> Self {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a.mul_ref(k)).collect() }
    }
    pub fn neg(&self) -> Self {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a.neg_ref()).collect() }
    }
    pub fn mul(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.rows, "shape mismatch");
        let mut out: Mat<K> = Mat::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let b = o.get(k, j);
                    if !b.is_zero() {
                        out.get_mut(i, j).mul_add_assign(a, b);
                    }
                }
            }
        }
        out
    }
    pub fn mul_vec(&self, v: &[K]) -> Vec<K> {
        (0..self.rows)
            .map(|i| {
                let mut acc = K::zero();
                for (j, vj) in v.iter().enumerate() {
                    acc.mul_add_assign(self.get(i, j), vj);
                }
                acc
            })
            .collect()
    }
    pub fn transpose(&self) -> Self {
        Mat::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }
    pub fn trace(&self) -> K {
        let mut t = K::zero();
        for i in 0..self.rows.min(self.cols) {
            t.add_assign_ref(self.get(i, i));
        }
        t
    }
    pub fn commutator(&self, o: &Self) -> Self {
        self.mul(o).sub(&o.mul(self))
    }
    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Mat::identity(self.rows);
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }
    pub fn map<L: Coeff>(&self, f: impl Fn(&K) -> L) -> Mat<L> {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }
    pub fn to_float(&self) -> Mat<Complex64> {
        self.map(|c| c.to_c64())
    }
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|c| c.abs()).fold(0.0, f64::max)
    }
    pub fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self.get(i, j).to_c64())
    }
    pub fn from_nalgebra(m: &DMatrix<Complex64>) -> Option<Self> {
        let mut out = Mat::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out.set(i, j, K::from_c64(m[(i, j)])?);
            }
        }
        Some(out)
    }

    /// Sub-block `[r0, r1) × [c0, c1)`.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Self {
        Mat::from_fn(r1 - r0, c1 - c0, |i, j| self.get(r0 + i, c0 + j).clone())
    }
    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Self) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self.set(r0 + i, c0 + j, b.get(i, j).clone());
            }
        }
    }
    /// Block-diagonal assembly.
    pub fn block_diag(blocks: &[Self]) -> Self {
        let n: usize = blocks.iter().map(|b| b.rows).sum();
        let m: usize = blocks.iter().map(|b| b.cols).sum();
        let mut out = Mat::zeros(n, m);
        let (mut r, mut c) = (0, 0);
        for b in blocks {
            out.set_block(r, c, b);
            r += b.rows;
            c += b.cols;
        }
        out
    }
    /// Reorder rows and columns: entry `(i, j)` of the result is `(perm[i], perm[j])`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Mat::from_fn(self.rows, self.cols, |i, j| self.get(perm[i], perm[j]).clone())
    }

    /// Row echelon reduction; returns (reduced matrix, pivot columns).
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut a = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..a.cols {
            if r >= a.rows {
                break;
            }
            let p = if K::EXACT {
                (r..a.rows).find(|&i| !a.get(i, c).is_zero())
            } else {
                let best = (r..a.rows).max_by(|&i, &j| {
                    a.get(i, c).abs().partial_cmp(&a.get(j, c).abs()).unwrap_or(std::cmp::Ordering::Equal)
                });
                best.filter(|&i| a.get(i, c).abs() > 1e-12)
            };
            let Some(p) = p else { continue };
            if p != r {
                for j in 0..a.cols {
                    a.data.swap(p * a.cols + j, r * a.cols + j);
                }
            }
            let inv = a.get(r, c).inv().expect("nonzero pivot");
            for j in 0..a.cols {
                let v = a.get(r, j).mul_ref(&inv);
                a.set(r, j, v);
            }
            for i in 0..a.rows {
                if i == r {
                    continue;
                }
                let f = a.get(i, c).clone();
                if f.is_zero() {
                    continue;
                }
                for j in 0..a.cols {
                    let v = a.get(i, j).sub_ref(&f.mul_ref(a.get(r, j)));
                    a.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        (a, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the right kernel, as column vectors.
    pub fn kernel(&self) -> Vec<Vec<K>> {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![K::zero(); self.cols];
                v[f] = K::one();
                for (row, &pc) in pivots.iter().enumerate() {
                    v[pc] = r.get(row, f).neg_ref();
                }
                v
            })
            .collect()
    }

    pub fn inverse(&self) -> Option<Self> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        let mut aug = Mat::zeros(n, 2 * n);
        aug.set_block(0, 0, self);
        aug.set_block(0, n, &Mat::identity(n));
        let (r, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        Some(r.block(0, n, n, 2 * n))
    }

    /// Solve `self · X = B`.
    pub fn solve(&self, b: &Self) -> Option<Self> {
        if self.is_square() {
            if let Some(inv) = self.inverse() {
                return Some(inv.mul(b));
            }
        }
        let n = self.cols;
        let mut aug = Mat::zeros(self.rows, n + b.cols);
        aug.set_block(0, 0, self);
        aug.set_block(0, n, b);
        let (r, pivots) = aug.rref();
        if pivots.iter().any(|&p| p >= n) {
            return None;
        }
        let mut x = Mat::zeros(n, b.cols);
        for (row, &pc) in pivots.iter().enumerate() {
            for j in 0..b.cols {
                x.set(pc, j, r.get(row, n + j).clone());
            }
        }
        Some(x)
    }

    pub fn det(&self) -> K {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.clone();
        let mut det = K::one();
        for c in 0..n {
            let p = (c..n).find(|&i| !a.get(i, c).is_zero());
            let Some(p) = p else { return K::zero() };
            if p != c {
                for j in 0..n {
                    a.data.swap(p * n + j, c * n + j);
                }
                det = det.neg_ref();
            }
            let piv = a.get(c, c).clone();
            det = det.mul_ref(&piv);
            let inv = piv.inv().expect("nonzero pivot");
            for i in c + 1..n {
                let f = a.get(i, c).mul_ref(&inv);
                if f.is_zero() {
                    continue;
                }
                for j in c..n {
                    let v = a.get(i, j).sub_ref(&f.mul_ref(a.get(c, j)));
                    a.set(i, j, v);
                }
            }
        }
        det
    }

    /// Characteristic polynomial `det(tI - A)`, ascending coefficients.
    pub fn char_poly(&self) -> Vec<K> {
        // Faddeev–LeVerrier
        let n = self.rows;
        let mut c = vec![K::zero(); n + 1];
        c[n] = K::one();
        let mut m = Mat::zeros(n, n);
        for k in 1..=n {
            m = self.mul(&m).add(&Mat::identity(n).scale(&c[n - k + 1]));
            let am = self.mul(&m);
            let inv_k = K::from_i64(k as i64).inv().expect("nonzero");
            c[n - k] = am.trace().mul_ref(&inv_k).neg_ref();
        }
        c
    }

    /// `(A - λI)^k` nilpotent test for a single eigenvalue.
    pub fn is_nilpotent(&self, tol: f64) -> bool {
        let p = self.pow(self.rows as u32);
        if K::EXACT {
            p.is_zero()
        } else {
            p.max_abs() <= tol
        }
    }

    /// Numerical eigenvalues through the complex Schur form.
    pub fn eigenvalues_c64(&self) -> Vec<Complex64> {
        if self.rows == 0 {
            return vec![];
        }
        let m = self.to_nalgebra();
        let schur = nalgebra::Schur::new(m);
        let ev = schur.eigenvalues().expect("complex Schur always triangular");
        ev.iter().cloned().collect()
    }

    /// Eigenvalues with algebraic multiplicities.
    ///
    /// Exact fields return `None` when some eigenvalue is not a Gaussian
    /// rational; float fields cluster nearby values.
    pub fn eigenvalues(&self) -> Option<Vec<(K, usize)>> {
        let n = self.rows;
        if n == 0 {
            return Some(vec![]);
        }
        if K::EXACT {
            let mut poly = self.char_poly();
            let approx = self.eigenvalues_c64();
            let mut out: Vec<(K, usize)> = Vec::new();
            for z in approx.iter() {
                if poly.len() <= 1 {
                    break;
                }
                let cand = exact_candidates::<K>(*z);
                for c in cand {
                    let mut mult = 0;
                    while poly.len() > 1 && poly_eval(&poly, &c).is_zero() {
                        poly = poly_deflate(&poly, &c);
                        mult += 1;
                    }
                    if mult > 0 {
                        if let Some(e) = out.iter_mut().find(|(v, _)| *v == c) {
                            e.1 += mult;
                        } else {
                            out.push((c, mult));
                        }
                        break;
                    }
                }
            }
            if poly.len() > 1 {
                return None;
            }
            Some(out)
        } else {
            let ev = self.eigenvalues_c64();
            let scale = 1.0 + self.max_abs();
            let tol = 1e-6 * scale;
            let mut out: Vec<(Complex64, usize)> = Vec::new();
            for z in ev {
                if let Some(e) = out.iter_mut().find(|(v, _)| (v - z).norm() < tol) {
                    e.1 += 1;
                } else {
                    out.push((z, 1));
                }
            }
            Some(out.into_iter().map(|(z, m)| (K::from_c64(z).expect("float field"), m)).collect())
        }
    }

    /// Generalized eigenspace basis for eigenvalue `ev`.
    pub fn generalized_eigenspace(&self, ev: &K) -> Vec<Vec<K>> {
        let n = self.rows;
        let shifted = self.sub(&Mat::identity(n).scale(ev));
        shifted.pow(n as u32).kernel()
    }
}

/// Gaussian-rational guesses near a float value, for exact verification.
fn exact_candidates<K: Coeff>(z: Complex64) -> Vec<K> {
    let mut out = Vec::new();
    for den in [1i64, 2, 3, 4, 6, 8, 12, 16, 24, 60, 120, 720, 5040, 40320] {
        let re = rationalize(z.re, den);
        let im = rationalize(z.im, den);
        if let (Some(re), Some(im)) = (re, im) {
            let q = K::from_rational(&re, &im);
            if !out.contains(&q) {
                out.push(q);
            }
        }
    }
    for den in [1000i64, 100000, 10000000] {
        if let (Some(re), Some(im)) = (rationalize(z.re, den), rationalize(z.im, den)) {
            let q = K::from_rational(&re, &im);
            if !out.contains(&q) {
                out.push(q);
            }
        }
    }
    out
}

/// Horner evaluation of an ascending-coefficient polynomial.
pub fn poly_eval<K: Coeff>(p: &[K], x: &K) -> K {
    let mut acc = K::zero();
    for c in p.iter().rev() {
        acc = acc.mul_ref(x).add_ref(c);
    }
    acc
}

/// Quotient of `p` by `(t - r)`.
pub fn poly_deflate<K: Coeff>(p: &[K], r: &K) -> Vec<K> {
    let n = p.len() - 1;
    let mut q = vec![K::zero(); n];
    let mut carry = K::zero();
    for k in (0..n).rev() {
        carry = p[k + 1].add_ref(&carry.mul_ref(r));
        q[k] = carry.clone();
    }
    q
}

/// Solve the Sylvester equation `A X - X B = C` by vectorization.
pub fn solve_sylvester<K: Coeff>(a: &Mat<K>, b: &Mat<K>, c: &Mat<K>) -> Option<Mat<K>> {
    let (m, n) = (a.rows(), b.rows());
    let size = m * n;
    let mut sys: Mat<K> = Mat::zeros(size, size);
    let idx = |i: usize, j: usize| i * n + j;
    for i in 0..m {
        for j in 0..n {
            let r = idx(i, j);
            for k in 0..m {
                let v = a.get(i, k);
                if !v.is_zero() {
                    sys.get_mut(r, idx(k, j)).add_assign_ref(v);
                }
            }
            for k in 0..n {
                let v = b.get(k, j);
                if !v.is_zero() {
                    let nv = v.neg_ref();
                    sys.get_mut(r, idx(i, k)).add_assign_ref(&nv);
                }
            }
        }
    }
    let rhs = Mat::from_fn(size, 1, |r, _| c.get(r / n, r % n).clone());
    let inv = sys.inverse()?;
    let x = inv.mul(&rhs);
    Some(Mat::from_fn(m, n, |i, j| x.get(idx(i, j), 0).clone()))
}

impl<K: Coeff> fmt::Debug for Mat<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
        }
        write!(f, "]")
    }
}

/// Exact matrix from small integer rows.
pub fn qmat(rows: &[&[i64]]) -> Mat<Qi> {
    Mat::from_rows(rows.iter().map(|r| r.iter().map(|&v| Qi::int(v)).collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_and_det() {
        let a = qmat(&[&[2, 1], &[1, 1]]);
        let inv = a.inverse().unwrap();
        assert_eq!(a.mul(&inv), Mat::identity(2));
        assert_eq!(a.det(), Qi::int(1));
        assert!(qmat(&[&[1, 2], &[2, 4]]).inverse().is_none());
    }

    #[test]
    fn char_poly_and_eigen() {
        let a = qmat(&[&[2, 1, 0], &[0, 2, 0], &[0, 0, -3]]);
        let cp = a.char_poly();
        assert_eq!(cp, vec![Qi::int(12), Qi::int(-8), Qi::int(-1), Qi::int(1)]);
        let mut ev = a.eigenvalues().unwrap();
        ev.sort_by(|x, y| x.0.re.cmp(&y.0.re));
        assert_eq!(ev, vec![(Qi::int(-3), 1), (Qi::int(2), 2)]);
        assert!(qmat(&[&[0, 1], &[2, 0]]).eigenvalues().is_none());
        let rot = qmat(&[&[0, -1], &[1, 0]]);
        assert_eq!(rot.eigenvalues().unwrap().len(), 2);
    }

    #[test]
    fn kernel_dimension() {
        let a = qmat(&[&[1, 2, 3], &[2, 4, 6]]);
        let k = a.kernel();
        assert_eq!(k.len(), 2);
        for v in k {
            assert!(a.mul_vec(&v).iter().all(|c| c.is_zero()));
        }
    }

    #[test]
    fn sylvester() {
        let a = qmat(&[&[1]]);
        let b = qmat(&[&[-1]]);
        let c = qmat(&[&[4]]);
        let x = solve_sylvester(&a, &b, &c).unwrap();
        assert_eq!(x, qmat(&[&[2]]));
    }
}
