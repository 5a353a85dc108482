use super::{Coeff, Jet, Mat};

/// Matrix of univariate series, stored as its coefficient matrices `A_0..=A_N`.
#[derive(Clone, PartialEq, Debug)]
pub struct PolyMatrix<K: Coeff> {
    rows: usize,
    cols: usize,
    coeffs: Vec<Mat<K>>,
}

impl<K: Coeff> PolyMatrix<K> {
    pub fn zeros(rows: usize, cols: usize, order: u32) -> Self {
        PolyMatrix { rows, cols, coeffs: vec![Mat::zeros(rows, cols); order as usize + 1] }
    }
    pub fn identity(n: usize, order: u32) -> Self {
        Self::constant(&Mat::identity(n), order)
    }
    pub fn constant(m: &Mat<K>, order: u32) -> Self {
        let mut p = Self::zeros(m.rows(), m.cols(), order);
        p.coeffs[0] = m.clone();
        p
    }
    pub fn from_coeffs(coeffs: Vec<Mat<K>>) -> Self {
        assert!(!coeffs.is_empty());
        let (rows, cols) = (coeffs[0].rows(), coeffs[0].cols());
        PolyMatrix { rows, cols, coeffs }
    }
    pub fn from_entries(rows: usize, cols: usize, order: u32, f: impl Fn(usize, usize) -> Jet<K>) -> Self {
        let mut p = Self::zeros(rows, cols, order);
        for i in 0..rows {
            for j in 0..cols {
                let e = f(i, j);
                for k in 0..=order.min(e.order()) {
                    p.coeffs[k as usize].set(i, j, e.uc(k));
                }
            }
        }
        p
    }
    /// Diagonal matrix from univariate jets.
    pub fn diag(d: &[Jet<K>], order: u32) -> Self {
        let n = d.len();
        Self::from_entries(n, n, order, |i, j| if i == j { d[i].clone() } else { Jet::zero(1, order) })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn order(&self) -> u32 {
        (self.coeffs.len() - 1) as u32
    }
    pub fn coeff(&self, k: u32) -> Mat<K> {
        self.coeffs.get(k as usize).cloned().unwrap_or_else(|| Mat::zeros(self.rows, self.cols))
    }
    pub fn coeffs(&self) -> &[Mat<K>] {
        &self.coeffs
    }
    pub fn set_coeff(&mut self, k: u32, m: Mat<K>) {
        if (k as usize) < self.coeffs.len() {
            self.coeffs[k as usize] = m;
        }
    }
    pub fn entry(&self, i: usize, j: usize) -> Jet<K> {
        Jet::univariate(self.order(), &self.coeffs.iter().map(|m| m.get(i, j).clone()).collect::<Vec<_>>())
    }
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|m| m.is_zero())
    }
    pub fn is_diagonal(&self) -> bool {
        self.coeffs.iter().all(|m| m.is_diagonal())
    }
    /// Lowest power with a nonzero coefficient matrix.
    pub fn valuation(&self) -> Option<u32> {
        self.coeffs.iter().position(|m| !m.is_zero()).map(|k| k as u32)
    }

    pub fn truncate(&self, order: u32) -> Self {
        let n = (order as usize + 1).min(self.coeffs.len());
        PolyMatrix { rows: self.rows, cols: self.cols, coeffs: self.coeffs[..n].to_vec() }
    }
    /// Same data with a larger nominal order; missing coefficients become zero.
    pub fn pad(&self, order: u32) -> Self {
        let mut c = self.coeffs.clone();
        c.resize(order as usize + 1, Mat::zeros(self.rows, self.cols));
        PolyMatrix { rows: self.rows, cols: self.cols, coeffs: c }
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.coeffs.len().min(o.coeffs.len());
        PolyMatrix {
            rows: self.rows,
            cols: self.cols,
            coeffs: (0..n).map(|k| self.coeffs[k].add(&o.coeffs[k])).collect(),
        }
    }
    pub fn sub(&self, o: &Self) -> Self {
        let n = self.coeffs.len().min(o.coeffs.len());
        PolyMatrix {
            rows: self.rows,
            cols: self.cols,
            coeffs: (0..n).map(|k| self.coeffs[k].sub(&o.coeffs[k])).collect(),
        }
    }
    pub fn scale(&self, c: &K) -> Self {
        PolyMatrix { rows: self.rows, cols: self.cols, coeffs: self.coeffs.iter().map(|m| m.scale(c)).collect() }
    }
    pub fn mul(&self, o: &Self) -> Self {
        let n = self.coeffs.len().min(o.coeffs.len());
        let mut out = vec![Mat::zeros(self.rows, o.cols); n];
        for (i, a) in self.coeffs.iter().enumerate().take(n) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate().take(n - i) {
                if !b.is_zero() {
                    out[i + j] = out[i + j].add(&a.mul(b));
                }
            }
        }
        PolyMatrix { rows: self.rows, cols: o.cols, coeffs: out }
    }
    pub fn mul_const_left(&self, m: &Mat<K>) -> Self {
        PolyMatrix { rows: m.rows(), cols: self.cols, coeffs: self.coeffs.iter().map(|c| m.mul(c)).collect() }
    }
    pub fn mul_const_right(&self, m: &Mat<K>) -> Self {
        PolyMatrix { rows: self.rows, cols: m.cols(), coeffs: self.coeffs.iter().map(|c| c.mul(m)).collect() }
    }
    /// Multiply by `x^k`, keeping the nominal order.
    pub fn shift_up(&self, k: u32) -> Self {
        let mut out = Self::zeros(self.rows, self.cols, self.order());
        for (i, c) in self.coeffs.iter().enumerate() {
            if i + (k as usize) < out.coeffs.len() {
                out.coeffs[i + k as usize] = c.clone();
            }
        }
        out
    }
    /// Divide by `x^k`; the lowest `k` coefficients must vanish.
    pub fn shift_down(&self, k: u32) -> Option<Self> {
        let k = k as usize;
        if k > self.coeffs.len() - 1 || self.coeffs[..k].iter().any(|m| !m.is_zero()) {
            return None;
        }
        Some(PolyMatrix { rows: self.rows, cols: self.cols, coeffs: self.coeffs[k..].to_vec() })
    }
    pub fn derive(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zeros(self.rows, self.cols, 0);
        }
        PolyMatrix {
            rows: self.rows,
            cols: self.cols,
            coeffs: (1..self.coeffs.len()).map(|k| self.coeffs[k].scale(&K::from_i64(k as i64))).collect(),
        }
    }
    /// Substitute `x -> x^a`.
    pub fn ramify(&self, a: u32) -> Self {
        let order = self.order() * a;
        let mut out = Self::zeros(self.rows, self.cols, order);
        for (k, c) in self.coeffs.iter().enumerate() {
            out.coeffs[k * a as usize] = c.clone();
        }
        out
    }
    /// Inverse when the constant term is invertible.
    pub fn inverse(&self) -> Option<Self> {
        let a0inv = self.coeffs[0].inverse()?;
        let n = self.coeffs.len();
        let mut out: Vec<Mat<K>> = Vec::with_capacity(n);
        out.push(a0inv.clone());
        for k in 1..n {
            let mut acc = Mat::zeros(self.rows, self.cols);
            for j in 1..=k {
                acc = acc.add(&self.coeffs[j].mul(&out[k - j]));
            }
            out.push(a0inv.mul(&acc).neg());
        }
        Some(PolyMatrix { rows: self.rows, cols: self.cols, coeffs: out })
    }
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Self {
        PolyMatrix {
            rows: r1 - r0,
            cols: c1 - c0,
            coeffs: self.coeffs.iter().map(|m| m.block(r0, r1, c0, c1)).collect(),
        }
    }
    pub fn block_diag(blocks: &[Self]) -> Self {
        let order = blocks.iter().map(|b| b.order()).min().unwrap_or(0);
        let coeffs = (0..=order as usize)
            .map(|k| Mat::block_diag(&blocks.iter().map(|b| b.coeffs[k].clone()).collect::<Vec<_>>()))
            .collect();
        Self::from_coeffs(coeffs)
    }
    pub fn permuted(&self, perm: &[usize]) -> Self {
        PolyMatrix { rows: self.rows, cols: self.cols, coeffs: self.coeffs.iter().map(|m| m.permuted(perm)).collect() }
    }
    pub fn map<L: Coeff>(&self, f: impl Fn(&K) -> L + Copy) -> PolyMatrix<L> {
        PolyMatrix { rows: self.rows, cols: self.cols, coeffs: self.coeffs.iter().map(|m| m.map(f)).collect() }
    }
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|m| m.max_abs()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::{qmat, Qi};

    #[test]
    fn series_inverse() {
        let p = PolyMatrix::from_coeffs(vec![qmat(&[&[1, 0], &[0, 2]]), qmat(&[&[0, 1], &[1, 0]]), qmat(&[&[0, 0], &[0, 0]])]);
        let inv = p.inverse().unwrap();
        assert_eq!(p.mul(&inv), PolyMatrix::identity(2, 2));
    }

    #[test]
    fn entries_roundtrip() {
        let p = PolyMatrix::from_coeffs(vec![qmat(&[&[1]]), qmat(&[&[3]])]);
        assert_eq!(p.entry(0, 0), Jet::univariate(1, &[Qi::int(1), Qi::int(3)]));
        assert_eq!(p.ramify(2).entry(0, 0).uc(2), Qi::int(3));
    }
}
