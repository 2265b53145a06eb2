//! Row-major dense matrices and an LU factorization with partial pivoting.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DMat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_slice(rows: usize, cols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data length");
        Self {
            rows,
            cols,
            data: data.to_vec(),
        }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn diagonal_from(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
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

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn add_diagonal(&mut self, c: f64) {
        for i in 0..self.rows.min(self.cols) {
            self[(i, i)] += c;
        }
    }

    pub fn scale(&mut self, c: f64) {
        self.data.iter_mut().for_each(|v| *v *= c);
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Copy of the `r × c` block starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, r: usize, c: usize) -> Self {
        Self::from_fn(r, c, |i, j| self[(r0 + i, c0 + j)])
    }

    /// True when every off-diagonal entry is at least `-tol`.
    pub fn is_metzler(&self, tol: f64) -> bool {
        (0..self.rows).all(|i| {
            self.row(i)
                .iter()
                .enumerate()
                .all(|(j, &v)| i == j || v >= -tol)
        })
    }

    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(out.len(), self.rows);
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.mul_vec_into(x, &mut out);
        out
    }

    pub fn matmul(&self, other: &DMat) -> DMat {
        assert_eq!(self.cols, other.rows, "inner dimensions");
        let mut out = DMat::zeros(self.rows, other.cols);
        // SAFETY: all three buffers are dense row-major with the strides given,
        // and `out` does not alias the inputs.
        unsafe {
            matrixmultiply::dgemm(
                self.rows,
                self.cols,
                other.cols,
                1.0,
                self.data.as_ptr(),
                self.cols as isize,
                1,
                other.data.as_ptr(),
                other.cols as isize,
                1,
                0.0,
                out.data.as_mut_ptr(),
                out.cols as isize,
                1,
            );
        }
        out
    }

    pub fn sub(&self, other: &DMat) -> DMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        DMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> DMat {
        DMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

impl Index<(usize, usize)> for DMat {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// `PA = LU` with row interchanges.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: DMat,
    perm: Vec<usize>,
    /// Pivots that were exactly zero and replaced by `pivot_floor`.
    pub replaced_pivots: usize,
}

impl Lu {
    /// Factors a square matrix; fails on an exactly singular pivot.
    pub fn factor(a: &DMat) -> Result<Self> {
        let lu = Self::factor_with_floor(a, 0.0)?;
        if lu.replaced_pivots > 0 {
            return Err(Error::InvalidParameters("singular matrix in LU".into()));
        }
        Ok(lu)
    }

    /// Factors `a`, substituting `floor` for pivots that vanish. Used by
    /// inverse iteration, where an (almost) singular shift is the point.
    pub fn factor_with_floor(a: &DMat, floor: f64) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension(format!(
                "LU of a {}x{} matrix",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut replaced = 0;
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |acc, c| if c.1 > acc.1 { c } else { acc });
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            if pmax == 0.0 {
                if floor == 0.0 {
                    replaced += 1;
                    continue;
                }
                lu[(k, k)] = floor;
                replaced += 1;
            }
            let pivot = lu[(k, k)];
            let (head, tail) = lu.data.split_at_mut((k + 1) * n);
            let krow = &head[k * n..(k + 1) * n];
            for row in tail.chunks_mut(n) {
                let factor = row[k] / pivot;
                row[k] = factor;
                if factor != 0.0 {
                    for j in k + 1..n {
                        row[j] -= factor * krow[j];
                    }
                }
            }
        }
        Ok(Self {
            lu,
            perm,
            replaced_pivots: replaced,
        })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let s: f64 = row[..i].iter().zip(&x[..i]).map(|(a, b)| a * b).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let s: f64 = row[i + 1..].iter().zip(&x[i + 1..]).map(|(a, b)| a * b).sum();
            x[i] = (x[i] - s) / row[i];
        }
        x
    }

    pub fn inverse(&self) -> DMat {
        let n = self.dim();
        let mut inv = DMat::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv
    }
}

/// Infinity-norm condition number computed from an explicit inverse; meant
/// for the small blocks where that is cheap.
pub fn condition_inf(a: &DMat) -> f64 {
    match Lu::factor(a) {
        Ok(lu) => a.norm_inf() * lu.inverse().norm_inf(),
        Err(_) => f64::INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_with_pivoting() {
        let a = DMat::from_rows(&[[0.0, 2.0, 1.0], [1.0, 1.0, 0.0], [3.0, 0.0, 1.0]]);
        let x_true = [1.0, -2.0, 0.5];
        let b = a.mul_vec(&x_true);
        let x = Lu::factor(&a).unwrap().solve(&b);
        for (u, v) in x.iter().zip(x_true) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = DMat::from_rows(&[[1.0, 2.0], [2.0, 4.0]]);
        assert!(Lu::factor(&a).is_err());
        let lu = Lu::factor_with_floor(&a, 1e-300).unwrap();
        assert_eq!(lu.replaced_pivots, 1);
    }

    #[test]
    fn inverse_and_condition() {
        let a = DMat::from_rows(&[[4.0, 1.0], [2.0, 3.0]]);
        let inv = Lu::factor(&a).unwrap().inverse();
        let id = a.matmul(&inv);
        for i in 0..2 {
            for j in 0..2 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)] - e).abs() < 1e-15);
            }
        }
        // ‖A‖∞ = 5, ‖A⁻¹‖∞ = (2 + 4)/10
        assert!((condition_inf(&a) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn matmul_matches_naive_product() {
        let a = DMat::from_fn(5, 3, |i, j| (i * 3 + j) as f64 - 4.0);
        let b = DMat::from_fn(3, 4, |i, j| 0.5 * i as f64 - j as f64);
        let c = a.matmul(&b);
        for i in 0..5 {
            for j in 0..4 {
                let s: f64 = (0..3).map(|k| a[(i, k)] * b[(k, j)]).sum();
                assert!((c[(i, j)] - s).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn metzler_check() {
        assert!(DMat::from_rows(&[[-5.0, 0.0], [1.0, -1.0]]).is_metzler(0.0));
        assert!(!DMat::from_rows(&[[0.0, -1e-3], [1.0, 0.0]]).is_metzler(1e-13));
    }
}
