//! The soft-max matrices `SM_(k,d)` that define each linear piece of
//! PLSoftMax, stored with exact rational entries.
//!
//! Indices are zero-based in code. In one-based notation the nonzero
//! entries are `m_11 = (k-1)/k`, `m_ii = 1/i` and `m_i1 = -1/k` for
//! `i in [2,k]`, and `m_ij = -1/(j(j-1))` for `j in [2,k]` and `j > i`
//! (the column index exceeds the row index). Every row and every column
//! sums to zero.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

use crate::error::{domain, Result};

pub type Rational = Ratio<i64>;

/// A dense matrix over exact rationals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Rational::from_integer(1));
        }
        m
    }

    /// `E_{i,j}`: all zeros except a one at `(i, j)`.
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m.set(i, j, Rational::from_integer(1));
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Rational {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rational) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column_sums(&self) -> Vec<Rational> {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j)).sum())
            .collect()
    }

    pub fn row_sums(&self) -> Vec<Rational> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j)).sum())
            .collect()
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| {
            self.get(i, j).to_f64().unwrap_or(f64::NAN)
        })
    }
}

impl Add for &RationalMatrix {
    type Output = RationalMatrix;

    fn add(self, rhs: &RationalMatrix) -> RationalMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        RationalMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &RationalMatrix {
    type Output = RationalMatrix;

    fn sub(self, rhs: &RationalMatrix) -> RationalMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        RationalMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &RationalMatrix {
    type Output = RationalMatrix;

    fn mul(self, rhs: &RationalMatrix) -> RationalMatrix {
        assert_eq!(self.cols, rhs.rows);
        let mut out = RationalMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.get(i, l);
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = rhs.get(l, j);
                    if !b.is_zero() {
                        let idx = i * out.cols + j;
                        out.data[idx] += a * b;
                    }
                }
            }
        }
        out
    }
}

impl fmt::Display for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// `SM_(k,d)` with exact entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SoftMaxMatrix {
    k: usize,
    d: usize,
    entries: RationalMatrix,
}

impl SoftMaxMatrix {
    pub fn new(k: usize, d: usize) -> Result<Self> {
        if k < 1 || k > d {
            return domain(format!("active count k={k} must lie in [1, {d}]"));
        }
        let mut m = RationalMatrix::zeros(d, d);
        let kk = k as i64;
        if k >= 2 {
            m.set(0, 0, Rational::new(kk - 1, kk));
        }
        for i in 1..k {
            let one_based = i as i64 + 1;
            m.set(i, i, Rational::new(1, one_based));
            m.set(i, 0, Rational::new(-1, kk));
        }
        for j in 1..k {
            let jj = j as i64 + 1;
            for i in 0..j {
                m.set(i, j, Rational::new(-1, jj * (jj - 1)));
            }
        }
        Ok(Self { k, d, entries: m })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn entry(&self, i: usize, j: usize) -> Rational {
        self.entries.get(i, j)
    }

    pub fn as_rational(&self) -> &RationalMatrix {
        &self.entries
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        self.entries.to_f64()
    }
}

/// `SM_(k,d) * y` in `O(k)` using the row structure; `y` is in sorted
/// coordinates. Entries past `k` are zero.
pub(crate) fn sm_apply(k: usize, y: &[f64]) -> Vec<f64> {
    let d = y.len();
    let mut out = vec![0.0; d];
    if k < 2 {
        return out;
    }
    let kf = k as f64;
    // tail[i] = sum_{j > i, j < k} y_j / (j (j + 1)) in zero-based indices
    let mut tail = vec![0.0; k + 1];
    for j in (1..k).rev() {
        let jj = (j + 1) as f64;
        tail[j] = tail[j + 1] + y[j] / (jj * (jj - 1.0));
    }
    out[0] = (kf - 1.0) / kf * y[0] - tail[1];
    for i in 1..k {
        out[i] = -y[0] / kf + y[i] / (i + 1) as f64 - tail[i + 1];
    }
    out
}

/// `SM_(k,d)^T * w` in `O(k)`.
pub(crate) fn sm_apply_transpose(k: usize, w: &[f64]) -> Vec<f64> {
    let d = w.len();
    let mut out = vec![0.0; d];
    if k < 2 {
        return out;
    }
    let kf = k as f64;
    let rest: f64 = w[1..k].iter().sum();
    out[0] = (kf - 1.0) / kf * w[0] - rest / kf;
    let mut prefix = w[0];
    for j in 1..k {
        let jj = (j + 1) as f64;
        out[j] = w[j] / jj - prefix / (jj * (jj - 1.0));
        prefix += w[j];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn sm_1_is_zero() {
        let m = SoftMaxMatrix::new(1, 4).unwrap();
        assert!(m.as_rational().data.iter().all(|v| v.is_zero()));
    }

    #[test]
    fn sm_2_4_matches_reference() {
        let m = SoftMaxMatrix::new(2, 4).unwrap();
        assert_eq!(m.entry(0, 0), r(1, 2));
        assert_eq!(m.entry(0, 1), r(-1, 2));
        assert_eq!(m.entry(1, 0), r(-1, 2));
        assert_eq!(m.entry(1, 1), r(1, 2));
        assert!(m.entry(2, 2).is_zero());
    }

    #[test]
    fn rejects_bad_k() {
        assert!(SoftMaxMatrix::new(0, 3).is_err());
        assert!(SoftMaxMatrix::new(4, 3).is_err());
    }

    #[test]
    fn structured_products_match_dense() {
        let y = [0.3, -0.1, 0.7, 0.2, -0.5, 1.1];
        for k in 1..=6 {
            let dense = SoftMaxMatrix::new(k, 6).unwrap().to_f64();
            let v = nalgebra::DVector::from_column_slice(&y);
            let want = &dense * &v;
            let want_t = dense.transpose() * &v;
            let got = sm_apply(k, &y);
            let got_t = sm_apply_transpose(k, &y);
            for i in 0..6 {
                assert!((want[i] - got[i]).abs() < 1e-14, "k={k} row {i}");
                assert!((want_t[i] - got_t[i]).abs() < 1e-14, "k={k} col {i}");
            }
        }
    }
}
