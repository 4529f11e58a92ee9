//! Small dense integer matrices with exact determinant and semidefiniteness tests.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<i64>>", into = "Vec<Vec<i64>>")]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<i64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    /// Builds a matrix from rows. An empty list gives the 0x0 matrix.
    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(Error::Shape(format!("row {i} has {} entries, expected {c}", row.len())));
            }
            data.extend_from_slice(row);
        }
        Ok(Self { rows: r, cols: c, data })
    }

    pub fn to_rows(&self) -> Vec<Vec<i64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
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

    pub fn data(&self) -> &[i64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: i64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = a
                        .checked_mul(other.get(k, j))
                        .and_then(|p| p.checked_add(out.get(i, j)))
                        .ok_or(Error::Overflow)?;
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn trace(&self) -> i64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    /// Block-diagonal matrix `diag(self, other)`.
    pub fn block_diag(&self, other: &Self) -> Self {
        let n = self.rows + other.rows;
        let m = self.cols + other.cols;
        let mut out = Self::zeros(n, m);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.get(i, j));
            }
        }
        for i in 0..other.rows {
            for j in 0..other.cols {
                out.set(self.rows + i, self.cols + j, other.get(i, j));
            }
        }
        out
    }

    fn to_big(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|&v| BigInt::from(v)).collect())
            .collect()
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> BigInt {
        assert!(self.is_square(), "determinant of a non-square matrix");
        bareiss_det(self.to_big())
    }

    /// Leading principal minors `d_1, ..., d_n` (exact).
    pub fn leading_minors(&self) -> Vec<BigInt> {
        assert!(self.is_square());
        let n = self.rows;
        let mut out = Vec::with_capacity(n);
        for k in 1..=n {
            let sub: Vec<Vec<BigInt>> = (0..k)
                .map(|i| (0..k).map(|j| BigInt::from(self.get(i, j))).collect())
                .collect();
            out.push(bareiss_det(sub));
        }
        out
    }

    /// Sylvester's criterion on a symmetric matrix.
    pub fn is_positive_definite(&self) -> bool {
        self.is_symmetric() && self.leading_minors().iter().all(|d| d.is_positive())
    }

    /// Exact positive-semidefiniteness test for a symmetric matrix.
    pub fn is_psd(&self) -> bool {
        if !self.is_symmetric() {
            return false;
        }
        is_psd_i64(self.rows, &self.data)
    }

    /// Adjugate and determinant, so that `self * adj = det * I`.
    pub fn adjugate(&self) -> Result<(IntMatrix, i64)> {
        assert!(self.is_square());
        let n = self.rows;
        let det = self.det();
        let det_i64 = det.to_i64().ok_or(Error::Overflow)?;
        if n == 0 {
            return Ok((IntMatrix::zeros(0, 0), 1));
        }
        if det.is_zero() {
            return Err(Error::InvalidArgument("singular matrix has no inverse".into()));
        }
        // Gauss-Jordan over the rationals, tracked as numerator/denominator pairs.
        let mut aug: Vec<Vec<BigInt>> = self.to_big();
        let mut inv: Vec<Vec<BigInt>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { BigInt::one() } else { BigInt::zero() })
                    .collect()
            })
            .collect();
        for col in 0..n {
            let piv = (col..n).find(|&r| !aug[r][col].is_zero()).ok_or(Error::Overflow)?;
            aug.swap(col, piv);
            inv.swap(col, piv);
            let p = aug[col][col].clone();
            for r in 0..n {
                if r == col || aug[r][col].is_zero() {
                    continue;
                }
                let f = aug[r][col].clone();
                for c in 0..n {
                    let a = &p * &aug[r][c] - &f * &aug[col][c];
                    aug[r][c] = a;
                    let b = &p * &inv[r][c] - &f * &inv[col][c];
                    inv[r][c] = b;
                }
            }
        }
        // aug is now diagonal and inv holds the accumulated row operations E with
        // E * self = aug, so the inverse is aug^-1 * inv.
        let mut adj = IntMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                let num = &inv[r][c] * &det;
                let (q, rem) = (&num / &aug[r][r], &num % &aug[r][r]);
                if !rem.is_zero() {
                    return Err(Error::Overflow);
                }
                adj.set(r, c, q.to_i64().ok_or(Error::Overflow)?);
            }
        }
        Ok((adj, det_i64))
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.to_rows())
    }
}

impl TryFrom<Vec<Vec<i64>>> for IntMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<i64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<IntMatrix> for Vec<Vec<i64>> {
    fn from(m: IntMatrix) -> Self {
        m.to_rows()
    }
}

fn bareiss_det(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
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
    sign * a[n - 1][n - 1].clone()
}

/// Exact psd test of a symmetric `n x n` row-major matrix.
///
/// Repeated Schur complements on a positive pivot, scaled by the pivot so that
/// entries stay integral. A zero diagonal entry forces its whole row to vanish.
pub(crate) fn is_psd_i64(n: usize, data: &[i64]) -> bool {
    let small: Vec<i128> = data.iter().map(|&v| v as i128).collect();
    match psd_eliminate_i128(n, small) {
        Some(v) => v,
        None => {
            let big: Vec<BigInt> = data.iter().map(|&v| BigInt::from(v)).collect();
            psd_eliminate_big(n, big)
        }
    }
}

fn psd_eliminate_i128(mut n: usize, mut a: Vec<i128>) -> Option<bool> {
    loop {
        if n == 0 {
            return Some(true);
        }
        if (0..n).any(|i| a[i * n + i] < 0) {
            return Some(false);
        }
        // Rows with zero diagonal must vanish; drop them.
        if let Some(z) = (0..n).find(|&i| a[i * n + i] == 0) {
            if (0..n).any(|j| a[z * n + j] != 0) {
                return Some(false);
            }
            a = drop_index(n, &a, z);
            n -= 1;
            continue;
        }
        let p = a[0];
        let m = n - 1;
        let mut next = vec![0i128; m * m];
        let mut g: i128 = 0;
        for i in 0..m {
            for j in 0..m {
                let v = p
                    .checked_mul(a[(i + 1) * n + j + 1])?
                    .checked_sub(a[(i + 1) * n].checked_mul(a[j + 1])?)?;
                next[i * m + j] = v;
                g = gcd_i128(g, v);
            }
        }
        if g > 1 {
            for v in &mut next {
                *v /= g;
            }
        }
        a = next;
        n = m;
    }
}

fn psd_eliminate_big(mut n: usize, mut a: Vec<BigInt>) -> bool {
    loop {
        if n == 0 {
            return true;
        }
        if (0..n).any(|i| a[i * n + i].is_negative()) {
            return false;
        }
        if let Some(z) = (0..n).find(|&i| a[i * n + i].is_zero()) {
            if (0..n).any(|j| !a[z * n + j].is_zero()) {
                return false;
            }
            a = drop_index(n, &a, z);
            n -= 1;
            continue;
        }
        let p = a[0].clone();
        let m = n - 1;
        let mut next = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                next.push(&p * &a[(i + 1) * n + j + 1] - &a[(i + 1) * n] * &a[j + 1]);
            }
        }
        a = next;
        n = m;
    }
}

fn drop_index<T: Clone>(n: usize, a: &[T], z: usize) -> Vec<T> {
    let mut out = Vec::with_capacity((n - 1) * (n - 1));
    for i in (0..n).filter(|&i| i != z) {
        for j in (0..n).filter(|&j| j != z) {
            out.push(a[i * n + j].clone());
        }
    }
    out
}

fn gcd_i128(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Exact determinant of a small matrix in `i128`, `None` on overflow.
pub(crate) fn det_i128(n: usize, data: &[i128]) -> Option<i128> {
    if n == 0 {
        return Some(1);
    }
    let mut a = data.to_vec();
    let mut sign: i128 = 1;
    let mut prev: i128 = 1;
    for k in 0..n - 1 {
        if a[k * n + k] == 0 {
            match (k + 1..n).find(|&r| a[r * n + k] != 0) {
                Some(r) => {
                    for c in 0..n {
                        a.swap(k * n + c, r * n + c);
                    }
                    sign = -sign;
                }
                None => return Some(0),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = a[i * n + j]
                    .checked_mul(a[k * n + k])?
                    .checked_sub(a[i * n + k].checked_mul(a[k * n + j])?)?;
                a[i * n + j] = v / prev;
            }
        }
        prev = a[k * n + k];
    }
    Some(sign * a[n * n - 1])
}
