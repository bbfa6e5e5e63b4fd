//! Dense square matrices and vectors.
//!
//! Systems in this crate are small (a handful of interacting components), so
//! storage is a flat row-major `Vec<f64>` and the arithmetic is written
//! directly. Entry `(i, j)` is row `i`, column `j` throughout; every public
//! constructor rejects non-finite entries so that downstream numerics never
//! meet a NaN.
//!
//! The JSON interchange format for matrices is shared by the whole toolkit:
//!
//! ```json
//! {"n": 2, "rows": [[1.0, 2.0], [3.0, 4.0]]}
//! ```
//!
//! Parsing rejects ragged rows, a row count different from `n`, and
//! non-finite values.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A dense `n x n` real matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    /// Builds a matrix from rows, validating shape and finiteness.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite { i, j });
                }
                data.push(v);
            }
        }
        Ok(Self { n, data })
    }

    /// The zero matrix.
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    /// The identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix entrywise from `f(i, j)`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    /// Dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Entry `(i, j)`.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets entry `(i, j)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    /// Row-major view of the entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Sum of the diagonal.
    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Sum of row `i`.
    pub fn row_sum(&self, i: usize) -> f64 {
        (0..self.n).map(|j| self.get(i, j)).sum()
    }

    /// Sum of column `j`.
    pub fn col_sum(&self, j: usize) -> f64 {
        (0..self.n).map(|i| self.get(i, j)).sum()
    }

    /// `self + other`. Panics on dimension mismatch (internal arithmetic).
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// `c * self`.
    pub fn scale(&self, c: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|a| a * c).collect(),
        }
    }

    /// `self + c * I`.
    pub fn shift_diag(&self, c: f64) -> Self {
        let mut m = self.clone();
        for i in 0..self.n {
            m.data[i * self.n + i] += c;
        }
        m
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    /// Matrix-vector product `self * x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.n, x.len());
        let n = self.n;
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += self.data[i * n + j] * x[j];
            }
            out[i] = s;
        }
        out
    }

    /// Transpose.
    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i))
    }

    /// Frobenius norm (entrywise 2-norm). It brackets the spectral norm:
    /// `‖A‖_F / sqrt(n) <= ‖A‖_2 <= ‖A‖_F`.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs_entry(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    /// Smallest entry (signed).
    pub fn min_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl std::ops::Index<(usize, usize)> for SquareMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    n: usize,
    rows: Vec<Vec<f64>>,
}

impl Serialize for SquareMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows = (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect();
        MatrixRepr { n: self.n, rows }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SquareMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = MatrixRepr::deserialize(deserializer)?;
        if repr.rows.len() != repr.n {
            return Err(D::Error::custom(format!(
                "matrix declares n = {} but has {} rows",
                repr.n,
                repr.rows.len()
            )));
        }
        SquareMatrix::from_rows(repr.rows).map_err(|e| D::Error::custom(e.to_string()))
    }
}

/// Solves `A x = b` by LU decomposition with partial pivoting.
///
/// Returns `Err` if a pivot is exactly zero (singular to working precision).
pub fn solve(a: &SquareMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.n;
    assert_eq!(b.len(), n);
    let mut lu = a.data.clone();
    let mut x: Vec<f64> = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();

    for col in 0..n {
        // Partial pivot: largest magnitude in this column at or below the
        // diagonal.
        let mut pivot_row = col;
        let mut pivot_val = lu[perm[col] * n + col].abs();
        for row in col + 1..n {
            let v = lu[perm[row] * n + col].abs();
            if v > pivot_val {
                pivot_val = v;
                pivot_row = row;
            }
        }
        if pivot_val == 0.0 {
            return Err(Error::Numerical(format!(
                "singular matrix in linear solve (column {col})"
            )));
        }
        perm.swap(col, pivot_row);
        let p = perm[col];
        let inv = 1.0 / lu[p * n + col];
        for row in col + 1..n {
            let r = perm[row];
            let factor = lu[r * n + col] * inv;
            lu[r * n + col] = factor;
            for j in col + 1..n {
                lu[r * n + j] -= factor * lu[p * n + j];
            }
        }
    }

    // Forward substitution on the permuted rows.
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = x[perm[i]];
        for j in 0..i {
            s -= lu[perm[i] * n + j] * y[j];
        }
        y[i] = s;
    }
    // Back substitution.
    for i in (0..n).rev() {
        let mut s = y[i];
        for j in i + 1..n {
            s -= lu[perm[i] * n + j] * x[j];
        }
        x[i] = s / lu[perm[i] * n + i];
    }
    Ok(x)
}

/// A real vector with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Vector {
    data: Vec<f64>,
}

impl Vector {
    /// Builds a vector, validating finiteness.
    pub fn new(data: Vec<f64>) -> Result<Self> {
        for (i, &v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { i, j: 0 });
            }
        }
        Ok(Self { data })
    }

    /// The all-ones vector.
    pub fn ones(n: usize) -> Self {
        Self {
            data: vec![1.0; n],
        }
    }

    /// Dimension.
    pub fn dim(&self) -> usize {
        self.data.len()
    }

    /// Entry `i`.
    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.data[i]
    }

    /// Entry view.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// Every entry `>= 0`.
    pub fn is_nonneg(&self) -> bool {
        self.data.iter().all(|&v| v >= 0.0)
    }

    /// Every entry `> 0`.
    pub fn is_pos(&self) -> bool {
        self.data.iter().all(|&v| v > 0.0)
    }
}

impl From<Vec<f64>> for Vector {
    /// Internal conversion for arithmetic results (already finite).
    fn from(data: Vec<f64>) -> Self {
        Self { data }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn from_rows_rejects_ragged_rows() {
        let err = SquareMatrix::from_rows(vec![vec![1.0, 2.0], vec![3.0]]).unwrap_err();
        assert_eq!(
            err,
            Error::DimensionMismatch {
                expected: 2,
                found: 1
            }
        );
    }

    #[test]
    fn from_rows_rejects_non_finite() {
        let err =
            SquareMatrix::from_rows(vec![vec![1.0, f64::NAN], vec![3.0, 4.0]]).unwrap_err();
        assert_eq!(err, Error::NonFinite { i: 0, j: 1 });
    }

    #[test]
    fn basic_arithmetic() {
        let a = SquareMatrix::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(a.trace(), 5.0);
        assert_eq!(a.row_sum(0), 3.0);
        assert_eq!(a.col_sum(0), 4.0);
        assert_eq!(a[(1, 0)], 3.0);

        let sq = a.matmul(&a);
        // [[7, 10], [15, 22]]
        assert_eq!(sq.as_slice(), &[7.0, 10.0, 15.0, 22.0]);

        let v = a.matvec(&[1.0, 1.0]);
        assert_eq!(v, vec![3.0, 7.0]);

        let t = a.transpose();
        assert_eq!(t.as_slice(), &[1.0, 3.0, 2.0, 4.0]);

        let s = a.shift_diag(10.0);
        assert_eq!(s.as_slice(), &[11.0, 2.0, 3.0, 14.0]);
    }

    #[test]
    fn norms() {
        let a = SquareMatrix::from_rows(vec![vec![3.0, 0.0], vec![0.0, -4.0]]).unwrap();
        assert_relative_eq!(a.frobenius_norm(), 5.0);
        assert_eq!(a.max_abs_entry(), 4.0);
        assert_eq!(a.min_entry(), -4.0);
    }

    #[test]
    fn solve_recovers_known_solution() {
        // Requires a row swap: leading zero pivot.
        let a = SquareMatrix::from_rows(vec![
            vec![0.0, 2.0, 1.0],
            vec![1.0, 0.0, 1.0],
            vec![2.0, 1.0, 0.0],
        ])
        .unwrap();
        let x_true = [1.5, -2.0, 0.25];
        let b = a.matvec(&x_true);
        let x = solve(&a, &b).unwrap();
        for (xi, ti) in x.iter().zip(x_true.iter()) {
            assert_relative_eq!(xi, ti, max_relative = 1e-12);
        }
    }

    #[test]
    fn solve_reports_singularity() {
        let a = SquareMatrix::from_rows(vec![vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(solve(&a, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let a = SquareMatrix::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(s, r#"{"n":2,"rows":[[1.0,2.0],[3.0,4.0]]}"#);
        let b: SquareMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn json_rejects_bad_shapes_and_values() {
        assert!(serde_json::from_str::<SquareMatrix>(r#"{"n":2,"rows":[[1,2]]}"#).is_err());
        assert!(
            serde_json::from_str::<SquareMatrix>(r#"{"n":2,"rows":[[1,2],[3]]}"#).is_err()
        );
        // 1e999 overflows to infinity during parsing; the finiteness check
        // must catch it.
        assert!(serde_json::from_str::<SquareMatrix>(
            r#"{"n":1,"rows":[[1e999]]}"#
        )
        .is_err());
    }

    #[test]
    fn vector_predicates() {
        assert!(Vector::new(vec![0.0, 1.0]).unwrap().is_nonneg());
        assert!(!Vector::new(vec![0.0, 1.0]).unwrap().is_pos());
        assert!(Vector::new(vec![0.5, 1.0]).unwrap().is_pos());
        assert!(!Vector::new(vec![-0.1, 1.0]).unwrap().is_nonneg());
        assert!(Vector::new(vec![f64::INFINITY]).is_err());
        assert_relative_eq!(Vector::new(vec![3.0, 4.0]).unwrap().norm(), 5.0);
    }
}
