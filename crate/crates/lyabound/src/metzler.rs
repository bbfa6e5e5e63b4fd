//! ML-matrices (Metzler matrices) and their dominant eigenvalue.
//!
//! An ML-matrix has nonnegative off-diagonal entries; diagonals are
//! unconstrained. Flows generated by such matrices are *cooperative*: they
//! map the nonnegative cone into itself. By Perron–Frobenius theory applied
//! to `A + sI` (which is entrywise nonnegative for a large enough shift
//! `s`), an ML-matrix has a real eigenvalue `d(A)` of maximal real part —
//! the *dominant eigenvalue* — which controls the growth rate `e^{t d(A)}`
//! of the flow.
//!
//! This module also houses the classical entrywise lower bounds for `d(A)`:
//!
//! * Kolotilina-type: `d(A) >= (1/n) (tr A + 2 Σ_{j<k} sqrt(a_jk a_kj))`,
//! * minimal row sum: `d(A) >= min_i Σ_j a_ij`,
//! * minimal column sum: `d(A) >= min_j Σ_i a_ij`,
//! * pairwise: `d(A) >= (a_ii + a_jj)/2 + sqrt(a_ij a_ji)` for any `i != j`.
//!
//! All four extend to lower bounds on the top Lyapunov exponent of
//! time-varying systems by averaging; see the `bounds` module.

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{solve, SquareMatrix};
use crate::rng::SplitMix64;

/// Default absolute tolerance for [`MlMatrix::dominant_eigenvalue`].
pub const DEFAULT_EIG_TOL: f64 = 1e-10;
/// Default iteration budget for [`MlMatrix::dominant_eigenvalue`].
pub const DEFAULT_EIG_MAX_ITER: usize = 100_000;

/// Power iterations before conceding to bisection. Primitive matrices
/// converge orders of magnitude sooner; reducible ones never will.
const POWER_ITER_CAP: usize = 2_000;
/// Consecutive iterations with a frozen enclosure before declaring a stall.
const STALL_WINDOW: usize = 50;
/// Bisection halvings before giving up (cannot trigger for finite brackets
/// and positive tolerances; kept as a hard stop).
const BISECT_CAP: usize = 256;
/// Entry floor keeping iterates strictly positive. The Collatz–Wielandt
/// bounds hold for *any* strictly positive vector, so flooring never breaks
/// the enclosure; it only prevents 0/0 ratios when a coordinate decays to
/// nothing under a reducible matrix.
const POSITIVE_FLOOR: f64 = 1e-30;

/// A validated ML-matrix: every off-diagonal entry is `>= 0` and finite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MlMatrix(SquareMatrix);

impl MlMatrix {
    /// Validates `m` as an ML-matrix.
    ///
    /// Returns the first violation in row-major order, either as
    /// [`Error::NotMl`] (negative off-diagonal entry) or
    /// [`Error::NonFinite`].
    pub fn new(m: SquareMatrix) -> Result<Self> {
        let n = m.n();
        for i in 0..n {
            for j in 0..n {
                let v = m.get(i, j);
                if !v.is_finite() {
                    return Err(Error::NonFinite { i, j });
                }
                if i != j && v < 0.0 {
                    return Err(Error::NotMl { i, j, value: v });
                }
            }
        }
        Ok(Self(m))
    }

    /// Convenience constructor from rows.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(SquareMatrix::from_rows(rows)?)
    }

    /// The underlying square matrix.
    pub fn as_matrix(&self) -> &SquareMatrix {
        &self.0
    }

    /// Consumes the wrapper.
    pub fn into_matrix(self) -> SquareMatrix {
        self.0
    }

    /// Dimension.
    pub fn n(&self) -> usize {
        self.0.n()
    }

    /// The dominant eigenvalue `d(A)`: the real eigenvalue of maximal real
    /// part, equal to `rho(A + sI) - s` for any shift making `A + sI`
    /// nonnegative.
    ///
    /// Algorithm: shift by `s = 1 + max(0, max_i(-a_ii))` so that
    /// `B = A + sI` is nonnegative with diagonal `>= 1` (hence primitive
    /// whenever it is irreducible), then run power iteration. Each iterate
    /// `x > 0` yields the rigorous Collatz–Wielandt enclosure
    ///
    /// ```text
    /// min_i (Bx)_i / x_i  <=  rho(B)  <=  max_i (Bx)_i / x_i,
    /// ```
    ///
    /// and the Rayleigh quotient (which lies inside the enclosure) is
    /// accepted once the enclosure width is `<= tol`. Reducible matrices can
    /// pin the enclosure open; in that case the accumulated enclosure seeds
    /// a bisection on `mu`, deciding `rho(B) < mu` by whether
    /// `(mu I - B) y = 1` has a nonnegative solution (the M-matrix test:
    /// such a `y` is strictly positive and certifies `rho < mu` through the
    /// upper Collatz–Wielandt bound; conversely `rho < mu` makes
    /// `(mu I - B)^{-1}` nonnegative).
    ///
    /// The result has absolute accuracy `tol`.
    pub fn dominant_eigenvalue(&self, tol: f64, max_iter: usize) -> Result<f64> {
        if !tol.is_finite() || tol <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be positive and finite, got {tol}"
            )));
        }
        if max_iter == 0 {
            return Err(Error::InvalidParameter(
                "max_iter must be at least 1".into(),
            ));
        }
        let n = self.n();
        if n == 0 {
            return Err(Error::InvalidParameter(
                "dominant eigenvalue of an empty matrix".into(),
            ));
        }
        let neg_diag = (0..n).map(|i| -self.0.get(i, i)).fold(0.0f64, f64::max);
        let s = 1.0 + neg_diag.max(0.0);
        let b = self.0.shift_diag(s);

        // Phase 1: power iteration with the Collatz-Wielandt enclosure.
        let mut x = vec![1.0 / (n as f64).sqrt(); n];
        let mut best_lo = f64::NEG_INFINITY;
        let mut best_hi = f64::INFINITY;
        let mut prev_gap = f64::INFINITY;
        let mut stall = 0usize;
        for _ in 0..max_iter.min(POWER_ITER_CAP) {
            let y = b.matvec(&x);
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..n {
                let r = y[i] / x[i];
                lo = lo.min(r);
                hi = hi.max(r);
                num += x[i] * y[i];
                den += x[i] * x[i];
            }
            best_lo = best_lo.max(lo);
            best_hi = best_hi.min(hi);
            if hi - lo <= tol {
                return Ok(num / den - s);
            }
            let gap = hi - lo;
            if (prev_gap - gap).abs() <= 1e-14 * gap.max(1.0) {
                stall += 1;
                if stall >= STALL_WINDOW {
                    break;
                }
            } else {
                stall = 0;
            }
            prev_gap = gap;
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            for i in 0..n {
                x[i] = (y[i] / norm).max(POSITIVE_FLOOR);
            }
        }

        // Phase 2: bisection. The enclosure accumulated above brackets
        // rho(B) whatever the matrix structure.
        let (mut lo, mut hi) = (best_lo, best_hi);
        for _ in 0..BISECT_CAP {
            if hi - lo <= tol {
                return Ok(0.5 * (lo + hi) - s);
            }
            let mu = 0.5 * (lo + hi);
            if spectral_radius_below(&b, mu) {
                hi = mu;
            } else {
                lo = mu;
            }
        }
        Err(Error::NoConvergence { max_iter })
    }

    /// Kolotilina-type lower bound:
    /// `(tr A + 2 Σ_{j<k} sqrt(a_jk a_kj)) / n <= d(A)`.
    pub fn kolotilina_bound(&self) -> f64 {
        let n = self.n();
        let mut s = self.0.trace();
        for j in 0..n {
            for k in j + 1..n {
                // The product is nonnegative for ML entries; the clamp
                // shields against -0.0 and interpolation roundoff.
                s += 2.0 * (self.0.get(j, k) * self.0.get(k, j)).max(0.0).sqrt();
            }
        }
        s / n as f64
    }

    /// Minimal row and column sums with their (smallest-index) witnesses.
    /// Both are lower bounds for `d(A)`.
    pub fn frobenius_bounds(&self) -> FrobeniusBounds {
        let n = self.n();
        let mut out = FrobeniusBounds {
            min_row_sum: f64::INFINITY,
            argmin_row: 0,
            min_col_sum: f64::INFINITY,
            argmin_col: 0,
        };
        for i in 0..n {
            let r = self.0.row_sum(i);
            if r < out.min_row_sum {
                out.min_row_sum = r;
                out.argmin_row = i;
            }
            let c = self.0.col_sum(i);
            if c < out.min_col_sum {
                out.min_col_sum = c;
                out.argmin_col = i;
            }
        }
        out
    }

    /// Pairwise lower bound for a chosen pair `i != j`:
    /// `(a_ii + a_jj)/2 + sqrt(a_ij a_ji) <= d(A)`.
    pub fn pairwise_bound(&self, i: usize, j: usize) -> Result<f64> {
        let n = self.n();
        if i == j || i >= n || j >= n {
            return Err(Error::IndexError { i, j, n });
        }
        let diag = 0.5 * (self.0.get(i, i) + self.0.get(j, j));
        Ok(diag + (self.0.get(i, j) * self.0.get(j, i)).max(0.0).sqrt())
    }

    /// The best pairwise bound over all pairs, with the witness pair.
    /// Ties resolve to the lexicographically smallest `(i, j)`, `i < j`.
    pub fn best_pairwise_bound(&self) -> Result<PairwiseBound> {
        let n = self.n();
        if n < 2 {
            return Err(Error::DimensionError { n });
        }
        let mut best = PairwiseBound {
            value: f64::NEG_INFINITY,
            i: 0,
            j: 1,
        };
        for i in 0..n {
            for j in i + 1..n {
                let v = self.pairwise_bound(i, j).expect("indices in range");
                if v > best.value {
                    best = PairwiseBound { value: v, i, j };
                }
            }
        }
        Ok(best)
    }
}

impl<'de> Deserialize<'de> for MlMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let m = SquareMatrix::deserialize(deserializer)?;
        MlMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

/// Minimal row/column sums of an ML-matrix with argmin witnesses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrobeniusBounds {
    pub min_row_sum: f64,
    pub argmin_row: usize,
    pub min_col_sum: f64,
    pub argmin_col: usize,
}

/// A pairwise bound value together with its witness pair `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairwiseBound {
    pub value: f64,
    pub i: usize,
    pub j: usize,
}

/// Decides `rho(B) < mu` for a nonnegative matrix `B` via the M-matrix
/// criterion: `mu I - B` is a nonsingular M-matrix iff `rho(B) < mu`, and
/// then `(mu I - B)^{-1} e > 0`. A nonnegative solution certifies the upper
/// Collatz-Wielandt bound strictly below `mu`.
fn spectral_radius_below(b: &SquareMatrix, mu: f64) -> bool {
    let m = b.scale(-1.0).shift_diag(mu);
    match solve(&m, &vec![1.0; b.n()]) {
        Ok(y) => y.iter().all(|&v| v >= 0.0),
        // Singular at working precision: mu sits on the spectrum.
        Err(_) => false,
    }
}

/// Draws a random ML-matrix with diagonal entries uniform in `diag_range`
/// and off-diagonal entries uniform in `offdiag_range`.
///
/// The draw order is row-major, one uniform per entry, from a
/// [`SplitMix64`] stream seeded with `seed` — fixed so that corpora are
/// reproducible byte-for-byte.
///
/// `offdiag_range` must sit inside `[0, ∞)`; both ranges must be ordered
/// and finite.
pub fn random_ml_matrix(
    n: usize,
    seed: u64,
    diag_range: (f64, f64),
    offdiag_range: (f64, f64),
) -> Result<MlMatrix> {
    if n == 0 {
        return Err(Error::InvalidParameter("matrix dimension must be >= 1".into()));
    }
    for &(lo, hi) in [&diag_range, &offdiag_range] {
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(Error::BadRange { lo, hi });
        }
    }
    if offdiag_range.0 < 0.0 {
        return Err(Error::BadRange {
            lo: offdiag_range.0,
            hi: offdiag_range.1,
        });
    }
    let mut rng = SplitMix64::new(seed);
    let m = SquareMatrix::from_fn(n, |i, j| {
        if i == j {
            rng.uniform(diag_range.0, diag_range.1)
        } else {
            rng.uniform(offdiag_range.0, offdiag_range.1)
        }
    });
    MlMatrix::new(m)
}
