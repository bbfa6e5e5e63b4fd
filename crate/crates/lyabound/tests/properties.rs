//! Property-based checks of the static theory: bound dominance, closed
//! forms, equivariances, and serialization round-trips.

// Index loops keep the i/j structure of the matrix constructions visible.
#![allow(clippy::needless_range_loop)]

use lyabound::{
    expm_scaled, random_ml_matrix, MatrixSignal, MlMatrix, SignalSpec, SquareMatrix,
};
use proptest::prelude::*;

/// Strategy: a random ML-matrix of dimension `n` driven by a seed, so that
/// shrinking stays within valid matrices.
fn ml_matrix(max_n: usize) -> impl Strategy<Value = MlMatrix> {
    (1..=max_n, any::<u64>()).prop_map(|(n, seed)| {
        random_ml_matrix(n, seed, (-5.0, 5.0), (0.0, 5.0)).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    /// Every bound family sits below the dominant eigenvalue.
    #[test]
    fn bounds_never_exceed_dominant_eigenvalue(a in ml_matrix(6)) {
        let d = a.dominant_eigenvalue(1e-10, 100_000).unwrap();
        prop_assert!(d >= a.kolotilina_bound() - 1e-9);
        let fb = a.frobenius_bounds();
        prop_assert!(d >= fb.min_row_sum - 1e-9);
        prop_assert!(d >= fb.min_col_sum - 1e-9);
        if a.n() >= 2 {
            let pb = a.best_pairwise_bound().unwrap();
            prop_assert!(d >= pb.value - 1e-9);
        }
    }

    /// For n = 2 the dominant eigenvalue has a closed form.
    #[test]
    fn two_by_two_closed_form(seed in any::<u64>()) {
        let a = random_ml_matrix(2, seed, (-5.0, 5.0), (0.0, 5.0)).unwrap();
        let m = a.as_matrix();
        let tau = 0.5 * (m.get(0, 0) + m.get(1, 1));
        let delta = 0.5 * (m.get(0, 0) - m.get(1, 1));
        let expected = tau + (delta * delta + m.get(0, 1) * m.get(1, 0)).sqrt();
        let d = a.dominant_eigenvalue(1e-12, 100_000).unwrap();
        prop_assert!((d - expected).abs() <= 1e-8, "d={d}, closed form={expected}");
    }

    /// Symmetric matrices with constant row sums make the Kolotilina bound
    /// exact (the AM-GM step and the averaging step are both tight).
    #[test]
    fn kolotilina_is_tight_for_constant_row_sum_symmetric(
        seed in any::<u64>(), n in 2usize..=5
    ) {
        // Build a symmetric nonnegative off-diagonal pattern, then set the
        // diagonal to equalize row sums at zero.
        let base = random_ml_matrix(n, seed, (0.0, 0.0), (0.0, 3.0)).unwrap();
        let b = base.as_matrix();
        let mut rows = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    // Symmetrize.
                    rows[i][j] = 0.5 * (b.get(i, j) + b.get(j, i));
                }
            }
        }
        for (i, row) in rows.iter_mut().enumerate() {
            let off: f64 = row.iter().sum();
            row[i] = -off;
        }
        let a = MlMatrix::from_rows(rows).unwrap();
        let d = a.dominant_eigenvalue(1e-11, 100_000).unwrap();
        // Row sums are all zero, so d(A) = 0 and the bound must match it.
        prop_assert!((d - 0.0).abs() <= 1e-9);
        prop_assert!((a.kolotilina_bound() - 0.0).abs() <= 1e-12);
    }

    /// d(A + cI) = d(A) + c.
    #[test]
    fn dominant_eigenvalue_is_shift_equivariant(
        seed in any::<u64>(), c in -10.0f64..10.0
    ) {
        let a = random_ml_matrix(3, seed, (-5.0, 5.0), (0.0, 5.0)).unwrap();
        let shifted = MlMatrix::new(a.as_matrix().shift_diag(c)).unwrap();
        let d0 = a.dominant_eigenvalue(1e-11, 100_000).unwrap();
        let d1 = shifted.dominant_eigenvalue(1e-11, 100_000).unwrap();
        prop_assert!((d1 - (d0 + c)).abs() <= 1e-9, "d0={d0}, d1={d1}, c={c}");
    }

    /// All four bounds are shift-equivariant as well: each gains exactly
    /// `c` under `A -> A + cI`.
    #[test]
    fn bounds_are_shift_equivariant(seed in any::<u64>(), c in -8.0f64..8.0) {
        let a = random_ml_matrix(4, seed, (-5.0, 5.0), (0.0, 5.0)).unwrap();
        let s = MlMatrix::new(a.as_matrix().shift_diag(c)).unwrap();
        prop_assert!((s.kolotilina_bound() - (a.kolotilina_bound() + c)).abs() <= 1e-12);
        let fa = a.frobenius_bounds();
        let fs = s.frobenius_bounds();
        prop_assert!((fs.min_row_sum - (fa.min_row_sum + c)).abs() <= 1e-12);
        prop_assert!((fs.min_col_sum - (fa.min_col_sum + c)).abs() <= 1e-12);
        let pa = a.best_pairwise_bound().unwrap();
        let ps = s.best_pairwise_bound().unwrap();
        prop_assert!((ps.value - (pa.value + c)).abs() <= 1e-12);
    }

    /// Matrix exponentials of ML-matrices have exactly nonnegative unit
    /// factors, at any time scale.
    #[test]
    fn exponential_unit_factors_stay_in_the_cone(
        seed in any::<u64>(), t in 0.0f64..500.0
    ) {
        let a = random_ml_matrix(4, seed, (-5.0, 5.0), (0.0, 5.0)).unwrap();
        let e = expm_scaled(&a.as_matrix().scale(t));
        for &v in e.matrix().as_slice() {
            prop_assert!(v >= 0.0);
        }
        prop_assert!(e.log_norm().is_finite());
    }

    /// JSON round-trips preserve matrices exactly (f64-faithful).
    #[test]
    fn matrix_json_round_trip(seed in any::<u64>(), n in 1usize..=6) {
        let a = random_ml_matrix(n, seed, (-5.0, 5.0), (0.0, 5.0)).unwrap();
        let json = serde_json::to_string(a.as_matrix()).unwrap();
        let back: SquareMatrix = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(a.as_matrix().as_slice(), back.as_slice());
        let ml_json = serde_json::to_string(&a).unwrap();
        let ml_back: MlMatrix = serde_json::from_str(&ml_json).unwrap();
        prop_assert_eq!(a.as_matrix().as_slice(), ml_back.as_matrix().as_slice());
    }

    /// Signal specs survive serialization and realize deterministically.
    #[test]
    fn signal_spec_round_trip(seed in any::<u64>()) {
        let spec = SignalSpec::Constant {
            matrix: random_ml_matrix(3, seed, (-2.0, 2.0), (0.0, 2.0)).unwrap(),
        };
        let json = serde_json::to_string(&spec).unwrap();
        let back: SignalSpec = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(&spec, &back);
        let sig = back.realize().unwrap();
        prop_assert_eq!(sig.n(), 3);
        match sig {
            MatrixSignal::Constant { .. } => {}
            _ => prop_assert!(false, "constant spec must realize constant"),
        }
    }
}
