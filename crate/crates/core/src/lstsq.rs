//! Dense least squares via Householder QR.
//!
//! This is the reference route used by the exhaustive oracle and by tests to
//! validate the recursive Cholesky machinery in [`crate::dict`]. It shares no
//! code with that path: it triangularizes the column subset from scratch on
//! every call.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

/// Solution of `min_x ‖y − B x‖²` for a dense column set `B`.
pub struct LstsqSolution {
    /// Coefficients, one per column of `B`.
    pub coeffs: Vec<f64>,
    /// Residual squared norm `‖y − B x‖²`.
    pub error: f64,
}

/// Solves `min_x ‖y − B x‖²` where `B` is given as a list of column slices,
/// each of length `rows`.
///
/// Uses Householder QR on the augmented matrix `[B | y]`. Assumes the columns
/// are linearly independent; a pivot collapsing below `1e-13` of the column
/// scale is zeroed, which drops the corresponding coefficient.
pub fn least_squares(rows: usize, cols: &[&[f64]], y: &[f64]) -> LstsqSolution {
    debug_assert_eq!(y.len(), rows);
    let p = cols.len();
    if p == 0 {
        return LstsqSolution {
            coeffs: Vec::new(),
            error: math::norm_sq(y),
        };
    }
    debug_assert!(cols.iter().all(|c| c.len() == rows));

    // Working copies: `a` is column-major m×p, `b` is the transformed y.
    let mut a: Vec<Vec<f64>> = cols.iter().map(|c| c.to_vec()).collect();
    let mut b: Vec<f64> = y.to_vec();

    let steps = p.min(rows);
    let mut diag = vec![0.0; steps];
    for j in 0..steps {
        // Householder vector for column j, rows j..m.
        let alpha = {
            let col = &a[j][j..];
            let norm = math::sqrt(math::norm_sq(col));
            if col[0] >= 0.0 {
                -norm
            } else {
                norm
            }
        };
        if alpha == 0.0 {
            diag[j] = 0.0;
            continue;
        }
        let mut v = a[j][j..].to_vec();
        v[0] -= alpha;
        let v_norm_sq = math::norm_sq(&v);
        diag[j] = alpha;
        if v_norm_sq == 0.0 {
            continue;
        }
        // Apply H = I − 2 v vᵀ / ‖v‖² to remaining columns and to b.
        for col in a.iter_mut().skip(j + 1) {
            let tail = &mut col[j..];
            let t = 2.0 * math::dot(&v, tail) / v_norm_sq;
            for (tk, vk) in tail.iter_mut().zip(v.iter()) {
                *tk -= t * vk;
            }
        }
        let tail = &mut b[j..];
        let t = 2.0 * math::dot(&v, tail) / v_norm_sq;
        for (tk, vk) in tail.iter_mut().zip(v.iter()) {
            *tk -= t * vk;
        }
        // Column j itself becomes (alpha, 0, …, 0).
        a[j][j] = alpha;
        for r in j + 1..rows {
            a[j][r] = 0.0;
        }
    }

    // Residual is the part of b outside the column span.
    let error = if rows > p {
        math::norm_sq(&b[p..])
    } else {
        0.0
    };

    // Back-substitute R x = b[0..steps].
    let mut coeffs = vec![0.0; p];
    let scale = diag.iter().fold(0.0f64, |m, d| m.max(math::abs(*d)));
    for j in (0..steps).rev() {
        let mut rhs = b[j];
        for k in j + 1..steps {
            rhs -= a[k][j] * coeffs[k];
        }
        if math::abs(diag[j]) > 1e-13 * (1.0 + scale) {
            coeffs[j] = rhs / diag[j];
        } else {
            coeffs[j] = 0.0;
        }
    }

    LstsqSolution { coeffs, error }
}

/// Least-squares error of `y` against a column subset of a dense matrix.
pub fn subset_error(rows: usize, columns: &[&[f64]], y: &[f64]) -> f64 {
    least_squares(rows, columns, y).error
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn empty_column_set_returns_norm() {
        let y = [3.0, 4.0];
        let sol = least_squares(2, &[], &y);
        assert_abs_diff_eq!(sol.error, 25.0);
        assert!(sol.coeffs.is_empty());
    }

    #[test]
    fn orthonormal_columns() {
        let e0 = [1.0, 0.0];
        let e1 = [0.0, 1.0];
        let y = [3.0, 4.0];
        let sol = least_squares(2, &[&e0], &y);
        assert_abs_diff_eq!(sol.error, 16.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.coeffs[0], 3.0, epsilon = 1e-12);
        let sol = least_squares(2, &[&e0, &e1], &y);
        assert_abs_diff_eq!(sol.error, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn tall_system_matches_normal_equations() {
        // 4×2 system solved by hand through the normal equations.
        let c0 = [1.0, 1.0, 1.0, 1.0];
        let c1 = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 2.0, 2.0, 4.0];
        // Normal equations: [4 6; 6 14] x = [9; 18] → x = (0.9, 0.9).
        let sol = least_squares(4, &[&c0, &c1], &y);
        assert_abs_diff_eq!(sol.coeffs[0], 0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.coeffs[1], 0.9, epsilon = 1e-12);
        let mut resid = 0.0;
        for i in 0..4 {
            let r = y[i] - sol.coeffs[0] * c0[i] - sol.coeffs[1] * c1[i];
            resid += r * r;
        }
        assert_abs_diff_eq!(sol.error, resid, epsilon = 1e-12);
    }

    #[test]
    fn negative_leading_entry() {
        let c0 = [-2.0, 0.0, 1.0];
        let y = [4.0, 1.0, -2.0];
        let sol = least_squares(3, &[&c0], &y);
        // x = ⟨y,c⟩/‖c‖² = (−8 − 2)/5 = −2, residual = y − (−2)c = (0,1,0).
        assert_abs_diff_eq!(sol.coeffs[0], -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.error, 1.0, epsilon = 1e-12);
    }
}
