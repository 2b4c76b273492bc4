//! Small dense linear-algebra helpers shared by the filter and simulator.

use nalgebra::{DMatrix, DVector};

/// Pivot tolerance for the PSD check: pivots of the Cholesky-style
/// elimination may dip this far below zero before the matrix is rejected.
pub(crate) const PSD_PIVOT_TOL: f64 = -1e-12;

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub(crate) fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let scale = m[(i, j)].abs().max(m[(j, i)].abs()).max(1.0);
            if (m[(i, j)] - m[(j, i)]).abs() > tol * scale {
                return false;
            }
        }
    }
    true
}

/// Semidefinite Cholesky factorization `A = L L^T` with pivot clamping.
///
/// Returns the lower factor, or the offending pivot when one falls below
/// [`PSD_PIVOT_TOL`]. Zero pivots (a singular but still PSD matrix) yield
/// zero columns, so the factor is usable for sampling degenerate Gaussians.
pub(crate) fn psd_cholesky(a: &DMatrix<f64>) -> std::result::Result<DMatrix<f64>, f64> {
    let n = a.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    let scale = a.diagonal().amax().max(1.0);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d < PSD_PIVOT_TOL * scale {
            return Err(d);
        }
        if d <= 0.0 {
            // Singular direction: leave the column zero.
            continue;
        }
        let root = d.sqrt();
        l[(j, j)] = root;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / root;
        }
    }
    Ok(l)
}

/// Minimum pivot of the PSD check without keeping the factor.
pub(crate) fn min_psd_pivot(a: &DMatrix<f64>) -> f64 {
    match psd_cholesky(a) {
        Ok(l) => {
            let mut min = f64::INFINITY;
            for j in 0..a.nrows() {
                let d = l[(j, j)] * l[(j, j)];
                if d < min {
                    min = d;
                }
            }
            if min.is_finite() {
                min
            } else {
                0.0
            }
        }
        Err(p) => p,
    }
}

/// `m -= alpha * (a b^T + b a^T)`.
pub(crate) fn sub_sym_outer_scaled(m: &mut DMatrix<f64>, alpha: f64, a: &DVector<f64>, b: &DVector<f64>) {
    let n = m.nrows();
    for i in 0..n {
        let ai = alpha * a[i];
        let bi = alpha * b[i];
        for j in 0..n {
            m[(i, j)] -= ai * b[j] + bi * a[j];
        }
    }
}

/// `m += alpha * (v v^T)`.
pub(crate) fn add_scaled_outer(m: &mut DMatrix<f64>, alpha: f64, v: &DVector<f64>) {
    let n = m.nrows();
    for i in 0..n {
        let vi = alpha * v[i];
        for j in 0..n {
            m[(i, j)] += vi * v[j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psd_cholesky_recovers_factor() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 2.0, 0.0, 2.0, 5.0, 1.0, 0.0, 1.0, 3.0]);
        let l = psd_cholesky(&a).unwrap();
        let back = &l * l.transpose();
        assert!((&back - &a).amax() < 1e-12);
    }

    #[test]
    fn psd_cholesky_accepts_singular() {
        // Rank-1 PSD matrix.
        let v = DVector::from_row_slice(&[1.0, -2.0, 0.5]);
        let a = &v * v.transpose();
        let l = psd_cholesky(&a).unwrap();
        let back = &l * l.transpose();
        assert!((&back - &a).amax() < 1e-12);
    }

    #[test]
    fn psd_cholesky_rejects_indefinite() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(psd_cholesky(&a).is_err());
    }
}
