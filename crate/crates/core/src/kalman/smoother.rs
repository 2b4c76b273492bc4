//! Backward pass: univariate exact-diffuse Kalman smoother.
//!
//! The backward recursion carries the usual weighted-innovation vector and
//! information matrix (`r0`, `n0`) plus their diffuse-phase companions
//! (`r1`, `n1`, `n2`), which are the next orders of the expansion of the
//! standard smoother in inverse powers of the diffuse prior variance. Away
//! from the diffuse phase the companions stay zero and the general combining
//! formulas reduce to the standard ones, so a single pass handles both
//! regimes, including steps whose scalars straddle the phase boundary.

use nalgebra::{DMatrix, DVector};

use super::filter::{forward, ScalarRec};
use crate::error::{Error, Result};
use crate::linalg;
use crate::ssm::{ObservationSeries, StateSpaceModel};

/// Smoothed (full-sample) state estimates at every grid time, missing-only
/// times included.
#[derive(Debug, Clone)]
pub struct SmootherResult {
    times: Vec<f64>,
    state_dim: usize,
    means: Vec<DVector<f64>>,
    covs: Vec<DMatrix<f64>>,
    regression_mean: Option<DVector<f64>>,
    regression_cov: Option<DMatrix<f64>>,
    filtered_variances: Vec<DVector<f64>>,
    diffuse_steps: Vec<bool>,
    loglik: f64,
}

impl SmootherResult {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    /// Smoothed state means, one `m`-vector per grid time.
    pub fn means(&self) -> &[DVector<f64>] {
        &self.means
    }

    /// Smoothed state covariances, symmetric PSD.
    pub fn covs(&self) -> &[DMatrix<f64>] {
        &self.covs
    }

    /// Smoothed estimate of the initial state (the diffuse vector lives
    /// here) with its covariance.
    pub fn initial_state(&self) -> (&DVector<f64>, &DMatrix<f64>) {
        (&self.means[0], &self.covs[0])
    }

    /// Smoothed regression coefficients and covariance, when the model has
    /// regressors.
    pub fn regression(&self) -> Option<(&DVector<f64>, &DMatrix<f64>)> {
        self.regression_mean.as_ref().zip(self.regression_cov.as_ref())
    }

    /// Diagonal of the filtered (finite-part) covariance after each step's
    /// updates; a proper variance only where [`Self::step_was_diffuse`] is
    /// false.
    pub fn filtered_variances(&self) -> &[DVector<f64>] {
        &self.filtered_variances
    }

    pub fn step_was_diffuse(&self, step: usize) -> bool {
        self.diffuse_steps[step]
    }

    /// Marginal log-likelihood from the forward pass.
    pub fn loglik(&self) -> f64 {
        self.loglik
    }
}

/// Run filter and smoother, returning smoothed means and covariances at
/// every grid time.
pub fn diffuse_smoother(model: &StateSpaceModel, series: &ObservationSeries) -> Result<SmootherResult> {
    let (fr, pass) = forward(model, series, true)?;
    let d_total = model.diffuse_count();
    if fr.d_absorbed < d_total {
        return Err(Error::InsufficientDiffuseData { absorbed: fr.d_absorbed, needed: d_total });
    }
    let pass = pass.expect("forward pass collected");

    let md = pass.aug_dim;
    let m = model.state_dim();
    let n = series.grid().len();

    let mut r0 = DVector::<f64>::zeros(md);
    let mut r1 = DVector::<f64>::zeros(md);
    let mut n0 = DMatrix::<f64>::zeros(md, md);
    let mut n1 = DMatrix::<f64>::zeros(md, md);
    let mut n2 = DMatrix::<f64>::zeros(md, md);

    let mut means: Vec<DVector<f64>> = vec![DVector::zeros(0); n];
    let mut covs: Vec<DMatrix<f64>> = vec![DMatrix::zeros(0, 0); n];
    let mut regression_mean = None;
    let mut regression_cov = None;

    for step in (0..n).rev() {
        for rec in pass.recs[step].iter().rev() {
            match rec {
                ScalarRec::Missing | ScalarRec::Skipped => {}
                ScalarRec::Standard { v, f, k, z } => {
                    // c = K/F;  L = I - c z'
                    // r0 <- z v/F + L' r0          N0 <- z z'/F + L' N0 L
                    // r1 <- L' r1                  N1 <- L' N1 L,  N2 <- L' N2 L
                    let c = k / *f;
                    let c_r0 = c.dot(&r0);
                    let c_r1 = c.dot(&r1);
                    r0.axpy(v / f - c_r0, z, 1.0);
                    r1.axpy(-c_r1, z, 1.0);

                    let u0 = &n0 * &c;
                    let u1 = &n1 * &c;
                    let u2 = &n2 * &c;
                    linalg::sub_sym_outer_scaled(&mut n0, 1.0, z, &u0);
                    linalg::add_scaled_outer(&mut n0, 1.0 / f + c.dot(&u0), z);
                    linalg::sub_sym_outer_scaled(&mut n1, 1.0, z, &u1);
                    linalg::add_scaled_outer(&mut n1, c.dot(&u1), z);
                    linalg::sub_sym_outer_scaled(&mut n2, 1.0, z, &u2);
                    linalg::add_scaled_outer(&mut n2, c.dot(&u2), z);
                }
                ScalarRec::Diffuse { v, f_star, f_inf, k_star, k_inf, z } => {
                    // c0 = K_inf/F_inf;  c1 = K_star/F_inf - K_inf F_star/F_inf^2
                    // L_inf = I - c0 z',  L_1 = -c1 z'
                    // r0 <- L_inf' r0
                    // r1 <- z v/F_inf + L_inf' r1 + L_1' r0
                    // N0 <- L_inf' N0 L_inf
                    // N1 <- z z'/F_inf + L_inf' N1 L_inf + L_1' N0 L_inf + L_inf' N0 L_1
                    // N2 <- -z z' F_star/F_inf^2 + L_inf' N2 L_inf
                    //       + L_1' N1 L_inf + L_inf' N1 L_1 + L_1' N0 L_1
                    let c0 = k_inf / *f_inf;
                    let c1 = k_star / *f_inf - &k_inf.scale(*f_star / (f_inf * f_inf));
                    let c0_r0 = c0.dot(&r0);
                    let c0_r1 = c0.dot(&r1);
                    let c1_r0 = c1.dot(&r0);
                    r1.axpy(v / f_inf - c0_r1 - c1_r0, z, 1.0);
                    r0.axpy(-c0_r0, z, 1.0);

                    let u00 = &n0 * &c0;
                    let u01 = &n0 * &c1;
                    let u10 = &n1 * &c0;
                    let u11 = &n1 * &c1;
                    let u20 = &n2 * &c0;
                    // N2 first: it reads N1 and N0.
                    linalg::sub_sym_outer_scaled(&mut n2, 1.0, z, &u20);
                    linalg::sub_sym_outer_scaled(&mut n2, 1.0, z, &u11);
                    linalg::add_scaled_outer(
                        &mut n2,
                        -f_star / (f_inf * f_inf)
                            + c0.dot(&u20)
                            + 2.0 * c0.dot(&u11)
                            + c1.dot(&u01),
                        z,
                    );
                    linalg::sub_sym_outer_scaled(&mut n1, 1.0, z, &u10);
                    linalg::sub_sym_outer_scaled(&mut n1, 1.0, z, &u01);
                    linalg::add_scaled_outer(
                        &mut n1,
                        1.0 / f_inf + c0.dot(&u10) + 2.0 * c0.dot(&u01),
                        z,
                    );
                    linalg::sub_sym_outer_scaled(&mut n0, 1.0, z, &u00);
                    linalg::add_scaled_outer(&mut n0, c0.dot(&u00), z);
                }
            }
        }

        // Combine with the predicted moments of this step.
        let a = &pass.pred_mean[step];
        let p = &pass.pred_cov[step];
        let mut mean = a + p * &r0;
        let n0p = &n0 * p;
        let mut cov = p - p * &n0p;
        if let Some(pinf) = &pass.pred_pinf[step] {
            mean += pinf * &r1;
            let n1p = &n1 * p;
            let cross = pinf * &n1p;
            cov -= &cross;
            cov -= cross.transpose();
            cov -= pinf * &n2 * pinf;
        }
        linalg::symmetrize(&mut cov);
        for i in 0..md {
            let v = cov[(i, i)];
            if v < 0.0 {
                if v < -1e-10 {
                    return Err(Error::NegativeVariance { step, value: v });
                }
                cov[(i, i)] = 0.0;
            }
        }

        if step == 0 && md > m {
            regression_mean = Some(mean.rows(m, md - m).into_owned());
            regression_cov = Some(cov.view((m, m), (md - m, md - m)).into_owned());
        }
        means[step] = mean.rows(0, m).into_owned();
        covs[step] = cov.view((0, 0), (m, m)).into_owned();

        if step > 0 {
            let t = model.provider().transition(step - 1);
            t.apply_vec_transposed(&mut r0);
            t.apply_vec_transposed(&mut r1);
            t.apply_cov_transposed(&mut n0);
            t.apply_cov_transposed(&mut n1);
            t.apply_cov_transposed(&mut n2);
            linalg::symmetrize(&mut n0);
            linalg::symmetrize(&mut n1);
            linalg::symmetrize(&mut n2);
        }
    }

    Ok(SmootherResult {
        times: series.grid().times().to_vec(),
        state_dim: m,
        means,
        covs,
        regression_mean,
        regression_cov,
        filtered_variances: pass.filt_var.iter().map(|v| v.rows(0, m).into_owned()).collect(),
        diffuse_steps: pass.pred_pinf.iter().map(Option::is_some).collect(),
        loglik: fr.loglik,
    })
}
