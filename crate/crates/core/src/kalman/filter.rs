//! Forward pass: univariate exact-diffuse Kalman filter.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::ssm::{ObservationSeries, StateSpaceModel};

/// Relative threshold deciding whether a scalar still loads on the diffuse
/// subspace (`F_inf > tol * max(1, trace P_inf)`).
const F_INF_REL_TOL: f64 = 1e-12;

/// Innovation variances at or below this are treated as exact while the
/// diffuse phase is active and raise an error afterwards.
const F_SINGULAR: f64 = 1e-14;

/// Filtered covariance diagonals below this raise an error; negatives above
/// it clamp to zero.
const NEG_DIAG_TOL: f64 = -1e-10;

/// Per-scalar filter diagnostics, in processing order.
#[derive(Debug, Clone)]
pub struct ScalarDiagnostic {
    pub step: usize,
    pub entry: usize,
    pub missing: bool,
    /// True when this scalar was used to absorb a diffuse dimension; its
    /// prediction-error term is then excluded from the log-likelihood.
    pub absorbed: bool,
    /// Prediction error `v` (zero for missing scalars).
    pub innovation: f64,
    /// Finite innovation variance `F` (observation noise included).
    pub variance: f64,
    /// Trace of the diffuse covariance coefficient before the update.
    pub diffuse_trace: f64,
}

/// Output of [`diffuse_filter`].
#[derive(Debug, Clone)]
pub struct FilterResult {
    /// Marginal log-likelihood: sum of scalar prediction-error log-densities
    /// over non-missing scalars processed after (or outside) the diffuse
    /// absorption.
    pub loglik: f64,
    /// Number of diffuse dimensions absorbed.
    pub d_absorbed: usize,
    /// Number of non-missing scalars.
    pub n_used: usize,
    /// `-0.5 * sum(ln F_inf)` over the absorbed scalars; diagnostic only,
    /// not part of `loglik`.
    pub diffuse_correction: f64,
    pub scalars: Vec<ScalarDiagnostic>,
}

/// What the smoother needs from the forward pass.
pub(crate) enum ScalarRec {
    Missing,
    /// Degenerate zero-information scalar skipped during the diffuse phase.
    Skipped,
    Standard {
        v: f64,
        f: f64,
        k: DVector<f64>,
        z: DVector<f64>,
    },
    Diffuse {
        v: f64,
        f_star: f64,
        f_inf: f64,
        k_star: DVector<f64>,
        k_inf: DVector<f64>,
        z: DVector<f64>,
    },
}

pub(crate) struct ForwardPass {
    pub aug_dim: usize,
    pub pred_mean: Vec<DVector<f64>>,
    pub pred_cov: Vec<DMatrix<f64>>,
    /// Coefficient of the diffuse covariance part; `None` once resolved.
    pub pred_pinf: Vec<Option<DMatrix<f64>>>,
    /// Diagonal of the finite covariance part after the step's updates.
    pub filt_var: Vec<DVector<f64>>,
    pub recs: Vec<Vec<ScalarRec>>,
}

/// Run the filter and return the marginal log-likelihood with per-scalar
/// diagnostics. With every response missing the log-likelihood is zero and
/// no diffuse dimension is absorbed; with some data present, failure to
/// absorb all diffuse dimensions is an error.
pub fn diffuse_filter(model: &StateSpaceModel, series: &ObservationSeries) -> Result<FilterResult> {
    let (result, _) = forward(model, series, false)?;
    if result.n_used > 0 && result.d_absorbed < model.diffuse_count() {
        return Err(Error::InsufficientDiffuseData {
            absorbed: result.d_absorbed,
            needed: model.diffuse_count(),
        });
    }
    Ok(result)
}

pub(crate) fn forward(
    model: &StateSpaceModel,
    series: &ObservationSeries,
    collect: bool,
) -> Result<(FilterResult, Option<ForwardPass>)> {
    let ln_2pi = std::f64::consts::TAU.ln();
    let md = model.augmented_dim();
    let n = series.grid().len();
    let d_total = model.diffuse_count();

    let mut a = model.augmented_init_mean();
    let mut p = model.augmented_init_cov();
    let mut pinf = if d_total > 0 { Some(model.augmented_diffuse_cov()) } else { None };

    let mut loglik = 0.0;
    let mut d_absorbed = 0usize;
    let mut n_used = 0usize;
    let mut diffuse_correction = 0.0;
    let mut scalars = Vec::with_capacity(series.n_entries());

    let mut pass = collect.then(|| ForwardPass {
        aug_dim: md,
        pred_mean: Vec::with_capacity(n),
        pred_cov: Vec::with_capacity(n),
        pred_pinf: Vec::with_capacity(n),
        filt_var: Vec::with_capacity(n),
        recs: Vec::with_capacity(n),
    });

    let mut k_star = DVector::<f64>::zeros(md);
    let mut k_inf = DVector::<f64>::zeros(md);

    for step in 0..n {
        if let Some(pass) = pass.as_mut() {
            pass.pred_mean.push(a.clone());
            pass.pred_cov.push(p.clone());
            pass.pred_pinf.push(pinf.clone());
            pass.recs.push(Vec::with_capacity(series.steps()[step].len()));
        }

        for (entry_idx, entry) in series.steps()[step].iter().enumerate() {
            let pinf_trace = pinf.as_ref().map_or(0.0, |pi| pi.trace());
            let Some(y) = entry.value else {
                scalars.push(ScalarDiagnostic {
                    step,
                    entry: entry_idx,
                    missing: true,
                    absorbed: false,
                    innovation: 0.0,
                    variance: 0.0,
                    diffuse_trace: pinf_trace,
                });
                if let Some(pass) = pass.as_mut() {
                    pass.recs[step].push(ScalarRec::Missing);
                }
                continue;
            };
            n_used += 1;

            let z = model.augmented_obs_coeffs(series, step, entry_idx);
            let var = model.provider().obs_variance(step, entry_idx);
            let v = y - z.dot(&a);
            k_star.gemv(1.0, &p, &z, 0.0);
            let f_star = z.dot(&k_star) + var;
            let f_inf = match &pinf {
                Some(pi) => {
                    k_inf.gemv(1.0, pi, &z, 0.0);
                    z.dot(&k_inf)
                }
                None => 0.0,
            };

            if f_inf > F_INF_REL_TOL * pinf_trace.max(1.0) {
                // Diffuse update: one dimension of the diffuse subspace is
                // resolved by this scalar.
                a.axpy(v / f_inf, &k_inf, 1.0);
                linalg::add_scaled_outer(&mut p, f_star / (f_inf * f_inf), &k_inf);
                linalg::sub_sym_outer_scaled(&mut p, 1.0 / f_inf, &k_star, &k_inf);
                let pi = pinf.as_mut().expect("diffuse phase active");
                linalg::add_scaled_outer(pi, -1.0 / f_inf, &k_inf);
                linalg::symmetrize(&mut p);
                linalg::symmetrize(pi);
                d_absorbed += 1;
                diffuse_correction += -0.5 * f_inf.ln();
                if d_absorbed == d_total {
                    // Rank exhausted: the remaining entries are roundoff.
                    pinf = None;
                }
                scalars.push(ScalarDiagnostic {
                    step,
                    entry: entry_idx,
                    missing: false,
                    absorbed: true,
                    innovation: v,
                    variance: f_star,
                    diffuse_trace: pinf_trace,
                });
                if let Some(pass) = pass.as_mut() {
                    pass.recs[step].push(ScalarRec::Diffuse {
                        v,
                        f_star,
                        f_inf,
                        k_star: k_star.clone(),
                        k_inf: k_inf.clone(),
                        z,
                    });
                }
            } else if f_star > F_SINGULAR {
                a.axpy(v / f_star, &k_star, 1.0);
                linalg::add_scaled_outer(&mut p, -1.0 / f_star, &k_star);
                linalg::symmetrize(&mut p);
                if pinf.is_none() {
                    clamp_diag(&mut p, step)?;
                }
                loglik += -0.5 * (ln_2pi + f_star.ln() + v * v / f_star);
                scalars.push(ScalarDiagnostic {
                    step,
                    entry: entry_idx,
                    missing: false,
                    absorbed: false,
                    innovation: v,
                    variance: f_star,
                    diffuse_trace: pinf_trace,
                });
                if let Some(pass) = pass.as_mut() {
                    pass.recs[step].push(ScalarRec::Standard { v, f: f_star, k: k_star.clone(), z });
                }
            } else if pinf.is_some() {
                // No finite nor diffuse information: exact observation of an
                // already exact quantity. Nothing to update.
                scalars.push(ScalarDiagnostic {
                    step,
                    entry: entry_idx,
                    missing: false,
                    absorbed: false,
                    innovation: v,
                    variance: f_star,
                    diffuse_trace: pinf_trace,
                });
                if let Some(pass) = pass.as_mut() {
                    pass.recs[step].push(ScalarRec::Skipped);
                }
            } else {
                return Err(Error::SingularInnovation { step, obs: entry_idx });
            }
        }

        if let Some(pass) = pass.as_mut() {
            pass.filt_var.push(p.diagonal());
        }

        if step + 1 < n {
            let t = model.provider().transition(step);
            t.apply_vec(&mut a);
            t.apply_cov(&mut p);
            let q = model.provider().process_noise(step);
            q.add_to(&mut p);
            linalg::symmetrize(&mut p);
            if let Some(pi) = pinf.as_mut() {
                t.apply_cov(pi);
                linalg::symmetrize(pi);
            } else {
                clamp_diag(&mut p, step + 1)?;
            }
        }
    }

    Ok((
        FilterResult { loglik, d_absorbed, n_used, diffuse_correction, scalars },
        pass,
    ))
}

/// Clamp tiny negative diagonal entries (roundoff) to zero; fail on real
/// negatives. Only meaningful once the diffuse phase has ended, because the
/// finite covariance part alone is indefinite before that.
fn clamp_diag(p: &mut DMatrix<f64>, step: usize) -> Result<()> {
    for i in 0..p.nrows() {
        let v = p[(i, i)];
        if v < 0.0 {
            if v < NEG_DIAG_TOL {
                return Err(Error::NegativeVariance { step, value: v });
            }
            p[(i, i)] = 0.0;
        }
    }
    Ok(())
}
