//! Structural validation of a model against a series.

use super::{MatrixProvider, ObservationSeries, StateSpaceModel};
use crate::error::{Error, Result};
use crate::linalg;

/// Outcome of [`validate_model`].
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub state_dim: usize,
    /// Diffuse dimension `d`: diffuse initial-state elements plus
    /// regression coefficients.
    pub diffuse_count: usize,
    pub n_steps: usize,
    pub n_entries: usize,
    pub n_observed: usize,
    pub warnings: Vec<String>,
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "m={}, d={}, steps={}, observations={}/{}",
            self.state_dim, self.diffuse_count, self.n_steps, self.n_observed, self.n_entries
        )?;
        for w in &self.warnings {
            write!(f, "\nwarning: {w}")?;
        }
        Ok(())
    }
}

/// Check dimension agreement of every provided matrix across all steps,
/// symmetry/PSD of the process-noise covariances, and non-negativity of the
/// observation-noise variances.
pub fn validate_model(model: &StateSpaceModel, series: &ObservationSeries) -> Result<ValidationReport> {
    let m = model.state_dim();
    let provider: &dyn MatrixProvider = model.provider();
    let n = series.grid().len();
    let mut warnings = Vec::new();

    for (j, step) in series.steps().iter().enumerate() {
        for (e, entry) in step.iter().enumerate() {
            let z = provider.obs_coeffs(j, e);
            if z.len() != m {
                return Err(Error::DimensionMismatch {
                    step: j,
                    what: format!("Z row for entry {e}"),
                    expected: m,
                    got: z.len(),
                });
            }
            if z.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidModel(format!("non-finite Z row at step {j}, entry {e}")));
            }
            let var = provider.obs_variance(j, e);
            if !var.is_finite() || var < 0.0 {
                return Err(Error::InvalidModel(format!(
                    "observation variance at step {j}, entry {e} is {var}"
                )));
            }
            match (&entry.regressors, model.n_regressors()) {
                (Some(x), r) => {
                    if x.len() != r {
                        return Err(Error::DimensionMismatch {
                            step: j,
                            what: format!("regressor row for entry {e}"),
                            expected: r,
                            got: x.len(),
                        });
                    }
                }
                (None, r) if r > 0 => warnings.push(format!(
                    "step {j}, entry {e}: no regressor row; zeros assumed"
                )),
                _ => {}
            }
        }

        if j + 1 < n {
            let t = provider.transition(j);
            if t.order() > m {
                return Err(Error::DimensionMismatch {
                    step: j,
                    what: "transition leading block".into(),
                    expected: m,
                    got: t.order(),
                });
            }
            if t.leading().iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidModel(format!("non-finite transition at step {j}")));
            }
            let q = provider.process_noise(j);
            if q.order() > m {
                return Err(Error::DimensionMismatch {
                    step: j,
                    what: "process-noise dimension".into(),
                    expected: m,
                    got: q.order(),
                });
            }
            if !linalg::is_symmetric(q.leading(), 1e-12) {
                return Err(Error::NonSymmetricNoise { step: j });
            }
            let min_pivot = linalg::min_psd_pivot(q.leading());
            if min_pivot < linalg::PSD_PIVOT_TOL {
                return Err(Error::NonPsdNoise { step: j, min_pivot });
            }
            if let Some(v) = q.tail().iter().copied().find(|v| *v < 0.0) {
                if v < linalg::PSD_PIVOT_TOL {
                    return Err(Error::NonPsdNoise { step: j, min_pivot: v });
                }
            }
        }
    }

    let d = model.diffuse_count();
    let n_observed = series.n_observed();
    if n_observed < d {
        warnings.push(format!(
            "only {n_observed} non-missing observations for {d} diffuse dimensions"
        ));
    }

    Ok(ValidationReport {
        state_dim: m,
        diffuse_count: d,
        n_steps: n,
        n_entries: series.n_entries(),
        n_observed,
        warnings,
    })
}
