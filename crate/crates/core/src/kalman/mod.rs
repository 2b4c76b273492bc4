//! Exact-diffuse Kalman filter and smoother.
//!
//! Observation vectors are processed element by element, which is valid
//! because the observation-noise covariance is diagonal; missing scalars
//! are skipped in the update while states still propagate. Diffuse initial
//! elements are handled exactly by a two-matrix recursion that carries the
//! coefficient of the "infinite" covariance part alongside the finite part;
//! no big-variance proxy is used here (one exists only in the test
//! oracles).
//!
//! The reported log-likelihood is the marginal one: the `d` scalar
//! prediction-error terms absorbed while resolving the diffuse dimensions
//! are dropped entirely, and all constants elsewhere are kept. Absolute
//! values therefore differ from software using other diffuse-likelihood
//! conventions by a model-dependent constant; information-criterion
//! comparisons within one dataset are unaffected.

mod filter;
mod smoother;

pub use filter::{diffuse_filter, FilterResult, ScalarDiagnostic};
pub use smoother::{diffuse_smoother, SmootherResult};

use crate::error::{Error, Result};

/// A scalar component extracted from smoothed states: estimate and variance
/// per grid time.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSeries {
    pub times: Vec<f64>,
    pub estimates: Vec<f64>,
    pub variances: Vec<f64>,
}

impl ComponentSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Linear combination `selector . state` of the smoothed states, with
/// variance `selector' V selector` per time.
pub fn extract_component(s: &SmootherResult, selector: &[f64]) -> Result<ComponentSeries> {
    let m = s.state_dim();
    if selector.len() != m {
        return Err(Error::SelectorLength { expected: m, got: selector.len() });
    }
    let n = s.times().len();
    let mut estimates = Vec::with_capacity(n);
    let mut variances = Vec::with_capacity(n);
    for step in 0..n {
        let mean = &s.means()[step];
        let cov = &s.covs()[step];
        let mut est = 0.0;
        for (i, w) in selector.iter().enumerate() {
            est += w * mean[i];
        }
        let mut var = 0.0;
        for (i, wi) in selector.iter().enumerate() {
            for (j, wj) in selector.iter().enumerate() {
                var += wi * wj * cov[(i, j)];
            }
        }
        if var < 0.0 {
            if var < -1e-10 {
                return Err(Error::NegativeVariance { step, value: var });
            }
            var = 0.0;
        }
        estimates.push(est);
        variances.push(var);
    }
    Ok(ComponentSeries { times: s.times().to_vec(), estimates, variances })
}
