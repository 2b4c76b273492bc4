//! State-space builders for the three model variants.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::curves::{eval_g, noise_block};
use super::{CurveFamily, CurveParams, Deviations, GrowthModelSpec, Mode, NoiseParams};
use crate::error::{Error, Result};
use crate::kalman::SmootherResult;
use crate::ssm::{MatrixProvider, ObservationSeries, ProcessNoise, StateSpaceModel, Transition};

/// Lazy system matrices shared by all three builders. `g` is precomputed on
/// the grid at construction, so every later call is a pure table lookup.
struct GrowthMatrices {
    g: Vec<f64>,
    gaps: Vec<f64>,
    sigma2_eps: f64,
    sigma2_eta: f64,
    sigma2_dev: f64,
    /// Replicate count for the deviation block; 0 for pooled models.
    k: usize,
    /// Per (step, entry): deviation-state slot of the entry's replicate.
    slots: Vec<Vec<usize>>,
}

impl GrowthMatrices {
    fn state_dim(&self) -> usize {
        2 + self.k
    }
}

impl MatrixProvider for GrowthMatrices {
    fn obs_coeffs(&self, step: usize, entry: usize) -> DVector<f64> {
        let mut z = DVector::zeros(self.state_dim());
        z[0] = 1.0;
        if self.k > 0 {
            z[2 + self.slots[step][entry]] = 1.0;
        }
        z
    }

    fn obs_variance(&self, _step: usize, _entry: usize) -> f64 {
        self.sigma2_eps
    }

    fn transition(&self, step: usize) -> Transition {
        let dg = self.g[step + 1] - self.g[step];
        Transition::new(DMatrix::from_row_slice(2, 2, &[1.0, dg, 0.0, 1.0]))
    }

    fn process_noise(&self, step: usize) -> ProcessNoise {
        let delta = (self.g[step + 1] - self.g[step]).abs();
        let leading = noise_block(self.sigma2_eta, delta);
        let tail = DVector::from_element(self.k, self.sigma2_dev * self.gaps[step]);
        ProcessNoise::new(leading, tail)
    }
}

fn growth_matrices(
    family: CurveFamily,
    params: &CurveParams,
    noise: &NoiseParams,
    series: &ObservationSeries,
    k: usize,
) -> Result<GrowthMatrices> {
    noise.validate()?;
    let times = series.grid().times();
    let g = times
        .iter()
        .map(|&t| eval_g(family, params, t))
        .collect::<Result<Vec<f64>>>()?;
    let gaps = times.windows(2).map(|w| w[1] - w[0]).collect();

    let slots = if k > 0 {
        let labels = series.replicates();
        let index: HashMap<&str, usize> =
            labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        series
            .steps()
            .iter()
            .map(|step| step.iter().map(|e| index[e.replicate.as_str()]).collect())
            .collect()
    } else {
        Vec::new()
    };

    Ok(GrowthMatrices {
        g,
        gaps,
        sigma2_eps: noise.sigma2_eps,
        sigma2_eta: noise.sigma2_eta,
        sigma2_dev: noise.sigma2_dev,
        k,
        slots,
    })
}

fn pooled_model(
    family: CurveFamily,
    params: &CurveParams,
    noise: &NoiseParams,
    series: &ObservationSeries,
) -> Result<StateSpaceModel> {
    if series.grid().is_empty() {
        return Err(Error::InvalidData("series is empty".into()));
    }
    let provider = growth_matrices(family, params, noise, series, 0)?;
    StateSpaceModel::new(
        2,
        vec![0, 1],
        DVector::zeros(2),
        DMatrix::zeros(2, 2),
        0,
        Arc::new(provider),
    )
}

/// Parametric model: state `[f(t); scale]`, both elements diffuse, zero
/// process noise, `Z = [1, 0]` for every observation.
pub fn build_parametric(
    family: CurveFamily,
    params: &CurveParams,
    noise: &NoiseParams,
    series: &ObservationSeries,
) -> Result<StateSpaceModel> {
    let noise = NoiseParams { sigma2_eta: 0.0, sigma2_dev: 0.0, ..*noise };
    pooled_model(family, params, &noise, series)
}

/// Semiparametric model: as parametric plus the integrated-noise block at
/// each step. With `sigma2_eta = 0` it coincides with the parametric model.
pub fn build_semiparametric(
    family: CurveFamily,
    params: &CurveParams,
    noise: &NoiseParams,
    series: &ObservationSeries,
) -> Result<StateSpaceModel> {
    let noise = NoiseParams { sigma2_dev: 0.0, ..*noise };
    pooled_model(family, params, &noise, series)
}

/// FME model: state `[f(t); scale; omega_1 .. omega_K]` with the curve block
/// diffuse and the deviation block pinned at zero. The transition is
/// block-diagonal (curve block, identity), the process noise block-diagonal
/// (curve noise, `sigma2_dev * h * I`), and the `Z` row of replicate `i` has
/// ones at positions 1 and `2 + i`.
pub fn build_fme(spec: &GrowthModelSpec, series: &ObservationSeries) -> Result<StateSpaceModel> {
    spec.validate()?;
    if series.grid().is_empty() {
        return Err(Error::InvalidData("series is empty".into()));
    }
    let labels = series.replicates();
    if labels.len() != spec.replicates {
        return Err(Error::InvalidData(format!(
            "series has {} distinct replicates, spec declares {}",
            labels.len(),
            spec.replicates
        )));
    }
    let k = spec.replicates;
    let noise = NoiseParams { sigma2_eta: spec.effective_sigma2_eta(), ..spec.noise };
    let provider = growth_matrices(spec.family, &spec.curve, &noise, series, k)?;
    let m = 2 + k;
    StateSpaceModel::new(
        m,
        vec![0, 1],
        DVector::zeros(m),
        DMatrix::zeros(m, m),
        0,
        Arc::new(provider),
    )
}

/// Dispatch on the spec: random-walk deviations build the FME model, else
/// the pooled parametric/semiparametric one.
pub fn build_model(spec: &GrowthModelSpec, series: &ObservationSeries) -> Result<StateSpaceModel> {
    match spec.deviations {
        Deviations::RandomWalk => build_fme(spec, series),
        Deviations::None => match spec.mode {
            Mode::Parametric => build_parametric(spec.family, &spec.curve, &spec.noise, series),
            Mode::Semiparametric => {
                build_semiparametric(spec.family, &spec.curve, &spec.noise, series)
            }
        },
    }
}

/// Recover the auxiliary curve parameters from a parametric fit: `scale` is
/// the smoothed second state element (time-invariant), and `constant`
/// follows from the smoothed `f` at the first grid time.
///
/// Only meaningful in parametric mode; in the semiparametric case the
/// second state element is no longer a time-invariant scale.
pub fn recover_constant_scale(
    smoothed: &SmootherResult,
    spec: &GrowthModelSpec,
) -> Result<(f64, f64)> {
    if spec.mode != Mode::Parametric {
        return Err(Error::NotParametric);
    }
    let t0 = smoothed.times()[0];
    let g0 = eval_g(spec.family, &spec.curve, t0)?;
    let scale = smoothed.means()[0][1];
    let f0 = smoothed.means()[0][0];
    Ok((f0 - scale * g0, scale))
}
