//! Draw datasets from a fully specified model.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{DataRecord, Dataset, ObservationSeries, StateSpaceModel};
use crate::error::{Error, Result};
use crate::linalg;

/// Draw one dataset from the model along the template's grid and replicate
/// layout. Template values are ignored; the returned dataset has no missing
/// values. Deterministic for a fixed seed.
///
/// A diffuse law cannot be sampled, so `diffuse_init` must give concrete
/// values for every diffuse element: first the diffuse initial-state
/// elements in index order, then the regression coefficients.
pub fn simulate(
    model: &StateSpaceModel,
    template: &ObservationSeries,
    diffuse_init: &[f64],
    seed: u64,
) -> Result<Dataset> {
    simulate_with_states(model, template, diffuse_init, seed).map(|(d, _)| d)
}

/// As [`simulate`], additionally returning the latent state path (one
/// vector per grid time, regression coefficients excluded).
pub fn simulate_with_states(
    model: &StateSpaceModel,
    template: &ObservationSeries,
    diffuse_init: &[f64],
    seed: u64,
) -> Result<(Dataset, Vec<DVector<f64>>)> {
    let d = model.diffuse_count();
    if diffuse_init.len() != d {
        return Err(Error::DiffuseInitUnset { expected: d, got: diffuse_init.len() });
    }
    if diffuse_init.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidModel("non-finite diffuse initial value".into()));
    }

    let m = model.state_dim();
    let md = model.augmented_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = move |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };

    // Initial state: concrete diffuse values plus a draw from the finite part.
    let mut alpha = model.augmented_init_mean();
    for (pos, &v) in model
        .diffuse_indices()
        .iter()
        .copied()
        .chain(m..md)
        .zip(diffuse_init.iter())
    {
        alpha[pos] = v;
    }
    let init_cov = model.augmented_init_cov();
    if init_cov.amax() > 0.0 {
        let l = psd_factor(&init_cov, "initial covariance")?;
        let xi = DVector::from_fn(md, |_, _| draw(&mut rng));
        alpha += &l * xi;
    }

    let n = template.grid().len();
    let mut records = Vec::with_capacity(template.n_entries());
    let mut states = Vec::with_capacity(n);

    for step in 0..n {
        states.push(alpha.rows(0, m).into_owned());
        let time = template.grid().times()[step];
        for (e, entry) in template.steps()[step].iter().enumerate() {
            let z = model.augmented_obs_coeffs(template, step, e);
            let var = model.provider().obs_variance(step, e);
            let y = z.dot(&alpha) + var.sqrt() * draw(&mut rng);
            records.push(DataRecord {
                group: template.group().to_string(),
                replicate: entry.replicate.clone(),
                time,
                value: Some(y),
            });
        }
        if step + 1 < n {
            let t = model.provider().transition(step);
            t.apply_vec(&mut alpha);
            let q = model.provider().process_noise(step);
            let k = q.leading().nrows();
            if k > 0 && q.leading().amax() > 0.0 {
                let l = psd_factor(q.leading(), "process noise")?;
                let xi = DVector::from_fn(k, |_, _| draw(&mut rng));
                let eta = &l * xi;
                for i in 0..k {
                    alpha[i] += eta[i];
                }
            }
            for (i, v) in q.tail().iter().enumerate() {
                if *v > 0.0 {
                    alpha[k + i] += v.sqrt() * draw(&mut rng);
                }
            }
        }
    }

    Ok((Dataset::new(records)?, states))
}

fn psd_factor(a: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    linalg::psd_cholesky(a)
        .map_err(|p| Error::InvalidModel(format!("{what} is not PSD (min pivot {p:e})")))
}
