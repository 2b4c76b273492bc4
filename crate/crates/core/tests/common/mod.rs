//! Shared test oracles: dense joint-Gaussian conditioning with a
//! big-variance diffuse proxy, a banded penalized-least-squares spline
//! solver, and a random small-model generator.
//!
//! Everything here recomputes results from first principles on dense
//! matrices; none of it reuses the production filter/smoother recursions.

#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use growthss::ssm::{
    MatrixProvider, ObservationSeries, ProcessNoise, SeriesEntry, StateSpaceModel, TimeGrid,
    Transition,
};

/// Diffuse proxy variance used by the oracles.
pub const KAPPA: f64 = 1e8;

/// A fully tabulated provider for hand-built and random test models.
pub struct TableProvider {
    pub z_rows: Vec<Vec<DVector<f64>>>,
    pub obs_vars: Vec<Vec<f64>>,
    pub transitions: Vec<DMatrix<f64>>,
    pub noises: Vec<DMatrix<f64>>,
}

impl MatrixProvider for TableProvider {
    fn obs_coeffs(&self, step: usize, entry: usize) -> DVector<f64> {
        self.z_rows[step][entry].clone()
    }

    fn obs_variance(&self, step: usize, entry: usize) -> f64 {
        self.obs_vars[step][entry]
    }

    fn transition(&self, step: usize) -> Transition {
        Transition::new(self.transitions[step].clone())
    }

    fn process_noise(&self, step: usize) -> ProcessNoise {
        ProcessNoise::new(self.noises[step].clone(), DVector::zeros(0))
    }
}

/// Smoothed moments and the proxy log-likelihood obtained by conditioning
/// the dense joint Gaussian of (all states, observed scalars) on the
/// observations, with diffuse directions given variance [`KAPPA`].
pub struct DenseOracle {
    /// Per step, the augmented smoothed mean (state then regression).
    pub means: Vec<DVector<f64>>,
    pub covs: Vec<DMatrix<f64>>,
    /// Joint Gaussian log-density of the observed scalars under the proxy.
    pub loglik_kappa: f64,
}

pub fn dense_conditioning(model: &StateSpaceModel, series: &ObservationSeries) -> DenseOracle {
    dense_conditioning_kappa(model, series, KAPPA)
}

pub fn dense_conditioning_kappa(
    model: &StateSpaceModel,
    series: &ObservationSeries,
    kappa: f64,
) -> DenseOracle {
    let m = model.state_dim();
    let r = model.n_regressors();
    let md = m + r;
    let n = series.grid().len();
    let dim = n * md;

    // Augmented initial moments with the diffuse proxy.
    let mut mu = DVector::<f64>::zeros(dim);
    for i in 0..m {
        mu[i] = model.init_mean()[i];
    }
    for &i in model.diffuse_indices() {
        mu[i] = 0.0;
    }
    let mut sigma = DMatrix::<f64>::zeros(dim, dim);
    {
        let mut p0 = DMatrix::<f64>::zeros(md, md);
        p0.view_mut((0, 0), (m, m)).copy_from(model.init_cov());
        for &i in model.diffuse_indices() {
            for j in 0..md {
                p0[(i, j)] = 0.0;
                p0[(j, i)] = 0.0;
            }
            p0[(i, i)] = kappa;
        }
        for i in m..md {
            p0[(i, i)] = kappa;
        }
        sigma.view_mut((0, 0), (md, md)).copy_from(&p0);
    }

    // Propagate the stacked state moments.
    for t in 0..n - 1 {
        let mut a = DMatrix::<f64>::identity(md, md);
        a.view_mut((0, 0), (m, m)).copy_from(&model.provider().transition(t).full(m));
        let mut q = DMatrix::<f64>::zeros(md, md);
        q.view_mut((0, 0), (m, m)).copy_from(&model.provider().process_noise(t).full(m));

        let mu_t = mu.rows(t * md, md).into_owned();
        let mu_next = &a * mu_t;
        mu.rows_mut((t + 1) * md, md).copy_from(&mu_next);

        for s in 0..=t {
            let block = sigma.view((t * md, s * md), (md, md)).into_owned();
            let next = &a * block;
            sigma.view_mut(((t + 1) * md, s * md), (md, md)).copy_from(&next);
            sigma
                .view_mut((s * md, (t + 1) * md), (md, md))
                .copy_from(&next.transpose());
        }
        let p_t = sigma.view((t * md, t * md), (md, md)).into_owned();
        let p_next = &a * p_t * a.transpose() + q;
        sigma
            .view_mut(((t + 1) * md, (t + 1) * md), (md, md))
            .copy_from(&p_next);
    }

    // Observed scalars.
    let mut z_stack: Vec<DVector<f64>> = Vec::new();
    let mut y_obs: Vec<f64> = Vec::new();
    let mut vars: Vec<f64> = Vec::new();
    for (t, step) in series.steps().iter().enumerate() {
        for (e, entry) in step.iter().enumerate() {
            let Some(y) = entry.value else { continue };
            let zrow = model.provider().obs_coeffs(t, e);
            let mut z = DVector::<f64>::zeros(dim);
            for i in 0..m {
                z[t * md + i] = zrow[i];
            }
            if let Some(x) = &entry.regressors {
                for (i, v) in x.iter().enumerate() {
                    z[t * md + m + i] = *v;
                }
            }
            z_stack.push(z);
            y_obs.push(y);
            vars.push(model.provider().obs_variance(t, e));
        }
    }
    let k = y_obs.len();

    if k == 0 {
        let means = (0..n).map(|t| mu.rows(t * md, md).into_owned()).collect();
        let covs = (0..n)
            .map(|t| sigma.view((t * md, t * md), (md, md)).into_owned())
            .collect();
        return DenseOracle { means, covs, loglik_kappa: 0.0 };
    }

    let mut syy = DMatrix::<f64>::zeros(k, k);
    let mut sxy = DMatrix::<f64>::zeros(dim, k);
    let mut mu_y = DVector::<f64>::zeros(k);
    for (i, zi) in z_stack.iter().enumerate() {
        let si = &sigma * zi;
        sxy.set_column(i, &si);
        mu_y[i] = zi.dot(&mu);
        for (j, zj) in z_stack.iter().enumerate().take(i + 1) {
            let v = zj.dot(&si);
            syy[(i, j)] = v;
            syy[(j, i)] = v;
        }
    }
    for i in 0..k {
        syy[(i, i)] += vars[i];
    }

    let chol = syy.clone().cholesky().expect("proxy observation covariance is SPD");
    let resid = DVector::from_vec(y_obs) - mu_y;
    let alpha = chol.solve(&resid);
    let mu_post = &mu + &sxy * &alpha;
    let sol = chol.solve(&sxy.transpose());
    let sigma_post = &sigma - &sxy * sol;

    let mut logdet = 0.0;
    for i in 0..k {
        logdet += 2.0 * chol.l()[(i, i)].ln();
    }
    let loglik_kappa = -0.5
        * ((k as f64) * (2.0 * std::f64::consts::PI).ln() + logdet + resid.dot(&alpha));

    let means = (0..n).map(|t| mu_post.rows(t * md, md).into_owned()).collect();
    let covs = (0..n)
        .map(|t| sigma_post.view((t * md, t * md), (md, md)).into_owned())
        .collect();
    DenseOracle { means, covs, loglik_kappa }
}

/// Random small model + data for oracle-equivalence checks. `None` when the
/// draw produced a model whose data cannot absorb all diffuse dimensions.
pub struct RandomInstance {
    pub model: StateSpaceModel,
    pub series: ObservationSeries,
}

pub fn random_instance(seed: u64, allow_regressors: bool) -> Option<RandomInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.random_range(1..=4usize);
    let n = rng.random_range(2..=12usize);
    let r = if allow_regressors && rng.random_bool(0.3) { 1 } else { 0 };

    let std_normal = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };

    // Near-unimodular transitions, like the growth-model recursions: a
    // strongly contracting T would collapse the diffuse subspace and the
    // oracle's big-variance proxy with it.
    let mut transitions = Vec::new();
    let mut noises = Vec::new();
    for _ in 0..n - 1 {
        let mut t = DMatrix::<f64>::from_fn(m, m, |_, _| 0.15 * std_normal(&mut rng));
        for i in 0..m {
            t[(i, i)] += 1.0;
        }
        let row_norm = (0..m)
            .map(|i| (0..m).map(|j| t[(i, j)].abs()).sum::<f64>())
            .fold(0.0f64, f64::max);
        if row_norm > 1.1 {
            t *= 1.1 / row_norm;
        }
        transitions.push(t);

        if rng.random_bool(0.2) {
            noises.push(DMatrix::zeros(m, m));
        } else {
            let a = DMatrix::<f64>::from_fn(m, m, |_, _| std_normal(&mut rng));
            noises.push(0.3 / m as f64 * (&a * a.transpose()));
        }
    }

    let mut times = Vec::with_capacity(n);
    let mut t_acc = 0.0;
    for _ in 0..n {
        times.push(t_acc);
        t_acc += rng.random_range(0.25..1.75);
    }

    let mut z_rows = Vec::with_capacity(n);
    let mut obs_vars = Vec::with_capacity(n);
    let mut steps: Vec<Vec<SeriesEntry>> = Vec::with_capacity(n);
    for _ in 0..n {
        let k_t = rng.random_range(1..=3usize);
        let mut zr = Vec::with_capacity(k_t);
        let mut vr = Vec::with_capacity(k_t);
        let mut entries = Vec::with_capacity(k_t);
        for e in 0..k_t {
            zr.push(DVector::from_fn(m, |_, _| std_normal(&mut rng)));
            vr.push(rng.random_range(0.05..1.0));
            let missing = rng.random_bool(0.25);
            let regressors =
                (r > 0).then(|| (0..r).map(|_| std_normal(&mut rng)).collect::<Vec<_>>());
            entries.push(SeriesEntry {
                replicate: format!("r{e}"),
                value: (!missing).then(|| 2.0 * std_normal(&mut rng)),
                regressors,
            });
        }
        z_rows.push(zr);
        obs_vars.push(vr);
        steps.push(entries);
    }

    let n_diffuse = rng.random_range(0..=m);
    let diffuse: Vec<usize> = (0..m).take(n_diffuse).collect();
    let init_mean = DVector::from_fn(m, |_, _| std_normal(&mut rng));
    let base = DMatrix::<f64>::from_fn(m, m, |_, _| std_normal(&mut rng));
    let init_cov = 0.5 / m as f64 * (&base * base.transpose());

    let provider = TableProvider { z_rows, obs_vars, transitions, noises };
    let model = StateSpaceModel::new(
        m,
        diffuse,
        init_mean,
        init_cov,
        r,
        Arc::new(provider),
    )
    .ok()?;
    let series = ObservationSeries::new(
        "g",
        TimeGrid::new(times).ok()?,
        steps,
    )
    .ok()?;

    // Keep only instances whose data absorb the full diffuse dimension.
    growthss::kalman::diffuse_filter(&model, &series).ok()?;
    growthss::kalman::diffuse_smoother(&model, &series).ok()?;
    Some(RandomInstance { model, series })
}

/// Relative error with a unit floor, for comparing quantities on the O(1)
/// scale of the generated models.
pub fn rel_err(ours: f64, oracle: f64) -> f64 {
    (ours - oracle).abs() / oracle.abs().max(1.0)
}

/// Relative error with a variance-scale floor.
pub fn rel_err_var(ours: f64, oracle: f64) -> f64 {
    (ours - oracle).abs() / oracle.abs().max(1e-3)
}

/// Simulate a growth-model dataset on a shared grid: `k` replicates, all
/// observed at all times. Returns the per-group series view plus the latent
/// state path (the mean curve is state element 0).
pub fn sim_growth(
    spec: &growthss::models::GrowthModelSpec,
    times: &[f64],
    constant: f64,
    scale: f64,
    seed: u64,
) -> (ObservationSeries, Vec<DVector<f64>>) {
    let grid = TimeGrid::new(times.to_vec()).unwrap();
    let steps: Vec<Vec<SeriesEntry>> = (0..times.len())
        .map(|_| {
            (0..spec.replicates)
                .map(|r| SeriesEntry {
                    replicate: format!("r{:02}", r + 1),
                    value: None,
                    regressors: None,
                })
                .collect()
        })
        .collect();
    let template = ObservationSeries::new("sim", grid, steps).unwrap();
    let model = growthss::models::build_model(spec, &template).unwrap();
    let g0 = growthss::models::eval_g(spec.family, &spec.curve, times[0]).unwrap();
    let f0 = constant + scale * g0;
    let (data, states) =
        growthss::ssm::simulate_with_states(&model, &template, &[f0, scale], seed).unwrap();
    let series = ObservationSeries::from_dataset(&data, "sim").unwrap();
    (series, states)
}

/// Natural cubic smoothing spline by penalized least squares, solved with
/// the classic second-difference formulation: minimize
/// `sum (y_i - mu_i)^2 + lambda * integral(mu'')^2` over natural cubic
/// splines with knots at the (distinct, increasing) times. Returns the
/// fitted values at the knots.
pub fn smoothing_spline(times: &[f64], values: &[f64], lambda: f64) -> Vec<f64> {
    let n = times.len();
    assert!(n >= 3, "spline oracle needs at least 3 points");
    let h: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();

    // Q: n x (n-2) second-difference matrix, R: (n-2) x (n-2) tridiagonal.
    let mut q = DMatrix::<f64>::zeros(n, n - 2);
    let mut r = DMatrix::<f64>::zeros(n - 2, n - 2);
    for j in 0..n - 2 {
        q[(j, j)] = 1.0 / h[j];
        q[(j + 1, j)] = -1.0 / h[j] - 1.0 / h[j + 1];
        q[(j + 2, j)] = 1.0 / h[j + 1];
        r[(j, j)] = (h[j] + h[j + 1]) / 3.0;
        if j + 1 < n - 2 {
            r[(j, j + 1)] = h[j + 1] / 6.0;
            r[(j + 1, j)] = h[j + 1] / 6.0;
        }
    }

    // (R + lambda Q'Q) gamma = Q' y ; mu = y - lambda Q gamma.
    let y = DVector::from_column_slice(values);
    let lhs = &r + lambda * q.transpose() * &q;
    let rhs = q.transpose() * &y;
    let gamma = lhs.cholesky().expect("spline system is SPD").solve(&rhs);
    let mu = &y - lambda * &q * gamma;
    mu.iter().copied().collect()
}
