//! Marginal maximum-likelihood estimation, BIC, and model selection.

mod nelder_mead;
mod quasi_newton;

pub use nelder_mead::{nelder_mead, NmOptions, NmResult};
pub use quasi_newton::{bfgs, QnOptions, QnResult};

use std::collections::BTreeSet;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kalman::{diffuse_filter, diffuse_smoother, extract_component, ComponentSeries};
use crate::models::{
    build_model, recover_constant_scale, CurveFamily, CurveParams, Deviations, GrowthModelSpec,
    Mode, NoiseParams,
};
use crate::ssm::ObservationSeries;

/// Variance parameters are estimated on a log scale bounded below here, so
/// boundary estimates print as (effectively) zero without producing a
/// singular filter.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Shape-parameter bounds for the Richards exponent.
pub const NU_BOUNDS: (f64, f64) = (1e-3, 1e3);

/// Free parameters of a growth-model fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamName {
    Phi,
    Rho,
    Nu,
    Sigma2Eps,
    Sigma2Eta,
    Sigma2Dev,
}

impl ParamName {
    pub fn as_str(self) -> &'static str {
        match self {
            ParamName::Phi => "phi",
            ParamName::Rho => "rho",
            ParamName::Nu => "nu",
            ParamName::Sigma2Eps => "sigma2_eps",
            ParamName::Sigma2Eta => "sigma2_eta",
            ParamName::Sigma2Dev => "sigma2_dev",
        }
    }
}

impl std::fmt::Display for ParamName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A concrete point in parameter space: curve parameters plus variances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamPoint {
    pub curve: CurveParams,
    pub noise: NoiseParams,
}

impl ParamPoint {
    pub fn from_spec(spec: &GrowthModelSpec) -> Self {
        Self { curve: spec.curve, noise: spec.noise }
    }

    pub fn get(&self, name: ParamName) -> f64 {
        match name {
            ParamName::Phi => self.curve.phi,
            ParamName::Rho => self.curve.rho,
            ParamName::Nu => self.curve.nu,
            ParamName::Sigma2Eps => self.noise.sigma2_eps,
            ParamName::Sigma2Eta => self.noise.sigma2_eta,
            ParamName::Sigma2Dev => self.noise.sigma2_dev,
        }
    }

    pub fn set(&mut self, name: ParamName, value: f64) {
        match name {
            ParamName::Phi => self.curve.phi = value,
            ParamName::Rho => self.curve.rho = value,
            ParamName::Nu => self.curve.nu = value,
            ParamName::Sigma2Eps => self.noise.sigma2_eps = value,
            ParamName::Sigma2Eta => self.noise.sigma2_eta = value,
            ParamName::Sigma2Dev => self.noise.sigma2_dev = value,
        }
    }

    pub fn apply_to(&self, spec: &GrowthModelSpec) -> GrowthModelSpec {
        GrowthModelSpec { curve: self.curve, noise: self.noise, ..spec.clone() }
    }
}

/// The free-parameter view of a spec: which parameters move during
/// estimation and how they map to the unconstrained scale (natural log for
/// all of them; variances floor at [`VARIANCE_FLOOR`], the Richards
/// exponent clamps to [`NU_BOUNDS`]).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamSpace {
    names: Vec<ParamName>,
}

impl ParamSpace {
    /// Free parameters for a spec: the family's curve parameters, the
    /// observation variance, the scaling factor in semiparametric mode, and
    /// the deviation scale when random-walk deviations are identifiable
    /// (at least two replicates). `fixed` removes parameters from the set.
    pub fn for_spec(spec: &GrowthModelSpec, fixed: &BTreeSet<ParamName>) -> Self {
        let mut names = Vec::new();
        if spec.family.uses_phi() {
            names.push(ParamName::Phi);
        }
        if spec.family.uses_rho() {
            names.push(ParamName::Rho);
        }
        if spec.family.uses_nu() {
            names.push(ParamName::Nu);
        }
        names.push(ParamName::Sigma2Eps);
        if spec.mode == Mode::Semiparametric {
            names.push(ParamName::Sigma2Eta);
        }
        if spec.deviations == Deviations::RandomWalk && spec.replicates >= 2 {
            names.push(ParamName::Sigma2Dev);
        }
        names.retain(|n| !fixed.contains(n));
        Self { names }
    }

    pub fn names(&self) -> &[ParamName] {
        &self.names
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    /// Map a point to the unconstrained scale.
    pub fn transform(&self, point: &ParamPoint) -> DVector<f64> {
        DVector::from_iterator(
            self.names.len(),
            self.names.iter().map(|&n| point.get(n).max(VARIANCE_FLOOR).ln()),
        )
    }

    /// Map an unconstrained vector back, leaving parameters outside the
    /// space at their `base` values. The result always lies in the valid
    /// region: every parameter floors at [`VARIANCE_FLOOR`] and the
    /// Richards exponent clamps to [`NU_BOUNDS`].
    pub fn inverse(&self, x: &DVector<f64>, base: &ParamPoint) -> ParamPoint {
        let mut p = *base;
        for (i, &n) in self.names.iter().enumerate() {
            let mut v = x[i].exp().max(VARIANCE_FLOOR);
            if n == ParamName::Nu {
                v = v.clamp(NU_BOUNDS.0, NU_BOUNDS.1);
            }
            p.set(n, v);
        }
        p
    }
}

/// Optimizer selection and budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    NelderMead,
    QuasiNewtonFd,
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nelder-mead" | "nelder_mead" => Ok(Algorithm::NelderMead),
            "quasi-newton-fd" | "quasi_newton_fd" => Ok(Algorithm::QuasiNewtonFd),
            other => Err(Error::Usage(format!("unknown algorithm: {other}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    pub algorithm: Algorithm,
    /// Objective-evaluation budget per start.
    pub max_evals: usize,
    /// Convergence tolerance on the log-likelihood change.
    pub tol: f64,
    /// Number of dispersed starting points.
    pub multistart: usize,
    pub seed: u64,
    /// Parameters held at their spec values.
    pub fixed: BTreeSet<ParamName>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::NelderMead,
            max_evals: 2000,
            tol: 1e-8,
            multistart: 5,
            seed: 0,
            fixed: BTreeSet::new(),
        }
    }
}

impl OptimizerConfig {
    pub fn with_budget(max_evals: usize, multistart: usize, seed: u64) -> Self {
        Self { max_evals, multistart, seed, ..Default::default() }
    }
}

/// How the optimization went.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub algorithm: Algorithm,
    pub iterations: usize,
    pub evals: usize,
    pub restarts: usize,
    pub converged: bool,
    /// Final simplex spread (simplex search) or gradient norm (BFGS).
    pub final_spread: f64,
    /// Final log-likelihood reached from each start.
    pub start_logliks: Vec<f64>,
    /// Starts disagree by more than 1e-4 in log-likelihood.
    pub multimodal: bool,
    /// Best log-likelihood after each improving step of the best start.
    pub history: Vec<f64>,
    pub warnings: Vec<String>,
}

/// A fitted model: estimates, fit criteria, and smoothed components.
#[derive(Debug, Clone)]
pub struct FitResult {
    /// The spec as passed in (starting values untouched).
    pub spec: GrowthModelSpec,
    /// Optimized parameter values (fixed ones carried through).
    pub estimates: ParamPoint,
    pub free: Vec<ParamName>,
    pub loglik: f64,
    pub bic: f64,
    /// Non-missing scalar observations.
    pub n_used: usize,
    /// Absorbed diffuse dimension.
    pub d: usize,
    /// Smoothed mean curve with variances, at every grid time.
    pub mean_curve: ComponentSeries,
    /// Per-replicate deviation curves (random-walk deviations only).
    pub deviations: Vec<(String, ComponentSeries)>,
    /// `(constant, scale)` recovered from the smoothed state; parametric
    /// mode only.
    pub constant_scale: Option<(f64, f64)>,
    pub convergence: ConvergenceReport,
}

impl FitResult {
    /// The spec with the estimates substituted in.
    pub fn fitted_spec(&self) -> GrowthModelSpec {
        self.estimates.apply_to(&self.spec)
    }

    pub fn k_free(&self) -> usize {
        self.free.len()
    }
}

/// BIC with effective sample size `n_used - d`: non-missing scalars minus
/// the absorbed diffuse dimension (artificial all-missing grid points carry
/// no likelihood terms and are excluded from `n_used` upstream).
pub fn bic(loglik: f64, k_free: usize, n_used: usize, d: usize) -> Result<f64> {
    if n_used <= d {
        return Err(Error::SampleTooSmall { n_used, d });
    }
    Ok(-2.0 * loglik + (k_free as f64) * ((n_used - d) as f64).ln())
}

/// Starting values. Heuristics:
/// - `rho`: log-range of the data over the time range;
/// - `phi`, `nu`: 1;
/// - `sigma2_eps`: 10% of the residual variance around a coarse smoother;
/// - `sigma2_eta`: 1;
/// - `sigma2_dev`: between-replicate variance of the final observed values.
pub fn initial_values(spec: &GrowthModelSpec, series: &ObservationSeries) -> Result<ParamPoint> {
    let mut observed: Vec<(usize, f64)> = Vec::new();
    for (j, step) in series.steps().iter().enumerate() {
        for e in step {
            if let Some(v) = e.value {
                observed.push((j, v));
            }
        }
    }
    if observed.len() < 5 {
        return Err(Error::TooFewPoints { needed: 5, got: observed.len() });
    }

    let times = series.grid().times();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(_, v) in &observed {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let t_range = (times[times.len() - 1] - times[0]).max(1e-9);
    let rho0 = ((1.0 + (hi - lo).abs()).ln() / t_range).clamp(1e-3, 10.0);

    // Coarse smoother: per-step pooled means, then a moving average.
    let n_steps = times.len();
    let mut sums = vec![0.0; n_steps];
    let mut counts = vec![0usize; n_steps];
    for &(j, v) in &observed {
        sums[j] += v;
        counts[j] += 1;
    }
    let step_means: Vec<Option<f64>> = sums
        .iter()
        .zip(&counts)
        .map(|(s, c)| (*c > 0).then(|| s / *c as f64))
        .collect();
    let window = (n_steps / 10).max(3);
    let smooth_at = |j: usize| -> f64 {
        let lo = j.saturating_sub(window / 2);
        let hi = (j + window / 2 + 1).min(n_steps);
        let mut s = 0.0;
        let mut c = 0usize;
        for sm in step_means[lo..hi].iter().flatten() {
            s += sm;
            c += 1;
        }
        s / c.max(1) as f64
    };
    let mut resid_var = 0.0;
    for &(j, v) in &observed {
        let r = v - smooth_at(j);
        resid_var += r * r;
    }
    resid_var /= observed.len() as f64;
    let sigma2_eps0 = (0.1 * resid_var).max(1e-8);

    // Between-replicate spread of each replicate's final observed value;
    // only worth computing when deviations are in the model.
    let sigma2_dev0 = if spec.deviations == Deviations::RandomWalk {
        let mut finals: std::collections::BTreeMap<&str, f64> = Default::default();
        for step in series.steps() {
            for e in step {
                if let Some(v) = e.value {
                    finals.insert(e.replicate.as_str(), v);
                }
            }
        }
        if finals.len() >= 2 {
            let vals: Vec<f64> = finals.values().copied().collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var =
                vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (vals.len() - 1) as f64;
            var.max(1e-8)
        } else {
            1e-4
        }
    } else {
        1e-4
    };

    Ok(ParamPoint {
        curve: CurveParams { phi: 1.0, rho: rho0, nu: 1.0 },
        noise: NoiseParams { sigma2_eps: sigma2_eps0, sigma2_eta: 1.0, sigma2_dev: sigma2_dev0 },
    })
}

/// Maximize the marginal likelihood of `spec` over its free parameters,
/// then smooth at the optimum and extract components. Deterministic for a
/// fixed `cfg.seed`. Non-convergence within the budget is reported, not an
/// error; an error is raised when no starting point has a finite
/// likelihood.
pub fn fit(
    spec: &GrowthModelSpec,
    series: &ObservationSeries,
    cfg: &OptimizerConfig,
) -> Result<FitResult> {
    let mut warnings = spec.validate()?;
    let space = ParamSpace::for_spec(spec, &cfg.fixed);

    let mut base = ParamPoint::from_spec(spec);
    if space.dim() > 0 {
        let heur = initial_values(spec, series)?;
        for &n in space.names() {
            base.set(n, heur.get(n));
        }
    }
    let x0 = space.transform(&base);

    let objective = |x: &DVector<f64>| -> f64 {
        let point = space.inverse(x, &base);
        let cand = point.apply_to(spec);
        match build_model(&cand, series).and_then(|m| diffuse_filter(&m, series)) {
            Ok(fr) => -fr.loglik,
            Err(_) => f64::INFINITY,
        }
    };

    // Dispersed starts: the heuristic point plus seeded log-scale jitter.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_starts = cfg.multistart.max(1);
    let starts: Vec<DVector<f64>> = (0..n_starts)
        .map(|i| {
            if i == 0 {
                x0.clone()
            } else {
                let jitter: DVector<f64> = DVector::from_fn(space.dim(), |_, _| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    0.75 * z
                });
                &x0 + jitter
            }
        })
        .collect();

    let mut best: Option<(DVector<f64>, f64)> = None;
    let mut start_logliks = Vec::with_capacity(n_starts);
    let mut total_evals = 0usize;
    let mut total_iterations = 0usize;
    let mut best_report: Option<(bool, f64, usize, Vec<f64>)> = None;

    for start in &starts {
        let (x, fval, converged, spread, restarts, history, evals, iters) = match cfg.algorithm {
            Algorithm::NelderMead => {
                let mut f = objective;
                let r = nelder_mead(
                    &mut f,
                    start,
                    &NmOptions { max_evals: cfg.max_evals, tol: cfg.tol, ..Default::default() },
                );
                (r.x, r.f, r.converged, r.final_spread, r.restarts_used, r.history, r.evals, r.iterations)
            }
            Algorithm::QuasiNewtonFd => {
                let mut f = objective;
                let r = bfgs(
                    &mut f,
                    start,
                    &QnOptions { max_evals: cfg.max_evals, tol: cfg.tol, ..Default::default() },
                );
                (r.x, r.f, r.converged, r.grad_norm, 0, r.history, r.evals, r.iterations)
            }
        };
        total_evals += evals;
        total_iterations += iters;
        start_logliks.push(-fval);
        let is_better = best.as_ref().is_none_or(|(_, bf)| fval < *bf);
        if is_better {
            best = Some((x, fval));
            best_report = Some((converged, spread, restarts, history.iter().map(|f| -f).collect()));
        }
    }

    let (x_hat, f_hat) = best.expect("at least one start");
    if !f_hat.is_finite() {
        return Err(Error::NoFiniteStart);
    }

    let finite: Vec<f64> = start_logliks.iter().copied().filter(|v| v.is_finite()).collect();
    let multimodal = finite
        .iter()
        .fold(None::<(f64, f64)>, |acc, &v| {
            Some(acc.map_or((v, v), |(lo, hi)| (lo.min(v), hi.max(v))))
        })
        .is_some_and(|(lo, hi)| hi - lo > 1e-4);
    if multimodal {
        warnings.push("starts disagree in log-likelihood by more than 1e-4".to_string());
    }

    let estimates = space.inverse(&x_hat, &base);
    let spec_hat = estimates.apply_to(spec);
    let model = build_model(&spec_hat, series)?;
    let fr = diffuse_filter(&model, series)?;
    let smoothed = diffuse_smoother(&model, series)?;

    let m = model.state_dim();
    let mut selector = vec![0.0; m];
    selector[0] = 1.0;
    let mean_curve = extract_component(&smoothed, &selector)?;

    let mut deviations = Vec::new();
    if spec.deviations == Deviations::RandomWalk {
        for (i, label) in series.replicates().into_iter().enumerate() {
            let mut sel = vec![0.0; m];
            sel[2 + i] = 1.0;
            deviations.push((label, extract_component(&smoothed, &sel)?));
        }
    }

    let constant_scale = (spec.mode == Mode::Parametric)
        .then(|| recover_constant_scale(&smoothed, &spec_hat))
        .transpose()?;

    let (converged, final_spread, restarts, history) = best_report.expect("report for best start");
    let bic_value = bic(fr.loglik, space.dim(), fr.n_used, model.diffuse_count())?;

    Ok(FitResult {
        spec: spec.clone(),
        estimates,
        free: space.names().to_vec(),
        loglik: fr.loglik,
        bic: bic_value,
        n_used: fr.n_used,
        d: fr.d_absorbed,
        mean_curve,
        deviations,
        constant_scale,
        convergence: ConvergenceReport {
            algorithm: cfg.algorithm,
            iterations: total_iterations,
            evals: total_evals,
            restarts,
            converged,
            final_spread,
            start_logliks,
            multimodal,
            history,
            warnings,
        },
    })
}

/// Root-mean-square error of the fitted values against the non-missing
/// observations: the smoothed mean curve plus, under random-walk
/// deviations, the replicate's own deviation curve.
pub fn in_sample_rmse(fit: &FitResult, series: &ObservationSeries) -> f64 {
    let labels = series.replicates();
    let mut sq = 0.0;
    let mut n = 0usize;
    for (j, step) in series.steps().iter().enumerate() {
        for e in step {
            let Some(y) = e.value else { continue };
            let mut fitted = fit.mean_curve.estimates[j];
            if !fit.deviations.is_empty() {
                let slot = labels.iter().position(|l| *l == e.replicate).unwrap();
                fitted += fit.deviations[slot].1.estimates[j];
            }
            sq += (y - fitted) * (y - fitted);
            n += 1;
        }
    }
    (sq / n.max(1) as f64).sqrt()
}

/// Ranked candidate fits, best BIC first.
#[derive(Debug)]
pub struct SelectionResult {
    pub ranked: Vec<FitResult>,
    /// Candidates that failed, as `(candidate label, error message)`.
    pub failures: Vec<(String, String)>,
}

impl SelectionResult {
    pub fn winner(&self) -> &FitResult {
        &self.ranked[0]
    }
}

/// Fit every `(family, mode)` candidate and rank by BIC. Candidates run in
/// parallel; each uses the same optimizer configuration, so the outcome is
/// deterministic regardless of thread scheduling.
pub fn select_model(
    families: &[CurveFamily],
    modes: &[Mode],
    deviations: Deviations,
    series: &ObservationSeries,
    cfg: &OptimizerConfig,
) -> Result<SelectionResult> {
    let replicates = series.replicates().len();
    let mut candidates = Vec::new();
    for &family in families {
        for &mode in modes {
            let mut spec = GrowthModelSpec::new(family, mode);
            spec.replicates = replicates;
            spec.deviations = deviations;
            if deviations == Deviations::RandomWalk {
                spec.noise.sigma2_dev = 1e-3;
            }
            if mode == Mode::Semiparametric {
                spec.noise.sigma2_eta = 1.0;
            }
            candidates.push(spec);
        }
    }
    if candidates.is_empty() {
        return Err(Error::Usage("no candidate models".into()));
    }

    let outcomes: Vec<(String, Result<FitResult>)> = candidates
        .par_iter()
        .map(|spec| {
            let label = format!("{}/{}", spec.family, spec.mode);
            (label, fit(spec, series, cfg))
        })
        .collect();

    let mut ranked = Vec::new();
    let mut failures = Vec::new();
    for (label, outcome) in outcomes {
        match outcome {
            Ok(f) => ranked.push(f),
            Err(e) => failures.push((label, e.to_string())),
        }
    }
    if ranked.is_empty() {
        let detail = failures
            .iter()
            .map(|(l, e)| format!("{l}: {e}"))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Error::AllCandidatesFailed(detail));
    }
    ranked.sort_by(|a, b| a.bic.partial_cmp(&b.bic).unwrap());
    Ok(SelectionResult { ranked, failures })
}
