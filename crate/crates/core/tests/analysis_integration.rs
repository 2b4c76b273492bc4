//! Post-fit analytics against closed-form and Monte-Carlo oracles.

mod common;

use growthss::analysis::{confidence_band, curve_difference, growth_rate};
use growthss::estimate::{fit, OptimizerConfig};
use growthss::io::read_long_csv;
use growthss::kalman::ComponentSeries;
use growthss::models::{eval_g, CurveFamily, CurveParams, GrowthModelSpec, Mode, NoiseParams};
use growthss::ssm::ObservationSeries;

fn workspace_path(rel: &str) -> std::path::PathBuf {
    std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

/// Closed-form check: for a logistic mean curve, the peak slope is
/// `scale * rho / 4` at `t = ln(phi) / rho`.
#[test]
fn logistic_peak_rate_matches_the_analytic_slope() {
    let (constant, scale, phi, rho) = (0.5, 9.5, 20.0, 0.5);
    let params = CurveParams { phi, rho, nu: 1.0 };
    let step = 0.5;
    let times: Vec<f64> = (0..47).map(|i| step * i as f64).collect();
    let estimates: Vec<f64> = times
        .iter()
        .map(|&t| constant + scale * eval_g(CurveFamily::Logistic, &params, t).unwrap())
        .collect();
    let mean = ComponentSeries {
        times: times.clone(),
        estimates,
        variances: vec![0.0; times.len()],
    };
    let rate = growth_rate(&mean).unwrap();

    let per_hour = rate.max_rate / rate.step;
    let analytic = scale * rho / 4.0;
    assert!(
        (per_hour - analytic).abs() <= 0.02 * analytic,
        "per-hour peak rate {per_hour} vs analytic {analytic}"
    );
    let t_peak = phi.ln() / rho;
    assert!(
        (rate.time_of_max - t_peak).abs() <= step + 1e-12,
        "time of max {} vs analytic {t_peak}",
        rate.time_of_max
    );
}

#[test]
fn tractors_band_widens_toward_the_ends() {
    let data = read_long_csv(workspace_path("data/greek_tractors.csv")).unwrap();
    let series = ObservationSeries::from_dataset(&data, "greece").unwrap();
    let mut spec = GrowthModelSpec::new(CurveFamily::Logistic, Mode::Parametric);
    spec.noise = NoiseParams { sigma2_eps: 3e-4, sigma2_eta: 0.0, sigma2_dev: 0.0 };
    let cfg = OptimizerConfig { multistart: 2, max_evals: 800, ..Default::default() };
    let fitted = fit(&spec, &series, &cfg).unwrap();
    let band = confidence_band(&fitted.mean_curve, 0.95).unwrap();

    let half = |j: usize| (band.upper[j] - band.lower[j]) / 2.0;
    let n = band.times.len();
    let interior: f64 = (n / 3..2 * n / 3).map(half).sum::<f64>() / (n / 3) as f64;
    let ends = half(0).max(half(n - 1));
    assert!(
        ends / interior > 1.0,
        "band should widen at the ends: ends {ends}, interior {interior}"
    );
}

/// Halving the grid step by missing-value augmentation moves the time of
/// the maximum rate by at most one coarse step on a smooth curve.
#[test]
fn time_of_max_is_grid_resolution_stable() {
    use growthss::io::augment_grid;
    use growthss::models::build_model;
    use growthss::ssm::Dataset;

    let mut spec = GrowthModelSpec::new(CurveFamily::Logistic, Mode::Parametric);
    spec.curve = CurveParams { phi: 20.0, rho: 0.5, nu: 1.0 };
    spec.noise.sigma2_eps = 1e-6;
    let coarse: Vec<f64> = (0..24).map(|i| i as f64).collect();
    let (series, _) = common::sim_growth(&spec, &coarse, 0.5, 9.5, 77);

    let smooth_rate = |series: &ObservationSeries| {
        let model = build_model(&spec, series).unwrap();
        let smoothed = growthss::kalman::diffuse_smoother(&model, series).unwrap();
        let mean = growthss::kalman::extract_component(&smoothed, &[1.0, 0.0]).unwrap();
        growth_rate(&mean).unwrap()
    };
    let coarse_rate = smooth_rate(&series);

    let mut records = Vec::new();
    for (step, &t) in series.steps().iter().zip(series.grid().times()) {
        for e in step {
            records.push(growthss::ssm::DataRecord {
                group: "sim".into(),
                replicate: e.replicate.clone(),
                time: t,
                value: e.value,
            });
        }
    }
    let finer = augment_grid(&Dataset::new(records).unwrap(), 0.5).unwrap();
    let fine_series = ObservationSeries::from_dataset(&finer, "sim").unwrap();
    let fine_rate = smooth_rate(&fine_series);

    assert_eq!(coarse_rate.step, 1.0);
    assert_eq!(fine_rate.step, 0.5);
    assert!(
        (coarse_rate.time_of_max - fine_rate.time_of_max).abs() <= coarse_rate.step + 1e-12,
        "coarse {} vs fine {}",
        coarse_rate.time_of_max,
        fine_rate.time_of_max
    );
}

/// Coverage of the 95% difference band between two independently fitted
/// groups, across simulated replications with known truth.
#[test]
fn difference_band_coverage_is_near_nominal() {
    let times: Vec<f64> = (0..25).map(|i| i as f64).collect();
    let truth_a = (1.0, 0.50);
    let truth_b = (0.8, 0.55);
    let make_spec = || {
        let mut spec = GrowthModelSpec::new(CurveFamily::Linear, Mode::Parametric);
        spec.noise = NoiseParams { sigma2_eps: 0.04, sigma2_eta: 0.0, sigma2_dev: 0.0 };
        spec
    };
    let cfg = OptimizerConfig { multistart: 1, max_evals: 200, ..Default::default() };

    let mut inside = 0usize;
    let mut total = 0usize;
    for seed in 0..200u64 {
        let spec = make_spec();
        let (series_a, _) = common::sim_growth(&spec, &times, truth_a.0, truth_a.1, 2 * seed);
        let (series_b, _) =
            common::sim_growth(&spec, &times, truth_b.0, truth_b.1, 2 * seed + 1);
        let fit_a = fit(&spec, &series_a, &cfg).unwrap();
        let fit_b = fit(&spec, &series_b, &cfg).unwrap();
        let (_, band) = curve_difference(&fit_a.mean_curve, &fit_b.mean_curve, 0.95).unwrap();
        for (j, &t) in times.iter().enumerate() {
            let truth = (truth_a.0 + truth_a.1 * t) - (truth_b.0 + truth_b.1 * t);
            if band.lower[j] <= truth && truth <= band.upper[j] {
                inside += 1;
            }
            total += 1;
        }
    }
    let coverage = inside as f64 / total as f64;
    assert!(
        (0.90..=0.99).contains(&coverage),
        "difference-band coverage {coverage} outside [0.90, 0.99]"
    );
}
