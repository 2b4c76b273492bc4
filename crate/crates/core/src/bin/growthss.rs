//! Command-line workflows: fit, select, predict, compare, simulate, plot.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use growthss::analysis::{confidence_band, curve_difference, growth_rate};
use growthss::error::{Error, Result};
use growthss::estimate::{
    fit, in_sample_rmse, select_model, Algorithm, OptimizerConfig,
};
use growthss::io::{
    augment_grid, dataset_fingerprint, plot_component, plot_difference, read_difference_csv,
    read_long_csv, scale_values, write_component_csv, write_dataset_csv, write_difference_csv,
    ComponentRow, DifferenceRow, FitArtifact, PlotConfig,
};
use growthss::kalman::{diffuse_smoother, extract_component, ComponentSeries};
use growthss::models::{
    build_model, eval_g, CurveFamily, CurveParams, Deviations, GrowthModelSpec, Mode, NoiseParams,
};
use growthss::ssm::{simulate, Dataset, ObservationSeries, TimeGrid};

#[derive(Parser)]
#[command(
    name = "growthss",
    about = "Fit growth/decay curves to hierarchical longitudinal data via state-space models",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one model and write a fit artifact.
    Fit(FitArgs),
    /// Fit several curve families and rank them by BIC.
    Select(SelectArgs),
    /// Evaluate a fitted model's components on a uniform grid.
    Predict(PredictArgs),
    /// Difference of two fitted mean curves with a confidence band.
    Compare(CompareArgs),
    /// Draw a synthetic dataset from a fully specified model.
    Simulate(SimulateArgs),
    /// Render an artifact or a comparison as an SVG chart.
    Plot(PlotArgs),
}

#[derive(Args)]
struct DataOpts {
    /// Long-format CSV with columns group,replicate,time,value.
    #[arg(long)]
    data: PathBuf,
    /// Group to analyze (defaults to the only group in the file).
    #[arg(long)]
    group: Option<String>,
    /// Multiply all values by this factor at ingest.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Insert missing-response records on this uniform grid (hours) before
    /// fitting, so components are evaluated there too.
    #[arg(long)]
    grid_step: Option<f64>,
}

#[derive(Args)]
struct OptOpts {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Objective evaluations per start.
    #[arg(long, default_value_t = 2000)]
    max_evals: usize,
    /// Number of dispersed starting points.
    #[arg(long, default_value_t = 5)]
    multistart: usize,
    /// Optimizer: nelder-mead or quasi-newton-fd.
    #[arg(long, default_value = "nelder-mead")]
    algorithm: String,
}

impl OptOpts {
    fn config(&self) -> Result<OptimizerConfig> {
        Ok(OptimizerConfig {
            algorithm: self.algorithm.parse::<Algorithm>()?,
            max_evals: self.max_evals,
            multistart: self.multistart,
            seed: self.seed,
            tol: 1e-8,
            fixed: BTreeSet::new(),
        })
    }
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataOpts,
    /// Curve family: linear, exponential, logistic, gompertz, richards.
    #[arg(long)]
    family: String,
    /// parametric or semiparametric.
    #[arg(long)]
    mode: String,
    /// Replicate deviation model: none or random-walk.
    #[arg(long, default_value = "none")]
    deviations: String,
    #[command(flatten)]
    opt: OptOpts,
    /// Output artifact path (JSON).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    data: DataOpts,
    /// Comma-separated curve families to try.
    #[arg(long, default_value = "linear,logistic,gompertz,richards")]
    families: String,
    /// Comma-separated modes to try.
    #[arg(long, default_value = "semiparametric")]
    mode: String,
    #[arg(long, default_value = "none")]
    deviations: String,
    #[command(flatten)]
    opt: OptOpts,
    /// Directory for the ranked artifacts and the winner copy.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    /// Fit artifact written by `fit` or `select`.
    #[arg(long)]
    artifact: PathBuf,
    /// The dataset the artifact was fitted on.
    #[arg(long)]
    data: PathBuf,
    /// Uniform grid step (hours) for the prediction times.
    #[arg(long)]
    grid_step: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    family: String,
    #[arg(long, default_value = "parametric")]
    mode: String,
    #[arg(long, default_value = "none")]
    deviations: String,
    #[arg(long, default_value_t = 1)]
    replicates: usize,
    #[arg(long, default_value_t = 1.0)]
    phi: f64,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma2_eps: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma2_eta: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma2_dev: f64,
    /// Curve intercept: f(t) = constant + curve-scale * g(t).
    #[arg(long, default_value_t = 0.0)]
    constant: f64,
    #[arg(long, default_value_t = 1.0)]
    curve_scale: f64,
    /// Last grid time (hours); the grid starts at 0.
    #[arg(long)]
    t_max: f64,
    #[arg(long, default_value_t = 0.5)]
    grid_step: f64,
    #[arg(long, default_value = "sim")]
    group: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PlotArgs {
    /// Fit artifact to plot.
    #[arg(long, conflicts_with = "compare")]
    artifact: Option<PathBuf>,
    /// Comparison CSV (from `compare`) to plot.
    #[arg(long)]
    compare: Option<PathBuf>,
    /// Overlay the observed points of the fitted group.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprintln!("ERROR: {e}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ERROR: {e}");
            ExitCode::from(u8::try_from(e.exit_code()).unwrap_or(1))
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit(args) => run_fit(args),
        Command::Select(args) => run_select(args),
        Command::Predict(args) => run_predict(args),
        Command::Compare(args) => run_compare(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Plot(args) => run_plot(args),
    }
}

struct LoadedData {
    series: ObservationSeries,
    group: String,
    fingerprint: String,
    n_records: usize,
}

fn load_series(opts: &DataOpts) -> Result<LoadedData> {
    let raw = read_long_csv(&opts.data)?;
    let fingerprint = dataset_fingerprint(&raw);
    let n_records = raw.len();
    let scaled = scale_values(&raw, opts.scale)?;
    let data = match opts.grid_step {
        Some(step) => augment_grid(&scaled, step)?,
        None => scaled,
    };
    let groups = data.groups();
    let group = match &opts.group {
        Some(g) => {
            if !groups.iter().any(|x| x == g) {
                return Err(Error::Usage(format!(
                    "group {g:?} not in data (available: {})",
                    groups.join(", ")
                )));
            }
            g.clone()
        }
        None if groups.len() == 1 => groups[0].clone(),
        None => {
            return Err(Error::Usage(format!(
                "multiple groups in data; pick one with --group (available: {})",
                groups.join(", ")
            )))
        }
    };
    let series = ObservationSeries::from_dataset(&data, &group)?;
    Ok(LoadedData { series, group, fingerprint, n_records })
}

fn spec_from_flags(
    family: &str,
    mode: &str,
    deviations: &str,
    replicates: usize,
) -> Result<GrowthModelSpec> {
    let mut spec = GrowthModelSpec::new(family.parse()?, mode.parse()?);
    spec.deviations = deviations.parse()?;
    spec.replicates = replicates;
    if spec.mode == Mode::Semiparametric {
        spec.noise.sigma2_eta = 1.0;
    }
    if spec.deviations == Deviations::RandomWalk {
        spec.noise.sigma2_dev = 1e-3;
    }
    Ok(spec)
}

fn print_fit_summary(label: &str, fitted: &growthss::estimate::FitResult, rmse: f64) {
    let spec = fitted.fitted_spec();
    let mut params = vec![
        format!("sigma2_eps={:.6e}", spec.noise.sigma2_eps),
    ];
    if spec.family.uses_phi() {
        params.push(format!("phi={:.4}", spec.curve.phi));
    }
    if spec.family.uses_rho() {
        params.push(format!("rho={:.4}", spec.curve.rho));
    }
    if spec.family.uses_nu() {
        params.push(format!("nu={:.4}", spec.curve.nu));
    }
    if spec.mode == Mode::Semiparametric {
        params.push(format!("sigma2_eta={:.4}", spec.noise.sigma2_eta));
    }
    if spec.deviations == Deviations::RandomWalk {
        params.push(format!("sigma2_dev={:.5}", spec.noise.sigma2_dev));
    }
    if let Some((c, s)) = fitted.constant_scale {
        params.push(format!("constant={c:.4}"));
        params.push(format!("scale={s:.4}"));
    }
    println!(
        "{label}: loglik={:.4} bic={:.4} rmse={rmse:.5} converged={} {}",
        fitted.loglik,
        fitted.bic,
        fitted.convergence.converged,
        params.join(" ")
    );
}

fn run_fit(args: FitArgs) -> Result<()> {
    let loaded = load_series(&args.data)?;
    let spec = spec_from_flags(
        &args.family,
        &args.mode,
        &args.deviations,
        loaded.series.replicates().len(),
    )?;
    let cfg = args.opt.config()?;
    let fitted = fit(&spec, &loaded.series, &cfg)?;
    let rmse = in_sample_rmse(&fitted, &loaded.series);
    let artifact = FitArtifact::from_fit(
        &fitted,
        &loaded.group,
        args.data.scale,
        args.data.grid_step,
        loaded.fingerprint,
        loaded.n_records,
        0.95,
    )?;
    artifact.write(&args.out)?;
    print_fit_summary(&format!("{}/{}", spec.family, spec.mode), &fitted, rmse);
    if let Ok(rate) = growth_rate(&fitted.mean_curve) {
        println!(
            "max growth rate {:.4} per {:.2} h step at t={:.2} h",
            rate.max_rate, rate.step, rate.time_of_max
        );
    }
    println!("artifact written to {}", args.out.display());
    Ok(())
}

fn run_select(args: SelectArgs) -> Result<()> {
    let loaded = load_series(&args.data)?;
    let families = args
        .families
        .split(',')
        .map(|s| s.trim().parse::<CurveFamily>())
        .collect::<Result<Vec<_>>>()?;
    let modes = args
        .mode
        .split(',')
        .map(|s| s.trim().parse::<Mode>())
        .collect::<Result<Vec<_>>>()?;
    let deviations: Deviations = args.deviations.parse()?;
    let cfg = args.opt.config()?;
    let selection = select_model(&families, &modes, deviations, &loaded.series, &cfg)?;

    std::fs::create_dir_all(&args.out)?;
    for (rank, fitted) in selection.ranked.iter().enumerate() {
        let rmse = in_sample_rmse(fitted, &loaded.series);
        let label = format!("{}/{}", fitted.spec.family, fitted.spec.mode);
        print_fit_summary(&format!("#{} {label}", rank + 1), fitted, rmse);
        let artifact = FitArtifact::from_fit(
            fitted,
            &loaded.group,
            args.data.scale,
            args.data.grid_step,
            loaded.fingerprint.clone(),
            loaded.n_records,
            0.95,
        )?;
        let name = format!("fit_{}_{}.json", fitted.spec.family, fitted.spec.mode);
        artifact.write(args.out.join(name))?;
        if rank == 0 {
            artifact.write(args.out.join("winner.json"))?;
        }
    }
    for (label, err) in &selection.failures {
        eprintln!("warning: candidate {label} failed: {err}");
    }
    println!(
        "winner: {}/{} (bic {:.4}); artifacts in {}",
        selection.winner().spec.family,
        selection.winner().spec.mode,
        selection.winner().bic,
        args.out.display()
    );
    Ok(())
}

fn run_predict(args: PredictArgs) -> Result<()> {
    let artifact = FitArtifact::read(&args.artifact)?;
    let raw = read_long_csv(&args.data)?;
    if dataset_fingerprint(&raw) != artifact.data_sha256 {
        return Err(Error::Artifact(
            "data file does not match the artifact's data fingerprint".into(),
        ));
    }
    let scaled = scale_values(&raw, artifact.scale)?;
    let mut data = scaled;
    if let Some(step) = artifact.grid_step {
        data = augment_grid(&data, step)?;
    }
    data = augment_grid(&data, args.grid_step)?;
    let series = ObservationSeries::from_dataset(&data, &artifact.group)?;

    let spec = artifact.fitted_spec();
    let model = build_model(&spec, &series)?;
    let smoothed = diffuse_smoother(&model, &series)?;
    let m = model.state_dim();
    let mut selector = vec![0.0; m];
    selector[0] = 1.0;
    let mean = extract_component(&smoothed, &selector)?;
    let band = confidence_band(&mean, 0.95)?;

    let mut rows = Vec::new();
    for j in 0..mean.len() {
        rows.push(ComponentRow {
            component: "mean".into(),
            replicate: String::new(),
            time: mean.times[j],
            estimate: mean.estimates[j],
            variance: mean.variances[j],
            lower: band.lower[j],
            upper: band.upper[j],
        });
    }
    if spec.deviations == Deviations::RandomWalk {
        for (i, label) in series.replicates().into_iter().enumerate() {
            let mut sel = vec![0.0; m];
            sel[2 + i] = 1.0;
            let dev = extract_component(&smoothed, &sel)?;
            let dev_band = confidence_band(&dev, 0.95)?;
            for j in 0..dev.len() {
                rows.push(ComponentRow {
                    component: "deviation".into(),
                    replicate: label.clone(),
                    time: dev.times[j],
                    estimate: dev.estimates[j],
                    variance: dev.variances[j],
                    lower: dev_band.lower[j],
                    upper: dev_band.upper[j],
                });
            }
        }
    }
    let file = std::fs::File::create(&args.out)?;
    write_component_csv(std::io::BufWriter::new(file), &rows)?;
    println!("{} rows written to {}", rows.len(), args.out.display());
    Ok(())
}

fn run_compare(args: CompareArgs) -> Result<()> {
    let a = FitArtifact::read(&args.a)?;
    let b = FitArtifact::read(&args.b)?;
    let (diff, band) = curve_difference(
        &a.mean_curve.to_component(),
        &b.mean_curve.to_component(),
        args.level,
    )?;
    let rows: Vec<DifferenceRow> = (0..diff.len())
        .map(|j| DifferenceRow {
            time: diff.times[j],
            difference: diff.estimates[j],
            variance: diff.variances[j],
            lower: band.lower[j],
            upper: band.upper[j],
        })
        .collect();
    let file = std::fs::File::create(&args.out)?;
    write_difference_csv(std::io::BufWriter::new(file), &rows)?;
    println!(
        "difference of {} vs {} written to {} ({} rows, {:.0}% band)",
        a.group,
        b.group,
        args.out.display(),
        rows.len(),
        100.0 * args.level
    );
    Ok(())
}

fn run_simulate(args: SimulateArgs) -> Result<()> {
    let mut spec = spec_from_flags(&args.family, &args.mode, &args.deviations, args.replicates)?;
    spec.curve = CurveParams { phi: args.phi, rho: args.rho, nu: args.nu };
    spec.noise = NoiseParams {
        sigma2_eps: args.sigma2_eps,
        sigma2_eta: args.sigma2_eta,
        sigma2_dev: args.sigma2_dev,
    };
    spec.validate()?;

    if args.t_max.is_nan() || args.t_max <= 0.0 {
        return Err(Error::Usage("t-max must be positive".into()));
    }
    let n_steps = (args.t_max / args.grid_step).round() as usize;
    let times: Vec<f64> = (0..=n_steps).map(|k| k as f64 * args.grid_step).collect();
    let grid = TimeGrid::new(times.clone())?;
    let mut steps = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        let entries = (0..args.replicates.max(1))
            .map(|r| growthss::ssm::SeriesEntry {
                replicate: format!("r{:02}", r + 1),
                value: None,
                regressors: None,
            })
            .collect();
        steps.push(entries);
    }
    let template = ObservationSeries::new(args.group.clone(), grid, steps)?;
    let model = build_model(&spec, &template)?;

    let g0 = eval_g(spec.family, &spec.curve, times[0])?;
    let f0 = args.constant + args.curve_scale * g0;
    let data: Dataset = simulate(&model, &template, &[f0, args.curve_scale], args.seed)?;

    let file = std::fs::File::create(&args.out)?;
    write_dataset_csv(std::io::BufWriter::new(file), &data)?;
    println!("{} records written to {}", data.len(), args.out.display());
    Ok(())
}

fn run_plot(args: PlotArgs) -> Result<()> {
    let svg = match (&args.artifact, &args.compare) {
        (Some(artifact_path), None) => {
            let artifact = FitArtifact::read(artifact_path)?;
            let mean = artifact.mean_curve.to_component();
            let band = growthss::analysis::Band {
                times: artifact.mean_curve.times.clone(),
                lower: artifact.mean_band.lower.clone(),
                upper: artifact.mean_band.upper.clone(),
                level: artifact.mean_band.level,
            };
            let points = match &args.data {
                Some(path) => observed_points(path, &artifact)?,
                None => Vec::new(),
            };
            let cfg = PlotConfig {
                title: format!(
                    "{} {} fit, group {}",
                    artifact.mode, artifact.family, artifact.group
                ),
                ..Default::default()
            };
            plot_component(&cfg, &mean, &band, &points)
        }
        (None, Some(compare_path)) => {
            let rows = read_difference_csv(compare_path)?;
            if rows.is_empty() {
                return Err(Error::Usage("comparison file has no rows".into()));
            }
            let diff = ComponentSeries {
                times: rows.iter().map(|r| r.time).collect(),
                estimates: rows.iter().map(|r| r.difference).collect(),
                variances: rows.iter().map(|r| r.variance).collect(),
            };
            let band = growthss::analysis::Band {
                times: diff.times.clone(),
                lower: rows.iter().map(|r| r.lower).collect(),
                upper: rows.iter().map(|r| r.upper).collect(),
                level: 0.95,
            };
            let cfg = PlotConfig {
                title: "mean-curve difference".into(),
                y_label: "difference".into(),
                ..Default::default()
            };
            plot_difference(&cfg, &diff, &band)
        }
        _ => {
            return Err(Error::Usage(
                "pass exactly one of --artifact or --compare".into(),
            ))
        }
    };
    std::fs::write(&args.out, svg)?;
    println!("plot written to {}", args.out.display());
    Ok(())
}

fn observed_points(path: &Path, artifact: &FitArtifact) -> Result<Vec<(f64, f64)>> {
    let raw = read_long_csv(path)?;
    let scaled = scale_values(&raw, artifact.scale)?;
    Ok(scaled
        .records()
        .iter()
        .filter(|r| r.group == artifact.group)
        .filter_map(|r| r.value.map(|v| (r.time, v)))
        .collect())
}
