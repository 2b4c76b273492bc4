//! Regenerates the vendored datasets under `data/`. Run explicitly:
//!
//! ```sh
//! cargo test -p growthss --test make_fixtures -- --ignored
//! ```
//!
//! The tractor-registration series is a synthetic reconstruction: the
//! original annual log10 counts are not redistributable here, so the
//! fixture is rebuilt from the published logistic fit for that series plus
//! a smooth lack-of-fit component and measurement noise. The lack-of-fit
//! part is projected orthogonal to the tangent space of the logistic model
//! at the published parameters, so the parametric fit of the fixture
//! reproduces the published estimates while the data still depart from the
//! exact parametric shape the way the original series does.

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn workspace_path(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

const CONSTANT: f64 = 3.605;
const SCALE: f64 = 1.844;
const PHI: f64 = 1.398;
const RHO: f64 = 0.104;
/// Variance split of the parametric residual: smooth lack-of-fit plus
/// white noise, totalling about 3e-4.
const WIGGLE_VAR: f64 = 1.7e-4;
const NOISE_VAR: f64 = 1.0e-4;
const SEED: u64 = 1061;

#[test]
#[ignore = "regenerates data/greek_tractors.csv"]
fn regenerate_greek_tractors() {
    let n = 46usize;
    let times: Vec<f64> = (0..n).map(|t| t as f64).collect();
    let g: Vec<f64> = times.iter().map(|&t| 1.0 / (1.0 + PHI * (-RHO * t).exp())).collect();

    // Tangent space of (constant, scale, phi, rho) at the published point.
    let mut basis = DMatrix::<f64>::zeros(n, 4);
    for (i, &t) in times.iter().enumerate() {
        let e = (-RHO * t).exp();
        let denom = 1.0 + PHI * e;
        basis[(i, 0)] = 1.0;
        basis[(i, 1)] = g[i];
        basis[(i, 2)] = SCALE * (-e / (denom * denom));
        basis[(i, 3)] = SCALE * (t * PHI * e / (denom * denom));
    }

    // Smooth multi-hump shape in transformed time g (the scale on which
    // the semiparametric prior is stationary), projected orthogonal to the
    // tangent space.
    let (g0, g1) = (g[0], g[n - 1]);
    let raw = DVector::<f64>::from_fn(n, |i, _| {
        let u = (g[i] - g0) / (g1 - g0);
        (std::f64::consts::TAU * 1.6 * u + 0.7).sin()
            + 0.6 * (std::f64::consts::TAU * 3.3 * u + 2.1).sin()
    });
    let xtx = basis.transpose() * &basis;
    let coef = xtx
        .cholesky()
        .expect("tangent basis has full rank")
        .solve(&(basis.transpose() * &raw));
    let mut wiggle = raw - basis * coef;
    let rms = (wiggle.dot(&wiggle) / n as f64).sqrt();
    wiggle *= (WIGGLE_VAR).sqrt() / rms;

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut csv = String::from("group,replicate,time,value\n");
    for (i, &t) in times.iter().enumerate() {
        let z: f64 = StandardNormal.sample(&mut rng);
        let y = CONSTANT + SCALE * g[i] + wiggle[i] + NOISE_VAR.sqrt() * z;
        csv.push_str(&format!("greece,r1,{},{:.6}\n", t as i64, y));
    }

    let path = workspace_path("data/greek_tractors.csv");
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(&path, csv).unwrap();
    println!("wrote {}", path.display());
}
