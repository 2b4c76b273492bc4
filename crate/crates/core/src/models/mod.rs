//! Growth/decay curve families and their state-space formulations.
//!
//! The latent curve is `f(t) = constant + scale * g(theta, t)` with `g` one
//! of five standard shapes. Writing the pair `[f(t); scale]` as a state
//! vector turns the curve into a two-dimensional linear recursion, with the
//! parametric case having zero process noise and the semiparametric case
//! adding an integrated-noise block expressed in the transformed time
//! `g(theta, t)`. The functional mixed-effects (FME) variant appends one
//! random-walk deviation state per replicate.

mod build;
mod curves;

pub use build::{
    build_fme, build_model, build_parametric, build_semiparametric, recover_constant_scale,
};
pub use curves::{eval_g, process_noise, transition};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Curve families: `g(theta, t)` shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveFamily {
    Linear,
    Exponential,
    Logistic,
    Gompertz,
    Richards,
}

impl CurveFamily {
    pub const ALL: [CurveFamily; 5] = [
        CurveFamily::Linear,
        CurveFamily::Exponential,
        CurveFamily::Logistic,
        CurveFamily::Gompertz,
        CurveFamily::Richards,
    ];

    /// Number of curve parameters the family uses.
    pub fn param_arity(self) -> usize {
        match self {
            CurveFamily::Linear => 0,
            CurveFamily::Exponential => 1,
            CurveFamily::Logistic | CurveFamily::Gompertz => 2,
            CurveFamily::Richards => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CurveFamily::Linear => "linear",
            CurveFamily::Exponential => "exponential",
            CurveFamily::Logistic => "logistic",
            CurveFamily::Gompertz => "gompertz",
            CurveFamily::Richards => "richards",
        }
    }

    pub fn uses_phi(self) -> bool {
        matches!(self, CurveFamily::Logistic | CurveFamily::Gompertz | CurveFamily::Richards)
    }

    pub fn uses_rho(self) -> bool {
        !matches!(self, CurveFamily::Linear)
    }

    pub fn uses_nu(self) -> bool {
        matches!(self, CurveFamily::Richards)
    }
}

impl std::str::FromStr for CurveFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(CurveFamily::Linear),
            "exponential" => Ok(CurveFamily::Exponential),
            "logistic" => Ok(CurveFamily::Logistic),
            "gompertz" => Ok(CurveFamily::Gompertz),
            "richards" => Ok(CurveFamily::Richards),
            other => Err(Error::Usage(format!("unknown curve family: {other}"))),
        }
    }
}

impl std::fmt::Display for CurveFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Curve parameters. Only the components the family uses are read; the
/// others are carried along untouched.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveParams {
    pub phi: f64,
    pub rho: f64,
    pub nu: f64,
}

impl Default for CurveParams {
    fn default() -> Self {
        Self { phi: 1.0, rho: 1.0, nu: 1.0 }
    }
}

impl CurveParams {
    pub fn validate(&self, family: CurveFamily) -> Result<()> {
        if family.uses_phi() && !(self.phi > 0.0 && self.phi.is_finite()) {
            return Err(Error::InvalidParams(format!("phi must be positive, got {}", self.phi)));
        }
        if family.uses_rho() && !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidParams(format!("rho must be positive, got {}", self.rho)));
        }
        if family.uses_nu() && !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::InvalidParams(format!("nu must be positive, got {}", self.nu)));
        }
        Ok(())
    }
}

/// Noise variances: observation noise, the semiparametric scaling factor,
/// and the random-walk deviation scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub sigma2_eps: f64,
    pub sigma2_eta: f64,
    pub sigma2_dev: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self { sigma2_eps: 1e-4, sigma2_eta: 0.0, sigma2_dev: 0.0 }
    }
}

impl NoiseParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma2_eps", self.sigma2_eps),
            ("sigma2_eta", self.sigma2_eta),
            ("sigma2_dev", self.sigma2_dev),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

/// Mean-curve mode: exact parametric shape or the noise-relaxed version.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Parametric,
    Semiparametric,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "parametric" => Ok(Mode::Parametric),
            "semiparametric" => Ok(Mode::Semiparametric),
            other => Err(Error::Usage(format!("unknown mode: {other}"))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Parametric => "parametric",
            Mode::Semiparametric => "semiparametric",
        })
    }
}

/// Replicate deviation-curve model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Deviations {
    None,
    RandomWalk,
}

impl std::str::FromStr for Deviations {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Deviations::None),
            "random-walk" | "random_walk" => Ok(Deviations::RandomWalk),
            other => Err(Error::Usage(format!("unknown deviations model: {other}"))),
        }
    }
}

impl std::fmt::Display for Deviations {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Deviations::None => "none",
            Deviations::RandomWalk => "random_walk",
        })
    }
}

/// Full model specification for one group of replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthModelSpec {
    pub family: CurveFamily,
    pub mode: Mode,
    pub curve: CurveParams,
    pub noise: NoiseParams,
    /// Replicate count `K`.
    pub replicates: usize,
    pub deviations: Deviations,
}

impl GrowthModelSpec {
    pub fn new(family: CurveFamily, mode: Mode) -> Self {
        Self {
            family,
            mode,
            curve: CurveParams::default(),
            noise: NoiseParams::default(),
            replicates: 1,
            deviations: Deviations::None,
        }
    }

    /// The scaling factor is treated as zero in parametric mode regardless
    /// of the stored value.
    pub fn effective_sigma2_eta(&self) -> f64 {
        match self.mode {
            Mode::Parametric => 0.0,
            Mode::Semiparametric => self.noise.sigma2_eta,
        }
    }

    /// Structural checks; returns warnings that do not prevent fitting.
    pub fn validate(&self) -> Result<Vec<String>> {
        self.curve.validate(self.family)?;
        self.noise.validate()?;
        if self.replicates == 0 {
            return Err(Error::InvalidParams("replicate count must be at least 1".into()));
        }
        let mut warnings = Vec::new();
        if self.deviations == Deviations::RandomWalk && self.replicates < 2 {
            warnings.push(
                "random-walk deviations are not identifiable with a single replicate".to_string(),
            );
        }
        Ok(warnings)
    }
}
