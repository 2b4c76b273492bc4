//! The fit artifact: a single human-readable JSON document holding the
//! spec, estimates, fit criteria, convergence report, and component series
//! with bands. Artifacts contain no timestamps and round-trip losslessly
//! (write, read, write is byte-identical).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::confidence_band;
use crate::error::{Error, Result};
use crate::estimate::{ConvergenceReport, FitResult, ParamName};
use crate::kalman::ComponentSeries;
use crate::models::{CurveFamily, CurveParams, Deviations, GrowthModelSpec, Mode, NoiseParams};

pub const ARTIFACT_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesBlock {
    pub times: Vec<f64>,
    pub estimates: Vec<f64>,
    pub variances: Vec<f64>,
}

impl SeriesBlock {
    pub fn from_component(c: &ComponentSeries) -> Self {
        Self { times: c.times.clone(), estimates: c.estimates.clone(), variances: c.variances.clone() }
    }

    pub fn to_component(&self) -> ComponentSeries {
        ComponentSeries {
            times: self.times.clone(),
            estimates: self.estimates.clone(),
            variances: self.variances.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandBlock {
    pub level: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationBlock {
    pub replicate: String,
    pub series: SeriesBlock,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitArtifact {
    pub version: String,
    pub group: String,
    /// Value multiplier applied at ingest (`--scale`).
    pub scale: f64,
    /// Grid step used for augmentation before fitting, when any.
    pub grid_step: Option<f64>,
    pub family: CurveFamily,
    pub mode: Mode,
    pub deviations: Deviations,
    pub replicates: usize,
    pub estimates: BTreeMap<String, f64>,
    pub free_parameters: Vec<String>,
    pub loglik: f64,
    pub bic: f64,
    pub n_used: usize,
    pub d: usize,
    pub constant: Option<f64>,
    pub curve_scale: Option<f64>,
    pub convergence: ConvergenceReport,
    pub mean_curve: SeriesBlock,
    pub mean_band: BandBlock,
    pub deviation_curves: Vec<DeviationBlock>,
    /// Fingerprint of the raw input dataset (before scaling/augmentation).
    pub data_sha256: String,
    pub n_records: usize,
}

impl FitArtifact {
    pub fn from_fit(
        fit: &FitResult,
        group: &str,
        scale: f64,
        grid_step: Option<f64>,
        data_sha256: String,
        n_records: usize,
        level: f64,
    ) -> Result<Self> {
        let band = confidence_band(&fit.mean_curve, level)?;
        let spec = fit.fitted_spec();
        let mut estimates = BTreeMap::new();
        for name in [
            ParamName::Phi,
            ParamName::Rho,
            ParamName::Nu,
            ParamName::Sigma2Eps,
            ParamName::Sigma2Eta,
            ParamName::Sigma2Dev,
        ] {
            let used = match name {
                ParamName::Phi => spec.family.uses_phi(),
                ParamName::Rho => spec.family.uses_rho(),
                ParamName::Nu => spec.family.uses_nu(),
                ParamName::Sigma2Eps => true,
                ParamName::Sigma2Eta => spec.mode == Mode::Semiparametric,
                ParamName::Sigma2Dev => spec.deviations == Deviations::RandomWalk,
            };
            if used {
                estimates.insert(
                    name.as_str().to_string(),
                    crate::estimate::ParamPoint::from_spec(&spec).get(name),
                );
            }
        }
        Ok(Self {
            version: ARTIFACT_VERSION.to_string(),
            group: group.to_string(),
            scale,
            grid_step,
            family: spec.family,
            mode: spec.mode,
            deviations: spec.deviations,
            replicates: spec.replicates,
            estimates,
            free_parameters: fit.free.iter().map(|n| n.as_str().to_string()).collect(),
            loglik: fit.loglik,
            bic: fit.bic,
            n_used: fit.n_used,
            d: fit.d,
            constant: fit.constant_scale.map(|(c, _)| c),
            curve_scale: fit.constant_scale.map(|(_, s)| s),
            convergence: fit.convergence.clone(),
            mean_curve: SeriesBlock::from_component(&fit.mean_curve),
            mean_band: BandBlock { level, lower: band.lower, upper: band.upper },
            deviation_curves: fit
                .deviations
                .iter()
                .map(|(r, c)| DeviationBlock {
                    replicate: r.clone(),
                    series: SeriesBlock::from_component(c),
                })
                .collect(),
            data_sha256,
            n_records,
        })
    }

    /// Reconstruct the fitted spec, e.g. to re-run the smoother on an
    /// augmented grid.
    pub fn fitted_spec(&self) -> GrowthModelSpec {
        let get = |n: &str, default: f64| self.estimates.get(n).copied().unwrap_or(default);
        GrowthModelSpec {
            family: self.family,
            mode: self.mode,
            curve: CurveParams {
                phi: get("phi", 1.0),
                rho: get("rho", 1.0),
                nu: get("nu", 1.0),
            },
            noise: NoiseParams {
                sigma2_eps: get("sigma2_eps", 0.0),
                sigma2_eta: get("sigma2_eta", 0.0),
                sigma2_dev: get("sigma2_dev", 0.0),
            },
            replicates: self.replicates,
            deviations: self.deviations,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let artifact: FitArtifact = serde_json::from_str(&text)?;
        if artifact.version != ARTIFACT_VERSION {
            return Err(Error::Artifact(format!(
                "unsupported artifact version {:?} (expected {ARTIFACT_VERSION:?})",
                artifact.version
            )));
        }
        Ok(artifact)
    }
}
