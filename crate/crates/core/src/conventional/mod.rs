//! Physics-grounded path-loss predictors fitted by linear regression.
//!
//! Every model starts from the log-distance law
//! `PL = PL(d0) + 10 η log10(d / d0)` and layers one environmental effect
//! on top: line-of-sight partitioning, per-meter shadowing through
//! not-free space, two-ray ground reflection, knife-edge diffraction, or
//! the combined reflection-diffraction rule.

mod ols;
mod params_file;

use std::fmt;
use std::str::FromStr;

use log::warn;

use crate::error::{Error, Result};
use crate::features::{FeatureVector, PathLossSample, CLEAR_ZONE_V};
use crate::PathLossPredictor;

pub use ols::{ols_fit, slope_through_origin, OlsFit};
pub use params_file::{parse_params_file, read_params_file, write_params_record, ParamsRecord};

/// Log-distance parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathLossParams {
    /// Reference path loss at `d0`, dB.
    pub pl_d0: f64,
    /// Path-loss exponent.
    pub eta: f64,
    /// Reference distance, m.
    pub d0: f64,
}

impl PathLossParams {
    pub fn new(pl_d0: f64, eta: f64) -> Self {
        Self { pl_d0, eta, d0: 1.0 }
    }

    /// Regressor for `eta`: `10 log10(max(d, d0) / d0)`.
    pub fn log_term(&self, distance: f64) -> f64 {
        10.0 * (distance.max(self.d0) / self.d0).log10()
    }

    pub fn predict_distance(&self, distance: f64) -> f64 {
        self.pl_d0 + self.eta * self.log_term(distance)
    }
}

/// Separate log-distance lines for line-of-sight and obstructed links.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VisibilityParams {
    pub los: PathLossParams,
    pub nlos: PathLossParams,
}

/// Line-of-sight law plus `alpha` dB per meter of not-free voxels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShadowingParams {
    pub los: PathLossParams,
    pub alpha: f64,
}

fn warn_eta(p: &PathLossParams, what: &str) {
    if !(1.0..=8.0).contains(&p.eta) {
        warn!("{what}: fitted path-loss exponent {:.3} outside the usual [1, 8]", p.eta);
    }
}

/// Fits the log-distance law to `(distance, path loss)` pairs.
pub fn fit_log_distance<'a>(samples: impl IntoIterator<Item = &'a PathLossSample>) -> Result<PathLossParams> {
    let template = PathLossParams::new(0.0, 0.0);
    let (xs, ys): (Vec<Vec<f64>>, Vec<f64>) = samples
        .into_iter()
        .map(|s| (vec![template.log_term(s.features.distance)], s.measured_pl))
        .unzip();
    let fit = ols_fit(&xs, &ys)?;
    Ok(PathLossParams::new(fit.intercept, fit.coefficients[0]))
}

pub fn fit_simple(samples: &[PathLossSample]) -> Result<PathLossParams> {
    let p = fit_log_distance(samples)?;
    warn_eta(&p, "simple");
    Ok(p)
}

pub fn predict_simple(p: &PathLossParams, f: &FeatureVector) -> f64 {
    p.predict_distance(f.distance)
}

/// Two independent fits split on `strictly_visible`. A partition that
/// cannot be fitted on its own falls back to one fit over all samples.
pub fn fit_visibility(samples: &[PathLossSample]) -> Result<VisibilityParams> {
    let (los, nlos): (Vec<&PathLossSample>, Vec<&PathLossSample>) =
        samples.iter().partition(|s| s.features.strictly_visible);
    let fit_part = |part: &[&PathLossSample]| {
        if part.len() < 2 {
            None
        } else {
            fit_log_distance(part.iter().copied()).ok()
        }
    };
    match (fit_part(&los), fit_part(&nlos)) {
        (Some(los), Some(nlos)) => {
            warn_eta(&los, "visibility LOS");
            warn_eta(&nlos, "visibility nLOS");
            Ok(VisibilityParams { los, nlos })
        }
        _ => {
            warn!(
                "visibility fit: partition too small or degenerate ({} LOS / {} nLOS); using one fit for both",
                los.len(),
                nlos.len()
            );
            let all = fit_simple(samples)?;
            Ok(VisibilityParams { los: all, nlos: all })
        }
    }
}

pub fn predict_visibility(p: &VisibilityParams, f: &FeatureVector) -> f64 {
    if f.strictly_visible {
        predict_simple(&p.los, f)
    } else {
        predict_simple(&p.nlos, f)
    }
}

/// Zero-intercept regression of the LOS residual on `not_free_meters`.
pub fn fit_shadowing(samples: &[PathLossSample], los: &PathLossParams) -> ShadowingParams {
    let xs: Vec<f64> = samples.iter().map(|s| s.features.not_free_meters).collect();
    let rs: Vec<f64> = samples
        .iter()
        .map(|s| s.measured_pl - predict_simple(los, &s.features))
        .collect();
    let alpha = slope_through_origin(&xs, &rs).unwrap_or_else(|| {
        warn!("shadowing fit: no sample crosses not-free space; alpha = 0");
        0.0
    });
    if alpha < 0.0 {
        warn!("shadowing fit: negative attenuation per meter {alpha:.4}");
    }
    ShadowingParams { los: *los, alpha }
}

pub fn predict_shadowing(p: &ShadowingParams, f: &FeatureVector) -> f64 {
    predict_simple(&p.los, f) + p.alpha * f.not_free_meters
}

pub fn predict_two_ray(los: &PathLossParams, f: &FeatureVector) -> f64 {
    predict_simple(los, f) - f.reflection_loss
}

pub fn predict_knife_edge(los: &PathLossParams, f: &FeatureVector) -> f64 {
    predict_simple(los, f) - f.diffraction_loss
}

/// Two-ray when the Fresnel zone is clear; otherwise diffraction loss on top
/// of the two-ray model with constructive reflection ignored.
pub fn predict_reflection_diffraction(los: &PathLossParams, f: &FeatureVector) -> f64 {
    if f.worst_v <= CLEAR_ZONE_V {
        predict_two_ray(los, f)
    } else {
        predict_simple(los, f) - f.reflection_loss.min(0.0) - f.diffraction_loss
    }
}

/// Name of a conventional model as used on the command line and in params files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Simple,
    Visibility,
    Shadowing,
    TwoRay,
    KnifeEdge,
    ReflectionDiffraction,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Simple,
        ModelKind::Visibility,
        ModelKind::Shadowing,
        ModelKind::TwoRay,
        ModelKind::KnifeEdge,
        ModelKind::ReflectionDiffraction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Simple => "simple",
            ModelKind::Visibility => "visibility",
            ModelKind::Shadowing => "shadowing",
            ModelKind::TwoRay => "two-ray",
            ModelKind::KnifeEdge => "knife-edge",
            ModelKind::ReflectionDiffraction => "refl-diff",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::input(format!("unknown model {s:?}")))
    }
}

/// A fitted conventional model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConventionalModel {
    Simple(PathLossParams),
    Visibility(VisibilityParams),
    Shadowing(ShadowingParams),
    TwoRay(PathLossParams),
    KnifeEdge(PathLossParams),
    ReflectionDiffraction(PathLossParams),
}

impl ConventionalModel {
    /// Fits `kind` on `samples`. The shadowing and third-order models reuse
    /// the line-of-sight half of the visibility fit.
    pub fn fit(kind: ModelKind, samples: &[PathLossSample]) -> Result<Self> {
        Ok(match kind {
            ModelKind::Simple => ConventionalModel::Simple(fit_simple(samples)?),
            ModelKind::Visibility => ConventionalModel::Visibility(fit_visibility(samples)?),
            ModelKind::Shadowing => {
                let los = fit_visibility(samples)?.los;
                ConventionalModel::Shadowing(fit_shadowing(samples, &los))
            }
            ModelKind::TwoRay => ConventionalModel::TwoRay(fit_visibility(samples)?.los),
            ModelKind::KnifeEdge => ConventionalModel::KnifeEdge(fit_visibility(samples)?.los),
            ModelKind::ReflectionDiffraction => ConventionalModel::ReflectionDiffraction(fit_visibility(samples)?.los),
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ConventionalModel::Simple(_) => ModelKind::Simple,
            ConventionalModel::Visibility(_) => ModelKind::Visibility,
            ConventionalModel::Shadowing(_) => ModelKind::Shadowing,
            ConventionalModel::TwoRay(_) => ModelKind::TwoRay,
            ConventionalModel::KnifeEdge(_) => ModelKind::KnifeEdge,
            ConventionalModel::ReflectionDiffraction(_) => ModelKind::ReflectionDiffraction,
        }
    }

    pub fn predict(&self, f: &FeatureVector) -> f64 {
        match self {
            ConventionalModel::Simple(p) => predict_simple(p, f),
            ConventionalModel::Visibility(p) => predict_visibility(p, f),
            ConventionalModel::Shadowing(p) => predict_shadowing(p, f),
            ConventionalModel::TwoRay(p) => predict_two_ray(p, f),
            ConventionalModel::KnifeEdge(p) => predict_knife_edge(p, f),
            ConventionalModel::ReflectionDiffraction(p) => predict_reflection_diffraction(p, f),
        }
    }
}

impl PathLossPredictor for ConventionalModel {
    fn predict_pl(&self, f: &FeatureVector) -> f64 {
        self.predict(f)
    }
}
