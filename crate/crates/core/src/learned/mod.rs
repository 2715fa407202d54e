//! Single-hidden-layer networks predicting attenuation from link features.
//!
//! Five variants differ only in which features they read. Inputs and the
//! target are standardized with statistics from the offline training split;
//! those statistics stay frozen during online updates.

mod eval;
mod model_file;
mod train;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::PathLossPredictor;

pub use eval::{evaluate, evaluate_fn, Evaluation, HISTOGRAM_BINS, HISTOGRAM_RANGE_DB};
pub use model_file::{parse_model_file, read_model_file, write_model_file};
pub use train::{
    train_offline, train_offline_arrays, train_online_step, write_training_report, EpochStats, OnlineStepReport,
    TrainConfig, TrainReport,
};

/// Hidden layer width.
pub const HIDDEN: usize = 16;

/// Which link features a network consumes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    Vis,
    Vox,
    Ref,
    Diff,
    All,
}

impl Variant {
    pub const ALL: [Variant; 5] = [Variant::Vis, Variant::Vox, Variant::Ref, Variant::Diff, Variant::All];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Vis => "vis",
            Variant::Vox => "vox",
            Variant::Ref => "ref",
            Variant::Diff => "diff",
            Variant::All => "all",
        }
    }

    pub fn input_dim(self) -> usize {
        match self {
            Variant::Vis => 3,
            Variant::Vox => 5,
            Variant::Ref | Variant::Diff => 2,
            Variant::All => 8,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::input(format!("unknown network variant {s:?}")))
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Raw input vector of `variant` for one link. Distances below 1 m are
/// clamped to 1 m, as in the log-distance models.
pub fn feature_subset(variant: Variant, f: &FeatureVector) -> Vec<f64> {
    let log_d = f.distance.max(1.0).log10();
    let vis = [flag(f.strictly_visible), flag(f.strictly_not_visible)];
    let vox = [f.n_occupied as f64, f.n_maybe as f64, f.n_free as f64, f.n_unknown as f64];
    let mut x = Vec::with_capacity(variant.input_dim());
    x.push(log_d);
    match variant {
        Variant::Vis => x.extend(vis),
        Variant::Vox => x.extend(vox),
        Variant::Ref => x.push(f.reflection_loss),
        Variant::Diff => x.push(f.diffraction_loss),
        Variant::All => {
            x.extend(vis);
            x.extend(vox);
            x.push(f.diffraction_loss);
        }
    }
    x
}

/// Adam moment estimates, one entry per parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

/// Standardization applied to inputs and the target.
#[derive(Clone, Debug, PartialEq)]
pub struct Normalization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub target_mean: f64,
    pub target_std: f64,
}

impl Normalization {
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
            target_mean: 0.0,
            target_std: 1.0,
        }
    }
}

/// Where a model's weights came from.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Provenance {
    pub seed: u64,
    pub offline_epochs: usize,
    pub offline_samples: usize,
    pub online_steps: usize,
}

/// `input → 16 ReLU units → 1` regression network.
///
/// Parameters are stored flat: `W1` row-major by input (`input_dim × 16`),
/// then `b1` (16), `W2` (16), `b2` (1).
#[derive(Clone, Debug, PartialEq)]
pub struct MlpModel {
    variant: Variant,
    params: Vec<f64>,
    norm: Normalization,
    adam: AdamState,
    provenance: Provenance,
}

/// Per-sample intermediate values kept for backpropagation.
struct Activations {
    pre: [f64; HIDDEN],
    out: f64,
}

impl MlpModel {
    pub fn param_count(input_dim: usize) -> usize {
        input_dim * HIDDEN + HIDDEN + HIDDEN + 1
    }

    /// All-zero network with identity normalization.
    pub fn zeros(variant: Variant) -> Self {
        let n = Self::param_count(variant.input_dim());
        Self {
            variant,
            params: vec![0.0; n],
            norm: Normalization::identity(variant.input_dim()),
            adam: AdamState {
                m: vec![0.0; n],
                v: vec![0.0; n],
                t: 0,
            },
            provenance: Provenance::default(),
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(variant: Variant, rng: &mut ChaCha8Rng) -> Self {
        let mut model = Self::zeros(variant);
        let dim = variant.input_dim();
        let a1 = (6.0 / (dim + HIDDEN) as f64).sqrt();
        let a2 = (6.0 / (HIDDEN + 1) as f64).sqrt();
        for w in &mut model.params[..dim * HIDDEN] {
            *w = rng.random_range(-a1..a1);
        }
        let w2 = dim * HIDDEN + HIDDEN;
        for w in &mut model.params[w2..w2 + HIDDEN] {
            *w = rng.random_range(-a2..a2);
        }
        model
    }

    pub(crate) fn from_parts(
        variant: Variant,
        params: Vec<f64>,
        norm: Normalization,
        adam: AdamState,
        provenance: Provenance,
    ) -> Result<Self> {
        let n = Self::param_count(variant.input_dim());
        let dim = variant.input_dim();
        if params.len() != n || adam.m.len() != n || adam.v.len() != n {
            return Err(Error::input(format!("{variant} network needs {n} parameters")));
        }
        if norm.mean.len() != dim || norm.std.len() != dim {
            return Err(Error::input(format!("{variant} network needs {dim} normalization entries")));
        }
        if norm.std.iter().chain([&norm.target_std]).any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::input("normalization std must be positive"));
        }
        Ok(Self {
            variant,
            params,
            norm,
            adam,
            provenance,
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn input_dim(&self) -> usize {
        self.variant.input_dim()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn normalization(&self) -> &Normalization {
        &self.norm
    }

    pub fn set_normalization(&mut self, norm: Normalization) -> Result<()> {
        *self = Self::from_parts(self.variant, std::mem::take(&mut self.params), norm, self.adam.clone(), self.provenance.clone())?;
        Ok(())
    }

    pub fn adam(&self) -> &AdamState {
        &self.adam
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let dim = self.input_dim();
        let b1 = dim * HIDDEN;
        (b1, b1 + HIDDEN, b1 + 2 * HIDDEN)
    }

    pub(crate) fn normalize_into(&self, raw: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = (raw[i] - self.norm.mean[i]) / self.norm.std[i];
        }
    }

    fn activate(&self, x: &[f64]) -> Activations {
        let (b1, w2, b2) = self.offsets();
        let mut pre = [0.0; HIDDEN];
        pre.copy_from_slice(&self.params[b1..b1 + HIDDEN]);
        for (i, xi) in x.iter().enumerate() {
            let row = &self.params[i * HIDDEN..(i + 1) * HIDDEN];
            for j in 0..HIDDEN {
                pre[j] += xi * row[j];
            }
        }
        let mut out = self.params[b2];
        for j in 0..HIDDEN {
            out += self.params[w2 + j] * pre[j].max(0.0);
        }
        Activations { pre, out }
    }

    /// Predicted attenuation in dB for a raw (unnormalized) input vector.
    pub fn forward(&self, raw: &[f64]) -> Result<f64> {
        if raw.len() != self.input_dim() {
            return Err(Error::input(format!(
                "{} network expects {} inputs, got {}",
                self.variant,
                self.input_dim(),
                raw.len()
            )));
        }
        let mut x = vec![0.0; raw.len()];
        self.normalize_into(raw, &mut x);
        Ok(self.norm.target_mean + self.norm.target_std * self.activate(&x).out)
    }

    /// Mean squared error over normalized `(inputs, targets)` and its gradient
    /// with respect to every parameter.
    pub fn loss_and_gradient(&self, inputs: &[&[f64]], targets: &[f64]) -> (f64, Vec<f64>) {
        let (b1, w2, b2) = self.offsets();
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let scale = 1.0 / inputs.len() as f64;
        for (x, &y) in inputs.iter().zip(targets) {
            let act = self.activate(x);
            let err = act.out - y;
            loss += err * err * scale;
            let g_out = 2.0 * err * scale;
            grad[b2] += g_out;
            for j in 0..HIDDEN {
                if act.pre[j] > 0.0 {
                    grad[w2 + j] += g_out * act.pre[j];
                    let g_pre = g_out * self.params[w2 + j];
                    grad[b1 + j] += g_pre;
                    for (i, xi) in x.iter().enumerate() {
                        grad[i * HIDDEN + j] += g_pre * xi;
                    }
                }
            }
        }
        (loss, grad)
    }

    /// One Adam update.
    pub(crate) fn adam_step(&mut self, grad: &[f64], lr: f64) {
        const BETA1: f64 = 0.9;
        const BETA2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        self.adam.t += 1;
        let t = self.adam.t as i32;
        let c1 = 1.0 - BETA1.powi(t);
        let c2 = 1.0 - BETA2.powi(t);
        for (k, g) in grad.iter().enumerate() {
            let m = &mut self.adam.m[k];
            let v = &mut self.adam.v[k];
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            self.params[k] -= lr * (*m / c1) / ((*v / c2).sqrt() + EPS);
        }
    }

    pub fn predict_features(&self, f: &FeatureVector) -> f64 {
        let raw = feature_subset(self.variant, f);
        let mut x = vec![0.0; raw.len()];
        self.normalize_into(&raw, &mut x);
        self.norm.target_mean + self.norm.target_std * self.activate(&x).out
    }
}

impl PathLossPredictor for MlpModel {
    fn predict_pl(&self, f: &FeatureVector) -> f64 {
        self.predict_features(f)
    }
}
