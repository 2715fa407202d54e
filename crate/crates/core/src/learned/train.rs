use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{feature_subset, MlpModel, Normalization, Variant};
use crate::error::{Error, Result};
use crate::features::PathLossSample;

/// Optimization settings shared by offline and online training.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub holdout_fraction: f64,
    pub learning_rate: f64,
    /// Holdout MAE improvement (dB) below which an epoch counts as stalled.
    pub convergence_tol: f64,
    /// Consecutive stalled epochs before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 2048,
            max_epochs: 100,
            holdout_fraction: 0.30,
            learning_rate: 1e-3,
            convergence_tol: 0.01,
            patience: 5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Defaults for the per-minute online update.
    pub fn online() -> Self {
        Self {
            max_epochs: 10,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return Err(Error::Config(format!(
                "holdout_fraction must be in (0, 1), got {}",
                self.holdout_fraction
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean squared error on the training split, in dB².
    pub train_loss: f64,
    pub train_mae: f64,
    pub holdout_mae: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub variant: Variant,
    pub n_train: usize,
    pub n_holdout: usize,
    pub epochs: Vec<EpochStats>,
    pub converged: bool,
}

impl TrainReport {
    pub fn final_holdout_mae(&self) -> f64 {
        self.epochs.last().map_or(f64::NAN, |e| e.holdout_mae)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OnlineStepReport {
    pub samples: usize,
    pub epochs: usize,
    pub gradient_steps: usize,
}

pub fn write_training_report<W: Write>(mut out: W, report: &TrainReport) -> Result<()> {
    let io = |e| Error::io("training report", e);
    writeln!(out, "epoch,train_loss,train_mae,holdout_mae").map_err(io)?;
    for e in &report.epochs {
        writeln!(out, "{},{},{},{}", e.epoch, e.train_loss, e.train_mae, e.holdout_mae).map_err(io)?;
    }
    Ok(())
}

fn mean_std(values: impl Iterator<Item = f64> + Clone, what: &str) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std > 0.0 && std.is_finite() {
        (mean, std)
    } else {
        log::warn!("{what} has zero variance on the training split; using std 1");
        (mean, 1.0)
    }
}

/// Standardized copy of rows/targets under `model`'s normalization.
fn normalize_all(model: &MlpModel, xs: &[Vec<f64>], ys: &[f64], idx: &[usize]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let norm = model.normalization();
    let rows = idx
        .iter()
        .map(|&i| {
            let mut x = vec![0.0; xs[i].len()];
            model.normalize_into(&xs[i], &mut x);
            x
        })
        .collect();
    let targets = idx.iter().map(|&i| (ys[i] - norm.target_mean) / norm.target_std).collect();
    (rows, targets)
}

/// Loss in dB² and MAE in dB of `model` over standardized data.
fn score(model: &MlpModel, xs: &[Vec<f64>], ys: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let s = model.normalization().target_std;
    let (mut sq, mut abs) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let e = (model.activate(x).out - y) * s;
        sq += e * e;
        abs += e.abs();
    }
    let n = xs.len() as f64;
    (sq / n, abs / n)
}

/// Runs `epochs` passes of shuffled minibatch Adam over standardized data.
fn run_epochs<F>(
    model: &mut MlpModel,
    xs: &[Vec<f64>],
    ys: &[f64],
    batch: usize,
    lr: f64,
    epochs: usize,
    rng: &mut ChaCha8Rng,
    mut after_epoch: F,
) -> usize
where
    F: FnMut(usize, &MlpModel) -> bool,
{
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut steps = 0;
    let mut bx: Vec<&[f64]> = Vec::with_capacity(batch);
    let mut by: Vec<f64> = Vec::with_capacity(batch);
    for epoch in 1..=epochs {
        order.shuffle(rng);
        for chunk in order.chunks(batch) {
            bx.clear();
            by.clear();
            for &i in chunk {
                bx.push(&xs[i]);
                by.push(ys[i]);
            }
            let (_, grad) = model.loss_and_gradient(&bx, &by);
            model.adam_step(&grad, lr);
            steps += 1;
        }
        if after_epoch(epoch, model) {
            break;
        }
    }
    steps
}

/// Offline training on raw input rows. Normalization statistics come from
/// the training split only.
pub fn train_offline_arrays(
    variant: Variant,
    inputs: &[Vec<f64>],
    targets: &[f64],
    config: &TrainConfig,
) -> Result<(MlpModel, TrainReport)> {
    config.validate()?;
    let dim = variant.input_dim();
    if inputs.len() != targets.len() {
        return Err(Error::input("inputs and targets differ in length"));
    }
    if let Some(bad) = inputs.iter().position(|x| x.len() != dim) {
        return Err(Error::input(format!("row {bad} has {} inputs, expected {dim}", inputs[bad].len())));
    }
    if inputs.iter().flatten().chain(targets).any(|v| !v.is_finite()) {
        return Err(Error::input("training data contains non-finite values"));
    }
    let n = inputs.len();
    if n < 10 * dim {
        return Err(Error::Training(format!(
            "{variant} network needs at least {} samples, got {n}",
            10 * dim
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    let n_holdout = ((n as f64 * config.holdout_fraction).round() as usize).clamp(1, n - 1);
    let (hold_idx, train_idx) = idx.split_at(n_holdout);

    let mut mean = Vec::with_capacity(dim);
    let mut std = Vec::with_capacity(dim);
    for k in 0..dim {
        let (m, s) = mean_std(train_idx.iter().map(|&i| inputs[i][k]), &format!("{variant} input {k}"));
        mean.push(m);
        std.push(s);
    }
    let (target_mean, target_std) = mean_std(train_idx.iter().map(|&i| targets[i]), "target");

    let mut model = MlpModel::init(variant, &mut rng);
    model.set_normalization(Normalization {
        mean,
        std,
        target_mean,
        target_std,
    })?;
    model.provenance.seed = config.seed;
    model.provenance.offline_samples = n;

    let (tx, ty) = normalize_all(&model, inputs, targets, train_idx);
    let (hx, hy) = normalize_all(&model, inputs, targets, hold_idx);

    let mut epochs = Vec::new();
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    let mut converged = false;
    run_epochs(
        &mut model,
        &tx,
        &ty,
        config.batch_size,
        config.learning_rate,
        config.max_epochs,
        &mut rng,
        |epoch, m| {
            let (train_loss, train_mae) = score(m, &tx, &ty);
            let (_, holdout_mae) = score(m, &hx, &hy);
            log::debug!("{variant} epoch {epoch}: train {train_mae:.3} dB, holdout {holdout_mae:.3} dB");
            epochs.push(EpochStats {
                epoch,
                train_loss,
                train_mae,
                holdout_mae,
            });
            if best - holdout_mae < config.convergence_tol {
                stalled += 1;
            } else {
                stalled = 0;
            }
            best = best.min(holdout_mae);
            converged = stalled >= config.patience;
            converged
        },
    );
    model.provenance.offline_epochs = epochs.len();
    let report = TrainReport {
        variant,
        n_train: train_idx.len(),
        n_holdout: hold_idx.len(),
        epochs,
        converged,
    };
    Ok((model, report))
}

/// Offline training on link samples.
pub fn train_offline(
    samples: &[PathLossSample],
    variant: Variant,
    config: &TrainConfig,
) -> Result<(MlpModel, TrainReport)> {
    let inputs: Vec<Vec<f64>> = samples.iter().map(|s| feature_subset(variant, &s.features)).collect();
    let targets: Vec<f64> = samples.iter().map(|s| s.measured_pl).collect();
    train_offline_arrays(variant, &inputs, &targets, config)
}

/// Continues training `model` on one window of recent samples. Normalization
/// statistics are left untouched and Adam moments carry over between calls.
pub fn train_online_step(
    model: &mut MlpModel,
    window: &[PathLossSample],
    config: &TrainConfig,
) -> Result<OnlineStepReport> {
    config.validate()?;
    if window.is_empty() {
        return Ok(OnlineStepReport {
            samples: 0,
            epochs: 0,
            gradient_steps: 0,
        });
    }
    if model.provenance.offline_samples == 0 && model.provenance.online_steps == 0 {
        log::warn!("online training a {} network that was never trained offline", model.variant);
    }
    let variant = model.variant;
    let inputs: Vec<Vec<f64>> = window.iter().map(|s| feature_subset(variant, &s.features)).collect();
    let targets: Vec<f64> = window.iter().map(|s| s.measured_pl).collect();
    if inputs.iter().flatten().chain(&targets).any(|v| !v.is_finite()) {
        return Err(Error::input("online window contains non-finite values"));
    }
    let all: Vec<usize> = (0..window.len()).collect();
    let (xs, ys) = normalize_all(model, &inputs, &targets, &all);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ model.adam.t.rotate_left(32));
    let batch = config.batch_size.min(window.len());
    let steps = run_epochs(
        model,
        &xs,
        &ys,
        batch,
        config.learning_rate,
        config.max_epochs,
        &mut rng,
        |_, _| false,
    );
    model.provenance.online_steps += 1;
    Ok(OnlineStepReport {
        samples: window.len(),
        epochs: config.max_epochs,
        gradient_steps: steps,
    })
}
