//! Minute-by-minute replay of an exploration: scans grow the map, each
//! window's links are scored by the models as they stood when the window
//! began, then the network takes an online step and the regression models
//! are re-fitted on the last `k` windows.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::conventional::{fit_shadowing, fit_visibility, predict_shadowing, predict_visibility, ShadowingParams, VisibilityParams};
use crate::error::{Error, Result};
use crate::features::{FeatureConfig, PathLossSample, RadioSpec};
use crate::grid::{integrate_scan, GridConfig, OccupancyGrid, ScanFrame, UpdateParams};
use crate::learned::{evaluate, evaluate_fn, train_online_step, MlpModel, TrainConfig};
use crate::pipeline::{to_samples, MeasurementRecord};

#[derive(Clone, Debug, PartialEq)]
pub struct ReplayConfig {
    pub window_s: f64,
    /// Regression re-fit window, in windows.
    pub k_minutes: usize,
    pub online: TrainConfig,
    pub refit: bool,
    pub radio: RadioSpec,
    pub features: FeatureConfig,
    pub update: UpdateParams,
    pub grid: GridConfig,
}

impl Default for ReplayConfig {
    fn default() -> Self {
        Self {
            window_s: 60.0,
            k_minutes: 1,
            online: TrainConfig::online(),
            refit: true,
            radio: RadioSpec::default(),
            features: FeatureConfig::default(),
            update: UpdateParams::default(),
            grid: GridConfig::default(),
        }
    }
}

/// Logs to replay. Records must carry positions; records and scans must be
/// sorted by time.
#[derive(Clone, Debug, Default)]
pub struct ReplayInput<'a> {
    pub records: &'a [MeasurementRecord],
    pub scans: &'a [ScanFrame],
    pub initial_grid: Option<OccupancyGrid>,
    /// Offline-trained network; also serves as the frozen baseline.
    pub model: Option<MlpModel>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefitParams {
    pub visibility: VisibilityParams,
    pub shadowing: ShadowingParams,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinuteStats {
    pub index: usize,
    pub start_s: f64,
    pub samples: usize,
    pub scans: usize,
    /// Errors of the models as they stood at the start of the window.
    pub mae_online: Option<f64>,
    pub mae_frozen: Option<f64>,
    pub mae_visibility: Option<f64>,
    pub mae_shadowing: Option<f64>,
    /// Regression parameters after this window's re-fit.
    pub refit: Option<RefitParams>,
}

#[derive(Clone, Debug)]
pub struct ReplayOutcome {
    pub minutes: Vec<MinuteStats>,
    pub model: Option<MlpModel>,
    /// Network after the first window's online step.
    pub first_window_model: Option<MlpModel>,
    pub refit: Option<RefitParams>,
    pub grid: OccupancyGrid,
}

fn check_sorted(times: impl Iterator<Item = f64>, what: &str) -> Result<()> {
    let mut prev = f64::NEG_INFINITY;
    for (i, t) in times.enumerate() {
        if !t.is_finite() {
            return Err(Error::input(format!("{what} {i} has a non-finite timestamp")));
        }
        if t < prev {
            return Err(Error::input(format!("{what} are not sorted by time (entry {i}: {t} after {prev})")));
        }
        prev = t;
    }
    Ok(())
}

pub fn replay(input: ReplayInput<'_>, config: &ReplayConfig) -> Result<ReplayOutcome> {
    if !(config.window_s > 0.0) || config.k_minutes == 0 {
        return Err(Error::Config("replay window and k must be positive".into()));
    }
    config.online.validate()?;
    check_sorted(input.records.iter().map(|r| r.timestamp), "measurements")?;
    check_sorted(input.scans.iter().map(|s| s.timestamp), "scans")?;

    let mut grid = match input.initial_grid {
        Some(g) => g,
        None => OccupancyGrid::new(config.grid.clone())?,
    };
    let frozen = input.model.clone();
    let mut model = input.model;
    let mut first_window_model = None;
    let mut refit: Option<RefitParams> = None;
    let mut history: VecDeque<Vec<PathLossSample>> = VecDeque::new();
    let mut minutes = Vec::new();

    let Some(t0) = input.records.first().map(|r| r.timestamp) else {
        for s in input.scans {
            integrate_scan(&mut grid, s, &config.update)?;
        }
        return Ok(ReplayOutcome {
            minutes,
            model,
            first_window_model,
            refit,
            grid,
        });
    };

    let (mut rec_i, mut scan_i) = (0, 0);
    let mut index = 0;
    while rec_i < input.records.len() {
        let start = t0 + index as f64 * config.window_s;
        let end = start + config.window_s;
        let mut scans = 0;
        while scan_i < input.scans.len() && input.scans[scan_i].timestamp < end {
            integrate_scan(&mut grid, &input.scans[scan_i], &config.update)?;
            scan_i += 1;
            scans += 1;
        }
        let from = rec_i;
        while rec_i < input.records.len() && input.records[rec_i].timestamp < end {
            rec_i += 1;
        }
        let samples = to_samples(&input.records[from..rec_i], &grid, &config.radio, &config.features)?;

        let mut stats = MinuteStats {
            index,
            start_s: start,
            samples: samples.len(),
            scans,
            mae_online: None,
            mae_frozen: None,
            mae_visibility: None,
            mae_shadowing: None,
            refit: None,
        };
        if !samples.is_empty() {
            stats.mae_online = model.as_ref().map(|m| evaluate(m, &samples)).transpose()?.map(|e| e.mae);
            stats.mae_frozen = frozen.as_ref().map(|m| evaluate(m, &samples)).transpose()?.map(|e| e.mae);
            if let Some(p) = &refit {
                stats.mae_visibility = Some(evaluate_fn(&samples, |s| predict_visibility(&p.visibility, &s.features))?.mae);
                stats.mae_shadowing = Some(evaluate_fn(&samples, |s| predict_shadowing(&p.shadowing, &s.features))?.mae);
            }
        }

        if let Some(m) = model.as_mut() {
            train_online_step(m, &samples, &config.online)?;
            if index == 0 {
                first_window_model = Some(m.clone());
            }
        }

        if config.refit {
            history.push_back(samples);
            while history.len() > config.k_minutes {
                history.pop_front();
            }
            let recent: Vec<PathLossSample> = history.iter().flatten().cloned().collect();
            match fit_visibility(&recent) {
                Ok(visibility) => {
                    let shadowing = fit_shadowing(&recent, &visibility.los);
                    refit = Some(RefitParams { visibility, shadowing });
                }
                Err(e) => log::warn!("window {index}: re-fit skipped ({e})"),
            }
            stats.refit = refit;
        }
        minutes.push(stats);
        index += 1;
    }
    for s in &input.scans[scan_i..] {
        integrate_scan(&mut grid, s, &config.update)?;
    }
    Ok(ReplayOutcome {
        minutes,
        model,
        first_window_model,
        refit,
        grid,
    })
}

pub const REPLAY_COLUMNS: [&str; 13] = [
    "minute",
    "start_s",
    "samples",
    "scans",
    "mae_online",
    "mae_frozen",
    "mae_visibility",
    "mae_shadowing",
    "los_pl_d0",
    "los_eta",
    "nlos_pl_d0",
    "nlos_eta",
    "alpha",
];

/// Per-window CSV; missing values are empty fields.
pub fn write_replay_csv(minutes: &[MinuteStats]) -> String {
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.6}"));
    let mut s = REPLAY_COLUMNS.join(",");
    s.push('\n');
    for m in minutes {
        let p = m.refit;
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            m.index,
            m.start_s,
            m.samples,
            m.scans,
            opt(m.mae_online),
            opt(m.mae_frozen),
            opt(m.mae_visibility),
            opt(m.mae_shadowing),
            opt(p.map(|p| p.visibility.los.pl_d0)),
            opt(p.map(|p| p.visibility.los.eta)),
            opt(p.map(|p| p.visibility.nlos.pl_d0)),
            opt(p.map(|p| p.visibility.nlos.eta)),
            opt(p.map(|p| p.shadowing.alpha)),
        )
        .unwrap();
    }
    s
}
