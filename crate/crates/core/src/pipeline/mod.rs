//! Turns raw measurement and pose logs into training samples: time
//! synchronization, static-radio outlier removal, noise-floor imputation for
//! disconnected pairs, and feature extraction.

mod logs;

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::Point3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{extract_with, FeatureConfig, FeatureVector, PathLossSample, RadioSpec};
use crate::grid::OccupancyGrid;

pub use logs::{
    parse_logs, parse_measurements, parse_poses, parse_radios, read_measurements, read_poses, read_radios,
    write_measurements, write_poses, write_radios, MeasurementRecord, Parsed, PoseRecord, RadioInfo, RadioKind,
    RadioRegistry, MEASUREMENT_COLUMNS, POSE_COLUMNS, RADIO_COLUMNS,
};

pub const DEFAULT_MAX_SKEW_S: f64 = 1.0;
pub const DEFAULT_OUTLIER_RADIUS_M: f64 = 3.0;
pub const NOISE_FLOOR_DBM: f64 = -94.0;

/// Time-sorted position streams per radio.
#[derive(Clone, Debug, Default)]
pub struct PoseIndex {
    streams: BTreeMap<String, Vec<(f64, Point3<f64>)>>,
}

impl PoseIndex {
    pub fn new(poses: &[PoseRecord]) -> Self {
        let mut streams: BTreeMap<String, Vec<(f64, Point3<f64>)>> = BTreeMap::new();
        for p in poses {
            streams
                .entry(p.radio_id.clone())
                .or_default()
                .push((p.timestamp, p.position));
        }
        for s in streams.values_mut() {
            s.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
        Self { streams }
    }

    pub fn radios(&self) -> impl Iterator<Item = &str> {
        self.streams.keys().map(String::as_str)
    }

    /// Earliest and latest pose time over all radios.
    pub fn time_span(&self) -> Option<(f64, f64)> {
        let lo = self.streams.values().filter_map(|s| s.first()).map(|p| p.0).min_by(f64::total_cmp)?;
        let hi = self.streams.values().filter_map(|s| s.last()).map(|p| p.0).max_by(f64::total_cmp)?;
        Some((lo, hi))
    }

    /// Nearest pose in time as `(|skew|, position)`; ties go to the earlier pose.
    pub fn nearest(&self, radio: &str, t: f64) -> Option<(f64, Point3<f64>)> {
        let s = self.streams.get(radio)?;
        let i = s.partition_point(|p| p.0 < t);
        let after = s.get(i).map(|p| (p.0 - t, p.1));
        let before = i.checked_sub(1).map(|j| (t - s[j].0, s[j].1));
        match (before, after) {
            (Some(b), Some(a)) => Some(if a.0 < b.0 { a } else { b }),
            (b, a) => b.or(a),
        }
    }

    /// Position of `radio` at `t` if a pose lies within `max_skew` seconds.
    pub fn position(&self, radio: &str, t: f64, max_skew: f64) -> Option<Point3<f64>> {
        self.nearest(radio, t).filter(|(skew, _)| *skew <= max_skew).map(|(_, p)| p)
    }
}

/// Attaches nearest-in-time positions to both ends of every record, dropping
/// records whose nearest pose is more than `max_skew` seconds away.
pub fn synchronize(records: &[MeasurementRecord], poses: &PoseIndex, max_skew: f64) -> Vec<MeasurementRecord> {
    let out: Vec<_> = records
        .iter()
        .filter_map(|r| {
            let tx = poses.position(&r.tx_id, r.timestamp, max_skew)?;
            let rx = poses.position(&r.rx_id, r.timestamp, max_skew)?;
            Some(MeasurementRecord {
                tx_pos: Some(tx),
                rx_pos: Some(rx),
                ..r.clone()
            })
        })
        .collect();
    if out.len() < records.len() {
        log::info!("synchronize: dropped {} of {} records", records.len() - out.len(), records.len());
    }
    out
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Drops records that place a static radio more than `radius` from the
/// coordinate-wise median of all its position estimates.
pub fn remove_static_outliers(
    records: &[MeasurementRecord],
    registry: &RadioRegistry,
    radius: f64,
) -> Vec<MeasurementRecord> {
    let mut seen: BTreeMap<&str, [Vec<f64>; 3]> = BTreeMap::new();
    for r in records {
        for (id, pos) in [(&r.tx_id, r.tx_pos), (&r.rx_id, r.rx_pos)] {
            if let (true, Some(p)) = (registry.is_static(id), pos) {
                let e = seen.entry(id.as_str()).or_default();
                for k in 0..3 {
                    e[k].push(p[k]);
                }
            }
        }
    }
    let medians: BTreeMap<&str, Point3<f64>> = seen
        .into_iter()
        .map(|(id, mut c)| (id, Point3::new(median(&mut c[0]), median(&mut c[1]), median(&mut c[2]))))
        .collect();
    let ok = |id: &str, pos: Option<Point3<f64>>| match (medians.get(id), pos) {
        (Some(m), Some(p)) => (p - m).norm() <= radius,
        _ => true,
    };
    let out: Vec<_> = records
        .iter()
        .filter(|r| ok(&r.tx_id, r.tx_pos) && ok(&r.rx_id, r.rx_pos))
        .cloned()
        .collect();
    if out.len() < records.len() {
        log::info!("static outliers: dropped {} records", records.len() - out.len());
    }
    out
}

/// Settings for noise-floor imputation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AugmentConfig {
    /// Minimum silence, s, before a pair counts as disconnected.
    pub window_s: f64,
    /// Spacing of imputed records, s.
    pub tick_s: f64,
    pub floor_dbm: f64,
    /// Pose skew tolerated when looking up positions for imputed records.
    pub max_skew_s: f64,
    pub default_tx_power_dbm: f64,
    pub default_frequency_hz: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            window_s: 120.0,
            tick_s: 10.0,
            floor_dbm: NOISE_FLOOR_DBM,
            max_skew_s: DEFAULT_MAX_SKEW_S,
            default_tx_power_dbm: 30.0,
            default_frequency_hz: 2.4e9,
        }
    }
}

/// Adds noise-floor records for radio pairs that stayed silent (in both
/// directions) for at least `window_s` while both positions were known.
///
/// Silent gaps are delimited by the pair's real measurements and by the
/// overall time span of the logs. Ticks run every `tick_s` from the start of
/// the gap, skipping the start itself when it is a measurement, and stop
/// before the end of the gap. Output is stably sorted by time.
pub fn augment_disconnections(
    records: &[MeasurementRecord],
    poses: &PoseIndex,
    config: &AugmentConfig,
) -> Result<Vec<MeasurementRecord>> {
    if !(config.window_s > 0.0 && config.tick_s > 0.0) {
        return Err(Error::Config("augmentation window and tick must be positive".into()));
    }
    let times = records.iter().map(|r| r.timestamp);
    let span = poses.time_span().into_iter().flat_map(|(a, b)| [a, b]).chain(times);
    let (Some(t0), Some(t1)) = (span.clone().min_by(f64::total_cmp), span.max_by(f64::total_cmp)) else {
        return Ok(records.to_vec());
    };

    let mut pair_times: BTreeMap<(&str, &str), Vec<f64>> = BTreeMap::new();
    let mut tx_power: BTreeMap<&str, f64> = BTreeMap::new();
    let mut frequency = None;
    for r in records.iter().filter(|r| !r.synthetic) {
        let key = if r.tx_id <= r.rx_id {
            (r.tx_id.as_str(), r.rx_id.as_str())
        } else {
            (r.rx_id.as_str(), r.tx_id.as_str())
        };
        pair_times.entry(key).or_default().push(r.timestamp);
        tx_power.insert(&r.tx_id, r.tx_power_dbm);
        frequency = Some(r.frequency_hz);
    }

    let ids: BTreeSet<&str> = poses.radios().collect();
    let mut synthetic = Vec::new();
    for (i, &a) in ids.iter().enumerate() {
        for &b in ids.iter().skip(i + 1) {
            let mut bounds = vec![(t0, false)];
            if let Some(ts) = pair_times.get_mut(&(a, b)) {
                ts.sort_by(f64::total_cmp);
                bounds.extend(ts.iter().map(|&t| (t, true)));
            }
            bounds.push((t1, false));
            for w in bounds.windows(2) {
                let ((start, start_is_meas), (end, _)) = (w[0], w[1]);
                if end - start < config.window_s {
                    continue;
                }
                let mut k = u64::from(start_is_meas);
                loop {
                    let t = start + k as f64 * config.tick_s;
                    if t >= end {
                        break;
                    }
                    k += 1;
                    let (Some(pa), Some(pb)) =
                        (poses.position(a, t, config.max_skew_s), poses.position(b, t, config.max_skew_s))
                    else {
                        continue;
                    };
                    synthetic.push(MeasurementRecord {
                        timestamp: t,
                        tx_id: a.to_string(),
                        rx_id: b.to_string(),
                        tx_pos: Some(pa),
                        rx_pos: Some(pb),
                        rss_dbm: config.floor_dbm,
                        noise_dbm: config.floor_dbm,
                        tx_power_dbm: tx_power.get(a).copied().unwrap_or(config.default_tx_power_dbm),
                        frequency_hz: frequency.unwrap_or(config.default_frequency_hz),
                        synthetic: true,
                    });
                }
            }
        }
    }
    log::info!("augmentation: {} noise-floor records", synthetic.len());
    let mut out = records.to_vec();
    out.extend(synthetic);
    out.sort_by(|x, y| x.timestamp.total_cmp(&y.timestamp));
    Ok(out)
}

/// Extracts features for every positioned record against one grid snapshot.
/// Records without positions or with coincident endpoints are skipped.
pub fn to_samples(
    records: &[MeasurementRecord],
    grid: &OccupancyGrid,
    radio: &RadioSpec,
    config: &FeatureConfig,
) -> Result<Vec<PathLossSample>> {
    let out: Vec<Option<PathLossSample>> = records
        .par_iter()
        .map(|r| -> Result<Option<PathLossSample>> {
            let (Some(tx), Some(rx)) = (r.tx_pos, r.rx_pos) else {
                return Ok(None);
            };
            if tx == rx {
                return Ok(None);
            }
            let spec = radio.with_frequency(r.frequency_hz)?;
            let features = extract_with(&tx, &rx, grid, &spec, config)?;
            Ok(Some(PathLossSample {
                features,
                measured_pl: r.measured_pl(),
                tx_id: r.tx_id.clone(),
                rx_id: r.rx_id.clone(),
                timestamp: r.timestamp,
                synthetic: r.synthetic,
            }))
        })
        .collect::<Result<_>>()?;
    let skipped = out.iter().filter(|s| s.is_none()).count();
    if skipped > 0 {
        log::info!("to_samples: skipped {skipped} records without distinct positions");
    }
    Ok(out.into_iter().flatten().collect())
}

/// Pearson correlation of one feature against RSS.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureCorrelation {
    pub feature: &'static str,
    pub r: f64,
    /// The feature was constant, so `r` is reported as 0.
    pub zero_variance: bool,
}

pub const CORRELATED_FEATURES: [&str; 12] = [
    "distance",
    "log10_distance",
    "strictly_visible",
    "strictly_not_visible",
    "n_free",
    "n_occupied",
    "n_maybe",
    "n_unknown",
    "not_free_meters",
    "reflection_loss",
    "diffraction_loss",
    "worst_v",
];

fn feature_values(f: &FeatureVector) -> [f64; 12] {
    let b = |v: bool| if v { 1.0 } else { 0.0 };
    [
        f.distance,
        f.log10_distance,
        b(f.strictly_visible),
        b(f.strictly_not_visible),
        f.n_free as f64,
        f.n_occupied as f64,
        f.n_maybe as f64,
        f.n_unknown as f64,
        f.not_free_meters,
        f.reflection_loss,
        f.diffraction_loss,
        f.worst_v,
    ]
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Pearson r of every feature against RSS (`tx_power_dbm - measured_pl`).
pub fn correlation_report(samples: &[PathLossSample], tx_power_dbm: f64) -> Result<Vec<FeatureCorrelation>> {
    if samples.len() < 3 {
        return Err(Error::input("correlation report needs at least 3 samples"));
    }
    let rss: Vec<f64> = samples.iter().map(|s| s.rss(tx_power_dbm)).collect();
    let columns: Vec<[f64; 12]> = samples.iter().map(|s| feature_values(&s.features)).collect();
    Ok(CORRELATED_FEATURES
        .iter()
        .enumerate()
        .map(|(k, &feature)| {
            let xs: Vec<f64> = columns.iter().map(|c| c[k]).collect();
            match pearson(&xs, &rss) {
                Some(r) => FeatureCorrelation {
                    feature,
                    r,
                    zero_variance: false,
                },
                None => FeatureCorrelation {
                    feature,
                    r: 0.0,
                    zero_variance: true,
                },
            }
        })
        .collect())
}
