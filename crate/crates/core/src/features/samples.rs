//! The per-link sample file: one comma-separated row per link with the
//! feature vector, link identifiers, timestamp, measured path loss and the
//! synthetic-record flag.

use std::fmt::Write as _;
use std::path::Path;

use super::FeatureVector;
use crate::error::{Error, Result};

/// Column order of the sample file header.
pub const SAMPLE_COLUMNS: [&str; 17] = [
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
    "tx_id",
    "rx_id",
    "timestamp",
    "measured_pl",
    "synthetic",
];

/// A feature vector joined with a measured attenuation.
#[derive(Clone, Debug, PartialEq)]
pub struct PathLossSample {
    pub features: FeatureVector,
    /// Attenuation in dB, `tx_power - rss`.
    pub measured_pl: f64,
    pub tx_id: String,
    pub rx_id: String,
    pub timestamp: f64,
    /// Imputed noise-floor record rather than a real measurement.
    pub synthetic: bool,
}

impl PathLossSample {
    /// Measured RSS implied by a transmit power.
    pub fn rss(&self, tx_power_dbm: f64) -> f64 {
        tx_power_dbm - self.measured_pl
    }
}

fn bit(b: bool) -> u8 {
    b as u8
}

pub fn write_samples(samples: &[PathLossSample]) -> String {
    let mut out = SAMPLE_COLUMNS.join(",");
    out.push('\n');
    for s in samples {
        let f = &s.features;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            f.distance,
            f.log10_distance,
            bit(f.strictly_visible),
            bit(f.strictly_not_visible),
            f.n_free,
            f.n_occupied,
            f.n_maybe,
            f.n_unknown,
            f.not_free_meters,
            f.reflection_loss,
            f.diffraction_loss,
            f.worst_v,
            s.tx_id,
            s.rx_id,
            s.timestamp,
            s.measured_pl,
            bit(s.synthetic),
        );
    }
    out
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: usize) -> Result<T> {
    let raw = rec.get(i).unwrap_or("").trim();
    raw.parse()
        .map_err(|_| Error::format(line, format!("column {}: cannot parse {raw:?}", SAMPLE_COLUMNS[i])))
}

fn flag(rec: &csv::StringRecord, i: usize, line: usize) -> Result<bool> {
    match rec.get(i).map(str::trim) {
        Some("0") | Some("false") => Ok(false),
        Some("1") | Some("true") => Ok(true),
        other => Err(Error::format(line, format!("column {}: bad flag {other:?}", SAMPLE_COLUMNS[i]))),
    }
}

/// Parses a sample file. The header must match [`SAMPLE_COLUMNS`] exactly.
pub fn parse_samples(text: &str) -> Result<Vec<PathLossSample>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::format(1, e.to_string()))?
        .clone();
    if header.len() == 0 {
        return Err(Error::format(1, "missing header"));
    }
    if header.iter().map(str::trim).ne(SAMPLE_COLUMNS.iter().copied()) {
        return Err(Error::format(1, format!("expected header `{}`", SAMPLE_COLUMNS.join(","))));
    }

    let mut out = Vec::new();
    for (n, rec) in reader.records().enumerate() {
        let line = n + 2;
        let rec = rec.map_err(|e| Error::format(line, e.to_string()))?;
        if rec.len() != SAMPLE_COLUMNS.len() {
            return Err(Error::format(line, format!("expected {} columns, found {}", SAMPLE_COLUMNS.len(), rec.len())));
        }
        let features = FeatureVector {
            distance: field(&rec, 0, line)?,
            log10_distance: field(&rec, 1, line)?,
            strictly_visible: flag(&rec, 2, line)?,
            strictly_not_visible: flag(&rec, 3, line)?,
            n_free: field(&rec, 4, line)?,
            n_occupied: field(&rec, 5, line)?,
            n_maybe: field(&rec, 6, line)?,
            n_unknown: field(&rec, 7, line)?,
            not_free_meters: field(&rec, 8, line)?,
            reflection_loss: field(&rec, 9, line)?,
            diffraction_loss: field(&rec, 10, line)?,
            worst_v: field(&rec, 11, line)?,
        };
        let measured_pl: f64 = field(&rec, 15, line)?;
        if !measured_pl.is_finite() {
            return Err(Error::format(line, "measured_pl must be finite"));
        }
        out.push(PathLossSample {
            features,
            measured_pl,
            tx_id: field(&rec, 12, line)?,
            rx_id: field(&rec, 13, line)?,
            timestamp: field(&rec, 14, line)?,
            synthetic: flag(&rec, 16, line)?,
        });
    }
    Ok(out)
}

pub fn read_samples(path: impl AsRef<Path>) -> Result<Vec<PathLossSample>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_samples(&text)
}
