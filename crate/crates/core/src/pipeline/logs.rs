use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{Point3, Quaternion};

use crate::error::{Error, Result};

pub const MEASUREMENT_COLUMNS: [&str; 7] =
    ["timestamp", "tx_id", "rx_id", "rss_dbm", "noise_dbm", "tx_power_dbm", "frequency_hz"];
pub const POSE_COLUMNS: [&str; 9] = ["timestamp", "radio_id", "x", "y", "z", "qx", "qy", "qz", "qw"];
pub const RADIO_COLUMNS: [&str; 6] = ["radio_id", "kind", "x", "y", "z", "tx_power_dbm"];

/// One RSS observation. Positions are attached by [`super::synchronize`].
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementRecord {
    pub timestamp: f64,
    pub tx_id: String,
    pub rx_id: String,
    pub tx_pos: Option<Point3<f64>>,
    pub rx_pos: Option<Point3<f64>>,
    pub rss_dbm: f64,
    pub noise_dbm: f64,
    pub tx_power_dbm: f64,
    pub frequency_hz: f64,
    /// Imputed at the noise floor rather than observed.
    pub synthetic: bool,
}

impl MeasurementRecord {
    pub fn new(timestamp: f64, tx_id: &str, rx_id: &str, rss_dbm: f64) -> Self {
        Self {
            timestamp,
            tx_id: tx_id.to_string(),
            rx_id: rx_id.to_string(),
            tx_pos: None,
            rx_pos: None,
            rss_dbm,
            noise_dbm: -94.0,
            tx_power_dbm: 30.0,
            frequency_hz: 2.4e9,
            synthetic: false,
        }
    }

    pub fn measured_pl(&self) -> f64 {
        self.tx_power_dbm - self.rss_dbm
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoseRecord {
    pub timestamp: f64,
    pub radio_id: String,
    pub position: Point3<f64>,
    /// `(w, i, j, k)` with `i, j, k = qx, qy, qz`.
    pub orientation: Quaternion<f64>,
}

impl PoseRecord {
    pub fn at(timestamp: f64, radio_id: &str, position: Point3<f64>) -> Self {
        Self {
            timestamp,
            radio_id: radio_id.to_string(),
            position,
            orientation: Quaternion::identity(),
        }
    }
}

/// Records that parsed, plus how many malformed lines were skipped.
#[derive(Clone, Debug, PartialEq)]
pub struct Parsed<T> {
    pub records: Vec<T>,
    pub skipped: usize,
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn check_header(rdr: &mut csv::Reader<&[u8]>, expected: &[&str], what: &str) -> Result<()> {
    let header = rdr
        .headers()
        .map_err(|e| Error::format(1, format!("{what}: unreadable header: {e}")))?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::format(1, format!("{what}: expected header {:?}", expected.join(","))));
    }
    Ok(())
}

fn num<T: FromStr>(rec: &csv::StringRecord, i: usize) -> Option<T> {
    rec.get(i)?.parse().ok()
}

fn real(rec: &csv::StringRecord, i: usize) -> Option<f64> {
    num::<f64>(rec, i).filter(|v| v.is_finite())
}

fn ident(rec: &csv::StringRecord, i: usize) -> Option<String> {
    let s = rec.get(i)?;
    (!s.is_empty() && !s.contains(char::is_whitespace)).then(|| s.to_string())
}

fn parse_rows<T>(
    text: &str,
    columns: &[&str],
    what: &str,
    mut row: impl FnMut(&csv::StringRecord) -> Option<T>,
) -> Result<Parsed<T>> {
    let mut rdr = reader(text);
    check_header(&mut rdr, columns, what)?;
    let mut out = Parsed {
        records: Vec::new(),
        skipped: 0,
    };
    for (n, rec) in rdr.records().enumerate() {
        let parsed = rec
            .ok()
            .filter(|r| r.len() == columns.len())
            .and_then(|r| row(&r));
        match parsed {
            Some(v) => out.records.push(v),
            None => {
                out.skipped += 1;
                log::warn!("{what}: skipping malformed line {}", n + 2);
            }
        }
    }
    Ok(out)
}

pub fn parse_measurements(text: &str) -> Result<Parsed<MeasurementRecord>> {
    let parsed = parse_rows(text, &MEASUREMENT_COLUMNS, "measurements", |r| {
        Some(MeasurementRecord {
            timestamp: real(r, 0)?,
            tx_id: ident(r, 1)?,
            rx_id: ident(r, 2)?,
            tx_pos: None,
            rx_pos: None,
            rss_dbm: real(r, 3)?,
            noise_dbm: real(r, 4)?,
            tx_power_dbm: real(r, 5)?,
            frequency_hz: real(r, 6).filter(|f| *f > 0.0)?,
            synthetic: false,
        })
    })?;
    let implausible = parsed
        .records
        .iter()
        .filter(|m| m.rss_dbm < m.noise_dbm - 5.0)
        .count();
    if implausible > 0 {
        log::warn!("measurements: {implausible} records more than 5 dB below their noise floor");
    }
    Ok(parsed)
}

pub fn parse_poses(text: &str) -> Result<Parsed<PoseRecord>> {
    parse_rows(text, &POSE_COLUMNS, "poses", |r| {
        let q = Quaternion::new(real(r, 8)?, real(r, 5)?, real(r, 6)?, real(r, 7)?);
        if (q.norm() - 1.0).abs() > 1e-6 {
            return None;
        }
        Some(PoseRecord {
            timestamp: real(r, 0)?,
            radio_id: ident(r, 1)?,
            position: Point3::new(real(r, 2)?, real(r, 3)?, real(r, 4)?),
            orientation: q,
        })
    })
}

pub fn write_measurements(records: &[MeasurementRecord]) -> String {
    let mut s = MEASUREMENT_COLUMNS.join(",");
    s.push('\n');
    for m in records {
        writeln!(
            s,
            "{},{},{},{},{},{},{}",
            m.timestamp, m.tx_id, m.rx_id, m.rss_dbm, m.noise_dbm, m.tx_power_dbm, m.frequency_hz
        )
        .unwrap();
    }
    s
}

pub fn write_poses(poses: &[PoseRecord]) -> String {
    let mut s = POSE_COLUMNS.join(",");
    s.push('\n');
    for p in poses {
        let q = &p.orientation;
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            p.timestamp, p.radio_id, p.position.x, p.position.y, p.position.z, q.i, q.j, q.k, q.w
        )
        .unwrap();
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RadioKind {
    Static,
    Mobile,
    Base,
}

impl RadioKind {
    pub fn name(self) -> &'static str {
        match self {
            RadioKind::Static => "static",
            RadioKind::Mobile => "mobile",
            RadioKind::Base => "base",
        }
    }
}

impl FromStr for RadioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "static" => Ok(RadioKind::Static),
            "mobile" => Ok(RadioKind::Mobile),
            "base" => Ok(RadioKind::Base),
            _ => Err(Error::input(format!("unknown radio kind {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RadioInfo {
    pub kind: RadioKind,
    /// Declared position; mobile radios usually have none.
    pub position: Option<Point3<f64>>,
    pub tx_power_dbm: f64,
}

/// Known radios keyed by id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RadioRegistry {
    pub radios: BTreeMap<String, RadioInfo>,
}

impl RadioRegistry {
    pub fn insert(&mut self, id: &str, info: RadioInfo) {
        self.radios.insert(id.to_string(), info);
    }

    pub fn get(&self, id: &str) -> Option<&RadioInfo> {
        self.radios.get(id)
    }

    pub fn is_static(&self, id: &str) -> bool {
        self.get(id).is_some_and(|r| r.kind != RadioKind::Mobile)
    }
}

/// Radio list CSV; `x,y,z` may all be empty for radios without a fixed position.
pub fn parse_radios(text: &str) -> Result<RadioRegistry> {
    let mut rdr = reader(text);
    check_header(&mut rdr, &RADIO_COLUMNS, "radios")?;
    let mut reg = RadioRegistry::default();
    for (n, rec) in rdr.records().enumerate() {
        let line = n + 2;
        let bad = |msg: &str| Error::format(line, format!("radios: {msg}"));
        let rec = rec.map_err(|e| bad(&e.to_string()))?;
        if rec.len() != RADIO_COLUMNS.len() {
            return Err(bad("wrong number of fields"));
        }
        let id = ident(&rec, 0).ok_or_else(|| bad("bad radio id"))?;
        let kind: RadioKind = rec[1].parse().map_err(|_| bad("kind must be static, mobile or base"))?;
        let position = if (2..5).all(|i| rec[i].is_empty()) {
            None
        } else {
            let c: Option<Vec<f64>> = (2..5).map(|i| real(&rec, i)).collect();
            let c = c.ok_or_else(|| bad("bad position"))?;
            Some(Point3::new(c[0], c[1], c[2]))
        };
        let tx_power_dbm = real(&rec, 5).ok_or_else(|| bad("bad tx power"))?;
        if reg.radios.contains_key(&id) {
            return Err(bad(&format!("duplicate radio {id}")));
        }
        reg.insert(
            &id,
            RadioInfo {
                kind,
                position,
                tx_power_dbm,
            },
        );
    }
    Ok(reg)
}

pub fn write_radios(reg: &RadioRegistry) -> String {
    let mut s = RADIO_COLUMNS.join(",");
    s.push('\n');
    for (id, r) in &reg.radios {
        match r.position {
            Some(p) => writeln!(s, "{id},{},{},{},{},{}", r.kind.name(), p.x, p.y, p.z, r.tx_power_dbm),
            None => writeln!(s, "{id},{},,,,{}", r.kind.name(), r.tx_power_dbm),
        }
        .unwrap();
    }
    s
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_measurements(path: impl AsRef<Path>) -> Result<Parsed<MeasurementRecord>> {
    parse_measurements(&read(path.as_ref())?)
}

pub fn read_poses(path: impl AsRef<Path>) -> Result<Parsed<PoseRecord>> {
    parse_poses(&read(path.as_ref())?)
}

pub fn read_radios(path: impl AsRef<Path>) -> Result<RadioRegistry> {
    parse_radios(&read(path.as_ref())?)
}

/// Measurement and pose logs read together.
pub fn parse_logs(measurements: &str, poses: &str) -> Result<(Parsed<MeasurementRecord>, Parsed<PoseRecord>)> {
    Ok((parse_measurements(measurements)?, parse_poses(poses)?))
}
