//! Predicted received signal strength over explored space, with CSV and
//! per-slice PGM export.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{Point3, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{extract_with, FeatureConfig, FeatureVector, RadioSpec};
use crate::grid::{OccupancyGrid, VoxelState};
use crate::PathLossPredictor;

pub const DEFAULT_THRESHOLD_DBM: f64 = -94.0;

#[derive(Clone, Debug, PartialEq)]
pub struct Transmitter {
    pub id: String,
    pub position: Point3<f64>,
    pub tx_power_dbm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MapConfig {
    pub resolution: f64,
    /// Cells are laid out from `min`; defaults to the bounding box of the
    /// grid's known voxels.
    pub bounds: Option<(Point3<f64>, Point3<f64>)>,
    pub threshold_dbm: f64,
    pub radio: RadioSpec,
    pub features: FeatureConfig,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            resolution: 1.0,
            bounds: None,
            threshold_dbm: DEFAULT_THRESHOLD_DBM,
            radio: RadioSpec::default(),
            features: FeatureConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MapCell {
    pub explored: bool,
    /// Best predicted RSS over transmitters, dBm; NaN when unexplored.
    pub rss_dbm: f64,
    /// Index into [`SignalMap::transmitters`].
    pub best_tx: Option<usize>,
    pub connected: bool,
}

impl MapCell {
    const UNEXPLORED: MapCell = MapCell {
        explored: false,
        rss_dbm: f64::NAN,
        best_tx: None,
        connected: false,
    };
}

#[derive(Clone, Debug)]
pub struct SignalMap {
    pub resolution: f64,
    pub min: Point3<f64>,
    /// Cell counts along x, y, z.
    pub dims: [usize; 3],
    pub threshold_dbm: f64,
    pub transmitters: Vec<String>,
    /// x fastest, then y, then z.
    pub cells: Vec<MapCell>,
}

impl SignalMap {
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.dims[1] + j) * self.dims[0] + i
    }

    pub fn cell(&self, i: usize, j: usize, k: usize) -> &MapCell {
        &self.cells[self.index(i, j, k)]
    }

    pub fn center(&self, i: usize, j: usize, k: usize) -> Point3<f64> {
        self.min + Vector3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5) * self.resolution
    }

    /// `(i, j, k)` of cell number `n`.
    pub fn coords(&self, n: usize) -> (usize, usize, usize) {
        let i = n % self.dims[0];
        let j = (n / self.dims[0]) % self.dims[1];
        (i, j, n / (self.dims[0] * self.dims[1]))
    }

    pub fn best_tx_id(&self, cell: &MapCell) -> Option<&str> {
        cell.best_tx.map(|t| self.transmitters[t].as_str())
    }
}

fn known_bounds(grid: &OccupancyGrid) -> Option<(Point3<f64>, Point3<f64>)> {
    let vs = grid.voxel_size();
    let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut hi = -lo;
    let mut any = false;
    for (v, _) in grid.cells() {
        if grid.classify(v) == VoxelState::Unknown {
            continue;
        }
        any = true;
        let c = grid.index_to_center(v);
        for k in 0..3 {
            lo[k] = lo[k].min(c[k] - 0.5 * vs);
            hi[k] = hi[k].max(c[k] + 0.5 * vs);
        }
    }
    any.then_some((lo, hi))
}

/// Best predicted RSS at every cell center whose voxel is known. A
/// transmitter lying in a cell is treated as a zero-length link, which the
/// predictors clamp to the reference distance.
pub fn build_map<P>(grid: &OccupancyGrid, transmitters: &[Transmitter], predictor: &P, config: &MapConfig) -> Result<SignalMap>
where
    P: PathLossPredictor + Sync + ?Sized,
{
    if transmitters.is_empty() {
        return Err(Error::input("signal map needs at least one transmitter"));
    }
    let res = config.resolution;
    if !(res > 0.0 && res.is_finite()) {
        return Err(Error::input(format!("map resolution must be positive, got {res}")));
    }
    let (min, max) = match config.bounds.or_else(|| known_bounds(grid)) {
        Some(b) => b,
        None => (Point3::origin(), Point3::origin()),
    };
    let mut dims = [0usize; 3];
    for k in 0..3 {
        let span = max[k] - min[k];
        if !(span >= 0.0 && span.is_finite()) {
            return Err(Error::input("map bounds must be finite with min <= max"));
        }
        dims[k] = ((span / res) - 1e-9).ceil().max(0.0) as usize;
    }
    let mut map = SignalMap {
        resolution: res,
        min,
        dims,
        threshold_dbm: config.threshold_dbm,
        transmitters: transmitters.iter().map(|t| t.id.clone()).collect(),
        cells: Vec::new(),
    };
    let n = dims.iter().product::<usize>();
    let cells: Vec<MapCell> = (0..n)
        .into_par_iter()
        .map(|idx| -> Result<MapCell> {
            let (i, j, k) = map.coords(idx);
            let c = map.center(i, j, k);
            if grid.state_at(&c) == VoxelState::Unknown {
                return Ok(MapCell::UNEXPLORED);
            }
            let mut best: Option<(f64, usize)> = None;
            for (t, tx) in transmitters.iter().enumerate() {
                let inside = (0..3).all(|a| (tx.position[a] - c[a]).abs() <= 0.5 * res);
                let f = if inside || tx.position == c {
                    FeatureVector::colocated()
                } else {
                    extract_with(&tx.position, &c, grid, &config.radio, &config.features)?
                };
                let rss = tx.tx_power_dbm - predictor.predict_pl(&f);
                if best.is_none_or(|(b, _)| rss > b) {
                    best = Some((rss, t));
                }
            }
            let (rss, t) = best.expect("at least one transmitter");
            Ok(MapCell {
                explored: true,
                rss_dbm: rss,
                best_tx: Some(t),
                connected: rss >= config.threshold_dbm,
            })
        })
        .collect::<Result<_>>()?;
    map.cells = cells;
    Ok(map)
}

/// `x,y,z,rss_dbm,best_tx,connected,explored`, one row per cell; unexplored
/// cells leave `rss_dbm` and `best_tx` empty.
pub fn write_map_csv(map: &SignalMap) -> String {
    let mut s = String::from("x,y,z,rss_dbm,best_tx,connected,explored\n");
    for (n, cell) in map.cells.iter().enumerate() {
        let (i, j, k) = map.coords(n);
        let c = map.center(i, j, k);
        if cell.explored {
            writeln!(
                s,
                "{},{},{},{:.3},{},{},1",
                c.x,
                c.y,
                c.z,
                cell.rss_dbm,
                map.best_tx_id(cell).unwrap_or(""),
                u8::from(cell.connected)
            )
        } else {
            writeln!(s, "{},{},{},,,0,0", c.x, c.y, c.z)
        }
        .unwrap();
    }
    s
}

/// RSS range mapped onto gray levels 1..=255; 0 marks unexplored cells.
pub const PGM_RANGE_DBM: (f64, f64) = (-120.0, -20.0);

/// Binary PGM (P5) of z-slice `k`, top row = largest y.
pub fn write_pgm_slice(map: &SignalMap, k: usize) -> Vec<u8> {
    let [nx, ny, _] = map.dims;
    let mut out = format!("P5\n{nx} {ny}\n255\n").into_bytes();
    let (lo, hi) = PGM_RANGE_DBM;
    for j in (0..ny).rev() {
        for i in 0..nx {
            let cell = map.cell(i, j, k);
            out.push(if cell.explored {
                let t = ((cell.rss_dbm - lo) / (hi - lo)).clamp(0.0, 1.0);
                1 + (t * 254.0).round() as u8
            } else {
                0
            });
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MapFormat {
    Csv,
    Pgm,
    Both,
}

impl std::str::FromStr for MapFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(MapFormat::Csv),
            "pgm" => Ok(MapFormat::Pgm),
            "both" => Ok(MapFormat::Both),
            _ => Err(Error::input(format!("unknown map format {s:?} (csv, pgm, both)"))),
        }
    }
}

/// Writes `<prefix>.csv` and/or `<prefix>_z<k>.pgm` into `dir`.
pub fn export_map(map: &SignalMap, dir: &Path, prefix: &str, format: MapFormat) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut put = |name: String, bytes: &[u8]| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| Error::io(path.display().to_string(), e))?;
        written.push(path);
        Ok(())
    };
    if matches!(format, MapFormat::Csv | MapFormat::Both) {
        put(format!("{prefix}.csv"), write_map_csv(map).as_bytes())?;
    }
    if matches!(format, MapFormat::Pgm | MapFormat::Both) {
        for k in 0..map.dims[2] {
            put(format!("{prefix}_z{k}.pgm"), &write_pgm_slice(map, k))?;
        }
    }
    Ok(written)
}
