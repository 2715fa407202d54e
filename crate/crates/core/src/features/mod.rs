//! Per-link propagation features: distance, visibility, voxel counts along
//! the line of sight, two-ray ground reflection loss, and worst-case
//! knife-edge diffraction loss over the first Fresnel zone.

mod samples;

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};
use crate::grid::{traverse_segment, OccupancyGrid, VoxelState};
use crate::SPEED_OF_LIGHT;

pub use samples::{parse_samples, read_samples, write_samples, PathLossSample, SAMPLE_COLUMNS};

/// A Fresnel-Kirchhoff parameter at or below this value means a clear zone.
pub const CLEAR_ZONE_V: f64 = -0.8;

/// Radio hardware and mounting shared by both ends of a link.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadioSpec {
    frequency_hz: f64,
    pub tx_power_dbm: f64,
    pub gain_tx_dbi: f64,
    pub gain_rx_dbi: f64,
    /// Antenna height above the ground under the transmitter, m.
    pub h_tx: f64,
    /// Antenna height above the ground under the receiver, m.
    pub h_rx: f64,
}

impl RadioSpec {
    pub fn new(frequency_hz: f64) -> Result<Self> {
        if !(frequency_hz.is_finite() && frequency_hz > 0.0) {
            return Err(Error::input(format!("frequency must be positive, got {frequency_hz}")));
        }
        Ok(Self {
            frequency_hz,
            ..Self::default()
        })
    }

    pub fn with_heights(mut self, h_tx: f64, h_rx: f64) -> Result<Self> {
        if !(h_tx >= 0.0 && h_rx >= 0.0 && h_tx.is_finite() && h_rx.is_finite()) {
            return Err(Error::input("antenna heights must be finite and non-negative"));
        }
        self.h_tx = h_tx;
        self.h_rx = h_rx;
        Ok(self)
    }

    /// Same hardware at a different carrier frequency.
    pub fn with_frequency(self, frequency_hz: f64) -> Result<Self> {
        Ok(Self {
            frequency_hz: Self::new(frequency_hz)?.frequency_hz,
            ..self
        })
    }

    pub fn frequency_hz(&self) -> f64 {
        self.frequency_hz
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency_hz
    }
}

impl Default for RadioSpec {
    fn default() -> Self {
        Self {
            frequency_hz: 2.4e9,
            tx_power_dbm: 30.0,
            gain_tx_dbi: 0.0,
            gain_rx_dbi: 0.0,
            h_tx: 0.5,
            h_rx: 0.5,
        }
    }
}

/// Features of one transmitter/receiver link.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureVector {
    pub distance: f64,
    pub log10_distance: f64,
    /// Every traversed voxel is Free.
    pub strictly_visible: bool,
    /// At least one traversed voxel is Occupied.
    pub strictly_not_visible: bool,
    pub n_free: u32,
    pub n_occupied: u32,
    pub n_maybe: u32,
    pub n_unknown: u32,
    /// `(n_occupied + n_maybe + n_unknown) * voxel_size`.
    pub not_free_meters: f64,
    /// Two-ray reflection loss, dB. Positive is constructive.
    pub reflection_loss: f64,
    /// Knife-edge diffraction loss, dB, always `<= 0`.
    pub diffraction_loss: f64,
    pub worst_v: f64,
}

impl FeatureVector {
    /// Features of a zero-length link (receiver inside the transmitter's cell).
    pub fn colocated() -> Self {
        Self {
            distance: 0.0,
            log10_distance: f64::NEG_INFINITY,
            strictly_visible: true,
            strictly_not_visible: false,
            n_free: 0,
            n_occupied: 0,
            n_maybe: 0,
            n_unknown: 0,
            not_free_meters: 0.0,
            reflection_loss: 0.0,
            diffraction_loss: 0.0,
            worst_v: -std::f64::consts::SQRT_2,
        }
    }

    pub fn total_voxels(&self) -> u32 {
        self.n_free + self.n_occupied + self.n_maybe + self.n_unknown
    }
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::input(format!("{what}: arguments must be finite")))
    }
}

/// Radius of the first Fresnel zone at distances `d1`, `d2` from the ends.
pub fn fresnel_radius(d1: f64, d2: f64, wavelength: f64) -> Result<f64> {
    check_finite(&[d1, d2, wavelength], "fresnel_radius")?;
    if d1 < 0.0 || d2 < 0.0 || wavelength <= 0.0 {
        return Err(Error::input("fresnel_radius needs d1, d2 >= 0 and wavelength > 0"));
    }
    let total = d1 + d2;
    if total <= 0.0 {
        return Err(Error::input("fresnel_radius: d1 + d2 must be positive"));
    }
    Ok((d1 * d2 * wavelength / total).sqrt())
}

/// Two-ray path difference `l' - l`, computed without cancellation.
fn path_difference(d: f64, h_tx: f64, h_rx: f64) -> f64 {
    let reflected = d.hypot(h_tx + h_rx);
    let direct = d.hypot(h_tx - h_rx);
    4.0 * h_tx * h_rx / (reflected + direct)
}

/// Linear interference factor `|1 + Γ e^{iθ}|²` for a real reflection coefficient.
fn interference_factor(theta: f64, gamma: f64) -> f64 {
    let half = (0.5 * theta).sin();
    let re = (1.0 + gamma) - 2.0 * gamma * half * half;
    let im = gamma * theta.sin();
    re * re + im * im
}

/// Two-ray reflection loss in dB without the floor: `-inf` at perfect cancellation.
pub fn reflection_loss_unclamped(d: f64, h_tx: f64, h_rx: f64, wavelength: f64, gamma: f64) -> Result<f64> {
    check_finite(&[d, h_tx, h_rx, wavelength, gamma], "reflection_loss")?;
    if d <= 0.0 {
        return Err(Error::input(format!("reflection_loss needs d > 0, got {d}")));
    }
    if h_tx < 0.0 || h_rx < 0.0 || wavelength <= 0.0 {
        return Err(Error::input("reflection_loss needs non-negative heights and positive wavelength"));
    }
    let theta = 2.0 * std::f64::consts::PI * path_difference(d, h_tx, h_rx) / wavelength;
    Ok(10.0 * interference_factor(theta, gamma).log10())
}

/// Two-ray reflection loss in dB, floored at `floor_db`.
pub fn reflection_loss(d: f64, h_tx: f64, h_rx: f64, wavelength: f64, gamma: f64, floor_db: f64) -> Result<f64> {
    Ok(reflection_loss_unclamped(d, h_tx, h_rx, wavelength, gamma)?.max(floor_db))
}

/// Fresnel-Kirchhoff diffraction parameter for an obstruction `h` above the
/// line of sight (negative `h` is clearance).
pub fn diffraction_parameter(h: f64, d1: f64, d2: f64, wavelength: f64) -> Result<f64> {
    check_finite(&[h, d1, d2, wavelength], "diffraction_parameter")?;
    if d1 <= 0.0 || d2 <= 0.0 || wavelength <= 0.0 {
        return Err(Error::input("diffraction_parameter needs d1, d2, wavelength > 0"));
    }
    Ok(h * (2.0 * (d1 + d2) / (wavelength * d1 * d2)).sqrt())
}

fn lee_grazing(v: f64) -> f64 {
    20.0 * (0.5 - 0.62 * v).log10()
}

fn lee_shallow(v: f64) -> f64 {
    20.0 * (0.5 * (-0.95 * v).exp()).log10()
}

fn lee_mid(v: f64) -> f64 {
    let a = 0.38 - 0.1 * v;
    20.0 * (0.4 - (0.1184 - a * a).sqrt()).log10()
}

fn lee_deep(v: f64) -> f64 {
    20.0 * (0.225 / v).log10()
}

/// Half-widths of the blend windows at the two discontinuous seams.
const SEAM_1_HALF: f64 = 0.05;
const SEAM_24_HALF: f64 = 0.15;

fn blend(v: f64, seam: f64, half: f64, left: fn(f64) -> f64, right: fn(f64) -> f64) -> f64 {
    let t = (v - (seam - half)) / (2.0 * half);
    (1.0 - t) * left(v) + t * right(v)
}

/// Piecewise (Lee) approximation of the knife-edge diffraction loss
/// `20 log10 |F(v)|`, in dB.
///
/// The raw branches jump upward by about 0.29 dB at `v = 1` and 0.78 dB at
/// `v = 2.4`; inside a small window around each of those seams the two
/// neighbouring branches are linearly blended so the curve stays continuous
/// and non-increasing. The `(-1, 0]` branch exceeds 0 dB below `v ≈ -0.806`
/// and is capped there.
pub fn knife_edge_loss(v: f64) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::input("knife_edge_loss: v must be finite"));
    }
    let db = if v <= -1.0 {
        0.0
    } else if v <= 0.0 {
        lee_grazing(v)
    } else if v < 1.0 - SEAM_1_HALF {
        lee_shallow(v)
    } else if v <= 1.0 + SEAM_1_HALF {
        blend(v, 1.0, SEAM_1_HALF, lee_shallow, lee_mid)
    } else if v < 2.4 - SEAM_24_HALF {
        lee_mid(v)
    } else if v <= 2.4 + SEAM_24_HALF {
        blend(v, 2.4, SEAM_24_HALF, lee_mid, lee_deep)
    } else {
        lee_deep(v)
    };
    Ok(db.min(0.0))
}

/// Whether `v` falls inside one of the blend windows of [`knife_edge_loss`].
pub fn knife_edge_blended(v: f64) -> bool {
    (v - 1.0).abs() <= SEAM_1_HALF || (v - 2.4).abs() <= SEAM_24_HALF
}

/// Sampling of the first Fresnel zone.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct FresnelScanConfig {
    /// Spacing of sample points along the line of sight; voxel size when `None`.
    pub sample_spacing: Option<f64>,
    /// Outward step across the zone; voxel size when `None`.
    pub step: Option<f64>,
}

/// Obstruction height `h` relative to the line of sight at `point`, found by
/// stepping outward across the zone in each direction of `dirs`.
///
/// Clear point: `h = -s`, with `s` the nearest step (any direction) that
/// lands in a not-Free voxel, or `-radius` when none is found within the
/// zone. Blocked point: the obstruction sticks out above the line of sight,
/// `h = +s`, with `s` the smallest step (over directions) that reaches a
/// Free voxel, capped at `radius`.
fn obstruction_height(grid: &OccupancyGrid, point: &Point3<f64>, dirs: &[Vector3<f64>; 4], radius: f64, step: f64) -> f64 {
    let n_steps = (radius / step).floor() as usize;
    let blocked = |s: f64, u: &Vector3<f64>| grid.state_at(&(point + u * s)).is_not_free();

    if !blocked(0.0, &dirs[0]) {
        let mut nearest = radius;
        let mut found = false;
        for u in dirs {
            if let Some(k) = (1..=n_steps).find(|&k| blocked(k as f64 * step, u)) {
                nearest = nearest.min(k as f64 * step);
                found = true;
            }
        }
        if found {
            -nearest
        } else {
            -radius
        }
    } else {
        dirs.iter()
            .map(|u| {
                (1..=n_steps)
                    .find(|&k| !blocked(k as f64 * step, u))
                    .map_or(radius, |k| (k as f64 * step).min(radius))
            })
            .fold(radius, f64::min)
    }
}

/// Unit vectors perpendicular to the link: `[+vertical, -vertical, +horizontal, -horizontal]`.
///
/// Horizontal lies in the world XY plane. A vertical link has no such
/// direction and falls back to world X.
pub(crate) fn zone_directions(dir: &Vector3<f64>) -> [Vector3<f64>; 4] {
    let horizontal = Vector3::z().cross(dir);
    let horizontal = if horizontal.norm() < 1e-9 {
        Vector3::x()
    } else {
        horizontal.normalize()
    };
    let vertical = dir.cross(&horizontal).normalize();
    [vertical, -vertical, horizontal, -horizontal]
}

/// Worst (largest) diffraction parameter over the first Fresnel zone between `tx` and `rx`.
pub fn scan_fresnel_zone(
    tx: &Point3<f64>,
    rx: &Point3<f64>,
    grid: &OccupancyGrid,
    wavelength: f64,
    config: &FresnelScanConfig,
) -> Result<f64> {
    let axis = rx - tx;
    let d = axis.norm();
    if !d.is_finite() {
        return Err(Error::input("scan_fresnel_zone: endpoints must be finite"));
    }
    if d == 0.0 {
        return Err(Error::input("scan_fresnel_zone: transmitter and receiver coincide"));
    }
    let spacing = config.sample_spacing.unwrap_or(grid.voxel_size());
    let step = config.step.unwrap_or(grid.voxel_size());
    if !(spacing > 0.0 && step > 0.0) {
        return Err(Error::Config("Fresnel scan spacing and step must be positive".into()));
    }
    let dirs = zone_directions(&(axis / d));

    // Symmetric sampling: n interior points at t = i / (n + 1).
    let n = ((d / spacing).ceil() as usize).saturating_sub(1).max(1);
    let mut worst = f64::NEG_INFINITY;
    for i in 1..=n {
        let t = i as f64 / (n + 1) as f64;
        let (d1, d2) = (t * d, (1.0 - t) * d);
        let point = tx + axis * t;
        let r = fresnel_radius(d1, d2, wavelength)?;
        let h = obstruction_height(grid, &point, &dirs, r, step);
        worst = worst.max(diffraction_parameter(h, d1, d2, wavelength)?);
    }
    Ok(worst)
}

/// Knobs for [`extract_with`] beyond the radio itself.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureConfig {
    pub fresnel: FresnelScanConfig,
    /// Ground reflection coefficient.
    pub gamma: f64,
    /// Lower bound on reflection loss, dB.
    pub rl_floor_db: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            fresnel: FresnelScanConfig::default(),
            gamma: -1.0,
            rl_floor_db: -40.0,
        }
    }
}

pub fn extract(tx: &Point3<f64>, rx: &Point3<f64>, grid: &OccupancyGrid, radio: &RadioSpec) -> Result<FeatureVector> {
    extract_with(tx, rx, grid, radio, &FeatureConfig::default())
}

/// Computes every [`FeatureVector`] field for the link `tx → rx`.
pub fn extract_with(
    tx: &Point3<f64>,
    rx: &Point3<f64>,
    grid: &OccupancyGrid,
    radio: &RadioSpec,
    config: &FeatureConfig,
) -> Result<FeatureVector> {
    let distance = (rx - tx).norm();
    if !distance.is_finite() {
        return Err(Error::input("extract: endpoints must be finite"));
    }
    if distance == 0.0 {
        return Err(Error::input("extract: transmitter and receiver coincide"));
    }

    let (mut n_free, mut n_occupied, mut n_maybe, mut n_unknown) = (0u32, 0u32, 0u32, 0u32);
    for (_, state) in traverse_segment(grid, tx, rx)? {
        match state {
            VoxelState::Free => n_free += 1,
            VoxelState::Occupied => n_occupied += 1,
            VoxelState::MaybeOccupied => n_maybe += 1,
            VoxelState::Unknown => n_unknown += 1,
        }
    }
    let not_free = n_occupied + n_maybe + n_unknown;

    let wavelength = radio.wavelength();
    let reflection_loss = reflection_loss(distance, radio.h_tx, radio.h_rx, wavelength, config.gamma, config.rl_floor_db)?;
    let worst_v = scan_fresnel_zone(tx, rx, grid, wavelength, &config.fresnel)?;
    let diffraction_loss = knife_edge_loss(worst_v)?;

    Ok(FeatureVector {
        distance,
        log10_distance: distance.log10(),
        strictly_visible: not_free == 0,
        strictly_not_visible: n_occupied > 0,
        n_free,
        n_occupied,
        n_maybe,
        n_unknown,
        not_free_meters: not_free as f64 * grid.voxel_size(),
        reflection_loss,
        diffraction_loss,
        worst_v,
    })
}
