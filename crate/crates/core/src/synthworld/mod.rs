//! Synthetic box worlds with exact ground truth: rasterized occupancy,
//! simulated LiDAR scans, and measurement logs generated from the
//! log-distance, visibility, shadowing and reflection/diffraction laws.

mod geometry;
pub mod presets;

use std::collections::HashSet;
use std::path::Path;

use nalgebra::{Point3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::conventional::PathLossParams;
use crate::error::{Error, Result};
use crate::features::{
    diffraction_parameter, fresnel_radius, knife_edge_loss, reflection_loss, zone_directions, FeatureVector, RadioSpec,
};
use crate::grid::{GridConfig, OccupancyGrid, ScanFrame, UpdateParams, VoxelIndex, VoxelState};
use crate::pipeline::{MeasurementRecord, PoseRecord, RadioInfo, RadioKind, RadioRegistry};
use crate::SPEED_OF_LIGHT;

pub use geometry::{exit_distance, first_hit, weighted_length, Aabb};

/// Ground-truth law used to generate path loss.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorModel {
    Simple,
    Visibility,
    #[default]
    Shadowing,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorParams {
    pub los_pl_d0: f64,
    pub los_eta: f64,
    pub nlos_pl_d0: f64,
    pub nlos_eta: f64,
    /// Attenuation of obstacles without their own coefficient, dB/m.
    pub alpha: f64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            los_pl_d0: 36.5,
            los_eta: 2.75,
            nlos_pl_d0: 13.72,
            nlos_eta: 4.81,
            alpha: 0.16,
        }
    }
}

impl GeneratorParams {
    pub fn los(&self) -> PathLossParams {
        PathLossParams::new(self.los_pl_d0, self.los_eta)
    }

    pub fn nlos(&self) -> PathLossParams {
        PathLossParams::new(self.nlos_pl_d0, self.nlos_eta)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Obstacle {
    pub min: [f64; 3],
    pub max: [f64; 3],
    /// dB/m; falls back to the generator's `alpha`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attenuation: Option<f64>,
}

impl Obstacle {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Self {
        Self {
            min,
            max,
            attenuation: None,
        }
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::new(self.min, self.max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioParams {
    pub frequency_hz: f64,
    pub tx_power_dbm: f64,
    pub noise_dbm: f64,
    /// Antenna heights used by the two-ray term of the `full` generator.
    pub h_tx: f64,
    pub h_rx: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self {
            frequency_hz: 2.4e9,
            tx_power_dbm: 30.0,
            noise_dbm: -94.0,
            h_tx: 0.5,
            h_rx: 0.5,
        }
    }
}

/// Angular lattice of the simulated LiDAR.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanPattern {
    pub azimuth_step_deg: f64,
    pub elevation_rings: usize,
    pub elevation_min_deg: f64,
    pub elevation_max_deg: f64,
    /// Must equal the integrator's `max_range`.
    pub max_range: f64,
}

impl Default for ScanPattern {
    fn default() -> Self {
        Self {
            azimuth_step_deg: 1.0,
            elevation_rings: 16,
            elevation_min_deg: -15.0,
            elevation_max_deg: 15.0,
            max_range: 20.0,
        }
    }
}

impl ScanPattern {
    /// Unit ray directions, azimuth-major.
    pub fn directions(&self) -> Vec<Vector3<f64>> {
        let n_az = (360.0 / self.azimuth_step_deg).round() as usize;
        let rings: Vec<f64> = match self.elevation_rings {
            1 => vec![0.5 * (self.elevation_min_deg + self.elevation_max_deg)],
            n => (0..n)
                .map(|i| {
                    self.elevation_min_deg + (self.elevation_max_deg - self.elevation_min_deg) * i as f64 / (n - 1) as f64
                })
                .collect(),
        };
        let mut dirs = Vec::with_capacity(n_az * rings.len());
        for a in 0..n_az {
            let az = (a as f64 * self.azimuth_step_deg).to_radians();
            for el in &rings {
                let el = el.to_radians();
                dirs.push(Vector3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin()));
            }
        }
        dirs
    }
}

/// A radio in the world: fixed (`position`) or moving along `waypoints`
/// (`[t, x, y, z]`, linearly interpolated, held at the ends).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioDef {
    pub id: String,
    pub kind: RadioKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub waypoints: Vec<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_power_dbm: Option<f64>,
}

impl RadioDef {
    pub fn fixed(id: &str, kind: RadioKind, p: [f64; 3]) -> Self {
        Self {
            id: id.to_string(),
            kind,
            position: Some(p),
            waypoints: Vec::new(),
            tx_power_dbm: None,
        }
    }

    pub fn moving(id: &str, waypoints: Vec<[f64; 4]>) -> Self {
        Self {
            id: id.to_string(),
            kind: RadioKind::Mobile,
            position: None,
            waypoints,
            tx_power_dbm: None,
        }
    }

    pub fn position_at(&self, t: f64) -> Point3<f64> {
        if let Some(p) = self.position {
            return Point3::from(p);
        }
        let w = &self.waypoints;
        let at = |i: usize| Point3::new(w[i][1], w[i][2], w[i][3]);
        let i = w.partition_point(|p| p[0] <= t);
        if i == 0 {
            return at(0);
        }
        if i == w.len() {
            return at(w.len() - 1);
        }
        let (t0, t1) = (w[i - 1][0], w[i][0]);
        let s = (t - t0) / (t1 - t0);
        at(i - 1) + (at(i) - at(i - 1)) * s
    }
}

/// Timing of the generated logs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schedule {
    pub start_s: f64,
    pub end_s: f64,
    pub link_interval_s: f64,
    pub pose_interval_s: f64,
    pub scan_interval_s: f64,
    /// Links whose RSS falls below the noise floor produce no measurement.
    pub drop_below_floor: bool,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            start_s: 0.0,
            end_s: 600.0,
            link_interval_s: 1.0,
            pose_interval_s: 1.0,
            scan_interval_s: 10.0,
            drop_below_floor: true,
        }
    }
}

impl Schedule {
    /// Ticks `start_s + k·interval` in `[start_s, end_s)`.
    fn ticks(&self, interval: f64) -> impl Iterator<Item = f64> + '_ {
        let n = ((self.end_s - self.start_s) / interval - 1e-9).ceil().max(0.0) as usize;
        (0..n).map(move |k| self.start_s + k as f64 * interval)
    }
}

/// Changes the default obstacle attenuation from `time_s` onward.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaShift {
    pub time_s: f64,
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldSpec {
    pub bounds: Aabb,
    #[serde(default = "default_voxel_size")]
    pub voxel_size: f64,
    #[serde(default)]
    pub generator: GeneratorModel,
    #[serde(default)]
    pub params: GeneratorParams,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<AlphaShift>,
    #[serde(default)]
    pub radio: RadioParams,
    #[serde(default)]
    pub scan: ScanPattern,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    #[serde(default)]
    pub radios: Vec<RadioDef>,
}

fn default_voxel_size() -> f64 {
    0.5
}

impl WorldSpec {
    pub fn new(bounds: Aabb) -> Self {
        Self {
            bounds,
            voxel_size: default_voxel_size(),
            generator: GeneratorModel::default(),
            params: GeneratorParams::default(),
            noise_sigma: 0.0,
            seed: 0,
            shift: None,
            radio: RadioParams::default(),
            scan: ScanPattern::default(),
            schedule: Schedule::default(),
            obstacles: Vec::new(),
            radios: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !self.bounds.is_valid() {
            return bad("world bounds must be finite with min < max".into());
        }
        GridConfig::with_voxel_size(self.voxel_size).validate()?;
        for (i, o) in self.obstacles.iter().enumerate() {
            if !o.aabb().is_valid() || !o.aabb().within(&self.bounds) {
                return bad(format!("obstacle {i} must be a non-empty box inside the bounds"));
            }
            if o.attenuation.is_some_and(|a| !a.is_finite()) {
                return bad(format!("obstacle {i} attenuation must be finite"));
            }
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!("noise_sigma must be >= 0, got {}", self.noise_sigma));
        }
        let s = &self.scan;
        if !(s.azimuth_step_deg > 0.0 && s.azimuth_step_deg <= 360.0 && s.elevation_rings >= 1 && s.max_range > 0.0) {
            return bad("scan pattern needs a positive azimuth step, at least one ring and positive range".into());
        }
        let sc = &self.schedule;
        if !(sc.end_s >= sc.start_s && sc.link_interval_s > 0.0 && sc.pose_interval_s > 0.0 && sc.scan_interval_s > 0.0) {
            return bad("schedule needs end >= start and positive intervals".into());
        }
        if !(self.radio.frequency_hz > 0.0) {
            return bad("radio frequency must be positive".into());
        }
        let mut ids = HashSet::new();
        for r in &self.radios {
            if !ids.insert(r.id.as_str()) {
                return bad(format!("duplicate radio id {:?}", r.id));
            }
            if r.id.is_empty() || r.id.contains(|c: char| c == ',' || c.is_whitespace()) {
                return bad(format!("bad radio id {:?}", r.id));
            }
            match (&r.position, r.waypoints.is_empty()) {
                (Some(_), true) => {}
                (None, false) if r.waypoints.windows(2).all(|w| w[0][0] < w[1][0]) => {}
                _ => return bad(format!("radio {} needs a position or strictly time-ordered waypoints", r.id)),
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: WorldSpec = toml::from_str(text).map_err(|e| Error::Config(format!("world spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("world spec serializes")
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_toml(&text)
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.radio.frequency_hz
    }

    /// Default obstacle attenuation in effect at time `t`.
    pub fn alpha_at(&self, t: f64) -> f64 {
        match self.shift {
            Some(s) if t >= s.time_s => s.alpha,
            _ => self.params.alpha,
        }
    }

    pub fn boxes(&self) -> impl Iterator<Item = Aabb> + Clone + '_ {
        self.obstacles.iter().map(Obstacle::aabb)
    }

    pub fn inside_obstacle(&self, p: &Point3<f64>) -> bool {
        self.boxes().any(|b| b.contains(p))
    }

    pub fn grid_config(&self) -> GridConfig {
        GridConfig::with_voxel_size(self.voxel_size)
    }

    /// Feature-extraction radio matching the generator's frequency and antenna heights.
    pub fn radio_spec(&self) -> Result<RadioSpec> {
        RadioSpec::new(self.radio.frequency_hz)?.with_heights(self.radio.h_tx, self.radio.h_rx)
    }

    /// Scan integration parameters with the simulated sensor's range.
    pub fn update_params(&self) -> UpdateParams {
        UpdateParams {
            max_range: self.scan.max_range,
            ..UpdateParams::default()
        }
    }

    pub fn registry(&self) -> RadioRegistry {
        let mut reg = RadioRegistry::default();
        for r in &self.radios {
            reg.insert(
                &r.id,
                RadioInfo {
                    kind: r.kind,
                    position: r.position.map(Point3::from),
                    tx_power_dbm: r.tx_power_dbm.unwrap_or(self.radio.tx_power_dbm),
                },
            );
        }
        reg
    }

    pub fn radio(&self, id: &str) -> Option<&RadioDef> {
        self.radios.iter().find(|r| r.id == id)
    }
}

/// Rasterized ground truth: every in-bounds voxel labeled occupied or free.
#[derive(Clone, Debug)]
pub struct GroundTruth {
    pub grid: OccupancyGrid,
    pub occupied: HashSet<VoxelIndex>,
    /// Inclusive index range of in-bounds voxels.
    pub lo: VoxelIndex,
    pub hi: VoxelIndex,
}

impl GroundTruth {
    pub fn in_bounds(&self, v: VoxelIndex) -> bool {
        (0..3).all(|k| self.lo.axis(k) <= v.axis(k) && v.axis(k) <= self.hi.axis(k))
    }

    pub fn is_occupied(&self, v: VoxelIndex) -> bool {
        self.occupied.contains(&v)
    }

    pub fn voxels(&self) -> impl Iterator<Item = VoxelIndex> + '_ {
        let (lo, hi) = (self.lo, self.hi);
        (lo.z..=hi.z).flat_map(move |z| (lo.y..=hi.y).flat_map(move |y| (lo.x..=hi.x).map(move |x| VoxelIndex::new(x, y, z))))
    }
}

fn index_range(lo: f64, hi: f64, origin: f64, vs: f64) -> (i32, i32) {
    (((lo - origin) / vs).floor() as i32, ((hi - origin) / vs).ceil() as i32 - 1)
}

/// Labels voxels overlapping any obstacle (with positive volume) occupied at
/// `l_max`, and every other in-bounds voxel free at `l_min`.
pub fn rasterize(spec: &WorldSpec) -> Result<GroundTruth> {
    spec.validate()?;
    let config = spec.grid_config();
    let (vs, origin) = (config.voxel_size, config.origin);
    let mut grid = OccupancyGrid::new(config.clone())?;
    let r: Vec<(i32, i32)> = (0..3)
        .map(|k| index_range(spec.bounds.min[k], spec.bounds.max[k], origin[k], vs))
        .collect();
    let lo = VoxelIndex::new(r[0].0, r[1].0, r[2].0);
    let hi = VoxelIndex::new(r[0].1, r[1].1, r[2].1);

    let mut occupied = HashSet::new();
    for o in &spec.obstacles {
        let ranges: Vec<(i32, i32)> = (0..3)
            .map(|k| {
                let (a, b) = index_range(o.min[k], o.max[k], origin[k], vs);
                (a.max(r[k].0), b.min(r[k].1))
            })
            .collect();
        for z in ranges[2].0..=ranges[2].1 {
            for y in ranges[1].0..=ranges[1].1 {
                for x in ranges[0].0..=ranges[0].1 {
                    occupied.insert(VoxelIndex::new(x, y, z));
                }
            }
        }
    }
    let truth = GroundTruth {
        grid: OccupancyGrid::new(config.clone())?,
        occupied,
        lo,
        hi,
    };
    for v in truth.voxels() {
        grid.set(v, if truth.is_occupied(v) { config.l_max } else { config.l_min });
    }
    Ok(GroundTruth { grid, ..truth })
}

/// Offset past a surface at which simulated hits are reported, so the
/// return lands inside the obstacle's voxel.
const HIT_PUSH: f64 = 1e-4;

/// One simulated sweep from `position`; `None` if the pose is inside an obstacle.
///
/// Hits are exact ray/box intersections pushed slightly into the surface;
/// rays that reach `max_range` get a point just beyond it, which the
/// integrator treats as a no-return.
pub fn simulate_scan(spec: &WorldSpec, robot_id: &str, timestamp: f64, position: Point3<f64>) -> Option<ScanFrame> {
    if spec.inside_obstacle(&position) {
        log::warn!("scan pose of {robot_id} at t={timestamp} lies inside an obstacle; skipped");
        return None;
    }
    let boxes: Vec<Aabb> = spec.boxes().collect();
    let range = spec.scan.max_range;
    let points = spec
        .scan
        .directions()
        .into_iter()
        .map(|dir| {
            let d = match first_hit(&position, &dir, range, &boxes) {
                Some(t) if t + HIT_PUSH < range => t + HIT_PUSH,
                _ => range * (1.0 + 1e-6),
            };
            Point3::from(dir * d)
        })
        .collect();
    Some(ScanFrame::axis_aligned(robot_id, timestamp, position, points))
}

/// Scans at every `(robot, time, position)` pose, skipping poses inside obstacles.
pub fn simulate_scans(spec: &WorldSpec, poses: &[(String, f64, Point3<f64>)]) -> Vec<ScanFrame> {
    poses
        .iter()
        .filter_map(|(id, t, p)| simulate_scan(spec, id, *t, *p))
        .collect()
}

/// Length of segment `a → b` inside obstacles, m.
pub fn obstructed_length(spec: &WorldSpec, a: &Point3<f64>, b: &Point3<f64>) -> f64 {
    let boxes: Vec<Aabb> = spec.boxes().collect();
    weighted_length(a, b, boxes.iter().map(|bx| (bx, 1.0)))
}

/// Obstacle attenuation along `a → b` at time `t`, dB.
pub fn obstacle_attenuation(spec: &WorldSpec, a: &Point3<f64>, b: &Point3<f64>, t: f64) -> f64 {
    let alpha = spec.alpha_at(t);
    let boxes: Vec<(Aabb, f64)> = spec
        .obstacles
        .iter()
        .map(|o| (o.aabb(), o.attenuation.unwrap_or(alpha)))
        .collect();
    weighted_length(a, b, boxes.iter().map(|(bx, w)| (bx, *w)))
}

/// Exact line of sight: the open segment crosses no obstacle volume.
pub fn exact_los(spec: &WorldSpec, a: &Point3<f64>, b: &Point3<f64>) -> bool {
    obstructed_length(spec, a, b) <= 1e-9
}

/// Worst diffraction parameter from exact geometry, sampled like the grid
/// scan: outside obstacles `h` is minus the distance to the nearest obstacle
/// across the zone (or minus the zone radius), inside it is the distance to
/// the nearest way out (capped at the radius).
pub fn exact_worst_v(spec: &WorldSpec, a: &Point3<f64>, b: &Point3<f64>) -> Result<f64> {
    let axis = b - a;
    let d = axis.norm();
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::input("exact_worst_v: endpoints must be distinct and finite"));
    }
    let boxes: Vec<Aabb> = spec.boxes().collect();
    let dirs = zone_directions(&(axis / d));
    let lambda = spec.wavelength();
    let n = ((d / spec.voxel_size).ceil() as usize).saturating_sub(1).max(1);
    let mut worst = f64::NEG_INFINITY;
    for i in 1..=n {
        let t = i as f64 / (n + 1) as f64;
        let (d1, d2) = (t * d, (1.0 - t) * d);
        let p = a + axis * t;
        let r = fresnel_radius(d1, d2, lambda)?;
        let h = if boxes.iter().any(|bx| bx.contains(&p)) {
            dirs.iter().map(|u| exit_distance(&p, u, r, &boxes)).fold(r, f64::min)
        } else {
            -dirs
                .iter()
                .filter_map(|u| first_hit(&p, u, r, &boxes))
                .fold(r, f64::min)
        };
        worst = worst.max(diffraction_parameter(h, d1, d2, lambda)?);
    }
    Ok(worst)
}

/// Noise-free path loss of link `a → b` at time `t` under the spec's generator.
pub fn ground_truth_pl(spec: &WorldSpec, a: &Point3<f64>, b: &Point3<f64>, t: f64) -> Result<f64> {
    let d = (b - a).norm();
    let p = &spec.params;
    Ok(match spec.generator {
        GeneratorModel::Simple => p.los().predict_distance(d),
        GeneratorModel::Visibility => {
            if exact_los(spec, a, b) {
                p.los().predict_distance(d)
            } else {
                p.nlos().predict_distance(d)
            }
        }
        GeneratorModel::Shadowing => p.los().predict_distance(d) + obstacle_attenuation(spec, a, b, t),
        GeneratorModel::Full => {
            let shadowed = p.los().predict_distance(d) + obstacle_attenuation(spec, a, b, t);
            let r = &spec.radio;
            let rl = reflection_loss(d, r.h_tx, r.h_rx, spec.wavelength(), -1.0, -40.0)?;
            let dl = knife_edge_loss(exact_worst_v(spec, a, b)?)?;
            shadowed - rl - dl
        }
    })
}

/// Path loss computed from grid features with the same laws; closed loops
/// through the fitting code recover `params` exactly.
pub fn pl_from_features(model: GeneratorModel, params: &GeneratorParams, f: &FeatureVector) -> f64 {
    let los = params.los().predict_distance(f.distance);
    match model {
        GeneratorModel::Simple => los,
        GeneratorModel::Visibility if f.strictly_visible => los,
        GeneratorModel::Visibility => params.nlos().predict_distance(f.distance),
        GeneratorModel::Shadowing => los + params.alpha * f.not_free_meters,
        GeneratorModel::Full => los + params.alpha * f.not_free_meters - f.reflection_loss - f.diffraction_loss,
    }
}

/// One scheduled transmission.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkEvent {
    pub timestamp: f64,
    pub tx_id: String,
    pub rx_id: String,
    pub tx_pos: Point3<f64>,
    pub rx_pos: Point3<f64>,
    pub tx_power_dbm: f64,
}

/// Measurements for `events` with seeded Gaussian noise on path loss.
/// Records carry their exact positions.
pub fn generate_dataset(spec: &WorldSpec, events: &[LinkEvent]) -> Result<Vec<MeasurementRecord>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::Config(format!("noise: {e}")))?;
    events
        .iter()
        .map(|e| {
            if e.tx_pos == e.rx_pos {
                return Err(Error::input(format!("link {}->{} at t={} has coincident ends", e.tx_id, e.rx_id, e.timestamp)));
            }
            let pl = ground_truth_pl(spec, &e.tx_pos, &e.rx_pos, e.timestamp)? + noise.sample(&mut rng);
            Ok(MeasurementRecord {
                timestamp: e.timestamp,
                tx_id: e.tx_id.clone(),
                rx_id: e.rx_id.clone(),
                tx_pos: Some(e.tx_pos),
                rx_pos: Some(e.rx_pos),
                rss_dbm: e.tx_power_dbm - pl,
                noise_dbm: spec.radio.noise_dbm,
                tx_power_dbm: e.tx_power_dbm,
                frequency_hz: spec.radio.frequency_hz,
                synthetic: false,
            })
        })
        .collect()
}

/// Every log a world spec describes.
#[derive(Clone, Debug)]
pub struct Fixture {
    pub radios: RadioRegistry,
    pub poses: Vec<PoseRecord>,
    pub scans: Vec<ScanFrame>,
    pub measurements: Vec<MeasurementRecord>,
}

/// Link events for every radio pair (lower id transmits) at every link tick.
pub fn link_schedule(spec: &WorldSpec) -> Vec<LinkEvent> {
    let mut radios: Vec<&RadioDef> = spec.radios.iter().collect();
    radios.sort_by(|a, b| a.id.cmp(&b.id));
    let mut events = Vec::new();
    for t in spec.schedule.ticks(spec.schedule.link_interval_s) {
        for (i, a) in radios.iter().enumerate() {
            for b in &radios[i + 1..] {
                let (pa, pb) = (a.position_at(t), b.position_at(t));
                if pa == pb {
                    continue;
                }
                events.push(LinkEvent {
                    timestamp: t,
                    tx_id: a.id.clone(),
                    rx_id: b.id.clone(),
                    tx_pos: pa,
                    rx_pos: pb,
                    tx_power_dbm: a.tx_power_dbm.unwrap_or(spec.radio.tx_power_dbm),
                });
            }
        }
    }
    events
}

/// Poses of every radio, scans from mobile radios, and measurements.
pub fn build_fixture(spec: &WorldSpec) -> Result<Fixture> {
    spec.validate()?;
    let sched = &spec.schedule;
    let mut radios: Vec<&RadioDef> = spec.radios.iter().collect();
    radios.sort_by(|a, b| a.id.cmp(&b.id));

    let mut poses = Vec::new();
    for t in sched.ticks(sched.pose_interval_s) {
        for r in &radios {
            poses.push(PoseRecord::at(t, &r.id, r.position_at(t)));
        }
    }
    let mut scan_poses = Vec::new();
    for t in sched.ticks(sched.scan_interval_s) {
        for r in radios.iter().filter(|r| r.kind == RadioKind::Mobile) {
            scan_poses.push((r.id.clone(), t, r.position_at(t)));
        }
    }
    let scans = simulate_scans(spec, &scan_poses);
    let mut measurements = generate_dataset(spec, &link_schedule(spec))?;
    if sched.drop_below_floor {
        measurements.retain(|m| m.rss_dbm >= m.noise_dbm);
    }
    Ok(Fixture {
        radios: spec.registry(),
        poses,
        scans,
        measurements,
    })
}

/// Agreement between a scan-built grid and the ground truth.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fidelity {
    /// Observed in-bounds voxels within range of a sensor position.
    pub observed: usize,
    /// Of those, Occupied where truth is occupied or Free where truth is free.
    pub consistent: usize,
}

impl Fidelity {
    pub fn fraction(&self) -> f64 {
        if self.observed == 0 {
            0.0
        } else {
            self.consistent as f64 / self.observed as f64
        }
    }
}

/// Compares every observed (not Unknown) in-bounds voxel whose center lies
/// within `range` of some sensor position against the truth labels.
/// MaybeOccupied counts as inconsistent.
pub fn mapping_fidelity(truth: &GroundTruth, grid: &OccupancyGrid, sensors: &[Point3<f64>], range: f64) -> Fidelity {
    let mut f = Fidelity {
        observed: 0,
        consistent: 0,
    };
    for (v, _) in grid.cells() {
        if !truth.in_bounds(v) {
            continue;
        }
        let c = grid.index_to_center(v);
        if !sensors.iter().any(|s| (c - s).norm() <= range) {
            continue;
        }
        let state = grid.classify(v);
        if state == VoxelState::Unknown {
            continue;
        }
        f.observed += 1;
        let ok = match state {
            VoxelState::Occupied => truth.is_occupied(v),
            VoxelState::Free => !truth.is_occupied(v),
            _ => false,
        };
        f.consistent += usize::from(ok);
    }
    f
}
