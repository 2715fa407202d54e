//! Sparse 3D occupancy grid with log-odds Bayesian updates.
//!
//! Cells live in 16³ blocks held behind `Arc`s inside a hash map. Cloning a
//! grid copies only the block table, and a write touches (and, if shared,
//! copies) a single block, so readers can hold a cheap immutable snapshot
//! while a single writer keeps integrating scans.

mod dump;
mod scan;
mod traverse;

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{Point3, Vector3};

use crate::error::{Error, Result};

pub use dump::{parse_grid_dump, read_grid_dump, write_grid_dump};
pub use scan::{
    integrate_scan, integrate_scans, parse_scan_file, read_scan_file, write_scan_file, ScanFrame,
    UpdateParams,
};
pub use traverse::{traverse_segment, voxel_traversal};

/// Largest voxel edge accepted by [`GridConfig::validate`].
pub const MAX_VOXEL_SIZE: f64 = 1.5;

const BLOCK_BITS: i32 = 4;
const BLOCK_DIM: i32 = 1 << BLOCK_BITS;
const BLOCK_LEN: usize = (BLOCK_DIM * BLOCK_DIM * BLOCK_DIM) as usize;

/// Integer voxel coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VoxelIndex {
    pub x: i32,
    pub y: i32,
    pub z: i32,
}

impl VoxelIndex {
    pub const fn new(x: i32, y: i32, z: i32) -> Self {
        Self { x, y, z }
    }

    pub(crate) fn axis(&self, axis: usize) -> i32 {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    pub(crate) fn axis_mut(&mut self, axis: usize) -> &mut i32 {
        match axis {
            0 => &mut self.x,
            1 => &mut self.y,
            _ => &mut self.z,
        }
    }

    fn split(self) -> (BlockKey, usize) {
        let key = BlockKey(
            self.x >> BLOCK_BITS,
            self.y >> BLOCK_BITS,
            self.z >> BLOCK_BITS,
        );
        let m = BLOCK_DIM - 1;
        let offset = ((self.x & m) | ((self.y & m) << BLOCK_BITS) | ((self.z & m) << (2 * BLOCK_BITS)))
            as usize;
        (key, offset)
    }

    fn join(key: BlockKey, offset: usize) -> Self {
        let m = (BLOCK_DIM - 1) as usize;
        Self {
            x: (key.0 << BLOCK_BITS) | (offset & m) as i32,
            y: (key.1 << BLOCK_BITS) | ((offset >> BLOCK_BITS) & m) as i32,
            z: (key.2 << BLOCK_BITS) | ((offset >> (2 * BLOCK_BITS)) & m) as i32,
        }
    }
}

impl From<(i32, i32, i32)> for VoxelIndex {
    fn from((x, y, z): (i32, i32, i32)) -> Self {
        Self { x, y, z }
    }
}

/// Discrete occupancy state of a voxel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VoxelState {
    Free,
    Occupied,
    MaybeOccupied,
    Unknown,
}

impl VoxelState {
    /// Anything that is not positively known to be empty.
    pub fn is_not_free(self) -> bool {
        self != VoxelState::Free
    }
}

/// Log-odds thresholds splitting stored cells into Free / MaybeOccupied / Occupied.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    free: f64,
    occupied: f64,
}

impl Thresholds {
    pub fn new(free: f64, occupied: f64) -> Result<Self> {
        if !(free.is_finite() && occupied.is_finite()) || free >= occupied {
            return Err(Error::Config(format!(
                "free threshold {free} must be strictly below occupied threshold {occupied}"
            )));
        }
        Ok(Self { free, occupied })
    }

    pub fn free(&self) -> f64 {
        self.free
    }

    pub fn occupied(&self) -> f64 {
        self.occupied
    }

    pub fn classify(&self, log_odds: Option<f64>) -> VoxelState {
        match log_odds {
            None => VoxelState::Unknown,
            Some(l) if l >= self.occupied => VoxelState::Occupied,
            Some(l) if l <= self.free => VoxelState::Free,
            Some(_) => VoxelState::MaybeOccupied,
        }
    }
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            free: -0.7,
            occupied: 0.7,
        }
    }
}

/// Static configuration of an [`OccupancyGrid`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridConfig {
    pub voxel_size: f64,
    pub origin: Point3<f64>,
    pub l_min: f64,
    pub l_max: f64,
    pub thresholds: Thresholds,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            voxel_size: 0.5,
            origin: Point3::origin(),
            l_min: -4.0,
            l_max: 4.0,
            thresholds: Thresholds::default(),
        }
    }
}

impl GridConfig {
    pub fn with_voxel_size(voxel_size: f64) -> Self {
        Self {
            voxel_size,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.voxel_size.is_finite() && self.voxel_size > 0.0) {
            return Err(Error::Config(format!(
                "voxel size must be positive, got {}",
                self.voxel_size
            )));
        }
        if self.voxel_size > MAX_VOXEL_SIZE {
            return Err(Error::Config(format!(
                "voxel size {} exceeds the {MAX_VOXEL_SIZE} m limit",
                self.voxel_size
            )));
        }
        if !self.origin.coords.iter().all(|c| c.is_finite()) {
            return Err(Error::Config("grid origin must be finite".into()));
        }
        if !(self.l_min.is_finite() && self.l_max.is_finite() && self.l_min < self.l_max) {
            return Err(Error::Config(format!(
                "log-odds clamp [{}, {}] is empty",
                self.l_min, self.l_max
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct BlockKey(i32, i32, i32);

#[derive(Clone)]
struct Block {
    log_odds: [f64; BLOCK_LEN],
    present: [u64; BLOCK_LEN / 64],
}

impl Block {
    fn empty() -> Self {
        Self {
            log_odds: [0.0; BLOCK_LEN],
            present: [0; BLOCK_LEN / 64],
        }
    }

    fn get(&self, offset: usize) -> Option<f64> {
        (self.present[offset / 64] >> (offset % 64) & 1 == 1).then(|| self.log_odds[offset])
    }

    /// Returns true when the cell was previously absent.
    fn put(&mut self, offset: usize, value: f64) -> bool {
        let word = &mut self.present[offset / 64];
        let bit = 1u64 << (offset % 64);
        let fresh = *word & bit == 0;
        *word |= bit;
        self.log_odds[offset] = value;
        fresh
    }

    fn offsets(&self) -> impl Iterator<Item = usize> + '_ {
        self.present.iter().enumerate().flat_map(|(w, &bits)| {
            (0..64).filter(move |b| bits >> b & 1 == 1).map(move |b| w * 64 + b)
        })
    }
}

/// Sparse log-odds occupancy grid. Absent cells are unknown.
#[derive(Clone)]
pub struct OccupancyGrid {
    config: GridConfig,
    blocks: HashMap<BlockKey, Arc<Block>>,
    len: usize,
}

impl std::fmt::Debug for OccupancyGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OccupancyGrid")
            .field("config", &self.config)
            .field("cells", &self.len)
            .field("blocks", &self.blocks.len())
            .finish()
    }
}

impl OccupancyGrid {
    pub fn new(config: GridConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            blocks: HashMap::new(),
            len: 0,
        })
    }

    pub fn with_voxel_size(voxel_size: f64) -> Result<Self> {
        Self::new(GridConfig::with_voxel_size(voxel_size))
    }

    pub fn config(&self) -> &GridConfig {
        &self.config
    }

    pub fn voxel_size(&self) -> f64 {
        self.config.voxel_size
    }

    pub fn origin(&self) -> Point3<f64> {
        self.config.origin
    }

    pub fn thresholds(&self) -> &Thresholds {
        &self.config.thresholds
    }

    /// Number of stored (observed) cells.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Immutable copy for concurrent readers. Blocks are shared until written.
    pub fn snapshot(&self) -> OccupancyGrid {
        self.clone()
    }

    /// Voxel containing `p`. Coordinates on a face belong to the upper cell.
    pub fn world_to_index(&self, p: &Point3<f64>) -> VoxelIndex {
        let g = (p - self.config.origin) / self.config.voxel_size;
        VoxelIndex::new(g.x.floor() as i32, g.y.floor() as i32, g.z.floor() as i32)
    }

    pub fn index_to_center(&self, v: VoxelIndex) -> Point3<f64> {
        let vs = self.config.voxel_size;
        self.config.origin
            + Vector3::new(
                (v.x as f64 + 0.5) * vs,
                (v.y as f64 + 0.5) * vs,
                (v.z as f64 + 0.5) * vs,
            )
    }

    pub fn log_odds(&self, v: VoxelIndex) -> Option<f64> {
        let (key, offset) = v.split();
        self.blocks.get(&key).and_then(|b| b.get(offset))
    }

    /// Stores a clamped log-odds value, returning what was stored.
    pub fn set(&mut self, v: VoxelIndex, log_odds: f64) -> f64 {
        let value = log_odds.clamp(self.config.l_min, self.config.l_max);
        let (key, offset) = v.split();
        let block = self
            .blocks
            .entry(key)
            .or_insert_with(|| Arc::new(Block::empty()));
        if Arc::make_mut(block).put(offset, value) {
            self.len += 1;
        }
        value
    }

    /// Bayesian update in log-odds form: add `delta`, then clamp.
    pub fn update(&mut self, v: VoxelIndex, delta: f64) -> f64 {
        let current = self.log_odds(v).unwrap_or(0.0);
        self.set(v, current + delta)
    }

    pub fn classify(&self, v: VoxelIndex) -> VoxelState {
        self.config.thresholds.classify(self.log_odds(v))
    }

    pub fn classify_with(&self, v: VoxelIndex, thresholds: &Thresholds) -> VoxelState {
        thresholds.classify(self.log_odds(v))
    }

    pub fn state_at(&self, p: &Point3<f64>) -> VoxelState {
        self.classify(self.world_to_index(p))
    }

    /// All stored cells in ascending index order.
    pub fn cells(&self) -> Vec<(VoxelIndex, f64)> {
        let mut out: Vec<(VoxelIndex, f64)> = self
            .blocks
            .iter()
            .flat_map(|(&key, block)| {
                block
                    .offsets()
                    .map(move |o| (VoxelIndex::join(key, o), block.log_odds[o]))
            })
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_split_round_trips_negative_indices() {
        for v in [
            VoxelIndex::new(0, 0, 0),
            VoxelIndex::new(-1, -17, 33),
            VoxelIndex::new(15, 16, -16),
            VoxelIndex::new(i32::MIN / 2, 7, i32::MAX / 2),
        ] {
            let (k, o) = v.split();
            assert_eq!(VoxelIndex::join(k, o), v);
        }
    }

    #[test]
    fn unknown_until_touched() {
        let g = OccupancyGrid::with_voxel_size(0.5).unwrap();
        assert_eq!(g.classify(VoxelIndex::new(3, 4, 5)), VoxelState::Unknown);
        assert!(g.is_empty());
    }

    #[test]
    fn classification_thresholds() {
        let mut g = OccupancyGrid::with_voxel_size(0.5).unwrap();
        let v = VoxelIndex::new(1, 1, 1);
        g.set(v, 4.0);
        assert_eq!(g.classify(v), VoxelState::Occupied);
        g.set(v, 0.0);
        assert_eq!(g.classify(v), VoxelState::MaybeOccupied);
        g.set(v, -0.7);
        assert_eq!(g.classify(v), VoxelState::Free);
        g.set(v, 0.7);
        assert_eq!(g.classify(v), VoxelState::Occupied);
    }

    #[test]
    fn inverted_thresholds_rejected() {
        assert!(matches!(Thresholds::new(0.7, -0.7), Err(Error::Config(_))));
        assert!(matches!(Thresholds::new(0.5, 0.5), Err(Error::Config(_))));
    }

    #[test]
    fn voxel_size_limits() {
        assert!(OccupancyGrid::with_voxel_size(0.0).is_err());
        assert!(OccupancyGrid::with_voxel_size(-1.0).is_err());
        assert!(OccupancyGrid::with_voxel_size(1.6).is_err());
        assert!(OccupancyGrid::with_voxel_size(1.5).is_ok());
    }

    #[test]
    fn updates_clamp() {
        let mut g = OccupancyGrid::with_voxel_size(1.0).unwrap();
        let v = VoxelIndex::new(0, 0, 0);
        for _ in 0..20 {
            g.update(v, 0.85);
        }
        assert_eq!(g.log_odds(v), Some(4.0));
        for _ in 0..40 {
            g.update(v, -0.4);
        }
        assert_eq!(g.log_odds(v), Some(-4.0));
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn snapshot_is_isolated_from_later_writes() {
        let mut g = OccupancyGrid::with_voxel_size(1.0).unwrap();
        let v = VoxelIndex::new(2, 2, 2);
        g.set(v, 1.0);
        let snap = g.snapshot();
        g.set(v, -1.0);
        g.set(VoxelIndex::new(100, 0, 0), 2.0);
        assert_eq!(snap.log_odds(v), Some(1.0));
        assert_eq!(snap.len(), 1);
        assert_eq!(g.log_odds(v), Some(-1.0));
    }

    #[test]
    fn cells_sorted() {
        let mut g = OccupancyGrid::with_voxel_size(1.0).unwrap();
        g.set(VoxelIndex::new(20, 0, 0), 1.0);
        g.set(VoxelIndex::new(-20, 0, 0), 1.0);
        g.set(VoxelIndex::new(0, 0, 0), 1.0);
        let xs: Vec<i32> = g.cells().iter().map(|c| c.0.x).collect();
        assert_eq!(xs, vec![-20, 0, 20]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn index_center_round_trip(x in -5000i32..5000, y in -5000i32..5000, z in -5000i32..5000,
                                       vs in 0.05f64..1.5, ox in -100.0f64..100.0) {
                let g = OccupancyGrid::new(GridConfig {
                    voxel_size: vs,
                    origin: Point3::new(ox, -ox, 0.5 * ox),
                    ..GridConfig::default()
                }).unwrap();
                let v = VoxelIndex::new(x, y, z);
                prop_assert_eq!(g.world_to_index(&g.index_to_center(v)), v);
            }
        }
    }
}
