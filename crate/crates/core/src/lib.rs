//! Radio propagation environment modeling and received-signal-strength
//! prediction from sparse, scan-built occupancy grids.
//!
//! The pipeline: LiDAR scans are raytraced into an [`grid::OccupancyGrid`];
//! [`features::extract`] turns a transmitter/receiver pair plus a grid
//! snapshot into a [`features::FeatureVector`]; those features drive both the
//! regression models in [`conventional`] and the small networks in
//! [`learned`]. [`pipeline`] prepares measurement logs, [`replay`] runs the
//! online learning loop, [`signal_map`] renders coverage, and [`synthworld`]
//! produces ground-truth fixtures.

pub mod conventional;
pub mod error;
pub mod features;
pub mod grid;
pub mod learned;
pub mod pipeline;
pub mod replay;
pub mod signal_map;
pub mod synthworld;

pub use error::{Error, Result};
pub use nalgebra::Point3;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Anything that maps link features to a predicted attenuation in dB.
pub trait PathLossPredictor {
    fn predict_pl(&self, features: &features::FeatureVector) -> f64;
}

impl<P: PathLossPredictor + ?Sized> PathLossPredictor for &P {
    fn predict_pl(&self, features: &features::FeatureVector) -> f64 {
        (**self).predict_pl(features)
    }
}
