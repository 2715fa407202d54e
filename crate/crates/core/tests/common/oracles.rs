//! Reference implementations written independently of the library code.

#![allow(dead_code)]

use std::collections::BTreeSet;

use radiomap::grid::VoxelIndex;
use radiomap::Point3;

fn voxel_of(p: [f64; 3], vs: f64, origin: [f64; 3]) -> VoxelIndex {
    VoxelIndex::new(
        ((p[0] - origin[0]) / vs).floor() as i32,
        ((p[1] - origin[1]) / vs).floor() as i32,
        ((p[2] - origin[2]) / vs).floor() as i32,
    )
}

fn lerp(a: &Point3<f64>, b: &Point3<f64>, t: f64) -> [f64; 3] {
    [a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t, a.z + (b.z - a.z) * t]
}

/// Voxels hit by points spaced `vs / 100` along the segment, endpoints included.
pub fn supersampled_voxels(a: &Point3<f64>, b: &Point3<f64>, vs: f64, origin: [f64; 3]) -> BTreeSet<VoxelIndex> {
    let len = (b - a).norm();
    let n = ((len / (vs / 100.0)).ceil() as usize).max(1);
    (0..=n).map(|i| voxel_of(lerp(a, b, i as f64 / n as f64), vs, origin)).collect()
}

/// Voxels containing the midpoints between consecutive grid-plane crossings
/// of the segment, plus the endpoint voxels.
pub fn crossing_voxels(a: &Point3<f64>, b: &Point3<f64>, vs: f64, origin: [f64; 3]) -> BTreeSet<VoxelIndex> {
    let mut ts = vec![0.0, 1.0];
    for k in 0..3 {
        let (pa, pb) = ((a[k] - origin[k]) / vs, (b[k] - origin[k]) / vs);
        if pa == pb {
            continue;
        }
        let (lo, hi) = (pa.min(pb), pa.max(pb));
        let mut plane = lo.floor() + 1.0;
        while plane < hi {
            ts.push((plane - pa) / (pb - pa));
            plane += 1.0;
        }
    }
    ts.sort_by(f64::total_cmp);
    let mut out: BTreeSet<VoxelIndex> = [voxel_of(lerp(a, b, 0.0), vs, origin), voxel_of(lerp(a, b, 1.0), vs, origin)].into();
    for w in ts.windows(2) {
        if w[1] > w[0] {
            out.insert(voxel_of(lerp(a, b, 0.5 * (w[0] + w[1])), vs, origin));
        }
    }
    out
}

/// Exact traversal set: crossings ∪ supersampling.
pub fn traversal_oracle(a: &Point3<f64>, b: &Point3<f64>, vs: f64, origin: [f64; 3]) -> BTreeSet<VoxelIndex> {
    let mut s = crossing_voxels(a, b, vs, origin);
    s.extend(supersampled_voxels(a, b, vs, origin));
    s
}

pub fn fresnel_radius(d1: f64, d2: f64, lambda: f64) -> f64 {
    (lambda / (1.0 / d1 + 1.0 / d2)).sqrt()
}

/// Two-ray interference in dB: path difference from `sqrt(1+x²) - 1`
/// evaluated through `expm1`/`ln_1p`, phasor summed component-wise.
pub fn reflection_loss(d: f64, h_tx: f64, h_rx: f64, lambda: f64, gamma: f64) -> f64 {
    let excess = |h: f64| {
        let x = h / d;
        d * (0.5 * (x * x).ln_1p()).exp_m1()
    };
    let delta = excess(h_tx + h_rx) - excess(h_tx - h_rx);
    let phase = std::f64::consts::TAU * delta / lambda;
    let re = 1.0 + gamma * phase.cos();
    let im = gamma * phase.sin();
    10.0 * (re * re + im * im).log10()
}

pub fn diffraction_parameter(h: f64, d1: f64, d2: f64, lambda: f64) -> f64 {
    h * ((2.0 / lambda) * (1.0 / d1 + 1.0 / d2)).sqrt()
}

/// Lee's piecewise knife-edge approximation, capped at 0 dB.
pub fn lee_knife_edge(v: f64) -> f64 {
    let db = if v <= -1.0 {
        0.0
    } else if v <= 0.0 {
        20.0 * (0.5 - 0.62 * v).log10()
    } else if v <= 1.0 {
        20.0 * (0.5 * (-0.95 * v).exp()).log10()
    } else if v <= 2.4 {
        20.0 * (0.4 - (0.1184 - (0.38 - 0.1 * v).powi(2)).sqrt()).log10()
    } else {
        20.0 * (0.225 / v).log10()
    };
    db.min(0.0)
}
