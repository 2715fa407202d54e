use nalgebra::Point3;

use super::{OccupancyGrid, VoxelIndex, VoxelState};
use crate::error::{Error, Result};

/// Grid coordinates beyond this magnitude are rejected rather than wrapped.
const MAX_GRID_COORD: f64 = (1u64 << 30) as f64;
/// Upper bound on voxels visited by one segment.
const MAX_STEPS: u64 = 1 << 26;

/// Every voxel whose interior the closed segment `[a, b]` passes through,
/// ordered from `a` to `b`.
///
/// Incremental 3D DDA: each step advances along whichever axis reaches its
/// next cell boundary first. Exact ties go to the lowest axis (x, then y,
/// then z). Only axes that have not yet reached the end cell may step, which
/// bounds the walk to exactly `|Δi| + |Δj| + |Δk|` steps.
pub fn voxel_traversal(
    a: &Point3<f64>,
    b: &Point3<f64>,
    voxel_size: f64,
    origin: &Point3<f64>,
) -> Result<Vec<VoxelIndex>> {
    if !a.coords.iter().chain(b.coords.iter()).all(|c| c.is_finite()) {
        return Err(Error::input("segment endpoints must be finite"));
    }
    let ga = (a - origin) / voxel_size;
    let gb = (b - origin) / voxel_size;
    if ga.iter().chain(gb.iter()).any(|c| c.abs() >= MAX_GRID_COORD) {
        return Err(Error::input("segment endpoint outside addressable grid range"));
    }

    let start = VoxelIndex::new(ga.x.floor() as i32, ga.y.floor() as i32, ga.z.floor() as i32);
    let end = VoxelIndex::new(gb.x.floor() as i32, gb.y.floor() as i32, gb.z.floor() as i32);

    let steps: u64 = (0..3)
        .map(|i| (end.axis(i) as i64 - start.axis(i) as i64).unsigned_abs())
        .sum();
    if steps > MAX_STEPS {
        return Err(Error::input(format!("segment crosses {steps} voxels")));
    }

    let mut step = [0i32; 3];
    let mut t_max = [f64::INFINITY; 3];
    let mut t_delta = [f64::INFINITY; 3];
    for i in 0..3 {
        let d = gb[i] - ga[i];
        let cell = start.axis(i) as f64;
        if d > 0.0 {
            step[i] = 1;
            t_max[i] = (cell + 1.0 - ga[i]) / d;
            t_delta[i] = 1.0 / d;
        } else if d < 0.0 {
            step[i] = -1;
            t_max[i] = (cell - ga[i]) / d;
            t_delta[i] = -1.0 / d;
        }
    }

    let mut out = Vec::with_capacity(steps as usize + 1);
    let mut cur = start;
    out.push(cur);
    while cur != end {
        let mut axis = usize::MAX;
        for i in 0..3 {
            if cur.axis(i) != end.axis(i) && (axis == usize::MAX || t_max[i] < t_max[axis]) {
                axis = i;
            }
        }
        *cur.axis_mut(axis) += step[axis];
        t_max[axis] += t_delta[axis];
        out.push(cur);
    }
    Ok(out)
}

/// Voxels crossed by `[a, b]` paired with their classification in `grid`.
pub fn traverse_segment(
    grid: &OccupancyGrid,
    a: &Point3<f64>,
    b: &Point3<f64>,
) -> Result<Vec<(VoxelIndex, VoxelState)>> {
    let cells = voxel_traversal(a, b, grid.voxel_size(), &grid.origin())?;
    Ok(cells.into_iter().map(|v| (v, grid.classify(v))).collect())
}
