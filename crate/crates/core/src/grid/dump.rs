use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Point3;

use super::{GridConfig, OccupancyGrid, VoxelIndex};
use crate::error::{Error, Result};

/// Text dump: `voxel_size <m>`, `origin <x> <y> <z>`, then `i j k log_odds`
/// per stored cell in ascending index order.
pub fn write_grid_dump(grid: &OccupancyGrid) -> String {
    let o = grid.origin();
    let mut out = String::new();
    let _ = writeln!(out, "voxel_size {}", grid.voxel_size());
    let _ = writeln!(out, "origin {} {} {}", o.x, o.y, o.z);
    for (v, l) in grid.cells() {
        let _ = writeln!(out, "{} {} {} {}", v.x, v.y, v.z, l);
    }
    out
}

/// Parses a grid dump. Clamps and thresholds come from `base`; the header
/// overrides voxel size and origin.
pub fn parse_grid_dump(text: &str, base: GridConfig) -> Result<OccupancyGrid> {
    let mut lines = text.lines().enumerate().map(|(n, l)| (n + 1, l));

    let (ln, header) = lines.next().ok_or_else(|| Error::format(1, "missing voxel_size header"))?;
    let voxel_size = match header.split_whitespace().collect::<Vec<_>>()[..] {
        ["voxel_size", v] => v
            .parse::<f64>()
            .map_err(|_| Error::format(ln, "voxel_size is not a number"))?,
        _ => return Err(Error::format(ln, "expected `voxel_size <m>`")),
    };
    let (ln, header) = lines.next().ok_or_else(|| Error::format(2, "missing origin header"))?;
    let origin = match header.split_whitespace().collect::<Vec<_>>()[..] {
        ["origin", x, y, z] => {
            let c: Vec<f64> = [x, y, z]
                .iter()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::format(ln, "origin coordinate is not a number"))?;
            Point3::new(c[0], c[1], c[2])
        }
        _ => return Err(Error::format(ln, "expected `origin <x> <y> <z>`")),
    };

    let mut grid = OccupancyGrid::new(GridConfig {
        voxel_size,
        origin,
        ..base
    })
    .map_err(|e| Error::format(1, e.to_string()))?;

    for (ln, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            return Err(Error::format(ln, "cell line needs `i j k log_odds`"));
        }
        let idx: Vec<i32> = f[..3]
            .iter()
            .map(|s| s.parse::<i32>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::format(ln, "voxel index is not an integer"))?;
        let l: f64 = f[3]
            .parse()
            .map_err(|_| Error::format(ln, "log-odds is not a number"))?;
        if !l.is_finite() {
            return Err(Error::format(ln, "log-odds must be finite"));
        }
        grid.set(VoxelIndex::new(idx[0], idx[1], idx[2]), l);
    }
    Ok(grid)
}

pub fn read_grid_dump(path: impl AsRef<Path>, base: GridConfig) -> Result<OccupancyGrid> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_grid_dump(&text, base)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_round_trip() {
        let mut g = OccupancyGrid::new(GridConfig {
            voxel_size: 0.25,
            origin: Point3::new(-3.5, 1.0, 0.125),
            ..GridConfig::default()
        })
        .unwrap();
        g.set(VoxelIndex::new(0, 0, 0), 0.85);
        g.set(VoxelIndex::new(-40, 17, 3), -0.4 * 3.0);
        g.set(VoxelIndex::new(100, -100, 0), 4.0);
        let text = write_grid_dump(&g);
        let back = parse_grid_dump(&text, GridConfig::default()).unwrap();
        assert_eq!(back.cells(), g.cells());
        assert_eq!(back.voxel_size(), 0.25);
        assert_eq!(back.origin(), g.origin());
        assert_eq!(write_grid_dump(&back), text);
    }

    #[test]
    fn dump_errors() {
        assert!(parse_grid_dump("", GridConfig::default()).is_err());
        assert!(parse_grid_dump("voxel_size 0.5\n", GridConfig::default()).is_err());
        assert!(parse_grid_dump("voxel_size 0\norigin 0 0 0\n", GridConfig::default()).is_err());
        assert!(matches!(
            parse_grid_dump("voxel_size 0.5\norigin 0 0 0\n1 2 x 0.5\n", GridConfig::default()),
            Err(Error::Format { line: 3, .. })
        ));
        let g = parse_grid_dump("voxel_size 0.5\norigin 0 0 0\n\n1 2 3 9.0\n", GridConfig::default()).unwrap();
        assert_eq!(g.log_odds(VoxelIndex::new(1, 2, 3)), Some(4.0));
    }
}
