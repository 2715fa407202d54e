use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Point3, Quaternion, UnitQuaternion};

use super::{voxel_traversal, OccupancyGrid, VoxelIndex};
use crate::error::{Error, Result};

/// One LiDAR sweep with the pose it was taken from.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanFrame {
    pub robot_id: String,
    pub timestamp: f64,
    pub position: Point3<f64>,
    /// Sensor-to-world rotation, `(w, i, j, k)`.
    pub orientation: Quaternion<f64>,
    /// Points in the sensor frame.
    pub points: Vec<Point3<f64>>,
}

impl ScanFrame {
    pub fn new(
        robot_id: impl Into<String>,
        timestamp: f64,
        position: Point3<f64>,
        orientation: Quaternion<f64>,
        points: Vec<Point3<f64>>,
    ) -> Result<Self> {
        let frame = Self {
            robot_id: robot_id.into(),
            timestamp,
            position,
            orientation,
            points,
        };
        frame.validate()?;
        Ok(frame)
    }

    /// Frame with identity orientation; points are then world offsets from `position`.
    pub fn axis_aligned(
        robot_id: impl Into<String>,
        timestamp: f64,
        position: Point3<f64>,
        points: Vec<Point3<f64>>,
    ) -> Self {
        Self {
            robot_id: robot_id.into(),
            timestamp,
            position,
            orientation: Quaternion::identity(),
            points,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.timestamp.is_finite() {
            return Err(Error::input("scan timestamp must be finite"));
        }
        if !self.position.coords.iter().all(|c| c.is_finite()) {
            return Err(Error::input("scan position must be finite"));
        }
        let norm = self.orientation.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-6 {
            return Err(Error::input(format!(
                "scan orientation quaternion has norm {norm}, expected 1 within 1e-6"
            )));
        }
        if self.robot_id.is_empty() || self.robot_id.contains([',', ' ', '\t', '\n', '\r']) {
            return Err(Error::input(format!("bad robot id {:?}", self.robot_id)));
        }
        Ok(())
    }

    /// Scan points transformed into the shared world frame.
    pub fn world_points(&self) -> impl Iterator<Item = Point3<f64>> + '_ {
        let rot = UnitQuaternion::new_unchecked(self.orientation);
        self.points.iter().map(move |p| self.position + rot * p.coords)
    }
}

/// Log-odds increments and ray handling for scan integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpdateParams {
    pub l_hit: f64,
    pub l_miss: f64,
    /// Returns at or beyond this range are treated as no-return rays.
    pub max_range: f64,
    /// Apply at most one update per voxel per scan (a hit wins over a miss).
    pub once_per_scan: bool,
}

impl Default for UpdateParams {
    fn default() -> Self {
        Self {
            l_hit: 0.85,
            l_miss: -0.40,
            max_range: 100.0,
            once_per_scan: false,
        }
    }
}

/// Raytraces every point of `scan` into `grid`.
///
/// The sensor's own voxel is left untouched; voxels between it and the
/// return get `l_miss`, the return voxel gets `l_hit`. No-return rays are
/// misses all the way out to `max_range`. Returns the number of distinct
/// voxels touched.
pub fn integrate_scan(grid: &mut OccupancyGrid, scan: &ScanFrame, params: &UpdateParams) -> Result<usize> {
    scan.validate()?;
    let origin = scan.position;
    let vs = grid.voxel_size();
    let grid_origin = grid.origin();

    let mut touched = HashSet::new();
    let mut pending: HashMap<VoxelIndex, bool> = HashMap::new();

    for p in scan.world_points() {
        if !p.coords.iter().all(|c| c.is_finite()) {
            return Err(Error::input("scan point must be finite"));
        }
        let offset = p - origin;
        let dist = offset.norm();
        let (end, hit) = if dist >= params.max_range {
            (origin + offset * (params.max_range / dist), false)
        } else {
            (p, true)
        };
        let cells = voxel_traversal(&origin, &end, vs, &grid_origin)?;
        let last = cells.len() - 1;
        for (n, &v) in cells.iter().enumerate() {
            let is_hit = hit && n == last;
            if n == 0 && !is_hit {
                continue;
            }
            if params.once_per_scan {
                let e = pending.entry(v).or_insert(false);
                *e |= is_hit;
            } else {
                grid.update(v, if is_hit { params.l_hit } else { params.l_miss });
                touched.insert(v);
            }
        }
    }

    if params.once_per_scan {
        let mut updates: Vec<_> = pending.into_iter().collect();
        updates.sort_by_key(|u| u.0);
        for (v, is_hit) in &updates {
            grid.update(*v, if *is_hit { params.l_hit } else { params.l_miss });
        }
        return Ok(updates.len());
    }
    Ok(touched.len())
}

/// Integrates frames in order, enforcing non-decreasing timestamps per robot.
pub fn integrate_scans(grid: &mut OccupancyGrid, scans: &[ScanFrame], params: &UpdateParams) -> Result<usize> {
    let mut last: BTreeMap<&str, f64> = BTreeMap::new();
    let mut total = 0;
    for scan in scans {
        if let Some(&prev) = last.get(scan.robot_id.as_str()) {
            if scan.timestamp < prev {
                return Err(Error::input(format!(
                    "scan timestamps for robot {} go backwards ({} after {})",
                    scan.robot_id, scan.timestamp, prev
                )));
            }
        }
        last.insert(&scan.robot_id, scan.timestamp);
        total += integrate_scan(grid, scan, params)?;
    }
    Ok(total)
}

/// Serializes frames in the plain-text scan format.
///
/// Each frame is a header `timestamp,robot_id,px,py,pz,qx,qy,qz,qw,N`
/// followed by `N` lines of `x y z`.
pub fn write_scan_file(frames: &[ScanFrame]) -> String {
    let mut out = String::new();
    for f in frames {
        let q = &f.orientation;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            f.timestamp,
            f.robot_id,
            f.position.x,
            f.position.y,
            f.position.z,
            q.i,
            q.j,
            q.k,
            q.w,
            f.points.len()
        );
        for p in &f.points {
            let _ = writeln!(out, "{} {} {}", p.x, p.y, p.z);
        }
    }
    out
}

fn parse_f64(s: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::format(line, format!("{what}: not a number: {:?}", s.trim())))?;
    if !v.is_finite() {
        return Err(Error::format(line, format!("{what}: non-finite value")));
    }
    Ok(v)
}

/// Parses the plain-text scan format. Blank lines between frames are ignored.
pub fn parse_scan_file(text: &str) -> Result<Vec<ScanFrame>> {
    let mut frames = Vec::new();
    let mut lines = text.lines().enumerate().map(|(n, l)| (n + 1, l));
    while let Some((ln, line)) = lines.next() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 10 {
            return Err(Error::format(
                ln,
                format!("frame header needs 10 comma-separated fields, found {}", fields.len()),
            ));
        }
        let timestamp = parse_f64(fields[0], ln, "timestamp")?;
        let robot_id = fields[1].to_string();
        let pos = Point3::new(
            parse_f64(fields[2], ln, "px")?,
            parse_f64(fields[3], ln, "py")?,
            parse_f64(fields[4], ln, "pz")?,
        );
        let (qx, qy, qz, qw) = (
            parse_f64(fields[5], ln, "qx")?,
            parse_f64(fields[6], ln, "qy")?,
            parse_f64(fields[7], ln, "qz")?,
            parse_f64(fields[8], ln, "qw")?,
        );
        let n: usize = fields[9]
            .parse()
            .map_err(|_| Error::format(ln, format!("point count: {:?}", fields[9])))?;
        let mut points = Vec::with_capacity(n.min(1 << 16));
        for _ in 0..n {
            let (pl, pline) = lines
                .next()
                .ok_or_else(|| Error::format(ln, format!("frame declares {n} points, file ended early")))?;
            let xyz: Vec<&str> = pline.split_whitespace().collect();
            if xyz.len() != 3 {
                return Err(Error::format(pl, "point line needs exactly 3 values"));
            }
            points.push(Point3::new(
                parse_f64(xyz[0], pl, "x")?,
                parse_f64(xyz[1], pl, "y")?,
                parse_f64(xyz[2], pl, "z")?,
            ));
        }
        let frame = ScanFrame {
            robot_id,
            timestamp,
            position: pos,
            orientation: Quaternion::new(qw, qx, qy, qz),
            points,
        };
        frame.validate().map_err(|e| Error::format(ln, e.to_string()))?;
        frames.push(frame);
    }
    Ok(frames)
}

pub fn read_scan_file(path: impl AsRef<Path>) -> Result<Vec<ScanFrame>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scan_file(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::VoxelState;

    fn ray_frame(points: Vec<Point3<f64>>) -> ScanFrame {
        ScanFrame::axis_aligned("r1", 0.0, Point3::new(0.5, 0.5, 0.5), points)
    }

    #[test]
    fn single_ray_arithmetic() {
        let mut g = OccupancyGrid::with_voxel_size(1.0).unwrap();
        let scan = ray_frame(vec![Point3::new(3.0, 0.0, 0.0)]);
        let n = integrate_scan(&mut g, &scan, &UpdateParams::default()).unwrap();
        assert_eq!(n, 3);
        assert_eq!(g.log_odds(VoxelIndex::new(3, 0, 0)), Some(0.85));
        assert_eq!(g.log_odds(VoxelIndex::new(1, 0, 0)), Some(-0.40));
        assert_eq!(g.log_odds(VoxelIndex::new(2, 0, 0)), Some(-0.40));
        assert_eq!(g.log_odds(VoxelIndex::new(0, 0, 0)), None);
    }

    #[test]
    fn repeated_scan_clamps_at_max() {
        let mut g = OccupancyGrid::with_voxel_size(1.0).unwrap();
        let scan = ray_frame(vec![Point3::new(3.0, 0.0, 0.0)]);
        for _ in 0..20 {
            integrate_scan(&mut g, &scan, &UpdateParams::default()).unwrap();
        }
        assert_eq!(g.log_odds(VoxelIndex::new(3, 0, 0)), Some(4.0));
        assert_eq!(g.log_odds(VoxelIndex::new(1, 0, 0)), Some(-4.0));
    }

    #[test]
    fn empty_scan_is_noop() {
        let mut g = OccupancyGrid::with_voxel_size(1.0).unwrap();
        assert_eq!(integrate_scan(&mut g, &ray_frame(vec![]), &UpdateParams::default()).unwrap(), 0);
        assert!(g.is_empty());
    }

    #[test]
    fn no_return_ray_is_all_misses() {
        let mut g = OccupancyGrid::with_voxel_size(1.0).unwrap();
        let params = UpdateParams {
            max_range: 4.0,
            ..UpdateParams::default()
        };
        integrate_scan(&mut g, &ray_frame(vec![Point3::new(10.0, 0.0, 0.0)]), &params).unwrap();
        for x in 1..=4 {
            assert_eq!(g.log_odds(VoxelIndex::new(x, 0, 0)), Some(-0.40), "x={x}");
        }
        assert_eq!(g.log_odds(VoxelIndex::new(5, 0, 0)), None);
        assert_eq!(g.log_odds(VoxelIndex::new(10, 0, 0)), None);
    }

    #[test]
    fn multiple_rays_each_update_unless_deduplicated() {
        let pts = vec![Point3::new(3.0, 0.0, 0.0), Point3::new(3.2, 0.1, 0.0)];
        let mut g = OccupancyGrid::with_voxel_size(1.0).unwrap();
        integrate_scan(&mut g, &ray_frame(pts.clone()), &UpdateParams::default()).unwrap();
        assert!((g.log_odds(VoxelIndex::new(3, 0, 0)).unwrap() - 1.70).abs() < 1e-12);

        let mut g = OccupancyGrid::with_voxel_size(1.0).unwrap();
        let dedup = UpdateParams {
            once_per_scan: true,
            ..UpdateParams::default()
        };
        integrate_scan(&mut g, &ray_frame(pts), &dedup).unwrap();
        assert_eq!(g.log_odds(VoxelIndex::new(3, 0, 0)), Some(0.85));
        assert_eq!(g.log_odds(VoxelIndex::new(2, 0, 0)), Some(-0.40));
    }

    #[test]
    fn rotated_pose_transforms_points() {
        let mut g = OccupancyGrid::with_voxel_size(1.0).unwrap();
        // 90 degrees about z maps sensor +x onto world +y.
        let q = UnitQuaternion::from_euler_angles(0.0, 0.0, std::f64::consts::FRAC_PI_2).into_inner();
        let scan = ScanFrame::new("r", 0.0, Point3::new(0.5, 0.5, 0.5), q, vec![Point3::new(3.0, 0.0, 0.0)]).unwrap();
        integrate_scan(&mut g, &scan, &UpdateParams::default()).unwrap();
        assert_eq!(g.classify(VoxelIndex::new(0, 3, 0)), VoxelState::Occupied);
    }

    #[test]
    fn unnormalized_quaternion_rejected() {
        let e = ScanFrame::new("r", 0.0, Point3::origin(), Quaternion::new(1.0, 0.1, 0.0, 0.0), vec![]);
        assert!(matches!(e, Err(Error::Input(_))));
    }

    #[test]
    fn backwards_timestamps_rejected() {
        let mut g = OccupancyGrid::with_voxel_size(1.0).unwrap();
        let a = ScanFrame::axis_aligned("r", 5.0, Point3::origin(), vec![]);
        let b = ScanFrame::axis_aligned("r", 4.0, Point3::origin(), vec![]);
        let c = ScanFrame::axis_aligned("q", 1.0, Point3::origin(), vec![]);
        assert!(integrate_scans(&mut g, &[a.clone(), c], &UpdateParams::default()).is_ok());
        assert!(integrate_scans(&mut g, &[a, b], &UpdateParams::default()).is_err());
    }

    #[test]
    fn scan_file_round_trip() {
        let q = UnitQuaternion::from_euler_angles(0.1, -0.2, 0.3).into_inner();
        let frames = vec![
            ScanFrame::new("husky1", 12.5, Point3::new(1.0, 2.0, 0.25), q, vec![Point3::new(0.1, 0.2, 0.3), Point3::new(-4.0, 5.5, 1e-3)]).unwrap(),
            ScanFrame::axis_aligned("spot2", 13.0, Point3::new(0.0, 0.0, 0.0), vec![]),
        ];
        let text = write_scan_file(&frames);
        assert_eq!(parse_scan_file(&text).unwrap(), frames);
    }

    #[test]
    fn scan_file_errors() {
        assert!(parse_scan_file("").unwrap().is_empty());
        assert!(matches!(parse_scan_file("1,r,0,0,0,0,0,0,1,2\n1 2 3\n"), Err(Error::Format { line: 1, .. })));
        assert!(matches!(parse_scan_file("1,r,0,0,0,0,0,0,1,1\n1 2\n"), Err(Error::Format { line: 2, .. })));
        assert!(matches!(parse_scan_file("1,r,0,0,0,0,0,0,2,0\n"), Err(Error::Format { .. })));
        assert!(matches!(parse_scan_file("x,r,0,0,0,0,0,0,1,0\n"), Err(Error::Format { .. })));
    }
}
