//! Exact ray and segment queries against axis-aligned boxes.

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

/// Closed axis-aligned box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Self {
        Self { min, max }
    }

    pub fn is_valid(&self) -> bool {
        (0..3).all(|k| self.min[k].is_finite() && self.max[k].is_finite() && self.min[k] < self.max[k])
    }

    pub fn contains(&self, p: &Point3<f64>) -> bool {
        (0..3).all(|k| self.min[k] <= p[k] && p[k] <= self.max[k])
    }

    /// Strictly inside (not on a face).
    pub fn contains_strict(&self, p: &Point3<f64>) -> bool {
        (0..3).all(|k| self.min[k] < p[k] && p[k] < self.max[k])
    }

    pub fn within(&self, outer: &Aabb) -> bool {
        (0..3).all(|k| outer.min[k] <= self.min[k] && self.max[k] <= outer.max[k])
    }

    pub fn volume(&self) -> f64 {
        (0..3).map(|k| self.max[k] - self.min[k]).product()
    }

    /// Parameter interval `[t_in, t_out]` where `origin + t * dir` lies in
    /// the box, intersected with `[t_min, t_max]`.
    pub fn clip(&self, origin: &Point3<f64>, dir: &Vector3<f64>, t_min: f64, t_max: f64) -> Option<(f64, f64)> {
        let (mut lo, mut hi) = (t_min, t_max);
        for k in 0..3 {
            if dir[k] == 0.0 {
                if origin[k] < self.min[k] || origin[k] > self.max[k] {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / dir[k];
            let (mut a, mut b) = ((self.min[k] - origin[k]) * inv, (self.max[k] - origin[k]) * inv);
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            lo = lo.max(a);
            hi = hi.min(b);
            if lo > hi {
                return None;
            }
        }
        Some((lo, hi))
    }
}

/// Sum over the pieces of segment `a → b` covered by any box of
/// `weight(box)`-weighted length, where overlapping boxes contribute the
/// largest weight once.
pub fn weighted_length<'a, I>(a: &Point3<f64>, b: &Point3<f64>, boxes: I) -> f64
where
    I: IntoIterator<Item = (&'a Aabb, f64)>,
{
    let dir = b - a;
    let len = dir.norm();
    if len == 0.0 {
        return 0.0;
    }
    let spans: Vec<(f64, f64, f64)> = boxes
        .into_iter()
        .filter_map(|(bx, w)| bx.clip(a, &dir, 0.0, 1.0).map(|(s, e)| (s, e, w)))
        .filter(|(s, e, _)| e > s)
        .collect();
    if spans.is_empty() {
        return 0.0;
    }
    let mut cuts: Vec<f64> = spans.iter().flat_map(|&(s, e, _)| [s, e]).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let weight = spans
            .iter()
            .filter(|(s, e, _)| *s <= mid && mid <= *e)
            .map(|s| s.2)
            .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))));
        if let Some(wt) = weight {
            total += wt * (w[1] - w[0]);
        }
    }
    total * len
}

/// Nearest ray parameter `t > 0` (with `|dir| = 1`, a distance) at which the
/// ray enters any box; rays starting inside a box report 0.
pub fn first_hit<'a, I>(origin: &Point3<f64>, dir: &Vector3<f64>, max_t: f64, boxes: I) -> Option<f64>
where
    I: IntoIterator<Item = &'a Aabb>,
{
    boxes
        .into_iter()
        .filter_map(|b| b.clip(origin, dir, 0.0, max_t).map(|(t, _)| t))
        .min_by(f64::total_cmp)
}

/// Distance from `origin` along unit `dir` until it leaves every box it is
/// inside of (chained through touching or overlapping boxes).
pub fn exit_distance<'a, I>(origin: &Point3<f64>, dir: &Vector3<f64>, max_t: f64, boxes: I) -> f64
where
    I: IntoIterator<Item = &'a Aabb> + Clone,
{
    let mut t = 0.0;
    loop {
        let p = origin + dir * t;
        let next = boxes
            .clone()
            .into_iter()
            .filter(|b| b.contains(&p))
            .filter_map(|b| b.clip(origin, dir, t, f64::INFINITY).map(|(_, e)| e))
            .fold(t, f64::max);
        if next <= t || next >= max_t {
            return next.min(max_t);
        }
        t = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_through_cube() {
        let b = Aabb::new([1.0, -1.0, -1.0], [2.0, 1.0, 1.0]);
        let (s, e) = b.clip(&Point3::origin(), &Vector3::x(), 0.0, 10.0).unwrap();
        assert_eq!((s, e), (1.0, 2.0));
        assert!(b.clip(&Point3::new(0.0, 2.0, 0.0), &Vector3::x(), 0.0, 10.0).is_none());
        assert!(b.clip(&Point3::origin(), &Vector3::x(), 0.0, 0.5).is_none());
    }

    #[test]
    fn weighted_length_merges_overlap() {
        let a = Aabb::new([1.0, -1.0, -1.0], [3.0, 1.0, 1.0]);
        let b = Aabb::new([2.0, -1.0, -1.0], [4.0, 1.0, 1.0]);
        let p = Point3::origin();
        let q = Point3::new(10.0, 0.0, 0.0);
        let len = weighted_length(&p, &q, [(&a, 1.0), (&b, 1.0)]);
        assert!((len - 3.0).abs() < 1e-12);
        let att = weighted_length(&p, &q, [(&a, 0.5), (&b, 2.0)]);
        assert!((att - (0.5 + 2.0 * 2.0)).abs() < 1e-12);
    }

    #[test]
    fn diagonal_length() {
        let a = Aabb::new([0.0, 0.0, 0.0], [1.0, 1.0, 1.0]);
        let len = weighted_length(&Point3::new(-1.0, -1.0, -1.0), &Point3::new(2.0, 2.0, 2.0), [(&a, 1.0)]);
        assert!((len - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn exits_chained_boxes() {
        let a = Aabb::new([0.0, 0.0, 0.0], [1.0, 1.0, 1.0]);
        let b = Aabb::new([1.0, 0.0, 0.0], [2.5, 1.0, 1.0]);
        let d = exit_distance(&Point3::new(0.5, 0.5, 0.5), &Vector3::x(), 10.0, [&a, &b]);
        assert!((d - 2.0).abs() < 1e-12);
        assert_eq!(exit_distance(&Point3::new(0.5, 0.5, 0.5), &Vector3::x(), 0.2, [&a, &b]), 0.2);
        assert_eq!(exit_distance(&Point3::new(5.0, 0.5, 0.5), &Vector3::x(), 10.0, [&a, &b]), 0.0);
    }
}
