//! Ready-made worlds used by the tests, the acceptance suite and `synth`.

use super::{AlphaShift, Aabb, GeneratorModel, Obstacle, RadioDef, ScanPattern, Schedule, WorldSpec};
use crate::pipeline::RadioKind;

fn pillar(x0: f64, y0: f64, x1: f64, y1: f64, z1: f64) -> Obstacle {
    Obstacle::new([x0, y0, 0.0], [x1, y1, z1])
}

/// Waypoints at constant speed along a polyline, `[t, x, y, z]`.
pub fn constant_speed(path: &[[f64; 3]], t0: f64, t1: f64) -> Vec<[f64; 4]> {
    let seg: Vec<f64> = path
        .windows(2)
        .map(|w| (0..3).map(|k| (w[1][k] - w[0][k]).powi(2)).sum::<f64>().sqrt())
        .collect();
    let total: f64 = seg.iter().sum();
    let mut t = t0;
    let mut out = vec![[t0, path[0][0], path[0][1], path[0][2]]];
    for (p, len) in path[1..].iter().zip(&seg) {
        t += (t1 - t0) * len / total;
        out.push([t, p[0], p[1], p[2]]);
    }
    out
}

/// 40 m × 20 m hall with six full-height pillars, a base, a relay and two
/// robots; shadowing generator at 3.43 dB noise.
pub fn box_world() -> WorldSpec {
    let mut w = WorldSpec::new(Aabb::new([0.0, 0.0, 0.0], [40.0, 20.0, 4.0]));
    w.obstacles = vec![
        pillar(8.0, 6.0, 11.0, 9.0, 4.0),
        pillar(16.0, 11.0, 19.0, 15.0, 4.0),
        pillar(24.0, 5.0, 27.0, 8.0, 4.0),
        pillar(30.0, 11.0, 33.0, 14.0, 4.0),
        pillar(12.0, 12.0, 14.0, 14.0, 4.0),
        pillar(21.0, 8.0, 22.0, 13.0, 4.0),
    ];
    w.generator = GeneratorModel::Shadowing;
    w.params.alpha = 1.0;
    w.noise_sigma = 3.43;
    w.seed = 7;
    w.radios = vec![
        RadioDef::fixed("base", RadioKind::Base, [2.0, 18.0, 1.0]),
        RadioDef::fixed("relay1", RadioKind::Static, [38.0, 10.0, 1.0]),
        RadioDef::moving(
            "robot1",
            constant_speed(
                &[[3.0, 3.0, 1.0], [37.0, 3.0, 1.0], [37.0, 17.0, 1.0], [3.0, 17.0, 1.0], [3.0, 3.0, 1.0]],
                0.0,
                600.0,
            ),
        ),
        RadioDef::moving("robot2", constant_speed(&[[2.0, 10.0, 1.0], [19.5, 10.0, 1.0], [2.0, 10.0, 1.0]], 0.0, 600.0)),
    ];
    w.schedule = Schedule {
        end_s: 600.0,
        link_interval_s: 1.0,
        scan_interval_s: 20.0,
        ..Schedule::default()
    };
    w
}

/// Snake path through the baffled corridor of [`corridor_world`].
pub const CORRIDOR_PATH: [[f64; 3]; 14] = [
    [2.0, 4.0, 1.5],
    [10.0, 4.0, 1.5],
    [15.0, 6.5, 1.5],
    [19.0, 6.5, 1.5],
    [24.0, 4.0, 1.5],
    [30.0, 1.5, 1.5],
    [34.0, 1.5, 1.5],
    [39.0, 4.0, 1.5],
    [45.0, 6.5, 1.5],
    [49.0, 6.5, 1.5],
    [54.0, 4.0, 1.5],
    [60.0, 1.5, 1.5],
    [64.0, 1.5, 1.5],
    [78.0, 4.0, 1.5],
];

/// 80 m × 8 m corridor with four 4 m baffles that alternately close off
/// each side. Links run mostly along the corridor axis. The default
/// obstacle attenuation switches from 0.16 to 0.55 dB/m at ten minutes.
pub fn corridor_world() -> WorldSpec {
    let mut w = WorldSpec::new(Aabb::new([0.0, 0.0, 0.0], [80.0, 8.0, 3.0]));
    w.obstacles = vec![
        pillar(15.0, 0.0, 19.0, 5.0, 3.0),
        pillar(30.0, 3.0, 34.0, 8.0, 3.0),
        pillar(45.0, 0.0, 49.0, 5.0, 3.0),
        pillar(60.0, 3.0, 64.0, 8.0, 3.0),
    ];
    w.generator = GeneratorModel::Shadowing;
    w.params.alpha = 0.16;
    w.shift = Some(AlphaShift {
        time_s: 600.0,
        alpha: 0.55,
    });
    w.noise_sigma = 2.0;
    w.seed = 11;
    let back: Vec<[f64; 3]> = CORRIDOR_PATH.iter().rev().copied().collect();
    w.radios = vec![
        RadioDef::fixed("base", RadioKind::Base, [1.0, 4.0, 1.5]),
        RadioDef::fixed("relay1", RadioKind::Static, [79.0, 4.0, 1.5]),
        RadioDef::moving("robot1", constant_speed(&CORRIDOR_PATH, 0.0, 1800.0)),
        RadioDef::moving("robot2", constant_speed(&back, 0.0, 1800.0)),
    ];
    w.scan = ScanPattern {
        azimuth_step_deg: 2.0,
        elevation_rings: 8,
        ..ScanPattern::default()
    };
    w.schedule = Schedule {
        end_s: 1800.0,
        link_interval_s: 0.5,
        scan_interval_s: 30.0,
        drop_below_floor: false,
        ..Schedule::default()
    };
    w
}

/// 80 m × 80 m open yard with a few scattered pillars; same radios and
/// timing as the corridor, but no waveguide effect (free-space-like exponent).
pub fn open_world() -> WorldSpec {
    let mut w = corridor_world();
    w.bounds = Aabb::new([0.0, 0.0, 0.0], [80.0, 80.0, 3.0]);
    w.obstacles = vec![
        pillar(20.0, 20.0, 24.0, 24.0, 3.0),
        pillar(50.0, 10.0, 54.0, 14.0, 3.0),
        pillar(40.0, 50.0, 44.0, 54.0, 3.0),
    ];
    w.shift = None;
    w.params.los_eta = 2.75;
    w.radios = vec![
        RadioDef::fixed("base", RadioKind::Base, [1.0, 4.0, 1.5]),
        RadioDef::fixed("relay1", RadioKind::Static, [79.0, 76.0, 1.5]),
        RadioDef::moving(
            "robot1",
            constant_speed(&[[2.0, 2.0, 1.5], [78.0, 2.0, 1.5], [78.0, 40.0, 1.5], [2.0, 78.0, 1.5]], 0.0, 1800.0),
        ),
        RadioDef::moving(
            "robot2",
            constant_speed(&[[2.0, 40.0, 1.5], [70.0, 70.0, 1.5], [40.0, 2.0, 1.5], [2.0, 60.0, 1.5]], 0.0, 1800.0),
        ),
    ];
    w
}

/// The corridor with a tunnel-like exponent in line of sight.
pub fn confined_world() -> WorldSpec {
    let mut w = corridor_world();
    w.shift = None;
    w.params.los_eta = 1.8;
    w
}

/// L-shaped pair of branches meeting at a junction; branch B (along y) is
/// partly closed by a dense baffle so most of it is out of sight of the
/// junction.
pub fn branch_world() -> WorldSpec {
    let mut w = WorldSpec::new(Aabb::new([0.0, 0.0, 0.0], [32.0, 32.0, 3.0]));
    w.obstacles = vec![pillar(9.0, 9.0, 32.0, 32.0, 3.0), Obstacle {
        attenuation: Some(8.0),
        ..pillar(0.0, 14.0, 6.0, 15.0, 3.0)
    }];
    w.generator = GeneratorModel::Shadowing;
    w.params.alpha = 0.5;
    w.noise_sigma = 3.43;
    w.seed = 5;
    w.radios = vec![
        RadioDef::fixed("base", RadioKind::Base, [3.0, 3.0, 1.5]),
        RadioDef::moving("robotA", constant_speed(&[[3.0, 3.0, 1.5], [31.0, 5.0, 1.5], [3.0, 7.0, 1.5]], 0.0, 600.0)),
        RadioDef::moving(
            "robotB",
            constant_speed(
                &[[5.0, 3.0, 1.5], [7.5, 12.0, 1.5], [7.5, 31.0, 1.5], [2.0, 31.0, 1.5], [2.0, 20.0, 1.5]],
                0.0,
                600.0,
            ),
        ),
    ];
    w.schedule = Schedule {
        end_s: 600.0,
        link_interval_s: 0.5,
        ..Schedule::default()
    };
    w
}

/// Bounds only.
pub fn empty_world() -> WorldSpec {
    WorldSpec::new(Aabb::new([0.0, 0.0, 0.0], [20.0, 20.0, 4.0]))
}

pub fn by_name(name: &str) -> Option<WorldSpec> {
    Some(match name {
        "box" => box_world(),
        "corridor" => corridor_world(),
        "open" => open_world(),
        "confined" => confined_world(),
        "branch" => branch_world(),
        "empty" => empty_world(),
        _ => return None,
    })
}

pub const PRESET_NAMES: [&str; 6] = ["box", "corridor", "open", "confined", "branch", "empty"];
