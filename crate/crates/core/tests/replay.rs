use radiomap::features::FeatureConfig;
use radiomap::grid::{integrate_scans, OccupancyGrid};
use radiomap::learned::{train_offline, train_online_step, write_model_file, TrainConfig, Variant};
use radiomap::pipeline::to_samples;
use radiomap::replay::{replay, ReplayConfig, ReplayInput};
use radiomap::synthworld::{build_fixture, presets};

#[test]
fn first_window_matches_offline_step() {
    let mut w = presets::box_world();
    w.schedule.end_s = 180.0;
    let fx = build_fixture(&w).unwrap();
    let mut grid = OccupancyGrid::new(w.grid_config()).unwrap();
    let radio = w.radio_spec().unwrap();
    let config = ReplayConfig {
        radio,
        update: w.update_params(),
        grid: w.grid_config(),
        ..ReplayConfig::default()
    };

    integrate_scans(&mut grid, &fx.scans, &w.update_params()).unwrap();
    let all = to_samples(&fx.measurements, &grid, &radio, &FeatureConfig::default()).unwrap();
    let (model, _) = train_offline(&all, Variant::Vox, &TrainConfig::default()).unwrap();

    let out = replay(
        ReplayInput {
            records: &fx.measurements,
            scans: &fx.scans,
            model: Some(model.clone()),
            ..ReplayInput::default()
        },
        &config,
    )
    .unwrap();

    let t0 = fx.measurements[0].timestamp;
    let end = t0 + config.window_s;
    let mut first_grid = OccupancyGrid::new(w.grid_config()).unwrap();
    let early: Vec<_> = fx.scans.iter().filter(|s| s.timestamp < end).cloned().collect();
    integrate_scans(&mut first_grid, &early, &w.update_params()).unwrap();
    let window: Vec<_> = fx.measurements.iter().filter(|r| r.timestamp < end).cloned().collect();
    let samples = to_samples(&window, &first_grid, &radio, &FeatureConfig::default()).unwrap();
    let mut offline = model;
    train_online_step(&mut offline, &samples, &config.online).unwrap();

    let first = out.first_window_model.unwrap();
    assert_eq!(write_model_file(&first), write_model_file(&offline));
    assert_eq!(out.minutes.len(), 3);
}

#[test]
fn replay_is_deterministic() {
    let mut w = presets::corridor_world();
    w.schedule.end_s = 240.0;
    let fx = build_fixture(&w).unwrap();
    let config = ReplayConfig {
        radio: w.radio_spec().unwrap(),
        update: w.update_params(),
        grid: w.grid_config(),
        ..ReplayConfig::default()
    };
    let run = || {
        replay(
            ReplayInput {
                records: &fx.measurements,
                scans: &fx.scans,
                ..ReplayInput::default()
            },
            &config,
        )
        .unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.minutes, b.minutes);
    assert_eq!(a.grid.cells(), b.grid.cells());
}
