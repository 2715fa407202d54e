use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Parser;
use log::{info, warn};
use radiomap::conventional::{read_params_file, write_params_record, ConventionalModel, ParamsRecord};
use radiomap::features::{read_samples, write_samples, FeatureConfig, PathLossSample, RadioSpec};
use radiomap::grid::{
    integrate_scans, read_grid_dump, read_scan_file, write_grid_dump, write_scan_file, GridConfig, OccupancyGrid,
    ScanFrame, UpdateParams,
};
use radiomap::learned::{
    evaluate, read_model_file, train_offline, write_model_file, write_training_report, TrainConfig,
    HISTOGRAM_BINS, HISTOGRAM_RANGE_DB,
};
use radiomap::pipeline::{
    augment_disconnections, correlation_report, read_measurements, read_poses, read_radios, remove_static_outliers,
    synchronize, to_samples, write_measurements, write_poses, write_radios, AugmentConfig, MeasurementRecord,
    PoseIndex,
};
use radiomap::replay::{replay, write_replay_csv, ReplayConfig, ReplayInput};
use radiomap::signal_map::{build_map, export_map, MapConfig, Transmitter};
use radiomap::synthworld::{build_fixture, presets, WorldSpec};
use radiomap::{Error, PathLossPredictor, Result};

use crate::manifest::{io_error, unix_now, RunManifest};
use crate::{
    BuildGridArgs, Cli, Command, EvalArgs, FeaturesArgs, FitArgs, LogArgs, MapArgs, PredictorArgs, ReplayArgs,
    SynthArgs, TrainArgs,
};

/// Bookkeeping for one command invocation.
struct Run {
    command: &'static str,
    argv: Vec<String>,
    seed: Option<u64>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    started: f64,
    dir: PathBuf,
}

impl Run {
    fn new(command: &'static str, argv: Vec<String>, dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        Ok(Self {
            command,
            argv,
            seed: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: unix_now(),
            dir: dir.to_path_buf(),
        })
    }

    fn input(&mut self, path: &Path) -> PathBuf {
        self.inputs.push(path.to_path_buf());
        path.to_path_buf()
    }

    fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| io_error(&path, e))?;
        self.outputs.push(path);
        Ok(())
    }

    fn finish(self) -> Result<()> {
        let cwd = std::env::current_dir().map_err(|e| io_error(Path::new("."), e))?;
        RunManifest {
            tool: env!("CARGO_PKG_NAME").trim_end_matches("-cli").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: self.command.to_string(),
            argv: self.argv,
            cwd,
            seed: self.seed,
            inputs: self.inputs,
            outputs: self.outputs,
            started_unix_s: self.started,
            finished_unix_s: unix_now(),
        }
        .write(&self.dir)?;
        Ok(())
    }
}

pub fn dispatch(command: Command, argv: Vec<String>) -> Result<()> {
    match command {
        Command::BuildGrid(a) => build_grid(a, argv),
        Command::Features(a) => features(a, argv),
        Command::Fit(a) => fit(a, argv),
        Command::Train(a) => train(a, argv),
        Command::Eval(a) => eval(a, argv),
        Command::Map(a) => map(a, argv),
        Command::Synth(a) => synth(a, argv),
        Command::Replay(a) => run_replay(a, argv),
        Command::Rerun(a) => rerun(&a.manifest),
    }
}

fn rerun(path: &Path) -> Result<()> {
    let manifest = RunManifest::read(path)?;
    if manifest.argv.first().map(String::as_str) == Some("rerun") {
        return Err(Error::Config("manifest records a rerun; point at the original manifest".into()));
    }
    std::env::set_current_dir(&manifest.cwd).map_err(|e| io_error(&manifest.cwd, e))?;
    let cli = Cli::try_parse_from(std::iter::once("radiomap".to_string()).chain(manifest.argv.iter().cloned()))
        .map_err(|e| Error::Config(format!("manifest arguments do not parse: {}", e.kind())))?;
    info!("rerunning `{}` from {}", manifest.command, path.display());
    dispatch(cli.command, manifest.argv)
}

fn update_params(max_range: f64) -> UpdateParams {
    UpdateParams {
        max_range,
        ..UpdateParams::default()
    }
}

fn read_scans(run: &mut Run, paths: &[PathBuf]) -> Result<Vec<ScanFrame>> {
    let mut scans = Vec::new();
    for p in paths {
        scans.extend(read_scan_file(run.input(p))?);
    }
    Ok(scans)
}

fn build_grid(a: BuildGridArgs, argv: Vec<String>) -> Result<()> {
    let mut run = Run::new("build-grid", argv, &a.out.out)?;
    let scans = read_scans(&mut run, &a.scans)?;
    let mut grid = OccupancyGrid::new(GridConfig::with_voxel_size(a.grid.voxel_size))?;
    integrate_scans(&mut grid, &scans, &update_params(a.grid.max_range))?;
    run.write("grid.txt", write_grid_dump(&grid))?;
    println!("scans={} voxels={}", scans.len(), grid.len());
    run.finish()
}

/// Measurements with positions attached, cleaned and time-sorted.
fn load_records(run: &mut Run, a: &LogArgs) -> Result<Vec<MeasurementRecord>> {
    let parsed = read_measurements(run.input(&a.measurements))?;
    if parsed.skipped > 0 {
        warn!("{}: skipped {} malformed lines", a.measurements.display(), parsed.skipped);
    }
    let poses = read_poses(run.input(&a.poses))?;
    if poses.skipped > 0 {
        warn!("{}: skipped {} malformed lines", a.poses.display(), poses.skipped);
    }
    let index = PoseIndex::new(&poses.records);
    let mut records = synchronize(&parsed.records, &index, a.max_skew_s);
    if let Some(path) = &a.radios {
        let registry = read_radios(run.input(path))?;
        records = remove_static_outliers(&records, &registry, a.outlier_radius_m);
    }
    if let Some(window_s) = a.augment_window_s {
        let config = AugmentConfig {
            window_s,
            floor_dbm: a.noise_floor_dbm,
            max_skew_s: a.max_skew_s,
            ..AugmentConfig::default()
        };
        records = augment_disconnections(&records, &index, &config)?;
    }
    records.sort_by(|x, y| x.timestamp.total_cmp(&y.timestamp));
    Ok(records)
}

fn read_grid(run: &mut Run, path: &Path, voxel_size: f64) -> Result<OccupancyGrid> {
    read_grid_dump(run.input(path), GridConfig::with_voxel_size(voxel_size))
}

fn features(a: FeaturesArgs, argv: Vec<String>) -> Result<()> {
    let mut run = Run::new("features", argv, &a.out.out)?;
    let records = load_records(&mut run, &a.logs)?;
    let grid = read_grid(&mut run, &a.grid, a.voxel_size)?;
    let samples = to_samples(&records, &grid, &RadioSpec::default(), &FeatureConfig::default())?;
    run.write("samples.csv", write_samples(&samples))?;
    if samples.len() >= 3 {
        let mut csv = String::from("feature,r,zero_variance\n");
        for c in correlation_report(&samples, a.tx_power_dbm)? {
            let _ = writeln!(csv, "{},{},{}", c.feature, c.r, u8::from(c.zero_variance));
        }
        run.write("correlation.csv", csv)?;
    }
    println!("records={} samples={}", records.len(), samples.len());
    run.finish()
}

fn latest_timestamp(samples: &[PathLossSample]) -> f64 {
    samples.iter().map(|s| s.timestamp).fold(f64::NEG_INFINITY, f64::max)
}

fn fit(a: FitArgs, argv: Vec<String>) -> Result<()> {
    let mut run = Run::new("fit", argv, &a.out.out)?;
    let samples = read_samples(run.input(&a.samples))?;
    let record = ParamsRecord {
        model: ConventionalModel::fit(a.model, &samples)?,
        fit_timestamp: latest_timestamp(&samples),
        sample_count: samples.len(),
    };
    let text = write_params_record(&record);
    run.write("params.txt", &text)?;
    print!("{text}");
    run.finish()
}

fn train(a: TrainArgs, argv: Vec<String>) -> Result<()> {
    let mut run = Run::new("train", argv, &a.out.out)?;
    run.seed = Some(a.seed);
    let samples = read_samples(run.input(&a.samples))?;
    let config = TrainConfig {
        max_epochs: a.epochs,
        seed: a.seed,
        ..TrainConfig::default()
    };
    let (model, report) = train_offline(&samples, a.variant, &config)?;
    run.write("model.txt", write_model_file(&model))?;
    let mut csv = Vec::new();
    write_training_report(&mut csv, &report)?;
    run.write("training.csv", csv)?;
    println!(
        "variant={} epochs={} converged={} holdout_mae_db={}",
        a.variant,
        report.epochs.len(),
        report.converged,
        report.final_holdout_mae()
    );
    run.finish()
}

type Predictor = Box<dyn PathLossPredictor + Sync>;

fn load_predictor(run: &mut Run, p: &PredictorArgs) -> Result<Predictor> {
    if let Some(path) = &p.mlp {
        return Ok(Box::new(read_model_file(run.input(path))?));
    }
    let path = p.params.as_ref().ok_or_else(|| Error::Config("need --params or --mlp".into()))?;
    let records = read_params_file(run.input(path))?;
    let chosen = records
        .into_iter()
        .rev()
        .find(|r| p.model.is_none_or(|k| r.model.kind() == k))
        .ok_or_else(|| Error::Input(format!("{} has no matching params record", path.display())))?;
    Ok(Box::new(chosen.model))
}

fn eval(a: EvalArgs, argv: Vec<String>) -> Result<()> {
    let mut run = Run::new("eval", argv, &a.out.out)?;
    let predictor = load_predictor(&mut run, &a.predictor)?;
    let samples = read_samples(run.input(&a.samples))?;
    let ev = evaluate(predictor.as_ref(), &samples)?;
    let summary = format!(
        "mae_db={}\nmean_error_db={}\ncount={}\nunderflow={}\noverflow={}\n",
        ev.mae, ev.mean_error, ev.count, ev.underflow, ev.overflow
    );
    run.write("eval.txt", &summary)?;
    let (lo, hi) = HISTOGRAM_RANGE_DB;
    let width = (hi - lo) / HISTOGRAM_BINS as f64;
    let mut csv = String::from("low_db,high_db,count,density\n");
    for (i, (count, density)) in ev.histogram.iter().zip(ev.density()).enumerate() {
        let low = lo + i as f64 * width;
        let _ = writeln!(csv, "{},{},{},{}", low, low + width, count, density);
    }
    run.write("histogram.csv", csv)?;
    println!("mae_db={}", ev.mae);
    run.finish()
}

fn map(a: MapArgs, argv: Vec<String>) -> Result<()> {
    let mut run = Run::new("map", argv, &a.out.out)?;
    let grid = read_grid(&mut run, &a.grid, a.voxel_size)?;
    let registry = read_radios(run.input(&a.radios))?;
    let transmitters: Vec<Transmitter> = registry
        .radios
        .iter()
        .filter_map(|(id, r)| {
            r.position.map(|position| Transmitter {
                id: id.clone(),
                position,
                tx_power_dbm: r.tx_power_dbm,
            })
        })
        .collect();
    if transmitters.is_empty() {
        return Err(Error::Input(format!("{} lists no radio with a fixed position", a.radios.display())));
    }
    let predictor = load_predictor(&mut run, &a.predictor)?;
    let config = MapConfig {
        resolution: a.resolution,
        threshold_dbm: a.threshold_dbm,
        ..MapConfig::default()
    };
    let map = build_map(&grid, &transmitters, predictor.as_ref(), &config)?;
    for path in export_map(&map, &a.out.out, "map", a.format)? {
        run.outputs.push(path);
    }
    let explored = map.cells.iter().filter(|c| c.explored).count();
    let connected = map.cells.iter().filter(|c| c.connected).count();
    println!("cells={} explored={explored} connected={connected}", map.cells.len());
    run.finish()
}

fn synth(a: SynthArgs, argv: Vec<String>) -> Result<()> {
    let mut run = Run::new("synth", argv, &a.out.out)?;
    let mut spec = match (&a.preset, &a.world_spec) {
        (Some(name), _) => presets::by_name(name).ok_or_else(|| {
            Error::Input(format!("unknown preset {name:?} (one of {})", presets::PRESET_NAMES.join(", ")))
        })?,
        (None, Some(path)) => WorldSpec::read(run.input(path))?,
        (None, None) => return Err(Error::Config("need --preset or --world".into())),
    };
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    if let Some(end) = a.end_s {
        spec.schedule.end_s = end;
    }
    if let Some(vs) = a.voxel_size {
        spec.voxel_size = vs;
    }
    run.seed = Some(spec.seed);
    let fx = build_fixture(&spec)?;
    run.write("world.toml", spec.to_toml())?;
    run.write("radios.csv", write_radios(&fx.radios))?;
    run.write("poses.csv", write_poses(&fx.poses))?;
    run.write("scans.txt", write_scan_file(&fx.scans))?;
    run.write("measurements.csv", write_measurements(&fx.measurements))?;
    println!(
        "radios={} poses={} scans={} measurements={}",
        fx.radios.radios.len(),
        fx.poses.len(),
        fx.scans.len(),
        fx.measurements.len()
    );
    run.finish()
}

fn run_replay(a: ReplayArgs, argv: Vec<String>) -> Result<()> {
    let mut run = Run::new("replay", argv, &a.out.out)?;
    run.seed = Some(a.seed);
    let records = load_records(&mut run, &a.logs)?;
    let mut scans = read_scans(&mut run, &a.scans)?;
    scans.sort_by(|x, y| x.timestamp.total_cmp(&y.timestamp));
    let initial_grid = match &a.grid {
        Some(p) => Some(read_grid(&mut run, p, a.grid_args.voxel_size)?),
        None => None,
    };
    let model = match &a.mlp {
        Some(p) => Some(read_model_file(run.input(p))?),
        None => None,
    };
    let config = ReplayConfig {
        window_s: a.window_s,
        k_minutes: a.k_minutes,
        online: TrainConfig {
            max_epochs: a.epochs_online,
            seed: a.seed,
            ..TrainConfig::online()
        },
        refit: !a.no_refit,
        update: update_params(a.grid_args.max_range),
        grid: GridConfig::with_voxel_size(a.grid_args.voxel_size),
        ..ReplayConfig::default()
    };
    let outcome = replay(
        ReplayInput {
            records: &records,
            scans: &scans,
            initial_grid,
            model,
        },
        &config,
    )?;
    run.write("replay.csv", write_replay_csv(&outcome.minutes))?;
    run.write("grid.txt", write_grid_dump(&outcome.grid))?;
    if let Some(m) = &outcome.model {
        run.write("model.txt", write_model_file(m))?;
    }
    if let Some(m) = &outcome.first_window_model {
        run.write("first_window_model.txt", write_model_file(m))?;
    }
    if let Some(p) = outcome.refit {
        let recent = &outcome.minutes[outcome.minutes.len().saturating_sub(a.k_minutes)..];
        let sample_count = recent.iter().map(|m| m.samples).sum();
        let fit_timestamp = records.last().map_or(f64::NAN, |r| r.timestamp);
        let mut text = String::new();
        for model in [ConventionalModel::Visibility(p.visibility), ConventionalModel::Shadowing(p.shadowing)] {
            text.push_str(&write_params_record(&ParamsRecord {
                model,
                fit_timestamp,
                sample_count,
            }));
        }
        run.write("params.txt", text)?;
    }
    let last = outcome.minutes.last();
    println!(
        "windows={} final_mae_online_db={} final_mae_visibility_db={}",
        outcome.minutes.len(),
        last.and_then(|m| m.mae_online).map_or("NA".into(), |v| v.to_string()),
        last.and_then(|m| m.mae_visibility).map_or("NA".into(), |v| v.to_string()),
    );
    run.finish()
}
