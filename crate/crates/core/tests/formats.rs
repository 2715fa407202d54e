use proptest::prelude::*;
use radiomap::features::{parse_samples, write_samples, FeatureVector, PathLossSample};
use radiomap::grid::{parse_grid_dump, parse_scan_file, write_grid_dump, write_scan_file, GridConfig, OccupancyGrid, ScanFrame, VoxelIndex};
use radiomap::pipeline::{parse_measurements, parse_poses, write_measurements, write_poses, MeasurementRecord, PoseRecord};
use radiomap::Point3;

fn finite() -> impl Strategy<Value = f64> {
    -1e4..1e4f64
}

fn ident() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_]{0,7}"
}

fn point() -> impl Strategy<Value = Point3<f64>> {
    (finite(), finite(), finite()).prop_map(|(x, y, z)| Point3::new(x, y, z))
}

fn features() -> impl Strategy<Value = FeatureVector> {
    (0.01..500.0f64, any::<bool>(), 0u32..200, 0u32..200, 0u32..200, 0u32..200, -40.0..7.0f64, -40.0..0.0f64, -5.0..5.0f64).prop_map(
        |(d, vis, nf, no, nm, nu, rl, dl, v)| FeatureVector {
            distance: d,
            log10_distance: d.log10(),
            strictly_visible: vis && no + nm + nu == 0,
            strictly_not_visible: no > 0,
            n_free: nf,
            n_occupied: no,
            n_maybe: nm,
            n_unknown: nu,
            not_free_meters: f64::from(no + nm + nu) * 0.5,
            reflection_loss: rl,
            diffraction_loss: dl,
            worst_v: v,
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn samples_round_trip(rows in prop::collection::vec((features(), 20.0..160.0f64, ident(), ident(), 0.0..1e5f64, any::<bool>()), 0..20)) {
        let samples: Vec<PathLossSample> = rows
            .into_iter()
            .map(|(features, measured_pl, tx_id, rx_id, timestamp, synthetic)| PathLossSample { features, measured_pl, tx_id, rx_id, timestamp, synthetic })
            .collect();
        prop_assert_eq!(parse_samples(&write_samples(&samples)).unwrap(), samples);
    }

    #[test]
    fn measurements_round_trip(rows in prop::collection::vec((0.0..1e5f64, ident(), ident(), -120.0..0.0f64), 0..20)) {
        let recs: Vec<MeasurementRecord> = rows.into_iter().map(|(t, a, b, rss)| MeasurementRecord::new(t, &a, &b, rss)).collect();
        let parsed = parse_measurements(&write_measurements(&recs)).unwrap();
        prop_assert_eq!(parsed.skipped, 0);
        prop_assert_eq!(parsed.records, recs);
    }

    #[test]
    fn poses_round_trip(rows in prop::collection::vec((0.0..1e5f64, ident(), point()), 0..20)) {
        let poses: Vec<PoseRecord> = rows.into_iter().map(|(t, id, p)| PoseRecord::at(t, &id, p)).collect();
        let parsed = parse_poses(&write_poses(&poses)).unwrap();
        prop_assert_eq!(parsed.records, poses);
    }

    #[test]
    fn scan_file_round_trip(frames in prop::collection::vec((ident(), 0.0..1e5f64, point(), prop::collection::vec(point(), 0..10)), 0..5)) {
        let frames: Vec<ScanFrame> = frames.into_iter().map(|(id, t, p, pts)| ScanFrame::axis_aligned(id, t, p, pts)).collect();
        prop_assert_eq!(parse_scan_file(&write_scan_file(&frames)).unwrap(), frames);
    }

    #[test]
    fn grid_dump_round_trip(cells in prop::collection::vec(((-40i32..40, -40i32..40, -40i32..40), -4.0..4.0f64), 0..50)) {
        let mut grid = OccupancyGrid::new(GridConfig::with_voxel_size(0.5)).unwrap();
        for ((x, y, z), l) in cells {
            grid.set(VoxelIndex::new(x, y, z), l);
        }
        let back = parse_grid_dump(&write_grid_dump(&grid), GridConfig::with_voxel_size(0.5)).unwrap();
        prop_assert_eq!(back.cells(), grid.cells());
    }
}
