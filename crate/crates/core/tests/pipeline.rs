mod common;

use std::collections::HashMap;

use bbosvr::synth::{generate, SynthConfig};
use bbosvr::traffic::{
    accumulate_rainfall, impute_missing, prepare, Action, NeighborOrder, PipelineConfig,
    PreparedData, VdGrid, VdReading, RAIN_WINDOWS,
};
use common::fixtures::*;
use proptest::prelude::*;

#[test]
fn band_keeps_15_to_35_minutes_after_a_25_minute_interval() {
    let htt = band_example();
    assert_eq!(htt.len(), 2);
    assert_eq!(htt[0].mean_secs, Some(1500.0));
    assert_eq!((htt[1].samples, htt[1].rejected), (3, 2));
    // 15, 25 and 35 minutes survive
    assert_eq!(htt[1].mean_secs, Some(1500.0));
    assert_eq!(htt[1].timestamp, t(10));
}

#[test]
fn gap_of_exactly_two_hours_is_tolerated() {
    assert!(gap_survives(115));
    assert!(gap_survives(120));
    assert!(!gap_survives(125));
}

#[test]
fn over_limit_speed_row_is_dropped() {
    let (data, provenance) = speed_limit_example();
    assert_eq!(provenance.imputation.over_speed_limit, 1);
    assert_eq!(provenance.rows_dropped.missing_detector_data, 1);
    assert!(!data.timestamps.contains(&t(20)));
    assert!(data.timestamps.contains(&t(15)) && data.timestamps.contains(&t(25)));
    assert!(data.features.iter().all(|v| v.is_finite()));
    let speeds = data.names.iter().position(|n| n == "SpeedD2").unwrap();
    assert!(data.features.column(speeds).iter().all(|&v| v <= 120.0));
}

#[test]
fn constant_rain_gives_window_multiples() {
    for depth in [0.5, 1.0, 2.5] {
        let expected: Vec<f64> = [1.0, 12.0, 24.0, 36.0, 48.0, 60.0, 72.0]
            .iter()
            .map(|m| m * depth)
            .collect();
        let got = constant_rain(depth);
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() < 1e-9, "{got:?} vs {expected:?}");
        }
    }
}

#[test]
fn isolated_gap_is_carried_forward_and_longer_gap_uses_neighbor() {
    let (vd, etc, rain) = small_raw(12, &[("D1", 3, None), ("D1", 7, None), ("D1", 8, None)]);
    let (data, provenance, log) = prepare(&vd, &etc, &rain, &PipelineConfig::default()).unwrap();
    assert_eq!(provenance.imputation.carried_forward_speed, 1);
    assert_eq!(provenance.imputation.neighbor_speed, 2);
    // 7 and 8 form a run of two, so neither is isolated
    let at = |k: i64| {
        log.entries
            .iter()
            .find(|e| e.timestamp == t(5 * k))
            .unwrap()
    };
    assert_eq!(at(3).action, Action::CarriedForward { value: 80.2 });
    assert_eq!(
        at(7).action,
        Action::Neighbor {
            donor: "D2".into(),
            value: 90.7
        }
    );
    assert_eq!(
        at(8).action,
        Action::Neighbor {
            donor: "D2".into(),
            value: 90.8
        }
    );
    assert_eq!(provenance.rows_dropped.missing_detector_data, 0);
    assert!(data.rows() > 0);
}

#[test]
fn empty_transits_cannot_give_a_target() {
    let (vd, _, rain) = small_raw(6, &[]);
    let err = prepare(&vd, &[], &rain, &PipelineConfig::default())
        .unwrap_err()
        .to_string();
    assert!(err.contains("target cannot be computed"), "{err}");
}

#[test]
fn synthetic_data_round_trips_through_the_pipeline() {
    let config = SynthConfig {
        intervals: 600,
        ..SynthConfig::default()
    };
    let out = generate(&config).unwrap();
    let (data, provenance, _) =
        prepare(&out.vd, &out.etc, &out.rain, &PipelineConfig::default()).unwrap();
    assert_eq!(data.names, out.manifest.columns);
    assert_eq!(data.names.len(), 43);
    assert_eq!(data.rows(), out.manifest.expected_rows);
    assert_eq!(
        provenance.imputation.unresolved_speed + provenance.imputation.unresolved_flow,
        0
    );
    assert_eq!(provenance.rows_dropped.missing_detector_data, 0);

    // the target is the manifest signal plus noise of the stated size
    let residuals: Vec<f64> = (0..data.rows())
        .map(|r| {
            let cols: HashMap<String, f64> = data
                .names
                .iter()
                .cloned()
                .zip(data.features.row(r).iter().copied())
                .collect();
            data.target[r] - out.manifest.signal(&cols, &data.timestamps[r])
        })
        .collect();
    let n = residuals.len() as f64;
    let mean = residuals.iter().sum::<f64>() / n;
    let sd = (residuals.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n).sqrt();
    assert!(
        mean.abs() < 3.0 * out.manifest.noise_std / n.sqrt() + 1.0,
        "mean {mean}"
    );
    assert!((sd / out.manifest.noise_std - 1.0).abs() < 0.15, "sd {sd}");
}

#[test]
fn missing_detector_data_is_imputed() {
    let config = SynthConfig {
        intervals: 400,
        missing_rate: 0.03,
        seed: 5,
        ..SynthConfig::default()
    };
    let out = generate(&config).unwrap();
    let (data, provenance, _) =
        prepare(&out.vd, &out.etc, &out.rain, &PipelineConfig::default()).unwrap();
    let c = &provenance.imputation;
    assert!(c.carried_forward_speed > 0 && c.neighbor_speed > 0, "{c:?}");
    assert!(
        data.rows() + provenance.rows_dropped.missing_detector_data >= out.manifest.expected_rows
    );
    assert!(data.features.iter().all(|v| v.is_finite()));
}

#[test]
fn generator_and_dataset_files_are_byte_identical_across_runs() {
    let config = SynthConfig {
        intervals: 200,
        seed: 9,
        ..SynthConfig::default()
    };
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        generate(&config).unwrap().write_to_dir(d.path()).unwrap();
    }
    for name in ["vd.csv", "etc.csv", "rain.csv", "manifest.json"] {
        let a = std::fs::read(dirs[0].path().join(name)).unwrap();
        let b = std::fs::read(dirs[1].path().join(name)).unwrap();
        assert!(a == b, "{name} differs");
    }
    let out = generate(&config).unwrap();
    let (data, _, _) = prepare(&out.vd, &out.etc, &out.rain, &PipelineConfig::default()).unwrap();
    let mut buf = Vec::new();
    data.write_csv(&mut buf).unwrap();
    assert_eq!(
        PreparedData::read_csv("dataset.csv", buf.as_slice()).unwrap(),
        data
    );
}

fn grid_from(columns: &[Vec<Option<f64>>]) -> VdGrid {
    let mut readings = Vec::new();
    for (j, col) in columns.iter().enumerate() {
        for (k, v) in col.iter().enumerate() {
            readings.push(VdReading {
                detector_id: format!("D{j}"),
                timestamp: t(5 * (k as i64 + 1)),
                speed_kmh: *v,
                heavy_vehicle_volume: v.map(|s| (s / 10.0).floor()),
            });
        }
    }
    VdGrid::from_readings(&readings, 300).unwrap()
}

proptest! {
    #[test]
    fn rainfall_windows_are_trailing_sums(depths in prop::collection::vec(0.0f64..5.0, 1..200)) {
        let cols = accumulate_rainfall(&depths).unwrap();
        for (c, &(w, _)) in cols.iter().zip(RAIN_WINDOWS.iter()) {
            for t in 0..depths.len() {
                let direct: f64 = depths[t.saturating_sub(w - 1)..=t].iter().sum();
                prop_assert!((c[t] - direct).abs() <= 1e-9 * (1.0 + direct));
            }
        }
        for w in cols.windows(2) {
            for t in 0..depths.len() {
                prop_assert!(w[1][t] >= w[0][t] - 1e-12);
            }
        }
    }

    #[test]
    fn imputation_only_fills_and_deletes(
        columns in prop::collection::vec(
            prop::collection::vec(prop::option::weighted(0.8, 20.0f64..130.0), 30),
            2..5,
        )
    ) {
        let grid = grid_from(&columns);
        let (out, log) = impute_missing(&grid, &NeighborOrder::roster(&grid), 120.0);
        for (before, after) in grid.detectors.iter().zip(&out.detectors) {
            for (b, a) in before.speed.iter().zip(&after.speed) {
                match (b, a) {
                    (Some(b), Some(a)) => prop_assert_eq!(b, a),
                    (Some(b), None) => prop_assert!(*b > 120.0),
                    (None, Some(a)) => prop_assert!(*a <= 120.0),
                    (None, None) => {}
                }
            }
        }
        let filled = log
            .entries
            .iter()
            .filter(|e| matches!(e.action, Action::CarriedForward { .. } | Action::Neighbor { .. }))
            .count();
        let missing_before: usize = grid.detectors.iter().map(|d| d.speed.iter().filter(|v| v.is_none()).count()).sum();
        let flow_missing_before: usize = grid
            .detectors
            .iter()
            .map(|d| d.flow.as_ref().map_or(0, |f| f.iter().filter(|v| v.is_none()).count()))
            .sum();
        prop_assert!(filled <= missing_before + flow_missing_before);
    }
}
