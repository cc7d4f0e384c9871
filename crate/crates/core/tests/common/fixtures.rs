//! Hand-built raw records with known pipeline outcomes.

use bbosvr::traffic::{
    compute_htt, eliminate_unstable_vds, prepare, station_rain, IntervalAggregate, PipelineConfig,
    PreparedData, Provenance, RainReading, TransitRecord, VdGrid, VdReading,
};
use chrono::{Duration, NaiveDateTime};

pub fn t(minutes: i64) -> NaiveDateTime {
    bbosvr::traffic::parse_timestamp("2024-03-01T06:00:00").unwrap() + Duration::minutes(minutes)
}

pub fn trip(id: &str, depart_secs: i64, duration_secs: i64) -> TransitRecord {
    let a = t(0) + Duration::seconds(depart_secs);
    TransitRecord {
        vehicle_id: id.into(),
        time_a: a,
        time_b: a + Duration::seconds(duration_secs),
    }
}

/// Arrival-binned HTT over two intervals. The first holds three 25-minute
/// trips; the second trips of 14, 15, 25, 35 and 36 minutes.
pub fn band_example() -> Vec<IntervalAggregate> {
    let mut trips = Vec::new();
    for (k, secs) in [25 * 60, 25 * 60, 25 * 60].into_iter().enumerate() {
        // arrive 06:01..06:03, inside (06:00, 06:05]
        trips.push(trip(&format!("a{k}"), 60 * (k as i64 + 1) - secs, secs));
    }
    for (k, minutes) in [14, 15, 25, 35, 36].into_iter().enumerate() {
        // arrive 06:06..06:10, inside (06:05, 06:10]
        let secs = minutes * 60;
        trips.push(trip(&format!("b{k}"), 60 * (k as i64 + 6) - secs, secs));
    }
    compute_htt(&trips, 300, (0.6, 1.4))
}

/// Whether a detector with one missing run of `gap_minutes` survives the
/// two-hour stability screen.
pub fn gap_survives(gap_minutes: i64) -> bool {
    let gap = gap_minutes / 5;
    let readings: Vec<VdReading> = (1..=60)
        .map(|k| VdReading {
            detector_id: "D1".into(),
            timestamp: t(5 * k),
            speed_kmh: if (10..10 + gap).contains(&k) {
                None
            } else {
                Some(80.0)
            },
            heavy_vehicle_volume: Some(4.0),
        })
        .collect();
    let grid = VdGrid::from_readings(&readings, 300).unwrap();
    !eliminate_unstable_vds(&grid, 7200).is_empty()
}

/// Constant rain `depth` per interval for eight hours; the seven window
/// columns of the last interval.
pub fn constant_rain(depth: f64) -> Vec<f64> {
    let readings: Vec<RainReading> = (1..=96)
        .map(|k| RainReading {
            station_id: "S1".into(),
            timestamp: t(5 * k),
            rain_mm: depth,
        })
        .collect();
    let station = &station_rain(&readings, 300).unwrap()[0];
    station.columns.iter().map(|c| c[c.len() - 1]).collect()
}

/// Two detectors over `intervals` intervals with a 10-minute trip departing
/// every minute and steady light rain. `speed` overrides single cells.
pub fn small_raw(
    intervals: i64,
    speed: &[(&str, i64, Option<f64>)],
) -> (Vec<VdReading>, Vec<TransitRecord>, Vec<RainReading>) {
    let mut vd = Vec::new();
    for k in 1..=intervals {
        for (d, base) in [("D1", 80.0), ("D2", 90.0)] {
            let v = speed
                .iter()
                .find(|(id, at, _)| *id == d && *at == k)
                .map_or(Some(base + k as f64 * 0.1), |c| c.2);
            vd.push(VdReading {
                detector_id: d.into(),
                timestamp: t(5 * k),
                speed_kmh: v,
                heavy_vehicle_volume: Some(3.0 + (k % 4) as f64),
            });
        }
    }
    let etc = (-30..(5 * intervals + 30))
        .map(|m| trip(&format!("v{m}"), 60 * m, 600 + (m.rem_euclid(7)) * 5))
        .collect();
    let rain = (-10..=intervals + 10)
        .map(|k| RainReading {
            station_id: "S1".into(),
            timestamp: t(5 * k),
            rain_mm: 0.2,
        })
        .collect();
    (vd, etc, rain)
}

/// `small_raw` over 12 intervals with one 125 km/h reading at interval 4.
pub fn speed_limit_example() -> (PreparedData, Provenance) {
    let (vd, etc, rain) = small_raw(12, &[("D2", 4, Some(125.0))]);
    let (data, provenance, _) = prepare(&vd, &etc, &rain, &PipelineConfig::default()).unwrap();
    (data, provenance)
}
