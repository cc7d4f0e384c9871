//! Trailing rainfall accumulations.

use std::collections::HashMap;

use chrono::NaiveDateTime;

use super::records::{epoch_ms, from_epoch_ms, RainReading};
use super::TrafficError;

/// Window lengths in intervals and their column labels.
pub const RAIN_WINDOWS: [(usize, &str); 7] = [
    (1, "5MIN"),
    (12, "1HR"),
    (24, "2HR"),
    (36, "3HR"),
    (48, "4HR"),
    (60, "5HR"),
    (72, "6HR"),
];

/// Trailing sums over each of [`RAIN_WINDOWS`]. Windows reaching past the
/// start of the series sum what is there.
pub fn accumulate_rainfall(depths: &[f64]) -> Result<Vec<Vec<f64>>, TrafficError> {
    if let Some(k) = depths.iter().position(|d| !(*d >= 0.0 && d.is_finite())) {
        return Err(TrafficError::Domain(format!(
            "rain depth at index {k} is {}, expected a finite non-negative value",
            depths[k]
        )));
    }
    Ok(RAIN_WINDOWS
        .iter()
        .map(|&(w, _)| {
            (0..depths.len())
                .map(|t| depths[(t + 1).saturating_sub(w)..=t].iter().sum())
                .collect()
        })
        .collect())
}

/// The accumulated columns of one station on its own interval grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StationRain {
    pub station: String,
    pub timestamps: Vec<NaiveDateTime>,
    /// One column per window, in [`RAIN_WINDOWS`] order.
    pub columns: Vec<Vec<f64>>,
    /// Intervals inside the station's range with no reading.
    pub missing: usize,
}

impl StationRain {
    pub fn column_names(&self) -> Vec<String> {
        RAIN_WINDOWS
            .iter()
            .map(|(_, label)| format!("{}_Rain_{label}", self.station))
            .collect()
    }
}

/// Groups readings by station (first-appearance order) and accumulates
/// each station from its first to its last reading. An interval without a
/// reading contributes no rain.
pub fn station_rain(
    readings: &[RainReading],
    interval_secs: i64,
) -> Result<Vec<StationRain>, TrafficError> {
    let interval_ms = interval_secs * 1000;
    let mut order: Vec<&str> = Vec::new();
    let mut by_station: HashMap<&str, Vec<(i64, f64)>> = HashMap::new();
    for r in readings {
        let ms = epoch_ms(&r.timestamp);
        if ms.rem_euclid(interval_ms) != 0 {
            return Err(TrafficError::Domain(format!(
                "station {} reading at {} is not aligned to the {interval_secs} s grid",
                r.station_id, r.timestamp
            )));
        }
        by_station
            .entry(&r.station_id)
            .or_insert_with(|| {
                order.push(&r.station_id);
                Vec::new()
            })
            .push((ms, r.rain_mm));
    }
    order
        .into_iter()
        .map(|station| {
            let mut rows = by_station.remove(station).expect("station recorded");
            rows.sort_by_key(|r| r.0);
            if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(TrafficError::Domain(format!(
                    "station {station} has two readings at {}",
                    from_epoch_ms(w[0].0)
                )));
            }
            let start = rows[0].0;
            let len = ((rows[rows.len() - 1].0 - start) / interval_ms) as usize + 1;
            let mut depths = vec![0.0; len];
            for &(ms, mm) in &rows {
                depths[((ms - start) / interval_ms) as usize] = mm;
            }
            Ok(StationRain {
                station: station.to_string(),
                timestamps: (0..len)
                    .map(|k| from_epoch_ms(start + k as i64 * interval_ms))
                    .collect(),
                columns: accumulate_rainfall(&depths)?,
                missing: len - rows.len(),
            })
        })
        .collect()
}
