//! Raw traffic records to a travel-time dataset.
//!
//! The pipeline runs in a fixed order:
//!
//! 1. detector readings are placed on a 5-minute grid and detectors with a
//!    missing run longer than two hours are removed ([`eliminate_unstable_vds`]);
//! 2. missing speed and flow values are imputed and over-limit speeds deleted
//!    ([`impute_missing`]);
//! 3. toll transits give the historical (arrival-binned) and actual
//!    (departure-binned) travel times ([`compute_htt`], [`compute_att`]);
//! 4. rainfall is accumulated over seven trailing windows per station
//!    ([`accumulate_rainfall`]);
//! 5. everything is inner-joined on the timestamp ([`assemble_dataset`]).
//!
//! [`prepare`] runs all five steps and reports what was dropped or filled.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

mod assemble;
mod rain;
mod records;
mod transit;
mod vd;

pub use assemble::{
    assemble_dataset, flow_column, speed_column, PreparedData, RowDrops, HTT_COLUMN, TARGET_COLUMN,
};
pub use rain::{accumulate_rainfall, station_rain, StationRain, RAIN_WINDOWS};
pub use records::{
    format_timestamp, parse_timestamp, read_etc, read_etc_file, read_rain, read_rain_file, read_vd,
    read_vd_file, write_etc, write_rain, write_vd, RainReading, TransitRecord, VdReading,
};
pub use transit::{compute_att, compute_htt, interval_end_ms, BandFilter, IntervalAggregate};
pub use vd::{
    eliminate_unstable_vds, impute_missing, longest_gap, Action, Channel, DetectorSeries,
    ImputationCounts, ImputationEntry, ImputationLog, NeighborOrder, Survivor, VdGrid,
    FLOW_MATCH_WINDOW,
};

#[derive(Debug, Error)]
pub enum TrafficError {
    #[error("{file}, line {line}: {message}")]
    Parse {
        file: String,
        line: u64,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV output failed: {0}")]
    Csv(String),
    #[error("{0}")]
    Domain(String),
}

/// Pipeline constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Aggregation interval in seconds.
    pub interval_secs: i64,
    /// Longest tolerated run of missing detector data, in seconds.
    pub max_gap_secs: i64,
    pub speed_limit_kmh: f64,
    /// Travel-time outlier band, as fractions of the previous interval mean.
    pub band_lower: f64,
    pub band_upper: f64,
    /// Detector positions along the road. Without them, neighbors are
    /// ordered by position in the detector file.
    pub detector_positions: Option<BTreeMap<String, f64>>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            interval_secs: 300,
            max_gap_secs: 7200,
            speed_limit_kmh: 120.0,
            band_lower: 0.6,
            band_upper: 1.4,
            detector_positions: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), TrafficError> {
        if self.interval_secs <= 0 || self.max_gap_secs < 0 {
            return Err(TrafficError::Domain(
                "interval must be positive and max gap non-negative".into(),
            ));
        }
        if !(self.speed_limit_kmh > 0.0) {
            return Err(TrafficError::Domain("speed limit must be positive".into()));
        }
        if !(0.0 <= self.band_lower && self.band_lower <= 1.0 && self.band_upper >= 1.0) {
            return Err(TrafficError::Domain(format!(
                "outlier band [{}, {}] must contain 1",
                self.band_lower, self.band_upper
            )));
        }
        Ok(())
    }

    pub fn band(&self) -> (f64, f64) {
        (self.band_lower, self.band_upper)
    }
}

/// What the pipeline removed, filled or rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub detectors_read: usize,
    pub detectors_removed: Vec<String>,
    pub detectors_speed_only: Vec<String>,
    pub imputation: ImputationCounts,
    pub transits: usize,
    pub htt_trips_rejected: usize,
    pub att_trips_rejected: usize,
    pub rain_stations: usize,
    pub rain_intervals_without_reading: usize,
    pub grid_rows: usize,
    pub rows_dropped: RowDrops,
    pub rows: usize,
    pub columns: usize,
}

/// Runs the whole pipeline.
pub fn prepare(
    vd_readings: &[VdReading],
    transits: &[TransitRecord],
    rain_readings: &[RainReading],
    config: &PipelineConfig,
) -> Result<(PreparedData, Provenance, ImputationLog), TrafficError> {
    config.validate()?;
    if transits.is_empty() {
        return Err(TrafficError::Domain(
            "no transit records: the travel-time target cannot be computed".into(),
        ));
    }
    if vd_readings.is_empty() {
        return Err(TrafficError::Domain("no detector readings".into()));
    }

    let grid = VdGrid::from_readings(vd_readings, config.interval_secs)?;
    let survivors = eliminate_unstable_vds(&grid, config.max_gap_secs);
    let detectors_removed: Vec<String> = grid
        .detectors
        .iter()
        .filter(|d| !survivors.iter().any(|s| s.id == d.id))
        .map(|d| d.id.clone())
        .collect();
    for id in &detectors_removed {
        log::info!(
            "detector {id} removed: missing run longer than {} s",
            config.max_gap_secs
        );
    }
    let stable = grid.retain(&survivors);
    if stable.detectors.is_empty() {
        return Err(TrafficError::Domain(
            "every detector was removed as unstable".into(),
        ));
    }
    let neighbors = match &config.detector_positions {
        Some(p) => NeighborOrder::from_positions(&stable, p)?,
        None => NeighborOrder::roster(&stable),
    };
    let (imputed, imputation_log) = impute_missing(&stable, &neighbors, config.speed_limit_kmh);
    let unresolved = imputation_log
        .entries
        .iter()
        .filter(|e| e.action == Action::Unresolved)
        .count();
    if unresolved > 0 {
        log::warn!("{unresolved} detector values could not be imputed; their rows will be dropped");
    }

    let htt = compute_htt(transits, config.interval_secs, config.band());
    let att = compute_att(transits, config.interval_secs, config.band());
    let rain = station_rain(rain_readings, config.interval_secs)?;
    let (data, rows_dropped) = assemble_dataset(&imputed, &rain, &htt, &att)?;

    let provenance = Provenance {
        detectors_read: grid.detectors.len(),
        detectors_removed,
        detectors_speed_only: survivors
            .iter()
            .filter(|s| !s.flow)
            .map(|s| s.id.clone())
            .collect(),
        imputation: imputation_log.counts(),
        transits: transits.len(),
        htt_trips_rejected: htt.iter().map(|a| a.rejected).sum(),
        att_trips_rejected: att.iter().map(|a| a.rejected).sum(),
        rain_stations: rain.len(),
        rain_intervals_without_reading: rain.iter().map(|s| s.missing).sum(),
        grid_rows: grid.len(),
        rows_dropped,
        rows: data.rows(),
        columns: data.names.len(),
    };
    Ok((data, provenance, imputation_log))
}
