//! Joining detector, rainfall and travel-time series into one table.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDateTime;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::rain::StationRain;
use super::records::{format_timestamp, parse_timestamp};
use super::transit::IntervalAggregate;
use super::vd::VdGrid;
use super::TrafficError;
use crate::select::{Dataset, SelectError};

/// Name of the target column in `dataset.csv`.
pub const TARGET_COLUMN: &str = "att_seconds";
/// Name of the historical travel-time predictor.
pub const HTT_COLUMN: &str = "HTT";

pub fn speed_column(detector: &str) -> String {
    format!("Speed{detector}")
}

pub fn flow_column(detector: &str) -> String {
    format!("Flow{detector}")
}

/// A complete predictor table with its target.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedData {
    pub timestamps: Vec<NaiveDateTime>,
    pub names: Vec<String>,
    pub features: Array2<f64>,
    pub target: Vec<f64>,
}

impl PreparedData {
    pub fn rows(&self) -> usize {
        self.target.len()
    }

    /// Chronological train/test dataset over all columns.
    pub fn to_dataset(&self, train_fraction: f64) -> Result<Dataset, SelectError> {
        Dataset::with_fraction(
            self.features.clone(),
            self.target.clone(),
            self.names.clone(),
            train_fraction,
        )
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), TrafficError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["timestamp".to_string()];
        header.extend(self.names.iter().cloned());
        header.push(TARGET_COLUMN.into());
        let csv_err = |e: csv::Error| TrafficError::Csv(e.to_string());
        w.write_record(&header).map_err(csv_err)?;
        for (k, t) in self.timestamps.iter().enumerate() {
            let mut row = vec![format_timestamp(t)];
            row.extend(self.features.row(k).iter().map(|v| v.to_string()));
            row.push(self.target[k].to_string());
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| TrafficError::Csv(e.to_string()))?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<(), TrafficError> {
        let file = std::fs::File::create(path).map_err(|source| TrafficError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn read_csv<R: Read>(file: &str, reader: R) -> Result<Self, TrafficError> {
        let parse = |line: u64, message: String| TrafficError::Parse {
            file: file.into(),
            line,
            message,
        };
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header: Vec<String> = r
            .headers()
            .map_err(|e| parse(1, e.to_string()))?
            .iter()
            .map(String::from)
            .collect();
        if header.len() < 3 || header[0] != "timestamp" || header[header.len() - 1] != TARGET_COLUMN
        {
            return Err(parse(
                1,
                format!("header must be timestamp, predictor columns..., {TARGET_COLUMN}"),
            ));
        }
        let names = header[1..header.len() - 1].to_vec();
        let mut timestamps = Vec::new();
        let mut values = Vec::new();
        let mut target = Vec::new();
        for record in r.records() {
            let record =
                record.map_err(|e| parse(e.position().map_or(0, |p| p.line()), e.to_string()))?;
            let line = record.position().map_or(0, |p| p.line());
            let t = parse_timestamp(&record[0])
                .ok_or_else(|| parse(line, format!("malformed timestamp {:?}", &record[0])))?;
            timestamps.push(t);
            for k in 1..record.len() {
                let v: f64 = record[k]
                    .parse()
                    .ok()
                    .filter(|v: &f64| v.is_finite())
                    .ok_or_else(|| {
                        parse(
                            line,
                            format!("malformed value {:?} in column {}", &record[k], header[k]),
                        )
                    })?;
                if k == record.len() - 1 {
                    target.push(v);
                } else {
                    values.push(v);
                }
            }
        }
        let features = Array2::from_shape_vec((target.len(), names.len()), values)
            .map_err(|e| parse(0, e.to_string()))?;
        Ok(Self {
            timestamps,
            names,
            features,
            target,
        })
    }

    pub fn read_csv_file(path: &Path) -> Result<Self, TrafficError> {
        let file = std::fs::File::open(path).map_err(|source| TrafficError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::read_csv(&path.display().to_string(), file)
    }
}

/// Rows of the detector grid dropped during assembly, by the first rule
/// each failed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowDrops {
    pub missing_att: usize,
    pub missing_htt: usize,
    pub missing_rain: usize,
    pub missing_detector_data: usize,
}

/// Inner join on timestamps of every source. Columns: speeds, flows, the
/// rainfall windows of each station, HTT. Only complete rows are kept.
pub fn assemble_dataset(
    vd: &VdGrid,
    rain: &[StationRain],
    htt: &[IntervalAggregate],
    att: &[IntervalAggregate],
) -> Result<(PreparedData, RowDrops), TrafficError> {
    let grid = vd.timestamps();
    let ranges: Vec<(&str, Option<(NaiveDateTime, NaiveDateTime)>)> = std::iter::once((
        "detector",
        grid.first().zip(grid.last()).map(|(a, b)| (*a, *b)),
    ))
    .chain(rain.iter().map(|s| {
        (
            "rainfall",
            s.timestamps
                .first()
                .zip(s.timestamps.last())
                .map(|(a, b)| (*a, *b)),
        )
    }))
    .chain([("HTT", span(htt)), ("ATT", span(att))])
    .collect();
    for (what, range) in &ranges {
        if range.is_none() {
            return Err(TrafficError::Domain(format!("{what} series is empty")));
        }
    }
    let lo = ranges
        .iter()
        .filter_map(|r| r.1)
        .map(|r| r.0)
        .max()
        .expect("non-empty");
    let hi = ranges
        .iter()
        .filter_map(|r| r.1)
        .map(|r| r.1)
        .min()
        .expect("non-empty");
    if lo > hi {
        return Err(TrafficError::Domain(
            "detector, rainfall and travel-time time ranges do not overlap".into(),
        ));
    }

    let mut names = Vec::new();
    names.extend(vd.detectors.iter().map(|d| speed_column(&d.id)));
    names.extend(
        vd.detectors
            .iter()
            .filter(|d| d.flow.is_some())
            .map(|d| flow_column(&d.id)),
    );
    for s in rain {
        names.extend(s.column_names());
    }
    names.push(HTT_COLUMN.into());

    let means = |series: &[IntervalAggregate]| -> HashMap<NaiveDateTime, f64> {
        series
            .iter()
            .filter_map(|a| a.mean_secs.map(|m| (a.timestamp, m)))
            .collect()
    };
    let htt = means(htt);
    let att = means(att);
    let rain_index: Vec<HashMap<NaiveDateTime, usize>> = rain
        .iter()
        .map(|s| {
            s.timestamps
                .iter()
                .enumerate()
                .map(|(k, t)| (*t, k))
                .collect()
        })
        .collect();

    let mut drops = RowDrops::default();
    let mut timestamps = Vec::new();
    let mut values = Vec::new();
    let mut target = Vec::new();
    let mut row = Vec::with_capacity(names.len());
    for (k, t) in grid.iter().enumerate() {
        let Some(&y) = att.get(t) else {
            drops.missing_att += 1;
            continue;
        };
        let Some(&h) = htt.get(t) else {
            drops.missing_htt += 1;
            continue;
        };
        let rain_rows: Option<Vec<usize>> = rain_index.iter().map(|m| m.get(t).copied()).collect();
        let Some(rain_rows) = rain_rows else {
            drops.missing_rain += 1;
            continue;
        };
        row.clear();
        let speeds = vd.detectors.iter().map(|d| d.speed[k]);
        let flows = vd
            .detectors
            .iter()
            .filter_map(|d| d.flow.as_ref().map(|f| f[k]));
        let complete: Option<Vec<f64>> = speeds.chain(flows).collect();
        let Some(cells) = complete else {
            drops.missing_detector_data += 1;
            continue;
        };
        row.extend(cells);
        for (s, &r) in rain.iter().zip(&rain_rows) {
            row.extend(s.columns.iter().map(|c| c[r]));
        }
        row.push(h);
        timestamps.push(*t);
        values.extend_from_slice(&row);
        target.push(y);
    }
    if target.is_empty() {
        return Err(TrafficError::Domain(format!(
            "no complete rows after joining sources ({drops:?})"
        )));
    }
    let features = Array2::from_shape_vec((target.len(), names.len()), values)
        .expect("row width matches names");
    Ok((
        PreparedData {
            timestamps,
            names,
            features,
            target,
        },
        drops,
    ))
}

fn span(series: &[IntervalAggregate]) -> Option<(NaiveDateTime, NaiveDateTime)> {
    let mut with_data = series.iter().filter(|a| a.mean_secs.is_some());
    let first = with_data.next()?.timestamp;
    let last = with_data.next_back().map_or(first, |a| a.timestamp);
    Some((first, last))
}
