//! Raw record types and their CSV readers and writers.

use std::io::Read;
use std::path::Path;

use chrono::{NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use super::TrafficError;

const TIMESTAMP_FORMATS: [&str; 2] = ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"];

/// Parses an ISO-8601 local timestamp (`T` or space separator, optional
/// fractional seconds).
pub fn parse_timestamp(text: &str) -> Option<NaiveDateTime> {
    let text = text.trim();
    TIMESTAMP_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(text, f).ok())
}

/// Whole-second timestamps print without a fractional part, others with
/// millisecond precision.
pub fn format_timestamp(t: &NaiveDateTime) -> String {
    if t.nanosecond() == 0 {
        t.format("%Y-%m-%dT%H:%M:%S").to_string()
    } else {
        t.format("%Y-%m-%dT%H:%M:%S%.3f").to_string()
    }
}

/// Milliseconds since the Unix epoch, treating the timestamp as UTC.
pub(crate) fn epoch_ms(t: &NaiveDateTime) -> i64 {
    t.and_utc().timestamp_millis()
}

pub(crate) fn from_epoch_ms(ms: i64) -> NaiveDateTime {
    chrono::DateTime::from_timestamp_millis(ms)
        .expect("timestamp within chrono range")
        .naive_utc()
}

/// One vehicle-detector report for one interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VdReading {
    pub detector_id: String,
    pub timestamp: NaiveDateTime,
    pub speed_kmh: Option<f64>,
    pub heavy_vehicle_volume: Option<f64>,
}

/// Toll timestamps of one vehicle at the upstream (A) and downstream (B)
/// gantries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitRecord {
    pub vehicle_id: String,
    pub time_a: NaiveDateTime,
    pub time_b: NaiveDateTime,
}

impl TransitRecord {
    pub fn duration_secs(&self) -> f64 {
        (epoch_ms(&self.time_b) - epoch_ms(&self.time_a)) as f64 / 1000.0
    }
}

/// Rainfall depth in millimetres over the interval ending at `timestamp`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RainReading {
    pub station_id: String,
    pub timestamp: NaiveDateTime,
    pub rain_mm: f64,
}

struct Rows<R: Read> {
    file: String,
    reader: csv::Reader<R>,
}

impl<R: Read> Rows<R> {
    fn new(file: &str, reader: R, columns: &[&str]) -> Result<Self, TrafficError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = reader.headers().map_err(|e| TrafficError::Parse {
            file: file.into(),
            line: 1,
            message: e.to_string(),
        })?;
        let found: Vec<&str> = headers.iter().collect();
        if found != columns {
            return Err(TrafficError::Parse {
                file: file.into(),
                line: 1,
                message: format!("expected header {columns:?}, found {found:?}"),
            });
        }
        Ok(Self {
            file: file.into(),
            reader,
        })
    }

    fn for_each(
        mut self,
        mut f: impl FnMut(&csv::StringRecord) -> Result<(), String>,
    ) -> Result<(), TrafficError> {
        let mut record = csv::StringRecord::new();
        loop {
            let line = self.reader.position().line();
            match self.reader.read_record(&mut record) {
                Ok(false) => return Ok(()),
                Ok(true) => {
                    let line = record.position().map_or(line, |p| p.line());
                    f(&record).map_err(|message| TrafficError::Parse {
                        file: self.file.clone(),
                        line,
                        message,
                    })?;
                }
                Err(e) => {
                    let line = e.position().map_or(line, |p| p.line());
                    return Err(TrafficError::Parse {
                        file: self.file.clone(),
                        line,
                        message: e.to_string(),
                    });
                }
            }
        }
    }
}

fn timestamp_field(
    record: &csv::StringRecord,
    k: usize,
    what: &str,
) -> Result<NaiveDateTime, String> {
    let text = &record[k];
    parse_timestamp(text).ok_or_else(|| format!("malformed {what} timestamp {text:?}"))
}

fn optional_number(
    record: &csv::StringRecord,
    k: usize,
    what: &str,
) -> Result<Option<f64>, String> {
    let text = &record[k];
    if text.is_empty() {
        return Ok(None);
    }
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(format!("malformed {what} {text:?}")),
    }
}

fn open(path: &Path) -> Result<std::fs::File, TrafficError> {
    std::fs::File::open(path).map_err(|source| TrafficError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Reads `detector_id,timestamp,speed_kmh,heavy_vehicle_volume`. Empty
/// fields are missing values.
pub fn read_vd<R: Read>(file: &str, reader: R) -> Result<Vec<VdReading>, TrafficError> {
    let mut out = Vec::new();
    Rows::new(
        file,
        reader,
        &[
            "detector_id",
            "timestamp",
            "speed_kmh",
            "heavy_vehicle_volume",
        ],
    )?
    .for_each(|r| {
        let timestamp = timestamp_field(r, 1, "detector")?;
        let speed_kmh = optional_number(r, 2, "speed")?;
        if speed_kmh.is_some_and(|s| s <= 0.0) {
            return Err(format!("speed must be positive, got {}", &r[2]));
        }
        let heavy_vehicle_volume = optional_number(r, 3, "heavy vehicle volume")?;
        if heavy_vehicle_volume.is_some_and(|v| v < 0.0) {
            return Err(format!("volume must be non-negative, got {}", &r[3]));
        }
        out.push(VdReading {
            detector_id: r[0].to_string(),
            timestamp,
            speed_kmh,
            heavy_vehicle_volume,
        });
        Ok(())
    })?;
    Ok(out)
}

/// Reads `vehicle_id,time_a,time_b`.
pub fn read_etc<R: Read>(file: &str, reader: R) -> Result<Vec<TransitRecord>, TrafficError> {
    let mut out = Vec::new();
    Rows::new(file, reader, &["vehicle_id", "time_a", "time_b"])?.for_each(|r| {
        let time_a = timestamp_field(r, 1, "upstream")?;
        let time_b = timestamp_field(r, 2, "downstream")?;
        if time_b <= time_a {
            return Err("downstream time must be after upstream time".into());
        }
        out.push(TransitRecord {
            vehicle_id: r[0].to_string(),
            time_a,
            time_b,
        });
        Ok(())
    })?;
    Ok(out)
}

/// Reads `station_id,timestamp,rain_mm`.
pub fn read_rain<R: Read>(file: &str, reader: R) -> Result<Vec<RainReading>, TrafficError> {
    let mut out = Vec::new();
    Rows::new(file, reader, &["station_id", "timestamp", "rain_mm"])?.for_each(|r| {
        let timestamp = timestamp_field(r, 1, "rain")?;
        let rain_mm = optional_number(r, 2, "rain depth")?.ok_or("missing rain depth")?;
        if rain_mm < 0.0 {
            return Err(format!("negative rain depth {rain_mm}"));
        }
        out.push(RainReading {
            station_id: r[0].to_string(),
            timestamp,
            rain_mm,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn read_vd_file(path: &Path) -> Result<Vec<VdReading>, TrafficError> {
    read_vd(&path.display().to_string(), open(path)?)
}

pub fn read_etc_file(path: &Path) -> Result<Vec<TransitRecord>, TrafficError> {
    read_etc(&path.display().to_string(), open(path)?)
}

pub fn read_rain_file(path: &Path) -> Result<Vec<RainReading>, TrafficError> {
    read_rain(&path.display().to_string(), open(path)?)
}

fn write_rows<W: std::io::Write>(
    writer: W,
    header: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<(), TrafficError> {
    let err = |e: csv::Error| TrafficError::Csv(e.to_string());
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|e| TrafficError::Csv(e.to_string()))
}

fn optional(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

pub fn write_vd<W: std::io::Write>(writer: W, rows: &[VdReading]) -> Result<(), TrafficError> {
    write_rows(
        writer,
        &[
            "detector_id",
            "timestamp",
            "speed_kmh",
            "heavy_vehicle_volume",
        ],
        rows.iter().map(|r| {
            vec![
                r.detector_id.clone(),
                format_timestamp(&r.timestamp),
                optional(r.speed_kmh),
                optional(r.heavy_vehicle_volume),
            ]
        }),
    )
}

pub fn write_etc<W: std::io::Write>(writer: W, rows: &[TransitRecord]) -> Result<(), TrafficError> {
    write_rows(
        writer,
        &["vehicle_id", "time_a", "time_b"],
        rows.iter().map(|r| {
            vec![
                r.vehicle_id.clone(),
                format_timestamp(&r.time_a),
                format_timestamp(&r.time_b),
            ]
        }),
    )
}

pub fn write_rain<W: std::io::Write>(writer: W, rows: &[RainReading]) -> Result<(), TrafficError> {
    write_rows(
        writer,
        &["station_id", "timestamp", "rain_mm"],
        rows.iter().map(|r| {
            vec![
                r.station_id.clone(),
                format_timestamp(&r.timestamp),
                r.rain_mm.to_string(),
            ]
        }),
    )
}
