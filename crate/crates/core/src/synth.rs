//! Synthetic detector, toll and rainfall records with a planted travel-time
//! function.
//!
//! Speeds follow a diurnal profile with detector-specific AR(1) deviations
//! and incident slowdowns. Each interval's departing vehicles all take
//! `ATT(t) = intercept + baseline * peak(t) + sum(w_c * x_c(t)) + noise`,
//! where `x_c` are planted predictor columns exactly as the preparation
//! pipeline will compute them (HTT included, via the same band filter), so
//! the manifest fully describes the signal.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use chrono::{Duration, NaiveDateTime, Timelike};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::traffic::{
    accumulate_rainfall, flow_column, parse_timestamp, speed_column, write_etc, write_rain,
    write_vd, BandFilter, RainReading, TrafficError, TransitRecord, VdReading, HTT_COLUMN,
    RAIN_WINDOWS,
};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Traffic(#[from] TrafficError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A non-recurrent congestion episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Incident {
    /// First affected interval (0 = first output interval).
    pub start: usize,
    /// Affected intervals, ramps included.
    pub duration: usize,
    /// Peak fractional speed drop, in `[0, 1)`.
    pub severity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// Output intervals (dataset rows when nothing is dropped).
    pub intervals: usize,
    /// Leading intervals generated for travel-time history but not written
    /// as detector data.
    pub warmup: usize,
    pub interval_secs: i64,
    pub start: NaiveDateTime,
    pub detectors: usize,
    /// The last `flow_unstable` detectors lose flow data for longer than
    /// the stability limit, so only their speeds survive preparation.
    pub flow_unstable: usize,
    pub stations: usize,
    /// Planted predictor column names.
    pub planted: Vec<String>,
    /// ATT weight of a planted speed column, seconds per km/h.
    pub speed_weight: f64,
    /// ATT weight of a planted flow column, seconds per vehicle.
    pub flow_weight: f64,
    /// ATT weight of a planted rainfall column, seconds per mm.
    pub rain_weight: f64,
    /// ATT weight of planted HTT, seconds per second.
    pub htt_weight: f64,
    /// Approximate mean travel time, seconds.
    pub mean_travel_time: f64,
    /// Amplitude of the diurnal ATT term not explained by any column, seconds.
    pub baseline_amplitude: f64,
    /// Standard deviation of the ATT noise, seconds.
    pub noise: f64,
    /// Probability that a detector cell (speed or flow) is blanked.
    pub missing_rate: f64,
    pub incidents: Vec<Incident>,
    pub vehicles_min: usize,
    pub vehicles_max: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let detectors = 11;
        let planted = std::iter::once(HTT_COLUMN.to_string())
            .chain(
                (0..detectors)
                    .step_by(2)
                    .take(5)
                    .map(|k| speed_column(&detector_id(k))),
            )
            .collect();
        Self {
            intervals: 2000,
            warmup: 36,
            interval_secs: 300,
            start: parse_timestamp("2024-03-04T00:00:00").expect("valid literal"),
            detectors,
            flow_unstable: 1,
            stations: 3,
            planted,
            speed_weight: -4.0,
            flow_weight: 5.0,
            rain_weight: 20.0,
            htt_weight: 0.4,
            mean_travel_time: 1500.0,
            baseline_amplitude: 0.0,
            noise: 15.0,
            missing_rate: 0.0,
            incidents: vec![
                Incident {
                    start: 310,
                    duration: 24,
                    severity: 0.4,
                },
                Incident {
                    start: 820,
                    duration: 18,
                    severity: 0.3,
                },
                Incident {
                    start: 1290,
                    duration: 30,
                    severity: 0.5,
                },
                Incident {
                    start: 1720,
                    duration: 20,
                    severity: 0.35,
                },
            ],
            vehicles_min: 4,
            vehicles_max: 12,
            seed: 0,
        }
    }
}

pub fn detector_id(k: usize) -> String {
    (4500 + 230 * k).to_string()
}

pub fn station_id(k: usize) -> String {
    format!("S{}", k + 1)
}

/// Flow blackout length for unstable detectors: 30 intervals (150 min).
const FLOW_BLACKOUT: usize = 30;

impl SynthConfig {
    /// Predictor names in the order the preparation pipeline emits them.
    pub fn columns(&self) -> Vec<String> {
        let mut names: Vec<String> = (0..self.detectors)
            .map(|k| speed_column(&detector_id(k)))
            .collect();
        names.extend((0..self.stable_flows()).map(|k| flow_column(&detector_id(k))));
        for s in 0..self.stations {
            names.extend(
                RAIN_WINDOWS
                    .iter()
                    .map(|(_, label)| format!("{}_Rain_{label}", station_id(s))),
            );
        }
        names.push(HTT_COLUMN.into());
        names
    }

    fn stable_flows(&self) -> usize {
        self.detectors - self.flow_unstable
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let fail = |m: String| Err(SynthError::Config(m));
        if self.intervals == 0 || self.detectors == 0 {
            return fail("need at least one interval and one detector".into());
        }
        if self.interval_secs <= 0 || (self.interval_secs * 1000) % 1000 != 0 {
            return fail("interval must be a positive number of seconds".into());
        }
        if self.flow_unstable > self.detectors {
            return fail("more flow-unstable detectors than detectors".into());
        }
        if self.flow_unstable > 0 && self.intervals < FLOW_BLACKOUT + 2 {
            return fail(format!(
                "flow blackout needs at least {} intervals",
                FLOW_BLACKOUT + 2
            ));
        }
        if !(0.0..1.0).contains(&self.missing_rate) {
            return fail(format!("missing rate {} not in [0, 1)", self.missing_rate));
        }
        if !(self.noise >= 0.0) || !(self.mean_travel_time > 0.0) {
            return fail("noise must be non-negative and mean travel time positive".into());
        }
        if self.vehicles_min == 0 || self.vehicles_min > self.vehicles_max {
            return fail("vehicle counts must satisfy 1 <= min <= max".into());
        }
        if let Some(i) = self
            .incidents
            .iter()
            .find(|i| !(0.0..1.0).contains(&i.severity))
        {
            return fail(format!("incident severity {} not in [0, 1)", i.severity));
        }
        let columns = self.columns();
        for p in &self.planted {
            if !columns.contains(p) {
                return fail(format!("planted column {p} is not generated"));
            }
        }
        Ok(())
    }

    fn weight(&self, column: &str) -> f64 {
        if column == HTT_COLUMN {
            self.htt_weight
        } else if column.starts_with("Speed") {
            self.speed_weight
        } else if column.starts_with("Flow") {
            self.flow_weight
        } else {
            self.rain_weight
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedTerm {
    pub column: String,
    pub weight: f64,
}

/// Ground truth of a generated data set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: SynthConfig,
    /// Predictor columns the pipeline should produce, in order.
    pub columns: Vec<String>,
    pub planted: Vec<PlantedTerm>,
    pub intercept: f64,
    pub baseline_amplitude: f64,
    pub noise_std: f64,
    /// Rows the pipeline should produce when no detector value is lost.
    pub expected_rows: usize,
    /// Timestamps of the expected rows whose travel-time intervals the band
    /// filter rejects.
    pub rejected_intervals: usize,
}

impl Manifest {
    /// Noise-free ATT for the given predictor values and timestamp.
    pub fn signal(&self, columns: &HashMap<String, f64>, timestamp: &NaiveDateTime) -> f64 {
        self.intercept
            + self.baseline_amplitude * peak(timestamp)
            + self
                .planted
                .iter()
                .map(|t| t.weight * columns[&t.column])
                .sum::<f64>()
    }
}

/// Generated raw records plus ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub vd: Vec<VdReading>,
    pub etc: Vec<TransitRecord>,
    pub rain: Vec<RainReading>,
    pub manifest: Manifest,
}

impl SynthOutput {
    /// Writes `vd.csv`, `etc.csv`, `rain.csv` and `manifest.json` into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<(), SynthError> {
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| SynthError::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let create = |name: &str| {
            let path = dir.join(name);
            std::fs::File::create(&path)
                .map(std::io::BufWriter::new)
                .map_err(io(&path))
        };
        write_vd(create("vd.csv")?, &self.vd)?;
        write_etc(create("etc.csv")?, &self.etc)?;
        write_rain(create("rain.csv")?, &self.rain)?;
        let json = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        let path = dir.join("manifest.json");
        std::fs::write(&path, json + "\n").map_err(io(&path))?;
        Ok(())
    }
}

/// Morning and evening peak profile in `[0, ~1]`.
fn peak(t: &NaiveDateTime) -> f64 {
    let h = t.num_seconds_from_midnight() as f64 / 3600.0;
    let bump = |c: f64, w: f64| (-0.5 * ((h - c) / w).powi(2)).exp();
    bump(8.0, 1.2) + bump(17.5, 1.5)
}

fn round_tenth(v: f64) -> f64 {
    (v * 10.0).round() / 10.0
}

/// Smooth 0 -> 1 -> 0 incident profile over `duration` intervals.
fn incident_level(incidents: &[Incident], k: isize) -> f64 {
    incidents
        .iter()
        .map(|i| {
            let x = k - i.start as isize;
            if x < 0 || x >= i.duration as isize {
                return 0.0;
            }
            let phase = (x as f64 + 0.5) / i.duration as f64;
            i.severity * (std::f64::consts::PI * phase).sin().powi(2)
        })
        .fold(0.0, f64::max)
}

pub fn generate(config: &SynthConfig) -> Result<SynthOutput, SynthError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.warmup + config.intervals;
    let step = Duration::seconds(config.interval_secs);
    let interval_ms = config.interval_secs * 1000;
    // grid index k labels the interval ending at `first_end + k * step`
    let first_end = config.start - step * config.warmup as i32;
    let time = |k: usize| first_end + step * k as i32;
    let out_index = |k: usize| k as isize - config.warmup as isize;

    // detector speeds and flows on the full grid
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let mut speeds = vec![vec![0.0; n]; config.detectors];
    let mut flows = vec![vec![0.0; n]; config.detectors];
    for d in 0..config.detectors {
        let free = 92.0 + 8.0 * rng.random::<f64>();
        let depth = 22.0 + 12.0 * rng.random::<f64>();
        let exposure = 0.6 + 0.4 * rng.random::<f64>();
        let (phi, sigma): (f64, f64) = (0.9, 8.0);
        let mut ar = sigma * unit.sample(&mut rng);
        for k in 0..n {
            ar = phi * ar + sigma * (1.0 - phi * phi).sqrt() * unit.sample(&mut rng);
            let p = peak(&time(k));
            let base = free - depth * p + ar;
            let slowed = base * (1.0 - exposure * incident_level(&config.incidents, out_index(k)));
            speeds[d][k] = round_tenth(slowed.clamp(10.0, 118.0));
            let volume = 6.0 + 10.0 * p + 2.0 * unit.sample(&mut rng);
            flows[d][k] = volume.round().max(0.0);
        }
    }

    let rain_depth = Exp::new(1.0).expect("valid rate");
    let mut rain = vec![vec![0.0; n]; config.stations];
    for series in rain.iter_mut() {
        let mut wet = false;
        for v in series.iter_mut() {
            wet = if wet {
                rng.random::<f64>() >= 0.1
            } else {
                rng.random::<f64>() < 0.01
            };
            if wet {
                *v = round_tenth(rain_depth.sample(&mut rng)).max(0.1);
            }
        }
    }
    let rain_columns: Vec<Vec<Vec<f64>>> = rain
        .iter()
        .map(|r| accumulate_rainfall(r))
        .collect::<Result<_, _>>()?;

    // every planted column except HTT is known up front
    let column_value = |name: &str, k: usize| -> f64 {
        for d in 0..config.detectors {
            let id = detector_id(d);
            if name == speed_column(&id) {
                return speeds[d][k];
            }
            if name == flow_column(&id) {
                return flows[d][k];
            }
        }
        for (s, cols) in rain_columns.iter().enumerate() {
            for (w, (_, label)) in RAIN_WINDOWS.iter().enumerate() {
                if name == format!("{}_Rain_{label}", station_id(s)) {
                    return cols[w][k];
                }
            }
        }
        unreachable!("planted column validated")
    };
    let planted: Vec<PlantedTerm> = config
        .planted
        .iter()
        .map(|c| PlantedTerm {
            column: c.clone(),
            weight: config.weight(c),
        })
        .collect();
    let mean_of = |name: &str| (0..n).map(|k| column_value(name, k)).sum::<f64>() / n as f64;
    let mut intercept = config.mean_travel_time;
    for t in &planted {
        let mean = if t.column == HTT_COLUMN {
            config.mean_travel_time
        } else {
            mean_of(&t.column)
        };
        intercept -= t.weight * mean;
    }

    // vehicles and travel times, interval by interval
    let band = (0.6, 1.4);
    let mut htt_filter = BandFilter::new(band.0, band.1);
    let mut att_filter = BandFilter::new(band.0, band.1);
    let mut arrivals: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    let mut last_htt = config.mean_travel_time;
    let mut etc = Vec::new();
    let mut expected_rows = 0;
    let mut rejected_intervals = 0;
    let mut first_arrival: Option<i64> = None;
    let noise = Normal::new(0.0, config.noise.max(f64::MIN_POSITIVE)).expect("valid normal");
    for k in 0..n {
        let end = time(k);
        let end_ms = end.and_utc().timestamp_millis();

        // HTT from arrivals in (end - step, end]; all of them departed earlier
        let arrived = arrivals.remove(&end_ms).unwrap_or_default();
        let htt = if first_arrival.is_some_and(|f| f <= end_ms) {
            htt_filter.admit(&arrived).0
        } else {
            None
        };
        let htt_value = htt.unwrap_or(last_htt);
        last_htt = htt_value;

        let mut att = intercept + config.baseline_amplitude * peak(&end);
        for t in &planted {
            let x = if t.column == HTT_COLUMN {
                htt_value
            } else {
                column_value(&t.column, k)
            };
            att += t.weight * x;
        }
        if config.noise > 0.0 {
            att += noise.sample(&mut rng);
        }
        let duration_ms = (att * 1000.0).round() as i64;
        if duration_ms <= interval_ms {
            return Err(SynthError::Config(format!(
                "travel time {att:.1} s at interval {k} is not longer than one interval; adjust weights"
            )));
        }
        let duration = duration_ms as f64 / 1000.0;
        let (att_mean, _, _) = att_filter.admit(&[duration]);

        let vehicles = rng.random_range(config.vehicles_min..=config.vehicles_max);
        for _ in 0..vehicles {
            let offset = rng.random_range(0..interval_ms);
            let depart_ms = end_ms - offset;
            let arrive_ms = depart_ms + duration_ms;
            let bucket = crate::traffic::interval_end_ms(arrive_ms, interval_ms);
            first_arrival = Some(first_arrival.map_or(bucket, |f| f.min(bucket)));
            arrivals.entry(bucket).or_default().push(duration);
            etc.push(TransitRecord {
                vehicle_id: format!("V{}", etc.len() + 1),
                time_a: end - Duration::milliseconds(offset),
                time_b: end - Duration::milliseconds(offset) + Duration::milliseconds(duration_ms),
            });
        }
        if out_index(k) >= 0 {
            if htt.is_some() && att_mean.is_some() {
                expected_rows += 1;
            } else {
                rejected_intervals += 1;
            }
        }
    }
    etc.sort_by(|a, b| {
        a.time_a
            .cmp(&b.time_a)
            .then_with(|| a.vehicle_id.cmp(&b.vehicle_id))
    });

    // detector records for the output range, with blackouts and missing cells
    let mut vd = Vec::with_capacity(config.intervals * config.detectors);
    let blackout_start = config.intervals / 3;
    for k in config.warmup..n {
        let j = k - config.warmup;
        for d in 0..config.detectors {
            let mut speed = Some(speeds[d][k]);
            let mut flow = Some(flows[d][k]);
            let unstable = d >= config.stable_flows();
            if unstable && (blackout_start..blackout_start + FLOW_BLACKOUT).contains(&j) {
                flow = None;
            }
            if config.missing_rate > 0.0 {
                if rng.random::<f64>() < config.missing_rate {
                    speed = None;
                }
                if rng.random::<f64>() < config.missing_rate {
                    flow = None;
                }
            }
            vd.push(VdReading {
                detector_id: detector_id(d),
                timestamp: time(k),
                speed_kmh: speed,
                heavy_vehicle_volume: flow,
            });
        }
    }

    let mut rain_rows = Vec::with_capacity(n * config.stations);
    for k in 0..n {
        for (s, series) in rain.iter().enumerate() {
            rain_rows.push(RainReading {
                station_id: station_id(s),
                timestamp: time(k),
                rain_mm: series[k],
            });
        }
    }

    Ok(SynthOutput {
        vd,
        etc,
        rain: rain_rows,
        manifest: Manifest {
            config: config.clone(),
            columns: config.columns(),
            planted,
            intercept,
            baseline_amplitude: config.baseline_amplitude,
            noise_std: config.noise,
            expected_rows,
            rejected_intervals,
        },
    })
}
