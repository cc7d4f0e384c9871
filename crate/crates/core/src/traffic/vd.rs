//! Per-detector series on the interval grid: stability screening and
//! imputation of missing speed and flow values.

use std::collections::{BTreeMap, HashMap};

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use super::records::{epoch_ms, from_epoch_ms, VdReading};
use super::TrafficError;

/// Speed and flow series of one detector. `flow` is `None` for a detector
/// kept for speed only.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorSeries {
    pub id: String,
    pub speed: Vec<Option<f64>>,
    pub flow: Option<Vec<Option<f64>>>,
}

/// All detectors aligned on one interval grid. Detectors keep the order in
/// which they first appear in the input.
#[derive(Debug, Clone, PartialEq)]
pub struct VdGrid {
    start_ms: i64,
    interval_ms: i64,
    len: usize,
    pub detectors: Vec<DetectorSeries>,
}

impl VdGrid {
    /// Places readings on the grid spanning the earliest to the latest
    /// timestamp. Intervals without a reading are missing in both channels.
    pub fn from_readings(readings: &[VdReading], interval_secs: i64) -> Result<Self, TrafficError> {
        if interval_secs <= 0 {
            return Err(TrafficError::Domain(format!(
                "interval must be positive, got {interval_secs} s"
            )));
        }
        let interval_ms = interval_secs * 1000;
        let mut roster: Vec<String> = Vec::new();
        let mut index: HashMap<&str, usize> = HashMap::new();
        for r in readings {
            let ms = epoch_ms(&r.timestamp);
            if ms.rem_euclid(interval_ms) != 0 {
                return Err(TrafficError::Domain(format!(
                    "detector {} reading at {} is not aligned to the {interval_secs} s grid",
                    r.detector_id, r.timestamp
                )));
            }
            if !index.contains_key(r.detector_id.as_str()) {
                index.insert(&r.detector_id, roster.len());
                roster.push(r.detector_id.clone());
            }
        }
        let (Some(start_ms), Some(end_ms)) = (
            readings.iter().map(|r| epoch_ms(&r.timestamp)).min(),
            readings.iter().map(|r| epoch_ms(&r.timestamp)).max(),
        ) else {
            return Ok(Self {
                start_ms: 0,
                interval_ms,
                len: 0,
                detectors: Vec::new(),
            });
        };
        let len = ((end_ms - start_ms) / interval_ms) as usize + 1;
        let mut detectors: Vec<DetectorSeries> = roster
            .iter()
            .map(|id| DetectorSeries {
                id: id.clone(),
                speed: vec![None; len],
                flow: Some(vec![None; len]),
            })
            .collect();
        let mut seen = vec![vec![false; len]; roster.len()];
        for r in readings {
            let d = index[r.detector_id.as_str()];
            let k = ((epoch_ms(&r.timestamp) - start_ms) / interval_ms) as usize;
            if std::mem::replace(&mut seen[d][k], true) {
                return Err(TrafficError::Domain(format!(
                    "detector {} has two readings at {}",
                    r.detector_id, r.timestamp
                )));
            }
            detectors[d].speed[k] = r.speed_kmh;
            if let Some(flow) = detectors[d].flow.as_mut() {
                flow[k] = r.heavy_vehicle_volume;
            }
        }
        Ok(Self {
            start_ms,
            interval_ms,
            len,
            detectors,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn interval_secs(&self) -> i64 {
        self.interval_ms / 1000
    }

    pub fn timestamp(&self, k: usize) -> NaiveDateTime {
        from_epoch_ms(self.start_ms + k as i64 * self.interval_ms)
    }

    pub fn timestamps(&self) -> Vec<NaiveDateTime> {
        (0..self.len).map(|k| self.timestamp(k)).collect()
    }

    pub fn detector(&self, id: &str) -> Option<&DetectorSeries> {
        self.detectors.iter().find(|d| d.id == id)
    }

    /// Keeps the surviving detectors (in grid order), dropping the flow
    /// channel of speed-only survivors.
    pub fn retain(&self, survivors: &[Survivor]) -> Self {
        let keep: HashMap<&str, bool> = survivors.iter().map(|s| (s.id.as_str(), s.flow)).collect();
        let detectors = self
            .detectors
            .iter()
            .filter_map(|d| {
                keep.get(d.id.as_str()).map(|&flow| DetectorSeries {
                    id: d.id.clone(),
                    speed: d.speed.clone(),
                    flow: if flow { d.flow.clone() } else { None },
                })
            })
            .collect();
        Self { detectors, ..*self }
    }
}

/// Longest run of consecutive missing values.
pub fn longest_gap(series: &[Option<f64>]) -> usize {
    let mut longest = 0;
    let mut run = 0;
    for v in series {
        if v.is_none() {
            run += 1;
            longest = longest.max(run);
        } else {
            run = 0;
        }
    }
    longest
}

/// A detector that passed the stability screen.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Survivor {
    pub id: String,
    /// Whether the flow channel is stable too.
    pub flow: bool,
}

/// Drops detectors whose speed series has a missing run longer than
/// `max_gap_secs`. A detector whose flow series alone fails survives for
/// speed only.
pub fn eliminate_unstable_vds(grid: &VdGrid, max_gap_secs: i64) -> Vec<Survivor> {
    let interval = grid.interval_secs();
    let stable = |series: &[Option<f64>]| longest_gap(series) as i64 * interval <= max_gap_secs;
    grid.detectors
        .iter()
        .filter(|d| stable(&d.speed))
        .map(|d| Survivor {
            id: d.id.clone(),
            flow: d.flow.as_deref().is_some_and(stable),
        })
        .collect()
}

/// For every detector, the other detectors from nearest to farthest.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborOrder {
    order: Vec<Vec<usize>>,
}

impl NeighborOrder {
    /// Distances are differences of roster positions.
    pub fn roster(grid: &VdGrid) -> Self {
        let positions: Vec<f64> = (0..grid.detectors.len()).map(|k| k as f64).collect();
        Self::from_distances(&positions)
    }

    /// Distances from detector positions along the road (e.g. km markers).
    pub fn from_positions(
        grid: &VdGrid,
        positions: &BTreeMap<String, f64>,
    ) -> Result<Self, TrafficError> {
        let pos = grid
            .detectors
            .iter()
            .map(|d| {
                positions.get(&d.id).copied().ok_or_else(|| {
                    TrafficError::Domain(format!("no position configured for detector {}", d.id))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_distances(&pos))
    }

    fn from_distances(positions: &[f64]) -> Self {
        let order = (0..positions.len())
            .map(|j| {
                let mut others: Vec<usize> = (0..positions.len()).filter(|&k| k != j).collect();
                // stable sort: equal distances keep roster order
                others.sort_by(|&a, &b| {
                    (positions[a] - positions[j])
                        .abs()
                        .total_cmp(&(positions[b] - positions[j]).abs())
                });
                others
            })
            .collect();
        Self { order }
    }

    pub fn neighbors(&self, detector: usize) -> &[usize] {
        &self.order[detector]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Speed,
    Flow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "action")]
pub enum Action {
    /// Isolated gap filled with the preceding value.
    CarriedForward { value: f64 },
    /// Filled from a neighboring detector.
    Neighbor { donor: String, value: f64 },
    /// No rule applied; the cell stays missing and its row is dropped later.
    Unresolved,
    /// Speed above the limit deleted; its row is dropped later.
    OverSpeedLimit { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputationEntry {
    pub detector: String,
    pub timestamp: NaiveDateTime,
    pub channel: Channel,
    #[serde(flatten)]
    pub action: Action,
}

/// Per-rule totals of an imputation log.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImputationCounts {
    pub carried_forward_speed: usize,
    pub carried_forward_flow: usize,
    pub neighbor_speed: usize,
    pub neighbor_flow: usize,
    pub unresolved_speed: usize,
    pub unresolved_flow: usize,
    pub over_speed_limit: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ImputationLog {
    pub entries: Vec<ImputationEntry>,
}

impl ImputationLog {
    pub fn counts(&self) -> ImputationCounts {
        let mut c = ImputationCounts::default();
        for e in &self.entries {
            let slot = match (&e.action, e.channel) {
                (Action::CarriedForward { .. }, Channel::Speed) => &mut c.carried_forward_speed,
                (Action::CarriedForward { .. }, Channel::Flow) => &mut c.carried_forward_flow,
                (Action::Neighbor { .. }, Channel::Speed) => &mut c.neighbor_speed,
                (Action::Neighbor { .. }, Channel::Flow) => &mut c.neighbor_flow,
                (Action::Unresolved, Channel::Speed) => &mut c.unresolved_speed,
                (Action::Unresolved, Channel::Flow) => &mut c.unresolved_flow,
                (Action::OverSpeedLimit { .. }, _) => &mut c.over_speed_limit,
            };
            *slot += 1;
        }
        c
    }
}

/// Intervals of donor history searched when matching flow by speed.
pub const FLOW_MATCH_WINDOW: usize = 6;

/// Fills missing values, then deletes speeds above `speed_limit`.
///
/// * An isolated missing value whose predecessor is present takes the
///   predecessor's value.
/// * Any other missing value is taken from the nearest detector with an
///   original reading at that time. Speed is copied. Flow is the donor's flow
///   at the time, within the previous [`FLOW_MATCH_WINDOW`] intervals, whose
///   donor speed is closest to this detector's speed now (later times win
///   ties).
/// * Values no rule can fill stay missing.
///
/// Donors are only ever read from original readings, never from imputed
/// ones, so the result does not depend on detector order.
pub fn impute_missing(
    grid: &VdGrid,
    neighbors: &NeighborOrder,
    speed_limit: f64,
) -> (VdGrid, ImputationLog) {
    let mut out = grid.clone();
    let mut log = ImputationLog::default();
    let len = grid.len();

    for (j, det) in grid.detectors.iter().enumerate() {
        let mut speed = det.speed.clone();
        for t in 0..len {
            if det.speed[t].is_some() {
                continue;
            }
            let action = if let Some(v) = carried(&det.speed, t) {
                Action::CarriedForward { value: v }
            } else if let Some((donor, v)) = neighbors
                .neighbors(j)
                .iter()
                .find_map(|&d| grid.detectors[d].speed[t].map(|v| (d, v)))
            {
                Action::Neighbor {
                    donor: grid.detectors[donor].id.clone(),
                    value: v,
                }
            } else {
                Action::Unresolved
            };
            speed[t] = filled(&action);
            log.entries
                .push(entry(grid, det, t, Channel::Speed, action));
        }

        if let Some(orig_flow) = &det.flow {
            let mut flow = orig_flow.clone();
            for t in 0..len {
                if orig_flow[t].is_some() {
                    continue;
                }
                let action = if let Some(v) = carried(orig_flow, t) {
                    Action::CarriedForward { value: v }
                } else {
                    match speed[t].and_then(|s| match_flow(grid, neighbors.neighbors(j), t, s)) {
                        Some((donor, v)) => Action::Neighbor {
                            donor: grid.detectors[donor].id.clone(),
                            value: v,
                        },
                        None => Action::Unresolved,
                    }
                };
                flow[t] = filled(&action);
                log.entries.push(entry(grid, det, t, Channel::Flow, action));
            }
            out.detectors[j].flow = Some(flow);
        }

        for (t, s) in speed.iter_mut().enumerate() {
            if let Some(v) = *s {
                if v > speed_limit {
                    *s = None;
                    log.entries.push(entry(
                        grid,
                        det,
                        t,
                        Channel::Speed,
                        Action::OverSpeedLimit { value: v },
                    ));
                }
            }
        }
        out.detectors[j].speed = speed;
    }
    (out, log)
}

fn carried(series: &[Option<f64>], t: usize) -> Option<f64> {
    let isolated = t > 0 && series.get(t + 1).is_none_or(|v| v.is_some());
    if isolated {
        series[t - 1]
    } else {
        None
    }
}

fn filled(action: &Action) -> Option<f64> {
    match action {
        Action::CarriedForward { value } | Action::Neighbor { value, .. } => Some(*value),
        Action::Unresolved | Action::OverSpeedLimit { .. } => None,
    }
}

fn entry(
    grid: &VdGrid,
    det: &DetectorSeries,
    t: usize,
    channel: Channel,
    action: Action,
) -> ImputationEntry {
    ImputationEntry {
        detector: det.id.clone(),
        timestamp: grid.timestamp(t),
        channel,
        action,
    }
}

/// Nearest donor with complete original data at `t` and at least one
/// complete (speed, flow) pair in its recent history.
fn match_flow(grid: &VdGrid, donors: &[usize], t: usize, speed_now: f64) -> Option<(usize, f64)> {
    for &d in donors {
        let det = &grid.detectors[d];
        let Some(flow) = &det.flow else { continue };
        if det.speed[t].is_none() || flow[t].is_none() {
            continue;
        }
        let mut best: Option<(f64, f64)> = None;
        for s in t.saturating_sub(FLOW_MATCH_WINDOW)..t {
            if let (Some(sp), Some(fl)) = (det.speed[s], flow[s]) {
                let gap = (sp - speed_now).abs();
                // ascending scan, so `<=` lets the most recent tie win
                if best.is_none_or(|(g, _)| gap <= g) {
                    best = Some((gap, fl));
                }
            }
        }
        if let Some((_, v)) = best {
            return Some((d, v));
        }
    }
    None
}
