//! Interval-mean travel times from toll transit records.

use std::collections::BTreeMap;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use super::records::{epoch_ms, from_epoch_ms, TransitRecord};

/// Mean travel time of one interval, labelled by the interval's end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalAggregate {
    pub timestamp: NaiveDateTime,
    /// Mean of the admitted trips, in seconds; `None` when none was admitted.
    pub mean_secs: Option<f64>,
    /// Trips admitted.
    pub samples: usize,
    /// Trips rejected by the outlier band.
    pub rejected: usize,
}

/// End (in epoch milliseconds) of the interval `(end - width, end]` holding
/// `ms`. Intervals are aligned to the epoch.
pub fn interval_end_ms(ms: i64, interval_ms: i64) -> i64 {
    ms.div_euclid(interval_ms) * interval_ms
        + if ms.rem_euclid(interval_ms) == 0 {
            0
        } else {
            interval_ms
        }
}

/// Outlier band relative to the most recent non-empty interval mean.
///
/// The first interval with trips has no reference and admits everything.
#[derive(Debug, Clone, PartialEq)]
pub struct BandFilter {
    lower: f64,
    upper: f64,
    reference: Option<f64>,
}

impl BandFilter {
    pub fn new(lower: f64, upper: f64) -> Self {
        Self {
            lower,
            upper,
            reference: None,
        }
    }

    pub fn reference(&self) -> Option<f64> {
        self.reference
    }

    /// Filters one interval's trip durations (seconds) and returns
    /// `(mean, admitted, rejected)`. A non-empty result becomes the next
    /// reference.
    pub fn admit(&mut self, durations: &[f64]) -> (Option<f64>, usize, usize) {
        let mut kept: Vec<f64> = match self.reference {
            None => durations.to_vec(),
            Some(r) => {
                // relative slack so that band edges such as 0.6 * 1500 s count as inside
                let lo = self.lower * r * (1.0 - 1e-12);
                let hi = self.upper * r * (1.0 + 1e-12);
                durations
                    .iter()
                    .copied()
                    .filter(|&d| d >= lo && d <= hi)
                    .collect()
            }
        };
        // summing in sorted order makes the mean independent of input order
        kept.sort_by(f64::total_cmp);
        let rejected = durations.len() - kept.len();
        if kept.is_empty() {
            return (None, 0, rejected);
        }
        let mean = kept.iter().sum::<f64>() / kept.len() as f64;
        self.reference = Some(mean);
        (Some(mean), kept.len(), rejected)
    }
}

fn aggregate(
    transits: &[TransitRecord],
    interval_secs: i64,
    band: (f64, f64),
    anchor: impl Fn(&TransitRecord) -> &NaiveDateTime,
) -> Vec<IntervalAggregate> {
    let interval_ms = interval_secs * 1000;
    let mut buckets: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for t in transits {
        buckets
            .entry(interval_end_ms(epoch_ms(anchor(t)), interval_ms))
            .or_default()
            .push(t.duration_secs());
    }
    let (Some(&first), Some(&last)) = (buckets.keys().next(), buckets.keys().next_back()) else {
        return Vec::new();
    };
    let mut filter = BandFilter::new(band.0, band.1);
    let mut out = Vec::with_capacity(((last - first) / interval_ms + 1) as usize);
    let mut end = first;
    while end <= last {
        let durations = buckets.get(&end).map_or(&[][..], |v| v.as_slice());
        let (mean_secs, samples, rejected) = filter.admit(durations);
        out.push(IntervalAggregate {
            timestamp: from_epoch_ms(end),
            mean_secs,
            samples,
            rejected,
        });
        end += interval_ms;
    }
    out
}

/// Historical travel time: trips binned by arrival at the downstream point.
pub fn compute_htt(
    transits: &[TransitRecord],
    interval_secs: i64,
    band: (f64, f64),
) -> Vec<IntervalAggregate> {
    aggregate(transits, interval_secs, band, |t| &t.time_b)
}

/// Actual travel time: trips binned by departure from the upstream point.
pub fn compute_att(
    transits: &[TransitRecord],
    interval_secs: i64,
    band: (f64, f64),
) -> Vec<IntervalAggregate> {
    aggregate(transits, interval_secs, band, |t| &t.time_a)
}
