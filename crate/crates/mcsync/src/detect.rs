//! Threshold detectors over per-symbol detection intervals.
//!
//! A detection interval selects the type-A samples used to decide one
//! symbol. The mean detector compares the average count against the
//! threshold, the peak detector the maximum count; both decide `1` on ties.
//! Since the counts are integers, the peak detector's decision depends only
//! on the threshold's ceiling.

use serde::{Deserialize, Serialize};

use crate::observe::{ObservationTrace, SamplingGrid};
use crate::sync::SyncResult;
use crate::timeline::IntervalSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    Mean,
    Peak,
}

impl std::fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DetectorKind::Mean => "mean",
            DetectorKind::Peak => "peak",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub kind: DetectorKind,
    /// Detection threshold on the type-A counts.
    pub threshold: f64,
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0) {
            return Err(Error::InvalidDetector(format!(
                "detection threshold must be positive, got {}",
                self.threshold
            )));
        }
        Ok(())
    }
}

/// Half-open range of sample indices `[start, end_excl)` used for one
/// symbol's detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleRange {
    pub start: usize,
    pub end_excl: usize,
}

impl SampleRange {
    pub fn len(&self) -> usize {
        self.end_excl.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end_excl <= self.start
    }
}

/// Map a synchronizer's output to per-symbol detection intervals.
///
/// For start-estimating schemes (ML, PO, perfect) symbol `k`'s interval runs
/// from its estimated start to the next symbol's estimated start, closed at
/// the start and open at the end; the last symbol, having no successor, gets
/// the mean interval length. TT detection zones pass through as-is with
/// closed ends, one interval per zone (which may not be one per symbol —
/// pairing zones with symbols is the metrics layer's job).
pub fn intervals_from_sync(
    result: &SyncResult,
    spec: &IntervalSpec,
    grid: &SamplingGrid,
) -> Vec<SampleRange> {
    match result {
        SyncResult::Starts { starts, .. } => {
            let k_total = starts.len();
            (0..k_total)
                .map(|k| {
                    let begin = starts[k];
                    let end = if k + 1 < k_total {
                        starts[k + 1]
                    } else {
                        starts[k] + spec.mean_symbol()
                    };
                    SampleRange {
                        start: grid.sample_at_or_after(begin),
                        end_excl: grid.sample_at_or_after(end).min(grid.len()),
                    }
                })
                .collect()
        }
        SyncResult::Zones { zones } => zones
            .iter()
            .map(|&(s, e)| SampleRange {
                start: s,
                end_excl: (e + 1).min(grid.len()),
            })
            .collect(),
    }
}

/// Mean detector: `1` iff the average type-A count over the interval is at
/// least the threshold.
pub fn detect_mean(trace: &ObservationTrace, interval: SampleRange, threshold: f64) -> Result<bool> {
    let counts = slice_counts(trace, interval)?;
    let mean = counts.iter().map(|&c| c as f64).sum::<f64>() / counts.len() as f64;
    Ok(mean >= threshold)
}

/// Peak detector: `1` iff the maximum type-A count over the interval is at
/// least the threshold.
pub fn detect_peak(trace: &ObservationTrace, interval: SampleRange, threshold: f64) -> Result<bool> {
    let counts = slice_counts(trace, interval)?;
    let max = counts.iter().copied().max().expect("nonempty");
    Ok(max as f64 >= threshold)
}

/// Apply the configured detector to one interval.
pub fn detect(
    trace: &ObservationTrace,
    interval: SampleRange,
    cfg: &DetectorConfig,
) -> Result<bool> {
    match cfg.kind {
        DetectorKind::Mean => detect_mean(trace, interval, cfg.threshold),
        DetectorKind::Peak => detect_peak(trace, interval, cfg.threshold),
    }
}

fn slice_counts(trace: &ObservationTrace, interval: SampleRange) -> Result<&[u32]> {
    if interval.is_empty() || interval.end_excl > trace.r_a.len() {
        return Err(Error::EmptyDetectionInterval {
            symbol: interval.start,
        });
    }
    Ok(&trace.r_a[interval.start..interval.end_excl])
}
