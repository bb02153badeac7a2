//! Symbol synchronization schemes.
//!
//! Three receivers for the start of each symbol interval, ordered by
//! decreasing complexity and accuracy:
//!
//! - **ML**: per-symbol argmax of the Poisson log-likelihood of the type-B
//!   counts over the admissible start set, anchored at the previous estimate.
//! - **PO**: estimates the start as the time of the largest type-B count in
//!   the window where the pulse peak can occur, minus the known peak delay.
//! - **TT**: opens a detection zone when the type-B count crosses a threshold
//!   and closes it on the down-crossing, but never before a minimum window
//!   has elapsed. TT does not estimate interval starts at all, only zones.
//!
//! All schemes operate on grid indices; estimates are reported as grid times.
//! The first interval's start is treated as known (`t = 0`, matching the
//! timeline anchor) and estimation begins with the second symbol, since the
//! recursion needs a previous start and cold-start acquisition is out of
//! scope.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::channel::ChannelModel;
use crate::observe::{gated_pulse, ObservationTrace};
use crate::timeline::IntervalSpec;
use crate::{Error, Result};

/// Which synchronization scheme produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Ml,
    Po,
    Tt,
    /// Genie baseline: the true starts are handed to the detector.
    Perfect,
}

impl std::fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SchemeKind::Ml => "ml",
            SchemeKind::Po => "po",
            SchemeKind::Tt => "tt",
            SchemeKind::Perfect => "perfect",
        };
        f.write_str(s)
    }
}

/// ML synchronizer configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlConfig {
    /// Observation window `T_ow` in seconds; the metric for hypothesis `t`
    /// uses samples in `[t, t + T_ow]`. Must not exceed `t_min`, otherwise
    /// the metric at the correct start could be influenced by the next
    /// interval.
    pub observation_window: f64,
    /// Anchor each search window at the true previous start instead of the
    /// scheme's own estimate (isolates per-symbol accuracy).
    pub genie_previous: bool,
}

impl MlConfig {
    pub fn validate(&self, spec: &IntervalSpec) -> Result<()> {
        if !(self.observation_window > 0.0) {
            return Err(Error::InvalidSyncConfig(format!(
                "observation window must be positive, got {}",
                self.observation_window
            )));
        }
        if self.observation_window > spec.t_min * (1.0 + 1e-9) {
            return Err(Error::InvalidSyncConfig(format!(
                "observation window {} exceeds t_min {}",
                self.observation_window, spec.t_min
            )));
        }
        if !spec.supports_ml() {
            return Err(Error::InvalidSyncConfig(format!(
                "ML search needs t_max <= 2 t_min, got [{}, {}]",
                spec.t_min, spec.t_max
            )));
        }
        Ok(())
    }
}

/// Threshold-trigger synchronizer configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TtConfig {
    /// Trigger threshold on the type-B count.
    pub threshold: f64,
    /// Minimum detection-zone length `T_dw` in seconds; must not exceed
    /// `t_min` or the next interval could be missed.
    pub detection_window: f64,
}

impl TtConfig {
    pub fn validate(&self, spec: &IntervalSpec) -> Result<()> {
        if !(self.threshold > 0.0) {
            return Err(Error::InvalidSyncConfig(format!(
                "trigger threshold must be positive, got {}",
                self.threshold
            )));
        }
        if !(self.detection_window > 0.0) || self.detection_window > spec.t_min * (1.0 + 1e-9) {
            return Err(Error::InvalidSyncConfig(format!(
                "detection window {} must lie in (0, t_min = {}]",
                self.detection_window, spec.t_min
            )));
        }
        Ok(())
    }
}

/// Output of a synchronizer.
#[derive(Debug, Clone, PartialEq)]
pub enum SyncResult {
    /// Estimated interval starts (ML, PO, perfect), strictly increasing.
    Starts { scheme: SchemeKind, starts: Vec<f64> },
    /// TT detection zones as inclusive sample-index pairs, disjoint and
    /// ordered; the count may differ from the number of symbols.
    Zones { zones: Vec<(usize, usize)> },
}

impl SyncResult {
    /// Perfect-synchronization baseline: the true starts.
    pub fn perfect(starts: &[f64]) -> SyncResult {
        SyncResult::Starts {
            scheme: SchemeKind::Perfect,
            starts: starts.to_vec(),
        }
    }

    pub fn scheme(&self) -> SchemeKind {
        match self {
            SyncResult::Starts { scheme, .. } => *scheme,
            SyncResult::Zones { .. } => SchemeKind::Tt,
        }
    }

    pub fn starts(&self) -> Option<&[f64]> {
        match self {
            SyncResult::Starts { starts, .. } => Some(starts),
            SyncResult::Zones { .. } => None,
        }
    }

    pub fn zones(&self) -> Option<&[(usize, usize)]> {
        match self {
            SyncResult::Zones { zones } => Some(zones),
            SyncResult::Starts { .. } => None,
        }
    }
}

/// Poisson log-likelihood of the type-B counts in `[t, t + T_ow]` under the
/// hypothesis that symbol `k` starts at grid index `hypothesis`, given the
/// starts of all previous intervals.
///
/// The expected count at each sample is the noise floor plus the gated pulse
/// of every previous start (in time order) plus the hypothesized release.
/// Each sample contributes `r ln(rbar) - rbar - ln(r!)`; a sample with
/// `rbar = 0` contributes nothing if `r = 0` and makes the hypothesis
/// impossible (`-inf`) otherwise.
pub fn ml_log_likelihood(
    trace: &ObservationTrace,
    hypothesis: usize,
    prev_starts: &[f64],
    model_b: &ChannelModel,
    observation_window: f64,
) -> f64 {
    let grid = &trace.grid;
    let window = window_samples(observation_window, grid.dt());
    assert!(
        hypothesis + window < grid.len(),
        "observation window [{}..{}] outside trace of length {}",
        hypothesis,
        hypothesis + window,
        grid.len()
    );
    let t_hyp = grid.time_at(hypothesis);
    let support = model_b
        .pulse()
        .support_end(crate::observe::ISI_EPS_REL)
        .expect("validated model");
    let window_start_t = t_hyp;
    let window_end_t = grid.time_at(hypothesis + window);
    // Emissions whose pulse is exactly zero (gated or not yet released)
    // across the whole window contribute nothing and are skipped.
    let first_relevant = prev_starts.partition_point(|&s| s < window_start_t - support);
    let last_relevant = prev_starts.partition_point(|&s| s <= window_end_t);
    let relevant = &prev_starts[first_relevant..last_relevant];

    let mut total = 0.0;
    for n in hypothesis..=hypothesis + window {
        let t_n = grid.time_at(n);
        let mut rbar = model_b.noise_floor();
        for &s in relevant {
            rbar += gated_pulse(model_b, t_n - s);
        }
        rbar += gated_pulse(model_b, t_n - t_hyp);
        let r = trace.r_b[n] as f64;
        if rbar == 0.0 {
            if r > 0.0 {
                return f64::NEG_INFINITY;
            }
            // Poisson(0) puts all mass on zero; the term is ln(1) = 0.
            continue;
        }
        total += r * rbar.ln() - rbar - ln_gamma(r + 1.0);
    }
    total
}

fn window_samples(window: f64, dt: f64) -> usize {
    (window / dt + 0.5).floor() as usize
}

/// ML symbol synchronization.
///
/// For each symbol after the first, the candidate set covers
/// `[anchor + t_min, anchor + t_max]` on the grid, the metric is evaluated at
/// every candidate and ties break toward the earliest index. The anchor (and
/// the previous starts used in the metric) are the scheme's own estimates,
/// or the true starts in genie mode.
pub fn ml_synchronize(
    trace: &ObservationTrace,
    spec: &IntervalSpec,
    model_b: &ChannelModel,
    cfg: &MlConfig,
    true_starts: Option<&[f64]>,
) -> Result<SyncResult> {
    cfg.validate(spec)?;
    let k_total = spec.symbols_per_block;
    if cfg.genie_previous {
        let n = true_starts.map_or(0, <[f64]>::len);
        if n < k_total {
            return Err(Error::InvalidSyncConfig(format!(
                "genie mode needs {k_total} true starts, got {n}"
            )));
        }
    }
    let grid = &trace.grid;
    let window = window_samples(cfg.observation_window, grid.dt());
    let mut estimates = vec![0.0f64];
    for k in 1..k_total {
        let history: &[f64] = if cfg.genie_previous {
            &true_starts.unwrap()[..k]
        } else {
            &estimates
        };
        let anchor = history[k - 1];
        let lo = grid.sample_at_or_after(anchor + spec.t_min);
        let hi = grid
            .sample_at_or_before(anchor + spec.t_max)
            .expect("anchor + t_max is nonnegative");
        if hi + window >= grid.len() || lo > hi {
            return Err(Error::TraceTooShort(format!(
                "symbol {k}: candidates [{lo}, {hi}] + window {window} exceed {} samples",
                grid.len()
            )));
        }
        let mut best_idx = lo;
        let mut best_metric = f64::NEG_INFINITY;
        for cand in lo..=hi {
            let metric = ml_log_likelihood(trace, cand, history, model_b, cfg.observation_window);
            if metric > best_metric {
                best_metric = metric;
                best_idx = cand;
            }
        }
        if best_metric == f64::NEG_INFINITY {
            return Err(Error::DegenerateLikelihood { symbol: k });
        }
        let estimate = grid.time_at(best_idx);
        debug_assert!(
            estimate >= anchor + spec.t_min - grid.dt() && estimate <= anchor + spec.t_max + grid.dt()
        );
        estimates.push(estimate);
    }
    Ok(SyncResult::Starts {
        scheme: SchemeKind::Ml,
        starts: estimates,
    })
}

/// Peak-observation synchronization.
///
/// The peak of the type-B pulse for symbol `k` can only fall in
/// `[anchor + t_min + t_p, anchor + t_max + t_p]`; the estimate is the time
/// of the largest count in that window minus the peak delay `t_p`. Ties
/// break toward the earliest sample.
pub fn po_synchronize(
    trace: &ObservationTrace,
    spec: &IntervalSpec,
    peak_time: f64,
    genie_previous: bool,
    true_starts: Option<&[f64]>,
) -> Result<SyncResult> {
    if !(peak_time > 0.0) {
        return Err(Error::InvalidSyncConfig(format!(
            "peak time must be positive, got {peak_time}"
        )));
    }
    let k_total = spec.symbols_per_block;
    if genie_previous {
        let n = true_starts.map_or(0, <[f64]>::len);
        if n < k_total {
            return Err(Error::InvalidSyncConfig(format!(
                "genie mode needs {k_total} true starts, got {n}"
            )));
        }
    }
    let grid = &trace.grid;
    let mut estimates = vec![0.0f64];
    for k in 1..k_total {
        let anchor = if genie_previous {
            true_starts.unwrap()[k - 1]
        } else {
            estimates[k - 1]
        };
        let lo = grid.sample_at_or_after(anchor + spec.t_min + peak_time);
        let hi = grid
            .sample_at_or_before(anchor + spec.t_max + peak_time)
            .expect("window end is nonnegative");
        if hi >= grid.len() || lo > hi {
            return Err(Error::TraceTooShort(format!(
                "symbol {k}: peak window [{lo}, {hi}] exceeds {} samples",
                grid.len()
            )));
        }
        let mut best_idx = lo;
        let mut best_count = 0u32;
        let mut first = true;
        for n in lo..=hi {
            if first || trace.r_b[n] > best_count {
                best_count = trace.r_b[n];
                best_idx = n;
                first = false;
            }
        }
        estimates.push(grid.time_at(best_idx) - peak_time);
    }
    Ok(SyncResult::Starts {
        scheme: SchemeKind::Po,
        starts: estimates,
    })
}

/// Threshold-trigger synchronization.
///
/// Scans the type-B counts from the first sample: a zone opens at the first
/// sample at or above the threshold past the previous zone's end, and closes
/// at the first later sample at or below it, but never before the minimum
/// detection window has elapsed. A trailing zone that cannot reach the
/// minimum window before the trace ends is not emitted.
pub fn tt_synchronize(trace: &ObservationTrace, cfg: &TtConfig) -> Result<SyncResult> {
    if !(cfg.threshold > 0.0) {
        return Err(Error::InvalidSyncConfig(format!(
            "trigger threshold must be positive, got {}",
            cfg.threshold
        )));
    }
    let grid = &trace.grid;
    let len = grid.len();
    let min_len = {
        let w = (cfg.detection_window / grid.dt() - 1e-6).ceil() as usize;
        w.max(1)
    };
    let mut zones = Vec::new();
    let mut next = 0usize;
    while let Some(start) = (next..len).find(|&n| trace.r_b[n] as f64 >= cfg.threshold) {
        let min_end = start + min_len;
        if min_end > len - 1 {
            break;
        }
        let down = (start + 1..len).find(|&m| trace.r_b[m] as f64 <= cfg.threshold);
        let end = down.map_or(len - 1, |m| m.max(min_end));
        zones.push((start, end));
        next = end + 1;
    }
    Ok(SyncResult::Zones { zones })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ChannelModel, PulseShape, SnrDb};
    use crate::observe::{expected_counts, sample_trace, SamplingGrid};
    use crate::timeline::Timeline;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const DT: f64 = 1e-5;

    /// Pulse that underflows to exactly zero at every sampled offset, so the
    /// expected count is the bare noise floor.
    fn flat_model(noise: f64) -> ChannelModel {
        ChannelModel::with_noise(PulseShape::gamma(1.0, 1e-9).unwrap(), noise).unwrap()
    }

    fn sharp_model(noise: f64) -> ChannelModel {
        ChannelModel::with_noise(PulseShape::gamma(100.0, 5e-5).unwrap(), noise).unwrap()
    }

    fn trace_from_counts(r_b: Vec<u32>) -> ObservationTrace {
        let grid = SamplingGrid::new(DT, DT * (r_b.len() - 1) as f64).unwrap();
        assert_eq!(grid.len(), r_b.len());
        ObservationTrace {
            r_a: vec![0; r_b.len()],
            r_b,
            grid,
        }
    }

    fn rounded_trace(timeline: &Timeline, model: &ChannelModel, grid: &SamplingGrid) -> ObservationTrace {
        let expected = expected_counts(timeline, model, model, grid);
        ObservationTrace {
            r_a: expected.rbar_a.iter().map(|&v| v.round() as u32).collect(),
            r_b: expected.rbar_b.iter().map(|&v| v.round() as u32).collect(),
            grid: *grid,
        }
    }

    #[test]
    fn all_zero_counts_constant_mean_gives_minus_w_lambda() {
        let lambda = 3.5;
        let model = flat_model(lambda);
        let trace = trace_from_counts(vec![0; 100]);
        // T_ow = 20 samples -> 21 terms of -lambda each.
        let metric = ml_log_likelihood(&trace, 10, &[], &model, 20.0 * DT);
        assert_abs_diff_eq!(metric, -21.0 * lambda, epsilon = 1e-9);
    }

    #[test]
    fn single_sample_window_matches_hand_computation() {
        // r = 2, rbar = 3: 2 ln 3 - 3 - ln 2.
        let model = flat_model(3.0);
        let mut counts = vec![0u32; 50];
        counts[5] = 2;
        let trace = trace_from_counts(counts);
        let metric = ml_log_likelihood(&trace, 5, &[], &model, 0.0);
        let expected = 2.0 * 3f64.ln() - 3.0 - 2f64.ln();
        assert_abs_diff_eq!(metric, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(metric, -1.496, epsilon = 1e-3);
    }

    #[test]
    fn matching_alignment_beats_shifted_alignment() {
        // Brute-force Poisson log-likelihoods for counts [5, 2, 1] against
        // means [5, 2, 1] + z versus the shifted [1, 5, 2] + z.
        let z = 0.1;
        let counts = [5.0, 2.0, 1.0];
        let loglik = |means: &[f64]| -> f64 {
            counts
                .iter()
                .zip(means)
                .map(|(&r, &p)| {
                    let m = p + z;
                    r * m.ln() - m - ln_gamma(r + 1.0)
                })
                .sum()
        };
        let aligned = loglik(&[5.0, 2.0, 1.0]);
        let shifted = loglik(&[1.0, 5.0, 2.0]);
        assert!(aligned > shifted, "aligned {aligned} vs shifted {shifted}");
    }

    #[test]
    fn zero_mean_zero_count_contributes_nothing() {
        let model = flat_model(0.0);
        let trace = trace_from_counts(vec![0; 40]);
        let metric = ml_log_likelihood(&trace, 3, &[], &model, 10.0 * DT);
        assert_eq!(metric, 0.0);
    }

    #[test]
    fn zero_mean_positive_count_is_impossible() {
        let model = flat_model(0.0);
        let mut counts = vec![0u32; 40];
        counts[8] = 1;
        let trace = trace_from_counts(counts);
        let metric = ml_log_likelihood(&trace, 3, &[], &model, 10.0 * DT);
        assert_eq!(metric, f64::NEG_INFINITY);
    }

    #[test]
    fn noiseless_rounded_counts_recover_the_true_start() {
        let model = sharp_model(1.0);
        let spec = IntervalSpec::new(0.8e-3, 1.2e-3, 2).unwrap();
        let grid = SamplingGrid::new(DT, 3.6e-3).unwrap();
        let t_true = grid.time_at(100); // 1.0 ms, on the grid
        let tl = Timeline::from_parts(vec![0.0, t_true], vec![true, true], spec).unwrap();
        let trace = rounded_trace(&tl, &model, &grid);
        let cfg = MlConfig {
            observation_window: spec.t_min,
            genie_previous: false,
        };
        let result = ml_synchronize(&trace, &spec, &model, &cfg, None).unwrap();
        let starts = result.starts().unwrap();
        assert_eq!(starts.len(), 2);
        assert_eq!(starts[1], t_true);

        // Exhaustive scan over the same candidate set agrees.
        let lo = grid.sample_at_or_after(spec.t_min);
        let hi = grid.sample_at_or_before(spec.t_max).unwrap();
        let best = (lo..=hi)
            .map(|c| (c, ml_log_likelihood(&trace, c, &[0.0], &model, spec.t_min)))
            .fold((lo, f64::NEG_INFINITY), |acc, (c, m)| {
                if m > acc.1 {
                    (c, m)
                } else {
                    acc
                }
            });
        assert_eq!(grid.time_at(best.0), t_true);
    }

    #[test]
    fn ml_rejects_too_long_observation_window() {
        let spec = IntervalSpec::new(0.8e-3, 1.2e-3, 3).unwrap();
        let cfg = MlConfig {
            observation_window: 0.9e-3,
            genie_previous: false,
        };
        assert!(cfg.validate(&spec).is_err());
    }

    #[test]
    fn ml_rejects_wide_interval_spread() {
        // t_max > 2 t_min violates the search-set assumption.
        let spec = IntervalSpec::new(0.4e-3, 1.2e-3, 3).unwrap();
        let cfg = MlConfig {
            observation_window: 0.4e-3,
            genie_previous: false,
        };
        assert!(cfg.validate(&spec).is_err());
    }

    #[test]
    fn ml_tie_breaks_toward_earliest_candidate() {
        // A pulse that vanishes on every sample makes all hypotheses equal.
        let model = flat_model(2.0);
        let spec = IntervalSpec::new(0.5e-3, 0.9e-3, 2).unwrap();
        let trace = trace_from_counts(vec![2; 400]);
        let cfg = MlConfig {
            observation_window: spec.t_min,
            genie_previous: false,
        };
        let result = ml_synchronize(&trace, &spec, &model, &cfg, None).unwrap();
        let lo = trace.grid.sample_at_or_after(spec.t_min);
        assert_eq!(result.starts().unwrap()[1], trace.grid.time_at(lo));
    }

    #[test]
    fn ml_estimates_stay_in_search_set() {
        let model = ChannelModel::new(PulseShape::gamma(20.0, 2e-4).unwrap())
            .unwrap()
            .calibrated(SnrDb(10.0));
        let spec = IntervalSpec::new(0.8e-3, 1.2e-3, 10).unwrap();
        let grid = SamplingGrid::new(DT, 11.0 * spec.t_max).unwrap();
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let tl = Timeline::sample(spec, &mut rng);
            let expected = expected_counts(&tl, &model, &model, &grid);
            let trace = sample_trace(&expected, &mut rng);
            let cfg = MlConfig {
                observation_window: spec.t_min,
                genie_previous: false,
            };
            let result = ml_synchronize(&trace, &spec, &model, &cfg, None).unwrap();
            let starts = result.starts().unwrap();
            for w in starts.windows(2) {
                let inc = w[1] - w[0];
                assert!(
                    inc >= spec.t_min - DT && inc <= spec.t_max + DT,
                    "increment {inc} outside the search set"
                );
            }
        }
    }

    #[test]
    fn po_noiseless_peak_recovers_start() {
        let model = sharp_model(1.0);
        let spec = IntervalSpec::new(0.8e-3, 1.2e-3, 2).unwrap();
        let grid = SamplingGrid::new(DT, 3.6e-3).unwrap();
        let t_true = grid.time_at(100);
        let tl = Timeline::from_parts(vec![0.0, t_true], vec![true, true], spec).unwrap();
        let trace = rounded_trace(&tl, &model, &grid);
        let (t_p, _) = model.peak();
        let result = po_synchronize(&trace, &spec, t_p, false, None).unwrap();
        assert_abs_diff_eq!(result.starts().unwrap()[1], t_true, epsilon = 1e-12);
    }

    #[test]
    fn po_flat_window_ties_to_earliest() {
        let spec = IntervalSpec::new(0.8e-3, 1.2e-3, 2).unwrap();
        let trace = trace_from_counts(vec![4; 400]);
        let t_p = 2e-4;
        let result = po_synchronize(&trace, &spec, t_p, false, None).unwrap();
        let lo = trace.grid.sample_at_or_after(spec.t_min + t_p);
        assert_abs_diff_eq!(
            result.starts().unwrap()[1],
            trace.grid.time_at(lo) - t_p,
            epsilon = 1e-12
        );
    }

    #[test]
    fn po_estimates_stay_in_window() {
        let model = ChannelModel::new(PulseShape::gamma(20.0, 2e-4).unwrap())
            .unwrap()
            .calibrated(SnrDb(10.0));
        let spec = IntervalSpec::new(0.8e-3, 1.2e-3, 10).unwrap();
        let grid = SamplingGrid::new(DT, 11.0 * spec.t_max + 5e-4).unwrap();
        let (t_p, _) = model.peak();
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let tl = Timeline::sample(spec, &mut rng);
            let expected = expected_counts(&tl, &model, &model, &grid);
            let trace = sample_trace(&expected, &mut rng);
            let result = po_synchronize(&trace, &spec, t_p, false, None).unwrap();
            for w in result.starts().unwrap().windows(2) {
                let inc = w[1] - w[0];
                assert!(inc >= spec.t_min - DT && inc <= spec.t_max + DT);
            }
        }
    }

    #[test]
    fn tt_never_fires_below_threshold() {
        let trace = trace_from_counts(vec![3; 200]);
        let cfg = TtConfig {
            threshold: 10.0,
            detection_window: 2.0 * DT,
        };
        let result = tt_synchronize(&trace, &cfg).unwrap();
        assert!(result.zones().unwrap().is_empty());
    }

    #[test]
    fn tt_four_sample_toy() {
        // counts [0, 12, 12, 0], threshold 10, T_dw = 2 samples:
        // zone opens at sample 1, closes at sample 3.
        let trace = trace_from_counts(vec![0, 12, 12, 0]);
        let cfg = TtConfig {
            threshold: 10.0,
            detection_window: 2.0 * DT,
        };
        let result = tt_synchronize(&trace, &cfg).unwrap();
        assert_eq!(result.zones().unwrap(), &[(1, 3)]);
    }

    #[test]
    fn tt_zone_invariants_on_random_traces() {
        let model = ChannelModel::new(PulseShape::gamma(20.0, 2e-4).unwrap())
            .unwrap()
            .calibrated(SnrDb(10.0));
        let spec = IntervalSpec::new(0.8e-3, 1.2e-3, 10).unwrap();
        let grid = SamplingGrid::new(DT, 11.0 * spec.t_max).unwrap();
        let cfg = TtConfig {
            threshold: 13.0,
            detection_window: 0.8e-3,
        };
        let min_len = (cfg.detection_window / DT).round() as usize;
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let tl = Timeline::sample(spec, &mut rng);
            let expected = expected_counts(&tl, &model, &model, &grid);
            let trace = sample_trace(&expected, &mut rng);
            let result = tt_synchronize(&trace, &cfg).unwrap();
            let zones = result.zones().unwrap();
            for w in zones.windows(2) {
                assert!(w[0].1 < w[1].0, "zones overlap: {w:?}");
            }
            for &(s, e) in zones {
                assert!(e - s >= min_len, "zone ({s}, {e}) shorter than T_dw");
                assert!(trace.r_b[s] as f64 >= cfg.threshold);
            }
        }
    }

    #[test]
    fn tt_five_symbol_scenario_yields_one_zone_per_interval() {
        // Five jittered symbols, threshold 10, T_dw = 0.8 ms: in the large
        // majority of noise realizations the scheme finds one zone per
        // interval, each overlapping its true interval.
        let model = ChannelModel::new(PulseShape::gamma(20.0, 1.5e-4).unwrap())
            .unwrap()
            .calibrated(SnrDb(10.0));
        let ms = 1e-3;
        let spec = IntervalSpec::new(0.8 * ms, 1.2 * ms, 5).unwrap();
        let tl = Timeline::from_parts(
            vec![0.0, 1.2 * ms, 2.0 * ms, 3.0 * ms, 4.2 * ms],
            vec![true, true, false, false, true],
            spec,
        )
        .unwrap();
        let grid = SamplingGrid::new(DT, tl.end_bound()).unwrap();
        let expected = expected_counts(&tl, &model, &model, &grid);
        let cfg = TtConfig {
            threshold: 10.0,
            detection_window: 0.8 * ms,
        };
        let mut clean = 0;
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let trace = sample_trace(&expected, &mut rng);
            let result = tt_synchronize(&trace, &cfg).unwrap();
            let zones = result.zones().unwrap();
            if zones.len() != 5 {
                continue;
            }
            clean += 1;
            for (k, &(s, e)) in zones.iter().enumerate() {
                let interval_start = tl.starts()[k];
                let interval_end = tl
                    .starts()
                    .get(k + 1)
                    .copied()
                    .unwrap_or(interval_start + spec.t_max);
                let zs = grid.time_at(s);
                let ze = grid.time_at(e);
                assert!(
                    zs < interval_end && ze > interval_start,
                    "zone {k} [{zs}, {ze}] misses interval [{interval_start}, {interval_end}]"
                );
            }
        }
        assert!(clean >= 14, "only {clean}/20 realizations gave 5 zones");
    }
}
