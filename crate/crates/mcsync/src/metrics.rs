//! Synchronization-error and BER accounting.
//!
//! Synchronization quality is measured by the normalized error
//! `(estimated - true) / mean_symbol`. Errors beyond one mean symbol in
//! either direction correspond to deletion (`> 1`) and insertion (`< -1`)
//! errors. TT produces zones rather than per-symbol starts, so zones are
//! first paired with true intervals; unpaired intervals count as deletions,
//! unpaired zones as insertions.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::observe::SamplingGrid;
use crate::timeline::{IntervalSpec, Timeline};

/// Normalized synchronization error `(estimated - true) / mean_symbol`.
pub fn normalized_error(estimated: f64, true_start: f64, spec: &IntervalSpec) -> f64 {
    (estimated - true_start) / spec.mean_symbol()
}

/// Classification of one normalized error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Ok,
    /// A missed interval: the estimate slid past the true start by more than
    /// one mean symbol.
    Deletion,
    /// A spurious interval: the estimate precedes the true start by more
    /// than one mean symbol.
    Insertion,
}

/// `e > 1` is a deletion, `e < -1` an insertion; both inequalities strict.
pub fn classify_error(e: f64) -> ErrorClass {
    if e > 1.0 {
        ErrorClass::Deletion
    } else if e < -1.0 {
        ErrorClass::Insertion
    } else {
        ErrorClass::Ok
    }
}

/// Assignment of TT zones to true intervals.
///
/// Intervals are processed in order; each takes the still-unassigned zone
/// whose start is nearest to the interval's true start. Whatever remains
/// unassigned on either side is a deletion (interval) or insertion (zone).
#[derive(Debug, Clone, PartialEq)]
pub struct TtPairing {
    /// For each symbol, the index of its assigned zone, if any.
    pub zone_for_symbol: Vec<Option<usize>>,
    /// Zones not assigned to any symbol.
    pub insertions: usize,
    /// Symbols without a zone.
    pub deletions: usize,
}

impl TtPairing {
    pub fn assigned(&self) -> usize {
        self.zone_for_symbol.iter().flatten().count()
    }
}

pub fn pair_tt_zones(
    zones: &[(usize, usize)],
    timeline: &Timeline,
    grid: &SamplingGrid,
) -> TtPairing {
    let k_total = timeline.len();
    let mut used = vec![false; zones.len()];
    let mut zone_for_symbol = Vec::with_capacity(k_total);
    for &t_s in timeline.starts() {
        let mut best: Option<(usize, f64)> = None;
        for (j, &(zs, _)) in zones.iter().enumerate() {
            if used[j] {
                continue;
            }
            let d = (grid.time_at(zs) - t_s).abs();
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        match best {
            Some((j, _)) => {
                used[j] = true;
                zone_for_symbol.push(Some(j));
            }
            None => zone_for_symbol.push(None),
        }
    }
    let assigned = zone_for_symbol.iter().flatten().count();
    TtPairing {
        zone_for_symbol,
        insertions: zones.len() - assigned,
        deletions: k_total - assigned,
    }
}

/// Histogram with fixed-width bins centered on zero: bin `i` covers
/// `[(i - 0.5) w, (i + 0.5) w)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    bin_width: f64,
    counts: BTreeMap<i64, u64>,
    total: u64,
}

impl Histogram {
    pub fn new(bin_width: f64) -> Histogram {
        assert!(bin_width > 0.0, "bin width must be positive");
        Histogram {
            bin_width,
            counts: BTreeMap::new(),
            total: 0,
        }
    }

    pub fn add(&mut self, value: f64) {
        let bin = (value / self.bin_width + 0.5).floor() as i64;
        *self.counts.entry(bin).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    /// Center of the most populated bin; ties break toward the lowest bin.
    pub fn mode_center(&self) -> Option<f64> {
        self.counts
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(&bin, _)| bin as f64 * self.bin_width)
    }

    /// `(bin_center, density)` rows; densities integrate to one.
    pub fn densities(&self) -> Vec<(f64, f64)> {
        let norm = self.total as f64 * self.bin_width;
        self.counts
            .iter()
            .map(|(&bin, &count)| (bin as f64 * self.bin_width, count as f64 / norm))
            .collect()
    }

    pub fn merge(&mut self, other: &Histogram) {
        assert_eq!(self.bin_width, other.bin_width);
        for (&bin, &count) in &other.counts {
            *self.counts.entry(bin).or_insert(0) += count;
        }
        self.total += other.total;
    }
}

/// Accumulated synchronization-error statistics for one scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncErrorStats {
    /// All scored normalized errors.
    pub errors: Vec<f64>,
    pub histogram: Histogram,
    /// Classification deletions plus TT pairing deletions.
    pub deletions: u64,
    /// Classification insertions plus TT pairing insertions.
    pub insertions: u64,
}

impl SyncErrorStats {
    pub fn new(bin_width: f64) -> SyncErrorStats {
        SyncErrorStats {
            errors: Vec::new(),
            histogram: Histogram::new(bin_width),
            deletions: 0,
            insertions: 0,
        }
    }

    /// Record a scored symbol; classification deletions/insertions are
    /// tallied from the value itself.
    pub fn record(&mut self, e: f64) {
        self.errors.push(e);
        self.histogram.add(e);
        match classify_error(e) {
            ErrorClass::Deletion => self.deletions += 1,
            ErrorClass::Insertion => self.insertions += 1,
            ErrorClass::Ok => {}
        }
    }

    /// Record unpaired intervals/zones from TT pairing.
    pub fn record_unpaired(&mut self, deletions: u64, insertions: u64) {
        self.deletions += deletions;
        self.insertions += insertions;
    }

    pub fn merge(&mut self, other: &SyncErrorStats) {
        self.errors.extend_from_slice(&other.errors);
        self.histogram.merge(&other.histogram);
        self.deletions += other.deletions;
        self.insertions += other.insertions;
    }

    /// Fraction of accounted symbols whose error magnitude exceeds `thresh`;
    /// unpaired deletions and insertions count as exceedances. Returns
    /// `(numerator, denominator)`.
    pub fn tail_counts(&self, thresh: f64) -> (u64, u64) {
        let scored_tail = self.errors.iter().filter(|e| e.abs() > thresh).count() as u64;
        let class_del = self
            .errors
            .iter()
            .filter(|&&e| classify_error(e) == ErrorClass::Deletion)
            .count() as u64;
        let class_ins = self
            .errors
            .iter()
            .filter(|&&e| classify_error(e) == ErrorClass::Insertion)
            .count() as u64;
        let unpaired_del = self.deletions - class_del;
        let unpaired_ins = self.insertions - class_ins;
        let num = scored_tail + unpaired_del + unpaired_ins;
        let den = self.errors.len() as u64 + unpaired_del + unpaired_ins;
        (num, den)
    }
}

/// Bit-error statistics with a Wilson 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct BerStats {
    pub bit_errors: u64,
    pub bits: u64,
}

impl BerStats {
    pub fn ber(&self) -> f64 {
        if self.bits == 0 {
            0.0
        } else {
            self.bit_errors as f64 / self.bits as f64
        }
    }

    /// Wilson score interval at 95% confidence.
    pub fn wilson95(&self) -> (f64, f64) {
        if self.bits == 0 {
            return (0.0, 1.0);
        }
        let z = 1.959_963_984_540_054; // 97.5% normal quantile
        let n = self.bits as f64;
        let p = self.ber();
        let z2 = z * z;
        let denom = 1.0 + z2 / n;
        let center = (p + z2 / (2.0 * n)) / denom;
        let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        ((center - half).max(0.0), (center + half).min(1.0))
    }

    pub fn record(&mut self, error: bool) {
        self.bits += 1;
        if error {
            self.bit_errors += 1;
        }
    }

    pub fn merge(&mut self, other: &BerStats) {
        self.bit_errors += other.bit_errors;
        self.bits += other.bits;
    }
}

/// Count mismatches between aligned decision and truth vectors.
pub fn accumulate_ber(decisions: &[bool], truth: &[bool]) -> BerStats {
    assert_eq!(decisions.len(), truth.len(), "decisions must align with truth");
    let bit_errors = decisions
        .iter()
        .zip(truth)
        .filter(|(d, t)| d != t)
        .count() as u64;
    BerStats {
        bit_errors,
        bits: truth.len() as u64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observe::SamplingGrid;
    use approx::assert_abs_diff_eq;

    fn spec_08_12(k: usize) -> IntervalSpec {
        IntervalSpec::new(0.8e-3, 1.2e-3, k).unwrap()
    }

    #[test]
    fn normalized_error_examples() {
        let spec = spec_08_12(5);
        assert_eq!(normalized_error(1e-3, 1e-3, &spec), 0.0);
        // 0.1 ms over a 1 ms mean symbol.
        assert_abs_diff_eq!(normalized_error(1.1e-3, 1.0e-3, &spec), 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(
            normalized_error(1.0e-3, 2.3e-3, &spec),
            -1.3,
            epsilon = 1e-12
        );
    }

    #[test]
    fn classification_boundaries_are_strict() {
        assert_eq!(classify_error(0.4), ErrorClass::Ok);
        assert_eq!(classify_error(1.2), ErrorClass::Deletion);
        assert_eq!(classify_error(-1.2), ErrorClass::Insertion);
        assert_eq!(classify_error(1.0), ErrorClass::Ok);
        assert_eq!(classify_error(-1.0), ErrorClass::Ok);
    }

    proptest::proptest! {
        #[test]
        fn classification_is_total_and_exclusive(e in -10.0f64..10.0) {
            let class = classify_error(e);
            let expected = if e > 1.0 {
                ErrorClass::Deletion
            } else if e < -1.0 {
                ErrorClass::Insertion
            } else {
                ErrorClass::Ok
            };
            proptest::prop_assert_eq!(class, expected);
        }
    }

    fn timeline_of(starts: Vec<f64>, k: usize) -> Timeline {
        Timeline::from_parts(starts, vec![true; k], spec_08_12(k)).unwrap()
    }

    #[test]
    fn bijective_pairing_when_counts_match() {
        let grid = SamplingGrid::new(1e-5, 6e-3).unwrap();
        let tl = timeline_of(vec![0.0, 1e-3, 2e-3, 3e-3, 4e-3], 5);
        // One zone just inside each interval.
        let zones: Vec<(usize, usize)> = (0..5).map(|k| (k * 100 + 5, k * 100 + 85)).collect();
        let pairing = pair_tt_zones(&zones, &tl, &grid);
        assert_eq!(pairing.insertions, 0);
        assert_eq!(pairing.deletions, 0);
        let assigned: Vec<usize> = pairing.zone_for_symbol.iter().map(|z| z.unwrap()).collect();
        assert_eq!(assigned, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn missing_zone_counts_as_deletion() {
        let grid = SamplingGrid::new(1e-5, 6e-3).unwrap();
        let tl = timeline_of(vec![0.0, 1e-3, 2e-3, 3e-3, 4e-3], 5);
        let zones = vec![(5, 85), (105, 185), (205, 285), (305, 385)];
        let pairing = pair_tt_zones(&zones, &tl, &grid);
        assert_eq!(pairing.deletions, 1);
        assert_eq!(pairing.insertions, 0);
        assert_eq!(pairing.assigned(), 4);
    }

    #[test]
    fn extra_zone_counts_as_insertion() {
        let grid = SamplingGrid::new(1e-5, 6e-3).unwrap();
        let tl = timeline_of(vec![0.0, 1e-3, 2e-3, 3e-3, 4e-3], 5);
        let mut zones: Vec<(usize, usize)> = (0..5).map(|k| (k * 100 + 5, k * 100 + 85)).collect();
        zones.push((460, 470));
        let pairing = pair_tt_zones(&zones, &tl, &grid);
        assert_eq!(pairing.deletions, 0);
        assert_eq!(pairing.insertions, 1);
    }

    proptest::proptest! {
        #[test]
        fn pairing_accounting_identities(zone_count in 0usize..12) {
            let grid = SamplingGrid::new(1e-5, 8e-3).unwrap();
            let tl = timeline_of(vec![0.0, 1e-3, 2e-3, 3e-3, 4e-3], 5);
            let zones: Vec<(usize, usize)> =
                (0..zone_count).map(|j| (j * 60, j * 60 + 40)).collect();
            let pairing = pair_tt_zones(&zones, &tl, &grid);
            proptest::prop_assert_eq!(pairing.assigned() + pairing.insertions, zones.len());
            proptest::prop_assert_eq!(pairing.assigned() + pairing.deletions, tl.len());
        }
    }

    #[test]
    fn histogram_spike_at_zero() {
        let mut h = Histogram::new(0.05);
        for _ in 0..100 {
            h.add(0.0);
        }
        assert_eq!(h.mode_center(), Some(0.0));
        let rows = h.densities();
        assert_eq!(rows.len(), 1);
        assert_abs_diff_eq!(rows[0].1, 1.0 / 0.05, epsilon = 1e-9);
    }

    #[test]
    fn histogram_of_uniform_input_is_flat() {
        let mut h = Histogram::new(0.05);
        let n = 200_000;
        for i in 0..n {
            // Low-discrepancy stand-in for U[0, 1).
            h.add((i as f64 + 0.5) / n as f64);
        }
        let rows = h.densities();
        // Interior bins of U[0,1) have density 1.
        for &(center, density) in &rows {
            if center > 0.05 && center < 0.95 {
                assert_abs_diff_eq!(density, 1.0, epsilon = 0.02);
            }
        }
    }

    #[test]
    fn histogram_preserves_asymmetry() {
        let mut h = Histogram::new(0.05);
        for _ in 0..10 {
            h.add(0.3);
        }
        h.add(-0.3);
        let rows = h.densities();
        let at = |c: f64| {
            rows.iter()
                .find(|(center, _)| (center - c).abs() < 1e-9)
                .map(|(_, d)| *d)
                .unwrap_or(0.0)
        };
        assert!(at(0.3) > at(-0.3));
    }

    #[test]
    fn histogram_counts_sum_to_scored_symbols() {
        let mut stats = SyncErrorStats::new(0.05);
        for e in [-1.4, -0.2, 0.0, 0.3, 0.3, 2.0] {
            stats.record(e);
        }
        assert_eq!(stats.histogram.total(), 6);
        assert_eq!(stats.deletions, 1);
        assert_eq!(stats.insertions, 1);
    }

    #[test]
    fn tail_counts_include_unpaired_events() {
        let mut stats = SyncErrorStats::new(0.05);
        stats.record(0.1);
        stats.record(0.7);
        stats.record(1.5); // classification deletion
        stats.record_unpaired(2, 1);
        let (num, den) = stats.tail_counts(0.5);
        assert_eq!(num, 2 + 3); // 0.7 and 1.5, plus three unpaired events
        assert_eq!(den, 3 + 3);
    }

    #[test]
    fn ber_examples() {
        let truth = vec![true, false, true, true];
        assert_eq!(accumulate_ber(&truth, &truth).ber(), 0.0);
        let complement: Vec<bool> = truth.iter().map(|b| !b).collect();
        assert_eq!(accumulate_ber(&complement, &truth).ber(), 1.0);
        let stats = BerStats {
            bit_errors: 3,
            bits: 100,
        };
        assert_abs_diff_eq!(stats.ber(), 0.03, epsilon = 1e-12);
        let (lo, hi) = stats.wilson95();
        assert!(lo > 0.0 && lo < 0.03 && hi > 0.03 && hi < 0.1);
    }
}
