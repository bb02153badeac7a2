//! Seeded Monte Carlo execution.
//!
//! Blocks are independent work units: block `i` derives its RNG streams from
//! `base_seed ^ i`, so any block can be regenerated in isolation and sweep
//! cells sharing a block index see identical noise (common random numbers).
//! State resets at every block boundary; nothing carries over.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::ChannelModel;
use crate::detect::{intervals_from_sync, DetectorConfig, DetectorKind, SampleRange};
use crate::harness::config::{ExperimentConfig, SweepConfig};
use crate::metrics::{accumulate_ber, normalized_error, pair_tt_zones, BerStats, SyncErrorStats};
use crate::observe::{expected_counts, sample_trace, ExpectedTrace, ObservationTrace, SamplingGrid};
use crate::sync::{ml_synchronize, po_synchronize, tt_synchronize, SchemeKind, SyncResult, TtConfig};
use crate::timeline::{IntervalSpec, Timeline};
use crate::{Error, Result};

// RNG stream ids per purpose, so the draws never interleave.
const STREAM_TIMING: u64 = 1;
const STREAM_SYMBOLS: u64 = 2;
const STREAM_TRACE: u64 = 3;

/// A validated configuration with its derived models and grid.
#[derive(Debug, Clone)]
pub struct Experiment {
    cfg: ExperimentConfig,
    model_a: ChannelModel,
    model_b: ChannelModel,
    spec: IntervalSpec,
    grid: SamplingGrid,
}

/// Everything generated for one block.
#[derive(Debug, Clone)]
pub struct BlockData {
    pub timeline: Timeline,
    pub expected: ExpectedTrace,
    pub trace: ObservationTrace,
}

/// Per-symbol scoring of one synchronizer output on one block.
#[derive(Debug, Clone)]
pub struct ScoredBlock {
    pub sync_errors: SyncErrorStats,
    /// Per symbol: `(mean, max)` of the type-A counts over its detection
    /// interval; `None` when no detection zone was assigned (the decision
    /// then defaults to 0).
    pub symbol_stats: Vec<Option<(f64, u32)>>,
    pub truth: Vec<bool>,
}

impl ScoredBlock {
    /// Decisions under one detector threshold; unassigned symbols decide 0.
    pub fn decisions(&self, cfg: &DetectorConfig) -> Vec<bool> {
        self.symbol_stats
            .iter()
            .map(|stat| match stat {
                Some((mean, max)) => match cfg.kind {
                    DetectorKind::Mean => *mean >= cfg.threshold,
                    DetectorKind::Peak => *max as f64 >= cfg.threshold,
                },
                None => false,
            })
            .collect()
    }

    pub fn ber(&self, cfg: &DetectorConfig) -> BerStats {
        accumulate_ber(&self.decisions(cfg), &self.truth)
    }
}

/// Result of a single-cell simulation run.
#[derive(Debug, Clone)]
pub struct SimOutput {
    pub sync_errors: SyncErrorStats,
    pub ber: BerStats,
    pub blocks: u64,
}

/// One cell of a threshold sweep.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub scheme: SchemeKind,
    pub detector: DetectorKind,
    pub xi_a: f64,
    /// Trigger threshold; only present for TT cells.
    pub xi_b: Option<f64>,
    pub ber: BerStats,
}

impl Experiment {
    pub fn new(cfg: ExperimentConfig) -> Result<Experiment> {
        cfg.validate()?;
        let (model_a, model_b) = cfg.models()?;
        let spec = cfg.interval_spec()?;
        let dt = cfg.grid.dt_us * 1e-6;
        // Estimated starts can run up to (K-1) t_max even when the true
        // timeline is shorter, and every scheme needs at most one extra
        // t_max plus the pulse peak delay past its last anchor.
        let horizon = (spec.symbols_per_block as f64 + 1.0) * spec.t_max
            + model_b.peak_time()
            + cfg.grid.extra_horizon_ms * 1e-3;
        let grid = SamplingGrid::new(dt, horizon)?;
        Ok(Experiment {
            cfg,
            model_a,
            model_b,
            spec,
            grid,
        })
    }

    pub fn cfg(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn spec(&self) -> &IntervalSpec {
        &self.spec
    }

    pub fn grid(&self) -> &SamplingGrid {
        &self.grid
    }

    pub fn model_a(&self) -> &ChannelModel {
        &self.model_a
    }

    pub fn model_b(&self) -> &ChannelModel {
        &self.model_b
    }

    fn rng(&self, block: u64, stream: u64, seed_override: Option<u64>) -> ChaCha8Rng {
        let base = seed_override.unwrap_or(self.cfg.run.base_seed);
        let mut rng = ChaCha8Rng::seed_from_u64(base ^ block);
        rng.set_stream(stream);
        rng
    }

    /// Generate one block: timeline, expected counts and Poisson trace.
    pub fn generate_block(&self, block: u64) -> BlockData {
        let mut timing = self.rng(block, STREAM_TIMING, self.cfg.timeline.timing_seed);
        let mut symbols = self.rng(block, STREAM_SYMBOLS, self.cfg.timeline.symbol_seed);
        let timeline = Timeline::sample_split(self.spec, &mut timing, &mut symbols);
        self.observe_timeline(&timeline, block)
    }

    /// Observe a caller-supplied timeline with the block's noise streams
    /// (used by the fixed-scenario figure recipes).
    pub fn observe_timeline(&self, timeline: &Timeline, block: u64) -> BlockData {
        let expected = expected_counts(timeline, &self.model_a, &self.model_b, &self.grid);
        let mut trace_rng = self.rng(block, STREAM_TRACE, None);
        let trace = sample_trace(&expected, &mut trace_rng);
        BlockData {
            timeline: timeline.clone(),
            expected,
            trace,
        }
    }

    /// Run the given scheme on one block's trace.
    pub fn synchronize(
        &self,
        scheme: SchemeKind,
        trace: &ObservationTrace,
        timeline: &Timeline,
    ) -> Result<SyncResult> {
        match scheme {
            SchemeKind::Perfect => Ok(SyncResult::perfect(timeline.starts())),
            SchemeKind::Ml => ml_synchronize(
                trace,
                &self.spec,
                &self.model_b,
                &self.cfg.ml_config(),
                Some(timeline.starts()),
            ),
            SchemeKind::Po => po_synchronize(
                trace,
                &self.spec,
                self.model_b.peak_time(),
                false,
                None,
            ),
            SchemeKind::Tt => tt_synchronize(trace, &self.cfg.tt_config()),
        }
    }

    /// TT with an explicit trigger threshold (for sweeps).
    pub fn synchronize_tt_with(&self, trace: &ObservationTrace, xi_b: f64) -> Result<SyncResult> {
        let cfg = TtConfig {
            threshold: xi_b,
            ..self.cfg.tt_config()
        };
        tt_synchronize(trace, &cfg)
    }

    /// Score one synchronizer output: normalized errors plus per-symbol
    /// detection statistics.
    ///
    /// For start-estimating schemes the first symbol is anchored by
    /// construction and not scored. TT zones are paired with true intervals
    /// by nearest start; unpaired intervals and zones enter the stats as
    /// deletions and insertions.
    pub fn score_block(
        &self,
        sync: &SyncResult,
        timeline: &Timeline,
        trace: &ObservationTrace,
    ) -> Result<ScoredBlock> {
        let bin_width = self.cfg.run.sync_error_bin_width;
        let mut sync_errors = SyncErrorStats::new(bin_width);
        let ranges = intervals_from_sync(sync, &self.spec, &self.grid);
        let truth = timeline.symbols().to_vec();
        let symbol_stats = match sync {
            SyncResult::Starts { scheme, starts } => {
                if *scheme != SchemeKind::Perfect {
                    for k in 1..starts.len() {
                        sync_errors.record(normalized_error(
                            starts[k],
                            timeline.starts()[k],
                            &self.spec,
                        ));
                    }
                }
                ranges
                    .iter()
                    .enumerate()
                    .map(|(k, range)| interval_stats(trace, *range, k).map(Some))
                    .collect::<Result<Vec<_>>>()?
            }
            SyncResult::Zones { zones } => {
                let pairing = pair_tt_zones(zones, timeline, &self.grid);
                for (k, assigned) in pairing.zone_for_symbol.iter().enumerate() {
                    if let Some(j) = assigned {
                        let zone_start = self.grid.time_at(zones[*j].0);
                        sync_errors.record(normalized_error(
                            zone_start,
                            timeline.starts()[k],
                            &self.spec,
                        ));
                    }
                }
                sync_errors
                    .record_unpaired(pairing.deletions as u64, pairing.insertions as u64);
                pairing
                    .zone_for_symbol
                    .iter()
                    .enumerate()
                    .map(|(k, assigned)| {
                        assigned
                            .map(|j| interval_stats(trace, ranges[j], k))
                            .transpose()
                    })
                    .collect::<Result<Vec<_>>>()?
            }
        };
        Ok(ScoredBlock {
            sync_errors,
            symbol_stats,
            truth,
        })
    }

    /// One full pipeline pass for the configured scheme and detector.
    pub fn run_block(&self, block: u64) -> Result<(SyncErrorStats, BerStats)> {
        let data = self.generate_block(block);
        let scored = self
            .synchronize(self.cfg.scheme.kind, &data.trace, &data.timeline)
            .and_then(|sync| self.score_block(&sync, &data.timeline, &data.trace))
            .map_err(|e| e.in_block(block as usize))?;
        let ber = scored.ber(&self.cfg.detector_config());
        Ok((scored.sync_errors, ber))
    }

    /// Monte Carlo over all configured blocks for the configured cell.
    pub fn run_simulation(&self) -> Result<SimOutput> {
        let blocks = self.cfg.run.blocks_for(self.cfg.scheme.kind);
        let partials: Vec<(SyncErrorStats, BerStats)> = (0..blocks)
            .into_par_iter()
            .map(|b| self.run_block(b))
            .collect::<Result<_>>()?;
        let mut sync_errors = SyncErrorStats::new(self.cfg.run.sync_error_bin_width);
        let mut ber = BerStats::default();
        for (errs, b) in &partials {
            sync_errors.merge(errs);
            ber.merge(b);
        }
        Ok(SimOutput {
            sync_errors,
            ber,
            blocks,
        })
    }

    /// Synchronization-error statistics for one scheme over many blocks,
    /// ignoring detection entirely.
    pub fn run_sync_errors(&self, scheme: SchemeKind, blocks: u64) -> Result<SyncErrorStats> {
        let partials: Vec<SyncErrorStats> = (0..blocks)
            .into_par_iter()
            .map(|block| {
                let data = self.generate_block(block);
                let sync = self
                    .synchronize(scheme, &data.trace, &data.timeline)
                    .map_err(|e| e.in_block(block as usize))?;
                let scored = self
                    .score_block(&sync, &data.timeline, &data.trace)
                    .map_err(|e| e.in_block(block as usize))?;
                Ok(scored.sync_errors)
            })
            .collect::<Result<_>>()?;
        let mut out = SyncErrorStats::new(self.cfg.run.sync_error_bin_width);
        for p in &partials {
            out.merge(p);
        }
        Ok(out)
    }

    /// Evaluate every sweep cell with common random numbers: cells sharing a
    /// block index see the same timeline and the same Poisson noise, so
    /// threshold comparisons are variance-reduced.
    pub fn run_sweep(&self, sweep: &SweepConfig) -> Result<Vec<SweepCell>> {
        let cells = cell_layout(sweep);
        let blocks = self.cfg.run.blocks;
        let ml_blocks = self.cfg.run.blocks_for(SchemeKind::Ml);
        let partials: Vec<Vec<BerStats>> = (0..blocks)
            .into_par_iter()
            .map(|block| self.sweep_block(sweep, &cells, block, ml_blocks))
            .collect::<Result<_>>()?;
        let mut merged = vec![BerStats::default(); cells.len()];
        for partial in &partials {
            for (slot, cell) in merged.iter_mut().zip(partial) {
                slot.merge(cell);
            }
        }
        Ok(cells
            .into_iter()
            .zip(merged)
            .map(|(key, ber)| SweepCell {
                scheme: key.scheme,
                detector: key.detector,
                xi_a: key.xi_a,
                xi_b: key.xi_b,
                ber,
            })
            .collect())
    }

    fn sweep_block(
        &self,
        sweep: &SweepConfig,
        cells: &[CellKey],
        block: u64,
        ml_blocks: u64,
    ) -> Result<Vec<BerStats>> {
        let data = self.generate_block(block);
        let mut out = vec![BerStats::default(); cells.len()];
        let mut cell_idx = 0usize;
        for &scheme in &sweep.schemes {
            let variants: Vec<Option<f64>> = if scheme == SchemeKind::Tt {
                sweep.xi_b.iter().copied().map(Some).collect()
            } else {
                vec![None]
            };
            for xi_b in variants {
                let skip = scheme == SchemeKind::Ml && block >= ml_blocks;
                let scored = if skip {
                    None
                } else {
                    let sync = match xi_b {
                        Some(threshold) => self.synchronize_tt_with(&data.trace, threshold),
                        None => self.synchronize(scheme, &data.trace, &data.timeline),
                    }
                    .map_err(|e| e.in_block(block as usize))?;
                    Some(
                        self.score_block(&sync, &data.timeline, &data.trace)
                            .map_err(|e| e.in_block(block as usize))?,
                    )
                };
                for &detector in &sweep.detectors {
                    for &xi_a in &sweep.xi_a {
                        debug_assert_eq!(
                            cells[cell_idx],
                            CellKey {
                                scheme,
                                detector,
                                xi_a,
                                xi_b
                            }
                        );
                        if let Some(scored) = &scored {
                            let det = DetectorConfig {
                                kind: detector,
                                threshold: xi_a,
                            };
                            out[cell_idx] = scored.ber(&det);
                        }
                        cell_idx += 1;
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct CellKey {
    scheme: SchemeKind,
    detector: DetectorKind,
    xi_a: f64,
    xi_b: Option<f64>,
}

fn cell_layout(sweep: &SweepConfig) -> Vec<CellKey> {
    let mut cells = Vec::new();
    for &scheme in &sweep.schemes {
        let variants: Vec<Option<f64>> = if scheme == SchemeKind::Tt {
            sweep.xi_b.iter().copied().map(Some).collect()
        } else {
            vec![None]
        };
        for xi_b in variants {
            for &detector in &sweep.detectors {
                for &xi_a in &sweep.xi_a {
                    cells.push(CellKey {
                        scheme,
                        detector,
                        xi_a,
                        xi_b,
                    });
                }
            }
        }
    }
    cells
}

fn interval_stats(trace: &ObservationTrace, range: SampleRange, symbol: usize) -> Result<(f64, u32)> {
    if range.is_empty() || range.end_excl > trace.r_a.len() {
        return Err(Error::EmptyDetectionInterval { symbol });
    }
    let counts = &trace.r_a[range.start..range.end_excl];
    let mean = counts.iter().map(|&c| c as f64).sum::<f64>() / counts.len() as f64;
    let max = counts.iter().copied().max().expect("nonempty");
    Ok((mean, max))
}
