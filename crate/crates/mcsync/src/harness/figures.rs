//! Figure recipes: preset experiments that write CSV data files for the
//! concept illustrations (fig3-fig5), the synchronization-error histograms
//! (fig6a-c) and the BER threshold studies (fig7-fig9).
//!
//! Every recipe is fully seeded: the same name and seed produce
//! byte-identical CSVs. Plots are rendered from the CSVs by
//! `scripts/plot_figures.py`.

use std::fs::File;
use std::io::{BufWriter, Write as IoWrite};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::detect::DetectorKind;
use crate::harness::config::{ExperimentConfig, SweepConfig};
use crate::harness::run::{BlockData, Experiment, SweepCell};
use crate::metrics::SyncErrorStats;
use crate::sync::{ml_log_likelihood, SchemeKind};
use crate::timeline::Timeline;
use crate::{Error, Result};

pub const FIGURE_NAMES: [&str; 9] = [
    "fig3", "fig4", "fig5", "fig6a", "fig6b", "fig6c", "fig7", "fig8", "fig9",
];

/// Command-line overrides applied on top of a recipe's preset config.
#[derive(Debug, Clone, Copy, Default)]
pub struct FigureOverrides {
    pub blocks: Option<u64>,
    pub seed: Option<u64>,
}

/// Run one figure recipe, writing its CSVs plus a JSON run manifest into
/// `out_dir`. Returns the paths written.
pub fn reproduce_figure(
    name: &str,
    out_dir: &Path,
    overrides: &FigureOverrides,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let started = Instant::now();
    let (cfg, files) = match name {
        "fig3" => fig3(out_dir, overrides)?,
        "fig4" => fig4(out_dir, overrides)?,
        "fig5" => fig5(out_dir, overrides)?,
        "fig6a" => fig6(out_dir, overrides, Fig6Variant::A)?,
        "fig6b" => fig6(out_dir, overrides, Fig6Variant::B)?,
        "fig6c" => fig6(out_dir, overrides, Fig6Variant::C)?,
        "fig7" => fig7(out_dir, overrides)?,
        "fig8" => fig8(out_dir, overrides)?,
        "fig9" => fig9(out_dir, overrides)?,
        other => return Err(Error::UnknownFigure(other.to_string())),
    };
    let manifest = write_manifest(
        out_dir,
        &format!("figure {name}"),
        &cfg,
        &files,
        started.elapsed().as_secs_f64(),
    )?;
    let mut all = files;
    all.push(manifest);
    Ok(all)
}

/// Five jittered intervals with starts 0, 1.2, 2, 3, 4.2 ms carrying the
/// symbols 1, 1, 0, 0, 1 — the running example of the concept figures.
fn concept_timeline(cfg: &ExperimentConfig) -> Result<Timeline> {
    let ms = 1e-3;
    Timeline::from_parts(
        vec![0.0, 1.2 * ms, 2.0 * ms, 3.0 * ms, 4.2 * ms],
        vec![true, true, false, false, true],
        cfg.interval_spec()?,
    )
}

fn concept_config(overrides: &FigureOverrides) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::table_defaults();
    cfg.timeline.symbols_per_block = 5;
    apply_overrides(&mut cfg, overrides);
    cfg
}

fn apply_overrides(cfg: &mut ExperimentConfig, overrides: &FigureOverrides) {
    if let Some(blocks) = overrides.blocks {
        cfg.run.blocks = blocks;
        cfg.run.ml_blocks = None;
    }
    if let Some(seed) = overrides.seed {
        cfg.run.base_seed = seed;
    }
}

/// ML concept: trace dump, per-candidate log-likelihood metrics and the
/// resulting estimates for the five-symbol scenario.
fn fig3(out: &Path, overrides: &FigureOverrides) -> Result<(ExperimentConfig, Vec<PathBuf>)> {
    let mut cfg = concept_config(overrides);
    cfg.scheme.kind = SchemeKind::Ml;
    let exp = Experiment::new(cfg.clone())?;
    let timeline = concept_timeline(&cfg)?;
    let data = exp.observe_timeline(&timeline, 0);
    let sync = exp.synchronize(SchemeKind::Ml, &data.trace, &data.timeline)?;
    let estimates = sync.starts().expect("ml yields starts");

    let trace_path = write_trace_csv(out, &data)?;
    let estimates_path = write_estimates_csv(out, &timeline, estimates)?;

    // Re-scan each symbol's candidate set to expose the metric landscape.
    let ml_cfg = cfg.ml_config();
    let spec = *exp.spec();
    let grid = *exp.grid();
    let mut rows = Vec::new();
    for k in 1..estimates.len() {
        let anchor = estimates[k - 1];
        let history = &estimates[..k];
        let lo = grid.sample_at_or_after(anchor + spec.t_min);
        let hi = grid
            .sample_at_or_before(anchor + spec.t_max)
            .expect("nonnegative");
        for cand in lo..=hi {
            let metric = ml_log_likelihood(
                &data.trace,
                cand,
                history,
                exp.model_b(),
                ml_cfg.observation_window,
            );
            rows.push(vec![
                k.to_string(),
                fmt(grid.time_at(cand)),
                fmt(metric),
            ]);
        }
    }
    let metrics_path = out.join("ml_metrics.csv");
    write_csv(&metrics_path, &["symbol", "candidate_start_s", "log_likelihood"], rows)?;

    Ok((cfg, vec![trace_path, metrics_path, estimates_path]))
}

/// PO concept: trace dump, peak-search windows and estimates.
fn fig4(out: &Path, overrides: &FigureOverrides) -> Result<(ExperimentConfig, Vec<PathBuf>)> {
    let mut cfg = concept_config(overrides);
    cfg.scheme.kind = SchemeKind::Po;
    let exp = Experiment::new(cfg.clone())?;
    let timeline = concept_timeline(&cfg)?;
    let data = exp.observe_timeline(&timeline, 0);
    let sync = exp.synchronize(SchemeKind::Po, &data.trace, &data.timeline)?;
    let estimates = sync.starts().expect("po yields starts");

    let trace_path = write_trace_csv(out, &data)?;
    let estimates_path = write_estimates_csv(out, &timeline, estimates)?;

    let (t_p, _) = exp.model_b().peak();
    let spec = *exp.spec();
    let mut rows = Vec::new();
    for k in 1..estimates.len() {
        let anchor = estimates[k - 1];
        rows.push(vec![
            k.to_string(),
            fmt(anchor + spec.t_min + t_p),
            fmt(anchor + spec.t_max + t_p),
            fmt(estimates[k] + t_p),
        ]);
    }
    let windows_path = out.join("po_windows.csv");
    write_csv(
        &windows_path,
        &["symbol", "window_start_s", "window_end_s", "peak_sample_s"],
        rows,
    )?;

    Ok((cfg, vec![trace_path, windows_path, estimates_path]))
}

/// TT concept: trace dump plus the detection zones for threshold 10 and a
/// 0.8 ms minimum window.
fn fig5(out: &Path, overrides: &FigureOverrides) -> Result<(ExperimentConfig, Vec<PathBuf>)> {
    let mut cfg = concept_config(overrides);
    cfg.scheme.kind = SchemeKind::Tt;
    cfg.scheme.tt.xi_b = 10.0;
    cfg.scheme.tt.t_dw_ms = Some(0.8);
    let exp = Experiment::new(cfg.clone())?;
    let timeline = concept_timeline(&cfg)?;
    let data = exp.observe_timeline(&timeline, 0);
    let sync = exp.synchronize(SchemeKind::Tt, &data.trace, &data.timeline)?;
    let zones = sync.zones().expect("tt yields zones");

    let trace_path = write_trace_csv(out, &data)?;
    let grid = exp.grid();
    let rows = zones
        .iter()
        .enumerate()
        .map(|(j, &(s, e))| {
            vec![
                j.to_string(),
                fmt(grid.time_at(s)),
                fmt(grid.time_at(e)),
            ]
        })
        .collect();
    let zones_path = out.join("zones.csv");
    write_csv(&zones_path, &["zone", "start_s", "end_s"], rows)?;

    Ok((cfg, vec![trace_path, zones_path]))
}

#[derive(Clone, Copy)]
enum Fig6Variant {
    /// 10 dB, 1 ms mean symbol, trigger 13 (baseline).
    A,
    /// 5 dB, 1 ms mean symbol, trigger 15 (more noise).
    B,
    /// 10 dB, 0.5 ms mean symbol, trigger 17 (more ISI).
    C,
}

fn fig6_config(variant: Fig6Variant, overrides: &FigureOverrides) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::table_defaults();
    match variant {
        Fig6Variant::A => cfg.scheme.tt.xi_b = 13.0,
        Fig6Variant::B => {
            cfg.channel.snr_db_b = 5.0;
            cfg.scheme.tt.xi_b = 15.0;
        }
        Fig6Variant::C => {
            cfg.timeline.t_min_ms = 0.4;
            cfg.timeline.t_max_ms = 0.6;
            cfg.scheme.tt.xi_b = 17.0;
        }
    }
    apply_overrides(&mut cfg, overrides);
    cfg
}

/// Histograms of the normalized synchronization error for ML, PO and TT.
fn fig6(
    out: &Path,
    overrides: &FigureOverrides,
    variant: Fig6Variant,
) -> Result<(ExperimentConfig, Vec<PathBuf>)> {
    let cfg = fig6_config(variant, overrides);
    let exp = Experiment::new(cfg.clone())?;
    let mut files = Vec::new();
    let mut summary = Vec::new();
    for scheme in [SchemeKind::Ml, SchemeKind::Po, SchemeKind::Tt] {
        let blocks = cfg.run.blocks_for(scheme);
        let stats = exp.run_sync_errors(scheme, blocks)?;
        let path = out.join(format!("hist_{scheme}.csv"));
        write_histogram(&path, &stats)?;
        files.push(path);
        summary.push(scheme_summary(scheme, blocks, &stats));
    }
    let summary_path = out.join("summary.json");
    let file = File::create(&summary_path)?;
    serde_json::to_writer_pretty(BufWriter::new(file), &summary)
        .map_err(|e| Error::InvalidConfig(format!("summary serialization failed: {e}")))?;
    files.push(summary_path);
    Ok((cfg, files))
}

#[derive(Serialize)]
struct SchemeSummary {
    scheme: String,
    blocks: u64,
    scored_symbols: usize,
    deletions: u64,
    insertions: u64,
    mode_bin_center: Option<f64>,
    tail_fraction_gt_half: f64,
}

fn scheme_summary(scheme: SchemeKind, blocks: u64, stats: &SyncErrorStats) -> SchemeSummary {
    let (num, den) = stats.tail_counts(0.5);
    SchemeSummary {
        scheme: scheme.to_string(),
        blocks,
        scored_symbols: stats.errors.len(),
        deletions: stats.deletions,
        insertions: stats.insertions,
        mode_bin_center: stats.histogram.mode_center(),
        tail_fraction_gt_half: if den == 0 { 0.0 } else { num as f64 / den as f64 },
    }
}

fn integer_range(lo: u32, hi: u32) -> Vec<f64> {
    (lo..=hi).map(f64::from).collect()
}

fn half_step_range(lo: f64, hi: f64) -> Vec<f64> {
    let steps = ((hi - lo) / 0.5).round() as u32;
    (0..=steps).map(|i| lo + 0.5 * i as f64).collect()
}

/// BER of the TT scheme versus the trigger threshold, for both detectors and
/// three detection-threshold pairs.
fn fig7(out: &Path, overrides: &FigureOverrides) -> Result<(ExperimentConfig, Vec<PathBuf>)> {
    let mut cfg = ExperimentConfig::table_defaults();
    cfg.scheme.kind = SchemeKind::Tt;
    apply_overrides(&mut cfg, overrides);
    let exp = Experiment::new(cfg.clone())?;
    let xi_b = integer_range(6, 24);
    let mut cells = Vec::new();
    for (detector, xi_a) in [
        (DetectorKind::Mean, vec![4.0, 4.5, 5.0]),
        (DetectorKind::Peak, vec![12.0, 13.0, 14.0]),
    ] {
        let sweep = SweepConfig {
            schemes: vec![SchemeKind::Tt],
            detectors: vec![detector],
            xi_a,
            xi_b: xi_b.clone(),
        };
        cells.extend(exp.run_sweep(&sweep)?);
    }
    let path = out.join("ber_vs_xi_b.csv");
    write_cells_csv(&path, &cells, &[])?;
    Ok((cfg, vec![path]))
}

/// Pick the trigger threshold minimizing the TT BER for one detector
/// (ties break toward the smaller threshold).
fn optimal_xi_b(
    exp: &Experiment,
    detector: DetectorKind,
    xi_a: f64,
    candidates: &[f64],
) -> Result<f64> {
    let sweep = SweepConfig {
        schemes: vec![SchemeKind::Tt],
        detectors: vec![detector],
        xi_a: vec![xi_a],
        xi_b: candidates.to_vec(),
    };
    let cells = exp.run_sweep(&sweep)?;
    let best = cells
        .iter()
        .min_by(|a, b| {
            a.ber
                .ber()
                .partial_cmp(&b.ber.ber())
                .unwrap()
                .then(a.xi_b.partial_cmp(&b.xi_b).unwrap())
        })
        .expect("nonempty sweep");
    Ok(best.xi_b.expect("tt cells carry xi_b"))
}

/// BER versus the detection threshold for all schemes and both detectors,
/// with the TT trigger pre-optimized per detector.
fn fig8(out: &Path, overrides: &FigureOverrides) -> Result<(ExperimentConfig, Vec<PathBuf>)> {
    let mut cfg = ExperimentConfig::table_defaults();
    cfg.scheme.kind = SchemeKind::Tt;
    apply_overrides(&mut cfg, overrides);
    let exp = Experiment::new(cfg.clone())?;
    let trigger_candidates = integer_range(6, 24);
    let mut cells = Vec::new();
    for (detector, probe_xi_a, xi_a) in [
        (DetectorKind::Mean, 4.5, half_step_range(0.5, 15.0)),
        (DetectorKind::Peak, 13.0, integer_range(1, 30)),
    ] {
        let xi_b = optimal_xi_b(&exp, detector, probe_xi_a, &trigger_candidates)?;
        let sweep = SweepConfig {
            schemes: vec![
                SchemeKind::Perfect,
                SchemeKind::Ml,
                SchemeKind::Po,
                SchemeKind::Tt,
            ],
            detectors: vec![detector],
            xi_a,
            xi_b: vec![xi_b],
        };
        cells.extend(exp.run_sweep(&sweep)?);
    }
    let path = out.join("ber_vs_xi_a.csv");
    write_cells_csv(&path, &cells, &[])?;
    Ok((cfg, vec![path]))
}

/// BER versus the detection threshold for the peak detector at mean symbol
/// durations of 0.5, 1 and 2 ms (constant t_max / t_min = 1.5), TT trigger
/// optimized per duration.
fn fig9(out: &Path, overrides: &FigureOverrides) -> Result<(ExperimentConfig, Vec<PathBuf>)> {
    let mut base = ExperimentConfig::table_defaults();
    base.scheme.kind = SchemeKind::Tt;
    apply_overrides(&mut base, overrides);
    let mut rows = Vec::new();
    for (t_mean_ms, t_min_ms, t_max_ms) in [(0.5, 0.4, 0.6), (1.0, 0.8, 1.2), (2.0, 1.6, 2.4)] {
        let mut cfg = base.clone();
        cfg.timeline.t_min_ms = t_min_ms;
        cfg.timeline.t_max_ms = t_max_ms;
        let exp = Experiment::new(cfg)?;
        let xi_b = optimal_xi_b(&exp, DetectorKind::Peak, 13.0, &integer_range(4, 28))?;
        let sweep = SweepConfig {
            schemes: vec![
                SchemeKind::Perfect,
                SchemeKind::Ml,
                SchemeKind::Po,
                SchemeKind::Tt,
            ],
            detectors: vec![DetectorKind::Peak],
            xi_a: integer_range(1, 30),
            xi_b: vec![xi_b],
        };
        let cells = exp.run_sweep(&sweep)?;
        for cell in cells {
            rows.push((t_mean_ms, cell));
        }
    }
    let path = out.join("ber_vs_xi_a_by_duration.csv");
    let mut csv_rows = Vec::new();
    for (t_mean_ms, cell) in &rows {
        let mut row = vec![fmt(*t_mean_ms)];
        row.extend(cell_row(cell));
        csv_rows.push(row);
    }
    write_csv(
        &path,
        &[
            "t_mean_ms",
            "scheme",
            "detector",
            "xi_a",
            "xi_b",
            "bits",
            "bit_errors",
            "ber",
            "wilson_lo",
            "wilson_hi",
        ],
        csv_rows,
    )?;
    Ok((base, vec![path]))
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// One row per sample: time, expected and observed counts for both types.
pub(crate) fn write_trace_csv(out: &Path, data: &BlockData) -> Result<PathBuf> {
    let path = out.join("trace.csv");
    let grid = &data.trace.grid;
    let rows = (0..grid.len())
        .map(|n| {
            vec![
                fmt(grid.time_at(n)),
                fmt(data.expected.rbar_a[n]),
                fmt(data.expected.rbar_b[n]),
                data.trace.r_a[n].to_string(),
                data.trace.r_b[n].to_string(),
            ]
        })
        .collect();
    write_csv(&path, &["t_s", "rbar_a", "rbar_b", "r_a", "r_b"], rows)?;
    Ok(path)
}

fn write_estimates_csv(out: &Path, timeline: &Timeline, estimates: &[f64]) -> Result<PathBuf> {
    let path = out.join("estimates.csv");
    let rows = estimates
        .iter()
        .enumerate()
        .map(|(k, &est)| {
            vec![
                k.to_string(),
                fmt(timeline.starts()[k]),
                fmt(est),
            ]
        })
        .collect();
    write_csv(&path, &["symbol", "true_start_s", "estimated_start_s"], rows)?;
    Ok(path)
}

/// `(bin_center, density)` rows of a normalized-error histogram.
pub fn write_histogram(path: &Path, stats: &SyncErrorStats) -> Result<()> {
    let rows = stats
        .histogram
        .densities()
        .into_iter()
        .map(|(center, density)| vec![fmt(center), fmt(density)])
        .collect();
    write_csv(path, &["bin_center", "density"], rows)
}

/// One row per sweep cell, matching the sweep/figure CSV schema.
pub fn write_results_csv(path: &Path, cells: &[SweepCell]) -> Result<()> {
    write_cells_csv(path, cells, &[])
}

fn cell_row(cell: &SweepCell) -> Vec<String> {
    let (lo, hi) = cell.ber.wilson95();
    vec![
        cell.scheme.to_string(),
        cell.detector.to_string(),
        fmt(cell.xi_a),
        cell.xi_b.map(fmt).unwrap_or_default(),
        cell.ber.bits.to_string(),
        cell.ber.bit_errors.to_string(),
        fmt(cell.ber.ber()),
        fmt(lo),
        fmt(hi),
    ]
}

/// One row per sweep cell; `extra` columns are prepended verbatim.
pub(crate) fn write_cells_csv(path: &Path, cells: &[SweepCell], extra: &[String]) -> Result<()> {
    let rows = cells
        .iter()
        .map(|cell| {
            let mut row = extra.to_vec();
            row.extend(cell_row(cell));
            row
        })
        .collect();
    let header: Vec<&str> = [
        "scheme",
        "detector",
        "xi_a",
        "xi_b",
        "bits",
        "bit_errors",
        "ber",
        "wilson_lo",
        "wilson_hi",
    ]
    .to_vec();
    write_csv(path, &header, rows)
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: String,
    base_seed: u64,
    git_describe: &'a str,
    wall_time_s: f64,
    outputs: Vec<String>,
    config: &'a ExperimentConfig,
}

/// Write the JSON run manifest (config echo, seed, binary version, wall
/// time, output list) and return its path.
pub fn write_manifest(
    out_dir: &Path,
    command: &str,
    cfg: &ExperimentConfig,
    outputs: &[PathBuf],
    wall_time_s: f64,
) -> Result<PathBuf> {
    let path = out_dir.join("run_manifest.json");
    let manifest = Manifest {
        command: command.to_string(),
        base_seed: cfg.run.base_seed,
        git_describe: option_env!("GIT_DESCRIBE").unwrap_or("unknown"),
        wall_time_s,
        outputs: outputs
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect(),
        config: cfg,
    };
    let file = File::create(&path)?;
    serde_json::to_writer_pretty(BufWriter::new(file), &manifest)
        .map_err(|e| Error::InvalidConfig(format!("manifest serialization failed: {e}")))?;
    Ok(path)
}
