//! Command-line front end: run single simulations, threshold sweeps and
//! figure recipes from a TOML experiment config.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use mcsync::harness::{
    reproduce_figure, write_manifest, Experiment, ExperimentConfig, FigureOverrides, FIGURE_NAMES,
};

#[derive(Parser)]
#[command(name = "mcsync", version, about = "Molecular-communication symbol synchronization simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured scheme/detector cell and write BER plus
    /// synchronization-error statistics.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Override the number of Monte Carlo blocks.
        #[arg(long)]
        blocks: Option<u64>,
        /// Override the base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Evaluate the [sweep] grid from the config with common random numbers.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        blocks: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Reproduce a preset figure recipe (fig3..fig9).
    Figure {
        /// One of: fig3, fig4, fig5, fig6a, fig6b, fig6c, fig7, fig8, fig9.
        name: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        blocks: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a config against every constraint of its selected scheme.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(config: &PathBuf, blocks: Option<u64>, seed: Option<u64>) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_path(config)
        .with_context(|| format!("loading {}", config.display()))?;
    if let Some(b) = blocks {
        cfg.run.blocks = b;
        cfg.run.ml_blocks = None;
    }
    if let Some(s) = seed {
        cfg.run.base_seed = s;
    }
    Ok(cfg)
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate {
            config,
            blocks,
            seed,
            out,
        } => {
            let cfg = load(&config, blocks, seed)?;
            let started = Instant::now();
            let exp = Experiment::new(cfg.clone())?;
            let output = exp.run_simulation()?;
            std::fs::create_dir_all(&out)?;
            let mut files = Vec::new();

            let results = out.join("results.csv");
            let cell = mcsync::harness::SweepCell {
                scheme: cfg.scheme.kind,
                detector: cfg.detector.kind,
                xi_a: cfg.detector.xi_a,
                xi_b: (cfg.scheme.kind == mcsync::sync::SchemeKind::Tt)
                    .then_some(cfg.scheme.tt.xi_b),
                ber: output.ber,
            };
            mcsync::harness::write_results_csv(&results, &[cell])?;
            files.push(results);

            if cfg.scheme.kind != mcsync::sync::SchemeKind::Perfect {
                let hist = out.join("sync_error_hist.csv");
                mcsync::harness::write_histogram(&hist, &output.sync_errors)?;
                files.push(hist);
            }
            let manifest = write_manifest(
                &out,
                "simulate",
                &cfg,
                &files,
                started.elapsed().as_secs_f64(),
            )?;
            files.push(manifest);
            println!(
                "simulate: {} blocks, BER {:.6} ({} / {} bits)",
                output.blocks,
                output.ber.ber(),
                output.ber.bit_errors,
                output.ber.bits
            );
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Command::Sweep {
            config,
            blocks,
            seed,
            out,
        } => {
            let cfg = load(&config, blocks, seed)?;
            let Some(sweep) = cfg.sweep.clone() else {
                bail!("config has no [sweep] section");
            };
            let started = Instant::now();
            let exp = Experiment::new(cfg.clone())?;
            let cells = exp.run_sweep(&sweep)?;
            std::fs::create_dir_all(&out)?;
            let results = out.join("results.csv");
            mcsync::harness::write_results_csv(&results, &cells)?;
            let manifest = write_manifest(
                &out,
                "sweep",
                &cfg,
                std::slice::from_ref(&results),
                started.elapsed().as_secs_f64(),
            )?;
            println!("sweep: {} cells", cells.len());
            println!("wrote {}", results.display());
            println!("wrote {}", manifest.display());
        }
        Command::Figure {
            name,
            out,
            blocks,
            seed,
        } => {
            if !FIGURE_NAMES.contains(&name.as_str()) {
                bail!("unknown figure {name:?}; expected one of {FIGURE_NAMES:?}");
            }
            let overrides = FigureOverrides { blocks, seed };
            let files = reproduce_figure(&name, &out, &overrides)?;
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::from_path(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            cfg.validate()?;
            println!("{}: valid", config.display());
        }
    }
    Ok(())
}
