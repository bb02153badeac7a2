//! Experiment configuration: a single TOML document describing the channel,
//! the timeline statistics, the sampling grid, the synchronization scheme,
//! the detector and the Monte Carlo run.
//!
//! See `book/src/experiments.md` for the full schema with commentary.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelModel, ChannelParams, PulseShape, SnrDb};
use crate::detect::{DetectorConfig, DetectorKind};
use crate::sync::{MlConfig, SchemeKind, TtConfig};
use crate::timeline::IntervalSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub channel: ChannelConfig,
    pub timeline: TimelineConfig,
    #[serde(default)]
    pub grid: GridConfig,
    pub scheme: SchemeConfig,
    pub detector: DetectorSection,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

/// Pulse model selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChannelKind {
    #[serde(rename = "gamma")]
    Gamma,
    #[serde(rename = "hitting-rate")]
    HittingRate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub kind: ChannelKind,
    /// SNR for the information (type-A) molecules, in dB.
    pub snr_db_a: f64,
    /// SNR for the synchronization (type-B) molecules, in dB.
    pub snr_db_b: f64,
    /// Gamma-pulse parameters; required when `kind = "gamma"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<GammaConfig>,
    /// Fraction of released molecules bound at the pulse peak; sets the
    /// hitting-rate peak value together with `params`.
    #[serde(default = "default_bound_fraction")]
    pub bound_fraction: f64,
    /// Physical parameters (geometry, kinetics, release size).
    #[serde(default)]
    pub params: ChannelParams,
}

fn default_bound_fraction() -> f64 {
    0.1
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaConfig {
    /// Peak expected bound count `P_max`.
    pub peak_value: f64,
    /// Peak delay `t_p` in milliseconds.
    pub peak_time_ms: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimelineConfig {
    pub t_min_ms: f64,
    pub t_max_ms: f64,
    pub symbols_per_block: usize,
    /// Optional dedicated seed for the interval-timing stream.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_seed: Option<u64>,
    /// Optional dedicated seed for the data-symbol stream.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol_seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Receiver sampling period in microseconds.
    #[serde(default = "default_dt_us")]
    pub dt_us: f64,
    /// Extra horizon beyond the automatic `(K + 1) t_max + t_p` coverage.
    #[serde(default)]
    pub extra_horizon_ms: f64,
}

fn default_dt_us() -> f64 {
    10.0
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            dt_us: default_dt_us(),
            extra_horizon_ms: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    #[serde(default)]
    pub ml: MlSection,
    #[serde(default)]
    pub tt: TtSection,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlSection {
    /// Observation window in ms; defaults to `t_min`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_ow_ms: Option<f64>,
    /// Anchor searches at the true previous start.
    #[serde(default)]
    pub genie: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TtSection {
    /// Trigger threshold on the type-B counts.
    #[serde(default = "default_xi_b")]
    pub xi_b: f64,
    /// Minimum detection window in ms; defaults to `t_min`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_dw_ms: Option<f64>,
}

fn default_xi_b() -> f64 {
    13.0
}

impl Default for TtSection {
    fn default() -> Self {
        TtSection {
            xi_b: default_xi_b(),
            t_dw_ms: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    pub kind: DetectorKind,
    /// Detection threshold on the type-A counts.
    pub xi_a: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Monte Carlo blocks for the PO, TT and perfect schemes.
    #[serde(default = "default_blocks")]
    pub blocks: u64,
    /// Blocks for the ML scheme (it is far more expensive); defaults to a
    /// tenth of `blocks`, mirroring the usual cost ratio.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ml_blocks: Option<u64>,
    #[serde(default = "default_seed")]
    pub base_seed: u64,
    /// Bin width of the normalized-error histogram.
    #[serde(default = "default_bin_width")]
    pub sync_error_bin_width: f64,
}

fn default_blocks() -> u64 {
    1000
}

fn default_seed() -> u64 {
    1
}

fn default_bin_width() -> f64 {
    0.05
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            blocks: default_blocks(),
            ml_blocks: None,
            base_seed: default_seed(),
            sync_error_bin_width: default_bin_width(),
        }
    }
}

impl RunConfig {
    /// Blocks to run for a given scheme.
    pub fn blocks_for(&self, scheme: SchemeKind) -> u64 {
        match scheme {
            SchemeKind::Ml => self.ml_blocks.unwrap_or((self.blocks / 10).max(1)),
            _ => self.blocks,
        }
    }
}

/// Cartesian sweep grid for the `sweep` subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "all_schemes")]
    pub schemes: Vec<SchemeKind>,
    #[serde(default = "all_detectors")]
    pub detectors: Vec<DetectorKind>,
    /// Detection thresholds to sweep.
    pub xi_a: Vec<f64>,
    /// Trigger thresholds to sweep (TT cells only).
    #[serde(default)]
    pub xi_b: Vec<f64>,
}

fn all_schemes() -> Vec<SchemeKind> {
    vec![
        SchemeKind::Perfect,
        SchemeKind::Ml,
        SchemeKind::Po,
        SchemeKind::Tt,
    ]
}

fn all_detectors() -> Vec<DetectorKind> {
    vec![DetectorKind::Mean, DetectorKind::Peak]
}

impl ExperimentConfig {
    /// Defaults used by the figure recipes: gamma pulse with a 20-molecule
    /// peak 0.15 ms after release, both molecule types at 10 dB, symbol
    /// intervals jittered in [0.8, 1.2] ms, 50 symbols per block, 10 us
    /// sampling.
    pub fn table_defaults() -> ExperimentConfig {
        ExperimentConfig {
            channel: ChannelConfig {
                kind: ChannelKind::Gamma,
                snr_db_a: 10.0,
                snr_db_b: 10.0,
                gamma: Some(GammaConfig {
                    peak_value: 20.0,
                    peak_time_ms: 0.15,
                }),
                bound_fraction: default_bound_fraction(),
                params: ChannelParams::default(),
            },
            timeline: TimelineConfig {
                t_min_ms: 0.8,
                t_max_ms: 1.2,
                symbols_per_block: 50,
                timing_seed: None,
                symbol_seed: None,
            },
            grid: GridConfig::default(),
            scheme: SchemeConfig {
                kind: SchemeKind::Tt,
                ml: MlSection::default(),
                tt: TtSection::default(),
            },
            detector: DetectorSection {
                kind: DetectorKind::Mean,
                xi_a: 7.0,
            },
            run: RunConfig::default(),
            sweep: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn interval_spec(&self) -> Result<IntervalSpec> {
        IntervalSpec::new(
            self.timeline.t_min_ms * 1e-3,
            self.timeline.t_max_ms * 1e-3,
            self.timeline.symbols_per_block,
        )
    }

    /// Build the type-A and type-B channel models (shared pulse shape,
    /// per-type noise calibration).
    pub fn models(&self) -> Result<(ChannelModel, ChannelModel)> {
        let pulse = match self.channel.kind {
            ChannelKind::Gamma => {
                let gamma = self.channel.gamma.as_ref().ok_or_else(|| {
                    Error::InvalidConfig("channel.kind = \"gamma\" needs a [channel.gamma] block".into())
                })?;
                PulseShape::gamma(gamma.peak_value, gamma.peak_time_ms * 1e-3)?
            }
            ChannelKind::HittingRate => {
                PulseShape::hitting_rate(&self.channel.params, self.channel.bound_fraction)?
            }
        };
        let base = ChannelModel::new(pulse)?;
        let model_a = base.calibrated(SnrDb(self.channel.snr_db_a));
        let model_b = base.calibrated(SnrDb(self.channel.snr_db_b));
        Ok((model_a, model_b))
    }

    /// Resolved ML configuration (window defaults to `t_min`).
    pub fn ml_config(&self) -> MlConfig {
        MlConfig {
            observation_window: self
                .scheme
                .ml
                .t_ow_ms
                .map_or(self.timeline.t_min_ms * 1e-3, |v| v * 1e-3),
            genie_previous: self.scheme.ml.genie,
        }
    }

    /// Resolved TT configuration (window defaults to `t_min`).
    pub fn tt_config(&self) -> TtConfig {
        TtConfig {
            threshold: self.scheme.tt.xi_b,
            detection_window: self
                .scheme
                .tt
                .t_dw_ms
                .map_or(self.timeline.t_min_ms * 1e-3, |v| v * 1e-3),
        }
    }

    pub fn detector_config(&self) -> DetectorConfig {
        DetectorConfig {
            kind: self.detector.kind,
            threshold: self.detector.xi_a,
        }
    }

    /// Check every constraint the selected scheme imposes.
    pub fn validate(&self) -> Result<()> {
        let spec = self.interval_spec()?;
        self.channel.params.validate()?;
        if !self.channel.snr_db_a.is_finite() || !self.channel.snr_db_b.is_finite() {
            return Err(Error::InvalidConfig("SNR values must be finite".into()));
        }
        if self.channel.kind == ChannelKind::Gamma && self.channel.gamma.is_none() {
            return Err(Error::InvalidConfig(
                "channel.kind = \"gamma\" needs a [channel.gamma] block".into(),
            ));
        }
        self.models()?;
        if !(self.grid.dt_us > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "grid.dt_us must be positive, got {}",
                self.grid.dt_us
            )));
        }
        if self.run.blocks == 0 {
            return Err(Error::InvalidConfig("run.blocks must be at least 1".into()));
        }
        if !(self.run.sync_error_bin_width > 0.0) {
            return Err(Error::InvalidConfig(
                "run.sync_error_bin_width must be positive".into(),
            ));
        }
        match self.scheme.kind {
            SchemeKind::Ml => self.ml_config().validate(&spec)?,
            SchemeKind::Tt => self.tt_config().validate(&spec)?,
            SchemeKind::Po | SchemeKind::Perfect => {}
        }
        self.detector_config().validate()?;
        if let Some(sweep) = &self.sweep {
            if sweep.xi_a.is_empty() {
                return Err(Error::InvalidConfig("sweep.xi_a must not be empty".into()));
            }
            if sweep.schemes.contains(&SchemeKind::Tt) && sweep.xi_b.is_empty() {
                return Err(Error::InvalidConfig(
                    "sweeping the tt scheme needs sweep.xi_b values".into(),
                ));
            }
            if sweep.schemes.contains(&SchemeKind::Ml) {
                self.ml_config().validate(&spec)?;
            }
            if sweep.schemes.contains(&SchemeKind::Tt) {
                // Window constraint applies to every swept threshold.
                let mut tt = self.tt_config();
                for &xi_b in &sweep.xi_b {
                    tt.threshold = xi_b;
                    tt.validate(&spec)?;
                }
            }
        }
        Ok(())
    }
}
