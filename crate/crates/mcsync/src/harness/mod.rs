//! Experiment orchestration: configuration, seeded Monte Carlo runs,
//! threshold sweeps with common random numbers, and figure recipes.

mod config;
mod figures;
mod run;

pub use config::{
    ChannelConfig, ChannelKind, DetectorSection, ExperimentConfig, GammaConfig, GridConfig,
    MlSection, RunConfig, SchemeConfig, SweepConfig, TimelineConfig, TtSection,
};
pub use figures::{
    reproduce_figure, write_histogram, write_manifest, write_results_csv, FigureOverrides,
    FIGURE_NAMES,
};
pub use run::{BlockData, Experiment, ScoredBlock, SimOutput, SweepCell};
