//! Simulator and estimator library for symbol synchronization in diffusive
//! molecular communication.
//!
//! A transmitter without a stable clock releases synchronization molecules
//! (type B) at the start of every symbol interval and information molecules
//! (type A) for on-off keyed data. Interval lengths jitter randomly between a
//! minimum and a maximum. The receiver periodically counts bound molecules,
//! which yields Poisson observations around an expected pulse superposition,
//! and must recover the interval starts before it can detect data.
//!
//! The crate provides:
//!
//! - [`channel`]: pulse-response models `P(t)`, noise floors and SNR
//!   calibration,
//! - [`timeline`]: random symbol-interval generation,
//! - [`observe`]: expected counts with inter-symbol interference and Poisson
//!   sampling on the receiver grid,
//! - [`sync`]: the maximum-likelihood, peak-observation and threshold-trigger
//!   synchronizers,
//! - [`detect`]: mean and peak threshold detectors over detection intervals,
//! - [`metrics`]: normalized synchronization error, insertion/deletion
//!   accounting, histograms and BER statistics,
//! - [`harness`]: config-driven Monte Carlo experiments, threshold sweeps and
//!   figure recipes, also exposed through the `mcsync` binary.
//!
//! See the `book/` directory for a guided tour; its code snippets are
//! compiled and run as part of `cargo test --doc`.

pub mod channel;
pub mod detect;
pub mod harness;
pub mod metrics;
pub mod observe;
pub mod sync;
pub mod timeline;

mod error;

pub use error::{Error, Result};

// Keep the book's code samples honest: every fenced Rust block in the guide
// is compiled and executed by `cargo test --doc`.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/channel-models.md")]
    mod channel_models {}
    #[doc = include_str!("../../../book/src/timelines-and-observations.md")]
    mod timelines_and_observations {}
    #[doc = include_str!("../../../book/src/synchronization.md")]
    mod synchronization {}
    #[doc = include_str!("../../../book/src/detection-and-metrics.md")]
    mod detection_and_metrics {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
