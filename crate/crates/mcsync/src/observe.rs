//! Expected bound-molecule counts and Poisson observations on the receiver
//! sampling grid.
//!
//! The receiver counts bound molecules every `dt` seconds. The expected count
//! at a sample is the superposition of all past emissions' pulse responses
//! plus the noise floor; the observed count is an independent Poisson draw
//! around that mean.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::channel::ChannelModel;
use crate::timeline::Timeline;
use crate::{Error, Result};

/// Relative cutoff for inter-symbol interference terms: a past emission
/// contributes to a sample only while its pulse still exceeds
/// `ISI_EPS_REL * P_max`. The discarded mass is far below Poisson noise.
pub const ISI_EPS_REL: f64 = 1e-6;

/// Slack in index units when snapping continuous times onto the grid.
const IDX_EPS: f64 = 1e-6;

/// Uniform sampling grid `t_n = n * dt`, `n = 0, 1, ...`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingGrid {
    dt: f64,
    len: usize,
}

impl SamplingGrid {
    /// Grid with spacing `dt` covering at least `[0, horizon]`.
    pub fn new(dt: f64, horizon: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidGrid(format!("dt must be positive, got {dt}")));
        }
        if !(horizon >= 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "horizon must be nonnegative, got {horizon}"
            )));
        }
        let len = (horizon / dt - IDX_EPS).ceil().max(0.0) as usize + 1;
        Ok(SamplingGrid { dt, len })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Time of sample `n`.
    pub fn time_at(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    /// Smallest sample index with `t_n >= t` (clamped to the grid length).
    pub fn sample_at_or_after(&self, t: f64) -> usize {
        if t <= 0.0 {
            return 0;
        }
        let idx = (t / self.dt - IDX_EPS).ceil() as usize;
        idx.min(self.len)
    }

    /// Largest sample index with `t_n <= t`, not clamped to the grid length;
    /// `None` for negative times.
    pub fn sample_at_or_before(&self, t: f64) -> Option<usize> {
        if t < 0.0 {
            return None;
        }
        Some((t / self.dt + IDX_EPS).floor() as usize)
    }

    /// Whether the grid covers the whole timeline plus one `t_max` tail.
    pub fn covers(&self, timeline: &Timeline) -> bool {
        self.time_at(self.len.saturating_sub(1)) >= timeline.end_bound() - self.dt * IDX_EPS
    }
}

/// Expected counts for both molecule types on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpectedTrace {
    pub rbar_a: Vec<f64>,
    pub rbar_b: Vec<f64>,
    pub grid: SamplingGrid,
}

/// Observed (Poisson-sampled) counts for both molecule types.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationTrace {
    pub r_a: Vec<u32>,
    pub r_b: Vec<u32>,
    pub grid: SamplingGrid,
}

/// Pulse contribution of one emission at `elapsed` seconds after release,
/// gated by the ISI cutoff rule.
#[inline]
pub fn gated_pulse(model: &ChannelModel, elapsed: f64) -> f64 {
    let p = model.pulse_at(elapsed);
    if p > ISI_EPS_REL * model.peak_value() {
        p
    } else {
        0.0
    }
}

/// Expected counts: for each sample, noise floor plus the gated pulse of
/// every emission at or before it. Type-A emissions occur only for `a[k]=1`;
/// type-B emissions occur at every interval start.
pub fn expected_counts(
    timeline: &Timeline,
    model_a: &ChannelModel,
    model_b: &ChannelModel,
    grid: &SamplingGrid,
) -> ExpectedTrace {
    debug_assert!(
        timeline.is_empty() || grid.covers(timeline),
        "grid does not cover the timeline"
    );
    let mut rbar_a = vec![model_a.noise_floor(); grid.len()];
    let mut rbar_b = vec![model_b.noise_floor(); grid.len()];
    superpose(&mut rbar_b, model_b, grid, timeline.starts().iter().copied());
    let a_starts = timeline
        .starts()
        .iter()
        .zip(timeline.symbols())
        .filter(|(_, &bit)| bit)
        .map(|(&s, _)| s);
    superpose(&mut rbar_a, model_a, grid, a_starts);
    ExpectedTrace {
        rbar_a,
        rbar_b,
        grid: *grid,
    }
}

fn superpose(
    buf: &mut [f64],
    model: &ChannelModel,
    grid: &SamplingGrid,
    starts: impl Iterator<Item = f64>,
) {
    let support = model
        .pulse()
        .support_end(ISI_EPS_REL)
        .expect("model peak already validated at construction");
    for s in starts {
        let lo = grid.sample_at_or_after(s);
        let hi = grid.sample_at_or_after(s + support).min(buf.len());
        for (n, slot) in buf.iter_mut().enumerate().take(hi).skip(lo) {
            *slot += gated_pulse(model, grid.time_at(n) - s);
        }
    }
}

/// Draw one Poisson observation per sample and molecule type.
///
/// Deterministic for a fixed RNG state; samples are drawn in grid order,
/// type A first.
pub fn sample_trace<R: Rng + ?Sized>(expected: &ExpectedTrace, rng: &mut R) -> ObservationTrace {
    ObservationTrace {
        r_a: sample_counts(&expected.rbar_a, rng),
        r_b: sample_counts(&expected.rbar_b, rng),
        grid: expected.grid,
    }
}

fn sample_counts<R: Rng + ?Sized>(means: &[f64], rng: &mut R) -> Vec<u32> {
    means
        .iter()
        .map(|&lambda| {
            if lambda <= 0.0 {
                0
            } else {
                let poisson = Poisson::new(lambda).expect("positive finite mean");
                poisson.sample(rng) as u32
            }
        })
        .collect()
}
