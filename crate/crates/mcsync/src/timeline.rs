//! Random symbol-interval timelines.
//!
//! The transmitter has no stable clock: each symbol interval's length is an
//! independent uniform draw from `[t_min, t_max]`. A [`Timeline`] is one
//! block's realization — the interval starts plus the binary data symbols.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Relative slack used when checking increments against `[t_min, t_max]`, so
/// that boundary values expressed in ms survive the conversion to seconds.
const REL_EPS: f64 = 1e-9;

/// Admissible interval lengths and block size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalSpec {
    /// Minimum symbol interval length in seconds.
    pub t_min: f64,
    /// Maximum symbol interval length in seconds.
    pub t_max: f64,
    /// Symbols per block, `K`.
    pub symbols_per_block: usize,
}

impl IntervalSpec {
    pub fn new(t_min: f64, t_max: f64, symbols_per_block: usize) -> Result<Self> {
        let spec = IntervalSpec {
            t_min,
            t_max,
            symbols_per_block,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_min > 0.0) || !self.t_min.is_finite() {
            return Err(Error::InvalidIntervalSpec(format!(
                "t_min must be positive, got {}",
                self.t_min
            )));
        }
        if self.t_max < self.t_min || !self.t_max.is_finite() {
            return Err(Error::InvalidIntervalSpec(format!(
                "need t_min <= t_max, got [{}, {}]",
                self.t_min, self.t_max
            )));
        }
        if self.symbols_per_block == 0 {
            return Err(Error::InvalidIntervalSpec("need at least one symbol".into()));
        }
        Ok(())
    }

    /// Average symbol duration `(t_min + t_max) / 2`.
    pub fn mean_symbol(&self) -> f64 {
        0.5 * (self.t_min + self.t_max)
    }

    /// Whether the spec admits symbol-by-symbol ML search
    /// (`t_max <= 2 t_min`, so the next start cannot fall inside the
    /// current search set).
    pub fn supports_ml(&self) -> bool {
        self.t_max <= 2.0 * self.t_min * (1.0 + REL_EPS)
    }
}

/// One block's true interval starts and data symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct Timeline {
    starts: Vec<f64>,
    symbols: Vec<bool>,
    spec: IntervalSpec,
}

impl Timeline {
    /// Draw a random timeline: the first start is anchored at zero, every
    /// increment is i.i.d. uniform on `[t_min, t_max]`, and the symbols are
    /// i.i.d. equiprobable bits.
    pub fn sample<R: Rng + ?Sized>(spec: IntervalSpec, rng: &mut R) -> Timeline {
        let k = spec.symbols_per_block;
        let mut starts = Vec::with_capacity(k);
        let mut t = 0.0;
        for i in 0..k {
            if i > 0 {
                t += rng.gen_range(spec.t_min..=spec.t_max);
            }
            starts.push(t);
        }
        let symbols = (0..k).map(|_| rng.gen_bool(0.5)).collect();
        Timeline {
            starts,
            symbols,
            spec,
        }
    }

    /// Like [`Timeline::sample`], but with separate randomness for the
    /// interval timing and the data symbols, so either stream can be pinned
    /// independently.
    pub fn sample_split<R1, R2>(spec: IntervalSpec, timing_rng: &mut R1, symbol_rng: &mut R2) -> Timeline
    where
        R1: Rng + ?Sized,
        R2: Rng + ?Sized,
    {
        let k = spec.symbols_per_block;
        let mut starts = Vec::with_capacity(k);
        let mut t = 0.0;
        for i in 0..k {
            if i > 0 {
                t += timing_rng.gen_range(spec.t_min..=spec.t_max);
            }
            starts.push(t);
        }
        let symbols = (0..k).map(|_| symbol_rng.gen_bool(0.5)).collect();
        Timeline {
            starts,
            symbols,
            spec,
        }
    }

    /// Build a timeline from explicit starts and symbols.
    ///
    /// Starts must begin at zero, be strictly increasing, and every
    /// increment must lie within `[t_min, t_max]`.
    pub fn from_parts(starts: Vec<f64>, symbols: Vec<bool>, spec: IntervalSpec) -> Result<Timeline> {
        spec.validate()?;
        if starts.len() != symbols.len() {
            return Err(Error::InvalidTimeline(format!(
                "{} starts but {} symbols",
                starts.len(),
                symbols.len()
            )));
        }
        if let Some(first) = starts.first() {
            if first.abs() > spec.t_min * REL_EPS {
                return Err(Error::InvalidTimeline(format!(
                    "first start must be 0, got {first}"
                )));
            }
        }
        let slack = spec.t_max * REL_EPS;
        for (k, w) in starts.windows(2).enumerate() {
            let inc = w[1] - w[0];
            if inc <= 0.0 {
                return Err(Error::InvalidTimeline(format!(
                    "starts not strictly increasing at index {k}"
                )));
            }
            if inc < spec.t_min - slack || inc > spec.t_max + slack {
                return Err(Error::InvalidTimeline(format!(
                    "increment {inc} at index {k} outside [{}, {}]",
                    spec.t_min, spec.t_max
                )));
            }
        }
        Ok(Timeline {
            starts,
            symbols,
            spec,
        })
    }

    /// Timeline with no emissions at all (useful as a noise-only baseline).
    pub fn empty(spec: IntervalSpec) -> Timeline {
        Timeline {
            starts: Vec::new(),
            symbols: Vec::new(),
            spec,
        }
    }

    /// True interval starts `t_s[k]`, in seconds.
    pub fn starts(&self) -> &[f64] {
        &self.starts
    }

    /// Data symbols `a[k]`; `true` means a type-A release.
    pub fn symbols(&self) -> &[bool] {
        &self.symbols
    }

    pub fn spec(&self) -> &IntervalSpec {
        &self.spec
    }

    /// Number of symbols in the block.
    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    /// Latest time any emission can still matter: last start plus `t_max`.
    pub fn end_bound(&self) -> f64 {
        self.starts.last().copied().unwrap_or(0.0) + self.spec.t_max
    }
}
