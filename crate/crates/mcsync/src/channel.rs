//! Channel pulse-response models, noise floors and SNR calibration.
//!
//! The channel is characterized by a pulse response `P(t)` — the expected
//! number of molecules bound to the receiver at time `t` after a single
//! release at `t = 0` — and a noise floor `z`, the expected number of bound
//! molecules contributed by external sources at any time. The synchronizers
//! only consume `P(t)`, `z` and the pulse peak, so any unimodal pulse model
//! can be plugged in. Two closed-form models are provided, plus tabulated
//! pulses for externally computed responses.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Physical channel parameters.
///
/// The binding kinetics (`forward_rate`, `backward_rate`, `receptor_count`)
/// are carried for configuration fidelity; the built-in pulse models do not
/// consume them. They become relevant only when a user supplies a tabulated
/// pulse computed from a full receptor model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    /// Diffusion coefficient `D` in m²/s (identical for both molecule types).
    pub diffusion_coefficient: f64,
    /// Transmitter-receiver distance `r0` in m.
    pub tx_rx_distance: f64,
    /// Radius `rr` of the spherical receiver in m.
    pub receiver_radius: f64,
    /// Number of molecules released per emission.
    pub released_count: f64,
    /// Forward binding rate in m³·molecule⁻¹·s⁻¹.
    pub forward_rate: f64,
    /// Backward (unbinding) rate in s⁻¹.
    pub backward_rate: f64,
    /// Number of receptors of the matching type.
    pub receptor_count: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            diffusion_coefficient: 5e-9,
            tx_rx_distance: 2e-6,
            receiver_radius: 1e-6,
            released_count: 1e3,
            forward_rate: 25e-14,
            backward_rate: 5e4,
            receptor_count: 1e3,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("diffusion_coefficient", self.diffusion_coefficient),
            ("tx_rx_distance", self.tx_rx_distance),
            ("receiver_radius", self.receiver_radius),
            ("released_count", self.released_count),
            ("forward_rate", self.forward_rate),
            ("backward_rate", self.backward_rate),
            ("receptor_count", self.receptor_count),
        ];
        for (name, v) in all {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidChannel(format!(
                    "{name} must be strictly positive, got {v}"
                )));
            }
        }
        if self.tx_rx_distance <= self.receiver_radius {
            return Err(Error::InvalidChannel(format!(
                "tx_rx_distance ({}) must exceed receiver_radius ({})",
                self.tx_rx_distance, self.receiver_radius
            )));
        }
        Ok(())
    }
}

/// Signal-to-noise ratio in decibels, defined as `max_t P(t) / z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrDb(pub f64);

impl SnrDb {
    pub fn as_linear(self) -> f64 {
        10f64.powf(self.0 / 10.0)
    }
}

/// Pulse response shape `P(t)`, zero for `t <= 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum PulseShape {
    /// `P(t) = peak_value * (t / peak_time) * exp(1 - t / peak_time)`.
    ///
    /// Parameterized directly by its peak; analytic and unimodal.
    Gamma { peak_value: f64, peak_time: f64 },
    /// First-hitting-time pulse `P(t) = amplitude * t^(-3/2) * exp(-beta/t)`
    /// with `beta = (r0 - rr)^2 / (4 D)`.
    ///
    /// This is the hitting-rate density of an absorbing sphere scaled so the
    /// peak equals a prescribed bound count; it keeps the sharp rise and the
    /// heavy diffusive tail of the physical channel.
    HittingRate { amplitude: f64, beta: f64 },
    /// Pulse tabulated on a uniform grid starting at `t = 0`, linearly
    /// interpolated, zero outside the table.
    Table { dt: f64, values: Vec<f64> },
}

impl PulseShape {
    pub fn gamma(peak_value: f64, peak_time: f64) -> Result<Self> {
        if !(peak_value > 0.0) || !(peak_time > 0.0) {
            return Err(Error::InvalidChannel(format!(
                "gamma pulse needs positive peak_value and peak_time, got ({peak_value}, {peak_time})"
            )));
        }
        Ok(PulseShape::Gamma {
            peak_value,
            peak_time,
        })
    }

    /// Hitting-rate pulse for the given geometry.
    ///
    /// The peak value is `released_count * (rr / r0) * bound_fraction`, i.e.
    /// the fraction of released molecules expected bound at the peak.
    pub fn hitting_rate(params: &ChannelParams, bound_fraction: f64) -> Result<Self> {
        params.validate()?;
        if !(bound_fraction > 0.0) {
            return Err(Error::InvalidChannel(format!(
                "bound_fraction must be strictly positive, got {bound_fraction}"
            )));
        }
        let travel = params.tx_rx_distance - params.receiver_radius;
        let beta = travel * travel / (4.0 * params.diffusion_coefficient);
        let peak_time = 2.0 * beta / 3.0;
        let peak_value = params.released_count * (params.receiver_radius / params.tx_rx_distance)
            * bound_fraction;
        // P(t_p) = amplitude * t_p^{-3/2} * exp(-beta/t_p)
        let amplitude = peak_value / (peak_time.powf(-1.5) * (-beta / peak_time).exp());
        Ok(PulseShape::HittingRate { amplitude, beta })
    }

    pub fn from_table(dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidChannel(format!(
                "table dt must be positive, got {dt}"
            )));
        }
        if values.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidChannel(
                "table values must be finite and nonnegative".into(),
            ));
        }
        Ok(PulseShape::Table { dt, values })
    }

    /// Evaluate `P(t)`; zero for `t <= 0`.
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            PulseShape::Gamma {
                peak_value,
                peak_time,
            } => {
                let u = t / peak_time;
                peak_value * u * (1.0 - u).exp()
            }
            PulseShape::HittingRate { amplitude, beta } => {
                amplitude * t.powf(-1.5) * (-beta / t).exp()
            }
            PulseShape::Table { dt, values } => {
                let pos = t / dt;
                let i = pos.floor() as usize;
                if i + 1 >= values.len() {
                    return 0.0;
                }
                let frac = pos - i as f64;
                values[i] * (1.0 - frac) + values[i + 1] * frac
            }
        }
    }

    /// Peak location and value `(t_p, P_max)`.
    ///
    /// Analytic for the closed-form shapes. For tabulated pulses the grid
    /// maximum is refined by golden-section search to a tolerance of
    /// `1e-3 * dt`.
    pub fn peak(&self) -> Result<(f64, f64)> {
        match self {
            PulseShape::Gamma {
                peak_value,
                peak_time,
            } => Ok((*peak_time, *peak_value)),
            PulseShape::HittingRate { beta, .. } => {
                let t_p = 2.0 * beta / 3.0;
                Ok((t_p, self.eval(t_p)))
            }
            PulseShape::Table { dt, values } => {
                let (best_idx, best) = values
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .ok_or(Error::ZeroPulse)?;
                if *best <= 0.0 {
                    return Err(Error::ZeroPulse);
                }
                let lo = dt * best_idx.saturating_sub(1) as f64;
                let hi = dt * (best_idx + 1).min(values.len() - 1) as f64;
                let t_p = golden_section_max(|t| self.eval(t), lo, hi, 1e-3 * dt);
                Ok((t_p, self.eval(t_p)))
            }
        }
    }

    /// Time after which `P(t) <= eps_rel * P_max` holds for every later `t`.
    ///
    /// Used to bound superposition sums; conservative by construction.
    pub fn support_end(&self, eps_rel: f64) -> Result<f64> {
        let (t_p, p_max) = self.peak()?;
        let threshold = eps_rel * p_max;
        match self {
            PulseShape::Table { dt, values } => Ok(*dt * values.len() as f64),
            _ => {
                // Bracket the decaying tail, then bisect.
                let mut hi = t_p * 2.0;
                while self.eval(hi) > threshold {
                    hi *= 2.0;
                    if hi > t_p * 1e12 {
                        return Ok(hi);
                    }
                }
                let mut lo = t_p;
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if self.eval(mid) > threshold {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                // 10% headroom so borderline terms are still evaluated
                // exactly against the cutoff rule instead of being skipped.
                Ok(hi * 1.1)
            }
        }
    }
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = hi - (hi - lo) * INV_PHI;
    let mut d = lo + (hi - lo) * INV_PHI;
    let mut fc = f(c);
    let mut fd = f(d);
    while (hi - lo).abs() > tol {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - (hi - lo) * INV_PHI;
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + (hi - lo) * INV_PHI;
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// A pulse shape together with its noise floor and cached peak.
///
/// Immutable after construction; cheap to clone and safe to share across
/// Monte Carlo workers.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    pulse: PulseShape,
    noise_floor: f64,
    peak_time: f64,
    peak_value: f64,
}

impl ChannelModel {
    /// Build a model with a zero noise floor.
    pub fn new(pulse: PulseShape) -> Result<Self> {
        Self::with_noise(pulse, 0.0)
    }

    pub fn with_noise(pulse: PulseShape, noise_floor: f64) -> Result<Self> {
        if noise_floor < 0.0 || !noise_floor.is_finite() {
            return Err(Error::InvalidChannel(format!(
                "noise floor must be finite and nonnegative, got {noise_floor}"
            )));
        }
        let (peak_time, peak_value) = pulse.peak()?;
        Ok(ChannelModel {
            pulse,
            noise_floor,
            peak_time,
            peak_value,
        })
    }

    /// Expected bound molecules at time `t` after a single release.
    pub fn pulse_at(&self, t: f64) -> f64 {
        self.pulse.eval(t)
    }

    /// Return a copy with the noise floor set so that
    /// `P_max / z` equals the requested SNR; everything else unchanged.
    pub fn calibrated(&self, snr: SnrDb) -> ChannelModel {
        let mut out = self.clone();
        out.noise_floor = self.peak_value / snr.as_linear();
        out
    }

    /// `(t_p, P_max)` — peak location and value of the pulse.
    pub fn peak(&self) -> (f64, f64) {
        (self.peak_time, self.peak_value)
    }

    pub fn peak_time(&self) -> f64 {
        self.peak_time
    }

    pub fn peak_value(&self) -> f64 {
        self.peak_value
    }

    /// Expected bound noise molecules `z` at any time.
    pub fn noise_floor(&self) -> f64 {
        self.noise_floor
    }

    pub fn pulse(&self) -> &PulseShape {
        &self.pulse
    }

    /// Realized `max_t P(t) / z`; infinite when the noise floor is zero.
    pub fn snr(&self) -> f64 {
        self.peak_value / self.noise_floor
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn table_ii() -> ChannelParams {
        ChannelParams::default()
    }

    #[test]
    fn gamma_pulse_vanishes_at_release() {
        let p = PulseShape::gamma(100.0, 1e-4).unwrap();
        assert_eq!(p.eval(0.0), 0.0);
        assert_eq!(p.eval(-1.0), 0.0);
    }

    #[test]
    fn gamma_pulse_peak_by_construction() {
        let p = PulseShape::gamma(100.0, 1e-4).unwrap();
        assert_abs_diff_eq!(p.eval(1e-4), 100.0, epsilon = 1e-12);
        let (t_p, p_max) = p.peak().unwrap();
        assert_eq!(t_p, 1e-4);
        assert_eq!(p_max, 100.0);
    }

    #[test]
    fn hitting_rate_peak_time_matches_analytic_maximum() {
        // argmax of t^{-3/2} exp(-(r0-rr)^2/(4Dt)) is (r0-rr)^2/(6D).
        let params = table_ii();
        let p = PulseShape::hitting_rate(&params, 0.1).unwrap();
        let (t_p, p_max) = p.peak().unwrap();
        let travel = params.tx_rx_distance - params.receiver_radius;
        let expected = travel * travel / (6.0 * params.diffusion_coefficient);
        assert_relative_eq!(t_p, expected, max_relative = 1e-12);
        assert_relative_eq!(t_p, 33.33e-6, max_relative = 1e-2);
        // Peak value follows the bound-fraction calibration.
        assert_relative_eq!(p_max, 1e3 * 0.5 * 0.1, max_relative = 1e-9);
    }

    #[test]
    fn hitting_rate_peak_dominates_neighbors() {
        let p = PulseShape::hitting_rate(&table_ii(), 0.1).unwrap();
        let (t_p, p_max) = p.peak().unwrap();
        for frac in [0.5, 0.9, 0.99, 1.01, 1.1, 2.0] {
            assert!(p.eval(t_p * frac) <= p_max + 1e-12);
        }
    }

    #[test]
    fn table_pulse_peak_via_golden_section() {
        // Tabulate the gamma pulse and check the refined peak against the
        // closed form.
        let reference = PulseShape::gamma(42.0, 2e-4).unwrap();
        let dt = 1e-5;
        let values: Vec<f64> = (0..400).map(|i| reference.eval(i as f64 * dt)).collect();
        let table = PulseShape::from_table(dt, values).unwrap();
        let (t_p, p_max) = table.peak().unwrap();
        assert_abs_diff_eq!(t_p, 2e-4, epsilon = 2e-6);
        assert_relative_eq!(p_max, 42.0, max_relative = 1e-3);
    }

    #[test]
    fn zero_table_pulse_is_rejected() {
        let table = PulseShape::from_table(1e-5, vec![0.0; 16]).unwrap();
        assert!(matches!(table.peak(), Err(Error::ZeroPulse)));
    }

    #[test]
    fn calibrate_noise_examples() {
        let model = ChannelModel::new(PulseShape::gamma(100.0, 1e-4).unwrap()).unwrap();
        assert_abs_diff_eq!(model.calibrated(SnrDb(10.0)).noise_floor(), 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(model.calibrated(SnrDb(0.0)).noise_floor(), 100.0, epsilon = 1e-12);
        // 5 dB -> 100 / 10^0.5
        assert_relative_eq!(
            model.calibrated(SnrDb(5.0)).noise_floor(),
            100.0 / 10f64.powf(0.5),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            model.calibrated(SnrDb(5.0)).noise_floor(),
            31.62,
            max_relative = 1e-3
        );
    }

    #[test]
    fn calibrate_noise_is_idempotent() {
        let model = ChannelModel::new(PulseShape::gamma(50.0, 2e-4).unwrap()).unwrap();
        let once = model.calibrated(SnrDb(7.5));
        let twice = once.calibrated(SnrDb(7.5));
        assert_eq!(once, twice);
    }

    #[test]
    fn peak_scale_invariance() {
        // peak_of_pulse(c * P) has the same t_p and scaled P_max.
        for c in [0.5, 2.0, 10.0, 123.456] {
            let base = PulseShape::gamma(20.0, 2e-4).unwrap();
            let scaled = PulseShape::gamma(20.0 * c, 2e-4).unwrap();
            let (t0, p0) = base.peak().unwrap();
            let (t1, p1) = scaled.peak().unwrap();
            assert_eq!(t0, t1);
            assert_relative_eq!(p1, c * p0, max_relative = 1e-12);
        }
    }

    #[test]
    fn default_pulses_are_unimodal_on_grid() {
        // Sampled on [0, 10 t_p], differences change sign exactly once.
        let pulses = [
            PulseShape::gamma(20.0, 2e-4).unwrap(),
            PulseShape::hitting_rate(&table_ii(), 0.1).unwrap(),
        ];
        for pulse in pulses {
            let (t_p, _) = pulse.peak().unwrap();
            let dt = t_p / 50.0;
            let samples: Vec<f64> = (0..=500).map(|i| pulse.eval(i as f64 * dt)).collect();
            let mut sign_changes = 0;
            let mut prev_sign = 0i8;
            for w in samples.windows(2) {
                let d = w[1] - w[0];
                let sign = if d > 0.0 {
                    1
                } else if d < 0.0 {
                    -1
                } else {
                    continue;
                };
                if prev_sign != 0 && sign != prev_sign {
                    sign_changes += 1;
                }
                prev_sign = sign;
            }
            assert_eq!(sign_changes, 1, "pulse {pulse:?} is not unimodal");
        }
    }

    #[test]
    fn support_end_bounds_the_tail() {
        for pulse in [
            PulseShape::gamma(20.0, 2e-4).unwrap(),
            PulseShape::hitting_rate(&table_ii(), 0.1).unwrap(),
        ] {
            let (_, p_max) = pulse.peak().unwrap();
            let end = pulse.support_end(1e-6).unwrap();
            for frac in [1.0, 1.5, 4.0, 32.0] {
                assert!(pulse.eval(end * frac) <= 1e-6 * p_max);
            }
        }
    }

    #[test]
    fn params_validation() {
        let mut p = table_ii();
        assert!(p.validate().is_ok());
        p.receiver_radius = 3e-6; // larger than tx_rx_distance
        assert!(p.validate().is_err());
        let mut q = table_ii();
        q.diffusion_coefficient = 0.0;
        assert!(q.validate().is_err());
    }
}
