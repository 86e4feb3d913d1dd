use serde::Serialize;

use crate::error::{Error, Result};

/// Piecewise-constant input on `[0, horizon]`.
///
/// The value on `[breakpoints[i], breakpoints[i+1])` is `levels[i]`; the last
/// level holds up to and including `horizon`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewiseConstantInput {
    breakpoints: Vec<f64>,
    levels: Vec<f64>,
    horizon: f64,
}

impl PiecewiseConstantInput {
    pub fn new(breakpoints: Vec<f64>, levels: Vec<f64>, horizon: f64) -> Result<Self> {
        if breakpoints.is_empty() || breakpoints[0] != 0.0 {
            return Err(Error::InvalidArgument(
                "breakpoints must start at 0".into(),
            ));
        }
        if breakpoints.len() != levels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} breakpoints but {} levels",
                breakpoints.len(),
                levels.len()
            )));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if levels.iter().chain(breakpoints.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite input data".into()));
        }
        let last = *breakpoints.last().unwrap();
        if !(horizon.is_finite() && (horizon > last || (horizon == 0.0 && last == 0.0))) {
            return Err(Error::InvalidArgument(format!(
                "horizon {horizon} must exceed the last breakpoint {last}"
            )));
        }
        Ok(PiecewiseConstantInput {
            breakpoints,
            levels,
            horizon,
        })
    }

    /// `u ≡ level` on `[0, horizon]`.
    pub fn constant(level: f64, horizon: f64) -> Result<Self> {
        Self::new(vec![0.0], vec![level], horizon)
    }

    /// `alpha` on `[0, tau)`, `beta` afterwards. `tau = 0` is the constant `beta`.
    pub fn pulse(tau: f64, alpha: f64, beta: f64, horizon: f64) -> Result<Self> {
        if !(tau >= 0.0) {
            return Err(Error::InvalidArgument(format!("pulse width {tau} < 0")));
        }
        if tau == 0.0 {
            Self::constant(beta, horizon)
        } else if horizon <= tau {
            // the tail never shows up inside the horizon
            Self::constant(alpha, horizon)
        } else {
            Self::new(vec![0.0, tau], vec![alpha, beta], horizon)
        }
    }

    /// `alpha` on `[0, tau)`, zero on `[tau, tau + gap)`, `alpha` again afterwards.
    pub fn pulse_gap_pulse(tau: f64, gap: f64, alpha: f64, horizon: f64) -> Result<Self> {
        if !(tau > 0.0 && gap > 0.0 && horizon > tau + gap) {
            return Err(Error::InvalidArgument(format!(
                "need tau > 0, gap > 0 and horizon > tau + gap (got {tau}, {gap}, {horizon})"
            )));
        }
        Self::new(vec![0.0, tau, tau + gap], vec![alpha, 0.0, alpha], horizon)
    }

    /// Sample-and-hold: `levels[k]` on `[kτ, (k+1)τ)`, horizon `len·τ`.
    pub fn sample_hold(tau: f64, levels: &[f64]) -> Result<Self> {
        if !(tau > 0.0) || levels.is_empty() {
            return Err(Error::InvalidArgument(
                "sample-and-hold needs tau > 0 and at least one level".into(),
            ));
        }
        let breakpoints = (0..levels.len()).map(|k| k as f64 * tau).collect();
        Self::new(breakpoints, levels.to_vec(), levels.len() as f64 * tau)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Same pieces, different horizon (must stay past the last breakpoint).
    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        Self::new(self.breakpoints.clone(), self.levels.clone(), horizon)
    }

    /// The input from time `t0` on, shifted back to start at 0.
    pub fn tail(&self, t0: f64) -> Result<Self> {
        if !(t0 >= 0.0 && t0 < self.horizon) {
            return Err(Error::InvalidArgument(format!(
                "tail start {t0} outside [0, {})",
                self.horizon
            )));
        }
        let mut breakpoints = vec![0.0];
        let mut levels = vec![self.value_at(t0)];
        for (&b, &l) in self.breakpoints.iter().zip(&self.levels) {
            if b > t0 {
                breakpoints.push(b - t0);
                levels.push(l);
            }
        }
        Self::new(breakpoints, levels, self.horizon - t0)
    }

    /// Value at `t`; breakpoints take the new level.
    pub fn value_at(&self, t: f64) -> f64 {
        let idx = self.breakpoints.partition_point(|&b| b <= t);
        self.levels[idx.saturating_sub(1)]
    }
}
