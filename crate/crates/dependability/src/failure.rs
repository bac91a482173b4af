//! Weibull lifetime model.
//!
//! The hazard grows (or decays) as a power of time, `λ(t) ∝ t^m` with
//! `m = shape − 1 > −1`. Shape 1 is the memoryless exponential case.

use crate::{DependabilityError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FailureModel {
    shape: f64,
    scale: f64,
}

impl FailureModel {
    /// Weibull with shape `k > 0` and scale `η > 0` (time units, ms by convention).
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape.is_finite() && shape > 0.0) {
            return Err(DependabilityError::InvalidParameter {
                name: "shape",
                reason: format!("must be finite and > 0, got {shape}"),
            });
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(DependabilityError::InvalidParameter {
                name: "scale",
                reason: format!("must be finite and > 0, got {scale}"),
            });
        }
        Ok(Self { shape, scale })
    }

    /// Constant hazard `rate`.
    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(DependabilityError::InvalidParameter {
                name: "rate",
                reason: format!("must be finite and > 0, got {rate}"),
            });
        }
        Self::new(1.0, 1.0 / rate)
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Exponent `m` in `λ(t) ∝ t^m`; always `> −1`.
    pub fn hazard_exponent(&self) -> f64 {
        self.shape - 1.0
    }

    /// `H(t) = (t/η)^k`.
    pub fn cumulative_hazard(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok((t / self.scale).powf(self.shape))
    }

    /// Probability of surviving `[0, t]` without failure.
    pub fn reliability_at(&self, t: f64) -> Result<f64> {
        Ok((-self.cumulative_hazard(t)?).exp())
    }

    /// Instantaneous failure rate `(k/η)(t/η)^(k−1)`.
    pub fn hazard_at(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        if t == 0.0 {
            if self.shape < 1.0 {
                return Err(DependabilityError::Singularity { shape: self.shape });
            }
            if self.shape > 1.0 {
                return Ok(0.0);
            }
        }
        Ok(self.shape / self.scale * (t / self.scale).powf(self.shape - 1.0))
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        Err(DependabilityError::NegativeTime(t))
    } else {
        Ok(())
    }
}
