//! Minimum-jerk point-to-point profiles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::Side;

/// Normalized minimum-jerk position, `10τ³ − 15τ⁴ + 6τ⁵`, for τ in [0, 1].
pub fn min_jerk_shape(tau: f64) -> f64 {
    let tau = tau.clamp(0.0, 1.0);
    let t3 = tau * tau * tau;
    t3 * (10.0 + tau * (-15.0 + 6.0 * tau))
}

/// Derivative of [`min_jerk_shape`] with respect to τ.
pub fn min_jerk_shape_rate(tau: f64) -> f64 {
    if !(0.0..=1.0).contains(&tau) {
        return 0.0;
    }
    let t2 = tau * tau;
    30.0 * t2 * (1.0 - tau) * (1.0 - tau)
}

/// Position (mm) and velocity (mm/s) of a minimum-jerk move from `x0` to
/// `xf` lasting `duration` seconds, evaluated `elapsed` seconds after its
/// start. `elapsed` is clamped to `[0, duration]`.
pub fn min_jerk(x0: f64, xf: f64, duration: f64, elapsed: f64) -> Result<(f64, f64)> {
    if !(duration > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "minimum-jerk duration must be > 0, got {duration}"
        )));
    }
    let tau = (elapsed / duration).clamp(0.0, 1.0);
    let dx = xf - x0;
    let x = if tau == 1.0 {
        xf
    } else {
        x0 + dx * min_jerk_shape(tau)
    };
    Ok((x, dx * min_jerk_shape_rate(tau) / duration))
}

/// A minimum-jerk plan anchored at absolute time `t0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannedTrajectory {
    pub x0: f64,
    pub xf: f64,
    pub t0: f64,
    pub duration: f64,
    pub side: Side,
}

impl PlannedTrajectory {
    pub fn new(x0: f64, xf: f64, t0: f64, duration: f64, side: Side) -> Result<Self> {
        if !(duration > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "plan duration must be > 0, got {duration}"
            )));
        }
        Ok(Self {
            x0,
            xf,
            t0,
            duration,
            side,
        })
    }

    /// Position and velocity at absolute time `t`; clamps outside the plan.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        // duration was validated at construction
        min_jerk(self.x0, self.xf, self.duration, t - self.t0).unwrap_or((self.xf, 0.0))
    }

    pub fn end_time(&self) -> f64 {
        self.t0 + self.duration
    }
}
