//! Fixed-timestep dynamics of two 1-DOF handles coupled through a shared
//! virtual object.
//!
//! Every handle is a point mass carrying half of the object inertia. The
//! handles are tied together by a stiff spring-damper, which is what the
//! agents feel as the interaction force. All public quantities are in mm,
//! mm/s and N; integration happens in SI.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::{Color, Phase, X_MAX_MM};

/// Forces above this magnitude are treated as corrupted input.
pub const FORCE_SANITY_CAP_N: f64 = 50.0;

const MM: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimParams {
    #[serde(rename = "dt_s")]
    pub dt: f64,
    #[serde(rename = "handle_mass_kg")]
    pub handle_mass: f64,
    #[serde(rename = "object_mass_kg")]
    pub object_mass: f64,
    #[serde(rename = "coupling_kp_n_per_m")]
    pub coupling_kp: f64,
    #[serde(rename = "coupling_kd_ns_per_m")]
    pub coupling_kd: f64,
    #[serde(rename = "damping_b_ns_per_m")]
    pub damping_b: f64,
    #[serde(rename = "lateral_limit_mm")]
    pub lateral_limit: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            dt: 0.001,
            handle_mass: 0.03,
            object_mass: 0.04,
            coupling_kp: 20_000.0,
            coupling_kd: 20.0,
            damping_b: 0.5,
            lateral_limit: 40.0,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(format!("sim: {msg}")));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt_s must be > 0");
        }
        if !(self.handle_mass > 0.0 && self.object_mass > 0.0) {
            return bad("masses must be > 0");
        }
        if !(self.coupling_kp >= 0.0 && self.coupling_kd >= 0.0 && self.damping_b >= 0.0) {
            return bad("gains and damping must be >= 0");
        }
        if !(self.lateral_limit > X_MAX_MM) {
            return bad("lateral_limit_mm must exceed the fork half-width (25 mm)");
        }
        Ok(())
    }

    /// Inertia seen by one handle: its own mass plus half the object.
    pub fn effective_mass(&self) -> f64 {
        self.handle_mass + 0.5 * self.object_mass
    }

    /// Number of ticks in `seconds`, rounded to the nearest tick.
    pub fn ticks(&self, seconds: f64) -> u64 {
        (seconds / self.dt).round().max(0.0) as u64
    }
}

/// Snapshot of both handles at one tick.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DyadState {
    pub tick: u64,
    pub t: f64,
    pub x1: f64,
    pub x2: f64,
    pub v1: f64,
    pub v2: f64,
    /// Agent force on handle 1 (last applied).
    pub f1: f64,
    /// Agent force on handle 2 (last applied).
    pub f2: f64,
    /// Coupling force on handle 1; handle 2 receives the negation.
    pub f_couple: f64,
}

impl DyadState {
    pub fn at_rest(x: f64) -> Self {
        Self {
            x1: x,
            x2: x,
            ..Self::default()
        }
    }

    pub fn is_finite(&self) -> bool {
        [
            self.t,
            self.x1,
            self.x2,
            self.v1,
            self.v2,
            self.f1,
            self.f2,
            self.f_couple,
        ]
        .iter()
        .all(|v| v.is_finite())
    }

    /// Kinetic energy plus coupling-spring energy, in joules.
    pub fn energy(&self, params: &SimParams) -> f64 {
        let m = params.effective_mass();
        let (v1, v2) = (self.v1 * MM, self.v2 * MM);
        let stretch = (self.x1 - self.x2) * MM;
        0.5 * m * (v1 * v1 + v2 * v2) + 0.5 * params.coupling_kp * stretch * stretch
    }
}

/// One logged tick: the dyad state plus what the subjects see.
///
/// `f1`/`f2` in `state` hold the forces commanded at this tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    #[serde(flatten)]
    pub state: DyadState,
    pub cursor_x: f64,
    pub target_x: f64,
    pub color: Color,
    pub phase: Phase,
}

impl Frame {
    pub fn new(state: DyadState, target_x: f64, color: Color, phase: Phase) -> Self {
        Self {
            state,
            cursor_x: cursor_position(&state),
            target_x,
            color,
            phase,
        }
    }
}

/// Position of the shared virtual object (the on-screen cursor).
pub fn cursor_position(state: &DyadState) -> f64 {
    (state.x1 + state.x2) / 2.0
}

/// Coupling force acting on handle 1 (N, positive pushes it rightward).
pub fn interaction_force(state: &DyadState, params: &SimParams) -> f64 {
    params.coupling_kp * (state.x2 - state.x1) * MM + params.coupling_kd * (state.v2 - state.v1) * MM
}

/// Advances the dyad by one tick with semi-implicit Euler.
pub fn step_dyad(state: &DyadState, f1: f64, f2: f64, params: &SimParams) -> Result<DyadState> {
    if !state.is_finite() {
        return Err(Error::StateCorruption(format!(
            "non-finite state at tick {}",
            state.tick
        )));
    }
    for (name, f) in [("F1", f1), ("F2", f2)] {
        if !f.is_finite() {
            return Err(Error::StateCorruption(format!("{name} is not finite")));
        }
        if f.abs() > FORCE_SANITY_CAP_N {
            return Err(Error::StateCorruption(format!(
                "{name} = {f} N exceeds the {FORCE_SANITY_CAP_N} N sanity cap"
            )));
        }
    }

    let dt = params.dt;
    let m = params.effective_mass();
    let b = params.damping_b;
    let fc = interaction_force(state, params);

    let (x1, x2) = (state.x1 * MM, state.x2 * MM);
    let (v1, v2) = (state.v1 * MM, state.v2 * MM);

    let mut v1n = v1 + dt * (f1 + fc - b * v1) / m;
    let mut v2n = v2 + dt * (f2 - fc - b * v2) / m;
    let mut x1n = x1 + dt * v1n;
    let mut x2n = x2 + dt * v2n;

    let limit = params.lateral_limit * MM;
    clamp_travel(&mut x1n, &mut v1n, limit);
    clamp_travel(&mut x2n, &mut v2n, limit);

    let tick = state.tick + 1;
    let mut next = DyadState {
        tick,
        t: tick as f64 * dt,
        x1: x1n / MM,
        x2: x2n / MM,
        v1: v1n / MM,
        v2: v2n / MM,
        f1,
        f2,
        f_couple: 0.0,
    };
    next.f_couple = interaction_force(&next, params);
    if !next.is_finite() {
        return Err(Error::StateCorruption(format!(
            "integration produced non-finite values at tick {tick}"
        )));
    }
    Ok(next)
}

fn clamp_travel(x: &mut f64, v: &mut f64, limit: f64) {
    if *x > limit {
        *x = limit;
        *v = 0.0;
    } else if *x < -limit {
        *x = -limit;
        *v = 0.0;
    }
}
