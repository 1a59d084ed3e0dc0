//! Ground-truth vehicle dynamics.
//!
//! Each axis follows `p' = v`, `v' = (F - f(v)) / m + d(t)` where the
//! resistance `f` and disturbance `d` are unknown to the controller.

use std::ops::{Add, Mul};

use serde::{Deserialize, Serialize};

use crate::integrate::rk4;
use crate::{Error, Result, Vec2};

/// Sinusoidal per-axis disturbance `amplitude * sin(angular_frequency * t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSpec {
    pub amplitude: Vec2,
    pub angular_frequency: f64,
    pub phase: f64,
}

impl DisturbanceSpec {
    pub fn none() -> Self {
        DisturbanceSpec {
            amplitude: Vec2::zeros(),
            angular_frequency: 0.0,
            phase: 0.0,
        }
    }

    pub fn eval(&self, t: f64) -> Vec2 {
        self.amplitude * (self.angular_frequency * t + self.phase).sin()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    pub mass: f64,
    pub drag_coeff: f64,
    pub rolling_coeff: f64,
    pub disturbance: DisturbanceSpec,
}

impl VehicleParams {
    pub fn validate(&self, field: &str) -> Result<()> {
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(Error::config(format!("{field}.mass"), "mass must be > 0"));
        }
        if !(self.drag_coeff.is_finite() && self.drag_coeff >= 0.0) {
            return Err(Error::config(format!("{field}.drag_coeff"), "must be >= 0"));
        }
        if !(self.rolling_coeff.is_finite() && self.rolling_coeff >= 0.0) {
            return Err(Error::config(format!("{field}.rolling_coeff"), "must be >= 0"));
        }
        let d = &self.disturbance;
        if !(d.amplitude.iter().all(|a| a.is_finite())
            && d.angular_frequency.is_finite()
            && d.phase.is_finite())
        {
            return Err(Error::config(
                format!("{field}.disturbance"),
                "amplitude, angular_frequency and phase must be finite",
            ));
        }
        Ok(())
    }

    /// Lumped mass-normalized uncertainty `-f(v)/m + d(t)`.
    pub fn uncertainty(&self, velocity: &Vec2, t: f64) -> Vec2 {
        -resistance_force(self, velocity) / self.mass + self.disturbance.eval(t)
    }
}

/// Position and velocity of one vehicle. Also used as its own tangent type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub position: Vec2,
    pub velocity: Vec2,
}

impl VehicleState {
    pub fn new(position: Vec2, velocity: Vec2) -> Self {
        VehicleState { position, velocity }
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().chain(self.velocity.iter()).all(|x| x.is_finite())
    }

    pub fn kinetic_energy(&self, mass: f64) -> f64 {
        0.5 * mass * self.velocity.norm_squared()
    }
}

impl Add for VehicleState {
    type Output = VehicleState;
    fn add(self, rhs: VehicleState) -> VehicleState {
        VehicleState::new(self.position + rhs.position, self.velocity + rhs.velocity)
    }
}

impl Mul<f64> for VehicleState {
    type Output = VehicleState;
    fn mul(self, k: f64) -> VehicleState {
        VehicleState::new(self.position * k, self.velocity * k)
    }
}

/// Quadratic-plus-linear resistance, odd in `v`, applied per axis.
pub fn resistance_force(params: &VehicleParams, velocity: &Vec2) -> Vec2 {
    velocity.map(|v| params.drag_coeff * v * v.abs() + params.rolling_coeff * v)
}

pub fn derivative(params: &VehicleParams, state: &VehicleState, input_force: &Vec2, t: f64) -> VehicleState {
    let accel = (input_force - resistance_force(params, &state.velocity)) / params.mass
        + params.disturbance.eval(t);
    VehicleState::new(state.velocity, accel)
}

/// Advance the plant by `dt` with the input force held constant.
pub fn step(
    params: &VehicleParams,
    state: &VehicleState,
    input_force: &Vec2,
    t: f64,
    dt: f64,
) -> Result<VehicleState> {
    if !(dt > 0.0) {
        return Err(Error::Argument(format!("dt must be positive, got {dt}")));
    }
    let next = rk4(|s, x| derivative(params, &x, input_force, s), *state, t, dt);
    if !next.is_finite() {
        return Err(Error::numerical(t + dt, "vehicle state is not finite"));
    }
    Ok(next)
}
