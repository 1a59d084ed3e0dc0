//! Backstepping tracking control with neural and robust compensation.
//!
//! Position error `z1 = p_hat - q`, virtual control `alpha = -K1 z1`,
//! velocity error `z2 = v_hat - q_dot - alpha`. The ideal continuous law is
//!
//! ```text
//! u = -z1 - K2 z2 - delta_hat - theta_hat * tanh(z2 / eps) + q_ddot + alpha_dot
//! ```
//!
//! which turns the estimated error dynamics into
//! `z1' = -K1 z1 + z2`, `z2' = -z1 - K2 z2 + (residual)`.

use serde::{Deserialize, Serialize};

use crate::rbf::{AxisBasis, AxisNetworks, RbfParams};
use crate::{Error, Result, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerGains {
    /// Diagonal of K1.
    pub k1: Vec2,
    /// Diagonal of K2.
    pub k2: Vec2,
    /// NN adaptation gain.
    pub c1: f64,
    /// Robust-bound adaptation gain.
    pub c2: f64,
    /// Boundary-layer width of the tanh robust term (m/s).
    pub robust_smoothing: f64,
    /// Leakage on the robust-bound estimate.
    pub theta_leakage: f64,
}

impl ControllerGains {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !self.k1.iter().all(|&k| positive(k)) {
            return Err(Error::config("controller.k1", "diagonal entries must be > 0"));
        }
        if !self.k2.iter().all(|&k| positive(k)) {
            return Err(Error::config("controller.k2", "diagonal entries must be > 0"));
        }
        if !positive(self.c1) {
            return Err(Error::config("controller.c1", "must be > 0"));
        }
        if !positive(self.c2) {
            return Err(Error::config("controller.c2", "must be > 0"));
        }
        if !positive(self.robust_smoothing) {
            return Err(Error::config("controller.robust_smoothing", "must be > 0"));
        }
        if !(self.theta_leakage.is_finite() && self.theta_leakage >= 0.0) {
            return Err(Error::config("controller.theta_leakage", "must be >= 0"));
        }
        Ok(())
    }

    /// Per-axis state matrix `[[-k1, 1], [-1, -k2]]` of the nominal error loop.
    pub fn nominal_error_matrix(&self, axis: usize) -> nalgebra::Matrix2<f64> {
        nalgebra::Matrix2::new(-self.k1[axis], 1.0, -1.0, -self.k2[axis])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveState {
    pub networks: AxisNetworks,
    /// Disturbance-bound estimate, kept nonnegative.
    pub theta_hat: Vec2,
}

impl AdaptiveState {
    pub fn new(params: &RbfParams, gains: &ControllerGains) -> Result<Self> {
        Ok(AdaptiveState {
            networks: AxisNetworks::new(params, gains.c1)?,
            theta_hat: Vec2::zeros(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesiredTrajectory {
    pub q: Vec2,
    pub q_dot: Vec2,
    pub q_ddot: Vec2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingErrors {
    pub z1: Vec2,
    pub z2: Vec2,
}

pub fn tracking_errors(
    est_position: &Vec2,
    est_velocity: &Vec2,
    desired: &DesiredTrajectory,
    virtual_ctrl: &Vec2,
) -> TrackingErrors {
    TrackingErrors {
        z1: est_position - desired.q,
        z2: est_velocity - desired.q_dot - virtual_ctrl,
    }
}

pub fn virtual_control(z1: &Vec2, gains: &ControllerGains) -> Vec2 {
    -gains.k1.component_mul(z1)
}

/// Analytic `alpha_dot = -K1 (v_hat - q_dot)`.
pub fn virtual_control_rate(est_velocity: &Vec2, desired: &DesiredTrajectory, gains: &ControllerGains) -> Vec2 {
    -gains.k1.component_mul(&(est_velocity - desired.q_dot))
}

/// Errors, virtual control and its rate for one vehicle at one instant.
pub fn backstep(est_position: &Vec2, est_velocity: &Vec2, desired: &DesiredTrajectory, gains: &ControllerGains) -> (TrackingErrors, Vec2, Vec2) {
    let z1 = est_position - desired.q;
    let alpha = virtual_control(&z1, gains);
    let errors = tracking_errors(est_position, est_velocity, desired, &alpha);
    let alpha_dot = virtual_control_rate(est_velocity, desired, gains);
    (errors, alpha, alpha_dot)
}

/// Mass-normalized ideal control. `compensation` is the uncertainty estimate
/// (NN prediction, or the true uncertainty in oracle runs).
pub fn ideal_control(
    errors: &TrackingErrors,
    theta_hat: &Vec2,
    compensation: &Vec2,
    desired: &DesiredTrajectory,
    alpha_dot: &Vec2,
    gains: &ControllerGains,
) -> Result<Vec2> {
    let robust = theta_hat.component_mul(&(errors.z2 / gains.robust_smoothing).map(f64::tanh));
    let u = -errors.z1 - gains.k2.component_mul(&errors.z2) - compensation - robust + desired.q_ddot + alpha_dot;
    if u.iter().any(|x| !x.is_finite()) {
        return Err(Error::numerical(f64::NAN, "ideal control is not finite"));
    }
    Ok(u)
}

/// Euler step of both adaptation laws:
/// `theta_hat <- max(0, theta_hat + dt c2 (|z2| - leak theta_hat))` and the
/// RBF weights driven by `z2`.
pub fn adapt_robust(
    adaptive: &mut AdaptiveState,
    z2: &Vec2,
    basis: &AxisBasis,
    gains: &ControllerGains,
    dt: f64,
) -> Result<()> {
    if !(dt > 0.0) {
        return Err(Error::Argument(format!("dt must be positive, got {dt}")));
    }
    adaptive.theta_hat = adaptive
        .theta_hat
        .zip_map(z2, |th, z| (th + dt * gains.c2 * (z.abs() - gains.theta_leakage * th)).max(0.0));
    adaptive.networks.adapt(basis, z2, dt)
}

/// Norm of the finite-difference control rate.
pub fn control_rate(prev_u: &Vec2, curr_u: &Vec2, dt: f64) -> f64 {
    ((curr_u - prev_u) / dt).norm()
}
