use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::controller::DesiredTrajectory;
use crate::{Error, Result, Vec2};

/// Leader speed plan: constant, cosine-blended deceleration, constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeaderProfile {
    pub v_initial: f64,
    pub v_final: f64,
    pub decel_start: f64,
    pub decel_end: f64,
    pub lateral_position: f64,
}

impl Default for LeaderProfile {
    fn default() -> Self {
        LeaderProfile {
            v_initial: 12.0,
            v_final: 6.0,
            decel_start: 25.0,
            decel_end: 31.0,
            lateral_position: 5.4,
        }
    }
}

impl LeaderProfile {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.v_initial, self.v_final, self.decel_start, self.decel_end, self.lateral_position]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::config("leader", "all profile values must be finite"));
        }
        if !(self.decel_start < self.decel_end) {
            return Err(Error::config("leader.decel_end", "decel_start < decel_end"));
        }
        Ok(())
    }

    fn phase(&self, t: f64) -> f64 {
        PI * (t - self.decel_start) / (self.decel_end - self.decel_start)
    }

    pub fn velocity(&self, t: f64) -> f64 {
        if t < self.decel_start {
            self.v_initial
        } else if t >= self.decel_end {
            self.v_final
        } else {
            let mean = 0.5 * (self.v_initial + self.v_final);
            let half = 0.5 * (self.v_initial - self.v_final);
            mean + half * self.phase(t).cos()
        }
    }

    pub fn acceleration(&self, t: f64) -> f64 {
        if t < self.decel_start || t >= self.decel_end {
            0.0
        } else {
            let half = 0.5 * (self.v_initial - self.v_final);
            -half * PI / (self.decel_end - self.decel_start) * self.phase(t).sin()
        }
    }

    /// Distance covered since `t = 0`.
    pub fn displacement(&self, t: f64) -> f64 {
        let span = self.decel_end - self.decel_start;
        let mean = 0.5 * (self.v_initial + self.v_final);
        let half = 0.5 * (self.v_initial - self.v_final);
        if t < self.decel_start {
            self.v_initial * t
        } else {
            let cruise = self.v_initial * self.decel_start;
            let tb = t.min(self.decel_end) - self.decel_start;
            let blend = mean * tb + half * span / PI * (PI * tb / span).sin();
            cruise + blend + self.v_final * (t - self.decel_end).max(0.0)
        }
    }

    /// Reference for the leader starting at `x0`.
    pub fn trajectory(&self, x0: f64, t: f64) -> DesiredTrajectory {
        DesiredTrajectory {
            q: Vec2::new(x0 + self.displacement(t), self.lateral_position),
            q_dot: Vec2::new(self.velocity(t), 0.0),
            q_ddot: Vec2::new(self.acceleration(t), 0.0),
        }
    }
}
