//! Self-triggered scheduler.
//!
//! At each event `t_k` the vehicle applies the current ideal control and
//! holds it until
//!
//! ```text
//! t_{k+1} = t_k + min((s_sigma |u_k| + s_d) / max(|u_dot_k|, s_lambda), t_max)
//! ```
//!
//! Only quantities known at `t_k` enter the rule. Event instants are rounded
//! up to the integration grid, which can only lengthen intervals.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriggerParams {
    pub s_sigma: f64,
    pub s_d: f64,
    pub s_lambda: f64,
    pub t_max: f64,
}

impl TriggerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.s_sigma > 0.0 && self.s_sigma < 1.0) {
            return Err(Error::config("trigger.s_sigma", "s_sigma ∈ (0,1)"));
        }
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.s_d) {
            return Err(Error::config("trigger.s_d", "s_d > 0"));
        }
        if !positive(self.s_lambda) {
            return Err(Error::config("trigger.s_lambda", "s_lambda > 0"));
        }
        if !positive(self.t_max) {
            return Err(Error::config("trigger.t_max", "t_max > 0"));
        }
        Ok(())
    }

    /// Raw inter-event interval for a held control and rate estimate.
    pub fn interval(&self, u_k: &Vec2, rate_k: f64) -> f64 {
        let threshold = self.s_sigma * u_k.norm() + self.s_d;
        (threshold / rate_k.max(self.s_lambda)).min(self.t_max)
    }

    /// `s_sigma |u_k| + s_d`, the bound the hold error must respect.
    pub fn threshold(&self, u_k: &Vec2) -> f64 {
        self.s_sigma * u_k.norm() + self.s_d
    }
}

pub fn next_instant(t_k: f64, u_k: &Vec2, rate_k: f64, params: &TriggerParams) -> f64 {
    t_k + params.interval(u_k, rate_k)
}

/// Control-independent lower bound `s_d / rate_sup` on every interval,
/// capped at `t_max`.
pub fn min_interval_bound(params: &TriggerParams, rate_sup: f64) -> Result<f64> {
    if !(rate_sup > 0.0) {
        return Err(Error::Argument(format!("rate bound must be > 0, got {rate_sup}")));
    }
    Ok((params.s_d / rate_sup).min(params.t_max))
}

/// `|held - ideal|`.
pub fn e_u_diagnostic(held_control: &Vec2, ideal_control_now: &Vec2) -> f64 {
    (held_control - ideal_control_now).norm()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriggerState {
    pub last_event_time: f64,
    pub held_control: Vec2,
    pub held_rate: f64,
    pub next_event_time: f64,
    pub event_count: usize,
    pub interval_log: Vec<f64>,
    last_event_step: u64,
    next_event_step: u64,
    dt: f64,
}

impl TriggerState {
    /// State right after the first event at grid step `step`. The first
    /// held rate is zero, so the first interval uses the `s_lambda` floor.
    pub fn first_event(step: u64, dt: f64, u: Vec2, params: &TriggerParams) -> Self {
        let mut state = TriggerState {
            last_event_time: step as f64 * dt,
            held_control: u,
            held_rate: 0.0,
            next_event_time: 0.0,
            event_count: 1,
            interval_log: Vec::new(),
            last_event_step: step,
            next_event_step: step,
            dt,
        };
        state.schedule(params.interval(&u, 0.0));
        state
    }

    /// Same as [`first_event`](Self::first_event) but refreshing every step.
    pub fn first_update(step: u64, dt: f64, u: Vec2) -> Self {
        let mut state = TriggerState {
            last_event_time: step as f64 * dt,
            held_control: u,
            held_rate: 0.0,
            next_event_time: 0.0,
            event_count: 1,
            interval_log: Vec::new(),
            last_event_step: step,
            next_event_step: step,
            dt,
        };
        state.schedule(dt);
        state
    }

    pub fn is_due(&self, step: u64) -> bool {
        step >= self.next_event_step
    }

    pub fn next_event_step(&self) -> u64 {
        self.next_event_step
    }

    /// Event at `step`: hold `u`, then compute the next instant from `u` and `rate`.
    pub fn fire(&mut self, step: u64, u: Vec2, rate: f64, params: &TriggerParams) -> Result<()> {
        self.record(step, u, rate)?;
        self.schedule(params.interval(&u, rate));
        Ok(())
    }

    /// Continuous baseline: hold `u` for exactly one step.
    pub fn fire_every_step(&mut self, step: u64, u: Vec2, rate: f64) -> Result<()> {
        self.record(step, u, rate)?;
        self.schedule(self.dt);
        Ok(())
    }

    fn record(&mut self, step: u64, u: Vec2, rate: f64) -> Result<()> {
        if step < self.next_event_step {
            return Err(Error::Contract(format!(
                "event at step {step} precedes scheduled step {}",
                self.next_event_step
            )));
        }
        let t = step as f64 * self.dt;
        self.interval_log.push((step - self.last_event_step) as f64 * self.dt);
        self.last_event_step = step;
        self.last_event_time = t;
        self.held_control = u;
        self.held_rate = rate;
        self.event_count += 1;
        Ok(())
    }

    fn schedule(&mut self, interval: f64) {
        // A tiny slack keeps exact multiples of dt from rounding up an extra step.
        let steps = ((interval / self.dt) - 1e-9).ceil().max(1.0) as u64;
        self.next_event_step = self.last_event_step + steps;
        self.next_event_time = self.next_event_step as f64 * self.dt;
    }

    /// The held control, valid on `[last_event_time, next_event_time)`.
    pub fn held_output(&self, t: f64) -> Result<Vec2> {
        let slack = 0.5 * self.dt;
        if t < self.last_event_time - slack || t > self.next_event_time - slack {
            return Err(Error::Contract(format!(
                "held output queried at t = {t} outside [{}, {})",
                self.last_event_time, self.next_event_time
            )));
        }
        Ok(self.held_control)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params() -> TriggerParams {
        TriggerParams {
            s_sigma: 0.1,
            s_d: 0.5,
            s_lambda: 0.01,
            t_max: 0.1,
        }
    }

    #[test]
    fn next_instant_examples() {
        let p = params();
        let u = Vec2::new(6.0, 8.0);
        assert!((next_instant(2.0, &u, 5.0, &p) - 2.1).abs() < 1e-15);
        let long = TriggerParams { t_max: 1e9, ..p };
        assert!((long.interval(&u, 0.0) - 1.5 / 0.01).abs() < 1e-9);
        assert_eq!(p.interval(&u, 0.0), 0.1);
        let huge = 1e7;
        let i = p.interval(&Vec2::zeros(), huge);
        assert!((i - 0.5 / huge).abs() < 1e-20 && i > 0.0);
    }

    #[test]
    fn validation_names_constraint() {
        let bad = TriggerParams { s_sigma: 1.5, ..params() };
        let msg = bad.validate().unwrap_err().to_string();
        assert!(msg.contains("s_sigma ∈ (0,1)"), "{msg}");
        assert!(TriggerParams { s_d: 0.0, ..params() }.validate().is_err());
        assert!(TriggerParams { s_lambda: -1.0, ..params() }.validate().is_err());
        assert!(TriggerParams { t_max: 0.0, ..params() }.validate().is_err());
    }

    #[test]
    fn min_interval_bound_examples() {
        let p = TriggerParams { t_max: 1.0, ..params() };
        assert!((min_interval_bound(&p, 100.0).unwrap() - 0.005).abs() < 1e-15);
        assert_eq!(min_interval_bound(&params(), 1.0).unwrap(), 0.1);
        assert!(min_interval_bound(&p, 0.0).is_err());
        // Even for an enormous rate bound, the realized rule stays positive.
        let tau = min_interval_bound(&p, 1e12).unwrap();
        assert!(tau > 0.0 && p.interval(&Vec2::zeros(), 1e12) >= tau);
    }

    #[test]
    fn hold_law_and_contract() {
        let p = params();
        let dt = 1e-3;
        let u0 = Vec2::new(1.0, -2.0);
        let mut s = TriggerState::first_event(0, dt, u0, &p);
        assert_eq!(s.event_count, 1);
        assert_eq!(s.next_event_step(), 100);
        for k in 0..100 {
            assert_eq!(s.held_output(k as f64 * dt).unwrap(), u0);
        }
        assert!(matches!(s.held_output(0.1), Err(Error::Contract(_))));
        assert!(s.fire(50, u0, 1.0, &p).is_err());
        let u1 = Vec2::new(0.5, 0.5);
        s.fire(100, u1, 40.0, &p).unwrap();
        assert_eq!(s.held_output(0.1).unwrap(), u1);
        assert_eq!(e_u_diagnostic(&s.held_output(0.1).unwrap(), &u1), 0.0);
        assert_eq!(s.event_count, s.interval_log.len() + 1);
        assert!((s.interval_log[0] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn intervals_round_up_to_grid() {
        let p = TriggerParams { t_max: 10.0, ..params() };
        let dt = 1e-3;
        let mut s = TriggerState::first_event(0, dt, Vec2::zeros(), &p);
        // 0.5 / 1e6 is far below one step; the grid floor applies.
        s.fire(s.next_event_step(), Vec2::zeros(), 1e6, &p).unwrap();
        let at = s.last_event_step;
        assert_eq!(s.next_event_step() - at, 1);
        // 0.5 / 200 = 2.5 ms rounds up to 3 steps.
        s.fire(at + 1, Vec2::zeros(), 200.0, &p).unwrap();
        assert_eq!(s.next_event_step() - (at + 1), 3);
    }

    #[test]
    fn e_u_bound_holds_when_rate_is_respected() {
        // Ideal control drifting at exactly the held rate reaches the
        // threshold no earlier than the scheduled instant.
        let p = params();
        let dt = 1e-3;
        let u0 = Vec2::new(3.0, 0.0);
        let rate = 12.0;
        let mut s = TriggerState::first_event(0, dt, u0, &p);
        s.fire(s.next_event_step(), u0, rate, &p).unwrap();
        let start = s.last_event_step;
        for k in start..s.next_event_step() {
            let t = (k - start) as f64 * dt;
            let ideal = u0 + Vec2::new(0.6, 0.8) * (rate * t);
            assert!(e_u_diagnostic(&s.held_control, &ideal) <= p.threshold(&u0) + 1e-12);
        }
    }

    proptest! {
        #[test]
        fn interval_is_monotone_in_s_d(
            ux in -20.0f64..20.0, uy in -20.0f64..20.0, rate in 0.0f64..1e4,
            sd in 1e-4f64..5.0, extra in 0.0f64..5.0,
        ) {
            let p = TriggerParams { s_d: sd, ..params() };
            let q = TriggerParams { s_d: sd + extra, ..params() };
            let u = Vec2::new(ux, uy);
            prop_assert!(q.interval(&u, rate) >= p.interval(&u, rate));
            let i = p.interval(&u, rate);
            prop_assert!(i > 0.0 && i <= p.t_max);
        }
    }
}
