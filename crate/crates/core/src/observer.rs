//! Sampled-data Luenberger observer driven by noisy, zero-order-held
//! position samples.
//!
//! Between sample instants the innovation uses the latest held sample:
//!
//! ```text
//! p_hat' = v_hat + l1 * (sample - p_hat)
//! v_hat' = u + delta_hat + l2 * (sample - p_hat)
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::integrate::rk4;
use crate::plant::VehicleState;
use crate::{Error, Result, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementModel {
    pub sample_period: f64,
    pub noise_bound: f64,
    pub seed: u64,
}

impl MeasurementModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_period.is_finite() && self.sample_period > 0.0) {
            return Err(Error::config("observer.sample_period", "must be > 0"));
        }
        if !(self.noise_bound.is_finite() && self.noise_bound >= 0.0) {
            return Err(Error::config("observer.noise_bound", "must be >= 0"));
        }
        Ok(())
    }

    /// Whether `t` is a sample instant, within half an integration step.
    pub fn is_sample_instant(&self, t: f64, dt: f64) -> bool {
        let k = (t / self.sample_period).round();
        (t - k * self.sample_period).abs() <= 0.5 * dt
    }
}

/// A position sensor with its own deterministic noise stream.
#[derive(Debug, Clone)]
pub struct Sensor {
    model: MeasurementModel,
    rng: ChaCha8Rng,
}

impl Sensor {
    /// `stream` separates sensors sharing one seed.
    pub fn new(model: MeasurementModel, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
        rng.set_stream(stream);
        Sensor { model, rng }
    }

    pub fn model(&self) -> &MeasurementModel {
        &self.model
    }

    /// `p(t_k) + zeta`, with `zeta` uniform on `[-noise_bound, noise_bound]` per axis.
    pub fn sample(&mut self, true_position: &Vec2, _t_k: f64) -> Vec2 {
        let bound = self.model.noise_bound;
        if bound == 0.0 {
            return *true_position;
        }
        let noise = Vec2::new(
            self.rng.random_range(-bound..=bound),
            self.rng.random_range(-bound..=bound),
        );
        true_position + noise
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverGains {
    pub l1: f64,
    pub l2: f64,
}

impl ObserverGains {
    /// Both gains positive and the error polynomial `s^2 + l1 s + l2` Hurwitz.
    pub fn validate(&self) -> Result<()> {
        if !(self.l1.is_finite() && self.l1 > 0.0) {
            return Err(Error::config("observer.l1", "l1 must be > 0"));
        }
        if !(self.l2.is_finite() && self.l2 > 0.0) {
            return Err(Error::config("observer.l2", "l2 must be > 0"));
        }
        if self.error_poles().iter().any(|p| p.re >= 0.0) {
            return Err(Error::config("observer", "error dynamics are not Hurwitz"));
        }
        Ok(())
    }

    /// Roots of `s^2 + l1 s + l2`.
    pub fn error_poles(&self) -> [nalgebra::Complex<f64>; 2] {
        use nalgebra::Complex;
        let half = -0.5 * self.l1;
        let disc = 0.25 * self.l1 * self.l1 - self.l2;
        if disc >= 0.0 {
            let r = disc.sqrt();
            [Complex::new(half - r, 0.0), Complex::new(half + r, 0.0)]
        } else {
            let r = (-disc).sqrt();
            [Complex::new(half, -r), Complex::new(half, r)]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserverState {
    pub est_position: Vec2,
    pub est_velocity: Vec2,
    pub held_sample: Vec2,
    pub last_sample_time: f64,
}

impl ObserverState {
    /// Estimate with no sample held yet; the innovation is zero until [`hold`](Self::hold).
    pub fn new(est_position: Vec2, est_velocity: Vec2) -> Self {
        ObserverState {
            est_position,
            est_velocity,
            held_sample: est_position,
            last_sample_time: f64::NAN,
        }
    }

    pub fn hold(&mut self, sample: Vec2, t_k: f64) {
        self.held_sample = sample;
        self.last_sample_time = t_k;
    }

    pub fn estimate(&self) -> VehicleState {
        VehicleState::new(self.est_position, self.est_velocity)
    }

    fn with_estimate(&self, est: VehicleState) -> Self {
        ObserverState {
            est_position: est.position,
            est_velocity: est.velocity,
            ..*self
        }
    }
}

/// Time derivative of the estimate `(p_hat, v_hat)`.
pub fn observer_derivative(
    state: &ObserverState,
    gains: &ObserverGains,
    control: &Vec2,
    nn_estimate: &Vec2,
) -> VehicleState {
    let innovation = state.held_sample - state.est_position;
    VehicleState::new(
        state.est_velocity + innovation * gains.l1,
        control + nn_estimate + innovation * gains.l2,
    )
}

/// RK4 advance over one step with the held sample fixed.
pub fn observer_step(
    state: &ObserverState,
    gains: &ObserverGains,
    control: &Vec2,
    nn_estimate: &Vec2,
    dt: f64,
) -> Result<ObserverState> {
    if !(dt > 0.0) {
        return Err(Error::Argument(format!("dt must be positive, got {dt}")));
    }
    let f = |_t: f64, est: VehicleState| observer_derivative(&state.with_estimate(est), gains, control, nn_estimate);
    let next = rk4(f, state.estimate(), 0.0, dt);
    if !next.is_finite() {
        return Err(Error::numerical(state.last_sample_time, "observer estimate is not finite"));
    }
    Ok(state.with_estimate(next))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn noiseless_sample_is_exact() {
        let model = MeasurementModel {
            sample_period: 1e-3,
            noise_bound: 0.0,
            seed: 1,
        };
        let mut s = Sensor::new(model, 0);
        let p = Vec2::new(123.456, -7.0);
        assert_eq!(s.sample(&p, 0.0), p);
    }

    #[test]
    fn noise_stays_within_bound_and_repeats() {
        let model = MeasurementModel {
            sample_period: 1e-3,
            noise_bound: 0.05,
            seed: 42,
        };
        let draw = || {
            let mut s = Sensor::new(model, 3);
            (0..10_000).map(|k| s.sample(&Vec2::zeros(), k as f64 * 1e-3)).collect::<Vec<_>>()
        };
        let a = draw();
        assert!(a.iter().all(|z| z.x.abs() <= 0.05 && z.y.abs() <= 0.05));
        assert_eq!(a, draw());
        let mut other = Sensor::new(model, 4);
        assert_ne!(a[0], other.sample(&Vec2::zeros(), 0.0));
    }

    #[test]
    fn sample_instants() {
        let m = MeasurementModel {
            sample_period: 0.01,
            noise_bound: 0.0,
            seed: 0,
        };
        assert!(m.is_sample_instant(0.03, 1e-3));
        assert!(m.is_sample_instant(0.0304, 1e-3));
        assert!(!m.is_sample_instant(0.032, 1e-3));
    }

    #[test]
    fn gains_must_be_positive() {
        assert!(ObserverGains { l1: 10.0, l2: 25.0 }.validate().is_ok());
        assert!(ObserverGains { l1: 0.0, l2: 25.0 }.validate().is_err());
        assert!(ObserverGains { l1: 1.0, l2: -1.0 }.validate().is_err());
        let poles = ObserverGains { l1: 10.0, l2: 25.0 }.error_poles();
        assert!(poles.iter().all(|p| (p.re + 5.0).abs() < 1e-12 && p.im == 0.0));
    }

    #[test]
    fn matched_state_has_plant_derivative() {
        let mut s = ObserverState::new(Vec2::new(3.0, 1.0), Vec2::new(12.0, 0.5));
        s.hold(Vec2::new(3.0, 1.0), 0.0);
        let u = Vec2::new(0.4, -0.1);
        let delta = Vec2::new(-0.08, 0.02);
        let d = observer_derivative(&s, &ObserverGains { l1: 10.0, l2: 25.0 }, &u, &delta);
        assert_eq!(d.position, s.est_velocity);
        assert_eq!(d.velocity, u + delta);
    }

    #[test]
    fn zero_gains_integrate_open_loop() {
        let mut s = ObserverState::new(Vec2::new(0.0, 0.0), Vec2::new(1.0, 2.0));
        s.hold(Vec2::new(100.0, 100.0), 0.0);
        let gains = ObserverGains { l1: 0.0, l2: 0.0 };
        let a = Vec2::new(0.5, -1.0);
        let dt = 0.1;
        let n = observer_step(&s, &gains, &a, &Vec2::zeros(), dt).unwrap();
        assert!((n.est_velocity - (s.est_velocity + a * dt)).norm() < 1e-14);
        let expected = s.est_position + s.est_velocity * dt + a * (0.5 * dt * dt);
        assert!((n.est_position - expected).norm() < 1e-14);
        assert_eq!(n.held_sample, s.held_sample);
    }

    #[test]
    fn critically_damped_decay_matches_closed_form() {
        let gains = ObserverGains { l1: 2.0, l2: 1.0 };
        // p_hat(0) = 1 and p_hat'(0) = v_hat(0) - l1 p_hat(0) = 0.
        let mut s = ObserverState::new(Vec2::new(1.0, 1.0), Vec2::new(2.0, 2.0));
        s.hold(Vec2::zeros(), 0.0);
        let dt = 1e-3;
        let mut worst: f64 = 0.0;
        for k in 1..=20_000 {
            s = observer_step(&s, &gains, &Vec2::zeros(), &Vec2::zeros(), dt).unwrap();
            let t = k as f64 * dt;
            let exact = (1.0 + t) * (-t).exp();
            worst = worst.max((s.est_position.x - exact).abs());
        }
        assert!(worst < 1e-8, "sup error {worst}");
    }

    #[test]
    fn exact_model_keeps_zero_error() {
        // Continuous sampling of a parabola with the right model input.
        let gains = ObserverGains { l1: 10.0, l2: 25.0 };
        let a = Vec2::new(0.3, -0.2);
        let truth = |t: f64| (Vec2::new(1.0, 2.0) + Vec2::new(5.0, 0.0) * t + a * (0.5 * t * t), Vec2::new(5.0, 0.0) + a * t);
        let (p0, v0) = truth(0.0);
        let mut s = ObserverState::new(p0, v0);
        let dt = 1e-3;
        for k in 0..5000 {
            let t = k as f64 * dt;
            let f = |_t: f64, est: VehicleState| {
                let (p, _) = truth(t + _t);
                let mut st = s;
                st.hold(p, t);
                observer_derivative(&st.with_estimate(est), &gains, &a, &Vec2::zeros())
            };
            let next = rk4(f, s.estimate(), 0.0, dt);
            s = s.with_estimate(next);
        }
        let (p, v) = truth(5.0);
        assert!((s.est_position - p).norm() < 1e-9);
        assert!((s.est_velocity - v).norm() < 1e-9);
    }

    proptest! {
        #[test]
        fn step_commutes_with_axis_swap(
            px in -10.0f64..10.0, py in -10.0f64..10.0,
            vx in -5.0f64..5.0, vy in -5.0f64..5.0,
            sx in -10.0f64..10.0, sy in -10.0f64..10.0,
            ux in -3.0f64..3.0, uy in -3.0f64..3.0,
        ) {
            let gains = ObserverGains { l1: 10.0, l2: 25.0 };
            let swap = |v: Vec2| Vec2::new(v.y, v.x);
            let mut s = ObserverState::new(Vec2::new(px, py), Vec2::new(vx, vy));
            s.hold(Vec2::new(sx, sy), 0.0);
            let mut t = ObserverState::new(swap(s.est_position), swap(s.est_velocity));
            t.hold(swap(s.held_sample), 0.0);
            let u = Vec2::new(ux, uy);
            let a = observer_step(&s, &gains, &u, &Vec2::zeros(), 1e-3).unwrap();
            let b = observer_step(&t, &gains, &swap(u), &Vec2::zeros(), 1e-3).unwrap();
            prop_assert_eq!(swap(a.est_position), b.est_position);
            prop_assert_eq!(swap(a.est_velocity), b.est_velocity);
        }
    }
}
