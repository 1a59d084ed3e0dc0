use std::ops::{Add, Mul};

/// One classical fourth-order Runge-Kutta step of `f(t, x)`.
pub(crate) fn rk4<S, F>(f: F, x: S, t: f64, dt: f64) -> S
where
    S: Copy + Add<Output = S> + Mul<f64, Output = S>,
    F: Fn(f64, S) -> S,
{
    let half = 0.5 * dt;
    let k1 = f(t, x);
    let k2 = f(t + half, x + k1 * half);
    let k3 = f(t + half, x + k2 * half);
    let k4 = f(t + dt, x + k3 * dt);
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}
