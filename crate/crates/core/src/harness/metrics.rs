use crate::config::{Mode, ScenarioConfig};
use crate::controller::ControllerGains;
use crate::harness::SimRecord;
use crate::topology::{build_matrices, spectral_check};
use crate::trigger::min_interval_bound;
use crate::{Error, Result};

/// Start of the window used for the steady-state estimation error.
pub const ESTIMATION_WINDOW_START: f64 = 10.0;

/// Least-squares fit of `E(t) ≈ floor + A exp(-alpha t)` on the transient window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub alpha_hat: f64,
    /// `alpha_hat * floor`, the residual level of the envelope.
    pub beta_hat: f64,
    pub floor: f64,
    /// Grid points that entered the regression.
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub steps: usize,
    pub event_counts: Vec<usize>,
    /// `100 * events / steps` per vehicle.
    pub triggering_fraction: Vec<f64>,
    /// `100 - triggering_fraction`.
    pub reduction: Vec<f64>,
    pub min_pairwise_distance: f64,
    /// Followers only, in vehicle order.
    pub spacing_rms_after_settle: Vec<f64>,
    /// Followers only, in vehicle order.
    pub spacing_max_error_after_settle: Vec<f64>,
    /// Worst follower; infinite if some follower never settles.
    pub lateral_convergence_time: f64,
    pub lateral_convergence_times: Vec<f64>,
    pub interval_min: f64,
    pub interval_mean: f64,
    pub interval_max: f64,
    pub interval_min_per_vehicle: Vec<f64>,
    pub decay_fit: DecayFit,
    /// Composite error `sum |z1|^2 + |z2|^2` at the final grid point.
    pub composite_error_final: f64,
    /// Empirical Lipschitz rate of the acceleration, per vehicle.
    pub gamma_hat: Vec<f64>,
    pub v_max_hat: Vec<f64>,
    /// Sup of the ideal-control rate, per vehicle.
    pub upsilon_hat: Vec<f64>,
    /// Sup over all vehicles of `|(p - p_hat, v - v_hat)|` after
    /// [`ESTIMATION_WINDOW_START`].
    pub estimation_error_tail: f64,
}

/// Composite tracking error at grid step `n`, summed over vehicles.
pub fn composite_error(record: &SimRecord, n: usize) -> f64 {
    record
        .vehicles
        .iter()
        .map(|v| {
            let s = &v.samples[n];
            s.z1.norm_squared() + s.z2.norm_squared()
        })
        .sum()
}

pub fn compute_metrics(record: &SimRecord, config: &ScenarioConfig) -> Result<Metrics> {
    if record.steps == 0 || record.vehicles.is_empty() || record.times.len() != record.steps + 1 {
        return Err(Error::Argument("empty or incomplete simulation record".into()));
    }
    let dt = record.dt;
    let steps = record.steps;
    let n = record.vehicle_count();
    let m = &config.metrics;
    let index_at = |t: f64| ((t / dt).round() as usize).min(steps);

    let event_counts: Vec<usize> = record.vehicles.iter().map(|v| v.event_count).collect();
    let triggering_fraction = event_counts.iter().map(|&e| 100.0 * e as f64 / steps as f64).collect();
    let reduction = event_counts
        .iter()
        .map(|&e| 100.0 * (steps - e.min(steps)) as f64 / steps as f64)
        .collect();

    let mut min_pairwise_distance = f64::INFINITY;
    for k in 0..=steps {
        for i in 0..n {
            for j in i + 1..n {
                let d = (record.vehicles[i].samples[k].position - record.vehicles[j].samples[k].position).norm();
                min_pairwise_distance = min_pairwise_distance.min(d);
            }
        }
    }

    let settle = index_at(m.settle_time);
    let mut spacing_rms_after_settle = Vec::new();
    let mut spacing_max_error_after_settle = Vec::new();
    for i in 1..n {
        let gap = config.gap(i);
        let errs: Vec<f64> = (settle..=steps)
            .map(|k| {
                let ahead = record.vehicles[i - 1].samples[k].position.x;
                let own = record.vehicles[i].samples[k].position.x;
                ahead - own - gap
            })
            .collect();
        let rms = (errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64).sqrt();
        spacing_rms_after_settle.push(rms);
        spacing_max_error_after_settle.push(errs.iter().fold(0.0f64, |a, e| a.max(e.abs())));
    }

    let target = config.leader.lateral_position;
    let lateral_convergence_times: Vec<f64> = (1..n)
        .map(|i| {
            let s = &record.vehicles[i].samples;
            match (0..=steps).rev().find(|&k| (s[k].position.y - target).abs() >= m.lateral_tolerance) {
                None => 0.0,
                Some(k) if k == steps => f64::INFINITY,
                Some(k) => record.times[k + 1],
            }
        })
        .collect();
    let lateral_convergence_time = lateral_convergence_times.iter().copied().fold(0.0, f64::max);

    let all_intervals: Vec<f64> = record.vehicles.iter().flat_map(|v| v.intervals.iter().copied()).collect();
    let (interval_min, interval_mean, interval_max) = if all_intervals.is_empty() {
        (f64::NAN, f64::NAN, f64::NAN)
    } else {
        (
            all_intervals.iter().copied().fold(f64::INFINITY, f64::min),
            all_intervals.iter().sum::<f64>() / all_intervals.len() as f64,
            all_intervals.iter().copied().fold(0.0, f64::max),
        )
    };
    let interval_min_per_vehicle = record
        .vehicles
        .iter()
        .map(|v| v.intervals.iter().copied().fold(f64::INFINITY, f64::min))
        .collect();

    let decay_fit = fit_decay(record, index_at(m.transient_window));
    let composite_error_final = composite_error(record, steps);

    let mut gamma_hat = Vec::with_capacity(n);
    let mut v_max_hat = Vec::with_capacity(n);
    let mut upsilon_hat = Vec::with_capacity(n);
    for v in &record.vehicles {
        // An event at k+1 makes the held control jump; that jump is the
        // controller's doing, not a property of the vehicle dynamics.
        let mut event_next = vec![false; steps + 1];
        if record.mode == Mode::SelfTriggered {
            for &e in &v.event_steps {
                event_next[e] = true;
            }
        }
        let g = (0..steps)
            .filter(|&k| !event_next[k + 1])
            .map(|k| (v.samples[k + 1].acceleration - v.samples[k].acceleration).norm() / dt)
            .fold(0.0, f64::max);
        gamma_hat.push(g);
        v_max_hat.push(v.samples.iter().map(|s| s.velocity.norm()).fold(0.0, f64::max));
        upsilon_hat.push(v.samples.iter().map(|s| s.control_rate).fold(0.0, f64::max));
    }

    let tail = index_at(ESTIMATION_WINDOW_START);
    let estimation_error_tail = record
        .vehicles
        .iter()
        .flat_map(|v| v.samples[tail..].iter())
        .map(|s| {
            let ep = s.position - s.est_position;
            let ev = s.velocity - s.est_velocity;
            (ep.norm_squared() + ev.norm_squared()).sqrt()
        })
        .fold(0.0, f64::max);

    Ok(Metrics {
        steps,
        event_counts,
        triggering_fraction,
        reduction,
        min_pairwise_distance,
        spacing_rms_after_settle,
        spacing_max_error_after_settle,
        lateral_convergence_time,
        lateral_convergence_times,
        interval_min,
        interval_mean,
        interval_max,
        interval_min_per_vehicle,
        decay_fit,
        composite_error_final,
        gamma_hat,
        v_max_hat,
        upsilon_hat,
        estimation_error_tail,
    })
}

/// The envelope is the running max of the composite error looking forward
/// to the end of the window; its floor is the envelope over the last fifth.
/// Points where the envelope sits more than one floor above the floor enter
/// a linear regression of `ln(env - floor)` on `t`.
fn fit_decay(record: &SimRecord, window_end: usize) -> DecayFit {
    let end = window_end.max(1);
    let mut env = vec![0.0; end + 1];
    let mut running = 0.0f64;
    for k in (0..=end).rev() {
        running = running.max(composite_error(record, k));
        env[k] = running;
    }
    let floor_start = (end as f64 * 0.8) as usize;
    let floor = env[floor_start];
    let (mut sx, mut sy, mut sxx, mut sxy, mut count) = (0.0, 0.0, 0.0, 0.0, 0usize);
    for (k, &e) in env.iter().enumerate().take(floor_start) {
        let excess = e - floor;
        if excess > floor && excess > 0.0 {
            let x = record.times[k];
            let y = excess.ln();
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            count += 1;
        }
    }
    let alpha_hat = if count >= 2 {
        let c = count as f64;
        let denom = c * sxx - sx * sx;
        -(c * sxy - sx * sy) / denom
    } else {
        f64::NAN
    };
    DecayFit {
        alpha_hat,
        beta_hat: alpha_hat * floor,
        floor,
        points: count,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl AssumptionCheck {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        AssumptionCheck {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Post-run checks of the standing assumptions against empirical estimates.
pub fn assumption_report(metrics: &Metrics, config: &ScenarioConfig) -> Vec<AssumptionCheck> {
    let mut out = Vec::new();
    let ceiling = config.metrics.v_max_ceiling;
    let t_max = config.trigger.t_max;
    for (i, &v) in metrics.v_max_hat.iter().enumerate() {
        out.push(AssumptionCheck::new(
            format!("vehicle {} velocity bound", i + 1),
            v.is_finite() && v < ceiling,
            format!("v_max_hat = {v:.4} m/s, ceiling {ceiling} m/s"),
        ));
    }
    for (i, &g) in metrics.gamma_hat.iter().enumerate() {
        out.push(AssumptionCheck::new(
            format!("vehicle {} t_max < 1/gamma_hat", i + 1),
            t_max * g < 1.0,
            format!("t_max * gamma_hat = {:.4}", t_max * g),
        ));
    }
    for (i, &u) in metrics.upsilon_hat.iter().enumerate() {
        let realized = metrics.interval_min_per_vehicle[i];
        let (passed, detail) = match min_interval_bound(&config.trigger, u) {
            Ok(tau) => (
                realized >= 0.9 * tau,
                format!("Upsilon_hat = {u:.4}, tau = {tau:.6} s, min interval = {realized:.6} s"),
            ),
            Err(e) => (false, e.to_string()),
        };
        out.push(AssumptionCheck::new(format!("vehicle {} Zeno bound", i + 1), passed, detail));
    }
    out
}

/// Checks that need no simulation: graph, observer and nominal loop stability.
pub fn preflight_report(config: &ScenarioConfig) -> Vec<AssumptionCheck> {
    let mut out = Vec::new();
    match config.topology() {
        Ok(t) => match spectral_check(&build_matrices(&t)) {
            Ok(lambda) => out.push(AssumptionCheck::new(
                "spectral_check",
                lambda > 0.0,
                format!("min real eigenvalue of H = {lambda:.6}"),
            )),
            Err(e) => out.push(AssumptionCheck::new("spectral_check", false, e.to_string())),
        },
        Err(e) => out.push(AssumptionCheck::new("spectral_check", false, e.to_string())),
    }
    let poles = config.observer_gains().error_poles();
    out.push(AssumptionCheck::new(
        "observer error poles",
        poles.iter().all(|p| p.re < 0.0),
        format!("{:.4}, {:.4}", poles[0], poles[1]),
    ));
    let gains: &ControllerGains = &config.controller;
    for (axis, name) in ["x", "y"].iter().enumerate() {
        let m = gains.nominal_error_matrix(axis);
        let stable = m.trace() < 0.0 && m.determinant() > 0.0;
        out.push(AssumptionCheck::new(
            format!("nominal error loop ({name})"),
            stable,
            format!("trace {:.3}, det {:.3}", m.trace(), m.determinant()),
        ));
    }
    let sample_ok = config.observer.sample_period >= config.scenario.dt;
    out.push(AssumptionCheck::new(
        "sample period",
        sample_ok,
        format!("T = {} s, dt = {} s", config.observer.sample_period, config.scenario.dt),
    ));
    out
}
