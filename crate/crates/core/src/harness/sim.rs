use crate::config::{Compensation, Mode, ScenarioConfig};
use crate::controller::{self, AdaptiveState, DesiredTrajectory};
use crate::observer::{self, ObserverGains, ObserverState, Sensor};
use crate::plant::{self, VehicleParams, VehicleState};
use crate::topology::{build_matrices, spectral_check};
use crate::trigger::{e_u_diagnostic, TriggerParams, TriggerState};
use crate::{Error, Result, Vec2};

/// One vehicle at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSample {
    pub position: Vec2,
    pub velocity: Vec2,
    pub est_position: Vec2,
    pub est_velocity: Vec2,
    pub held_control: Vec2,
    pub ideal_control: Vec2,
    pub z1: Vec2,
    pub z2: Vec2,
    pub e_u: f64,
    /// True acceleration under the held control.
    pub acceleration: Vec2,
    /// Finite-difference rate of the ideal control (0 at the first step).
    pub control_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VehicleSeries {
    pub samples: Vec<StepSample>,
    /// Grid steps at which the held control was refreshed.
    pub event_steps: Vec<usize>,
    /// Rate estimate held at each event.
    pub event_rates: Vec<f64>,
    pub event_count: usize,
    /// Realized inter-event intervals in seconds.
    pub intervals: Vec<f64>,
    pub final_theta_hat: Vec2,
    pub final_weight_norm: f64,
}

/// Full output of [`run`]. Every series has `steps + 1` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRecord {
    pub dt: f64,
    pub steps: usize,
    pub mode: Mode,
    pub times: Vec<f64>,
    pub vehicles: Vec<VehicleSeries>,
    /// Control updates a continuously updated loop would make over the horizon.
    pub continuous_updates: usize,
}

impl SimRecord {
    pub fn vehicle_count(&self) -> usize {
        self.vehicles.len()
    }
}

/// Reference for follower `index` from its estimate of the predecessor.
///
/// Position follows the predecessor estimate minus the gap. The first
/// follower takes its rates from the leader profile; later followers take
/// the velocity from the predecessor estimate and the leader profile's
/// acceleration, which every vehicle shares once spacing is constant.
pub fn desired_trajectory(
    index: usize,
    config: &ScenarioConfig,
    predecessor_estimate: &VehicleState,
    t: f64,
) -> DesiredTrajectory {
    let gap = config.gap(index);
    let leader = &config.leader;
    let v = if index == 1 {
        leader.velocity(t)
    } else {
        predecessor_estimate.velocity.x
    };
    DesiredTrajectory {
        q: Vec2::new(predecessor_estimate.position.x - gap, leader.lateral_position),
        q_dot: Vec2::new(v, 0.0),
        q_ddot: Vec2::new(leader.acceleration(t), 0.0),
    }
}

pub fn leader_velocity(profile: &crate::harness::LeaderProfile, t: f64) -> f64 {
    profile.velocity(t)
}

struct Agent {
    params: VehicleParams,
    plant: VehicleState,
    ego: ObserverState,
    ego_sensor: Sensor,
    /// Observer of the predecessor's state; followers only.
    pred: Option<(ObserverState, Sensor)>,
    adaptive: AdaptiveState,
    trigger: Option<TriggerState>,
    prev_ideal: Option<Vec2>,
    series: VehicleSeries,
}

/// Check the preconditions of [`run`] that go beyond config validation.
pub fn preflight(config: &ScenarioConfig) -> Result<()> {
    config.validate()?;
    let topology = config.topology()?;
    let lambda = spectral_check(&build_matrices(&topology))?;
    if lambda <= 0.0 {
        return Err(Error::config(
            "topology",
            format!("spectral_check failed: min real eigenvalue of H is {lambda}, not every follower is reachable from the leader"),
        ));
    }
    for f in 0..topology.n_followers() {
        let informants: Vec<usize> = topology.informants(f).collect();
        let ok = if f == 0 {
            topology.pin(0) != 0 && informants.is_empty()
        } else {
            topology.pin(f) == 0 && informants == [f - 1]
        };
        if !ok {
            return Err(Error::config(
                "topology",
                format!("follower {} must listen only to its immediate predecessor", f + 2),
            ));
        }
    }
    Ok(())
}

fn locate(err: Error, vehicle: usize, t: f64) -> Error {
    match err {
        Error::Numerical { what, .. } => Error::Numerical {
            vehicle: Some(vehicle),
            time: t,
            what,
        },
        other => other,
    }
}

/// Simulate the configured scenario.
///
/// Per grid step `n`, in vehicle order: refresh held measurements at sample
/// instants; compute errors, the ideal control and the compensation from the
/// current estimates; fire the trigger if due and log `e_u`; take one Euler
/// step of the adaptation laws. Then every plant and observer advances one
/// RK4 step with the held control. The last grid point is recorded without
/// an update.
pub fn run(config: &ScenarioConfig) -> Result<SimRecord> {
    preflight(config)?;
    let dt = config.scenario.dt;
    let steps = config.step_count();
    let mode = config.scenario.mode;
    let compensation = config.scenario.compensation;
    let sample_every = (config.observer.sample_period / dt).round() as usize;
    let gains = config.controller;
    let obs_gains: ObserverGains = config.observer_gains();
    let trig: TriggerParams = config.trigger;
    let model = config.measurement_model();
    let init = config.initial();
    let params = config.vehicle_params()?;
    let n = params.len();
    let leader_x0 = init.positions[0].x;

    let mut agents = Vec::with_capacity(n);
    for i in 0..n {
        let pred = (i > 0).then(|| {
            (
                ObserverState::new(init.est_positions[i - 1], init.est_velocities[i - 1]),
                Sensor::new(model, 2 * i as u64 + 1),
            )
        });
        agents.push(Agent {
            params: params[i],
            plant: VehicleState::new(init.positions[i], init.velocities[i]),
            ego: ObserverState::new(init.est_positions[i], init.est_velocities[i]),
            ego_sensor: Sensor::new(model, 2 * i as u64),
            pred,
            adaptive: AdaptiveState::new(&config.rbf, &gains)?,
            trigger: None,
            prev_ideal: None,
            series: VehicleSeries {
                samples: Vec::with_capacity(steps + 1),
                ..VehicleSeries::default()
            },
        });
    }

    let mut held = vec![Vec2::zeros(); n];
    let mut comp = vec![Vec2::zeros(); n];
    let mut times = Vec::with_capacity(steps + 1);

    for step in 0..=steps {
        let t = step as f64 * dt;
        times.push(t);

        if step % sample_every == 0 {
            for i in 0..n {
                let (head, tail) = agents.split_at_mut(i);
                let a = &mut tail[0];
                let y = a.ego_sensor.sample(&a.plant.position, t);
                a.ego.hold(y, t);
                if let Some((obs, sensor)) = a.pred.as_mut() {
                    let y = sensor.sample(&head[i - 1].plant.position, t);
                    obs.hold(y, t);
                }
            }
        }

        for i in 0..n {
            let desired = if i == 0 {
                config.leader.trajectory(leader_x0, t)
            } else {
                let (obs, _) = agents[i].pred.as_ref().expect("follower has a predecessor observer");
                desired_trajectory(i, config, &obs.estimate(), t)
            };
            let a = &mut agents[i];
            let (errors, _alpha, alpha_dot) =
                controller::backstep(&a.ego.est_position, &a.ego.est_velocity, &desired, &gains);
            let basis = a.adaptive.networks.basis(&a.ego.est_velocity);
            comp[i] = match compensation {
                Compensation::Adaptive => a.adaptive.networks.predict(&basis),
                Compensation::Exact => a.params.uncertainty(&a.plant.velocity, t),
            };
            let u = controller::ideal_control(&errors, &a.adaptive.theta_hat, &comp[i], &desired, &alpha_dot, &gains)
                .map_err(|e| locate(e, i, t))?;
            let rate = a.prev_ideal.map_or(0.0, |p| controller::control_rate(&p, &u, dt));

            if step < steps {
                let k = step as u64;
                match a.trigger.as_mut() {
                    None => {
                        a.trigger = Some(match mode {
                            Mode::SelfTriggered => TriggerState::first_event(k, dt, u, &trig),
                            Mode::Continuous => TriggerState::first_update(k, dt, u),
                        });
                        a.series.event_steps.push(step);
                        a.series.event_rates.push(0.0);
                    }
                    Some(tr) if tr.is_due(k) => {
                        match mode {
                            Mode::SelfTriggered => tr.fire(k, u, rate, &trig)?,
                            Mode::Continuous => tr.fire_every_step(k, u, rate)?,
                        }
                        a.series.event_steps.push(step);
                        a.series.event_rates.push(rate);
                    }
                    Some(_) => {}
                }
                held[i] = a.trigger.as_ref().expect("trigger initialized").held_output(t)?;
                if compensation == Compensation::Adaptive {
                    controller::adapt_robust(&mut a.adaptive, &errors.z2, &basis, &gains, dt)
                        .map_err(|e| locate(e, i, t))?;
                }
            }

            let accel = plant::derivative(&a.params, &a.plant, &(held[i] * a.params.mass), t).velocity;
            a.series.samples.push(StepSample {
                position: a.plant.position,
                velocity: a.plant.velocity,
                est_position: a.ego.est_position,
                est_velocity: a.ego.est_velocity,
                held_control: held[i],
                ideal_control: u,
                z1: errors.z1,
                z2: errors.z2,
                e_u: e_u_diagnostic(&held[i], &u),
                acceleration: accel,
                control_rate: rate,
            });
            a.prev_ideal = Some(u);
        }

        if step == steps {
            break;
        }

        for i in 0..n {
            let a = &mut agents[i];
            let force = held[i] * a.params.mass;
            a.plant = plant::step(&a.params, &a.plant, &force, t, dt).map_err(|e| locate(e, i, t + dt))?;
            a.ego = observer::observer_step(&a.ego, &obs_gains, &held[i], &comp[i], dt)
                .map_err(|e| locate(e, i, t + dt))?;
            if let Some((obs, _)) = a.pred.as_mut() {
                // The predecessor's uncertainty is unknown to the follower
                // unless the oracle compensation is active.
                let nn = match compensation {
                    Compensation::Adaptive => Vec2::zeros(),
                    Compensation::Exact => comp[i - 1],
                };
                *obs = observer::observer_step(obs, &obs_gains, &held[i - 1], &nn, dt)
                    .map_err(|e| locate(e, i, t + dt))?;
            }
        }
    }

    let vehicles = agents
        .into_iter()
        .map(|a| {
            let tr = a.trigger.expect("at least one step ran");
            let mut s = a.series;
            debug_assert_eq!(s.event_steps.len(), tr.event_count);
            s.event_count = tr.event_count;
            s.intervals = tr.interval_log;
            s.final_theta_hat = a.adaptive.theta_hat;
            s.final_weight_norm = a.adaptive.networks.weight_norm();
            s
        })
        .collect();

    Ok(SimRecord {
        dt,
        steps,
        mode,
        times,
        vehicles,
        continuous_updates: steps,
    })
}
