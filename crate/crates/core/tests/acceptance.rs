//! Acceptance criteria 1 to 11. Each test writes one PASS/FAIL line to
//! stderr (uncaptured) before asserting.

use std::collections::VecDeque;
use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use platoon_core::config::{Compensation, Mode, ScenarioKind};
use platoon_core::harness::{compute_metrics, run, Metrics, SimRecord};
use platoon_core::observer::{observer_step, ObserverGains, ObserverState};
use platoon_core::output::{emit, RunManifest};
use platoon_core::plant::{step, DisturbanceSpec, VehicleParams, VehicleState};
use platoon_core::rbf::{RbfModel, RbfParams};
use platoon_core::topology::{build_matrices, eigenvalues, spectral_check, Topology};
use platoon_core::{ScenarioConfig, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEPS_50S: usize = 50_000;
const MIN_REDUCTION_PCT: f64 = 10.0;
const RUNTIME_LIMIT: Duration = Duration::from_secs(10);
const ZENO_FRACTION: f64 = 0.9;
const SPACING_TOL: f64 = 0.5;
const LATERAL_TOL: f64 = 0.05;
const LATERAL_DEADLINE: f64 = 15.0;
const SAFETY_DISTANCE: f64 = 5.0;
const OBSERVER_CLOSED_FORM_TOL: f64 = 1e-8;
const OBSERVER_FULL_LOOP_TOL: f64 = 1e-3;
const PLANT_TOL: f64 = 1e-9;
const MIN_ORDER: f64 = 3.9;
const RBF_TOL: f64 = 1e-9;
const LEAKAGE_STEPS: usize = 1_000_000;
const EIGEN_TOL: f64 = 1e-9;
const RANDOM_GRAPHS: usize = 100;
const FLOOR_MARGIN: f64 = 1.2;

fn report(criterion: u32, pass: bool, detail: &str) {
    let line = format!(
        "acceptance criterion {criterion:>2}: {} ({detail})\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
}

struct Run {
    config: ScenarioConfig,
    record: SimRecord,
    metrics: Metrics,
    elapsed: Duration,
}

fn simulate(config: ScenarioConfig) -> Run {
    let start = Instant::now();
    let record = run(&config).expect("simulation completes");
    let elapsed = start.elapsed();
    let metrics = compute_metrics(&record, &config).expect("metrics");
    Run {
        config,
        record,
        metrics,
        elapsed,
    }
}

fn linear() -> &'static Run {
    static R: OnceLock<Run> = OnceLock::new();
    R.get_or_init(|| simulate(ScenarioConfig::default_config()))
}

fn queue() -> &'static Run {
    static R: OnceLock<Run> = OnceLock::new();
    R.get_or_init(|| {
        let mut c = ScenarioConfig::default_config();
        c.scenario.kind = ScenarioKind::LinearQueue;
        simulate(c)
    })
}

fn continuous() -> &'static Run {
    static R: OnceLock<Run> = OnceLock::new();
    R.get_or_init(|| {
        let mut c = ScenarioConfig::default_config();
        c.scenario.mode = Mode::Continuous;
        simulate(c)
    })
}

fn noiseless(compensation: Compensation) -> Run {
    let mut c = ScenarioConfig::default_config();
    c.observer.noise_bound = 0.0;
    c.scenario.compensation = compensation;
    simulate(c)
}

#[test]
fn criterion_01_communication_reduction() {
    let st = linear();
    let ct = continuous();
    let continuous_counts = &ct.metrics.event_counts;
    let below = st
        .metrics
        .event_counts
        .iter()
        .zip(continuous_counts)
        .all(|(e, c)| e < c);
    let all_continuous = continuous_counts.iter().all(|&c| c == STEPS_50S);
    let best = st.metrics.reduction.iter().copied().fold(0.0, f64::max);
    let pass = below && all_continuous && best >= MIN_REDUCTION_PCT && st.elapsed < RUNTIME_LIMIT;
    report(
        1,
        pass,
        &format!(
            "events {:?} vs continuous {:?}, best reduction {best:.2}%, run time {:.2?}",
            st.metrics.event_counts, continuous_counts, st.elapsed
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_02_zeno_exclusion() {
    let runs = [linear(), queue(), continuous()];
    let mut pass = true;
    let mut detail = Vec::new();
    for r in runs {
        let dt = r.record.dt;
        let s_d = r.config.trigger.s_d;
        for (i, v) in r.record.vehicles.iter().enumerate() {
            let min = v.intervals.iter().copied().fold(f64::INFINITY, f64::min);
            let upsilon = r.metrics.upsilon_hat[i];
            let tau = s_d / upsilon;
            pass &= min >= dt && min >= ZENO_FRACTION * tau;
        }
        detail.push(format!(
            "{:?}/{:?}: min interval {:.4} s",
            r.config.scenario.kind, r.config.scenario.mode, r.metrics.interval_min
        ));
    }
    report(2, pass, &detail.join("; "));
    assert!(pass);
}

#[test]
fn criterion_03_hold_law_exactness() {
    let r = linear();
    let p = r.config.trigger;
    let mut zero_at_events = true;
    let mut bound_ok = true;
    let mut qualifying = 0usize;
    let mut checked = 0usize;
    for v in &r.record.vehicles {
        for (j, &e) in v.event_steps.iter().enumerate() {
            zero_at_events &= v.samples[e].e_u == 0.0;
            let end = v.event_steps.get(j + 1).copied().unwrap_or(r.record.steps);
            let held_rate = v.event_rates[j];
            let respected = (e + 1..end).all(|k| v.samples[k].control_rate <= held_rate);
            checked += 1;
            if respected {
                qualifying += 1;
                let u_k = v.samples[e].held_control;
                let threshold = p.threshold(&u_k);
                bound_ok &= (e..end).all(|k| v.samples[k].e_u <= threshold * (1.0 + 1e-12));
            }
        }
    }
    let pass = zero_at_events && bound_ok;
    report(
        3,
        pass,
        &format!(
            "e_u = 0 at all {checked} events: {zero_at_events}; bound held on all {qualifying} rate-respecting intervals: {bound_ok}"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_04_tracking() {
    let m = &linear().metrics;
    let spacing = m.spacing_max_error_after_settle.iter().copied().fold(0.0, f64::max);
    let pass = spacing < SPACING_TOL && m.lateral_convergence_time <= LATERAL_DEADLINE;
    report(
        4,
        pass,
        &format!(
            "max |spacing error| over [40, 50] s = {spacing:.4} m; lateral within {LATERAL_TOL} m after {:.3} s",
            m.lateral_convergence_time
        ),
    );
    assert!(linear().config.metrics.lateral_tolerance == LATERAL_TOL);
    assert!(pass);
}

#[test]
fn criterion_05_safety() {
    let a = linear().metrics.min_pairwise_distance;
    let b = queue().metrics.min_pairwise_distance;
    let pass = a > SAFETY_DISTANCE && b > SAFETY_DISTANCE;
    report(5, pass, &format!("min distance linear {a:.4} m, queue {b:.4} m"));
    assert!(pass);
}

#[test]
fn criterion_06_observer() {
    // Closed form: gains (2, 1), stationary target at the origin, estimate
    // starting at 1 with zero initial slope decays as (1 + t) exp(-t).
    let gains = ObserverGains { l1: 2.0, l2: 1.0 };
    let mut s = ObserverState::new(Vec2::new(1.0, 1.0), Vec2::new(2.0, 2.0));
    s.hold(Vec2::zeros(), 0.0);
    let dt = 1e-3;
    let mut sup: f64 = 0.0;
    for k in 1..=20_000 {
        s = observer_step(&s, &gains, &Vec2::zeros(), &Vec2::zeros(), dt).unwrap();
        let t = k as f64 * dt;
        let exact = (1.0 + t) * (-t).exp();
        sup = sup.max((s.est_position.x - exact).abs()).max((s.est_position.y - exact).abs());
    }
    let closed_form = sup < OBSERVER_CLOSED_FORM_TOL;

    let adaptive = noiseless(Compensation::Adaptive);
    let exact = noiseless(Compensation::Exact);
    let full_loop = adaptive.metrics.estimation_error_tail < OBSERVER_FULL_LOOP_TOL;
    let pass = closed_form && full_loop;
    report(
        6,
        pass,
        &format!(
            "closed-form sup error {sup:.2e}; noiseless full-loop error after 10 s {:.3e} \
             (exact compensation {:.3e}, limit {OBSERVER_FULL_LOOP_TOL:.0e})",
            adaptive.metrics.estimation_error_tail, exact.metrics.estimation_error_tail
        ),
    );
    assert!(closed_form, "closed-form observer error {sup}");
    assert!(full_loop, "noiseless full-loop estimation error {}", adaptive.metrics.estimation_error_tail);
}

/// Constant force against linear resistance `c v`:
/// `v = F/c + (v0 - F/c) e^{-ct/m}`, `p = p0 + (F/c) t + (v0 - F/c)(m/c)(1 - e^{-ct/m})`.
fn linear_drag_exact(m: f64, c: f64, f: &Vec2, p0: &Vec2, v0: &Vec2, t: f64) -> VehicleState {
    let v_inf = f / c;
    let decay = (-c * t / m).exp();
    VehicleState::new(
        p0 + v_inf * t + (v0 - v_inf) * (m / c) * (1.0 - decay),
        v_inf + (v0 - v_inf) * decay,
    )
}

fn integrate(params: &VehicleParams, force: &Vec2, x0: VehicleState, dt: f64, steps: usize) -> VehicleState {
    let mut x = x0;
    for k in 0..steps {
        x = step(params, &x, force, k as f64 * dt, dt).unwrap();
    }
    x
}

#[test]
fn criterion_07_plant() {
    let params = VehicleParams {
        mass: 1800.0,
        drag_coeff: 0.0,
        rolling_coeff: 10.0,
        disturbance: DisturbanceSpec::none(),
    };
    let force = Vec2::new(500.0, -200.0);
    let x0 = VehicleState::new(Vec2::new(0.0, 5.4), Vec2::new(12.0, 1.0));
    let dt = 1e-3;
    let mut x = x0;
    let mut sup: f64 = 0.0;
    for k in 0..STEPS_50S {
        x = step(&params, &x, &force, k as f64 * dt, dt).unwrap();
        let e = linear_drag_exact(params.mass, params.rolling_coeff, &force, &x0.position, &x0.velocity, (k + 1) as f64 * dt);
        sup = sup
            .max((x.position - e.position).amax())
            .max((x.velocity - e.velocity).amax());
    }

    let stiff = VehicleParams {
        mass: 1.0,
        rolling_coeff: 2.0,
        ..params
    };
    let f = Vec2::new(1.0, 0.5);
    let y0 = VehicleState::new(Vec2::zeros(), Vec2::new(3.0, -1.0));
    let horizon = 5.0;
    let exact = linear_drag_exact(1.0, 2.0, &f, &y0.position, &y0.velocity, horizon);
    let errors: Vec<f64> = [50usize, 100, 200, 400]
        .iter()
        .map(|&n| {
            let y = integrate(&stiff, &f, y0, horizon / n as f64, n);
            (y.position - exact.position).amax().max((y.velocity - exact.velocity).amax())
        })
        .collect();
    let order = errors
        .windows(2)
        .map(|w| (w[0] / w[1]).log2())
        .fold(f64::INFINITY, f64::min);
    let pass = sup < PLANT_TOL && order >= MIN_ORDER;
    report(7, pass, &format!("sup error over 50 s {sup:.2e}; observed order {order:.3}"));
    assert!(pass);
}

#[test]
fn criterion_08_rbf() {
    let params = RbfParams {
        count: 5,
        center_min: -12.0,
        center_max: 12.0,
        width: 2.5,
        leakage: 0.008,
        assumed_error_bound: 0.0,
    };
    let centers = [-12.0, -6.0, 0.0, 6.0, 12.0];
    let xs: Vec<f64> = (0..=48).map(|k| -12.0 + 0.5 * k as f64).collect();
    let phi = DMatrix::from_fn(xs.len(), centers.len(), |i, k| {
        let d = xs[i] - centers[k];
        (-(d * d) / (params.width * params.width)).exp()
    });
    let y = DVector::from_iterator(xs.len(), xs.iter().map(|x| x.sin()));
    let normal = phi.transpose() * &phi;
    let w = normal.lu().solve(&(phi.transpose() * &y)).expect("normal equations solvable");
    let fitted = &phi * &w;
    let mut model = RbfModel::scalar(&params, 8.0).unwrap();
    model.set_weights(w.as_slice()).unwrap();
    let fit_err = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| (model.predict(&[x])[0] - fitted[i]).abs())
        .fold(0.0, f64::max);

    // Leaky adaptation: each weight stays within max(|W0|, M / leakage) when
    // |modulation| <= M, since every basis value lies in (0, 1].
    let modulation_bound = 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut leaky = RbfModel::scalar(&params, 8.0).unwrap();
    let w0 = [300.0, -50.0, 0.0, 10.0, -400.0];
    leaky.set_weights(&w0).unwrap();
    let mut bounded = true;
    for _ in 0..LEAKAGE_STEPS {
        let z = rng.random_range(-30.0..30.0);
        let m = rng.random_range(-modulation_bound..=modulation_bound);
        let basis = leaky.basis(&[z]);
        leaky.adapt(&basis, &[m], 1e-3).unwrap();
        bounded &= leaky
            .weights()
            .iter()
            .zip(&w0)
            .all(|(w, w0): (&f64, &f64)| w.abs() <= w0.abs().max(modulation_bound / params.leakage));
    }
    let pass = fit_err < RBF_TOL && bounded;
    report(
        8,
        pass,
        &format!("fit reproduction error {fit_err:.2e}; weights bounded over {LEAKAGE_STEPS} steps: {bounded}"),
    );
    assert!(pass);
}

/// Every follower reachable from the leader along leader -> pinned and
/// sender -> receiver edges.
fn root_reachable(adj: &[Vec<i8>], pins: &[i8]) -> bool {
    let n = pins.len();
    let mut seen: Vec<bool> = pins.iter().map(|&b| b != 0).collect();
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| seen[i]).collect();
    while let Some(j) = queue.pop_front() {
        for i in 0..n {
            if adj[i][j] != 0 && !seen[i] {
                seen[i] = true;
                queue.push_back(i);
            }
        }
    }
    seen.iter().all(|&s| s)
}

#[test]
fn criterion_09_topology() {
    let mut chain_err: f64 = 0.0;
    for n in [1, 3, 4, 10] {
        let h = build_matrices(&Topology::chain(n)).grounded;
        for l in eigenvalues(&h).unwrap() {
            chain_err = chain_err.max((l - nalgebra::Complex::new(1.0, 0.0)).norm());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut agree = 0;
    let mut reachable_count = 0;
    for _ in 0..RANDOM_GRAPHS {
        let adj: Vec<Vec<i8>> = (0..4)
            .map(|i| (0..4).map(|j| i8::from(i != j && rng.random_bool(0.35))).collect())
            .collect();
        let pins: Vec<i8> = (0..4).map(|_| i8::from(rng.random_bool(0.35))).collect();
        let oracle = root_reachable(&adj, &pins);
        reachable_count += usize::from(oracle);
        let t = Topology::new(adj, pins).unwrap();
        let positive = spectral_check(&build_matrices(&t)).unwrap() > 0.0;
        agree += usize::from(positive == oracle);
    }
    let pass = chain_err < EIGEN_TOL && agree == RANDOM_GRAPHS;
    report(
        9,
        pass,
        &format!(
            "chain eigenvalue error {chain_err:.1e}; spectral test agrees with BFS on {agree}/{RANDOM_GRAPHS} digraphs ({reachable_count} rooted)"
        ),
    );
    assert!(reachable_count > 0 && reachable_count < RANDOM_GRAPHS);
    assert!(pass);
}

#[test]
fn criterion_10_decay_envelope() {
    let m = &linear().metrics;
    let fit = m.decay_fit;
    let pass = fit.alpha_hat > 0.0 && m.composite_error_final < FLOOR_MARGIN * fit.floor;
    report(
        10,
        pass,
        &format!(
            "alpha_hat {:.4} 1/s over {} points; final composite error {:.4e} vs floor {:.4e}",
            fit.alpha_hat, fit.points, m.composite_error_final, fit.floor
        ),
    );
    assert!(pass);
}

fn csv_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn criterion_11_determinism() {
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let r = simulate(ScenarioConfig::default_config());
        let manifest = RunManifest::new(dir.path());
        emit(&r.record, &r.metrics, &r.config, &manifest).unwrap();
        outputs.push((csv_bytes(dir.path()), dir));
    }
    let (a, b) = (&outputs[0].0, &outputs[1].0);
    let pass = a.len() == 5 && a == b;
    report(11, pass, &format!("{} CSV files compared byte for byte", a.len()));
    assert!(pass);
}
