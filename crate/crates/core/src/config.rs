//! Scenario configuration: a TOML file with one section per module.
//!
//! Optional sections fall back to built-in defaults; [`ScenarioConfig::resolve`]
//! fills every optional value so the resolved file echoes exactly what ran.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::controller::ControllerGains;
use crate::harness::LeaderProfile;
use crate::observer::{MeasurementModel, ObserverGains};
use crate::plant::{DisturbanceSpec, VehicleParams};
use crate::rbf::RbfParams;
use crate::topology::Topology;
use crate::trigger::TriggerParams;
use crate::{Error, Result, Vec2};

/// The configuration shipped with the crate.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Linear,
    #[serde(alias = "queue")]
    LinearQueue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    SelfTriggered,
    /// Baseline: the control is refreshed at every integration step.
    Continuous,
}

/// What the controller and observers subtract as the uncertainty estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Compensation {
    /// Adaptive RBF networks plus the robust bound.
    Adaptive,
    /// The plant's true uncertainty; adaptation is disabled. Oracle runs only.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub kind: ScenarioKind,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    #[serde(default = "default_queue_gap")]
    pub queue_gap_multiplier: f64,
    #[serde(default = "default_duration")]
    pub duration: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_compensation")]
    pub compensation: Compensation,
}

fn default_spacing() -> f64 {
    10.0
}
fn default_queue_gap() -> f64 {
    2.0
}
fn default_duration() -> f64 {
    50.0
}
fn default_dt() -> f64 {
    1e-3
}
fn default_mode() -> Mode {
    Mode::SelfTriggered
}
fn default_compensation() -> Compensation {
    Compensation::Adaptive
}

/// Per-vehicle physical parameters; index 0 is the leader.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatoonSection {
    pub masses: Vec<f64>,
    /// Absent means no quadratic drag.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drag_coeffs: Option<Vec<f64>>,
    /// Absent means no rolling resistance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rolling_coeffs: Option<Vec<f64>>,
    /// Absent means no disturbance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disturbances: Option<Vec<DisturbanceSpec>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub positions: Vec<Vec2>,
    pub velocities: Vec<Vec2>,
    pub est_positions: Vec<Vec2>,
    pub est_velocities: Vec<Vec2>,
}

impl InitialSection {
    /// Leader at `(50, 6)` m moving at 15 m/s with its estimate offset by
    /// `(-2, -0.5)` m and `(-1, +0.2)` m/s; followers 12 m apart at 12 m/s
    /// with the same estimate offsets.
    pub fn staggered(vehicles: usize) -> Self {
        let pos_offset = Vec2::new(-2.0, -0.5);
        let vel_offset = Vec2::new(-1.0, 0.2);
        let positions: Vec<Vec2> = (0..vehicles)
            .map(|i| Vec2::new(50.0 - 12.0 * i as f64, 6.0))
            .collect();
        let velocities: Vec<Vec2> = (0..vehicles)
            .map(|i| Vec2::new(if i == 0 { 15.0 } else { 12.0 }, 0.0))
            .collect();
        InitialSection {
            est_positions: positions.iter().map(|p| p + pos_offset).collect(),
            est_velocities: velocities.iter().map(|v| v + vel_offset).collect(),
            positions,
            velocities,
        }
    }
}

/// Follower graph in edge-list form. Followers are numbered from 0
/// (the vehicle right behind the leader).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySection {
    pub pinning: Vec<i8>,
    /// `[receiver, sender, sign]` triples.
    #[serde(default)]
    pub links: Vec<[i64; 3]>,
}

impl TopologySection {
    pub fn chain(followers: usize) -> Self {
        let t = Topology::chain(followers);
        TopologySection::from_topology(&t)
    }

    pub fn from_topology(t: &Topology) -> Self {
        TopologySection {
            pinning: t.pinning().to_vec(),
            links: t
                .links()
                .into_iter()
                .map(|(i, j, a)| [i as i64, j as i64, i64::from(a)])
                .collect(),
        }
    }

    pub fn build(&self) -> Result<Topology> {
        let mut links = Vec::with_capacity(self.links.len());
        for &[to, from, sign] in &self.links {
            if to < 0 || from < 0 || !(-1..=1).contains(&sign) {
                return Err(Error::config(
                    "topology.links",
                    format!("bad link [{to}, {from}, {sign}]"),
                ));
            }
            links.push((to as usize, from as usize, sign as i8));
        }
        Topology::from_links(self.pinning.clone(), &links)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverSection {
    #[serde(default = "default_l1")]
    pub l1: f64,
    #[serde(default = "default_l2")]
    pub l2: f64,
    #[serde(default = "default_dt")]
    pub sample_period: f64,
    #[serde(default)]
    pub noise_bound: f64,
}

fn default_l1() -> f64 {
    10.0
}
fn default_l2() -> f64 {
    25.0
}

impl Default for ObserverSection {
    fn default() -> Self {
        ObserverSection {
            l1: default_l1(),
            l2: default_l2(),
            sample_period: default_dt(),
            noise_bound: 0.0,
        }
    }
}

/// Windows and thresholds used when summarizing a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSection {
    pub settle_time: f64,
    pub transient_window: f64,
    pub lateral_tolerance: f64,
    pub safety_distance: f64,
    pub v_max_ceiling: f64,
}

impl Default for MetricsSection {
    fn default() -> Self {
        MetricsSection {
            settle_time: 40.0,
            transient_window: 15.0,
            lateral_tolerance: 0.05,
            safety_distance: 5.0,
            v_max_ceiling: 40.0,
        }
    }
}

fn default_controller() -> ControllerGains {
    ControllerGains {
        k1: Vec2::new(1.5, 1.0),
        k2: Vec2::new(35.0, 5.0),
        c1: 8.0,
        c2: 8.0,
        robust_smoothing: 0.1,
        theta_leakage: 1.0,
    }
}

fn default_rbf() -> RbfParams {
    RbfParams {
        count: 5,
        center_min: -12.0,
        center_max: 12.0,
        width: 2.5,
        leakage: 8.0e-3,
        assumed_error_bound: 0.0,
    }
}

fn default_trigger() -> TriggerParams {
    TriggerParams {
        s_sigma: 0.1,
        s_d: 0.1,
        s_lambda: 0.01,
        t_max: 0.05,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub leader: LeaderProfile,
    pub platoon: PlatoonSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<TopologySection>,
    #[serde(default)]
    pub observer: ObserverSection,
    #[serde(default = "default_controller")]
    pub controller: ControllerGains,
    #[serde(default = "default_rbf")]
    pub rbf: RbfParams,
    #[serde(default = "default_trigger")]
    pub trigger: TriggerParams,
    #[serde(default)]
    pub metrics: MetricsSection,
}

/// Parse, resolve defaults and validate a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    parse_config(&text, path)
}

/// [`load_config`] over in-memory text; `origin` only labels errors.
pub fn parse_config(text: &str, origin: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let mut config: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Parse {
        path: origin.as_ref().to_path_buf(),
        message: e.to_string(),
    })?;
    config.resolve();
    config.validate()?;
    Ok(config)
}

impl ScenarioConfig {
    /// The shipped default configuration.
    pub fn default_config() -> Self {
        parse_config(DEFAULT_CONFIG, "configs/default.toml").expect("shipped config is valid")
    }

    pub fn vehicle_count(&self) -> usize {
        self.platoon.masses.len()
    }

    pub fn step_count(&self) -> usize {
        (self.scenario.duration / self.scenario.dt).round() as usize
    }

    /// Fill every optional block with its default.
    pub fn resolve(&mut self) {
        let n = self.vehicle_count();
        let p = &mut self.platoon;
        p.drag_coeffs.get_or_insert_with(|| vec![0.0; n]);
        p.rolling_coeffs.get_or_insert_with(|| vec![0.0; n]);
        p.disturbances.get_or_insert_with(|| vec![DisturbanceSpec::none(); n]);
        self.initial.get_or_insert_with(|| InitialSection::staggered(n));
        self.topology
            .get_or_insert_with(|| TopologySection::chain(n.saturating_sub(1)));
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vehicle_count();
        if n < 2 {
            return Err(Error::config("platoon.masses", "need a leader and at least one follower"));
        }
        let s = &self.scenario;
        if !(s.dt.is_finite() && s.dt > 0.0) {
            return Err(Error::config("scenario.dt", "dt must be > 0"));
        }
        if !(s.duration.is_finite() && s.duration > 0.0) {
            return Err(Error::config("scenario.duration", "duration must be > 0"));
        }
        if !is_multiple(s.duration, s.dt) {
            return Err(Error::config("scenario.duration", "duration must be an integer number of dt steps"));
        }
        if !(s.spacing.is_finite() && s.spacing > 0.0) {
            return Err(Error::config("scenario.spacing", "spacing must be > 0"));
        }
        if !(s.queue_gap_multiplier.is_finite() && s.queue_gap_multiplier > 0.0) {
            return Err(Error::config("scenario.queue_gap_multiplier", "must be > 0"));
        }
        self.leader.validate()?;
        for (i, params) in self.vehicle_params()?.iter().enumerate() {
            params.validate(&format!("platoon[{i}]"))?;
        }
        let init = self.initial.as_ref().expect("resolved");
        for (name, list) in [
            ("initial.positions", &init.positions),
            ("initial.velocities", &init.velocities),
            ("initial.est_positions", &init.est_positions),
            ("initial.est_velocities", &init.est_velocities),
        ] {
            check_len(name, list.len(), n)?;
            if list.iter().flatten().any(|x| !x.is_finite()) {
                return Err(Error::config(name, "values must be finite"));
            }
        }
        let topology = self.topology()?;
        if topology.n_followers() != n - 1 {
            return Err(Error::config(
                "topology.pinning",
                format!("{} followers in topology, {} in platoon", topology.n_followers(), n - 1),
            ));
        }
        self.observer_gains().validate()?;
        self.measurement_model().validate()?;
        if !is_multiple(self.observer.sample_period, s.dt) {
            return Err(Error::config("observer.sample_period", "must be an integer number of dt steps"));
        }
        self.controller.validate()?;
        self.rbf.validate()?;
        self.trigger.validate()?;
        let m = &self.metrics;
        if ![m.settle_time, m.transient_window, m.lateral_tolerance, m.safety_distance, m.v_max_ceiling]
            .iter()
            .all(|x| x.is_finite() && *x >= 0.0)
        {
            return Err(Error::config("metrics", "values must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn vehicle_params(&self) -> Result<Vec<VehicleParams>> {
        let n = self.vehicle_count();
        let p = &self.platoon;
        let drag = p.drag_coeffs.clone().unwrap_or_else(|| vec![0.0; n]);
        let rolling = p.rolling_coeffs.clone().unwrap_or_else(|| vec![0.0; n]);
        let dist = p.disturbances.clone().unwrap_or_else(|| vec![DisturbanceSpec::none(); n]);
        check_len("platoon.drag_coeffs", drag.len(), n)?;
        check_len("platoon.rolling_coeffs", rolling.len(), n)?;
        check_len("platoon.disturbances", dist.len(), n)?;
        Ok((0..n)
            .map(|i| VehicleParams {
                mass: p.masses[i],
                drag_coeff: drag[i],
                rolling_coeff: rolling[i],
                disturbance: dist[i],
            })
            .collect())
    }

    pub fn initial(&self) -> InitialSection {
        self.initial
            .clone()
            .unwrap_or_else(|| InitialSection::staggered(self.vehicle_count()))
    }

    pub fn topology(&self) -> Result<Topology> {
        match &self.topology {
            Some(t) => t.build(),
            None => Ok(Topology::chain(self.vehicle_count().saturating_sub(1))),
        }
    }

    pub fn observer_gains(&self) -> ObserverGains {
        ObserverGains {
            l1: self.observer.l1,
            l2: self.observer.l2,
        }
    }

    pub fn measurement_model(&self) -> MeasurementModel {
        MeasurementModel {
            sample_period: self.observer.sample_period,
            noise_bound: self.observer.noise_bound,
            seed: self.scenario.seed,
        }
    }

    /// Desired gap between vehicle `index` and its predecessor (0 for the leader).
    pub fn gap(&self, index: usize) -> f64 {
        match index {
            0 => 0.0,
            2 if self.scenario.kind == ScenarioKind::LinearQueue => {
                self.scenario.spacing * self.scenario.queue_gap_multiplier
            }
            _ => self.scenario.spacing,
        }
    }

    /// Serialized form with every default spelled out, headed by the
    /// derived per-vehicle gaps as a comment.
    pub fn to_toml(&self) -> String {
        let mut resolved = self.clone();
        resolved.resolve();
        let gaps: Vec<String> = (0..self.vehicle_count()).map(|i| format!("{:?}", self.gap(i))).collect();
        format!(
            "# gaps (m): [{}]\n{}",
            gaps.join(", "),
            toml::to_string(&resolved).expect("configuration serializes")
        )
    }
}

fn is_multiple(x: f64, step: f64) -> bool {
    let k = (x / step).round();
    k >= 1.0 && (x / step - k).abs() < 1e-6
}

fn check_len(field: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::config(field, format!("{got} entries for {want} vehicles")));
    }
    Ok(())
}
