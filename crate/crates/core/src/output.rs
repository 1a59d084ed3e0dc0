//! Run manifest and on-disk artifacts: per-vehicle CSV, events CSV,
//! the text summary and the resolved configuration.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::{load_config, Mode, ScenarioConfig, ScenarioKind};
use crate::harness::{assumption_report, Metrics, SimRecord};
use crate::{Error, Result};

pub const VEHICLE_HEADER: &str = "time,px,py,vx,vy,px_hat,py_hat,vx_hat,vy_hat,ux_held,uy_held,z1x,z1y,z2x,z2y,e_u";
pub const EVENTS_HEADER: &str = "time,vehicle,interval";

/// What to run and where to write it.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    /// `None` selects the shipped default configuration.
    pub config_path: Option<PathBuf>,
    pub output_directory: PathBuf,
    pub mode: Mode,
    pub seed: Option<u64>,
    pub scenario: Option<ScenarioKind>,
    pub duration: Option<f64>,
    pub dt: Option<f64>,
}

impl RunManifest {
    pub fn new(output_directory: impl Into<PathBuf>) -> Self {
        RunManifest {
            config_path: None,
            output_directory: output_directory.into(),
            mode: Mode::SelfTriggered,
            seed: None,
            scenario: None,
            duration: None,
            dt: None,
        }
    }

    /// Load the configuration and apply the overrides, then revalidate.
    pub fn resolve_config(&self) -> Result<ScenarioConfig> {
        let mut config = match &self.config_path {
            Some(p) => load_config(p)?,
            None => ScenarioConfig::default_config(),
        };
        config.scenario.mode = self.mode;
        if let Some(seed) = self.seed {
            config.scenario.seed = seed;
        }
        if let Some(kind) = self.scenario {
            config.scenario.kind = kind;
        }
        if let Some(d) = self.duration {
            config.scenario.duration = d;
        }
        if let Some(dt) = self.dt {
            config.scenario.dt = dt;
            config.observer.sample_period = config.observer.sample_period.max(dt);
        }
        config.validate()?;
        Ok(config)
    }
}

/// `100 * num / den` rounded half-up to two decimals, computed in integers.
pub fn format_percent(num: u64, den: u64) -> String {
    assert!(den > 0, "percentage of an empty total");
    let hundredths = (u128::from(num) * 20_000 + u128::from(den)) / (2 * u128::from(den));
    format!("{}.{:02}", hundredths / 100, hundredths % 100)
}

/// Write all artifacts into the manifest's output directory.
pub fn emit(
    record: &SimRecord,
    metrics: &Metrics,
    config: &ScenarioConfig,
    manifest: &RunManifest,
) -> Result<Vec<PathBuf>> {
    let dir = &manifest.output_directory;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();

    for (i, v) in record.vehicles.iter().enumerate() {
        let path = dir.join(format!("vehicle_{}.csv", i + 1));
        write_file(&path, |w| {
            writeln!(w, "{VEHICLE_HEADER}")?;
            for (t, s) in record.times.iter().zip(&v.samples) {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    t,
                    s.position.x,
                    s.position.y,
                    s.velocity.x,
                    s.velocity.y,
                    s.est_position.x,
                    s.est_position.y,
                    s.est_velocity.x,
                    s.est_velocity.y,
                    s.held_control.x,
                    s.held_control.y,
                    s.z1.x,
                    s.z1.y,
                    s.z2.x,
                    s.z2.y,
                    s.e_u
                )?;
            }
            Ok(())
        })?;
        written.push(path);
    }

    let mut events: Vec<(usize, usize, Option<f64>)> = Vec::new();
    for (i, v) in record.vehicles.iter().enumerate() {
        for (k, &step) in v.event_steps.iter().enumerate() {
            let interval = k.checked_sub(1).map(|j| v.intervals[j]);
            events.push((step, i, interval));
        }
    }
    events.sort_by_key(|&(step, i, _)| (step, i));
    let path = dir.join("events.csv");
    write_file(&path, |w| {
        writeln!(w, "{EVENTS_HEADER}")?;
        for (step, i, interval) in &events {
            let interval = interval.map(|x| x.to_string()).unwrap_or_default();
            writeln!(w, "{},{},{}", record.times[*step], i + 1, interval)?;
        }
        Ok(())
    })?;
    written.push(path);

    let path = dir.join("summary.txt");
    let text = summary(record, metrics, config);
    write_file(&path, |w| w.write_all(text.as_bytes()))?;
    written.push(path);

    let path = dir.join("resolved_config.toml");
    let text = config.to_toml();
    write_file(&path, |w| w.write_all(text.as_bytes()))?;
    written.push(path);

    Ok(written)
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

/// Event table in the layout of the published comparison.
pub fn event_table(record: &SimRecord) -> String {
    let mut s = String::new();
    let steps = record.steps as u64;
    let _ = writeln!(s, "{:<8}{:>10}{:>10}{:>16}", "Vehicle", "Events", "Steps", "Reduction (%)");
    for (i, v) in record.vehicles.iter().enumerate() {
        let e = (v.event_count as u64).min(steps);
        let _ = writeln!(
            s,
            "{:<8}{:>10}{:>10}{:>16}",
            format!("AV{}", i + 1),
            v.event_count,
            steps,
            format_percent(steps - e, steps)
        );
    }
    s
}

pub fn summary(record: &SimRecord, metrics: &Metrics, config: &ScenarioConfig) -> String {
    let mut s = String::new();
    let mode = match record.mode {
        Mode::SelfTriggered => "self_triggered",
        Mode::Continuous => "continuous",
    };
    let _ = writeln!(s, "mode: {mode}");
    let _ = writeln!(s, "duration: {} s, dt: {} s, steps: {}", config.scenario.duration, record.dt, record.steps);
    let _ = writeln!(s);
    s.push_str(&event_table(record));
    let _ = writeln!(s);
    let steps = record.steps as u64;
    let fractions: Vec<String> = metrics
        .event_counts
        .iter()
        .map(|&e| format_percent((e as u64).min(steps), steps))
        .collect();
    let _ = writeln!(s, "triggering_fraction (%): {}", fractions.join(", "));
    let _ = writeln!(s, "min_pairwise_distance: {:.4} m", metrics.min_pairwise_distance);
    let _ = writeln!(s, "spacing_rms_after_settle: {} m", join(&metrics.spacing_rms_after_settle, 5));
    let _ = writeln!(s, "spacing_max_error_after_settle: {} m", join(&metrics.spacing_max_error_after_settle, 5));
    let _ = writeln!(s, "lateral_convergence_time: {:.3} s", metrics.lateral_convergence_time);
    let _ = writeln!(
        s,
        "inter_event_interval: min {:.4} s, mean {:.4} s, max {:.4} s",
        metrics.interval_min, metrics.interval_mean, metrics.interval_max
    );
    let d = &metrics.decay_fit;
    let _ = writeln!(
        s,
        "decay_fit: alpha_hat {:.4} 1/s, beta_hat {:.6}, floor {:.6}, points {}",
        d.alpha_hat, d.beta_hat, d.floor, d.points
    );
    let _ = writeln!(s, "composite_error_final: {:.6}", metrics.composite_error_final);
    let _ = writeln!(s, "gamma_hat: {} m/s^3", join(&metrics.gamma_hat, 4));
    let _ = writeln!(s, "v_max_hat: {} m/s", join(&metrics.v_max_hat, 4));
    let _ = writeln!(s, "upsilon_hat: {} m/s^3", join(&metrics.upsilon_hat, 4));
    let _ = writeln!(s, "estimation_error_tail: {:.6}", metrics.estimation_error_tail);
    let _ = writeln!(s);
    let _ = writeln!(s, "assumption checks:");
    for c in assumption_report(metrics, config) {
        let _ = writeln!(s, "  [{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
    }
    s
}

fn join(xs: &[f64], digits: usize) -> String {
    xs.iter().map(|x| format!("{x:.digits$}")).collect::<Vec<_>>().join(", ")
}
