//! The `run` and `validate` operations behind the command line.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use swarmhaptic_core::engine::{run, HandTrajectory, Metrics, SimConfig};

use crate::config::{config_hash, parse_config};
use crate::error::{IoError, Result};
use crate::logcsv::write_log_file;
use crate::trajectory::load_trajectory;

pub const MANIFEST_FORMAT: &str = "swarmhaptic-manifest v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub config_path: PathBuf,
    pub trajectory_path: PathBuf,
    pub out_dir: PathBuf,
    pub seed_override: Option<u64>,
    pub duration_override: Option<f64>,
    pub seed: u64,
    /// SHA-256 of the compact JSON of `config`.
    pub config_hash: String,
    /// Config after overrides.
    pub config: SimConfig,
}

#[derive(Debug, Clone, Default)]
pub struct RunRequest {
    pub config: PathBuf,
    pub trajectory: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub duration: Option<f64>,
}

/// Parse the config, apply overrides, validate.
pub fn resolve_config(path: &Path, seed: Option<u64>, duration: Option<f64>) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    let mut config = parse_config(path, &text)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    if let Some(d) = duration {
        config.duration = d;
    }
    config.validate().map_err(|source| IoError::Invalid {
        path: path.into(),
        source,
    })?;
    Ok(config)
}

/// Run a scenario and write `log.csv`, `metrics.json` and `manifest.json`
/// into `req.out`.
pub fn execute(req: &RunRequest) -> Result<Metrics> {
    let config = resolve_config(&req.config, req.seed, req.duration)?;
    let trajectory = load_trajectory(&req.trajectory)?;
    std::fs::create_dir_all(&req.out).map_err(|e| IoError::io(&req.out, e))?;
    let manifest = RunManifest {
        format: MANIFEST_FORMAT.into(),
        config_path: req.config.clone(),
        trajectory_path: req.trajectory.clone(),
        out_dir: req.out.clone(),
        seed_override: req.seed,
        duration_override: req.duration,
        seed: config.seed,
        config_hash: config_hash(&config),
        config,
    };
    write_json(&req.out.join("manifest.json"), &manifest)?;

    let (log, metrics) = simulate(
        &manifest.config,
        &trajectory,
        Some(manifest.config_hash.clone()),
    )?;
    write_log_file(&req.out.join("log.csv"), &log)?;
    write_json(&req.out.join("metrics.json"), &metrics)?;
    Ok(metrics)
}

/// [`run`] with the wall-clock real-time factor filled in.
pub fn simulate(
    config: &SimConfig,
    trajectory: &HandTrajectory,
    config_hash: Option<String>,
) -> Result<(swarmhaptic_core::engine::SimLog, Metrics)> {
    let started = Instant::now();
    let (mut log, mut metrics) = run(config, trajectory).map_err(IoError::Simulation)?;
    let elapsed = started.elapsed().as_secs_f64();
    if elapsed > 0.0 {
        metrics.real_time_factor = Some(config.duration / elapsed);
    }
    log.meta.config_hash = config_hash;
    Ok((log, metrics))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| IoError::io(path, e))
}

/// Check config (and trajectory) and describe the resolved parameters.
pub fn validate(config_path: &Path, trajectory: Option<&Path>) -> Result<String> {
    let config = resolve_config(config_path, None, None)?;
    let assignment = config.validate().expect("validated above");
    let mut out = String::new();
    let _ = writeln!(out, "config {} ok", config_path.display());
    let _ = writeln!(out, "  hash         {}", config_hash(&config));
    let _ = writeln!(
        out,
        "  timing       {} s, dt {} s, control {} Hz, {} ticks",
        config.duration,
        config.physics_dt,
        config.control_rate,
        config.total_ticks()
    );
    let _ = writeln!(out, "  seed         {}", config.seed);
    let _ = writeln!(out, "  feedback     {:?}", config.feedback);
    for (i, d) in config.drones.iter().enumerate() {
        let _ = writeln!(
            out,
            "  drone {i}      mass {} kg, max thrust {:.3} N, hover {:.1} rad/s",
            d.model.mass,
            d.model.rotors.max_collective_thrust(),
            d.model.hover_speed(config.gravity)
        );
    }
    for (g, group) in assignment.groups.iter().enumerate() {
        let fingers: Vec<_> = group.fingers.iter().map(|f| f.name()).collect();
        let _ = writeln!(
            out,
            "  group {g}      fingers {fingers:?}, drones {:?}",
            group.drones
        );
    }
    for (entry, t) in assignment.tether_entries().iter().zip(&config.tethers) {
        let _ = writeln!(
            out,
            "  leash        {} -> drone {}: {:?}, rest {} m, k {} N/m, c {} N s/m",
            entry.finger, entry.drone, t.kind, t.rest_length, t.stiffness, t.damping
        );
    }
    let _ = writeln!(out, "  surfaces     {}", config.surfaces.len());
    let _ = writeln!(
        out,
        "  mocap        {} Hz, latency {} s, noise {} m / {} rad",
        config.mocap.rate,
        config.mocap.latency,
        config.mocap.position_noise_std,
        config.mocap.attitude_noise_std
    );
    if let Some(path) = trajectory {
        let traj = load_trajectory(path)?;
        let s = traj.samples();
        let _ = writeln!(
            out,
            "trajectory {} ok: {} samples, {} to {} s",
            path.display(),
            s.len(),
            s[0].time,
            s[s.len() - 1].time
        );
    }
    Ok(out)
}
