//! Summary metrics, computed only from a [`SimLog`].
//!
//! A contact is one uninterrupted stretch of tension mode for a drone,
//! trimmed to its first and last tick with a non-zero desired force.
//! Stretches that never ask for force are not contacts. Per contact:
//! - `rms_error`: RMS of `|delivered - desired|` over the contact, skipping
//!   the first `ramp_time` seconds.
//! - `steady_state_error_pct`: `100 |mean(delivered) - mean(desired)| /
//!   |mean(desired)|` over the final 20% of the contact.
//! - `max_horizontal_ratio`: largest `max(|F_x|, |F_y|) / |F|` of the
//!   delivered force over the final 20%.
//! - `slack_fraction`: share of contact ticks with zero delivered force;
//!   the contact is flagged `dragged` above 20%.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::log::{ModeTag, SimLog, TickRecord};
use crate::scene::Finger;

const STEADY_FRACTION: f64 = 0.2;
const DRAGGED_SLACK_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactMetrics {
    pub drone: usize,
    pub finger: Finger,
    pub start_time: f64,
    pub end_time: f64,
    pub rms_error: f64,
    pub steady_state_error_pct: f64,
    /// Mean desired and delivered force magnitude over the steady window, N.
    pub steady_desired: f64,
    pub steady_delivered: f64,
    pub max_horizontal_ratio: f64,
    /// rad.
    pub max_tilt: f64,
    pub slack_fraction: f64,
    pub dragged: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub contacts: Vec<ContactMetrics>,
    /// RMS force error pooled over all contacts, N.
    pub force_rms_error: f64,
    /// Worst contact, %.
    pub steady_state_error_pct: f64,
    /// Largest tilt while rendering, rad.
    pub max_tilt_rendering: f64,
    pub tension_slack_fraction: f64,
    /// RMS distance to the position target in follow mode, m.
    pub follow_position_rms: f64,
    /// Simulated time over wall-clock time; not derivable from the log.
    pub real_time_factor: Option<f64>,
}

fn tension(rec: &TickRecord, drone: usize) -> bool {
    rec.drones[drone].mode == ModeTag::Tension
}

fn wants_force(rec: &TickRecord, drone: usize) -> bool {
    rec.drones[drone].desired_force.norm() > 0.0
}

pub fn compute_metrics(log: &SimLog) -> Metrics {
    let mut metrics = Metrics::default();
    let mut pooled_sq = 0.0;
    let mut pooled_n = 0usize;
    let mut slack_ticks = 0usize;
    let mut contact_ticks = 0usize;

    for drone in 0..log.meta.drones {
        let mut k = 0;
        while k < log.ticks.len() {
            if !tension(&log.ticks[k], drone) {
                k += 1;
                continue;
            }
            let run_start = k;
            while k < log.ticks.len() && tension(&log.ticks[k], drone) {
                k += 1;
            }
            let episode = &log.ticks[run_start..k];
            let Some(first) = episode.iter().position(|r| wants_force(r, drone)) else {
                continue;
            };
            let last = episode
                .iter()
                .rposition(|r| wants_force(r, drone))
                .expect("found first");
            let span = &episode[first..=last];
            let contact = contact_metrics(
                span,
                drone,
                log.meta.ramp_time,
                &mut pooled_sq,
                &mut pooled_n,
            );
            slack_ticks += libm::round(contact.slack_fraction * span.len() as f64) as usize;
            contact_ticks += span.len();
            metrics.steady_state_error_pct = metrics
                .steady_state_error_pct
                .max(contact.steady_state_error_pct);
            metrics.max_tilt_rendering = metrics.max_tilt_rendering.max(contact.max_tilt);
            metrics.contacts.push(contact);
        }
    }
    metrics.contacts.sort_by(|a, b| {
        a.start_time
            .total_cmp(&b.start_time)
            .then(a.drone.cmp(&b.drone))
    });
    if pooled_n > 0 {
        metrics.force_rms_error = libm::sqrt(pooled_sq / pooled_n as f64);
    }
    if contact_ticks > 0 {
        metrics.tension_slack_fraction = slack_ticks as f64 / contact_ticks as f64;
    }

    let mut follow_sq = 0.0;
    let mut follow_n = 0usize;
    for rec in &log.ticks {
        for d in rec.drones.iter().filter(|d| d.mode == ModeTag::Follow) {
            follow_sq += (d.state.position - d.target_position).norm_squared();
            follow_n += 1;
        }
    }
    if follow_n > 0 {
        metrics.follow_position_rms = libm::sqrt(follow_sq / follow_n as f64);
    }
    metrics
}

fn contact_metrics(
    span: &[TickRecord],
    drone: usize,
    ramp_time: f64,
    pooled_sq: &mut f64,
    pooled_n: &mut usize,
) -> ContactMetrics {
    let start_time = span[0].time;
    let rows = || span.iter().map(|r| &r.drones[drone]);

    let mut sq = 0.0;
    let mut n = 0usize;
    for (rec, d) in span.iter().zip(rows()) {
        if rec.time - start_time >= ramp_time {
            sq += (d.delivered_force - d.desired_force).norm_squared();
            n += 1;
        }
    }
    *pooled_sq += sq;
    *pooled_n += n;

    let steady_len =
        (libm::ceil(span.len() as f64 * STEADY_FRACTION) as usize).clamp(1, span.len());
    let steady = &span[span.len() - steady_len..];
    let mut mean_desired = crate::Vec3::zeros();
    let mut mean_delivered = crate::Vec3::zeros();
    let mut desired_mag = 0.0;
    let mut delivered_mag = 0.0;
    let mut max_horizontal_ratio: f64 = 0.0;
    for rec in steady {
        let d = &rec.drones[drone];
        mean_desired += d.desired_force;
        mean_delivered += d.delivered_force;
        desired_mag += d.desired_force.norm();
        let delivered = d.delivered_force.norm();
        delivered_mag += delivered;
        if delivered > 0.0 {
            let h = d.delivered_force.x.abs().max(d.delivered_force.y.abs());
            max_horizontal_ratio = max_horizontal_ratio.max(h / delivered);
        }
    }
    let count = steady_len as f64;
    mean_desired /= count;
    mean_delivered /= count;

    let slack = rows()
        .filter(|d| d.delivered_force == crate::Vec3::zeros())
        .count();
    let slack_fraction = slack as f64 / span.len() as f64;
    let last = &span[span.len() - 1];
    ContactMetrics {
        drone,
        finger: span[0].drones[drone].finger,
        start_time,
        end_time: last.time,
        rms_error: if n > 0 {
            libm::sqrt(sq / n as f64)
        } else {
            0.0
        },
        steady_state_error_pct: 100.0 * (mean_delivered - mean_desired).norm()
            / mean_desired.norm(),
        steady_desired: desired_mag / count,
        steady_delivered: delivered_mag / count,
        max_horizontal_ratio,
        max_tilt: rows().map(|d| d.state.tilt()).fold(0.0, f64::max),
        slack_fraction,
        dragged: slack_fraction > DRAGGED_SLACK_FRACTION,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{RigidBodyState, RotorCommand};
    use crate::engine::log::{DroneRecord, FingerRecord, LogMeta};
    use crate::scene::ContactStatus;
    use crate::Vec3;
    use approx::assert_relative_eq;

    fn record(tick: u64, mode: ModeTag, desired: f64, delivered: Vec3) -> TickRecord {
        let finger = FingerRecord {
            position: Vec3::zeros(),
            velocity: Vec3::zeros(),
            desired_force: Vec3::zeros(),
            delivered_force: Vec3::zeros(),
            status: ContactStatus::Clear,
            time_to_contact: 0.0,
        };
        TickRecord {
            tick,
            time: tick as f64 * 0.001,
            drones: alloc::vec![DroneRecord {
                state: RigidBodyState::at_rest(Vec3::new(0.0, 0.0, 1.0)),
                command: RotorCommand::uniform(0.0),
                mode,
                saturated: false,
                finger: Finger::Index,
                target_position: Vec3::new(0.0, 0.0, 1.0),
                desired_force: Vec3::new(0.0, 0.0, desired),
                commanded_force: Vec3::new(0.0, 0.0, desired),
                delivered_force: delivered,
            }],
            tethers: Vec::new(),
            fingers: [finger; 5],
        }
    }

    fn log(ticks: Vec<TickRecord>) -> SimLog {
        SimLog {
            meta: LogMeta {
                seed: 0,
                physics_dt: 0.001,
                control_rate: 100.0,
                ramp_time: 0.05,
                drones: 1,
                tethers: Vec::new(),
                config_hash: None,
            },
            ticks,
        }
    }

    #[test]
    fn empty_log_gives_zero_metrics() {
        assert_eq!(compute_metrics(&log(Vec::new())), Metrics::default());
    }

    #[test]
    fn perfect_tracking_has_zero_error() {
        let ticks = (0..500)
            .map(|i| record(i, ModeTag::Tension, 1.0, Vec3::new(0.0, 0.0, 1.0)))
            .collect();
        let m = compute_metrics(&log(ticks));
        assert_eq!(m.contacts.len(), 1);
        assert_eq!(m.force_rms_error, 0.0);
        assert_eq!(m.steady_state_error_pct, 0.0);
        assert_eq!(m.tension_slack_fraction, 0.0);
    }

    #[test]
    fn constant_offset_gives_that_rms() {
        let ticks = (0..500)
            .map(|i| record(i, ModeTag::Tension, 1.0, Vec3::new(0.0, 0.0, 0.9)))
            .collect();
        let m = compute_metrics(&log(ticks));
        assert_relative_eq!(m.force_rms_error, 0.1, epsilon = 1e-12);
        assert_relative_eq!(m.steady_state_error_pct, 10.0, epsilon = 1e-9);
        assert_relative_eq!(m.contacts[0].steady_delivered, 0.9, epsilon = 1e-12);
    }

    #[test]
    fn ramp_window_is_excluded() {
        let ticks = (0..200)
            .map(|i| {
                let delivered = if i < 50 { 0.0 } else { 1.0 };
                record(i, ModeTag::Tension, 1.0, Vec3::new(0.0, 0.0, delivered))
            })
            .collect();
        let m = compute_metrics(&log(ticks));
        assert_eq!(m.force_rms_error, 0.0);
        assert_relative_eq!(m.tension_slack_fraction, 0.25);
        assert!(m.contacts[0].dragged);
    }

    #[test]
    fn contacts_split_on_mode_changes() {
        let ticks = (0..300)
            .map(|i| {
                let mode = if (100..150).contains(&i) {
                    ModeTag::Follow
                } else {
                    ModeTag::Tension
                };
                record(i, mode, 1.0, Vec3::new(0.0, 0.0, 1.0))
            })
            .collect();
        let m = compute_metrics(&log(ticks));
        assert_eq!(m.contacts.len(), 2);
        assert_relative_eq!(m.contacts[1].start_time, 0.15);
    }

    #[test]
    fn force_dropouts_do_not_split_a_contact() {
        let ticks = (0..300)
            .map(|i| {
                let desired = if i < 20 || i == 100 || i >= 280 {
                    0.0
                } else {
                    1.0
                };
                record(i, ModeTag::Tension, desired, Vec3::new(0.0, 0.0, 1.0))
            })
            .collect();
        let m = compute_metrics(&log(ticks));
        assert_eq!(m.contacts.len(), 1);
        assert_relative_eq!(m.contacts[0].start_time, 0.02);
        assert_relative_eq!(m.contacts[0].end_time, 0.279);
    }

    #[test]
    fn horizontal_ratio_uses_largest_component() {
        let ticks = (0..100)
            .map(|i| record(i, ModeTag::Tension, 1.0, Vec3::new(0.06, -0.08, 1.0)))
            .collect();
        let m = compute_metrics(&log(ticks));
        assert_relative_eq!(
            m.contacts[0].max_horizontal_ratio,
            0.08 / Vec3::new(0.06, -0.08, 1.0).norm()
        );
    }
}
