use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dynamics::{RigidBodyState, RotorCommand};
use crate::scene::{ContactStatus, Finger, TetherEntry};
use crate::tether::TetherForce;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeTag {
    Follow,
    Tension,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DroneRecord {
    /// True state at the start of the tick.
    pub state: RigidBodyState,
    /// Command held over the tick.
    pub command: RotorCommand,
    pub mode: ModeTag,
    pub saturated: bool,
    /// Finger the drone is following or rendering for.
    pub finger: Finger,
    /// Center-of-mass position target, m.
    pub target_position: Vec3,
    /// Force this drone should deliver once the ramp has finished, N.
    pub desired_force: Vec3,
    /// Ramped force actually handed to the tension controller, N.
    pub commanded_force: Vec3,
    /// Force on `finger` from this drone's leash to it, N.
    pub delivered_force: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FingerRecord {
    pub position: Vec3,
    pub velocity: Vec3,
    /// Penalty force the scene asks for, N.
    pub desired_force: Vec3,
    /// Sum of every leash pull on this finger, N.
    pub delivered_force: Vec3,
    pub status: ContactStatus,
    /// Predicted time to contact measured from the record time, s.
    pub time_to_contact: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: u64,
    /// s.
    pub time: f64,
    pub drones: Vec<DroneRecord>,
    /// One entry per leash, in [`LogMeta::tethers`] order.
    pub tethers: Vec<TetherForce>,
    pub fingers: [FingerRecord; 5],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogMeta {
    pub seed: u64,
    pub physics_dt: f64,
    pub control_rate: f64,
    pub ramp_time: f64,
    pub drones: usize,
    pub tethers: Vec<TetherEntry>,
    /// Digest of the resolved configuration, filled in by the caller that
    /// serialized it.
    pub config_hash: Option<String>,
}

impl LogMeta {
    /// Leash index for `(finger, drone)`.
    pub fn tether_index(&self, finger: Finger, drone: usize) -> Option<usize> {
        self.tethers
            .iter()
            .position(|e| e.finger == finger && e.drone == drone)
    }
}

/// Complete per-tick record of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimLog {
    pub meta: LogMeta,
    pub ticks: Vec<TickRecord>,
}
