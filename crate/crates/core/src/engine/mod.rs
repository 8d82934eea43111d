//! Fixed-step orchestrator.
//!
//! Each physics tick runs, in this order:
//! 1. evaluate the hand trajectory;
//! 2. compute every leash force from the current true states;
//! 3. on control ticks: sample mocap, predict contacts, run activation and
//!    one `control_step` per drone (commands are then held until the next
//!    control tick);
//! 4. step every drone with its held command and leash reactions;
//! 5. append the tick record.
//!
//! Leash forces are computed before control because the controller reads
//! them as its tension measurement; control does not move any body, so the
//! same forces drive the dynamics step.

mod log;
mod metrics;
mod trajectory;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use self::log::{DroneRecord, FingerRecord, LogMeta, ModeTag, SimLog, TickRecord};
pub use self::metrics::{compute_metrics, ContactMetrics, Metrics};
pub use self::trajectory::{HandSample, HandTrajectory};

use crate::control::{control_step, ControlContext, ControllerGains, SetpointMode};
use crate::dynamics::{step_dynamics, QuadrotorModel, RigidBodyState, RotorCommand};
use crate::error::{Error, Result};
use crate::scene::{
    activation_logic, assign_drones, desired_force, predict_scene, ActivationConfig,
    ActivationState, AssignmentPolicy, ContactPrediction, ContactStatus, Finger, FingerAssignment,
    FingerState, Hand, TetherEntry, VirtualSurface,
};
use crate::sensing::{
    finite_difference_velocity, BodyPose, MocapConfig, MocapEmulator, MocapFrame, WorldPose,
};
use crate::tether::{tether_force, TetherForce, TetherParams};
use crate::Vec3;

const RATE_TOLERANCE: f64 = 1e-9;

/// Where controllers get their pose estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackSource {
    /// Emulated motion capture with noise and latency.
    #[default]
    Mocap,
    /// True poses, bypassing the emulator.
    GroundTruth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DroneConfig {
    #[serde(default)]
    pub model: QuadrotorModel,
    /// Defaults to the first assigned finger's start position plus the
    /// follow offset.
    #[serde(default)]
    pub initial_position: Option<Vec3>,
    #[serde(default = "default_follow_offset")]
    pub follow_offset: Vec3,
}

fn default_follow_offset() -> Vec3 {
    Vec3::new(0.0, 0.0, 0.35)
}

impl Default for DroneConfig {
    fn default() -> Self {
        Self {
            model: QuadrotorModel::default(),
            initial_position: None,
            follow_offset: default_follow_offset(),
        }
    }
}

/// Complete scenario description. The hand trajectory is supplied
/// separately to [`run`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// s.
    pub duration: f64,
    #[serde(default = "default_physics_dt")]
    pub physics_dt: f64,
    #[serde(default = "default_control_rate")]
    pub control_rate: f64,
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    #[serde(default)]
    pub seed: u64,
    pub drones: Vec<DroneConfig>,
    pub assignment: AssignmentPolicy,
    /// One leash per assignment entry, in [`FingerAssignment::tether_entries`]
    /// order.
    pub tethers: Vec<TetherParams>,
    #[serde(default)]
    pub surfaces: Vec<VirtualSurface>,
    #[serde(default)]
    pub mocap: MocapConfig,
    #[serde(default)]
    pub feedback: FeedbackSource,
    #[serde(default)]
    pub gains: ControllerGains,
    #[serde(default)]
    pub activation: ActivationConfig,
}

fn default_physics_dt() -> f64 {
    0.001
}

fn default_control_rate() -> f64 {
    100.0
}

fn default_gravity() -> f64 {
    crate::GRAVITY
}

impl SimConfig {
    /// Check every invariant and return the resolved assignment.
    pub fn validate(&self) -> Result<FingerAssignment> {
        if !(self.duration.is_finite() && self.duration >= 0.0) {
            return Err(Error::config("duration", "must be finite and >= 0"));
        }
        crate::dynamics::positive("physics_dt", self.physics_dt)?;
        crate::dynamics::positive("control_rate", self.control_rate)?;
        crate::dynamics::positive("gravity", self.gravity)?;
        self.control_period_ticks()?;
        for (i, d) in self.drones.iter().enumerate() {
            let at = alloc::format!("drones[{i}]");
            d.model
                .validate()
                .map_err(|e| e.within(&alloc::format!("{at}.model")))?;
            if !(d.follow_offset.iter().all(|v| v.is_finite()) && d.follow_offset.z > 0.0) {
                return Err(
                    Error::config("follow_offset", "must be finite with positive z").within(&at),
                );
            }
            if let Some(p) = d.initial_position {
                if !p.iter().all(|v| v.is_finite()) {
                    return Err(Error::config("initial_position", "must be finite").within(&at));
                }
            }
        }
        let need = self.assignment.drones_required();
        if self.drones.len() != need {
            return Err(Error::config(
                "drones",
                alloc::format!(
                    "{:?} needs exactly {need} drones, got {}",
                    self.assignment,
                    self.drones.len()
                ),
            ));
        }
        let ids: Vec<usize> = (0..self.drones.len()).collect();
        let assignment = assign_drones(&ids, self.assignment)?;
        let entries = assignment.tether_entries();
        if self.tethers.len() != entries.len() {
            return Err(Error::config(
                "tethers",
                alloc::format!(
                    "expected {} leashes for this assignment, got {}",
                    entries.len(),
                    self.tethers.len()
                ),
            ));
        }
        for (i, t) in self.tethers.iter().enumerate() {
            t.validate()
                .map_err(|e| e.within(&alloc::format!("tethers[{i}]")))?;
        }
        if let AssignmentPolicy::DualTether { .. } = self.assignment {
            if self.tethers[0] == self.tethers[1] {
                return Err(Error::config("tethers", "dual-tether leashes must differ"));
            }
        }
        for (i, s) in self.surfaces.iter().enumerate() {
            s.validate()
                .map_err(|e| e.within(&alloc::format!("surfaces[{i}]")))?;
        }
        if (self.mocap.rate - self.control_rate).abs() > RATE_TOLERANCE * self.control_rate {
            return Err(Error::config("rate", "mocap rate must equal control_rate"));
        }
        self.mocap.validate().map_err(|e| e.within("mocap"))?;
        self.gains.validate().map_err(|e| e.within("gains"))?;
        self.activation
            .validate()
            .map_err(|e| e.within("activation"))?;
        Ok(assignment)
    }

    /// Physics ticks per control tick.
    pub fn control_period_ticks(&self) -> Result<u64> {
        let ratio = 1.0 / (self.control_rate * self.physics_dt);
        let n = libm::round(ratio);
        if n < 1.0 || (ratio - n).abs() > 1e-6 {
            return Err(Error::config(
                "physics_dt",
                "must divide the control period exactly",
            ));
        }
        Ok(n as u64)
    }

    pub fn total_ticks(&self) -> u64 {
        libm::round(self.duration / self.physics_dt) as u64
    }
}

#[derive(Debug, Clone, Copy)]
struct Held {
    command: RotorCommand,
    saturated: bool,
    mode: ModeTag,
    finger: Finger,
    target_position: Vec3,
    desired: Vec3,
    commanded: Vec3,
}

/// Step-by-step driver. [`run`] wraps it for whole scenarios.
pub struct Simulation<'a> {
    config: &'a SimConfig,
    trajectory: &'a HandTrajectory,
    assignment: FingerAssignment,
    entries: Vec<TetherEntry>,
    states: Vec<RigidBodyState>,
    held: Vec<Held>,
    activation: Vec<ActivationState>,
    emulator: MocapEmulator,
    previous_frame: Option<MocapFrame>,
    predictions: [ContactPrediction; 5],
    finger_desired: [Vec3; 5],
    prediction_time: f64,
    control_every: u64,
    tick: u64,
}

impl<'a> Simulation<'a> {
    pub fn new(config: &'a SimConfig, trajectory: &'a HandTrajectory) -> Result<Self> {
        let assignment = config.validate()?;
        let entries = assignment.tether_entries();
        let start = trajectory.at(0.0);
        let states = config
            .drones
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let anchor = assignment
                    .group_of_drone(i)
                    .map_or(Vec3::zeros(), |g| start.finger(g.fingers[0]).position);
                RigidBodyState::at_rest(d.initial_position.unwrap_or(anchor + d.follow_offset))
            })
            .collect::<Vec<_>>();
        let held = states
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let model = &config.drones[i].model;
                Held {
                    command: RotorCommand::uniform(model.hover_speed(config.gravity))
                        .clamped(&model.rotors),
                    saturated: false,
                    mode: ModeTag::Follow,
                    finger: assignment
                        .group_of_drone(i)
                        .map_or(Finger::Thumb, |g| g.fingers[0]),
                    target_position: s.position,
                    desired: Vec3::zeros(),
                    commanded: Vec3::zeros(),
                }
            })
            .collect();
        Ok(Self {
            emulator: MocapEmulator::new(config.mocap, config.seed)?,
            activation: alloc::vec![ActivationState::default(); states.len()],
            predictions: Finger::ALL.map(|f| ContactPrediction::clear(f, start.finger(f))),
            finger_desired: [Vec3::zeros(); 5],
            prediction_time: 0.0,
            control_every: config.control_period_ticks()?,
            previous_frame: None,
            tick: 0,
            config,
            trajectory,
            assignment,
            entries,
            states,
            held,
        })
    }

    pub fn assignment(&self) -> &FingerAssignment {
        &self.assignment
    }

    pub fn meta(&self) -> LogMeta {
        LogMeta {
            seed: self.config.seed,
            physics_dt: self.config.physics_dt,
            control_rate: self.config.control_rate,
            ramp_time: self.config.activation.ramp_time,
            drones: self.states.len(),
            tethers: self.entries.clone(),
            config_hash: None,
        }
    }

    pub fn states(&self) -> &[RigidBodyState] {
        &self.states
    }

    fn fault(&self, time: f64, drone: usize, err: Error) -> Error {
        Error::SimulationFault {
            tick: self.tick,
            time,
            drone,
            message: alloc::format!("{err}; state {:?}", self.states.get(drone)),
        }
    }

    fn tether_forces(&self, hand: &Hand, time: f64) -> Result<Vec<TetherForce>> {
        self.entries
            .iter()
            .zip(&self.config.tethers)
            .map(|(e, params)| {
                let model = &self.config.drones[e.drone].model;
                let s = &self.states[e.drone];
                let offset = model.attachment_offset();
                let finger = hand.finger(e.finger);
                tether_force(
                    &s.point_position(&offset),
                    &s.point_velocity(&offset),
                    &finger.position,
                    &finger.velocity,
                    params,
                )
                .map_err(|err| self.fault(time, e.drone, err))
            })
            .collect()
    }

    fn control(&mut self, hand: &Hand, forces: &[TetherForce], time: f64) -> Result<()> {
        let cfg = self.config;
        let truth = WorldPose {
            drones: self
                .states
                .iter()
                .map(|s| BodyPose {
                    position: s.position,
                    orientation: s.orientation,
                })
                .collect(),
            fingers: hand.fingers.map(|f| f.position),
        };
        let frame = match cfg.feedback {
            FeedbackSource::Mocap => self.emulator.sample(&truth, time)?,
            FeedbackSource::GroundTruth => MocapFrame::exact(
                &truth,
                (self.tick / self.control_every) as i64,
                cfg.control_rate,
            ),
        };
        let velocities = match &self.previous_frame {
            Some(prev) => Some(finite_difference_velocity(prev, &frame, cfg.control_rate)?),
            None => None,
        };
        let drone_velocity = |i: usize| velocities.as_ref().map_or(Vec3::zeros(), |v| v.drones[i]);
        let finger_velocity =
            |i: usize| velocities.as_ref().map_or(Vec3::zeros(), |v| v.fingers[i]);

        // Frames describe the past; extrapolate fingers to now.
        let age = time - frame.timestamp;
        let fingers: [FingerState; 5] = core::array::from_fn(|i| FingerState {
            position: frame.fingers[i] + finger_velocity(i) * age,
            velocity: finger_velocity(i),
        });
        for f in Finger::ALL {
            let est = &fingers[f.index()];
            let p = predict_scene(f, est, &cfg.surfaces, cfg.activation.horizon);
            self.finger_desired[f.index()] = match (p.status, p.surface) {
                (ContactStatus::InContact, Some(s)) => {
                    desired_force(est, &cfg.surfaces[s], cfg.activation.max_force)
                }
                _ => Vec3::zeros(),
            };
            self.predictions[f.index()] = p;
        }
        self.prediction_time = time;

        let offsets: Vec<Vec3> = cfg.drones.iter().map(|d| d.follow_offset).collect();
        let setpoints = activation_logic(
            &self.predictions,
            &self.finger_desired,
            &self.assignment,
            &mut self.activation,
            &offsets,
            time,
            &cfg.activation,
        );

        let measured: Vec<TetherForce> = forces
            .iter()
            .enumerate()
            .map(|(i, f)| self.emulator.measure_tension(i, f))
            .collect();

        for (drone, setpoint) in setpoints.into_iter().enumerate() {
            let Some(sp) = setpoint else { continue };
            let drone_cfg = &cfg.drones[drone];
            let primary = self
                .entries
                .iter()
                .position(|e| e.drone == drone && e.finger == sp.finger)
                .expect("setpoint finger is tethered to its drone");
            let other_pull = self
                .entries
                .iter()
                .enumerate()
                .filter(|(i, e)| e.drone == drone && *i != primary)
                .fold(Vec3::zeros(), |acc, (i, _)| acc + measured[i].on_drone);
            let estimate = RigidBodyState {
                position: frame.drones[drone].position,
                velocity: drone_velocity(drone),
                orientation: frame.drones[drone].orientation,
                // onboard gyro
                angular_velocity: self.states[drone].angular_velocity,
            };
            let ctx = ControlContext {
                model: &drone_cfg.model,
                gains: &cfg.gains,
                tether: &cfg.tethers[primary],
                gravity: cfg.gravity,
            };
            let finger = &fingers[sp.finger.index()];
            let out = control_step(
                &sp.mode,
                &estimate,
                &finger.position,
                &finger.velocity,
                &measured[primary],
                &other_pull,
                &ctx,
            )
            .map_err(|err| self.fault(time, drone, err))?;
            let (mode, commanded) = match sp.mode {
                SetpointMode::Follow { .. } => (ModeTag::Follow, Vec3::zeros()),
                SetpointMode::Tension { force } => (ModeTag::Tension, force),
            };
            self.held[drone] = Held {
                command: out.command,
                saturated: out.saturated,
                mode,
                finger: sp.finger,
                target_position: out.target_pos,
                desired: sp.desired,
                commanded,
            };
        }
        self.previous_frame = Some(frame);
        Ok(())
    }

    /// Advance one physics tick and return its record.
    pub fn step(&mut self) -> Result<TickRecord> {
        let cfg = self.config;
        let time = self.tick as f64 * cfg.physics_dt;
        let hand = self.trajectory.at(time);
        let forces = self.tether_forces(&hand, time)?;
        if self.tick.is_multiple_of(self.control_every) {
            self.control(&hand, &forces, time)?;
        }

        let mut drones = Vec::with_capacity(self.states.len());
        let mut next_states = Vec::with_capacity(self.states.len());
        for (i, state) in self.states.iter().enumerate() {
            let h = &self.held[i];
            let mut pull = Vec3::zeros();
            let mut delivered = Vec3::zeros();
            for (e, f) in self.entries.iter().zip(&forces) {
                if e.drone == i {
                    pull += f.on_drone;
                    if e.finger == h.finger {
                        delivered = f.on_finger;
                    }
                }
            }
            let model = &cfg.drones[i].model;
            let next = step_dynamics(
                state,
                &h.command,
                &pull,
                &Vec3::zeros(),
                model,
                cfg.gravity,
                cfg.physics_dt,
            )
            .map_err(|err| self.fault(time, i, err))?;
            next_states.push(next);
            drones.push(DroneRecord {
                state: *state,
                command: h.command,
                mode: h.mode,
                saturated: h.saturated,
                finger: h.finger,
                target_position: h.target_position,
                desired_force: h.desired,
                commanded_force: h.commanded,
                delivered_force: delivered,
            });
        }

        let fingers = core::array::from_fn(|i| {
            let f = Finger::ALL[i];
            let delivered = self
                .entries
                .iter()
                .zip(&forces)
                .filter(|(e, _)| e.finger == f)
                .fold(Vec3::zeros(), |acc, (_, t)| acc + t.on_finger);
            let p = &self.predictions[i];
            let time_to_contact = if p.status == ContactStatus::Approaching {
                (p.time_to_contact - (time - self.prediction_time)).max(0.0)
            } else {
                0.0
            };
            FingerRecord {
                position: hand.fingers[i].position,
                velocity: hand.fingers[i].velocity,
                desired_force: self.finger_desired[i],
                delivered_force: delivered,
                status: p.status,
                time_to_contact,
            }
        });

        let record = TickRecord {
            tick: self.tick,
            time,
            drones,
            tethers: forces,
            fingers,
        };
        self.states = next_states;
        self.tick += 1;
        Ok(record)
    }
}

/// Run a whole scenario. Output is bit-identical for identical inputs.
pub fn run(config: &SimConfig, trajectory: &HandTrajectory) -> Result<(SimLog, Metrics)> {
    let mut sim = Simulation::new(config, trajectory)?;
    let total = config.total_ticks();
    let mut ticks = Vec::with_capacity(total as usize);
    for _ in 0..total {
        ticks.push(sim.step()?);
    }
    let log = SimLog {
        meta: sim.meta(),
        ticks,
    };
    let metrics = compute_metrics(&log);
    Ok((log, metrics))
}

impl core::fmt::Display for FeedbackSource {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            FeedbackSource::Mocap => "mocap",
            FeedbackSource::GroundTruth => "ground_truth",
        })
    }
}
