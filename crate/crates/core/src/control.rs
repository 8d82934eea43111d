//! Cascaded position/attitude control with follow and tension modes.
//!
//! Every function here is pure: the engine holds the only per-drone state.

use nalgebra::{Matrix3, Rotation3};
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    mix_inverse, squared_speeds, ControlInput, QuadrotorModel, RigidBodyState, RotorCommand,
    RotorParams,
};
use crate::error::{Error, Result};
use crate::tether::{TetherForce, TetherParams};
use crate::{Quat, Vec3};

/// Largest angle from vertical a tension command may have.
pub const MAX_FORCE_ANGLE: f64 = core::f64::consts::FRAC_PI_4;

const MIN_FORCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerGains {
    /// 1/s^2.
    pub kp_pos: f64,
    /// 1/s.
    pub kd_pos: f64,
    /// 1/s^2.
    pub kp_att: f64,
    /// 1/s.
    pub kd_att: f64,
    /// Gain on the force error measured at the finger.
    pub kp_tension: f64,
}

impl Default for ControllerGains {
    fn default() -> Self {
        Self {
            kp_pos: 20.0,
            kd_pos: 8.0,
            kp_att: 1000.0,
            kd_att: 50.0,
            kp_tension: 0.5,
        }
    }
}

impl ControllerGains {
    pub fn validate(&self) -> Result<()> {
        let gains = [
            ("kp_pos", self.kp_pos),
            ("kd_pos", self.kd_pos),
            ("kp_att", self.kp_att),
            ("kd_att", self.kd_att),
            ("kp_tension", self.kp_tension),
        ];
        for (field, value) in gains {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::config(field, "must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetpointMode {
    /// Hover at `offset` (world frame) from the assigned finger, leash slack.
    Follow { offset: Vec3 },
    /// Pull on the finger with `force` (world frame, N).
    Tension { force: Vec3 },
}

impl SetpointMode {
    pub fn is_tension(&self) -> bool {
        matches!(self, SetpointMode::Tension { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionCommand {
    /// Collective thrust, N.
    pub thrust: f64,
    pub attitude: Quat,
    /// Unclamped desired world force, N.
    pub force: Vec3,
}

/// Outer loop: desired world force to thrust magnitude and attitude.
///
/// `f = m (kp e_p + kd e_v) + m g z + feedforward`; the attitude points body z
/// along `f` with zero yaw.
pub fn position_controller(
    state: &RigidBodyState,
    target_pos: &Vec3,
    target_vel: &Vec3,
    feedforward: &Vec3,
    model: &QuadrotorModel,
    gains: &ControllerGains,
    gravity: f64,
) -> PositionCommand {
    let e_p = target_pos - state.position;
    let e_v = target_vel - state.velocity;
    let force = (e_p * gains.kp_pos + e_v * gains.kd_pos) * model.mass
        + Vec3::new(0.0, 0.0, model.mass * gravity)
        + feedforward;
    let magnitude = force.norm();
    if !(magnitude >= MIN_FORCE) {
        return PositionCommand {
            thrust: 0.0,
            attitude: state.orientation,
            force,
        };
    }
    PositionCommand {
        thrust: magnitude.min(model.rotors.max_collective_thrust()),
        attitude: attitude_along(&(force / magnitude)),
        force,
    }
}

/// Zero-yaw attitude whose body z axis is `axis` (unit).
fn attitude_along(axis: &Vec3) -> Quat {
    let heading = if axis.x.abs() < 0.9 {
        Vec3::x()
    } else {
        Vec3::y()
    };
    let b2 = axis.cross(&heading).normalize();
    let b1 = b2.cross(axis);
    let m = Matrix3::from_columns(&[b1, b2, *axis]);
    Quat::from_rotation_matrix(&Rotation3::from_matrix_unchecked(m))
}

/// Inner loop: PD on the attitude error, returns body moments `(u2, u3, u4)`.
pub fn attitude_controller(
    state: &RigidBodyState,
    attitude_des: &Quat,
    model: &QuadrotorModel,
    gains: &ControllerGains,
) -> Vec3 {
    let mut error = (state.orientation.inverse() * attitude_des).into_inner();
    if error.w < 0.0 {
        error = -error;
    }
    let rotation = Quat::new_unchecked(error).scaled_axis();
    let accel = rotation * gains.kp_att - state.angular_velocity * gains.kd_att;
    model.inertia.component_mul(&accel)
}

/// Position target and feedforward for rendering a pull on the finger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensionSetpoint {
    /// Center-of-mass target, m.
    pub target_pos: Vec3,
    pub target_vel: Vec3,
    pub feedforward: Vec3,
}

/// Place the drone where the leash carries the commanded force and feed the
/// force forward through the thrust.
///
/// The attachment point goes along the force direction at the leash length
/// that carries `|commanded|`; the center of mass sits `attachment_depth`
/// above it. Commands pointing down or more than 45 degrees off vertical are
/// rejected.
pub fn tension_controller(
    finger_pos: &Vec3,
    finger_vel: &Vec3,
    measured: &TetherForce,
    commanded: &Vec3,
    model: &QuadrotorModel,
    gains: &ControllerGains,
    tether: &TetherParams,
) -> Result<TensionSetpoint> {
    if !commanded.iter().all(|v| v.is_finite()) {
        return Err(Error::Domain("commanded force must be finite".into()));
    }
    if commanded.z < 0.0 {
        return Err(Error::InfeasibleCommand(alloc::format!(
            "tether cannot push: commanded force has z = {} N",
            commanded.z
        )));
    }
    let magnitude = commanded.norm();
    let direction = if magnitude > MIN_FORCE {
        let d = commanded / magnitude;
        if libm::acos(d.z.min(1.0)) > MAX_FORCE_ANGLE + 1e-12 {
            return Err(Error::InfeasibleCommand(alloc::format!(
                "force direction {:?} is more than 45 degrees off vertical",
                d
            )));
        }
        d
    } else {
        Vec3::z()
    };
    let reach = tether.rest_length + tether.stretch_for(magnitude);
    let target_pos = finger_pos + direction * reach + Vec3::new(0.0, 0.0, model.attachment_depth);
    let feedforward = commanded + (commanded - measured.on_finger) * gains.kp_tension;
    Ok(TensionSetpoint {
        target_pos,
        target_vel: *finger_vel,
        feedforward,
    })
}

/// Clamp collective thrust into the range where the requested moments
/// stay allocatable, so saturation costs thrust rather than attitude.
/// Moments that are infeasible at any thrust are left to the mixer clamp.
pub fn limit_thrust(u: &ControlInput, rotors: &RotorParams) -> ControlInput {
    let zero_thrust = ControlInput { u1: 0.0, ..*u };
    let offsets = squared_speeds(&zero_thrust, rotors);
    let low = offsets.iter().copied().fold(f64::INFINITY, f64::min);
    let high = offsets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let per_thrust = 4.0 * rotors.k_f;
    let min_u1 = per_thrust * (rotors.omega_min * rotors.omega_min - low);
    let max_u1 = per_thrust * (rotors.omega_max * rotors.omega_max - high);
    if !u.u1.is_finite() || min_u1 > max_u1 {
        return *u;
    }
    ControlInput {
        u1: u.u1.clamp(min_u1, max_u1),
        ..*u
    }
}

/// Everything one control tick needs besides the mode and measurements.
#[derive(Debug, Clone, Copy)]
pub struct ControlContext<'a> {
    pub model: &'a QuadrotorModel,
    pub gains: &'a ControllerGains,
    pub tether: &'a TetherParams,
    pub gravity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    pub command: RotorCommand,
    pub saturated: bool,
    /// Thrust and moments requested before allocation.
    pub input: ControlInput,
    pub target_pos: Vec3,
    pub attitude: Quat,
}

/// One control tick: mode setpoint, position loop, attitude loop, allocation.
///
/// `measured` is the force on the leash to `finger`; `other_pull` is the sum
/// of `on_drone` forces from any further leashes on this drone, which the
/// tension mode cancels through the feedforward, along with their torque
/// about the center of mass.
pub fn control_step(
    mode: &SetpointMode,
    drone: &RigidBodyState,
    finger_pos: &Vec3,
    finger_vel: &Vec3,
    measured: &TetherForce,
    other_pull: &Vec3,
    ctx: &ControlContext<'_>,
) -> Result<ControlOutput> {
    let (target_pos, target_vel, feedforward) = match mode {
        SetpointMode::Follow { offset } => (finger_pos + offset, *finger_vel, Vec3::zeros()),
        SetpointMode::Tension { force } => {
            let sp = tension_controller(
                finger_pos, finger_vel, measured, force, ctx.model, ctx.gains, ctx.tether,
            )?;
            (sp.target_pos, sp.target_vel, sp.feedforward - other_pull)
        }
    };
    let outer = position_controller(
        drone,
        &target_pos,
        &target_vel,
        &feedforward,
        ctx.model,
        ctx.gains,
        ctx.gravity,
    );
    // Leashes pull at the attachment point below the center of mass. The
    // leash being controlled keeps its torque, which aligns the airframe
    // with the pull; the others are cancelled so they cannot tilt it.
    let pull_body = drone.orientation.inverse() * other_pull;
    let leash_torque = ctx.model.attachment_offset().cross(&pull_body);
    let moments = attitude_controller(drone, &outer.attitude, ctx.model, ctx.gains) - leash_torque;
    let requested = ControlInput::new(outer.thrust, moments.x, moments.y, moments.z);
    let input = limit_thrust(&requested, &ctx.model.rotors);
    let allocation = mix_inverse(&input, &ctx.model.rotors)?;
    Ok(ControlOutput {
        command: allocation.command,
        saturated: allocation.saturated || input.u1 != requested.u1,
        input,
        target_pos,
        attitude: outer.attitude,
    })
}
