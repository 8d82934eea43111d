//! Quadrotor actuation and rigid-body dynamics.
//!
//! Rotor layout (plus configuration, viewed from above, body z up):
//!
//! ```text
//!             2 (+y)
//!             |
//!   3 (-x) ---+--- 1 (+x)
//!             |
//!             4 (-y)
//! ```
//!
//! With this layout the second row of the mixer, `k_f L (w2^2 - w4^2)`, is the
//! moment about body x and the third row, `k_f L (w3^2 - w1^2)`, the moment
//! about body y. Rotors 1/3 and 2/4 spin in opposite directions under the
//! alternating-sign yaw convention.

use libm::sqrt;
use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{Quat, Vec3};

/// Rotor aerodynamic coefficients and geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotorParams {
    /// Thrust coefficient, N s^2 / rad^2.
    pub k_f: f64,
    /// Drag-moment coefficient, N m s^2 / rad^2.
    pub k_m: f64,
    /// Arm length from center of mass to rotor axis, m.
    pub arm_length: f64,
    pub omega_min: f64,
    pub omega_max: f64,
}

impl Default for RotorParams {
    fn default() -> Self {
        Self {
            k_f: 1.7e-8,
            k_m: 1.4e-10,
            arm_length: 0.046,
            omega_min: 0.0,
            omega_max: 2500.0,
        }
    }
}

impl RotorParams {
    pub fn validate(&self) -> Result<()> {
        positive("k_f", self.k_f)?;
        positive("k_m", self.k_m)?;
        positive("arm_length", self.arm_length)?;
        if !(self.omega_min.is_finite() && self.omega_min >= 0.0) {
            return Err(Error::config("omega_min", "must be finite and >= 0"));
        }
        if !(self.omega_max.is_finite() && self.omega_max > self.omega_min) {
            return Err(Error::config("omega_max", "must be finite and > omega_min"));
        }
        Ok(())
    }

    /// Collective thrust with every rotor at `omega_max`.
    pub fn max_collective_thrust(&self) -> f64 {
        4.0 * self.k_f * self.omega_max * self.omega_max
    }
}

pub(crate) fn positive(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::config(
            field,
            alloc::format!("must be finite and > 0, got {value}"),
        ))
    }
}

/// Four rotor speeds in rad/s, indexed 1..4 as `omega[0]..omega[3]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RotorCommand {
    pub omega: [f64; 4],
}

impl RotorCommand {
    pub fn new(omega: [f64; 4]) -> Self {
        Self { omega }
    }

    pub fn uniform(omega: f64) -> Self {
        Self { omega: [omega; 4] }
    }

    /// Clamp every speed into the rotor limits.
    pub fn clamped(self, params: &RotorParams) -> Self {
        Self {
            omega: self
                .omega
                .map(|w| w.clamp(params.omega_min, params.omega_max)),
        }
    }

    fn squared(&self) -> Vector4<f64> {
        let [a, b, c, d] = self.omega;
        Vector4::new(a * a, b * b, c * c, d * d)
    }
}

/// Collective thrust and body moments.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlInput {
    /// Collective thrust along body z, N.
    pub u1: f64,
    /// Moment about body x, N m.
    pub u2: f64,
    /// Moment about body y, N m.
    pub u3: f64,
    /// Moment about body z, N m.
    pub u4: f64,
}

impl ControlInput {
    pub fn new(u1: f64, u2: f64, u3: f64, u4: f64) -> Self {
        Self { u1, u2, u3, u4 }
    }

    pub fn as_vector(&self) -> Vector4<f64> {
        Vector4::new(self.u1, self.u2, self.u3, self.u4)
    }

    pub fn moments(&self) -> Vec3 {
        Vec3::new(self.u2, self.u3, self.u4)
    }
}

/// Sign pattern of the yaw row of the mixer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YawConvention {
    /// `u4 = k_m (w1^2 + w2^2 + w3^2 + w4^2)`. Rank deficient: the yaw row is
    /// proportional to the thrust row.
    Uniform,
    /// `u4 = k_m (w1^2 - w2^2 + w3^2 - w4^2)`, counter-rotating pairs.
    #[default]
    AlternatingSigns,
}

/// Pose and twist of a rigid body. Orientation maps body frame to world frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidBodyState {
    /// World frame, m.
    pub position: Vec3,
    /// World frame, m/s.
    pub velocity: Vec3,
    pub orientation: Quat,
    /// Body frame, rad/s.
    pub angular_velocity: Vec3,
}

impl Default for RigidBodyState {
    fn default() -> Self {
        Self::at_rest(Vec3::zeros())
    }
}

impl RigidBodyState {
    pub fn at_rest(position: Vec3) -> Self {
        Self {
            position,
            velocity: Vec3::zeros(),
            orientation: Quat::identity(),
            angular_velocity: Vec3::zeros(),
        }
    }

    /// Body thrust axis expressed in the world frame.
    pub fn thrust_axis(&self) -> Vec3 {
        self.orientation * Vec3::z()
    }

    /// Angle between the body thrust axis and world vertical, rad.
    pub fn tilt(&self) -> f64 {
        let z = self.thrust_axis();
        libm::atan2(libm::hypot(z.x, z.y), z.z)
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|v| v.is_finite())
            && self.velocity.iter().all(|v| v.is_finite())
            && self.orientation.coords.iter().all(|v| v.is_finite())
            && self.angular_velocity.iter().all(|v| v.is_finite())
    }

    /// Position of a body-frame point in the world frame.
    pub fn point_position(&self, body_offset: &Vec3) -> Vec3 {
        self.position + self.orientation * body_offset
    }

    /// Velocity of a body-frame point in the world frame.
    pub fn point_velocity(&self, body_offset: &Vec3) -> Vec3 {
        self.velocity + self.orientation * self.angular_velocity.cross(body_offset)
    }
}

/// Mass properties, rotors and tether attachment of one vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadrotorModel {
    /// kg.
    pub mass: f64,
    /// Diagonal of the body inertia tensor, kg m^2.
    pub inertia: Vec3,
    pub rotors: RotorParams,
    /// Distance of the tether attachment below the center of mass, m.
    #[serde(default = "default_attachment_depth")]
    pub attachment_depth: f64,
}

fn default_attachment_depth() -> f64 {
    0.01
}

impl Default for QuadrotorModel {
    fn default() -> Self {
        Self {
            mass: 0.027,
            inertia: Vec3::new(1.4e-5, 1.4e-5, 2.2e-5),
            rotors: RotorParams::default(),
            attachment_depth: default_attachment_depth(),
        }
    }
}

impl QuadrotorModel {
    pub fn validate(&self) -> Result<()> {
        positive("mass", self.mass)?;
        for v in self.inertia.iter() {
            positive("inertia", *v)?;
        }
        if !(self.attachment_depth.is_finite() && self.attachment_depth >= 0.0) {
            return Err(Error::config("attachment_depth", "must be finite and >= 0"));
        }
        self.rotors.validate()
    }

    /// Tether attachment point in the body frame: bottom center.
    pub fn attachment_offset(&self) -> Vec3 {
        Vec3::new(0.0, 0.0, -self.attachment_depth)
    }

    /// Rotor speed whose collective thrust balances weight.
    pub fn hover_speed(&self, gravity: f64) -> f64 {
        sqrt(self.mass * gravity / self.rotors.k_f / 4.0)
    }
}

/// Thrust and drag moment of a single rotor spinning at `omega`.
pub fn rotor_thrust_moment(omega: f64, params: &RotorParams) -> Result<(f64, f64)> {
    if !(omega >= 0.0) || !omega.is_finite() {
        return Err(Error::Domain(alloc::format!(
            "rotor speed must be finite and non-negative, got {omega}"
        )));
    }
    let w2 = omega * omega;
    Ok((params.k_f * w2, params.k_m * w2))
}

/// The 4x4 map from squared rotor speeds to `(u1, u2, u3, u4)`.
pub fn mixer_matrix(params: &RotorParams, yaw: YawConvention) -> Matrix4<f64> {
    let kf = params.k_f;
    let kfl = params.k_f * params.arm_length;
    let km = params.k_m;
    let yaw_row = match yaw {
        YawConvention::Uniform => [km, km, km, km],
        YawConvention::AlternatingSigns => [km, -km, km, -km],
    };
    Matrix4::new(
        kf, kf, kf, kf, //
        0.0, kfl, 0.0, -kfl, //
        -kfl, 0.0, kfl, 0.0, //
        yaw_row[0], yaw_row[1], yaw_row[2], yaw_row[3],
    )
}

/// Rotor speeds to collective thrust and body moments.
pub fn mix_forward(cmd: &RotorCommand, params: &RotorParams, yaw: YawConvention) -> ControlInput {
    let s = cmd.squared();
    let kf = params.k_f;
    let l = params.arm_length;
    let u4 = match yaw {
        YawConvention::Uniform => params.k_m * (s[0] + s[1] + s[2] + s[3]),
        YawConvention::AlternatingSigns => params.k_m * (s[0] - s[1] + s[2] - s[3]),
    };
    ControlInput {
        u1: kf * (s[0] + s[1] + s[2] + s[3]),
        u2: kf * l * (s[1] - s[3]),
        u3: kf * l * (s[2] - s[0]),
        u4,
    }
}

/// Result of inverting the mixer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Allocation {
    pub command: RotorCommand,
    /// True when at least one squared speed had to be clamped.
    pub saturated: bool,
}

/// Unclamped squared rotor speeds for `u` under the alternating-sign mixer.
pub(crate) fn squared_speeds(u: &ControlInput, params: &RotorParams) -> [f64; 4] {
    let thrust = u.u1 / params.k_f;
    let roll = u.u2 / (params.k_f * params.arm_length);
    let pitch = u.u3 / (params.k_f * params.arm_length);
    let yaw = u.u4 / params.k_m;

    let odd = (thrust + yaw) / 2.0; // w1^2 + w3^2
    let even = (thrust - yaw) / 2.0; // w2^2 + w4^2
    [
        (odd - pitch) / 2.0,
        (even + roll) / 2.0,
        (odd + pitch) / 2.0,
        (even - roll) / 2.0,
    ]
}

/// Solve the alternating-sign mixer for rotor speeds.
///
/// The uniform yaw row is singular and is never inverted. Squared speeds
/// outside `[omega_min^2, omega_max^2]` are clamped and flagged.
pub fn mix_inverse(u: &ControlInput, params: &RotorParams) -> Result<Allocation> {
    if !u.as_vector().iter().all(|v| v.is_finite()) {
        return Err(Error::Domain("control input must be finite".into()));
    }
    let squared = squared_speeds(u, params);

    let lo = params.omega_min * params.omega_min;
    let hi = params.omega_max * params.omega_max;
    let mut saturated = false;
    let omega = squared.map(|s| {
        if s < lo || s > hi {
            saturated = true;
        }
        sqrt(s.clamp(lo, hi))
    });
    Ok(Allocation {
        command: RotorCommand { omega },
        saturated,
    })
}

/// Advance one fixed step with semi-implicit Euler.
///
/// `external_force` is a world-frame force applied at the tether attachment
/// point, so it also produces a body torque. `external_torque` is an extra
/// body-frame torque. Rotor moments use the alternating-sign yaw convention.
pub fn step_dynamics(
    state: &RigidBodyState,
    cmd: &RotorCommand,
    external_force: &Vec3,
    external_torque: &Vec3,
    model: &QuadrotorModel,
    gravity: f64,
    dt: f64,
) -> Result<RigidBodyState> {
    if !(dt > 0.0) {
        return Err(Error::Domain(alloc::format!(
            "dt must be positive, got {dt}"
        )));
    }
    let u = mix_forward(cmd, &model.rotors, YawConvention::AlternatingSigns);
    let rotation = state.orientation;

    let thrust = rotation * Vec3::new(0.0, 0.0, u.u1);
    let acceleration = (thrust + external_force) / model.mass - Vec3::new(0.0, 0.0, gravity);
    let velocity = state.velocity + acceleration * dt;
    let position = state.position + velocity * dt;

    let force_body = rotation.inverse_transform_vector(external_force);
    let torque = u.moments() + model.attachment_offset().cross(&force_body) + external_torque;
    let w = state.angular_velocity;
    let momentum = model.inertia.component_mul(&w);
    let angular_acceleration = (torque - w.cross(&momentum)).component_div(&model.inertia);
    let angular_velocity = w + angular_acceleration * dt;

    let q = rotation.into_inner();
    let spin = nalgebra::Quaternion::from_parts(0.0, angular_velocity);
    let orientation = Quat::new_normalize(q + (q * spin) * (0.5 * dt));

    let next = RigidBodyState {
        position,
        velocity,
        orientation,
        angular_velocity,
    };
    if !next.is_finite() {
        return Err(Error::Domain(alloc::format!(
            "non-finite state after step: {next:?} (from {state:?}, cmd {cmd:?})"
        )));
    }
    Ok(next)
}
