//! Massless leash between a fingertip and a drone's bottom-center attachment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Vec3;

/// Endpoints closer than this have no usable line of action.
pub const MIN_SEPARATION: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TetherKind {
    Elastic,
    /// Non-stretchable leash, realized as a stiff unilateral penalty.
    Inextensible,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TetherParams {
    pub kind: TetherKind,
    /// m.
    pub rest_length: f64,
    /// Spring constant of the elastic leash, N/m.
    #[serde(default)]
    pub stiffness: f64,
    /// N s/m.
    #[serde(default)]
    pub damping: f64,
    /// Penalty spring of the inextensible leash, N/m.
    #[serde(default = "default_constraint_stiffness")]
    pub constraint_stiffness: f64,
    /// N s/m.
    #[serde(default = "default_constraint_damping")]
    pub constraint_damping: f64,
}

fn default_constraint_stiffness() -> f64 {
    2000.0
}

fn default_constraint_damping() -> f64 {
    10.0
}

impl TetherParams {
    pub fn elastic(rest_length: f64, stiffness: f64, damping: f64) -> Self {
        Self {
            kind: TetherKind::Elastic,
            rest_length,
            stiffness,
            damping,
            constraint_stiffness: default_constraint_stiffness(),
            constraint_damping: default_constraint_damping(),
        }
    }

    pub fn inextensible(rest_length: f64) -> Self {
        Self {
            kind: TetherKind::Inextensible,
            rest_length,
            stiffness: 0.0,
            damping: 0.0,
            constraint_stiffness: default_constraint_stiffness(),
            constraint_damping: default_constraint_damping(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rest_length.is_finite() && self.rest_length > 0.0) {
            return Err(Error::config("rest_length", "must be finite and > 0"));
        }
        let non_negative = [
            ("stiffness", self.stiffness),
            ("damping", self.damping),
            ("constraint_stiffness", self.constraint_stiffness),
            ("constraint_damping", self.constraint_damping),
        ];
        for (field, value) in non_negative {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::config(field, "must be finite and >= 0"));
            }
        }
        let (k, _) = self.spring();
        if k <= 0.0 {
            let field = match self.kind {
                TetherKind::Elastic => "stiffness",
                TetherKind::Inextensible => "constraint_stiffness",
            };
            return Err(Error::config(field, "must be > 0 to transmit force"));
        }
        Ok(())
    }

    /// Active (stiffness, damping) pair for this leash kind.
    pub fn spring(&self) -> (f64, f64) {
        match self.kind {
            TetherKind::Elastic => (self.stiffness, self.damping),
            TetherKind::Inextensible => (self.constraint_stiffness, self.constraint_damping),
        }
    }

    /// Static stretch at which the leash carries `tension`.
    pub fn stretch_for(&self, tension: f64) -> f64 {
        let (k, _) = self.spring();
        tension / k
    }
}

/// Equal and opposite force pair transmitted by a leash, world frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TetherForce {
    /// Pull on the fingertip, toward the drone.
    pub on_finger: Vec3,
    /// Pull on the drone at its attachment point, toward the finger.
    pub on_drone: Vec3,
    /// N, never negative.
    pub tension: f64,
    pub taut: bool,
}

pub fn tether_force(
    attach_pos: &Vec3,
    attach_vel: &Vec3,
    finger_pos: &Vec3,
    finger_vel: &Vec3,
    params: &TetherParams,
) -> Result<TetherForce> {
    let span = attach_pos - finger_pos;
    let length = span.norm();
    if !length.is_finite() {
        return Err(Error::Domain("tether endpoints must be finite".into()));
    }
    if length <= MIN_SEPARATION {
        return Err(Error::DegenerateGeometry { separation: length });
    }
    let stretch = length - params.rest_length;
    if stretch <= 0.0 {
        return Ok(TetherForce::default());
    }
    let direction = span / length;
    let stretch_rate = (attach_vel - finger_vel).dot(&direction);
    let (k, c) = params.spring();
    let tension = (k * stretch + c * stretch_rate).max(0.0);
    let on_finger = direction * tension;
    Ok(TetherForce {
        on_finger,
        on_drone: -on_finger,
        tension,
        taut: true,
    })
}

/// Net leash force on one finger.
pub fn sum_finger_forces<'a, I>(forces: I) -> Vec3
where
    I: IntoIterator<Item = &'a TetherForce>,
{
    forces
        .into_iter()
        .fold(Vec3::zeros(), |acc, f| acc + f.on_finger)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{Rotation3, Vector3};
    use proptest::prelude::*;

    fn at_rest(attach: Vec3, finger: Vec3, p: &TetherParams) -> Result<TetherForce> {
        tether_force(&attach, &Vec3::zeros(), &finger, &Vec3::zeros(), p)
    }

    #[test]
    fn slack_leash_is_force_free() {
        let p = TetherParams::elastic(0.5, 50.0, 1.0);
        let f = at_rest(Vec3::new(0.0, 0.0, 0.4), Vec3::zeros(), &p).unwrap();
        assert_eq!(f, TetherForce::default());
        assert!(!f.taut);
    }

    #[test]
    fn elastic_spring_law() {
        let p = TetherParams::elastic(0.5, 50.0, 0.0);
        let f = at_rest(Vec3::new(0.0, 0.0, 0.52), Vec3::zeros(), &p).unwrap();
        assert_relative_eq!(f.tension, 1.0, max_relative = 1e-12);
        assert!(f.taut);
        assert_relative_eq!(f.on_finger, Vec3::new(0.0, 0.0, 1.0), max_relative = 1e-12);
        assert_eq!(f.on_drone, -f.on_finger);
    }

    #[test]
    fn fast_slackening_clamps_to_zero() {
        let p = TetherParams::elastic(0.5, 50.0, 10.0);
        let f = tether_force(
            &Vec3::new(0.0, 0.0, 0.51),
            &Vec3::new(0.0, 0.0, -1.0),
            &Vec3::zeros(),
            &Vec3::zeros(),
            &p,
        )
        .unwrap();
        assert_eq!(f.tension, 0.0);
        assert_eq!(f.on_finger, Vec3::zeros());
        assert!(f.taut);
    }

    #[test]
    fn inextensible_uses_penalty_constants() {
        let p = TetherParams::inextensible(0.3);
        let f = at_rest(Vec3::new(0.0, 0.0, 0.3005), Vec3::zeros(), &p).unwrap();
        assert_relative_eq!(f.tension, 2000.0 * 0.0005, max_relative = 1e-9);
    }

    #[test]
    fn coincident_endpoints_rejected() {
        let p = TetherParams::elastic(0.5, 50.0, 0.0);
        let e = at_rest(Vec3::new(1.0, 2.0, 3.0), Vec3::new(1.0, 2.0, 3.0), &p).unwrap_err();
        assert!(matches!(e, Error::DegenerateGeometry { .. }));
    }

    #[test]
    fn validation() {
        assert!(matches!(
            TetherParams::elastic(0.0, 50.0, 0.0).validate(),
            Err(Error::Config { field, .. }) if field == "rest_length"
        ));
        assert!(TetherParams::elastic(0.5, -1.0, 0.0).validate().is_err());
        assert!(TetherParams::inextensible(0.5).validate().is_ok());
    }

    #[test]
    fn summing_finger_forces() {
        assert_eq!(sum_finger_forces(&[]), Vec3::zeros());

        let up = TetherForce {
            on_finger: Vec3::new(0.0, 0.0, 1.0),
            on_drone: Vec3::new(0.0, 0.0, -1.0),
            tension: 1.0,
            taut: true,
        };
        let down = TetherForce {
            on_finger: -up.on_finger,
            on_drone: up.on_finger,
            ..up
        };
        assert_eq!(sum_finger_forces(&[up, down]), Vec3::zeros());

        // 1.0 N straight up from an elastic leash plus 0.5 N at 45 degrees in
        // the x-z plane from an inextensible one.
        let elastic = TetherParams::elastic(0.5, 50.0, 0.0);
        let a = at_rest(Vec3::new(0.0, 0.0, 0.52), Vec3::zeros(), &elastic).unwrap();
        let stiff = TetherParams::inextensible(0.4);
        let reach = 0.4 + 0.5 / 2000.0;
        let h = reach / 2f64.sqrt();
        let b = at_rest(Vec3::new(h, 0.0, h), Vec3::zeros(), &stiff).unwrap();
        let total = sum_finger_forces(&[a, b]);
        let half = 0.5 / 2f64.sqrt();
        assert_relative_eq!(total, Vec3::new(half, 0.0, 1.0 + half), epsilon = 1e-9);
        assert!((total.x - 0.3536).abs() < 1e-4 && (total.z - 1.3536).abs() < 1e-4);
    }

    fn vec3(range: f64) -> impl Strategy<Value = Vec3> {
        prop::array::uniform3(-range..range).prop_map(Vector3::from)
    }

    fn params() -> impl Strategy<Value = TetherParams> {
        (0.05..1.0f64, 0.0..500.0f64, 0.0..20.0f64, any::<bool>()).prop_map(|(l, k, c, e)| {
            if e {
                TetherParams::elastic(l, k, c)
            } else {
                TetherParams::inextensible(l)
            }
        })
    }

    proptest! {
        #[test]
        fn force_pair_invariants(a in vec3(1.0), va in vec3(2.0), f in vec3(1.0), vf in vec3(2.0), p in params()) {
            prop_assume!((a - f).norm() > 1e-6);
            let t = tether_force(&a, &va, &f, &vf, &p).unwrap();
            prop_assert_eq!(t.on_finger + t.on_drone, Vec3::zeros());
            prop_assert!(t.tension >= 0.0);
            prop_assert!((t.on_finger.norm() - t.tension).abs() <= 1e-12 * t.tension.max(1.0));
            let span = a - f;
            let cross = t.on_finger.cross(&span).norm();
            prop_assert!(cross <= 1e-12 * (t.tension * span.norm()).max(1e-300));
            if span.norm() < p.rest_length {
                prop_assert_eq!(t, TetherForce::default());
            }
        }

        #[test]
        fn rotating_inputs_rotates_forces(
            a in vec3(1.0), va in vec3(1.0), f in vec3(1.0), vf in vec3(1.0),
            axis in vec3(1.0), angle in -3.0..3.0f64, p in params()
        ) {
            prop_assume!((a - f).norm() > 1e-3 && axis.norm() > 1e-3);
            let r = Rotation3::new(axis.normalize() * angle);
            let base = tether_force(&a, &va, &f, &vf, &p).unwrap();
            let rotated = tether_force(&(r * a), &(r * va), &(r * f), &(r * vf), &p).unwrap();
            let scale = base.tension.max(1.0);
            prop_assert!((r * base.on_finger - rotated.on_finger).norm() <= 1e-12 * scale);
            prop_assert!((r * base.on_drone - rotated.on_drone).norm() <= 1e-12 * scale);
        }

        #[test]
        fn elastic_tension_continuous_at_rest_length(k in 1.0..500.0f64, l in 0.1..1.0f64, eps in 0.0..1e-9f64) {
            let p = TetherParams::elastic(l, k, 0.0);
            let above = tether_force(&Vec3::new(0.0, 0.0, l + eps), &Vec3::zeros(), &Vec3::zeros(), &Vec3::zeros(), &p).unwrap();
            prop_assert!(above.tension <= k * 2e-9);
        }
    }
}
