//! Virtual surfaces, the tracked hand, finger-to-drone assignment, contact
//! prediction and drone activation.

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::control::SetpointMode;
use crate::error::{Error, Result};
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Finger {
    Thumb,
    Index,
    Middle,
    Ring,
    Little,
}

impl Finger {
    pub const ALL: [Finger; 5] = [
        Finger::Thumb,
        Finger::Index,
        Finger::Middle,
        Finger::Ring,
        Finger::Little,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Finger> {
        Finger::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Finger::Thumb => "thumb",
            Finger::Index => "index",
            Finger::Middle => "middle",
            Finger::Ring => "ring",
            Finger::Little => "little",
        }
    }
}

impl fmt::Display for Finger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FingerState {
    pub position: Vec3,
    pub velocity: Vec3,
}

/// Five fingertip states, indexed by [`Finger`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Hand {
    pub fingers: [FingerState; 5],
}

impl Hand {
    pub fn finger(&self, f: Finger) -> &FingerState {
        &self.fingers[f.index()]
    }
}

/// Axis-aligned rectangle in the x-y plane, m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extent {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Extent {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min[0] && x <= self.max[0] && y >= self.min[1] && y <= self.max[1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SurfaceKind {
    HorizontalPlane { height: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirtualSurface {
    pub kind: SurfaceKind,
    /// N/m.
    pub stiffness: f64,
    /// N s/m.
    #[serde(default)]
    pub damping: f64,
    pub extent: Extent,
}

impl VirtualSurface {
    pub fn horizontal(height: f64, stiffness: f64, damping: f64, extent: Extent) -> Self {
        Self {
            kind: SurfaceKind::HorizontalPlane { height },
            stiffness,
            damping,
            extent,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.stiffness.is_finite() && self.stiffness > 0.0) {
            return Err(Error::config("stiffness", "surface stiffness must be > 0"));
        }
        if !(self.damping.is_finite() && self.damping >= 0.0) {
            return Err(Error::config("damping", "surface damping must be >= 0"));
        }
        let SurfaceKind::HorizontalPlane { height } = self.kind;
        if !height.is_finite() {
            return Err(Error::config("height", "must be finite"));
        }
        let e = &self.extent;
        if !(e.min[0] <= e.max[0] && e.min[1] <= e.max[1]) {
            return Err(Error::config("extent", "min must not exceed max"));
        }
        Ok(())
    }

    fn height(&self) -> f64 {
        let SurfaceKind::HorizontalPlane { height } = self.kind;
        height
    }

    /// Penetration depth, or `None` outside the extent or above the plane.
    pub fn depth(&self, position: &Vec3) -> Option<f64> {
        let h = self.height();
        (self.extent.contains(position.x, position.y) && position.z <= h).then(|| h - position.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactStatus {
    Approaching,
    InContact,
    Clear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactPrediction {
    pub finger: Finger,
    pub status: ContactStatus,
    /// s; zero unless approaching.
    pub time_to_contact: f64,
    /// Predicted crossing point while approaching, current position otherwise.
    pub predicted_point: Vec3,
    /// m; non-zero only in contact.
    pub depth: f64,
    /// Index of the surface the prediction refers to.
    pub surface: Option<usize>,
}

impl ContactPrediction {
    pub fn clear(finger: Finger, state: &FingerState) -> Self {
        Self {
            finger,
            status: ContactStatus::Clear,
            time_to_contact: 0.0,
            predicted_point: state.position,
            depth: 0.0,
            surface: None,
        }
    }
}

/// Constant-velocity intersection test against one surface.
pub fn predict_contact(
    finger: Finger,
    state: &FingerState,
    surface: &VirtualSurface,
    horizon: f64,
) -> ContactPrediction {
    let p = state.position;
    let v = state.velocity;
    if let Some(depth) = surface.depth(&p) {
        return ContactPrediction {
            status: ContactStatus::InContact,
            depth,
            ..ContactPrediction::clear(finger, state)
        };
    }
    let gap = p.z - surface.height();
    if gap > 0.0 && v.z < 0.0 {
        let ttc = gap / -v.z;
        if ttc <= horizon {
            let point = Vec3::new(p.x + v.x * ttc, p.y + v.y * ttc, surface.height());
            if surface.extent.contains(point.x, point.y) {
                return ContactPrediction {
                    status: ContactStatus::Approaching,
                    time_to_contact: ttc,
                    predicted_point: point,
                    ..ContactPrediction::clear(finger, state)
                };
            }
        }
    }
    ContactPrediction::clear(finger, state)
}

/// Most urgent prediction over all surfaces: deepest contact, else earliest
/// approach, else clear.
pub fn predict_scene(
    finger: Finger,
    state: &FingerState,
    surfaces: &[VirtualSurface],
    horizon: f64,
) -> ContactPrediction {
    let mut best = ContactPrediction::clear(finger, state);
    for (i, surface) in surfaces.iter().enumerate() {
        let mut p = predict_contact(finger, state, surface, horizon);
        p.surface = Some(i);
        let better = match (p.status, best.status) {
            (ContactStatus::InContact, ContactStatus::InContact) => p.depth > best.depth,
            (ContactStatus::InContact, _) => true,
            (ContactStatus::Approaching, ContactStatus::Approaching) => {
                p.time_to_contact < best.time_to_contact
            }
            (ContactStatus::Approaching, ContactStatus::Clear) => true,
            _ => false,
        };
        if better {
            best = p;
        }
    }
    best
}

/// Penalty force for a finger inside `surface`, pointing up and clamped to
/// `max_force`. Zero out of contact.
pub fn desired_force(state: &FingerState, surface: &VirtualSurface, max_force: f64) -> Vec3 {
    match surface.depth(&state.position) {
        Some(depth) if depth > 0.0 => {
            let magnitude =
                surface.stiffness * depth + surface.damping * (-state.velocity.z).max(0.0);
            Vec3::new(0.0, 0.0, magnitude.min(max_force))
        }
        _ => Vec3::zeros(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum AssignmentPolicy {
    /// One drone on one finger; the others are untracked.
    Single { finger: Finger },
    /// One drone per finger, in finger order.
    OnePerFinger,
    /// Thumb, index+middle and ring+little each share a drone.
    ThreeGroups,
    /// Two drones, with different leashes, on one finger.
    DualTether { finger: Finger },
}

impl AssignmentPolicy {
    pub fn drones_required(&self) -> usize {
        match self {
            AssignmentPolicy::Single { .. } => 1,
            AssignmentPolicy::OnePerFinger => 5,
            AssignmentPolicy::ThreeGroups => 3,
            AssignmentPolicy::DualTether { .. } => 2,
        }
    }
}

/// Fingers served together by a set of drones. Every drone in `drones` has
/// one leash to every finger in `fingers`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FingerGroup {
    pub fingers: Vec<Finger>,
    pub drones: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FingerAssignment {
    pub groups: Vec<FingerGroup>,
}

/// One leash: which finger it ties to which drone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TetherEntry {
    pub finger: Finger,
    pub drone: usize,
}

impl FingerAssignment {
    /// Groups must be non-empty, finger sets disjoint, and every drone must
    /// belong to exactly one group.
    pub fn validate(&self) -> Result<()> {
        let mut fingers_seen = [false; 5];
        let mut drones_seen: Vec<usize> = Vec::new();
        for g in &self.groups {
            if g.fingers.is_empty() || g.drones.is_empty() {
                return Err(Error::config("assignment", "empty finger group"));
            }
            for f in &g.fingers {
                if core::mem::replace(&mut fingers_seen[f.index()], true) {
                    return Err(Error::config(
                        "assignment",
                        alloc::format!("{f} in two groups"),
                    ));
                }
            }
            for d in &g.drones {
                if drones_seen.contains(d) {
                    return Err(Error::config(
                        "assignment",
                        alloc::format!("drone {d} assigned twice"),
                    ));
                }
                drones_seen.push(*d);
            }
        }
        Ok(())
    }

    pub fn group_of_drone(&self, drone: usize) -> Option<&FingerGroup> {
        self.groups.iter().find(|g| g.drones.contains(&drone))
    }

    pub fn drones_for(&self, finger: Finger) -> &[usize] {
        self.groups
            .iter()
            .find(|g| g.fingers.contains(&finger))
            .map_or(&[], |g| g.drones.as_slice())
    }

    /// Leashes in canonical order: group, then drone, then finger.
    pub fn tether_entries(&self) -> Vec<TetherEntry> {
        self.groups
            .iter()
            .flat_map(|g| {
                g.drones.iter().flat_map(move |&drone| {
                    g.fingers
                        .iter()
                        .map(move |&finger| TetherEntry { finger, drone })
                })
            })
            .collect()
    }
}

/// Map drones to fingers. Uses the first `policy.drones_required()` ids;
/// any further drones stay unassigned.
pub fn assign_drones(drone_ids: &[usize], policy: AssignmentPolicy) -> Result<FingerAssignment> {
    let need = policy.drones_required();
    if drone_ids.len() < need {
        return Err(Error::config(
            "drones",
            alloc::format!("{policy:?} needs {need} drones, got {}", drone_ids.len()),
        ));
    }
    let group = |fingers: &[Finger], drones: &[usize]| FingerGroup {
        fingers: fingers.to_vec(),
        drones: drones.to_vec(),
    };
    let d = drone_ids;
    let groups = match policy {
        AssignmentPolicy::Single { finger } => alloc::vec![group(&[finger], &[d[0]])],
        AssignmentPolicy::OnePerFinger => Finger::ALL
            .iter()
            .zip(d)
            .map(|(f, id)| group(&[*f], &[*id]))
            .collect(),
        AssignmentPolicy::ThreeGroups => alloc::vec![
            group(&[Finger::Thumb], &[d[0]]),
            group(&[Finger::Index, Finger::Middle], &[d[1]]),
            group(&[Finger::Ring, Finger::Little], &[d[2]]),
        ],
        AssignmentPolicy::DualTether { finger } => alloc::vec![group(&[finger], &[d[0], d[1]])],
    };
    let assignment = FingerAssignment { groups };
    assignment.validate()?;
    Ok(assignment)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivationConfig {
    /// Activate when contact is predicted sooner than this, s.
    pub lead_time: f64,
    /// Stay in tension until the group has been clear this long, s.
    pub release_delay: f64,
    /// Commanded force ramps in linearly over this long after activation, s.
    pub ramp_time: f64,
    /// Prediction look-ahead, s.
    pub horizon: f64,
    /// Upper bound on the rendered force magnitude, N.
    pub max_force: f64,
}

impl Default for ActivationConfig {
    fn default() -> Self {
        Self {
            lead_time: 0.3,
            release_delay: 0.1,
            ramp_time: 0.05,
            horizon: 1.0,
            max_force: 1.5,
        }
    }
}

impl ActivationConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("lead_time", self.lead_time),
            ("release_delay", self.release_delay),
            ("ramp_time", self.ramp_time),
        ];
        for (field, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(field, "must be finite and >= 0"));
            }
        }
        crate::dynamics::positive("horizon", self.horizon)?;
        crate::dynamics::positive("max_force", self.max_force)
    }
}

/// Per-drone activation memory carried between control ticks.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActivationState {
    pub active: bool,
    pub activated_at: f64,
    pub clear_since: Option<f64>,
    /// Finger the drone last rendered for.
    pub finger: Option<Finger>,
}

/// What one drone should do this control tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DroneSetpoint {
    pub mode: SetpointMode,
    /// Finger the setpoint refers to.
    pub finger: Finger,
    /// This drone's share of the finger's force, before the activation ramp.
    pub desired: Vec3,
}

fn engaged(p: &ContactPrediction, lead_time: f64) -> bool {
    match p.status {
        ContactStatus::InContact => true,
        ContactStatus::Approaching => p.time_to_contact < lead_time,
        ContactStatus::Clear => false,
    }
}

/// Decide follow or tension for every drone in `assignment`.
///
/// A group activates as soon as one of its fingers is in contact or predicted
/// to touch within `lead_time`; it releases only after `release_delay` of
/// continuous clearance. Within a group the deepest finger is rendered (the
/// soonest approaching one before contact). Drones sharing a finger split its
/// force equally. `follow_offsets[d]` is drone `d`'s hover offset.
///
/// Returns one setpoint per drone id in `0..states.len()`; unassigned drones
/// get `None`.
pub fn activation_logic(
    predictions: &[ContactPrediction; 5],
    forces: &[Vec3; 5],
    assignment: &FingerAssignment,
    states: &mut [ActivationState],
    follow_offsets: &[Vec3],
    time: f64,
    config: &ActivationConfig,
) -> Vec<Option<DroneSetpoint>> {
    let mut out = alloc::vec![None; states.len()];
    for group in &assignment.groups {
        let candidates = group
            .fingers
            .iter()
            .map(|f| &predictions[f.index()])
            .filter(|p| engaged(p, config.lead_time));
        let selected = candidates.fold(None::<&ContactPrediction>, |best, p| match best {
            None => Some(p),
            Some(b) => {
                let better = match (p.status, b.status) {
                    (ContactStatus::InContact, ContactStatus::InContact) => p.depth > b.depth,
                    (ContactStatus::InContact, _) => true,
                    (ContactStatus::Approaching, ContactStatus::Approaching) => {
                        p.time_to_contact < b.time_to_contact
                    }
                    _ => false,
                };
                Some(if better { p } else { b })
            }
        });
        let share = 1.0 / group.drones.len() as f64;
        for &drone in &group.drones {
            let Some(state) = states.get_mut(drone) else {
                continue;
            };
            match selected {
                Some(p) => {
                    if !state.active {
                        state.active = true;
                        state.activated_at = time;
                    }
                    state.clear_since = None;
                    state.finger = Some(p.finger);
                }
                None if state.active => {
                    let since = *state.clear_since.get_or_insert(time);
                    if time - since >= config.release_delay {
                        state.active = false;
                        state.clear_since = None;
                    }
                }
                None => {}
            }

            let setpoint = if state.active {
                let finger = state.finger.unwrap_or(group.fingers[0]);
                let desired = match selected {
                    Some(p) if p.status == ContactStatus::InContact => {
                        forces[p.finger.index()] * share
                    }
                    _ => Vec3::zeros(),
                };
                let ramp = if config.ramp_time > 0.0 {
                    ((time - state.activated_at) / config.ramp_time).clamp(0.0, 1.0)
                } else {
                    1.0
                };
                DroneSetpoint {
                    mode: SetpointMode::Tension {
                        force: desired * ramp,
                    },
                    finger,
                    desired,
                }
            } else {
                DroneSetpoint {
                    mode: SetpointMode::Follow {
                        offset: follow_offsets.get(drone).copied().unwrap_or_default(),
                    },
                    finger: group.fingers[0],
                    desired: Vec3::zeros(),
                }
            };
            out[drone] = Some(setpoint);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn plane() -> VirtualSurface {
        VirtualSurface::horizontal(
            0.0,
            300.0,
            2.0,
            Extent {
                min: [-1.0, -1.0],
                max: [1.0, 1.0],
            },
        )
    }

    fn finger_at(z: f64, vz: f64) -> FingerState {
        FingerState {
            position: Vec3::new(0.0, 0.0, z),
            velocity: Vec3::new(0.0, 0.0, vz),
        }
    }

    #[test]
    fn approaching_time_to_contact() {
        let p = predict_contact(Finger::Index, &finger_at(0.1, -0.5), &plane(), 1.0);
        assert_eq!(p.status, ContactStatus::Approaching);
        assert_relative_eq!(p.time_to_contact, 0.2, max_relative = 1e-15);
        assert_eq!(p.predicted_point.z, 0.0);
    }

    #[test]
    fn receding_and_out_of_horizon_are_clear() {
        assert_eq!(
            predict_contact(Finger::Index, &finger_at(0.1, 0.5), &plane(), 1.0).status,
            ContactStatus::Clear
        );
        assert_eq!(
            predict_contact(Finger::Index, &finger_at(0.1, -0.05), &plane(), 1.0).status,
            ContactStatus::Clear
        );
        // crossing outside the extent
        let s = FingerState {
            position: Vec3::new(0.9, 0.0, 0.1),
            velocity: Vec3::new(1.0, 0.0, -0.5),
        };
        assert_eq!(
            predict_contact(Finger::Index, &s, &plane(), 1.0).status,
            ContactStatus::Clear
        );
    }

    #[test]
    fn in_contact_depth() {
        let p = predict_contact(Finger::Ring, &finger_at(-0.01, 0.0), &plane(), 1.0);
        assert_eq!(p.status, ContactStatus::InContact);
        assert_relative_eq!(p.depth, 0.01, max_relative = 1e-15);
        let outside = FingerState {
            position: Vec3::new(2.0, 0.0, -0.01),
            velocity: Vec3::zeros(),
        };
        assert_eq!(
            predict_contact(Finger::Ring, &outside, &plane(), 1.0).status,
            ContactStatus::Clear
        );
    }

    #[test]
    fn scene_prediction_prefers_deepest_then_soonest() {
        let ext = plane().extent;
        let low = VirtualSurface::horizontal(-0.05, 300.0, 0.0, ext);
        let high = VirtualSurface::horizontal(0.02, 300.0, 0.0, ext);
        let p = predict_scene(Finger::Index, &finger_at(0.0, 0.0), &[low, high], 1.0);
        assert_eq!((p.status, p.surface), (ContactStatus::InContact, Some(1)));
        let p = predict_scene(Finger::Index, &finger_at(0.1, -0.5), &[low, high], 1.0);
        assert_eq!((p.status, p.surface), (ContactStatus::Approaching, Some(1)));
        let p = predict_scene(Finger::Index, &finger_at(0.1, 0.5), &[low, high], 1.0);
        assert_eq!((p.status, p.surface), (ContactStatus::Clear, None));
    }

    #[test]
    fn penalty_force_values() {
        let s = VirtualSurface {
            damping: 0.0,
            ..plane()
        };
        assert_relative_eq!(
            desired_force(&finger_at(-0.01, 0.0), &s, 10.0),
            Vec3::new(0.0, 0.0, 3.0),
            epsilon = 1e-12
        );
        assert_eq!(desired_force(&finger_at(0.0, 0.0), &s, 10.0), Vec3::zeros());
        assert_relative_eq!(
            desired_force(&finger_at(-0.005, -0.1), &plane(), 10.0),
            Vec3::new(0.0, 0.0, 1.7),
            epsilon = 1e-12
        );
        // rising finger gets no damping pull-back, and the clamp holds
        assert_relative_eq!(
            desired_force(&finger_at(-0.005, 0.3), &plane(), 10.0).z,
            1.5,
            epsilon = 1e-12
        );
        assert_eq!(desired_force(&finger_at(-0.1, 0.0), &plane(), 2.0).z, 2.0);
        assert_eq!(
            desired_force(&finger_at(0.01, -0.3), &plane(), 2.0),
            Vec3::zeros()
        );
    }

    #[test]
    fn assignment_policies() {
        let ids = [0, 1, 2, 3, 4];
        let a = assign_drones(&ids, AssignmentPolicy::OnePerFinger).unwrap();
        for f in Finger::ALL {
            assert_eq!(a.drones_for(f), &[f.index()]);
        }

        let a = assign_drones(&ids[..3], AssignmentPolicy::ThreeGroups).unwrap();
        assert_eq!(a.drones_for(Finger::Thumb), &[0]);
        assert_eq!(a.drones_for(Finger::Index), &[1]);
        assert_eq!(a.drones_for(Finger::Middle), &[1]);
        assert_eq!(a.drones_for(Finger::Ring), &[2]);
        assert_eq!(a.drones_for(Finger::Little), &[2]);
        assert_eq!(a.tether_entries().len(), 5);

        let a = assign_drones(
            &ids[..2],
            AssignmentPolicy::DualTether {
                finger: Finger::Index,
            },
        )
        .unwrap();
        assert_eq!(a.drones_for(Finger::Index), &[0, 1]);
        assert!(a.drones_for(Finger::Thumb).is_empty());
        assert_eq!(
            a.tether_entries(),
            alloc::vec![
                TetherEntry {
                    finger: Finger::Index,
                    drone: 0
                },
                TetherEntry {
                    finger: Finger::Index,
                    drone: 1
                }
            ]
        );

        assert!(matches!(
            assign_drones(&ids[..4], AssignmentPolicy::OnePerFinger),
            Err(Error::Config { field, .. }) if field == "drones"
        ));
    }

    fn all_clear(hand: &Hand) -> [ContactPrediction; 5] {
        Finger::ALL.map(|f| ContactPrediction::clear(f, hand.finger(f)))
    }

    fn in_contact(f: Finger, depth: f64) -> ContactPrediction {
        ContactPrediction {
            finger: f,
            status: ContactStatus::InContact,
            time_to_contact: 0.0,
            predicted_point: Vec3::zeros(),
            depth,
            surface: Some(0),
        }
    }

    #[test]
    fn idle_hand_keeps_everyone_following() {
        let a = assign_drones(&[0, 1, 2, 3, 4], AssignmentPolicy::OnePerFinger).unwrap();
        let mut states = [ActivationState::default(); 5];
        let offsets = [Vec3::new(0.0, 0.0, 0.4); 5];
        let sp = activation_logic(
            &all_clear(&Hand::default()),
            &[Vec3::zeros(); 5],
            &a,
            &mut states,
            &offsets,
            0.0,
            &ActivationConfig::default(),
        );
        assert!(sp
            .iter()
            .all(|s| matches!(s.unwrap().mode, SetpointMode::Follow { .. })));
    }

    #[test]
    fn contact_activates_only_its_drone() {
        let a = assign_drones(&[0, 1, 2, 3, 4], AssignmentPolicy::OnePerFinger).unwrap();
        let mut states = [ActivationState::default(); 5];
        let mut preds = all_clear(&Hand::default());
        preds[1] = in_contact(Finger::Index, 0.01);
        let mut forces = [Vec3::zeros(); 5];
        forces[1] = Vec3::new(0.0, 0.0, 3.0);
        let cfg = ActivationConfig::default();
        let offsets = [Vec3::new(0.0, 0.0, 0.4); 5];
        let sp = activation_logic(&preds, &forces, &a, &mut states, &offsets, 1.0, &cfg);
        assert_eq!(
            sp[1].unwrap().mode,
            SetpointMode::Tension {
                force: Vec3::zeros()
            }
        );
        for d in [0, 2, 3, 4] {
            assert!(matches!(sp[d].unwrap().mode, SetpointMode::Follow { .. }));
        }
        // halfway through the ramp
        let sp = activation_logic(&preds, &forces, &a, &mut states, &offsets, 1.025, &cfg);
        let SetpointMode::Tension { force } = sp[1].unwrap().mode else {
            panic!()
        };
        assert_relative_eq!(force.z, 1.5, epsilon = 1e-12);
        let sp = activation_logic(&preds, &forces, &a, &mut states, &offsets, 1.06, &cfg);
        assert_eq!(
            sp[1].unwrap().mode,
            SetpointMode::Tension { force: forces[1] }
        );
        assert_eq!(sp[1].unwrap().desired, forces[1]);
    }

    #[test]
    fn group_renders_deepest_finger() {
        let a = assign_drones(&[0, 1, 2], AssignmentPolicy::ThreeGroups).unwrap();
        let mut states = [ActivationState::default(); 3];
        let mut preds = all_clear(&Hand::default());
        preds[1] = in_contact(Finger::Index, 0.01);
        preds[2] = in_contact(Finger::Middle, 0.02);
        let mut forces = [Vec3::zeros(); 5];
        forces[1] = Vec3::new(0.0, 0.0, 1.0);
        forces[2] = Vec3::new(0.0, 0.0, 2.0);
        let cfg = ActivationConfig {
            ramp_time: 0.0,
            ..Default::default()
        };
        let sp = activation_logic(
            &preds,
            &forces,
            &a,
            &mut states,
            &[Vec3::zeros(); 3],
            0.0,
            &cfg,
        );
        let s = sp[1].unwrap();
        assert_eq!(s.finger, Finger::Middle);
        assert_eq!(s.mode, SetpointMode::Tension { force: forces[2] });
    }

    #[test]
    fn dual_tether_splits_force() {
        let a = assign_drones(
            &[0, 1],
            AssignmentPolicy::DualTether {
                finger: Finger::Index,
            },
        )
        .unwrap();
        let mut states = [ActivationState::default(); 2];
        let mut preds = all_clear(&Hand::default());
        preds[1] = in_contact(Finger::Index, 0.01);
        let mut forces = [Vec3::zeros(); 5];
        forces[1] = Vec3::new(0.0, 0.0, 1.0);
        let cfg = ActivationConfig {
            ramp_time: 0.0,
            ..Default::default()
        };
        let sp = activation_logic(
            &preds,
            &forces,
            &a,
            &mut states,
            &[Vec3::zeros(); 2],
            0.0,
            &cfg,
        );
        for s in sp {
            assert_eq!(
                s.unwrap().mode,
                SetpointMode::Tension {
                    force: Vec3::new(0.0, 0.0, 0.5)
                }
            );
        }
    }

    #[test]
    fn release_waits_for_clearance() {
        let a = assign_drones(&[0, 1, 2, 3, 4], AssignmentPolicy::OnePerFinger).unwrap();
        let mut states = [ActivationState::default(); 5];
        let cfg = ActivationConfig::default();
        let offsets = [Vec3::zeros(); 5];
        let mut preds = all_clear(&Hand::default());
        preds[0] = in_contact(Finger::Thumb, 0.001);
        activation_logic(
            &preds,
            &[Vec3::zeros(); 5],
            &a,
            &mut states,
            &offsets,
            0.0,
            &cfg,
        );
        let clear = all_clear(&Hand::default());
        for k in 1..=10 {
            let t = k as f64 * 0.01;
            let sp = activation_logic(
                &clear,
                &[Vec3::zeros(); 5],
                &a,
                &mut states,
                &offsets,
                t,
                &cfg,
            );
            assert!(sp[0].unwrap().mode.is_tension(), "released early at {t}");
        }
        let sp = activation_logic(
            &clear,
            &[Vec3::zeros(); 5],
            &a,
            &mut states,
            &offsets,
            0.12,
            &cfg,
        );
        assert!(!sp[0].unwrap().mode.is_tension());
    }

    fn status() -> impl Strategy<Value = u8> {
        0u8..3
    }

    proptest! {
        #[test]
        fn assignment_invariants(n in 0usize..8, which in 0usize..4, finger in 0usize..5) {
            let policy = match which {
                0 => AssignmentPolicy::OnePerFinger,
                3 => AssignmentPolicy::Single { finger: Finger::ALL[finger] },
                1 => AssignmentPolicy::ThreeGroups,
                _ => AssignmentPolicy::DualTether { finger: Finger::ALL[finger] },
            };
            let ids: Vec<usize> = (0..n).collect();
            match assign_drones(&ids, policy) {
                Ok(a) => {
                    prop_assert!(n >= policy.drones_required());
                    prop_assert!(a.validate().is_ok());
                    let used: usize = a.groups.iter().map(|g| g.drones.len()).sum();
                    prop_assert_eq!(used, policy.drones_required());
                    for d in 0..policy.drones_required() {
                        prop_assert_eq!(a.groups.iter().filter(|g| g.drones.contains(&d)).count(), 1);
                    }
                }
                Err(_) => prop_assert!(n < policy.drones_required()),
            }
        }

        /// Any tension episode lasts at least the release delay.
        #[test]
        fn no_chatter(seq in prop::collection::vec(status(), 1..200)) {
            let a = assign_drones(&[0, 1, 2], AssignmentPolicy::ThreeGroups).unwrap();
            let mut states = [ActivationState::default(); 3];
            let cfg = ActivationConfig::default();
            let mut last_change = [f64::NEG_INFINITY; 3];
            let mut last_mode = [false; 3];
            for (k, s) in seq.iter().enumerate() {
                let t = k as f64 * 0.01;
                let mut preds = all_clear(&Hand::default());
                preds[1] = match s {
                    0 => ContactPrediction::clear(Finger::Index, &FingerState::default()),
                    1 => in_contact(Finger::Index, 0.005),
                    _ => ContactPrediction {
                        status: ContactStatus::Approaching,
                        time_to_contact: 0.1,
                        ..ContactPrediction::clear(Finger::Index, &FingerState::default())
                    },
                };
                let sp = activation_logic(&preds, &[Vec3::zeros(); 5], &a, &mut states, &[Vec3::zeros(); 3], t, &cfg);
                for d in 0..3 {
                    let tension = sp[d].unwrap().mode.is_tension();
                    if tension != last_mode[d] {
                        if !tension {
                            prop_assert!(t - last_change[d] >= cfg.release_delay - 1e-12);
                        }
                        last_change[d] = t;
                        last_mode[d] = tension;
                    }
                }
            }
        }

        #[test]
        fn constant_velocity_prediction_is_exact(z in 0.01..0.5f64, vz in -2.0..-0.05f64) {
            let s = finger_at(z, vz);
            let p = predict_contact(Finger::Index, &s, &plane(), 100.0);
            prop_assert_eq!(p.status, ContactStatus::Approaching);
            let crossing = z / -vz;
            prop_assert!((p.time_to_contact - crossing).abs() < 1e-9);
            // the finger actually reaches the plane at the predicted time
            prop_assert!((z + vz * p.time_to_contact).abs() < 1e-12);
        }

        #[test]
        fn desired_force_points_up(depth in -0.05..0.05f64, vz in -1.0..1.0f64) {
            let f = desired_force(&finger_at(-depth, vz), &plane(), 10.0);
            prop_assert!(f.z >= 0.0 && f.x == 0.0 && f.y == 0.0);
            if vz >= 0.0 && depth > 0.0 {
                prop_assert!((f.z - (300.0 * depth).min(10.0)).abs() < 1e-9);
            }
        }
    }
}
