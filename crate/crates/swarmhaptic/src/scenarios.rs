//! Bundled example scenarios. `swarmhaptic scenario` writes them to disk;
//! the copies under `scenarios/` are generated from these functions.
//!
//! All scenarios share one hand layout: fingertips 3 cm apart along y,
//! resting 2 cm above a row of keys whose top is at z = 0.5 m. Pressing a
//! key 1 cm deep asks for 1 N.

use swarmhaptic_core::dynamics::QuadrotorModel;
use swarmhaptic_core::engine::{
    DroneConfig, FeedbackSource, HandSample, HandTrajectory, SimConfig,
};
use swarmhaptic_core::scene::{AssignmentPolicy, Extent, Finger, VirtualSurface};
use swarmhaptic_core::sensing::MocapConfig;
use swarmhaptic_core::tether::TetherParams;
use swarmhaptic_core::Vec3;

pub const KEY_HEIGHT: f64 = 0.5;
pub const REST_HEIGHT: f64 = 0.52;
pub const KEY_STIFFNESS: f64 = 100.0;
const FINGER_SPACING: f64 = 0.03;
const DESCENT: f64 = 0.25;
const LIFT: f64 = 0.2;

pub struct Scenario {
    pub name: &'static str,
    pub description: &'static str,
    pub config: SimConfig,
    pub trajectory: HandTrajectory,
}

pub const NAMES: [&str; 6] = [
    "hover",
    "press",
    "piano",
    "chord",
    "three_groups",
    "dual_tether",
];

pub fn by_name(name: &str) -> Option<Scenario> {
    Some(match name {
        "hover" => hover(),
        "press" => press(),
        "piano" => piano(),
        "chord" => chord(),
        "three_groups" => three_groups(),
        "dual_tether" => dual_tether(),
        _ => return None,
    })
}

pub fn all() -> Vec<Scenario> {
    NAMES.iter().filter_map(|n| by_name(n)).collect()
}

pub fn finger_home(f: Finger) -> Vec3 {
    Vec3::new(0.0, FINGER_SPACING * (f.index() as f64 - 2.0), REST_HEIGHT)
}

/// One key under each finger.
pub fn keys() -> Vec<VirtualSurface> {
    Finger::ALL
        .iter()
        .map(|&f| {
            let y = finger_home(f).y;
            VirtualSurface::horizontal(
                KEY_HEIGHT,
                KEY_STIFFNESS,
                0.5,
                Extent {
                    min: [-0.1, y - FINGER_SPACING / 2.0],
                    max: [0.1, y + FINGER_SPACING / 2.0],
                },
            )
        })
        .collect()
}

/// Default airframe with rotors that can lift its weight plus 2 N of
/// leash tension.
pub fn rendering_model() -> QuadrotorModel {
    let mut m = QuadrotorModel::default();
    m.rotors.omega_max = 6000.0;
    m
}

pub fn leash() -> TetherParams {
    TetherParams::elastic(0.4, 50.0, 1.0)
}

fn config(
    duration: f64,
    seed: u64,
    policy: AssignmentPolicy,
    drones: Vec<DroneConfig>,
    leashes: usize,
) -> SimConfig {
    SimConfig {
        duration,
        physics_dt: 0.001,
        control_rate: 100.0,
        gravity: 9.81,
        seed,
        drones,
        assignment: policy,
        tethers: vec![leash(); leashes],
        surfaces: keys(),
        mocap: MocapConfig::default(),
        feedback: FeedbackSource::Mocap,
        gains: Default::default(),
        activation: Default::default(),
    }
}

fn drones(n: usize) -> Vec<DroneConfig> {
    vec![
        DroneConfig {
            model: rendering_model(),
            ..Default::default()
        };
        n
    ]
}

/// A press starting at `start`: descend to `depth`, hold for `hold`, lift.
#[derive(Debug, Clone, Copy)]
pub struct Press {
    pub finger: Finger,
    pub start: f64,
    pub depth: f64,
    pub hold: f64,
}

impl Press {
    pub fn contact_start(&self) -> f64 {
        self.start + DESCENT * (REST_HEIGHT - KEY_HEIGHT) / (REST_HEIGHT - KEY_HEIGHT + self.depth)
    }

    pub fn hold_end(&self) -> f64 {
        self.start + DESCENT + self.hold
    }

    fn keyframes(&self) -> [(f64, f64); 4] {
        let low = KEY_HEIGHT - self.depth;
        [
            (self.start, REST_HEIGHT),
            (self.start + DESCENT, low),
            (self.hold_end(), low),
            (self.hold_end() + LIFT, REST_HEIGHT),
        ]
    }
}

/// Piecewise-linear hand motion from a list of presses. Fingers not
/// pressing rest at their home position.
pub fn press_trajectory(presses: &[Press], end: f64) -> HandTrajectory {
    let mut tracks: [Vec<(f64, f64)>; 5] = Default::default();
    for p in presses {
        tracks[p.finger.index()].extend(p.keyframes());
    }
    let mut times: Vec<f64> = vec![0.0, end];
    for t in &mut tracks {
        t.sort_by(|a, b| a.0.total_cmp(&b.0));
        times.extend(t.iter().map(|k| k.0));
    }
    times.retain(|t| (0.0..=end).contains(t));
    times.sort_by(f64::total_cmp);
    times.dedup();
    let z_at = |track: &[(f64, f64)], t: f64| -> f64 {
        match track.iter().position(|k| k.0 > t) {
            _ if track.is_empty() => REST_HEIGHT,
            Some(0) => track[0].1,
            None => track[track.len() - 1].1,
            Some(i) => {
                let (t0, z0) = track[i - 1];
                let (t1, z1) = track[i];
                z0 + (z1 - z0) * (t - t0) / (t1 - t0)
            }
        }
    };
    let samples = times
        .into_iter()
        .map(|time| HandSample {
            time,
            fingers: Finger::ALL.map(|f| {
                let mut p = finger_home(f);
                p.z = z_at(&tracks[f.index()], time);
                p
            }),
        })
        .collect();
    HandTrajectory::new(samples).expect("generated trajectory is valid")
}

/// One drone, released 8 cm from its station, settling over a still index
/// finger with noiseless mocap.
pub fn hover() -> Scenario {
    let drone = DroneConfig {
        initial_position: Some(finger_home(Finger::Index) + Vec3::new(0.05, -0.03, 0.3)),
        ..Default::default()
    };
    let mut cfg = config(
        6.0,
        1,
        AssignmentPolicy::Single {
            finger: Finger::Index,
        },
        vec![drone],
        1,
    );
    cfg.mocap = MocapConfig::noiseless();
    Scenario {
        name: "hover",
        description: "one drone following a stationary hand",
        config: cfg,
        trajectory: press_trajectory(&[], 6.0),
    }
}

pub const PRESS: Press = Press {
    finger: Finger::Index,
    start: 1.0,
    depth: 0.01,
    hold: 4.5,
};

/// Index finger presses a key 1 cm deep (1 N) and holds.
pub fn press() -> Scenario {
    Scenario {
        name: "press",
        description: "index finger holds a 1 N key press",
        config: config(
            6.0,
            2,
            AssignmentPolicy::Single {
                finger: Finger::Index,
            },
            drones(1),
            1,
        ),
        trajectory: press_trajectory(&[PRESS], 6.0),
    }
}

pub fn piano_presses() -> Vec<Press> {
    const PATTERN: [usize; 8] = [0, 1, 2, 3, 4, 3, 2, 1];
    (0..48)
        .map(|k| Press {
            finger: Finger::ALL[PATTERN[k % PATTERN.len()]],
            start: 1.0 + 1.2 * k as f64,
            depth: 0.01,
            hold: 0.8,
        })
        .collect()
}

/// Sixty seconds of scales over five keys, one drone per finger.
pub fn piano() -> Scenario {
    Scenario {
        name: "piano",
        description: "five fingers playing overlapping 1 N notes for 60 s",
        config: config(60.0, 3, AssignmentPolicy::OnePerFinger, drones(5), 5),
        trajectory: press_trajectory(&piano_presses(), 60.0),
    }
}

pub const CHORD_DEPTHS: [f64; 5] = [0.008, 0.01, 0.012, 0.009, 0.007];

/// All five fingers press together at different depths.
pub fn chord() -> Scenario {
    let presses: Vec<Press> = Finger::ALL
        .iter()
        .map(|&finger| Press {
            finger,
            start: 1.0,
            depth: CHORD_DEPTHS[finger.index()],
            hold: 10.0,
        })
        .collect();
    Scenario {
        name: "chord",
        description: "five-finger chord, 0.7 to 1.2 N per finger",
        config: config(6.0, 4, AssignmentPolicy::OnePerFinger, drones(5), 5),
        trajectory: press_trajectory(&presses, 6.0),
    }
}

/// Thumb alone; index deeper than middle; little deeper than ring.
pub const GROUP_DEPTHS: [f64; 5] = [0.01, 0.01, 0.003, 0.003, 0.008];

/// Three drones for five fingers; each renders its deepest finger.
pub fn three_groups() -> Scenario {
    let presses: Vec<Press> = Finger::ALL
        .iter()
        .map(|&finger| Press {
            finger,
            start: 1.0,
            depth: GROUP_DEPTHS[finger.index()],
            hold: 10.0,
        })
        .collect();
    Scenario {
        name: "three_groups",
        description: "three drones shared by thumb, index+middle and ring+little",
        config: config(6.0, 5, AssignmentPolicy::ThreeGroups, drones(3), 5),
        trajectory: press_trajectory(&presses, 6.0),
    }
}

/// Two drones on different leashes share one index-finger press.
pub fn dual_tether() -> Scenario {
    let mut d = drones(2);
    d[0].follow_offset = Vec3::new(0.08, 0.0, 0.3);
    d[1].follow_offset = Vec3::new(-0.08, 0.0, 0.4);
    let mut cfg = config(
        6.0,
        6,
        AssignmentPolicy::DualTether {
            finger: Finger::Index,
        },
        d,
        2,
    );
    cfg.tethers[1] = TetherParams::elastic(0.5, 60.0, 1.0);
    Scenario {
        name: "dual_tether",
        description: "two drones splitting a 1 N index press",
        config: cfg,
        trajectory: press_trajectory(&[PRESS], 6.0),
    }
}
