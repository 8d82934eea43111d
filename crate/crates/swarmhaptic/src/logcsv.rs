//! `log.csv`: one row per physics tick.
//!
//! Line 1 is `# swarmhaptic-log v1 <meta>` where `<meta>` is the JSON
//! [`LogMeta`]. Line 2 is the header. Columns, in order:
//!
//! - `tick`, `time`
//! - per drone `i`, prefix `d{i}_`: `x y z vx vy vz qw qx qy qz wx wy wz`
//!   (true state at the start of the tick), `rotor1..rotor4` (held rotor
//!   speeds, rad/s), `mode` (`follow`/`tension`), `saturated` (0/1),
//!   `finger`, `target_x..z`, `desired_x..z`, `commanded_x..z`,
//!   `delivered_x..z`
//! - per leash `j` in meta order, prefix `t{j}_`: `fx fy fz` (force on the
//!   finger; the drone receives the negation), `tension`, `taut` (0/1)
//! - per finger, prefix `thumb_` .. `little_`: `x y z vx vy vz`,
//!   `desired_x..z`, `delivered_x..z`, `status`
//!   (`clear`/`approaching`/`in_contact`), `ttc`
//!
//! Floats use the shortest representation that parses back to the same
//! bits, so [`read_log`] reproduces the in-memory log exactly.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use swarmhaptic_core::dynamics::{RigidBodyState, RotorCommand};
use swarmhaptic_core::engine::{DroneRecord, FingerRecord, LogMeta, ModeTag, SimLog, TickRecord};
use swarmhaptic_core::nalgebra::{Quaternion, UnitQuaternion};
use swarmhaptic_core::scene::{ContactStatus, Finger};
use swarmhaptic_core::tether::TetherForce;
use swarmhaptic_core::Vec3;

use crate::error::{IoError, Result};

pub const FORMAT_TAG: &str = "# swarmhaptic-log v1 ";

const DRONE_FIELDS: &[&str] = &[
    "x",
    "y",
    "z",
    "vx",
    "vy",
    "vz",
    "qw",
    "qx",
    "qy",
    "qz",
    "wx",
    "wy",
    "wz",
    "rotor1",
    "rotor2",
    "rotor3",
    "rotor4",
    "mode",
    "saturated",
    "finger",
    "target_x",
    "target_y",
    "target_z",
    "desired_x",
    "desired_y",
    "desired_z",
    "commanded_x",
    "commanded_y",
    "commanded_z",
    "delivered_x",
    "delivered_y",
    "delivered_z",
];
const TETHER_FIELDS: &[&str] = &["fx", "fy", "fz", "tension", "taut"];
const FINGER_FIELDS: &[&str] = &[
    "x",
    "y",
    "z",
    "vx",
    "vy",
    "vz",
    "desired_x",
    "desired_y",
    "desired_z",
    "delivered_x",
    "delivered_y",
    "delivered_z",
    "status",
    "ttc",
];

pub fn columns(meta: &LogMeta) -> Vec<String> {
    let mut cols = vec!["tick".to_string(), "time".to_string()];
    for i in 0..meta.drones {
        cols.extend(DRONE_FIELDS.iter().map(|f| format!("d{i}_{f}")));
    }
    for j in 0..meta.tethers.len() {
        cols.extend(TETHER_FIELDS.iter().map(|f| format!("t{j}_{f}")));
    }
    for finger in Finger::ALL {
        cols.extend(
            FINGER_FIELDS
                .iter()
                .map(|f| format!("{}_{f}", finger.name())),
        );
    }
    cols
}

struct Row<'a> {
    out: &'a mut String,
    buf: ryu::Buffer,
}

impl Row<'_> {
    fn f(&mut self, v: f64) {
        self.out.push(',');
        self.out.push_str(self.buf.format(v));
    }
    fn v(&mut self, v: &Vec3) {
        for x in v.iter() {
            self.f(*x);
        }
    }
    fn s(&mut self, s: &str) {
        self.out.push(',');
        self.out.push_str(s);
    }
    fn b(&mut self, b: bool) {
        self.s(if b { "1" } else { "0" });
    }
}

fn mode_name(m: ModeTag) -> &'static str {
    match m {
        ModeTag::Follow => "follow",
        ModeTag::Tension => "tension",
    }
}

fn status_name(s: ContactStatus) -> &'static str {
    match s {
        ContactStatus::Clear => "clear",
        ContactStatus::Approaching => "approaching",
        ContactStatus::InContact => "in_contact",
    }
}

fn format_row(rec: &TickRecord, out: &mut String) {
    out.clear();
    let _ = write!(out, "{}", rec.tick);
    let mut row = Row {
        out,
        buf: ryu::Buffer::new(),
    };
    row.f(rec.time);
    for d in &rec.drones {
        let s = &d.state;
        row.v(&s.position);
        row.v(&s.velocity);
        let q = s.orientation.quaternion();
        row.f(q.w);
        row.v(&q.imag());
        row.v(&s.angular_velocity);
        for w in d.command.omega {
            row.f(w);
        }
        row.s(mode_name(d.mode));
        row.b(d.saturated);
        row.s(d.finger.name());
        row.v(&d.target_position);
        row.v(&d.desired_force);
        row.v(&d.commanded_force);
        row.v(&d.delivered_force);
    }
    for t in &rec.tethers {
        row.v(&t.on_finger);
        row.f(t.tension);
        row.b(t.taut);
    }
    for f in &rec.fingers {
        row.v(&f.position);
        row.v(&f.velocity);
        row.v(&f.desired_force);
        row.v(&f.delivered_force);
        row.s(status_name(f.status));
        row.f(f.time_to_contact);
    }
    row.out.push('\n');
}

pub fn write_log<W: Write>(log: &SimLog, writer: W) -> std::io::Result<()> {
    let mut w = BufWriter::new(writer);
    let meta = serde_json::to_string(&log.meta).expect("meta serializes");
    writeln!(w, "{FORMAT_TAG}{meta}")?;
    writeln!(w, "{}", columns(&log.meta).join(","))?;
    let mut line = String::new();
    for rec in &log.ticks {
        format_row(rec, &mut line);
        w.write_all(line.as_bytes())?;
    }
    w.flush()
}

pub fn write_log_file(path: &Path, log: &SimLog) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| IoError::io(path, e))?;
    write_log(log, file).map_err(|e| IoError::io(path, e))
}

struct Fields<'a> {
    iter: std::str::Split<'a, char>,
    column: usize,
    line: usize,
}

impl<'a> Fields<'a> {
    fn next(&mut self) -> std::result::Result<&'a str, String> {
        self.column += 1;
        self.iter
            .next()
            .ok_or_else(|| format!("row ends at column {}", self.column))
    }
    fn f(&mut self) -> std::result::Result<f64, String> {
        let s = self.next()?;
        s.parse()
            .map_err(|_| format!("column {}: bad number {s:?}", self.column))
    }
    fn v(&mut self) -> std::result::Result<Vec3, String> {
        Ok(Vec3::new(self.f()?, self.f()?, self.f()?))
    }
    fn b(&mut self) -> std::result::Result<bool, String> {
        match self.next()? {
            "0" => Ok(false),
            "1" => Ok(true),
            s => Err(format!("column {}: bad flag {s:?}", self.column)),
        }
    }
    fn parsed<T>(
        &mut self,
        what: &str,
        f: impl Fn(&str) -> Option<T>,
    ) -> std::result::Result<T, String> {
        let s = self.next()?;
        f(s).ok_or_else(|| format!("column {}: bad {what} {s:?}", self.column))
    }
}

fn parse_row(line: usize, text: &str, meta: &LogMeta) -> std::result::Result<TickRecord, String> {
    let mut p = Fields {
        iter: text.split(','),
        column: 0,
        line,
    };
    let tick = p.parsed("tick", |s| s.parse().ok())?;
    let time = p.f()?;
    let mut drones = Vec::with_capacity(meta.drones);
    for _ in 0..meta.drones {
        let position = p.v()?;
        let velocity = p.v()?;
        let (w, x, y, z) = (p.f()?, p.f()?, p.f()?, p.f()?);
        let angular_velocity = p.v()?;
        let omega = [p.f()?, p.f()?, p.f()?, p.f()?];
        drones.push(DroneRecord {
            state: RigidBodyState {
                position,
                velocity,
                orientation: UnitQuaternion::new_unchecked(Quaternion::new(w, x, y, z)),
                angular_velocity,
            },
            command: RotorCommand { omega },
            mode: p.parsed("mode", |s| match s {
                "follow" => Some(ModeTag::Follow),
                "tension" => Some(ModeTag::Tension),
                _ => None,
            })?,
            saturated: p.b()?,
            finger: p.parsed("finger", |s| {
                Finger::ALL.into_iter().find(|f| f.name() == s)
            })?,
            target_position: p.v()?,
            desired_force: p.v()?,
            commanded_force: p.v()?,
            delivered_force: p.v()?,
        });
    }
    let mut tethers = Vec::with_capacity(meta.tethers.len());
    for _ in 0..meta.tethers.len() {
        let on_finger = p.v()?;
        tethers.push(TetherForce {
            on_finger,
            on_drone: -on_finger,
            tension: p.f()?,
            taut: p.b()?,
        });
    }
    let mut fingers = Vec::with_capacity(5);
    for _ in 0..5 {
        fingers.push(FingerRecord {
            position: p.v()?,
            velocity: p.v()?,
            desired_force: p.v()?,
            delivered_force: p.v()?,
            status: p.parsed("status", |s| match s {
                "clear" => Some(ContactStatus::Clear),
                "approaching" => Some(ContactStatus::Approaching),
                "in_contact" => Some(ContactStatus::InContact),
                _ => None,
            })?,
            time_to_contact: p.f()?,
        });
    }
    if p.iter.next().is_some() {
        return Err(format!("line {}: more columns than the header", p.line));
    }
    Ok(TickRecord {
        tick,
        time,
        drones,
        tethers,
        fingers: fingers.try_into().expect("five fingers"),
    })
}

pub fn read_log<R: std::io::Read>(path: &Path, reader: R) -> Result<SimLog> {
    let mut lines = BufReader::new(reader).lines().enumerate();
    let mut next_line = |expect: &str| -> Result<Option<(usize, String)>> {
        match lines.next() {
            Some((i, Ok(l))) => Ok(Some((i + 1, l))),
            Some((_, Err(e))) => Err(IoError::io(path, e)),
            None if expect.is_empty() => Ok(None),
            None => Err(IoError::parse(path, 1, format!("missing {expect}"))),
        }
    };
    let (_, first) = next_line("format line")?.expect("checked");
    let meta_json = first.strip_prefix(FORMAT_TAG).ok_or_else(|| {
        IoError::parse(
            path,
            1,
            format!("expected `{}` format line", FORMAT_TAG.trim()),
        )
    })?;
    let meta: LogMeta =
        serde_json::from_str(meta_json).map_err(|e| IoError::parse(path, 1, e.to_string()))?;
    let (line, header) = next_line("header")?.expect("checked");
    if header != columns(&meta).join(",") {
        return Err(IoError::parse(
            path,
            line,
            "header does not match the log metadata",
        ));
    }
    let mut ticks = Vec::new();
    while let Some((line, text)) = next_line("")? {
        ticks.push(parse_row(line, &text, &meta).map_err(|m| IoError::parse(path, line, m))?);
    }
    Ok(SimLog { meta, ticks })
}

pub fn read_log_file(path: &Path) -> Result<SimLog> {
    let file = std::fs::File::open(path).map_err(|e| IoError::io(path, e))?;
    read_log(path, file)
}
