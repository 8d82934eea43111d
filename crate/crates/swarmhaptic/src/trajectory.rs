//! Hand trajectory CSV.
//!
//! Header `t,thumb_x,thumb_y,thumb_z,index_x,...,little_z` (16 columns,
//! seconds and meters); one sample per row with strictly increasing `t`.
//! Whitespace around fields is ignored; blank lines are skipped.

use std::fmt::Write as _;
use std::path::Path;

use swarmhaptic_core::engine::{HandSample, HandTrajectory};
use swarmhaptic_core::scene::Finger;
use swarmhaptic_core::Vec3;

use crate::error::{IoError, Result};

pub const COLUMNS: usize = 16;

pub fn header() -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    for f in Finger::ALL {
        for axis in ["x", "y", "z"] {
            cols.push(format!("{}_{axis}", f.name()));
        }
    }
    cols
}

pub fn load_trajectory(path: &Path) -> Result<HandTrajectory> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    parse_trajectory(path, &text)
}

pub fn parse_trajectory(path: &Path, text: &str) -> Result<HandTrajectory> {
    let mut rows = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (line, head) = rows
        .next()
        .ok_or_else(|| IoError::parse(path, 1, "empty trajectory file"))?;
    let names: Vec<&str> = head.split(',').map(str::trim).collect();
    if names != header() {
        return Err(IoError::parse(
            path,
            line,
            format!("expected header `{}`", header().join(",")),
        ));
    }

    let mut samples: Vec<HandSample> = Vec::new();
    for (line, row) in rows {
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        if fields.len() != COLUMNS {
            return Err(IoError::parse(
                path,
                line,
                format!("expected {COLUMNS} columns, found {}", fields.len()),
            ));
        }
        let mut values = [0.0; COLUMNS];
        for (k, (v, name)) in values.iter_mut().zip(&names).enumerate() {
            *v = fields[k]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    IoError::parse(
                        path,
                        line,
                        format!("`{name}`: not a finite number: {:?}", fields[k]),
                    )
                })?;
        }
        let time = values[0];
        if let Some(prev) = samples.last() {
            if time <= prev.time {
                return Err(IoError::parse(
                    path,
                    line,
                    format!("time {time} does not increase (previous {})", prev.time),
                ));
            }
        }
        let fingers = std::array::from_fn(|i| {
            Vec3::new(values[1 + 3 * i], values[2 + 3 * i], values[3 + 3 * i])
        });
        samples.push(HandSample { time, fingers });
    }
    HandTrajectory::new(samples).map_err(|source| IoError::Invalid {
        path: path.into(),
        source,
    })
}

pub fn format_trajectory(trajectory: &HandTrajectory) -> String {
    let mut out = header().join(",");
    out.push('\n');
    let mut buf = ryu::Buffer::new();
    for s in trajectory.samples() {
        out.push_str(buf.format(s.time));
        for p in &s.fingers {
            for v in p.iter() {
                let _ = write!(out, ",{}", buf.format(*v));
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_trajectory(path: &Path, trajectory: &HandTrajectory) -> Result<()> {
    std::fs::write(path, format_trajectory(trajectory)).map_err(|e| IoError::io(path, e))
}
