//! Pose logs: one `timestamp tx ty tz qx qy qz qw` record per line.
//! Blank lines and `#` comments are skipped.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Quaternion, Unit};

use super::{read_text, write_bytes, FormatError};
use crate::geometry::{quaternion_xyzw, Pose, RigidTransform, Vec3};

/// Quaternions further than this from unit norm are rejected.
const QUATERNION_SLACK: f64 = 1e-6;
/// Within this they are kept bit-for-bit; between the two they are
/// renormalized.
const QUATERNION_EXACT: f64 = 1e-12;

pub fn render_poses(poses: &[Pose]) -> String {
    let mut s = String::from("# timestamp tx ty tz qx qy qz qw\n");
    for p in poses {
        let t = p.translation();
        let [qx, qy, qz, qw] = quaternion_xyzw(&p.rotation());
        let _ = writeln!(s, "{} {} {} {} {} {} {} {}", p.timestamp, t.x, t.y, t.z, qx, qy, qz, qw);
    }
    s
}

pub fn parse_poses(path: &Path, text: &str) -> Result<Vec<Pose>, FormatError> {
    let mut poses: Vec<Pose> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 8 {
            return Err(FormatError::parse(path, n, format!("expected 8 fields, found {}", fields.len())));
        }
        let mut v = [0.0; 8];
        for (k, f) in fields.iter().enumerate() {
            v[k] = f
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| FormatError::parse(path, n, format!("field {} is not a finite number: {f:?}", k + 1)))?;
        }
        let q = Quaternion::new(v[7], v[4], v[5], v[6]);
        let norm = q.norm();
        if (norm - 1.0).abs() > QUATERNION_SLACK {
            return Err(FormatError::parse(path, n, format!("quaternion norm {norm} is not 1")));
        }
        let rotation = if (norm - 1.0).abs() <= QUATERNION_EXACT { Unit::new_unchecked(q) } else { Unit::new_normalize(q) };
        let pose = Pose::new(v[0], RigidTransform::new(rotation, Vec3::new(v[1], v[2], v[3])))
            .map_err(|e| FormatError::parse(path, n, e.to_string()))?;
        if let Some(prev) = poses.last() {
            if pose.timestamp < prev.timestamp {
                return Err(FormatError::parse(
                    path,
                    n,
                    format!("timestamp {} precedes {}", pose.timestamp, prev.timestamp),
                ));
            }
        }
        poses.push(pose);
    }
    Ok(poses)
}

pub fn write_poses(path: &Path, poses: &[Pose]) -> Result<(), FormatError> {
    write_bytes(path, render_poses(poses).as_bytes())
}

pub fn read_poses(path: &Path) -> Result<Vec<Pose>, FormatError> {
    parse_poses(path, &read_text(path)?)
}
