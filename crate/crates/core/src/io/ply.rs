//! ASCII PLY point clouds with `x y z` and an optional `class` property
//! (0 = surface, 1 = obstacle, 2 = ground).

use std::fmt::Write as _;
use std::path::Path;

use super::{read_text, write_bytes, FormatError};
use crate::geometry::Vec3;
use crate::occlusion::{CloudClass, PointCloud};

pub fn render_ply(cloud: &PointCloud) -> String {
    let mut s = String::new();
    s.push_str("ply\nformat ascii 1.0\ncomment camera frame, meters\n");
    let _ = writeln!(s, "element vertex {}", cloud.len());
    s.push_str("property double x\nproperty double y\nproperty double z\n");
    if cloud.classes.is_some() {
        s.push_str("property uchar class\n");
    }
    s.push_str("end_header\n");
    for (i, p) in cloud.points.iter().enumerate() {
        let _ = write!(s, "{} {} {}", p.x, p.y, p.z);
        if let Some(c) = cloud.class(i) {
            let _ = write!(s, " {}", c.code());
        }
        s.push('\n');
    }
    s
}

pub fn parse_ply(path: &Path, text: &str) -> Result<PointCloud, FormatError> {
    let err = |line: usize, msg: String| FormatError::parse(path, line, msg);
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, "ply")) => {}
        _ => return Err(err(1, "missing 'ply' magic".into())),
    }
    let mut count: Option<usize> = None;
    let mut in_vertex = false;
    let mut props: Vec<String> = Vec::new();
    let mut header_done = false;
    for (n, line) in lines.by_ref() {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            ["format", "ascii", _] => {}
            ["format", other, ..] => return Err(err(n, format!("unsupported format {other}"))),
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", "vertex", c] => {
                count = Some(c.parse().map_err(|_| err(n, format!("invalid vertex count {c:?}")))?);
                in_vertex = true;
            }
            ["element", ..] => in_vertex = false,
            ["property", "list", ..] if in_vertex => return Err(err(n, "list properties are not supported".into())),
            ["property", _ty, name] => {
                if in_vertex {
                    props.push(name.to_string());
                }
            }
            ["end_header"] => {
                header_done = true;
                break;
            }
            _ => return Err(err(n, format!("unrecognized header line {line:?}"))),
        }
    }
    if !header_done {
        return Err(err(0, "missing end_header".into()));
    }
    let count = count.ok_or_else(|| err(0, "missing 'element vertex'".into()))?;
    let find = |name: &str| props.iter().position(|p| p == name);
    let (Some(xi), Some(yi), Some(zi)) = (find("x"), find("y"), find("z")) else {
        return Err(err(0, "vertex element needs x, y and z properties".into()));
    };
    let ci = find("class");

    let mut points = Vec::with_capacity(count);
    let mut classes = ci.map(|_| Vec::with_capacity(count));
    for _ in 0..count {
        let (n, line) = lines.next().ok_or_else(|| err(0, format!("expected {count} vertices, found {}", points.len())))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != props.len() {
            return Err(err(n, format!("expected {} values, found {}", props.len(), fields.len())));
        }
        let num = |i: usize| -> Result<f64, FormatError> {
            let v: f64 = fields[i].parse().map_err(|_| err(n, format!("invalid number {:?}", fields[i])))?;
            if !v.is_finite() {
                return Err(err(n, "non-finite coordinate".into()));
            }
            Ok(v)
        };
        let p = Vec3::new(num(xi)?, num(yi)?, num(zi)?);
        if p == Vec3::zeros() {
            return Err(err(n, "point at the sensor origin".into()));
        }
        points.push(p);
        if let (Some(ci), Some(classes)) = (ci, classes.as_mut()) {
            let code: u8 = fields[ci].parse().map_err(|_| err(n, format!("invalid class {:?}", fields[ci])))?;
            classes.push(CloudClass::from_code(code).ok_or_else(|| err(n, format!("unknown class code {code}")))?);
        }
    }
    if let Some((n, extra)) = lines.find(|(_, l)| !l.is_empty()) {
        return Err(err(n, format!("unexpected data after vertices: {extra:?}")));
    }
    Ok(PointCloud { points, classes })
}

pub fn write_ply(path: &Path, cloud: &PointCloud) -> Result<(), FormatError> {
    write_bytes(path, render_ply(cloud).as_bytes())
}

pub fn read_ply(path: &Path) -> Result<PointCloud, FormatError> {
    parse_ply(path, &read_text(path)?)
}
