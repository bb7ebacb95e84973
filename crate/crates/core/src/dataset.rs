//! Dataset manifests, camera files, frame association and train/validation
//! splitting.
//!
//! A manifest is a small text file:
//!
//! ```text
//! trailmark-manifest 1
//! camera camera.toml
//! poses poses.txt
//! vehicle_mask vehicle_mask.pgm
//! tolerance 0.05
//! frame id=0000 t=0 image=images/0000.ppm cloud=clouds/0000.ply cloud_t=0 labels=labels/0000.pgm
//! ```
//!
//! Paths are relative to the manifest's directory. Frame lines may also carry
//! `mask=` (trajectory label) and `risk=` (predicted risk map) entries.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{unit_quaternion, CameraModel, RigidTransform, Vec3};
use crate::io::FormatError;

pub const MANIFEST_HEADER: &str = "trailmark-manifest 1";
pub const DEFAULT_TOLERANCE: f64 = 0.05;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}:{line}: field `{field}`: {message}")]
    Parse { path: PathBuf, line: usize, field: String, message: String },
    #[error("{manifest}:{line}: referenced file {missing} does not exist")]
    MissingFile { manifest: PathBuf, line: usize, missing: PathBuf },
    #[error("{path}:{line}: {message}")]
    TimestampOrderViolation { path: PathBuf, line: usize, message: String },
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("invalid manifest: {0}")]
    Invalid(String),
}

/// Intrinsics and mounting of a camera as stored in `camera.toml`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSpec {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    /// camera ← body translation, meters
    pub translation: [f64; 3],
    /// camera ← body rotation as `[qx, qy, qz, qw]`
    pub rotation: [f64; 4],
}

impl CameraSpec {
    pub fn from_model(camera: &CameraModel) -> Self {
        let t = camera.extrinsic.translation;
        Self {
            fx: camera.fx,
            fy: camera.fy,
            cx: camera.cx,
            cy: camera.cy,
            width: camera.width,
            height: camera.height,
            translation: [t.x, t.y, t.z],
            rotation: crate::geometry::quaternion_xyzw(&camera.extrinsic.rotation),
        }
    }

    pub fn to_model(&self) -> Result<CameraModel, String> {
        let [qx, qy, qz, qw] = self.rotation;
        let rotation = unit_quaternion(qx, qy, qz, qw).map_err(|e| format!("rotation: {e}"))?;
        let [x, y, z] = self.translation;
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err("translation: must be finite".into());
        }
        let extrinsic = RigidTransform::new(rotation, Vec3::new(x, y, z));
        CameraModel::new(self.fx, self.fy, self.cx, self.cy, self.width, self.height, extrinsic).map_err(|e| e.to_string())
    }
}

pub fn read_camera(path: &Path) -> Result<CameraModel, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|e| FormatError::Io { path: path.to_path_buf(), source: e })?;
    let spec: CameraSpec = toml::from_str(&text).map_err(|e| toml_error(path, &text, e))?;
    spec.to_model().map_err(|message| DatasetError::Parse {
        path: path.to_path_buf(),
        line: 0,
        field: message.split(':').next().unwrap_or("camera").to_string(),
        message,
    })
}

pub fn write_camera(path: &Path, camera: &CameraModel) -> Result<(), DatasetError> {
    let text = toml::to_string(&CameraSpec::from_model(camera)).map_err(|e| DatasetError::Invalid(e.to_string()))?;
    crate::io::write_bytes(path, text.as_bytes())?;
    Ok(())
}

/// Converts a TOML error to a positioned parse error.
pub(crate) fn toml_error(path: &Path, text: &str, e: toml::de::Error) -> DatasetError {
    let line = e.span().map(|s| 1 + text[..s.start.min(text.len())].matches('\n').count()).unwrap_or(0);
    DatasetError::Parse { path: path.to_path_buf(), line, field: String::from("toml"), message: e.message().to_string() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub id: String,
    /// image timestamp, seconds
    pub timestamp: f64,
    pub image: PathBuf,
    pub cloud: PathBuf,
    pub cloud_timestamp: f64,
    /// semantic label map (P5, values from the eval label table)
    pub labels: Option<PathBuf>,
    /// trajectory mask produced by labeling
    pub mask: Option<PathBuf>,
    /// predicted risk map
    pub risk: Option<PathBuf>,
}

impl FrameRecord {
    pub fn new(id: impl Into<String>, timestamp: f64, image: impl Into<PathBuf>, cloud: impl Into<PathBuf>) -> Self {
        Self {
            id: id.into(),
            timestamp,
            image: image.into(),
            cloud: cloud.into(),
            cloud_timestamp: timestamp,
            labels: None,
            mask: None,
            risk: None,
        }
    }

    fn paths(&self) -> impl Iterator<Item = (&'static str, &PathBuf)> {
        [("image", Some(&self.image)), ("cloud", Some(&self.cloud)), ("labels", self.labels.as_ref()), ("mask", self.mask.as_ref()), ("risk", self.risk.as_ref())]
            .into_iter()
            .filter_map(|(k, p)| p.map(|p| (k, p)))
    }

    fn paths_mut(&mut self) -> impl Iterator<Item = &mut PathBuf> {
        [Some(&mut self.image), Some(&mut self.cloud), self.labels.as_mut(), self.mask.as_mut(), self.risk.as_mut()].into_iter().flatten()
    }
}

/// Frames plus shared references. All paths are relative to `root`.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub camera: Option<PathBuf>,
    pub poses: Option<PathBuf>,
    pub vehicle_mask: Option<PathBuf>,
    pub tolerance: f64,
    pub frames: Vec<FrameRecord>,
}

impl DatasetManifest {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into(), camera: None, poses: None, vehicle_mask: None, tolerance: DEFAULT_TOLERANCE, frames: Vec::new() }
    }

    pub fn resolve(&self, rel: &Path) -> PathBuf {
        self.root.join(rel)
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Moves the manifest to `new_root`, rewriting every relative path so it
    /// still names the same file.
    pub fn rebase(&self, new_root: &Path) -> Result<DatasetManifest, DatasetError> {
        let old = std::path::absolute(&self.root).map_err(|e| FormatError::Io { path: self.root.clone(), source: e })?;
        let new = std::path::absolute(new_root).map_err(|e| FormatError::Io { path: new_root.to_path_buf(), source: e })?;
        let fix = |p: &mut PathBuf| -> Result<(), DatasetError> {
            let abs = normalize(&old.join(&*p));
            *p = pathdiff::diff_paths(&abs, normalize(&new))
                .ok_or_else(|| DatasetError::Invalid(format!("cannot express {} relative to {}", abs.display(), new.display())))?;
            Ok(())
        };
        let mut out = self.clone();
        out.root = new_root.to_path_buf();
        for p in [out.camera.as_mut(), out.poses.as_mut(), out.vehicle_mask.as_mut()].into_iter().flatten() {
            fix(p)?;
        }
        for f in &mut out.frames {
            for p in f.paths_mut() {
                fix(p)?;
            }
        }
        Ok(out)
    }

    /// Checks the in-memory invariants: unique ids, non-decreasing
    /// timestamps, association within tolerance. Line numbers in errors
    /// count from the first frame line of a canonical rendering.
    pub fn validate(&self, path: &Path) -> Result<(), DatasetError> {
        let first_frame_line = 1 + self.header_lines();
        validate_frames(path, &self.frames, self.tolerance, |i| first_frame_line + i)
    }

    fn header_lines(&self) -> usize {
        1 + [self.camera.is_some(), self.poses.is_some(), self.vehicle_mask.is_some()].iter().filter(|b| **b).count() + 1
    }
}

/// Resolves `.` and `..` lexically.
fn normalize(p: &Path) -> PathBuf {
    use std::path::Component;
    let mut out = PathBuf::new();
    for c in p.components() {
        match c {
            Component::CurDir => {}
            Component::ParentDir => {
                if !out.pop() {
                    out.push("..");
                }
            }
            other => out.push(other),
        }
    }
    out
}

fn validate_frames(path: &Path, frames: &[FrameRecord], tolerance: f64, line_of: impl Fn(usize) -> usize) -> Result<(), DatasetError> {
    let mut seen = HashSet::new();
    for (i, f) in frames.iter().enumerate() {
        let line = line_of(i);
        let order = |message: String| DatasetError::TimestampOrderViolation { path: path.to_path_buf(), line, message };
        if !seen.insert(f.id.as_str()) {
            return Err(order(format!("duplicate frame id {:?}", f.id)));
        }
        if i > 0 && f.timestamp < frames[i - 1].timestamp {
            return Err(order(format!("frame {:?} at t={} precedes frame {:?} at t={}", f.id, f.timestamp, frames[i - 1].id, frames[i - 1].timestamp)));
        }
        if (f.timestamp - f.cloud_timestamp).abs() > tolerance {
            return Err(order(format!(
                "frame {:?}: cloud at t={} is more than {tolerance} s from image at t={}",
                f.id, f.cloud_timestamp, f.timestamp
            )));
        }
    }
    Ok(())
}

fn check_token(value: &str, what: &str) -> Result<(), DatasetError> {
    if value.is_empty() || value.chars().any(char::is_whitespace) {
        return Err(DatasetError::Invalid(format!("{what} {value:?} must be non-empty and free of whitespace")));
    }
    Ok(())
}

fn path_token(p: &Path, what: &str) -> Result<String, DatasetError> {
    let s = p.to_str().ok_or_else(|| DatasetError::Invalid(format!("{what} path is not valid UTF-8")))?;
    check_token(s, what)?;
    Ok(s.replace('\\', "/"))
}

/// Canonical text form. Loading the result yields the same manifest, and
/// rendering a loaded manifest reproduces its file byte for byte.
pub fn render_manifest(m: &DatasetManifest) -> Result<String, DatasetError> {
    let mut s = String::new();
    s.push_str(MANIFEST_HEADER);
    s.push('\n');
    for (key, value) in [("camera", &m.camera), ("poses", &m.poses), ("vehicle_mask", &m.vehicle_mask)] {
        if let Some(p) = value {
            let _ = writeln!(s, "{key} {}", path_token(p, key)?);
        }
    }
    let _ = writeln!(s, "tolerance {}", m.tolerance);
    for f in &m.frames {
        check_token(&f.id, "frame id")?;
        let _ = write!(s, "frame id={} t={}", f.id, f.timestamp);
        let _ = write!(s, " image={} cloud={} cloud_t={}", path_token(&f.image, "image")?, path_token(&f.cloud, "cloud")?, f.cloud_timestamp);
        for (key, value) in [("labels", &f.labels), ("mask", &f.mask), ("risk", &f.risk)] {
            if let Some(p) = value {
                let _ = write!(s, " {key}={}", path_token(p, key)?);
            }
        }
        s.push('\n');
    }
    Ok(s)
}

/// Parses manifest text without touching the filesystem.
pub fn parse_manifest(path: &Path, root: &Path, text: &str) -> Result<DatasetManifest, DatasetError> {
    let perr = |line: usize, field: &str, message: String| DatasetError::Parse {
        path: path.to_path_buf(),
        line,
        field: field.to_string(),
        message,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l.trim_end() == MANIFEST_HEADER => {}
        Some((_, l)) if l.starts_with("trailmark-manifest ") => {
            return Err(perr(1, "version", format!("unsupported manifest version {:?}", l.trim_end())))
        }
        _ => return Err(perr(1, "header", format!("expected {MANIFEST_HEADER:?}"))),
    }
    let mut m = DatasetManifest::new(root);
    let mut frame_lines = Vec::new();
    let mut seen_keys = HashSet::new();
    for (n, raw) in lines {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        if key != "frame" {
            if !frame_lines.is_empty() {
                return Err(perr(n, key, "header keys must precede frame lines".into()));
            }
            if !seen_keys.insert(key.to_string()) {
                return Err(perr(n, key, "key given twice".into()));
            }
            if rest.is_empty() || rest.contains(char::is_whitespace) {
                return Err(perr(n, key, "expected exactly one value".into()));
            }
        }
        match key {
            "camera" => m.camera = Some(PathBuf::from(rest)),
            "poses" => m.poses = Some(PathBuf::from(rest)),
            "vehicle_mask" => m.vehicle_mask = Some(PathBuf::from(rest)),
            "tolerance" => {
                m.tolerance = rest
                    .parse::<f64>()
                    .ok()
                    .filter(|t| t.is_finite() && *t >= 0.0)
                    .ok_or_else(|| perr(n, "tolerance", format!("expected a non-negative number, found {rest:?}")))?;
            }
            "frame" => {
                m.frames.push(parse_frame(rest, |field, msg| perr(n, field, msg))?);
                frame_lines.push(n);
            }
            other => return Err(perr(n, other, "unknown key".into())),
        }
    }
    validate_frames(path, &m.frames, m.tolerance, |i| frame_lines[i])?;
    Ok(m)
}

fn parse_frame(rest: &str, perr: impl Fn(&str, String) -> DatasetError) -> Result<FrameRecord, DatasetError> {
    let mut id = None;
    let mut t = None;
    let mut image = None;
    let mut cloud = None;
    let mut cloud_t = None;
    let mut labels = None;
    let mut mask = None;
    let mut risk = None;
    for item in rest.split_whitespace() {
        let (k, v) = item.split_once('=').ok_or_else(|| perr("frame", format!("expected key=value, found {item:?}")))?;
        if v.is_empty() {
            return Err(perr(k, "empty value".into()));
        }
        let time = || -> Result<f64, DatasetError> {
            v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| perr(k, format!("invalid timestamp {v:?}")))
        };
        let slot_taken = match k {
            "id" => id.replace(v.to_string()).is_some(),
            "t" => t.replace(time()?).is_some(),
            "image" => image.replace(PathBuf::from(v)).is_some(),
            "cloud" => cloud.replace(PathBuf::from(v)).is_some(),
            "cloud_t" => cloud_t.replace(time()?).is_some(),
            "labels" => labels.replace(PathBuf::from(v)).is_some(),
            "mask" => mask.replace(PathBuf::from(v)).is_some(),
            "risk" => risk.replace(PathBuf::from(v)).is_some(),
            other => return Err(perr(other, "unknown frame field".into())),
        };
        if slot_taken {
            return Err(perr(k, "field given twice".into()));
        }
    }
    let need = |name: &str| perr(name, "missing required field".into());
    let timestamp = t.ok_or_else(|| need("t"))?;
    Ok(FrameRecord {
        id: id.ok_or_else(|| need("id"))?,
        timestamp,
        image: image.ok_or_else(|| need("image"))?,
        cloud: cloud.ok_or_else(|| need("cloud"))?,
        cloud_timestamp: cloud_t.unwrap_or(timestamp),
        labels,
        mask,
        risk,
    })
}

/// Loads and validates a manifest. Every referenced file must exist.
pub fn load_manifest(path: &Path) -> Result<DatasetManifest, DatasetError> {
    let text = crate::io::read_text(path)?;
    let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let m = parse_manifest(path, &root, &text)?;
    let frame_lines: Vec<usize> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| l.trim_start().starts_with("frame"))
        .map(|(i, _)| i + 1)
        .collect();
    let header_line = |key: &str| text.lines().position(|l| l.starts_with(key)).map_or(0, |i| i + 1);
    for (key, p) in [("camera", &m.camera), ("poses", &m.poses), ("vehicle_mask", &m.vehicle_mask)] {
        if let Some(p) = p {
            missing_check(path, header_line(key), &m.resolve(p))?;
        }
    }
    for (i, f) in m.frames.iter().enumerate() {
        for (_, p) in f.paths() {
            missing_check(path, frame_lines[i], &m.resolve(p))?;
        }
    }
    Ok(m)
}

fn missing_check(manifest: &Path, line: usize, file: &Path) -> Result<(), DatasetError> {
    if file.is_file() {
        Ok(())
    } else {
        Err(DatasetError::MissingFile { manifest: manifest.to_path_buf(), line, missing: file.to_path_buf() })
    }
}

/// Writes `m` to `path`. The manifest must already be rooted at the
/// directory containing `path` (see [`DatasetManifest::rebase`]).
pub fn save_manifest(path: &Path, m: &DatasetManifest) -> Result<(), DatasetError> {
    m.validate(path)?;
    crate::io::write_bytes(path, render_manifest(m)?.as_bytes())?;
    Ok(())
}

/// Seeded uniform shuffle of `0..n`, then the first `floor(fraction·n)`
/// indices go to training. Both halves are returned in ascending order.
/// With at least two items each side gets at least one.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    let mut n_train = (fraction * n as f64 + 1e-9).floor() as usize;
    if n >= 2 {
        n_train = n_train.clamp(1, n - 1);
    } else {
        n_train = n;
    }
    let mut train = idx[..n_train].to_vec();
    let mut val = idx[n_train..].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

/// Splits frames into (train, validation) manifests sharing all references.
pub fn split(m: &DatasetManifest, fraction: f64, seed: u64) -> (DatasetManifest, DatasetManifest) {
    let (train, val) = split_indices(m.frames.len(), fraction, seed);
    let pick = |idx: &[usize]| DatasetManifest { frames: idx.iter().map(|&i| m.frames[i].clone()).collect(), ..m.clone() };
    (pick(&train), pick(&val))
}

/// For each query time, the index of the nearest candidate time within
/// `tolerance`. Ties go to the earlier candidate. `candidates` must be sorted.
pub fn associate(queries: &[f64], candidates: &[f64], tolerance: f64) -> Vec<Option<usize>> {
    queries
        .iter()
        .map(|&q| {
            let hi = candidates.partition_point(|&c| c < q);
            let mut best: Option<(usize, f64)> = None;
            for i in [hi.wrapping_sub(1), hi] {
                if let Some(&c) = candidates.get(i) {
                    let d = (c - q).abs();
                    if best.is_none_or(|(_, bd)| d < bd) {
                        best = Some((i, d));
                    }
                }
            }
            best.filter(|&(_, d)| d <= tolerance).map(|(i, _)| i)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(root: &Path) -> DatasetManifest {
        let mut m = DatasetManifest::new(root);
        m.camera = Some("camera.toml".into());
        m.poses = Some("poses.txt".into());
        for i in 0..3 {
            let mut f = FrameRecord::new(format!("{i:04}"), i as f64 * 0.1, format!("images/{i:04}.ppm"), format!("clouds/{i:04}.ply"));
            f.cloud_timestamp += 0.01;
            f.labels = Some(format!("labels/{i:04}.pgm").into());
            m.frames.push(f);
        }
        m
    }

    #[test]
    fn empty_manifest_is_valid() {
        let m = parse_manifest(Path::new("m.txt"), Path::new(""), "trailmark-manifest 1\n").unwrap();
        assert!(m.is_empty());
        assert_eq!(m.tolerance, DEFAULT_TOLERANCE);
    }

    #[test]
    fn text_round_trip_is_byte_identical() {
        let m = sample(Path::new("data"));
        let text = render_manifest(&m).unwrap();
        let back = parse_manifest(Path::new("data/m.txt"), Path::new("data"), &text).unwrap();
        assert_eq!(back, m);
        assert_eq!(render_manifest(&back).unwrap(), text);
    }

    #[test]
    fn load_checks_files_and_save_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let m = sample(dir.path());
        let path = dir.path().join("manifest.txt");
        save_manifest(&path, &m).unwrap();
        match load_manifest(&path) {
            Err(DatasetError::MissingFile { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        for rel in ["camera.toml", "poses.txt"] {
            std::fs::write(dir.path().join(rel), "").unwrap();
        }
        for f in &m.frames {
            for (_, p) in f.paths() {
                crate::io::write_bytes(&dir.path().join(p), b"").unwrap();
            }
        }
        let loaded = load_manifest(&path).unwrap();
        assert_eq!(loaded, m);
        assert_eq!(render_manifest(&loaded).unwrap(), std::fs::read_to_string(&path).unwrap());
    }

    #[test]
    fn validation_errors_are_positioned() {
        let p = Path::new("m.txt");
        let dup = "trailmark-manifest 1\nframe id=a t=0 image=x cloud=y\nframe id=a t=1 image=x cloud=y\n";
        match parse_manifest(p, Path::new(""), dup) {
            Err(DatasetError::TimestampOrderViolation { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("\"a\""));
            }
            other => panic!("{other:?}"),
        }
        let order = "trailmark-manifest 1\nframe id=a t=1 image=x cloud=y\nframe id=b t=0 image=x cloud=y\n";
        assert!(matches!(parse_manifest(p, Path::new(""), order), Err(DatasetError::TimestampOrderViolation { line: 3, .. })));
        let far = "trailmark-manifest 1\ntolerance 0.01\nframe id=a t=1 image=x cloud=y cloud_t=1.5\n";
        assert!(matches!(parse_manifest(p, Path::new(""), far), Err(DatasetError::TimestampOrderViolation { line: 3, .. })));
        let field = |text: &str| match parse_manifest(p, Path::new(""), text) {
            Err(DatasetError::Parse { field, line, .. }) => (field, line),
            other => panic!("{other:?}"),
        };
        assert_eq!(field("trailmark-manifest 2\n"), ("version".into(), 1));
        assert_eq!(field("nope\n"), ("header".into(), 1));
        assert_eq!(field("trailmark-manifest 1\nframe id=a t=x image=x cloud=y\n"), ("t".into(), 2));
        assert_eq!(field("trailmark-manifest 1\nframe id=a t=0 cloud=y\n"), ("image".into(), 2));
        assert_eq!(field("trailmark-manifest 1\n\nbogus 1\n"), ("bogus".into(), 3));
        assert_eq!(field("trailmark-manifest 1\ntolerance -1\n"), ("tolerance".into(), 2));
    }

    #[test]
    fn rebase_keeps_targets() {
        let m = sample(Path::new("/data/run"));
        let r = m.rebase(Path::new("/data/out/label")).unwrap();
        assert_eq!(r.frames[0].image, PathBuf::from("../../run/images/0000.ppm"));
        assert_eq!(normalize(&r.resolve(&r.frames[2].cloud)), PathBuf::from("/data/run/clouds/0002.ply"));
        assert_eq!(r.camera, Some(PathBuf::from("../../run/camera.toml")));
    }

    #[test]
    fn ten_frames_split_eight_two() {
        let (t, v) = split_indices(10, 0.8, 3);
        assert_eq!((t.len(), v.len()), (8, 2));
        assert_eq!(split_indices(10, 0.8, 3), (t.clone(), v.clone()));
        let mut all: Vec<usize> = t.into_iter().chain(v).collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(split_indices(2, 0.99, 0).0.len(), 1);
        assert_eq!(split_indices(1, 0.8, 0), (vec![0], vec![]));
    }

    #[test]
    fn split_manifests_keep_order() {
        let m = sample(Path::new("d"));
        let (a, b) = split(&m, 0.5, 7);
        assert_eq!(a.len() + b.len(), 3);
        assert!(a.validate(Path::new("a")).is_ok() && b.validate(Path::new("b")).is_ok());
    }

    #[test]
    fn nearest_timestamp_association() {
        let c = [0.0, 0.1, 0.2, 0.3];
        assert_eq!(associate(&[0.04, 0.05, 0.26, 0.5, -0.01], &c, 0.05), vec![Some(0), Some(0), Some(3), None, Some(0)]);
        assert_eq!(associate(&[1.0], &[], 1.0), vec![None]);
    }

    #[test]
    fn camera_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cam = CameraModel::new(
            220.0,
            221.5,
            159.5,
            98.5,
            320,
            198,
            RigidTransform::new(crate::geometry::forward_camera_rotation(0.15), Vec3::new(0.1, 0.2, -1.3)),
        )
        .unwrap();
        let path = dir.path().join("camera.toml");
        write_camera(&path, &cam).unwrap();
        let back = read_camera(&path).unwrap();
        assert_eq!(back, cam);
        std::fs::write(&path, "fx = 1.0\nbogus = 2\n").unwrap();
        assert!(matches!(read_camera(&path), Err(DatasetError::Parse { line: 2, .. })));
    }
}
