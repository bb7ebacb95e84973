//! Run configuration (`version = 1` TOML). Every section is optional and
//! defaults to the reference parameters.
//!
//! ```toml
//! version = 1
//! seed = 7
//!
//! [window]
//! rate = 10.0
//! horizon = 4.0
//!
//! [occlusion]
//! rho = 0.35
//! classes = ["obstacle", "surface"]
//! ```

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::CameraSpec;
use crate::eval::{Granularity, SemanticClass};
use crate::geometry::{CameraModel, RigidTransform};
use crate::model::{ModelConfig, TrainConfig};
use crate::occlusion::{CloudClass, OcclusionParams};
use crate::trajectory::{ProjectionWindow, WheelGeometry};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Error)]
#[error("{path}:{line}: `{field}`: {message}")]
pub struct ConfigError {
    pub path: PathBuf,
    /// 1-based; 0 when the position is unknown
    pub line: usize,
    pub field: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WheelSection {
    /// contact centers in the base-link frame, meters
    pub front_left: [f64; 3],
    pub front_right: [f64; 3],
    pub wheel_width: f64,
}

impl Default for WheelSection {
    fn default() -> Self {
        Self { front_left: [1.4, 0.8, 0.0], front_right: [1.4, -0.8, 0.0], wheel_width: 0.3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowSection {
    /// Hz
    pub rate: f64,
    /// seconds
    pub horizon: f64,
}

impl Default for WindowSection {
    fn default() -> Self {
        Self { rate: 10.0, horizon: 4.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OcclusionSection {
    pub rho: f64,
    pub classes: Vec<String>,
    /// radians
    pub max_angular_distance: Option<f64>,
}

impl Default for OcclusionSection {
    fn default() -> Self {
        Self { rho: 0.35, classes: vec!["obstacle".into(), "surface".into()], max_angular_distance: None }
    }
}

/// Pixel values of the semantic label images.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelValues {
    pub unlabeled: u8,
    pub ground: u8,
    pub vegetation: u8,
}

impl Default for LabelValues {
    fn default() -> Self {
        Self { unlabeled: 0, ground: 1, vegetation: 2 }
    }
}

impl LabelValues {
    pub fn class_of(&self, v: u8) -> Option<SemanticClass> {
        if v == self.ground {
            Some(SemanticClass::Ground)
        } else if v == self.vegetation {
            Some(SemanticClass::Vegetation)
        } else if v == self.unlabeled {
            Some(SemanticClass::Unlabeled)
        } else {
            None
        }
    }

    pub fn value_of(&self, c: SemanticClass) -> u8 {
        match c {
            SemanticClass::Unlabeled => self.unlabeled,
            SemanticClass::Ground => self.ground,
            SemanticClass::Vegetation => self.vegetation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub granularity: Granularity,
    pub bins: usize,
    /// upper percentile of the risk normalization
    pub percentile: f64,
    /// Fixed operating threshold; when absent the ROC-optimal one is used.
    pub threshold: Option<f64>,
    pub label_values: LabelValues,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self { granularity: Granularity::Pixel, bins: 32, percentile: 99.0, threshold: None, label_values: LabelValues::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub output_dir: Option<PathBuf>,
    /// When set, replaces both `model.seed` and `train.seed`.
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    /// Overrides the camera file referenced by the manifest.
    pub camera: Option<CameraSpec>,
    pub wheels: WheelSection,
    pub window: WindowSection,
    pub occlusion: OcclusionSection,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub eval: EvalSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            output_dir: None,
            seed: None,
            workers: 0,
            camera: None,
            wheels: WheelSection::default(),
            window: WindowSection::default(),
            occlusion: OcclusionSection::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            eval: EvalSection::default(),
        }
    }
}

impl RunConfig {
    pub fn parse(path: &Path, text: &str) -> Result<Self, ConfigError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| 1 + text[..s.start.min(text.len())].matches('\n').count()).unwrap_or(0);
            let message = e.message().to_string();
            let field = message
                .split('`')
                .nth(1)
                .map(str::to_string)
                .or_else(|| e.span().map(|s| key_at(text, s.start)))
                .unwrap_or_default();
            ConfigError { path: path.to_path_buf(), line, field, message }
        })?;
        if let Some(seed) = cfg.seed {
            cfg.model.seed = seed;
            cfg.train.seed = seed;
        }
        cfg.validate().map_err(|(section, key, message)| {
            let field = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
            ConfigError { path: path.to_path_buf(), line: locate(text, section, key), field, message }
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            path: path.to_path_buf(),
            line: 0,
            field: String::new(),
            message: e.to_string(),
        })?;
        Self::parse(path, &text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Applies a command-line seed override.
    pub fn override_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        self.model.seed = seed;
        self.train.seed = seed;
    }

    fn validate(&self) -> Result<(), (&'static str, &'static str, String)> {
        if self.version != CONFIG_VERSION {
            return Err(("", "version", format!("unsupported version {}; expected {CONFIG_VERSION}", self.version)));
        }
        if let Some(c) = &self.camera {
            c.to_model().map_err(|m| ("camera", "fx", m))?;
        }
        self.wheel_geometry().map_err(|m| ("wheels", "wheel_width", m))?;
        ProjectionWindow::new(self.window.rate, self.window.horizon).map_err(|e| ("window", "rate", e.to_string()))?;
        if !(self.occlusion.rho > 0.0 && self.occlusion.rho.is_finite()) {
            return Err(("occlusion", "rho", format!("must be positive, got {}", self.occlusion.rho)));
        }
        self.occlusion_params().map_err(|m| ("occlusion", "classes", m))?;
        if let Some(d) = self.occlusion.max_angular_distance {
            if !(d > 0.0 && d.is_finite()) {
                return Err(("occlusion", "max_angular_distance", format!("must be positive, got {d}")));
            }
        }
        self.model.validate().map_err(|e| ("model", "architecture", e.to_string()))?;
        self.model
            .validate_input(self.train.input_width, self.train.input_height)
            .map_err(|e| ("train", "input_width", e.to_string()))?;
        self.train.validate().map_err(|e| ("train", "learning_rate", e.to_string()))?;
        if self.eval.bins == 0 {
            return Err(("eval", "bins", "must be positive".into()));
        }
        if !(self.eval.percentile > 0.0 && self.eval.percentile <= 100.0) {
            return Err(("eval", "percentile", format!("must lie in (0, 100], got {}", self.eval.percentile)));
        }
        let lv = self.eval.label_values;
        if lv.ground == lv.vegetation || lv.ground == lv.unlabeled || lv.vegetation == lv.unlabeled {
            return Err(("eval", "label_values", "label values must be distinct".into()));
        }
        Ok(())
    }

    pub fn camera_model(&self) -> Option<CameraModel> {
        self.camera.as_ref().and_then(|c| c.to_model().ok())
    }

    pub fn wheel_geometry(&self) -> Result<WheelGeometry, String> {
        let t = |v: [f64; 3]| RigidTransform::from_translation(v[0], v[1], v[2]);
        WheelGeometry::new(t(self.wheels.front_left), t(self.wheels.front_right), self.wheels.wheel_width).map_err(|e| e.to_string())
    }

    pub fn projection_window(&self) -> ProjectionWindow {
        ProjectionWindow::new(self.window.rate, self.window.horizon).expect("validated on load")
    }

    pub fn occlusion_params(&self) -> Result<OcclusionParams, String> {
        let classes = self
            .occlusion
            .classes
            .iter()
            .map(|n| CloudClass::from_name(n).ok_or_else(|| format!("unknown class {n:?}")))
            .collect::<Result<BTreeSet<_>, _>>()?;
        Ok(OcclusionParams { rho: self.occlusion.rho, classes, max_angular_distance: self.occlusion.max_angular_distance })
    }
}

/// Line of `key` inside `[section]` (top level when `section` is empty).
fn locate(text: &str, section: &str, key: &str) -> usize {
    let mut current = String::new();
    for (i, line) in text.lines().enumerate() {
        let l = line.trim();
        if let Some(name) = l.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            current = name.trim().to_string();
            continue;
        }
        let k = l.split('=').next().unwrap_or("").trim();
        if current == section && k == key {
            return i + 1;
        }
    }
    0
}

fn key_at(text: &str, offset: usize) -> String {
    let line_start = text[..offset.min(text.len())].rfind('\n').map_or(0, |i| i + 1);
    let line = text[line_start..].lines().next().unwrap_or("");
    line.split('=').next().unwrap_or("").trim().to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        RunConfig::parse(Path::new("run.toml"), text)
    }

    #[test]
    fn defaults_are_reference_values() {
        let c = parse("version = 1\n").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!((c.window.rate, c.window.horizon, c.occlusion.rho), (10.0, 4.0, 0.35));
        assert_eq!((c.train.learning_rate, c.train.batch_size, c.train.epochs), (1e-4, 4, 100));
        assert_eq!((c.train.input_width, c.train.input_height, c.train.split), (224, 224, 0.8));
    }

    #[test]
    fn serialized_config_round_trips() {
        let mut c = RunConfig::default();
        c.override_seed(9);
        c.occlusion.max_angular_distance = Some(0.01);
        assert_eq!(parse(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn errors_name_the_field_and_line() {
        let e = parse("version = 1\n[train]\nepochs = 3\nbogus = 1\n").unwrap_err();
        assert_eq!((e.line, e.field.as_str()), (4, "bogus"));
        let e = parse("version = 1\n\n[occlusion]\nrho = -1.0\n").unwrap_err();
        assert_eq!((e.line, e.field.as_str()), (4, "occlusion.rho"));
        let e = parse("version = 2\n").unwrap_err();
        assert_eq!((e.line, e.field.as_str()), (1, "version"));
        let e = parse("[window]\nrate = \"fast\"\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = parse("[occlusion]\nclasses = [\"trees\"]\n").unwrap_err();
        assert_eq!(e.field, "occlusion.classes");
        assert!(e.message.contains("trees"));
    }

    #[test]
    fn top_level_seed_applies_to_model_and_training() {
        let c = parse("seed = 42\n").unwrap();
        assert_eq!((c.model.seed, c.train.seed), (42, 42));
    }
}
