//! The five batch stages. Each reads a manifest, writes its artifacts and a
//! new manifest into an output directory, and never modifies its inputs.
//!
//! | stage   | adds to each frame | other outputs |
//! |---------|--------------------|---------------|
//! | synth   | image, cloud, labels | camera, poses, vehicle mask, occlusion ground truth |
//! | label   | `mask=` | `occlusion.txt`, `label_summary.txt` |
//! | train   | | `checkpoint.bin`, `metrics.txt`, `split.txt` |
//! | predict | `risk=` | `recon/`, `error/`, `normalization.txt` |
//! | eval    | | `report.txt`, `roc.txt`, `histograms.txt`, `threshold.txt` |

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, LabelValues, RunConfig};
use crate::dataset::{load_manifest, read_camera, save_manifest, DatasetError, DatasetManifest, FrameRecord};
use crate::eval::{labeled_scores, region_histograms, roc_curve, EvalError, IntersectionCounts, SemanticLabelMap};
use crate::geometry::{CameraModel, Pose};
use crate::image::{BinaryMask, ImageTensor};
use crate::io::{read_gray, read_image, read_mask, read_ply, read_poses, write_bytes, write_gray, write_image, write_mask, FormatError, GrayImage};
use crate::mask::{apply_vehicle_mask, build_quads, rasterize};
use crate::model::{load_checkpoint, save_checkpoint, train_with_observer, ModelError};
use crate::occlusion::{build_index, filter_occlusions, OcclusionParams, PointCloud};
use crate::risk::{classify, error_map, normalize_with, select_threshold, ErrorMap, RiskError, RiskMap, RiskThreshold};
use crate::synth::{generate_dataset, write_dataset, SceneSpec, SynthError};
use crate::trajectory::{project_trajectory, ProjectedTrajectory, ProjectionWindow, TrajectoryError, WheelGeometry};

/// Errors of the batch stages, grouped by exit code.
#[derive(Debug, Error)]
pub enum PipelineError {
    /// exit code 2
    #[error("configuration error: {0}")]
    Config(String),
    /// exit code 3
    #[error("data error: {0}")]
    Data(String),
    /// exit code 4
    #[error("internal error: {0}")]
    Internal(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Data(_) => 3,
            PipelineError::Internal(_) => 4,
        }
    }
}

impl From<ConfigError> for PipelineError {
    fn from(e: ConfigError) -> Self {
        PipelineError::Config(e.to_string())
    }
}

impl From<DatasetError> for PipelineError {
    fn from(e: DatasetError) -> Self {
        PipelineError::Data(e.to_string())
    }
}

impl From<FormatError> for PipelineError {
    fn from(e: FormatError) -> Self {
        PipelineError::Data(e.to_string())
    }
}

impl From<SynthError> for PipelineError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Spec { .. } | SynthError::PathTooShort { .. } => PipelineError::Config(e.to_string()),
            other => PipelineError::Data(other.to_string()),
        }
    }
}

impl From<ModelError> for PipelineError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::InvalidConfig(_) => PipelineError::Config(e.to_string()),
            ModelError::EmptyDataset | ModelError::AllMasksEmpty | ModelError::DimensionMismatch(_) | ModelError::Checkpoint(_) | ModelError::Io(_) => {
                PipelineError::Data(e.to_string())
            }
        }
    }
}

impl From<RiskError> for PipelineError {
    fn from(e: RiskError) -> Self {
        PipelineError::Data(e.to_string())
    }
}

impl From<EvalError> for PipelineError {
    fn from(e: EvalError) -> Self {
        PipelineError::Data(e.to_string())
    }
}

/// Trajectory mask of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameLabel {
    pub trajectory: ProjectedTrajectory,
    pub mask: BinaryMask,
}

/// Projects the wheel window starting at `timestamp`, removes occluded
/// samples against `cloud` (camera frame), rasterizes the surviving quads
/// and clears the vehicle's own pixels.
#[allow(clippy::too_many_arguments)]
pub fn label_frame(
    timestamp: f64,
    poses: &[Pose],
    cloud: &PointCloud,
    camera: &CameraModel,
    wheels: &WheelGeometry,
    window: &ProjectionWindow,
    occlusion: &OcclusionParams,
    vehicle: Option<&BinaryMask>,
) -> Result<FrameLabel, TrajectoryError> {
    let raw = project_trajectory(timestamp, poses, wheels, camera, window)?;
    let index = build_index(cloud, occlusion);
    let trajectory = filter_occlusions(&raw, &index, occlusion);
    let mut mask = rasterize(&build_quads(&trajectory), camera.width, camera.height);
    if let Some(v) = vehicle {
        if v.dims() == mask.dims() {
            mask = apply_vehicle_mask(&mask, v).expect("dimensions checked");
        }
    }
    Ok(FrameLabel { trajectory, mask })
}

/// Sets up the worker pool; 0 means every available core. Calling it again
/// after the global pool exists has no effect.
pub fn init_workers(workers: usize) {
    let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
}

fn frame_path(dir: &str, id: &str, ext: &str) -> PathBuf {
    PathBuf::from(dir).join(format!("{id}.{ext}"))
}

fn manifest_camera(cfg: &RunConfig, m: &DatasetManifest) -> Result<CameraModel, PipelineError> {
    if let Some(c) = cfg.camera_model() {
        return Ok(c);
    }
    let rel = m.camera.as_ref().ok_or_else(|| PipelineError::Config("no [camera] in config and no camera in manifest".into()))?;
    Ok(read_camera(&m.resolve(rel))?)
}

fn read_vehicle_mask(m: &DatasetManifest) -> Result<Option<BinaryMask>, PipelineError> {
    m.vehicle_mask.as_ref().map(|p| read_mask(&m.resolve(p))).transpose().map_err(Into::into)
}

/// Relocates `m` into `out` and saves it as `out/manifest.txt`.
fn finish_manifest(out: &Path, m: &DatasetManifest) -> Result<PathBuf, PipelineError> {
    let path = out.join("manifest.txt");
    save_manifest(&path, m)?;
    Ok(path)
}

fn prepare_out(m: &DatasetManifest, out: &Path) -> Result<DatasetManifest, PipelineError> {
    std::fs::create_dir_all(out).map_err(|e| PipelineError::Data(format!("{}: {e}", out.display())))?;
    Ok(m.rebase(out)?)
}

/// Generates a synthetic dataset from the scene spec at `scene_path`.
pub fn cmd_synth(cfg: &RunConfig, scene_path: &Path, out: &Path, seed: Option<u64>) -> Result<PathBuf, PipelineError> {
    let mut scene = SceneSpec::load(scene_path)?;
    if let Some(s) = seed {
        scene.seed = s;
    }
    let camera = cfg.camera_model().unwrap_or_else(crate::synth::default_camera);
    let wheels = cfg.wheel_geometry().map_err(PipelineError::Config)?;
    let data = generate_dataset(&scene, &camera, &wheels, &cfg.projection_window())?;
    write_dataset(out, &data, &cfg.eval.label_values)?;
    write_bytes(&out.join("scene.toml"), scene.to_toml().as_bytes())?;
    info!("synth: {} frames ({} labelable) written to {}", data.frames.len(), data.labelable().count(), out.display());
    Ok(out.join("manifest.txt"))
}

/// Writes one trajectory mask per frame whose projection window is covered
/// by the pose log. Other frames are kept without a mask.
pub fn cmd_label(cfg: &RunConfig, manifest: &Path, out: &Path) -> Result<PathBuf, PipelineError> {
    let input = load_manifest(manifest)?;
    let camera = manifest_camera(cfg, &input)?;
    let poses_rel = input.poses.as_ref().ok_or_else(|| PipelineError::Data("manifest has no pose log".into()))?;
    let poses = read_poses(&input.resolve(poses_rel))?;
    let vehicle = read_vehicle_mask(&input)?;
    let wheels = cfg.wheel_geometry().map_err(PipelineError::Config)?;
    let window = cfg.projection_window();
    let occlusion = cfg.occlusion_params().map_err(PipelineError::Config)?;
    let mut m = prepare_out(&input, out)?;

    let results: Vec<Result<Option<FrameLabel>, PipelineError>> = input
        .frames
        .par_iter()
        .map(|f| {
            let cloud = read_ply(&input.resolve(&f.cloud))?;
            match label_frame(f.timestamp, &poses, &cloud, &camera, &wheels, &window, &occlusion, vehicle.as_ref()) {
                Ok(l) => Ok(Some(l)),
                Err(TrajectoryError::InsufficientPoses { .. }) => Ok(None),
                Err(e) => Err(PipelineError::Data(format!("frame {}: {e}", f.id))),
            }
        })
        .collect();

    let mut flags = String::from("# frame sample_index occluded\n");
    let mut summary = String::from("# frame samples in_frustum occluded_points mask_pixels\n");
    for (record, result) in m.frames.iter_mut().zip(results) {
        let Some(label) = result? else {
            warn!("label: frame {} skipped, projection window not covered by the pose log", record.id);
            record.mask = None;
            continue;
        };
        let rel = frame_path("masks", &record.id, "pgm");
        write_mask(&out.join(&rel), &label.mask)?;
        record.mask = Some(rel);
        let mut occluded = 0;
        let mut in_frustum = 0;
        for (i, s) in label.trajectory.samples().enumerate() {
            if !s.in_frustum {
                continue;
            }
            in_frustum += 1;
            for (e, p) in s.points().iter().enumerate() {
                occluded += usize::from(p.occluded);
                let _ = writeln!(flags, "{} {} {}", record.id, 2 * i + e, u8::from(p.occluded));
            }
        }
        let samples = label.trajectory.samples().count();
        let _ = writeln!(summary, "{} {samples} {in_frustum} {occluded} {}", record.id, label.mask.count_ones());
    }
    write_bytes(&out.join("occlusion.txt"), flags.as_bytes())?;
    write_bytes(&out.join("label_summary.txt"), summary.as_bytes())?;
    let labeled = m.frames.iter().filter(|f| f.mask.is_some()).count();
    info!("label: {labeled} of {} frames labeled", m.frames.len());
    finish_manifest(out, &m)
}

/// Trains on every frame that has a mask and writes the best checkpoint.
pub fn cmd_train(cfg: &RunConfig, manifest: &Path, out: &Path) -> Result<PathBuf, PipelineError> {
    let input = load_manifest(manifest)?;
    let frames: Vec<&FrameRecord> = input.frames.iter().filter(|f| f.mask.is_some()).collect();
    if frames.is_empty() {
        return Err(ModelError::EmptyDataset.into());
    }
    let samples: Vec<(ImageTensor, BinaryMask)> = frames
        .par_iter()
        .map(|f| -> Result<_, PipelineError> {
            let image = read_image(&input.resolve(&f.image))?;
            let mask = read_mask(&input.resolve(f.mask.as_ref().expect("filtered")))?;
            Ok((image, mask))
        })
        .collect::<Result<_, _>>()?;
    std::fs::create_dir_all(out).map_err(|e| PipelineError::Data(format!("{}: {e}", out.display())))?;

    let mut metrics = String::from("# epoch train_loss val_loss\n");
    let (model, summary) = train_with_observer(&samples, &cfg.model, &cfg.train, |e| {
        info!("train: epoch {} train {:.6e} val {:.6e}", e.epoch, e.train_loss, e.val_loss);
        let _ = writeln!(metrics, "{} {} {}", e.epoch, e.train_loss, e.val_loss);
    })?;
    let _ = writeln!(metrics, "# best_epoch {} best_val_loss {}", model.best_epoch, model.best_val_loss);
    let mut split = String::from("# frame set\n");
    for (set, idx) in [("train", &summary.train_indices), ("val", &summary.val_indices)] {
        for &i in idx {
            let _ = writeln!(split, "{} {set}", frames[i].id);
        }
    }
    write_bytes(&out.join("metrics.txt"), metrics.as_bytes())?;
    write_bytes(&out.join("split.txt"), split.as_bytes())?;
    let path = out.join("checkpoint.bin");
    save_checkpoint(&model, &path)?;
    info!("train: best epoch {} with validation loss {:.6e}", model.best_epoch, model.best_val_loss);
    Ok(path)
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Reconstructs every frame and writes normalized risk maps, reconstructions
/// and error images scaled by the largest error in the run.
pub fn cmd_predict(cfg: &RunConfig, checkpoint: &Path, manifest: &Path, out: &Path) -> Result<PathBuf, PipelineError> {
    let input = load_manifest(manifest)?;
    if input.is_empty() {
        return Err(PipelineError::Data("manifest has no frames".into()));
    }
    let model = load_checkpoint(checkpoint)?;
    let mut m = prepare_out(&input, out)?;
    let outputs: Vec<(ImageTensor, ErrorMap)> = input
        .frames
        .par_iter()
        .map(|f| -> Result<_, PipelineError> {
            let image = read_image(&input.resolve(&f.image))?;
            let recon = model.reconstruct(&image)?;
            let err = error_map(&image, &recon)?;
            Ok((recon, err))
        })
        .collect::<Result<_, _>>()?;
    let errors: Vec<ErrorMap> = outputs.iter().map(|(_, e)| e.clone()).collect();
    let (risks, constants) = normalize_with(&errors, cfg.eval.percentile)?;
    let max_error = errors.iter().flat_map(|e| e.values.iter().copied()).fold(0.0, f64::max);
    let scale = if max_error > 0.0 { 1.0 / max_error } else { 0.0 };

    for ((record, (recon, err)), risk) in m.frames.iter_mut().zip(&outputs).zip(&risks) {
        let risk_rel = frame_path("risk", &record.id, "pgm");
        write_gray(&out.join(&risk_rel), &GrayImage { width: risk.width, height: risk.height, data: risk.values.iter().map(|&v| quantize(v)).collect() })?;
        write_image(&out.join(frame_path("recon", &record.id, "ppm")), recon)?;
        write_gray(
            &out.join(frame_path("error", &record.id, "pgm")),
            &GrayImage { width: err.width, height: err.height, data: err.values.iter().map(|&v| quantize(v * scale)).collect() },
        )?;
        record.risk = Some(risk_rel);
    }
    let text = format!(
        "# risk = clamp((error - min) / (upper - min), 0, 1)\nmin {}\nupper {}\npercentile {}\nmax_error {}\n",
        constants.min, constants.upper, cfg.eval.percentile, max_error
    );
    write_bytes(&out.join("normalization.txt"), text.as_bytes())?;
    info!("predict: {} risk maps written", m.frames.len());
    finish_manifest(out, &m)
}

/// Reads a label image, mapping pixel values through the configured table.
pub fn read_labels(path: &Path, values: &LabelValues) -> Result<SemanticLabelMap, PipelineError> {
    let g = read_gray(path)?;
    let classes = g
        .data
        .iter()
        .enumerate()
        .map(|(i, &v)| values.class_of(v).ok_or_else(|| PipelineError::Data(format!("{}: pixel {i} has unknown label value {v}", path.display()))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SemanticLabelMap::new(g.width, g.height, classes)?)
}

/// Risk values as stored on disk (8-bit, scaled to [0, 1]).
pub fn read_risk(path: &Path) -> Result<RiskMap, PipelineError> {
    let g = read_gray(path)?;
    Ok(RiskMap::new(g.width, g.height, g.data.iter().map(|&v| v as f64 / 255.0).collect())?)
}

/// ROC, operating threshold, intersection metrics and risk histograms over
/// every frame that has both labels and a risk map.
pub fn cmd_eval(cfg: &RunConfig, manifest: &Path, out: &Path) -> Result<PathBuf, PipelineError> {
    let input = load_manifest(manifest)?;
    let frames: Vec<&FrameRecord> = input.frames.iter().filter(|f| f.labels.is_some() && f.risk.is_some()).collect();
    if frames.is_empty() {
        return Err(PipelineError::Data("no frame has both labels and a risk map".into()));
    }
    let loaded: Vec<(RiskMap, SemanticLabelMap)> = frames
        .par_iter()
        .map(|f| -> Result<_, PipelineError> {
            let risk = read_risk(&input.resolve(f.risk.as_ref().expect("filtered")))?;
            let labels = read_labels(&input.resolve(f.labels.as_ref().expect("filtered")), &cfg.eval.label_values)?;
            if (labels.width, labels.height) != (risk.width, risk.height) {
                return Err(PipelineError::Data(format!("frame {}: label and risk sizes differ", f.id)));
            }
            Ok((risk, labels))
        })
        .collect::<Result<_, _>>()?;
    let (risks, labels): (Vec<RiskMap>, Vec<SemanticLabelMap>) = loaded.into_iter().unzip();

    let (scores, positive) = labeled_scores(&risks, &labels, cfg.eval.granularity)?;
    let roc = roc_curve(&scores, &positive).ok();
    let auroc = roc.as_ref().map(|r| r.area());
    let threshold = match cfg.eval.threshold {
        Some(t) => RiskThreshold::fixed(t),
        None => select_threshold(&scores, &positive).map_err(|e| PipelineError::Data(format!("threshold selection: {e}")))?,
    };
    let mut counts = IntersectionCounts::default();
    for (risk, label) in risks.iter().zip(&labels) {
        counts.add(&classify(risk, &threshold), label)?;
    }
    let report = counts.report(auroc)?;
    let values: Vec<&[f64]> = risks.iter().map(|r| r.values.as_slice()).collect();
    let hist = region_histograms(&values, &labels, cfg.eval.bins)?;

    std::fs::create_dir_all(out).map_err(|e| PipelineError::Data(format!("{}: {e}", out.display())))?;
    let fmt_opt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.4}"));
    let mut text = String::new();
    let _ = writeln!(text, "frames {}", frames.len());
    let _ = writeln!(text, "granularity {:?}", cfg.eval.granularity);
    let _ = writeln!(text, "samples {} positive {}", scores.len(), positive.iter().filter(|p| **p).count());
    let _ = writeln!(text, "threshold {}", threshold.value);
    let _ = writeln!(text, "threshold_tpr {}", threshold.tpr);
    let _ = writeln!(text, "threshold_fpr {}", threshold.fpr);
    let _ = writeln!(text, "threshold_distance {}", threshold.distance);
    let _ = writeln!(text);
    let _ = writeln!(text, "| ground low-risk % | vegetation high-risk % | AUROC |");
    let _ = writeln!(text, "|---|---|---|");
    let pct = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.1}"));
    let _ = writeln!(text, "| {} | {} | {} |", pct(report.ground_low_risk_percent), pct(report.vegetation_high_risk_percent), fmt_opt(report.auroc));
    write_bytes(&out.join("report.txt"), text.as_bytes())?;

    let mut roc_text = String::from("# threshold fpr tpr\n");
    if let Some(r) = &roc {
        for (t, (fpr, tpr)) in r.thresholds.iter().zip(&r.points) {
            let _ = writeln!(roc_text, "{t} {fpr} {tpr}");
        }
    }
    write_bytes(&out.join("roc.txt"), roc_text.as_bytes())?;
    let mut hist_text = String::from("# bin_low bin_high ground vegetation\n");
    for (i, w) in hist.edges.windows(2).enumerate() {
        let _ = writeln!(hist_text, "{} {} {} {}", w[0], w[1], hist.ground[i], hist.vegetation[i]);
    }
    write_bytes(&out.join("histograms.txt"), hist_text.as_bytes())?;
    write_bytes(&out.join("threshold.txt"), format!("{}\n", threshold.value).as_bytes())?;
    info!(
        "eval: ground low-risk {} %, vegetation high-risk {} %, AUROC {}",
        pct(report.ground_low_risk_percent),
        pct(report.vegetation_high_risk_percent),
        fmt_opt(report.auroc)
    );
    Ok(out.join("report.txt"))
}
