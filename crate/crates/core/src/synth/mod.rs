//! Procedural test scenes: a textured ground plane with box and sphere
//! obstacles, a vehicle driving a straight or circular path, a camera and a
//! co-located scanning range sensor. Everything is a pure function of the
//! scene spec, so the same spec always yields the same bytes on disk.
//!
//! Obstacles stand in for vegetation: they are rendered green with a
//! fine, high-contrast texture and labeled as vegetation; the ground is
//! brown, smooth and labeled as ground.

mod raycast;
mod texture;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use raycast::{cast, intersect_box, intersect_ground, intersect_obstacle, intersect_sphere, Hit, Surface};
pub use texture::{fractal_noise, value_noise, TextureSpec};

use crate::config::LabelValues;
use crate::dataset::{write_camera, DatasetError, DatasetManifest, FrameRecord};
use crate::eval::{SemanticClass, SemanticLabelMap};
use crate::geometry::{forward_camera_rotation, to_cartesian, yaw, CameraModel, ImagePoint, Pose, RigidTransform, SphericalPoint, Vec3};
use crate::image::{BinaryMask, ImageTensor};
use crate::io::{write_gray, write_image, write_mask, write_ply, write_poses, FormatError, GrayImage};
use crate::occlusion::{CloudClass, PointCloud};
use crate::trajectory::{project_trajectory, ProjectedTrajectory, ProjectionWindow, WheelGeometry};

pub const SCENE_VERSION: u32 = 1;
const SKY: [f64; 3] = [0.62, 0.74, 0.88];
const HOOD: [f64; 3] = [0.08, 0.08, 0.09];

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("{path}:{line}: `{field}`: {message}")]
    Spec { path: PathBuf, line: usize, field: String, message: String },
    #[error("path of {duration} s is shorter than the {horizon} s projection horizon")]
    PathTooShort { duration: f64, horizon: f64 },
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// Constant-speed path starting at `start` with `heading` (radians from
/// world x). A nonzero `yaw_rate` (rad/s) bends it into a circular arc.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathSpec {
    pub start: [f64; 2],
    pub heading: f64,
    pub speed: f64,
    pub yaw_rate: f64,
}

impl Default for PathSpec {
    fn default() -> Self {
        Self { start: [0.0, 0.0], heading: 0.0, speed: 5.0, yaw_rate: 0.0 }
    }
}

impl PathSpec {
    /// Position on the ground plane and heading at time `t`.
    pub fn state(&self, t: f64) -> ([f64; 2], f64) {
        let h = self.heading + self.yaw_rate * t;
        let [x0, y0] = self.start;
        if self.yaw_rate.abs() < 1e-12 {
            let d = self.speed * t;
            return ([x0 + d * self.heading.cos(), y0 + d * self.heading.sin()], h);
        }
        let r = self.speed / self.yaw_rate;
        ([x0 + r * (h.sin() - self.heading.sin()), y0 - r * (h.cos() - self.heading.cos())], h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum Obstacle {
    /// Axis-aligned box; `size` is the full extent along each axis.
    Box { center: [f64; 3], size: [f64; 3], texture: Option<TextureSpec> },
    Sphere { center: [f64; 3], radius: f64, texture: Option<TextureSpec> },
}

impl Obstacle {
    pub fn texture(&self) -> Option<&TextureSpec> {
        match self {
            Obstacle::Box { texture, .. } | Obstacle::Sphere { texture, .. } => texture.as_ref(),
        }
    }

    /// Lowest z of the obstacle.
    pub fn bottom(&self) -> f64 {
        match self {
            Obstacle::Box { center, size, .. } => center[2] - 0.5 * size[2],
            Obstacle::Sphere { center, radius, .. } => center[2] - radius,
        }
    }

    /// Horizontal distance from `(x, y)` to the obstacle's footprint.
    pub fn footprint_distance(&self, x: f64, y: f64) -> f64 {
        match self {
            Obstacle::Box { center, size, .. } => {
                let dx = ((x - center[0]).abs() - 0.5 * size[0]).max(0.0);
                let dy = ((y - center[1]).abs() - 0.5 * size[1]).max(0.0);
                dx.hypot(dy)
            }
            Obstacle::Sphere { center, radius, .. } => ((x - center[0]).hypot(y - center[1]) - radius).max(0.0),
        }
    }
}

/// Sensor ray grid in camera-frame spherical angles (see
/// [`crate::geometry::to_spherical`]). Cells are sampled at their centers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CloudSpec {
    pub azimuth_min: f64,
    pub azimuth_max: f64,
    pub azimuth_steps: usize,
    pub elevation_min: f64,
    pub elevation_max: f64,
    pub rings: usize,
    /// meters
    pub range_max: f64,
    /// standard deviation of range noise, meters
    pub noise_sigma: f64,
}

impl Default for CloudSpec {
    /// A spinning sensor: full azimuth circle, 32 rings.
    fn default() -> Self {
        Self {
            azimuth_min: -std::f64::consts::PI,
            azimuth_max: std::f64::consts::PI,
            azimuth_steps: 1024,
            elevation_min: -0.6,
            elevation_max: 0.2,
            rings: 32,
            range_max: 80.0,
            noise_sigma: 0.0,
        }
    }
}

impl CloudSpec {
    /// A grid covering the camera's field of view with square cells of
    /// `resolution` radians and no range noise.
    pub fn dense_for(camera: &CameraModel, resolution: f64) -> Self {
        let half_w = ((camera.width as f64) / 2.0 / camera.fx).atan() + 2.0 * resolution;
        let half_h = ((camera.height as f64) / 2.0 / camera.fy).atan() + 2.0 * resolution;
        let az_steps = (2.0 * half_w / resolution).ceil() as usize;
        let rings = (2.0 * half_h / resolution).ceil() as usize;
        Self {
            azimuth_min: -0.5 * az_steps as f64 * resolution,
            azimuth_max: 0.5 * az_steps as f64 * resolution,
            azimuth_steps: az_steps,
            elevation_min: -0.5 * rings as f64 * resolution,
            elevation_max: 0.5 * rings as f64 * resolution,
            rings,
            range_max: 200.0,
            noise_sigma: 0.0,
        }
    }

    pub fn azimuth_step(&self) -> f64 {
        (self.azimuth_max - self.azimuth_min) / self.azimuth_steps as f64
    }

    pub fn elevation_step(&self) -> f64 {
        (self.elevation_max - self.elevation_min) / self.rings as f64
    }

    /// Camera-frame unit directions, ring-major.
    pub fn directions(&self) -> Vec<Vec3> {
        let (da, de) = (self.azimuth_step(), self.elevation_step());
        let mut out = Vec::with_capacity(self.rings * self.azimuth_steps);
        for r in 0..self.rings {
            let elevation = self.elevation_min + (r as f64 + 0.5) * de;
            for a in 0..self.azimuth_steps {
                let azimuth = self.azimuth_min + (a as f64 + 0.5) * da;
                out.push(to_cartesian(&SphericalPoint { azimuth, elevation, radius: 1.0 }));
            }
        }
        out
    }

    fn validate(&self) -> Result<(), String> {
        if self.azimuth_steps == 0 || self.rings == 0 {
            return Err("azimuth_steps and rings must be positive".into());
        }
        if !(self.azimuth_max > self.azimuth_min && self.elevation_max > self.elevation_min) {
            return Err("angular ranges must be non-empty".into());
        }
        if self.elevation_min <= -std::f64::consts::FRAC_PI_2 || self.elevation_max >= std::f64::consts::FRAC_PI_2 {
            return Err("elevations must lie strictly between -π/2 and π/2".into());
        }
        if !(self.range_max > 0.0) || !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err("range_max must be positive and noise_sigma non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSpec {
    pub version: u32,
    pub seed: u64,
    /// z of the ground plane, meters
    pub ground_height: f64,
    /// seconds of driving
    pub duration: f64,
    /// frame and pose rate, Hz
    pub rate: f64,
    /// fraction of image rows at the bottom covered by the vehicle hood
    pub vehicle_hood: f64,
    pub ground_texture: TextureSpec,
    /// used by obstacles without their own texture
    pub obstacle_texture: TextureSpec,
    pub path: PathSpec,
    pub obstacles: Vec<Obstacle>,
    pub cloud: CloudSpec,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            version: SCENE_VERSION,
            seed: 0,
            ground_height: 0.0,
            duration: 10.0,
            rate: 10.0,
            vehicle_hood: 0.1,
            ground_texture: TextureSpec::ground(),
            obstacle_texture: TextureSpec::vegetation(),
            path: PathSpec::default(),
            obstacles: Vec::new(),
            cloud: CloudSpec::default(),
        }
    }
}

/// Forward camera 1.6 m above the ground, pitched down 0.15 rad.
pub fn default_camera() -> CameraModel {
    camera_at(320, 200, 220.0, Vec3::new(0.5, 0.0, 1.6), 0.15)
}

/// Forward-looking camera of the given size mounted at `mount` (body frame).
pub fn camera_at(width: usize, height: usize, focal: f64, mount: Vec3, pitch: f64) -> CameraModel {
    let r = forward_camera_rotation(pitch);
    let extrinsic = RigidTransform::new(r, -(r * mount));
    CameraModel::new(focal, focal, (width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0, width, height, extrinsic)
        .expect("valid camera")
}

/// Front wheels 1.4 m ahead of the base link, 1.6 m track, 0.3 m tires.
pub fn default_wheels() -> WheelGeometry {
    WheelGeometry::symmetric(1.4, 0.8, 0.3).expect("valid wheels")
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl SceneSpec {
    pub fn parse(path: &Path, text: &str) -> Result<Self, SynthError> {
        let spec: SceneSpec = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| 1 + text[..s.start.min(text.len())].matches('\n').count()).unwrap_or(0);
            let message = e.message().to_string();
            let field = message.split('`').nth(1).unwrap_or("").to_string();
            SynthError::Spec { path: path.to_path_buf(), line, field, message }
        })?;
        spec.validate().map_err(|(field, message)| SynthError::Spec {
            path: path.to_path_buf(),
            line: locate_key(text, field.rsplit('.').next().unwrap_or(&field)),
            field,
            message,
        })?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, SynthError> {
        let text = std::fs::read_to_string(path).map_err(|e| FormatError::Io { path: path.to_path_buf(), source: e })?;
        Self::parse(path, &text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scene serializes")
    }

    /// Checks the spec; errors carry the offending field name.
    pub fn validate(&self) -> Result<(), (String, String)> {
        let err = |f: &str, m: String| Err((f.to_string(), m));
        if self.version != SCENE_VERSION {
            return err("version", format!("unsupported version {}", self.version));
        }
        if !self.ground_height.is_finite() {
            return err("ground_height", "must be finite".into());
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return err("duration", "must be positive".into());
        }
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return err("rate", "must be positive".into());
        }
        if !(0.0..0.5).contains(&self.vehicle_hood) {
            return err("vehicle_hood", "must lie in [0, 0.5)".into());
        }
        if !(self.path.speed >= 0.0 && self.path.speed.is_finite() && self.path.yaw_rate.is_finite()) {
            return err("path.speed", "speed must be non-negative and yaw_rate finite".into());
        }
        self.ground_texture.validate().map_err(|m| ("ground_texture".to_string(), m))?;
        self.obstacle_texture.validate().map_err(|m| ("obstacle_texture".to_string(), m))?;
        for (i, o) in self.obstacles.iter().enumerate() {
            let field = format!("obstacles[{i}]");
            let positive = match o {
                Obstacle::Box { size, .. } => size.iter().all(|s| *s > 0.0 && s.is_finite()),
                Obstacle::Sphere { radius, .. } => *radius > 0.0 && radius.is_finite(),
            };
            if !positive {
                return err(&format!("{field}.size"), "extent must be positive".into());
            }
            if o.bottom() < self.ground_height - 1e-9 {
                return err(&format!("{field}.center"), format!("obstacle {i} reaches below the ground plane"));
            }
            if let Some(t) = o.texture() {
                t.validate().map_err(|m| (format!("{field}.texture"), m))?;
            }
        }
        self.cloud.validate().map_err(|m| ("cloud".to_string(), m))?;
        Ok(())
    }

    pub fn frame_count(&self) -> usize {
        (self.duration * self.rate + 1e-9).floor() as usize + 1
    }

    pub fn frame_time(&self, index: usize) -> f64 {
        index as f64 / self.rate
    }

    pub fn pose_at(&self, t: f64) -> Pose {
        let ([x, y], h) = self.path.state(t);
        Pose::new(t, RigidTransform::new(yaw(h), Vec3::new(x, y, self.ground_height))).expect("finite pose")
    }

    pub fn poses(&self) -> Vec<Pose> {
        (0..self.frame_count()).map(|k| self.pose_at(self.frame_time(k))).collect()
    }

    fn ground_seed(&self) -> u64 {
        splitmix(self.seed ^ 0x6772_6f75_6e64)
    }

    fn obstacle_seed(&self, i: usize) -> u64 {
        splitmix(self.seed ^ splitmix(i as u64 + 1))
    }

    /// Color of the surface point `p`.
    pub fn shade(&self, surface: Surface, p: &Vec3) -> [f64; 3] {
        match surface {
            Surface::Ground => self.ground_texture.sample(self.ground_seed(), [p.x, p.y, 0.0]),
            Surface::Obstacle(i) => {
                let tex = self.obstacles[i].texture().unwrap_or(&self.obstacle_texture);
                tex.sample(self.obstacle_seed(i), [p.x, p.y, p.z])
            }
        }
    }

    pub fn hood_rows(&self, camera: &CameraModel) -> usize {
        (self.vehicle_hood * camera.height as f64).round() as usize
    }

    /// A random scene with obstacles kept `clearance` meters clear of the
    /// wheel tracks of `wheels`.
    pub fn random(seed: u64, wheels: &WheelGeometry, clearance: f64) -> SceneSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed));
        let yaw_rate = if rng.random_bool(0.7) { rng.random_range(0.05..0.2) * if rng.random_bool(0.5) { 1.0 } else { -1.0 } } else { 0.0 };
        let path = PathSpec { start: [0.0, 0.0], heading: rng.random_range(-0.5..0.5), speed: rng.random_range(3.0..6.0), yaw_rate };
        let mut scene = SceneSpec { seed, path, ..SceneSpec::default() };
        let track_half = [wheels.contact_line_body(crate::trajectory::Wheel::FrontLeft), wheels.contact_line_body(crate::trajectory::Wheel::FrontRight)]
            .iter()
            .flat_map(|(a, b)| [a.y.abs(), b.y.abs()])
            .fold(0.0, f64::max);
        let samples: Vec<[f64; 2]> = (0..=400).map(|k| scene.path.state(scene.duration * k as f64 / 400.0).0).collect();
        let count = rng.random_range(6..=12);
        let mut attempts = 0;
        while scene.obstacles.len() < count && attempts < 2000 {
            attempts += 1;
            let s = rng.random_range(0.15..1.0) * scene.duration;
            let ([px, py], h) = scene.path.state(s);
            let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let lateral = side * rng.random_range(track_half + clearance..track_half + clearance + 6.0);
            let (cx, cy) = (px - lateral * h.sin(), py + lateral * h.cos());
            let obstacle = if rng.random_bool(0.5) {
                let size = [rng.random_range(0.4..2.0), rng.random_range(0.4..2.0), rng.random_range(0.5..2.5)];
                Obstacle::Box { center: [cx, cy, scene.ground_height + 0.5 * size[2]], size, texture: None }
            } else {
                let radius = rng.random_range(0.3..1.2);
                let lift = rng.random_range(0.0..0.5);
                Obstacle::Sphere { center: [cx, cy, scene.ground_height + radius + lift], radius, texture: None }
            };
            let clear = samples.iter().all(|[x, y]| obstacle.footprint_distance(*x, *y) >= track_half + clearance);
            if clear {
                scene.obstacles.push(obstacle);
            }
        }
        scene
    }
}

fn locate_key(text: &str, key: &str) -> usize {
    let key = key.split('[').next().unwrap_or(key);
    text.lines().position(|l| l.trim_start().starts_with(key)).map_or(0, |i| i + 1)
}

/// Camera center in world coordinates.
pub fn camera_center(camera: &CameraModel, pose: &Pose) -> Vec3 {
    camera.world_from_camera(pose).translation
}

/// Per-pixel ray cast from pixel centers. Returns the image and its
/// semantic labels; sky and the vehicle hood are unlabeled.
pub fn render(scene: &SceneSpec, pose: &Pose, camera: &CameraModel) -> (ImageTensor, SemanticLabelMap) {
    let (w, h) = (camera.width, camera.height);
    let world_from_cam = camera.world_from_camera(pose);
    let origin = world_from_cam.translation;
    let hood_start = h - scene.hood_rows(camera);
    let rows: Vec<(Vec<f64>, Vec<SemanticClass>)> = (0..h)
        .into_par_iter()
        .map(|row| {
            let mut rgb = Vec::with_capacity(w * 3);
            let mut cls = Vec::with_capacity(w);
            for col in 0..w {
                let (color, class) = if row >= hood_start {
                    (HOOD, SemanticClass::Unlabeled)
                } else {
                    let dir = world_from_cam.rotate(&camera.ray_direction(&ImagePoint::new(col as f64, row as f64))).normalize();
                    match cast(scene, &origin, &dir, f64::INFINITY) {
                        Some(hit) => {
                            let p = origin + dir * hit.distance;
                            let class = match hit.surface {
                                Surface::Ground => SemanticClass::Ground,
                                Surface::Obstacle(_) => SemanticClass::Vegetation,
                            };
                            (scene.shade(hit.surface, &p), class)
                        }
                        None => (SKY, SemanticClass::Unlabeled),
                    }
                };
                rgb.extend(color);
                cls.push(class);
            }
            (rgb, cls)
        })
        .collect();
    let mut data = Vec::with_capacity(w * h * 3);
    let mut classes = Vec::with_capacity(w * h);
    for (rgb, cls) in rows {
        data.extend(rgb);
        classes.extend(cls);
    }
    (
        ImageTensor::new(w, h, 3, data).expect("colors in range"),
        SemanticLabelMap::new(w, h, classes).expect("sizes agree"),
    )
}

/// Pixels covered by the vehicle hood.
pub fn vehicle_mask(scene: &SceneSpec, camera: &CameraModel) -> BinaryMask {
    let start = camera.height - scene.hood_rows(camera);
    let data = (0..camera.height).flat_map(|row| std::iter::repeat_n(row >= start, camera.width)).collect();
    BinaryMask::from_vec(camera.width, camera.height, data).expect("sizes agree")
}

/// Range returns in the camera frame with ground/obstacle classes. The
/// sensor shares the camera's center and orientation. `noise_seed` feeds
/// the Gaussian range noise.
pub fn sample_cloud(scene: &SceneSpec, pose: &Pose, camera: &CameraModel, pattern: &CloudSpec, noise_seed: u64) -> PointCloud {
    let world_from_cam = camera.world_from_camera(pose);
    let origin = world_from_cam.translation;
    let hits: Vec<Option<(Vec3, CloudClass)>> = pattern
        .directions()
        .par_iter()
        .map(|d| {
            let hit = cast(scene, &origin, &world_from_cam.rotate(d), pattern.range_max)?;
            let class = match hit.surface {
                Surface::Ground => CloudClass::Ground,
                Surface::Obstacle(_) => CloudClass::Obstacle,
            };
            Some((*d, hit.distance, class))
        })
        .collect::<Vec<_>>()
        .into_iter()
        .scan(ChaCha8Rng::seed_from_u64(noise_seed), |rng, hit| {
            Some(hit.map(|(d, dist, class)| {
                let noise = if pattern.noise_sigma > 0.0 {
                    Normal::new(0.0, pattern.noise_sigma).expect("finite sigma").sample(rng)
                } else {
                    0.0
                };
                (d * (dist + noise), class)
            }))
        })
        .collect();
    let (points, classes): (Vec<Vec3>, Vec<CloudClass>) = hits.into_iter().flatten().filter(|(p, _)| p.norm() > 0.0).unzip();
    PointCloud::with_classes(points, classes)
}

/// A point is occluded iff the segment from `eye` to it meets an obstacle
/// or the ground strictly before reaching it (by more than 1e-9 m).
pub fn oracle_occlusion(scene: &SceneSpec, eye: &Vec3, points: &[Vec3]) -> Vec<bool> {
    points
        .iter()
        .map(|p| {
            let v = p - eye;
            let len = v.norm();
            if len == 0.0 {
                return false;
            }
            let d = v / len;
            cast(scene, eye, &d, f64::INFINITY).is_some_and(|hit| hit.distance < len - 1e-9)
        })
        .collect()
}

/// Flattened wheel points of a trajectory: for wheel `w`, sample `i` and
/// endpoint `e` (0 inner, 1 outer) the index is `2·(w·n + i) + e`.
pub fn wheel_points(traj: &ProjectedTrajectory) -> Vec<Vec3> {
    traj.samples().flat_map(|s| [s.inner.world, s.outer.world]).collect()
}

/// Algorithm 1 flags in the same flattened order as [`wheel_points`].
pub fn wheel_flags(traj: &ProjectedTrajectory) -> Vec<bool> {
    traj.samples().flat_map(|s| [s.inner.occluded, s.outer.occluded]).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticFrame {
    pub index: usize,
    pub timestamp: f64,
    pub pose: Pose,
    pub image: ImageTensor,
    pub labels: SemanticLabelMap,
    pub cloud: PointCloud,
    /// Exact occlusion of every wheel point of the frame's projection
    /// window, flattened as in [`wheel_points`]; `None` when the window
    /// runs past the end of the path.
    pub occlusion: Option<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub camera: CameraModel,
    pub poses: Vec<Pose>,
    pub vehicle_mask: BinaryMask,
    pub frames: Vec<SyntheticFrame>,
}

impl SyntheticDataset {
    pub fn labelable(&self) -> impl Iterator<Item = &SyntheticFrame> {
        self.frames.iter().filter(|f| f.occlusion.is_some())
    }
}

/// Renders every frame of the scene with its cloud and ground truth.
pub fn generate_dataset(
    scene: &SceneSpec,
    camera: &CameraModel,
    wheels: &WheelGeometry,
    window: &ProjectionWindow,
) -> Result<SyntheticDataset, SynthError> {
    if scene.duration + 1e-9 < window.horizon() {
        return Err(SynthError::PathTooShort { duration: scene.duration, horizon: window.horizon() });
    }
    let poses = scene.poses();
    let (first, last) = (poses[0].timestamp, poses[poses.len() - 1].timestamp);
    let frames = poses
        .iter()
        .enumerate()
        .map(|(index, pose)| {
            let (image, labels) = render(scene, pose, camera);
            let cloud = sample_cloud(scene, pose, camera, &scene.cloud, splitmix(scene.seed ^ (index as u64).wrapping_mul(0x2545_f491)));
            let occlusion = window.fits(pose.timestamp, first, last).then(|| {
                let traj = project_trajectory(pose.timestamp, &poses, wheels, camera, window).expect("window fits");
                oracle_occlusion(scene, &camera_center(camera, pose), &wheel_points(&traj))
            });
            SyntheticFrame { index, timestamp: pose.timestamp, pose: *pose, image, labels, cloud, occlusion }
        })
        .collect();
    Ok(SyntheticDataset { camera: *camera, vehicle_mask: vehicle_mask(scene, camera), poses, frames })
}

pub fn label_image(labels: &SemanticLabelMap, values: &LabelValues) -> GrayImage {
    GrayImage { width: labels.width, height: labels.height, data: labels.classes.iter().map(|c| values.value_of(*c)).collect() }
}

/// Writes the dataset under `dir` and returns its manifest (already saved
/// as `dir/manifest.txt`).
pub fn write_dataset(dir: &Path, data: &SyntheticDataset, values: &LabelValues) -> Result<DatasetManifest, SynthError> {
    let mut manifest = DatasetManifest::new(dir);
    write_camera(&dir.join("camera.toml"), &data.camera)?;
    write_poses(&dir.join("poses.txt"), &data.poses)?;
    write_mask(&dir.join("vehicle_mask.pgm"), &data.vehicle_mask)?;
    manifest.camera = Some("camera.toml".into());
    manifest.poses = Some("poses.txt".into());
    manifest.vehicle_mask = Some("vehicle_mask.pgm".into());
    let mut gt = String::from("# frame sample_index occluded\n");
    for f in &data.frames {
        let id = format!("{:04}", f.index);
        let mut record = FrameRecord::new(&id, f.timestamp, format!("images/{id}.ppm"), format!("clouds/{id}.ply"));
        record.labels = Some(format!("labels/{id}.pgm").into());
        write_image(&dir.join(&record.image), &f.image)?;
        write_ply(&dir.join(&record.cloud), &f.cloud)?;
        write_gray(&dir.join(record.labels.as_ref().expect("set above")), &label_image(&f.labels, values))?;
        if let Some(flags) = &f.occlusion {
            for (i, o) in flags.iter().enumerate() {
                let _ = writeln!(gt, "{id} {i} {}", u8::from(*o));
            }
        }
        manifest.frames.push(record);
    }
    crate::io::write_bytes(&dir.join("occlusion_gt.txt"), gt.as_bytes())?;
    crate::dataset::save_manifest(&dir.join("manifest.txt"), &manifest)?;
    Ok(manifest)
}
