//! Rigid transforms, timestamped poses, pinhole projection and the spherical
//! coordinates used by occlusion filtering.
//!
//! Frame conventions:
//!
//! - body (base link): x forward, y left, z up
//! - camera: x right, y down, z along the optical axis
//! - image: pixel `(col, row)` has its center at `(u, v) = (col, row)`

use nalgebra::{Quaternion, Unit, UnitQuaternion, Vector3};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;

const UNIT_NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point is behind the camera (depth {depth})")]
    BehindCamera { depth: f64 },
    #[error("spherical coordinates are undefined at the origin")]
    DegeneratePoint,
    #[error("time {t} is outside the pose log [{first}, {last}]")]
    OutOfRange { t: f64, first: f64, last: f64 },
    #[error("quaternion norm {norm} is not 1")]
    NonUnitQuaternion { norm: f64 },
    #[error("timestamp {0} is not finite")]
    NonFiniteTimestamp(f64),
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
}

/// Quaternion from `(qx, qy, qz, qw)`, rejecting anything that is not unit
/// norm within 1e-9.
pub fn unit_quaternion(qx: f64, qy: f64, qz: f64, qw: f64) -> Result<UnitQuaternion<f64>, GeometryError> {
    let q = Quaternion::new(qw, qx, qy, qz);
    let norm = q.norm();
    if !norm.is_finite() || (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
        return Err(GeometryError::NonUnitQuaternion { norm });
    }
    Ok(Unit::new_unchecked(q))
}

/// `(qx, qy, qz, qw)` of a rotation.
pub fn quaternion_xyzw(q: &UnitQuaternion<f64>) -> [f64; 4] {
    [q.i, q.j, q.k, q.w]
}

/// A rigid body transform `p ↦ R·p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vec3,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn new(rotation: UnitQuaternion<f64>, translation: Vec3) -> Self {
        Self { rotation, translation }
    }

    pub fn identity() -> Self {
        Self::new(UnitQuaternion::identity(), Vec3::zeros())
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Self::new(UnitQuaternion::identity(), Vec3::new(x, y, z))
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }

    pub fn inverse(&self) -> Self {
        let rotation = self.rotation.inverse();
        Self::new(rotation, -(rotation * self.translation))
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn then_after(&self, other: &RigidTransform) -> Self {
        compose(self, other)
    }
}

/// `a ∘ b`, the transform that applies `b` and then `a`.
pub fn compose(a: &RigidTransform, b: &RigidTransform) -> RigidTransform {
    RigidTransform::new(a.rotation * b.rotation, a.rotation * b.translation + a.translation)
}

/// Vehicle pose in the world frame at a timestamp (world ← body).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub timestamp: f64,
    pub transform: RigidTransform,
}

impl Pose {
    pub fn new(timestamp: f64, transform: RigidTransform) -> Result<Self, GeometryError> {
        if !timestamp.is_finite() {
            return Err(GeometryError::NonFiniteTimestamp(timestamp));
        }
        let norm = transform.rotation.quaternion().norm();
        if (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
            return Err(GeometryError::NonUnitQuaternion { norm });
        }
        Ok(Self { timestamp, transform })
    }

    pub fn translation(&self) -> Vec3 {
        self.transform.translation
    }

    pub fn rotation(&self) -> UnitQuaternion<f64> {
        self.transform.rotation
    }

    /// body → world
    pub fn world_from_body(&self) -> RigidTransform {
        self.transform
    }

    /// world → body
    pub fn body_from_world(&self) -> RigidTransform {
        self.transform.inverse()
    }
}

/// Pose at time `t`: translation is interpolated linearly and rotation by
/// slerp between the two bracketing samples. `poses` must be sorted by time.
pub fn interpolate_pose(poses: &[Pose], t: f64) -> Result<Pose, GeometryError> {
    let (first, last) = match (poses.first(), poses.last()) {
        (Some(f), Some(l)) => (f.timestamp, l.timestamp),
        _ => return Err(GeometryError::OutOfRange { t, first: f64::NAN, last: f64::NAN }),
    };
    if !(t >= first && t <= last) {
        return Err(GeometryError::OutOfRange { t, first, last });
    }
    // first index with timestamp >= t
    let hi = poses.partition_point(|p| p.timestamp < t);
    let b = &poses[hi];
    if b.timestamp == t || hi == 0 {
        return Ok(Pose { timestamp: t, transform: b.transform });
    }
    let a = &poses[hi - 1];
    let span = b.timestamp - a.timestamp;
    let s = (t - a.timestamp) / span;
    let ta = a.translation();
    let tb = b.translation();
    let translation = ta + (tb - ta) * s;
    let rotation = a
        .rotation()
        .try_slerp(&b.rotation(), s, 1e-12)
        .unwrap_or_else(|| a.rotation().nlerp(&b.rotation(), s));
    Ok(Pose { timestamp: t, transform: RigidTransform::new(rotation, translation) })
}

/// Real-valued pixel coordinates; may lie outside the image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImagePoint {
    pub u: f64,
    pub v: f64,
}

impl ImagePoint {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }
}

/// Pinhole intrinsics plus the body → camera extrinsic. No distortion model;
/// images are assumed rectified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    /// camera ← body
    pub extrinsic: RigidTransform,
}

impl CameraModel {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: usize,
        height: usize,
        extrinsic: RigidTransform,
    ) -> Result<Self, GeometryError> {
        if !(fx > 0.0 && fx.is_finite()) || !(fy > 0.0 && fy.is_finite()) {
            return Err(GeometryError::InvalidCamera(format!("focal lengths must be positive, got fx={fx} fy={fy}")));
        }
        if !(cx.is_finite() && cy.is_finite()) {
            return Err(GeometryError::InvalidCamera("principal point must be finite".into()));
        }
        if width == 0 || height == 0 {
            return Err(GeometryError::InvalidCamera(format!("image size must be positive, got {width}x{height}")));
        }
        Ok(Self { fx, fy, cx, cy, width, height, extrinsic })
    }

    /// camera ← world for a vehicle at `pose`.
    pub fn camera_from_world(&self, pose: &Pose) -> RigidTransform {
        compose(&self.extrinsic, &pose.body_from_world())
    }

    /// world ← camera for a vehicle at `pose`.
    pub fn world_from_camera(&self, pose: &Pose) -> RigidTransform {
        self.camera_from_world(pose).inverse()
    }

    /// True when `p` lies within the pixel area `[-0.5, W-0.5) × [-0.5, H-0.5)`.
    pub fn contains(&self, p: &ImagePoint) -> bool {
        p.u >= -0.5 && p.v >= -0.5 && p.u < self.width as f64 - 0.5 && p.v < self.height as f64 - 0.5
    }

    /// Unit-depth ray direction (camera frame) through image point `p`.
    pub fn ray_direction(&self, p: &ImagePoint) -> Vec3 {
        Vec3::new((p.u - self.cx) / self.fx, (p.v - self.cy) / self.fy, 1.0)
    }

    pub fn project(&self, point_camera: &Vec3) -> Result<ImagePoint, GeometryError> {
        project(self, point_camera)
    }

    /// World point → pixel: world→body through the pose inverse, body→camera
    /// through the extrinsic, then intrinsics and homogeneous division.
    pub fn project_world(&self, pose: &Pose, point_world: &Vec3) -> Result<ImagePoint, GeometryError> {
        let body = pose.body_from_world().apply(point_world);
        let camera = self.extrinsic.apply(&body);
        project(self, &camera)
    }
}

/// Pinhole projection of a camera-frame point.
pub fn project(camera: &CameraModel, p: &Vec3) -> Result<ImagePoint, GeometryError> {
    if !(p.z > 0.0) {
        return Err(GeometryError::BehindCamera { depth: p.z });
    }
    Ok(ImagePoint::new(camera.fx * p.x / p.z + camera.cx, camera.fy * p.y / p.z + camera.cy))
}

/// Camera-frame spherical coordinates: `azimuth = atan2(x, z)`,
/// `elevation = atan2(-y, sqrt(x² + z²))` (up positive), `radius = |p|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalPoint {
    pub azimuth: f64,
    pub elevation: f64,
    pub radius: f64,
}

impl SphericalPoint {
    pub fn to_cartesian(&self) -> Vec3 {
        to_cartesian(self)
    }
}

pub fn to_spherical(p: &Vec3) -> Result<SphericalPoint, GeometryError> {
    let radius = p.norm();
    if !(radius > 0.0) {
        return Err(GeometryError::DegeneratePoint);
    }
    let mut azimuth = p.x.atan2(p.z);
    // keep the half-open range (-π, π]
    if azimuth == -std::f64::consts::PI {
        azimuth = std::f64::consts::PI;
    }
    let elevation = (-p.y).atan2(p.x.hypot(p.z));
    Ok(SphericalPoint { azimuth, elevation, radius })
}

pub fn to_cartesian(s: &SphericalPoint) -> Vec3 {
    let (sin_el, cos_el) = s.elevation.sin_cos();
    let (sin_az, cos_az) = s.azimuth.sin_cos();
    Vec3::new(s.radius * cos_el * sin_az, -s.radius * sin_el, s.radius * cos_el * cos_az)
}

/// Rotation about the world/body z axis.
pub fn yaw(angle: f64) -> UnitQuaternion<f64> {
    UnitQuaternion::from_axis_angle(&Vector3::z_axis(), angle)
}

/// Yaw angle of a rotation, assuming it is (close to) a pure z rotation.
pub fn yaw_of(q: &UnitQuaternion<f64>) -> f64 {
    let forward = q * Vec3::x();
    forward.y.atan2(forward.x)
}

/// camera ← body rotation for a forward-looking camera pitched down by
/// `pitch` radians.
pub fn forward_camera_rotation(pitch: f64) -> UnitQuaternion<f64> {
    // body x (forward) → camera z, body y (left) → camera -x, body z (up) → camera -y
    let axes = nalgebra::Matrix3::new(0.0, -1.0, 0.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0);
    let level = UnitQuaternion::from_matrix(&axes);
    // pitching the nose down is a positive rotation about the camera x axis
    let tilt = UnitQuaternion::from_axis_angle(&Vector3::x_axis(), pitch);
    tilt * level
}
