//! Front-wheel contact lines and their projection over a future time window
//! into the image taken at the window's start.

use thiserror::Error;

use crate::geometry::{interpolate_pose, CameraModel, ImagePoint, Pose, RigidTransform, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrajectoryError {
    #[error("pose log [{first}, {last}] does not cover the window [{start}, {end}]")]
    InsufficientPoses { start: f64, end: f64, first: f64, last: f64 },
    #[error("invalid wheel geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid projection window: {0}")]
    InvalidWindow(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Wheel {
    FrontLeft,
    FrontRight,
}

impl Wheel {
    pub const ALL: [Wheel; 2] = [Wheel::FrontLeft, Wheel::FrontRight];
}

/// Static base-link → wheel-contact-center transforms of the two front
/// wheels and the tire width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WheelGeometry {
    front_left: RigidTransform,
    front_right: RigidTransform,
    wheel_width: f64,
}

impl WheelGeometry {
    pub fn new(front_left: RigidTransform, front_right: RigidTransform, wheel_width: f64) -> Result<Self, TrajectoryError> {
        if !(wheel_width > 0.0 && wheel_width.is_finite()) {
            return Err(TrajectoryError::InvalidGeometry(format!("wheel width must be positive, got {wheel_width}")));
        }
        Ok(Self { front_left, front_right, wheel_width })
    }

    /// Symmetric layout: contact centers at `(x, ±half_track, 0)`.
    pub fn symmetric(x: f64, half_track: f64, wheel_width: f64) -> Result<Self, TrajectoryError> {
        Self::new(
            RigidTransform::from_translation(x, half_track, 0.0),
            RigidTransform::from_translation(x, -half_track, 0.0),
            wheel_width,
        )
    }

    pub fn wheel_width(&self) -> f64 {
        self.wheel_width
    }

    pub fn contact_center(&self, wheel: Wheel) -> &RigidTransform {
        match wheel {
            Wheel::FrontLeft => &self.front_left,
            Wheel::FrontRight => &self.front_right,
        }
    }

    /// Contact line endpoints `(inner, outer)` in the base-link frame. The
    /// line runs along the wheel's lateral axis, perpendicular to rolling;
    /// "outer" is the endpoint on the same side as the wheel.
    pub fn contact_line_body(&self, wheel: Wheel) -> (Vec3, Vec3) {
        let center = self.contact_center(wheel);
        let lateral = center.rotate(&Vec3::y());
        let side = if center.translation.y >= 0.0 { 1.0 } else { -1.0 };
        let half = lateral * (0.5 * self.wheel_width * side);
        (center.translation - half, center.translation + half)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WheelContactSample {
    pub timestamp: f64,
    pub wheel: Wheel,
    pub inner: Vec3,
    pub outer: Vec3,
}

/// Both front-wheel contact lines in the world frame at `pose`.
pub fn wheel_contacts(pose: &Pose, geom: &WheelGeometry) -> [WheelContactSample; 2] {
    Wheel::ALL.map(|wheel| {
        let (inner, outer) = geom.contact_line_body(wheel);
        let world = pose.world_from_body();
        WheelContactSample { timestamp: pose.timestamp, wheel, inner: world.apply(&inner), outer: world.apply(&outer) }
    })
}

/// Sampling rate and horizon of the projected window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionWindow {
    rate: f64,
    horizon: f64,
}

impl Default for ProjectionWindow {
    fn default() -> Self {
        Self { rate: 10.0, horizon: 4.0 }
    }
}

impl ProjectionWindow {
    pub fn new(rate: f64, horizon: f64) -> Result<Self, TrajectoryError> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(TrajectoryError::InvalidWindow(format!("rate must be positive, got {rate}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(TrajectoryError::InvalidWindow(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self { rate, horizon })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `floor(horizon · rate) + 1`
    pub fn sample_count(&self) -> usize {
        (self.horizon * self.rate + 1e-9).floor() as usize + 1
    }

    pub fn sample_time(&self, start: f64, index: usize) -> f64 {
        start + index as f64 / self.rate
    }

    pub fn end_time(&self, start: f64) -> f64 {
        self.sample_time(start, self.sample_count() - 1)
    }

    /// True when `[start, start + horizon]` lies inside `[first, last]`.
    pub fn fits(&self, start: f64, first: f64, last: f64) -> bool {
        start >= first && self.end_time(start) <= last + 1e-9
    }
}

/// One endpoint of a wheel contact line, in world and camera frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedPoint {
    pub world: Vec3,
    pub camera: Vec3,
    /// `None` when the point is behind the camera.
    pub image: Option<ImagePoint>,
    pub occluded: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub contact: WheelContactSample,
    pub inner: ProjectedPoint,
    pub outer: ProjectedPoint,
    /// Both endpoints are in front of the camera and inside the image.
    pub in_frustum: bool,
}

impl TrajectorySample {
    /// Both endpoints project (in front of the camera), whether or not they
    /// fall inside the image.
    pub fn in_front(&self) -> bool {
        self.inner.image.is_some() && self.outer.image.is_some()
    }

    pub fn occluded(&self) -> bool {
        self.inner.occluded || self.outer.occluded
    }

    pub fn points(&self) -> [&ProjectedPoint; 2] {
        [&self.inner, &self.outer]
    }
}

/// Per-wheel sample sequences for one camera frame. Samples are ordered by
/// timestamp, spaced `1 / rate` apart.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedTrajectory {
    pub frame_timestamp: f64,
    pub left: Vec<TrajectorySample>,
    pub right: Vec<TrajectorySample>,
}

impl ProjectedTrajectory {
    pub fn wheel(&self, wheel: Wheel) -> &[TrajectorySample] {
        match wheel {
            Wheel::FrontLeft => &self.left,
            Wheel::FrontRight => &self.right,
        }
    }

    pub fn wheel_mut(&mut self, wheel: Wheel) -> &mut Vec<TrajectorySample> {
        match wheel {
            Wheel::FrontLeft => &mut self.left,
            Wheel::FrontRight => &mut self.right,
        }
    }

    pub fn samples(&self) -> impl Iterator<Item = &TrajectorySample> {
        self.left.iter().chain(self.right.iter())
    }

    pub fn samples_mut(&mut self) -> impl Iterator<Item = &mut TrajectorySample> {
        self.left.iter_mut().chain(self.right.iter_mut())
    }

    /// Distance travelled by the midpoint between the two front contact
    /// centers across the window.
    pub fn arc_length(&self) -> f64 {
        let centers: Vec<Vec3> = self
            .left
            .iter()
            .zip(&self.right)
            .map(|(l, r)| (l.contact.inner + l.contact.outer + r.contact.inner + r.contact.outer) / 4.0)
            .collect();
        centers.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }
}

/// Projects the front-wheel contact lines for `t, t + 1/rate, …, t + τ` into
/// the camera frame at `t`. Occlusion flags are left `false`.
pub fn project_trajectory(
    frame_time: f64,
    poses: &[Pose],
    geom: &WheelGeometry,
    camera: &CameraModel,
    window: &ProjectionWindow,
) -> Result<ProjectedTrajectory, TrajectoryError> {
    let (first, last) = match (poses.first(), poses.last()) {
        (Some(a), Some(b)) => (a.timestamp, b.timestamp),
        _ => (f64::NAN, f64::NAN),
    };
    let insufficient = || TrajectoryError::InsufficientPoses {
        start: frame_time,
        end: window.end_time(frame_time),
        first,
        last,
    };
    if !window.fits(frame_time, first, last) {
        return Err(insufficient());
    }
    let frame_pose = interpolate_pose(poses, frame_time).map_err(|_| insufficient())?;
    let camera_from_world = camera.camera_from_world(&frame_pose);

    let project_point = |world: Vec3| {
        let cam = camera_from_world.apply(&world);
        ProjectedPoint { world, camera: cam, image: camera.project(&cam).ok(), occluded: false }
    };

    let n = window.sample_count();
    let mut out = ProjectedTrajectory {
        frame_timestamp: frame_time,
        left: Vec::with_capacity(n),
        right: Vec::with_capacity(n),
    };
    for k in 0..n {
        let t = window.sample_time(frame_time, k).min(last);
        let pose = interpolate_pose(poses, t).map_err(|_| insufficient())?;
        for contact in wheel_contacts(&pose, geom) {
            let inner = project_point(contact.inner);
            let outer = project_point(contact.outer);
            let in_frustum = [&inner, &outer]
                .iter()
                .all(|p| p.image.map(|i| camera.contains(&i)).unwrap_or(false));
            let contact = WheelContactSample { timestamp: window.sample_time(frame_time, k), ..contact };
            out.wheel_mut(contact.wheel).push(TrajectorySample { contact, inner, outer, in_frustum });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{forward_camera_rotation, yaw};
    use std::f64::consts::PI;

    fn geometry() -> WheelGeometry {
        WheelGeometry::symmetric(1.4, 0.8, 0.3).unwrap()
    }

    fn camera() -> CameraModel {
        let rot = forward_camera_rotation(0.15);
        let mount = Vec3::new(0.5, 0.0, 1.6);
        let extrinsic = RigidTransform::new(rot, -(rot * mount));
        CameraModel::new(220.0, 220.0, 159.5, 98.5, 320, 198, extrinsic).unwrap()
    }

    fn straight_log(speed: f64, duration: f64, rate: f64) -> Vec<Pose> {
        let n = (duration * rate).round() as usize;
        (0..=n)
            .map(|i| {
                let t = i as f64 / rate;
                Pose::new(t, RigidTransform::from_translation(speed * t, 0.0, 0.0)).unwrap()
            })
            .collect()
    }

    #[test]
    fn contacts_at_identity_equal_offsets() {
        let g = geometry();
        let pose = Pose::new(0.0, RigidTransform::identity()).unwrap();
        let [l, r] = wheel_contacts(&pose, &g);
        let close = |a: Vec3, b: Vec3| assert!((a - b).norm() < 1e-12, "{a:?} vs {b:?}");
        close(l.inner, Vec3::new(1.4, 0.65, 0.0));
        close(l.outer, Vec3::new(1.4, 0.95, 0.0));
        close(r.inner, Vec3::new(1.4, -0.65, 0.0));
        close(r.outer, Vec3::new(1.4, -0.95, 0.0));
    }

    #[test]
    fn contacts_follow_translation_and_yaw() {
        let g = geometry();
        let base = wheel_contacts(&Pose::new(0.0, RigidTransform::identity()).unwrap(), &g);
        let moved = wheel_contacts(&Pose::new(0.0, RigidTransform::from_translation(5.0, 0.0, 0.0)).unwrap(), &g);
        for (a, b) in base.iter().zip(&moved) {
            assert_eq!(b.inner - a.inner, Vec3::new(5.0, 0.0, 0.0));
            assert_eq!(b.outer - a.outer, Vec3::new(5.0, 0.0, 0.0));
        }
        let turned = wheel_contacts(&Pose::new(0.0, RigidTransform::new(yaw(PI), Vec3::zeros())).unwrap(), &g);
        for (a, b) in base.iter().zip(&turned) {
            let mirror = |p: Vec3| Vec3::new(-p.x, -p.y, p.z);
            assert!((b.inner - mirror(a.inner)).norm() < 1e-9);
            assert!((b.outer - mirror(a.outer)).norm() < 1e-9);
        }
    }

    #[test]
    fn window_counts() {
        let w = ProjectionWindow::default();
        assert_eq!(w.sample_count(), 41);
        assert_eq!(ProjectionWindow::new(3.0, 1.0).unwrap().sample_count(), 4);
        assert_eq!(ProjectionWindow::new(10.0, 0.25).unwrap().sample_count(), 3);
        assert!(ProjectionWindow::new(0.0, 1.0).is_err());
        assert!(ProjectionWindow::new(1.0, -1.0).is_err());
    }

    #[test]
    fn stationary_vehicle_projects_to_one_point_per_wheel() {
        let poses: Vec<Pose> = (0..=60).map(|i| Pose::new(i as f64 * 0.1, RigidTransform::identity()).unwrap()).collect();
        let traj = project_trajectory(0.0, &poses, &geometry(), &camera(), &ProjectionWindow::default()).unwrap();
        for wheel in Wheel::ALL {
            let s = traj.wheel(wheel);
            assert_eq!(s.len(), 41);
            for x in s {
                assert_eq!(x.inner.image, s[0].inner.image);
                assert_eq!(x.outer.image, s[0].outer.image);
            }
        }
    }

    #[test]
    fn straight_drive_moves_up_the_image() {
        let poses = straight_log(8.33, 10.0, 10.0);
        let traj = project_trajectory(1.0, &poses, &geometry(), &camera(), &ProjectionWindow::default()).unwrap();
        for wheel in Wheel::ALL {
            let v: Vec<f64> = traj.wheel(wheel).iter().map(|s| s.inner.image.unwrap().v).collect();
            assert!(v.windows(2).all(|w| w[1] < w[0]), "{v:?}");
        }
        // 8.33 m/s for 4 s
        assert!((traj.arc_length() - 33.32).abs() < 1e-9);
    }

    #[test]
    fn window_must_be_covered() {
        let poses = straight_log(1.0, 5.0, 10.0);
        let err = project_trajectory(1.5, &poses, &geometry(), &camera(), &ProjectionWindow::default());
        assert!(matches!(err, Err(TrajectoryError::InsufficientPoses { .. })));
        assert!(project_trajectory(1.0, &poses, &geometry(), &camera(), &ProjectionWindow::default()).is_ok());
    }

    #[test]
    fn samples_are_evenly_spaced_and_increasing() {
        let poses = straight_log(3.0, 10.0, 10.0);
        let traj = project_trajectory(0.3, &poses, &geometry(), &camera(), &ProjectionWindow::default()).unwrap();
        for wheel in Wheel::ALL {
            for w in traj.wheel(wheel).windows(2) {
                let dt = w[1].contact.timestamp - w[0].contact.timestamp;
                assert!((dt - 0.1).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn points_behind_camera_are_outside_frustum() {
        // camera looking backwards
        let rot = forward_camera_rotation(0.0) * yaw(PI);
        let cam = CameraModel::new(200.0, 200.0, 100.0, 100.0, 200, 200, RigidTransform::new(rot, Vec3::zeros())).unwrap();
        let poses = straight_log(5.0, 6.0, 10.0);
        let traj = project_trajectory(0.0, &poses, &geometry(), &cam, &ProjectionWindow::default()).unwrap();
        assert!(traj.samples().all(|s| !s.in_frustum && !s.in_front()));
    }
}
