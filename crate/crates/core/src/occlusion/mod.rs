//! Occlusion filtering of projected wheel points against a point cloud.
//!
//! Each wheel point is matched to the cloud point closest in
//! `(azimuth, elevation)`; it is occluded when that neighbor's relative
//! radial offset `(o_r - p_r) / p_r` is below `rho`.

mod index;

use std::collections::BTreeSet;

pub use index::{angular_distance_sq, wrapped_azimuth_delta, AngularTree, Neighbor};

use crate::geometry::{to_spherical, SphericalPoint, Vec3};
use crate::trajectory::{ProjectedPoint, ProjectedTrajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CloudClass {
    Surface,
    Obstacle,
    Ground,
}

impl CloudClass {
    pub fn code(self) -> u8 {
        match self {
            CloudClass::Surface => 0,
            CloudClass::Obstacle => 1,
            CloudClass::Ground => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(CloudClass::Surface),
            1 => Some(CloudClass::Obstacle),
            2 => Some(CloudClass::Ground),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CloudClass::Surface => "surface",
            CloudClass::Obstacle => "obstacle",
            CloudClass::Ground => "ground",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "surface" => Some(CloudClass::Surface),
            "obstacle" => Some(CloudClass::Obstacle),
            "ground" => Some(CloudClass::Ground),
            _ => None,
        }
    }
}

/// Points in the camera frame at the image timestamp, optionally classified.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub classes: Option<Vec<CloudClass>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Self {
        Self { points, classes: None }
    }

    pub fn with_classes(points: Vec<Vec3>, classes: Vec<CloudClass>) -> Self {
        assert_eq!(points.len(), classes.len(), "one class per point");
        Self { points, classes: Some(classes) }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn class(&self, i: usize) -> Option<CloudClass> {
        self.classes.as_ref().map(|c| c[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OcclusionParams {
    pub rho: f64,
    /// Points of other classes are ignored. Unclassified clouds use every
    /// point.
    pub classes: BTreeSet<CloudClass>,
    /// Neighbors farther than this (radians) never occlude.
    pub max_angular_distance: Option<f64>,
}

impl Default for OcclusionParams {
    fn default() -> Self {
        Self {
            rho: 0.35,
            classes: [CloudClass::Obstacle, CloudClass::Surface].into_iter().collect(),
            max_angular_distance: None,
        }
    }
}

impl OcclusionParams {
    pub fn with_rho(rho: f64) -> Self {
        Self { rho, ..Self::default() }
    }
}

/// Spherical coordinates of the selected cloud points behind a 2-d tree.
#[derive(Debug, Clone)]
pub struct AngularIndex {
    spherical: Vec<SphericalPoint>,
    tree: AngularTree,
}

impl AngularIndex {
    pub fn len(&self) -> usize {
        self.spherical.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spherical.is_empty()
    }

    /// The selected points in spherical form, in cloud order.
    pub fn points(&self) -> &[SphericalPoint] {
        &self.spherical
    }

    /// Nearest point in angle space and its squared angular distance.
    pub fn nearest(&self, azimuth: f64, elevation: f64) -> Option<(&SphericalPoint, f64)> {
        self.tree.nearest((azimuth, elevation)).map(|n| (&self.spherical[n.index], n.distance_sq))
    }
}

pub fn build_index(cloud: &PointCloud, params: &OcclusionParams) -> AngularIndex {
    let spherical: Vec<SphericalPoint> = cloud
        .points
        .iter()
        .enumerate()
        .filter(|(i, _)| cloud.class(*i).is_none_or(|c| params.classes.contains(&c)))
        .filter_map(|(_, p)| to_spherical(p).ok())
        .collect();
    let angles: Vec<(f64, f64)> = spherical.iter().map(|s| (s.azimuth, s.elevation)).collect();
    AngularIndex { tree: AngularTree::build(&angles), spherical }
}

/// The occlusion decision for a single camera-frame point.
pub fn is_occluded(point_camera: &Vec3, index: &AngularIndex, params: &OcclusionParams) -> bool {
    let Ok(p) = to_spherical(point_camera) else {
        return false;
    };
    let Some((o, d2)) = index.nearest(p.azimuth, p.elevation) else {
        return false;
    };
    if let Some(max) = params.max_angular_distance {
        if d2 > max * max {
            return false;
        }
    }
    (o.radius - p.radius) / p.radius < params.rho
}

/// Sets occlusion flags on every in-frustum sample. Samples outside the
/// frustum are left untouched.
pub fn filter_occlusions(traj: &ProjectedTrajectory, index: &AngularIndex, params: &OcclusionParams) -> ProjectedTrajectory {
    let mut out = traj.clone();
    let mark = |p: &mut ProjectedPoint| {
        if is_occluded(&p.camera, index, params) {
            p.occluded = true;
        }
    };
    for sample in out.samples_mut().filter(|s| s.in_frustum) {
        mark(&mut sample.inner);
        mark(&mut sample.outer);
    }
    out
}
