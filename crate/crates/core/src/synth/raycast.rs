use crate::geometry::Vec3;

use super::{Obstacle, SceneSpec};

/// What a ray hit first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Surface {
    Ground,
    Obstacle(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    /// distance along the unit direction
    pub distance: f64,
    pub surface: Surface,
}

/// Smallest `t > 0` at which `origin + t·dir` meets the box, if any.
pub fn intersect_box(origin: &Vec3, dir: &Vec3, min: &Vec3, max: &Vec3) -> Option<f64> {
    let mut t0 = f64::NEG_INFINITY;
    let mut t1 = f64::INFINITY;
    for k in 0..3 {
        if dir[k] == 0.0 {
            if origin[k] < min[k] || origin[k] > max[k] {
                return None;
            }
            continue;
        }
        let inv = 1.0 / dir[k];
        let (a, b) = ((min[k] - origin[k]) * inv, (max[k] - origin[k]) * inv);
        t0 = t0.max(a.min(b));
        t1 = t1.min(a.max(b));
    }
    if t1 < t0 || t1 <= 0.0 {
        return None;
    }
    Some(if t0 > 0.0 { t0 } else { t1 })
}

pub fn intersect_sphere(origin: &Vec3, dir: &Vec3, center: &Vec3, radius: f64) -> Option<f64> {
    let oc = origin - center;
    let b = oc.dot(dir);
    let c = oc.norm_squared() - radius * radius;
    let disc = b * b - c * dir.norm_squared();
    if disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    let a = dir.norm_squared();
    [(-b - s) / a, (-b + s) / a].into_iter().find(|&t| t > 0.0)
}

pub fn intersect_ground(origin: &Vec3, dir: &Vec3, height: f64) -> Option<f64> {
    if dir.z == 0.0 {
        return None;
    }
    let t = (height - origin.z) / dir.z;
    (t > 0.0).then_some(t)
}

pub fn intersect_obstacle(origin: &Vec3, dir: &Vec3, obstacle: &Obstacle) -> Option<f64> {
    match obstacle {
        Obstacle::Box { center, size, .. } => {
            let c = Vec3::from(*center);
            let h = Vec3::from(*size) * 0.5;
            intersect_box(origin, dir, &(c - h), &(c + h))
        }
        Obstacle::Sphere { center, radius, .. } => intersect_sphere(origin, dir, &Vec3::from(*center), *radius),
    }
}

/// First surface hit by the ray within `max_distance`. Ties go to obstacles
/// in declaration order, then the ground.
pub fn cast(scene: &SceneSpec, origin: &Vec3, dir: &Vec3, max_distance: f64) -> Option<Hit> {
    let mut best: Option<Hit> = None;
    for (i, o) in scene.obstacles.iter().enumerate() {
        if let Some(t) = intersect_obstacle(origin, dir, o) {
            if t <= max_distance && best.is_none_or(|b| t < b.distance) {
                best = Some(Hit { distance: t, surface: Surface::Obstacle(i) });
            }
        }
    }
    if let Some(t) = intersect_ground(origin, dir, scene.ground_height) {
        if t <= max_distance && best.is_none_or(|b| t < b.distance) {
            best = Some(Hit { distance: t, surface: Surface::Ground });
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_faces() {
        let o = Vec3::new(-5.0, 0.2, 0.3);
        let t = intersect_box(&o, &Vec3::x(), &Vec3::new(-1.0, -1.0, -1.0), &Vec3::new(1.0, 1.0, 1.0)).unwrap();
        assert_eq!(t, 4.0);
        // from inside, the exit face
        let t = intersect_box(&Vec3::zeros(), &Vec3::y(), &Vec3::new(-1.0, -1.0, -1.0), &Vec3::new(1.0, 2.0, 1.0)).unwrap();
        assert_eq!(t, 2.0);
        assert!(intersect_box(&o, &-Vec3::x(), &Vec3::new(-1.0, -1.0, -1.0), &Vec3::new(1.0, 1.0, 1.0)).is_none());
        assert!(intersect_box(&Vec3::new(-5.0, 3.0, 0.0), &Vec3::x(), &Vec3::new(-1.0, -1.0, -1.0), &Vec3::new(1.0, 1.0, 1.0)).is_none());
    }

    #[test]
    fn sphere_and_plane() {
        let t = intersect_sphere(&Vec3::new(0.0, 0.0, -10.0), &Vec3::z(), &Vec3::zeros(), 2.0).unwrap();
        assert_eq!(t, 8.0);
        assert!(intersect_sphere(&Vec3::new(0.0, 3.0, -10.0), &Vec3::z(), &Vec3::zeros(), 2.0).is_none());
        let d = Vec3::new(1.0, 0.0, -1.0).normalize();
        let t = intersect_ground(&Vec3::new(0.0, 0.0, 2.0), &d, 0.0).unwrap();
        assert!((t - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!(intersect_ground(&Vec3::new(0.0, 0.0, 2.0), &Vec3::z(), 0.0).is_none());
    }
}
