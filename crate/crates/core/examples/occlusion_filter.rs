//! Removes wheel points hidden behind an obstacle, then compares the flags
//! with exact ray casting.

use trailmark::occlusion::{build_index, filter_occlusions, OcclusionParams};
use trailmark::synth::{
    camera_center, default_camera, default_wheels, oracle_occlusion, sample_cloud, wheel_flags, wheel_points, CloudSpec, Obstacle,
    PathSpec, SceneSpec,
};
use trailmark::trajectory::{project_trajectory, ProjectionWindow};

fn main() {
    // an overhanging boulder between the camera and the right track
    let scene = SceneSpec {
        path: PathSpec { speed: 4.0, ..PathSpec::default() },
        obstacles: vec![Obstacle::Sphere { center: [9.0, -1.0, 1.2], radius: 0.9, texture: None }],
        ..SceneSpec::default()
    };
    let camera = default_camera();
    let wheels = default_wheels();
    let window = ProjectionWindow::new(10.0, 4.0).unwrap();
    let pose = scene.pose_at(0.0);

    let traj = project_trajectory(0.0, &scene.poses(), &wheels, &camera, &window).unwrap();
    let resolution = 0.2_f64.to_radians();
    let cloud = sample_cloud(&scene, &pose, &camera, &CloudSpec::dense_for(&camera, resolution), 0);
    let params = OcclusionParams { max_angular_distance: Some(resolution), ..OcclusionParams::default() };
    let filtered = filter_occlusions(&traj, &build_index(&cloud, &params), &params);

    let flags = wheel_flags(&filtered);
    let truth = oracle_occlusion(&scene, &camera_center(&camera, &pose), &wheel_points(&filtered));
    let agree = flags.iter().zip(&truth).filter(|(a, b)| a == b).count();
    println!("{} cloud points, {} wheel points", cloud.len(), flags.len());
    println!("occluded: {} by nearest-neighbor test, {} by ray casting", flags.iter().filter(|f| **f).count(), truth.iter().filter(|f| **f).count());
    println!("agreement {:.1}%", 100.0 * agree as f64 / flags.len() as f64);
}
