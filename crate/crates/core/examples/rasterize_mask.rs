//! Turns a projected trajectory into a training mask and prints it as ASCII.

use trailmark::mask::{apply_vehicle_mask, build_quads, rasterize};
use trailmark::synth::{camera_at, default_wheels, vehicle_mask, PathSpec, SceneSpec};
use trailmark::trajectory::{project_trajectory, ProjectionWindow};
use trailmark::geometry::Vec3;

fn main() {
    let camera = camera_at(72, 36, 40.0, Vec3::new(0.5, 0.0, 1.6), 0.2);
    let scene = SceneSpec { path: PathSpec { speed: 4.0, yaw_rate: -0.15, ..PathSpec::default() }, ..SceneSpec::default() };
    let window = ProjectionWindow::new(10.0, 4.0).unwrap();
    let traj = project_trajectory(0.0, &scene.poses(), &default_wheels(), &camera, &window).unwrap();

    let quads = build_quads(&traj);
    let mask = rasterize(&quads, camera.width, camera.height);
    let mask = apply_vehicle_mask(&mask, &vehicle_mask(&scene, &camera)).unwrap();

    for row in 0..mask.height() {
        let line: String = (0..mask.width()).map(|col| if mask.get(col, row) { '#' } else { '.' }).collect();
        println!("{line}");
    }
    println!("{} quads, {} of {} pixels set", quads.len(), mask.count_ones(), mask.width() * mask.height());
}
