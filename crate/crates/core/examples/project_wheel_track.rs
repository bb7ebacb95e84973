//! Projects the front-wheel contact lines of a short drive into the camera
//! image of its first frame and prints the pixel track.

use trailmark::synth::{default_camera, default_wheels, PathSpec, SceneSpec};
use trailmark::trajectory::{project_trajectory, ProjectionWindow, Wheel};

fn main() {
    let scene = SceneSpec {
        path: PathSpec { speed: 5.0, yaw_rate: 0.08, ..PathSpec::default() },
        duration: 6.0,
        ..SceneSpec::default()
    };
    let camera = default_camera();
    let window = ProjectionWindow::new(10.0, 4.0).expect("valid window");
    let traj = project_trajectory(0.0, &scene.poses(), &default_wheels(), &camera, &window).expect("poses cover the window");

    for wheel in Wheel::ALL {
        println!("{wheel:?}");
        for (i, s) in traj.wheel(wheel).iter().enumerate().step_by(5) {
            let px = |p: &trailmark::trajectory::ProjectedPoint| p.image.map_or("behind".to_string(), |q| format!("({:7.1}, {:6.1})", q.u, q.v));
            println!("  t+{:.1}s  inner {}  outer {}  in frame: {}", i as f64 / window.rate(), px(&s.inner), px(&s.outer), s.in_frustum);
        }
    }
    println!("window covers {:.2} m of travel", traj.arc_length());
}
