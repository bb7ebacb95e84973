//! Generates a random scene and writes it as a dataset directory.
//!
//! cargo run --example synth_scene -- /tmp/trailmark-synth [seed]

use std::path::PathBuf;

use trailmark::config::LabelValues;
use trailmark::synth::{default_camera, default_wheels, generate_dataset, write_dataset, SceneSpec};
use trailmark::trajectory::ProjectionWindow;

fn main() {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "synth-out".into()));
    let seed: u64 = args.next().map_or(7, |s| s.parse().expect("numeric seed"));

    let wheels = default_wheels();
    let mut scene = SceneSpec::random(seed, &wheels, 1.0);
    scene.duration = 5.0;
    println!("scene {seed}: {} obstacles, speed {:.1} m/s, yaw rate {:.3} rad/s", scene.obstacles.len(), scene.path.speed, scene.path.yaw_rate);

    let data = generate_dataset(&scene, &default_camera(), &wheels, &ProjectionWindow::new(10.0, 4.0).unwrap()).unwrap();
    let manifest = write_dataset(&out, &data, &LabelValues::default()).unwrap();
    std::fs::write(out.join("scene.toml"), scene.to_toml()).unwrap();
    println!("{} frames ({} with a full projection window) in {}", manifest.len(), data.labelable().count(), out.display());
}
