//! Trains the masked-reconstruction model on trajectory-masked frames of a
//! synthetic drive and compares reconstruction error on ground and
//! obstacles.

use trailmark::eval::SemanticClass;
use trailmark::model::{train_with_observer, Architecture, ModelConfig, TrainConfig};
use trailmark::occlusion::OcclusionParams;
use trailmark::pipeline::label_frame;
use trailmark::risk::error_map;
use trailmark::synth::{default_camera, default_wheels, generate_dataset, Obstacle, PathSpec, SceneSpec};
use trailmark::trajectory::ProjectionWindow;

fn main() {
    let scene = SceneSpec {
        duration: 6.0,
        path: PathSpec { speed: 4.0, yaw_rate: 0.1, ..PathSpec::default() },
        obstacles: vec![
            Obstacle::Box { center: [12.0, 4.5, 1.0], size: [1.5, 1.5, 2.0], texture: None },
            Obstacle::Sphere { center: [9.0, -4.0, 1.0], radius: 1.0, texture: None },
        ],
        ..SceneSpec::default()
    };
    let (camera, wheels) = (default_camera(), default_wheels());
    let window = ProjectionWindow::new(10.0, 4.0).unwrap();
    let data = generate_dataset(&scene, &camera, &wheels, &window).unwrap();
    let occlusion = OcclusionParams { max_angular_distance: Some(0.03), ..OcclusionParams::default() };

    let samples: Vec<_> = data
        .labelable()
        .map(|f| {
            let label = label_frame(f.timestamp, &data.poses, &f.cloud, &camera, &wheels, &window, &occlusion, Some(&data.vehicle_mask)).unwrap();
            (f.image.clone(), label.mask)
        })
        .collect();
    println!("{} training frames", samples.len());

    let mc = ModelConfig { architecture: Architecture::PatchLinear, bottleneck: 64, patch_size: 8, ..ModelConfig::default() };
    let tc = TrainConfig { epochs: 30, input_width: 160, input_height: 96, ..TrainConfig::default() };
    let (model, _) = train_with_observer(&samples, &mc, &tc, |e| {
        if e.epoch % 10 == 0 {
            println!("epoch {:3}  train {:.3e}  val {:.3e}", e.epoch, e.train_loss, e.val_loss);
        }
    })
    .unwrap();
    println!("kept epoch {} (validation loss {:.3e})", model.best_epoch, model.best_val_loss);

    let mut sums = [(0.0, 0usize); 2];
    for f in &data.frames {
        let err = error_map(&f.image, &model.reconstruct(&f.image).unwrap()).unwrap();
        for (e, c) in err.values.iter().zip(&f.labels.classes) {
            let slot = match c {
                SemanticClass::Ground => 0,
                SemanticClass::Vegetation => 1,
                SemanticClass::Unlabeled => continue,
            };
            sums[slot].0 += e;
            sums[slot].1 += 1;
        }
    }
    println!("mean error: ground {:.3e}, obstacles {:.3e}", sums[0].0 / sums[0].1 as f64, sums[1].0 / sums[1].1.max(1) as f64);
}
