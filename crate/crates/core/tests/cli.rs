use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use trailmark::config::RunConfig;
use trailmark::dataset::{load_manifest, save_manifest, CameraSpec};
use trailmark::geometry::Vec3;
use trailmark::image::{BinaryMask, ImageTensor};
use trailmark::io::{write_image, write_mask, write_ply};
use trailmark::occlusion::PointCloud;
use trailmark::synth::camera_at;

const SCENE: &str = r#"
version = 1
seed = 2
duration = 5.0
rate = 10.0

[path]
speed = 4.0

[[obstacles]]
shape = "box"
center = [9.0, 3.5, 1.0]
size = [1.0, 1.0, 2.0]
"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_trailmark"));
    c.env("RUST_LOG", "warn");
    c
}

fn small_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.camera = Some(CameraSpec::from_model(&camera_at(80, 50, 55.0, Vec3::new(0.5, 0.0, 1.6), 0.15)));
    cfg.occlusion.max_angular_distance = Some(0.03);
    cfg.model.patch_size = 8;
    cfg.model.bottleneck = 8;
    cfg.train.epochs = 2;
    cfg.train.input_width = 32;
    cfg.train.input_height = 32;
    cfg.override_seed(4);
    cfg
}

fn write_config(dir: &Path, cfg: &RunConfig) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, cfg.to_toml()).unwrap();
    path
}

fn run(args: &[&str], config: &Path) -> Output {
    bin().args(args).arg("--config").arg(config).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn synth(dir: &Path, config: &Path) -> PathBuf {
    let scene = dir.join("scene.toml");
    std::fs::write(&scene, SCENE).unwrap();
    let data = dir.join("data");
    let o = run(&["synth", "--scene", scene.to_str().unwrap(), "--out", data.to_str().unwrap()], config);
    assert!(o.status.success(), "{}", stderr(&o));
    data.join("manifest.txt")
}

#[test]
fn unknown_config_key_is_a_config_error_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "version = 1\n[occlusion]\nrhoo = 0.3\n").unwrap();
    let o = run(&["label", "--manifest", "m.txt", "--out", "out"], &config);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("rhoo"), "{}", stderr(&o));
}

#[test]
fn invalid_config_value_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "version = 1\n\n[occlusion]\nrho = -1.0\n").unwrap();
    let o = run(&["label", "--manifest", "m.txt", "--out", "out"], &config);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("occlusion.rho") && err.contains(":4"), "{err}");
}

#[test]
fn invalid_scene_is_a_config_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &small_config());
    let scene = dir.path().join("scene.toml");
    std::fs::write(&scene, "version = 1\nrate = -2.0\n").unwrap();
    let o = run(&["synth", "--scene", scene.to_str().unwrap(), "--out", dir.path().join("d").to_str().unwrap()], &config);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("rate"), "{}", stderr(&o));
}

#[test]
fn missing_frame_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &small_config());
    let manifest = synth(dir.path(), &config);
    std::fs::remove_file(dir.path().join("data/clouds/0003.ply")).unwrap();
    let o = run(&["label", "--manifest", manifest.to_str().unwrap(), "--out", dir.path().join("l").to_str().unwrap()], &config);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("0003.ply"), "{}", stderr(&o));
}

#[test]
fn training_on_empty_masks_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let config = write_config(root, &small_config());
    let mut m = trailmark::dataset::DatasetManifest::new(root);
    for i in 0..3 {
        let id = format!("{i}");
        write_image(&root.join(format!("{id}.ppm")), &ImageTensor::filled(32, 32, 3, 0.5).unwrap()).unwrap();
        write_mask(&root.join(format!("{id}.pgm")), &BinaryMask::zeros(32, 32)).unwrap();
        write_ply(&root.join(format!("{id}.ply")), &PointCloud::new(vec![Vec3::new(0.0, 0.0, 1.0)])).unwrap();
        let mut f = trailmark::dataset::FrameRecord::new(&id, i as f64, format!("{id}.ppm"), format!("{id}.ply"));
        f.mask = Some(format!("{id}.pgm").into());
        m.frames.push(f);
    }
    save_manifest(&root.join("manifest.txt"), &m).unwrap();
    let o = run(&["train", "--manifest", root.join("manifest.txt").to_str().unwrap(), "--out", root.join("t").to_str().unwrap()], &config);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).to_lowercase().contains("mask"), "{}", stderr(&o));
}

#[test]
fn missing_out_and_output_dir_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &small_config());
    let o = run(&["label", "--manifest", "m.txt"], &config);
    assert_eq!(o.status.code(), Some(2));
}

fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn stages_are_idempotent_and_predict_covers_every_frame() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let config = write_config(root, &small_config());
    let data = synth(root, &config);
    let s = |p: &Path| p.to_str().unwrap().to_string();

    let label = root.join("label");
    for _ in 0..2 {
        let o = run(&["label", "--manifest", &s(&data), "--out", &s(&label)], &config);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let first = snapshot(&label);
    let o = run(&["label", "--manifest", &s(&data), "--out", &s(&label)], &config);
    assert!(o.status.success());
    assert_eq!(snapshot(&label), first);

    let train = root.join("train");
    let o = run(&["train", "--manifest", &s(&label.join("manifest.txt")), "--out", &s(&train)], &config);
    assert!(o.status.success(), "{}", stderr(&o));
    let predict = root.join("predict");
    let o = run(
        &["predict", "--checkpoint", &s(&train.join("checkpoint.bin")), "--manifest", &s(&label.join("manifest.txt")), "--out", &s(&predict)],
        &config,
    );
    assert!(o.status.success(), "{}", stderr(&o));

    let frames = load_manifest(&data).unwrap().len();
    let risk = load_manifest(&predict.join("manifest.txt")).unwrap();
    assert_eq!(risk.frames.iter().filter(|f| f.risk.is_some()).count(), frames);
    for sub in ["risk", "recon", "error"] {
        assert_eq!(std::fs::read_dir(predict.join(sub)).unwrap().count(), frames, "{sub}");
    }

    let eval = root.join("eval");
    let o = run(&["eval", "--manifest", &s(&predict.join("manifest.txt")), "--out", &s(&eval)], &config);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = std::fs::read_to_string(eval.join("report.txt")).unwrap();
    assert!(report.contains("| ground low-risk % | vegetation high-risk % | AUROC |"), "{report}");
}

#[test]
fn seed_flag_overrides_config_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let config = write_config(root, &small_config());
    let scene = root.join("scene.toml");
    std::fs::write(&scene, SCENE).unwrap();
    for (name, seed) in [("a", "1"), ("b", "1"), ("c", "2")] {
        let o = bin()
            .args(["synth", "--scene", scene.to_str().unwrap(), "--out", root.join(name).to_str().unwrap(), "--seed", seed, "--config"])
            .arg(&config)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let read = |n: &str| std::fs::read_to_string(root.join(n).join("scene.toml")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert!(read("c").contains("seed = 2"));
}
