//! The full batch pipeline in one process: synth, label, train, predict,
//! eval. Mirrors `trailmark <stage> --config examples/configs/run.toml`.
//!
//! cargo run --release --example end_to_end -- /tmp/trailmark-e2e

use std::path::{Path, PathBuf};

use trailmark::config::RunConfig;
use trailmark::pipeline::{cmd_eval, cmd_label, cmd_predict, cmd_synth, cmd_train, init_workers};

fn main() {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "e2e-out".into()));
    let here = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs");
    let cfg = RunConfig::load(&here.join("run.toml")).unwrap();
    init_workers(cfg.workers);

    let data = cmd_synth(&cfg, &here.join("scene.toml"), &out.join("data"), None).unwrap();
    let labeled = cmd_label(&cfg, &data, &out.join("label")).unwrap();
    let checkpoint = cmd_train(&cfg, &labeled, &out.join("train")).unwrap();
    let predicted = cmd_predict(&cfg, &checkpoint, &labeled, &out.join("predict")).unwrap();
    cmd_eval(&cfg, &predicted, &out.join("eval")).unwrap();
    print!("{}", std::fs::read_to_string(out.join("eval/report.txt")).unwrap());
}
