//! Normalizes reconstruction errors into risk and picks the threshold
//! closest to the ideal ROC corner.

use trailmark::image::ImageTensor;
use trailmark::risk::{classify, error_map, normalize, select_threshold, RiskClass};

fn main() {
    // 8x1 strip: the left half is reconstructed well, the right half badly
    let x = ImageTensor::filled(8, 1, 1, 0.5).unwrap();
    let recon = ImageTensor::new(8, 1, 1, vec![0.5, 0.52, 0.49, 0.51, 0.8, 0.2, 0.9, 0.5]).unwrap();
    let errors = error_map(&x, &recon).unwrap();
    let (risk, k) = normalize(&[errors]).unwrap();
    println!("normalization: min {:.3e}, p99 {:.3e}", k.min, k.upper);

    let labels = [false, false, false, false, true, true, true, true];
    let t = select_threshold(&risk[0].values, &labels).unwrap();
    println!("threshold {:.3}  TPR {:.2}  FPR {:.2}  distance {:.3}", t.value, t.tpr, t.fpr, t.distance);
    for ((r, l), c) in risk[0].values.iter().zip(labels).zip(classify(&risk[0], &t)) {
        println!("risk {r:.3}  obstacle {l:5}  -> {}", if c == RiskClass::HighRisk { "high" } else { "low" });
    }
}
