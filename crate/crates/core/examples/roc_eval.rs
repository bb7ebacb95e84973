//! ROC curve and AUROC for a toy set of risk scores.

use trailmark::eval::{auroc, roc_curve};

fn main() {
    let scores = [0.05, 0.1, 0.2, 0.35, 0.4, 0.4, 0.6, 0.7, 0.8, 0.95];
    let vegetation = [false, false, false, true, false, true, false, true, true, true];
    let roc = roc_curve(&scores, &vegetation).unwrap();
    println!("threshold   FPR   TPR");
    for (t, (fpr, tpr)) in roc.thresholds.iter().zip(&roc.points[1..]) {
        println!("{t:9.2} {fpr:5.2} {tpr:5.2}");
    }
    println!("AUROC {:.3}", auroc(&scores, &vegetation).unwrap());
}
