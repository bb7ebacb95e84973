//! Reconstruction error → normalized per-pixel risk, and the low/high risk
//! operating threshold.

use thiserror::Error;

use crate::image::{ImageError, ImageTensor};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RiskError {
    #[error("threshold selection needs at least one positive and one negative label")]
    DegenerateLabels,
    #[error("scores and labels differ in length ({scores} vs {labels})")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("no error values to normalize")]
    Empty,
    #[error(transparent)]
    Image(#[from] ImageError),
}

/// Per-pixel nonnegative reconstruction error.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

/// Per-pixel channel-mean squared error.
pub fn error_map(x: &ImageTensor, recon: &ImageTensor) -> Result<ErrorMap, RiskError> {
    x.check_same_shape(recon)?;
    let c = x.channels();
    let values = x
        .data()
        .chunks_exact(c)
        .zip(recon.data().chunks_exact(c))
        .map(|(a, b)| a.iter().zip(b).map(|(p, q)| (q - p).powi(2)).sum::<f64>() / c as f64)
        .collect();
    Ok(ErrorMap { width: x.width(), height: x.height(), values })
}

/// Per-pixel risk in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl RiskMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self, RiskError> {
        if values.len() != width * height {
            return Err(ImageError::InvalidShape { width, height, channels: 1 }.into());
        }
        if let Some((index, v)) = values.iter().enumerate().find(|(_, v)| !(**v >= 0.0 && **v <= 1.0)) {
            return Err(ImageError::ValueOutOfRange { index, value: v.to_string() }.into());
        }
        Ok(Self { width, height, values })
    }
}

/// Affine map `e ↦ clamp((e − min) / (upper − min), 0, 1)` shared by a whole
/// evaluation set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationConstants {
    pub min: f64,
    pub upper: f64,
}

impl NormalizationConstants {
    pub fn apply(&self, e: f64) -> f64 {
        if self.upper > self.min {
            ((e - self.min) / (self.upper - self.min)).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }
}

/// Linear-interpolated percentile (`q` in `[0, 100]`) of unsorted values.
pub fn percentile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(percentile_sorted(&sorted, q))
}

fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = (q / 100.0).clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let f = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + f * (sorted[hi] - sorted[lo])
    }
}

/// Normalization constants over every pixel of an evaluation set: global
/// minimum and the `upper_percentile` (99 by default). When the percentile
/// collapses onto the minimum, the maximum is used instead; a constant set
/// yields a degenerate range and maps to zero.
pub fn normalization_constants(errors: &[ErrorMap], upper_percentile: f64) -> Result<NormalizationConstants, RiskError> {
    let mut all: Vec<f64> = errors.iter().flat_map(|e| e.values.iter().copied()).collect();
    if all.is_empty() {
        return Err(RiskError::Empty);
    }
    all.sort_by(f64::total_cmp);
    let min = all[0];
    let max = all[all.len() - 1];
    let mut upper = percentile_sorted(&all, upper_percentile);
    if upper <= min {
        upper = max;
    }
    Ok(NormalizationConstants { min, upper })
}

pub fn normalize(errors: &[ErrorMap]) -> Result<(Vec<RiskMap>, NormalizationConstants), RiskError> {
    normalize_with(errors, 99.0)
}

pub fn normalize_with(errors: &[ErrorMap], upper_percentile: f64) -> Result<(Vec<RiskMap>, NormalizationConstants), RiskError> {
    let k = normalization_constants(errors, upper_percentile)?;
    let maps = errors
        .iter()
        .map(|e| RiskMap { width: e.width, height: e.height, values: e.values.iter().map(|&v| k.apply(v)).collect() })
        .collect();
    Ok((maps, k))
}

/// Selected threshold and the operating point it achieves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskThreshold {
    pub value: f64,
    pub tpr: f64,
    pub fpr: f64,
    /// `sqrt((1 − TPR)² + FPR²)`
    pub distance: f64,
}

impl RiskThreshold {
    /// A fixed threshold without provenance.
    pub fn fixed(value: f64) -> Self {
        Self { value, tpr: f64::NAN, fpr: f64::NAN, distance: f64::NAN }
    }
}

/// Candidate thresholds: one below the smallest score, the midpoints between
/// consecutive distinct scores, and one above the largest, ascending.
pub fn candidate_thresholds(scores: &[f64]) -> Vec<f64> {
    let mut distinct = scores.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let (Some(&lo), Some(&hi)) = (distinct.first(), distinct.last()) else {
        return Vec::new();
    };
    let mut out = Vec::with_capacity(distinct.len() + 1);
    out.push(lo - 1.0);
    out.extend(distinct.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    out.push(hi + 1.0);
    out
}

/// The threshold minimizing the distance of `(FPR, TPR)` to the ideal corner
/// `(0, 1)`. A score is predicted positive when it exceeds the threshold;
/// `labels[i] == true` marks a positive. Ties go to the smaller threshold.
pub fn select_threshold(scores: &[f64], labels: &[bool]) -> Result<RiskThreshold, RiskError> {
    if scores.len() != labels.len() {
        return Err(RiskError::LengthMismatch { scores: scores.len(), labels: labels.len() });
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(RiskError::DegenerateLabels);
    }
    let mut pos: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| l).map(|(&s, _)| s).collect();
    let mut neg: Vec<f64> = scores.iter().zip(labels).filter(|(_, &l)| !l).map(|(&s, _)| s).collect();
    pos.sort_by(f64::total_cmp);
    neg.sort_by(f64::total_cmp);
    let above = |sorted: &[f64], t: f64| sorted.len() - sorted.partition_point(|&s| s <= t);

    let mut best: Option<RiskThreshold> = None;
    for t in candidate_thresholds(scores) {
        let tpr = above(&pos, t) as f64 / positives as f64;
        let fpr = above(&neg, t) as f64 / negatives as f64;
        let distance = ((1.0 - tpr).powi(2) + fpr.powi(2)).sqrt();
        if best.is_none_or(|b| distance < b.distance) {
            best = Some(RiskThreshold { value: t, tpr, fpr, distance });
        }
    }
    Ok(best.expect("at least two candidates"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RiskClass {
    LowRisk,
    HighRisk,
}

/// `HighRisk` iff risk > threshold.
pub fn classify(risk: &RiskMap, threshold: &RiskThreshold) -> Vec<RiskClass> {
    risk.values
        .iter()
        .map(|&r| if r > threshold.value { RiskClass::HighRisk } else { RiskClass::LowRisk })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_map_examples() {
        let x = ImageTensor::new(1, 1, 1, vec![0.2]).unwrap();
        let r = ImageTensor::new(1, 1, 1, vec![0.7]).unwrap();
        assert!((error_map(&x, &r).unwrap().values[0] - 0.25).abs() < 1e-15);
        assert!(error_map(&x, &x).unwrap().values.iter().all(|&v| v == 0.0));
        let y = ImageTensor::new(1, 1, 3, vec![0.2; 3]).unwrap();
        assert!(error_map(&x, &y).is_err());
    }

    #[test]
    fn normalize_constant_field_is_zero() {
        let e = ErrorMap { width: 2, height: 2, values: vec![0.3; 4] };
        let (maps, _) = normalize(&[e.clone(), e]).unwrap();
        assert!(maps.iter().all(|m| m.values.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn normalize_hundred_and_one_values() {
        let e = ErrorMap { width: 101, height: 1, values: (0..=100).map(f64::from).collect() };
        let (maps, k) = normalize(&[e]).unwrap();
        assert_eq!(k, NormalizationConstants { min: 0.0, upper: 99.0 });
        assert_eq!(maps[0].values[0], 0.0);
        assert_eq!(maps[0].values[99], 1.0);
        assert_eq!(maps[0].values[100], 1.0);
        assert!((maps[0].values[33] - 33.0 / 99.0).abs() < 1e-15);
    }

    #[test]
    fn normalize_rejects_empty() {
        assert_eq!(normalize(&[]).unwrap_err(), RiskError::Empty);
    }

    #[test]
    fn percentile_collapsing_onto_min_falls_back_to_max() {
        let mut values = vec![0.0; 1000];
        values[3] = 5.0;
        let (maps, k) = normalize(&[ErrorMap { width: 1000, height: 1, values }]).unwrap();
        assert_eq!(k.upper, 5.0);
        assert_eq!(maps[0].values[3], 1.0);
    }

    #[test]
    fn perfectly_separated_threshold() {
        let scores = [0.1, 0.2, 0.25, 0.4, 0.8, 0.9];
        let labels = [false, false, false, true, true, true];
        let t = select_threshold(&scores, &labels).unwrap();
        assert_eq!(t.distance, 0.0);
        assert_eq!((t.tpr, t.fpr), (1.0, 0.0));
        assert!(t.value > 0.25 && t.value < 0.4);
        assert_eq!(t.value, 0.325);
    }

    #[test]
    fn inverted_labels_pick_the_lowest_sentinel() {
        // every interior candidate is worse than the all-positive corner
        let scores = [0.1, 0.2, 0.25, 0.4, 0.8, 0.9];
        let labels = [true, true, true, false, false, false];
        let t = select_threshold(&scores, &labels).unwrap();
        assert_eq!(t.value, 0.1 - 1.0);
        assert_eq!(t.distance, 1.0);
        // the midpoint between the classes is the worst point, distance √2
        let mid = candidate_thresholds(&scores)[3];
        assert_eq!(mid, 0.325);
    }

    #[test]
    fn degenerate_labels() {
        assert_eq!(select_threshold(&[0.1, 0.2], &[true, true]), Err(RiskError::DegenerateLabels));
        assert_eq!(select_threshold(&[], &[]), Err(RiskError::DegenerateLabels));
        assert!(matches!(select_threshold(&[0.1], &[true, false]), Err(RiskError::LengthMismatch { .. })));
    }

    #[test]
    fn classify_boundaries() {
        let risk = RiskMap::new(3, 1, vec![0.2, 0.5, 1.0]).unwrap();
        assert!(classify(&risk, &RiskThreshold::fixed(1.0)).iter().all(|&c| c == RiskClass::LowRisk));
        assert!(classify(&risk, &RiskThreshold::fixed(0.0)).iter().all(|&c| c == RiskClass::HighRisk));
        assert_eq!(
            classify(&risk, &RiskThreshold::fixed(0.5)),
            vec![RiskClass::LowRisk, RiskClass::LowRisk, RiskClass::HighRisk]
        );
        assert!(RiskMap::new(1, 1, vec![1.2]).is_err());
    }
}
