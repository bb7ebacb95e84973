//! ROC/AUROC, risk-vs-semantic intersection metrics, and per-class error
//! histograms.
//!
//! Vegetation is the positive (high-risk) class throughout.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::risk::{RiskClass, RiskMap};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("ROC needs at least one positive and one negative sample")]
    DegenerateLabels,
    #[error("no labeled pixels")]
    NoLabeledPixels,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("bins must be positive")]
    InvalidBins,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SemanticClass {
    Unlabeled,
    Ground,
    Vegetation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticLabelMap {
    pub width: usize,
    pub height: usize,
    pub classes: Vec<SemanticClass>,
}

impl SemanticLabelMap {
    pub fn new(width: usize, height: usize, classes: Vec<SemanticClass>) -> Result<Self, EvalError> {
        if classes.len() != width * height {
            return Err(EvalError::DimensionMismatch(format!("{} labels for {width}x{height}", classes.len())));
        }
        Ok(Self { width, height, classes })
    }

    pub fn get(&self, x: usize, y: usize) -> SemanticClass {
        self.classes[y * self.width + x]
    }

    /// Nearest-neighbor resampling (same rule as mask resizing).
    pub fn resize(&self, width: usize, height: usize) -> SemanticLabelMap {
        if (width, height) == (self.width, self.height) {
            return self.clone();
        }
        let pick = |dst: usize, dst_len: usize, src_len: usize| {
            (((dst as f64 + 0.5) * src_len as f64 / dst_len as f64).floor() as usize).min(src_len - 1)
        };
        let mut classes = Vec::with_capacity(width * height);
        for j in 0..height {
            let sy = pick(j, height, self.height);
            for i in 0..width {
                classes.push(self.get(pick(i, width, self.width), sy));
            }
        }
        SemanticLabelMap { width, height, classes }
    }
}

/// `(FPR, TPR)` operating points from `(0, 0)` to `(1, 1)`, one per distinct
/// score taken as a descending threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<(f64, f64)>,
    /// Score at which each point (after the first) is reached.
    pub thresholds: Vec<f64>,
}

impl RocCurve {
    /// Trapezoidal area under the curve.
    pub fn area(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) * 0.5).sum()
    }
}

pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<RocCurve, EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::DimensionMismatch(format!("{} scores vs {} labels", scores.len(), labels.len())));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(EvalError::DegenerateLabels);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    let mut thresholds = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / negatives as f64, tp as f64 / positives as f64));
        thresholds.push(s);
    }
    Ok(RocCurve { points, thresholds })
}

pub fn auroc(scores: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
    Ok(roc_curve(scores, labels)?.area())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntersectionReport {
    /// `100·|ground ∧ low| / |ground|`; `None` when no ground pixels exist.
    pub ground_low_risk_percent: Option<f64>,
    /// `100·|vegetation ∧ high| / |vegetation|`; `None` when absent.
    pub vegetation_high_risk_percent: Option<f64>,
    pub auroc: Option<f64>,
}

/// Running pixel counts, so metrics can be accumulated across frames.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IntersectionCounts {
    pub ground: u64,
    pub ground_low: u64,
    pub vegetation: u64,
    pub vegetation_high: u64,
}

impl IntersectionCounts {
    pub fn add(&mut self, classes: &[RiskClass], labels: &SemanticLabelMap) -> Result<(), EvalError> {
        if classes.len() != labels.classes.len() {
            return Err(EvalError::DimensionMismatch(format!(
                "{} predictions vs {} labels",
                classes.len(),
                labels.classes.len()
            )));
        }
        for (c, l) in classes.iter().zip(&labels.classes) {
            match l {
                SemanticClass::Ground => {
                    self.ground += 1;
                    self.ground_low += (*c == RiskClass::LowRisk) as u64;
                }
                SemanticClass::Vegetation => {
                    self.vegetation += 1;
                    self.vegetation_high += (*c == RiskClass::HighRisk) as u64;
                }
                SemanticClass::Unlabeled => {}
            }
        }
        Ok(())
    }

    pub fn report(&self, auroc: Option<f64>) -> Result<IntersectionReport, EvalError> {
        if self.ground == 0 && self.vegetation == 0 {
            return Err(EvalError::NoLabeledPixels);
        }
        let pct = |hit: u64, total: u64| (total > 0).then(|| 100.0 * hit as f64 / total as f64);
        Ok(IntersectionReport {
            ground_low_risk_percent: pct(self.ground_low, self.ground),
            vegetation_high_risk_percent: pct(self.vegetation_high, self.vegetation),
            auroc,
        })
    }
}

pub fn intersection_metrics(classes: &[RiskClass], labels: &SemanticLabelMap) -> Result<IntersectionReport, EvalError> {
    let mut counts = IntersectionCounts::default();
    counts.add(classes, labels)?;
    counts.report(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    /// One sample per labeled pixel.
    #[default]
    Pixel,
    /// One sample per (image, class) region: the region's mean risk.
    Image,
}

/// Scores and vegetation-positive labels for ROC analysis.
pub fn labeled_scores(
    risks: &[RiskMap],
    labels: &[SemanticLabelMap],
    granularity: Granularity,
) -> Result<(Vec<f64>, Vec<bool>), EvalError> {
    if risks.len() != labels.len() {
        return Err(EvalError::DimensionMismatch(format!("{} risk maps vs {} label maps", risks.len(), labels.len())));
    }
    let mut scores = Vec::new();
    let mut positive = Vec::new();
    for (r, l) in risks.iter().zip(labels) {
        if (r.width, r.height) != (l.width, l.height) {
            return Err(EvalError::DimensionMismatch(format!(
                "risk {}x{} vs labels {}x{}",
                r.width, r.height, l.width, l.height
            )));
        }
        match granularity {
            Granularity::Pixel => {
                for (&v, c) in r.values.iter().zip(&l.classes) {
                    match c {
                        SemanticClass::Ground => {
                            scores.push(v);
                            positive.push(false);
                        }
                        SemanticClass::Vegetation => {
                            scores.push(v);
                            positive.push(true);
                        }
                        SemanticClass::Unlabeled => {}
                    }
                }
            }
            Granularity::Image => {
                for (class, is_pos) in [(SemanticClass::Ground, false), (SemanticClass::Vegetation, true)] {
                    let (sum, n) = r
                        .values
                        .iter()
                        .zip(&l.classes)
                        .filter(|(_, c)| **c == class)
                        .fold((0.0, 0usize), |(s, n), (v, _)| (s + v, n + 1));
                    if n > 0 {
                        scores.push(sum / n as f64);
                        positive.push(is_pos);
                    }
                }
            }
        }
    }
    Ok((scores, positive))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionHistograms {
    /// `bins + 1` edges shared by every class.
    pub edges: Vec<f64>,
    pub ground: Vec<u64>,
    pub vegetation: Vec<u64>,
}

impl RegionHistograms {
    /// Count-weighted mean bin index of a histogram.
    pub fn mean_bin(counts: &[u64]) -> Option<f64> {
        let total: u64 = counts.iter().sum();
        (total > 0).then(|| counts.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum::<f64>() / total as f64)
    }
}

/// Uniform-bin histograms of per-pixel values for each labeled class. Bins
/// span the smallest to largest labeled value across all classes.
pub fn region_histograms(values: &[&[f64]], labels: &[SemanticLabelMap], bins: usize) -> Result<RegionHistograms, EvalError> {
    if bins == 0 {
        return Err(EvalError::InvalidBins);
    }
    if values.len() != labels.len() {
        return Err(EvalError::DimensionMismatch(format!("{} maps vs {} label maps", values.len(), labels.len())));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (v, l) in values.iter().zip(labels) {
        if v.len() != l.classes.len() {
            return Err(EvalError::DimensionMismatch(format!("{} values vs {} labels", v.len(), l.classes.len())));
        }
        for (&x, c) in v.iter().zip(&l.classes) {
            if *c != SemanticClass::Unlabeled {
                lo = lo.min(x);
                hi = hi.max(x);
            }
        }
    }
    if lo > hi {
        return Err(EvalError::NoLabeledPixels);
    }
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let edges = (0..=bins).map(|i| if i == bins && hi > lo { hi } else { lo + i as f64 * width }).collect();
    let bin_of = |x: f64| (((x - lo) / width).floor() as usize).min(bins - 1);
    let mut ground = vec![0u64; bins];
    let mut vegetation = vec![0u64; bins];
    for (v, l) in values.iter().zip(labels) {
        for (&x, c) in v.iter().zip(&l.classes) {
            match c {
                SemanticClass::Ground => ground[bin_of(x)] += 1,
                SemanticClass::Vegetation => vegetation[bin_of(x)] += 1,
                SemanticClass::Unlabeled => {}
            }
        }
    }
    Ok(RegionHistograms { edges, ground, vegetation })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_scores_reach_the_corner() {
        let scores = [0.1, 0.2, 0.8, 0.9];
        let labels = [false, false, true, true];
        let roc = roc_curve(&scores, &labels).unwrap();
        assert!(roc.points.contains(&(0.0, 1.0)));
        assert_eq!(roc.area(), 1.0);
        assert_eq!(*roc.points.last().unwrap(), (1.0, 1.0));
    }

    #[test]
    fn equal_scores_give_the_diagonal() {
        let roc = roc_curve(&[0.5; 6], &[true, false, true, false, false, true]).unwrap();
        assert_eq!(roc.points, vec![(0.0, 0.0), (1.0, 1.0)]);
        assert_eq!(roc.area(), 0.5);
    }

    #[test]
    fn roc_needs_both_classes() {
        assert_eq!(roc_curve(&[0.1, 0.2], &[false, false]), Err(EvalError::DegenerateLabels));
        assert_eq!(auroc(&[0.1], &[true]), Err(EvalError::DegenerateLabels));
    }

    fn labels_from(classes: Vec<SemanticClass>, w: usize, h: usize) -> SemanticLabelMap {
        SemanticLabelMap::new(w, h, classes).unwrap()
    }

    #[test]
    fn intersection_examples() {
        use RiskClass::*;
        use SemanticClass::*;
        let labels = labels_from(vec![Ground, Ground, Vegetation, Unlabeled], 2, 2);
        let exact = intersection_metrics(&[LowRisk, LowRisk, HighRisk, HighRisk], &labels).unwrap();
        assert_eq!(exact.ground_low_risk_percent, Some(100.0));
        assert_eq!(exact.vegetation_high_risk_percent, Some(100.0));
        let inverted = intersection_metrics(&[HighRisk, HighRisk, LowRisk, LowRisk], &labels).unwrap();
        assert_eq!(inverted.ground_low_risk_percent, Some(0.0));
        assert_eq!(inverted.vegetation_high_risk_percent, Some(0.0));

        let ground = labels_from(vec![Ground; 16], 4, 4);
        let checker: Vec<RiskClass> = (0..16).map(|i| if (i % 4 + i / 4) % 2 == 0 { LowRisk } else { HighRisk }).collect();
        let r = intersection_metrics(&checker, &ground).unwrap();
        assert_eq!(r.ground_low_risk_percent, Some(50.0));
        assert_eq!(r.vegetation_high_risk_percent, None);

        let none = labels_from(vec![Unlabeled; 4], 2, 2);
        assert_eq!(intersection_metrics(&[LowRisk; 4], &none), Err(EvalError::NoLabeledPixels));
        assert!(intersection_metrics(&[LowRisk; 3], &none).is_err());
    }

    #[test]
    fn histogram_examples() {
        use SemanticClass::*;
        let labels = labels_from(vec![Ground; 6], 3, 2);
        let values = [0.4; 6];
        let h = region_histograms(&[&values], &[labels.clone()], 8).unwrap();
        assert_eq!(h.ground.iter().filter(|&&c| c > 0).count(), 1);
        assert_eq!(h.ground.iter().sum::<u64>(), 6);
        assert_eq!(h.vegetation.iter().sum::<u64>(), 0);

        let mixed = labels_from(vec![Ground, Vegetation, Unlabeled, Ground, Vegetation, Vegetation], 3, 2);
        let values = [0.0, 1.0, 7.0, 0.25, 0.75, 0.5];
        let h = region_histograms(&[&values], &[mixed], 4).unwrap();
        assert_eq!(h.edges, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(h.ground, vec![1, 1, 0, 0]);
        assert_eq!(h.vegetation, vec![0, 0, 1, 2]);
        assert!(region_histograms(&[&values], &[labels_from(vec![Unlabeled; 6], 3, 2)], 4).is_err());
        assert_eq!(region_histograms(&[], &[], 0), Err(EvalError::InvalidBins));
    }

    #[test]
    fn image_granularity_averages_regions() {
        use SemanticClass::*;
        let labels = labels_from(vec![Ground, Ground, Vegetation, Unlabeled], 2, 2);
        let risk = RiskMap::new(2, 2, vec![0.2, 0.4, 0.9, 0.0]).unwrap();
        let (s, l) = labeled_scores(&[risk.clone()], &[labels.clone()], Granularity::Image).unwrap();
        assert!((s[0] - 0.3).abs() < 1e-15);
        assert_eq!(s[1], 0.9);
        assert_eq!(l, vec![false, true]);
        let (s, l) = labeled_scores(&[risk], &[labels], Granularity::Pixel).unwrap();
        assert_eq!(s, vec![0.2, 0.4, 0.9]);
        assert_eq!(l, vec![false, false, true]);
    }

    #[test]
    fn label_resize_uses_nearest() {
        use SemanticClass::*;
        let l = labels_from(vec![Ground, Vegetation, Unlabeled, Ground], 2, 2);
        let up = l.resize(4, 4);
        assert_eq!(up.get(0, 0), Ground);
        assert_eq!(up.get(3, 0), Vegetation);
        assert_eq!(up.get(1, 3), Unlabeled);
        assert_eq!(up.get(2, 2), Ground);
    }
}
