//! Detection loss at the value level.
//!
//! `L_det = L_cls + L_reg` where positives `(l, g)` with `m_result = 1`
//! contribute `−w_pos·ln s − w_neg·ln(1 − s)` and `w_pos·(1 − GIoU)`, and
//! locations positive for no GT contribute focal loss at target 0 for every
//! class score. The weights `w_pos` and `w_neg` come from the caller.

use serde::{Deserialize, Serialize};

use crate::assigner::AssignmentMatrix;
use crate::error::{Error, Result};
use crate::geometry::BBox;

/// Lower clamp applied to every logarithm argument.
pub const SCORE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FocalParams {
    pub gamma: f64,
    pub alpha: f64,
}

impl Default for FocalParams {
    fn default() -> Self {
        Self {
            gamma: 2.0,
            alpha: 0.25,
        }
    }
}

impl FocalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::config("focal.gamma", format!("{} must be >= 0", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::config("focal.alpha", format!("{} is outside [0, 1]", self.alpha)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SampleWeights {
    pub w_pos: f64,
    pub w_neg: f64,
}

impl SampleWeights {
    pub fn new(w_pos: f64, w_neg: f64) -> Result<Self> {
        if !(w_pos >= 0.0 && w_neg >= 0.0 && w_pos.is_finite() && w_neg.is_finite()) {
            return Err(Error::invalid(format!(
                "sample weights must be finite and non-negative, got ({w_pos}, {w_neg})"
            )));
        }
        Ok(Self { w_pos, w_neg })
    }
}

/// Source of per-positive weights.
pub trait WeightProvider {
    fn weights(&self, location: usize, gt: usize, score: f64) -> SampleWeights;
}

/// `w_pos = 1`, `w_neg = 0` for every positive.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitWeights;

impl WeightProvider for UnitWeights {
    fn weights(&self, _location: usize, _gt: usize, _score: f64) -> SampleWeights {
        SampleWeights {
            w_pos: 1.0,
            w_neg: 0.0,
        }
    }
}

/// Network outputs for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// `scores[l][c]` in `[0, 1]`.
    scores: Vec<Vec<f64>>,
    boxes: Vec<BBox>,
}

impl Prediction {
    pub fn new(scores: Vec<Vec<f64>>, boxes: Vec<BBox>) -> Result<Self> {
        if scores.len() != boxes.len() {
            return Err(Error::invalid(format!(
                "{} score rows but {} boxes",
                scores.len(),
                boxes.len()
            )));
        }
        let n_classes = scores.first().map_or(0, Vec::len);
        for (l, row) in scores.iter().enumerate() {
            if row.len() != n_classes {
                return Err(Error::invalid(format!("location {l}: ragged score row")));
            }
            if let Some(s) = row.iter().find(|s| !(0.0..=1.0).contains(*s)) {
                return Err(Error::invalid(format!("location {l}: score {s} outside [0, 1]")));
            }
        }
        Ok(Self { scores, boxes })
    }

    pub fn n_locations(&self) -> usize {
        self.boxes.len()
    }

    pub fn score(&self, location: usize, class: usize) -> f64 {
        self.scores[location][class]
    }

    pub fn scores(&self, location: usize) -> &[f64] {
        &self.scores[location]
    }

    pub fn bbox(&self, location: usize) -> &BBox {
        &self.boxes[location]
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::default();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// `−w_pos·ln(s) − w_neg·ln(1 − s)` with log arguments clamped to `SCORE_EPS`.
pub fn cls_loss_positive(s: f64, w: SampleWeights) -> f64 {
    let pos = -w.w_pos * s.max(SCORE_EPS).ln();
    let neg = -w.w_neg * (1.0 - s).max(SCORE_EPS).ln();
    pos + neg + 0.0
}

/// Focal loss at target 0: `−(1 − α)·s^γ·ln(1 − s)`, `s` clamped into
/// `[eps, 1 − eps]`.
pub fn focal_loss_negative(s: f64, fp: FocalParams) -> f64 {
    let s = s.clamp(SCORE_EPS, 1.0 - SCORE_EPS);
    -(1.0 - fp.alpha) * s.powf(fp.gamma) * (1.0 - s).ln() + 0.0
}

pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let inter = intersection(a, b);
    inter / (a.area() + b.area() - inter)
}

fn intersection(a: &BBox, b: &BBox) -> f64 {
    let w = (a.x_max().min(b.x_max()) - a.x_min().max(b.x_min())).max(0.0);
    let h = (a.y_max().min(b.y_max()) - a.y_min().max(b.y_min())).max(0.0);
    w * h
}

/// Generalized IoU: `IoU − (|hull| − |union|) / |hull|`, in `(−1, 1]`.
pub fn giou(a: &BBox, b: &BBox) -> f64 {
    let inter = intersection(a, b);
    let union = a.area() + b.area() - inter;
    let hull_w = a.x_max().max(b.x_max()) - a.x_min().min(b.x_min());
    let hull_h = a.y_max().max(b.y_max()) - a.y_min().min(b.y_min());
    let hull = hull_w * hull_h;
    inter / union - (hull - union) / hull
}

/// `Σ w_pos·(1 − GIoU(pred, gt))`, compensated.
pub fn reg_loss(pairs: &[(BBox, BBox, f64)]) -> f64 {
    pairs
        .iter()
        .map(|(pred, gt, w)| w * (1.0 - giou(pred, gt)))
        .collect::<CompensatedSum>()
        .total()
}

pub fn total_loss(cls: f64, reg: f64) -> f64 {
    cls + reg
}

/// Loss components for one image.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct LossBreakdown {
    pub cls_positive: f64,
    pub cls_negative: f64,
    pub reg: f64,
    pub n_positive: usize,
    pub n_negative: usize,
}

impl LossBreakdown {
    pub fn cls(&self) -> f64 {
        self.cls_positive + self.cls_negative
    }

    pub fn total(&self) -> f64 {
        total_loss(self.cls(), self.reg)
    }
}

/// Evaluates the full detection loss for one image.
///
/// `gt_boxes[g]` and `gt_classes[g]` describe the GT columns of `assignment`.
pub fn detection_loss(
    assignment: &AssignmentMatrix,
    prediction: &Prediction,
    gt_boxes: &[BBox],
    gt_classes: &[usize],
    weights: &impl WeightProvider,
    focal: FocalParams,
) -> Result<LossBreakdown> {
    if prediction.n_locations() != assignment.n_locations() {
        return Err(Error::invalid(format!(
            "prediction covers {} locations, assignment {}",
            prediction.n_locations(),
            assignment.n_locations()
        )));
    }
    if gt_boxes.len() != assignment.n_gts() || gt_classes.len() != assignment.n_gts() {
        return Err(Error::invalid("GT boxes/classes do not match assignment columns"));
    }
    let n_classes = if prediction.n_locations() == 0 {
        0
    } else {
        prediction.scores(0).len()
    };
    if let Some(c) = gt_classes.iter().find(|&&c| c >= n_classes) {
        return Err(Error::invalid(format!(
            "GT class {c} out of range for {n_classes} score columns"
        )));
    }
    focal.validate()?;

    let mut cls_pos = CompensatedSum::default();
    let mut reg_pairs = Vec::new();
    let positives = assignment.positive_pairs();
    for &(l, g) in &positives {
        let s = prediction.score(l, gt_classes[g]);
        let w = weights.weights(l, g, s);
        cls_pos.add(cls_loss_positive(s, w));
        reg_pairs.push((*prediction.bbox(l), gt_boxes[g], w.w_pos));
    }
    let negatives = assignment.negative_locations();
    let cls_neg: CompensatedSum = negatives
        .iter()
        .flat_map(|&l| prediction.scores(l).iter())
        .map(|&s| focal_loss_negative(s, focal))
        .collect();
    Ok(LossBreakdown {
        cls_positive: cls_pos.total(),
        cls_negative: cls_neg.total(),
        reg: reg_loss(&reg_pairs),
        n_positive: positives.len(),
        n_negative: negatives.len(),
    })
}
