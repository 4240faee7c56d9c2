//! Segmentation evaluation.
//!
//! Confusion matrices (rows = ground truth, columns = prediction) and
//! the derived per-class IoU / accuracy / F1 with unweighted class
//! means. Classes absent from both ground truth and prediction are
//! excluded from the means; classes predicted but absent from ground
//! truth score zero.

use std::ops::Add;

use polsar_core::label::LabelRaster;
use polsar_core::ErrorClass;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("dimension mismatch: prediction {pred_w}x{pred_h} vs ground truth {gt_w}x{gt_h}")]
    DimensionMismatch {
        pred_w: usize,
        pred_h: usize,
        gt_w: usize,
        gt_h: usize,
    },
    #[error("label {label} out of range for {k} classes")]
    OutOfRange { label: u8, k: usize },
    #[error("confusion matrix is empty")]
    Empty,
}

impl MetricsError {
    pub fn class(&self) -> ErrorClass {
        ErrorClass::Validation
    }
}

/// k x k counts, row-major, counts[gt * k + pred].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub k: usize,
    pub counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(k: usize) -> Self {
        ConfusionMatrix {
            k,
            counts: vec![0; k * k],
        }
    }

    pub fn at(&self, gt: usize, pred: usize) -> u64 {
        self.counts[gt * self.k + pred]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_sum(&self, gt: usize) -> u64 {
        (0..self.k).map(|p| self.at(gt, p)).sum()
    }

    pub fn col_sum(&self, pred: usize) -> u64 {
        (0..self.k).map(|g| self.at(g, pred)).sum()
    }
}

impl Add for ConfusionMatrix {
    type Output = ConfusionMatrix;

    fn add(self, other: ConfusionMatrix) -> ConfusionMatrix {
        assert_eq!(self.k, other.k, "confusion matrices must share k");
        let counts = self
            .counts
            .iter()
            .zip(&other.counts)
            .map(|(a, b)| a + b)
            .collect();
        ConfusionMatrix { k: self.k, counts }
    }
}

/// Accumulate counts over pixels valid in both rasters.
pub fn confusion(
    pred: &LabelRaster,
    gt: &LabelRaster,
    k: usize,
) -> Result<ConfusionMatrix, MetricsError> {
    if pred.width != gt.width || pred.height != gt.height {
        return Err(MetricsError::DimensionMismatch {
            pred_w: pred.width,
            pred_h: pred.height,
            gt_w: gt.width,
            gt_h: gt.height,
        });
    }
    let mut cm = ConfusionMatrix::new(k);
    for i in 0..pred.len() {
        if !(pred.validity[i] && gt.validity[i]) {
            continue;
        }
        let (p, g) = (pred.label[i] as usize, gt.label[i] as usize);
        if p >= k {
            return Err(MetricsError::OutOfRange {
                label: pred.label[i],
                k,
            });
        }
        if g >= k {
            return Err(MetricsError::OutOfRange { label: gt.label[i], k });
        }
        cm.counts[g * k + p] += 1;
    }
    Ok(cm)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Per-class IoU; `None` marks classes excluded from the means.
    pub iou: Vec<Option<f64>>,
    pub accuracy: Vec<Option<f64>>,
    pub f1: Vec<Option<f64>>,
    pub mean_iou: f64,
    pub mean_accuracy: f64,
    pub mean_f1: f64,
    pub evaluated_pixels: u64,
}

/// Derive IoU / accuracy / F1 per class and their unweighted means.
pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricsReport, MetricsError> {
    if cm.total() == 0 {
        return Err(MetricsError::Empty);
    }
    let k = cm.k;
    let mut iou = vec![None; k];
    let mut accuracy = vec![None; k];
    let mut f1 = vec![None; k];
    let (mut sum_iou, mut sum_acc, mut sum_f1, mut included) = (0.0, 0.0, 0.0, 0u32);
    for c in 0..k {
        let tp = cm.at(c, c) as f64;
        let gt_total = cm.row_sum(c) as f64;
        let pred_total = cm.col_sum(c) as f64;
        if gt_total == 0.0 && pred_total == 0.0 {
            continue; // absent everywhere: excluded
        }
        let fp = pred_total - tp;
        let fn_ = gt_total - tp;
        let c_iou = tp / (tp + fp + fn_);
        let c_acc = if gt_total > 0.0 { tp / gt_total } else { 0.0 };
        let c_f1 = 2.0 * tp / (2.0 * tp + fp + fn_);
        iou[c] = Some(c_iou);
        accuracy[c] = Some(c_acc);
        f1[c] = Some(c_f1);
        sum_iou += c_iou;
        sum_acc += c_acc;
        sum_f1 += c_f1;
        included += 1;
    }
    if included == 0 {
        return Err(MetricsError::Empty);
    }
    Ok(MetricsReport {
        iou,
        accuracy,
        f1,
        mean_iou: sum_iou / included as f64,
        mean_accuracy: sum_acc / included as f64,
        mean_f1: sum_f1 / included as f64,
        evaluated_pixels: cm.total(),
    })
}

/// Aligned plain-text table: per-category IoU plus overall means.
pub fn format_table(report: &MetricsReport, class_names: &[String]) -> String {
    let mut out = String::new();
    let name_w = class_names
        .iter()
        .map(|n| n.len())
        .chain(["category".len()])
        .max()
        .unwrap_or(8);
    out.push_str(&format!("{:<name_w$}  {:>8}\n", "category", "IoU(%)"));
    for (c, name) in class_names.iter().enumerate() {
        let cell = match report.iou.get(c).copied().flatten() {
            Some(v) => format!("{:8.2}", v * 100.0),
            None => format!("{:>8}", "-"),
        };
        out.push_str(&format!("{name:<name_w$}  {cell}\n"));
    }
    out.push_str(&format!(
        "{:<name_w$}  {:8.2}\n{:<name_w$}  {:8.2}\n{:<name_w$}  {:8.2}\n",
        "mAcc",
        report.mean_accuracy * 100.0,
        "mF1",
        report.mean_f1 * 100.0,
        "mIoU",
        report.mean_iou * 100.0,
    ));
    out
}
