//! Segmentation losses over per-pixel class probabilities.
//!
//! Cross-entropy: L = -(1/n) sum_i sum_c y_ic log(p_ic)
//! Focal:         L = -(1/n) sum_i sum_c w_c (1 - p_ic)^gamma y_ic log(p_ic)
//! with w_c the inverse of the class proportion. Reduction is the mean
//! over samples in both cases.

use crate::graph::{Graph, NodeId};
use crate::tensor::Tensor;
use crate::FusionError;

pub const ROW_SUM_TOL: f64 = 1e-6;

fn validate_pred(pred: &Tensor, labels: &Tensor) -> Result<(), FusionError> {
    if pred.rank() != 2 || pred.shape != labels.shape {
        return Err(FusionError::ShapeMismatch(format!(
            "loss inputs: pred {:?} vs labels {:?}",
            pred.shape, labels.shape
        )));
    }
    let (n, k) = (pred.shape[0], pred.shape[1]);
    for i in 0..n {
        let row = &pred.data[i * k..(i + 1) * k];
        if row.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
            return Err(FusionError::BadProbabilities(format!(
                "sample {i} carries probabilities outside (0, 1]"
            )));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(FusionError::BadProbabilities(format!(
                "sample {i} probabilities sum to {sum}"
            )));
        }
    }
    Ok(())
}

pub fn ce_loss_g(
    g: &mut Graph,
    pred: NodeId,
    labels: &Tensor,
) -> Result<NodeId, FusionError> {
    let n = g.shape(pred)[0];
    let y = g.constant(labels.clone());
    let logp = g.log(pred);
    let picked = g.mul(logp, y);
    let total = g.sum_all(picked);
    Ok(g.affine(total, -1.0 / n as f64, 0.0))
}

/// Cross-entropy over probability rows (mean over samples).
pub fn ce_loss(pred: &Tensor, labels: &Tensor) -> Result<f64, FusionError> {
    validate_pred(pred, labels)?;
    let mut g = Graph::new();
    let p = g.leaf(pred.clone(), false);
    let l = ce_loss_g(&mut g, p, labels)?;
    Ok(g.value(l).data[0])
}

pub fn focal_loss_g(
    g: &mut Graph,
    pred: NodeId,
    labels: &Tensor,
    proportions: &[f64],
    gamma: f64,
) -> Result<NodeId, FusionError> {
    let (n, k) = (g.shape(pred)[0], g.shape(pred)[1]);
    // class weights w_c = 1 / p_c broadcast over rows
    let mut weight_rows = vec![0.0; n * k];
    for i in 0..n {
        for c in 0..k {
            weight_rows[i * k + c] = 1.0 / proportions[c];
        }
    }
    let w = g.constant(Tensor::from_vec(&[n, k], weight_rows));
    let y = g.constant(labels.clone());
    let one_minus = g.affine(pred, -1.0, 1.0);
    let focus = g.pow_const(one_minus, gamma);
    let logp = g.log(pred);
    let picked = g.mul(logp, y);
    let focused = g.mul(picked, focus);
    let weighted = g.mul(focused, w);
    let total = g.sum_all(weighted);
    Ok(g.affine(total, -1.0 / n as f64, 0.0))
}

/// Class-weighted focal loss; weights are the inverse dataset
/// proportions.
pub fn focal_loss(
    pred: &Tensor,
    labels: &Tensor,
    proportions: &[f64],
    gamma: f64,
) -> Result<f64, FusionError> {
    validate_pred(pred, labels)?;
    let k = pred.shape[1];
    if proportions.len() != k {
        return Err(FusionError::ShapeMismatch(format!(
            "{} proportions for {k} classes",
            proportions.len()
        )));
    }
    if proportions.iter().any(|&p| p <= 0.0) {
        return Err(FusionError::BadProbabilities(
            "class proportions must be positive".into(),
        ));
    }
    let sum: f64 = proportions.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOL {
        return Err(FusionError::BadProbabilities(format!(
            "class proportions sum to {sum}"
        )));
    }
    if gamma < 0.0 {
        return Err(FusionError::BadConfig(format!(
            "gamma must be >= 0, got {gamma}"
        )));
    }
    let mut g = Graph::new();
    let p = g.leaf(pred.clone(), false);
    let l = focal_loss_g(&mut g, p, labels, proportions, gamma)?;
    Ok(g.value(l).data[0])
}
