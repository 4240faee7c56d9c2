//! SPAN-quantile sub-classing.
//!
//! Within the odd and volume cluster groups, pixels are split into
//! `n_sub` equal-population tiers of SPAN. Tier boundaries snap to
//! sorted ranks, and runs of equal SPAN values collapse into the
//! lowest tier they touch, so the split depends only on the ordering
//! (invariant under strictly monotone transforms). Double-bounce stays
//! a single class; output class order is odd tiers, double, volume
//! tiers.

use polsar_core::label::{LabelRaster, INVALID_LABEL};
use polsar_core::SpanField;
use serde::{Deserialize, Serialize};

use crate::wishart::{ClusterModel, PrimaryType};
use crate::ClusterError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubclassInfo {
    pub primary: PrimaryType,
    /// SPAN tier, 0 = lowest power. `None` for the single double class.
    pub tier: Option<u8>,
}

/// Class layout of a sub-classed label raster.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubclassLayout {
    pub classes: Vec<SubclassInfo>,
}

impl SubclassLayout {
    pub fn new(n_sub: usize) -> Self {
        let mut classes = Vec::with_capacity(2 * n_sub + 1);
        for tier in 0..n_sub {
            classes.push(SubclassInfo {
                primary: PrimaryType::Odd,
                tier: Some(tier as u8),
            });
        }
        classes.push(SubclassInfo {
            primary: PrimaryType::Double,
            tier: None,
        });
        for tier in 0..n_sub {
            classes.push(SubclassInfo {
                primary: PrimaryType::Volume,
                tier: Some(tier as u8),
            });
        }
        SubclassLayout { classes }
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }
}

/// Tier thresholds: values at sorted ranks j*n/n_sub - 1. A pixel's
/// tier counts how many thresholds its value strictly exceeds.
fn tier_thresholds(sorted: &[f64], n_sub: usize) -> Vec<f64> {
    let n = sorted.len();
    let mut thresholds = Vec::with_capacity(n_sub - 1);
    for j in 1..n_sub {
        let b = j * n / n_sub;
        if b >= 1 {
            thresholds.push(sorted[b - 1]);
        }
    }
    thresholds
}

fn tier_of(value: f64, thresholds: &[f64]) -> u8 {
    thresholds.iter().filter(|&&t| value > t).count() as u8
}

/// Expand primary-typed cluster labels into SPAN tiers.
pub fn subclass_by_span(
    labels: &LabelRaster,
    model: &ClusterModel,
    span: &SpanField,
    n_sub: usize,
) -> Result<(LabelRaster, SubclassLayout), ClusterError> {
    if n_sub < 1 {
        return Err(ClusterError::BadSubclassCount(n_sub));
    }
    if span.width != labels.width || span.height != labels.height {
        return Err(ClusterError::DimensionMismatch(
            "span raster does not match labels".into(),
        ));
    }
    if model.primary.iter().any(|p| p.is_none()) {
        return Err(ClusterError::MissingPrimaryTypes);
    }

    let layout = SubclassLayout::new(n_sub);
    let n = labels.len();
    let primary_of = |pixel: usize| -> Option<PrimaryType> {
        if !labels.validity[pixel] {
            return None;
        }
        model.primary[labels.label[pixel] as usize]
    };

    // pool SPAN values per primary group
    let mut odd_spans = Vec::new();
    let mut vol_spans = Vec::new();
    for i in 0..n {
        match primary_of(i) {
            Some(PrimaryType::Odd) => odd_spans.push(span.span[i]),
            Some(PrimaryType::Volume) => vol_spans.push(span.span[i]),
            _ => {}
        }
    }
    odd_spans.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vol_spans.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let odd_thresholds = if odd_spans.is_empty() {
        Vec::new()
    } else {
        tier_thresholds(&odd_spans, n_sub)
    };
    let vol_thresholds = if vol_spans.is_empty() {
        Vec::new()
    } else {
        tier_thresholds(&vol_spans, n_sub)
    };

    let double_class = n_sub as u8;
    let volume_base = n_sub as u8 + 1;
    let mut label = vec![INVALID_LABEL; n];
    let mut validity = vec![false; n];
    for i in 0..n {
        match primary_of(i) {
            Some(PrimaryType::Odd) => {
                label[i] = tier_of(span.span[i], &odd_thresholds);
                validity[i] = true;
            }
            Some(PrimaryType::Double) => {
                label[i] = double_class;
                validity[i] = true;
            }
            Some(PrimaryType::Volume) => {
                label[i] = volume_base + tier_of(span.span[i], &vol_thresholds);
                validity[i] = true;
            }
            None => {}
        }
    }

    let raster = LabelRaster {
        width: labels.width,
        height: labels.height,
        label,
        validity,
        classes: layout.class_count() as u8,
    };
    Ok((raster, layout))
}
