//! Prompt-embedding visualization: the dense prompt averaged along the
//! channel dimension, and per-sparse-index class-aware maps from the
//! sparse-dense product.

use crate::ops::PromptPair;
use crate::tensor::Tensor;
use crate::FusionError;

#[derive(Clone, Debug)]
pub struct PromptVisuals {
    /// Channel mean of P_D, H x W.
    pub dense_mean: Tensor,
    /// Channel mean of P_S[i] (x) P_D per sparse index, each H x W.
    pub class_maps: Vec<Tensor>,
}

pub fn visualize_prompts(prompts: &PromptPair) -> Result<PromptVisuals, FusionError> {
    let d = &prompts.dense;
    if d.rank() != 3 {
        return Err(FusionError::ShapeMismatch(format!(
            "dense prompt must be H x W x C, got {:?}",
            d.shape
        )));
    }
    let (h, w, c) = (d.shape[0], d.shape[1], d.shape[2]);
    if prompts.sparse.rank() != 2 || prompts.sparse.shape[1] != c {
        return Err(FusionError::ShapeMismatch(format!(
            "sparse prompt must be N x {c}, got {:?}",
            prompts.sparse.shape
        )));
    }
    let n = prompts.sparse.shape[0];

    let mut dense_mean = Tensor::zeros(&[h, w]);
    for p in 0..h * w {
        let row = &d.data[p * c..(p + 1) * c];
        dense_mean.data[p] = row.iter().sum::<f64>() / c as f64;
    }

    let mut class_maps = Vec::with_capacity(n);
    for i in 0..n {
        let s_row = &prompts.sparse.data[i * c..(i + 1) * c];
        let mut map = Tensor::zeros(&[h, w]);
        for p in 0..h * w {
            let d_row = &d.data[p * c..(p + 1) * c];
            map.data[p] = s_row
                .iter()
                .zip(d_row)
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / c as f64;
        }
        class_maps.push(map);
    }
    Ok(PromptVisuals {
        dense_mean,
        class_maps,
    })
}

/// Min-max normalization to [0, 1] for rendering; constant maps come
/// out as zeros.
pub fn normalize_unit(map: &Tensor) -> Tensor {
    let min = map.data.iter().copied().fold(f64::INFINITY, f64::min);
    let max = map.data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max - min).is_normal() || max <= min {
        return Tensor::zeros(&map.shape);
    }
    Tensor::from_vec(
        &map.shape,
        map.data.iter().map(|v| (v - min) / (max - min)).collect(),
    )
}

/// 8-bit grayscale quantization of a [0, 1] map.
pub fn to_gray_bytes(map: &Tensor) -> Vec<u8> {
    map.data
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect()
}
