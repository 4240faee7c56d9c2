//! Stage 4: run the full fusion chain on one pseudo-color / MVD tile
//! pair and write the prompt visualizations and score maps.
//!
//! Chain: embeddings -> feature-level fusion prompt -> toy encoder ->
//! SFP level 1 -> decoder attention (F_att) -> SFP level 2 -> decoder
//! score maps.

use std::fs;
use std::path::Path;

use fusion_kernel::{
    feature_embed_1, feature_embed_2, ffp, minimal_decoder, normalize_unit, sfp, sfp_progressive,
    to_gray_bytes, toy_encoder, visualize_prompts, KernelConfig, KernelWeights, Tensor,
};
use mvd_codec::{one_hot, read_mvd1};
use polsar_core::pngio::{read_rgb_png, write_gray_png};

use crate::config::PipelineConfig;
use crate::error::CliError;

pub fn run(config: &PipelineConfig, pseudo: &Path, mvd_path: &Path) -> Result<(), CliError> {
    let seed = config.require_seed()?;
    let rgb = read_rgb_png(pseudo)?;
    let mvd = read_mvd1(mvd_path)?;
    if rgb.width != mvd.width || rgb.height != mvd.height {
        return Err(CliError::Validation(format!(
            "misaligned pair: pseudo {}x{} vs MVD {}x{}",
            rgb.width, rgb.height, mvd.width, mvd.height
        )));
    }
    let side = 4 * config.feat;
    if rgb.width < side || rgb.height < side {
        return Err(CliError::Validation(format!(
            "tile must be at least {side}x{side} for feat = {}, got {}x{}",
            config.feat, rgb.width, rgb.height
        )));
    }

    // top-left crop, photographic bytes scaled to [0, 1]
    let mut rgb_tensor = Tensor::zeros(&[3, side, side]);
    for c in 0..3 {
        for y in 0..side {
            for x in 0..side {
                rgb_tensor.data[(c * side + y) * side + x] =
                    rgb.data[(y * rgb.width + x) * 3 + c] as f64 / 255.0;
            }
        }
    }
    let oh = one_hot(&mvd);
    let classes = oh.classes;
    let mut onehot_tensor = Tensor::zeros(&[classes, side, side]);
    for c in 0..classes {
        let channel = oh.channel(c);
        for y in 0..side {
            for x in 0..side {
                onehot_tensor.data[(c * side + y) * side + x] =
                    channel[y * mvd.width + x] as f64;
            }
        }
    }

    let kernel_config = KernelConfig {
        channels: config.channels,
        sparse: config.sparse,
        mvd_classes: classes,
        feat_h: config.feat,
        feat_w: config.feat,
    };
    let weights = KernelWeights::seeded(kernel_config, seed)?;

    let f1 = feature_embed_1(&rgb_tensor, &weights)?;
    let f2 = feature_embed_2(&onehot_tensor, &weights)?;
    let p_f = ffp(&f1, &f2, &weights)?;
    let f_fused = toy_encoder(&p_f, &f1, &f2, &weights)?;
    // level 1 prompts drive the decoder attention that produces F_att
    let level1 = sfp(&f1, &f2, &f_fused, &weights)?;
    let (_scores1, f_att) = minimal_decoder(&f1, &f2, &f_fused, &level1, &weights)?;
    let (_, level2) = sfp_progressive(&f1, &f2, &f_fused, &f_att, &weights)?;
    let (scores, _) = minimal_decoder(&f1, &f2, &f_fused, &level2, &weights)?;

    fs::create_dir_all(&config.out)?;
    let visuals = visualize_prompts(&level2)?;
    let vd = normalize_unit(&visuals.dense_mean);
    write_gray_png(
        &config.out.join("vd.png"),
        config.feat,
        config.feat,
        &to_gray_bytes(&vd),
    )?;
    for (i, map) in visuals.class_maps.iter().enumerate() {
        let normed = normalize_unit(map);
        write_gray_png(
            &config.out.join(format!("vsd_{i:02}.png")),
            config.feat,
            config.feat,
            &to_gray_bytes(&normed),
        )?;
    }
    let (n, sh, sw) = (scores.shape[0], scores.shape[1], scores.shape[2]);
    for i in 0..n {
        let map = Tensor::from_vec(
            &[sh, sw],
            scores.data[i * sh * sw..(i + 1) * sh * sw].to_vec(),
        );
        let normed = normalize_unit(&map);
        write_gray_png(
            &config.out.join(format!("score_{i:02}.png")),
            sw,
            sh,
            &to_gray_bytes(&normed),
        )?;
    }
    weights.save(&config.out.join("weights"))?;

    println!(
        "fuse-demo: {n} sparse prompts, feature {}x{}, seed {seed} -> {}",
        config.feat,
        config.feat,
        config.out.display()
    );
    Ok(())
}
