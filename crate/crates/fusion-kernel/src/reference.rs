//! Straight-line scalar implementations of every fusion operation,
//! written independently of the graph engine. They exist to cross-check
//! the graph path; clarity over speed throughout.

use crate::graph::{gelu, NORM_EPS};
use crate::ops::{AttnModule, PromptPair};
use crate::tensor::Tensor;
use crate::weights::KernelWeights;

fn conv2d(x: &Tensor, w: &Tensor, b: &Tensor, stride: usize, pad: usize) -> Tensor {
    let (cin, h, wd) = (x.shape[0], x.shape[1], x.shape[2]);
    let (cout, _, kh, kw) = (w.shape[0], w.shape[1], w.shape[2], w.shape[3]);
    let oh = (h + 2 * pad - kh) / stride + 1;
    let ow = (wd + 2 * pad - kw) / stride + 1;
    let mut out = Tensor::zeros(&[cout, oh, ow]);
    for co in 0..cout {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = b.data[co];
                for ci in 0..cin {
                    for ky in 0..kh {
                        for kx in 0..kw {
                            let iy = (oy * stride + ky) as isize - pad as isize;
                            let ix = (ox * stride + kx) as isize - pad as isize;
                            if iy < 0 || ix < 0 || iy >= h as isize || ix >= wd as isize {
                                continue;
                            }
                            acc += x.at3(ci, iy as usize, ix as usize)
                                * w.data[((co * cin + ci) * kh + ky) * kw + kx];
                        }
                    }
                }
                out.data[(co * oh + oy) * ow + ox] = acc;
            }
        }
    }
    out
}

fn map_gelu(x: &Tensor) -> Tensor {
    Tensor::from_vec(&x.shape, x.data.iter().map(|&v| gelu(v)).collect())
}

fn avg_pool2(x: &Tensor) -> Tensor {
    let (c, h, w) = (x.shape[0], x.shape[1], x.shape[2]);
    let mut out = Tensor::zeros(&[c, h / 2, w / 2]);
    for cc in 0..c {
        for y in 0..h / 2 {
            for xx in 0..w / 2 {
                let mut acc = 0.0;
                for dy in 0..2 {
                    for dx in 0..2 {
                        acc += x.at3(cc, 2 * y + dy, 2 * xx + dx);
                    }
                }
                out.data[(cc * (h / 2) + y) * (w / 2) + xx] = acc / 4.0;
            }
        }
    }
    out
}

fn softmax(row: &[f64]) -> Vec<f64> {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

fn norm_row(row: &[f64], gain: &[f64], bias: &[f64]) -> Vec<f64> {
    let n = row.len() as f64;
    let mean = row.iter().sum::<f64>() / n;
    let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let inv = 1.0 / (var + NORM_EPS).sqrt();
    row.iter()
        .enumerate()
        .map(|(j, v)| (v - mean) * inv * gain[j] + bias[j])
        .collect()
}

/// C x H x W -> rows of HW x C.
fn to_rows(x: &Tensor) -> Vec<Vec<f64>> {
    let (c, h, w) = (x.shape[0], x.shape[1], x.shape[2]);
    let mut rows = vec![vec![0.0; c]; h * w];
    for cc in 0..c {
        for p in 0..h * w {
            rows[p][cc] = x.data[cc * h * w + p];
        }
    }
    rows
}

fn rows_to_tensor3(rows: &[Vec<f64>], c: usize, h: usize, w: usize) -> Tensor {
    let mut out = Tensor::zeros(&[c, h, w]);
    for (p, row) in rows.iter().enumerate() {
        for cc in 0..c {
            out.data[cc * h * w + p] = row[cc];
        }
    }
    out
}

pub fn ffp(z1: &Tensor, z2: &Tensor, w: &KernelWeights) -> Tensor {
    let lat1 = conv2d(z1, w.get("g1_w"), w.get("g1_b"), 1, 0);
    let lat2 = conv2d(z2, w.get("g2_w"), w.get("g2_b"), 1, 0);
    let (lc, h, wd) = (lat1.shape[0], lat1.shape[1], lat1.shape[2]);
    let mut fused = Tensor::zeros(&[lc, h, wd]);
    for c in 0..lc {
        let row = &lat1.data[c * h * wd..(c + 1) * h * wd];
        let soft = softmax(row);
        for p in 0..h * wd {
            fused.data[c * h * wd + p] = row[p] * soft[p] + lat2.data[c * h * wd + p];
        }
    }
    conv2d(&fused, w.get("g3_w"), w.get("g3_b"), 1, 0)
}

pub fn feature_embed_1(rgb: &Tensor, w: &KernelWeights) -> Tensor {
    let conv = conv2d(rgb, w.get("fe1_w"), w.get("fe1_b"), 1, 1);
    avg_pool2(&avg_pool2(&map_gelu(&conv)))
}

pub fn feature_embed_2(onehot: &Tensor, w: &KernelWeights) -> Tensor {
    let norm3 = |x: &Tensor, prefix: &str| -> Tensor {
        let gain = &w.get(&format!("{prefix}_g")).data;
        let bias = &w.get(&format!("{prefix}_b")).data;
        let rows: Vec<Vec<f64>> = to_rows(x)
            .iter()
            .map(|row| norm_row(row, gain, bias))
            .collect();
        rows_to_tensor3(&rows, x.shape[0], x.shape[1], x.shape[2])
    };
    let d1 = conv2d(onehot, w.get("fe2_c1_w"), w.get("fe2_c1_b"), 2, 0);
    let a1 = map_gelu(&norm3(&d1, "fe2_n1"));
    let d2 = conv2d(&a1, w.get("fe2_c2_w"), w.get("fe2_c2_b"), 2, 0);
    let a2 = map_gelu(&norm3(&d2, "fe2_n2"));
    conv2d(&a2, w.get("fe2_c3_w"), w.get("fe2_c3_b"), 1, 0)
}

/// Linear over the last axis: rows x [in] . w [in, out] + b.
fn linear_rows(rows: &[Vec<f64>], w: &Tensor, b: &Tensor) -> Vec<Vec<f64>> {
    let (input, output) = (w.shape[0], w.shape[1]);
    rows.iter()
        .map(|row| {
            let mut out = b.data.clone();
            for (i, &v) in row.iter().enumerate().take(input) {
                for o in 0..output {
                    out[o] += v * w.data[i * output + o];
                }
            }
            out
        })
        .collect()
}

pub fn channel_split(x: &Tensor, w: &KernelWeights, slot: usize) -> (Tensor, Tensor) {
    let c = w.config.channels;
    let rows = to_rows(x);
    let lifted = linear_rows(
        &rows,
        w.get(&format!("split{slot}_w")),
        w.get(&format!("split{slot}_b")),
    );
    let m_rows: Vec<Vec<f64>> = lifted.iter().map(|r| r[..c].to_vec()).collect();
    let n_rows: Vec<Vec<f64>> = lifted.iter().map(|r| r[c..].to_vec()).collect();
    (
        rows_to_tensor3(&m_rows, c, x.shape[1], x.shape[2]),
        rows_to_tensor3(&n_rows, c, x.shape[1], x.shape[2]),
    )
}

/// Scaled dot-product attention over row sequences.
pub fn cross_attention_rows(
    q_rows: &[Vec<f64>],
    kv_rows: &[Vec<f64>],
    w: &KernelWeights,
    module: AttnModule,
) -> Vec<Vec<f64>> {
    let c = w.config.channels;
    let p = module.prefix();
    let q = linear_rows(q_rows, w.get(&format!("{p}_wq")), w.get(&format!("{p}_bq")));
    let k = linear_rows(kv_rows, w.get(&format!("{p}_wk")), w.get(&format!("{p}_bk")));
    let v = linear_rows(kv_rows, w.get(&format!("{p}_wv")), w.get(&format!("{p}_bv")));
    let scale = 1.0 / (c as f64).sqrt();
    q.iter()
        .map(|qrow| {
            let scores: Vec<f64> = k
                .iter()
                .map(|krow| qrow.iter().zip(krow).map(|(a, b)| a * b).sum::<f64>() * scale)
                .collect();
            let attn = softmax(&scores);
            let mut out = vec![0.0; c];
            for (j, vrow) in v.iter().enumerate() {
                for cc in 0..c {
                    out[cc] += attn[j] * vrow[cc];
                }
            }
            out
        })
        .collect()
}

pub fn cross_attention(
    q: &Tensor,
    kv: &Tensor,
    w: &KernelWeights,
    module: AttnModule,
) -> Tensor {
    let q_rows: Vec<Vec<f64>> = (0..q.shape[0])
        .map(|i| q.data[i * q.shape[1]..(i + 1) * q.shape[1]].to_vec())
        .collect();
    let kv_rows: Vec<Vec<f64>> = (0..kv.shape[0])
        .map(|i| kv.data[i * kv.shape[1]..(i + 1) * kv.shape[1]].to_vec())
        .collect();
    let out = cross_attention_rows(&q_rows, &kv_rows, w, module);
    Tensor::from_vec(
        &[q.shape[0], w.config.channels],
        out.into_iter().flatten().collect(),
    )
}

fn split_rows(x: &Tensor, w: &KernelWeights, slot: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let c = w.config.channels;
    let lifted = linear_rows(
        &to_rows(x),
        w.get(&format!("split{slot}_w")),
        w.get(&format!("split{slot}_b")),
    );
    (
        lifted.iter().map(|r| r[..c].to_vec()).collect(),
        lifted.iter().map(|r| r[c..].to_vec()).collect(),
    )
}

pub fn sfp(x1: &Tensor, x2: &Tensor, x3: &Tensor, w: &KernelWeights) -> PromptPair {
    let cfg = &w.config;
    let (c, h, wd, n) = (cfg.channels, cfg.feat_h, cfg.feat_w, cfg.sparse);
    let hw = h * wd;
    let (t1m, t1n) = split_rows(x1, w, 0);
    let (t2m, t2n) = split_rows(x2, w, 1);
    let (t3m, t3n) = split_rows(x3, w, 2);
    let v1 = cross_attention_rows(&t1m, &t3m, w, AttnModule::SfpForward);
    let v2 = cross_attention_rows(&t2m, &t3m, w, AttnModule::SfpForward);
    let u1 = cross_attention_rows(&t3n, &t1n, w, AttnModule::SfpBackward);
    let u2 = cross_attention_rows(&t3n, &t2n, w, AttnModule::SfpBackward);

    // sparse: Norm(Linear1(0.5 (v1 + u1) + DimTrans(x1)))
    let dim1 = to_rows(x1);
    let mut s_pre = vec![vec![0.0; c]; hw];
    for p in 0..hw {
        for cc in 0..c {
            s_pre[p][cc] = 0.5 * (v1[p][cc] + u1[p][cc]) + dim1[p][cc];
        }
    }
    let lin1w = w.get("lin1_w");
    let lin1b = w.get("lin1_b");
    let mut sparse = Tensor::zeros(&[n, c]);
    let ns_g = &w.get("norm_s_g").data;
    let ns_b = &w.get("norm_s_b").data;
    for i in 0..n {
        let mut row = vec![0.0; c];
        for p in 0..hw {
            let wv = lin1w.data[i * hw + p];
            for cc in 0..c {
                row[cc] += wv * s_pre[p][cc];
            }
        }
        for cc in 0..c {
            row[cc] += lin1b.data[i];
        }
        let normed = norm_row(&row, ns_g, ns_b);
        sparse.data[i * c..(i + 1) * c].copy_from_slice(&normed);
    }

    // dense: Norm(Linear2(Concat(v2, u2)) + DimTrans(x2))
    let cat: Vec<Vec<f64>> = (0..hw)
        .map(|p| {
            let mut row = v2[p].clone();
            row.extend_from_slice(&u2[p]);
            row
        })
        .collect();
    let mapped = linear_rows(&cat, w.get("lin2_w"), w.get("lin2_b"));
    let dim2 = to_rows(x2);
    let nd_g = &w.get("norm_d_g").data;
    let nd_b = &w.get("norm_d_b").data;
    let mut dense = Tensor::zeros(&[h, wd, c]);
    for p in 0..hw {
        let row: Vec<f64> = (0..c).map(|cc| mapped[p][cc] + dim2[p][cc]).collect();
        let normed = norm_row(&row, nd_g, nd_b);
        dense.data[p * c..(p + 1) * c].copy_from_slice(&normed);
    }
    PromptPair { sparse, dense }
}

pub fn sfp_progressive(
    f1: &Tensor,
    f2: &Tensor,
    f_fused: &Tensor,
    f_att: &Tensor,
    w: &KernelWeights,
) -> (PromptPair, PromptPair) {
    let add = |a: &Tensor, b: &Tensor| {
        Tensor::from_vec(
            &a.shape,
            a.data.iter().zip(&b.data).map(|(x, y)| x + y).collect(),
        )
    };
    let level1 = sfp(f1, f2, f_fused, w);
    let level2 = sfp(&add(f_fused, f1), &add(f_fused, f2), f_att, w);
    (level1, level2)
}

pub fn toy_encoder(p_f: &Tensor, z1: &Tensor, z2: &Tensor, w: &KernelWeights) -> Tensor {
    let (c, h, wd) = (p_f.shape[0], p_f.shape[1], p_f.shape[2]);
    let mut cat = Tensor::zeros(&[3 * c, h, wd]);
    cat.data[..c * h * wd].copy_from_slice(&p_f.data);
    cat.data[c * h * wd..2 * c * h * wd].copy_from_slice(&z1.data);
    cat.data[2 * c * h * wd..].copy_from_slice(&z2.data);
    let projected = conv2d(&cat, w.get("enc_proj_w"), w.get("enc_proj_b"), 1, 0);
    let mut rows = to_rows(&projected);
    for blk in 0..2 {
        let attn = cross_attention_rows(&rows, &rows, w, AttnModule::Encoder(blk));
        let gain = &w.get(&format!("enc{blk}_norm_g")).data;
        let bias = &w.get(&format!("enc{blk}_norm_b")).data;
        rows = rows
            .iter()
            .zip(&attn)
            .map(|(r, a)| {
                let resid: Vec<f64> = r.iter().zip(a).map(|(x, y)| x + y).collect();
                norm_row(&resid, gain, bias)
            })
            .collect();
    }
    rows_to_tensor3(&rows, c, h, wd)
}

pub fn minimal_decoder(
    f1: &Tensor,
    f2: &Tensor,
    f_fused: &Tensor,
    prompts: &PromptPair,
    w: &KernelWeights,
) -> (Tensor, Tensor) {
    let cfg = &w.config;
    let (c, h, wd, n) = (cfg.channels, cfg.feat_h, cfg.feat_w, cfg.sparse);
    let hw = h * wd;
    // image feature with the dense prompt added positionally
    let mut img_rows = vec![vec![0.0; c]; hw];
    for p in 0..hw {
        for cc in 0..c {
            img_rows[p][cc] = f1.data[cc * hw + p]
                + f2.data[cc * hw + p]
                + f_fused.data[cc * hw + p]
                + prompts.dense.data[p * c + cc];
        }
    }
    let sparse_rows: Vec<Vec<f64>> = (0..n)
        .map(|i| prompts.sparse.data[i * c..(i + 1) * c].to_vec())
        .collect();
    let tok_attn = cross_attention_rows(&sparse_rows, &img_rows, w, AttnModule::DecoderTokenToImage);
    let tng = &w.get("dec_tok_norm_g").data;
    let tnb = &w.get("dec_tok_norm_b").data;
    let tok: Vec<Vec<f64>> = sparse_rows
        .iter()
        .zip(&tok_attn)
        .map(|(s, a)| {
            let resid: Vec<f64> = s.iter().zip(a).map(|(x, y)| x + y).collect();
            norm_row(&resid, tng, tnb)
        })
        .collect();
    let img_attn = cross_attention_rows(&img_rows, &tok, w, AttnModule::DecoderImageToToken);
    let ing = &w.get("dec_img_norm_g").data;
    let inb = &w.get("dec_img_norm_b").data;
    let img2: Vec<Vec<f64>> = img_rows
        .iter()
        .zip(&img_attn)
        .map(|(x, a)| {
            let resid: Vec<f64> = x.iter().zip(a).map(|(v, y)| v + y).collect();
            norm_row(&resid, ing, inb)
        })
        .collect();
    let f_att = rows_to_tensor3(&img2, c, h, wd);
    // nearest 2x upsample, then token dot products
    let mut scores = Tensor::zeros(&[n, 2 * h, 2 * wd]);
    for i in 0..n {
        for y in 0..2 * h {
            for x in 0..2 * wd {
                let p = (y / 2) * wd + x / 2;
                let mut acc = 0.0;
                for cc in 0..c {
                    acc += tok[i][cc] * img2[p][cc];
                }
                scores.data[(i * 2 * h + y) * 2 * wd + x] = acc;
            }
        }
    }
    (scores, f_att)
}

pub fn ce_loss(pred: &Tensor, labels: &Tensor) -> f64 {
    let (n, k) = (pred.shape[0], pred.shape[1]);
    let mut total = 0.0;
    for i in 0..n {
        for c in 0..k {
            total -= labels.at2(i, c) * pred.at2(i, c).ln();
        }
    }
    total / n as f64
}

pub fn focal_loss(pred: &Tensor, labels: &Tensor, proportions: &[f64], gamma: f64) -> f64 {
    let (n, k) = (pred.shape[0], pred.shape[1]);
    let mut total = 0.0;
    for i in 0..n {
        for c in 0..k {
            let p = pred.at2(i, c);
            total -= (1.0 / proportions[c])
                * (1.0 - p).powf(gamma)
                * labels.at2(i, c)
                * p.ln();
        }
    }
    total / n as f64
}
