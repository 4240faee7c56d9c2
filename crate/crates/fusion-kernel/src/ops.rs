//! Fusion operations, built as graph fragments so forward evaluation
//! and gradient checking share one definition.
//!
//! Feature-level fusion prompt:
//!   P_F = g3( g1(z1) (x) Softmax(g1(z1)) + g2(z2) )
//! with the softmax taken across spatial positions per channel.
//!
//! Semantic-level fusion prompt: each input is channel-split into two
//! groups through a C -> 2C linear; two cross-attention modules with
//! query and value exchanged produce v1, v2 (single-input features
//! attended by fusion information) and u1, u2 (fusion features
//! enhanced by single-input features); then
//!   P_S = Norm(Linear1(0.5 (v1 + u1) + DimTrans(x1)))   (N x C)
//!   P_D = Norm(Linear2(Concat(v2, u2)) + DimTrans(x2))  (H x W x C)
//! where DimTrans reshapes C x H x W to HW x C, Linear1 maps the HW
//! axis to N, and Linear2 maps 2C to C.

use crate::graph::{Graph, NodeId};
use crate::tensor::Tensor;
use crate::weights::{Binder, KernelWeights};
use crate::FusionError;

/// Sparse (N x C) and dense (H x W x C) prompt embeddings.
#[derive(Clone, Debug, PartialEq)]
pub struct PromptPair {
    pub sparse: Tensor,
    pub dense: Tensor,
}

/// (sparse, dense) node pair for one SFP level.
pub type PromptNodes = (NodeId, NodeId);

/// C x H x W -> HW x C (DimTrans).
pub(crate) fn to_seq(g: &mut Graph, x: NodeId) -> NodeId {
    let shape = g.shape(x).to_vec();
    let (c, h, w) = (shape[0], shape[1], shape[2]);
    let flat = g.reshape(x, &[c, h * w]);
    g.transpose(flat)
}

/// HW x C -> C x H x W.
pub(crate) fn from_seq(g: &mut Graph, x: NodeId, h: usize, w: usize) -> NodeId {
    let c = g.shape(x)[1];
    let t = g.transpose(x);
    g.reshape(t, &[c, h, w])
}

// ---------------------------------------------------------------- FFP

pub fn ffp_g(
    g: &mut Graph,
    b: &mut Binder,
    z1: NodeId,
    z2: NodeId,
) -> Result<NodeId, FusionError> {
    let shape = g.shape(z1).to_vec();
    if g.shape(z2) != shape.as_slice() {
        return Err(FusionError::ShapeMismatch(format!(
            "ffp inputs differ: {:?} vs {:?}",
            shape,
            g.shape(z2)
        )));
    }
    let (h, w) = (shape[1], shape[2]);
    let g1w = b.param(g, "g1_w");
    let g1b = b.param(g, "g1_b");
    let g2w = b.param(g, "g2_w");
    let g2b = b.param(g, "g2_b");
    let g3w = b.param(g, "g3_w");
    let g3b = b.param(g, "g3_b");

    let lat1 = g.conv2d(z1, g1w, g1b, 1, 0);
    let lat = g.shape(lat1)[0];
    let lat1_rows = g.reshape(lat1, &[lat, h * w]);
    let soft = g.softmax_rows(lat1_rows);
    let weighted = g.mul(lat1_rows, soft);
    let weighted3 = g.reshape(weighted, &[lat, h, w]);
    let lat2 = g.conv2d(z2, g2w, g2b, 1, 0);
    let fused = g.add(weighted3, lat2);
    Ok(g.conv2d(fused, g3w, g3b, 1, 0))
}

/// Feature-level fusion prompt P_F.
pub fn ffp(z1: &Tensor, z2: &Tensor, w: &KernelWeights) -> Result<Tensor, FusionError> {
    let mut g = Graph::new();
    let mut b = Binder::new(w, false);
    let z1n = g.leaf(z1.clone(), false);
    let z2n = g.leaf(z2.clone(), false);
    let out = ffp_g(&mut g, &mut b, z1n, z2n)?;
    Ok(g.value(out).clone())
}

/// The spatial softmax map inside FFP (one row per latent channel,
/// rows sum to one), exposed for normalization checks.
pub fn ffp_softmax(z1: &Tensor, w: &KernelWeights) -> Result<Tensor, FusionError> {
    let mut g = Graph::new();
    let mut b = Binder::new(w, false);
    let z1n = g.leaf(z1.clone(), false);
    let shape = z1.shape.clone();
    let g1w = b.param(&mut g, "g1_w");
    let g1b = b.param(&mut g, "g1_b");
    let lat1 = g.conv2d(z1n, g1w, g1b, 1, 0);
    let lat = g.shape(lat1)[0];
    let rows = g.reshape(lat1, &[lat, shape[1] * shape[2]]);
    let soft = g.softmax_rows(rows);
    Ok(g.value(soft).clone())
}

// ----------------------------------------------------- feature embeds

pub fn feature_embed_1_g(
    g: &mut Graph,
    b: &mut Binder,
    rgb: NodeId,
) -> Result<NodeId, FusionError> {
    let shape = g.shape(rgb).to_vec();
    if shape.len() != 3 || shape[0] != 3 {
        return Err(FusionError::ShapeMismatch(format!(
            "feature_embed_1 expects 3 x H x W, got {shape:?}"
        )));
    }
    if !shape[1].is_multiple_of(4) || !shape[2].is_multiple_of(4) {
        return Err(FusionError::ShapeMismatch(format!(
            "feature_embed_1 dims must divide by 4, got {}x{}",
            shape[1], shape[2]
        )));
    }
    let w = b.param(g, "fe1_w");
    let bias = b.param(g, "fe1_b");
    let conv = g.conv2d(rgb, w, bias, 1, 1);
    let act = g.gelu(conv);
    let p1 = g.avg_pool2(act);
    Ok(g.avg_pool2(p1))
}

/// F_1: one 3x3 convolution + nonlinearity, then two 2x2 average
/// poolings (spatial / 4, channels -> C).
pub fn feature_embed_1(rgb: &Tensor, w: &KernelWeights) -> Result<Tensor, FusionError> {
    let mut g = Graph::new();
    let mut b = Binder::new(w, false);
    let x = g.leaf(rgb.clone(), false);
    let out = feature_embed_1_g(&mut g, &mut b, x)?;
    Ok(g.value(out).clone())
}

pub fn feature_embed_2_g(
    g: &mut Graph,
    b: &mut Binder,
    onehot: NodeId,
) -> Result<NodeId, FusionError> {
    let shape = g.shape(onehot).to_vec();
    let cm = b.config().mvd_classes;
    if shape.len() != 3 || shape[0] != cm {
        return Err(FusionError::ShapeMismatch(format!(
            "feature_embed_2 expects {cm} x H x W, got {shape:?}"
        )));
    }
    if !shape[1].is_multiple_of(4) || !shape[2].is_multiple_of(4) {
        return Err(FusionError::ShapeMismatch(format!(
            "feature_embed_2 dims must divide by 4, got {}x{}",
            shape[1], shape[2]
        )));
    }
    let norm_3d = |g: &mut Graph, b: &mut Binder, x: NodeId, prefix: &str| {
        let s = g.shape(x).to_vec();
        let seq = to_seq(g, x);
        let gain = b.param(g, format!("{prefix}_g").as_str());
        let bias = b.param(g, format!("{prefix}_b").as_str());
        let normed = g.norm_rows(seq, gain, bias);
        from_seq(g, normed, s[1], s[2])
    };
    let c1w = b.param(g, "fe2_c1_w");
    let c1b = b.param(g, "fe2_c1_b");
    let down1 = g.conv2d(onehot, c1w, c1b, 2, 0);
    let n1 = norm_3d(g, b, down1, "fe2_n1");
    let a1 = g.gelu(n1);
    let c2w = b.param(g, "fe2_c2_w");
    let c2b = b.param(g, "fe2_c2_b");
    let down2 = g.conv2d(a1, c2w, c2b, 2, 0);
    let n2 = norm_3d(g, b, down2, "fe2_n2");
    let a2 = g.gelu(n2);
    let c3w = b.param(g, "fe2_c3_w");
    let c3b = b.param(g, "fe2_c3_b");
    Ok(g.conv2d(a2, c3w, c3b, 1, 0))
}

/// F_2: three convolutions (two stride-2 downsamples with intermediate
/// normalization + nonlinearity, then a 1x1 projection to C), spatial
/// / 4 to match F_1 and F_fused.
pub fn feature_embed_2(onehot: &Tensor, w: &KernelWeights) -> Result<Tensor, FusionError> {
    let mut g = Graph::new();
    let mut b = Binder::new(w, false);
    let x = g.leaf(onehot.clone(), false);
    let out = feature_embed_2_g(&mut g, &mut b, x)?;
    Ok(g.value(out).clone())
}

// ----------------------------------------------------- channel split

/// Split in sequence form: x (C x H x W) -> two HW x C halves.
pub(crate) fn split_seq_g(
    g: &mut Graph,
    b: &mut Binder,
    x: NodeId,
    slot: usize,
) -> Result<(NodeId, NodeId), FusionError> {
    let c = b.config().channels;
    let shape = g.shape(x).to_vec();
    if shape.len() != 3 || shape[0] != c {
        return Err(FusionError::ShapeMismatch(format!(
            "channel_split expects {c} x H x W, got {shape:?}"
        )));
    }
    let w = b.param(g, &format!("split{slot}_w"));
    let bias = b.param(g, &format!("split{slot}_b"));
    let seq = to_seq(g, x);
    let lifted = g.matmul(seq, w);
    let biased = g.add_row_vec(lifted, bias);
    let m = g.slice_last(biased, 0, c);
    let n = g.slice_last(biased, c, c);
    Ok((m, n))
}

/// Channel feature split: a C -> 2C linear per position, halves
/// returned as C x H x W tensors.
pub fn channel_split(
    x: &Tensor,
    w: &KernelWeights,
    slot: usize,
) -> Result<(Tensor, Tensor), FusionError> {
    if slot >= 3 {
        return Err(FusionError::BadConfig(format!(
            "channel_split slot must be 0..3, got {slot}"
        )));
    }
    let mut g = Graph::new();
    let mut b = Binder::new(w, false);
    let xn = g.leaf(x.clone(), false);
    let (m, n) = split_seq_g(&mut g, &mut b, xn, slot)?;
    let (h, wd) = (x.shape[1], x.shape[2]);
    let m3 = from_seq(&mut g, m, h, wd);
    let n3 = from_seq(&mut g, n, h, wd);
    Ok((g.value(m3).clone(), g.value(n3).clone()))
}

// ---------------------------------------------------- cross-attention

/// Attention module selector; each carries its own projections.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AttnModule {
    /// v-direction of SFP (single-input queries, fused values).
    SfpForward,
    /// u-direction of SFP (fused queries, single-input values).
    SfpBackward,
    Encoder(usize),
    DecoderTokenToImage,
    DecoderImageToToken,
}

impl AttnModule {
    pub(crate) fn prefix(&self) -> String {
        match self {
            AttnModule::SfpForward => "attn_m".into(),
            AttnModule::SfpBackward => "attn_n".into(),
            AttnModule::Encoder(i) => format!("enc{i}"),
            AttnModule::DecoderTokenToImage => "dec_t2i".into(),
            AttnModule::DecoderImageToToken => "dec_i2t".into(),
        }
    }
}

/// Scaled dot-product attention with learned Q/K/V projections.
/// Returns (output, attention rows) node ids.
pub(crate) fn attention_g(
    g: &mut Graph,
    b: &mut Binder,
    q_seq: NodeId,
    kv_seq: NodeId,
    module: AttnModule,
) -> Result<(NodeId, NodeId), FusionError> {
    let c = b.config().channels;
    if g.shape(q_seq).len() != 2 || g.shape(q_seq)[1] != c {
        return Err(FusionError::ShapeMismatch(format!(
            "attention query must be S x {c}, got {:?}",
            g.shape(q_seq)
        )));
    }
    if g.shape(kv_seq).len() != 2 || g.shape(kv_seq)[1] != c {
        return Err(FusionError::ShapeMismatch(format!(
            "attention key/value must be S x {c}, got {:?}",
            g.shape(kv_seq)
        )));
    }
    let p = module.prefix();
    let wq = b.param(g, &format!("{p}_wq"));
    let bq = b.param(g, &format!("{p}_bq"));
    let wk = b.param(g, &format!("{p}_wk"));
    let bk = b.param(g, &format!("{p}_bk"));
    let wv = b.param(g, &format!("{p}_wv"));
    let bv = b.param(g, &format!("{p}_bv"));
    let q0 = g.matmul(q_seq, wq);
    let q = g.add_row_vec(q0, bq);
    let k0 = g.matmul(kv_seq, wk);
    let k = g.add_row_vec(k0, bk);
    let v0 = g.matmul(kv_seq, wv);
    let v = g.add_row_vec(v0, bv);
    let kt = g.transpose(k);
    let scores0 = g.matmul(q, kt);
    let scores = g.affine(scores0, 1.0 / (c as f64).sqrt(), 0.0);
    let attn = g.softmax_rows(scores);
    let out = g.matmul(attn, v);
    Ok((out, attn))
}

/// Cross-attention between two token sequences (S1 x C, S2 x C).
pub fn cross_attention(
    q: &Tensor,
    kv: &Tensor,
    w: &KernelWeights,
    module: AttnModule,
) -> Result<Tensor, FusionError> {
    Ok(cross_attention_with_attn(q, kv, w, module)?.0)
}

/// Same, also returning the attention rows (each summing to one).
pub fn cross_attention_with_attn(
    q: &Tensor,
    kv: &Tensor,
    w: &KernelWeights,
    module: AttnModule,
) -> Result<(Tensor, Tensor), FusionError> {
    let mut g = Graph::new();
    let mut b = Binder::new(w, false);
    let qn = g.leaf(q.clone(), false);
    let kvn = g.leaf(kv.clone(), false);
    let (out, attn) = attention_g(&mut g, &mut b, qn, kvn, module)?;
    Ok((g.value(out).clone(), g.value(attn).clone()))
}

// ---------------------------------------------------------------- SFP

pub fn sfp_g(
    g: &mut Graph,
    b: &mut Binder,
    x1: NodeId,
    x2: NodeId,
    x3: NodeId,
) -> Result<(NodeId, NodeId), FusionError> {
    let cfg = *b.config();
    let expected = vec![cfg.channels, cfg.feat_h, cfg.feat_w];
    for (name, id) in [("x1", x1), ("x2", x2), ("x3", x3)] {
        if g.shape(id) != expected.as_slice() {
            return Err(FusionError::ShapeMismatch(format!(
                "sfp {name}: expected {expected:?}, got {:?}",
                g.shape(id)
            )));
        }
    }
    let (t1m, t1n) = split_seq_g(g, b, x1, 0)?;
    let (t2m, t2n) = split_seq_g(g, b, x2, 1)?;
    let (t3m, t3n) = split_seq_g(g, b, x3, 2)?;

    // v: single-input queries attend over the fused group;
    // u: fused queries attend over the single-input groups
    let (v1, _) = attention_g(g, b, t1m, t3m, AttnModule::SfpForward)?;
    let (v2, _) = attention_g(g, b, t2m, t3m, AttnModule::SfpForward)?;
    let (u1, _) = attention_g(g, b, t3n, t1n, AttnModule::SfpBackward)?;
    let (u2, _) = attention_g(g, b, t3n, t2n, AttnModule::SfpBackward)?;

    // sparse prompt
    let vu = g.add(v1, u1);
    let half = g.affine(vu, 0.5, 0.0);
    let dim1 = to_seq(g, x1);
    let s_pre = g.add(half, dim1);
    let lin1w = b.param(g, "lin1_w");
    let lin1b = b.param(g, "lin1_b");
    let s_mapped = g.matmul(lin1w, s_pre);
    let s_biased = g.add_col_vec(s_mapped, lin1b);
    let ns_g = b.param(g, "norm_s_g");
    let ns_b = b.param(g, "norm_s_b");
    let p_s = g.norm_rows(s_biased, ns_g, ns_b);

    // dense prompt
    let cat = g.concat_last(v2, u2);
    let lin2w = b.param(g, "lin2_w");
    let lin2b = b.param(g, "lin2_b");
    let d_mapped = g.matmul(cat, lin2w);
    let d_biased = g.add_row_vec(d_mapped, lin2b);
    let dim2 = to_seq(g, x2);
    let d_pre = g.add(d_biased, dim2);
    let nd_g = b.param(g, "norm_d_g");
    let nd_b = b.param(g, "norm_d_b");
    let p_d_rows = g.norm_rows(d_pre, nd_g, nd_b);
    let p_d = g.reshape(p_d_rows, &[cfg.feat_h, cfg.feat_w, cfg.channels]);
    Ok((p_s, p_d))
}

/// One SFP level: sparse (N x C) and dense (H x W x C) prompts from
/// three aligned inputs.
pub fn sfp(
    x1: &Tensor,
    x2: &Tensor,
    x3: &Tensor,
    w: &KernelWeights,
) -> Result<PromptPair, FusionError> {
    let mut g = Graph::new();
    let mut b = Binder::new(w, false);
    let n1 = g.leaf(x1.clone(), false);
    let n2 = g.leaf(x2.clone(), false);
    let n3 = g.leaf(x3.clone(), false);
    let (ps, pd) = sfp_g(&mut g, &mut b, n1, n2, n3)?;
    Ok(PromptPair {
        sparse: g.value(ps).clone(),
        dense: g.value(pd).clone(),
    })
}

pub fn sfp_progressive_g(
    g: &mut Graph,
    b: &mut Binder,
    f1: NodeId,
    f2: NodeId,
    f_fused: NodeId,
    f_att: NodeId,
) -> Result<(PromptNodes, PromptNodes), FusionError> {
    let level1 = sfp_g(g, b, f1, f2, f_fused)?;
    let x1 = g.add(f_fused, f1);
    let x2 = g.add(f_fused, f2);
    let level2 = sfp_g(g, b, x1, x2, f_att)?;
    Ok((level1, level2))
}

/// Both SFP levels through one shared weight set: level 1 on
/// (F1, F2, F_fused), level 2 on (F_fused + F1, F_fused + F2, F_att).
pub fn sfp_progressive(
    f1: &Tensor,
    f2: &Tensor,
    f_fused: &Tensor,
    f_att: &Tensor,
    w: &KernelWeights,
) -> Result<(PromptPair, PromptPair), FusionError> {
    let mut g = Graph::new();
    let mut b = Binder::new(w, false);
    let n1 = g.leaf(f1.clone(), false);
    let n2 = g.leaf(f2.clone(), false);
    let nf = g.leaf(f_fused.clone(), false);
    let na = g.leaf(f_att.clone(), false);
    let ((s1, d1), (s2, d2)) = sfp_progressive_g(&mut g, &mut b, n1, n2, nf, na)?;
    Ok((
        PromptPair {
            sparse: g.value(s1).clone(),
            dense: g.value(d1).clone(),
        },
        PromptPair {
            sparse: g.value(s2).clone(),
            dense: g.value(d2).clone(),
        },
    ))
}

// -------------------------------------------------------- toy encoder

pub fn toy_encoder_g(
    g: &mut Graph,
    b: &mut Binder,
    p_f: NodeId,
    z1: NodeId,
    z2: NodeId,
) -> Result<NodeId, FusionError> {
    let shape = g.shape(p_f).to_vec();
    for (name, id) in [("z1", z1), ("z2", z2)] {
        if g.shape(id) != shape.as_slice() {
            return Err(FusionError::ShapeMismatch(format!(
                "toy_encoder {name}: expected {shape:?}, got {:?}",
                g.shape(id)
            )));
        }
    }
    let (h, w) = (shape[1], shape[2]);
    let cat0 = g.concat_chan(p_f, z1);
    let cat = g.concat_chan(cat0, z2);
    let pw = b.param(g, "enc_proj_w");
    let pb = b.param(g, "enc_proj_b");
    let projected = g.conv2d(cat, pw, pb, 1, 0);
    let mut seq = to_seq(g, projected);
    for blk in 0..2 {
        let (attn_out, _) = attention_g(g, b, seq, seq, AttnModule::Encoder(blk))?;
        let resid = g.add(seq, attn_out);
        let gain = b.param(g, &format!("enc{blk}_norm_g"));
        let bias = b.param(g, &format!("enc{blk}_norm_b"));
        seq = g.norm_rows(resid, gain, bias);
    }
    Ok(from_seq(g, seq, h, w))
}

/// Stand-in encoder: concatenate-and-project the three inputs to C
/// channels, then two self-attention blocks.
pub fn toy_encoder(
    p_f: &Tensor,
    z1: &Tensor,
    z2: &Tensor,
    w: &KernelWeights,
) -> Result<Tensor, FusionError> {
    let mut g = Graph::new();
    let mut b = Binder::new(w, false);
    let np = g.leaf(p_f.clone(), false);
    let n1 = g.leaf(z1.clone(), false);
    let n2 = g.leaf(z2.clone(), false);
    let out = toy_encoder_g(&mut g, &mut b, np, n1, n2)?;
    Ok(g.value(out).clone())
}

// ----------------------------------------------------- minimal decoder

pub fn minimal_decoder_g(
    g: &mut Graph,
    b: &mut Binder,
    f1: NodeId,
    f2: NodeId,
    f_fused: NodeId,
    p_s: NodeId,
    p_d: NodeId,
) -> Result<(NodeId, NodeId), FusionError> {
    let cfg = *b.config();
    let feat = vec![cfg.channels, cfg.feat_h, cfg.feat_w];
    for (name, id) in [("f1", f1), ("f2", f2), ("f_fused", f_fused)] {
        if g.shape(id) != feat.as_slice() {
            return Err(FusionError::ShapeMismatch(format!(
                "minimal_decoder {name}: expected {feat:?}, got {:?}",
                g.shape(id)
            )));
        }
    }
    if g.shape(p_s) != [cfg.sparse, cfg.channels] {
        return Err(FusionError::ShapeMismatch(format!(
            "minimal_decoder sparse prompt: expected [{}, {}], got {:?}",
            cfg.sparse,
            cfg.channels,
            g.shape(p_s)
        )));
    }
    if g.shape(p_d) != [cfg.feat_h, cfg.feat_w, cfg.channels] {
        return Err(FusionError::ShapeMismatch(format!(
            "minimal_decoder dense prompt: expected [{}, {}, {}], got {:?}",
            cfg.feat_h,
            cfg.feat_w,
            cfg.channels,
            g.shape(p_d)
        )));
    }
    let (h, w) = (cfg.feat_h, cfg.feat_w);

    // image feature = F1 + F2 + F_fused with P_D added positionally
    let sum12 = g.add(f1, f2);
    let img0 = g.add(sum12, f_fused);
    let pd_rows = g.reshape(p_d, &[h * w, cfg.channels]);
    let pd_t = g.transpose(pd_rows);
    let pd_chw = g.reshape(pd_t, &[cfg.channels, h, w]);
    let img = g.add(img0, pd_chw);
    let img_seq = to_seq(g, img);

    // sparse tokens attend to image features
    let (tok_attn, _) = attention_g(g, b, p_s, img_seq, AttnModule::DecoderTokenToImage)?;
    let tok_resid = g.add(p_s, tok_attn);
    let tng = b.param(g, "dec_tok_norm_g");
    let tnb = b.param(g, "dec_tok_norm_b");
    let tok = g.norm_rows(tok_resid, tng, tnb);

    // image attends back to tokens; this is the F_att fed to SFP-2
    let (img_attn, _) = attention_g(g, b, img_seq, tok, AttnModule::DecoderImageToToken)?;
    let img_resid = g.add(img_seq, img_attn);
    let ing = b.param(g, "dec_img_norm_g");
    let inb = b.param(g, "dec_img_norm_b");
    let img2 = g.norm_rows(img_resid, ing, inb);
    let f_att = from_seq(g, img2, h, w);

    // one score map per sparse token: dot products against the 2x
    // upsampled image features
    let up = g.upsample2(f_att);
    let up_rows = g.reshape(up, &[cfg.channels, 4 * h * w]);
    let scores_flat = g.matmul(tok, up_rows);
    let scores = g.reshape(scores_flat, &[cfg.sparse, 2 * h, 2 * w]);
    Ok((scores, f_att))
}

/// Stand-in mask decoder. Returns (per-token score maps N x 2H x 2W,
/// F_att C x H x W for the second SFP level).
pub fn minimal_decoder(
    f1: &Tensor,
    f2: &Tensor,
    f_fused: &Tensor,
    prompts: &PromptPair,
    w: &KernelWeights,
) -> Result<(Tensor, Tensor), FusionError> {
    let mut g = Graph::new();
    let mut b = Binder::new(w, false);
    let n1 = g.leaf(f1.clone(), false);
    let n2 = g.leaf(f2.clone(), false);
    let nf = g.leaf(f_fused.clone(), false);
    let ns = g.leaf(prompts.sparse.clone(), false);
    let nd = g.leaf(prompts.dense.clone(), false);
    let (scores, f_att) = minimal_decoder_g(&mut g, &mut b, n1, n2, nf, ns, nd)?;
    Ok((g.value(scores).clone(), g.value(f_att).clone()))
}
