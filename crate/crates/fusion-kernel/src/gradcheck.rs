//! Central-difference verification of analytic gradients.
//!
//! For each op, a scalar objective s = sum(output (x) R) over a seeded
//! random projection R is differentiated two ways: by the tape, and by
//! central differences on every parameter and input coordinate the op
//! touched. Losses are already scalar, so R is skipped there.

use polsar_core::rng::SplitMix64;

use crate::graph::{Graph, NodeId};
use crate::loss::{ce_loss_g, focal_loss_g};
use crate::ops;
use crate::tensor::Tensor;
use crate::weights::{Binder, KernelWeights};
use crate::FusionError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpKind {
    Ffp,
    FeatureEmbed1,
    FeatureEmbed2,
    ChannelSplit,
    CrossAttention,
    Sfp,
    SfpProgressive,
    ToyEncoder,
    MinimalDecoder,
    CeLoss,
    FocalLoss,
}

impl OpKind {
    pub const ALL: [OpKind; 11] = [
        OpKind::Ffp,
        OpKind::FeatureEmbed1,
        OpKind::FeatureEmbed2,
        OpKind::ChannelSplit,
        OpKind::CrossAttention,
        OpKind::Sfp,
        OpKind::SfpProgressive,
        OpKind::ToyEncoder,
        OpKind::MinimalDecoder,
        OpKind::CeLoss,
        OpKind::FocalLoss,
    ];
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub op: OpKind,
    pub max_rel_error: f64,
    pub coordinates_checked: usize,
}

struct Problem {
    inputs: Vec<Tensor>,
    labels: Option<Tensor>,
    proportions: Vec<f64>,
    gamma: f64,
}

fn build_problem(op: OpKind, w: &KernelWeights, rng: &mut SplitMix64) -> Problem {
    let cfg = &w.config;
    let feat = [cfg.channels, cfg.feat_h, cfg.feat_w];
    let img = [cfg.feat_h * 4, cfg.feat_w * 4];
    let rand = |shape: &[usize], rng: &mut SplitMix64| Tensor::random(shape, rng, -1.0, 1.0);
    let mut problem = Problem {
        inputs: Vec::new(),
        labels: None,
        proportions: Vec::new(),
        gamma: 2.0,
    };
    match op {
        OpKind::Ffp => {
            problem.inputs = vec![rand(&feat, rng), rand(&feat, rng)];
        }
        OpKind::FeatureEmbed1 => {
            problem.inputs = vec![rand(&[3, img[0], img[1]], rng)];
        }
        OpKind::FeatureEmbed2 => {
            problem.inputs = vec![rand(&[cfg.mvd_classes, img[0], img[1]], rng)];
        }
        OpKind::ChannelSplit => {
            problem.inputs = vec![rand(&feat, rng)];
        }
        OpKind::CrossAttention => {
            let s = cfg.seq_len();
            problem.inputs = vec![rand(&[s, cfg.channels], rng), rand(&[s, cfg.channels], rng)];
        }
        OpKind::Sfp => {
            problem.inputs = vec![rand(&feat, rng), rand(&feat, rng), rand(&feat, rng)];
        }
        OpKind::SfpProgressive | OpKind::MinimalDecoder => {
            problem.inputs = vec![
                rand(&feat, rng),
                rand(&feat, rng),
                rand(&feat, rng),
                rand(&feat, rng),
            ];
        }
        OpKind::ToyEncoder => {
            problem.inputs = vec![rand(&feat, rng), rand(&feat, rng), rand(&feat, rng)];
        }
        OpKind::CeLoss | OpKind::FocalLoss => {
            let (n, k) = (8usize, 4usize);
            let mut data = vec![0.0; n * k];
            let mut labels = vec![0.0; n * k];
            for i in 0..n {
                let mut row: Vec<f64> = (0..k).map(|_| rng.uniform(0.1, 1.0)).collect();
                let s: f64 = row.iter().sum();
                row.iter_mut().for_each(|v| *v /= s);
                data[i * k..(i + 1) * k].copy_from_slice(&row);
                labels[i * k + rng.next_usize(k)] = 1.0;
            }
            problem.inputs = vec![Tensor::from_vec(&[n, k], data)];
            problem.labels = Some(Tensor::from_vec(&[n, k], labels));
            problem.proportions = vec![0.4, 0.3, 0.2, 0.1];
        }
    }
    problem
}

/// Builds the op's graph over the given weights and inputs; returns the
/// scalar objective root plus the bound parameter leaves and input
/// leaves.
#[allow(clippy::type_complexity)]
fn build_objective(
    op: OpKind,
    w: &KernelWeights,
    problem: &Problem,
    projection_seed: u64,
    requires_grad: bool,
) -> Result<(Graph, NodeId, Vec<(String, NodeId)>, Vec<NodeId>), FusionError> {
    let mut g = Graph::new();
    let mut b = Binder::new(w, requires_grad);
    let input_ids: Vec<NodeId> = problem
        .inputs
        .iter()
        .map(|t| g.leaf(t.clone(), requires_grad))
        .collect();
    let outputs: Vec<NodeId> = match op {
        OpKind::Ffp => vec![ops::ffp_g(&mut g, &mut b, input_ids[0], input_ids[1])?],
        OpKind::FeatureEmbed1 => vec![ops::feature_embed_1_g(&mut g, &mut b, input_ids[0])?],
        OpKind::FeatureEmbed2 => vec![ops::feature_embed_2_g(&mut g, &mut b, input_ids[0])?],
        OpKind::ChannelSplit => {
            let (m, n) = ops::split_seq_g(&mut g, &mut b, input_ids[0], 0)?;
            vec![m, n]
        }
        OpKind::CrossAttention => {
            let (out, _) = ops::attention_g(
                &mut g,
                &mut b,
                input_ids[0],
                input_ids[1],
                ops::AttnModule::SfpForward,
            )?;
            vec![out]
        }
        OpKind::Sfp => {
            let (s, d) = ops::sfp_g(&mut g, &mut b, input_ids[0], input_ids[1], input_ids[2])?;
            vec![s, d]
        }
        OpKind::SfpProgressive => {
            let ((s1, d1), (s2, d2)) = ops::sfp_progressive_g(
                &mut g,
                &mut b,
                input_ids[0],
                input_ids[1],
                input_ids[2],
                input_ids[3],
            )?;
            vec![s1, d1, s2, d2]
        }
        OpKind::ToyEncoder => vec![ops::toy_encoder_g(
            &mut g,
            &mut b,
            input_ids[0],
            input_ids[1],
            input_ids[2],
        )?],
        OpKind::MinimalDecoder => {
            // fourth input doubles as the dense prompt (reshaped);
            // a fresh sparse prompt comes from the projection stream
            let cfg = b.config();
            let (h, wd, c, n) = (cfg.feat_h, cfg.feat_w, cfg.channels, cfg.sparse);
            let mut rng = SplitMix64::new(projection_seed ^ 0xDEC0DE);
            let p_s = g.leaf(Tensor::random(&[n, c], &mut rng, -1.0, 1.0), requires_grad);
            let dense_rows = g.reshape(input_ids[3], &[h * wd, c]);
            let dense = g.reshape(dense_rows, &[h, wd, c]);
            let (scores, f_att) = ops::minimal_decoder_g(
                &mut g,
                &mut b,
                input_ids[0],
                input_ids[1],
                input_ids[2],
                p_s,
                dense,
            )?;
            vec![scores, f_att]
        }
        OpKind::CeLoss => {
            let root = ce_loss_g(&mut g, input_ids[0], problem.labels.as_ref().unwrap())?;
            return Ok((g, root, b.bound, input_ids));
        }
        OpKind::FocalLoss => {
            let root = focal_loss_g(
                &mut g,
                input_ids[0],
                problem.labels.as_ref().unwrap(),
                &problem.proportions,
                problem.gamma,
            )?;
            return Ok((g, root, b.bound, input_ids));
        }
    };

    // scalar objective: sum of outputs contracted with seeded
    // projections
    let mut proj_rng = SplitMix64::new(projection_seed);
    let mut root: Option<NodeId> = None;
    for out in outputs {
        let shape = g.shape(out).to_vec();
        let r = g.constant(Tensor::random(&shape, &mut proj_rng, -1.0, 1.0));
        let flat_len = shape.iter().product::<usize>();
        let out2 = g.reshape(out, &[flat_len]);
        let r2 = g.reshape(r, &[flat_len]);
        let prod = g.mul(out2, r2);
        let s = g.sum_all(prod);
        root = Some(match root {
            None => s,
            Some(acc) => g.add(acc, s),
        });
    }
    Ok((g, root.unwrap(), b.bound, input_ids))
}

/// Maximum relative error between analytic and central-difference
/// gradients over every parameter and input coordinate of `op`.
pub fn grad_check(
    op: OpKind,
    w: &KernelWeights,
    seed: u64,
    epsilon: f64,
) -> Result<GradCheckReport, FusionError> {
    let mut rng = SplitMix64::new(seed);
    let problem = build_problem(op, w, &mut rng);
    let projection_seed = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);

    let (graph, root, bound, input_ids) =
        build_objective(op, w, &problem, projection_seed, true)?;
    let grads = graph.backward(root);
    if grads
        .iter()
        .flatten()
        .any(|t| t.data.iter().any(|v| !v.is_finite()))
    {
        return Err(FusionError::NonFiniteGradient);
    }

    let eval = |w2: &KernelWeights, p2: &Problem| -> Result<f64, FusionError> {
        let (g2, root2, _, _) = build_objective(op, w2, p2, projection_seed, false)?;
        Ok(g2.value(root2).data[0])
    };

    let mut w_probe = w.clone();
    let mut p_probe = Problem {
        inputs: problem.inputs.clone(),
        labels: problem.labels.clone(),
        proportions: problem.proportions.clone(),
        gamma: problem.gamma,
    };

    // Relative errors are measured against each coordinate's own
    // magnitude, floored at a small fraction of the op's overall
    // gradient scale: near-zero coordinates carry only rounding noise
    // and say nothing about the analytic path, while a genuinely wrong
    // adjoint shows up at the scale of the gradient itself.
    let grad_scale = grads
        .iter()
        .flatten()
        .flat_map(|t| t.data.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(1e-12);
    let floor = 1e-4 * grad_scale;

    let mut max_rel = 0.0f64;
    let mut checked = 0usize;

    // parameter coordinates
    for (name, id) in &bound {
        let Some(analytic) = grads[id.0].as_ref() else {
            continue;
        };
        let count = analytic.numel();
        for coord in 0..count {
            let original = w_probe.get(name).data[coord];
            w_probe.get_mut(name).data[coord] = original + epsilon;
            let hi = eval(&w_probe, &p_probe)?;
            w_probe.get_mut(name).data[coord] = original - epsilon;
            let lo = eval(&w_probe, &p_probe)?;
            w_probe.get_mut(name).data[coord] = original;
            let fd = (hi - lo) / (2.0 * epsilon);
            let a = analytic.data[coord];
            let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(floor);
            max_rel = max_rel.max(rel);
            checked += 1;
        }
    }

    // input coordinates
    for (slot, id) in input_ids.iter().enumerate() {
        let Some(analytic) = grads[id.0].as_ref() else {
            continue;
        };
        for coord in 0..analytic.numel() {
            let original = p_probe.inputs[slot].data[coord];
            p_probe.inputs[slot].data[coord] = original + epsilon;
            let hi = eval(&w_probe, &p_probe)?;
            p_probe.inputs[slot].data[coord] = original - epsilon;
            let lo = eval(&w_probe, &p_probe)?;
            p_probe.inputs[slot].data[coord] = original;
            let fd = (hi - lo) / (2.0 * epsilon);
            let a = analytic.data[coord];
            let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(floor);
            max_rel = max_rel.max(rel);
            checked += 1;
        }
    }

    Ok(GradCheckReport {
        op,
        max_rel_error: max_rel,
        coordinates_checked: checked,
    })
}
