//! Minimal reverse-mode tape over [`Tensor`].
//!
//! Nodes evaluate eagerly at construction; `backward` walks the tape in
//! reverse and accumulates gradients for every leaf created with
//! `requires_grad`. Only the operations the fusion modules need exist,
//! each with a hand-written adjoint. Everything is sequential and
//! deterministic.

use crate::tensor::Tensor;

pub const NORM_EPS: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeId(pub usize);

#[derive(Clone, Debug)]
enum Op {
    Leaf { requires_grad: bool },
    Add(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Affine { x: NodeId, scale: f64 },
    MatMul(NodeId, NodeId),
    Transpose(NodeId),
    Reshape(NodeId),
    SoftmaxRows(NodeId),
    NormRows { x: NodeId, gain: NodeId, bias: NodeId },
    Gelu(NodeId),
    Conv2d { x: NodeId, w: NodeId, b: NodeId, stride: usize, pad: usize },
    AvgPool2(NodeId),
    Upsample2(NodeId),
    ConcatLast(NodeId, NodeId),
    ConcatChan(NodeId, NodeId),
    SliceLast { x: NodeId, start: usize, len: usize },
    AddRowVec { x: NodeId, v: NodeId },
    AddColVec { x: NodeId, v: NodeId },
    Log(NodeId),
    PowConst { x: NodeId, exponent: f64 },
    SumAll(NodeId),
}

struct Node {
    value: Tensor,
    op: Op,
}

#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    pub fn shape(&self, id: NodeId) -> &[usize] {
        &self.nodes[id.0].value.shape
    }

    fn push(&mut self, value: Tensor, op: Op) -> NodeId {
        self.nodes.push(Node { value, op });
        NodeId(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> NodeId {
        self.push(value, Op::Leaf { requires_grad })
    }

    pub fn constant(&mut self, value: Tensor) -> NodeId {
        self.leaf(value, false)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert_eq!(ta.shape, tb.shape, "add shapes");
        let data = ta.data.iter().zip(&tb.data).map(|(x, y)| x + y).collect();
        let value = Tensor::from_vec(&ta.shape.clone(), data);
        self.push(value, Op::Add(a, b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert_eq!(ta.shape, tb.shape, "mul shapes");
        let data = ta.data.iter().zip(&tb.data).map(|(x, y)| x * y).collect();
        let value = Tensor::from_vec(&ta.shape.clone(), data);
        self.push(value, Op::Mul(a, b))
    }

    pub fn affine(&mut self, x: NodeId, scale: f64, shift: f64) -> NodeId {
        let tx = &self.nodes[x.0].value;
        let data = tx.data.iter().map(|v| scale * v + shift).collect();
        let value = Tensor::from_vec(&tx.shape.clone(), data);
        self.push(value, Op::Affine { x, scale })
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert_eq!(ta.rank(), 2, "matmul lhs rank");
        assert_eq!(tb.rank(), 2, "matmul rhs rank");
        let (m, k) = (ta.shape[0], ta.shape[1]);
        let (k2, n) = (tb.shape[0], tb.shape[1]);
        assert_eq!(k, k2, "matmul inner dims");
        let mut data = vec![0.0; m * n];
        for i in 0..m {
            for kk in 0..k {
                let av = ta.data[i * k + kk];
                if av == 0.0 {
                    continue;
                }
                let brow = &tb.data[kk * n..(kk + 1) * n];
                let crow = &mut data[i * n..(i + 1) * n];
                for j in 0..n {
                    crow[j] += av * brow[j];
                }
            }
        }
        self.push(Tensor::from_vec(&[m, n], data), Op::MatMul(a, b))
    }

    pub fn transpose(&mut self, x: NodeId) -> NodeId {
        let tx = &self.nodes[x.0].value;
        assert_eq!(tx.rank(), 2, "transpose rank");
        let (m, n) = (tx.shape[0], tx.shape[1]);
        let mut data = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                data[j * m + i] = tx.data[i * n + j];
            }
        }
        self.push(Tensor::from_vec(&[n, m], data), Op::Transpose(x))
    }

    pub fn reshape(&mut self, x: NodeId, shape: &[usize]) -> NodeId {
        let tx = &self.nodes[x.0].value;
        assert_eq!(
            tx.numel(),
            shape.iter().product::<usize>(),
            "reshape preserves element count"
        );
        let value = Tensor::from_vec(shape, tx.data.clone());
        self.push(value, Op::Reshape(x))
    }

    pub fn softmax_rows(&mut self, x: NodeId) -> NodeId {
        let tx = &self.nodes[x.0].value;
        assert_eq!(tx.rank(), 2, "softmax rank");
        let (m, n) = (tx.shape[0], tx.shape[1]);
        let mut data = vec![0.0; m * n];
        for i in 0..m {
            let row = &tx.data[i * n..(i + 1) * n];
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for j in 0..n {
                let e = (row[j] - max).exp();
                data[i * n + j] = e;
                sum += e;
            }
            for j in 0..n {
                data[i * n + j] /= sum;
            }
        }
        self.push(Tensor::from_vec(&[m, n], data), Op::SoftmaxRows(x))
    }

    /// Per-row normalization over the last axis with learned gain and
    /// bias (layer norm over the channel axis for token rows).
    pub fn norm_rows(&mut self, x: NodeId, gain: NodeId, bias: NodeId) -> NodeId {
        let tx = &self.nodes[x.0].value;
        assert_eq!(tx.rank(), 2, "norm rank");
        let (m, n) = (tx.shape[0], tx.shape[1]);
        assert_eq!(self.nodes[gain.0].value.shape, vec![n], "gain shape");
        assert_eq!(self.nodes[bias.0].value.shape, vec![n], "bias shape");
        let g = &self.nodes[gain.0].value.data;
        let b = &self.nodes[bias.0].value.data;
        let mut data = vec![0.0; m * n];
        for i in 0..m {
            let row = &tx.data[i * n..(i + 1) * n];
            let mean = row.iter().sum::<f64>() / n as f64;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            let inv_sigma = 1.0 / (var + NORM_EPS).sqrt();
            for j in 0..n {
                data[i * n + j] = (row[j] - mean) * inv_sigma * g[j] + b[j];
            }
        }
        self.push(Tensor::from_vec(&[m, n], data), Op::NormRows { x, gain, bias })
    }

    pub fn gelu(&mut self, x: NodeId) -> NodeId {
        let tx = &self.nodes[x.0].value;
        let data = tx.data.iter().map(|&v| gelu(v)).collect();
        let value = Tensor::from_vec(&tx.shape.clone(), data);
        self.push(value, Op::Gelu(x))
    }

    /// Direct convolution, x [Cin,H,W] * w [Cout,Cin,kh,kw] + b [Cout].
    pub fn conv2d(&mut self, x: NodeId, w: NodeId, b: NodeId, stride: usize, pad: usize) -> NodeId {
        let tx = &self.nodes[x.0].value;
        let tw = &self.nodes[w.0].value;
        let tb = &self.nodes[b.0].value;
        assert_eq!(tx.rank(), 3, "conv input rank");
        assert_eq!(tw.rank(), 4, "conv weight rank");
        let (cin, h, wdt) = (tx.shape[0], tx.shape[1], tx.shape[2]);
        let (cout, cin2, kh, kw) = (tw.shape[0], tw.shape[1], tw.shape[2], tw.shape[3]);
        assert_eq!(cin, cin2, "conv channel agreement");
        assert_eq!(tb.shape, vec![cout], "conv bias shape");
        let oh = (h + 2 * pad - kh) / stride + 1;
        let ow = (wdt + 2 * pad - kw) / stride + 1;
        let mut data = vec![0.0; cout * oh * ow];
        for co in 0..cout {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = tb.data[co];
                    for ci in 0..cin {
                        for ky in 0..kh {
                            let iy = (oy * stride + ky) as isize - pad as isize;
                            if iy < 0 || iy >= h as isize {
                                continue;
                            }
                            for kx in 0..kw {
                                let ix = (ox * stride + kx) as isize - pad as isize;
                                if ix < 0 || ix >= wdt as isize {
                                    continue;
                                }
                                acc += tx.data[(ci * h + iy as usize) * wdt + ix as usize]
                                    * tw.data[((co * cin + ci) * kh + ky) * kw + kx];
                            }
                        }
                    }
                    data[(co * oh + oy) * ow + ox] = acc;
                }
            }
        }
        self.push(
            Tensor::from_vec(&[cout, oh, ow], data),
            Op::Conv2d { x, w, b, stride, pad },
        )
    }

    pub fn avg_pool2(&mut self, x: NodeId) -> NodeId {
        let tx = &self.nodes[x.0].value;
        assert_eq!(tx.rank(), 3, "pool rank");
        let (c, h, w) = (tx.shape[0], tx.shape[1], tx.shape[2]);
        assert!(h.is_multiple_of(2) && w.is_multiple_of(2), "pool needs even dims");
        let (oh, ow) = (h / 2, w / 2);
        let mut data = vec![0.0; c * oh * ow];
        for cc in 0..c {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut acc = 0.0;
                    for dy in 0..2 {
                        for dx in 0..2 {
                            acc += tx.data[(cc * h + 2 * oy + dy) * w + 2 * ox + dx];
                        }
                    }
                    data[(cc * oh + oy) * ow + ox] = acc / 4.0;
                }
            }
        }
        self.push(Tensor::from_vec(&[c, oh, ow], data), Op::AvgPool2(x))
    }

    pub fn upsample2(&mut self, x: NodeId) -> NodeId {
        let tx = &self.nodes[x.0].value;
        assert_eq!(tx.rank(), 3, "upsample rank");
        let (c, h, w) = (tx.shape[0], tx.shape[1], tx.shape[2]);
        let mut data = vec![0.0; c * 4 * h * w];
        for cc in 0..c {
            for y in 0..2 * h {
                for x2 in 0..2 * w {
                    data[(cc * 2 * h + y) * 2 * w + x2] = tx.data[(cc * h + y / 2) * w + x2 / 2];
                }
            }
        }
        self.push(Tensor::from_vec(&[c, 2 * h, 2 * w], data), Op::Upsample2(x))
    }

    pub fn concat_last(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert_eq!(ta.rank(), 2);
        assert_eq!(tb.rank(), 2);
        assert_eq!(ta.shape[0], tb.shape[0], "concat rows");
        let (m, na, nb) = (ta.shape[0], ta.shape[1], tb.shape[1]);
        let mut data = vec![0.0; m * (na + nb)];
        for i in 0..m {
            data[i * (na + nb)..i * (na + nb) + na]
                .copy_from_slice(&ta.data[i * na..(i + 1) * na]);
            data[i * (na + nb) + na..(i + 1) * (na + nb)]
                .copy_from_slice(&tb.data[i * nb..(i + 1) * nb]);
        }
        self.push(Tensor::from_vec(&[m, na + nb], data), Op::ConcatLast(a, b))
    }

    pub fn concat_chan(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert_eq!(ta.rank(), 3);
        assert_eq!(&ta.shape[1..], &tb.shape[1..], "concat spatial dims");
        let shape = vec![ta.shape[0] + tb.shape[0], ta.shape[1], ta.shape[2]];
        let mut data = Vec::with_capacity(ta.numel() + tb.numel());
        data.extend_from_slice(&ta.data);
        data.extend_from_slice(&tb.data);
        self.push(Tensor::from_vec(&shape, data), Op::ConcatChan(a, b))
    }

    pub fn slice_last(&mut self, x: NodeId, start: usize, len: usize) -> NodeId {
        let tx = &self.nodes[x.0].value;
        assert_eq!(tx.rank(), 2);
        let (m, n) = (tx.shape[0], tx.shape[1]);
        assert!(start + len <= n, "slice bounds");
        let mut data = vec![0.0; m * len];
        for i in 0..m {
            data[i * len..(i + 1) * len]
                .copy_from_slice(&tx.data[i * n + start..i * n + start + len]);
        }
        self.push(Tensor::from_vec(&[m, len], data), Op::SliceLast { x, start, len })
    }

    /// x[i, j] + v[j]: bias along the last axis.
    pub fn add_row_vec(&mut self, x: NodeId, v: NodeId) -> NodeId {
        let (tx, tv) = (&self.nodes[x.0].value, &self.nodes[v.0].value);
        assert_eq!(tx.rank(), 2);
        let (m, n) = (tx.shape[0], tx.shape[1]);
        assert_eq!(tv.shape, vec![n], "row vector length");
        let mut data = tx.data.clone();
        for i in 0..m {
            for j in 0..n {
                data[i * n + j] += tv.data[j];
            }
        }
        self.push(Tensor::from_vec(&[m, n], data), Op::AddRowVec { x, v })
    }

    /// x[i, j] + v[i]: bias along the first axis.
    pub fn add_col_vec(&mut self, x: NodeId, v: NodeId) -> NodeId {
        let (tx, tv) = (&self.nodes[x.0].value, &self.nodes[v.0].value);
        assert_eq!(tx.rank(), 2);
        let (m, n) = (tx.shape[0], tx.shape[1]);
        assert_eq!(tv.shape, vec![m], "column vector length");
        let mut data = tx.data.clone();
        for i in 0..m {
            for j in 0..n {
                data[i * n + j] += tv.data[i];
            }
        }
        self.push(Tensor::from_vec(&[m, n], data), Op::AddColVec { x, v })
    }

    pub fn log(&mut self, x: NodeId) -> NodeId {
        let tx = &self.nodes[x.0].value;
        let data = tx.data.iter().map(|v| v.ln()).collect();
        let value = Tensor::from_vec(&tx.shape.clone(), data);
        self.push(value, Op::Log(x))
    }

    pub fn pow_const(&mut self, x: NodeId, exponent: f64) -> NodeId {
        let tx = &self.nodes[x.0].value;
        let data = tx.data.iter().map(|v| v.powf(exponent)).collect();
        let value = Tensor::from_vec(&tx.shape.clone(), data);
        self.push(value, Op::PowConst { x, exponent })
    }

    pub fn sum_all(&mut self, x: NodeId) -> NodeId {
        let s = self.nodes[x.0].value.data.iter().sum();
        self.push(Tensor::from_vec(&[1], vec![s]), Op::SumAll(x))
    }

    /// Reverse pass from a scalar root. Returns one gradient slot per
    /// node; leaves created without `requires_grad` stay `None`.
    pub fn backward(&self, root: NodeId) -> Vec<Option<Tensor>> {
        assert_eq!(self.nodes[root.0].value.numel(), 1, "root must be scalar");
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[root.0] = Some(Tensor::from_vec(&[1], vec![1.0]));

        for idx in (0..=root.0).rev() {
            let Some(grad) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Leaf { requires_grad } => {
                    if *requires_grad {
                        grads[idx] = Some(grad);
                    }
                    continue;
                }
                Op::Add(a, b) => {
                    self.accumulate(&mut grads, *a, &grad.data, &grad.shape);
                    self.accumulate(&mut grads, *b, &grad.data, &grad.shape);
                }
                Op::Mul(a, b) => {
                    let db: Vec<f64> = grad
                        .data
                        .iter()
                        .zip(&self.nodes[a.0].value.data)
                        .map(|(g, x)| g * x)
                        .collect();
                    let da: Vec<f64> = grad
                        .data
                        .iter()
                        .zip(&self.nodes[b.0].value.data)
                        .map(|(g, y)| g * y)
                        .collect();
                    self.accumulate(&mut grads, *a, &da, &grad.shape);
                    self.accumulate(&mut grads, *b, &db, &grad.shape);
                }
                Op::Affine { x, scale } => {
                    let dx: Vec<f64> = grad.data.iter().map(|g| g * scale).collect();
                    self.accumulate(&mut grads, *x, &dx, &grad.shape);
                }
                Op::MatMul(a, b) => {
                    let ta = &self.nodes[a.0].value;
                    let tb = &self.nodes[b.0].value;
                    let (m, k) = (ta.shape[0], ta.shape[1]);
                    let n = tb.shape[1];
                    // da = g . b^T
                    let mut da = vec![0.0; m * k];
                    for i in 0..m {
                        for j in 0..n {
                            let g = grad.data[i * n + j];
                            if g == 0.0 {
                                continue;
                            }
                            for kk in 0..k {
                                da[i * k + kk] += g * tb.data[kk * n + j];
                            }
                        }
                    }
                    // db = a^T . g
                    let mut db = vec![0.0; k * n];
                    for i in 0..m {
                        for kk in 0..k {
                            let av = ta.data[i * k + kk];
                            if av == 0.0 {
                                continue;
                            }
                            for j in 0..n {
                                db[kk * n + j] += av * grad.data[i * n + j];
                            }
                        }
                    }
                    self.accumulate(&mut grads, *a, &da, &ta.shape);
                    self.accumulate(&mut grads, *b, &db, &tb.shape);
                }
                Op::Transpose(x) => {
                    let (m, n) = (grad.shape[0], grad.shape[1]);
                    let mut dx = vec![0.0; m * n];
                    for i in 0..m {
                        for j in 0..n {
                            dx[j * m + i] = grad.data[i * n + j];
                        }
                    }
                    self.accumulate(&mut grads, *x, &dx, &self.nodes[x.0].value.shape);
                }
                Op::Reshape(x) => {
                    self.accumulate(&mut grads, *x, &grad.data, &self.nodes[x.0].value.shape);
                }
                Op::SoftmaxRows(x) => {
                    let y = &node.value;
                    let (m, n) = (y.shape[0], y.shape[1]);
                    let mut dx = vec![0.0; m * n];
                    for i in 0..m {
                        let yrow = &y.data[i * n..(i + 1) * n];
                        let grow = &grad.data[i * n..(i + 1) * n];
                        let dot: f64 = yrow.iter().zip(grow).map(|(a, b)| a * b).sum();
                        for j in 0..n {
                            dx[i * n + j] = yrow[j] * (grow[j] - dot);
                        }
                    }
                    self.accumulate(&mut grads, *x, &dx, &self.nodes[x.0].value.shape);
                }
                Op::NormRows { x, gain, bias } => {
                    let tx = &self.nodes[x.0].value;
                    let g = &self.nodes[gain.0].value.data;
                    let (m, n) = (tx.shape[0], tx.shape[1]);
                    let mut dx = vec![0.0; m * n];
                    let mut dgain = vec![0.0; n];
                    let mut dbias = vec![0.0; n];
                    for i in 0..m {
                        let row = &tx.data[i * n..(i + 1) * n];
                        let grow = &grad.data[i * n..(i + 1) * n];
                        let mean = row.iter().sum::<f64>() / n as f64;
                        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
                        let inv_sigma = 1.0 / (var + NORM_EPS).sqrt();
                        let xhat: Vec<f64> = row.iter().map(|v| (v - mean) * inv_sigma).collect();
                        let dxhat: Vec<f64> = grow.iter().zip(g).map(|(gr, gg)| gr * gg).collect();
                        let mean_dxhat = dxhat.iter().sum::<f64>() / n as f64;
                        let mean_dxhat_xhat =
                            dxhat.iter().zip(&xhat).map(|(a, b)| a * b).sum::<f64>() / n as f64;
                        for j in 0..n {
                            dgain[j] += grow[j] * xhat[j];
                            dbias[j] += grow[j];
                            dx[i * n + j] =
                                inv_sigma * (dxhat[j] - mean_dxhat - xhat[j] * mean_dxhat_xhat);
                        }
                    }
                    self.accumulate(&mut grads, *x, &dx, &tx.shape);
                    self.accumulate(&mut grads, *gain, &dgain, &[n]);
                    self.accumulate(&mut grads, *bias, &dbias, &[n]);
                }
                Op::Gelu(x) => {
                    let tx = &self.nodes[x.0].value;
                    let dx: Vec<f64> = grad
                        .data
                        .iter()
                        .zip(&tx.data)
                        .map(|(g, &v)| g * gelu_derivative(v))
                        .collect();
                    self.accumulate(&mut grads, *x, &dx, &tx.shape);
                }
                Op::Conv2d { x, w, b, stride, pad } => {
                    let tx = &self.nodes[x.0].value;
                    let tw = &self.nodes[w.0].value;
                    let (cin, h, wdt) = (tx.shape[0], tx.shape[1], tx.shape[2]);
                    let (cout, _, kh, kw) = (tw.shape[0], tw.shape[1], tw.shape[2], tw.shape[3]);
                    let (oh, ow) = (grad.shape[1], grad.shape[2]);
                    let mut dx = vec![0.0; tx.numel()];
                    let mut dw = vec![0.0; tw.numel()];
                    let mut db = vec![0.0; cout];
                    for co in 0..cout {
                        for oy in 0..oh {
                            for ox in 0..ow {
                                let gv = grad.data[(co * oh + oy) * ow + ox];
                                if gv == 0.0 {
                                    continue;
                                }
                                db[co] += gv;
                                for ci in 0..cin {
                                    for ky in 0..kh {
                                        let iy = (oy * stride + ky) as isize - *pad as isize;
                                        if iy < 0 || iy >= h as isize {
                                            continue;
                                        }
                                        for kx in 0..kw {
                                            let ix = (ox * stride + kx) as isize - *pad as isize;
                                            if ix < 0 || ix >= wdt as isize {
                                                continue;
                                            }
                                            let xi = (ci * h + iy as usize) * wdt + ix as usize;
                                            let wi = ((co * cin + ci) * kh + ky) * kw + kx;
                                            dx[xi] += gv * tw.data[wi];
                                            dw[wi] += gv * tx.data[xi];
                                        }
                                    }
                                }
                            }
                        }
                    }
                    self.accumulate(&mut grads, *x, &dx, &tx.shape);
                    self.accumulate(&mut grads, *w, &dw, &tw.shape);
                    self.accumulate(&mut grads, *b, &db, &[cout]);
                }
                Op::AvgPool2(x) => {
                    let tx = &self.nodes[x.0].value;
                    let (c, h, w) = (tx.shape[0], tx.shape[1], tx.shape[2]);
                    let (oh, ow) = (h / 2, w / 2);
                    let mut dx = vec![0.0; tx.numel()];
                    for cc in 0..c {
                        for oy in 0..oh {
                            for ox in 0..ow {
                                let gv = grad.data[(cc * oh + oy) * ow + ox] / 4.0;
                                for dy in 0..2 {
                                    for dxx in 0..2 {
                                        dx[(cc * h + 2 * oy + dy) * w + 2 * ox + dxx] += gv;
                                    }
                                }
                            }
                        }
                    }
                    self.accumulate(&mut grads, *x, &dx, &tx.shape);
                }
                Op::Upsample2(x) => {
                    let tx = &self.nodes[x.0].value;
                    let (c, h, w) = (tx.shape[0], tx.shape[1], tx.shape[2]);
                    let mut dx = vec![0.0; tx.numel()];
                    for cc in 0..c {
                        for y in 0..2 * h {
                            for x2 in 0..2 * w {
                                dx[(cc * h + y / 2) * w + x2 / 2] +=
                                    grad.data[(cc * 2 * h + y) * 2 * w + x2];
                            }
                        }
                    }
                    self.accumulate(&mut grads, *x, &dx, &tx.shape);
                }
                Op::ConcatLast(a, b) => {
                    let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    let (m, na, nb) = (ta.shape[0], ta.shape[1], tb.shape[1]);
                    let mut da = vec![0.0; m * na];
                    let mut db = vec![0.0; m * nb];
                    for i in 0..m {
                        da[i * na..(i + 1) * na]
                            .copy_from_slice(&grad.data[i * (na + nb)..i * (na + nb) + na]);
                        db[i * nb..(i + 1) * nb]
                            .copy_from_slice(&grad.data[i * (na + nb) + na..(i + 1) * (na + nb)]);
                    }
                    self.accumulate(&mut grads, *a, &da, &ta.shape);
                    self.accumulate(&mut grads, *b, &db, &tb.shape);
                }
                Op::ConcatChan(a, b) => {
                    let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    let da = grad.data[..ta.numel()].to_vec();
                    let db = grad.data[ta.numel()..].to_vec();
                    self.accumulate(&mut grads, *a, &da, &ta.shape);
                    self.accumulate(&mut grads, *b, &db, &tb.shape);
                }
                Op::SliceLast { x, start, len } => {
                    let tx = &self.nodes[x.0].value;
                    let (m, n) = (tx.shape[0], tx.shape[1]);
                    let mut dx = vec![0.0; m * n];
                    for i in 0..m {
                        dx[i * n + start..i * n + start + len]
                            .copy_from_slice(&grad.data[i * len..(i + 1) * len]);
                    }
                    self.accumulate(&mut grads, *x, &dx, &tx.shape);
                }
                Op::AddRowVec { x, v } => {
                    let (m, n) = (grad.shape[0], grad.shape[1]);
                    let mut dv = vec![0.0; n];
                    for i in 0..m {
                        for j in 0..n {
                            dv[j] += grad.data[i * n + j];
                        }
                    }
                    self.accumulate(&mut grads, *x, &grad.data, &grad.shape);
                    self.accumulate(&mut grads, *v, &dv, &[n]);
                }
                Op::AddColVec { x, v } => {
                    let (m, n) = (grad.shape[0], grad.shape[1]);
                    let mut dv = vec![0.0; m];
                    for i in 0..m {
                        for j in 0..n {
                            dv[i] += grad.data[i * n + j];
                        }
                    }
                    self.accumulate(&mut grads, *x, &grad.data, &grad.shape);
                    self.accumulate(&mut grads, *v, &dv, &[m]);
                }
                Op::Log(x) => {
                    let tx = &self.nodes[x.0].value;
                    let dx: Vec<f64> = grad
                        .data
                        .iter()
                        .zip(&tx.data)
                        .map(|(g, v)| g / v)
                        .collect();
                    self.accumulate(&mut grads, *x, &dx, &tx.shape);
                }
                Op::PowConst { x, exponent } => {
                    let tx = &self.nodes[x.0].value;
                    let e = *exponent;
                    let dx: Vec<f64> = grad
                        .data
                        .iter()
                        .zip(&tx.data)
                        .map(|(g, &v)| if e == 0.0 { 0.0 } else { g * e * v.powf(e - 1.0) })
                        .collect();
                    self.accumulate(&mut grads, *x, &dx, &tx.shape);
                }
                Op::SumAll(x) => {
                    let tx = &self.nodes[x.0].value;
                    let dx = vec![grad.data[0]; tx.numel()];
                    self.accumulate(&mut grads, *x, &dx, &tx.shape);
                }
            }
        }

        grads
    }

    fn accumulate(
        &self,
        grads: &mut [Option<Tensor>],
        target: NodeId,
        delta: &[f64],
        shape: &[usize],
    ) {
        match &mut grads[target.0] {
            Some(existing) => {
                for (e, d) in existing.data.iter_mut().zip(delta) {
                    *e += d;
                }
            }
            slot @ None => {
                *slot = Some(Tensor::from_vec(shape, delta.to_vec()));
            }
        }
    }
}

/// GELU, tanh form (smooth everywhere, which keeps finite-difference
/// probes clean).
pub fn gelu(x: f64) -> f64 {
    const K: f64 = 0.7978845608028654; // sqrt(2/pi)
    0.5 * x * (1.0 + (K * (x + 0.044715 * x * x * x)).tanh())
}

pub fn gelu_derivative(x: f64) -> f64 {
    const K: f64 = 0.7978845608028654;
    let u = K * (x + 0.044715 * x * x * x);
    let t = u.tanh();
    let sech2 = 1.0 - t * t;
    0.5 * (1.0 + t) + 0.5 * x * sech2 * K * (1.0 + 3.0 * 0.044715 * x * x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use polsar_core::rng::SplitMix64;

    fn finite_diff_scalar<F: FnMut(&[f64]) -> f64>(
        mut f: F,
        at: &[f64],
        eps: f64,
    ) -> Vec<f64> {
        let mut out = Vec::with_capacity(at.len());
        let mut probe = at.to_vec();
        for i in 0..at.len() {
            probe[i] = at[i] + eps;
            let hi = f(&probe);
            probe[i] = at[i] - eps;
            let lo = f(&probe);
            probe[i] = at[i];
            out.push((hi - lo) / (2.0 * eps));
        }
        out
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let mut g = Graph::new();
        let mut rng = SplitMix64::new(1);
        let x = g.leaf(Tensor::random(&[4, 7], &mut rng, -3.0, 3.0), false);
        let y = g.softmax_rows(x);
        for i in 0..4 {
            let sum: f64 = (0..7).map(|j| g.value(y).at2(i, j)).sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn matmul_grad_matches_finite_difference() {
        let mut rng = SplitMix64::new(2);
        let a0 = Tensor::random(&[3, 4], &mut rng, -1.0, 1.0);
        let b0 = Tensor::random(&[4, 2], &mut rng, -1.0, 1.0);
        let r = Tensor::random(&[3, 2], &mut rng, -1.0, 1.0);

        let eval = |a_data: &[f64], b_data: &[f64]| -> f64 {
            let mut g = Graph::new();
            let a = g.leaf(Tensor::from_vec(&[3, 4], a_data.to_vec()), false);
            let b = g.leaf(Tensor::from_vec(&[4, 2], b_data.to_vec()), false);
            let c = g.matmul(a, b);
            let rr = g.constant(r.clone());
            let p = g.mul(c, rr);
            let s = g.sum_all(p);
            g.value(s).data[0]
        };

        let mut g = Graph::new();
        let a = g.leaf(a0.clone(), true);
        let b = g.leaf(b0.clone(), true);
        let c = g.matmul(a, b);
        let rr = g.constant(r.clone());
        let p = g.mul(c, rr);
        let s = g.sum_all(p);
        let grads = g.backward(s);

        let fd_a = finite_diff_scalar(|probe| eval(probe, &b0.data), &a0.data, 1e-6);
        let fd_b = finite_diff_scalar(|probe| eval(&a0.data, probe), &b0.data, 1e-6);
        let ga = grads[a.0].as_ref().unwrap();
        let gb = grads[b.0].as_ref().unwrap();
        for (an, fd) in ga.data.iter().zip(&fd_a) {
            assert!((an - fd).abs() < 1e-8, "{an} vs {fd}");
        }
        for (an, fd) in gb.data.iter().zip(&fd_b) {
            assert!((an - fd).abs() < 1e-8);
        }
    }

    #[test]
    fn norm_softmax_gelu_grads_match_finite_difference() {
        let mut rng = SplitMix64::new(3);
        let x0 = Tensor::random(&[3, 5], &mut rng, -2.0, 2.0);
        let gain0 = Tensor::random(&[5], &mut rng, 0.5, 1.5);
        let bias0 = Tensor::random(&[5], &mut rng, -0.5, 0.5);
        let r = Tensor::random(&[3, 5], &mut rng, -1.0, 1.0);

        let eval = |xd: &[f64], gd: &[f64], bd: &[f64]| -> f64 {
            let mut g = Graph::new();
            let x = g.leaf(Tensor::from_vec(&[3, 5], xd.to_vec()), false);
            let gain = g.leaf(Tensor::from_vec(&[5], gd.to_vec()), false);
            let bias = g.leaf(Tensor::from_vec(&[5], bd.to_vec()), false);
            let sm = g.softmax_rows(x);
            let ge = g.gelu(sm);
            let nm = g.norm_rows(ge, gain, bias);
            let rr = g.constant(r.clone());
            let p = g.mul(nm, rr);
            let s = g.sum_all(p);
            g.value(s).data[0]
        };

        let mut g = Graph::new();
        let x = g.leaf(x0.clone(), true);
        let gain = g.leaf(gain0.clone(), true);
        let bias = g.leaf(bias0.clone(), true);
        let sm = g.softmax_rows(x);
        let ge = g.gelu(sm);
        let nm = g.norm_rows(ge, gain, bias);
        let rr = g.constant(r.clone());
        let p = g.mul(nm, rr);
        let s = g.sum_all(p);
        let grads = g.backward(s);

        let fd_x = finite_diff_scalar(|probe| eval(probe, &gain0.data, &bias0.data), &x0.data, 1e-6);
        for (an, fd) in grads[x.0].as_ref().unwrap().data.iter().zip(&fd_x) {
            assert!((an - fd).abs() < 1e-7, "{an} vs {fd}");
        }
        let fd_g = finite_diff_scalar(|probe| eval(&x0.data, probe, &bias0.data), &gain0.data, 1e-6);
        for (an, fd) in grads[gain.0].as_ref().unwrap().data.iter().zip(&fd_g) {
            assert!((an - fd).abs() < 1e-7);
        }
        let fd_b = finite_diff_scalar(|probe| eval(&x0.data, &gain0.data, probe), &bias0.data, 1e-6);
        for (an, fd) in grads[bias.0].as_ref().unwrap().data.iter().zip(&fd_b) {
            assert!((an - fd).abs() < 1e-7);
        }
    }

    #[test]
    fn conv_pool_upsample_grads_match_finite_difference() {
        let mut rng = SplitMix64::new(4);
        let x0 = Tensor::random(&[2, 4, 4], &mut rng, -1.0, 1.0);
        let w0 = Tensor::random(&[3, 2, 3, 3], &mut rng, -0.5, 0.5);
        let b0 = Tensor::random(&[3], &mut rng, -0.2, 0.2);
        let r = Tensor::random(&[3, 4, 4], &mut rng, -1.0, 1.0);

        let eval = |xd: &[f64], wd: &[f64], bd: &[f64]| -> f64 {
            let mut g = Graph::new();
            let x = g.leaf(Tensor::from_vec(&[2, 4, 4], xd.to_vec()), false);
            let w = g.leaf(Tensor::from_vec(&[3, 2, 3, 3], wd.to_vec()), false);
            let b = g.leaf(Tensor::from_vec(&[3], bd.to_vec()), false);
            let c = g.conv2d(x, w, b, 1, 1);
            let p = g.avg_pool2(c);
            let u = g.upsample2(p);
            let rr = g.constant(r.clone());
            let m = g.mul(u, rr);
            let s = g.sum_all(m);
            g.value(s).data[0]
        };

        let mut g = Graph::new();
        let x = g.leaf(x0.clone(), true);
        let w = g.leaf(w0.clone(), true);
        let b = g.leaf(b0.clone(), true);
        let c = g.conv2d(x, w, b, 1, 1);
        let p = g.avg_pool2(c);
        let u = g.upsample2(p);
        let rr = g.constant(r.clone());
        let m = g.mul(u, rr);
        let s = g.sum_all(m);
        let grads = g.backward(s);

        for (leaf, data) in [(x, &x0), (w, &w0), (b, &b0)] {
            let fd = finite_diff_scalar(
                |probe| match leaf {
                    l if l == x => eval(probe, &w0.data, &b0.data),
                    l if l == w => eval(&x0.data, probe, &b0.data),
                    _ => eval(&x0.data, &w0.data, probe),
                },
                &data.data,
                1e-6,
            );
            for (an, f) in grads[leaf.0].as_ref().unwrap().data.iter().zip(&fd) {
                assert!((an - f).abs() < 1e-7, "leaf grad {an} vs fd {f}");
            }
        }
    }

    #[test]
    fn stride_two_conv_shapes() {
        let mut g = Graph::new();
        let x = g.leaf(Tensor::zeros(&[5, 8, 8]), false);
        let w = g.leaf(Tensor::zeros(&[7, 5, 2, 2]), false);
        let b = g.leaf(Tensor::zeros(&[7]), false);
        let y = g.conv2d(x, w, b, 2, 0);
        assert_eq!(g.shape(y), &[7, 4, 4]);
    }
}
