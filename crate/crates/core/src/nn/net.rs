use super::gemm::{gemm, Layout};
use super::params::{LayerParams, ParameterSet};
use super::spec::{infer_shapes, FeatureShape, LayerSpec, NetworkSpec, Padding};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Examples pushed through the network at once by [`forward`].
const FORWARD_CHUNK: usize = 64;

struct ConvGeom {
    h: usize,
    w: usize,
    c: usize,
    fw: usize,
    pad: usize,
    oh: usize,
    ow: usize,
    oc: usize,
}

impl ConvGeom {
    fn new(input: FeatureShape, output: FeatureShape, fw: usize, padding: Padding) -> Self {
        let (FeatureShape::Spatial { h, w, c }, FeatureShape::Spatial { h: oh, w: ow, c: oc }) = (input, output) else {
            unreachable!("conv shapes are validated by infer_shapes")
        };
        let pad = match padding {
            Padding::Valid => 0,
            Padding::Same => (fw - 1) / 2,
        };
        Self {
            h,
            w,
            c,
            fw,
            pad,
            oh,
            ow,
            oc,
        }
    }

    fn patch_len(&self) -> usize {
        self.c * self.fw * self.fw
    }

    fn positions(&self) -> usize {
        self.oh * self.ow
    }

    /// Unfold one HWC example into a (positions x patch) matrix whose column
    /// order (channel, ky, kx) matches the (out, in, ky, kx) weight layout.
    fn im2col(&self, x: &[f64], col: &mut [f64]) {
        let k = self.patch_len();
        let (fw, c, w) = (self.fw, self.c, self.w);
        for oy in 0..self.oh {
            for ox in 0..self.ow {
                let row = &mut col[(oy * self.ow + ox) * k..][..k];
                let (lo, hi) = self.kx_range(ox);
                for ky in 0..fw {
                    let iy = (oy + ky).wrapping_sub(self.pad);
                    if iy >= self.h {
                        for ic in 0..c {
                            row[(ic * fw + ky) * fw..][..fw].fill(0.0);
                        }
                        continue;
                    }
                    let src = &x[(iy * w + ox + lo - self.pad) * c..];
                    for ic in 0..c {
                        let dst = &mut row[(ic * fw + ky) * fw..][..fw];
                        dst[..lo].fill(0.0);
                        dst[hi..].fill(0.0);
                        for (j, d) in dst[lo..hi].iter_mut().enumerate() {
                            *d = src[j * c + ic];
                        }
                    }
                }
            }
        }
    }

    /// Filter columns `lo..hi` that land inside the input at output column `ox`.
    fn kx_range(&self, ox: usize) -> (usize, usize) {
        let lo = self.pad.saturating_sub(ox);
        let hi = self.fw.min(self.w + self.pad - ox);
        (lo, hi)
    }

    /// Adjoint of `im2col`: scatter-add patch gradients back onto the input.
    fn col2im(&self, col: &[f64], dx: &mut [f64]) {
        let k = self.patch_len();
        let (fw, c, w) = (self.fw, self.c, self.w);
        for oy in 0..self.oh {
            for ox in 0..self.ow {
                let row = &col[(oy * self.ow + ox) * k..][..k];
                let (lo, hi) = self.kx_range(ox);
                for ky in 0..fw {
                    let iy = (oy + ky).wrapping_sub(self.pad);
                    if iy >= self.h {
                        continue;
                    }
                    let dst = &mut dx[(iy * w + ox + lo - self.pad) * c..];
                    for ic in 0..c {
                        let src = &row[(ic * fw + ky) * fw..][..fw];
                        for (j, v) in src[lo..hi].iter().enumerate() {
                            dst[j * c + ic] += v;
                        }
                    }
                }
            }
        }
    }
}

/// Unfold every example of a batch into one (batch * positions x patch) matrix.
fn im2col_batch(g: &ConvGeom, x: &[f64], batch: usize) -> Vec<f64> {
    let in_len = g.h * g.w * g.c;
    let per = g.positions() * g.patch_len();
    let mut col = vec![0.0; batch * per];
    for (e, c) in col.chunks_exact_mut(per).enumerate() {
        g.im2col(&x[e * in_len..][..in_len], c);
    }
    col
}

fn conv_forward(g: &ConvGeom, p: &LayerParams, x: &[f64], batch: usize) -> Vec<f64> {
    let rows = batch * g.positions();
    let k = g.patch_len();
    let col = im2col_batch(g, x, batch);
    let mut out = vec![0.0; rows * g.oc];
    gemm(
        &col,
        Layout::row_major(rows, k),
        p.weights.data(),
        Layout::transposed(g.oc, k),
        0.0,
        &mut out,
        Layout::row_major(rows, g.oc),
    );
    let b = p.biases.data();
    for row in out.chunks_exact_mut(g.oc) {
        for (v, bias) in row.iter_mut().zip(b) {
            *v += bias;
        }
    }
    out
}

/// Accumulates weight and bias gradients; returns the input gradient if asked.
fn conv_backward(
    g: &ConvGeom,
    p: &LayerParams,
    grad: &mut LayerParams,
    x: &[f64],
    dy: &[f64],
    batch: usize,
    need_dx: bool,
) -> Option<Vec<f64>> {
    let db = grad.biases.data_mut();
    for row in dy.chunks_exact(g.oc) {
        for (d, v) in db.iter_mut().zip(row) {
            *d += v;
        }
    }
    let in_len = g.h * g.w * g.c;
    let (k, pos) = (g.patch_len(), g.positions());
    let rows = batch * pos;
    let col = im2col_batch(g, x, batch);
    gemm(
        dy,
        Layout::transposed(rows, g.oc),
        &col,
        Layout::row_major(rows, k),
        1.0,
        grad.weights.data_mut(),
        Layout::row_major(g.oc, k),
    );
    if !need_dx {
        return None;
    }
    let mut dcol = col;
    gemm(
        dy,
        Layout::row_major(rows, g.oc),
        p.weights.data(),
        Layout::row_major(g.oc, k),
        0.0,
        &mut dcol,
        Layout::row_major(rows, k),
    );
    let mut dx = vec![0.0; batch * in_len];
    for e in 0..batch {
        g.col2im(&dcol[e * pos * k..][..pos * k], &mut dx[e * in_len..][..in_len]);
    }
    Some(dx)
}

/// Returns pooled output and, per output element, the offset of the chosen
/// input within its example. Ties go to the first maximum in row-major order.
fn pool_forward(input: FeatureShape, output: FeatureShape, x: &[f64], batch: usize) -> (Vec<f64>, Vec<u32>) {
    let (FeatureShape::Spatial { w, c, .. }, FeatureShape::Spatial { h: oh, w: ow, .. }) = (input, output) else {
        unreachable!("pool shapes are validated by infer_shapes")
    };
    let in_len = input.len();
    let out_len = output.len();
    let mut out = vec![0.0; batch * out_len];
    let mut arg = vec![0u32; batch * out_len];
    for e in 0..batch {
        let xe = &x[e * in_len..][..in_len];
        for oy in 0..oh {
            for ox in 0..ow {
                for ch in 0..c {
                    let mut best = (2 * oy * w + 2 * ox) * c + ch;
                    for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                        let i = ((2 * oy + dy) * w + 2 * ox + dx) * c + ch;
                        if xe[i] > xe[best] {
                            best = i;
                        }
                    }
                    let o = e * out_len + (oy * ow + ox) * c + ch;
                    out[o] = xe[best];
                    arg[o] = best as u32;
                }
            }
        }
    }
    (out, arg)
}

fn dense_forward(p: &LayerParams, x: &[f64], batch: usize) -> Vec<f64> {
    let (n_in, n_out) = (p.weights.shape()[0], p.weights.shape()[1]);
    let mut y = vec![0.0; batch * n_out];
    gemm(
        x,
        Layout::row_major(batch, n_in),
        p.weights.data(),
        Layout::row_major(n_in, n_out),
        0.0,
        &mut y,
        Layout::row_major(batch, n_out),
    );
    for row in y.chunks_exact_mut(n_out) {
        for (v, b) in row.iter_mut().zip(p.biases.data()) {
            *v += b;
        }
    }
    y
}

/// Network bound to its parameters with shapes resolved once.
pub struct Network<'a> {
    spec: &'a NetworkSpec,
    params: &'a ParameterSet,
    shapes: Vec<FeatureShape>,
    /// Parameter slot for each layer, if it has one.
    slots: Vec<Option<usize>>,
}

struct Cache {
    /// Input to each layer.
    inputs: Vec<Vec<f64>>,
    pool_arg: Vec<Option<Vec<u32>>>,
}

impl<'a> Network<'a> {
    pub fn new(spec: &'a NetworkSpec, params: &'a ParameterSet) -> Result<Self> {
        let shapes = infer_shapes(spec)?;
        params.check_against(spec)?;
        let mut slots = vec![None; spec.layers.len()];
        for (slot, lp) in params.layers.iter().enumerate() {
            slots[lp.layer_index] = Some(slot);
        }
        Ok(Self {
            spec,
            params,
            shapes,
            slots,
        })
    }

    /// Build without checking the parameters of layers at or after `upto`,
    /// for evaluating a prefix of a partially initialised network.
    fn new_prefix(spec: &'a NetworkSpec, params: &'a ParameterSet, upto: usize) -> Result<Self> {
        let shapes = infer_shapes(spec)?;
        let infos = spec.param_layers()?;
        let mut slots = vec![None; spec.layers.len()];
        for info in infos.iter().filter(|i| i.layer_index < upto) {
            let (slot, lp) = params
                .layers
                .iter()
                .enumerate()
                .find(|(_, l)| l.layer_index == info.layer_index)
                .ok_or_else(|| Error::shape(info.layer_index, "missing parameters"))?;
            if lp.weights.shape() != info.weight_dims() || lp.biases.shape() != [info.n_biases] {
                return Err(Error::shape(info.layer_index, "parameter shape does not match spec"));
            }
            slots[info.layer_index] = Some(slot);
        }
        Ok(Self {
            spec,
            params,
            shapes,
            slots,
        })
    }

    fn in_shape(&self, i: usize) -> FeatureShape {
        if i == 0 {
            self.spec.input_feature_shape()
        } else {
            self.shapes[i - 1]
        }
    }

    fn layer_params(&self, i: usize) -> &LayerParams {
        &self.params.layers[self.slots[i].expect("parametric layer has a slot")]
    }

    fn apply(&self, i: usize, x: Vec<f64>, batch: usize) -> (Vec<f64>, Option<Vec<u32>>) {
        match self.spec.layers[i] {
            LayerSpec::Conv2d {
                filter_width, padding, ..
            } => {
                let g = ConvGeom::new(self.in_shape(i), self.shapes[i], filter_width, padding);
                (conv_forward(&g, self.layer_params(i), &x, batch), None)
            }
            LayerSpec::MaxPool2x2 => {
                let (y, arg) = pool_forward(self.in_shape(i), self.shapes[i], &x, batch);
                (y, Some(arg))
            }
            LayerSpec::Relu => {
                let mut y = x;
                for v in &mut y {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
                (y, None)
            }
            LayerSpec::Flatten => (x, None),
            LayerSpec::Dense { .. } => (dense_forward(self.layer_params(i), &x, batch), None),
        }
    }

    /// Run layers `0..upto` on a flat batch, in chunks.
    fn run_prefix(&self, x: &[f64], batch: usize, upto: usize) -> Vec<f64> {
        let in_len = self.spec.input_len();
        let out_len = if upto == 0 { in_len } else { self.shapes[upto - 1].len() };
        let mut out = Vec::with_capacity(batch * out_len);
        let mut start = 0;
        while start < batch {
            let n = FORWARD_CHUNK.min(batch - start);
            let mut a = x[start * in_len..(start + n) * in_len].to_vec();
            for i in 0..upto {
                a = self.apply(i, a, n).0;
            }
            out.extend_from_slice(&a);
            start += n;
        }
        out
    }

    fn forward_cached(&self, x: &[f64], batch: usize) -> (Vec<f64>, Cache) {
        let n_layers = self.spec.layers.len();
        let mut inputs = Vec::with_capacity(n_layers);
        let mut pool_arg = Vec::with_capacity(n_layers);
        let mut a = x.to_vec();
        for i in 0..n_layers {
            let (y, arg) = self.apply(i, a.clone(), batch);
            inputs.push(a);
            pool_arg.push(arg);
            a = y;
        }
        (a, Cache { inputs, pool_arg })
    }

    /// Gradients of a loss with respect to every parameter, given the
    /// gradient at the logits.
    fn backward(&self, cache: &Cache, dlogits: Vec<f64>, batch: usize) -> ParameterSet {
        let mut grads = self.params.zeros_like();
        let first_param = self.slots.iter().position(Option::is_some).unwrap_or(0);
        let mut dy = dlogits;
        for i in (first_param..self.spec.layers.len()).rev() {
            let need_dx = i > first_param;
            let x = &cache.inputs[i];
            let in_shape = self.in_shape(i);
            match self.spec.layers[i] {
                LayerSpec::Dense { out_units } => {
                    let p = self.layer_params(i);
                    let n_in = in_shape.len();
                    let g = &mut grads.layers[self.slots[i].unwrap()];
                    gemm(
                        x,
                        Layout::transposed(batch, n_in),
                        &dy,
                        Layout::row_major(batch, out_units),
                        0.0,
                        g.weights.data_mut(),
                        Layout::row_major(n_in, out_units),
                    );
                    let db = g.biases.data_mut();
                    for row in dy.chunks_exact(out_units) {
                        for (d, v) in db.iter_mut().zip(row) {
                            *d += v;
                        }
                    }
                    if need_dx {
                        let mut dx = vec![0.0; batch * n_in];
                        gemm(
                            &dy,
                            Layout::row_major(batch, out_units),
                            p.weights.data(),
                            Layout::transposed(n_in, out_units),
                            0.0,
                            &mut dx,
                            Layout::row_major(batch, n_in),
                        );
                        dy = dx;
                    }
                }
                LayerSpec::Conv2d {
                    filter_width, padding, ..
                } => {
                    let geo = ConvGeom::new(in_shape, self.shapes[i], filter_width, padding);
                    let g = &mut grads.layers[self.slots[i].unwrap()];
                    if let Some(dx) = conv_backward(&geo, self.layer_params(i), g, x, &dy, batch, need_dx) {
                        dy = dx;
                    }
                }
                LayerSpec::Relu => {
                    for (d, v) in dy.iter_mut().zip(x) {
                        if *v <= 0.0 {
                            *d = 0.0;
                        }
                    }
                }
                LayerSpec::MaxPool2x2 => {
                    let arg = cache.pool_arg[i].as_ref().expect("pool caches argmax");
                    let (in_len, out_len) = (in_shape.len(), self.shapes[i].len());
                    let mut dx = vec![0.0; batch * in_len];
                    for e in 0..batch {
                        for o in 0..out_len {
                            dx[e * in_len + arg[e * out_len + o] as usize] += dy[e * out_len + o];
                        }
                    }
                    dy = dx;
                }
                LayerSpec::Flatten => {}
            }
        }
        grads
    }
}

fn check_batch(spec: &NetworkSpec, batch: &Tensor) -> Result<usize> {
    let s = batch.shape();
    if s.len() != 4 || s[1..] != spec.input_shape {
        return Err(Error::shape(
            0,
            format!("batch shape {s:?} does not match (B, {:?})", spec.input_shape),
        ));
    }
    Ok(s[0])
}

fn check_labels(labels: &[usize], batch: usize, n_classes: usize) -> Result<()> {
    if labels.len() != batch {
        return Err(Error::shape(
            0,
            format!("{} labels for a batch of {batch}", labels.len()),
        ));
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(Error::LabelOutOfRange { label, n_classes });
    }
    Ok(())
}

/// Pre-softmax logits, shape (B, n_outputs).
pub fn forward(spec: &NetworkSpec, params: &ParameterSet, batch: &Tensor) -> Result<Tensor> {
    let n = check_batch(spec, batch)?;
    let net = Network::new(spec, params)?;
    let logits = net.run_prefix(batch.data(), n, spec.layers.len());
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteValue("forward pass".into()));
    }
    Tensor::new(vec![n, spec.n_outputs], logits)
}

/// Activations entering layer `upto` (the outputs of layers `0..upto`).
/// Only parameters of layers before `upto` are read.
pub fn forward_features(spec: &NetworkSpec, params: &ParameterSet, batch: &Tensor, upto: usize) -> Result<Tensor> {
    let n = check_batch(spec, batch)?;
    if upto > spec.layers.len() {
        return Err(Error::InvalidArgument(format!(
            "layer {upto} out of range for {} layers",
            spec.layers.len()
        )));
    }
    let net = Network::new_prefix(spec, params, upto)?;
    let feats = net.run_prefix(batch.data(), n, upto);
    if feats.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteValue("forward pass".into()));
    }
    let mut shape = vec![n];
    shape.extend(match upto {
        0 => spec.input_feature_shape().dims(),
        _ => infer_shapes(spec)?[upto - 1].dims(),
    });
    Tensor::new(shape, feats)
}

/// Row-wise softmax of a (B, C) tensor.
pub fn softmax(logits: &Tensor) -> Result<Tensor> {
    if !logits.all_finite() {
        return Err(Error::NonFiniteValue("softmax input".into()));
    }
    let c = *logits.shape().last().expect("tensor has a shape");
    let mut out = logits.data().to_vec();
    for row in out.chunks_exact_mut(c) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    Tensor::new(logits.shape().to_vec(), out)
}

/// Mean cross-entropy and its gradient with respect to the logits.
fn cross_entropy(logits: &[f64], labels: &[usize], c: usize) -> (f64, Vec<f64>) {
    let batch = labels.len();
    let mut total = 0.0;
    let mut grad = vec![0.0; logits.len()];
    for (b, (row, &y)) in logits.chunks_exact(c).zip(labels).enumerate() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|v| (v - max).exp()).sum();
        let lse = max + sum.ln();
        total += lse - row[y];
        let g = &mut grad[b * c..][..c];
        for (j, (gv, v)) in g.iter_mut().zip(row).enumerate() {
            let p = (v - lse).exp();
            *gv = (p - if j == y { 1.0 } else { 0.0 }) / batch as f64;
        }
    }
    (total / batch as f64, grad)
}

/// Mean softmax cross-entropy over the batch.
pub fn loss(spec: &NetworkSpec, params: &ParameterSet, batch: &Tensor, labels: &[usize]) -> Result<f64> {
    let n = check_batch(spec, batch)?;
    check_labels(labels, n, spec.n_outputs)?;
    let logits = forward(spec, params, batch)?;
    Ok(cross_entropy(logits.data(), labels, spec.n_outputs).0)
}

/// Mean softmax cross-entropy and its exact gradient for every parameter.
pub fn loss_and_grad(
    spec: &NetworkSpec,
    params: &ParameterSet,
    batch: &Tensor,
    labels: &[usize],
) -> Result<(f64, ParameterSet)> {
    let n = check_batch(spec, batch)?;
    check_labels(labels, n, spec.n_outputs)?;
    let net = Network::new(spec, params)?;
    let (logits, cache) = net.forward_cached(batch.data(), n);
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteValue("forward pass".into()));
    }
    let (l, dlogits) = cross_entropy(&logits, labels, spec.n_outputs);
    let grads = net.backward(&cache, dlogits, n);
    if !grads.all_finite() {
        return Err(Error::NonFiniteValue("backward pass".into()));
    }
    Ok((l, grads))
}

/// Central difference `(f(x + h) - f(x - h)) / 2h`.
pub fn central_difference(mut f: impl FnMut(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Finite-difference estimate of every parameter gradient of [`loss`].
pub fn numeric_grad(
    spec: &NetworkSpec,
    params: &ParameterSet,
    batch: &Tensor,
    labels: &[usize],
    h: f64,
) -> Result<ParameterSet> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("step {h} must be positive")));
    }
    // surface shape and label errors before the perturbation loop
    loss(spec, params, batch, labels)?;
    let mut work = params.clone();
    let mut grads = params.zeros_like();
    for i in 0..params.n_params() {
        let x0 = params.get(i);
        let d = central_difference(
            |x| {
                work.set(i, x);
                loss(spec, &work, batch, labels).expect("validated above")
            },
            x0,
            h,
        );
        work.set(i, x0);
        grads.set(i, d);
    }
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::spec::Padding;
    fn single_conv(fw: usize, h: usize, w: usize) -> NetworkSpec {
        let out = (h - fw + 1) * (w - fw + 1);
        NetworkSpec::new(
            [h, w, 1],
            vec![
                LayerSpec::conv(1, fw, Padding::Valid),
                LayerSpec::Flatten,
                LayerSpec::dense(out),
            ],
            out,
        )
        .unwrap()
    }

    fn identity_dense(p: &mut ParameterSet, n: usize) {
        let w = p.layers[1].weights.data_mut();
        for i in 0..n {
            w[i * n + i] = 1.0;
        }
    }

    #[test]
    fn one_by_one_identity_conv_returns_image() {
        let spec = single_conv(1, 3, 3);
        let mut p = ParameterSet::zeros(&spec).unwrap();
        p.layers[0].weights.data_mut()[0] = 1.0;
        identity_dense(&mut p, 9);
        let img: Vec<f64> = (0..9).map(|v| v as f64 / 10.0).collect();
        let x = Tensor::new(vec![1, 3, 3, 1], img.clone()).unwrap();
        assert_eq!(forward(&spec, &p, &x).unwrap().data(), img.as_slice());
    }

    #[test]
    fn two_by_two_diagonal_filter_by_hand() {
        // conv filters must be odd; emulate the 2x2 [[1,0],[0,1]] filter
        // with a 3x3 filter whose last row/column are zero on a 3x3 input
        // padded with zeros, checking the top-left output.
        let spec = single_conv(3, 3, 3);
        let mut p = ParameterSet::zeros(&spec).unwrap();
        let w = p.layers[0].weights.data_mut();
        w[0] = 1.0;
        w[4] = 1.0;
        identity_dense(&mut p, 1);
        let x = Tensor::new(vec![1, 3, 3, 1], vec![1.0, 2.0, 0.0, 3.0, 4.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(forward(&spec, &p, &x).unwrap().data(), &[5.0]);
    }

    #[test]
    fn zero_params_zero_logits() {
        let spec = NetworkSpec::cnn([8, 8, 2], &[3], 4).unwrap();
        let p = ParameterSet::zeros(&spec).unwrap();
        let x = Tensor::filled(&[2, 8, 8, 2], 0.7);
        assert!(forward(&spec, &p, &x).unwrap().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn softmax_cases() {
        let t = Tensor::new(
            vec![3, 3],
            vec![0.0, 0.0, 0.0, 1000.0, 0.0, -1000.0, 1f64.ln(), 2f64.ln(), 3f64.ln()],
        )
        .unwrap();
        let s = softmax(&t).unwrap();
        let d = s.data();
        assert!((d[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((d[3] - 1.0).abs() < 1e-15 && d[4] < 1e-300);
        for (got, want) in d[6..].iter().zip([1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0]) {
            assert!((got - want).abs() < 1e-15);
        }
        let pair = softmax(&Tensor::new(vec![1, 2], vec![0.0, 0.0]).unwrap()).unwrap();
        assert_eq!(pair.data(), &[0.5, 0.5]);
    }

    #[test]
    fn uniform_logits_give_log_c() {
        let spec = NetworkSpec::fcnn([2, 2, 1], 0, 0, 7).unwrap();
        let p = ParameterSet::zeros(&spec).unwrap();
        let x = Tensor::filled(&[3, 2, 2, 1], 0.3);
        let l = loss(&spec, &p, &x, &[0, 3, 6]).unwrap();
        assert!((l - 7f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn label_out_of_range() {
        let spec = NetworkSpec::fcnn([2, 2, 1], 0, 0, 3).unwrap();
        let p = ParameterSet::zeros(&spec).unwrap();
        let x = Tensor::zeros(&[1, 2, 2, 1]);
        assert!(matches!(
            loss_and_grad(&spec, &p, &x, &[3]),
            Err(Error::LabelOutOfRange { label: 3, n_classes: 3 })
        ));
    }

    #[test]
    fn quadratic_central_difference() {
        let d = central_difference(|t| t * t, 3.0, 1e-4);
        assert!((d - 6.0).abs() < 1e-7);
    }

    #[test]
    fn zero_input_gives_zero_weight_grad() {
        let spec = NetworkSpec::fcnn([2, 2, 1], 0, 0, 3).unwrap();
        let p = ParameterSet::zeros(&spec).unwrap();
        let x = Tensor::zeros(&[2, 2, 2, 1]);
        for g in [
            loss_and_grad(&spec, &p, &x, &[1, 2]).unwrap().1,
            numeric_grad(&spec, &p, &x, &[1, 2], 1e-4).unwrap(),
        ] {
            assert!(g.layers[0].weights.data().iter().all(|&v| v == 0.0));
            assert!(g.layers[0].biases.data().iter().any(|&v| v.abs() > 0.1));
        }
    }

    #[test]
    fn pool_tie_routes_to_first() {
        let input = FeatureShape::Spatial { h: 2, w: 4, c: 1 };
        let output = FeatureShape::Spatial { h: 1, w: 2, c: 1 };
        let x = [0.5, 0.5, 1.0, 2.0, 0.5, 0.5, 2.0, 1.0];
        let (y, arg) = pool_forward(input, output, &x, 1);
        assert_eq!(y, vec![0.5, 2.0]);
        assert_eq!(arg, vec![0, 3]);
    }
}
