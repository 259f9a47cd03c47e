//! Forward and backward kernels for the three layer kinds.
//!
//! All tensors are channel-major `(c, h, w)` flat slices. Convolution weights are
//! `[out][in][ky][kx]`; transposed-convolution weights are `[in][out][ky][kx]`.

use super::arch::{Activation, Layer, LayerKind};
use crate::tensor::Shape3;

#[inline]
fn tap(o: usize, k: usize, stride: usize, pad: usize, size: usize) -> Option<usize> {
    let pos = (o * stride + k).checked_sub(pad)?;
    (pos < size).then_some(pos)
}

pub fn conv2d_forward(
    input: &[f64],
    in_shape: Shape3,
    weights: &[f64],
    bias: &[f64],
    out_shape: Shape3,
    kernel: usize,
    stride: usize,
    pad: usize,
    out: &mut [f64],
) {
    let (ih, iw) = (in_shape.height, in_shape.width);
    let (oh, ow) = (out_shape.height, out_shape.width);
    for oc in 0..out_shape.channels {
        let plane = &mut out[oc * oh * ow..(oc + 1) * oh * ow];
        plane.iter_mut().for_each(|v| *v = bias[oc]);
        for ic in 0..in_shape.channels {
            let src = &input[ic * ih * iw..(ic + 1) * ih * iw];
            let w = &weights[(oc * in_shape.channels + ic) * kernel * kernel..][..kernel * kernel];
            for oy in 0..oh {
                for ky in 0..kernel {
                    let Some(iy) = tap(oy, ky, stride, pad, ih) else { continue };
                    for ox in 0..ow {
                        let mut acc = 0.0;
                        for kx in 0..kernel {
                            if let Some(ix) = tap(ox, kx, stride, pad, iw) {
                                acc += w[ky * kernel + kx] * src[iy * iw + ix];
                            }
                        }
                        plane[oy * ow + ox] += acc;
                    }
                }
            }
        }
    }
}

/// Accumulates weight/bias gradients and, when `grad_in` is given, the input gradient.
#[allow(clippy::too_many_arguments)]
pub fn conv2d_backward(
    input: &[f64],
    in_shape: Shape3,
    weights: &[f64],
    grad_out: &[f64],
    out_shape: Shape3,
    kernel: usize,
    stride: usize,
    pad: usize,
    grad_w: &mut [f64],
    grad_b: &mut [f64],
    mut grad_in: Option<&mut [f64]>,
) {
    let (ih, iw) = (in_shape.height, in_shape.width);
    let (oh, ow) = (out_shape.height, out_shape.width);
    for oc in 0..out_shape.channels {
        let g = &grad_out[oc * oh * ow..(oc + 1) * oh * ow];
        grad_b[oc] += g.iter().sum::<f64>();
        for ic in 0..in_shape.channels {
            let src = &input[ic * ih * iw..(ic + 1) * ih * iw];
            let base = (oc * in_shape.channels + ic) * kernel * kernel;
            for ky in 0..kernel {
                for kx in 0..kernel {
                    let wi = base + ky * kernel + kx;
                    let w = weights[wi];
                    let mut gw = 0.0;
                    for oy in 0..oh {
                        let Some(iy) = tap(oy, ky, stride, pad, ih) else { continue };
                        for ox in 0..ow {
                            let Some(ix) = tap(ox, kx, stride, pad, iw) else { continue };
                            let go = g[oy * ow + ox];
                            gw += go * src[iy * iw + ix];
                            if let Some(gi) = grad_in.as_deref_mut() {
                                gi[ic * ih * iw + iy * iw + ix] += go * w;
                            }
                        }
                    }
                    grad_w[wi] += gw;
                }
            }
        }
    }
}

pub fn conv_transpose2d_forward(
    input: &[f64],
    in_shape: Shape3,
    weights: &[f64],
    bias: &[f64],
    out_shape: Shape3,
    kernel: usize,
    stride: usize,
    pad: usize,
    out: &mut [f64],
) {
    let (ih, iw) = (in_shape.height, in_shape.width);
    let (oh, ow) = (out_shape.height, out_shape.width);
    for oc in 0..out_shape.channels {
        out[oc * oh * ow..(oc + 1) * oh * ow]
            .iter_mut()
            .for_each(|v| *v = bias[oc]);
    }
    for ic in 0..in_shape.channels {
        let src = &input[ic * ih * iw..(ic + 1) * ih * iw];
        for oc in 0..out_shape.channels {
            let w = &weights[(ic * out_shape.channels + oc) * kernel * kernel..][..kernel * kernel];
            let plane = &mut out[oc * oh * ow..(oc + 1) * oh * ow];
            for iy in 0..ih {
                for ky in 0..kernel {
                    let Some(oy) = tap(iy, ky, stride, pad, oh) else { continue };
                    for ix in 0..iw {
                        let v = src[iy * iw + ix];
                        for kx in 0..kernel {
                            if let Some(ox) = tap(ix, kx, stride, pad, ow) {
                                plane[oy * ow + ox] += w[ky * kernel + kx] * v;
                            }
                        }
                    }
                }
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub fn conv_transpose2d_backward(
    input: &[f64],
    in_shape: Shape3,
    weights: &[f64],
    grad_out: &[f64],
    out_shape: Shape3,
    kernel: usize,
    stride: usize,
    pad: usize,
    grad_w: &mut [f64],
    grad_b: &mut [f64],
    mut grad_in: Option<&mut [f64]>,
) {
    let (ih, iw) = (in_shape.height, in_shape.width);
    let (oh, ow) = (out_shape.height, out_shape.width);
    for oc in 0..out_shape.channels {
        grad_b[oc] += grad_out[oc * oh * ow..(oc + 1) * oh * ow].iter().sum::<f64>();
    }
    for ic in 0..in_shape.channels {
        let src = &input[ic * ih * iw..(ic + 1) * ih * iw];
        for oc in 0..out_shape.channels {
            let g = &grad_out[oc * oh * ow..(oc + 1) * oh * ow];
            let base = (ic * out_shape.channels + oc) * kernel * kernel;
            for ky in 0..kernel {
                for kx in 0..kernel {
                    let wi = base + ky * kernel + kx;
                    let w = weights[wi];
                    let mut gw = 0.0;
                    for iy in 0..ih {
                        let Some(oy) = tap(iy, ky, stride, pad, oh) else { continue };
                        for ix in 0..iw {
                            let Some(ox) = tap(ix, kx, stride, pad, ow) else { continue };
                            let go = g[oy * ow + ox];
                            gw += go * src[iy * iw + ix];
                            if let Some(gi) = grad_in.as_deref_mut() {
                                gi[ic * ih * iw + iy * iw + ix] += go * w;
                            }
                        }
                    }
                    grad_w[wi] += gw;
                }
            }
        }
    }
}

pub fn dense_forward(input: &[f64], weights: &[f64], bias: &[f64], out: &mut [f64]) {
    let n_in = input.len();
    for (o, y) in out.iter_mut().enumerate() {
        let row = &weights[o * n_in..(o + 1) * n_in];
        *y = bias[o] + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
    }
}

pub fn dense_backward(
    input: &[f64],
    weights: &[f64],
    grad_out: &[f64],
    grad_w: &mut [f64],
    grad_b: &mut [f64],
    grad_in: Option<&mut [f64]>,
) {
    let n_in = input.len();
    for (o, &go) in grad_out.iter().enumerate() {
        grad_b[o] += go;
        if go == 0.0 {
            continue;
        }
        let gw = &mut grad_w[o * n_in..(o + 1) * n_in];
        for (g, x) in gw.iter_mut().zip(input) {
            *g += go * x;
        }
    }
    if let Some(gi) = grad_in {
        for (o, &go) in grad_out.iter().enumerate() {
            if go == 0.0 {
                continue;
            }
            let row = &weights[o * n_in..(o + 1) * n_in];
            for (g, w) in gi.iter_mut().zip(row) {
                *g += go * w;
            }
        }
    }
}

pub fn activate(act: Activation, values: &mut [f64]) {
    match act {
        Activation::Identity => {}
        Activation::Relu => values.iter_mut().for_each(|v| *v = v.max(0.0)),
        Activation::Sigmoid => values.iter_mut().for_each(|v| *v = 1.0 / (1.0 + (-*v).exp())),
    }
}

/// Turns a gradient w.r.t. activated outputs into one w.r.t. pre-activations.
pub fn activation_backward(act: Activation, activated: &[f64], grad: &mut [f64]) {
    match act {
        Activation::Identity => {}
        Activation::Relu => {
            for (g, &y) in grad.iter_mut().zip(activated) {
                if y <= 0.0 {
                    *g = 0.0;
                }
            }
        }
        Activation::Sigmoid => {
            for (g, &y) in grad.iter_mut().zip(activated) {
                *g *= y * (1.0 - y);
            }
        }
    }
}

/// Runs one layer forward, writing activated outputs into `out`.
pub fn layer_forward(layer: &Layer, params: &[f64], input: &[f64], out: &mut [f64]) {
    let w = &params[layer.weight_offset..layer.weight_offset + layer.weight_len()];
    let b = &params[layer.bias_offset..layer.bias_offset + layer.bias_len()];
    match layer.kind {
        LayerKind::Conv { input: is, output: os } => conv2d_forward(
            input, is, w, b, os, layer.kernel, layer.stride, layer.padding, out,
        ),
        LayerKind::ConvTranspose { input: is, output: os } => conv_transpose2d_forward(
            input, is, w, b, os, layer.kernel, layer.stride, layer.padding, out,
        ),
        LayerKind::Dense { .. } => dense_forward(input, w, b, out),
    }
    activate(layer.activation, out);
}

/// Backpropagates through one layer. `grad_out` is w.r.t. the activated output and is
/// consumed (overwritten with the pre-activation gradient).
pub fn layer_backward(
    layer: &Layer,
    params: &[f64],
    input: &[f64],
    output: &[f64],
    grad_out: &mut [f64],
    grads: &mut [f64],
    grad_in: Option<&mut [f64]>,
) {
    activation_backward(layer.activation, output, grad_out);
    let w = &params[layer.weight_offset..layer.weight_offset + layer.weight_len()];
    let (gw_all, gb_all) = grads.split_at_mut(layer.bias_offset);
    let gw = &mut gw_all[layer.weight_offset..];
    let gb = &mut gb_all[..layer.bias_len()];
    match layer.kind {
        LayerKind::Conv { input: is, output: os } => conv2d_backward(
            input, is, w, grad_out, os, layer.kernel, layer.stride, layer.padding, gw, gb, grad_in,
        ),
        LayerKind::ConvTranspose { input: is, output: os } => conv_transpose2d_backward(
            input, is, w, grad_out, os, layer.kernel, layer.stride, layer.padding, gw, gb, grad_in,
        ),
        LayerKind::Dense { .. } => dense_backward(input, w, grad_out, gw, gb, grad_in),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Straight-loop reference: gather form with explicit bounds checks.
    fn conv_oracle(
        x: &[f64],
        is: Shape3,
        w: &[f64],
        b: &[f64],
        os: Shape3,
        k: usize,
        s: usize,
        p: usize,
    ) -> Vec<f64> {
        let mut out = vec![0.0; os.len()];
        for oc in 0..os.channels {
            for oy in 0..os.height {
                for ox in 0..os.width {
                    let mut acc = b[oc];
                    for ic in 0..is.channels {
                        for ky in 0..k {
                            for kx in 0..k {
                                let iy = (oy * s + ky) as isize - p as isize;
                                let ix = (ox * s + kx) as isize - p as isize;
                                if iy < 0 || ix < 0 || iy >= is.height as isize || ix >= is.width as isize {
                                    continue;
                                }
                                acc += w[((oc * is.channels + ic) * k + ky) * k + kx]
                                    * x[(ic * is.height + iy as usize) * is.width + ix as usize];
                            }
                        }
                    }
                    out[(oc * os.height + oy) * os.width + ox] = acc;
                }
            }
        }
        out
    }

    // Transposed convolution as the adjoint: out = sum over input positions that map onto it.
    fn conv_t_oracle(
        x: &[f64],
        is: Shape3,
        w: &[f64],
        b: &[f64],
        os: Shape3,
        k: usize,
        s: usize,
        p: usize,
    ) -> Vec<f64> {
        let mut out = vec![0.0; os.len()];
        for oc in 0..os.channels {
            for oy in 0..os.height {
                for ox in 0..os.width {
                    let mut acc = b[oc];
                    for ic in 0..is.channels {
                        for iy in 0..is.height {
                            for ix in 0..is.width {
                                for ky in 0..k {
                                    for kx in 0..k {
                                        if iy * s + ky == oy + p && ix * s + kx == ox + p {
                                            acc += w[((ic * os.channels + oc) * k + ky) * k + kx]
                                                * x[(ic * is.height + iy) * is.width + ix];
                                        }
                                    }
                                }
                            }
                        }
                    }
                    out[(oc * os.height + oy) * os.width + ox] = acc;
                }
            }
        }
        out
    }

    fn ramp(n: usize, scale: f64, shift: f64) -> Vec<f64> {
        (0..n).map(|i| ((i * 7 % 11) as f64 - shift) * scale).collect()
    }

    #[test]
    fn conv_matches_loop_oracle() {
        let is = Shape3::new(2, 5, 4);
        let os = Shape3::new(3, 3, 2);
        let x = ramp(is.len(), 0.1, 3.0);
        let w = ramp(3 * 2 * 9, 0.05, 5.0);
        let b = vec![0.1, -0.2, 0.3];
        let mut out = vec![0.0; os.len()];
        conv2d_forward(&x, is, &w, &b, os, 3, 2, 1, &mut out);
        let want = conv_oracle(&x, is, &w, &b, os, 3, 2, 1);
        for (a, b) in out.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn conv_transpose_matches_adjoint_oracle() {
        let is = Shape3::new(2, 3, 2);
        let os = Shape3::new(3, 6, 4);
        let x = ramp(is.len(), 0.1, 3.0);
        let w = ramp(2 * 3 * 9, 0.05, 5.0);
        let b = vec![0.0, 0.5, -0.5];
        let mut out = vec![0.0; os.len()];
        conv_transpose2d_forward(&x, is, &w, &b, os, 3, 2, 1, &mut out);
        let want = conv_t_oracle(&x, is, &w, &b, os, 3, 2, 1);
        for (a, b) in out.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn transpose_is_adjoint_of_conv() {
        // <conv(x), y> == <x, convT(y)> with shared weights and zero bias.
        let is = Shape3::new(2, 6, 6);
        let os = Shape3::new(3, 3, 3);
        let x = ramp(is.len(), 0.1, 4.0);
        let y = ramp(os.len(), 0.2, 2.0);
        // conv weights [out][in]; transposed layer maps os->is so needs [in=3][out=2], the same memory.
        let w = ramp(3 * 2 * 9, 0.03, 6.0);
        let mut cx = vec![0.0; os.len()];
        conv2d_forward(&x, is, &w, &[0.0; 3], os, 3, 2, 1, &mut cx);
        let mut ty = vec![0.0; is.len()];
        conv_transpose2d_forward(&y, os, &w, &[0.0; 2], is, 3, 2, 1, &mut ty);
        let lhs: f64 = cx.iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(&ty).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
    }
}
