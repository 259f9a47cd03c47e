//! Autoencoder architecture descriptor and the flat parameter layout derived from it.

use serde::{Deserialize, Serialize};

use crate::error::{R2rError, Result};
use crate::tensor::Shape3;

/// Convolutional autoencoder shape: a stack of strided convolutions, a dense
/// bottleneck, and a mirrored decoder of transposed convolutions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input: Shape3,
    /// Output channels of each encoder convolution.
    pub channels: Vec<usize>,
    pub kernel: usize,
    pub stride: usize,
    pub latent_dim: usize,
}

impl Default for Architecture {
    /// Three stride-2 3x3 convolutions (16/32/64) into a 128-d latent, for 3x32x32 input.
    fn default() -> Self {
        Architecture {
            input: Shape3::new(3, 32, 32),
            channels: vec![16, 32, 64],
            kernel: 3,
            stride: 2,
            latent_dim: 128,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Sigmoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Conv {
        input: Shape3,
        output: Shape3,
    },
    ConvTranspose {
        input: Shape3,
        output: Shape3,
    },
    Dense {
        inputs: usize,
        outputs: usize,
    },
}

/// One layer with the location of its weights and biases in the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layer {
    pub kind: LayerKind,
    pub activation: Activation,
    pub weight_offset: usize,
    pub bias_offset: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
}

impl Layer {
    pub fn weight_len(&self) -> usize {
        let k2 = self.kernel * self.kernel;
        match self.kind {
            LayerKind::Conv { input, output } | LayerKind::ConvTranspose { input, output } => {
                input.channels * output.channels * k2
            }
            LayerKind::Dense { inputs, outputs } => inputs * outputs,
        }
    }

    pub fn bias_len(&self) -> usize {
        match self.kind {
            LayerKind::Conv { output, .. } | LayerKind::ConvTranspose { output, .. } => {
                output.channels
            }
            LayerKind::Dense { outputs, .. } => outputs,
        }
    }

    pub fn input_len(&self) -> usize {
        match self.kind {
            LayerKind::Conv { input, .. } | LayerKind::ConvTranspose { input, .. } => input.len(),
            LayerKind::Dense { inputs, .. } => inputs,
        }
    }

    pub fn output_len(&self) -> usize {
        match self.kind {
            LayerKind::Conv { output, .. } | LayerKind::ConvTranspose { output, .. } => {
                output.len()
            }
            LayerKind::Dense { outputs, .. } => outputs,
        }
    }

    /// Fan-in used for He-style initialization.
    pub fn fan_in(&self) -> usize {
        let k2 = self.kernel * self.kernel;
        match self.kind {
            LayerKind::Conv { input, .. } => input.channels * k2,
            LayerKind::ConvTranspose { input, .. } => {
                (input.channels * k2 / (self.stride * self.stride)).max(1)
            }
            LayerKind::Dense { inputs, .. } => inputs,
        }
    }
}

/// Layers of the encoder and decoder, in forward order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub encoder: Vec<Layer>,
    pub decoder: Vec<Layer>,
    pub param_count: usize,
}

fn conv_out(size: usize, kernel: usize, stride: usize, padding: usize) -> Option<usize> {
    (size + 2 * padding)
        .checked_sub(kernel)
        .map(|v| v / stride + 1)
}

impl Architecture {
    pub fn padding(&self) -> usize {
        self.kernel / 2
    }

    pub fn validate(&self) -> Result<()> {
        self.layout().map(|_| ())
    }

    /// Computes the layer stack. Fails when the decoder cannot mirror the encoder exactly.
    pub fn layout(&self) -> Result<Layout> {
        if self.input.is_empty() {
            return Err(R2rError::invalid("input", "empty input shape"));
        }
        if self.latent_dim == 0 {
            return Err(R2rError::invalid("latent_dim", "must be positive"));
        }
        if self.kernel == 0 || self.stride == 0 {
            return Err(R2rError::invalid("kernel", "kernel and stride must be positive"));
        }
        if self.channels.contains(&0) {
            return Err(R2rError::invalid("channels", "zero channel count"));
        }
        let pad = self.padding();
        let mut shapes = vec![self.input];
        for &c in &self.channels {
            let prev = *shapes.last().unwrap();
            let h = conv_out(prev.height, self.kernel, self.stride, pad);
            let w = conv_out(prev.width, self.kernel, self.stride, pad);
            match (h, w) {
                (Some(h), Some(w)) if h > 0 && w > 0 => shapes.push(Shape3::new(c, h, w)),
                _ => {
                    return Err(R2rError::invalid(
                        "input",
                        format!("spatial size {prev} too small for conv stack"),
                    ))
                }
            }
        }

        let mut offset = 0;
        let mut push = |kind: LayerKind, activation: Activation, out: &mut Vec<Layer>| {
            let mut layer = Layer {
                kind,
                activation,
                weight_offset: offset,
                bias_offset: 0,
                kernel: self.kernel,
                stride: self.stride,
                padding: pad,
            };
            if let LayerKind::Dense { .. } = kind {
                layer.kernel = 1;
                layer.stride = 1;
                layer.padding = 0;
            }
            layer.bias_offset = offset + layer.weight_len();
            offset = layer.bias_offset + layer.bias_len();
            out.push(layer);
        };

        let mut encoder = Vec::new();
        for pair in shapes.windows(2) {
            push(
                LayerKind::Conv {
                    input: pair[0],
                    output: pair[1],
                },
                Activation::Relu,
                &mut encoder,
            );
        }
        let bottleneck = *shapes.last().unwrap();
        push(
            LayerKind::Dense {
                inputs: bottleneck.len(),
                outputs: self.latent_dim,
            },
            Activation::Identity,
            &mut encoder,
        );

        let mut decoder = Vec::new();
        let has_conv = !self.channels.is_empty();
        push(
            LayerKind::Dense {
                inputs: self.latent_dim,
                outputs: bottleneck.len(),
            },
            if has_conv {
                Activation::Relu
            } else {
                Activation::Sigmoid
            },
            &mut decoder,
        );
        for l in (0..self.channels.len()).rev() {
            let input = shapes[l + 1];
            let output = shapes[l];
            for (small, big) in [(input.height, output.height), (input.width, output.width)] {
                let base = ((small - 1) * self.stride + self.kernel).checked_sub(2 * pad);
                match base {
                    Some(b) if big >= b && big - b < self.stride.max(1) => {}
                    _ => {
                        return Err(R2rError::invalid(
                            "input",
                            format!("transposed convolution cannot restore size {big} from {small}"),
                        ))
                    }
                }
            }
            push(
                LayerKind::ConvTranspose { input, output },
                if l == 0 {
                    Activation::Sigmoid
                } else {
                    Activation::Relu
                },
                &mut decoder,
            );
        }

        Ok(Layout {
            encoder,
            decoder,
            param_count: offset,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_architecture_mirrors_input() {
        let arch = Architecture::default();
        let layout = arch.layout().unwrap();
        assert_eq!(layout.encoder.len(), 4);
        assert_eq!(layout.decoder.len(), 4);
        let last = layout.decoder.last().unwrap();
        assert_eq!(last.output_len(), arch.input.len());
        assert_eq!(layout.encoder.last().unwrap().output_len(), 128);
        // 3->16->32->64 convs on 32x32 leave a 64x4x4 bottleneck.
        assert_eq!(layout.encoder[3].input_len(), 64 * 4 * 4);
    }

    #[test]
    fn param_count_matches_layer_sum() {
        let arch = Architecture {
            input: Shape3::new(1, 12, 12),
            channels: vec![4, 8],
            kernel: 3,
            stride: 2,
            latent_dim: 6,
        };
        let layout = arch.layout().unwrap();
        let total: usize = layout
            .encoder
            .iter()
            .chain(&layout.decoder)
            .map(|l| l.weight_len() + l.bias_len())
            .sum();
        assert_eq!(total, layout.param_count);
    }

    #[test]
    fn odd_sizes_are_restored_or_rejected() {
        let mut arch = Architecture {
            input: Shape3::new(1, 7, 7),
            channels: vec![2],
            kernel: 3,
            stride: 2,
            latent_dim: 3,
        };
        // 7 -> 4 -> back to 7 needs output padding 0: fine.
        assert!(arch.validate().is_ok());
        arch.input = Shape3::new(1, 1, 1);
        arch.channels = vec![2, 2];
        assert!(arch.validate().is_ok());
        arch.latent_dim = 0;
        assert!(arch.validate().is_err());
    }
}
