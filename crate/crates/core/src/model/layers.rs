//! Layer building blocks: the composite "convolution layer" (Conv →
//! BatchNorm → ReLU), the three block flavours, transitions, and the
//! pooled linear head.

use alloc::string::String;
use alloc::vec::Vec;

use super::param_name;
use crate::error::Result;
use crate::float::Real;
use crate::ops;
use crate::optim::he_init;
use crate::rng::SeedRng;
use crate::tape::GradTape;
use crate::tensor::Tensor;
use crate::Mode;

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

/// Collects named tensors in construction order so parameter iteration
/// is stable across runs and checkpoints.
pub(super) struct Registry<T: Real> {
    pub params: Vec<(String, Tensor<T>)>,
    pub buffers: Vec<(String, Tensor<T>)>,
}

impl<T: Real> Registry<T> {
    pub fn new() -> Self {
        Registry { params: Vec::new(), buffers: Vec::new() }
    }

    fn param(&mut self, name: String, t: Tensor<T>) -> Tensor<T> {
        let t = t.requires_grad();
        self.params.push((name, t.clone()));
        t
    }

    fn buffer(&mut self, name: String, t: Tensor<T>) -> Tensor<T> {
        self.buffers.push((name, t.clone()));
        t
    }
}

/// Conv → BatchNorm → ReLU. `embed_style` selects the initial 3×(d+2)
/// text convolution; otherwise a conv_seq with the stored pad.
pub(super) struct ConvBnRelu<T: Real> {
    weight: Tensor<T>,
    bias: Option<Tensor<T>>,
    gamma: Tensor<T>,
    beta: Tensor<T>,
    running_mean: Tensor<T>,
    running_var: Tensor<T>,
    pad: usize,
    embed_style: bool,
}

impl<T: Real> ConvBnRelu<T> {
    /// A dense-layer / transition convolution: kernels [c_out, c_in, f].
    pub fn seq(
        reg: &mut Registry<T>,
        prefix: &str,
        c_in: usize,
        c_out: usize,
        f: usize,
        pad: usize,
        rng: &mut SeedRng,
    ) -> Self {
        let weight = reg.param(
            param_name(&[prefix, "conv", "weight"]),
            he_init(&[c_out, c_in, f], c_in * f, rng),
        );
        Self::finish(reg, prefix, weight, None, c_out, pad, false)
    }

    /// The initial text convolution: kernels [c_out, 3, d+2] with a bias.
    pub fn embed(reg: &mut Registry<T>, prefix: &str, d: usize, c_out: usize, rng: &mut SeedRng) -> Self {
        let fan_in = 3 * (d + 2);
        let weight = reg.param(
            param_name(&[prefix, "conv", "weight"]),
            he_init(&[c_out, 3, d + 2], fan_in, rng),
        );
        let bias = reg.param(param_name(&[prefix, "conv", "bias"]), Tensor::zeros(&[c_out]));
        Self::finish(reg, prefix, weight, Some(bias), c_out, 1, true)
    }

    fn finish(
        reg: &mut Registry<T>,
        prefix: &str,
        weight: Tensor<T>,
        bias: Option<Tensor<T>>,
        c_out: usize,
        pad: usize,
        embed_style: bool,
    ) -> Self {
        let gamma = reg.param(param_name(&[prefix, "bn", "gamma"]), Tensor::full(&[c_out], T::one()));
        let beta = reg.param(param_name(&[prefix, "bn", "beta"]), Tensor::zeros(&[c_out]));
        let (rm, rv) = ops::norm::init_running_stats(c_out);
        let running_mean = reg.buffer(param_name(&[prefix, "bn", "running_mean"]), rm);
        let running_var = reg.buffer(param_name(&[prefix, "bn", "running_var"]), rv);
        ConvBnRelu { weight, bias, gamma, beta, running_mean, running_var, pad, embed_style }
    }

    pub fn forward(&self, tape: &GradTape<T>, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        let conv = if self.embed_style {
            ops::conv_embed(tape, x, &self.weight, self.bias.as_ref())?
        } else {
            ops::conv_seq(tape, x, &self.weight, self.bias.as_ref(), self.pad)?
        };
        let bn = ops::batchnorm(
            tape,
            &conv,
            &self.gamma,
            &self.beta,
            &self.running_mean,
            &self.running_var,
            mode,
            T::from_f(BN_EPS),
            T::from_f(BN_MOMENTUM),
        )?;
        Ok(ops::relu(tape, &bn))
    }

    /// Raw kernel handle; the dependency heatmap reads it.
    pub fn kernel(&self) -> &Tensor<T> {
        &self.weight
    }
}

/// One block of the chosen connectivity. Dense keeps the running
/// concatenation; residual adds layer outputs to their inputs (1×1
/// projection when widths differ, addition last); plain just chains.
pub(super) struct Block<T: Real> {
    pub layers: Vec<ConvBnRelu<T>>,
    pub projections: Vec<Option<Tensor<T>>>,
    pub connectivity: super::Connectivity,
}

impl<T: Real> Block<T> {
    pub fn new(
        reg: &mut Registry<T>,
        prefix: &str,
        connectivity: super::Connectivity,
        n_in: usize,
        n_layers: usize,
        k: usize,
        rng: &mut SeedRng,
    ) -> Self {
        let mut layers = Vec::with_capacity(n_layers);
        let mut projections = Vec::with_capacity(n_layers);
        let mut c = n_in;
        for l in 0..n_layers {
            let lp = alloc::format!("{prefix}.layer{}", l + 1);
            layers.push(ConvBnRelu::seq(reg, &lp, c, k, 3, 1, rng));
            let proj = match connectivity {
                super::Connectivity::Residual if c != k => Some(reg.param(
                    param_name(&[&lp, "proj", "weight"]),
                    he_init(&[k, c, 1], c, rng),
                )),
                _ => None,
            };
            projections.push(proj);
            c = match connectivity {
                super::Connectivity::Dense => c + k,
                _ => k,
            };
        }
        Block { layers, projections, connectivity }
    }

    pub fn forward(&self, tape: &GradTape<T>, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        match self.connectivity {
            super::Connectivity::Dense => {
                // Layer t sees concat(x, y_1, …, y_{t-1}); the block
                // emits concat(x, y_1, …, y_i).
                let mut feats = alloc::vec![x.clone()];
                for layer in &self.layers {
                    let input = if feats.len() == 1 {
                        feats[0].clone()
                    } else {
                        ops::concat_channels(tape, &feats)?
                    };
                    feats.push(layer.forward(tape, &input, mode)?);
                }
                if feats.len() == 1 {
                    Ok(feats.pop().unwrap())
                } else {
                    ops::concat_channels(tape, &feats)
                }
            }
            super::Connectivity::Residual => {
                let mut cur = x.clone();
                for (layer, proj) in self.layers.iter().zip(&self.projections) {
                    let y = layer.forward(tape, &cur, mode)?;
                    let skip = match proj {
                        Some(w) => ops::conv_seq(tape, &cur, w, None, 0)?,
                        None => cur,
                    };
                    cur = ops::add(tape, &y, &skip)?;
                }
                Ok(cur)
            }
            super::Connectivity::Plain => {
                let mut cur = x.clone();
                for layer in &self.layers {
                    cur = layer.forward(tape, &cur, mode)?;
                }
                Ok(cur)
            }
        }
    }
}

/// 1×1 convolution layer halving the channels, then kernel-2 average
/// pooling halving the signal.
pub(super) struct Transition<T: Real> {
    conv: ConvBnRelu<T>,
}

impl<T: Real> Transition<T> {
    pub fn new(reg: &mut Registry<T>, prefix: &str, c_in: usize, rng: &mut SeedRng) -> Self {
        Transition { conv: ConvBnRelu::seq(reg, prefix, c_in, c_in / 2, 1, 0, rng) }
    }

    pub fn forward(&self, tape: &GradTape<T>, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        let y = self.conv.forward(tape, x, mode)?;
        ops::avg_pool_k2(tape, &y)
    }
}

/// Global max+avg pooling, concatenation, then the linear stack with
/// leaky ReLU and dropout between layers. Emits logits.
pub(super) struct Head<T: Real> {
    linears: Vec<(Tensor<T>, Tensor<T>)>,
    leaky_slope: f64,
    dropout_rate: f64,
}

impl<T: Real> Head<T> {
    pub fn new(
        reg: &mut Registry<T>,
        m: usize,
        dims: &[usize],
        leaky_slope: f64,
        dropout_rate: f64,
        rng: &mut SeedRng,
    ) -> Self {
        let mut linears = Vec::with_capacity(dims.len());
        let mut n_in = m;
        for (i, &n_out) in dims.iter().enumerate() {
            let lp = alloc::format!("head.linear{}", i + 1);
            let w = reg.param(param_name(&[&lp, "weight"]), he_init(&[n_out, n_in], n_in, rng));
            let b = reg.param(param_name(&[&lp, "bias"]), Tensor::zeros(&[n_out]));
            linears.push((w, b));
            n_in = n_out;
        }
        Head { linears, leaky_slope, dropout_rate }
    }

    pub fn forward(
        &self,
        tape: &GradTape<T>,
        x: &Tensor<T>,
        mode: Mode,
        rng: &mut SeedRng,
    ) -> Result<Tensor<T>> {
        let b = x.shape()[0];
        let maxed = ops::global_max_pool(tape, x)?;
        let avged = ops::global_avg_pool(tape, x)?;
        let pooled = ops::concat_channels(tape, &[maxed, avged])?;
        let m = pooled.len() / b;
        let mut cur = ops::reshape(tape, &pooled, &[b, m])?;
        let last = self.linears.len() - 1;
        for (i, (w, bias)) in self.linears.iter().enumerate() {
            cur = ops::affine(tape, &cur, w, bias)?;
            if i < last {
                cur = ops::leaky_relu(tape, &cur, T::from_f(self.leaky_slope));
                cur = ops::dropout(tape, &cur, self.dropout_rate, mode, rng)?;
            }
        }
        Ok(cur)
    }
}
