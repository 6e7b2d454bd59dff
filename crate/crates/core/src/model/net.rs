//! The assembled network: parameter construction, stable naming, and the
//! end-to-end forward pass.

use alloc::string::String;
use alloc::vec::Vec;

use super::layers::{Block, ConvBnRelu, Head, Registry, Transition};
use super::ModelConfig;
use crate::error::{Error, Result};
use crate::float::Real;
use crate::ops;
use crate::rng::SeedRng;
use crate::tape::GradTape;
use crate::tensor::Tensor;
use crate::Mode;

pub struct Model<T: Real> {
    config: ModelConfig,
    vocab_size: usize,
    embedding: Tensor<T>,
    initial: ConvBnRelu<T>,
    blocks: Vec<Block<T>>,
    transitions: Vec<Transition<T>>,
    head: Head<T>,
    params: Vec<(String, Tensor<T>)>,
    buffers: Vec<(String, Tensor<T>)>,
}

impl<T: Real> Model<T> {
    /// Build a model with He-initialized kernels (biases zero, BN gamma
    /// 1 / beta 0, running stats 0/1) around a prepared embedding table.
    /// All draws come from `rng` in construction order, so equal seeds
    /// give bit-identical models.
    pub fn init(
        config: ModelConfig,
        vocab_size: usize,
        embedding_values: Vec<T>,
        rng: &mut SeedRng,
    ) -> Result<Self> {
        config.validate()?;
        if vocab_size < 2 {
            return Err(Error::Config(alloc::format!(
                "vocabulary of {vocab_size} lacks PAD/UNK rows"
            )));
        }
        if embedding_values.len() != vocab_size * config.embed_dim {
            return Err(Error::Config(alloc::format!(
                "embedding values {} != vocab {} x d {}",
                embedding_values.len(),
                vocab_size,
                config.embed_dim
            )));
        }
        let mut reg = Registry::new();
        let embedding = Tensor::from_vec(&[vocab_size, config.embed_dim], embedding_values)?;
        let embedding = if config.embedding_trainable {
            let e = embedding.requires_grad();
            reg.params.push((String::from("embedding.weight"), e.clone()));
            e
        } else {
            reg.buffers.push((String::from("embedding.weight"), embedding.clone()));
            embedding
        };

        let initial = ConvBnRelu::embed(&mut reg, "initial", config.embed_dim, config.init_channels, rng);

        let plan = config.channel_plan();
        let mut blocks = Vec::with_capacity(4);
        let mut transitions = Vec::with_capacity(3);
        for (i, bp) in plan.blocks.iter().enumerate() {
            let prefix = alloc::format!("block{}", i + 1);
            blocks.push(Block::new(
                &mut reg,
                &prefix,
                config.connectivity,
                bp.in_channels,
                config.block_sizes[i],
                config.growth_rate,
                rng,
            ));
            if i < 3 {
                let tp = alloc::format!("trans{}", i + 1);
                transitions.push(Transition::new(&mut reg, &tp, bp.out_channels, rng));
            }
        }
        let head = Head::new(
            &mut reg,
            plan.m,
            &config.head_dims,
            config.leaky_slope,
            config.dropout_rate,
            rng,
        );

        Ok(Model {
            config,
            vocab_size,
            embedding,
            initial,
            blocks,
            transitions,
            head,
            params: reg.params,
            buffers: reg.buffers,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn embedding(&self) -> &Tensor<T> {
        &self.embedding
    }

    /// Trainable tensors in stable construction order.
    pub fn named_params(&self) -> &[(String, Tensor<T>)] {
        &self.params
    }

    /// Non-trainable tensors (BN running stats; the embedding when
    /// static), same ordering guarantee.
    pub fn named_buffers(&self) -> &[(String, Tensor<T>)] {
        &self.buffers
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(|(_, t)| t.len()).sum()
    }

    pub fn zero_grads(&self) {
        for (_, t) in &self.params {
            t.zero_grad();
        }
    }

    /// Logits `[batch, 2]` for a flattened `[batch, s]` id matrix. `rng`
    /// drives dropout and is only consumed in train mode.
    pub fn forward(
        &self,
        tape: &GradTape<T>,
        ids: &[u32],
        batch: usize,
        mode: Mode,
        rng: &mut SeedRng,
    ) -> Result<Tensor<T>> {
        if batch == 0 || ids.len() % batch != 0 {
            return Err(Error::Shape(alloc::format!(
                "forward: {} ids for batch {batch}",
                ids.len()
            )));
        }
        let s = ids.len() / batch;
        if s < 8 {
            return Err(Error::Shape(alloc::format!(
                "forward: sequence length {s} cannot survive three halvings"
            )));
        }
        let x = ops::embed_lookup(tape, ids, batch, &self.embedding)?;
        let mut cur = self.initial.forward(tape, &x, mode)?;
        for (i, block) in self.blocks.iter().enumerate() {
            cur = block.forward(tape, &cur, mode)?;
            if i < 3 {
                cur = self.transitions[i].forward(tape, &cur, mode)?;
            }
        }
        self.head.forward(tape, &cur, mode, rng)
    }

    /// Eval-mode class probabilities, rows summing to 1.
    pub fn predict_probs(&self, ids: &[u32], batch: usize) -> Result<Tensor<T>> {
        let tape = GradTape::disabled();
        let mut rng = SeedRng::seed_from_u64(0); // unused in eval mode
        let logits = self.forward(&tape, ids, batch, Mode::Eval, &mut rng)?;
        ops::loss::softmax_rows(&logits)
    }

    /// Number of conv layers in a block (for analysis bounds checks).
    pub fn block_layers(&self, block_idx: usize) -> Result<usize> {
        self.blocks
            .get(block_idx)
            .map(|b| b.layers.len())
            .ok_or_else(|| Error::Config(alloc::format!("block index {block_idx} out of 4")))
    }

    /// Kernel tensor of one conv layer, `[k, c_in, 3]`; the dependency
    /// heatmap reads these.
    pub fn block_kernel(&self, block_idx: usize, layer_idx: usize) -> Result<Tensor<T>> {
        let block = self
            .blocks
            .get(block_idx)
            .ok_or_else(|| Error::Config(alloc::format!("block index {block_idx} out of 4")))?;
        let layer = block.layers.get(layer_idx).ok_or_else(|| {
            Error::Config(alloc::format!(
                "layer index {layer_idx} out of {} in block {block_idx}",
                block.layers.len()
            ))
        })?;
        Ok(layer.kernel().clone())
    }

    /// Overwrite every named tensor from `(name, values)` pairs; names
    /// must cover the model exactly (checkpoint restore).
    pub fn load_values(&self, mut named: alloc::collections::BTreeMap<String, Vec<T>>) -> Result<()> {
        for (name, tensor) in self.params.iter().chain(self.buffers.iter()) {
            let values = named.remove(name).ok_or_else(|| {
                Error::Config(alloc::format!("checkpoint missing tensor {name}"))
            })?;
            if values.len() != tensor.len() {
                return Err(Error::Config(alloc::format!(
                    "checkpoint tensor {name} has {} values, model wants {}",
                    values.len(),
                    tensor.len()
                )));
            }
            tensor.set_data(&values);
        }
        if let Some((name, _)) = named.into_iter().next() {
            return Err(Error::Config(alloc::format!(
                "checkpoint tensor {name} has no home in this config"
            )));
        }
        Ok(())
    }
}
