//! The dweNet architecture and its ablation variants: embedding →
//! initial 3×(d+2) convolution → four blocks with transitions →
//! max+avg-pooled classifier head.

mod layers;
mod net;

pub use layers::{BN_EPS, BN_MOMENTUM};
pub use net::Model;

use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How layers inside a block combine: channel concatenation (dense),
/// elementwise addition (residual ablation), or nothing (plain CNN
/// ablation).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Connectivity {
    Dense,
    Residual,
    Plain,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub connectivity: Connectivity,
    pub block_sizes: [usize; 4],
    pub growth_rate: usize,
    pub init_channels: usize,
    pub embed_dim: usize,
    pub max_len: usize,
    /// Linear widths after the pooled features; the last entry is the
    /// class count and must be 2.
    pub head_dims: Vec<usize>,
    pub leaky_slope: f64,
    pub dropout_rate: f64,
    pub embedding_trainable: bool,
}

impl Default for ModelConfig {
    /// The full dweNet: growth rate 32, blocks (6, 12, 24, 16),
    /// GloVe-50 non-static, m → 512 → 128 → 2 head.
    fn default() -> Self {
        ModelConfig {
            connectivity: Connectivity::Dense,
            block_sizes: [6, 12, 24, 16],
            growth_rate: 32,
            init_channels: 64,
            embed_dim: 50,
            max_len: 64,
            head_dims: alloc::vec![512, 128, 2],
            leaky_slope: 0.01,
            dropout_rate: 0.2,
            embedding_trainable: true,
        }
    }
}

impl ModelConfig {
    /// Depth presets named by their layer-count labels: 8 → one layer
    /// per block, 28 → (3, 4, 6, 3), 56 → (6, 12, 24, 16).
    pub fn with_depth_label(mut self, depth: usize) -> Result<Self> {
        self.block_sizes = match depth {
            8 => [1, 1, 1, 1],
            28 => [3, 4, 6, 3],
            56 => [6, 12, 24, 16],
            other => {
                return Err(Error::Config(alloc::format!(
                    "no depth preset named {other} (have 8, 28, 56)"
                )))
            }
        };
        Ok(self)
    }

    pub fn with_growth_rate(mut self, k: usize) -> Self {
        self.growth_rate = k;
        self
    }

    pub fn with_connectivity(mut self, c: Connectivity) -> Self {
        self.connectivity = c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.growth_rate == 0 || self.init_channels == 0 || self.embed_dim == 0 {
            return Err(Error::Config(alloc::format!(
                "growth_rate/init_channels/embed_dim must be positive"
            )));
        }
        if self.block_sizes.iter().any(|&i| i == 0) {
            return Err(Error::Config(alloc::format!(
                "block_sizes must be positive, got {:?}",
                self.block_sizes
            )));
        }
        // Three floor-halvings of the signal must keep every transition's
        // input signal at least 2.
        if self.max_len < 8 {
            return Err(Error::Config(alloc::format!(
                "max_len {} too short for three halvings",
                self.max_len
            )));
        }
        if self.head_dims.is_empty() || *self.head_dims.last().unwrap() != 2 {
            return Err(Error::Config(alloc::format!(
                "head_dims must end in the 2 output classes, got {:?}",
                self.head_dims
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(alloc::format!(
                "dropout_rate {} outside [0, 1)",
                self.dropout_rate
            )));
        }
        Ok(())
    }

    /// Channel/signal bookkeeping for each block, plus the pooled
    /// feature count m = 2·C4.
    pub fn channel_plan(&self) -> ChannelPlan {
        let mut blocks = Vec::with_capacity(4);
        let mut c = self.init_channels;
        let mut s = self.max_len;
        for (idx, &layers) in self.block_sizes.iter().enumerate() {
            let out = match self.connectivity {
                Connectivity::Dense => c + layers * self.growth_rate,
                Connectivity::Residual | Connectivity::Plain => {
                    if layers == 0 {
                        c
                    } else {
                        self.growth_rate
                    }
                }
            };
            blocks.push(BlockPlan {
                in_channels: c,
                out_channels: out,
                signal: s,
            });
            if idx < 3 {
                c = out / 2;
                s /= 2;
            } else {
                c = out;
            }
        }
        ChannelPlan {
            m: 2 * blocks[3].out_channels,
            blocks,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockPlan {
    pub in_channels: usize,
    pub out_channels: usize,
    /// Signal length entering (and, dense semantics, leaving) the block.
    pub signal: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChannelPlan {
    pub blocks: Vec<BlockPlan>,
    pub m: usize,
}

/// Stable display name for parameter/buffer tensors.
pub(crate) fn param_name(parts: &[&str]) -> String {
    parts.join(".")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_plan_matches_hand_walk() {
        // 64 +6·32=256 | /2=128 +12·32=512 | /2=256 +24·32=1024 |
        // /2=512 +16·32=1024; signals 64, 32, 16, 8; m = 2048.
        let plan = ModelConfig::default().channel_plan();
        let out: Vec<(usize, usize)> = plan.blocks.iter().map(|b| (b.out_channels, b.signal)).collect();
        assert_eq!(out, vec![(256, 64), (512, 32), (1024, 16), (1024, 8)]);
        assert_eq!(plan.m, 2048);
    }

    #[test]
    fn depth_presets() {
        let c8 = ModelConfig::default().with_depth_label(8).unwrap();
        assert_eq!(c8.block_sizes, [1, 1, 1, 1]);
        let c28 = ModelConfig::default().with_depth_label(28).unwrap();
        assert_eq!(c28.block_sizes, [3, 4, 6, 3]);
        let c56 = ModelConfig::default().with_depth_label(56).unwrap();
        assert_eq!(c56.block_sizes, [6, 12, 24, 16]);
        assert!(ModelConfig::default().with_depth_label(17).is_err());
    }

    #[test]
    fn heatmap_config_plan() {
        // 16 layers, blocks (4,4,4,4), growth 4: final block input 22,
        // last layer input channels 22 + 3·4 = 34.
        let cfg = ModelConfig {
            block_sizes: [4, 4, 4, 4],
            growth_rate: 4,
            ..ModelConfig::default()
        };
        let plan = cfg.channel_plan();
        let ins: Vec<usize> = plan.blocks.iter().map(|b| b.in_channels).collect();
        assert_eq!(ins, vec![64, 40, 28, 22]);
        assert_eq!(plan.blocks[3].out_channels, 38);
        assert_eq!(plan.m, 76);
    }

    #[test]
    fn plain_and_residual_fix_width_at_growth_rate() {
        for conn in [Connectivity::Plain, Connectivity::Residual] {
            let cfg = ModelConfig {
                connectivity: conn,
                block_sizes: [1, 1, 1, 1],
                growth_rate: 4,
                ..ModelConfig::default()
            };
            let plan = cfg.channel_plan();
            assert!(plan.blocks.iter().all(|b| b.out_channels == 4));
            // transitions halve 4 -> 2 between blocks
            assert_eq!(plan.blocks[1].in_channels, 2);
            assert_eq!(plan.m, 8);
        }
    }

    #[test]
    fn signals_floor_halve_for_odd_lengths() {
        let cfg = ModelConfig { max_len: 15, ..ModelConfig::default() };
        let plan = cfg.channel_plan();
        let sig: Vec<usize> = plan.blocks.iter().map(|b| b.signal).collect();
        assert_eq!(sig, vec![15, 7, 3, 1]);
    }

    #[test]
    fn validation_rejects_bad_configs() {
        assert!(ModelConfig::default().validate().is_ok());
        assert!(ModelConfig { growth_rate: 0, ..ModelConfig::default() }.validate().is_err());
        assert!(ModelConfig { max_len: 4, ..ModelConfig::default() }.validate().is_err());
        assert!(ModelConfig { head_dims: alloc::vec![512, 3], ..ModelConfig::default() }
            .validate()
            .is_err());
        assert!(ModelConfig { dropout_rate: 1.0, ..ModelConfig::default() }.validate().is_err());
        assert!(ModelConfig { block_sizes: [1, 0, 1, 1], ..ModelConfig::default() }
            .validate()
            .is_err());
    }
}
