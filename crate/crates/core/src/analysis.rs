//! Post-hoc analyses over trained models: L1 weight-dependency
//! heatmaps, misclassification set differences, and the connectivity
//! ablation runner.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::float::Real;
use crate::model::{Connectivity, Model};
use crate::train::{multi_run, RunSummary, TrainConfig};

/// Heatmap normalization: one max for the whole matrix (default,
/// brightest cell = 1.0) or per target-channel column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HeatmapNorm {
    Global,
    PerColumn,
}

/// Mean absolute kernel weights of one dense layer, grouped by which
/// earlier source produced each input-channel slice.
///
/// Rows are source groups: first the block's input planes, then one
/// group per preceding layer (k channels each). Columns are the target
/// layer's k output channels. `boundary_after_row` marks where the
/// figure's bar between input planes and in-block layers sits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatmapMatrix {
    pub block_idx: usize,
    pub target_layer: usize,
    pub group_sizes: Vec<usize>,
    pub cols: usize,
    /// Row-major `[group_sizes.len(), cols]`, normalized to [0, 1].
    pub values: Vec<f64>,
    pub boundary_after_row: usize,
    pub norm: HeatmapNorm,
}

impl HeatmapMatrix {
    pub fn rows(&self) -> usize {
        self.group_sizes.len()
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    /// Mean normalized weight of the block-input source group.
    pub fn input_plane_mean(&self) -> f64 {
        let row = &self.values[0..self.cols];
        row.iter().sum::<f64>() / self.cols as f64
    }
}

/// Group the target layer's kernel `[k, c_in, 3]` by source and average
/// absolute weights over each group's channels and the filter width.
/// `target_layer` is 0-based and defaults to the last layer of the
/// block.
pub fn l1_dependency_matrix<T: Real>(
    model: &Model<T>,
    block_idx: usize,
    target_layer: Option<usize>,
    norm: HeatmapNorm,
) -> Result<HeatmapMatrix> {
    if model.config().connectivity != Connectivity::Dense {
        return Err(Error::Config(alloc::format!(
            "dependency heatmap needs dense connectivity, model is {:?}",
            model.config().connectivity
        )));
    }
    let layer_count = model.block_layers(block_idx)?;
    let target = target_layer.unwrap_or(layer_count - 1);
    let kernel = model.block_kernel(block_idx, target)?;
    let shape = kernel.shape();
    let (k, c_in, f) = (shape[0], shape[1], shape[2]);

    let n = model.config().channel_plan().blocks[block_idx].in_channels;
    let mut group_sizes = Vec::with_capacity(target + 1);
    group_sizes.push(n);
    group_sizes.extend(core::iter::repeat(model.config().growth_rate).take(target));
    if group_sizes.iter().sum::<usize>() != c_in {
        return Err(Error::Config(alloc::format!(
            "source groups {group_sizes:?} do not cover {c_in} input channels"
        )));
    }

    let rows = group_sizes.len();
    let mut values = alloc::vec![0.0f64; rows * k];
    let kd = kernel.data();
    let mut start = 0usize;
    for (row, &size) in group_sizes.iter().enumerate() {
        for out_c in 0..k {
            let mut sum = 0.0f64;
            for c in start..start + size {
                for t in 0..f {
                    sum += kd[(out_c * c_in + c) * f + t].to_f().abs();
                }
            }
            values[row * k + out_c] = sum / (size * f) as f64;
        }
        start += size;
    }
    drop(kd);

    match norm {
        HeatmapNorm::Global => {
            let max = values.iter().cloned().fold(0.0f64, f64::max);
            if max == 0.0 {
                return Err(Error::Data(String::from(
                    "dependency heatmap: target kernel is all zero",
                )));
            }
            for v in &mut values {
                *v /= max;
            }
        }
        HeatmapNorm::PerColumn => {
            for col in 0..k {
                let max = (0..rows).map(|r| values[r * k + col]).fold(0.0f64, f64::max);
                if max == 0.0 {
                    return Err(Error::Data(alloc::format!(
                        "dependency heatmap: column {col} is all zero"
                    )));
                }
                for r in 0..rows {
                    values[r * k + col] /= max;
                }
            }
        }
    }

    Ok(HeatmapMatrix {
        block_idx,
        target_layer: target,
        group_sizes,
        cols: k,
        values,
        boundary_after_row: 0,
        norm,
    })
}

/// One test item the reference model got right and the comparison model
/// got wrong.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseRecord {
    /// Dataset-order index of the example.
    pub index: usize,
    pub text: String,
    pub label: u8,
    pub pred_a: u8,
    pub pred_b: u8,
}

/// Items where `preds_a` is correct and `preds_b` is wrong, in dataset
/// order. Swapping a and b yields a disjoint list by construction.
pub fn error_set_diff(
    preds_a: &[u8],
    preds_b: &[u8],
    labels: &[u8],
    texts: &[String],
) -> Result<Vec<CaseRecord>> {
    let n = labels.len();
    if preds_a.len() != n || preds_b.len() != n || texts.len() != n {
        return Err(Error::Data(alloc::format!(
            "error_set_diff: lengths a={} b={} labels={} texts={}",
            preds_a.len(),
            preds_b.len(),
            n,
            texts.len()
        )));
    }
    let mut cases = Vec::new();
    for i in 0..n {
        if preds_a[i] == labels[i] && preds_b[i] != labels[i] {
            cases.push(CaseRecord {
                index: i,
                text: texts[i].clone(),
                label: labels[i],
                pred_a: preds_a[i],
                pred_b: preds_b[i],
            });
        }
    }
    Ok(cases)
}

/// One ablation-grid cell: a named config plus the inputs its runs
/// consume. The embedding must agree with the cell's model config.
pub struct AblationCell<'a, T: Real> {
    pub name: String,
    pub config: TrainConfig,
    pub embedding: &'a EmbeddingMatrix<T>,
    pub train: &'a Dataset,
    pub test: &'a Dataset,
    pub runs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationResult {
    pub name: String,
    pub summary: RunSummary,
}

/// `multi_run` once per cell, in order.
pub fn ablation_run<T: Real>(cells: &[AblationCell<'_, T>]) -> Result<Vec<AblationResult>> {
    let mut results = Vec::with_capacity(cells.len());
    for cell in cells {
        let (summary, _) =
            multi_run(&cell.config, cell.embedding, cell.train, cell.test, cell.runs)?;
        results.push(AblationResult { name: cell.name.clone(), summary });
    }
    Ok(results)
}

/// The structural axis of the ablation table: the base config at each
/// connectivity, named for the table rows.
pub fn connectivity_grid(base: &TrainConfig) -> Vec<(String, TrainConfig)> {
    [
        (Connectivity::Plain, "plain"),
        (Connectivity::Residual, "residual"),
        (Connectivity::Dense, "dense"),
    ]
    .iter()
    .map(|&(conn, name)| {
        let mut config = base.clone();
        config.model.connectivity = conn;
        (String::from(name), config)
    })
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{pad_and_filter, Example, Vocabulary};
    use crate::model::ModelConfig;
    use crate::rng::SeedRng;
    use alloc::collections::BTreeMap;
    use alloc::string::ToString;

    /// Dense model with block1 = (n=8 inputs, 4 layers, k=4): target
    /// layer 4 sees 8 + 3·4 = 20 input channels.
    fn heatmap_model() -> Model<f64> {
        let cfg = ModelConfig {
            block_sizes: [4, 4, 4, 4],
            growth_rate: 4,
            init_channels: 8,
            embed_dim: 4,
            max_len: 8,
            head_dims: alloc::vec![8, 2],
            ..ModelConfig::default()
        };
        let mut rng = SeedRng::seed_from_u64(3);
        let emb = alloc::vec![0.0; 12 * 4];
        Model::init(cfg, 12, emb, &mut rng).unwrap()
    }

    fn set_kernel(model: &Model<f64>, block: usize, layer: usize, f: impl Fn(usize) -> f64) {
        let kernel = model.block_kernel(block, layer).unwrap();
        let len = kernel.len();
        let vals: Vec<f64> = (0..len).map(f).collect();
        kernel.set_data(&vals);
    }

    #[test]
    fn group_structure_matches_channel_arithmetic() {
        let model = heatmap_model();
        let hm = l1_dependency_matrix(&model, 0, None, HeatmapNorm::Global).unwrap();
        assert_eq!(hm.target_layer, 3); // defaults to the last layer
        assert_eq!(hm.group_sizes, alloc::vec![8, 4, 4, 4]);
        assert_eq!(hm.cols, 4);
        assert_eq!(hm.values.len(), 16);
        assert_eq!(hm.boundary_after_row, 0);
        // He init: max exactly 1 after normalization, everything in [0,1]
        let max = hm.values.iter().cloned().fold(0.0f64, f64::max);
        assert_eq!(max, 1.0);
        assert!(hm.values.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn constructed_kernel_oracle_tenfold_group() {
        let model = heatmap_model();
        // target layer 4 (idx 3) kernel is [4, 20, 3]; input-plane slice
        // = channels 0..8. Magnitude 10 there, 1 elsewhere.
        set_kernel(&model, 0, 3, |i| {
            let c = (i / 3) % 20;
            if c < 8 {
                10.0
            } else {
                1.0
            }
        });
        let hm = l1_dependency_matrix(&model, 0, Some(3), HeatmapNorm::Global).unwrap();
        for col in 0..4 {
            assert!((hm.value(0, col) - 1.0).abs() < 1e-12);
            for row in 1..4 {
                assert!((hm.value(row, col) - 0.1).abs() < 1e-12);
            }
        }
        assert!((hm.input_plane_mean() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_kernel_normalizes_to_all_ones() {
        let model = heatmap_model();
        set_kernel(&model, 0, 2, |i| if i % 2 == 0 { 0.5 } else { -0.5 });
        let hm = l1_dependency_matrix(&model, 0, Some(2), HeatmapNorm::Global).unwrap();
        assert_eq!(hm.group_sizes, alloc::vec![8, 4, 4]);
        assert!(hm.values.iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn normalization_is_scale_invariant() {
        let model = heatmap_model();
        let before = l1_dependency_matrix(&model, 1, None, HeatmapNorm::Global).unwrap();
        let kernel = model.block_kernel(1, 3).unwrap();
        let scaled: Vec<f64> = kernel.to_vec().iter().map(|v| v * 3.5).collect();
        kernel.set_data(&scaled);
        let after = l1_dependency_matrix(&model, 1, None, HeatmapNorm::Global).unwrap();
        for (a, b) in before.values.iter().zip(&after.values) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn per_column_normalization_maxes_each_column() {
        let model = heatmap_model();
        // column 0 dominated by group 2, other columns by group 0
        set_kernel(&model, 0, 3, |i| {
            let out_c = i / (20 * 3);
            let c = (i / 3) % 20;
            match (out_c, c) {
                (0, 8..=11) => 4.0,
                (0, _) => 1.0,
                (_, 0..=7) => 2.0,
                _ => 1.0,
            }
        });
        let hm = l1_dependency_matrix(&model, 0, Some(3), HeatmapNorm::PerColumn).unwrap();
        for col in 0..4 {
            let colmax = (0..4).map(|r| hm.value(r, col)).fold(0.0f64, f64::max);
            assert!((colmax - 1.0).abs() < 1e-12, "column {col} max {colmax}");
        }
        assert!((hm.value(1, 0) - 1.0).abs() < 1e-12); // group 2 row, col 0
        let global = l1_dependency_matrix(&model, 0, Some(3), HeatmapNorm::Global).unwrap();
        assert_ne!(global.values, hm.values);
    }

    #[test]
    fn heatmap_rejects_non_dense_and_bad_indices() {
        let model = heatmap_model();
        assert!(l1_dependency_matrix(&model, 4, None, HeatmapNorm::Global).is_err());
        assert!(l1_dependency_matrix(&model, 0, Some(4), HeatmapNorm::Global).is_err());
        let cfg = ModelConfig {
            connectivity: Connectivity::Plain,
            block_sizes: [1, 1, 1, 1],
            growth_rate: 2,
            init_channels: 4,
            embed_dim: 4,
            max_len: 8,
            head_dims: alloc::vec![2],
            ..ModelConfig::default()
        };
        let mut rng = SeedRng::seed_from_u64(0);
        let plain = Model::<f64>::init(cfg, 4, alloc::vec![0.0; 16], &mut rng).unwrap();
        assert!(l1_dependency_matrix(&plain, 0, None, HeatmapNorm::Global).is_err());
    }

    #[test]
    fn set_diff_hand_oracle() {
        let labels = [1u8, 0];
        let texts = alloc::vec!["first".to_string(), "second".to_string()];
        let cases = error_set_diff(&[1, 0], &[1, 1], &labels, &texts).unwrap();
        assert_eq!(cases.len(), 1);
        assert_eq!(cases[0].index, 1);
        assert_eq!(cases[0].text, "second");
        assert_eq!((cases[0].label, cases[0].pred_a, cases[0].pred_b), (0, 0, 1));
    }

    #[test]
    fn set_diff_edges_and_disjointness() {
        let labels = [1u8, 0, 1, 0];
        let texts: Vec<String> = (0..4).map(|i| alloc::format!("t{i}")).collect();
        // identical predictions -> empty
        assert!(error_set_diff(&[1, 0, 0, 1], &[1, 0, 0, 1], &labels, &texts)
            .unwrap()
            .is_empty());
        // a all-wrong -> empty regardless of b
        assert!(error_set_diff(&[0, 1, 0, 1], &[1, 0, 1, 0], &labels, &texts)
            .unwrap()
            .is_empty());
        // diff(a,b) and diff(b,a) share no indices
        let a = [1u8, 1, 1, 0];
        let b = [0u8, 0, 1, 1];
        let ab = error_set_diff(&a, &b, &labels, &texts).unwrap();
        let ba = error_set_diff(&b, &a, &labels, &texts).unwrap();
        for x in &ab {
            assert!(ba.iter().all(|y| y.index != x.index));
        }
        assert!(!ab.is_empty() && !ba.is_empty());
        // length mismatch
        assert!(error_set_diff(&[1], &b, &labels, &texts).is_err());
    }

    fn tiny_setup(
        trainable: bool,
    ) -> (TrainConfig, EmbeddingMatrix<f32>, Dataset, Dataset) {
        let examples: Vec<Example> = (0..16)
            .map(|i| Example {
                text: if i % 2 == 0 {
                    alloc::format!("calm quiet morning {i}")
                } else {
                    alloc::format!("oh wow totally fine {i}")
                },
                label: (i % 2) as u8,
                source_id: i,
            })
            .collect();
        let texts: Vec<&str> = examples.iter().map(|e| e.text.as_str()).collect();
        let vocab = Vocabulary::build(texts.iter().copied(), 1);
        let mut config = TrainConfig::default();
        config.model = ModelConfig {
            block_sizes: [1, 1, 1, 1],
            growth_rate: 2,
            init_channels: 4,
            embed_dim: 4,
            max_len: 8,
            head_dims: alloc::vec![4, 2],
            embedding_trainable: trainable,
            ..ModelConfig::default()
        };
        config.training.epochs = 2;
        config.training.batch_size = 8;
        let mut rng = SeedRng::seed_from_u64(11);
        let emb = EmbeddingMatrix::build(&vocab, 4, &BTreeMap::new(), trainable, &mut rng).unwrap();
        let train = pad_and_filter(&examples[..12], &vocab, 8);
        let test = pad_and_filter(&examples[12..], &vocab, 8);
        (config, emb, train, test)
    }

    #[test]
    fn single_cell_matches_multi_run() {
        let (config, emb, train, test) = tiny_setup(true);
        let cells = [AblationCell {
            name: String::from("dense"),
            config: config.clone(),
            embedding: &emb,
            train: &train,
            test: &test,
            runs: 2,
        }];
        let results = ablation_run(&cells).unwrap();
        assert_eq!(results.len(), 1);
        let (direct, _) = multi_run(&config, &emb, &train, &test, 2).unwrap();
        assert_eq!(results[0].summary, direct);
    }

    #[test]
    fn static_cell_leaves_embedding_rows_untouched() {
        let (config, emb, train, test) = tiny_setup(false);
        let before = emb.values.clone();
        let (_, first) = multi_run(&config, &emb, &train, &test, 1).unwrap();
        let after: Vec<f32> = first.model.embedding().to_vec();
        assert_eq!(before, after, "static embedding drifted during training");
    }

    #[test]
    fn grid_covers_the_three_connectivities() {
        let base = TrainConfig::default();
        let grid = connectivity_grid(&base);
        let names: Vec<&str> = grid.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["plain", "residual", "dense"]);
        assert_eq!(grid[0].1.model.connectivity, Connectivity::Plain);
        assert_eq!(grid[2].1.model.connectivity, Connectivity::Dense);
        // everything else untouched
        assert_eq!(grid[1].1.optimizer, base.optimizer);
    }
}
