//! Property tests for the invariants the unit suites check pointwise:
//! structural identities that must hold for arbitrary shapes, seeds and
//! values.

use proptest::prelude::*;

use dwenet_core::analysis::{l1_dependency_matrix, error_set_diff, HeatmapNorm};
use dwenet_core::data::{split_train_test, tokenize, Example};
use dwenet_core::model::{Model, ModelConfig};
use dwenet_core::ops;
use dwenet_core::optim::{one_cycle, OneCycleSpec};
use dwenet_core::rng::SeedRng;
use dwenet_core::tensor::slice_channels;
use dwenet_core::{GradTape, Mode, Tensor};

fn finite_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-50.0f64..50.0, len..=len)
}

proptest! {
    #[test]
    fn tokenize_is_a_fixpoint_of_its_own_output(text in ".{0,60}") {
        let once = tokenize(&text);
        let rejoined = once.join(" ");
        prop_assert_eq!(tokenize(&rejoined), once);
    }

    #[test]
    fn concat_then_slice_recovers_every_part(
        b in 1usize..3,
        s in 1usize..6,
        c1 in 1usize..4,
        c2 in 1usize..4,
        seed in 0u64..1000,
    ) {
        let mut rng = SeedRng::seed_from_u64(seed);
        let mk = |c: usize, rng: &mut SeedRng| {
            let vals: Vec<f64> = (0..b * c * s).map(|_| rng.normal()).collect();
            Tensor::from_vec(&[b, c, s], vals).unwrap()
        };
        let x = mk(c1, &mut rng);
        let y = mk(c2, &mut rng);
        let tape = GradTape::disabled();
        let joined = ops::concat_channels(&tape, &[x.clone(), y.clone()]).unwrap();
        prop_assert_eq!(joined.shape(), vec![b, c1 + c2, s]);
        let back_x = slice_channels(&joined, 0, c1).unwrap();
        let back_y = slice_channels(&joined, c1, c1 + c2).unwrap();
        prop_assert_eq!(back_x.to_vec(), x.to_vec());
        prop_assert_eq!(back_y.to_vec(), y.to_vec());
    }

    #[test]
    fn odd_kernels_with_matching_pad_preserve_length(
        s in 1usize..40,
        c_in in 1usize..3,
        c_out in 1usize..3,
        half in 0usize..3, // f = 1, 3, 5
        seed in 0u64..1000,
    ) {
        let f = 2 * half + 1;
        prop_assume!(s + 2 * half >= f);
        let mut rng = SeedRng::seed_from_u64(seed);
        let xv: Vec<f64> = (0..c_in * s).map(|_| rng.normal()).collect();
        let wv: Vec<f64> = (0..c_out * c_in * f).map(|_| rng.normal()).collect();
        let x = Tensor::from_vec(&[c_in, s], xv).unwrap();
        let w = Tensor::from_vec(&[c_out, c_in, f], wv).unwrap();
        let tape = GradTape::disabled();
        let y = ops::conv_seq(&tape, &x, &w, None, half).unwrap();
        prop_assert_eq!(y.shape(), vec![c_out, s]);
    }

    #[test]
    fn softmax_rows_are_distributions(
        b in 1usize..5,
        k in 2usize..5,
        seed in 0u64..1000,
    ) {
        let mut rng = SeedRng::seed_from_u64(seed);
        let vals: Vec<f64> = (0..b * k).map(|_| rng.normal::<f64>() * 20.0).collect();
        let logits = Tensor::from_vec(&[b, k], vals).unwrap();
        let probs = ops::softmax_rows(&logits).unwrap();
        let pd = probs.to_vec();
        for row in pd.chunks(k) {
            let sum: f64 = row.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            prop_assert!(row.iter().all(|&p| (0.0..=1.0).contains(&p)));
        }
    }

    #[test]
    fn split_is_disjoint_covering_and_sized(
        n0 in 2usize..40,
        n1 in 2usize..40,
        frac_pct in 0usize..=100,
        seed in 0u64..1000,
    ) {
        let frac = frac_pct as f64 / 100.0;
        let mut examples = Vec::new();
        for i in 0..n0 + n1 {
            examples.push(Example {
                text: format!("item {i}"),
                label: u8::from(i >= n0),
                source_id: i,
            });
        }
        let (train, test) = split_train_test(&examples, frac, seed).unwrap();
        let mut ids: Vec<usize> =
            train.iter().chain(&test).map(|e| e.source_id).collect();
        ids.sort_unstable();
        prop_assert_eq!(ids, (0..n0 + n1).collect::<Vec<_>>());
        let expect = |n: usize| (frac * n as f64).round() as usize;
        prop_assert_eq!(test.iter().filter(|e| e.label == 0).count(), expect(n0));
        prop_assert_eq!(test.iter().filter(|e| e.label == 1).count(), expect(n1));
        let (train2, test2) = split_train_test(&examples, frac, seed).unwrap();
        prop_assert_eq!(train2, train);
        prop_assert_eq!(test2, test);
    }

    #[test]
    fn set_diffs_never_share_indices(
        preds in proptest::collection::vec((0u8..2, 0u8..2, 0u8..2), 0..50),
    ) {
        let a: Vec<u8> = preds.iter().map(|p| p.0).collect();
        let b: Vec<u8> = preds.iter().map(|p| p.1).collect();
        let labels: Vec<u8> = preds.iter().map(|p| p.2).collect();
        let texts: Vec<String> = (0..preds.len()).map(|i| format!("t{i}")).collect();
        let ab = error_set_diff(&a, &b, &labels, &texts).unwrap();
        let ba = error_set_diff(&b, &a, &labels, &texts).unwrap();
        for x in &ab {
            prop_assert!(ba.iter().all(|y| y.index != x.index));
        }
        // every reported case really is an a-right/b-wrong example
        for c in &ab {
            prop_assert_eq!(c.pred_a, labels[c.index]);
            prop_assert_ne!(c.pred_b, labels[c.index]);
        }
    }

    #[test]
    fn dense_channel_plan_follows_the_growth_formula(
        b1 in 1usize..6,
        b2 in 1usize..6,
        b3 in 1usize..6,
        b4 in 1usize..6,
        k in 1usize..9,
        init in 1usize..17,
    ) {
        let cfg = ModelConfig {
            block_sizes: [b1, b2, b3, b4],
            growth_rate: k,
            init_channels: init,
            ..ModelConfig::default()
        };
        let plan = cfg.channel_plan();
        let mut c = init;
        for (i, bp) in plan.blocks.iter().enumerate() {
            prop_assert_eq!(bp.in_channels, c);
            prop_assert_eq!(bp.out_channels, c + cfg.block_sizes[i] * k);
            c = bp.out_channels / 2;
        }
        prop_assert_eq!(plan.m, 2 * plan.blocks[3].out_channels);
    }

    #[test]
    fn one_cycle_stays_in_range_and_moves_smoothly(
        total in 2usize..5000,
        lr_exp in -5.0f64..-1.0,
    ) {
        let lr_max = 10f64.powf(lr_exp);
        let spec = OneCycleSpec::new(lr_max, total).unwrap();
        let peak = spec.peak_step();
        let floor = lr_max / (spec.div * spec.final_div);
        let max_jump =
            lr_max * core::f64::consts::PI / (2.0 * peak.min(total - peak) as f64);
        let mut prev = None;
        for step in 0..=total {
            let (lr, mom) = one_cycle(step, &spec).unwrap();
            prop_assert!(lr <= lr_max * (1.0 + 1e-12) && lr >= floor * (1.0 - 1e-12));
            prop_assert!((spec.mom_low..=spec.mom_high).contains(&mom));
            if let Some(p) = prev {
                prop_assert!((lr - p as f64).abs() <= max_jump * (1.0 + 1e-9));
            }
            prev = Some(lr);
        }
        prop_assert_eq!(one_cycle(peak, &spec).unwrap().0, lr_max);
    }

    #[test]
    fn train_mode_batchnorm_standardizes_channels(
        b in 1usize..4,
        c in 1usize..4,
        s in 2usize..6,
        seed in 0u64..1000,
    ) {
        prop_assume!(b * s >= 2);
        let mut rng = SeedRng::seed_from_u64(seed);
        let vals: Vec<f64> = (0..b * c * s).map(|_| rng.normal::<f64>() * 3.0).collect();
        let x = Tensor::from_vec(&[b, c, s], vals.clone()).unwrap();
        let gamma = Tensor::full(&[c], 1.0f64);
        let beta = Tensor::zeros(&[c]);
        let (rm, rv) = ops::norm::init_running_stats(c);
        let eps = 1e-5f64;
        let tape = GradTape::disabled();
        let y = ops::batchnorm(&tape, &x, &gamma, &beta, &rm, &rv, Mode::Train, eps, 0.1)
            .unwrap();
        let yd = y.to_vec();
        let n = (b * s) as f64;
        for ch in 0..c {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for bi in 0..b {
                for si in 0..s {
                    xs.push(vals[(bi * c + ch) * s + si]);
                    ys.push(yd[(bi * c + ch) * s + si]);
                }
            }
            let xm = xs.iter().sum::<f64>() / n;
            let xv = xs.iter().map(|v| (v - xm) * (v - xm)).sum::<f64>() / n;
            let ym = ys.iter().sum::<f64>() / n;
            let yv = ys.iter().map(|v| (v - ym) * (v - ym)).sum::<f64>() / n;
            prop_assert!(ym.abs() < 1e-9, "channel mean {ym}");
            // with gamma=1 the output variance is var/(var+eps)
            prop_assert!((yv - xv / (xv + eps)).abs() < 1e-9, "channel var {yv}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn heatmap_normalization_ignores_kernel_scale(
        scale in 0.1f64..10.0,
        seed in 0u64..100,
    ) {
        let cfg = ModelConfig {
            block_sizes: [4, 4, 4, 4],
            growth_rate: 4,
            init_channels: 8,
            embed_dim: 4,
            max_len: 8,
            head_dims: vec![4, 2],
            ..ModelConfig::default()
        };
        let mut rng = SeedRng::seed_from_u64(seed);
        let model = Model::<f64>::init(cfg, 6, vec![0.0; 24], &mut rng).unwrap();
        let before = l1_dependency_matrix(&model, 3, None, HeatmapNorm::Global).unwrap();
        prop_assert!(before.values.iter().all(|&v| (0.0..=1.0).contains(&v)));
        prop_assert_eq!(
            before.group_sizes.iter().sum::<usize>(),
            model.block_kernel(3, 3).unwrap().shape()[1]
        );
        let kernel = model.block_kernel(3, 3).unwrap();
        let scaled: Vec<f64> = kernel.to_vec().iter().map(|v| v * scale).collect();
        kernel.set_data(&scaled);
        let after = l1_dependency_matrix(&model, 3, None, HeatmapNorm::Global).unwrap();
        for (x, y) in before.values.iter().zip(&after.values) {
            prop_assert!((x - y).abs() < 1e-6);
        }
    }
}
