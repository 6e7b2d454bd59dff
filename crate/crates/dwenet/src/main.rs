//! `dwenet` command line: train/evaluate/analyze sarcasm classifiers
//! from JSON configs. Every run echoes its fully-resolved config next
//! to its reports, so any result can be reproduced from the output
//! directory alone. Exit codes: 0 success, 1 runtime failure, 2 usage.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dwenet::{checkpoint, config, reports, runner, synth, Error, Result};
use dwenet_core::analysis::{error_set_diff, AblationResult, HeatmapNorm};
use dwenet_core::data::pad_and_filter;
use dwenet_core::ops::embed::PAD_ID;
use dwenet_core::train::{predictions, DatasetKind, TrainConfig};

#[derive(Parser)]
#[command(name = "dwenet", version, about = "Dense convolutional sarcasm classifier")]
struct Cli {
    /// Suppress progress lines; results and errors still print
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one or more runs and write reports + a checkpoint
    Train(TrainArgs),
    /// Re-evaluate a checkpoint on its configured test data
    Eval(EvalArgs),
    /// Classify a single text with a trained checkpoint
    Predict(PredictArgs),
    /// Export the L1 dependency heatmap of a dense block
    Heatmap(HeatmapArgs),
    /// List test items one model gets right and the other wrong
    DiffErrors(DiffArgs),
    /// Train the plain/residual/dense grid and tabulate it
    Ablate(AblateArgs),
    /// Generate a synthetic corpus in the real file formats
    Synth(SynthArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// JSON config; library defaults when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Set one config value, e.g. training.epochs=2 (repeatable)
    #[arg(long = "override", value_name = "KEY.PATH=VALUE")]
    overrides: Vec<String>,
    /// Report/checkpoint directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Shorthand for training.seed
    #[arg(long)]
    seed: Option<u64>,
    /// Shorthand for training.runs
    #[arg(long)]
    runs: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Adjust the stored config, e.g. data.test_path=... (repeatable)
    #[arg(long = "override", value_name = "KEY.PATH=VALUE")]
    overrides: Vec<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Text to classify
    #[arg(long)]
    text: String,
}

#[derive(Args)]
struct HeatmapArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Dense block to inspect (0-based; default: the last one)
    #[arg(long)]
    block: Option<usize>,
    /// Target layer inside the block (0-based; default: the last one)
    #[arg(long)]
    layer: Option<usize>,
    /// Normalize each output channel separately instead of globally
    #[arg(long)]
    per_column: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct DiffArgs {
    /// Give twice: the reference model, then the comparison model
    #[arg(long = "checkpoint", value_name = "PATH")]
    checkpoints: Vec<PathBuf>,
    /// Adjust both stored configs, e.g. data paths (repeatable)
    #[arg(long = "override", value_name = "KEY.PATH=VALUE")]
    overrides: Vec<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct AblateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "override", value_name = "KEY.PATH=VALUE")]
    overrides: Vec<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Runs per grid cell
    #[arg(long)]
    runs: Option<usize>,
}

#[derive(Args)]
struct SynthArgs {
    /// Directory for the generated corpus, embeddings and config
    #[arg(long, default_value = "data")]
    out: PathBuf,
    #[arg(long, default_value = "headlines", value_parser = parse_dataset)]
    dataset: DatasetKind,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Embedding dimension of the generated vector file
    #[arg(long, default_value_t = 50)]
    dim: usize,
}

fn parse_dataset(raw: &str) -> std::result::Result<DatasetKind, String> {
    match raw {
        "headlines" => Ok(DatasetKind::Headlines),
        "sarc-pol" => Ok(DatasetKind::SarcPol),
        "sarc-main" => Ok(DatasetKind::SarcMain),
        other => Err(format!("{other:?} is not headlines, sarc-pol or sarc-main")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let quiet = cli.quiet;
    let result = match cli.command {
        Command::Train(args) => cmd_train(args, quiet),
        Command::Eval(args) => cmd_eval(args, quiet),
        Command::Predict(args) => cmd_predict(args),
        Command::Heatmap(args) => cmd_heatmap(args),
        Command::DiffErrors(args) => cmd_diff_errors(args, quiet),
        Command::Ablate(args) => cmd_ablate(args, quiet),
        Command::Synth(args) => cmd_synth(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// Assemble the effective config: file, then overrides, then the
/// convenience flags (which are just spelled-out overrides).
fn effective_config(
    path: Option<&Path>,
    overrides: &[String],
    seed: Option<u64>,
    runs: Option<usize>,
) -> Result<TrainConfig> {
    let mut cfg = config::load_config(path, overrides)?;
    if let Some(seed) = seed {
        cfg.training.seed = seed;
    }
    if let Some(runs) = runs {
        cfg.training.runs = runs;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_train(args: TrainArgs, quiet: bool) -> Result<()> {
    let cfg = effective_config(args.config.as_deref(), &args.overrides, args.seed, args.runs)?;
    std::fs::create_dir_all(&args.out)?;
    reports::write_config_echo(&args.out.join("config.echo.json"), &cfg)?;

    let data = runner::prepare(&cfg)?;
    if !quiet {
        println!(
            "data: {} train / {} test examples, vocab {}, {} over length",
            data.train.len(),
            data.test.len(),
            data.vocab.len(),
            data.train.removed_over_length + data.test.removed_over_length
        );
    }
    let runs = cfg.training.runs;
    let (summary, first) = runner::run_training(&cfg, &data, runs)?;

    reports::write_metrics_csv(&args.out.join("metrics.csv"), &summary)?;
    reports::write_summary_json(&args.out.join("summary.json"), &summary)?;
    reports::write_loss_curves_csv(&args.out.join("loss_curves.csv"), &summary.per_run)?;
    checkpoint::save(
        &args.out.join("model.ckpt"),
        &first.model,
        &cfg,
        &data.vocab,
        first.rng_state,
    )?;

    if !quiet {
        for (i, m) in summary.per_run.iter().enumerate() {
            println!("run {i}: accuracy {:.4} f1 {:.4}", m.accuracy, m.f1);
        }
    }
    println!(
        "accuracy {:.4} ± {:.4} over {} runs (reports in {})",
        summary.accuracy.mean,
        summary.accuracy.std,
        runs,
        args.out.display()
    );
    Ok(())
}

fn cmd_eval(args: EvalArgs, quiet: bool) -> Result<()> {
    let ckpt = checkpoint::load(&args.checkpoint)?;
    let cfg = config::with_overrides(&ckpt.config, &args.overrides)?;
    let model = ckpt.build_model()?;

    let (_, test_examples) = runner::load_examples(&cfg.data)?;
    let test = pad_and_filter(&test_examples, &ckpt.vocab, cfg.model.max_len);
    if test.is_empty() {
        return Err(Error::Parse(String::from("no test examples after length filtering")));
    }
    if !quiet {
        println!("eval: {} examples from {:?}", test.len(), cfg.data.dataset);
    }
    let metrics = dwenet_core::train::evaluate(&model, &test, cfg.training.batch_size)?;

    std::fs::create_dir_all(&args.out)?;
    reports::write_config_echo(&args.out.join("config.echo.json"), &cfg)?;
    let summary = dwenet_core::train::RunSummary::from_runs(vec![metrics.clone()]);
    reports::write_metrics_csv(&args.out.join("metrics.csv"), &summary)?;
    reports::write_summary_json(&args.out.join("summary.json"), &summary)?;
    println!(
        "accuracy {:.4} precision {:.4} recall {:.4} f1 {:.4}",
        metrics.accuracy, metrics.precision, metrics.recall, metrics.f1
    );
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<()> {
    let ckpt = checkpoint::load(&args.checkpoint)?;
    let model = ckpt.build_model()?;
    let max_len = ckpt.config.model.max_len;
    let mut ids = ckpt.vocab.encode(&args.text);
    if ids.len() > max_len {
        return Err(Error::Parse(format!(
            "text tokenizes to {} tokens, model max_len is {max_len}",
            ids.len()
        )));
    }
    ids.resize(max_len, PAD_ID);
    let probs = model.predict_probs(&ids, 1)?.to_vec();
    let label = usize::from(probs[1] > probs[0]);
    println!("label={label} p0={:.6} p1={:.6}", probs[0], probs[1]);
    Ok(())
}

fn cmd_heatmap(args: HeatmapArgs) -> Result<()> {
    let ckpt = checkpoint::load(&args.checkpoint)?;
    let model = ckpt.build_model()?;
    let block = args.block.unwrap_or(ckpt.config.model.block_sizes.len() - 1);
    let norm = if args.per_column { HeatmapNorm::PerColumn } else { HeatmapNorm::Global };
    let map = dwenet_core::analysis::l1_dependency_matrix(&model, block, args.layer, norm)?;

    std::fs::create_dir_all(&args.out)?;
    reports::write_config_echo(&args.out.join("config.echo.json"), &ckpt.config)?;
    reports::write_heatmap_csv(&args.out.join("heatmap.csv"), &map)?;
    reports::write_heatmap_pgm(&args.out.join("heatmap.pgm"), &map)?;
    println!(
        "heatmap block {} layer {}: {} source groups x {} channels, input-plane mean {:.4}",
        map.block_idx,
        map.target_layer,
        map.rows(),
        map.cols,
        map.input_plane_mean()
    );
    Ok(())
}

fn cmd_diff_errors(args: DiffArgs, quiet: bool) -> Result<()> {
    if args.checkpoints.len() != 2 {
        // a usage mistake, not a runtime failure
        eprintln!("error: diff-errors needs --checkpoint twice (reference, then comparison)");
        std::process::exit(2);
    }
    let a = checkpoint::load(&args.checkpoints[0])?;
    let b = checkpoint::load(&args.checkpoints[1])?;
    let cfg_a = config::with_overrides(&a.config, &args.overrides)?;
    let cfg_b = config::with_overrides(&b.config, &args.overrides)?;
    if a.vocab.tokens() != b.vocab.tokens() {
        return Err(Error::Checkpoint(String::from(
            "checkpoints use different vocabularies; their predictions are not comparable",
        )));
    }
    if cfg_a.data != cfg_b.data || cfg_a.model.max_len != cfg_b.model.max_len {
        return Err(Error::Checkpoint(String::from(
            "checkpoints describe different test data (data section or max_len differ)",
        )));
    }

    let (_, test_examples) = runner::load_examples(&cfg_a.data)?;
    let test = pad_and_filter(&test_examples, &a.vocab, cfg_a.model.max_len);
    if test.is_empty() {
        return Err(Error::Parse(String::from("no test examples after length filtering")));
    }
    let model_a = a.build_model()?;
    let model_b = b.build_model()?;
    let batch = cfg_a.training.batch_size;
    let preds_a = predictions(&model_a, &test, batch)?;
    let preds_b = predictions(&model_b, &test, batch)?;
    let a_not_b = error_set_diff(&preds_a, &preds_b, &test.labels, &test.texts)?;
    let b_not_a = error_set_diff(&preds_b, &preds_a, &test.labels, &test.texts)?;

    std::fs::create_dir_all(&args.out)?;
    reports::write_config_echo(&args.out.join("config.echo.json"), &cfg_a)?;
    reports::write_cases_csv(&args.out.join("cases_a_not_b.csv"), &a_not_b)?;
    reports::write_cases_csv(&args.out.join("cases_b_not_a.csv"), &b_not_a)?;
    if !quiet {
        let agree = test
            .labels
            .iter()
            .zip(preds_a.iter().zip(&preds_b))
            .filter(|(_, (x, y))| x == y)
            .count();
        println!("models agree on {agree} of {} examples", test.len());
    }
    println!("a_correct_b_wrong={} b_correct_a_wrong={}", a_not_b.len(), b_not_a.len());
    Ok(())
}

fn cmd_ablate(args: AblateArgs, quiet: bool) -> Result<()> {
    let cfg = effective_config(args.config.as_deref(), &args.overrides, args.seed, args.runs)?;
    std::fs::create_dir_all(&args.out)?;
    reports::write_config_echo(&args.out.join("config.echo.json"), &cfg)?;

    let data = runner::prepare(&cfg)?;
    if !quiet {
        println!(
            "data: {} train / {} test examples, vocab {}",
            data.train.len(),
            data.test.len(),
            data.vocab.len()
        );
    }
    let mut results = Vec::new();
    for (name, cell_cfg) in dwenet_core::analysis::connectivity_grid(&cfg) {
        let (summary, _) = runner::run_training(&cell_cfg, &data, cell_cfg.training.runs)?;
        println!(
            "{name}: accuracy {:.4} ± {:.4} over {} runs",
            summary.accuracy.mean,
            summary.accuracy.std,
            summary.per_run.len()
        );
        results.push(AblationResult { name, summary });
    }
    reports::write_ablation_csv(&args.out.join("ablation.csv"), &results)?;
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let paths = synth::write_dataset(&args.out, args.dataset, args.dim, args.seed)?;
    let cfg = synth::starter_config(args.dataset, &paths, args.dim);
    reports::write_config_echo(&args.out.join("config.json"), &cfg)?;
    println!(
        "wrote {:?} corpus, embeddings and config.json under {}",
        args.dataset,
        args.out.display()
    );
    Ok(())
}
