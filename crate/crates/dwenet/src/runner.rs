//! Glue between files and the training loop: resolve a config into
//! loaded/split/encoded datasets, then drive the requested number of
//! runs, optionally spreading independent runs across threads.

use std::path::Path;

use dwenet_core::data::{
    pad_and_filter, split_train_test, Dataset, EmbeddingMatrix, Example, Vocabulary,
};
use dwenet_core::rng::SeedRng;
use dwenet_core::train::{
    train_model, DataConfig, DatasetKind, Metrics, RunSummary, TrainConfig, TrainOutcome,
};

use crate::{loaders, Error, Result};

/// Salt for the embedding-assembly stream, hung off the split seed so
/// every run (and every connectivity cell) starts from the same matrix.
const EMBED_SALT: u64 = 0xe4b;

/// Everything `train_model` consumes, derived from one config.
#[derive(Debug)]
pub struct PreparedData {
    pub vocab: Vocabulary,
    pub embedding: EmbeddingMatrix<f32>,
    pub train: Dataset,
    pub test: Dataset,
}

/// Load raw examples for the configured corpus: headlines come as one
/// file that we split; SARC ships pre-split as two.
pub fn load_examples(data: &DataConfig) -> Result<(Vec<Example>, Vec<Example>)> {
    match data.dataset {
        DatasetKind::Headlines => {
            let all = loaders::load_headlines(Path::new(&data.train_path))?;
            Ok(split_train_test(&all, data.test_frac, data.split_seed)?)
        }
        DatasetKind::SarcMain | DatasetKind::SarcPol => {
            if data.test_path.is_empty() {
                return Err(Error::Parse(String::from(
                    "SARC needs data.test_path (the corpus ships pre-split)",
                )));
            }
            let train = loaders::load_sarc(Path::new(&data.train_path))?;
            let test = loaders::load_sarc(Path::new(&data.test_path))?;
            Ok((train, test))
        }
    }
}

/// Vocabulary from the training split only, embeddings from the
/// configured file (or seeded random rows when the path is empty — the
/// "random init" ablation), and both splits encoded and padded.
pub fn prepare(config: &TrainConfig) -> Result<PreparedData> {
    config.validate()?;
    let (train_examples, test_examples) = load_examples(&config.data)?;
    let vocab = Vocabulary::build(
        train_examples.iter().map(|e| e.text.as_str()),
        config.data.min_freq,
    );
    let mut rng = SeedRng::seed_from_u64(config.data.split_seed).child(EMBED_SALT);
    let d = config.model.embed_dim;
    let trainable = config.model.embedding_trainable;
    let embedding = if config.data.embeddings_path.is_empty() {
        EmbeddingMatrix::build(&vocab, d, &Default::default(), trainable, &mut rng)?
    } else {
        loaders::load_embeddings(
            Path::new(&config.data.embeddings_path),
            &vocab,
            d,
            trainable,
            &mut rng,
        )?
    };
    let train = pad_and_filter(&train_examples, &vocab, config.model.max_len);
    let test = pad_and_filter(&test_examples, &vocab, config.model.max_len);
    if train.is_empty() || test.is_empty() {
        return Err(Error::Parse(format!(
            "after length filtering: {} train / {} test examples",
            train.len(),
            test.len()
        )));
    }
    Ok(PreparedData { vocab, embedding, train, test })
}

/// How many worker threads to use for independent runs: the
/// `DWENET_THREADS` variable when set, otherwise single-threaded.
/// Results are identical either way — each run is seeded on its own —
/// so parallelism is purely an opt-in speedup.
fn thread_budget(runs: usize) -> usize {
    std::env::var("DWENET_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(1)
        .clamp(1, runs.max(1))
}

/// `runs` independent trainings of `config` (run r reseeded to
/// `seed + r`), metrics aggregated in run order; the first run's full
/// outcome comes back for checkpointing. Models never cross threads —
/// workers return metrics only, and run 0 stays on the caller's thread.
pub fn run_training(
    config: &TrainConfig,
    data: &PreparedData,
    runs: usize,
) -> Result<(RunSummary, TrainOutcome<f32>)> {
    if runs == 0 {
        return Err(Error::Parse(String::from("runs must be at least 1")));
    }
    let threads = thread_budget(runs);
    if threads == 1 {
        let (summary, first) =
            dwenet_core::train::multi_run(config, &data.embedding, &data.train, &data.test, runs)?;
        return Ok((summary, first));
    }

    let one_run = |r: usize| -> Result<Metrics> {
        let mut c = config.clone();
        c.training.seed = config.training.seed + r as u64;
        Ok(train_model(&c, &data.embedding, &data.train, &data.test)?.metrics)
    };

    // Lane 0 (this thread) takes run 0 and keeps its model; workers get
    // the rest round-robin and send back metrics only.
    let mut slots: Vec<Option<Metrics>> = (0..runs).map(|_| None).collect();
    let mut first = None;
    std::thread::scope(|scope| -> Result<()> {
        let mut handles = Vec::new();
        for lane in 1..threads {
            let lane_runs: Vec<usize> = (0..runs).filter(|r| r % threads == lane).collect();
            let one_run = &one_run;
            handles.push(scope.spawn(move || -> Result<Vec<(usize, Metrics)>> {
                let mut out = Vec::with_capacity(lane_runs.len());
                for r in lane_runs {
                    out.push((r, one_run(r)?));
                }
                Ok(out)
            }));
        }
        for r in (0..runs).filter(|r| r % threads == 0) {
            let mut c = config.clone();
            c.training.seed = config.training.seed + r as u64;
            let outcome = train_model(&c, &data.embedding, &data.train, &data.test)?;
            slots[r] = Some(outcome.metrics.clone());
            if r == 0 {
                first = Some(outcome);
            }
        }
        for handle in handles {
            let lane_result = handle.join().expect("worker panicked")?;
            for (r, metrics) in lane_result {
                slots[r] = Some(metrics);
            }
        }
        Ok(())
    })?;

    let per_run: Vec<Metrics> =
        slots.into_iter().map(|m| m.expect("every run filled")).collect();
    let summary = RunSummary::from_runs(per_run);
    Ok((summary, first.expect("run 0 ran on this thread")))
}
