//! Deterministic synthetic corpora in the exact on-disk formats the
//! loaders expect, sized to the published dataset statistics. The class
//! signal is a noisy cue vocabulary (plus a noisier trailing "!"), so
//! the best achievable test accuracy is ~0.90 and a small network gets
//! most of the way there within an epoch or two. Used by the `synth`
//! subcommand and the integration tests; real corpora drop in via the
//! same config paths.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use dwenet_core::rng::SeedRng;
use dwenet_core::train::{DatasetKind, TrainConfig};

use crate::Result;

/// Published corpus sizes (nonsarcastic, sarcastic) that the generated
/// files reproduce exactly.
pub const HEADLINES_COUNTS: (usize, usize) = (14985, 11724);
pub const SARC_POL_TRAIN: (usize, usize) = (6834, 6834);
pub const SARC_POL_TEST: (usize, usize) = (1703, 1703);
pub const SARC_MAIN_TRAIN: (usize, usize) = (104209, 109713);
pub const SARC_MAIN_TEST: (usize, usize) = (26173, 27520);

/// How often a sentence carries a cue from its own class's list. The
/// cue is the dominant signal, so this is also the Bayes accuracy.
const CUE_MATCH_PROB: f64 = 0.9;

const SARC_CUES: &[&str] = &[
    "totally", "obviously", "sure", "wow", "genius", "brilliant", "shocker", "groundbreaking",
];
const PLAIN_CUES: &[&str] = &[
    "reports", "announces", "officials", "study", "market", "local", "council", "budget",
];
const FILLER: &[&str] = &[
    "the", "a", "to", "of", "in", "on", "for", "new", "with", "says", "after", "over", "as",
    "at", "by", "from", "up", "out", "about", "more", "man", "day", "year", "time", "people",
    "world", "home", "life", "work", "team", "plan", "report",
];

fn gen_text(label: u8, rng: &mut SeedRng) -> String {
    let len = 6 + rng.below(7); // 6..=12 filler tokens
    let mut tokens: Vec<&str> = (0..len).map(|_| FILLER[rng.below(FILLER.len())]).collect();
    let own_class = rng.uniform01() < CUE_MATCH_PROB;
    let cues = if (label == 1) == own_class { SARC_CUES } else { PLAIN_CUES };
    let at = rng.below(tokens.len() + 1);
    tokens.insert(at, cues[rng.below(cues.len())]);
    let mut text = tokens.join(" ");
    // secondary, weaker cue: sarcastic lines end with "!" more often
    let bang_prob = if label == 1 { 0.8 } else { 0.2 };
    if rng.uniform01() < bang_prob {
        text.push('!');
    }
    text
}

/// (text, label) pairs: `n0` of class 0 and `n1` of class 1, shuffled
/// into one deterministic order.
fn gen_corpus(n0: usize, n1: usize, seed: u64) -> Vec<(String, u8)> {
    let mut rng = SeedRng::seed_from_u64(seed);
    let mut corpus = Vec::with_capacity(n0 + n1);
    for _ in 0..n0 {
        corpus.push((gen_text(0, &mut rng), 0));
    }
    for _ in 0..n1 {
        corpus.push((gen_text(1, &mut rng), 1));
    }
    rng.shuffle(&mut corpus);
    corpus
}

#[derive(serde::Serialize)]
struct HeadlineOut<'a> {
    headline: &'a str,
    is_sarcastic: u8,
    article_link: String, // mimics the real schema's extra fields
}

/// Newline-delimited JSON in the headlines schema.
pub fn write_headlines(path: &Path, n0: usize, n1: usize, seed: u64) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for (i, (text, label)) in gen_corpus(n0, n1, seed).iter().enumerate() {
        let record = HeadlineOut {
            headline: text,
            is_sarcastic: *label,
            article_link: format!("https://example.com/{i}"),
        };
        serde_json::to_writer(&mut out, &record).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// `label<TAB>text` lines in the normalized SARC layout.
pub fn write_sarc(path: &Path, n0: usize, n1: usize, seed: u64) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for (text, label) in gen_corpus(n0, n1, seed) {
        writeln!(out, "{label}\t{text}")?;
    }
    out.flush()?;
    Ok(())
}

/// GloVe-format vector file over the generator's token pool, skipping
/// every fourth token so the out-of-vocabulary path gets real traffic.
pub fn write_embeddings(path: &Path, d: usize, seed: u64) -> Result<()> {
    let mut rng = SeedRng::seed_from_u64(seed);
    let mut out = BufWriter::new(File::create(path)?);
    let pool = SARC_CUES
        .iter()
        .chain(PLAIN_CUES)
        .chain(FILLER)
        .chain(["!"].iter());
    for (i, token) in pool.enumerate() {
        let row: Vec<String> =
            (0..d).map(|_| format!("{}", rng.normal::<f32>() * 0.3)).collect();
        if i % 4 == 3 {
            continue; // left out on purpose; loader must fall back to random init
        }
        writeln!(out, "{token} {}", row.join(" "))?;
    }
    out.flush()?;
    Ok(())
}

/// The corpus + embedding files for one dataset under `dir`.
pub struct SynthPaths {
    pub train: PathBuf,
    /// Headlines ships as one file and is split downstream.
    pub test: Option<PathBuf>,
    pub embeddings: PathBuf,
}

/// Write a full synthetic stand-in for `kind` (published sizes, `d`-dim
/// vectors) and return where everything landed.
pub fn write_dataset(dir: &Path, kind: DatasetKind, d: usize, seed: u64) -> Result<SynthPaths> {
    std::fs::create_dir_all(dir)?;
    let embeddings = dir.join("embeddings.txt");
    write_embeddings(&embeddings, d, seed ^ 0x9e37)?;
    let paths = match kind {
        DatasetKind::Headlines => {
            let train = dir.join("headlines.jsonl");
            write_headlines(&train, HEADLINES_COUNTS.0, HEADLINES_COUNTS.1, seed)?;
            SynthPaths { train, test: None, embeddings }
        }
        DatasetKind::SarcPol => {
            let train = dir.join("sarc_pol_train.tsv");
            let test = dir.join("sarc_pol_test.tsv");
            write_sarc(&train, SARC_POL_TRAIN.0, SARC_POL_TRAIN.1, seed)?;
            write_sarc(&test, SARC_POL_TEST.0, SARC_POL_TEST.1, seed + 1)?;
            SynthPaths { train, test: Some(test), embeddings }
        }
        DatasetKind::SarcMain => {
            let train = dir.join("sarc_main_train.tsv");
            let test = dir.join("sarc_main_test.tsv");
            write_sarc(&train, SARC_MAIN_TRAIN.0, SARC_MAIN_TRAIN.1, seed)?;
            write_sarc(&test, SARC_MAIN_TEST.0, SARC_MAIN_TEST.1, seed + 1)?;
            SynthPaths { train, test: Some(test), embeddings }
        }
    };
    Ok(paths)
}

/// A config wired to the files `write_dataset` produced: right dataset
/// kind, right padding length, matching embedding dimension. Everything
/// else keeps library defaults.
pub fn starter_config(kind: DatasetKind, paths: &SynthPaths, d: usize) -> TrainConfig {
    let mut config = TrainConfig::default();
    config.data.dataset = kind;
    config.data.train_path = paths.train.display().to_string();
    config.data.test_path =
        paths.test.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
    config.data.embeddings_path = paths.embeddings.display().to_string();
    config.model.embed_dim = d;
    config.model.max_len = match kind {
        DatasetKind::Headlines => 64,
        DatasetKind::SarcMain | DatasetKind::SarcPol => 128,
    };
    config
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loaders;
    use dwenet_core::data::tokenize;

    #[test]
    fn headlines_file_round_trips_with_exact_counts() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.jsonl");
        write_headlines(&path, 8, 5, 11).unwrap();
        let examples = loaders::load_headlines(&path).unwrap();
        let ones = examples.iter().filter(|e| e.label == 1).count();
        assert_eq!((examples.len() - ones, ones), (8, 5));
    }

    #[test]
    fn sarc_file_round_trips_with_exact_counts() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.tsv");
        write_sarc(&path, 6, 4, 11).unwrap();
        let examples = loaders::load_sarc(&path).unwrap();
        let ones = examples.iter().filter(|e| e.label == 1).count();
        assert_eq!((examples.len() - ones, ones), (6, 4));
    }

    #[test]
    fn same_seed_writes_identical_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a"), dir.path().join("b"));
        write_headlines(&a, 40, 30, 5).unwrap();
        write_headlines(&b, 40, 30, 5).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn texts_stay_far_below_the_padding_length() {
        for (text, _) in gen_corpus(200, 200, 3) {
            let n = tokenize(&text).len();
            assert!(n >= 7 && n <= 14, "unexpected length {n}: {text}");
        }
    }

    #[test]
    fn cue_noise_rate_matches_the_design() {
        // the signal the models are supposed to find: ~90% of sarcastic
        // texts carry a sarcastic cue token
        let corpus = gen_corpus(0, 2000, 17);
        let hits = corpus
            .iter()
            .filter(|(text, _)| SARC_CUES.iter().any(|c| tokenize(text).contains(&c.to_string())))
            .count();
        let rate = hits as f64 / 2000.0;
        assert!((rate - CUE_MATCH_PROB).abs() < 0.03, "cue rate {rate}");
    }

    #[test]
    fn embedding_file_parses_and_skips_every_fourth_token() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.txt");
        write_embeddings(&path, 8, 2).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines = text.lines().count();
        let pool = SARC_CUES.len() + PLAIN_CUES.len() + FILLER.len() + 1;
        assert_eq!(lines, pool - pool / 4);
        for line in text.lines() {
            assert_eq!(line.split_whitespace().count(), 9);
        }
    }
}
