//! File parsers: the headlines JSONL corpus, normalized SARC TSV, and
//! GloVe-style embedding tables. Loaders return plain `Example` lists;
//! encoding, splitting and batching stay in the core crate.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use dwenet_core::data::{EmbeddingMatrix, Example, Vocabulary, UNK_TOKEN};
use dwenet_core::rng::SeedRng;

use crate::{Error, Result};

#[derive(serde::Deserialize)]
struct HeadlineRecord {
    headline: String,
    is_sarcastic: u8,
}

/// Newline-delimited JSON with `headline` and `is_sarcastic` fields;
/// anything else in a record (article links and so on) is ignored.
/// `source_id` is the zero-based line index, so error messages and
/// report rows can point back into the file.
pub fn load_headlines(path: &Path) -> Result<Vec<Example>> {
    let reader = BufReader::new(File::open(path).map_err(|e| Error::at(path, e))?);
    let mut examples = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue; // tolerate stray blank lines
        }
        let record: HeadlineRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("{}:{}: {e}", path.display(), idx + 1)))?;
        if record.is_sarcastic > 1 {
            return Err(Error::Parse(format!(
                "{}:{}: is_sarcastic must be 0 or 1, got {}",
                path.display(),
                idx + 1,
                record.is_sarcastic
            )));
        }
        examples.push(Example {
            text: record.headline,
            label: record.is_sarcastic,
            source_id: idx,
        });
    }
    Ok(examples)
}

/// One record per line: `label<TAB>comment`, label 0 or 1. Only the
/// original comment appears in this normalized form — parent/child
/// context never reaches the model. Further tabs belong to the text.
pub fn load_sarc(path: &Path) -> Result<Vec<Example>> {
    let reader = BufReader::new(File::open(path).map_err(|e| Error::at(path, e))?);
    let mut examples = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (label, text) = line.split_once('\t').ok_or_else(|| {
            Error::Parse(format!("{}:{}: missing tab separator", path.display(), idx + 1))
        })?;
        let label = match label {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(Error::Parse(format!(
                    "{}:{}: label must be 0 or 1, got {other:?}",
                    path.display(),
                    idx + 1
                )))
            }
        };
        examples.push(Example { text: text.to_string(), label, source_id: idx });
    }
    Ok(examples)
}

/// Read a GloVe-format table (`token v1 … vd` per line, whitespace
/// separated) and assemble the matrix for `vocab`: file rows for hits,
/// seeded N(0, 0.1²) rows for misses, a zero PAD row. A FastText-style
/// `count dim` first line is detected and skipped.
pub fn load_embeddings(
    path: &Path,
    vocab: &Vocabulary,
    d: usize,
    trainable: bool,
    rng: &mut SeedRng,
) -> Result<EmbeddingMatrix<f32>> {
    let pretrained = read_vector_file(path, vocab, d)?;
    Ok(EmbeddingMatrix::build(vocab, d, &pretrained, trainable, rng)?)
}

/// Parse only the rows we will use: arity is checked on every line (so
/// a wrong `d` fails fast with a line number), but float syntax is
/// only validated for tokens in `vocab` — full GloVe releases run to
/// 400k lines and we typically keep a few percent of them.
fn read_vector_file(
    path: &Path,
    vocab: &Vocabulary,
    d: usize,
) -> Result<BTreeMap<String, Vec<f32>>> {
    let reader = BufReader::new(File::open(path).map_err(|e| Error::at(path, e))?);
    let mut rows = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        // Header heuristic: two integer fields where a data line would
        // have d+1. (A d=1 file with a numeric first token stays data.)
        if idx == 0
            && fields.len() == 2
            && fields.len() != d + 1
            && fields.iter().all(|f| f.parse::<usize>().is_ok())
        {
            continue;
        }
        if fields.len() != d + 1 {
            return Err(Error::Parse(format!(
                "{}:{}: expected token + {d} values, got {} fields",
                path.display(),
                idx + 1,
                fields.len()
            )));
        }
        let token = fields[0];
        let in_vocab = vocab.id(token) != dwenet_core::data::UNK_ID || token == UNK_TOKEN;
        if !in_vocab {
            continue;
        }
        let mut values = Vec::with_capacity(d);
        for field in &fields[1..] {
            values.push(field.parse::<f32>().map_err(|_| {
                Error::Parse(format!(
                    "{}:{}: bad value {field:?}",
                    path.display(),
                    idx + 1
                ))
            })?);
        }
        rows.insert(token.to_string(), values);
    }
    Ok(rows)
}
