//! Text → tensors: tokenizer, vocabulary, embedding table assembly,
//! stratified splitting, padding/removal and batching. File parsing
//! stays in the companion crate; everything here works on in-memory
//! values so the pipeline is testable without IO.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::float::Real;
use crate::ops::embed::PAD_ID;
use crate::rng::SeedRng;

pub const UNK_ID: u32 = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

/// Lowercase, split punctuation into standalone tokens, otherwise break
/// on whitespace. Anything neither alphanumeric nor whitespace counts as
/// punctuation, so unicode quotes/dashes come out as their own tokens.
/// Idempotent over its own space-joined output.
pub fn tokenize(text: &str) -> Vec<String> {
    let lowered = text.to_lowercase();
    let mut tokens = Vec::new();
    let mut run = String::new();
    for ch in lowered.chars() {
        if ch.is_alphanumeric() {
            run.push(ch);
        } else {
            if !run.is_empty() {
                tokens.push(core::mem::take(&mut run));
            }
            if !ch.is_whitespace() {
                tokens.push(ch.to_string());
            }
        }
    }
    if !run.is_empty() {
        tokens.push(run);
    }
    tokens
}

/// Token ↔ id maps with PAD=0 and UNK=1 reserved. Built from the
/// training split only; unseen tokens encode to UNK.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    token_to_id: BTreeMap<String, u32>,
    id_to_token: Vec<String>,
}

impl Vocabulary {
    /// Count tokens across `texts`, keep those with frequency ≥
    /// `min_freq`, and assign ids in descending frequency then
    /// lexicographic order.
    pub fn build<'a, I>(texts: I, min_freq: usize) -> Vocabulary
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for text in texts {
            for token in tokenize(text) {
                *counts.entry(token).or_insert(0) += 1;
            }
        }
        let mut ranked: Vec<(String, usize)> =
            counts.into_iter().filter(|&(_, n)| n >= min_freq).collect();
        // BTreeMap iteration is already lexicographic, so a stable sort
        // by descending count leaves ties in lexicographic order.
        ranked.sort_by(|a, b| b.1.cmp(&a.1));
        let mut id_to_token = Vec::with_capacity(ranked.len() + 2);
        id_to_token.push(String::from(PAD_TOKEN));
        id_to_token.push(String::from(UNK_TOKEN));
        id_to_token.extend(ranked.into_iter().map(|(t, _)| t));
        Vocabulary::from_tokens(id_to_token).expect("construction cannot collide")
    }

    /// Rebuild from a stored id → token list (checkpoint restore).
    /// The first two entries must be the reserved PAD/UNK names and the
    /// rest must be distinct.
    pub fn from_tokens(id_to_token: Vec<String>) -> Result<Vocabulary> {
        if id_to_token.len() < 2
            || id_to_token[0] != PAD_TOKEN
            || id_to_token[1] != UNK_TOKEN
        {
            return Err(Error::Data(alloc::format!(
                "vocabulary must start with {PAD_TOKEN}, {UNK_TOKEN}"
            )));
        }
        let mut token_to_id = BTreeMap::new();
        for (id, token) in id_to_token.iter().enumerate().skip(2) {
            if token_to_id.insert(token.clone(), id as u32).is_some() {
                return Err(Error::Data(alloc::format!(
                    "duplicate vocabulary token {token:?}"
                )));
            }
        }
        Ok(Vocabulary { token_to_id, id_to_token })
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        false // PAD and UNK always exist
    }

    pub fn id(&self, token: &str) -> u32 {
        self.token_to_id.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.id_to_token.get(id as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.id_to_token
    }

    /// Tokenize and map to ids (UNK for unseen), no padding.
    pub fn encode(&self, text: &str) -> Vec<u32> {
        tokenize(text).iter().map(|t| self.id(t)).collect()
    }
}

/// Dense `[vocab, d]` table feeding `embed_lookup`. Row 0 (PAD) is zero
/// and stays zero: its gradient is discarded by the lookup op and both
/// weight-decay styles preserve exact zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix<T: Real> {
    pub values: Vec<T>,
    pub vocab_size: usize,
    pub d: usize,
    pub trainable: bool,
}

impl<T: Real> EmbeddingMatrix<T> {
    /// Assemble rows for every vocabulary id: pretrained vector when the
    /// token has one, otherwise N(0, 0.1²) from `rng`. PAD's row is zero
    /// even if the file happens to contain a `<pad>` entry.
    pub fn build(
        vocab: &Vocabulary,
        d: usize,
        pretrained: &BTreeMap<String, Vec<T>>,
        trainable: bool,
        rng: &mut SeedRng,
    ) -> Result<EmbeddingMatrix<T>> {
        if d == 0 {
            return Err(Error::Config(String::from("embedding dimension 0")));
        }
        let vocab_size = vocab.len();
        let mut values = Vec::with_capacity(vocab_size * d);
        values.extend(core::iter::repeat(T::zero()).take(d)); // PAD row
        let oov_scale = T::from_f(0.1);
        for id in 1..vocab_size {
            let token = vocab.token(id as u32).expect("id < len");
            match pretrained.get(token) {
                Some(row) => {
                    if row.len() != d {
                        return Err(Error::Data(alloc::format!(
                            "embedding for {token:?} has {} values, expected {d}",
                            row.len()
                        )));
                    }
                    values.extend_from_slice(row);
                }
                None => {
                    values.extend((0..d).map(|_| rng.normal::<T>() * oov_scale));
                }
            }
        }
        Ok(EmbeddingMatrix { values, vocab_size, d, trainable })
    }
}

/// One labeled text as loaded from disk; `source_id` is its position in
/// the source file, kept so reports can point back to records.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Example {
    pub text: String,
    pub label: u8,
    pub source_id: usize,
}

/// Encoded, padded corpus. Stored flat: row i of the id matrix is
/// `ids[i*max_len .. (i+1)*max_len]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    pub ids: Vec<u32>,
    pub labels: Vec<u8>,
    pub texts: Vec<String>,
    pub source_ids: Vec<usize>,
    pub max_len: usize,
    pub class_counts: [usize; 2],
    /// Examples dropped for exceeding max_len after tokenization.
    pub removed_over_length: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn example_ids(&self, i: usize) -> &[u32] {
        &self.ids[i * self.max_len..(i + 1) * self.max_len]
    }
}

/// A training/eval slice: ids `[len_of(indices), max_len]` flattened,
/// labels ready for the loss, and the dataset indices each row came
/// from (error analysis keys off those).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Batch {
    pub ids: Vec<u32>,
    pub labels: Vec<usize>,
    pub indices: Vec<usize>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Per-class split: `round(test_frac·|class|)` examples into test, the
/// rest into train, membership drawn by `seed`. Output preserves source
/// order within each side.
pub fn split_train_test(
    examples: &[Example],
    test_frac: f64,
    seed: u64,
) -> Result<(Vec<Example>, Vec<Example>)> {
    if !(0.0..=1.0).contains(&test_frac) {
        return Err(Error::Config(alloc::format!(
            "test fraction {test_frac} outside [0, 1]"
        )));
    }
    let mut rng = SeedRng::seed_from_u64(seed);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for class in 0..2u8 {
        let mut members: Vec<usize> = examples
            .iter()
            .enumerate()
            .filter(|(_, e)| e.label == class)
            .map(|(i, _)| i)
            .collect();
        if members.len() < 2 {
            return Err(Error::Data(alloc::format!(
                "class {class} has {} member(s); cannot split",
                members.len()
            )));
        }
        rng.shuffle(&mut members);
        let n_test = num_traits::Float::round(test_frac * members.len() as f64) as usize;
        test_idx.extend(members.drain(..n_test));
        train_idx.extend(members);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    let pick = |idx: &[usize]| idx.iter().map(|&i| examples[i].clone()).collect();
    Ok((pick(&train_idx), pick(&test_idx)))
}

/// Encode and right-pad every example to `max_len`; anything longer is
/// removed (not truncated) and counted.
pub fn pad_and_filter(examples: &[Example], vocab: &Vocabulary, max_len: usize) -> Dataset {
    let mut ds = Dataset {
        ids: Vec::new(),
        labels: Vec::new(),
        texts: Vec::new(),
        source_ids: Vec::new(),
        max_len,
        class_counts: [0, 0],
        removed_over_length: 0,
    };
    for ex in examples {
        let mut ids = vocab.encode(&ex.text);
        if ids.len() > max_len {
            ds.removed_over_length += 1;
            continue;
        }
        ids.resize(max_len, PAD_ID);
        ds.ids.extend_from_slice(&ids);
        ds.labels.push(ex.label);
        ds.texts.push(ex.text.clone());
        ds.source_ids.push(ex.source_id);
        ds.class_counts[ex.label as usize] += 1;
    }
    ds
}

/// Slice a dataset into batches of `batch_size` (final one may be
/// short). `shuffle` draws the order from the rng; `None` keeps dataset
/// order.
pub fn batches(
    dataset: &Dataset,
    batch_size: usize,
    shuffle: Option<&mut SeedRng>,
) -> Result<Vec<Batch>> {
    if batch_size == 0 {
        return Err(Error::Config(String::from("batch_size 0")));
    }
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    if let Some(rng) = shuffle {
        rng.shuffle(&mut order);
    }
    let mut out = Vec::with_capacity(order.len().div_ceil(batch_size));
    for chunk in order.chunks(batch_size) {
        let mut batch = Batch {
            ids: Vec::with_capacity(chunk.len() * dataset.max_len),
            labels: Vec::with_capacity(chunk.len()),
            indices: chunk.to_vec(),
        };
        for &i in chunk {
            batch.ids.extend_from_slice(dataset.example_ids(i));
            batch.labels.push(dataset.labels[i] as usize);
        }
        out.push(batch);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(text: &str, label: u8, source_id: usize) -> Example {
        Example { text: String::from(text), label, source_id }
    }

    #[test]
    fn tokenize_splits_punctuation_and_lowercases() {
        assert_eq!(
            tokenize("Great! I love waking up sick!"),
            ["great", "!", "i", "love", "waking", "up", "sick", "!"]
        );
    }

    #[test]
    fn tokenize_empty_and_whitespace() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("  \t\n ").is_empty());
    }

    #[test]
    fn tokenize_is_idempotent_on_joined_output() {
        let text = "Don't say \u{201c}no\u{201d} — it's 2-for-1!";
        let once = tokenize(text);
        let rejoined = once.join(" ");
        assert_eq!(tokenize(&rejoined), once);
    }

    #[test]
    fn vocab_orders_by_freq_then_lex() {
        let v = Vocabulary::build(["a a b"], 1);
        assert_eq!(v.id(PAD_TOKEN), UNK_ID); // reserved names are not tokens
        assert_eq!(v.tokens(), &["<pad>", "<unk>", "a", "b"]);
        assert_eq!(v.id("a"), 2);
        assert_eq!(v.id("b"), 3);
        // tie on frequency -> lexicographic
        let v = Vocabulary::build(["b a", "a b"], 1);
        assert_eq!((v.id("a"), v.id("b")), (2, 3));
    }

    #[test]
    fn vocab_min_freq_filters_and_unknown_maps_to_unk() {
        let v = Vocabulary::build(["a a b"], 2);
        assert_eq!(v.len(), 3);
        assert_eq!(v.id("b"), UNK_ID);
        assert_eq!(v.id("never-seen"), UNK_ID);
    }

    #[test]
    fn vocab_empty_corpus_has_only_reserved() {
        let v = Vocabulary::build([], 1);
        assert_eq!(v.len(), 2);
        assert_eq!(v.token(0), Some(PAD_TOKEN));
        assert_eq!(v.token(1), Some(UNK_TOKEN));
    }

    #[test]
    fn vocab_build_is_deterministic() {
        let corpus = ["the quick brown fox", "the lazy dog", "fox fox"];
        assert_eq!(Vocabulary::build(corpus, 1), Vocabulary::build(corpus, 1));
    }

    #[test]
    fn vocab_from_tokens_validates() {
        assert!(Vocabulary::from_tokens(alloc::vec![]).is_err());
        assert!(Vocabulary::from_tokens(alloc::vec![
            String::from("<pad>"),
            String::from("<unk>"),
            String::from("x"),
            String::from("x"),
        ])
        .is_err());
        let v = Vocabulary::build(["hello world"], 1);
        let back = Vocabulary::from_tokens(v.tokens().to_vec()).unwrap();
        assert_eq!(v, back);
    }

    #[test]
    fn embedding_copies_pretrained_rows_and_zeroes_pad() {
        let v = Vocabulary::build(["a b"], 1);
        let mut pre = BTreeMap::new();
        pre.insert(String::from("a"), alloc::vec![0.5f64, -0.25]);
        pre.insert(String::from("<pad>"), alloc::vec![9.0, 9.0]); // must be ignored
        let mut rng = SeedRng::seed_from_u64(1);
        let e = EmbeddingMatrix::build(&v, 2, &pre, true, &mut rng).unwrap();
        assert_eq!(&e.values[0..2], &[0.0, 0.0]);
        let a = v.id("a") as usize;
        assert_eq!(&e.values[a * 2..a * 2 + 2], &[0.5, -0.25]);
    }

    #[test]
    fn embedding_oov_rows_are_small_gaussian() {
        // 10^4 OOV values: mean ≈ 0, std ≈ 0.1.
        let texts: Vec<String> = (0..5000).map(|i| alloc::format!("tok{i}")).collect();
        let joined = texts.join(" ");
        let v = Vocabulary::build([joined.as_str()], 1);
        let mut rng = SeedRng::seed_from_u64(7);
        let e = EmbeddingMatrix::build(&v, 2, &BTreeMap::new(), true, &mut rng).unwrap();
        let oov = &e.values[2 * 2..]; // skip pad + unk rows? unk is OOV too; skip pad only
        let n = oov.len() as f64;
        let mean: f64 = oov.iter().sum::<f64>() / n;
        let var: f64 = oov.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        assert!(mean.abs() < 0.005, "mean {mean}");
        assert!((var.sqrt() - 0.1).abs() < 0.005, "std {}", var.sqrt());
        // reproducible under the same seed
        let mut rng2 = SeedRng::seed_from_u64(7);
        let e2 = EmbeddingMatrix::build(&v, 2, &BTreeMap::new(), true, &mut rng2).unwrap();
        assert_eq!(e.values, e2.values);
    }

    #[test]
    fn embedding_d_mismatch_is_an_error() {
        let v = Vocabulary::build(["a"], 1);
        let mut pre = BTreeMap::new();
        pre.insert(String::from("a"), alloc::vec![1.0f64]);
        let mut rng = SeedRng::seed_from_u64(0);
        assert!(EmbeddingMatrix::build(&v, 2, &pre, true, &mut rng).is_err());
    }

    #[test]
    fn pad_and_filter_pads_keeps_boundary_removes_long() {
        let v = Vocabulary::build(["a b c d e f"], 1);
        let examples = [
            ex("a b c", 0, 0),       // -> 2 pads
            ex("a b c d e", 1, 1),   // exactly max_len
            ex("a b c d e f", 0, 2), // removed
        ];
        let ds = pad_and_filter(&examples, &v, 5);
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.removed_over_length, 1);
        assert_eq!(ds.example_ids(0)[3..], [PAD_ID, PAD_ID]);
        assert!(ds.example_ids(1).iter().all(|&i| i != PAD_ID));
        assert_eq!(ds.class_counts, [1, 1]);
        // recount matches the report
        let recount = ds.labels.iter().filter(|&&l| l == 0).count();
        assert_eq!(recount, ds.class_counts[0]);
    }

    #[test]
    fn split_is_stratified_disjoint_covering_and_seeded() {
        let mut examples = Vec::new();
        for i in 0..10 {
            examples.push(ex(&alloc::format!("neg {i}"), 0, i));
        }
        for i in 0..5 {
            examples.push(ex(&alloc::format!("pos {i}"), 1, 10 + i));
        }
        let (train, test) = split_train_test(&examples, 0.2, 42).unwrap();
        assert_eq!(train.len() + test.len(), 15);
        let test_pos = test.iter().filter(|e| e.label == 1).count();
        let test_neg = test.len() - test_pos;
        assert_eq!((test_neg, test_pos), (2, 1)); // round(0.2·10), round(0.2·5)
        let mut all: Vec<usize> = train.iter().chain(&test).map(|e| e.source_id).collect();
        all.sort_unstable();
        assert_eq!(all, (0..15).collect::<Vec<_>>());
        // deterministic
        let again = split_train_test(&examples, 0.2, 42).unwrap();
        assert_eq!(again.0, train);
        assert_eq!(again.1, test);
        // different seed moves membership (10 choose 2 leaves room)
        let other = split_train_test(&examples, 0.2, 43).unwrap();
        assert_ne!(other.1, test);
    }

    #[test]
    fn split_edge_cases() {
        let examples: Vec<Example> =
            (0..4).map(|i| ex("t", (i % 2) as u8, i)).collect();
        let (train, test) = split_train_test(&examples, 0.0, 1).unwrap();
        assert!(test.is_empty());
        assert_eq!(train.len(), 4);
        let lonely = [ex("a", 0, 0), ex("b", 0, 1), ex("c", 1, 2)];
        assert!(split_train_test(&lonely, 0.2, 1).is_err());
        assert!(split_train_test(&examples, 1.5, 1).is_err());
    }

    #[test]
    fn batches_cover_dataset_with_final_partial() {
        let v = Vocabulary::build(["w"], 1);
        let examples: Vec<Example> =
            (0..130).map(|i| ex("w w w", (i % 2) as u8, i)).collect();
        let ds = pad_and_filter(&examples, &v, 8);
        let bs = batches(&ds, 64, None).unwrap();
        assert_eq!(bs.iter().map(Batch::len).collect::<Vec<_>>(), [64, 64, 2]);
        // no shuffle -> dataset order
        assert_eq!(bs[0].indices[..4], [0, 1, 2, 3]);
        let mut seen: Vec<usize> = bs.iter().flat_map(|b| b.indices.clone()).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..130).collect::<Vec<_>>());
        // ids rows really are the padded rows
        assert_eq!(bs[2].ids.len(), 2 * 8);
        assert_eq!(&bs[2].ids[0..8], ds.example_ids(bs[2].indices[0]));
    }

    #[test]
    fn batch_shuffle_is_seeded() {
        let v = Vocabulary::build(["w"], 1);
        let examples: Vec<Example> = (0..50).map(|i| ex("w", 0, i)).collect();
        let ds = pad_and_filter(&examples, &v, 8);
        let mut r1 = SeedRng::seed_from_u64(5);
        let mut r2 = SeedRng::seed_from_u64(5);
        let a = batches(&ds, 16, Some(&mut r1)).unwrap();
        let b = batches(&ds, 16, Some(&mut r2)).unwrap();
        assert_eq!(a, b);
        let mut r3 = SeedRng::seed_from_u64(6);
        let c = batches(&ds, 16, Some(&mut r3)).unwrap();
        assert_ne!(a[0].indices, c[0].indices);
        assert!(batches(&ds, 0, None).is_err());
    }
}
