//! Checkpoint format: everything needed to rebuild a trained model and
//! keep drawing from its random stream. Little-endian throughout, with
//! a SHA-256 trailer so truncation or bit rot fails loudly instead of
//! loading garbage weights.
//!
//! ```text
//! magic "DWENETCK" | version u32 | config JSON (len-prefixed)
//! vocab: count, then each token len-prefixed
//! rng: 32 seed bytes + u128 word position
//! tensors: count, then per tensor name, shape (rank + dims), f32 data
//! sha256 over everything above
//! ```
//!
//! No optimizer state: there is no mid-run resume, and a fresh run
//! restarts the schedule anyway.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::Path;

use dwenet_core::data::Vocabulary;
use dwenet_core::model::Model;
use dwenet_core::rng::SeedRng;
use dwenet_core::train::TrainConfig;
use sha2::{Digest, Sha256};

use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"DWENETCK";
const VERSION: u32 = 1;

/// A parsed checkpoint. `build_model` turns it back into a live model;
/// the raw pieces stay available for compatibility checks (vocab
/// equality, config comparison) without paying for reconstruction.
#[derive(Debug)]
pub struct Checkpoint {
    pub config: TrainConfig,
    pub vocab: Vocabulary,
    pub rng_state: ([u8; 32], u128),
    pub tensors: BTreeMap<String, (Vec<usize>, Vec<f32>)>,
}

impl Checkpoint {
    /// Rebuild the model: allocate via the stored config, then load
    /// every stored tensor over the fresh values. The init RNG is a
    /// placeholder — all of its output is overwritten.
    pub fn build_model(&self) -> Result<Model<f32>> {
        let d = self.config.model.embed_dim;
        let zeros = vec![0.0f32; self.vocab.len() * d];
        let mut rng = SeedRng::seed_from_u64(0);
        let model = Model::init(self.config.model.clone(), self.vocab.len(), zeros, &mut rng)?;
        let named: BTreeMap<String, Vec<f32>> =
            self.tensors.iter().map(|(k, (_, v))| (k.clone(), v.clone())).collect();
        model.load_values(named)?;
        Ok(model)
    }
}

/// Serialize and atomically replace `path` (write sibling + rename), so
/// a crash never leaves a half-written checkpoint under the real name.
pub fn save(
    path: &Path,
    model: &Model<f32>,
    config: &TrainConfig,
    vocab: &Vocabulary,
    rng_state: ([u8; 32], u128),
) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());

    let config_json = serde_json::to_vec(config).expect("config serializes");
    write_bytes(&mut buf, &config_json);

    write_u64(&mut buf, vocab.len() as u64);
    for token in vocab.tokens() {
        write_bytes(&mut buf, token.as_bytes());
    }

    buf.extend_from_slice(&rng_state.0);
    buf.extend_from_slice(&rng_state.1.to_le_bytes());

    let named: Vec<(&String, &dwenet_core::Tensor<f32>)> = model
        .named_params()
        .iter()
        .chain(model.named_buffers())
        .map(|(n, t)| (n, t))
        .collect();
    write_u64(&mut buf, named.len() as u64);
    for (name, tensor) in named {
        write_bytes(&mut buf, name.as_bytes());
        let shape = tensor.shape();
        write_u64(&mut buf, shape.len() as u64);
        for dim in &shape {
            write_u64(&mut buf, *dim as u64);
        }
        let data = tensor.data();
        write_u64(&mut buf, data.len() as u64);
        for v in data.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }

    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest);

    let mut tmp_name = OsString::from(path.as_os_str());
    tmp_name.push(".tmp");
    let tmp = Path::new(&tmp_name).to_path_buf();
    std::fs::write(&tmp, &buf).map_err(|e| Error::at(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::at(path, e))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::at(path, e))?;
    let fail = |msg: &str| Error::Checkpoint(format!("{}: {msg}", path.display()));

    if bytes.len() < MAGIC.len() + 4 + 32 {
        return Err(fail("file too short"));
    }
    let (body, trailer) = bytes.split_at(bytes.len() - 32);
    let digest = Sha256::digest(body);
    if digest.as_slice() != trailer {
        return Err(fail("hash mismatch — corrupt or truncated"));
    }

    let mut r = Reader { bytes: body, at: 0 };
    if r.take(8)? != MAGIC {
        return Err(fail("bad magic"));
    }
    let version = u32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(fail(&format!("unsupported version {version}")));
    }

    let config: TrainConfig = serde_json::from_slice(r.bytes_field()?)
        .map_err(|e| fail(&format!("stored config: {e}")))?;

    let n_tokens = r.u64_field()? as usize;
    let mut tokens = Vec::with_capacity(n_tokens.min(1 << 20));
    for _ in 0..n_tokens {
        let raw = r.bytes_field()?;
        let token = std::str::from_utf8(raw).map_err(|_| fail("vocab token not UTF-8"))?;
        tokens.push(token.to_string());
    }
    let vocab = Vocabulary::from_tokens(tokens)?;

    let seed: [u8; 32] = r.take(32)?.try_into().expect("32 bytes");
    let word_pos = u128::from_le_bytes(r.take(16)?.try_into().expect("16 bytes"));

    let n_tensors = r.u64_field()? as usize;
    let mut tensors = BTreeMap::new();
    for _ in 0..n_tensors {
        let name = std::str::from_utf8(r.bytes_field()?)
            .map_err(|_| fail("tensor name not UTF-8"))?
            .to_string();
        let rank = r.u64_field()? as usize;
        if rank > 8 {
            return Err(fail(&format!("tensor {name:?} has rank {rank}")));
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.u64_field()? as usize);
        }
        let count = r.u64_field()? as usize;
        if count != shape.iter().product::<usize>() {
            return Err(fail(&format!("tensor {name:?}: {count} values for shape {shape:?}")));
        }
        let raw = r.take(count.checked_mul(4).ok_or_else(|| fail("length overflow"))?)?;
        let mut data = Vec::with_capacity(count);
        for chunk in raw.chunks_exact(4) {
            data.push(f32::from_le_bytes(chunk.try_into().expect("4 bytes")));
        }
        if tensors.insert(name.clone(), (shape, data)).is_some() {
            return Err(fail(&format!("duplicate tensor {name:?}")));
        }
    }
    if r.at != r.bytes.len() {
        return Err(fail("trailing bytes after tensor table"));
    }

    Ok(Checkpoint { config, vocab, rng_state: (seed, word_pos), tensors })
}

fn write_u64(buf: &mut Vec<u8>, v: u64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn write_bytes(buf: &mut Vec<u8>, bytes: &[u8]) {
    write_u64(buf, bytes.len() as u64);
    buf.extend_from_slice(bytes);
}

/// Cursor over the hashed body. Every length is bounds-checked against
/// what is actually left, so corrupt prefixes can't request absurd
/// allocations (the hash already rules most of this out).
struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.bytes.len() - self.at {
            return Err(Error::Checkpoint(format!(
                "need {n} bytes at offset {}, have {}",
                self.at,
                self.bytes.len() - self.at
            )));
        }
        let out = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(out)
    }

    fn u64_field(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn bytes_field(&mut self) -> Result<&'a [u8]> {
        let len = self.u64_field()? as usize;
        self.take(len)
    }
}
