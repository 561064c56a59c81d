//! Deterministic binary layout: header, then every parameter as
//! `rows, cols, values…` in little-endian order.

use alloc::format;
use alloc::vec::Vec;

use super::{Model, ModelConfig, Variant};
use crate::error::{Error, Result};
use crate::numerics::{seeded_rng, Embeddings, Tensor2};

pub const CHECKPOINT_MAGIC: [u8; 8] = *b"EVINFCK\0";
pub const CHECKPOINT_VERSION: u32 = 1;

pub(super) fn encode(model: &Model, vocab_fingerprint: u64) -> Vec<u8> {
    let c = &model.config;
    let mut out = Vec::new();
    out.extend_from_slice(&CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.push(c.variant.code());
    out.push(model.embeddings.trainable() as u8);
    for v in [c.embedding_dim, c.hidden, c.classifier_hidden, c.attention_hidden, c.max_tokens, model.vocab_len()] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    out.extend_from_slice(&c.seed.to_le_bytes());
    out.extend_from_slice(&c.embedding_std.to_le_bytes());
    out.extend_from_slice(&vocab_fingerprint.to_le_bytes());
    let params = model.parameters();
    out.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for p in params {
        out.extend_from_slice(&(p.value.rows() as u64).to_le_bytes());
        out.extend_from_slice(&(p.value.cols() as u64).to_le_bytes());
        for v in p.value.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| Error::Checkpoint("truncated checkpoint".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Checkpoint("dimension overflows usize".into()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub(super) fn decode(bytes: &[u8], expected_fingerprint: Option<u64>) -> Result<Model> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("not a model checkpoint".into()));
    }
    let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported checkpoint version {version}")));
    }
    let variant = Variant::from_code(r.u8()?).ok_or_else(|| Error::Checkpoint("unknown variant code".into()))?;
    let trainable = r.u8()? != 0;
    let config = ModelConfig {
        variant,
        embedding_dim: r.usize()?,
        hidden: r.usize()?,
        classifier_hidden: r.usize()?,
        attention_hidden: r.usize()?,
        max_tokens: r.usize()?,
        ..ModelConfig::default()
    };
    let vocab_len = r.usize()?;
    let config = ModelConfig { seed: r.u64()?, embedding_std: r.f64()?, ..config };
    let fingerprint = r.u64()?;
    if let Some(expected) = expected_fingerprint {
        if expected != fingerprint {
            return Err(Error::Checkpoint("checkpoint was written for a different vocabulary".into()));
        }
    }
    config.validate()?;
    // Shapes only; every value is overwritten below.
    let mut rng = seeded_rng(0);
    let mut model = Model::build(config.clone(), Embeddings::zeros(vocab_len, config.embedding_dim), &mut rng)?;
    model.embeddings.table.trainable = trainable;
    let count = r.usize()?;
    let mut params = model.parameters_mut(super::ParamGroup::All);
    if count != params.len() {
        return Err(Error::Checkpoint(format!("expected {} parameters, found {count}", params.len())));
    }
    for p in params.iter_mut() {
        let (rows, cols) = (r.usize()?, r.usize()?);
        if (rows, cols) != (p.value.rows(), p.value.cols()) {
            return Err(Error::Checkpoint(format!(
                "parameter shape {rows}×{cols} does not match {}×{}",
                p.value.rows(),
                p.value.cols()
            )));
        }
        let values = (0..rows * cols).map(|_| r.f64()).collect::<Result<Vec<f64>>>()?;
        p.value = Tensor2::from_vec(rows, cols, values).map_err(|e| Error::Checkpoint(format!("{e}")))?;
    }
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint("trailing bytes after parameters".into()));
    }
    Ok(model)
}
