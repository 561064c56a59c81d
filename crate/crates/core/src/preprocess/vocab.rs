use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PAD_ID: u32 = 0;
pub const OOV_ID: u32 = 1;
/// Number of reserved ids preceding real tokens.
pub const RESERVED: usize = 2;

const PAD: &str = "<pad>";
const OOV: &str = "<unk>";

/// Frequency-capped token → id map. Ids `0` and `1` are PAD and OOV; real
/// tokens follow, most frequent first, ties broken lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    tokens: Vec<String>,
    #[serde(skip)]
    index: BTreeMap<String, u32>,
}

impl Vocabulary {
    /// Keep the `cap` most frequent tokens of `stream`.
    pub fn build<I, S>(stream: I, cap: usize) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        if cap == 0 {
            return Err(Error::InvalidConfig("vocabulary cap must be at least 1".into()));
        }
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        for tok in stream {
            *counts.entry(tok.as_ref().to_string()).or_default() += 1;
        }
        let mut ranked: Vec<(String, u64)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(cap);
        let tokens = [PAD.to_string(), OOV.to_string()].into_iter().chain(ranked.into_iter().map(|(t, _)| t));
        Ok(Vocabulary::from_tokens(tokens.collect()))
    }

    /// Rebuild from the id-ordered token list (reserved entries included).
    pub fn from_tokens(tokens: Vec<String>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Vocabulary { tokens, index }
    }

    /// Restore the lookup index after deserialization.
    pub fn reindex(&mut self) {
        self.index = self.tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() <= RESERVED
    }

    pub fn lookup(&self, token: &str) -> u32 {
        match self.index.get(token) {
            Some(&id) if id as usize >= RESERVED => id,
            _ => OOV_ID,
        }
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// FNV-1a over the id-ordered tokens, used to tie checkpoints to a vocabulary.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for t in &self.tokens {
            for b in t.bytes().chain(core::iter::once(0xff)) {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cap_one_keeps_most_frequent() {
        let v = Vocabulary::build(["a", "a", "b"], 1).unwrap();
        assert_eq!(v.len(), 1 + RESERVED);
        assert_eq!(v.lookup("a"), 2);
        assert_eq!(v.lookup("b"), OOV_ID);
    }

    #[test]
    fn ties_break_lexicographically() {
        let v = Vocabulary::build(["y", "x", "z", "z"], 2).unwrap();
        assert_eq!(v.token(2), Some("z"));
        assert_eq!(v.token(3), Some("x"));
        assert_eq!(v.lookup("y"), OOV_ID);
    }

    #[test]
    fn zero_cap_is_an_error() {
        assert!(Vocabulary::build(["a"], 0).is_err());
    }

    #[test]
    fn reserved_strings_map_to_oov() {
        let v = Vocabulary::build(["a"], 5).unwrap();
        assert_eq!(v.lookup("<pad>"), OOV_ID);
        assert_eq!(v.lookup("<unk>"), OOV_ID);
    }

    #[test]
    fn ids_are_dense_and_fingerprint_is_stable() {
        let v = Vocabulary::build(["b", "a", "c", "a"], 10).unwrap();
        for (i, t) in v.tokens().iter().enumerate().skip(RESERVED) {
            assert_eq!(v.lookup(t) as usize, i);
        }
        let w = Vocabulary::from_tokens(v.tokens().to_vec());
        assert_eq!(v.fingerprint(), w.fingerprint());
        assert_ne!(v.fingerprint(), Vocabulary::build(["a"], 10).unwrap().fingerprint());
    }
}
