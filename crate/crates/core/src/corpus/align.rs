use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::numerics::math;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlignmentConfig {
    /// Minimum similarity for a window to count as the rationale's location.
    pub threshold: f64,
    /// Window lengths range over `(1 ± tolerance) · |rationale|` characters.
    pub length_tolerance: f64,
}

impl Default for AlignmentConfig {
    fn default() -> Self {
        AlignmentConfig { threshold: 0.75, length_tolerance: 0.2 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Alignment {
    /// Byte offsets of the best window and its similarity.
    Found { start: usize, end: usize, score: f64 },
    NoAlignment { best_score: f64 },
}

/// Levenshtein distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            cur[j + 1] = (prev[j + 1] + 1).min(cur[j] + 1).min(prev[j] + usize::from(ca != cb));
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - levenshtein / max length` over characters; 1 for two empty strings.
pub fn similarity(a: &str, b: &str) -> f64 {
    let n = a.chars().count().max(b.chars().count());
    if n == 0 {
        return 1.0;
    }
    1.0 - levenshtein(a, b) as f64 / n as f64
}

/// Candidate window: `distance / max(len, n)` is the dissimilarity.
#[derive(Clone, Copy, Debug)]
struct Candidate {
    start: usize,
    len: usize,
    distance: usize,
    denom: usize,
}

impl Candidate {
    /// Ordering where `Less` means "better".
    fn rank(&self, other: &Candidate, n: usize) -> Ordering {
        // Compare distance/denom without floating point.
        (self.distance * other.denom)
            .cmp(&(other.distance * self.denom))
            .then(self.start.cmp(&other.start))
            .then(self.len.abs_diff(n).cmp(&other.len.abs_diff(n)))
            .then(self.len.cmp(&other.len))
    }

    fn score(&self) -> f64 {
        1.0 - self.distance as f64 / self.denom as f64
    }
}

/// Locate `rationale` in `text` as the window maximising
/// `1 - levenshtein / max(window, rationale)` (character counts).
///
/// Ties prefer the earliest start, then the length closest to the
/// rationale's, then the shorter window. Exact substrings short-circuit
/// with score 1.
pub fn locate_rationale(text: &str, rationale: &str, config: &AlignmentConfig) -> Result<Alignment> {
    if rationale.trim().is_empty() {
        return Err(Error::EmptyInput("rationale"));
    }
    if let Some(pos) = text.find(rationale) {
        return Ok(Alignment::Found { start: pos, end: pos + rationale.len(), score: 1.0 });
    }
    let r: Vec<char> = rationale.chars().collect();
    let t: Vec<(usize, char)> = text.char_indices().collect();
    let n = r.len();
    let (lo, hi) = window_band(n, t.len(), config.length_tolerance);
    if t.is_empty() || lo == 0 {
        return Ok(Alignment::NoAlignment { best_score: 0.0 });
    }

    let mut best: Option<Candidate> = None;
    let mut col = vec![0usize; n + 1];
    let mut next = vec![0usize; n + 1];
    for start in 0..=t.len() - lo {
        for (k, c) in col.iter_mut().enumerate() {
            *c = k;
        }
        let max_len = hi.min(t.len() - start);
        for len in 1..=max_len {
            let ch = t[start + len - 1].1;
            next[0] = len;
            for k in 1..=n {
                next[k] = (col[k] + 1).min(next[k - 1] + 1).min(col[k - 1] + usize::from(r[k - 1] != ch));
            }
            core::mem::swap(&mut col, &mut next);
            if len >= lo {
                let cand = Candidate { start, len, distance: col[n], denom: len.max(n) };
                if best.as_ref().is_none_or(|b| cand.rank(b, n) == Ordering::Less) {
                    best = Some(cand);
                }
            }
        }
    }
    let best = best.expect("at least one window");
    let score = best.score();
    if score < config.threshold {
        return Ok(Alignment::NoAlignment { best_score: score });
    }
    let start = t[best.start].0;
    let end = t.get(best.start + best.len).map_or(text.len(), |c| c.0);
    Ok(Alignment::Found { start, end, score })
}

/// Inclusive window-length band clipped to the text length.
pub(crate) fn window_band(n: usize, text_len: usize, tolerance: f64) -> (usize, usize) {
    let lo = (math::floor(n as f64 * (1.0 - tolerance)) as usize).max(1);
    let hi = (math::ceil(n as f64 * (1.0 + tolerance)) as usize).max(lo);
    (lo.min(text_len), hi.min(text_len))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levenshtein_basics() {
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("same", "same"), 0);
        assert_eq!(similarity("", ""), 1.0);
        assert!((similarity("abcd", "abce") - 0.75).abs() < 1e-15);
    }

    #[test]
    fn exact_substring() {
        let a = locate_rationale("abc DEF ghi", "DEF", &AlignmentConfig::default()).unwrap();
        assert_eq!(a, Alignment::Found { start: 4, end: 7, score: 1.0 });
    }

    #[test]
    fn empty_rationale_is_an_error() {
        assert!(matches!(locate_rationale("abc", "  ", &AlignmentConfig::default()), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn absent_rationale_is_no_alignment() {
        let a = locate_rationale("the quick brown fox jumps", "zzzzqqqqxxxx", &AlignmentConfig::default()).unwrap();
        assert!(matches!(a, Alignment::NoAlignment { best_score } if best_score < 0.75));
    }

    #[test]
    fn single_substitution_is_recovered() {
        let text = "Background text. Mortality fell from 12% to 8% (p = 0.02). More text.";
        let a = locate_rationale(text, "Mortality fell from 12% to 9% (p = 0.02)", &AlignmentConfig::default()).unwrap();
        match a {
            Alignment::Found { start, end, score } => {
                assert_eq!(&text[start..end], "Mortality fell from 12% to 8% (p = 0.02)");
                assert!(score > 0.97);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_ascii_offsets_are_bytes() {
        let text = "αβγ résumé of findings";
        let a = locate_rationale(text, "resume of findings", &AlignmentConfig::default()).unwrap();
        match a {
            Alignment::Found { start, end, .. } => assert_eq!(&text[start..end], "résumé of findings"),
            other => panic!("{other:?}"),
        }
    }
}
