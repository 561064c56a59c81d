use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PValueForm {
    Eq,
    Gt,
    Lt,
}

impl fmt::Display for PValueForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PValueForm::Eq => "=",
            PValueForm::Gt => ">",
            PValueForm::Lt => "<",
        })
    }
}

/// A `p <op> number` occurrence; `position..end` are byte offsets of the whole match.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PValueMatch {
    pub form: PValueForm,
    pub value: f64,
    pub position: usize,
    pub end: usize,
}

fn skip_ws(b: &[u8], mut i: usize) -> usize {
    while i < b.len() && b[i].is_ascii_whitespace() {
        i += 1;
    }
    i
}

fn digits(b: &[u8], mut i: usize) -> usize {
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    i
}

/// Length of a numeral `\d*\.?\d+([eE][-+]?\d+)?` starting at `i`, if any.
fn numeral(b: &[u8], i: usize) -> Option<usize> {
    let int_end = digits(b, i);
    let mut end = int_end;
    if end < b.len() && b[end] == b'.' {
        let frac_end = digits(b, end + 1);
        if frac_end > end + 1 {
            end = frac_end;
        }
    }
    if end == i {
        return None;
    }
    if end < b.len() && (b[end] == b'e' || b[end] == b'E') {
        let mut j = end + 1;
        if j < b.len() && (b[j] == b'-' || b[j] == b'+') {
            j += 1;
        }
        let exp_end = digits(b, j);
        if exp_end > j {
            end = exp_end;
        }
    }
    Some(end)
}

/// Find `p = X`, `p > X` and `p < X` (case-insensitive, spacing optional).
pub fn extract_p_values(sentence: &str) -> Vec<PValueMatch> {
    let b = sentence.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let at_word_start = i == 0 || !(b[i - 1].is_ascii_alphanumeric() || b[i - 1] >= 0x80);
        if (b[i] == b'p' || b[i] == b'P') && at_word_start {
            let j = skip_ws(b, i + 1);
            let form = match b.get(j) {
                Some(b'=') => Some(PValueForm::Eq),
                Some(b'>') => Some(PValueForm::Gt),
                Some(b'<') => Some(PValueForm::Lt),
                _ => None,
            };
            if let Some(form) = form {
                let k = skip_ws(b, j + 1);
                if let Some(end) = numeral(b, k) {
                    // The numeral is pure ASCII, so this slice is on char boundaries.
                    if let Ok(value) = sentence[k..end].parse::<f64>() {
                        out.push(PValueMatch { form, value, position: i, end });
                        i = end;
                        continue;
                    }
                }
            }
        }
        i += 1;
    }
    out
}
