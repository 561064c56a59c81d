use alloc::string::String;
use alloc::vec::Vec;

use super::Token;

/// Lowercased word, number and punctuation tokens with byte spans.
///
/// Words are runs of alphanumerics starting with a letter. Numbers are
/// `\d+(\.\d+)*` or `.\d+` when the period does not follow an alphanumeric.
/// Any other non-whitespace character is its own token.
pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let byte_at = |i: usize| chars.get(i).map_or(text.len(), |c| c.0);
    let is_digit = |i: usize| chars.get(i).is_some_and(|c| c.1.is_ascii_digit());
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i].1;
        let start = i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let prev_alnum = i > 0 && chars[i - 1].1.is_alphanumeric();
        if c.is_ascii_digit() || (c == '.' && !prev_alnum && is_digit(i + 1)) {
            if c == '.' {
                i += 1;
            }
            loop {
                while is_digit(i) {
                    i += 1;
                }
                if chars.get(i).is_some_and(|c| c.1 == '.') && is_digit(i + 1) {
                    i += 1;
                } else {
                    break;
                }
            }
        } else if c.is_alphabetic() {
            while chars.get(i).is_some_and(|c| c.1.is_alphanumeric() || c.1 == '_') {
                i += 1;
            }
        } else {
            i += 1;
        }
        let (s, e) = (byte_at(start), byte_at(i));
        let surface: String = text[s..e].to_lowercase();
        tokens.push(Token { start: s, end: e, surface });
    }
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surfaces(text: &str) -> Vec<String> {
        tokenize(text).into_iter().map(|t| t.surface).collect()
    }

    #[test]
    fn stated_examples() {
        assert_eq!(surfaces("P<0.001"), ["p", "<", "0.001"]);
        assert_eq!(surfaces("Liraglutide (1.8 mg)"), ["liraglutide", "(", "1.8", "mg", ")"]);
        assert!(surfaces("").is_empty());
    }

    #[test]
    fn numbers_and_punctuation() {
        assert_eq!(surfaces("p=.05, n=12."), ["p", "=", ".05", ",", "n", "=", "12", "."]);
        assert_eq!(surfaces("SD1 vs. placebo-controlled"), ["sd1", "vs", ".", "placebo", "-", "controlled"]);
        assert_eq!(surfaces("1.2.3"), ["1.2.3"]);
    }

    proptest::proptest! {
        #[test]
        fn idempotent_on_detokenized_output(text in "[ -~]{0,60}") {
            let first = surfaces(&text);
            let joined = first.join(" ");
            proptest::prop_assert_eq!(surfaces(&joined), first.clone());
            for t in tokenize(&text) {
                proptest::prop_assert_eq!(text[t.start..t.end].to_lowercase(), t.surface);
            }
        }
    }
}
