use alloc::string::String;
use alloc::vec::Vec;

/// Elements whose content is dropped entirely.
const SKIPPED: &[&str] = &["journal-meta", "ref-list", "table-wrap", "fig", "graphic", "media", "object-id"];

/// Inline elements that do not separate words.
const INLINE: &[&str] = &["italic", "bold", "sup", "sub", "sc", "underline", "monospace", "i", "b", "em", "strong", "span"];

/// Flatten article XML to text in document order.
///
/// Tags are removed, entities decoded and whitespace collapsed. Block-level
/// tags separate text segments with a space; inline formatting tags do not.
/// Malformed input is tolerated: an unterminated tag is dropped, and any
/// tag-like `<p>` or `</p>` left in the decoded text is removed.
pub fn strip_xml(xml: &str) -> String {
    let mut raw = String::with_capacity(xml.len());
    let mut skip_depth: usize = 0;
    let mut rest = xml;
    while !rest.is_empty() {
        let Some(lt) = rest.find('<') else {
            if skip_depth == 0 {
                raw.push_str(rest);
            }
            break;
        };
        if skip_depth == 0 {
            raw.push_str(&rest[..lt]);
        }
        rest = &rest[lt..];
        if let Some(after) = rest.strip_prefix("<!--") {
            rest = after.find("-->").map_or("", |e| &after[e + 3..]);
            continue;
        }
        if let Some(after) = rest.strip_prefix("<![CDATA[") {
            let end = after.find("]]>").unwrap_or(after.len());
            if skip_depth == 0 {
                raw.push_str(&escape_lt(&after[..end]));
            }
            rest = after.get(end + 3..).unwrap_or("");
            continue;
        }
        let Some(gt) = rest.find('>') else {
            // Unterminated tag: drop it.
            break;
        };
        let tag = &rest[1..gt];
        rest = &rest[gt + 1..];
        let closing = tag.starts_with('/');
        let name: String = tag
            .trim_start_matches(['/', '?', '!'])
            .chars()
            .take_while(|c| !c.is_whitespace() && *c != '/')
            .collect::<String>()
            .to_ascii_lowercase();
        let self_closing = tag.ends_with('/') || tag.starts_with('?') || tag.starts_with('!');
        if SKIPPED.contains(&name.as_str()) && !self_closing {
            if closing {
                skip_depth = skip_depth.saturating_sub(1);
            } else {
                skip_depth += 1;
            }
            continue;
        }
        if skip_depth == 0 && !INLINE.contains(&name.as_str()) {
            raw.push(' ');
        }
    }
    let decoded = decode_entities(&raw);
    let cleaned = remove_stray_tags(&decoded);
    collapse_whitespace(&cleaned)
}

fn escape_lt(s: &str) -> String {
    s.replace('<', "&lt;")
}

fn decode_entities(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        rest = &rest[amp..];
        let decoded = rest.find(';').filter(|&e| e <= 10).and_then(|end| {
            let entity = &rest[1..end];
            let ch = match entity {
                "lt" => Some('<'),
                "gt" => Some('>'),
                "amp" => Some('&'),
                "quot" => Some('"'),
                "apos" => Some('\''),
                "nbsp" => Some(' '),
                _ if entity.starts_with("#x") || entity.starts_with("#X") => {
                    u32::from_str_radix(&entity[2..], 16).ok().and_then(char::from_u32)
                }
                _ if entity.starts_with('#') => entity[1..].parse::<u32>().ok().and_then(char::from_u32),
                _ => None,
            };
            ch.map(|c| (c, end))
        });
        match decoded {
            Some((c, end)) => {
                out.push(c);
                rest = &rest[end + 1..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

/// Drop literal `<p>`-style tags and break any remaining `<` + letter pair.
fn remove_stray_tags(s: &str) -> String {
    let chars: Vec<char> = s.chars().collect();
    let mut out = String::with_capacity(s.len());
    let mut i = 0;
    while i < chars.len() {
        if chars[i] == '<' {
            let mut j = i + 1;
            if chars.get(j) == Some(&'/') {
                j += 1;
            }
            if chars.get(j).is_some_and(|c| c.is_ascii_alphabetic()) {
                let mut k = j;
                while k < chars.len() && chars[k] != '>' && chars[k] != '<' && k - j < 64 {
                    k += 1;
                }
                if chars.get(k) == Some(&'>') {
                    out.push(' ');
                    i = k + 1;
                    continue;
                }
                out.push_str("< ");
                i += 1;
                continue;
            }
        }
        out.push(chars[i]);
        i += 1;
    }
    out
}

fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}
