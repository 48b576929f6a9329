//! Tolerant readers for selector output.
//!
//! The offline selector is told to answer with a one-line, non-JSON list such as
//! `Output list: [{object_index: 1, keyframe: 4, object_description: "..."}]`.
//! Real output drifts (unquoted keys, curly quotes, markdown emphasis, trailing
//! commas, line breaks inside the brackets), so this is a hand-written scanner rather
//! than a JSON reader.

use std::collections::HashSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("response has no \"Output list:\" line")]
    MissingPrefix,
}

/// One entry of the selector's output list, before the grid slot is mapped back to
/// a clip frame.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyframeChoice {
    pub object_index: usize,
    pub candidate_index: usize,
    pub description: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedOutputList {
    pub choices: Vec<KeyframeChoice>,
    pub warnings: Vec<String>,
}

static PREFIX: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)output[ \t]+list[ \t*_]*:").expect("valid regex"));

#[derive(Default, Debug)]
struct RawEntry {
    object_index: Option<String>,
    keyframe: Option<String>,
    description: Option<String>,
}

enum Field {
    ObjectIndex,
    Keyframe,
    Description,
    Unknown,
}

fn classify_key(key: &str) -> Field {
    let norm: String = key
        .trim()
        .chars()
        .filter(|&c| c != '\\' && c != '*')
        .map(|c| match c {
            ' ' | '-' => '_',
            c => c.to_ascii_lowercase(),
        })
        .collect();
    match norm.as_str() {
        "object_index" | "objectindex" | "index" | "object_id" | "object" => Field::ObjectIndex,
        "keyframe" | "key_frame" | "keyframe_index" | "frame" | "frame_index" => Field::Keyframe,
        "object_description" | "objectdescription" | "description" | "desc" => Field::Description,
        _ => Field::Unknown,
    }
}

/// First run of ASCII digits in `token` ("k_4" -> 4).
fn first_integer(token: &str) -> Option<usize> {
    let start = token.find(|c: char| c.is_ascii_digit())?;
    let digits: String = token[start..]
        .chars()
        .take_while(char::is_ascii_digit)
        .collect();
    digits.parse().ok()
}

fn closing_quote(open: char) -> Option<&'static [char]> {
    match open {
        '"' => Some(&['"']),
        '\u{201c}' | '\u{201d}' => Some(&['\u{201d}', '\u{201c}', '"']),
        '\'' => Some(&['\'']),
        '\u{2018}' | '\u{2019}' => Some(&['\u{2019}', '\'']),
        _ => None,
    }
}

struct Scanner<'a> {
    chars: Vec<char>,
    pos: usize,
    warnings: &'a mut Vec<String>,
}

impl Scanner<'_> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn skip_separators(&mut self) {
        while self.peek().is_some_and(|c| c.is_whitespace() || c == ',') {
            self.pos += 1;
        }
    }

    /// True when the next non-space character after `at` is one of `stops` or the end.
    fn followed_by(&self, at: usize, stops: &[char]) -> bool {
        let mut i = at;
        while let Some(&c) = self.chars.get(i) {
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            return stops.contains(&c);
        }
        true
    }

    /// At a ',' that starts the next `key:` pair of the same entry.
    fn at_next_key(&self) -> bool {
        let mut i = self.pos + 1;
        while self.chars.get(i).is_some_and(|c| c.is_whitespace()) {
            i += 1;
        }
        let start = i;
        while self
            .chars
            .get(i)
            .is_some_and(|&c| c.is_alphanumeric() || matches!(c, '_' | '\\' | '"' | '\''))
        {
            i += 1;
        }
        i > start && self.followed_by(i, &[':'])
    }

    /// Quoted string; a quote only closes when followed by a delimiter, so stray
    /// inner quotes stay part of the text.
    fn quoted(&mut self, closers: &[char], delimiters: &[char]) -> String {
        let mut out = String::new();
        while let Some(c) = self.peek() {
            self.pos += 1;
            if c == '\\' {
                if let Some(next) = self.peek() {
                    out.push(next);
                    self.pos += 1;
                }
                continue;
            }
            if closers.contains(&c) && self.followed_by(self.pos, delimiters) {
                return out;
            }
            out.push(c);
        }
        self.warnings.push("unterminated quoted string in output list".into());
        out
    }

    fn key(&mut self) -> Option<String> {
        if let Some(closers) = self.peek().and_then(closing_quote) {
            self.pos += 1;
            let k = self.quoted(closers, &[':']);
            self.skip_ws();
            if self.peek() == Some(':') {
                self.pos += 1;
            }
            return Some(k);
        }
        let mut k = String::new();
        while let Some(c) = self.peek() {
            match c {
                ':' => {
                    self.pos += 1;
                    return Some(k);
                }
                '}' | ']' | '{' | '\n' => return None,
                _ => {
                    k.push(c);
                    self.pos += 1;
                }
            }
        }
        None
    }

    fn value(&mut self) -> String {
        self.skip_ws();
        if let Some(closers) = self.peek().and_then(closing_quote) {
            self.pos += 1;
            return self.quoted(closers, &[',', '}', ']']);
        }
        let mut v = String::new();
        while let Some(c) = self.peek() {
            if c == '}' || (c == ',' && self.at_next_key()) {
                break;
            }
            // An unquoted value cannot span entries.
            if c == '{' {
                break;
            }
            v.push(c);
            self.pos += 1;
        }
        let v = v.trim().trim_end_matches(',').trim();
        v.strip_prefix('<')
            .and_then(|s| s.strip_suffix('>'))
            .unwrap_or(v)
            .to_string()
    }

    fn entry(&mut self) -> RawEntry {
        let mut entry = RawEntry::default();
        loop {
            self.skip_separators();
            match self.peek() {
                None => {
                    self.warnings.push("unterminated entry in output list".into());
                    return entry;
                }
                Some('}') => {
                    self.pos += 1;
                    return entry;
                }
                Some(_) => {}
            }
            let Some(key) = self.key() else {
                // Not a key: skip to the end of this entry.
                self.warnings.push("malformed key in output list entry".into());
                while let Some(c) = self.peek() {
                    self.pos += 1;
                    if c == '}' {
                        return entry;
                    }
                }
                return entry;
            };
            let value = self.value();
            let slot = match classify_key(&key) {
                Field::ObjectIndex => &mut entry.object_index,
                Field::Keyframe => &mut entry.keyframe,
                Field::Description => &mut entry.description,
                Field::Unknown => {
                    self.warnings.push(format!("ignoring unknown key {:?}", key.trim()));
                    continue;
                }
            };
            if slot.is_some() {
                self.warnings.push(format!("repeated key {:?}; keeping the last", key.trim()));
            }
            *slot = Some(value);
        }
    }

    fn list(&mut self) -> Vec<RawEntry> {
        let mut entries = Vec::new();
        loop {
            self.skip_separators();
            match self.peek() {
                None => {
                    self.warnings.push("output list is missing its closing ']'".into());
                    return entries;
                }
                Some(']') => return entries,
                Some('{') => {
                    self.pos += 1;
                    entries.push(self.entry());
                }
                Some(c) => {
                    self.warnings.push(format!("skipping stray {c:?} inside output list"));
                    self.pos += 1;
                }
            }
        }
    }
}

/// Parses the last `Output list:` in `response` into keyframe choices for a grid of
/// `candidate_count` slots.
///
/// Entries whose keyframe falls outside `1..=candidate_count` (or lacks a number or
/// description) are dropped with a warning. Object indices are renumbered `1..k`
/// in order of appearance unless they already are a permutation of `1..k`.
pub fn parse_output_list(response: &str, candidate_count: usize) -> Result<ParsedOutputList, ParseError> {
    let m = PREFIX.find_iter(response).last().ok_or(ParseError::MissingPrefix)?;
    let mut warnings = Vec::new();
    let after = &response[m.end()..];

    let open = after
        .char_indices()
        .find(|&(_, c)| !(c.is_whitespace() || matches!(c, '*' | '_' | '`' | '"' | '\'')))
        .filter(|&(_, c)| c == '[');
    let Some((open, _)) = open else {
        warnings.push("no '[' after \"Output list:\"; treating as empty".into());
        return Ok(ParsedOutputList {
            choices: Vec::new(),
            warnings,
        });
    };

    let mut scanner = Scanner {
        chars: after[open + 1..].chars().collect(),
        pos: 0,
        warnings: &mut warnings,
    };
    let raw = scanner.list();

    let mut kept: Vec<(Option<usize>, usize, String)> = Vec::new();
    for (n, e) in raw.into_iter().enumerate() {
        let pos = n + 1;
        let Some(keyframe) = e.keyframe.as_deref().and_then(first_integer) else {
            warnings.push(format!("entry {pos}: no keyframe number; dropped"));
            continue;
        };
        if keyframe == 0 || keyframe > candidate_count {
            warnings.push(format!(
                "entry {pos}: keyframe {keyframe} outside 1..={candidate_count}; dropped"
            ));
            continue;
        }
        let description = e.description.map(|d| d.trim().to_string()).unwrap_or_default();
        if description.is_empty() {
            warnings.push(format!("entry {pos}: empty object description; dropped"));
            continue;
        }
        let index = e.object_index.as_deref().and_then(first_integer).filter(|&i| i > 0);
        kept.push((index, keyframe, description));
    }

    let k = kept.len();
    let mut seen = HashSet::new();
    let consistent = kept
        .iter()
        .all(|(i, _, _)| i.is_some_and(|i| i <= k && seen.insert(i)));
    if !consistent {
        warnings.push("object indices not 1..k; renumbered in order of appearance".into());
    }
    let choices = kept
        .into_iter()
        .enumerate()
        .map(|(n, (index, keyframe, description))| KeyframeChoice {
            object_index: if consistent { index.unwrap_or(n + 1) } else { n + 1 },
            candidate_index: keyframe,
            description,
        })
        .collect();
    Ok(ParsedOutputList { choices, warnings })
}

/// Renders choices in the documented single-line shape.
pub fn format_output_list(choices: &[KeyframeChoice]) -> String {
    let entries: Vec<String> = choices
        .iter()
        .map(|c| {
            let desc = c.description.replace('\\', "\\\\").replace('"', "\\\"");
            format!(
                "{{object_index: {}, keyframe: {}, object_description: \"{desc}\"}}",
                c.object_index, c.candidate_index
            )
        })
        .collect();
    format!("Output list: [{}]", entries.join(", "))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Judgment {
    Yes,
    No,
}

/// Parsed online keyframe judgment. `ambiguous` marks a response with no usable
/// Yes/No marker, which is read as No.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinarySelectivity {
    pub value: Judgment,
    pub ambiguous: bool,
}

impl BinarySelectivity {
    pub fn is_selected(&self) -> bool {
        self.value == Judgment::Yes
    }
}

static IS_ANSWER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#"(?i)\bis[\s:*_"'<(\[`]*(yes|no)\b"#).expect("valid regex")
});
static BARE_ANSWER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(yes|no)\b").expect("valid regex"));

pub fn parse_binary_selectivity(response: &str) -> BinarySelectivity {
    let word = IS_ANSWER
        .captures_iter(response)
        .last()
        .or_else(|| BARE_ANSWER.captures_iter(response).last())
        .map(|c| c[1].to_ascii_lowercase());
    match word.as_deref() {
        Some("yes") => BinarySelectivity {
            value: Judgment::Yes,
            ambiguous: false,
        },
        Some(_) => BinarySelectivity {
            value: Judgment::No,
            ambiguous: false,
        },
        None => BinarySelectivity {
            value: Judgment::No,
            ambiguous: true,
        },
    }
}
