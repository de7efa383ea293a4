//! Answer extraction from normalized response text.
//!
//! Rules are applied in order and the first that yields a letter wins:
//!
//! 1. Constrained condition: the whole trimmed response is a single letter,
//!    optionally parenthesized, emphasized, or period-terminated.
//! 2. The last final-answer marker (`Answer:`, `Final Answer:`, any case,
//!    markdown emphasis allowed) that is followed by a letter.
//! 3. Exactly one distinct letter in standalone form on the final
//!    non-empty line.
//! 4. The first non-empty line is a lone letter (answer-first replies
//!    followed by an explanation).
//!
//! Anything else is [`Extraction::Ambiguous`], which every statistic treats
//! as incorrect. The thinking trace is never consulted.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::corpus::Letter;
use crate::prompting::Condition;

/// Result of parsing one response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Extraction {
    Letter(Letter),
    Ambiguous,
}

impl Extraction {
    pub fn letter(self) -> Option<Letter> {
        match self {
            Extraction::Letter(l) => Some(l),
            Extraction::Ambiguous => None,
        }
    }
}

impl fmt::Display for Extraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extraction::Letter(l) => write!(f, "{l}"),
            Extraction::Ambiguous => f.write_str("AMBIGUOUS"),
        }
    }
}

impl FromStr for Extraction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "AMBIGUOUS" {
            return Ok(Extraction::Ambiguous);
        }
        s.parse::<Letter>()
            .map(Extraction::Letter)
            .map_err(|_| format!("expected A-E or AMBIGUOUS, got `{s}`"))
    }
}

impl Serialize for Extraction {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Extraction {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn extract_answer(response: &str, condition: Condition) -> Extraction {
    let trimmed = response.trim();
    if trimmed.is_empty() {
        return Extraction::Ambiguous;
    }
    if condition == Condition::C {
        if let Some(l) = lone_letter(trimmed) {
            return Extraction::Letter(l);
        }
    }
    if let Some(l) = last_marked_letter(trimmed) {
        return Extraction::Letter(l);
    }
    let mut lines = trimmed.lines().map(str::trim).filter(|l| !l.is_empty());
    let first = lines.next();
    let last = trimmed.lines().map(str::trim).rfind(|l| !l.is_empty());
    if let Some(l) = last.and_then(unique_standalone_letter) {
        return Extraction::Letter(l);
    }
    if let Some(l) = first.and_then(lone_letter) {
        return Extraction::Letter(l);
    }
    Extraction::Ambiguous
}

fn strip_emphasis(s: &str) -> &str {
    let mut s = s.trim();
    loop {
        let next = s
            .strip_prefix("**")
            .and_then(|t| t.strip_suffix("**"))
            .or_else(|| s.strip_prefix('*').and_then(|t| t.strip_suffix('*')))
            .or_else(|| s.strip_prefix('_').and_then(|t| t.strip_suffix('_')))
            .map(str::trim);
        match next {
            Some(t) if t.len() < s.len() => s = t,
            _ => return s,
        }
    }
}

/// `X`, `(X)`, `[X]`, `X.`, `(X).`, with optional emphasis around any of them.
fn lone_letter(s: &str) -> Option<Letter> {
    let mut s = strip_emphasis(s);
    if let Some(t) = s.strip_suffix('.') {
        s = strip_emphasis(t);
    }
    if let Some(t) = s
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .or_else(|| s.strip_prefix('[').and_then(|t| t.strip_suffix(']')))
    {
        s = strip_emphasis(t);
    }
    let mut chars = s.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => Letter::from_char(c),
        _ => None,
    }
}

const MARKER: &str = "answer";

/// Letter following the last `answer:` marker that is followed by one.
fn last_marked_letter(text: &str) -> Option<Letter> {
    let lower = text.to_ascii_lowercase();
    let bytes = text.as_bytes();
    let mut found = None;
    let mut from = 0;
    while let Some(rel) = lower[from..].find(MARKER) {
        let start = from + rel;
        from = start + MARKER.len();
        // whole word only
        if start > 0 && bytes[start - 1].is_ascii_alphanumeric() {
            continue;
        }
        let mut i = from;
        while i < bytes.len() && matches!(bytes[i], b'*' | b'_') {
            i += 1;
        }
        if i >= bytes.len() || bytes[i] != b':' {
            continue;
        }
        if let Some(l) = letter_after_marker(&bytes[i + 1..]) {
            found = Some(l);
        }
    }
    found
}

fn letter_after_marker(rest: &[u8]) -> Option<Letter> {
    let mut i = 0;
    while i < rest.len()
        && (rest[i] == b' ' || rest[i] == b'\t' || rest[i] == b'*' || rest[i] == b'_')
    {
        i += 1;
    }
    let open = i < rest.len() && (rest[i] == b'(' || rest[i] == b'[');
    if open {
        i += 1;
    }
    let letter = Letter::from_char(*rest.get(i)? as char)?;
    let next = rest.get(i + 1).copied();
    let closes = match next {
        None => !open,
        Some(b')') | Some(b']') => true,
        Some(c) => !open && !c.is_ascii_alphanumeric() && c != b'\'',
    };
    closes.then_some(letter)
}

/// The single distinct letter appearing in standalone form, if exactly one does.
fn unique_standalone_letter(line: &str) -> Option<Letter> {
    let chars: Vec<char> = line.chars().collect();
    let mut seen: Option<Letter> = None;
    for (i, &c) in chars.iter().enumerate() {
        let Some(letter) = Letter::from_char(c) else {
            continue;
        };
        let prev = if i > 0 { Some(chars[i - 1]) } else { None };
        let next = chars.get(i + 1).copied();
        if prev.is_some_and(|p| p.is_alphanumeric() || p == '\'' || p == '.') {
            continue;
        }
        if next.is_some_and(|n| n.is_alphanumeric() || n == '\'' || n == '-') {
            continue;
        }
        // abbreviations such as "E.g." or "A.M."
        if next == Some('.') && chars.get(i + 2).is_some_and(|c| c.is_alphanumeric()) {
            continue;
        }
        // the article "A" starting a phrase
        if letter == Letter::A
            && next == Some(' ')
            && chars.get(i + 2).is_some_and(|c| c.is_lowercase())
        {
            continue;
        }
        match seen {
            None => seen = Some(letter),
            Some(s) if s == letter => {}
            Some(_) => return None,
        }
    }
    seen
}
