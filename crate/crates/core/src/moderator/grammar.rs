//! The reply grammar:
//!
//! ```text
//! Score: <d>: <label>
//! Justification: <text>
//! Suggestions: <text>
//! ```
//!
//! Keys are case-insensitive and surrounding whitespace is ignored. Text
//! before the first key is ignored; justification and suggestions may wrap
//! onto following lines. The score digit and label must agree.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use super::{LikertScore, LIKERT_LABELS};

/// Guided-decoding pattern: the score line is a six-way choice over the
/// canonical labels, the two text fields are single free-form lines.
pub const SCORE_CHOICE_REGEX: &str = "Score: (0: Totally Non-Compliant|1: Non-Compliant|2: Somehow Non-Compliant|3: Reasonably Compliant|4: Compliant|5: Totally Compliant)\\nJustification: [^\\n]+\\nSuggestions: [^\\n]+";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedReply {
    pub score: LikertScore,
    pub justification: String,
    pub suggestion: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("missing {0} line")]
    MissingField(&'static str),
    #[error("{0} appears more than once")]
    DuplicateField(&'static str),
    #[error("invalid score line {0:?}")]
    InvalidScore(String),
    #[error("justification is empty")]
    EmptyJustification,
    #[error("unexpected text after the score line: {0:?}")]
    UnexpectedText(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Score,
    Justification,
    Suggestions,
}

impl Field {
    fn name(self) -> &'static str {
        match self {
            Field::Score => "Score",
            Field::Justification => "Justification",
            Field::Suggestions => "Suggestions",
        }
    }
}

fn split_key(line: &str) -> Option<(Field, &str)> {
    const KEYS: [(&str, Field); 4] = [
        ("justification", Field::Justification),
        ("suggestions", Field::Suggestions),
        ("suggestion", Field::Suggestions),
        ("score", Field::Score),
    ];
    for (key, field) in KEYS {
        if line.len() >= key.len() && line.is_char_boundary(key.len()) && line[..key.len()].eq_ignore_ascii_case(key) {
            if let Some(value) = line[key.len()..].trim_start().strip_prefix(':') {
                return Some((field, value.trim()));
            }
        }
    }
    None
}

fn normalize_label(s: &str) -> String {
    let s = s.trim().trim_matches('*').trim().trim_end_matches('.').trim();
    let mut out = String::with_capacity(s.len());
    for (i, word) in s.split_whitespace().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{}", word.to_lowercase());
    }
    out
}

fn parse_score(value: &str) -> Result<LikertScore, ParseError> {
    let invalid = || ParseError::InvalidScore(value.to_string());
    let value_trimmed = value.trim().trim_matches('*').trim();
    let digits_end = value_trimmed
        .find(|c: char| !c.is_ascii_digit())
        .unwrap_or(value_trimmed.len());
    if digits_end == 0 || digits_end > 3 {
        return Err(invalid());
    }
    let number: u8 = value_trimmed[..digits_end].parse().map_err(|_| invalid())?;
    let score = LikertScore::new(number).map_err(|_| invalid())?;
    let label = value_trimmed[digits_end..]
        .trim_start()
        .strip_prefix(':')
        .ok_or_else(invalid)?;
    if normalize_label(label) != normalize_label(LIKERT_LABELS[number as usize]) {
        return Err(invalid());
    }
    Ok(score)
}

pub fn parse_reply(reply: &str) -> Result<ParsedReply, ParseError> {
    let mut values: [Option<String>; 3] = [None, None, None];
    let mut current: Option<Field> = None;
    for raw in reply.lines() {
        let line = raw.trim();
        if let Some((field, value)) = split_key(line) {
            let slot = &mut values[field as usize];
            if slot.is_some() {
                return Err(ParseError::DuplicateField(field.name()));
            }
            *slot = Some(value.to_string());
            current = Some(field);
            continue;
        }
        if line.is_empty() {
            continue;
        }
        match current {
            None => {}
            Some(Field::Score) => return Err(ParseError::UnexpectedText(line.to_string())),
            Some(field) => {
                let slot = values[field as usize].as_mut().expect("current field is set");
                if !slot.is_empty() {
                    slot.push(' ');
                }
                slot.push_str(line);
            }
        }
    }
    let [score, justification, suggestion] = values;
    let score = parse_score(&score.ok_or(ParseError::MissingField("Score"))?)?;
    let justification = justification.ok_or(ParseError::MissingField("Justification"))?;
    if justification.trim().is_empty() {
        return Err(ParseError::EmptyJustification);
    }
    let suggestion = suggestion.ok_or(ParseError::MissingField("Suggestions"))?;
    Ok(ParsedReply {
        score,
        justification,
        suggestion,
    })
}

/// The six accepted score lines, for backends that take a plain choice list.
pub fn score_choices() -> Vec<String> {
    LikertScore::all().map(|s| alloc::format!("Score: {s}")).collect()
}
