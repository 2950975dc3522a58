//! Text normalization, rule-based sentence tokenization, and sentence-level
//! re-annotation against the description's gold labels.

use serde::{Deserialize, Serialize};

use crate::vocabulary::{AttributeKind, Lexicons, NO_COLOR, NO_WORK_TYPE};

/// One (possibly augmented) sentence with derived labels and provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceSample {
    pub description_id: String,
    pub sentence_index: usize,
    /// 0 = original, >0 = augmented variant.
    pub variant_index: usize,
    pub text: String,
    pub color_label: String,
    pub work_type_label: String,
}

impl SentenceSample {
    pub fn label(&self, attribute: AttributeKind) -> &str {
        match attribute {
            AttributeKind::Color => &self.color_label,
            AttributeKind::WorkType => &self.work_type_label,
        }
    }
}

/// Abbreviations that do not end a sentence.
const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "st", "no", "vs", "etc", "approx", "ca",
];

/// Lowercases, collapses whitespace, strips accession-number-like tokens
/// (digit groups joined by periods, e.g. 65.3.35).
pub fn normalize(text: &str) -> String {
    let lowered = text.to_lowercase();
    let stripped = strip_accession_numbers(&lowered);
    stripped.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn strip_accession_numbers(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for token in text.split_inclusive(char::is_whitespace) {
        let (word, trailing_ws) = match token.char_indices().last() {
            Some((i, c)) if c.is_whitespace() => (&token[..i], &token[i..]),
            _ => (token, ""),
        };
        if is_accession_like(word) {
            out.push_str(trailing_ws);
        } else {
            out.push_str(word);
            out.push_str(trailing_ws);
        }
    }
    out
}

// digit group ( "." digit group ){2,} with optional trailing period
fn is_accession_like(word: &str) -> bool {
    let w = word.strip_suffix('.').unwrap_or(word);
    let parts: Vec<&str> = w.split('.').collect();
    parts.len() >= 3
        && parts
            .iter()
            .all(|p| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit()))
}

/// Splits normalized text into sentences on `.` `!` `?` followed by
/// whitespace or end of input, with a short abbreviation guard list.
pub fn tokenize_sentences(text: &str) -> Vec<String> {
    let mut sentences = Vec::new();
    let bytes = text.as_bytes();
    let mut start = 0;
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        if (b == b'.' || b == b'!' || b == b'?')
            && (i + 1 == bytes.len() || bytes[i + 1].is_ascii_whitespace())
            && !(b == b'.' && ends_with_abbreviation(&text[start..i]))
        {
            push_sentence(&mut sentences, &text[start..i]);
            start = i + 1;
        }
        i += 1;
    }
    push_sentence(&mut sentences, &text[start..]);
    sentences
}

fn push_sentence(sentences: &mut Vec<String>, raw: &str) {
    let trimmed = raw.trim();
    if !trimmed.is_empty() {
        sentences.push(trimmed.to_string());
    }
}

fn ends_with_abbreviation(prefix: &str) -> bool {
    let last_word = prefix.rsplit(|c: char| !c.is_ascii_alphanumeric()).next();
    match last_word {
        Some(w) if !w.is_empty() => ABBREVIATIONS.contains(&w),
        _ => false,
    }
}

/// Sentence-level labels: the gold label if any term of the gold group/class
/// appears in the sentence, the sentinel otherwise.
pub fn annotate_sentence(
    lexicons: &Lexicons,
    sentence: &str,
    gold_color_group: &str,
    gold_work_type: &str,
) -> (String, String) {
    let color = if gold_color_group != NO_COLOR
        && lexicons
            .find_mentions(sentence, AttributeKind::Color)
            .iter()
            .any(|m| m.label == gold_color_group)
    {
        gold_color_group.to_string()
    } else {
        NO_COLOR.to_string()
    };
    let work_type = if gold_work_type != NO_WORK_TYPE
        && lexicons
            .find_mentions(sentence, AttributeKind::WorkType)
            .iter()
            .any(|m| m.label == gold_work_type)
    {
        gold_work_type.to_string()
    } else {
        NO_WORK_TYPE.to_string()
    };
    (color, work_type)
}
