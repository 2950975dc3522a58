//! Controlled-vocabulary label sets and the raw-term → class-group mappings,
//! plus lexicon scanning of sentences for term mentions.

use std::collections::BTreeMap;
use std::ops::Range;
use std::path::Path;

use thiserror::Error;

/// Sentinel class for sentences with no color mention.
pub const NO_COLOR: &str = "no-color";
/// Sentinel class for sentences with no work-type mention.
pub const NO_WORK_TYPE: &str = "no_work_type";

/// Raw color term → color group, one row per vocabulary entry.
const COLOR_GROUPS: &[(&str, &str)] = &[
    ("black", "black"),
    ("blue", "blue"),
    ("navy blue", "blue"),
    ("teal", "blue"),
    ("brown", "brown"),
    ("tan", "brown"),
    ("gray", "gray"),
    ("silver", "gray"),
    ("green", "green"),
    ("turquoise", "green"),
    ("gold", "metallic"),
    ("metallic", "metallic"),
    ("yellow", "yellow"),
    ("amber", "yellow"),
    ("coral", "orange"),
    ("orange", "orange"),
    ("brass", "orange"),
    ("fuchsia", "pink"),
    ("pink", "pink"),
    ("lavender", "purple"),
    ("purple", "purple"),
    ("burgundy", "red"),
    ("maroon", "red"),
    ("red", "red"),
    ("rust", "red"),
    ("beige", "white"),
    ("cream", "white"),
    ("white", "white"),
    ("clear", "white"),
];

/// Alternate spellings mapped to their canonical vocabulary term.
const COLOR_SPELLING_VARIANTS: &[(&str, &str)] = &[("grey", "gray")];

/// Inflected surface form → work-type label.
const WORK_TYPE_SURFACE_FORMS: &[(&str, &str)] = &[
    ("accessory", "accessories"),
    ("accessories", "accessories"),
    ("blouse", "blouses"),
    ("blouses", "blouses"),
    ("cape", "cape"),
    ("capes", "cape"),
    ("coat", "coats"),
    ("coats", "coats"),
    ("crinoline", "crinolines"),
    ("crinolines", "crinolines"),
    ("dress", "dress"),
    ("dresses", "dress"),
    ("jacket", "jacket"),
    ("jackets", "jacket"),
    ("kimono", "kimono"),
    ("kimonos", "kimono"),
    ("shirt", "shirt"),
    ("shirts", "shirt"),
    ("shorts", "shorts"),
    ("suit", "suit"),
    ("suits", "suit"),
    ("sweater", "sweater"),
    ("sweaters", "sweater"),
];

#[derive(Debug, Error)]
pub enum VocabularyError {
    #[error("unknown term: {0:?}")]
    UnknownTerm(String),
    #[error("failed to read lexicon file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed lexicon line {line}: expected term<TAB>class, got {content:?}")]
    MalformedLine { line: usize, content: String },
}

/// The two attributes this pipeline classifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum AttributeKind {
    Color,
    WorkType,
}

impl AttributeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            AttributeKind::Color => "color",
            AttributeKind::WorkType => "work_type",
        }
    }
}

impl std::fmt::Display for AttributeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Ordered class labels for one attribute, with a sentinel "no-X" class.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct LabelSet {
    pub attribute: AttributeKind,
    pub classes: Vec<String>,
    pub sentinel_index: usize,
}

impl LabelSet {
    pub fn new(attribute: AttributeKind, classes: Vec<String>, sentinel_index: usize) -> Self {
        assert!(classes.len() >= 2, "label set needs at least two classes");
        assert!(sentinel_index < classes.len());
        let mut dedup = classes.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), classes.len(), "class labels must be unique");
        Self {
            attribute,
            classes,
            sentinel_index,
        }
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn sentinel(&self) -> &str {
        &self.classes[self.sentinel_index]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == label)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.index_of(label).is_some()
    }
}

/// One lexicon hit inside a sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mention {
    pub surface: String,
    pub label: String,
    pub span: Range<usize>,
}

/// Raw color terms mapped to their broader color groups.
#[derive(Debug, Clone)]
pub struct ColorLexicon {
    term_to_group: BTreeMap<String, String>,
    groups: Vec<String>,
    spelling_variants: BTreeMap<String, String>,
    matcher: SurfaceMatcher,
}

impl Default for ColorLexicon {
    fn default() -> Self {
        Self::from_rows(
            COLOR_GROUPS
                .iter()
                .map(|(t, g)| (t.to_string(), g.to_string()))
                .collect(),
            COLOR_SPELLING_VARIANTS
                .iter()
                .map(|(v, c)| (v.to_string(), c.to_string()))
                .collect(),
        )
    }
}

impl ColorLexicon {
    fn from_rows(
        term_to_group: BTreeMap<String, String>,
        spelling_variants: BTreeMap<String, String>,
    ) -> Self {
        let mut groups: Vec<String> = Vec::new();
        for group in term_to_group.values() {
            if !groups.contains(group) {
                groups.push(group.clone());
            }
        }
        groups.sort();
        let mut surface_to_label: Vec<(String, String)> = term_to_group
            .iter()
            .map(|(t, g)| (t.clone(), g.clone()))
            .collect();
        for (variant, canonical) in &spelling_variants {
            if let Some(group) = term_to_group.get(canonical) {
                surface_to_label.push((variant.clone(), group.clone()));
            }
        }
        Self {
            term_to_group,
            groups,
            spelling_variants,
            matcher: SurfaceMatcher::new(surface_to_label),
        }
    }

    /// Loads term<TAB>group rows; spelling variants fall back to the built-in table.
    pub fn from_tsv(path: &Path) -> Result<Self, VocabularyError> {
        let rows = read_tsv(path)?;
        Ok(Self::from_rows(
            rows.into_iter().collect(),
            COLOR_SPELLING_VARIANTS
                .iter()
                .map(|(v, c)| (v.to_string(), c.to_string()))
            .collect(),
        ))
    }

    /// Maps a raw vocabulary term (or registered spelling variant) to its group.
    pub fn map_color_term(&self, term: &str) -> Result<&str, VocabularyError> {
        let needle = term.to_lowercase();
        let canonical = self
            .spelling_variants
            .get(&needle)
            .map(String::as_str)
            .unwrap_or(&needle);
        self.term_to_group
            .get(canonical)
            .map(String::as_str)
            .ok_or_else(|| VocabularyError::UnknownTerm(term.to_string()))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, &str)> {
        self.term_to_group
            .iter()
            .map(|(t, g)| (t.as_str(), g.as_str()))
    }

    pub fn groups(&self) -> &[String] {
        &self.groups
    }

    pub fn label_set(&self) -> LabelSet {
        let mut classes = self.groups.clone();
        classes.push(NO_COLOR.to_string());
        let sentinel = classes.len() - 1;
        LabelSet::new(AttributeKind::Color, classes, sentinel)
    }

    pub fn find_mentions(&self, sentence: &str) -> Vec<Mention> {
        self.matcher.scan(sentence)
    }
}

/// Work-type labels and their inflected surface forms.
#[derive(Debug, Clone)]
pub struct WorkTypeLexicon {
    labels: Vec<String>,
    surface_forms: BTreeMap<String, String>,
    matcher: SurfaceMatcher,
}

impl Default for WorkTypeLexicon {
    fn default() -> Self {
        Self::from_rows(
            WORK_TYPE_SURFACE_FORMS
                .iter()
                .map(|(s, l)| (s.to_string(), l.to_string()))
                .collect(),
        )
    }
}

impl WorkTypeLexicon {
    fn from_rows(surface_forms: BTreeMap<String, String>) -> Self {
        let mut labels: Vec<String> = surface_forms.values().cloned().collect();
        labels.sort();
        labels.dedup();
        let surface_to_label: Vec<(String, String)> = surface_forms
            .iter()
            .map(|(s, l)| (s.clone(), l.clone()))
            .collect();
        Self {
            labels,
            surface_forms,
            matcher: SurfaceMatcher::new(surface_to_label),
        }
    }

    pub fn from_tsv(path: &Path) -> Result<Self, VocabularyError> {
        let rows = read_tsv(path)?;
        Ok(Self::from_rows(rows.into_iter().collect()))
    }

    pub fn map_work_type(&self, surface: &str) -> Result<&str, VocabularyError> {
        self.surface_forms
            .get(&surface.to_lowercase())
            .map(String::as_str)
            .ok_or_else(|| VocabularyError::UnknownTerm(surface.to_string()))
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_set(&self) -> LabelSet {
        let mut classes = self.labels.clone();
        classes.push(NO_WORK_TYPE.to_string());
        let sentinel = classes.len() - 1;
        LabelSet::new(AttributeKind::WorkType, classes, sentinel)
    }

    pub fn find_mentions(&self, sentence: &str) -> Vec<Mention> {
        self.matcher.scan(sentence)
    }
}

/// Both lexicons together; immutable after construction and shareable.
#[derive(Debug, Clone, Default)]
pub struct Lexicons {
    pub color: ColorLexicon,
    pub work_type: WorkTypeLexicon,
}

impl Lexicons {
    /// All non-overlapping mentions, longest-match-first, left-to-right.
    pub fn find_mentions(&self, sentence: &str, attribute: AttributeKind) -> Vec<Mention> {
        match attribute {
            AttributeKind::Color => self.color.find_mentions(sentence),
            AttributeKind::WorkType => self.work_type.find_mentions(sentence),
        }
    }

    pub fn label_set(&self, attribute: AttributeKind) -> LabelSet {
        match attribute {
            AttributeKind::Color => self.color.label_set(),
            AttributeKind::WorkType => self.work_type.label_set(),
        }
    }
}

/// Longest-match-first scanner over a fixed set of surface forms.
#[derive(Debug, Clone)]
struct SurfaceMatcher {
    // sorted by surface length descending, then lexicographically
    entries: Vec<(String, String)>,
}

impl SurfaceMatcher {
    fn new(mut entries: Vec<(String, String)>) -> Self {
        entries.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.0.cmp(&b.0)));
        entries.dedup_by(|a, b| a.0 == b.0);
        Self { entries }
    }

    fn scan(&self, sentence: &str) -> Vec<Mention> {
        let bytes = sentence.as_bytes();
        let mut mentions = Vec::new();
        let mut pos = 0;
        while pos < bytes.len() {
            if !sentence.is_char_boundary(pos) || !is_word_start(bytes, pos) {
                pos += 1;
                continue;
            }
            let mut matched = None;
            for (surface, label) in &self.entries {
                let end = pos + surface.len();
                if end <= bytes.len()
                    && sentence.is_char_boundary(end)
                    && &sentence[pos..end] == surface
                    && is_word_end(bytes, end)
                {
                    matched = Some(Mention {
                        surface: surface.clone(),
                        label: label.clone(),
                        span: pos..end,
                    });
                    break;
                }
            }
            match matched {
                Some(m) => {
                    pos = m.span.end;
                    mentions.push(m);
                }
                None => pos += 1,
            }
        }
        mentions
    }
}

fn is_word_char(b: u8) -> bool {
    b.is_ascii_alphanumeric()
}

fn is_word_start(bytes: &[u8], pos: usize) -> bool {
    is_word_char(bytes[pos]) && (pos == 0 || !is_word_char(bytes[pos - 1]))
}

fn is_word_end(bytes: &[u8], end: usize) -> bool {
    end == bytes.len() || !is_word_char(bytes[end])
}

fn read_tsv(path: &Path) -> Result<Vec<(String, String)>, VocabularyError> {
    let content = std::fs::read_to_string(path).map_err(|source| VocabularyError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut rows = Vec::new();
    for (idx, line) in content.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (term, class) = line.split_once('\t').ok_or(VocabularyError::MalformedLine {
            line: idx + 1,
            content: line.to_string(),
        })?;
        rows.push((term.trim().to_lowercase(), class.trim().to_lowercase()));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_mappings_hold() {
        let lex = ColorLexicon::default();
        assert_eq!(lex.map_color_term("navy blue").unwrap(), "blue");
        assert_eq!(lex.map_color_term("black").unwrap(), "black");
        assert_eq!(lex.map_color_term("rust").unwrap(), "red");
        assert_eq!(lex.map_color_term("grey").unwrap(), "gray");
        assert!(matches!(
            lex.map_color_term("magenta"),
            Err(VocabularyError::UnknownTerm(_))
        ));
    }

    #[test]
    fn group_set_is_exact() {
        let lex = ColorLexicon::default();
        let expected = [
            "black", "blue", "brown", "gray", "green", "metallic", "orange", "pink", "purple",
            "red", "white", "yellow",
        ];
        assert_eq!(lex.groups(), &expected);
    }

    #[test]
    fn mention_scan_prefers_longest_match() {
        let lex = Lexicons::default();
        let mentions = lex.find_mentions("navy blue coat", AttributeKind::Color);
        assert_eq!(mentions.len(), 1);
        assert_eq!(mentions[0].surface, "navy blue");
        assert_eq!(mentions[0].label, "blue");
    }

    #[test]
    fn mention_scan_on_paper_example() {
        let lex = Lexicons::default();
        let mentions = lex.find_mentions(
            "short brown, grey, beige mink fur cape.",
            AttributeKind::Color,
        );
        let groups: Vec<&str> = mentions.iter().map(|m| m.label.as_str()).collect();
        assert_eq!(groups, ["brown", "gray", "white"]);
    }

    #[test]
    fn no_mentions_in_neutral_text() {
        let lex = Lexicons::default();
        assert!(lex
            .find_mentions("shirt is a tunic style", AttributeKind::Color)
            .is_empty());
    }

    #[test]
    fn mentions_respect_word_boundaries() {
        let lex = Lexicons::default();
        // "tangerine" must not match "tan"
        assert!(lex
            .find_mentions("tangerine sorbet", AttributeKind::Color)
            .is_empty());
    }

    #[test]
    fn spans_index_the_input() {
        let lex = Lexicons::default();
        let text = "a red dress with white lace";
        for m in lex.find_mentions(text, AttributeKind::Color) {
            assert_eq!(&text[m.span.clone()], m.surface);
        }
    }

    #[test]
    fn work_type_surface_forms_resolve() {
        let lex = WorkTypeLexicon::default();
        assert_eq!(lex.map_work_type("dresses").unwrap(), "dress");
        assert_eq!(lex.map_work_type("coat").unwrap(), "coats");
        assert_eq!(lex.map_work_type("blouse").unwrap(), "blouses");
    }

    #[test]
    fn label_sets_have_sentinels() {
        let lex = Lexicons::default();
        let color = lex.label_set(AttributeKind::Color);
        assert_eq!(color.sentinel(), NO_COLOR);
        assert_eq!(color.len(), 13);
        let wt = lex.label_set(AttributeKind::WorkType);
        assert_eq!(wt.sentinel(), NO_WORK_TYPE);
        assert!(wt.contains("crinolines"));
    }
}
