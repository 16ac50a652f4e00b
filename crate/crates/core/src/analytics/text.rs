use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

const STOPWORDS_EN: &str = include_str!("../../data/stopwords_en.txt");

/// Canonical form of a suggestion that proposes no change.
pub const NO_SUGGESTION: &str = "N/A";

const NO_OP_SUGGESTIONS: [&str; 14] = [
    "n/a",
    "na",
    "none",
    "nothing",
    "not applicable",
    "no suggestions",
    "no suggestion",
    "no need for improvement",
    "no improvement needed",
    "no improvements needed",
    "no changes needed",
    "no change needed",
    "the post is already compliant",
    "the post is compliant",
];

/// Maps a word to its dictionary form (or an approximation of it).
pub trait Lemmatizer: Send + Sync {
    fn name(&self) -> &str;
    fn lemma(&self, word: &str) -> String;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PassThrough;

impl Lemmatizer for PassThrough {
    fn name(&self) -> &str {
        "pass-through"
    }

    fn lemma(&self, word: &str) -> String {
        word.to_string()
    }
}

/// Strips one common inflectional suffix, keeping at least three
/// characters of stem.
#[derive(Debug, Clone, Copy, Default)]
pub struct SuffixStemmer;

impl Lemmatizer for SuffixStemmer {
    fn name(&self) -> &str {
        "suffix-stemmer"
    }

    fn lemma(&self, word: &str) -> String {
        let n = word.chars().count();
        if n <= 3 || !word.is_ascii() {
            return word.to_string();
        }
        let stem = |suffix: &str| word.strip_suffix(suffix).filter(|s| s.len() >= 3);
        if let Some(s) = stem("ies") {
            return format!("{s}y");
        }
        if let Some(s) = stem("sses") {
            return format!("{s}ss");
        }
        for suffix in ["ing", "ed", "ly"] {
            if let Some(s) = stem(suffix) {
                return s.to_string();
            }
        }
        if word.ends_with('s') && !["ss", "us", "is"].iter().any(|e| word.ends_with(e)) {
            if let Some(s) = stem("s") {
                return s.to_string();
            }
        }
        word.to_string()
    }
}

/// Lowercasing, punctuation removal, stop-word removal and lemmatization.
pub struct Normalizer<L = SuffixStemmer> {
    lemmatizer: L,
    stopwords: BTreeSet<&'static str>,
}

impl Default for Normalizer<SuffixStemmer> {
    fn default() -> Self {
        Self::new(SuffixStemmer)
    }
}

impl<L: Lemmatizer> Normalizer<L> {
    pub fn new(lemmatizer: L) -> Self {
        let stopwords = STOPWORDS_EN
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        Self { lemmatizer, stopwords }
    }

    /// Identifies the pipeline in reports.
    pub fn name(&self) -> String {
        format!("lowercase+punctuation+stopwords-en{}+{}", self.stopwords.len(), self.lemmatizer.name())
    }

    pub fn is_stopword(&self, word: &str) -> bool {
        self.stopwords.contains(word)
    }

    /// Content words before lemmatization, in text order.
    pub fn terms(&self, text: &str) -> Vec<String> {
        let mut cleaned = String::with_capacity(text.len());
        for c in text.chars() {
            if c == '\'' || c == '\u{2019}' {
                continue;
            }
            if c.is_alphanumeric() {
                cleaned.extend(c.to_lowercase());
            } else {
                cleaned.push(' ');
            }
        }
        cleaned
            .split_whitespace()
            .filter(|w| !self.is_stopword(w))
            .map(String::from)
            .collect()
    }

    pub fn tokens(&self, text: &str) -> Vec<String> {
        self.terms(text)
            .iter()
            .map(|w| self.lemmatizer.lemma(w))
            .filter(|w| !w.is_empty())
            .collect()
    }

    pub fn word_set(&self, text: &str) -> BTreeSet<String> {
        self.tokens(text).into_iter().collect()
    }
}

/// `|A ∩ B| / min(|A|, |B|)`, or 0 when either set is empty.
pub fn set_overlap<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let smaller = a.len().min(b.len());
    if smaller == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / smaller as f64
}

pub fn word_overlap<L: Lemmatizer>(t1: &str, t2: &str, normalizer: &Normalizer<L>) -> f64 {
    set_overlap(&normalizer.word_set(t1), &normalizer.word_set(t2))
}

/// Collapses no-op suggestions to [`NO_SUGGESTION`]; anything else is
/// returned trimmed.
pub fn normalize_suggestion(text: &str) -> String {
    let trimmed = text.trim();
    let key = trimmed
        .trim_end_matches(['.', '!', ','])
        .trim()
        .to_lowercase();
    let key: String = key.split_whitespace().collect::<Vec<_>>().join(" ");
    if key.is_empty() || NO_OP_SUGGESTIONS.contains(&key.as_str()) {
        String::from(NO_SUGGESTION)
    } else {
        trimmed.to_string()
    }
}

/// Length of a text for the laziness probes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthUnit {
    Words,
    Chars,
}

impl LengthUnit {
    pub fn measure(self, text: &str) -> usize {
        match self {
            LengthUnit::Words => text.split_whitespace().count(),
            LengthUnit::Chars => text.chars().count(),
        }
    }
}

/// Suggestion length with no-op suggestions counted as empty.
pub fn suggestion_length(text: &str, unit: LengthUnit) -> usize {
    let normalized = normalize_suggestion(text);
    if normalized == NO_SUGGESTION {
        0
    } else {
        unit.measure(&normalized)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn stopword_list_size() {
        let n = Normalizer::default();
        assert!((170..=190).contains(&n.stopwords.len()));
        assert!(n.is_stopword("dont") && n.is_stopword("the"));
        assert!(n.name().ends_with("suffix-stemmer"));
    }

    #[test]
    fn pipeline_steps() {
        let n = Normalizer::default();
        assert_eq!(n.tokens("The Posts aren't violating, it's FINE!"), vec!["post", "violat", "fine"]);
        assert_eq!(Normalizer::new(PassThrough).tokens("Posts, posts"), vec!["posts", "posts"]);
    }

    #[test]
    fn stemmer_rules() {
        let s = SuffixStemmer;
        assert_eq!(s.lemma("policies"), "policy");
        assert_eq!(s.lemma("classes"), "class");
        assert_eq!(s.lemma("rules"), "rule");
        assert_eq!(s.lemma("status"), "status");
        assert_eq!(s.lemma("was"), "was");
        assert_eq!(s.lemma("bed"), "bed");
    }

    #[test]
    fn overlap_examples() {
        let p = Normalizer::new(PassThrough);
        assert_eq!(word_overlap("alpha beta", "alpha beta", &p), 1.0);
        assert_eq!(word_overlap("alpha beta", "gamma delta", &p), 0.0);
        assert!((word_overlap("aa bb cc", "bb cc dd ee", &p) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(word_overlap("the of", "alpha", &p), 0.0);
    }

    #[test]
    fn no_op_suggestions_collapse() {
        for s in ["N/A", "n/a.", "No need for improvement", "The post is already compliant.", "  ", "none"] {
            assert_eq!(normalize_suggestion(s), NO_SUGGESTION, "{s}");
        }
        assert_eq!(normalize_suggestion(" Add a content warning. "), "Add a content warning.");
        assert_eq!(suggestion_length("N/A", LengthUnit::Words), 0);
        assert_eq!(suggestion_length("add a CW", LengthUnit::Chars), 8);
    }
}
