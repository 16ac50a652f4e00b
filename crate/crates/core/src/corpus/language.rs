use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub const UNKNOWN_LANGUAGE: &str = "unknown";

/// Anything that maps text to an ISO 639-1 code with a confidence, or
/// abstains.
pub trait LanguageDetector: Send + Sync {
    fn name(&self) -> &str;
    fn detect(&self, text: &str) -> Option<(String, f64)>;
}

impl<T: LanguageDetector + ?Sized> LanguageDetector for Box<T> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn detect(&self, text: &str) -> Option<(String, f64)> {
        (**self).detect(text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageVerdict {
    pub code: String,
    pub confidence: f64,
    /// `None` in the code slot marks an abstention.
    pub detector_votes: Vec<(String, Option<String>)>,
}

impl LanguageVerdict {
    pub fn is(&self, code: &str) -> bool {
        self.code == code
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LanguageError {
    #[error("no language detectors are registered")]
    NoDetectors,
}

/// Consensus over all detectors: the code every non-abstaining detector
/// agrees on, otherwise `"unknown"`. All abstaining also yields `"unknown"`.
pub fn detect_language<D: LanguageDetector>(
    text: &str,
    detectors: &[D],
) -> Result<LanguageVerdict, LanguageError> {
    if detectors.is_empty() {
        return Err(LanguageError::NoDetectors);
    }
    let mut votes = Vec::with_capacity(detectors.len());
    let mut agreed: Option<String> = None;
    let mut disagreement = false;
    let mut confidence_sum = 0.0;
    let mut voters = 0usize;
    for detector in detectors {
        let vote = detector.detect(text).map(|(code, conf)| {
            (normalize_code(&code), conf.clamp(0.0, 1.0))
        });
        if let Some((code, conf)) = &vote {
            voters += 1;
            confidence_sum += conf;
            match &agreed {
                None => agreed = Some(code.clone()),
                Some(a) if a != code => disagreement = true,
                _ => {}
            }
        }
        votes.push((detector.name().to_string(), vote.map(|(c, _)| c)));
    }
    let (code, confidence) = match agreed {
        Some(code) if !disagreement => (code, confidence_sum / voters as f64),
        _ => (UNKNOWN_LANGUAGE.to_string(), 0.0),
    };
    Ok(LanguageVerdict {
        code,
        confidence,
        detector_votes: votes,
    })
}

/// Lowercases and drops region subtags (`en-US` → `en`).
pub fn normalize_code(code: &str) -> String {
    code.split(['-', '_'])
        .next()
        .unwrap_or("")
        .trim()
        .to_ascii_lowercase()
}

struct Profile {
    code: &'static str,
    words: &'static [&'static str],
}

const PROFILES: &[Profile] = &[
    Profile {
        code: "en",
        words: &[
            "the", "and", "is", "are", "was", "were", "of", "to", "in", "that", "it", "with", "for",
            "this", "you", "not", "be", "have", "has", "on", "at", "by", "from", "they", "we",
            "he", "she", "but", "or", "an", "will", "would", "can", "all", "any", "our", "your",
            "their", "there", "what", "which", "who", "been", "do", "does", "over", "about",
        ],
    },
    Profile {
        code: "de",
        words: &[
            "der", "die", "das", "und", "ist", "nicht", "ein", "eine", "ich", "sie", "wir", "mit",
            "auf", "für", "den", "dem", "des", "von", "zu", "sich", "auch", "sind", "wird", "oder",
            "aber", "bitte", "keine", "kein", "werden", "hier", "uns", "unsere", "diese",
        ],
    },
    Profile {
        code: "fr",
        words: &[
            "le", "la", "les", "et", "est", "une", "des", "du", "que", "qui", "pas", "pour", "dans",
            "sur", "avec", "nous", "vous", "ce", "cette", "sont", "être", "au", "aux", "ne",
            "il", "elle", "ils", "mais", "ou", "merci",
        ],
    },
    Profile {
        code: "es",
        words: &[
            "el", "los", "las", "y", "es", "una", "del", "que", "por", "para", "con", "como",
            "pero", "más", "muy", "está", "son", "sus", "lo", "al", "nosotros", "este", "esta",
            "gracias", "también",
        ],
    },
    Profile {
        code: "it",
        words: &[
            "il", "lo", "gli", "e", "è", "di", "della", "che", "non", "per", "con", "sono", "questo",
            "questa", "anche", "ma", "nel", "alla", "delle", "grazie", "più",
        ],
    },
    Profile {
        code: "pt",
        words: &[
            "o", "os", "as", "e", "é", "um", "uma", "do", "da", "dos", "das", "que", "não", "para",
            "com", "como", "mas", "mais", "está", "são", "obrigado", "também", "você",
        ],
    },
    Profile {
        code: "nl",
        words: &[
            "de", "het", "een", "en", "is", "niet", "van", "dat", "op", "te", "zijn", "met", "voor",
            "wij", "ons", "onze", "ook", "maar", "geen", "deze", "wordt", "bij",
        ],
    },
];

/// Function-word frequency detector over a handful of European languages.
/// Abstains when no function word is seen or the best two languages tie.
#[derive(Debug, Clone, Copy, Default)]
pub struct StopwordDetector;

impl LanguageDetector for StopwordDetector {
    fn name(&self) -> &str {
        "stopword-profile"
    }

    fn detect(&self, text: &str) -> Option<(String, f64)> {
        let tokens: Vec<String> = text
            .split(|c: char| !c.is_alphanumeric() && c != '\'')
            .filter(|t| !t.is_empty())
            .map(|t| t.to_lowercase())
            .collect();
        if tokens.is_empty() {
            return None;
        }
        let mut scores: Vec<(&'static str, usize)> = PROFILES
            .iter()
            .map(|p| {
                let hits = tokens.iter().filter(|t| p.words.contains(&t.as_str())).count();
                (p.code, hits)
            })
            .collect();
        scores.sort_by_key(|s| core::cmp::Reverse(s.1));
        let (best, hits) = scores[0];
        if hits == 0 || scores[1].1 == hits {
            return None;
        }
        let total: usize = scores.iter().map(|s| s.1).sum();
        Some((best.to_string(), hits as f64 / total as f64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    struct Fixed(&'static str, Option<&'static str>);

    impl LanguageDetector for Fixed {
        fn name(&self) -> &str {
            self.0
        }
        fn detect(&self, _: &str) -> Option<(String, f64)> {
            self.1.map(|c| (c.to_string(), 0.9))
        }
    }

    #[test]
    fn english_pangram_is_english() {
        let v = detect_language("the quick brown fox jumps over the lazy dog", &[StopwordDetector]).unwrap();
        assert_eq!(v.code, "en");
        assert!(v.confidence > 0.5);
    }

    #[test]
    fn disagreement_is_unknown() {
        let v = detect_language("x", &[Fixed("a", Some("en")), Fixed("b", Some("de"))]).unwrap();
        assert_eq!(v.code, UNKNOWN_LANGUAGE);
        assert_eq!(
            v.detector_votes,
            vec![("a".to_string(), Some("en".to_string())), ("b".to_string(), Some("de".to_string()))]
        );
    }

    #[test]
    fn empty_text_is_unknown() {
        let v = detect_language("", &[StopwordDetector]).unwrap();
        assert_eq!(v.code, UNKNOWN_LANGUAGE);
    }

    #[test]
    fn all_abstaining_is_unknown_but_partial_abstention_is_not() {
        let v = detect_language("x", &[Fixed("a", None), Fixed("b", None)]).unwrap();
        assert_eq!(v.code, UNKNOWN_LANGUAGE);
        let v = detect_language("x", &[Fixed("a", None), Fixed("b", Some("en-GB"))]).unwrap();
        assert_eq!(v.code, "en");
    }

    #[test]
    fn no_detectors_is_a_configuration_error() {
        let none: [StopwordDetector; 0] = [];
        assert_eq!(detect_language("x", &none), Err(LanguageError::NoDetectors));
    }

    #[test]
    fn german_description() {
        let v = StopwordDetector
            .detect("Willkommen auf unserer Instanz, hier sind wir eine offene Gemeinschaft für alle, die sich für Technik interessieren.")
            .unwrap();
        assert_eq!(v.0, "de");
    }
}
