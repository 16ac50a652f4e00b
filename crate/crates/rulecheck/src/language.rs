use rulecheck_core::corpus::{LanguageDetector, StopwordDetector};

/// Trigram detector from the `whatlang` crate. Abstains on unreliable
/// guesses.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhatlangDetector;

fn iso639_1(code3: &str) -> Option<&'static str> {
    Some(match code3 {
        "eng" => "en",
        "deu" => "de",
        "fra" => "fr",
        "spa" => "es",
        "ita" => "it",
        "por" => "pt",
        "nld" => "nl",
        "jpn" => "ja",
        "cmn" => "zh",
        "kor" => "ko",
        "rus" => "ru",
        "ukr" => "uk",
        "pol" => "pl",
        "swe" => "sv",
        "dan" => "da",
        "fin" => "fi",
        "tur" => "tr",
        "ara" => "ar",
        "ces" => "cs",
        "ell" => "el",
        "heb" => "he",
        "hin" => "hi",
        "hun" => "hu",
        "ind" => "id",
        "ron" => "ro",
        "tha" => "th",
        "vie" => "vi",
        "cat" => "ca",
        "epo" => "eo",
        _ => return None,
    })
}

impl LanguageDetector for WhatlangDetector {
    fn name(&self) -> &str {
        "whatlang"
    }

    fn detect(&self, text: &str) -> Option<(String, f64)> {
        let info = whatlang::detect(text)?;
        if !info.is_reliable() {
            return None;
        }
        let code3 = info.lang().code();
        let code = iso639_1(code3).map(String::from).unwrap_or_else(|| code3.to_string());
        Some((code, info.confidence()))
    }
}

/// The two detectors whose agreement decides a text's language.
pub fn default_detectors() -> Vec<Box<dyn LanguageDetector>> {
    vec![Box::new(StopwordDetector), Box::new(WhatlangDetector)]
}
