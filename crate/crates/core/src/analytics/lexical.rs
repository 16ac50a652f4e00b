use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::text::{Lemmatizer, Normalizer};
use crate::ingest::Rule;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopWord {
    pub word: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexicalStats {
    /// Modal token of each instance's rules; ties go to the
    /// alphabetically first word.
    pub per_instance: BTreeMap<String, TopWord>,
    /// Corpus-wide counts, most frequent first.
    pub global: Vec<(String, usize)>,
    /// For each word that is some instance's top word, the fraction of
    /// instances with rules where it is.
    pub top_word_share: Vec<(String, f64)>,
}

fn ranked(counts: BTreeMap<String, usize>) -> Vec<(String, usize)> {
    let mut v: Vec<(String, usize)> = counts.into_iter().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v
}

/// Token frequencies over rule texts after lowercasing, punctuation and
/// stop-word removal. No lemmatization is applied.
pub fn rule_lexical_stats<L: Lemmatizer>(
    rules_by_instance: &BTreeMap<String, Vec<Rule>>,
    normalizer: &Normalizer<L>,
) -> LexicalStats {
    let mut global: BTreeMap<String, usize> = BTreeMap::new();
    let mut per_instance = BTreeMap::new();
    for (instance, rules) in rules_by_instance {
        let mut local: BTreeMap<String, usize> = BTreeMap::new();
        for rule in rules {
            for term in normalizer.terms(&rule.text) {
                *local.entry(term.clone()).or_default() += 1;
                *global.entry(term).or_default() += 1;
            }
        }
        if let Some((word, count)) = ranked(local).into_iter().next() {
            per_instance.insert(instance.clone(), TopWord { word, count });
        }
    }
    let mut tops: BTreeMap<String, usize> = BTreeMap::new();
    for top in per_instance.values() {
        *tops.entry(top.word.clone()).or_default() += 1;
    }
    let n = per_instance.len() as f64;
    let top_word_share = ranked(tops).into_iter().map(|(w, c)| (w, c as f64 / n)).collect();
    LexicalStats { per_instance, global: ranked(global), top_word_share }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn modal_token_and_empty_sets() {
        let mut map = BTreeMap::new();
        map.insert(String::from("a.example"), vec![Rule::new("1", "No violent content; content warnings required").unwrap()]);
        map.insert(String::from("b.example"), vec![]);
        let stats = rule_lexical_stats(&map, &Normalizer::default());
        assert_eq!(stats.per_instance["a.example"], TopWord { word: "content".into(), count: 2 });
        assert!(!stats.per_instance.contains_key("b.example"));
        assert_eq!(stats.global[0], ("content".into(), 2));
        assert_eq!(stats.top_word_share, vec![("content".into(), 1.0)]);
    }
}
