use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ingest::{Post, Rule};
use crate::moderator::ModerationVerdict;

/// Question id → option label → model id. Never sent to respondents.
pub type AnswerKey = BTreeMap<String, BTreeMap<String, String>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyOption {
    /// "Rater #k", assigned after shuffling.
    pub label: String,
    pub score_label: String,
    pub justification: String,
    pub suggestion: String,
    pub text: String,
}

/// What a respondent sees.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionView {
    pub question_id: String,
    pub instance: String,
    pub rules_text: String,
    pub post_text: String,
    pub options: Vec<SurveyOption>,
}

/// A question plus its answer key. Deliberately not serializable: use
/// [`SurveyQuestion::view`] for anything that leaves the server.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurveyQuestion {
    pub view: QuestionView,
    pub answer_key: BTreeMap<String, String>,
}

impl SurveyQuestion {
    pub fn view(&self) -> &QuestionView {
        &self.view
    }

    pub fn option_labels(&self) -> BTreeSet<&str> {
        self.view.options.iter().map(|o| o.label.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BuildError {
    #[error("post {post_id} has {got} verdicts; at least 2 are needed")]
    TooFewVerdicts { post_id: String, got: usize },
    #[error("model {model_id} has more than one verdict for post {post_id}")]
    DuplicateVerdict { post_id: String, model_id: String },
    #[error("post {0} is not in the corpus")]
    UnknownPost(String),
}

fn rules_text(rules: &[Rule]) -> String {
    rules
        .iter()
        .enumerate()
        .map(|(i, r)| format!("{}. {}", i + 1, r.text))
        .collect::<Vec<_>>()
        .join("\n")
}

/// One question for `post`, built from its verdicts (others are ignored).
/// Options are sorted by model id and then shuffled with `seed`, so the
/// order depends only on the seed and the set of models.
pub fn build_question(
    question_id: impl Into<String>,
    post: &Post,
    rules: &[Rule],
    verdicts: &[ModerationVerdict],
    seed: u64,
) -> Result<SurveyQuestion, BuildError> {
    let mut mine: Vec<&ModerationVerdict> = verdicts.iter().filter(|v| v.post_id == post.post_id).collect();
    mine.sort_by(|a, b| a.model_id.cmp(&b.model_id));
    if let Some(w) = mine.windows(2).find(|w| w[0].model_id == w[1].model_id) {
        return Err(BuildError::DuplicateVerdict { post_id: post.post_id.clone(), model_id: w[0].model_id.clone() });
    }
    if mine.len() < 2 {
        return Err(BuildError::TooFewVerdicts { post_id: post.post_id.clone(), got: mine.len() });
    }
    mine.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut answer_key = BTreeMap::new();
    let options = mine
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let label = format!("Rater #{}", i + 1);
            answer_key.insert(label.clone(), v.model_id.clone());
            let score_label = format!("{}", v.score);
            SurveyOption {
                text: format!("Score: {score_label}\nJustification: {}\nSuggestions: {}", v.justification, v.suggestion),
                label,
                score_label,
                justification: v.justification.clone(),
                suggestion: v.suggestion.clone(),
            }
        })
        .collect();
    Ok(SurveyQuestion {
        view: QuestionView {
            question_id: question_id.into(),
            instance: post.instance.clone(),
            rules_text: rules_text(rules),
            post_text: post.content.clone(),
            options,
        },
        answer_key,
    })
}

fn question_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Questions for `post_ids` in the given order, with ids `q01`, `q02`, …
pub fn build_survey(
    post_ids: &[String],
    posts: &BTreeMap<String, Post>,
    rules_by_instance: &BTreeMap<String, Vec<Rule>>,
    verdicts: &[ModerationVerdict],
    seed: u64,
) -> Result<(Vec<QuestionView>, AnswerKey), BuildError> {
    let mut by_post: BTreeMap<&str, Vec<ModerationVerdict>> = BTreeMap::new();
    for v in verdicts {
        by_post.entry(v.post_id.as_str()).or_default().push(v.clone());
    }
    let mut views = Vec::with_capacity(post_ids.len());
    let mut key = AnswerKey::new();
    for (i, id) in post_ids.iter().enumerate() {
        let post = posts.get(id).ok_or_else(|| BuildError::UnknownPost(id.clone()))?;
        let rules = rules_by_instance.get(&post.instance).map(Vec::as_slice).unwrap_or(&[]);
        let empty = Vec::new();
        let mine = by_post.get(id.as_str()).unwrap_or(&empty);
        let q = build_question(format!("q{:02}", i + 1), post, rules, mine, question_seed(seed, i))?;
        key.insert(q.view.question_id.clone(), q.answer_key);
        views.push(q.view);
    }
    Ok((views, key))
}
