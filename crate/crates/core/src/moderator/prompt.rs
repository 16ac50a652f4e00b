use alloc::format;
use alloc::string::String;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{LikertScore, LIKERT_LABELS};
use crate::ingest::{Post, Rule};

pub const DEFAULT_TEMPLATE: &str = include_str!("../../templates/moderation_prompt.txt");
pub const DEFAULT_SYSTEM_PROMPT: &str = include_str!("../../templates/system_prompt.txt");

const PLACEHOLDERS: [&str; 4] = ["rules", "post", "cw", "format"];

const NO_CONTENT_WARNING: &str =
    "Content warning: the author did not mark this post as sensitive and used no spoiler text.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub post_id: String,
    pub system_prompt: String,
    /// The fully rendered user message.
    pub instruction: String,
    pub rules_block: String,
    pub post_block: String,
    pub cw_block: Option<String>,
    pub format_block: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("template is missing the {{{0}}} placeholder")]
    MissingPlaceholder(&'static str),
}

fn rules_block(rules: &[Rule]) -> String {
    if rules.is_empty() {
        return String::from("(this server does not declare any rules)");
    }
    let mut out = String::new();
    for (i, rule) in rules.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = write!(out, "{}. {}", i + 1, rule.text);
    }
    out
}

fn cw_block(post: &Post) -> Option<String> {
    if !post.sensitive {
        return None;
    }
    Some(match &post.spoiler_text {
        Some(spoiler) => format!(
            "Content warning: the author marked this post as sensitive and hid it behind the spoiler text \"{spoiler}\"."
        ),
        None => String::from(
            "Content warning: the author marked this post as sensitive but gave no spoiler text.",
        ),
    })
}

fn format_block() -> String {
    let mut choices = String::new();
    for score in LikertScore::all() {
        if score.value() > 0 {
            choices.push_str(", ");
        }
        let _ = write!(choices, "\"{score}\"");
    }
    format!(
        "Answer with exactly three lines and nothing else:\n\
         Score: <compliance score>, one of {choices}\n\
         Justification: <why the post received this score, citing the policies involved>\n\
         Suggestions: <how the post could be made more compliant, or N/A if no change is needed>\n\
         A score of 0 ({}) means the post clearly violates the policies; 5 ({}) means it fully respects them.",
        LIKERT_LABELS[0], LIKERT_LABELS[5],
    )
}

/// Renders the moderation prompt for one post. `{rules}`, `{post}`, `{cw}`
/// and `{format}` are substituted in a single pass, so braces inside the
/// post text are never expanded.
pub fn build_prompt(rules: &[Rule], post: &Post, template: &str) -> Result<PromptBundle, TemplateError> {
    for name in PLACEHOLDERS {
        if !template.contains(&format!("{{{name}}}")) {
            return Err(TemplateError::MissingPlaceholder(name));
        }
    }
    let rules_block = rules_block(rules);
    let post_block = post.content.clone();
    let cw_block = cw_block(post);
    let format_block = format_block();

    let mut instruction = String::with_capacity(template.len() + rules_block.len() + post_block.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        instruction.push_str(&rest[..open]);
        let tail = &rest[open + 1..];
        let hit = PLACEHOLDERS.iter().find(|name| {
            tail.strip_prefix(**name).is_some_and(|after| after.starts_with('}'))
        });
        match hit {
            Some(name) => {
                match *name {
                    "rules" => instruction.push_str(&rules_block),
                    "post" => instruction.push_str(&post_block),
                    "cw" => instruction.push_str(cw_block.as_deref().unwrap_or(NO_CONTENT_WARNING)),
                    _ => instruction.push_str(&format_block),
                }
                rest = &tail[name.len() + 1..];
            }
            None => {
                instruction.push('{');
                rest = tail;
            }
        }
    }
    instruction.push_str(rest);

    Ok(PromptBundle {
        post_id: post.post_id.clone(),
        system_prompt: String::from(DEFAULT_SYSTEM_PROMPT.trim()),
        instruction,
        rules_block,
        post_block,
        cw_block,
        format_block,
    })
}
