use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::agreement::{fleiss_kappa, pairwise_cohen, AgreementError, RatingMatrix, CATEGORIES};
use super::bias::{bias_probes, BiasError, ProbeOutcome};
use super::bins::{average_scores, bin_census, BinCensus, BinError, BinSpec};
use super::lexical::{rule_lexical_stats, LexicalStats};
use super::similarity::{cosine, EmbedError, Embedder, SimilarityError};
use super::temporal::{temporal_by_score, TemporalReport};
use super::text::{normalize_suggestion, set_overlap, Lemmatizer, Normalizer};
use crate::ingest::{Post, Rule};
use crate::moderator::ModerationVerdict;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreDistribution {
    pub model_id: String,
    pub counts: [u64; CATEGORIES],
    pub mean: Option<f64>,
}

/// Pairwise model-by-model summary of a per-post similarity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTable {
    pub mean: Vec<Vec<Option<f64>>>,
    pub sd: Vec<Vec<Option<f64>>>,
    pub n: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextTables {
    pub justification: PairTable,
    pub suggestion: PairTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticsReport {
    pub normalizer: String,
    pub embedder: Option<String>,
    pub models: Vec<String>,
    pub posts_rated: usize,
    pub verdicts: usize,
    pub score_distribution: Vec<ScoreDistribution>,
    pub fleiss_kappa: Option<f64>,
    pub fleiss_posts: usize,
    pub cohen_kappa: Vec<Vec<Option<f64>>>,
    pub word_overlap: TextTables,
    pub semantic_similarity: Option<TextTables>,
    pub bias_probes: Vec<ProbeOutcome>,
    pub temporal: TemporalReport,
    pub bins: BinCensus,
    pub rule_lexical: LexicalStats,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Agreement(#[from] AgreementError),
    #[error(transparent)]
    Bias(#[from] BiasError),
    #[error(transparent)]
    Bins(#[from] BinError),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
}

pub struct ReportInput<'a> {
    /// Panel order for every per-model table.
    pub models: &'a [String],
    pub verdicts: &'a [ModerationVerdict],
    pub posts: &'a [Post],
    pub rules_by_instance: &'a BTreeMap<String, Vec<Rule>>,
}

fn mean_sd(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        libm::sqrt(values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0))
    } else {
        0.0
    };
    (Some(mean), Some(sd))
}

/// Fills the upper triangle from `pair(i, j)` samples and mirrors it; the
/// diagonal stays empty.
fn pair_table<F>(k: usize, mut samples: F) -> Result<PairTable, SimilarityError>
where
    F: FnMut(usize, usize) -> Result<Vec<f64>, SimilarityError>,
{
    let mut t = PairTable { mean: vec![vec![None; k]; k], sd: vec![vec![None; k]; k], n: vec![vec![0; k]; k] };
    for i in 0..k {
        for j in i + 1..k {
            let values = samples(i, j)?;
            let (mean, sd) = mean_sd(&values);
            for (a, b) in [(i, j), (j, i)] {
                t.mean[a][b] = mean;
                t.sd[a][b] = sd;
                t.n[a][b] = values.len();
            }
        }
    }
    Ok(t)
}

/// Per post, the verdict of each model (panel order).
fn by_post<'v>(models: &[String], verdicts: &'v [ModerationVerdict]) -> BTreeMap<&'v str, Vec<Option<&'v ModerationVerdict>>> {
    let column: BTreeMap<&str, usize> = models.iter().enumerate().map(|(i, m)| (m.as_str(), i)).collect();
    let mut out: BTreeMap<&str, Vec<Option<&ModerationVerdict>>> = BTreeMap::new();
    for v in verdicts {
        if let Some(&c) = column.get(v.model_id.as_str()) {
            out.entry(v.post_id.as_str()).or_insert_with(|| vec![None; models.len()])[c] = Some(v);
        }
    }
    out
}

type Field = fn(&ModerationVerdict) -> String;

const FIELDS: [Field; 2] = [|v| v.justification.clone(), |v| normalize_suggestion(&v.suggestion)];

pub fn build_report<L: Lemmatizer>(
    input: &ReportInput<'_>,
    normalizer: &Normalizer<L>,
    embedder: Option<&dyn Embedder>,
    bins: &BinSpec,
) -> Result<AnalyticsReport, ReportError> {
    let models = input.models;
    let k = models.len();
    let grid = by_post(models, input.verdicts);

    let score_distribution = models
        .iter()
        .map(|m| {
            let mut counts = [0u64; CATEGORIES];
            for v in input.verdicts.iter().filter(|v| &v.model_id == m) {
                counts[v.score.value() as usize] += 1;
            }
            let total: u64 = counts.iter().sum();
            let weighted: u64 = counts.iter().enumerate().map(|(s, c)| s as u64 * c).sum();
            ScoreDistribution {
                model_id: m.clone(),
                counts,
                mean: (total > 0).then(|| weighted as f64 / total as f64),
            }
        })
        .collect();

    let matrix = RatingMatrix::from_verdicts(input.verdicts, models)?;
    let complete = matrix.complete_rows();
    let fleiss = if k >= 2 && !complete.post_ids.is_empty() { Some(fleiss_kappa(&complete)?) } else { None };

    let word_sets: Vec<BTreeMap<(&str, usize), BTreeSet<String>>> = FIELDS
        .iter()
        .map(|field| {
            grid.iter()
                .flat_map(|(post, row)| {
                    row.iter()
                        .enumerate()
                        .filter_map(move |(c, v)| v.map(|v| ((*post, c), normalizer.word_set(&field(v)))))
                })
                .collect()
        })
        .collect();
    let overlap = |f: usize| {
        pair_table(k, |i, j| {
            Ok(grid
                .iter()
                .filter(|(_, row)| row[i].is_some() && row[j].is_some())
                .map(|(post, _)| set_overlap(&word_sets[f][&(*post, i)], &word_sets[f][&(*post, j)]))
                .collect())
        })
    };
    let word_overlap = TextTables { justification: overlap(0)?, suggestion: overlap(1)? };

    let semantic_similarity = match embedder {
        None => None,
        Some(embedder) => {
            let texts: BTreeSet<String> = input.verdicts.iter().flat_map(|v| FIELDS.map(|f| f(v))).collect();
            let texts: Vec<String> = texts.into_iter().collect();
            let vectors = embedder.embed(&texts).map_err(SimilarityError::from)?;
            if vectors.len() != texts.len() {
                return Err(SimilarityError::from(EmbedError::Count { expected: texts.len(), got: vectors.len() }).into());
            }
            let lookup: BTreeMap<&str, &Vec<f64>> = texts.iter().map(String::as_str).zip(&vectors).collect();
            let table = |f: usize| {
                pair_table(k, |i, j| {
                    grid.values()
                        .filter_map(|row| Some((row[i]?, row[j]?)))
                        .map(|(a, b)| cosine(lookup[FIELDS[f](a).as_str()], lookup[FIELDS[f](b).as_str()]))
                        .collect()
                })
            };
            Some(TextTables { justification: table(0)?, suggestion: table(1)? })
        }
    };

    let averages = average_scores(input.verdicts);
    Ok(AnalyticsReport {
        normalizer: normalizer.name(),
        embedder: embedder.map(|e| String::from(e.name())),
        models: models.to_vec(),
        posts_rated: grid.len(),
        verdicts: input.verdicts.len(),
        score_distribution,
        fleiss_kappa: fleiss,
        fleiss_posts: complete.post_ids.len(),
        cohen_kappa: pairwise_cohen(&matrix),
        word_overlap,
        semantic_similarity,
        bias_probes: bias_probes(input.verdicts, input.posts, input.rules_by_instance)?,
        temporal: temporal_by_score(input.verdicts, input.posts),
        bins: bin_census(&averages, bins)?,
        rule_lexical: rule_lexical_stats(input.rules_by_instance, normalizer),
    })
}
