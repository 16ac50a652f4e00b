use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::moderator::{ModerationVerdict, MAX_LIKERT};

pub const CATEGORIES: usize = MAX_LIKERT as usize + 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AgreementError {
    #[error("matrix has {rows} score rows for {posts} posts")]
    RowCount { rows: usize, posts: usize },
    #[error("row {row} has {cells} cells for {raters} raters")]
    RowWidth { row: usize, cells: usize, raters: usize },
    #[error("score {0} is outside 0..=5")]
    InvalidScore(u8),
    #[error("at least two raters are required, got {0}")]
    TooFewRaters(usize),
    #[error("no ratings to compare")]
    Empty,
    #[error("post {0} has missing ratings")]
    Incomplete(String),
    #[error("rating vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("{rater} rated post {post_id} more than once")]
    DuplicateRating { post_id: String, rater: String },
}

/// Posts × raters table of Likert values, `None` where a rater produced no
/// verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingMatrix {
    pub post_ids: Vec<String>,
    pub rater_ids: Vec<String>,
    pub scores: Vec<Vec<Option<u8>>>,
}

impl RatingMatrix {
    pub fn new(
        post_ids: Vec<String>,
        rater_ids: Vec<String>,
        scores: Vec<Vec<Option<u8>>>,
    ) -> Result<Self, AgreementError> {
        if scores.len() != post_ids.len() {
            return Err(AgreementError::RowCount { rows: scores.len(), posts: post_ids.len() });
        }
        for (row, cells) in scores.iter().enumerate() {
            if cells.len() != rater_ids.len() {
                return Err(AgreementError::RowWidth { row, cells: cells.len(), raters: rater_ids.len() });
            }
            if let Some(bad) = cells.iter().flatten().find(|s| **s > MAX_LIKERT) {
                return Err(AgreementError::InvalidScore(*bad));
            }
        }
        Ok(Self { post_ids, rater_ids, scores })
    }

    /// Builds the table for the given raters (columns in that order). Posts
    /// appear in first-seen order; verdicts from other raters are ignored.
    pub fn from_verdicts(verdicts: &[ModerationVerdict], raters: &[String]) -> Result<Self, AgreementError> {
        let column: BTreeMap<&str, usize> = raters.iter().enumerate().map(|(i, r)| (r.as_str(), i)).collect();
        let mut row_of: BTreeMap<&str, usize> = BTreeMap::new();
        let mut post_ids = Vec::new();
        let mut scores: Vec<Vec<Option<u8>>> = Vec::new();
        for v in verdicts {
            let Some(&col) = column.get(v.model_id.as_str()) else {
                continue;
            };
            let row = *row_of.entry(v.post_id.as_str()).or_insert_with(|| {
                post_ids.push(v.post_id.clone());
                scores.push(vec![None; raters.len()]);
                scores.len() - 1
            });
            if scores[row][col].is_some() {
                return Err(AgreementError::DuplicateRating { post_id: v.post_id.clone(), rater: v.model_id.clone() });
            }
            scores[row][col] = Some(v.score.value());
        }
        Ok(Self { post_ids, rater_ids: raters.to_vec(), scores })
    }

    /// The sub-table of posts rated by every rater.
    pub fn complete_rows(&self) -> RatingMatrix {
        let (post_ids, scores) = self
            .post_ids
            .iter()
            .zip(&self.scores)
            .filter(|(_, row)| row.iter().all(Option::is_some))
            .map(|(id, row)| (id.clone(), row.clone()))
            .unzip();
        RatingMatrix { post_ids, rater_ids: self.rater_ids.clone(), scores }
    }

    pub fn column(&self, rater: usize) -> impl Iterator<Item = Option<u8>> + '_ {
        self.scores.iter().map(move |row| row[rater])
    }
}

/// Fleiss' κ over a complete matrix.
///
/// `P_i = Σ_j n_ij(n_ij − 1) / (N(N − 1))` with `N` raters per post, `P̄` is
/// the mean over posts, `P̄_e = Σ_j p_j²`. If every rating falls in one
/// category `P̄_e = 1` and the result is 1 by convention.
pub fn fleiss_kappa(m: &RatingMatrix) -> Result<f64, AgreementError> {
    let raters = m.rater_ids.len();
    if raters < 2 {
        return Err(AgreementError::TooFewRaters(raters));
    }
    if m.post_ids.is_empty() {
        return Err(AgreementError::Empty);
    }
    let n = raters as f64;
    let mut totals = [0u64; CATEGORIES];
    let mut p_bar = 0.0;
    for (id, row) in m.post_ids.iter().zip(&m.scores) {
        let mut counts = [0u64; CATEGORIES];
        for cell in row {
            let s = cell.ok_or_else(|| AgreementError::Incomplete(id.clone()))?;
            counts[s as usize] += 1;
        }
        let agreeing: u64 = counts.iter().map(|c| c * c.saturating_sub(1)).sum();
        p_bar += agreeing as f64 / (n * (n - 1.0));
        for (t, c) in totals.iter_mut().zip(counts) {
            *t += c;
        }
    }
    let cells = (m.post_ids.len() * raters) as u64;
    if totals.contains(&cells) {
        return Ok(1.0);
    }
    p_bar /= m.post_ids.len() as f64;
    let p_e: f64 = totals
        .iter()
        .map(|&t| {
            let p = t as f64 / cells as f64;
            p * p
        })
        .sum();
    Ok((p_bar - p_e) / (1.0 - p_e))
}

/// Cohen's κ for two raters. When both raters used one and the same
/// category throughout, `p_e = p_o = 1` and the result is 1 by convention.
pub fn cohen_kappa(a: &[u8], b: &[u8]) -> Result<f64, AgreementError> {
    if a.len() != b.len() {
        return Err(AgreementError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(AgreementError::Empty);
    }
    let mut ma = [0u64; CATEGORIES];
    let mut mb = [0u64; CATEGORIES];
    let mut agree = 0u64;
    for (&x, &y) in a.iter().zip(b) {
        for s in [x, y] {
            if s > MAX_LIKERT {
                return Err(AgreementError::InvalidScore(s));
            }
        }
        ma[x as usize] += 1;
        mb[y as usize] += 1;
        agree += u64::from(x == y);
    }
    let n = a.len() as f64;
    let total = a.len() as u64;
    if (0..CATEGORIES).any(|j| ma[j] == total && mb[j] == total) {
        return Ok(1.0);
    }
    let p_o = agree as f64 / n;
    let p_e: f64 = ma.iter().zip(&mb).map(|(&x, &y)| (x as f64 / n) * (y as f64 / n)).sum();
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// Pairwise Cohen's κ between matrix columns over the posts both raters
/// scored. Diagonal cells are 1; pairs without shared posts are `None`.
pub fn pairwise_cohen(m: &RatingMatrix) -> Vec<Vec<Option<f64>>> {
    let k = m.rater_ids.len();
    let mut out = vec![vec![None; k]; k];
    for i in 0..k {
        out[i][i] = Some(1.0);
        for j in i + 1..k {
            let (a, b): (Vec<u8>, Vec<u8>) = m
                .scores
                .iter()
                .filter_map(|row| Some((row[i]?, row[j]?)))
                .unzip();
            let kappa = cohen_kappa(&a, &b).ok();
            out[i][j] = kappa;
            out[j][i] = kappa;
        }
    }
    out
}
