use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analytics::{BinError, BinSpec};

pub const DEFAULT_PER_BIN: usize = 6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SampleError {
    #[error(transparent)]
    Bins(#[from] BinError),
    #[error("bin {bin} {label} has {available} eligible posts, {needed} needed")]
    Underflow { bin: usize, label: String, available: usize, needed: usize },
}

/// Draws `per_bin` posts from every non-empty score bin.
///
/// Each bin's candidates (in id order) are shuffled once with a generator
/// seeded from `seed`; the sample is the first `per_bin` shuffled ids that
/// are not excluded, so an excluded draw is replaced by the next draw from
/// the same bin. Output is grouped by bin, highest scores first.
pub fn sample_survey_posts(
    avg_scores: &BTreeMap<String, f64>,
    spec: &BinSpec,
    per_bin: usize,
    excluded: &BTreeSet<String>,
    seed: u64,
) -> Result<Vec<String>, SampleError> {
    let mut bins: Vec<Vec<&String>> = (0..spec.len()).map(|_| Vec::new()).collect();
    for (id, &avg) in avg_scores {
        bins[spec.assign(avg)?].push(id);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(per_bin * spec.len());
    for (bin, mut candidates) in bins.into_iter().enumerate() {
        if candidates.is_empty() {
            continue;
        }
        candidates.shuffle(&mut rng);
        let picked: Vec<&String> = candidates
            .iter()
            .copied()
            .filter(|id| !excluded.contains(*id))
            .take(per_bin)
            .collect();
        if picked.len() < per_bin {
            return Err(SampleError::Underflow {
                bin,
                label: spec.label(bin),
                available: picked.len(),
                needed: per_bin,
            });
        }
        out.extend(picked.into_iter().cloned());
    }
    Ok(out)
}
