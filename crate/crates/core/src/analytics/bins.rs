use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::moderator::{ModerationVerdict, MAX_LIKERT};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BinError {
    #[error("bin edges must be strictly decreasing, start at 5 and define at least one bin")]
    InvalidEdges,
    #[error("average score {0} is outside [0, 5]")]
    OutOfRange(f64),
}

/// Score ranges as `(lo, hi]` intervals over descending edges. The lowest
/// bin also contains its lower edge, so the bins partition `[last, 5]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BinSpec {
    edges: Vec<f64>,
}

impl Default for BinSpec {
    fn default() -> Self {
        Self { edges: vec![5.0, 4.1667, 3.3333, 2.5, 1.6667, 0.0] }
    }
}

impl TryFrom<Vec<f64>> for BinSpec {
    type Error = BinError;

    fn try_from(edges: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(edges)
    }
}

impl From<BinSpec> for Vec<f64> {
    fn from(spec: BinSpec) -> Self {
        spec.edges
    }
}

impl BinSpec {
    pub fn new(edges: Vec<f64>) -> Result<Self, BinError> {
        let valid = edges.len() >= 2
            && edges[0] == f64::from(MAX_LIKERT)
            && edges.iter().all(|e| e.is_finite() && *e >= 0.0)
            && edges.windows(2).all(|w| w[0] > w[1]);
        if valid {
            Ok(Self { edges })
        } else {
            Err(BinError::InvalidEdges)
        }
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn label(&self, bin: usize) -> String {
        let (lo, hi) = (self.edges[bin + 1], self.edges[bin]);
        if bin + 1 == self.len() {
            format!("[{lo}, {hi}]")
        } else {
            format!("({lo}, {hi}]")
        }
    }

    pub fn assign(&self, avg: f64) -> Result<usize, BinError> {
        let last = self.len() - 1;
        if !(avg <= self.edges[0] && avg >= self.edges[last + 1]) {
            return Err(BinError::OutOfRange(avg));
        }
        Ok((0..last).find(|&i| avg > self.edges[i + 1]).unwrap_or(last))
    }
}

pub fn bin_average_scores(avg: &[f64], spec: &BinSpec) -> Result<Vec<usize>, BinError> {
    avg.iter().map(|&a| spec.assign(a)).collect()
}

/// Mean panel score per post.
pub fn average_scores(verdicts: &[ModerationVerdict]) -> BTreeMap<String, f64> {
    let mut sums: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    for v in verdicts {
        let e = sums.entry(v.post_id.as_str()).or_default();
        e.0 += u64::from(v.score.value());
        e.1 += 1;
    }
    sums.into_iter()
        .map(|(id, (sum, n))| (String::from(id), sum as f64 / n as f64))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinCensus {
    pub edges: Vec<f64>,
    pub labels: Vec<String>,
    pub counts: Vec<usize>,
}

pub fn bin_census(averages: &BTreeMap<String, f64>, spec: &BinSpec) -> Result<BinCensus, BinError> {
    let mut counts = vec![0; spec.len()];
    for &avg in averages.values() {
        counts[spec.assign(avg)?] += 1;
    }
    Ok(BinCensus {
        edges: spec.edges.clone(),
        labels: (0..spec.len()).map(|i| spec.label(i)).collect(),
        counts,
    })
}
