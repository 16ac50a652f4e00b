//! Evaluation statistics over panel verdicts: inter-rater agreement,
//! lexical and semantic similarity of the explanations, bias correlations,
//! score bins and temporal spread.

mod agreement;
mod bias;
mod bins;
mod lexical;
mod report;
mod similarity;
mod stats;
mod temporal;
mod text;

pub use agreement::{cohen_kappa, fleiss_kappa, pairwise_cohen, AgreementError, RatingMatrix, CATEGORIES};
pub use bias::{bias_probes, BiasError, Probe, ProbeOutcome};
pub use bins::{average_scores, bin_average_scores, bin_census, BinCensus, BinError, BinSpec};
pub use lexical::{rule_lexical_stats, LexicalStats, TopWord};
pub use report::{build_report, AnalyticsReport, PairTable, ReportError, ReportInput, ScoreDistribution, TextTables};
pub use similarity::{cosine, semantic_similarity, EmbedError, Embedder, SimilarityError};
pub use stats::{
    average_ranks, correlate, pearson, regularized_incomplete_beta, spearman, t_two_sided_p, CorrelationResult,
    Method, StatsError,
};
pub use temporal::{temporal_by_score, CategoryAges, TemporalReport};
pub use text::{
    normalize_suggestion, set_overlap, suggestion_length, word_overlap, LengthUnit, Lemmatizer, Normalizer,
    PassThrough, SuffixStemmer, NO_SUGGESTION,
};
