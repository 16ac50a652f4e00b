//! Human evaluation: sampling posts across score bins, anonymized
//! multiple-choice questions, the forward-only response log and the
//! preference, co-selection and rating aggregates.

mod aggregate;
mod log;
mod question;
mod sample;

pub use aggregate::{
    aggregate_preferences, agreement_matrix, rating_distributions, survey_report, AgreementMatrix, ModelRatings,
    RatingSummary, SurveyReport,
};
pub use log::{RecordError, ResponseLog, ResponseSubmission, SurveyResponse};
pub use question::{build_question, build_survey, AnswerKey, BuildError, QuestionView, SurveyOption, SurveyQuestion};
pub use sample::{sample_survey_posts, SampleError, DEFAULT_PER_BIN};
