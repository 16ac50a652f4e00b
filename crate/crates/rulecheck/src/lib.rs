//! IO side of the rule-compliance pipeline: crawling over HTTP, JSONL
//! persistence, the chat and embedding clients, the staged pipeline and
//! the survey service. The pure logic lives in `rulecheck-core`.

pub mod api;
pub mod clock;
pub mod embed;
pub mod error;
pub mod http;
pub mod ingest;
pub mod jsonl;
pub mod language;
pub mod llm;
pub mod mock;
pub mod pipeline;

pub use error::{Error, Result};
pub use pipeline::{Pipeline, PipelineConfig};
