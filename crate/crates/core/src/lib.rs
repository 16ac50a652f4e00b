//! Allocation-only building blocks for checking social-media posts against
//! the community rules of the server they were published on.
//!
//! Everything here is pure: no sockets, no files, no clocks. The `rulecheck`
//! crate wires these pieces to HTTP, JSONL files and the survey service.
//!
//! * [`ingest`]: domain records, PII scrubbing, HTML reduction, pagination and
//!   per-host throttling state.
//! * [`corpus`]: language consensus, engagement scoring, post selection.
//! * [`moderator`]: prompt construction, the Likert output contract and the
//!   retrying moderation loop over an abstract chat backend.
//! * [`analytics`]: agreement, similarity, correlation and distribution
//!   statistics over panel verdicts.
//! * [`survey`]: human-evaluation sampling, questions, the response log and
//!   its aggregates.
#![cfg_attr(not(any(feature = "std", test)), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod analytics;
pub mod corpus;
pub mod ingest;
pub mod moderator;
pub mod survey;

pub use corpus::{engagement_score, SelectionConfig, SelectionReport};
pub use ingest::{EngagementCounts, InstanceRecord, Post, Rule};
pub use moderator::{LikertScore, ModelConfig, ModerationVerdict};
