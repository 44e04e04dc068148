//! Social-meaning rationales for dialogue classification.
//!
//! The crate covers the whole offline pipeline: corpus ingestion and
//! splitting, prompt rendering, a replayable LLM gateway, rationale parsing
//! and validation, [SEP]-joined input augmentation, yes/no probe
//! classification, and evaluation statistics.

pub mod augment;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod fewshot;
pub mod gateway;
pub mod jsonl;
pub mod pipeline;
pub mod prompt;
pub mod rationale;

pub use error::{Error, Result};
