//! Cross-lingual pivoting toolkit for Spanish pronoun gender.
//!
//! Comparable Spanish/English documents are paired by title, their sentences
//! matched through a bridge translation, and their tokens aligned with IBM
//! Model 1. English gendered pronouns are then projected onto Spanish dropped
//! subjects and `su`/`sus` possessives, producing labeled examples. The
//! evaluation side covers per-gender P/R/F1, human-agreement analysis,
//! prodrop rates, BLEU, local linear explanations and MT tag injection.

pub mod classify;
pub mod config;
pub mod corpus;
pub mod dataset;
pub mod error;
pub mod explain;
pub mod extract;
pub mod fixtures;
pub mod inject;
pub mod logging;
pub mod manifest;
pub mod metrics;
pub mod page_align;
pub mod pipeline;
mod remote;
pub mod sent_align;
#[doc(hidden)]
pub mod testing;
pub mod text;
pub mod token_align;
pub mod translate;

pub use corpus::{Document, GenderLabel, Head, Lang, Sentence, Span, Token};
pub use error::{Error, Result};
pub use remote::RetryPolicy;
