//! Canonical normalization of LaTeX math expressions, evaluation metrics for
//! mathematical expression recognition, and a dataset rendering pipeline.
//!
//! The usual flow is [`tokenizer::tokenize`] → [`parser::parse`] →
//! [`normalizer::Normalizer::normalize`], with [`metrics`] scoring
//! predictions against the canonical ground truth.

pub mod fixtures;
pub mod imageops;
pub mod metrics;
pub mod normalizer;
pub mod parser;
pub mod pipeline;
pub mod tokenizer;

pub use normalizer::{normalize, NormConfig, NormOutcome, Normalizer, Rejection};
pub use parser::{parse, serialize, ExprNode, Mode};
pub use tokenizer::{detokenize, tokenize, Token, TokenKind, TokenSeq};
