//! Entropy-gated retrieval-augmented generation.
//!
//! A query is first answered from a short extractive summary of its
//! document. If the model's mean next-token entropy over the first few
//! generated tokens exceeds a threshold, the top-k chunks of the document
//! are retrieved and the answer is regenerated with summary plus chunks.
//!
//! The crate also carries the machinery to study that trade-off: baseline
//! answering modes, a normalized exact-match evaluation harness with
//! threshold sweeps and entropy statistics, and a closed-form latency model.
//! See the `examples/` directory for one runnable program per capability.

pub mod cli;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod eval;
pub mod gate;
mod http;
pub mod latency;
pub mod lm;
pub mod pipeline;
pub mod report;
pub mod stats;

pub use corpus::{Chunk, ChunkConfig, Document, SummaryContext, Tokenizer, WhitespaceTokenizer};
pub use embed::{Embedder, EmbeddingVector, HashEmbedder, HttpEmbedder, RetrievalResult, VectorIndex};
pub use error::*;
pub use eval::{Dataset, EvalOptions, EvalRecord, EvalReport};
pub use gate::{EntropyTrace, GateDecision, GateRule};
pub use http::HttpConfig;
pub use lm::{Distribution, GenerationRequest, HttpModel, LanguageModel, MockModel, TokenStep};
pub use pipeline::{Engine, EngineSettings, IngestConfig, KnowledgeBase, Mode, PipelineAnswer, Query, RetrievalScope};
pub use stats::EntropyStats;
