//! Probabilistic text retrieval with two engines.
//!
//! The extended engine ([`scoring::SystemAScorer`]) adds location, category
//! and query-rarity factors to BM11 and uses rank-weighted feedback
//! ([`feedback_a`]). The lean engine ([`scoring::Bm11Scorer`]) is plain BM11
//! with statistically selected feedback terms ([`feedback_b`]) and
//! dictionary-based cross-lingual search ([`clir`]).

pub mod analysis;
pub mod clir;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod feedback_a;
pub mod feedback_b;
pub mod index;
pub mod pipeline;
pub mod scoring;
pub mod segment;
pub mod terms;

pub use analysis::Analyzer;
pub use corpus::{Document, DocumentCollection, Mode, Query, QueryType, Topic, TokenizerConfig};
pub use error::{Error, Result};
pub use index::{DocNo, Index, Location, TermStats};
pub use scoring::{RankedDoc, Ranking};
pub use terms::{TermWeight, WeightedTermVector};
