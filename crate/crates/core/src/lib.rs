//! Incremental chart parsing of speech word lattices.

pub mod corpus;
pub mod decoder;
pub mod engine;
pub mod eval;
pub mod feature;
pub mod grammar;
pub mod models;
pub mod oracle;
pub mod parallel;
pub mod report;
pub mod types;

pub use decoder::{best_path, load_lattice, EmissionStream, Lattice, LatticeError};
pub use engine::{parse_lattice, Chart, Edge, EdgeId, EngineError, Models, ParseResult, ParseResultSet, Parser, ParserConfig};
pub use feature::FeatureStructure;
pub use grammar::{parse_grammar, Grammar, GrammarError};
pub use models::{BigramModel, Boundary, CategoryTrigram, ProsodyHypothesis};
pub use types::{Frame, LogScore, ScoreRecord, ScoreSet, Weights, WordHypothesis};
