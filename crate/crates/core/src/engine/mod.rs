//! Time-synchronous active chart parsing over a word lattice.

mod agenda;
mod chart;
pub mod ops;
pub(crate) mod parser;

use serde::Serialize;
use thiserror::Error;

pub use agenda::{Agenda, AgendaItem, AgendaStats};
pub use chart::{Chart, Edge, EdgeId, EdgeStats, RuleRef, Vertex};
pub use parser::{parse_lattice, ParseResult, ParseResultSet, Parser, StepCounts};

use crate::decoder::LatticeError;
use crate::grammar::Grammar;
use crate::models::{BigramModel, CategoryTrigram, ModelError};
use crate::types::{Frame, MissingFrame, Weights, WordHypothesis};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("word {0:?} is not in the lexicon")]
    UnknownWord(String),
    #[error("lattice has no word hypotheses")]
    EmptyLattice,
    #[error("cycle for frame {got} out of order, expected {expected}")]
    OutOfOrder { expected: Frame, got: Frame },
    #[error("hypothesis {0} does not end at the current frame")]
    BadHypothesis(WordHypothesis),
    #[error(transparent)]
    MissingFrame(#[from] MissingFrame),
    #[error(transparent)]
    Prosody(#[from] ModelError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Statistical models consulted while scoring transitions.
#[derive(Debug, Clone)]
pub struct Models {
    pub bigram: BigramModel,
    /// Category trigram over prosodic boundaries; `None` disables prosody
    /// scoring.
    pub trigram: Option<CategoryTrigram>,
}

impl Default for Models {
    fn default() -> Self {
        Models { bigram: BigramModel::flat(), trigram: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParserConfig {
    pub weights: Weights,
    /// Agenda beam width in log units; `f64::INFINITY` disables the beam.
    pub beam_offset: f64,
    pub prosody: bool,
    /// Restrict the words the recognizer may deliver to those the chart
    /// can consume next.
    pub predict: bool,
    /// Ignore feature structures and parse with the context-free backbone.
    pub skeleton: bool,
}

impl Default for ParserConfig {
    fn default() -> Self {
        ParserConfig {
            weights: Weights::default(),
            beam_offset: 8.0,
            prosody: true,
            predict: false,
            skeleton: false,
        }
    }
}

impl ParserConfig {
    pub fn without_beam(self) -> Self {
        ParserConfig { beam_offset: f64::INFINITY, ..self }
    }
}

/// Everything the chart operations read but never modify.
#[derive(Debug, Clone, Copy)]
pub struct Context<'g> {
    pub grammar: &'g Grammar,
    pub models: &'g Models,
    pub config: &'g ParserConfig,
}

impl<'g> Context<'g> {
    pub fn new(grammar: &'g Grammar, models: &'g Models, config: &'g ParserConfig) -> Self {
        Context { grammar, models, config }
    }
}
