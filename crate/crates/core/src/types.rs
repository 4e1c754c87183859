//! Domain types shared across the parser: frames, word hypotheses, per-frame
//! score sets and the score record carried by every chart edge.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A signal frame index. Chart vertices are in one-to-one correspondence
/// with frames.
pub type Frame = u32;

/// A lexical key, shared cheaply between edges.
pub type Key = Arc<str>;

/// Natural-log probability, `<= 0`, higher is better.
pub type LogScore = f64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no score stored for end frame {frame}")]
pub struct MissingFrame {
    pub frame: Frame,
}

/// Output of the word recognizer: a scored word spanning `[from, to)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordHypothesis {
    pub from: Frame,
    pub to: Frame,
    pub key: String,
    pub score: LogScore,
}

impl WordHypothesis {
    pub fn new(from: Frame, to: Frame, key: impl Into<String>, score: LogScore) -> Self {
        WordHypothesis { from, to, key: key.into(), score }
    }
}

impl fmt::Display for WordHypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({},{},{})", self.key, self.from, self.to, self.score)
    }
}

/// Set-valued score indexed by end frame. Edges with several end vertices
/// (hypothesis families) carry one entry per end vertex.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreSet {
    entries: BTreeMap<Frame, LogScore>,
}

impl ScoreSet {
    pub fn new() -> Self {
        ScoreSet::default()
    }

    pub fn single(frame: Frame, score: LogScore) -> Self {
        let mut s = ScoreSet::new();
        s.insert(frame, score);
        s
    }

    pub fn insert(&mut self, frame: Frame, score: LogScore) {
        self.entries.insert(frame, score);
    }

    /// Adds `x` to every element of the set.
    pub fn oplus(&self, x: LogScore) -> ScoreSet {
        ScoreSet {
            entries: self.entries.iter().map(|(&f, &s)| (f, s + x)).collect(),
        }
    }

    pub fn lookup(&self, frame: Frame) -> Result<LogScore, MissingFrame> {
        self.entries.get(&frame).copied().ok_or(MissingFrame { frame })
    }

    pub fn get(&self, frame: Frame) -> Option<LogScore> {
        self.entries.get(&frame).copied()
    }

    pub fn contains(&self, frame: Frame) -> bool {
        self.entries.contains_key(&frame)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn frames(&self) -> impl Iterator<Item = Frame> + '_ {
        self.entries.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Frame, LogScore)> + '_ {
        self.entries.iter().map(|(&f, &s)| (f, s))
    }

    pub fn max(&self) -> Option<LogScore> {
        self.entries.values().copied().reduce(f64::max)
    }
}

impl FromIterator<(Frame, LogScore)> for ScoreSet {
    fn from_iter<T: IntoIterator<Item = (Frame, LogScore)>>(iter: T) -> Self {
        ScoreSet { entries: iter.into_iter().collect() }
    }
}

/// Inside and outside components for the acoustic, bigram, prosody and
/// grammar models.
///
/// Inside scores cover the span of the edge. Outside scores are kept as a
/// Viterbi prefix estimate: the best score from vertex 0 through the end of
/// the edge, which is what the agenda ranks on.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub inside_acoustic: ScoreSet,
    pub outside_acoustic: ScoreSet,
    pub inside_bigram: LogScore,
    pub outside_bigram: LogScore,
    pub inside_prosody: LogScore,
    pub outside_prosody: LogScore,
    pub inside_grammar: LogScore,
    pub outside_grammar: LogScore,
}

/// Linear interpolation weights for the four score components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub acoustic: f64,
    pub bigram: f64,
    pub prosody: f64,
    pub grammar: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights { acoustic: 1.0, bigram: 1.0, prosody: 1.0, grammar: 1.0 }
    }
}

impl Weights {
    pub fn new(acoustic: f64, bigram: f64, prosody: f64, grammar: f64) -> Self {
        Weights { acoustic, bigram, prosody, grammar }
    }

    pub fn combine(&self, acoustic: f64, bigram: f64, prosody: f64, grammar: f64) -> f64 {
        self.acoustic * acoustic + self.bigram * bigram + self.prosody * prosody + self.grammar * grammar
    }
}

impl ScoreRecord {
    /// Weighted inside score at one end frame.
    pub fn inside_at(&self, frame: Frame, w: &Weights) -> Option<f64> {
        let ac = self.inside_acoustic.get(frame)?;
        Some(w.combine(ac, self.inside_bigram, self.inside_prosody, self.inside_grammar))
    }

    /// Weighted outside (prefix) score at one end frame.
    pub fn outside_at(&self, frame: Frame, w: &Weights) -> Option<f64> {
        let ac = self.outside_acoustic.get(frame)?;
        Some(w.combine(ac, self.outside_bigram, self.outside_prosody, self.outside_grammar))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn oplus_adds_to_every_entry() {
        let s = ScoreSet::single(10, -5.0);
        assert_eq!(s.oplus(-12.0), ScoreSet::single(10, -17.0));

        let s: ScoreSet = [(10, -5.0), (11, -5.2)].into_iter().collect();
        assert_eq!(s.oplus(0.0), s);

        assert!(ScoreSet::new().oplus(-1.0).is_empty());
    }

    #[test]
    fn lookup_by_end_frame() {
        let s: ScoreSet = [(10, -5.0), (11, -5.2)].into_iter().collect();
        assert_eq!(s.lookup(10), Ok(-5.0));
        assert_eq!(ScoreSet::single(0, 0.0).lookup(0), Ok(0.0));
        assert_eq!(ScoreSet::single(10, -5.0).lookup(11), Err(MissingFrame { frame: 11 }));
    }

    proptest! {
        #[test]
        fn oplus_composes_with_scalar_addition(
            entries in proptest::collection::btree_map(0u32..50, -100.0f64..0.0, 0..8),
            a in -50.0f64..50.0,
            b in -50.0f64..50.0,
        ) {
            let s: ScoreSet = entries.into_iter().collect();
            let lhs = s.oplus(a).oplus(b);
            let rhs = s.oplus(a + b);
            prop_assert_eq!(lhs.len(), rhs.len());
            for ((f1, x), (f2, y)) in lhs.iter().zip(rhs.iter()) {
                prop_assert_eq!(f1, f2);
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }
}
