//! Bigram language model and the prosodic boundary model (boundary
//! hypotheses attached to vertices plus a word-category trigram over
//! `(left category, boundary, right category)`).

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{Frame, LogScore};

/// Left context marker for the first word of an utterance.
pub const SENTENCE_BEGIN: &str = "<s>";

/// Category for keys missing from the trigram's category map.
pub const CATCH_ALL: &str = "*";

/// Log-score used in place of `ln 0`.
pub const LOG_FLOOR: LogScore = -1e9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("line {line}: syntax error: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: log-probability {value} is positive")]
    PositiveLogProb { line: usize, value: f64 },
    #[error("prosody interval {from}..{to}: {msg}")]
    BadInterval { from: Frame, to: Frame, msg: String },
    #[error("prosody intervals {0}..{1} and {2}..{3} overlap")]
    Overlapping(Frame, Frame, Frame, Frame),
}

fn syntax(line: usize, msg: impl Into<String>) -> ModelError {
    ModelError::Syntax { line, msg: msg.into() }
}

fn log_prob(line: usize, tok: &str) -> Result<f64, ModelError> {
    let v: f64 = tok.parse().map_err(|_| syntax(line, format!("bad log-probability {tok:?}")))?;
    if !v.is_finite() {
        return Err(syntax(line, format!("non-finite log-probability {tok:?}")));
    }
    if v > 0.0 {
        return Err(ModelError::PositiveLogProb { line, value: v });
    }
    Ok(v)
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let toks: Vec<&str> = l.split('#').next().unwrap_or("").split_whitespace().collect();
        (!toks.is_empty()).then_some((i + 1, toks))
    })
}

#[derive(Debug, Clone, Default)]
pub struct BigramModel {
    scores: HashMap<String, HashMap<String, LogScore>>,
    default_score: LogScore,
}

impl BigramModel {
    /// A model that scores every transition 0.
    pub fn flat() -> Self {
        BigramModel::default()
    }

    pub fn with_default(default_score: LogScore) -> Self {
        BigramModel { scores: HashMap::new(), default_score }
    }

    pub fn set(&mut self, left: Option<&str>, right: &str, score: LogScore) {
        self.scores
            .entry(left.unwrap_or(SENTENCE_BEGIN).to_string())
            .or_default()
            .insert(right.to_string(), score);
    }

    pub fn default_score(&self) -> LogScore {
        self.default_score
    }

    /// Transition score from `left` (`None` = sentence begin) to `right`.
    pub fn trans(&self, left: Option<&str>, right: &str) -> LogScore {
        self.scores
            .get(left.unwrap_or(SENTENCE_BEGIN))
            .and_then(|m| m.get(right))
            .copied()
            .unwrap_or(self.default_score)
    }

    /// Parses `BIGRAM <left|<s>> <right> <logprob>` and `DEFAULT <logprob>`
    /// lines. Without a `DEFAULT` line unseen pairs score 0.
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let mut m = BigramModel::flat();
        for (line, toks) in content_lines(text) {
            match toks.as_slice() {
                ["BIGRAM", l, r, lp] => {
                    let lp = log_prob(line, lp)?;
                    m.scores.entry(l.to_string()).or_default().insert(r.to_string(), lp);
                }
                ["DEFAULT", lp] => m.default_score = log_prob(line, lp)?,
                _ => return Err(syntax(line, "expected BIGRAM <l> <r> <logprob> or DEFAULT <logprob>")),
            }
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Boundary {
    /// No boundary.
    B0,
    /// Phrase boundary.
    B2,
    /// Sentence boundary.
    B3,
    /// Real break.
    B9,
}

impl Boundary {
    pub const ALL: [Boundary; 4] = [Boundary::B0, Boundary::B2, Boundary::B3, Boundary::B9];

    fn index(self) -> usize {
        match self {
            Boundary::B0 => 0,
            Boundary::B2 => 1,
            Boundary::B3 => 2,
            Boundary::B9 => 3,
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::B0 => "B0",
            Boundary::B2 => "B2",
            Boundary::B3 => "B3",
            Boundary::B9 => "B9",
        })
    }
}

impl FromStr for Boundary {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "B0" => Ok(Boundary::B0),
            "B2" => Ok(Boundary::B2),
            "B3" => Ok(Boundary::B3),
            "B9" => Ok(Boundary::B9),
            _ => Err(format!("unknown boundary class {s:?}")),
        }
    }
}

/// A boundary-class distribution over the frames `[from, to)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProsodyHypothesis {
    pub from: Frame,
    pub to: Frame,
    /// Probabilities for B0, B2, B3, B9 in that order.
    pub probs: [f64; 4],
}

impl ProsodyHypothesis {
    pub fn new(from: Frame, to: Frame, probs: [f64; 4]) -> Result<Self, ModelError> {
        let bad = |msg: &str| ModelError::BadInterval { from, to, msg: msg.to_string() };
        if from >= to {
            return Err(bad("start must precede end"));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(bad("probabilities must lie in [0, 1]"));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(bad(&format!("probabilities sum to {sum}, not 1")));
        }
        Ok(ProsodyHypothesis { from, to, probs })
    }

    pub fn contains(&self, frame: Frame) -> bool {
        self.from <= frame && frame < self.to
    }

    pub fn prob(&self, b: Boundary) -> f64 {
        self.probs[b.index()]
    }
}

/// Rejects any pair of intervals sharing a frame.
pub fn check_non_overlapping(hyps: &[ProsodyHypothesis]) -> Result<(), ModelError> {
    let mut sorted: Vec<&ProsodyHypothesis> = hyps.iter().collect();
    sorted.sort_by_key(|h| (h.from, h.to));
    for w in sorted.windows(2) {
        if w[1].from < w[0].to {
            return Err(ModelError::Overlapping(w[0].from, w[0].to, w[1].from, w[1].to));
        }
    }
    Ok(())
}

/// Boundary log-probabilities carried by a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProsodyAttribute {
    pub log_probs: [LogScore; 4],
}

impl Default for ProsodyAttribute {
    fn default() -> Self {
        ProsodyAttribute::neutral()
    }
}

impl ProsodyAttribute {
    /// No boundary with certainty.
    pub fn neutral() -> Self {
        ProsodyAttribute { log_probs: [0.0, LOG_FLOOR, LOG_FLOOR, LOG_FLOOR] }
    }

    pub fn from_hypothesis(h: &ProsodyHypothesis) -> Self {
        let lp = |p: f64| if p > 0.0 { p.ln() } else { LOG_FLOOR };
        ProsodyAttribute { log_probs: h.probs.map(lp) }
    }

    /// Attribute for a vertex at `frame`: from the unique enclosing
    /// interval, neutral if none encloses it.
    pub fn for_frame(frame: Frame, hyps: &[ProsodyHypothesis]) -> Result<Self, ModelError> {
        let mut enclosing = hyps.iter().filter(|h| h.contains(frame));
        match (enclosing.next(), enclosing.next()) {
            (None, _) => Ok(ProsodyAttribute::neutral()),
            (Some(h), None) => Ok(ProsodyAttribute::from_hypothesis(h)),
            (Some(a), Some(b)) => Err(ModelError::Overlapping(a.from, a.to, b.from, b.to)),
        }
    }

    pub fn log_prob(&self, b: Boundary) -> LogScore {
        self.log_probs[b.index()]
    }
}

#[derive(Debug, Clone, Default)]
pub struct CategoryTrigram {
    category_of: HashMap<String, String>,
    scores: HashMap<String, HashMap<String, [Option<LogScore>; 4]>>,
    default_score: LogScore,
}

impl CategoryTrigram {
    pub fn new(default_score: LogScore) -> Self {
        CategoryTrigram { default_score, ..Default::default() }
    }

    pub fn set_category(&mut self, key: &str, cat: &str) {
        self.category_of.insert(key.to_string(), cat.to_string());
    }

    pub fn set(&mut self, left: &str, b: Boundary, right: &str, score: LogScore) {
        self.scores.entry(left.to_string()).or_default().entry(right.to_string()).or_default()[b.index()] = Some(score);
    }

    pub fn category(&self, key: &str) -> &str {
        self.category_of.get(key).map(String::as_str).unwrap_or(CATCH_ALL)
    }

    pub fn score(&self, left_cat: &str, b: Boundary, right_cat: &str) -> LogScore {
        self.scores
            .get(left_cat)
            .and_then(|m| m.get(right_cat))
            .and_then(|s| s[b.index()])
            .unwrap_or(self.default_score)
    }

    /// Parses `CAT <key> <category>`, `TRI <cat> <B0|B2|B3|B9> <cat> <logprob>`
    /// and `DEFAULT <logprob>` lines. Without a `DEFAULT` line unseen
    /// triples score 0.
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let mut t = CategoryTrigram::new(0.0);
        for (line, toks) in content_lines(text) {
            match toks.as_slice() {
                ["CAT", key, cat] => t.set_category(key, cat),
                ["TRI", l, b, r, lp] => {
                    let b: Boundary = b.parse().map_err(|e: String| syntax(line, e))?;
                    let lp = log_prob(line, lp)?;
                    t.set(l, b, r, lp);
                }
                ["DEFAULT", lp] => t.default_score = log_prob(line, lp)?,
                _ => return Err(syntax(line, "expected CAT, TRI or DEFAULT")),
            }
        }
        Ok(t)
    }
}

/// Best combination of a boundary class at the vertex and the trigram score
/// of `(cat(left), boundary, cat(right))`.
pub fn prosody_trans(attr: &ProsodyAttribute, left: &str, right: &str, t: &CategoryTrigram) -> LogScore {
    let (lc, rc) = (t.category(left), t.category(right));
    Boundary::ALL
        .iter()
        .map(|&b| attr.log_prob(b) + t.score(lc, b, rc))
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn bigram_lookup_and_backoff() {
        let m = BigramModel::parse("BIGRAM <s> we -0.7\nBIGRAM we we 0.0\nDEFAULT -5.0").unwrap();
        assert_eq!(m.trans(None, "we"), -0.7);
        assert_eq!(m.trans(Some("we"), "meet"), -5.0);
        assert_eq!(m.trans(Some("we"), "we"), 0.0);
    }

    #[test]
    fn bigram_file_errors() {
        assert!(matches!(BigramModel::parse("BIGRAM a b 0.3"), Err(ModelError::PositiveLogProb { line: 1, .. })));
        assert!(matches!(BigramModel::parse("\nBIGRAM a b"), Err(ModelError::Syntax { line: 2, .. })));
    }

    #[test]
    fn neutral_attribute_reduces_to_b0_trigram() {
        let mut t = CategoryTrigram::new(-3.0);
        t.set_category("we", "C1");
        t.set_category("meet", "C2");
        t.set("C1", Boundary::B0, "C2", -0.1);
        assert!(close(prosody_trans(&ProsodyAttribute::neutral(), "we", "meet", &t), -0.1));
    }

    #[test]
    fn uniform_attribute_ties() {
        let h = ProsodyHypothesis::new(0, 5, [0.25; 4]).unwrap();
        let t = CategoryTrigram::new(-1.0);
        let got = prosody_trans(&ProsodyAttribute::from_hypothesis(&h), "a", "b", &t);
        assert!(close(got, 0.25f64.ln() - 1.0));
        assert!(close(got, -2.386294361119891));
    }

    #[test]
    fn certain_boundary() {
        let h = ProsodyHypothesis::new(0, 5, [0.0, 0.0, 1.0, 0.0]).unwrap();
        let mut t = CategoryTrigram::new(-4.0);
        t.set(CATCH_ALL, Boundary::B3, CATCH_ALL, 0.0);
        assert_eq!(prosody_trans(&ProsodyAttribute::from_hypothesis(&h), "x", "y", &t), 0.0);
    }

    #[test]
    fn attach_by_enclosing_interval() {
        let hyps = vec![ProsodyHypothesis::new(9, 11, [0.1, 0.6, 0.2, 0.1]).unwrap()];
        let a = ProsodyAttribute::for_frame(10, &hyps).unwrap();
        let want = [0.1f64.ln(), 0.6f64.ln(), 0.2f64.ln(), 0.1f64.ln()];
        assert!(a.log_probs.iter().zip(want).all(|(x, y)| close(*x, y)));
        assert_eq!(ProsodyAttribute::for_frame(50, &hyps).unwrap(), ProsodyAttribute::neutral());

        let overlapping = vec![hyps[0].clone(), ProsodyHypothesis::new(10, 12, [1.0, 0.0, 0.0, 0.0]).unwrap()];
        assert!(matches!(ProsodyAttribute::for_frame(10, &overlapping), Err(ModelError::Overlapping(..))));
        assert!(check_non_overlapping(&overlapping).is_err());
        assert!(check_non_overlapping(&hyps).is_ok());
    }

    #[test]
    fn interval_validation() {
        assert!(ProsodyHypothesis::new(5, 5, [1.0, 0.0, 0.0, 0.0]).is_err());
        assert!(ProsodyHypothesis::new(0, 5, [0.5, 0.2, 0.2, 0.2]).is_err());
    }

    #[test]
    fn trigram_file() {
        let t = CategoryTrigram::parse("CAT we PRON\nTRI PRON B3 PRON -9.5\nDEFAULT -0.5").unwrap();
        assert_eq!(t.score("PRON", Boundary::B3, "PRON"), -9.5);
        assert_eq!(t.score("PRON", Boundary::B0, "PRON"), -0.5);
        assert_eq!(t.category("unknown"), CATCH_ALL);
        assert!(CategoryTrigram::parse("TRI a B7 b -1").is_err());
    }

    proptest! {
        #[test]
        fn prosody_trans_monotone_in_trigram(
            probs in proptest::array::uniform4(0.01f64..1.0),
            scores in proptest::array::uniform4(-10.0f64..0.0),
            which in 0usize..4,
            bump in 0.0f64..5.0,
        ) {
            let sum: f64 = probs.iter().sum();
            let probs = probs.map(|p| p / sum);
            let h = ProsodyHypothesis { from: 0, to: 1, probs };
            let attr = ProsodyAttribute::from_hypothesis(&h);
            let mut t = CategoryTrigram::new(-20.0);
            for (b, s) in Boundary::ALL.iter().zip(scores) {
                t.set(CATCH_ALL, *b, CATCH_ALL, s);
            }
            let before = prosody_trans(&attr, "l", "r", &t);
            let b = Boundary::ALL[which];
            t.set(CATCH_ALL, b, CATCH_ALL, scores[which] + bump);
            prop_assert!(prosody_trans(&attr, "l", "r", &t) >= before);
        }

        #[test]
        fn bigram_never_positive(lp in -20.0f64..=0.0, default in -20.0f64..=0.0) {
            let mut m = BigramModel::with_default(default);
            m.set(Some("a"), "b", lp);
            prop_assert!(m.trans(Some("a"), "b") <= 0.0);
            prop_assert!(m.trans(Some("b"), "a") <= 0.0);
        }
    }
}
