//! Lattice files and a frame-synchronous emission stream standing in for
//! the forward-pass word recognizer: at frame `t` it hands out exactly the
//! hypotheses ending at `t`, optionally filtered by top-down predictions.
//!
//! Lattice files are line based:
//!
//! ```text
//! FRAMES 30
//! WORD we 0 10 -5.0
//! WORD meet 10 30 -12.0
//! PROSODY 9 11 0.1 0.6 0.2 0.1
//! ```
//!
//! `FRAMES` must come first. Repeated `WORD` lines for the same
//! `(key, from, to)` are merged, keeping the better score.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::models::{check_non_overlapping, BigramModel, ModelError, ProsodyHypothesis};
use crate::types::{Frame, WordHypothesis};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatticeError {
    #[error("line {line}: syntax error: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: frame {frame} outside [0, {frame_count}]")]
    FrameOutOfRange { line: usize, frame: Frame, frame_count: Frame },
    #[error("line {line}: {msg}")]
    Invalid { line: usize, msg: String },
    #[error(transparent)]
    Prosody(#[from] ModelError),
    #[error("emission out of order: expected frame {expected}, got {got}")]
    OutOfOrder { expected: Frame, got: Frame },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub frame_count: Frame,
    /// Sorted by `(to, from, key)`.
    pub hypotheses: Vec<WordHypothesis>,
    pub prosody: Vec<ProsodyHypothesis>,
}

impl Lattice {
    /// Builds a validated lattice from parts, establishing the ordering
    /// invariant.
    pub fn new(
        frame_count: Frame,
        hypotheses: Vec<WordHypothesis>,
        prosody: Vec<ProsodyHypothesis>,
    ) -> Result<Self, LatticeError> {
        let mut merged: BTreeMap<(Frame, Frame, String), f64> = BTreeMap::new();
        for (i, h) in hypotheses.into_iter().enumerate() {
            validate_word(i + 1, &h, frame_count)?;
            let slot = merged.entry((h.to, h.from, h.key)).or_insert(f64::NEG_INFINITY);
            *slot = slot.max(h.score);
        }
        for p in &prosody {
            if p.to > frame_count {
                return Err(LatticeError::FrameOutOfRange { line: 0, frame: p.to, frame_count });
            }
        }
        check_non_overlapping(&prosody)?;
        let mut prosody = prosody;
        prosody.sort_by_key(|p| (p.from, p.to));
        let hypotheses = merged
            .into_iter()
            .map(|((to, from, key), score)| WordHypothesis { from, to, key, score })
            .collect();
        Ok(Lattice { frame_count, hypotheses, prosody })
    }

    pub fn parse(text: &str) -> Result<Self, LatticeError> {
        load_lattice(text)
    }

    /// Last frame at which any hypothesis ends; 0 for an empty lattice.
    pub fn utterance_end(&self) -> Frame {
        self.hypotheses.iter().map(|h| h.to).max().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    /// Serializes back to the lattice file format.
    pub fn to_text(&self) -> String {
        let mut out = format!("FRAMES {}\n", self.frame_count);
        for h in &self.hypotheses {
            out.push_str(&format!("WORD {} {} {} {}\n", h.key, h.from, h.to, h.score));
        }
        for p in &self.prosody {
            out.push_str(&format!(
                "PROSODY {} {} {} {} {} {}\n",
                p.from, p.to, p.probs[0], p.probs[1], p.probs[2], p.probs[3]
            ));
        }
        out
    }
}

fn validate_word(line: usize, h: &WordHypothesis, frame_count: Frame) -> Result<(), LatticeError> {
    for f in [h.from, h.to] {
        if f > frame_count {
            return Err(LatticeError::FrameOutOfRange { line, frame: f, frame_count });
        }
    }
    if h.from >= h.to {
        return Err(LatticeError::Invalid { line, msg: format!("word {} ends at {} before it starts at {}", h.key, h.to, h.from) });
    }
    if !h.score.is_finite() || h.score > 0.0 {
        return Err(LatticeError::Invalid { line, msg: format!("acoustic score {} must be finite and <= 0", h.score) });
    }
    Ok(())
}

pub fn load_lattice(text: &str) -> Result<Lattice, LatticeError> {
    let syntax = |line: usize, msg: &str| LatticeError::Syntax { line, msg: msg.to_string() };
    let mut frame_count: Option<Frame> = None;
    let mut words = Vec::new();
    let mut prosody = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let toks: Vec<&str> = raw.split('#').next().unwrap_or("").split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        let num = |s: &str| -> Result<Frame, LatticeError> {
            s.parse().map_err(|_| syntax(line, &format!("bad frame number {s:?}")))
        };
        let real = |s: &str| -> Result<f64, LatticeError> {
            s.parse().map_err(|_| syntax(line, &format!("bad number {s:?}")))
        };
        match (toks[0], frame_count) {
            ("FRAMES", None) if toks.len() == 2 => frame_count = Some(num(toks[1])?),
            ("FRAMES", _) => return Err(syntax(line, "FRAMES must appear once, as the first line, with one value")),
            (_, None) => return Err(syntax(line, "first line must be FRAMES <n>")),
            ("WORD", Some(n)) => {
                let [_, key, from, to, score] = toks[..] else {
                    return Err(syntax(line, "expected WORD <key> <from> <to> <logscore>"));
                };
                let h = WordHypothesis::new(num(from)?, num(to)?, key, real(score)?);
                validate_word(line, &h, n)?;
                words.push(h);
            }
            ("PROSODY", Some(n)) => {
                let [_, from, to, p0, p2, p3, p9] = toks[..] else {
                    return Err(syntax(line, "expected PROSODY <from> <to> <pB0> <pB2> <pB3> <pB9>"));
                };
                let (from, to) = (num(from)?, num(to)?);
                if to > n {
                    return Err(LatticeError::FrameOutOfRange { line, frame: to, frame_count: n });
                }
                prosody.push(ProsodyHypothesis::new(from, to, [real(p0)?, real(p2)?, real(p3)?, real(p9)?])?);
            }
            (other, _) => return Err(syntax(line, &format!("unknown directive {other:?}"))),
        }
    }
    let frame_count = frame_count.ok_or_else(|| syntax(0, "missing FRAMES line"))?;
    Lattice::new(frame_count, words, prosody)
}

/// Replays a lattice frame by frame.
#[derive(Debug, Clone)]
pub struct EmissionStream<'a> {
    lattice: &'a Lattice,
    cursor: Frame,
    next: usize,
    filter: Option<BTreeSet<Arc<str>>>,
    filter_by_start: HashMap<Frame, BTreeSet<Arc<str>>>,
}

impl<'a> EmissionStream<'a> {
    pub fn new(lattice: &'a Lattice) -> Self {
        EmissionStream { lattice, cursor: 0, next: 0, filter: None, filter_by_start: HashMap::new() }
    }

    pub fn cursor(&self) -> Frame {
        self.cursor
    }

    pub fn lattice(&self) -> &'a Lattice {
        self.lattice
    }

    /// Restricts all subsequent emissions to `keys`, until replaced.
    pub fn set_prediction(&mut self, keys: BTreeSet<Arc<str>>) {
        self.filter = Some(keys);
    }

    /// Restricts subsequent emissions of words starting at `start` to
    /// `keys`. Takes precedence over the global filter for those words.
    pub fn set_prediction_at(&mut self, start: Frame, keys: BTreeSet<Arc<str>>) {
        self.filter_by_start.insert(start, keys);
    }

    pub fn clear_prediction(&mut self) {
        self.filter = None;
        self.filter_by_start.clear();
    }

    fn admits(&self, h: &WordHypothesis) -> bool {
        match self.filter_by_start.get(&h.from).or(self.filter.as_ref()) {
            Some(keys) => keys.contains(h.key.as_str()),
            None => true,
        }
    }

    /// Hypotheses ending at `t`, after filtering. `t` must equal the cursor.
    pub fn emit_frame(&mut self, t: Frame) -> Result<Vec<WordHypothesis>, LatticeError> {
        if t != self.cursor {
            return Err(LatticeError::OutOfOrder { expected: self.cursor, got: t });
        }
        let hyps = &self.lattice.hypotheses;
        let start = self.next;
        while self.next < hyps.len() && hyps[self.next].to == t {
            self.next += 1;
        }
        let out = hyps[start..self.next].iter().filter(|h| self.admits(h)).cloned().collect();
        self.cursor += 1;
        Ok(out)
    }

    /// Prosody intervals delivered in cycle `t`: those starting at `t`.
    pub fn emit_prosody(&self, t: Frame) -> Vec<ProsodyHypothesis> {
        self.lattice.prosody.iter().filter(|p| p.from == t).cloned().collect()
    }
}

/// Best word sequence through the lattice by acoustic plus bigram score,
/// ignoring the grammar: what the recognizer alone would output. Paths must
/// start at frame 0; the path reaching the latest end frame wins.
pub fn best_path(lattice: &Lattice, bigram: &BigramModel) -> Vec<String> {
    let hyps = &lattice.hypotheses;
    let mut best: Vec<Option<(f64, Option<usize>)>> = vec![None; hyps.len()];
    let mut ending_at: HashMap<Frame, Vec<usize>> = HashMap::new();
    for (i, h) in hyps.iter().enumerate() {
        let mut cand: Option<(f64, Option<usize>)> = None;
        if h.from == 0 {
            cand = Some((h.score + bigram.trans(None, &h.key), None));
        }
        for &j in ending_at.get(&h.from).map(Vec::as_slice).unwrap_or(&[]) {
            if let Some((s, _)) = best[j] {
                let v = s + bigram.trans(Some(&hyps[j].key), &h.key) + h.score;
                if cand.map_or(true, |(c, _)| v > c) {
                    cand = Some((v, Some(j)));
                }
            }
        }
        best[i] = cand;
        ending_at.entry(h.to).or_default().push(i);
    }
    let winner = (0..hyps.len())
        .filter_map(|i| best[i].map(|(s, _)| (hyps[i].to, s, i)))
        .max_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(b.2.cmp(&a.2)));
    let mut out = Vec::new();
    let mut cur = winner.map(|w| w.2);
    while let Some(i) = cur {
        out.push(hyps[i].key.clone());
        cur = best[i].and_then(|(_, prev)| prev);
    }
    out.reverse();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = "FRAMES 30\nWORD we 0 10 -5.0\nWORD meet 10 30 -12.0\n";

    #[test]
    fn parses_toy_lattice() {
        let l = Lattice::parse(TOY).unwrap();
        assert_eq!(l.frame_count, 30);
        assert_eq!(l.hypotheses, vec![WordHypothesis::new(0, 10, "we", -5.0), WordHypothesis::new(10, 30, "meet", -12.0)]);
        assert_eq!(l.utterance_end(), 30);
    }

    #[test]
    fn rejects_backwards_word() {
        let err = Lattice::parse("FRAMES 30\nWORD we 10 10 -5.0").unwrap_err();
        assert!(matches!(err, LatticeError::Invalid { line: 2, .. }));
        let err = Lattice::parse("FRAMES 30\nWORD we 10 31 -5.0").unwrap_err();
        assert!(matches!(err, LatticeError::FrameOutOfRange { line: 2, frame: 31, .. }));
        assert!(matches!(Lattice::parse("WORD we 0 1 -1"), Err(LatticeError::Syntax { line: 1, .. })));
    }

    #[test]
    fn reads_prosody_interval() {
        let l = Lattice::parse("FRAMES 30\nPROSODY 9 11 .1 .6 .2 .1").unwrap();
        assert_eq!(l.prosody.len(), 1);
        assert!((l.prosody[0].probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let err = Lattice::parse("FRAMES 30\nPROSODY 9 11 .1 .6 .2 .1\nPROSODY 10 12 1 0 0 0").unwrap_err();
        assert!(matches!(err, LatticeError::Prosody(ModelError::Overlapping(..))));
    }

    #[test]
    fn resorts_families() {
        let l = Lattice::parse("FRAMES 20\nWORD we 0 11 -5.2\nWORD x 3 10 -1\nWORD we 0 10 -5.0\nWORD we 0 10 -6.0").unwrap();
        let order: Vec<(Frame, Frame, &str, f64)> =
            l.hypotheses.iter().map(|h| (h.from, h.to, h.key.as_str(), h.score)).collect();
        assert_eq!(order, vec![(0, 10, "we", -5.0), (3, 10, "x", -1.0), (0, 11, "we", -5.2)]);
    }

    #[test]
    fn emits_by_end_frame() {
        let l = Lattice::parse(TOY).unwrap();
        let mut s = EmissionStream::new(&l);
        for t in 0..10 {
            assert!(s.emit_frame(t).unwrap().is_empty());
        }
        assert_eq!(s.emit_frame(10).unwrap(), vec![WordHypothesis::new(0, 10, "we", -5.0)]);
        assert!(matches!(s.emit_frame(12), Err(LatticeError::OutOfOrder { expected: 11, got: 12 })));
    }

    #[test]
    fn prediction_filter() {
        let l = Lattice::parse(TOY).unwrap();
        let mut s = EmissionStream::new(&l);
        s.set_prediction(["meet".into()].into_iter().collect());
        for t in 0..10 {
            s.emit_frame(t).unwrap();
        }
        assert!(s.emit_frame(10).unwrap().is_empty());

        let mut s = EmissionStream::new(&l);
        s.set_prediction(BTreeSet::new());
        let all: usize = (0..=30).map(|t| s.emit_frame(t).unwrap().len()).sum();
        assert_eq!(all, 0);

        let mut s = EmissionStream::new(&l);
        s.set_prediction(["we".into(), "meet".into()].into_iter().collect());
        let all: usize = (0..=30).map(|t| s.emit_frame(t).unwrap().len()).sum();
        assert_eq!(all, 2);
    }

    #[test]
    fn replay_is_deterministic() {
        let l = Lattice::parse("FRAMES 12\nWORD a 0 4 -1\nWORD b 0 4 -2\nWORD c 4 12 -3\nWORD a 0 5 -1.5").unwrap();
        let run = || {
            let mut s = EmissionStream::new(&l);
            (0..=12).map(|t| s.emit_frame(t).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn best_path_uses_bigram() {
        let l = Lattice::parse("FRAMES 20\nWORD a 0 10 -1\nWORD b 0 10 -1.5\nWORD c 10 20 -1").unwrap();
        let mut m = BigramModel::with_default(-1.0);
        m.set(Some("b"), "c", 0.0);
        assert_eq!(best_path(&l, &m), vec!["b", "c"]);
        assert_eq!(best_path(&l, &BigramModel::flat()), vec!["a", "c"]);
    }
}
