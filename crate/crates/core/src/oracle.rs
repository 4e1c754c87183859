//! Exhaustive reference parser for small inputs. Computes every
//! `(category, from, to)` item of a lattice by bottom-up Viterbi without
//! pruning, for checking the incremental engine against.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::decoder::Lattice;
use crate::engine::{Chart, RuleRef};
use crate::grammar::{CatId, Grammar, RuleId};
use crate::models::BigramModel;
use crate::types::{Frame, LogScore};

pub const MAX_FRAMES: Frame = 32;
pub const MAX_RULES: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("input too large for the exhaustive parser: {frames} frames (max {MAX_FRAMES}), {rules} rules (max {MAX_RULES})")]
    TooLarge { frames: Frame, rules: usize },
    #[error("lattice is not linear at frame {0}")]
    NotLinear(Frame),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Derivation {
    Word { key: String },
    Rule { rule: RuleId, children: Vec<OracleItem> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleItem {
    pub cat: CatId,
    pub category: String,
    pub from: Frame,
    pub to: Frame,
    /// Best `inside_grammar + inside_acoustic` (plus bigram in the linear
    /// mode) over all derivations.
    pub score: LogScore,
    /// Whether top-down prediction from the start category reaches it.
    /// Lexical items are always reachable.
    pub predicted: bool,
    pub lexical: bool,
    pub tree: Derivation,
}

type Span = (CatId, Frame, Frame);

#[derive(Debug, Clone)]
enum Back {
    Word(String),
    Rule(RuleId, Vec<Span>),
}

struct Table<'a> {
    grammar: &'a Grammar,
    items: BTreeMap<Span, (LogScore, Back)>,
    /// Best prefix of rule `r` covering its first `d` daughters over `[i, j]`.
    dotted: BTreeMap<(RuleId, usize, Frame, Frame), (LogScore, Vec<Span>)>,
    /// Word ending at each frame on a linear lattice, for bigram context.
    before: Option<(Vec<Option<String>>, &'a BigramModel)>,
}

impl Table<'_> {
    fn relax(&mut self, span: Span, score: LogScore, back: Back) -> bool {
        match self.items.get(&span) {
            Some((old, _)) if *old >= score => false,
            _ => {
                self.items.insert(span, (score, back));
                true
            }
        }
    }

    /// Score a daughter contributes, including the bigram transition into
    /// it when it is a word.
    fn daughter(&self, span: Span) -> Option<LogScore> {
        let (score, back) = self.items.get(&span)?;
        let trans = match (back, &self.before) {
            (Back::Word(key), Some((before, bigram))) => bigram.trans(before[span.1 as usize].as_deref(), key),
            _ => 0.0,
        };
        Some(score + trans)
    }

    fn fill_span(&mut self, i: Frame, j: Frame) {
        let g = self.grammar;
        // Rules with two or more daughters: all pieces are shorter spans.
        for (ri, r) in g.rules().iter().enumerate() {
            let rid = RuleId(ri as u32);
            let n = r.rhs.len();
            if n < 2 {
                continue;
            }
            let best = self.extend(rid, n, i, j);
            if let Some((s, kids)) = best {
                self.relax((r.lhs, i, j), s + r.log_prob, Back::Rule(rid, kids));
            }
        }
        // Unary rules to a fixpoint; scores are <= 0 so this terminates.
        loop {
            let mut changed = false;
            for (ri, r) in g.rules().iter().enumerate() {
                if r.rhs.len() != 1 {
                    continue;
                }
                let span = (r.rhs[0], i, j);
                if let Some(s) = self.daughter(span) {
                    changed |= self.relax((r.lhs, i, j), s + r.log_prob, Back::Rule(RuleId(ri as u32), vec![span]));
                }
            }
            if !changed {
                break;
            }
        }
        for (ri, r) in g.rules().iter().enumerate() {
            let rid = RuleId(ri as u32);
            for d in 1..r.rhs.len() {
                if let Some(best) = self.extend(rid, d, i, j) {
                    self.dotted.insert((rid, d, i, j), best);
                }
            }
        }
    }

    /// Best way for the first `d` daughters of `rid` to cover `[i, j]`.
    fn extend(&self, rid: RuleId, d: usize, i: Frame, j: Frame) -> Option<(LogScore, Vec<Span>)> {
        let cat = self.grammar.rule(rid).rhs[d - 1];
        if d == 1 {
            return self.daughter((cat, i, j)).map(|s| (s, vec![(cat, i, j)]));
        }
        let mut best: Option<(LogScore, Vec<Span>)> = None;
        for k in i + 1..j {
            let Some((prefix, kids)) = self.dotted.get(&(rid, d - 1, i, k)) else {
                continue;
            };
            let Some(s) = self.daughter((cat, k, j)) else {
                continue;
            };
            let total = prefix + s;
            if best.as_ref().is_none_or(|(b, _)| total > *b) {
                let mut kids = kids.clone();
                kids.push((cat, k, j));
                best = Some((total, kids));
            }
        }
        best
    }

    fn tree(&self, span: Span, predicted: &BTreeSet<Span>) -> OracleItem {
        let (score, back) = &self.items[&span];
        let tree = match back {
            Back::Word(key) => Derivation::Word { key: key.clone() },
            Back::Rule(rid, kids) => Derivation::Rule {
                rule: *rid,
                children: kids.iter().map(|&k| self.tree(k, predicted)).collect(),
            },
        };
        let lexical = matches!(back, Back::Word(_));
        OracleItem {
            cat: span.0,
            category: self.grammar.cat_name(span.0).to_string(),
            from: span.1,
            to: span.2,
            score: *score,
            predicted: lexical || predicted.contains(&span),
            lexical,
            tree,
        }
    }
}

fn check_size(lattice: &Lattice, grammar: &Grammar) -> Result<(), OracleError> {
    let rules = grammar.rules().len();
    if lattice.frame_count > MAX_FRAMES || rules > MAX_RULES {
        return Err(OracleError::TooLarge { frames: lattice.frame_count, rules });
    }
    Ok(())
}

fn run(lattice: &Lattice, grammar: &Grammar, bigram: Option<(Vec<Option<String>>, &BigramModel)>) -> Vec<OracleItem> {
    let end = lattice.utterance_end();
    let mut words_at: BTreeMap<(Frame, Frame), Vec<String>> = BTreeMap::new();
    let mut acoustic: BTreeMap<(Frame, Frame, String), LogScore> = BTreeMap::new();
    for h in &lattice.hypotheses {
        words_at.entry((h.from, h.to)).or_default().push(h.key.clone());
        acoustic.insert((h.from, h.to, h.key.clone()), h.score);
    }
    let mut t = Table {
        grammar,
        items: BTreeMap::new(),
        dotted: BTreeMap::new(),
        before: bigram,
    };
    for len in 1..=end {
        for i in 0..=end - len {
            let j = i + len;
            // Lexical items first, with their acoustic scores.
            if let Some(keys) = words_at.get(&(i, j)) {
                for key in keys {
                    for &lid in grammar.lex_entries(key) {
                        let e = grammar.lex(lid);
                        let score = e.log_prob + acoustic[&(i, j, key.clone())];
                        t.relax((e.cat, i, j), score, Back::Word(key.clone()));
                    }
                }
            }
            t.fill_span(i, j);
        }
    }
    let predicted = reachable(&t, end);
    t.items.keys().map(|&span| t.tree(span, &predicted)).collect()
}

/// Phrasal items an Earley-style top-down predictor would build: those
/// whose category is a left corner of something expected where they start.
fn reachable(t: &Table<'_>, end: Frame) -> BTreeSet<Span> {
    let g = t.grammar;
    let mut expected: Vec<BTreeSet<CatId>> = vec![BTreeSet::new(); end as usize + 1];
    expected[0].extend(g.left_corners(g.start()).iter().copied());
    for i in 1..=end {
        let mut next = BTreeSet::new();
        for (&(rid, d, from, to), _) in &t.dotted {
            let r = g.rule(rid);
            if to == i && expected[from as usize].contains(&r.lhs) {
                next.insert(r.rhs[d]);
            }
        }
        for c in next {
            expected[i as usize].extend(g.left_corners(c).iter().copied());
        }
    }
    t.items.keys().filter(|&&(c, i, _)| expected[i as usize].contains(&c)).copied().collect()
}

/// Every item over the lattice with its Viterbi score
/// (`inside_grammar + inside_acoustic`). No bigram or prosody.
pub fn exhaustive_parse(lattice: &Lattice, grammar: &Grammar) -> Result<Vec<OracleItem>, OracleError> {
    check_size(lattice, grammar)?;
    Ok(run(lattice, grammar, None))
}

/// Like [`exhaustive_parse`], adding bigram transitions for every word a
/// phrasal item covers. Only defined for linear lattices, where each word's
/// left neighbour is unique. Lexical items carry no transition: it is
/// charged when the word is attached.
pub fn exhaustive_parse_bigram(
    lattice: &Lattice,
    grammar: &Grammar,
    bigram: &BigramModel,
) -> Result<Vec<OracleItem>, OracleError> {
    check_size(lattice, grammar)?;
    let end = lattice.utterance_end();
    let mut before: Vec<Option<String>> = vec![None; end as usize + 1];
    let mut frame = 0;
    let mut starts: BTreeMap<Frame, usize> = BTreeMap::new();
    for h in &lattice.hypotheses {
        *starts.entry(h.from).or_default() += 1;
    }
    for h in &lattice.hypotheses {
        if h.from != frame || starts[&h.from] != 1 {
            return Err(OracleError::NotLinear(h.from));
        }
        before[h.to as usize] = Some(h.key.clone());
        frame = h.to;
    }
    Ok(run(lattice, grammar, Some((before, bigram))))
}

/// Best score per `(category, from, to)`.
pub type ItemScores = BTreeMap<(CatId, Frame, Frame), LogScore>;

/// The oracle items a top-down engine is expected to build.
pub fn predicted_scores(items: &[OracleItem]) -> ItemScores {
    items.iter().filter(|i| i.predicted).map(|i| ((i.cat, i.from, i.to), i.score)).collect()
}

/// Best weighted inside score of the chart's passive edges per
/// `(category, from, end)`, leaving out the goal edges.
pub fn chart_scores(chart: &Chart) -> ItemScores {
    let mut out = ItemScores::new();
    for e in chart.edges().iter().filter(|e| e.is_passive() && e.rule != RuleRef::Goal) {
        for &end in &e.to {
            let s = e.scores.inside_at(end, chart.weights()).expect("end frames carry scores");
            let slot = out.entry((e.cat, e.from, end)).or_insert(f64::NEG_INFINITY);
            *slot = slot.max(s);
        }
    }
    out
}

/// Differences between two item maps, as readable lines.
pub fn diff_scores(grammar: &Grammar, expected: &ItemScores, got: &ItemScores, tolerance: f64) -> Vec<String> {
    let name = |k: &(CatId, Frame, Frame)| format!("({},{},{})", grammar.cat_name(k.0), k.1, k.2);
    let mut out = Vec::new();
    for (k, e) in expected {
        match got.get(k) {
            None => out.push(format!("missing {} {e}", name(k))),
            Some(g) if (g - e).abs() > tolerance => out.push(format!("score {} expected {e} got {g}", name(k))),
            _ => {}
        }
    }
    for (k, g) in got {
        if !expected.contains_key(k) {
            out.push(format!("extra {} {g}", name(k)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::decoder::load_lattice;

    fn find<'a>(items: &'a [OracleItem], cat: &str, from: Frame, to: Frame) -> &'a OracleItem {
        items.iter().find(|i| i.category == cat && i.from == from && i.to == to).unwrap()
    }

    #[test]
    fn toy_items() {
        let items = exhaustive_parse(&corpus::toy_lattice(), &corpus::toy_grammar()).unwrap();
        assert!((find(&items, "NP", 0, 10).score - -5.51).abs() < 1e-9);
        assert!((find(&items, "VP", 10, 30).score - -12.69).abs() < 1e-9);
        let s = find(&items, "S", 0, 30);
        assert!((s.score - -18.20).abs() < 1e-9);
        assert!(s.predicted);
        let Derivation::Rule { children, .. } = &s.tree else { panic!() };
        assert_eq!(children.len(), 2);
    }

    #[test]
    fn unpredicted_items_are_flagged() {
        // "meet" at frame 0 yields a VP nobody expects there.
        let lat = load_lattice("FRAMES 10\nWORD meet 0 10 -1\n").unwrap();
        let items = exhaustive_parse(&lat, &corpus::toy_grammar()).unwrap();
        assert!(!find(&items, "VP", 0, 10).predicted);
        assert!(find(&items, "v", 0, 10).predicted);
    }

    #[test]
    fn empty_and_oversized() {
        let g = corpus::toy_grammar();
        assert!(exhaustive_parse(&load_lattice("FRAMES 5\n").unwrap(), &g).unwrap().is_empty());
        let big = load_lattice("FRAMES 40\nWORD we 0 40 -1\n").unwrap();
        assert!(matches!(exhaustive_parse(&big, &g), Err(OracleError::TooLarge { frames: 40, .. })));
    }

    #[test]
    fn bigram_mode() {
        let items =
            exhaustive_parse_bigram(&corpus::toy_lattice(), &corpus::toy_grammar(), &corpus::toy_bigram()).unwrap();
        assert!((find(&items, "S", 0, 30).score - -20.5).abs() < 1e-9);
        assert!((find(&items, "n", 0, 10).score - -5.0).abs() < 1e-9);
        let branching = load_lattice("FRAMES 30\nWORD we 0 10 -5\nWORD we 0 11 -5\n").unwrap();
        assert!(matches!(
            exhaustive_parse_bigram(&branching, &corpus::toy_grammar(), &corpus::toy_bigram()),
            Err(OracleError::NotLinear(0))
        ));
    }

    #[test]
    fn order_independent() {
        let g = corpus::toy_grammar();
        let a = load_lattice("FRAMES 30\nWORD we 0 10 -5\nWORD meet 10 30 -12\nWORD you 0 10 -4\n").unwrap();
        let b = load_lattice("FRAMES 30\nWORD you 0 10 -4\nWORD meet 10 30 -12\nWORD we 0 10 -5\n").unwrap();
        assert_eq!(exhaustive_parse(&a, &g).unwrap(), exhaustive_parse(&b, &g).unwrap());
    }
}
