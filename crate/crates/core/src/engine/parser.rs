use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::Serialize;

use crate::decoder::{EmissionStream, Lattice};
use crate::grammar::{CatId, Grammar};
use crate::models::ProsodyHypothesis;
use crate::types::{Frame, WordHypothesis};

use super::agenda::{Agenda, AgendaStats};
use super::chart::{Chart, Edge, EdgeId, EdgeStats};
use super::ops::{self, Feed, StepKind};
use super::{Context, EngineError, Models, ParserConfig};

/// Tallies of what the popped agenda items turned into.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StepCounts {
    pub combined: u64,
    pub added: u64,
    pub quick_check_failed: u64,
    pub unifications: u64,
    pub unification_failed: u64,
}

impl StepCounts {
    pub fn record(&mut self, kind: StepKind) {
        match kind {
            StepKind::Combined { added, .. } => {
                self.combined += 1;
                self.added += added.is_some() as u64;
            }
            StepKind::QuickCheckFailed => self.quick_check_failed += 1,
            StepKind::UnificationFailed => self.unification_failed += 1,
            StepKind::Incompatible => {}
        }
        self.unifications += kind.unified() as u64;
    }

    pub fn merge(&mut self, o: &StepCounts) {
        self.combined += o.combined;
        self.added += o.added;
        self.quick_check_failed += o.quick_check_failed;
        self.unifications += o.unifications;
        self.unification_failed += o.unification_failed;
    }
}

/// Incremental parser: one `run_cycle` per frame.
#[derive(Debug)]
pub struct Parser<'g> {
    ctx: Context<'g>,
    chart: Chart,
    agenda: Agenda,
    results: Vec<EdgeId>,
    feed: Feed,
    counts: StepCounts,
}

impl<'g> Parser<'g> {
    /// Sets up `V_0` with the initial edge and its predictions. `prosody0`
    /// are the prosody intervals starting at frame 0.
    pub fn new(ctx: Context<'g>, prosody0: &[ProsodyHypothesis]) -> Result<Self, EngineError> {
        let mut feed = Feed::default();
        feed.add_prosody(prosody0);
        let attr = feed.attribute(&ctx, 0)?;
        let mut chart = Chart::new(ctx.grammar, ctx.config.weights, attr);
        let mut agenda = Agenda::new(ctx.config.beam_offset);
        ops::start(&ctx, &mut chart, &mut agenda)?;
        Ok(Parser { ctx, chart, agenda, results: Vec::new(), feed, counts: StepCounts::default() })
    }

    /// Processes frame `t`: creates `V_t`, feeds the words ending there and
    /// runs the agenda dry. Returns the results first reported in this
    /// cycle.
    pub fn run_cycle(
        &mut self,
        t: Frame,
        words: &[WordHypothesis],
        prosody: &[ProsodyHypothesis],
    ) -> Result<Vec<EdgeId>, EngineError> {
        let before = self.results.len();
        let ctx = self.ctx;
        ops::begin_cycle(&ctx, &mut self.chart, &mut self.agenda, &mut self.results, &mut self.feed, t, words, prosody)?;
        while let Some((_, kind)) = ops::step(&ctx, &mut self.chart, &mut self.agenda, &mut self.results)? {
            self.counts.record(kind);
        }
        Ok(self.results[before..].to_vec())
    }

    /// Categories expected by active edges ending at `V_t`.
    pub fn frontier(&self, t: Frame) -> BTreeSet<CatId> {
        frontier(&self.chart, t)
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn agenda_stats(&self) -> AgendaStats {
        self.agenda.stats()
    }

    pub fn counts(&self) -> StepCounts {
        self.counts
    }

    pub fn results(&self) -> &[EdgeId] {
        &self.results
    }

    pub fn finish(self, utterance_end: Frame) -> ParseResultSet {
        ParseResultSet::build(self.ctx.grammar, self.chart, &self.results, utterance_end, self.agenda.stats(), self.counts)
    }
}

pub(crate) fn frontier(chart: &Chart, t: Frame) -> BTreeSet<CatId> {
    chart.vertex(t).active_in.iter().filter_map(|&id| chart.edge(id).next).collect()
}

/// A start-category edge from vertex 0, read at one end frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParseResult {
    pub edge: EdgeId,
    pub category: String,
    pub from: Frame,
    pub end: Frame,
    pub words: Vec<String>,
    /// Weighted inside score at `end`.
    pub score: f64,
    pub acoustic: f64,
    pub bigram: f64,
    pub prosody: f64,
    pub grammar: f64,
    /// False for an incomplete prefix (an active edge).
    pub complete: bool,
}

impl ParseResult {
    fn read(grammar: &Grammar, chart: &Chart, e: &Edge, end: Frame) -> Self {
        let s = &e.scores;
        ParseResult {
            edge: e.id,
            category: grammar.cat_name(e.cat).to_string(),
            from: e.from,
            end,
            words: e.words.iter().map(|k| k.to_string()).collect(),
            score: s.inside_at(end, chart.weights()).unwrap_or(f64::NEG_INFINITY),
            acoustic: s.inside_acoustic.get(end).unwrap_or(f64::NEG_INFINITY),
            bigram: s.inside_bigram,
            prosody: s.inside_prosody,
            grammar: s.inside_grammar,
            complete: e.is_passive(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParseResultSet {
    /// Every reported result at every end frame, in report order.
    pub results: Vec<ParseResult>,
    /// The best analysis: a complete spanning result if there is one,
    /// otherwise the best prefix.
    pub best: Option<ParseResult>,
    /// Whether `best` falls short of a complete spanning parse.
    pub partial: bool,
    pub utterance_end: Frame,
    pub stats: EdgeStats,
    pub agenda: AgendaStats,
    pub counts: StepCounts,
    pub chart: Chart,
}

impl ParseResultSet {
    pub(crate) fn build(
        grammar: &Grammar,
        chart: Chart,
        reported: &[EdgeId],
        utterance_end: Frame,
        agenda: AgendaStats,
        counts: StepCounts,
    ) -> Self {
        let results: Vec<ParseResult> = reported
            .iter()
            .flat_map(|&id| {
                let e = chart.edge(id);
                e.to.iter().map(|&end| ParseResult::read(grammar, &chart, e, end)).collect::<Vec<_>>()
            })
            .collect();

        // Longest first, complete before incomplete, then by score.
        let mut best: Option<ParseResult> = None;
        for e in chart.edges() {
            let candidate = e.from == 0
                && e.cat == grammar.start()
                && (e.is_passive() || !e.words.is_empty())
                && e.rule != super::RuleRef::Goal;
            if !candidate {
                continue;
            }
            for &end in &e.to {
                let r = ParseResult::read(grammar, &chart, e, end);
                let better = match &best {
                    None => true,
                    Some(b) => {
                        let ord = r
                            .end
                            .cmp(&b.end)
                            .then(r.complete.cmp(&b.complete))
                            .then(r.score.total_cmp(&b.score));
                        ord == Ordering::Greater
                    }
                };
                if better {
                    best = Some(r);
                }
            }
        }
        let partial = !matches!(&best, Some(b) if b.complete && b.end == utterance_end);
        let stats = chart.edge_stats(grammar);
        ParseResultSet { results, best, partial, utterance_end, stats, agenda, counts, chart }
    }

    /// Complete results ending at the utterance end.
    pub fn spanning(&self) -> impl Iterator<Item = &ParseResult> {
        self.results.iter().filter(move |r| r.end == self.utterance_end)
    }
}

pub(crate) fn check_lexicon(grammar: &Grammar, lattice: &Lattice) -> Result<(), EngineError> {
    if lattice.is_empty() {
        return Err(EngineError::EmptyLattice);
    }
    match lattice.hypotheses.iter().find(|h| !grammar.has_key(&h.key)) {
        Some(h) => Err(EngineError::UnknownWord(h.key.clone())),
        None => Ok(()),
    }
}

/// Parses a whole lattice, replaying it frame by frame.
pub fn parse_lattice(
    lattice: &Lattice,
    grammar: &Grammar,
    models: &Models,
    config: &ParserConfig,
) -> Result<ParseResultSet, EngineError> {
    check_lexicon(grammar, lattice)?;
    let ctx = Context::new(grammar, models, config);
    let mut stream = EmissionStream::new(lattice);
    stream.emit_frame(0)?;
    let mut parser = Parser::new(ctx, &stream.emit_prosody(0))?;
    let end = lattice.utterance_end();
    for t in 0..=end {
        if t > 0 {
            let words = stream.emit_frame(t)?;
            parser.run_cycle(t, &words, &stream.emit_prosody(t))?;
        }
        if config.predict {
            stream.set_prediction_at(t, grammar.predict_words_for(parser.frontier(t)));
        }
    }
    Ok(parser.finish(end))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::decoder::load_lattice;

    fn toy_models() -> Models {
        Models { bigram: corpus::toy_bigram(), trigram: None }
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn toy_trace() {
        let g = corpus::toy_grammar();
        let models = toy_models();
        let r = parse_lattice(&corpus::toy_lattice(), &g, &models, &ParserConfig::default()).unwrap();
        let best = r.best.as_ref().unwrap();
        assert!(!r.partial);
        assert_eq!(best.words, ["we", "meet"]);
        assert_eq!(best.end, 30);
        assert!(close(best.grammar, -1.20));
        assert!(close(best.acoustic, -17.0));
        assert!(close(best.bigram, -2.3));
        assert!(close(best.score, -20.5));
        assert_eq!(r.spanning().count(), 1);
    }

    #[test]
    fn toy_edge_stats() {
        // V0: GOAL->.S, S->.NP VP, NP->.n, NP->.det n
        // V10: we, NP->n., S->NP.VP, VP->.v, VP->.v NP
        // V30: meet, VP->v., VP->v.NP, NP->.n, NP->.det n, S, GOAL->S.
        let g = corpus::toy_grammar();
        let r = parse_lattice(&corpus::toy_lattice(), &g, &toy_models(), &ParserConfig::default()).unwrap();
        assert_eq!(r.stats.total, 16);
        assert_eq!(r.stats.passive, 6);
        assert_eq!(r.stats.lexical, 2);
        assert_eq!(r.stats.per_category["NP"], 5);
    }

    #[test]
    fn fresh_chart_stats() {
        let g = corpus::toy_grammar();
        let chart = Chart::new(&g, Default::default(), Default::default());
        let s = chart.edge_stats(&g);
        assert_eq!((s.total, s.passive), (1, 0));
        assert!(s.per_category.is_empty());
    }

    #[test]
    fn cycle_at_ten() {
        let g = corpus::toy_grammar();
        let models = toy_models();
        let cfg = ParserConfig::default();
        let mut p = Parser::new(Context::new(&g, &models, &cfg), &[]).unwrap();
        for t in 1..10 {
            assert!(p.run_cycle(t, &[], &[]).unwrap().is_empty());
        }
        let res = p.run_cycle(10, &[WordHypothesis::new(0, 10, "we", -5.0)], &[]).unwrap();
        assert!(res.is_empty());
        let chart = p.chart();
        let np = g.category("NP").unwrap();
        let passive_np = chart.edges().iter().find(|e| e.cat == np && e.is_passive()).unwrap();
        assert_eq!(passive_np.to, [10]);
        assert!(close(passive_np.scores.inside_grammar, -0.51));
        assert!(close(passive_np.scores.inside_bigram, -0.7));
        assert!(close(passive_np.scores.outside_bigram, -0.7));
        assert_eq!(passive_np.scores.inside_acoustic.get(10), Some(-5.0));
        let s = g.category("S").unwrap();
        assert!(chart.edges().iter().any(|e| e.cat == s && e.dot == 1 && e.next == g.category("VP")));
        let expected: BTreeSet<CatId> = ["VP", "v"].iter().map(|c| g.category(c).unwrap()).collect();
        assert_eq!(p.frontier(10), expected);
    }

    #[test]
    fn cycle_out_of_order() {
        let g = corpus::toy_grammar();
        let models = toy_models();
        let cfg = ParserConfig::default();
        let mut p = Parser::new(Context::new(&g, &models, &cfg), &[]).unwrap();
        assert!(matches!(p.run_cycle(2, &[], &[]), Err(EngineError::OutOfOrder { expected: 1, got: 2 })));
    }

    #[test]
    fn family_extends_edges() {
        let g = corpus::toy_grammar();
        let lat = load_lattice(corpus::TOY_FAMILY_LATTICE).unwrap();
        let r = parse_lattice(&lat, &g, &toy_models(), &ParserConfig::default().without_beam()).unwrap();
        let we = r.chart.edges().iter().find(|e| e.is_lexical() && &*e.words[0] == "we").unwrap();
        assert_eq!(we.to, [10, 11]);
        assert_eq!(we.scores.inside_acoustic.get(10), Some(-5.0));
        assert!(close(we.scores.inside_acoustic.get(11).unwrap(), -5.2));
        assert_eq!(r.chart.edges().iter().filter(|e| e.is_lexical() && &*e.words[0] == "we").count(), 1);
        let best = r.best.unwrap();
        // we(0,11) + meet(11,30) = -16.7 beats -17.0.
        assert!(close(best.acoustic, -16.7));
    }

    #[test]
    fn partial_prefix() {
        let g = corpus::toy_grammar();
        let lat = load_lattice("FRAMES 10\nWORD we 0 10 -5.0\n").unwrap();
        let r = parse_lattice(&lat, &g, &toy_models(), &ParserConfig::default()).unwrap();
        assert!(r.partial);
        let best = r.best.unwrap();
        assert!(!best.complete);
        assert_eq!(best.words, ["we"]);
    }

    #[test]
    fn no_result_without_start() {
        let g = corpus::toy_grammar();
        let lat = load_lattice("FRAMES 10\nWORD meet 0 10 -5.0\n").unwrap();
        let r = parse_lattice(&lat, &g, &toy_models(), &ParserConfig::default()).unwrap();
        assert!(r.best.is_none());
        assert!(r.partial);
    }

    #[test]
    fn lattice_errors() {
        let g = corpus::toy_grammar();
        let m = toy_models();
        let cfg = ParserConfig::default();
        let empty = load_lattice("FRAMES 10\n").unwrap();
        assert!(matches!(parse_lattice(&empty, &g, &m, &cfg), Err(EngineError::EmptyLattice)));
        let oov = load_lattice("FRAMES 10\nWORD xyzzy 0 10 -1\n").unwrap();
        assert!(matches!(parse_lattice(&oov, &g, &m, &cfg), Err(EngineError::UnknownWord(w)) if w == "xyzzy"));
    }

    #[test]
    fn prediction_filters_lattice() {
        let g = corpus::toy_grammar();
        let m = toy_models();
        // "meet" cannot start a sentence; "the" cannot follow "we".
        let lat = load_lattice(
            "FRAMES 30\nWORD we 0 10 -5\nWORD meet 0 10 -1\nWORD meet 10 30 -12\nWORD the 10 30 -1\n",
        )
        .unwrap();
        let on = parse_lattice(&lat, &g, &m, &ParserConfig { predict: true, ..Default::default() }).unwrap();
        let off = parse_lattice(&lat, &g, &m, &ParserConfig::default()).unwrap();
        assert_eq!(on.best.as_ref().unwrap().words, ["we", "meet"]);
        assert_eq!(off.best.as_ref().unwrap().words, ["we", "meet"]);
        assert_eq!(on.stats.lexical, 2);
        assert_eq!(off.stats.lexical, 4);
    }
}
