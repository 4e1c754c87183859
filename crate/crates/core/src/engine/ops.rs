//! The chart operations: Combine, Seek Down, Insert, Inherit, and the
//! bookkeeping that feeds their results back into the chart and agenda.

use std::collections::HashMap;

use crate::grammar::{quick_check, Grammar, RuleId};
use crate::models::{prosody_trans, ProsodyAttribute, ProsodyHypothesis};
use crate::types::{Frame, Key, LogScore, MissingFrame, ScoreRecord, ScoreSet, WordHypothesis};

use super::agenda::{Agenda, AgendaItem};
use super::chart::{Chart, Edge, EdgeId, RuleRef};
use super::{Context, EngineError};

/// Outcome of one Combine attempt.
#[derive(Debug, Clone)]
pub enum CombineOutcome {
    Combined { edge: Box<Edge>, unified: bool },
    /// Preconditions unmet: categories or vertices do not fit.
    Incompatible,
    QuickCheckFailed,
    UnificationFailed,
}

fn trans(ctx: &Context<'_>, a: &Edge, i: &Edge, attr: &ProsodyAttribute) -> (LogScore, LogScore) {
    let Some(word) = (match (i.is_lexical(), i.words.first()) {
        (true, Some(w)) => Some(w),
        _ => None,
    }) else {
        return (0.0, 0.0);
    };
    let left = a.effective_last_word();
    let bigram = ctx.models.bigram.trans(left.map(|k| &**k), word);
    let prosody = match (&ctx.models.trigram, left) {
        (Some(tri), Some(left)) if ctx.config.prosody => prosody_trans(attr, left, word, tri),
        _ => 0.0,
    };
    (bigram, prosody)
}

fn fits(a: &Edge, i: &Edge) -> bool {
    a.is_active() && i.is_passive() && a.next == Some(i.cat) && a.ends_at(i.from)
}

/// Agenda score of combining `a` with `i`: the best weighted prefix score
/// the resulting edge would have over its end frames. `attr` is the prosody
/// attribute of the vertex where `i` starts.
pub fn combined_score(ctx: &Context<'_>, a: &Edge, i: &Edge, attr: &ProsodyAttribute) -> Result<f64, MissingFrame> {
    let w = &ctx.config.weights;
    let (tb, tp) = trans(ctx, a, i, attr);
    let a_out = a.scores.outside_acoustic.lookup(i.from)?;
    let ac = i
        .scores
        .inside_acoustic
        .max()
        .ok_or(MissingFrame { frame: i.actual() })?;
    Ok(w.combine(
        a_out + ac,
        a.scores.outside_bigram + i.scores.inside_bigram + tb,
        a.scores.outside_prosody + i.scores.inside_prosody + tp,
        a.scores.outside_grammar + i.scores.inside_grammar,
    ))
}

/// The fundamental rule: `a` consumes `i`.
pub fn combine(ctx: &Context<'_>, a: &Edge, i: &Edge, attr: &ProsodyAttribute) -> Result<CombineOutcome, MissingFrame> {
    if !fits(a, i) {
        return Ok(CombineOutcome::Incompatible);
    }
    let skeleton = ctx.config.skeleton;
    if !skeleton && !quick_check(&a.signature, &i.signature) {
        return Ok(CombineOutcome::QuickCheckFailed);
    }
    let grammar = ctx.grammar;
    let dot = a.dot + 1;
    let next = next_category(grammar, a.rule, dot);
    let daughter = format!("C{dot}");
    let mut unified = false;
    let features = match (&a.features, skeleton) {
        (Some(fs), false) => {
            unified = true;
            let merged = match &i.features {
                Some(ifs) => fs.unify_at(&[daughter.as_str()], ifs),
                None => Some(fs.clone()),
            };
            let Some(merged) = merged else {
                return Ok(CombineOutcome::UnificationFailed);
            };
            let rest = merged.without(&daughter);
            if next.is_some() {
                Some(rest)
            } else {
                rest.project(&["LHS"]).filter(|f| !f.is_empty())
            }
        }
        _ => None,
    };

    let (tb, tp) = trans(ctx, a, i, attr);
    let a_in = a.scores.inside_acoustic.lookup(i.from)?;
    let a_out = a.scores.outside_acoustic.lookup(i.from)?;
    let s = &i.scores;
    let scores = ScoreRecord {
        inside_acoustic: s.inside_acoustic.oplus(a_in),
        outside_acoustic: s.inside_acoustic.oplus(a_out),
        inside_bigram: a.scores.inside_bigram + s.inside_bigram + tb,
        outside_bigram: a.scores.outside_bigram + s.inside_bigram + tb,
        inside_prosody: a.scores.inside_prosody + s.inside_prosody + tp,
        outside_prosody: a.scores.outside_prosody + s.inside_prosody + tp,
        inside_grammar: a.scores.inside_grammar + s.inside_grammar,
        outside_grammar: a.scores.outside_grammar + s.inside_grammar,
    };
    let signature = match next {
        Some(n) => grammar.signature(n, features.as_ref(), Some(&format!("C{}", dot + 1))),
        None => grammar.signature(a.cat, features.as_ref(), None),
    };
    let mut words = a.words.clone();
    words.extend(i.words.iter().cloned());
    let mut children = a.children.clone();
    children.push(i.id);
    let edge = Edge {
        id: EdgeId(u32::MAX),
        rule: a.rule,
        cat: a.cat,
        dot,
        next,
        from: a.from,
        to: i.to.clone(),
        words,
        last_word_from: i.last_word_from.or(a.last_word_from),
        left_context: a.left_context.clone(),
        scores,
        features,
        signature,
        children,
    };
    Ok(CombineOutcome::Combined { edge: Box::new(edge), unified })
}

pub(crate) fn next_category(grammar: &Grammar, rule: RuleRef, dot: usize) -> Option<crate::grammar::CatId> {
    match rule {
        RuleRef::Goal => (dot == 0).then(|| grammar.start()),
        RuleRef::Phrasal(r) => grammar.rule(r).rhs.get(dot).copied(),
        RuleRef::Lexical(_) => None,
    }
}

fn predicted_edge(ctx: &Context<'_>, a: &Edge, at: Frame, rid: RuleId, acc: LogScore, a_out: LogScore) -> Edge {
    let grammar = ctx.grammar;
    let rule = grammar.rule(rid);
    let features = if ctx.config.skeleton { None } else { rule.features.clone() };
    let signature = grammar.signature(rule.rhs[0], features.as_ref(), Some("C1"));
    Edge {
        id: EdgeId(u32::MAX),
        rule: RuleRef::Phrasal(rid),
        cat: rule.lhs,
        dot: 0,
        next: Some(rule.rhs[0]),
        from: at,
        to: vec![at],
        words: Vec::new(),
        last_word_from: None,
        left_context: a.effective_last_word().cloned(),
        scores: ScoreRecord {
            inside_acoustic: ScoreSet::single(at, 0.0),
            outside_acoustic: ScoreSet::single(at, a_out),
            inside_bigram: 0.0,
            outside_bigram: a.scores.outside_bigram,
            inside_prosody: 0.0,
            outside_prosody: a.scores.outside_prosody,
            inside_grammar: rule.log_prob,
            outside_grammar: a.scores.outside_grammar + acc,
        },
        features,
        signature,
        children: Vec::new(),
    }
}

/// Top-down prediction at vertex `at` for everything that can start the
/// category `a` expects, following left corners transitively.
pub fn seek_down(ctx: &Context<'_>, a: &Edge, at: Frame) -> Result<Vec<Edge>, MissingFrame> {
    let Some(next) = a.next else {
        return Ok(Vec::new());
    };
    let a_out = a.scores.outside_acoustic.lookup(at)?;
    Ok(ctx
        .grammar
        .predict_table(next)
        .iter()
        .map(|&(rid, acc)| predicted_edge(ctx, a, at, rid, acc, a_out))
        .collect())
}

/// One passive lexical edge per lexicon entry of the hypothesis' key.
pub fn insert(ctx: &Context<'_>, w: &WordHypothesis) -> Result<Vec<Edge>, EngineError> {
    let grammar = ctx.grammar;
    let ids = grammar.lex_entries(&w.key);
    if ids.is_empty() {
        return Err(EngineError::UnknownWord(w.key.clone()));
    }
    Ok(ids
        .iter()
        .map(|&lid| {
            let entry = grammar.lex(lid);
            let features = if ctx.config.skeleton { None } else { entry.features.clone() };
            let signature = grammar.signature(entry.cat, features.as_ref(), None);
            Edge {
                id: EdgeId(u32::MAX),
                rule: RuleRef::Lexical(lid),
                cat: entry.cat,
                dot: 0,
                next: None,
                from: w.from,
                to: vec![w.to],
                words: vec![entry.key.clone()],
                last_word_from: Some(w.from),
                left_context: None,
                scores: ScoreRecord {
                    inside_acoustic: ScoreSet::single(w.to, w.score),
                    outside_acoustic: ScoreSet::single(w.to, w.score),
                    inside_grammar: entry.log_prob,
                    outside_grammar: entry.log_prob,
                    ..ScoreRecord::default()
                },
                features,
                signature,
                children: Vec::new(),
            }
        })
        .collect())
}

/// Schedules every Combine the new edge takes part in.
pub fn agenda_push(ctx: &Context<'_>, chart: &Chart, agenda: &mut Agenda, id: EdgeId) -> Result<(), MissingFrame> {
    let e = chart.edge(id);
    if let Some(next) = e.next {
        for &v in &e.to {
            let vertex = chart.vertex(v);
            for &pid in &vertex.inactive_out {
                let p = chart.edge(pid);
                if p.cat == next {
                    agenda.push(id, pid, combined_score(ctx, e, p, &vertex.prosody)?);
                }
            }
        }
    } else {
        let vertex = chart.vertex(e.from);
        for &aid in &vertex.active_in {
            let a = chart.edge(aid);
            if a.next == Some(e.cat) {
                agenda.push(aid, id, combined_score(ctx, a, e, &vertex.prosody)?);
            }
        }
    }
    Ok(())
}

/// Adds a derived edge to the chart and schedules its follow-up work.
/// Returns `None` if the chart already held an equivalent, better edge.
pub fn publish(
    ctx: &Context<'_>,
    chart: &mut Chart,
    agenda: &mut Agenda,
    results: &mut Vec<EdgeId>,
    edge: Edge,
) -> Result<Option<EdgeId>, MissingFrame> {
    let Some(id) = chart.add_edge(edge) else {
        return Ok(None);
    };
    let e = chart.edge(id);
    if e.is_passive() && e.from == 0 && e.cat == ctx.grammar.start() && e.rule != RuleRef::Goal {
        results.push(id);
    }
    agenda_push(ctx, chart, agenda, id)?;
    if e.is_active() {
        predict(ctx, chart, agenda, id)?;
    }
    Ok(Some(id))
}

fn predict(ctx: &Context<'_>, chart: &mut Chart, agenda: &mut Agenda, id: EdgeId) -> Result<(), MissingFrame> {
    let e = chart.edge(id);
    let mut predicted = Vec::new();
    for &v in &e.to {
        predicted.extend(seek_down(ctx, e, v)?);
    }
    for p in predicted {
        if let Some(pid) = chart.add_edge(p) {
            agenda_push(ctx, chart, agenda, pid)?;
        }
    }
    Ok(())
}

/// Seek Down from the initial edge at `V_0`.
pub fn start(ctx: &Context<'_>, chart: &mut Chart, agenda: &mut Agenda) -> Result<(), MissingFrame> {
    predict(ctx, chart, agenda, chart.initial())
}

/// Input-side state carried across cycles.
#[derive(Debug, Clone, Default)]
pub struct Feed {
    delivered: HashMap<(Frame, Frame, Key), LogScore>,
    prosody: Vec<ProsodyHypothesis>,
}

impl Feed {
    pub fn prosody(&self) -> &[ProsodyHypothesis] {
        &self.prosody
    }

    pub fn add_prosody(&mut self, hyps: &[ProsodyHypothesis]) {
        self.prosody.extend_from_slice(hyps);
    }

    /// Prosody attribute for a vertex at `frame` given what has arrived.
    pub fn attribute(&self, ctx: &Context<'_>, frame: Frame) -> Result<ProsodyAttribute, EngineError> {
        if !ctx.config.prosody {
            return Ok(ProsodyAttribute::neutral());
        }
        Ok(ProsodyAttribute::for_frame(frame, &self.prosody)?)
    }
}

/// Extends every edge whose last word came from `(w.from, w.to - 1, key)`
/// to the new end vertex `w.to`, adjusting acoustic scores by the
/// difference between the two hypotheses.
pub fn inherit(
    ctx: &Context<'_>,
    chart: &mut Chart,
    agenda: &mut Agenda,
    w: &WordHypothesis,
    previous: LogScore,
) -> Result<Vec<EdgeId>, MissingFrame> {
    let prev = w.to - 1;
    let v = chart.vertex(prev);
    let candidates: Vec<EdgeId> = v
        .inactive_in
        .iter()
        .chain(&v.active_in)
        .copied()
        .filter(|&id| {
            let e = chart.edge(id);
            e.last_word_from == Some(w.from) && e.words.last().is_some_and(|k| **k == *w.key)
        })
        .collect();
    let delta = w.score - previous;
    for &id in &candidates {
        let e = chart.edge(id);
        let inside = e.scores.inside_acoustic.lookup(prev)? + delta;
        let outside = e.scores.outside_acoustic.lookup(prev)? + delta;
        chart.extend_edge(id, w.to, inside, outside);
        if chart.edge(id).is_active() {
            let predicted = seek_down(ctx, chart.edge(id), w.to)?;
            for p in predicted {
                if let Some(pid) = chart.add_edge(p) {
                    agenda_push(ctx, chart, agenda, pid)?;
                }
            }
        }
    }
    Ok(candidates)
}

/// Cycle prologue for frame `t`: creates `V_t` and feeds the words ending
/// there into the chart, via Inherit when the same word ended at `t - 1`
/// and Insert otherwise.
#[allow(clippy::too_many_arguments)]
pub fn begin_cycle(
    ctx: &Context<'_>,
    chart: &mut Chart,
    agenda: &mut Agenda,
    results: &mut Vec<EdgeId>,
    feed: &mut Feed,
    t: Frame,
    words: &[WordHypothesis],
    prosody: &[ProsodyHypothesis],
) -> Result<(), EngineError> {
    if t != chart.next_frame() {
        return Err(EngineError::OutOfOrder { expected: chart.next_frame(), got: t });
    }
    feed.add_prosody(prosody);
    let attr = feed.attribute(ctx, t)?;
    chart.add_vertex(attr);
    agenda.begin_cycle();
    for w in words {
        if w.to != t || w.from >= t {
            return Err(EngineError::BadHypothesis(w.clone()));
        }
        if !ctx.grammar.has_key(&w.key) {
            return Err(EngineError::UnknownWord(w.key.clone()));
        }
        let key: Key = w.key.as_str().into();
        let prior = if w.to > w.from + 1 { feed.delivered.get(&(w.from, t - 1, key.clone())).copied() } else { None };
        match prior {
            Some(previous) => {
                inherit(ctx, chart, agenda, w, previous)?;
            }
            None => {
                for edge in insert(ctx, w)? {
                    publish(ctx, chart, agenda, results, edge)?;
                }
            }
        }
        feed.delivered.insert((w.from, t, key), w.score);
    }
    Ok(())
}

/// What happened to one popped agenda item.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    /// A new edge was derived; `added` is `None` if the chart already
    /// held an equivalent one.
    Combined { added: Option<EdgeId>, unified: bool },
    Incompatible,
    QuickCheckFailed,
    UnificationFailed,
}

impl StepKind {
    pub fn unified(&self) -> bool {
        matches!(self, StepKind::Combined { unified: true, .. } | StepKind::UnificationFailed)
    }
}

/// Records `outcome` in the chart and agenda.
pub fn apply(
    ctx: &Context<'_>,
    chart: &mut Chart,
    agenda: &mut Agenda,
    results: &mut Vec<EdgeId>,
    outcome: CombineOutcome,
) -> Result<StepKind, MissingFrame> {
    Ok(match outcome {
        CombineOutcome::Combined { edge, unified } => {
            let added = publish(ctx, chart, agenda, results, *edge)?;
            StepKind::Combined { added, unified }
        }
        CombineOutcome::Incompatible => StepKind::Incompatible,
        CombineOutcome::QuickCheckFailed => StepKind::QuickCheckFailed,
        CombineOutcome::UnificationFailed => StepKind::UnificationFailed,
    })
}

/// Pops and combines one agenda item; `None` once the agenda is empty.
pub fn step(
    ctx: &Context<'_>,
    chart: &mut Chart,
    agenda: &mut Agenda,
    results: &mut Vec<EdgeId>,
) -> Result<Option<(AgendaItem, StepKind)>, MissingFrame> {
    let Some(item) = agenda.pop() else {
        return Ok(None);
    };
    let a = chart.edge(item.active);
    let i = chart.edge(item.passive);
    let outcome = combine(ctx, a, i, &chart.vertex(i.from).prosody)?;
    Ok(Some((item, apply(ctx, chart, agenda, results, outcome)?)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::engine::{Models, ParserConfig};
    use crate::models::{BigramModel, Boundary, CategoryTrigram};
    use crate::types::Weights;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    fn chart_after_start(ctx: &Context<'_>) -> Chart {
        let mut chart = Chart::new(ctx.grammar, ctx.config.weights, ProsodyAttribute::neutral());
        let mut agenda = Agenda::new(ctx.config.beam_offset);
        start(ctx, &mut chart, &mut agenda).unwrap();
        chart
    }

    #[test]
    fn seek_down_closure_from_goal() {
        let g = corpus::toy_grammar();
        let m = Models::default();
        let cfg = ParserConfig::default();
        let ctx = Context::new(&g, &m, &cfg);
        let chart = chart_after_start(&ctx);
        let mut got: Vec<(String, f64, f64)> = chart
            .edges()
            .iter()
            .skip(1)
            .map(|e| {
                let r = match e.rule {
                    RuleRef::Phrasal(r) => g.display_rule(r),
                    _ => unreachable!(),
                };
                (r, e.scores.outside_grammar, e.scores.inside_grammar)
            })
            .collect();
        got.sort_by(|a, b| a.0.cmp(&b.0));
        assert_eq!(got.len(), 3);
        assert!(close(got[0].1, -0.92) && close(got[0].2, -0.92), "{got:?}");
        assert!(close(got[1].1, -0.51) && close(got[1].2, -0.51), "{got:?}");
        assert!(close(got[2].1, 0.0) && close(got[2].2, 0.0), "{got:?}");
        assert!(chart.edges().iter().all(|e| e.to == [0] && e.left_context.is_none()));
    }

    #[test]
    fn seek_down_on_passive_is_empty() {
        let g = corpus::toy_grammar();
        let m = Models::default();
        let cfg = ParserConfig::default();
        let ctx = Context::new(&g, &m, &cfg);
        let lex = insert(&ctx, &WordHypothesis::new(0, 10, "we", -5.0)).unwrap();
        assert!(seek_down(&ctx, &lex[0], 10).unwrap().is_empty());
    }

    #[test]
    fn insert_builds_lexical_edge() {
        let g = corpus::toy_grammar();
        let m = Models::default();
        let cfg = ParserConfig::default();
        let ctx = Context::new(&g, &m, &cfg);
        let e = insert(&ctx, &WordHypothesis::new(0, 10, "we", -5.0)).unwrap().remove(0);
        assert!(e.is_passive() && e.is_lexical());
        assert_eq!(e.to, [10]);
        assert_eq!(e.scores.inside_acoustic.get(10), Some(-5.0));
        assert_eq!(e.scores.inside_grammar, 0.0);
        assert!(matches!(
            insert(&ctx, &WordHypothesis::new(0, 10, "zzz", -5.0)),
            Err(EngineError::UnknownWord(_))
        ));
    }

    fn toy_edges(ctx: &Context<'_>) -> (Edge, Edge) {
        let g = ctx.grammar;
        let s_rule = RuleId(0);
        let mut a = predicted_edge(ctx, &Chart::new(g, Weights::default(), Default::default()).edge(EdgeId(0)).clone(), 0, s_rule, 0.0, 0.0);
        a.dot = 1;
        a.next = g.category("VP");
        a.to = vec![10];
        a.words = vec!["we".into()];
        a.last_word_from = Some(0);
        a.scores = ScoreRecord {
            inside_acoustic: ScoreSet::single(10, -5.0),
            outside_acoustic: ScoreSet::single(10, -5.0),
            inside_bigram: -0.7,
            outside_bigram: -0.7,
            inside_grammar: -0.51,
            outside_grammar: -0.51,
            ..Default::default()
        };
        a.signature = g.signature(g.category("VP").unwrap(), None, None);
        let mut i = insert(ctx, &WordHypothesis::new(10, 30, "meet", -12.0)).unwrap().remove(0);
        i.cat = g.category("VP").unwrap();
        i.rule = RuleRef::Phrasal(RuleId(3));
        i.scores.inside_grammar = -0.69;
        i.signature = g.signature(i.cat, None, None);
        (a, i)
    }

    #[test]
    fn combined_score_example() {
        // Lexical-case bigram charged on the phrasal VP: model it by a
        // lexical passive whose category happens to be VP.
        let g = corpus::toy_grammar();
        let m = Models { bigram: corpus::toy_bigram(), trigram: None };
        let cfg = ParserConfig::default();
        let ctx = Context::new(&g, &m, &cfg);
        let (a, mut i) = toy_edges(&ctx);
        i.rule = RuleRef::Lexical(crate::grammar::LexId(0));
        let s = combined_score(&ctx, &a, &i, &ProsodyAttribute::neutral()).unwrap();
        assert!(close(s, -20.5), "{s}");
    }

    #[test]
    fn combine_toy_s() {
        let g = corpus::toy_grammar();
        let m = Models { bigram: corpus::toy_bigram(), trigram: None };
        let cfg = ParserConfig::default();
        let ctx = Context::new(&g, &m, &cfg);
        let (a, i) = toy_edges(&ctx);
        let CombineOutcome::Combined { edge, .. } = combine(&ctx, &a, &i, &ProsodyAttribute::neutral()).unwrap() else {
            panic!("expected an edge");
        };
        assert!(edge.is_passive());
        assert_eq!(edge.from, 0);
        assert_eq!(edge.to, [30]);
        assert!(close(edge.scores.inside_grammar, -1.20));
        assert!(close(edge.scores.inside_acoustic.get(30).unwrap(), -17.0));
        // Phrasal passive: no transition charged here.
        assert!(close(edge.scores.inside_bigram, -0.7));
        assert_eq!(edge.words.len(), 2);
    }

    #[test]
    fn combine_preconditions() {
        let g = corpus::toy_grammar();
        let m = Models::default();
        let cfg = ParserConfig::default();
        let ctx = Context::new(&g, &m, &cfg);
        let (a, mut i) = toy_edges(&ctx);
        assert!(matches!(combine(&ctx, &i, &a, &ProsodyAttribute::neutral()), Ok(CombineOutcome::Incompatible)));
        i.from = 11;
        assert!(matches!(combine(&ctx, &a, &i, &ProsodyAttribute::neutral()), Ok(CombineOutcome::Incompatible)));
        i.from = 10;
        i.cat = g.category("NP").unwrap();
        assert!(matches!(combine(&ctx, &a, &i, &ProsodyAttribute::neutral()), Ok(CombineOutcome::Incompatible)));
    }

    #[test]
    fn missing_frame_is_reported() {
        let g = corpus::toy_grammar();
        let m = Models::default();
        let cfg = ParserConfig::default();
        let ctx = Context::new(&g, &m, &cfg);
        let (a, _) = toy_edges(&ctx);
        assert_eq!(seek_down(&ctx, &a, 11).unwrap_err(), MissingFrame { frame: 11 });
    }

    #[test]
    fn prosody_transition_uses_left_word() {
        let g = corpus::toy_grammar();
        let mut tri = CategoryTrigram::new(0.0);
        tri.set_category("we", "PRON");
        tri.set_category("meet", "VERB");
        tri.set("PRON", Boundary::B3, "VERB", -4.0);
        let m = Models { bigram: BigramModel::flat(), trigram: Some(tri) };
        let cfg = ParserConfig::default();
        let ctx = Context::new(&g, &m, &cfg);
        let (a, mut i) = toy_edges(&ctx);
        i.rule = RuleRef::Lexical(crate::grammar::LexId(0));
        let boundary = ProsodyAttribute { log_probs: [f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0, f64::NEG_INFINITY] };
        assert_eq!(trans(&ctx, &a, &i, &boundary).1, -4.0);
        assert_eq!(trans(&ctx, &a, &i, &ProsodyAttribute::neutral()).1, 0.0);
        let off = ParserConfig { prosody: false, ..cfg };
        assert_eq!(trans(&Context::new(&g, &m, &off), &a, &i, &boundary).1, 0.0);
    }

}
