//! Run reports as flat `key=value` text or JSON. Wall-clock measurements
//! live in their own `[timing]` section (`timing` object in JSON) so the
//! rest of a report is reproducible byte for byte.

use std::fmt::Write;

use serde::Serialize;
use serde_json::{json, Value};

use crate::engine::{AgendaStats, EdgeStats, ParseResult, ParseResultSet, ParserConfig, StepCounts};
use crate::eval::CorpusEval;
use crate::parallel::ParallelMetrics;

pub const PARSE_SCHEMA: &str = "lriparse.parse/1";
pub const EVAL_SCHEMA: &str = "lriparse.eval/1";
pub const BENCH_SCHEMA: &str = "lriparse.bench/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Structured,
}

/// Named wall-clock measurements in milliseconds, in insertion order.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Timing(pub Vec<(String, f64)>);

impl Timing {
    pub fn push(&mut self, key: impl Into<String>, ms: f64) {
        self.0.push((key.into(), ms));
    }

    fn to_json(&self) -> Value {
        Value::Object(self.0.iter().map(|(k, v)| (k.clone(), json!(v))).collect())
    }
}

fn num(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        // Rounded so that sums like -0.7 + -1.6 print as written.
        let r = (x * 1e9).round() / 1e9;
        format!("{}", if r == 0.0 { 0.0 } else { r })
    }
}

fn num_json(x: f64) -> Value {
    if x.is_finite() {
        json!((x * 1e9).round() / 1e9)
    } else {
        json!(num(x))
    }
}

fn on_off(b: bool) -> &'static str {
    if b { "on" } else { "off" }
}

pub fn config_fields(c: &ParserConfig) -> Vec<(String, String)> {
    let w = &c.weights;
    vec![
        ("weights".into(), format!("{},{},{},{}", num(w.acoustic), num(w.bigram), num(w.prosody), num(w.grammar))),
        ("beam_offset".into(), num(c.beam_offset)),
        ("prosody".into(), on_off(c.prosody).into()),
        ("predict".into(), on_off(c.predict).into()),
        ("skeleton".into(), c.skeleton.to_string()),
    ]
}

fn config_json(c: &ParserConfig) -> Value {
    let w = &c.weights;
    json!({
        "weights": {"acoustic": num_json(w.acoustic), "bigram": num_json(w.bigram), "prosody": num_json(w.prosody), "grammar": num_json(w.grammar)},
        "beam_offset": num_json(c.beam_offset),
        "prosody": c.prosody,
        "predict": c.predict,
        "skeleton": c.skeleton,
    })
}

fn result_json(r: &ParseResult) -> Value {
    json!({
        "category": r.category,
        "from": r.from,
        "end": r.end,
        "words": r.words,
        "complete": r.complete,
        "score": num_json(r.score),
        "acoustic": num_json(r.acoustic),
        "bigram": num_json(r.bigram),
        "prosody": num_json(r.prosody),
        "grammar": num_json(r.grammar),
    })
}

fn stats_fields(out: &mut Vec<(String, String)>, s: &EdgeStats, a: &AgendaStats, c: &StepCounts) {
    out.push(("edges_total".into(), s.total.to_string()));
    out.push(("edges_passive".into(), s.passive.to_string()));
    out.push(("edges_lexical".into(), s.lexical.to_string()));
    for (cat, n) in &s.per_category {
        out.push((format!("edges.{cat}"), n.to_string()));
    }
    out.push(("agenda_pushed".into(), a.pushed.to_string()));
    out.push(("agenda_processed".into(), a.processed.to_string()));
    out.push(("agenda_pruned".into(), a.pruned.to_string()));
    out.push(("combined".into(), c.combined.to_string()));
    out.push(("quick_check_failed".into(), c.quick_check_failed.to_string()));
    out.push(("unifications".into(), c.unifications.to_string()));
    out.push(("unification_failed".into(), c.unification_failed.to_string()));
}

fn stats_json(s: &EdgeStats, a: &AgendaStats, c: &StepCounts) -> Value {
    json!({
        "edges": {"total": s.total, "passive": s.passive, "lexical": s.lexical, "per_category": s.per_category},
        "agenda": a,
        "steps": c,
    })
}

/// Outcome of parsing one lattice.
#[derive(Debug, Clone)]
pub struct ParseReport {
    pub lattice: String,
    pub config: ParserConfig,
    pub workers: usize,
    pub best: Option<ParseResult>,
    pub partial: bool,
    pub results: Vec<ParseResult>,
    pub stats: EdgeStats,
    pub agenda: AgendaStats,
    pub counts: StepCounts,
}

impl ParseReport {
    pub fn new(lattice: &str, config: &ParserConfig, workers: usize, r: &ParseResultSet) -> Self {
        ParseReport {
            lattice: lattice.to_string(),
            config: *config,
            workers,
            best: r.best.clone(),
            partial: r.partial,
            results: r.results.clone(),
            stats: r.stats.clone(),
            agenda: r.agenda,
            counts: r.counts,
        }
    }

    pub fn fields(&self) -> Vec<(String, String)> {
        let mut out = vec![("lattice".to_string(), self.lattice.clone())];
        out.extend(config_fields(&self.config));
        out.push(("workers".into(), self.workers.to_string()));
        match &self.best {
            Some(b) => {
                out.push(("best".into(), b.words.join(" ")));
                out.push(("best_category".into(), b.category.clone()));
                out.push(("best_end".into(), b.end.to_string()));
                out.push(("complete".into(), b.complete.to_string()));
                out.push(("score".into(), num(b.score)));
                out.push(("score.acoustic".into(), num(b.acoustic)));
                out.push(("score.bigram".into(), num(b.bigram)));
                out.push(("score.prosody".into(), num(b.prosody)));
                out.push(("score.grammar".into(), num(b.grammar)));
            }
            None => out.push(("best".into(), "<none>".into())),
        }
        out.push(("partial".into(), self.partial.to_string()));
        out.push(("results".into(), self.results.len().to_string()));
        stats_fields(&mut out, &self.stats, &self.agenda, &self.counts);
        out
    }

    pub fn to_json(&self) -> Value {
        json!({
            "lattice": self.lattice,
            "config": config_json(&self.config),
            "workers": self.workers,
            "best": self.best.as_ref().map(result_json),
            "partial": self.partial,
            "results": self.results.iter().map(result_json).collect::<Vec<_>>(),
            "stats": stats_json(&self.stats, &self.agenda, &self.counts),
        })
    }
}

fn text_block(out: &mut String, title: &str, fields: &[(String, String)]) {
    let _ = writeln!(out, "[{title}]");
    for (k, v) in fields {
        let _ = writeln!(out, "{k}={v}");
    }
    out.push('\n');
}

fn finish(mut out: String, timing: Option<&Timing>) -> String {
    if let Some(t) = timing {
        let _ = writeln!(out, "[timing]");
        for (k, v) in &t.0 {
            let _ = writeln!(out, "{k}={v:.3}");
        }
    }
    out
}

fn finish_json(schema: &str, body: Value, timing: Option<&Timing>) -> String {
    let mut doc = json!({"schema": schema});
    if let (Value::Object(d), Value::Object(b)) = (&mut doc, body) {
        d.extend(b);
        if let Some(t) = timing {
            d.insert("timing".into(), t.to_json());
        }
    }
    let mut s = serde_json::to_string_pretty(&doc).expect("reports serialize");
    s.push('\n');
    s
}

pub fn render_parse(reports: &[ParseReport], timing: Option<&Timing>, format: Format) -> String {
    match format {
        Format::Text => {
            let mut out = String::new();
            for r in reports {
                text_block(&mut out, "parse", &r.fields());
            }
            finish(out, timing)
        }
        Format::Structured => finish_json(
            PARSE_SCHEMA,
            json!({"parses": reports.iter().map(ParseReport::to_json).collect::<Vec<_>>()}),
            timing,
        ),
    }
}

pub fn render_eval(eval: &CorpusEval, config: &ParserConfig, timing: Option<&Timing>, format: Format) -> String {
    match format {
        Format::Text => {
            let mut out = String::new();
            for u in &eval.utterances {
                let s = &u.strict;
                let fields = vec![
                    ("lattice".to_string(), u.name.clone()),
                    ("reference".into(), u.reference.join(" ")),
                    ("covered".into(), s.covered_words.join(" ")),
                    ("recognizer".into(), u.recognizer_words.join(" ")),
                    ("n_ref".into(), s.n_ref.to_string()),
                    ("substitutions".into(), s.substitutions.to_string()),
                    ("deletions".into(), s.deletions.to_string()),
                    ("insertions".into(), s.insertions.to_string()),
                    ("word_accuracy".into(), num(s.word_accuracy)),
                    ("standard_word_accuracy".into(), num(u.standard_word_accuracy)),
                    ("partial".into(), u.partial.to_string()),
                    ("edge_count_total".into(), s.edge_count_total.to_string()),
                    ("edge_count_passive".into(), s.edge_count_passive.to_string()),
                ];
                text_block(&mut out, "utterance", &fields);
            }
            let mut fields = config_fields(config);
            fields.extend([
                ("utterances".to_string(), eval.utterances.len().to_string()),
                ("mean_word_accuracy".into(), num(eval.mean_word_accuracy)),
                ("pooled_word_accuracy".into(), num(eval.pooled_word_accuracy)),
                ("mean_standard_word_accuracy".into(), num(eval.mean_standard_word_accuracy)),
                ("pooled_standard_word_accuracy".into(), num(eval.pooled_standard_word_accuracy)),
            ]);
            text_block(&mut out, "corpus", &fields);
            finish(out, timing)
        }
        Format::Structured => {
            let rows: Vec<Value> = eval
                .utterances
                .iter()
                .map(|u| {
                    let s = &u.strict;
                    json!({
                        "lattice": u.name,
                        "reference": u.reference,
                        "covered": s.covered_words,
                        "recognizer": u.recognizer_words,
                        "n_ref": s.n_ref,
                        "substitutions": s.substitutions,
                        "deletions": s.deletions,
                        "insertions": s.insertions,
                        "word_accuracy": num_json(s.word_accuracy),
                        "standard_word_accuracy": num_json(u.standard_word_accuracy),
                        "partial": u.partial,
                        "edge_count_total": s.edge_count_total,
                        "edge_count_passive": s.edge_count_passive,
                    })
                })
                .collect();
            finish_json(
                EVAL_SCHEMA,
                json!({
                    "config": config_json(config),
                    "utterances": rows,
                    "corpus": {
                        "mean_word_accuracy": num_json(eval.mean_word_accuracy),
                        "pooled_word_accuracy": num_json(eval.pooled_word_accuracy),
                        "mean_standard_word_accuracy": num_json(eval.mean_standard_word_accuracy),
                        "pooled_standard_word_accuracy": num_json(eval.pooled_standard_word_accuracy),
                    },
                }),
                timing,
            )
        }
    }
}

/// One benchmarked lattice. `best` and `edges` come from the sequential
/// run; everything else depends on the clock or on thread scheduling.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub lattice: String,
    pub best: String,
    pub edges: usize,
    pub sequential_ms: f64,
    pub parallel_ms: f64,
    pub gain_percent: f64,
    /// Parallel run found the same passive items and scores.
    pub parallel_matches: bool,
    pub metrics: ParallelMetrics,
}

pub fn mean_gain(rows: &[BenchRow]) -> f64 {
    rows.iter().map(|r| r.gain_percent).sum::<f64>() / rows.len().max(1) as f64
}

pub fn render_bench(rows: &[BenchRow], workers: usize, task_batch: usize, config: &ParserConfig, format: Format) -> String {
    let mut fields = config_fields(config);
    fields.push(("workers".into(), workers.to_string()));
    fields.push(("task_batch".into(), task_batch.to_string()));
    fields.push(("lattices".into(), rows.len().to_string()));
    match format {
        Format::Text => {
            let mut out = String::new();
            text_block(&mut out, "bench", &fields);
            for r in rows {
                let fields = vec![
                    ("lattice".to_string(), r.lattice.clone()),
                    ("best".into(), r.best.clone()),
                    ("edges".into(), r.edges.to_string()),
                ];
                text_block(&mut out, "row", &fields);
            }
            let _ = writeln!(out, "[timing]");
            let _ = writeln!(
                out,
                "{:<12} {:>10} {:>10} {:>8} {:>7} {:>6}",
                "lattice", "seq_ms", "par_ms", "gain_%", "unify", "match"
            );
            for r in rows {
                let _ = writeln!(
                    out,
                    "{:<12} {:>10.3} {:>10.3} {:>+8.1} {:>7.2} {:>6}",
                    r.lattice, r.sequential_ms, r.parallel_ms, r.gain_percent, r.metrics.unification_share, r.parallel_matches
                );
            }
            let _ = writeln!(out, "mean_gain_percent={:.3}", mean_gain(rows));
            for r in rows {
                for (i, w) in r.metrics.workers.iter().enumerate() {
                    let _ = writeln!(
                        out,
                        "{}.worker{i}=items:{} combined:{} busy_ms:{:.3} idle_ms:{:.3}",
                        r.lattice,
                        w.items,
                        w.combined,
                        w.busy.as_secs_f64() * 1e3,
                        w.idle.as_secs_f64() * 1e3
                    );
                }
            }
            out
        }
        Format::Structured => {
            let mut config = config_json(config);
            if let Value::Object(c) = &mut config {
                c.insert("workers".into(), json!(workers));
                c.insert("task_batch".into(), json!(task_batch));
            }
            let body = json!({
                "config": config,
                "rows": rows.iter().map(|r| json!({"lattice": r.lattice, "best": r.best, "edges": r.edges})).collect::<Vec<_>>(),
            });
            let timing = json!({
                "mean_gain_percent": mean_gain(rows),
                "rows": rows.iter().map(|r| json!({
                    "lattice": r.lattice,
                    "sequential_ms": r.sequential_ms,
                    "parallel_ms": r.parallel_ms,
                    "gain_percent": r.gain_percent,
                    "parallel_matches": r.parallel_matches,
                    "unification_share": r.metrics.unification_share,
                    "combine_histogram_log2_ns": r.metrics.histogram,
                    "workers": r.metrics.workers.iter().map(|w| json!({
                        "items": w.items,
                        "combined": w.combined,
                        "busy_ms": w.busy.as_secs_f64() * 1e3,
                        "idle_ms": w.idle.as_secs_f64() * 1e3,
                    })).collect::<Vec<_>>(),
                })).collect::<Vec<_>>(),
            });
            let mut doc = json!({"schema": BENCH_SCHEMA});
            if let (Value::Object(d), Value::Object(b)) = (&mut doc, body) {
                d.extend(b);
                d.insert("timing".into(), timing);
            }
            let mut s = serde_json::to_string_pretty(&doc).expect("reports serialize");
            s.push('\n');
            s
        }
    }
}

/// Drops the `[timing]` section of a text report or the `timing` member of
/// a structured one, leaving the reproducible part.
pub fn strip_timing(report: &str) -> String {
    if let Ok(Value::Object(mut m)) = serde_json::from_str::<Value>(report) {
        m.remove("timing");
        let mut s = serde_json::to_string_pretty(&Value::Object(m)).expect("reports serialize");
        s.push('\n');
        return s;
    }
    match report.find("[timing]\n") {
        Some(i) if i == 0 || report[..i].ends_with('\n') => report[..i].to_string(),
        _ => report.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::engine::{parse_lattice, Models};

    fn toy_report() -> ParseReport {
        let g = corpus::toy_grammar();
        let m = Models { bigram: corpus::toy_bigram(), trigram: None };
        let cfg = ParserConfig::default();
        let r = parse_lattice(&corpus::toy_lattice(), &g, &m, &cfg).unwrap();
        ParseReport::new("toy", &cfg, 1, &r)
    }

    #[test]
    fn text_report() {
        let text = render_parse(&[toy_report()], None, Format::Text);
        assert!(text.starts_with("[parse]\nlattice=toy\n"));
        assert!(text.contains("\nbest=we meet\n"));
        assert!(text.contains("\nscore=-20.5\n"));
        assert!(text.contains("\nscore.bigram=-2.3\n"));
        assert!(text.contains("\nscore.grammar=-1.2\n"));
        assert!(text.contains("\nbeam_offset=8\n"));
        assert!(!text.contains("[timing]"));
    }

    #[test]
    fn timing_is_segregated() {
        let mut t = Timing::default();
        t.push("parse_ms", 1.25);
        let with = render_parse(&[toy_report()], Some(&t), Format::Text);
        let without = render_parse(&[toy_report()], None, Format::Text);
        assert!(with.starts_with(&without));
        assert!(with.ends_with("[timing]\nparse_ms=1.250\n"));
        assert_eq!(strip_timing(&with), without);
        let with = render_parse(&[toy_report()], Some(&t), Format::Structured);
        let without = render_parse(&[toy_report()], None, Format::Structured);
        assert!(with.contains("\"timing\""));
        assert_eq!(strip_timing(&with), without);
    }

    #[test]
    fn structured_report() {
        let s = render_parse(&[toy_report()], None, Format::Structured);
        let v: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["schema"], PARSE_SCHEMA);
        assert_eq!(v["parses"][0]["best"]["words"], json!(["we", "meet"]));
        assert_eq!(v["parses"][0]["best"]["bigram"], json!(-2.3));
        assert!(v.get("timing").is_none());
    }

    #[test]
    fn infinite_beam_prints_inf() {
        let f = config_fields(&ParserConfig::default().without_beam());
        assert!(f.contains(&("beam_offset".to_string(), "inf".to_string())));
    }
}
