//! Word accuracy of parses against reference transcripts, and chart size
//! comparisons.

use serde::Serialize;
use thiserror::Error;

use crate::decoder::{best_path, Lattice};
use crate::engine::{parse_lattice, EdgeStats, EngineError, Models, ParseResultSet, ParserConfig};
use crate::grammar::Grammar;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("the parse produced no result")]
    EmptyResult,
    #[error("reference transcript is empty")]
    EmptyReference,
    #[error("{lattices} lattices but {references} references")]
    CountMismatch { lattices: usize, references: usize },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AlignOp {
    Match,
    Substitution,
    Deletion,
    Insertion,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Alignment {
    pub ops: Vec<AlignOp>,
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
}

impl Alignment {
    pub fn errors(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }
}

/// Minimum edit distance alignment with unit costs. Ties are broken while
/// tracing back from the end of both sequences: match or substitution
/// first, then deletion, then insertion.
pub fn align<S: AsRef<str>, T: AsRef<str>>(reference: &[S], hypothesis: &[T]) -> Alignment {
    let (n, m) = (reference.len(), hypothesis.len());
    let w = m + 1;
    let mut d = vec![0usize; (n + 1) * w];
    for j in 0..=m {
        d[j] = j;
    }
    for i in 1..=n {
        d[i * w] = i;
        let r = reference[i - 1].as_ref();
        for j in 1..=m {
            let sub = (r != hypothesis[j - 1].as_ref()) as usize;
            d[i * w + j] = (d[(i - 1) * w + j - 1] + sub).min(d[(i - 1) * w + j] + 1).min(d[i * w + j - 1] + 1);
        }
    }
    let mut a = Alignment { ops: Vec::with_capacity(n.max(m)), substitutions: 0, deletions: 0, insertions: 0 };
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = d[i * w + j];
        if i > 0 && j > 0 {
            let same = reference[i - 1].as_ref() == hypothesis[j - 1].as_ref();
            if here == d[(i - 1) * w + j - 1] + (!same) as usize {
                if same {
                    a.ops.push(AlignOp::Match);
                } else {
                    a.ops.push(AlignOp::Substitution);
                    a.substitutions += 1;
                }
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && here == d[(i - 1) * w + j] + 1 {
            a.ops.push(AlignOp::Deletion);
            a.deletions += 1;
            i -= 1;
        } else {
            a.ops.push(AlignOp::Insertion);
            a.insertions += 1;
            j -= 1;
        }
    }
    a.ops.reverse();
    a
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub n_ref: usize,
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub word_accuracy: f64,
    pub covered_words: Vec<String>,
    pub edge_count_total: usize,
    pub edge_count_passive: usize,
    pub prosody_pruned_delta: Option<f64>,
}

/// The words of the best result: the full parse, or the parsed prefix.
pub fn covered_string(result: &ParseResultSet) -> Result<Vec<String>, EvalError> {
    result.best.as_ref().map(|b| b.words.clone()).ok_or(EvalError::EmptyResult)
}

/// `1 - (S + D + I) / N` against the words the parser could build into a
/// parse from the start of the utterance. Words after the covered prefix
/// count as deletions. Edge counts are left at zero.
pub fn strict_word_accuracy<S: AsRef<str>, T: AsRef<str>>(reference: &[S], covered: &[T]) -> Result<EvalReport, EvalError> {
    if reference.is_empty() {
        return Err(EvalError::EmptyReference);
    }
    let a = align(reference, covered);
    Ok(EvalReport {
        n_ref: reference.len(),
        substitutions: a.substitutions,
        deletions: a.deletions,
        insertions: a.insertions,
        word_accuracy: 1.0 - a.errors() as f64 / reference.len() as f64,
        covered_words: covered.iter().map(|w| w.as_ref().to_string()).collect(),
        edge_count_total: 0,
        edge_count_passive: 0,
        prosody_pruned_delta: None,
    })
}

pub fn edge_stats(result: &ParseResultSet) -> &EdgeStats {
    &result.stats
}

/// Relative edge reduction from switching prosody on: `(off - on) / off`.
pub fn prosody_pruned_delta(off: &EdgeStats, on: &EdgeStats) -> f64 {
    if off.total == 0 {
        return 0.0;
    }
    (off.total as f64 - on.total as f64) / off.total as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtteranceEval {
    pub name: String,
    pub reference: Vec<String>,
    pub strict: EvalReport,
    /// Accuracy of the recognizer's best path (acoustic plus bigram),
    /// ignoring the grammar.
    pub standard_word_accuracy: f64,
    pub standard_errors: usize,
    pub recognizer_words: Vec<String>,
    pub partial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusEval {
    pub utterances: Vec<UtteranceEval>,
    /// Mean of per-utterance strict accuracies.
    pub mean_word_accuracy: f64,
    /// `1 - errors / reference words` over the whole corpus.
    pub pooled_word_accuracy: f64,
    pub mean_standard_word_accuracy: f64,
    pub pooled_standard_word_accuracy: f64,
}

/// One reference transcript per non-blank line, in lattice order. `#`
/// starts a comment.
pub fn parse_references(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").split_whitespace().map(str::to_string).collect::<Vec<_>>())
        .filter(|r| !r.is_empty())
        .collect()
}

/// Parses one lattice and scores the result against `reference`. A parse
/// without any result covers nothing, so every reference word is deleted.
pub fn evaluate_utterance(
    name: &str,
    lattice: &Lattice,
    reference: &[String],
    grammar: &Grammar,
    models: &Models,
    config: &ParserConfig,
) -> Result<(UtteranceEval, ParseResultSet), EvalError> {
    let result = parse_lattice(lattice, grammar, models, config)?;
    let covered = covered_string(&result).unwrap_or_default();
    let mut strict = strict_word_accuracy(reference, &covered)?;
    strict.edge_count_total = result.stats.total;
    strict.edge_count_passive = result.stats.passive;
    let recognizer_words = best_path(lattice, &models.bigram);
    let standard = strict_word_accuracy(reference, &recognizer_words)?;
    let eval = UtteranceEval {
        name: name.to_string(),
        reference: reference.to_vec(),
        strict,
        standard_word_accuracy: standard.word_accuracy,
        standard_errors: standard.substitutions + standard.deletions + standard.insertions,
        recognizer_words,
        partial: result.partial,
    };
    Ok((eval, result))
}

pub fn aggregate(utterances: Vec<UtteranceEval>) -> CorpusEval {
    let n = utterances.len().max(1) as f64;
    let words: usize = utterances.iter().map(|u| u.strict.n_ref).sum();
    let errors: usize = utterances
        .iter()
        .map(|u| u.strict.substitutions + u.strict.deletions + u.strict.insertions)
        .sum();
    let standard_errors: usize = utterances.iter().map(|u| u.standard_errors).sum();
    let pooled = |e: f64| if words == 0 { 0.0 } else { 1.0 - e / words as f64 };
    CorpusEval {
        mean_word_accuracy: utterances.iter().map(|u| u.strict.word_accuracy).sum::<f64>() / n,
        pooled_word_accuracy: pooled(errors as f64),
        mean_standard_word_accuracy: utterances.iter().map(|u| u.standard_word_accuracy).sum::<f64>() / n,
        pooled_standard_word_accuracy: pooled(standard_errors as f64),
        utterances,
    }
}

/// Evaluates a corpus of `(name, lattice, reference)` triples.
pub fn evaluate_corpus(
    lattices: &[(String, Lattice)],
    references: &[Vec<String>],
    grammar: &Grammar,
    models: &Models,
    config: &ParserConfig,
) -> Result<CorpusEval, EvalError> {
    if lattices.len() != references.len() {
        return Err(EvalError::CountMismatch { lattices: lattices.len(), references: references.len() });
    }
    let rows = lattices
        .iter()
        .zip(references)
        .map(|((name, lat), r)| evaluate_utterance(name, lat, r, grammar, models, config).map(|(u, _)| u))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(aggregate(rows))
}
