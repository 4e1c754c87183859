//! Small bundled corpora for tests, demos and benchmarks.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decoder::{load_lattice, Lattice};
use crate::grammar::{parse_grammar, CatId, Grammar};
use crate::engine::Models;
use crate::eval::parse_references;
use crate::models::{BigramModel, CategoryTrigram};
use crate::types::{Frame, WordHypothesis};

pub const TOY_GRAMMAR: &str = include_str!("../data/toy/grammar.txt");
pub const TOY_LATTICE: &str = include_str!("../data/toy/lattice.txt");
pub const TOY_BIGRAM: &str = include_str!("../data/toy/bigram.txt");
/// The toy utterance with a second, slightly later end for "we".
pub const TOY_FAMILY_LATTICE: &str = include_str!("../data/toy/family.txt");

pub fn toy_grammar() -> Grammar {
    parse_grammar(TOY_GRAMMAR).expect("bundled toy grammar is valid")
}

pub fn toy_lattice() -> Lattice {
    load_lattice(TOY_LATTICE).expect("bundled toy lattice is valid")
}

pub fn toy_bigram() -> BigramModel {
    BigramModel::parse(TOY_BIGRAM).expect("bundled toy bigram is valid")
}

/// A bundled evaluation corpus: grammar, models, named lattices and one
/// reference transcript per lattice.
#[derive(Debug, Clone)]
pub struct BundledCorpus {
    pub grammar: Grammar,
    pub models: Models,
    pub lattices: Vec<(String, Lattice)>,
    pub references: Vec<Vec<String>>,
}

fn bundled(grammar: &str, bigram: Option<&str>, trigram: Option<&str>, lattices: &[(&str, &str)], refs: &str) -> BundledCorpus {
    BundledCorpus {
        grammar: parse_grammar(grammar).expect("bundled grammar is valid"),
        models: Models {
            bigram: bigram.map_or_else(BigramModel::flat, |b| BigramModel::parse(b).expect("bundled bigram is valid")),
            trigram: trigram.map(|t| CategoryTrigram::parse(t).expect("bundled trigram is valid")),
        },
        lattices: lattices
            .iter()
            .map(|(n, t)| (n.to_string(), load_lattice(t).expect("bundled lattice is valid")))
            .collect(),
        references: parse_references(refs),
    }
}

pub const BOUNDARY_GRAMMAR: &str = include_str!("../data/boundary/grammar.txt");
pub const BOUNDARY_TRIGRAM: &str = include_str!("../data/boundary/trigram.txt");
pub const BOUNDARY_REFERENCES: &str = include_str!("../data/boundary/references.txt");
pub const BOUNDARY_LATTICES: [(&str, &str); 5] = [
    ("u1", include_str!("../data/boundary/u1.txt")),
    ("u2", include_str!("../data/boundary/u2.txt")),
    ("u3", include_str!("../data/boundary/u3.txt")),
    ("u4", include_str!("../data/boundary/u4.txt")),
    ("u5", include_str!("../data/boundary/u5.txt")),
];

/// Utterances of several sentences with a near-certain B3 boundary after
/// each sentence-final verb, and competing hypotheses that would continue
/// the verb phrase across it.
pub fn boundary_corpus() -> BundledCorpus {
    bundled(BOUNDARY_GRAMMAR, None, Some(BOUNDARY_TRIGRAM), &BOUNDARY_LATTICES, BOUNDARY_REFERENCES)
}

pub const EVAL_GRAMMAR: &str = include_str!("../data/eval/grammar.txt");
pub const EVAL_REFERENCES: &str = include_str!("../data/eval/references.txt");
pub const EVAL_LATTICES: [(&str, &str); 10] = [
    ("e01", include_str!("../data/eval/e01.txt")),
    ("e02", include_str!("../data/eval/e02.txt")),
    ("e03", include_str!("../data/eval/e03.txt")),
    ("e04", include_str!("../data/eval/e04.txt")),
    ("e05", include_str!("../data/eval/e05.txt")),
    ("e06", include_str!("../data/eval/e06.txt")),
    ("e07", include_str!("../data/eval/e07.txt")),
    ("e08", include_str!("../data/eval/e08.txt")),
    ("e09", include_str!("../data/eval/e09.txt")),
    ("e10", include_str!("../data/eval/e10.txt")),
];

/// Ten small utterances with references covering exact matches,
/// substitutions, insertions, deletions, partial parses and no parse.
/// The expected outcomes are worked out in `data/eval/references.txt`.
pub fn eval_corpus() -> BundledCorpus {
    bundled(EVAL_GRAMMAR, None, None, &EVAL_LATTICES, EVAL_REFERENCES)
}

pub const FEATURE_GRAMMAR: &str = include_str!("../data/features/grammar.txt");
pub const FEATURE_LATTICES: [(&str, &str); 3] = [
    ("f1", include_str!("../data/features/f1.txt")),
    ("f2", include_str!("../data/features/f2.txt")),
    ("f3", include_str!("../data/features/f3.txt")),
];

/// Agreement-heavy grammar and dense confusion lattices, for measuring the
/// share of time spent in unification. No references.
pub fn feature_corpus() -> BundledCorpus {
    bundled(FEATURE_GRAMMAR, None, None, &FEATURE_LATTICES, "")
}

/// Shared vocabulary of random corpora, so any random lattice can be
/// parsed with any random grammar.
pub const VOCABULARY: [&str; 6] = ["w0", "w1", "w2", "w3", "w4", "w5"];

const PHRASAL: [&str; 4] = ["S", "A", "B", "C"];
const PRETERMINALS: [&str; 3] = ["x", "y", "z"];

pub const MAX_RANDOM_RULES: usize = 12;
pub const MAX_RANDOM_FRAMES: Frame = 20;
pub const MAX_RANDOM_HYPOTHESES: usize = 8;

fn log_prob(rng: &mut impl Rng, lo: f64) -> f64 {
    // Two decimals so the text form round-trips exactly.
    (rng.gen_range(lo..=0.0) * 100.0).round() / 100.0
}

/// A random context-free grammar over [`VOCABULARY`] with at most
/// [`MAX_RANDOM_RULES`] rules, returned as grammar-file text.
fn pick_symbol(rng: &mut impl Rng, phrasal: &[&'static str]) -> &'static str {
    if rng.gen_bool(0.55) {
        PRETERMINALS[rng.gen_range(0..PRETERMINALS.len())]
    } else {
        phrasal[rng.gen_range(0..phrasal.len())]
    }
}

pub fn random_grammar_text(rng: &mut impl Rng) -> String {
    let phrasal = &PHRASAL[..rng.gen_range(2..=PHRASAL.len())];
    let mut out = String::new();
    let rule_count = rng.gen_range(phrasal.len()..=MAX_RANDOM_RULES);
    for i in 0..rule_count {
        // Every phrasal category gets at least one rule.
        let lhs = if i < phrasal.len() { phrasal[i] } else { phrasal[rng.gen_range(0..phrasal.len())] };
        let len = rng.gen_range(1..=3);
        let rhs: Vec<&str> = (0..len).map(|_| pick_symbol(rng, phrasal)).collect();
        out.push_str(&format!("RULE {lhs} -> {} : {}\n", rhs.join(" "), log_prob(rng, -2.0)));
    }
    for (i, w) in VOCABULARY.iter().enumerate() {
        out.push_str(&format!("LEX {w} {} : {}\n", PRETERMINALS[i % PRETERMINALS.len()], log_prob(rng, -1.0)));
        let other = PRETERMINALS[rng.gen_range(0..PRETERMINALS.len())];
        if rng.gen_bool(0.3) && other != PRETERMINALS[i % PRETERMINALS.len()] {
            out.push_str(&format!("LEX {w} {other} : {}\n", log_prob(rng, -1.0)));
        }
    }
    out
}

pub fn random_grammar(rng: &mut impl Rng) -> Grammar {
    parse_grammar(&random_grammar_text(rng)).expect("generated grammars are well-formed")
}

/// Samples a word string derivable from the start category, or `None` if
/// the sample grew past `max_words`.
pub fn sample_sentence(grammar: &Grammar, rng: &mut impl Rng, max_words: usize) -> Option<Vec<String>> {
    fn expand(g: &Grammar, c: CatId, rng: &mut dyn RngCore, out: &mut Vec<String>, max: usize, depth: usize) -> bool {
        if out.len() > max || depth > 12 {
            return false;
        }
        let rules: Vec<_> = g.rules().iter().filter(|r| r.lhs == c).collect();
        if rules.is_empty() || (g.is_lexical(c) && rng.gen_bool(0.8)) {
            let words: Vec<_> = g.lexicon().iter().filter(|l| l.cat == c).collect();
            if words.is_empty() {
                return false;
            }
            out.push(words[rng.gen_range(0..words.len())].key.to_string());
            return true;
        }
        let r = rules[rng.gen_range(0..rules.len())];
        r.rhs.iter().all(|&d| expand(g, d, rng, out, max, depth + 1))
    }
    let mut out = Vec::new();
    (expand(grammar, grammar.start(), rng, &mut out, max_words, 0) && out.len() <= max_words && !out.is_empty())
        .then_some(out)
}

fn acoustic(rng: &mut impl Rng) -> f64 {
    (rng.gen_range(-10.0..-0.5f64) * 100.0).round() / 100.0
}

/// A random lattice of at most [`MAX_RANDOM_FRAMES`] frames and
/// [`MAX_RANDOM_HYPOTHESES`] hypotheses. With a grammar, it usually embeds
/// a sentence the grammar derives, padded with distractors and occasional
/// family members (the same word with a neighbouring end frame).
pub fn random_lattice(rng: &mut impl Rng, grammar: Option<&Grammar>) -> Lattice {
    let frames = rng.gen_range(4..=MAX_RANDOM_FRAMES);
    let mut hyps: Vec<WordHypothesis> = Vec::new();
    let sentence = grammar.filter(|_| rng.gen_bool(0.8)).and_then(|g| {
        (0..10).find_map(|_| sample_sentence(g, rng, 5))
    });
    if let Some(words) = sentence.filter(|w| w.len() as Frame <= frames) {
        // Random segmentation of [0, frames) into one span per word.
        let mut cuts: Vec<Frame> = (1..frames).collect();
        cuts.shuffle(rng);
        let mut cuts: Vec<Frame> = cuts.into_iter().take(words.len() - 1).collect();
        cuts.push(0);
        cuts.push(frames);
        cuts.sort_unstable();
        for (w, span) in words.iter().zip(cuts.windows(2)) {
            hyps.push(WordHypothesis::new(span[0], span[1], w.clone(), acoustic(rng)));
        }
    }
    while hyps.len() < MAX_RANDOM_HYPOTHESES && rng.gen_bool(0.75) {
        let h = if !hyps.is_empty() && rng.gen_bool(0.3) {
            let base = hyps[rng.gen_range(0..hyps.len())].clone();
            let to = if rng.gen_bool(0.5) { base.to + 1 } else { base.to.saturating_sub(1) };
            if to <= base.from || to > frames {
                continue;
            }
            WordHypothesis::new(base.from, to, base.key, acoustic(rng))
        } else {
            let from = rng.gen_range(0..frames);
            let to = rng.gen_range(from + 1..=frames);
            WordHypothesis::new(from, to, VOCABULARY[rng.gen_range(0..VOCABULARY.len())], acoustic(rng))
        };
        hyps.push(h);
    }
    hyps.truncate(MAX_RANDOM_HYPOTHESES);
    if hyps.is_empty() {
        hyps.push(WordHypothesis::new(0, frames, VOCABULARY[0], acoustic(rng)));
    }
    Lattice::new(frames, hyps, Vec::new()).expect("generated lattices are well-formed")
}

/// The standard random test corpus: `grammars` grammars and `lattices`
/// lattices, each lattice built around a sentence of one of the grammars.
pub fn random_corpus(seed: u64, grammars: usize, lattices: usize) -> (Vec<Grammar>, Vec<Lattice>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gs: Vec<Grammar> = (0..grammars).map(|_| random_grammar(&mut rng)).collect();
    let ls = (0..lattices)
        .map(|i| {
            let g = (!gs.is_empty()).then(|| &gs[i % gs.len()]);
            random_lattice(&mut rng, g)
        })
        .collect();
    (gs, ls)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{parse_lattice, ParserConfig};
    use crate::eval::{covered_string, evaluate_corpus};

    #[test]
    fn bundled_corpora_load() {
        assert_eq!(boundary_corpus().references.len(), BOUNDARY_LATTICES.len());
        assert_eq!(eval_corpus().references.len(), EVAL_LATTICES.len());
        assert!(feature_corpus().references.is_empty());
    }

    #[test]
    fn boundary_prosody_prunes_without_changing_best() {
        let c = boundary_corpus();
        let on = ParserConfig::default();
        let off = ParserConfig { prosody: false, ..on };
        for ((name, lat), reference) in c.lattices.iter().zip(&c.references) {
            let a = parse_lattice(lat, &c.grammar, &c.models, &off).unwrap();
            let b = parse_lattice(lat, &c.grammar, &c.models, &on).unwrap();
            assert_eq!(covered_string(&a).unwrap(), *reference, "{name}");
            assert_eq!(covered_string(&b).unwrap(), *reference, "{name}");
            assert!((b.stats.total as f64) <= 0.9 * a.stats.total as f64, "{name}");
        }
    }

    #[test]
    fn eval_corpus_matches_hand_computation() {
        let c = eval_corpus();
        let e = evaluate_corpus(&c.lattices, &c.references, &c.grammar, &c.models, &ParserConfig::default()).unwrap();
        let strict: Vec<f64> = e.utterances.iter().map(|u| u.strict.word_accuracy).collect();
        assert_eq!(strict, [1.0, 0.5, 0.5, 1.0, 0.5, 1.0, 0.5, 1.0, 0.6, 0.0]);
        let standard: Vec<f64> = e.utterances.iter().map(|u| u.standard_word_accuracy).collect();
        assert_eq!(standard, [1.0, 0.5, 0.75, 0.75, 0.5, 0.0, 0.5, 1.0, 0.6, 0.5]);
        assert!((e.mean_word_accuracy - 0.66).abs() < 1e-12);
        assert!((e.pooled_word_accuracy - 20.0 / 29.0).abs() < 1e-12);
        assert!((e.mean_standard_word_accuracy - 0.61).abs() < 1e-12);
        assert!((e.pooled_standard_word_accuracy - 19.0 / 29.0).abs() < 1e-12);
    }
}
