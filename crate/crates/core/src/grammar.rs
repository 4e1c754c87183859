//! Probabilistic grammar: rules with feature constraints, the lexicon, and
//! the precompiled left-corner tables used for top-down prediction.
//!
//! Grammar files are line based:
//!
//! ```text
//! START S
//! RULE S -> NP VP : 0.0 { LHS.agr=C1.agr, C1.agr=C2.agr }
//! RULE NP -> n : -0.51 { LHS.agr=C1.agr }
//! LEX we n : 0.0 { agr=pl }
//! QUICKCHECK agr
//! ```
//!
//! Constraint paths start with `LHS` or `C1`..`Cn`. A right-hand side that
//! is not such a path is an atom. `QUICKCHECK` lists the feature paths whose
//! atoms form edge signatures; without it every atom-valued path of the
//! lexicon is used.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::feature::{FeatureStructure, PathConstraint};
use crate::types::LogScore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CatId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RuleId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LexId(pub u32);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GrammarError {
    #[error("line {line}: syntax error: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: undefined category {cat}")]
    UndefinedCategory { line: usize, cat: String },
    #[error("line {line}: log-probability {value} is positive")]
    PositiveLogProb { line: usize, value: f64 },
    #[error("line {line}: inconsistent feature constraints")]
    InconsistentConstraints { line: usize },
    #[error("no start category (grammar has no rules and no START line)")]
    NoStartCategory,
    #[error("unknown category {0}")]
    UnknownCategory(String),
}

#[derive(Debug, Clone)]
pub struct Rule {
    pub lhs: CatId,
    pub rhs: Vec<CatId>,
    pub log_prob: LogScore,
    pub constraints: Vec<PathConstraint>,
    /// Instance structure over `LHS`, `C1`..`Cn`; `None` when unconstrained.
    pub(crate) features: Option<FeatureStructure>,
}

#[derive(Debug, Clone)]
pub struct LexEntry {
    pub key: Arc<str>,
    pub cat: CatId,
    pub log_prob: LogScore,
    pub(crate) features: Option<FeatureStructure>,
}

impl LexEntry {
    pub fn features(&self) -> Option<&FeatureStructure> {
        self.features.as_ref()
    }
}

/// Quick-check signature: a category plus the atoms found at the
/// configured fast-check paths (`None` where the path is unbound).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Signature {
    pub cat: CatId,
    pub values: Vec<Option<Arc<str>>>,
}

/// `false` only when unification is certain to fail: the categories differ
/// or some fast-check path carries two different atoms.
pub fn quick_check(a: &Signature, b: &Signature) -> bool {
    a.cat == b.cat
        && a.values.iter().zip(&b.values).all(|(x, y)| match (x, y) {
            (Some(x), Some(y)) => x == y,
            _ => true,
        })
}

#[derive(Debug, Clone)]
pub struct Grammar {
    categories: Vec<String>,
    cat_index: HashMap<String, CatId>,
    lexical: Vec<bool>,
    rules: Vec<Rule>,
    lexicon: Vec<LexEntry>,
    by_key: HashMap<Arc<str>, Vec<LexId>>,
    start: CatId,
    goal: CatId,
    quick_check_paths: Vec<Vec<String>>,
    /// Per category: rules reachable by leftmost expansion with the best
    /// accumulated rule log-probability along the expansion chain.
    predict_table: Vec<Vec<(RuleId, LogScore)>>,
    /// Per category: reflexive-transitive left-corner closure.
    left_corners: Vec<BTreeSet<CatId>>,
    word_predict_table: Vec<BTreeSet<Arc<str>>>,
}

pub const GOAL_NAME: &str = "<GOAL>";

impl Grammar {
    pub fn parse(text: &str) -> Result<Grammar, GrammarError> {
        parse_grammar(text)
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn rule(&self, id: RuleId) -> &Rule {
        &self.rules[id.0 as usize]
    }

    pub fn lexicon(&self) -> &[LexEntry] {
        &self.lexicon
    }

    pub fn lex(&self, id: LexId) -> &LexEntry {
        &self.lexicon[id.0 as usize]
    }

    /// Lexical entries for `key`; empty if the word is unknown.
    pub fn lex_entries(&self, key: &str) -> &[LexId] {
        self.by_key.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn has_key(&self, key: &str) -> bool {
        self.by_key.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &Arc<str>> {
        self.by_key.keys()
    }

    pub fn start(&self) -> CatId {
        self.start
    }

    /// Synthetic category of the initial edge `GOAL -> . start`.
    pub fn goal(&self) -> CatId {
        self.goal
    }

    pub fn category(&self, name: &str) -> Option<CatId> {
        self.cat_index.get(name).copied()
    }

    pub fn cat_name(&self, c: CatId) -> &str {
        &self.categories[c.0 as usize]
    }

    pub fn is_lexical(&self, c: CatId) -> bool {
        self.lexical[c.0 as usize]
    }

    pub fn category_count(&self) -> usize {
        self.categories.len()
    }

    pub fn quick_check_paths(&self) -> &[Vec<String>] {
        &self.quick_check_paths
    }

    pub fn predict_table(&self, c: CatId) -> &[(RuleId, LogScore)] {
        &self.predict_table[c.0 as usize]
    }

    pub fn left_corners(&self, c: CatId) -> &BTreeSet<CatId> {
        &self.left_corners[c.0 as usize]
    }

    pub fn word_predict_table(&self, c: CatId) -> &BTreeSet<Arc<str>> {
        &self.word_predict_table[c.0 as usize]
    }

    /// Keys that can be consumed next by an active edge expecting any of
    /// `frontier`.
    pub fn predict_words<'a, I>(&self, frontier: I) -> Result<BTreeSet<Arc<str>>, GrammarError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut out = BTreeSet::new();
        for name in frontier {
            let c = self.category(name).ok_or_else(|| GrammarError::UnknownCategory(name.to_string()))?;
            out.extend(self.word_predict_table(c).iter().cloned());
        }
        Ok(out)
    }

    /// Same as [`Grammar::predict_words`] for interned categories.
    pub fn predict_words_for(&self, frontier: impl IntoIterator<Item = CatId>) -> BTreeSet<Arc<str>> {
        let mut out = BTreeSet::new();
        for c in frontier {
            out.extend(self.word_predict_table(c).iter().cloned());
        }
        out
    }

    /// Signature of a structure whose fast-check paths sit under `prefix`.
    pub fn signature(&self, cat: CatId, fs: Option<&FeatureStructure>, prefix: Option<&str>) -> Signature {
        let values = self
            .quick_check_paths
            .iter()
            .map(|p| {
                let fs = fs?;
                let mut path: Vec<&str> = Vec::with_capacity(p.len() + 1);
                path.extend(prefix);
                path.extend(p.iter().map(String::as_str));
                fs.atom_at(&path).map(Arc::from)
            })
            .collect();
        Signature { cat, values }
    }

    pub fn display_rule(&self, id: RuleId) -> String {
        let r = self.rule(id);
        let rhs: Vec<&str> = r.rhs.iter().map(|&c| self.cat_name(c)).collect();
        format!("{} -> {}", self.cat_name(r.lhs), rhs.join(" "))
    }

    /// True if any rule or lexical entry carries feature constraints.
    pub fn has_features(&self) -> bool {
        self.rules.iter().any(|r| r.features.is_some()) || self.lexicon.iter().any(|l| l.features.is_some())
    }
}

impl fmt::Display for Grammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "START {}", self.cat_name(self.start))?;
        for (i, r) in self.rules.iter().enumerate() {
            writeln!(f, "RULE {} : {}", self.display_rule(RuleId(i as u32)), r.log_prob)?;
        }
        for l in &self.lexicon {
            writeln!(f, "LEX {} {} : {}", l.key, self.cat_name(l.cat), l.log_prob)?;
        }
        Ok(())
    }
}

struct RawRule {
    line: usize,
    lhs: String,
    rhs: Vec<String>,
    log_prob: f64,
    constraints: Vec<PathConstraint>,
}

struct RawLex {
    line: usize,
    key: String,
    cat: String,
    log_prob: f64,
    constraints: Vec<PathConstraint>,
}

fn syntax(line: usize, msg: impl Into<String>) -> GrammarError {
    GrammarError::Syntax { line, msg: msg.into() }
}

fn parse_log_prob(line: usize, tok: &str) -> Result<f64, GrammarError> {
    let value: f64 = tok.parse().map_err(|_| syntax(line, format!("bad log-probability {tok:?}")))?;
    if !value.is_finite() {
        return Err(syntax(line, format!("non-finite log-probability {tok:?}")));
    }
    if value > 0.0 {
        return Err(GrammarError::PositiveLogProb { line, value });
    }
    Ok(value)
}

/// Splits `"<head> : <logprob> { ... }"` into the head, optional log-prob
/// token, and optional constraint body.
fn split_line(line: usize, s: &str) -> Result<(&str, Option<&str>, Option<&str>), GrammarError> {
    let (before_brace, body) = match s.find('{') {
        Some(i) => {
            let rest = &s[i + 1..];
            let close = rest.rfind('}').ok_or_else(|| syntax(line, "unterminated '{'"))?;
            if !rest[close + 1..].trim().is_empty() {
                return Err(syntax(line, "text after '}'"));
            }
            (&s[..i], Some(&rest[..close]))
        }
        None => (s, None),
    };
    match before_brace.split_once(':') {
        Some((head, lp)) => {
            let lp = lp.trim();
            if lp.is_empty() || lp.contains(char::is_whitespace) {
                return Err(syntax(line, "expected one log-probability after ':'"));
            }
            Ok((head, Some(lp), body))
        }
        None => Ok((before_brace, None, body)),
    }
}

fn is_position(tok: &str) -> bool {
    tok == "LHS" || (tok.len() > 1 && tok.starts_with('C') && tok[1..].chars().all(|c| c.is_ascii_digit()))
}

fn parse_path(tok: &str) -> Vec<String> {
    tok.split('.').map(str::to_string).collect()
}

fn parse_rule_constraints(line: usize, body: &str, arity: usize) -> Result<Vec<PathConstraint>, GrammarError> {
    let check_pos = |p: &[String]| -> Result<(), GrammarError> {
        let head = &p[0];
        if head == "LHS" {
            return Ok(());
        }
        let idx: usize = head[1..].parse().map_err(|_| syntax(line, format!("bad position {head}")))?;
        if idx == 0 || idx > arity {
            return Err(syntax(line, format!("position {head} out of range for a rule with {arity} daughters")));
        }
        Ok(())
    };
    let mut out = Vec::new();
    for item in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (l, r) = item.split_once('=').ok_or_else(|| syntax(line, format!("expected path=value in {item:?}")))?;
        let (l, r) = (l.trim(), r.trim());
        let lp = parse_path(l);
        if !is_position(&lp[0]) {
            return Err(syntax(line, format!("constraint path {l:?} must start with LHS or C<n>")));
        }
        check_pos(&lp)?;
        let rp = parse_path(r);
        if is_position(&rp[0]) {
            check_pos(&rp)?;
            out.push(PathConstraint::Shared(lp, rp));
        } else if r.contains('.') || r.is_empty() {
            return Err(syntax(line, format!("bad constraint value {r:?}")));
        } else {
            out.push(PathConstraint::Value(lp, r.to_string()));
        }
    }
    Ok(out)
}

fn parse_lex_constraints(line: usize, body: &str) -> Result<Vec<PathConstraint>, GrammarError> {
    let mut out = Vec::new();
    for item in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (l, r) = item.split_once('=').ok_or_else(|| syntax(line, format!("expected attr=atom in {item:?}")))?;
        let (l, r) = (l.trim(), r.trim());
        if l.is_empty() || r.is_empty() || r.contains(char::is_whitespace) {
            return Err(syntax(line, format!("bad feature {item:?}")));
        }
        out.push(PathConstraint::Value(parse_path(l), r.to_string()));
    }
    Ok(out)
}

pub fn parse_grammar(text: &str) -> Result<Grammar, GrammarError> {
    let mut start: Option<(usize, String)> = None;
    let mut raw_rules = Vec::new();
    let mut raw_lex = Vec::new();
    let mut qc_paths: Option<Vec<Vec<String>>> = None;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.split('#').next().unwrap_or("").trim();
        if s.is_empty() {
            continue;
        }
        let (kw, rest) = s.split_once(char::is_whitespace).unwrap_or((s, ""));
        match kw {
            "START" => {
                let toks: Vec<&str> = rest.split_whitespace().collect();
                if toks.len() != 1 {
                    return Err(syntax(line, "START takes exactly one category"));
                }
                start = Some((line, toks[0].to_string()));
            }
            "QUICKCHECK" => {
                qc_paths.get_or_insert_with(Vec::new).extend(rest.split_whitespace().map(parse_path));
            }
            "RULE" => {
                let (head, lp, body) = split_line(line, rest)?;
                let (lhs, rhs) = head.split_once("->").ok_or_else(|| syntax(line, "expected '->'"))?;
                let lhs: Vec<&str> = lhs.split_whitespace().collect();
                if lhs.len() != 1 {
                    return Err(syntax(line, "rule needs exactly one left-hand category"));
                }
                let rhs: Vec<String> = rhs.split_whitespace().map(str::to_string).collect();
                if rhs.is_empty() {
                    return Err(syntax(line, "empty right-hand side"));
                }
                let log_prob = match lp {
                    Some(t) => parse_log_prob(line, t)?,
                    None => return Err(syntax(line, "missing ': <logprob>'")),
                };
                let constraints = match body {
                    Some(b) => parse_rule_constraints(line, b, rhs.len())?,
                    None => Vec::new(),
                };
                raw_rules.push(RawRule { line, lhs: lhs[0].to_string(), rhs, log_prob, constraints });
            }
            "LEX" => {
                let (head, lp, body) = split_line(line, rest)?;
                let toks: Vec<&str> = head.split_whitespace().collect();
                if toks.len() != 2 {
                    return Err(syntax(line, "expected LEX <key> <category>"));
                }
                let log_prob = match lp {
                    Some(t) => parse_log_prob(line, t)?,
                    None => 0.0,
                };
                let constraints = match body {
                    Some(b) => parse_lex_constraints(line, b)?,
                    None => Vec::new(),
                };
                raw_lex.push(RawLex { line, key: toks[0].to_string(), cat: toks[1].to_string(), log_prob, constraints });
            }
            other => return Err(syntax(line, format!("unknown directive {other:?}"))),
        }
    }

    let start_name = match (&start, raw_rules.first()) {
        (Some((_, s)), _) => s.clone(),
        (None, Some(r)) => r.lhs.clone(),
        (None, None) => return Err(GrammarError::NoStartCategory),
    };

    let mut categories: Vec<String> = Vec::new();
    let mut cat_index: HashMap<String, CatId> = HashMap::new();
    let mut intern = |name: &str, categories: &mut Vec<String>| -> CatId {
        if let Some(&c) = cat_index.get(name) {
            return c;
        }
        let c = CatId(categories.len() as u32);
        categories.push(name.to_string());
        cat_index.insert(name.to_string(), c);
        c
    };

    for r in &raw_rules {
        intern(&r.lhs, &mut categories);
    }
    for l in &raw_lex {
        intern(&l.cat, &mut categories);
    }
    let defined = categories.len();
    let mut lexical = vec![false; defined];
    for l in &raw_lex {
        lexical[cat_index_of(&categories, &l.cat)] = true;
    }

    let mut rules = Vec::with_capacity(raw_rules.len());
    for r in raw_rules {
        let lhs = intern(&r.lhs, &mut categories);
        let mut rhs = Vec::with_capacity(r.rhs.len());
        for name in &r.rhs {
            let c = intern(name, &mut categories);
            if c.0 as usize >= defined {
                return Err(GrammarError::UndefinedCategory { line: r.line, cat: name.clone() });
            }
            rhs.push(c);
        }
        let features = if r.constraints.is_empty() {
            None
        } else {
            Some(
                FeatureStructure::from_constraints(&r.constraints)
                    .ok_or(GrammarError::InconsistentConstraints { line: r.line })?,
            )
        };
        rules.push(Rule { lhs, rhs, log_prob: r.log_prob, constraints: r.constraints, features });
    }

    let start_cat = match cat_index_lookup(&categories, &start_name) {
        Some(c) if (c.0 as usize) < defined => c,
        _ => {
            return Err(GrammarError::UndefinedCategory { line: start.map(|(l, _)| l).unwrap_or(0), cat: start_name });
        }
    };

    let mut lexicon = Vec::with_capacity(raw_lex.len());
    let mut by_key: HashMap<Arc<str>, Vec<LexId>> = HashMap::new();
    for l in raw_lex {
        let features = if l.constraints.is_empty() {
            None
        } else {
            Some(FeatureStructure::from_constraints(&l.constraints).ok_or(GrammarError::InconsistentConstraints { line: l.line })?)
        };
        let key: Arc<str> = Arc::from(l.key.as_str());
        let id = LexId(lexicon.len() as u32);
        by_key.entry(key.clone()).or_default().push(id);
        lexicon.push(LexEntry { key, cat: CatId(cat_index_of(&categories, &l.cat) as u32), log_prob: l.log_prob, features });
    }

    let goal = CatId(categories.len() as u32);
    categories.push(GOAL_NAME.to_string());
    lexical.push(false);
    let cat_index: HashMap<String, CatId> =
        categories.iter().enumerate().map(|(i, n)| (n.clone(), CatId(i as u32))).collect();

    let quick_check_paths = qc_paths.unwrap_or_else(|| default_quick_check_paths(&lexicon));

    let (predict_table, left_corners) = build_predict_tables(categories.len(), &rules);
    let mut word_predict_table = vec![BTreeSet::new(); categories.len()];
    for (c, lcs) in left_corners.iter().enumerate() {
        for l in &lexicon {
            if lcs.contains(&l.cat) {
                word_predict_table[c].insert(l.key.clone());
            }
        }
    }

    Ok(Grammar {
        categories,
        cat_index,
        lexical,
        rules,
        lexicon,
        by_key,
        start: start_cat,
        goal,
        quick_check_paths,
        predict_table,
        left_corners,
        word_predict_table,
    })
}

fn cat_index_of(categories: &[String], name: &str) -> usize {
    categories.iter().position(|c| c == name).expect("category interned")
}

fn cat_index_lookup(categories: &[String], name: &str) -> Option<CatId> {
    categories.iter().position(|c| c == name).map(|i| CatId(i as u32))
}

fn default_quick_check_paths(lexicon: &[LexEntry]) -> Vec<Vec<String>> {
    let mut paths = BTreeSet::new();
    for l in lexicon {
        if let Some(fs) = &l.features {
            paths.extend(fs.atom_paths().into_iter().map(|(p, _)| p));
        }
    }
    paths.into_iter().collect()
}

#[derive(PartialEq)]
struct Scored(LogScore, CatId);

impl Eq for Scored {}

impl PartialOrd for Scored {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scored {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then_with(|| other.1.cmp(&self.1))
    }
}

/// Best-first closure over leftmost expansions. Rule scores are `<= 0`, so
/// a Dijkstra-style search on the max accumulated score is exact.
fn build_predict_tables(n: usize, rules: &[Rule]) -> (Vec<Vec<(RuleId, LogScore)>>, Vec<BTreeSet<CatId>>) {
    let mut by_lhs: Vec<Vec<RuleId>> = vec![Vec::new(); n];
    for (i, r) in rules.iter().enumerate() {
        by_lhs[r.lhs.0 as usize].push(RuleId(i as u32));
    }
    let mut tables = Vec::with_capacity(n);
    let mut closures = Vec::with_capacity(n);
    for c in 0..n {
        let mut best: BTreeMap<CatId, LogScore> = BTreeMap::new();
        let mut heap = BinaryHeap::new();
        heap.push(Scored(0.0, CatId(c as u32)));
        let mut done = BTreeSet::new();
        while let Some(Scored(score, cat)) = heap.pop() {
            if !done.insert(cat) {
                continue;
            }
            best.insert(cat, score);
            for &rid in &by_lhs[cat.0 as usize] {
                let r = &rules[rid.0 as usize];
                let next = r.rhs[0];
                if !done.contains(&next) {
                    heap.push(Scored(score + r.log_prob, next));
                }
            }
        }
        let mut table = Vec::new();
        for (&cat, &score) in &best {
            for &rid in &by_lhs[cat.0 as usize] {
                table.push((rid, score + rules[rid.0 as usize].log_prob));
            }
        }
        table.sort_by_key(|&(rid, _)| rid);
        tables.push(table);
        closures.push(best.keys().copied().collect());
    }
    (tables, closures)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = "
        RULE S -> NP VP : 0.0
        RULE NP -> n : -0.51
        RULE NP -> det n : -0.92
        RULE VP -> v : -0.69
        RULE VP -> v NP : -0.7
        LEX we n : 0.0
        LEX the det
        LEX meet v : 0.0
    ";

    #[test]
    fn parses_rules_and_lexicon() {
        let g = Grammar::parse("RULE S -> NP VP : 0.0\nRULE NP -> n : -0.51\nRULE VP -> v : -0.69\nLEX we n : 0.0\nLEX meet v").unwrap();
        assert_eq!(g.rules().len(), 3);
        assert_eq!(g.lexicon().len(), 2);
        assert_eq!(g.cat_name(g.start()), "S");
        assert_eq!(g.lex(g.lex_entries("meet")[0]).log_prob, 0.0);
    }

    #[test]
    fn undefined_rhs_category_is_rejected() {
        let err = Grammar::parse("RULE S -> NP VP : 0.0\nRULE NP -> n : -0.51\nLEX we n : 0.0").unwrap_err();
        assert_eq!(err, GrammarError::UndefinedCategory { line: 1, cat: "VP".into() });
        let err = Grammar::parse("RULE S -> XP : 0.0\nLEX we n").unwrap_err();
        assert!(matches!(err, GrammarError::UndefinedCategory { cat, .. } if cat == "XP"));
    }

    #[test]
    fn empty_grammar_has_no_start() {
        assert_eq!(Grammar::parse("").unwrap_err(), GrammarError::NoStartCategory);
        assert_eq!(Grammar::parse("# only a comment\n").unwrap_err(), GrammarError::NoStartCategory);
    }

    #[test]
    fn positive_log_prob_is_rejected() {
        let err = Grammar::parse("RULE S -> n : 0.5\nLEX we n").unwrap_err();
        assert_eq!(err, GrammarError::PositiveLogProb { line: 1, value: 0.5 });
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = Grammar::parse("LEX we n\nRULE S n : 0.0").unwrap_err();
        assert!(matches!(err, GrammarError::Syntax { line: 2, .. }));
        let err = Grammar::parse("LEX we n\nRULE S -> n : 0.0 { C2.a=b }").unwrap_err();
        assert!(matches!(err, GrammarError::Syntax { line: 2, .. }));
        let err = Grammar::parse("FOO bar").unwrap_err();
        assert!(matches!(err, GrammarError::Syntax { line: 1, .. }));
    }

    #[test]
    fn closure_accumulates_chain_scores() {
        let g = Grammar::parse(TOY).unwrap();
        let s = g.category("S").unwrap();
        let table: Vec<(String, f64)> =
            g.predict_table(s).iter().map(|&(r, sc)| (g.display_rule(r), sc)).collect();
        let get = |name: &str| table.iter().find(|(n, _)| n == name).map(|&(_, s)| s);
        assert_eq!(get("S -> NP VP"), Some(0.0));
        assert_eq!(get("NP -> n"), Some(-0.51));
        assert_eq!(get("NP -> det n"), Some(-0.92));
        assert_eq!(get("VP -> v"), None);
    }

    #[test]
    fn word_prediction() {
        let g = Grammar::parse(TOY).unwrap();
        let vp: Vec<String> = g.predict_words(["VP"]).unwrap().iter().map(|k| k.to_string()).collect();
        assert_eq!(vp, vec!["meet"]);
        assert!(g.predict_words(std::iter::empty()).unwrap().is_empty());
        let n: Vec<String> = g.predict_words(["n"]).unwrap().iter().map(|k| k.to_string()).collect();
        assert_eq!(n, vec!["we"]);
        assert!(matches!(g.predict_words(["XP"]), Err(GrammarError::UnknownCategory(_))));
    }

    #[test]
    fn features_and_quick_check_paths() {
        let g = Grammar::parse(
            "RULE S -> NP VP : 0.0 { C1.agr=C2.agr }\nRULE NP -> n : 0.0 { LHS.agr=C1.agr }\nRULE VP -> v : 0.0 { LHS.agr=C1.agr }\nLEX we n { agr=pl, case=nom }\nLEX meets v { agr=sg }",
        )
        .unwrap();
        assert_eq!(g.quick_check_paths(), &[vec!["agr".to_string()], vec!["case".to_string()]]);
        let we = g.lex(g.lex_entries("we")[0]);
        let sig = g.signature(we.cat, we.features(), None);
        assert_eq!(sig.values, vec![Some(Arc::from("pl")), Some(Arc::from("nom"))]);
    }

    #[test]
    fn quick_check_cases() {
        let n = CatId(0);
        let sig = |v: Option<&str>| Signature { cat: n, values: vec![v.map(Arc::from)] };
        assert!(quick_check(&sig(Some("pl")), &sig(Some("pl"))));
        assert!(!quick_check(&sig(Some("pl")), &sig(Some("sg"))));
        assert!(quick_check(&sig(None), &sig(Some("sg"))));
        assert!(!quick_check(&Signature { cat: CatId(1), values: vec![None] }, &sig(None)));
    }
}
