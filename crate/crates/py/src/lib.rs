//! Python bindings: grammars, lattices, parsing, evaluation and the
//! exhaustive reference parser.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use lriparse::engine::{Models as CoreModels, ParseResultSet};
use lriparse::eval;
use lriparse::grammar::CatId;
use lriparse::models::{BigramModel, CategoryTrigram};
use lriparse::oracle;
use lriparse::parallel::{parallel_parse, WorkerConfig};
use lriparse::report::{self, Format, ParseReport};
use lriparse::{load_lattice, parse_grammar, parse_lattice, Grammar as CoreGrammar, Lattice as CoreLattice, ParserConfig, Weights};

create_exception!(lriparse, LriparseError, PyValueError, "Invalid input to the parser.");

fn err(e: impl std::fmt::Display) -> PyErr {
    LriparseError::new_err(e.to_string())
}

#[pyclass(frozen, module = "lriparse")]
struct Grammar {
    inner: CoreGrammar,
}

#[pymethods]
impl Grammar {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(Grammar { inner: parse_grammar(text).map_err(err)? })
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        Grammar::new(&std::fs::read_to_string(path).map_err(err)?)
    }

    #[getter]
    fn start(&self) -> String {
        self.inner.cat_name(self.inner.start()).to_string()
    }

    #[getter]
    fn rule_count(&self) -> usize {
        self.inner.rules().len()
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }
}

#[pyclass(frozen, module = "lriparse")]
struct Lattice {
    inner: CoreLattice,
}

#[pymethods]
impl Lattice {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(Lattice { inner: load_lattice(text).map_err(err)? })
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        Lattice::new(&std::fs::read_to_string(path).map_err(err)?)
    }

    #[getter]
    fn frame_count(&self) -> u32 {
        self.inner.frame_count
    }

    #[getter]
    fn utterance_end(&self) -> u32 {
        self.inner.utterance_end()
    }

    /// `(key, from, to, score)` tuples ordered by end frame.
    #[getter]
    fn words(&self) -> Vec<(String, u32, u32, f64)> {
        self.inner.hypotheses.iter().map(|h| (h.key.clone(), h.from, h.to, h.score)).collect()
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn __len__(&self) -> usize {
        self.inner.hypotheses.len()
    }
}

#[pyclass(frozen, module = "lriparse")]
struct Models {
    inner: CoreModels,
}

#[pymethods]
impl Models {
    /// Bigram and category-trigram model texts; a missing bigram means a
    /// flat model, a missing trigram disables prosody scoring.
    #[new]
    #[pyo3(signature = (bigram=None, trigram=None))]
    fn new(bigram: Option<&str>, trigram: Option<&str>) -> PyResult<Self> {
        let bigram = match bigram {
            Some(t) => BigramModel::parse(t).map_err(err)?,
            None => BigramModel::flat(),
        };
        let trigram = trigram.map(CategoryTrigram::parse).transpose().map_err(err)?;
        Ok(Models { inner: CoreModels { bigram, trigram } })
    }
}

#[pyclass(frozen, module = "lriparse")]
struct Config {
    inner: ParserConfig,
}

#[pymethods]
impl Config {
    #[new]
    #[pyo3(signature = (weights=(1.0, 1.0, 1.0, 1.0), beam_offset=8.0, prosody=true, predict=false, skeleton=false))]
    fn new(weights: (f64, f64, f64, f64), beam_offset: f64, prosody: bool, predict: bool, skeleton: bool) -> PyResult<Self> {
        let (acoustic, bigram, prosody_w, grammar) = weights;
        if [acoustic, bigram, prosody_w, grammar].iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(err("weights must be finite and non-negative"));
        }
        if !(beam_offset > 0.0) {
            return Err(err("beam_offset must be positive (use float('inf') to disable the beam)"));
        }
        Ok(Config {
            inner: ParserConfig {
                weights: Weights { acoustic, bigram, prosody: prosody_w, grammar },
                beam_offset,
                prosody,
                predict,
                skeleton,
            },
        })
    }

    #[getter]
    fn beam_offset(&self) -> f64 {
        self.inner.beam_offset
    }

    #[getter]
    fn weights(&self) -> (f64, f64, f64, f64) {
        let w = &self.inner.weights;
        (w.acoustic, w.bigram, w.prosody, w.grammar)
    }
}

#[pyclass(frozen, module = "lriparse")]
struct ParseOutcome {
    name: String,
    categories: Vec<String>,
    config: ParserConfig,
    workers: usize,
    inner: ParseResultSet,
}

#[pymethods]
impl ParseOutcome {
    /// Words of the best result, or `None` when nothing was found.
    #[getter]
    fn best(&self) -> Option<Vec<String>> {
        self.inner.best.as_ref().map(|b| b.words.clone())
    }

    /// `(total, acoustic, bigram, prosody, grammar)` of the best result.
    #[getter]
    fn scores(&self) -> Option<(f64, f64, f64, f64, f64)> {
        self.inner.best.as_ref().map(|b| (b.score, b.acoustic, b.bigram, b.prosody, b.grammar))
    }

    #[getter]
    fn partial(&self) -> bool {
        self.inner.partial
    }

    /// `(category, from, end, words, score, complete)` for every result.
    #[getter]
    fn results(&self) -> Vec<(String, u32, u32, Vec<String>, f64, bool)> {
        self.inner
            .results
            .iter()
            .map(|r| (r.category.clone(), r.from, r.end, r.words.clone(), r.score, r.complete))
            .collect()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.stats.total
    }

    #[getter]
    fn passive_edge_count(&self) -> usize {
        self.inner.stats.passive
    }

    /// Best weighted inside score per passive `(category, from, to)`.
    fn passive_items(&self) -> Vec<(String, u32, u32, f64)> {
        oracle::chart_scores(&self.inner.chart)
            .into_iter()
            .map(|((c, f, t), s)| (self.categories[c.0 as usize].clone(), f, t, s))
            .collect()
    }

    /// The report the command line prints, without timing.
    #[pyo3(signature = (structured=false))]
    fn report(&self, structured: bool) -> String {
        let r = ParseReport::new(&self.name, &self.config, self.workers, &self.inner);
        report::render_parse(&[r], None, if structured { Format::Structured } else { Format::Text })
    }
}

#[pyfunction]
#[pyo3(signature = (lattice, grammar, models=None, config=None, workers=1, name="lattice"))]
fn parse(
    py: Python<'_>,
    lattice: &Lattice,
    grammar: &Grammar,
    models: Option<&Models>,
    config: Option<&Config>,
    workers: usize,
    name: &str,
) -> PyResult<ParseOutcome> {
    let default_models = CoreModels::default();
    let models = models.map_or(&default_models, |m| &m.inner);
    let config = config.map(|c| c.inner).unwrap_or_default();
    let (lat, g) = (&lattice.inner, &grammar.inner);
    let inner = py
        .detach(|| {
            if workers > 1 {
                let wc = WorkerConfig { worker_count: workers, task_batch: 1, metrics_enabled: false };
                parallel_parse(lat, g, models, &config, &wc).map(|(r, _)| r)
            } else {
                parse_lattice(lat, g, models, &config)
            }
        })
        .map_err(err)?;
    let categories = (0..g.category_count()).map(|i| g.cat_name(CatId(i as u32)).to_string()).collect();
    Ok(ParseOutcome { name: name.to_string(), categories, config, workers: workers.max(1), inner })
}

/// Strict word accuracy of `covered` against `reference`, as a dict of
/// counts and the ratio.
#[pyfunction]
fn word_accuracy(py: Python<'_>, reference: Vec<String>, covered: Vec<String>) -> PyResult<Py<PyAny>> {
    let r = eval::strict_word_accuracy(&reference, &covered).map_err(err)?;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("n_ref", r.n_ref)?;
    d.set_item("substitutions", r.substitutions)?;
    d.set_item("deletions", r.deletions)?;
    d.set_item("insertions", r.insertions)?;
    d.set_item("word_accuracy", r.word_accuracy)?;
    Ok(d.into_any().unbind())
}

/// Minimum-edit alignment as a list of `match`, `sub`, `del`, `ins`.
#[pyfunction]
fn align(reference: Vec<String>, hypothesis: Vec<String>) -> Vec<&'static str> {
    eval::align(&reference, &hypothesis)
        .ops
        .iter()
        .map(|op| match op {
            eval::AlignOp::Match => "match",
            eval::AlignOp::Substitution => "sub",
            eval::AlignOp::Deletion => "del",
            eval::AlignOp::Insertion => "ins",
        })
        .collect()
}

/// Parses every lattice and returns the evaluation report.
#[pyfunction]
#[pyo3(signature = (lattices, references, grammar, models=None, config=None, structured=false))]
fn evaluate(
    lattices: Vec<(String, PyRef<'_, Lattice>)>,
    references: Vec<Vec<String>>,
    grammar: &Grammar,
    models: Option<&Models>,
    config: Option<&Config>,
    structured: bool,
) -> PyResult<String> {
    let default_models = CoreModels::default();
    let models = models.map_or(&default_models, |m| &m.inner);
    let config = config.map(|c| c.inner).unwrap_or_default();
    let lats: Vec<(String, CoreLattice)> = lattices.iter().map(|(n, l)| (n.clone(), l.inner.clone())).collect();
    let result = eval::evaluate_corpus(&lats, &references, &grammar.inner, models, &config).map_err(err)?;
    Ok(report::render_eval(&result, &config, None, if structured { Format::Structured } else { Format::Text }))
}

/// All `(category, from, to, score)` items of the exhaustive bottom-up
/// parser, ignoring bigram and prosody. Comparable with
/// `ParseOutcome.passive_items` when the beam is off and the bigram and
/// prosody weights are zero.
#[pyfunction]
fn exhaustive_parse(lattice: &Lattice, grammar: &Grammar) -> PyResult<Vec<(String, u32, u32, f64)>> {
    let items = oracle::exhaustive_parse(&lattice.inner, &grammar.inner).map_err(err)?;
    Ok(items.into_iter().map(|i| (i.category, i.from, i.to, i.score)).collect())
}

#[pymodule(name = "lriparse")]
pub fn lriparse_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("LriparseError", m.py().get_type::<LriparseError>())?;
    m.add_class::<Grammar>()?;
    m.add_class::<Lattice>()?;
    m.add_class::<Models>()?;
    m.add_class::<Config>()?;
    m.add_class::<ParseOutcome>()?;
    m.add_function(wrap_pyfunction!(parse, m)?)?;
    m.add_function(wrap_pyfunction!(word_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(align, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(exhaustive_parse, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let c = Config::new((1.0, 0.0, 0.0, 1.0), f64::INFINITY, true, false, false).unwrap();
        assert_eq!(c.weights(), (1.0, 0.0, 0.0, 1.0));
        assert!(Config::new((1.0, -1.0, 0.0, 1.0), 8.0, true, false, false).is_err());
        assert!(Config::new((1.0, 1.0, 1.0, 1.0), 0.0, true, false, false).is_err());
        assert!(Config::new((1.0, 1.0, 1.0, 1.0), f64::NAN, true, false, false).is_err());
    }

    #[test]
    fn alignment_names() {
        let r = |s: &str| s.split_whitespace().map(str::to_string).collect::<Vec<_>>();
        assert_eq!(align(r("a b c"), r("a x c d")), ["match", "sub", "match", "ins"]);
    }
}
