//! Drives the bindings through an embedded interpreter.

use std::ffi::CString;
use std::sync::Once;

use pyo3::prelude::*;

fn run(code: &str) {
    static INIT: Once = Once::new();
    INIT.call_once(|| {
        pyo3::append_to_inittab!(lriparse_module);
        Python::initialize();
    });
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/data");
    let code = CString::new(format!("import lriparse\nDATA = {data:?}\n{code}")).unwrap();
    Python::attach(|py| py.run(&code, None, None)).unwrap_or_else(|e| panic!("{e}"));
}

use lriparse_py::lriparse_module;

#[test]
fn toy_parse_scores() {
    run(r#"
g = lriparse.Grammar.from_file(DATA + "/toy/grammar.txt")
lat = lriparse.Lattice.from_file(DATA + "/toy/lattice.txt")
m = lriparse.Models(bigram=open(DATA + "/toy/bigram.txt").read())
out = lriparse.parse(lat, g, m)
assert out.best == ["we", "meet"], out.best
total, acoustic, bigram, prosody, grammar = out.scores
assert abs(total + 20.5) < 1e-9 and abs(bigram + 2.3) < 1e-9, out.scores
assert not out.partial
"#);
}

#[test]
fn parallel_matches_sequential() {
    run(r#"
g = lriparse.Grammar.from_file(DATA + "/features/grammar.txt")
lat = lriparse.Lattice.from_file(DATA + "/features/f1.txt")
cfg = lriparse.Config(beam_offset=float("inf"))
a = lriparse.parse(lat, g, config=cfg)
b = lriparse.parse(lat, g, config=cfg, workers=3)
assert a.best == b.best
assert sorted(a.passive_items()) == sorted(b.passive_items())
"#);
}

#[test]
fn errors_raise_lriparse_error() {
    run(r#"
try:
    lriparse.Grammar("RULE nonsense")
except lriparse.LriparseError:
    pass
else:
    raise AssertionError("grammar accepted")
try:
    lriparse.word_accuracy([], ["a"])
except lriparse.LriparseError:
    pass
else:
    raise AssertionError("empty reference accepted")
r = lriparse.word_accuracy(["we", "meet", "tomorrow"], ["we", "meet"])
assert r["deletions"] == 1 and abs(r["word_accuracy"] - 2 / 3) < 1e-12, r
"#);
}
