//! Untyped attribute-value structures with atoms and reentrant variables.
//!
//! A structure is stored as a small arena of nodes rooted at `root`.
//! Reentrancy is expressed by two attributes pointing at the same node, so
//! variables are scoped to a single structure (one rule instantiation).
//! Stored structures are always compact and acyclic.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Node {
    Var,
    Atom(Arc<str>),
    Complex(BTreeMap<Arc<str>, usize>),
}

#[derive(Clone)]
pub struct FeatureStructure {
    nodes: Vec<Node>,
    root: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("feature structure syntax error at byte {pos}: {msg}")]
pub struct FeatureSyntaxError {
    pub pos: usize,
    pub msg: String,
}

impl Default for FeatureStructure {
    fn default() -> Self {
        FeatureStructure::empty()
    }
}

impl FeatureStructure {
    /// The empty complex structure `[]`, which unifies with any complex structure.
    pub fn empty() -> Self {
        FeatureStructure { nodes: vec![Node::Complex(BTreeMap::new())], root: 0 }
    }

    pub fn var() -> Self {
        FeatureStructure { nodes: vec![Node::Var], root: 0 }
    }

    pub fn atom(value: &str) -> Self {
        FeatureStructure { nodes: vec![Node::Atom(value.into())], root: 0 }
    }

    pub fn is_empty(&self) -> bool {
        matches!(&self.nodes[self.root], Node::Complex(m) if m.is_empty())
    }

    fn resolve(&self, path: &[&str]) -> Option<usize> {
        let mut cur = self.root;
        for attr in path {
            match &self.nodes[cur] {
                Node::Complex(m) => cur = *m.get(*attr)?,
                _ => return None,
            }
        }
        Some(cur)
    }

    /// The atom stored at `path`, if the path resolves to an atom.
    pub fn atom_at(&self, path: &[&str]) -> Option<&str> {
        match &self.nodes[self.resolve(path)?] {
            Node::Atom(a) => Some(a),
            _ => None,
        }
    }

    /// Every path from the root that ends in an atom, with that atom.
    pub fn atom_paths(&self) -> Vec<(Vec<String>, String)> {
        fn walk(fs: &FeatureStructure, n: usize, prefix: &mut Vec<String>, out: &mut Vec<(Vec<String>, String)>) {
            match &fs.nodes[n] {
                Node::Atom(a) => out.push((prefix.clone(), a.to_string())),
                Node::Var => {}
                Node::Complex(m) => {
                    for (k, &c) in m {
                        prefix.push(k.to_string());
                        walk(fs, c, prefix, out);
                        prefix.pop();
                    }
                }
            }
        }
        let mut out = Vec::new();
        walk(self, self.root, &mut Vec::new(), &mut out);
        out
    }

    /// The substructure at `path` as a standalone structure. Sharing inside
    /// the substructure is preserved.
    pub fn project(&self, path: &[&str]) -> Option<FeatureStructure> {
        let node = self.resolve(path)?;
        Some(self.compact_from(node))
    }

    /// A copy with the top-level attribute `attr` removed.
    pub fn without(&self, attr: &str) -> FeatureStructure {
        let mut copy = self.clone();
        if let Node::Complex(m) = &mut copy.nodes[copy.root] {
            m.remove(attr);
        }
        copy.compact_from(copy.root)
    }

    /// Wraps `self` so that it sits at `path` inside an otherwise empty structure.
    pub fn embed(self, path: &[&str]) -> FeatureStructure {
        let mut nodes = self.nodes;
        let mut inner = self.root;
        for attr in path.iter().rev() {
            let mut m = BTreeMap::new();
            m.insert(Arc::<str>::from(*attr), inner);
            nodes.push(Node::Complex(m));
            inner = nodes.len() - 1;
        }
        FeatureStructure { nodes, root: inner }.compact_from(inner)
    }

    /// Most general unifier of `a` and `b`, or `None` when they clash or
    /// the result would be cyclic.
    pub fn unify(a: &FeatureStructure, b: &FeatureStructure) -> Option<FeatureStructure> {
        let offset = a.nodes.len();
        let mut nodes = a.nodes.clone();
        nodes.extend(b.nodes.iter().map(|n| match n {
            Node::Complex(m) => Node::Complex(m.iter().map(|(k, &v)| (k.clone(), v + offset)).collect()),
            other => other.clone(),
        }));
        let mut uf = UnionFind { parent: (0..nodes.len()).collect(), nodes };
        if !uf.unify(a.root, b.root + offset) {
            return None;
        }
        uf.extract(a.root)
    }

    /// Unifies `value` into the substructure of `self` at `path`.
    pub fn unify_at(&self, path: &[&str], value: &FeatureStructure) -> Option<FeatureStructure> {
        FeatureStructure::unify(self, &value.clone().embed(path))
    }

    /// Builds a structure satisfying a list of path constraints, each either
    /// `path = path` (reentrancy) or `path = atom`. Returns `None` if the
    /// constraints are inconsistent.
    pub fn from_constraints(constraints: &[PathConstraint]) -> Option<FeatureStructure> {
        let mut uf = UnionFind { parent: vec![0], nodes: vec![Node::Complex(BTreeMap::new())] };
        for c in constraints {
            match c {
                PathConstraint::Shared(a, b) => {
                    let x = uf.ensure_path(0, a)?;
                    let y = uf.ensure_path(0, b)?;
                    if !uf.unify(x, y) {
                        return None;
                    }
                }
                PathConstraint::Value(a, atom) => {
                    let x = uf.ensure_path(0, a)?;
                    let y = uf.fresh(Node::Atom(atom.as_str().into()));
                    if !uf.unify(x, y) {
                        return None;
                    }
                }
            }
        }
        uf.extract(0)
    }

    /// Parses `[attr=value, ...]`. Values are atoms, nested structures, or
    /// variables (identifiers starting with an uppercase letter or `?`, or
    /// the anonymous `_`). Variables with the same name denote one node.
    pub fn parse(text: &str) -> Result<FeatureStructure, FeatureSyntaxError> {
        let mut p = FsParser { src: text.as_bytes(), pos: 0, nodes: Vec::new(), vars: HashMap::new() };
        let root = p.value()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("trailing input"));
        }
        let mut uf = UnionFind { parent: (0..p.nodes.len()).collect(), nodes: p.nodes };
        uf.extract(root)
            .ok_or_else(|| FeatureSyntaxError { pos: 0, msg: "cyclic structure".into() })
    }

    fn compact_from(&self, start: usize) -> FeatureStructure {
        let mut uf = UnionFind { parent: (0..self.nodes.len()).collect(), nodes: self.nodes.clone() };
        uf.extract(start).expect("stored structures are acyclic")
    }

    /// Canonical text form. Two structures are equal up to variable renaming
    /// exactly when their canonical forms are equal.
    pub fn canonical(&self) -> String {
        let mut refs = vec![0usize; self.nodes.len()];
        count_refs(&self.nodes, self.root, &mut refs);
        let mut tags = HashMap::new();
        let mut out = String::new();
        write_node(&self.nodes, self.root, &refs, &mut tags, &mut out);
        out
    }
}

fn count_refs(nodes: &[Node], n: usize, refs: &mut [usize]) {
    refs[n] += 1;
    if refs[n] > 1 {
        return;
    }
    if let Node::Complex(m) = &nodes[n] {
        for &c in m.values() {
            count_refs(nodes, c, refs);
        }
    }
}

fn write_node(nodes: &[Node], n: usize, refs: &[usize], tags: &mut HashMap<usize, usize>, out: &mut String) {
    if refs[n] > 1 {
        if let Some(t) = tags.get(&n) {
            out.push_str(&format!("#{t}"));
            return;
        }
        let t = tags.len() + 1;
        tags.insert(n, t);
        out.push_str(&format!("#{t}"));
    }
    match &nodes[n] {
        Node::Var => out.push('_'),
        Node::Atom(a) => out.push_str(a),
        Node::Complex(m) => {
            out.push('[');
            for (i, (k, &c)) in m.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(k);
                out.push('=');
                write_node(nodes, c, refs, tags, out);
            }
            out.push(']');
        }
    }
}

impl PartialEq for FeatureStructure {
    fn eq(&self, other: &Self) -> bool {
        self.canonical() == other.canonical()
    }
}

impl Eq for FeatureStructure {}

impl fmt::Display for FeatureStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

impl fmt::Debug for FeatureStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FeatureStructure({})", self.canonical())
    }
}

/// One constraint for [`FeatureStructure::from_constraints`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathConstraint {
    Shared(Vec<String>, Vec<String>),
    Value(Vec<String>, String),
}

struct UnionFind {
    parent: Vec<usize>,
    nodes: Vec<Node>,
}

impl UnionFind {
    fn fresh(&mut self, n: Node) -> usize {
        self.nodes.push(n);
        self.parent.push(self.nodes.len() - 1);
        self.nodes.len() - 1
    }

    /// Follows `path` from `start`, creating complex nodes on the way.
    fn ensure_path(&mut self, start: usize, path: &[String]) -> Option<usize> {
        let mut cur = self.find(start);
        for attr in path {
            if matches!(self.nodes[cur], Node::Var) {
                self.nodes[cur] = Node::Complex(BTreeMap::new());
            }
            let next = match &self.nodes[cur] {
                Node::Complex(m) => m.get(attr.as_str()).copied(),
                _ => return None,
            };
            cur = match next {
                Some(n) => self.find(n),
                None => {
                    let n = self.fresh(Node::Var);
                    if let Node::Complex(m) = &mut self.nodes[cur] {
                        m.insert(attr.as_str().into(), n);
                    }
                    n
                }
            };
        }
        Some(cur)
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn unify(&mut self, x: usize, y: usize) -> bool {
        let x = self.find(x);
        let y = self.find(y);
        if x == y {
            return true;
        }
        match (&self.nodes[x], &self.nodes[y]) {
            (Node::Var, _) => {
                self.parent[x] = y;
                true
            }
            (_, Node::Var) => {
                self.parent[y] = x;
                true
            }
            (Node::Atom(a), Node::Atom(b)) => {
                if a == b {
                    self.parent[y] = x;
                    true
                } else {
                    false
                }
            }
            (Node::Complex(_), Node::Complex(_)) => {
                let Node::Complex(other) = std::mem::replace(&mut self.nodes[y], Node::Var) else {
                    unreachable!()
                };
                // Forward first so that cycles through y terminate.
                self.parent[y] = x;
                for (k, v2) in other {
                    let existing = match &self.nodes[x] {
                        Node::Complex(m) => m.get(&k).copied(),
                        _ => unreachable!(),
                    };
                    match existing {
                        Some(v1) => {
                            if !self.unify(v1, v2) {
                                return false;
                            }
                        }
                        None => {
                            if let Node::Complex(m) = &mut self.nodes[x] {
                                m.insert(k, v2);
                            }
                        }
                    }
                }
                true
            }
            _ => false,
        }
    }

    /// Copies the structure reachable from `root` into a fresh compact arena.
    /// Returns `None` if it contains a cycle.
    fn extract(&mut self, root: usize) -> Option<FeatureStructure> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Unseen,
            Open,
            Done(usize),
        }
        let mut marks = vec![Mark::Unseen; self.nodes.len()];
        let mut out: Vec<Node> = Vec::new();

        fn visit(uf: &mut UnionFind, n: usize, marks: &mut [Mark], out: &mut Vec<Node>) -> Option<usize> {
            let n = uf.find(n);
            match marks[n] {
                Mark::Done(i) => return Some(i),
                Mark::Open => return None,
                Mark::Unseen => {}
            }
            match uf.nodes[n].clone() {
                Node::Atom(a) => {
                    // Atoms are values; copying them keeps canonical forms free of atom tags.
                    out.push(Node::Atom(a));
                    Some(out.len() - 1)
                }
                Node::Var => {
                    out.push(Node::Var);
                    marks[n] = Mark::Done(out.len() - 1);
                    Some(out.len() - 1)
                }
                Node::Complex(m) => {
                    marks[n] = Mark::Open;
                    let mut children = BTreeMap::new();
                    for (k, c) in m {
                        children.insert(k, visit(uf, c, marks, out)?);
                    }
                    out.push(Node::Complex(children));
                    marks[n] = Mark::Done(out.len() - 1);
                    Some(out.len() - 1)
                }
            }
        }

        let r = visit(self, root, &mut marks, &mut out)?;
        Some(FeatureStructure { nodes: out, root: r })
    }
}

struct FsParser<'a> {
    src: &'a [u8],
    pos: usize,
    nodes: Vec<Node>,
    vars: HashMap<String, usize>,
}

impl FsParser<'_> {
    fn error(&self, msg: &str) -> FeatureSyntaxError {
        FeatureSyntaxError { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn ident(&mut self) -> Result<String, FeatureSyntaxError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            if c.is_ascii_alphanumeric() || matches!(c, b'_' | b'-' | b'?' | b'+' | b'\'' | b'.') {
                self.pos += 1;
            } else {
                break;
            }
        }
        if start == self.pos {
            return Err(self.error("expected identifier"));
        }
        Ok(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn push(&mut self, n: Node) -> usize {
        self.nodes.push(n);
        self.nodes.len() - 1
    }

    fn value(&mut self) -> Result<usize, FeatureSyntaxError> {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&b'[') {
            self.pos += 1;
            let mut m = BTreeMap::new();
            self.skip_ws();
            if self.src.get(self.pos) == Some(&b']') {
                self.pos += 1;
                return Ok(self.push(Node::Complex(m)));
            }
            loop {
                let attr = self.ident()?;
                self.skip_ws();
                if self.src.get(self.pos) != Some(&b'=') {
                    return Err(self.error("expected '='"));
                }
                self.pos += 1;
                let v = self.value()?;
                if m.insert(Arc::<str>::from(attr.as_str()), v).is_some() {
                    return Err(self.error(&format!("duplicate attribute {attr}")));
                }
                self.skip_ws();
                match self.src.get(self.pos) {
                    Some(b',') => self.pos += 1,
                    Some(b']') => {
                        self.pos += 1;
                        return Ok(self.push(Node::Complex(m)));
                    }
                    _ => return Err(self.error("expected ',' or ']'")),
                }
            }
        }
        let id = self.ident()?;
        Ok(self.leaf(&id))
    }

    fn leaf(&mut self, id: &str) -> usize {
        if id == "_" {
            return self.push(Node::Var);
        }
        if is_variable_name(id) {
            if let Some(&n) = self.vars.get(id) {
                return n;
            }
            let n = self.push(Node::Var);
            self.vars.insert(id.to_string(), n);
            return n;
        }
        self.push(Node::Atom(id.into()))
    }
}

/// Variable names start with an uppercase ASCII letter or `?`.
pub fn is_variable_name(id: &str) -> bool {
    id.starts_with('?') || id.starts_with(|c: char| c.is_ascii_uppercase())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fs(s: &str) -> FeatureStructure {
        FeatureStructure::parse(s).unwrap()
    }

    #[test]
    fn unify_identical_atoms() {
        let r = FeatureStructure::unify(&fs("[agr=pl]"), &fs("[agr=pl]")).unwrap();
        assert_eq!(r, fs("[agr=pl]"));
    }

    #[test]
    fn unify_atom_clash_fails() {
        assert!(FeatureStructure::unify(&fs("[agr=pl]"), &fs("[agr=sg]")).is_none());
    }

    #[test]
    fn unify_binds_variable() {
        let r = FeatureStructure::unify(&fs("[agr=X, case=nom]"), &fs("[agr=pl]")).unwrap();
        assert_eq!(r, fs("[agr=pl, case=nom]"));
    }

    #[test]
    fn reentrancy_propagates() {
        let a = fs("[lhs=[agr=X], c1=[agr=X]]");
        let r = a.unify_at(&["c1"], &fs("[agr=sg]")).unwrap();
        assert_eq!(r.atom_at(&["lhs", "agr"]), Some("sg"));
    }

    #[test]
    fn cyclic_result_is_failure() {
        let a = fs("[f=X, g=X]");
        let b = fs("[f=[h=Y], g=Y]");
        assert!(FeatureStructure::unify(&a, &b).is_none());
    }

    #[test]
    fn atom_against_complex_fails() {
        assert!(FeatureStructure::unify(&fs("[a=x]"), &fs("[a=[b=c]]")).is_none());
    }

    #[test]
    fn canonical_form_ignores_variable_names() {
        assert_eq!(fs("[a=X, b=X]"), fs("[b=Q, a=Q]"));
        assert_ne!(fs("[a=X, b=X]"), fs("[a=X, b=Y]"));
        assert_eq!(fs("[a=X, b=X]").canonical(), "[a=#1_, b=#1]");
    }

    fn path(p: &str) -> Vec<String> {
        p.split('.').map(str::to_string).collect()
    }

    #[test]
    fn constraints_build_shared_node() {
        let e = FeatureStructure::from_constraints(&[PathConstraint::Shared(path("LHS.agr"), path("C1.agr"))]).unwrap();
        assert_eq!(e, fs("[LHS=[agr=A], C1=[agr=A]]"));
        let e = FeatureStructure::from_constraints(&[
            PathConstraint::Shared(path("LHS.agr"), path("C1.agr")),
            PathConstraint::Value(path("C1.agr"), "pl".into()),
        ])
        .unwrap();
        assert_eq!(e.atom_at(&["LHS", "agr"]), Some("pl"));
        assert!(FeatureStructure::from_constraints(&[
            PathConstraint::Value(path("C1.agr"), "pl".into()),
            PathConstraint::Value(path("C1.agr"), "sg".into()),
        ])
        .is_none());
    }

    #[test]
    fn project_and_without() {
        let a = fs("[LHS=[agr=X], C1=[agr=X, case=nom]]");
        assert_eq!(a.project(&["C1"]).unwrap(), fs("[agr=_, case=nom]"));
        assert_eq!(a.without("C1"), fs("[LHS=[agr=_]]"));
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(FeatureStructure::parse("[a=").is_err());
        assert!(FeatureStructure::parse("[a=b c]").is_err());
        assert!(FeatureStructure::parse("[a=b, a=c]").is_err());
    }
}
