use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::feature::FeatureStructure;
use crate::grammar::{CatId, Grammar, LexId, RuleId, Signature};
use crate::models::ProsodyAttribute;
use crate::types::{Frame, Key, LogScore, ScoreRecord, Weights};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct EdgeId(pub u32);

/// What an edge instantiates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleRef {
    /// The initial edge `GOAL -> . start`.
    Goal,
    Phrasal(RuleId),
    Lexical(LexId),
}

#[derive(Debug, Clone)]
pub struct Edge {
    pub id: EdgeId,
    pub rule: RuleRef,
    pub cat: CatId,
    /// Number of daughters consumed.
    pub dot: usize,
    /// Category expected next; `None` for passive edges.
    pub next: Option<CatId>,
    pub from: Frame,
    /// End vertices in the order they were added; the last one is `actual`.
    pub to: Vec<Frame>,
    pub words: Vec<Key>,
    /// Start frame of the hypothesis behind the last covered word.
    pub last_word_from: Option<Frame>,
    /// Last word before this edge, inherited from the predicting edge.
    /// `None` is the sentence begin.
    pub left_context: Option<Key>,
    pub scores: ScoreRecord,
    pub features: Option<FeatureStructure>,
    pub signature: Signature,
    pub children: Vec<EdgeId>,
}

impl Edge {
    pub fn is_passive(&self) -> bool {
        self.next.is_none()
    }

    pub fn is_active(&self) -> bool {
        self.next.is_some()
    }

    pub fn is_lexical(&self) -> bool {
        matches!(self.rule, RuleRef::Lexical(_))
    }

    pub fn actual(&self) -> Frame {
        *self.to.last().expect("edges have at least one end vertex")
    }

    pub fn ends_at(&self, frame: Frame) -> bool {
        self.to.contains(&frame)
    }

    /// The word a following word attaches to: the last covered word, or
    /// the inherited left context for edges that cover nothing yet.
    pub fn effective_last_word(&self) -> Option<&Key> {
        self.words.last().or(self.left_context.as_ref())
    }

    fn dedup_key(&self) -> EdgeKey {
        EdgeKey {
            rule: self.rule,
            dot: self.dot,
            from: self.from,
            last: match self.words.last() {
                Some(k) => LastWord::Covered(k.clone(), self.last_word_from.unwrap_or(self.from)),
                None => LastWord::Context(self.left_context.clone()),
            },
            features: self.features.as_ref().map(FeatureStructure::canonical),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum LastWord {
    Covered(Key, Frame),
    Context(Option<Key>),
}

/// Edges agreeing on this key behave identically in every future
/// operation, so one with a better inside score makes the other redundant.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct EdgeKey {
    rule: RuleRef,
    dot: usize,
    from: Frame,
    last: LastWord,
    features: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Vertex {
    pub frame: Frame,
    pub inactive_out: Vec<EdgeId>,
    pub inactive_in: Vec<EdgeId>,
    pub active_out: Vec<EdgeId>,
    pub active_in: Vec<EdgeId>,
    pub prosody: ProsodyAttribute,
}

impl Vertex {
    fn new(frame: Frame, prosody: ProsodyAttribute) -> Self {
        Vertex {
            frame,
            inactive_out: Vec::new(),
            inactive_in: Vec::new(),
            active_out: Vec::new(),
            active_in: Vec::new(),
            prosody,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EdgeStats {
    pub total: usize,
    pub passive: usize,
    pub lexical: usize,
    pub per_category: BTreeMap<String, usize>,
}

#[derive(Debug, Clone)]
pub struct Chart {
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    index: HashMap<EdgeKey, Vec<EdgeId>>,
    initial: EdgeId,
    weights: Weights,
}

impl Chart {
    /// Creates `V_0` holding the initial edge `GOAL -> . start`. Seek Down
    /// on the initial edge is left to the caller.
    pub fn new(grammar: &Grammar, weights: Weights, prosody0: ProsodyAttribute) -> Self {
        let mut chart = Chart {
            vertices: vec![Vertex::new(0, prosody0)],
            edges: Vec::new(),
            index: HashMap::new(),
            initial: EdgeId(0),
            weights,
        };
        let scores = ScoreRecord {
            inside_acoustic: [(0, 0.0)].into_iter().collect(),
            outside_acoustic: [(0, 0.0)].into_iter().collect(),
            ..ScoreRecord::default()
        };
        let initial = Edge {
            id: EdgeId(0),
            rule: RuleRef::Goal,
            cat: grammar.goal(),
            dot: 0,
            next: Some(grammar.start()),
            from: 0,
            to: vec![0],
            words: Vec::new(),
            last_word_from: None,
            left_context: None,
            scores,
            features: None,
            signature: grammar.signature(grammar.start(), None, None),
            children: Vec::new(),
        };
        chart.initial = chart.add_edge(initial).expect("empty chart accepts the initial edge");
        chart
    }

    pub fn initial(&self) -> EdgeId {
        self.initial
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id.0 as usize]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex(&self, frame: Frame) -> &Vertex {
        &self.vertices[frame as usize]
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    /// Frame of the next vertex to be created.
    pub fn next_frame(&self) -> Frame {
        self.vertices.len() as Frame
    }

    pub fn add_vertex(&mut self, prosody: ProsodyAttribute) -> Frame {
        let frame = self.next_frame();
        self.vertices.push(Vertex::new(frame, prosody));
        frame
    }

    /// Inserts `edge` unless an equivalent edge already covers all of its
    /// end vertices with an inside score at least as good (ties keep the
    /// incumbent). Returns the new id, or `None` if it was redundant.
    pub fn add_edge(&mut self, mut edge: Edge) -> Option<EdgeId> {
        let key = edge.dedup_key();
        if let Some(ids) = self.index.get(&key) {
            let w = &self.weights;
            let dominated = ids.iter().any(|&id| {
                let old = &self.edges[id.0 as usize];
                edge.to.iter().all(|&f| match (old.scores.inside_at(f, w), edge.scores.inside_at(f, w)) {
                    (Some(o), Some(n)) => o >= n,
                    _ => false,
                })
            });
            if dominated {
                return None;
            }
        }
        let id = EdgeId(self.edges.len() as u32);
        edge.id = id;
        let v = &mut self.vertices[edge.from as usize];
        if edge.is_active() {
            v.active_out.push(id);
        } else {
            v.inactive_out.push(id);
        }
        for &f in &edge.to {
            let v = &mut self.vertices[f as usize];
            if edge.is_active() {
                v.active_in.push(id);
            } else {
                v.inactive_in.push(id);
            }
        }
        self.index.entry(key).or_default().push(id);
        self.edges.push(edge);
        Some(id)
    }

    /// Adds end vertex `frame` to an edge with the given acoustic scores.
    pub fn extend_edge(&mut self, id: EdgeId, frame: Frame, inside: LogScore, outside: LogScore) {
        let e = &mut self.edges[id.0 as usize];
        debug_assert!(!e.to.contains(&frame));
        e.to.push(frame);
        e.scores.inside_acoustic.insert(frame, inside);
        e.scores.outside_acoustic.insert(frame, outside);
        let active = e.is_active();
        let v = &mut self.vertices[frame as usize];
        if active {
            v.active_in.push(id);
        } else {
            v.inactive_in.push(id);
        }
    }

    pub fn edge_stats(&self, grammar: &Grammar) -> EdgeStats {
        let mut per_category = BTreeMap::new();
        let mut passive = 0;
        let mut lexical = 0;
        for e in &self.edges {
            passive += e.is_passive() as usize;
            lexical += e.is_lexical() as usize;
            *per_category.entry(grammar.cat_name(e.cat).to_string()).or_insert(0) += 1;
        }
        if self.edges.len() == 1 {
            // Only the initial edge: nothing has been derived yet.
            per_category.clear();
        }
        EdgeStats { total: self.edges.len(), passive, lexical, per_category }
    }
}
