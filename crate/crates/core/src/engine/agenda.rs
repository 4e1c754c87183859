use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use super::chart::EdgeId;

/// A pending Combine of an active and a passive edge.
#[derive(Debug, Clone, Copy)]
pub struct AgendaItem {
    pub active: EdgeId,
    pub passive: EdgeId,
    pub score: f64,
    seq: u64,
}

impl PartialEq for AgendaItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for AgendaItem {}

impl PartialOrd for AgendaItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for AgendaItem {
    // Max-heap on score; among equal scores the earlier push wins.
    fn cmp(&self, other: &Self) -> Ordering {
        self.score.total_cmp(&other.score).then_with(|| other.seq.cmp(&self.seq))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct AgendaStats {
    pub pushed: u64,
    pub processed: u64,
    pub pruned: u64,
}

/// Best-first queue with a beam relative to the best score pushed in the
/// current cycle.
#[derive(Debug, Clone)]
pub struct Agenda {
    heap: BinaryHeap<AgendaItem>,
    running_max: f64,
    beam_offset: f64,
    seq: u64,
    stats: AgendaStats,
}

impl Agenda {
    /// `beam_offset = f64::INFINITY` disables pruning.
    pub fn new(beam_offset: f64) -> Self {
        Agenda {
            heap: BinaryHeap::new(),
            running_max: f64::NEG_INFINITY,
            beam_offset,
            seq: 0,
            stats: AgendaStats::default(),
        }
    }

    pub fn beam_offset(&self) -> f64 {
        self.beam_offset
    }

    pub fn running_max(&self) -> f64 {
        self.running_max
    }

    pub fn threshold(&self) -> f64 {
        self.running_max - self.beam_offset
    }

    pub fn begin_cycle(&mut self) {
        self.running_max = f64::NEG_INFINITY;
    }

    fn admits(&self, score: f64) -> bool {
        self.beam_offset.is_infinite() || score > self.threshold()
    }

    /// Returns whether the item was kept.
    pub fn push(&mut self, active: EdgeId, passive: EdgeId, score: f64) -> bool {
        self.stats.pushed += 1;
        if score > self.running_max {
            self.running_max = score;
        }
        if !self.admits(score) {
            self.stats.pruned += 1;
            return false;
        }
        self.seq += 1;
        self.heap.push(AgendaItem { active, passive, score, seq: self.seq });
        true
    }

    /// Highest-scoring item still within the beam; items that fell out of
    /// it since they were pushed are dropped.
    pub fn pop(&mut self) -> Option<AgendaItem> {
        while let Some(item) = self.heap.pop() {
            if self.admits(item.score) {
                self.stats.processed += 1;
                return Some(item);
            }
            self.stats.pruned += 1;
        }
        None
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn stats(&self) -> AgendaStats {
        self.stats
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const A: EdgeId = EdgeId(0);

    #[test]
    fn threshold_examples() {
        let mut ag = Agenda::new(8.0);
        assert!(ag.push(A, EdgeId(1), -20.5));
        assert!(ag.push(A, EdgeId(2), -28.5 + 1e-9));
        assert!(!ag.push(A, EdgeId(3), -28.5));
        assert!(!ag.push(A, EdgeId(4), -30.0));
        assert_eq!(ag.len(), 2);
    }

    #[test]
    fn late_better_push_drops_queued_item() {
        let mut ag = Agenda::new(8.0);
        ag.push(A, EdgeId(1), -27.0);
        ag.push(A, EdgeId(2), -18.0);
        assert_eq!(ag.pop().unwrap().passive, EdgeId(2));
        assert!(ag.pop().is_none());
        assert_eq!(ag.stats(), AgendaStats { pushed: 2, processed: 1, pruned: 1 });
    }

    #[test]
    fn ties_pop_in_push_order() {
        let mut ag = Agenda::new(f64::INFINITY);
        for i in 1..=3 {
            ag.push(A, EdgeId(i), -1.0);
        }
        let order: Vec<_> = std::iter::from_fn(|| ag.pop()).map(|i| i.passive.0).collect();
        assert_eq!(order, vec![1, 2, 3]);
    }

    proptest! {
        #[test]
        fn pops_are_sorted_and_counted(scores in prop::collection::vec(-50.0f64..0.0, 0..40), beam in 0.5f64..20.0) {
            let mut ag = Agenda::new(beam);
            for (i, s) in scores.iter().enumerate() {
                ag.push(A, EdgeId(i as u32), *s);
            }
            let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut last = f64::INFINITY;
            while let Some(it) = ag.pop() {
                prop_assert!(it.score <= last);
                prop_assert!(it.score > max - beam);
                last = it.score;
            }
            let st = ag.stats();
            prop_assert_eq!(st.pushed, st.processed + st.pruned);
        }
    }
}
