//! Wick pairings of row/column index sets, their graph classification and
//! the exact diagram sums behind every moment of the normalized bispectrum.

mod contraction;
mod eval;

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use contraction::{abs_contraction, SlotTensor};
pub use eval::{
    evaluate_diagram, kappa_u_by_connected_sum, moment_by_diagram_sum, moment_by_rows, DiagramEvaluator,
    MomentBreakdown, TripleAssignment, DEFAULT_NODE_BUDGET,
};

/// A slot `(row, column)` of an index set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Slot {
    pub row: usize,
    pub col: usize,
}

/// Rows of an index set; row `i` owns `q_i ≥ 1` column slots.
///
/// Slots are numbered row-major, which fixes the enumeration order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexSet {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    row_of: Vec<usize>,
}

impl IndexSet {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if let Some(i) = sizes.iter().position(|&q| q == 0) {
            return Err(Error::InvalidArgument(format!("row {i} has no slots")));
        }
        let mut offsets = Vec::with_capacity(sizes.len() + 1);
        let mut row_of = Vec::new();
        let mut acc = 0;
        for (r, &q) in sizes.iter().enumerate() {
            offsets.push(acc);
            row_of.extend(std::iter::repeat_n(r, q));
            acc += q;
        }
        offsets.push(acc);
        Ok(IndexSet {
            sizes,
            offsets,
            row_of,
        })
    }

    /// `rows` rows of three slots each.
    pub fn triples(rows: usize) -> Self {
        IndexSet::new(vec![3; rows]).expect("three slots per row")
    }

    pub fn row_count(&self) -> usize {
        self.sizes.len()
    }

    pub fn row_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn slot_count(&self) -> usize {
        self.row_of.len()
    }

    pub fn index(&self, slot: Slot) -> usize {
        assert!(slot.col < self.sizes[slot.row], "column out of range");
        self.offsets[slot.row] + slot.col
    }

    pub fn slot(&self, index: usize) -> Slot {
        let row = self.row_of[index];
        Slot {
            row,
            col: index - self.offsets[row],
        }
    }

    pub fn row_of(&self, index: usize) -> usize {
        self.row_of[index]
    }
}

/// Classification of a diagram; always recomputable from its edges.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagramFlags {
    pub has_flat_edge: bool,
    pub is_connected: bool,
    pub is_paired: bool,
    /// Shortest loop length in the row multigraph; `None` for a forest.
    pub min_loop_order: Option<u32>,
    /// Rows grouped by connected component, each sorted, ordered by first row.
    pub components: Vec<Vec<usize>>,
}

impl DiagramFlags {
    pub fn is_tree(&self) -> bool {
        self.min_loop_order.is_none()
    }
}

/// A perfect matching of an index set's slots.
#[derive(Clone, Debug)]
pub struct Diagram {
    set: Arc<IndexSet>,
    edges: Vec<(usize, usize)>,
    flags: DiagramFlags,
}

impl PartialEq for Diagram {
    fn eq(&self, other: &Self) -> bool {
        self.set == other.set && self.edges == other.edges
    }
}

impl Eq for Diagram {}

impl Diagram {
    /// Builds a diagram from slot-index pairs, checking it is a perfect matching.
    pub fn new(set: Arc<IndexSet>, pairs: &[(usize, usize)]) -> Result<Self> {
        let n = set.slot_count();
        if n % 2 == 1 {
            return Err(Error::OddSlotCount(n));
        }
        let mut seen = vec![false; n];
        let mut edges = Vec::with_capacity(pairs.len());
        for &(a, b) in pairs {
            let (a, b) = (a.min(b), a.max(b));
            if b >= n || a == b || seen[a] || seen[b] {
                return Err(Error::InvalidArgument(format!(
                    "pair ({a}, {b}) is not part of a perfect matching"
                )));
            }
            seen[a] = true;
            seen[b] = true;
            edges.push((a, b));
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidArgument("matching leaves slots uncovered".into()));
        }
        edges.sort_unstable();
        let flags = compute_flags(&set, &edges);
        Ok(Diagram { set, edges, flags })
    }

    pub fn from_slots(set: Arc<IndexSet>, pairs: &[(Slot, Slot)]) -> Result<Self> {
        let flat: Vec<(usize, usize)> = pairs
            .iter()
            .map(|&(a, b)| (set.index(a), set.index(b)))
            .collect();
        Diagram::new(set, &flat)
    }

    pub fn index_set(&self) -> &IndexSet {
        &self.set
    }

    /// Edges as sorted slot-index pairs `(a, b)` with `a < b`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn slot_edges(&self) -> Vec<(Slot, Slot)> {
        self.edges
            .iter()
            .map(|&(a, b)| (self.set.slot(a), self.set.slot(b)))
            .collect()
    }

    pub fn flags(&self) -> &DiagramFlags {
        &self.flags
    }

    /// Applies a row permutation `rows[old] = new`, keeping columns.
    pub fn relabel_rows(&self, rows: &[usize]) -> Result<Diagram> {
        let set = &self.set;
        let sizes: Vec<usize> = {
            let mut s = vec![0; set.row_count()];
            for (old, &new) in rows.iter().enumerate() {
                s[new] = set.row_sizes()[old];
            }
            s
        };
        let new_set = Arc::new(IndexSet::new(sizes)?);
        let pairs: Vec<(Slot, Slot)> = self
            .slot_edges()
            .into_iter()
            .map(|(a, b)| {
                (
                    Slot { row: rows[a.row], col: a.col },
                    Slot { row: rows[b.row], col: b.col },
                )
            })
            .collect();
        Diagram::from_slots(new_set, &pairs)
    }
}

/// Recomputes the flags of a diagram from its edges.
pub fn classify(d: &Diagram) -> DiagramFlags {
    compute_flags(&d.set, &d.edges)
}

fn compute_flags(set: &IndexSet, edges: &[(usize, usize)]) -> DiagramFlags {
    let rows = set.row_count();
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); rows];
    let mut has_flat_edge = false;
    let mut has_double = false;
    for &(a, b) in edges {
        let (ra, rb) = (set.row_of(a), set.row_of(b));
        if ra == rb {
            has_flat_edge = true;
            continue;
        }
        if adjacency[ra].contains(&rb) {
            has_double = true;
        }
        adjacency[ra].push(rb);
        adjacency[rb].push(ra);
    }

    let mut component_of = vec![usize::MAX; rows];
    let mut components = Vec::new();
    for start in 0..rows {
        if component_of[start] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut members = vec![start];
        component_of[start] = id;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in &adjacency[u] {
                if component_of[v] == usize::MAX {
                    component_of[v] = id;
                    members.push(v);
                    queue.push_back(v);
                }
            }
        }
        members.sort_unstable();
        components.push(members);
    }

    let is_paired = !has_flat_edge
        && adjacency.iter().enumerate().all(|(u, nbrs)| {
            let first = nbrs[0];
            nbrs.iter().all(|&v| v == first) && adjacency[first].iter().all(|&w| w == u)
        });

    let min_loop_order = if has_flat_edge {
        Some(1)
    } else if has_double {
        Some(2)
    } else {
        simple_girth(&adjacency)
    };

    DiagramFlags {
        has_flat_edge,
        is_connected: components.len() == 1,
        is_paired,
        min_loop_order,
        components,
    }
}

/// Girth of a simple graph by breadth-first search from every vertex.
fn simple_girth(adjacency: &[Vec<usize>]) -> Option<u32> {
    let n = adjacency.len();
    let mut best: Option<u32> = None;
    for s in 0..n {
        let mut dist = vec![u32::MAX; n];
        let mut parent = vec![usize::MAX; n];
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &v in &adjacency[u] {
                if dist[v] == u32::MAX {
                    dist[v] = dist[u] + 1;
                    parent[v] = u;
                    queue.push_back(v);
                } else if parent[u] != v {
                    let len = dist[u] + dist[v] + 1;
                    best = Some(best.map_or(len, |b| b.min(len)));
                }
            }
        }
    }
    best
}

pub type PairFilter = Arc<dyn Fn(usize, usize) -> bool + Send + Sync>;

/// Lexicographic stream of perfect matchings: the smallest unmatched slot is
/// always paired next, with partners tried in increasing order.
pub struct Pairings {
    set: Arc<IndexSet>,
    partner: Vec<usize>,
    stack: Vec<(usize, usize)>,
    allow: Option<PairFilter>,
    started: bool,
    done: bool,
}

const UNMATCHED: usize = usize::MAX;

impl Pairings {
    fn advance(&mut self, mut fresh: bool) -> bool {
        let n = self.partner.len();
        loop {
            let (a, start) = if fresh {
                match self.partner.iter().position(|&p| p == UNMATCHED) {
                    None => return true,
                    Some(a) => (a, a + 1),
                }
            } else {
                match self.stack.pop() {
                    None => return false,
                    Some((a, b)) => {
                        self.partner[a] = UNMATCHED;
                        self.partner[b] = UNMATCHED;
                        (a, b + 1)
                    }
                }
            };
            let next = (start..n).find(|&b| {
                self.partner[b] == UNMATCHED && self.allow.as_ref().is_none_or(|f| f(a, b))
            });
            match next {
                Some(b) => {
                    self.partner[a] = b;
                    self.partner[b] = a;
                    self.stack.push((a, b));
                    fresh = true;
                }
                None => fresh = false,
            }
        }
    }
}

impl Iterator for Pairings {
    type Item = Diagram;

    fn next(&mut self) -> Option<Diagram> {
        if self.done {
            return None;
        }
        let complete = if self.started {
            self.advance(false)
        } else {
            self.started = true;
            self.advance(true)
        };
        if !complete {
            self.done = true;
            return None;
        }
        let mut edges = self.stack.clone();
        edges.sort_unstable();
        let flags = compute_flags(&self.set, &edges);
        Some(Diagram {
            set: self.set.clone(),
            edges,
            flags,
        })
    }
}

/// Every perfect matching of `set`, each exactly once.
pub fn enumerate_pairings(set: Arc<IndexSet>) -> Result<Pairings> {
    enumerate_pairings_filtered(set, None)
}

/// Matchings whose every pair `(a, b)`, `a < b`, passes `allow`.
pub fn enumerate_pairings_filtered(set: Arc<IndexSet>, allow: Option<PairFilter>) -> Result<Pairings> {
    let n = set.slot_count();
    if n % 2 == 1 {
        return Err(Error::OddSlotCount(n));
    }
    Ok(Pairings {
        partner: vec![UNMATCHED; n],
        set,
        stack: Vec::with_capacity(n / 2),
        allow,
        started: false,
        done: false,
    })
}

/// `(2k-1)!! = (2k)!/(k! 2^k)`, the number of perfect matchings on `2k` slots.
pub fn pairing_count(two_k: usize) -> u128 {
    assert!(two_k % 2 == 0, "odd slot count");
    (1..two_k as u128).step_by(2).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(sizes: &[usize]) -> Arc<IndexSet> {
        Arc::new(IndexSet::new(sizes.to_vec()).unwrap())
    }

    fn slot(row: usize, col: usize) -> Slot {
        Slot { row, col }
    }

    #[test]
    fn small_counts() {
        assert_eq!(enumerate_pairings(set(&[2])).unwrap().count(), 1);
        assert_eq!(enumerate_pairings(set(&[1, 1])).unwrap().count(), 1);
        assert_eq!(enumerate_pairings(set(&[3, 3])).unwrap().count(), 15);
        assert!(matches!(
            enumerate_pairings(set(&[3])),
            Err(Error::OddSlotCount(3))
        ));
    }

    #[test]
    fn lexicographic_order() {
        let first: Vec<_> = enumerate_pairings(set(&[4])).unwrap().map(|d| d.edges().to_vec()).collect();
        assert_eq!(
            first,
            vec![vec![(0, 1), (2, 3)], vec![(0, 2), (1, 3)], vec![(0, 3), (1, 2)]]
        );
    }

    #[test]
    fn flat_edge_flags() {
        let d = Diagram::from_slots(set(&[2]), &[(slot(0, 0), slot(0, 1))]).unwrap();
        assert!(d.flags().has_flat_edge);
        assert_eq!(d.flags().min_loop_order, Some(1));
        assert!(!d.flags().is_paired);
    }

    #[test]
    fn paired_two_rows() {
        let pairs: Vec<_> = (0..3).map(|k| (slot(0, k), slot(1, k))).collect();
        let d = Diagram::from_slots(set(&[3, 3]), &pairs).unwrap();
        let f = d.flags();
        assert!(f.is_paired && f.is_connected && !f.has_flat_edge);
        assert_eq!(f.min_loop_order, Some(2));
    }

    #[test]
    fn four_cycle() {
        let pairs = [
            (slot(0, 1), slot(1, 0)),
            (slot(1, 1), slot(2, 0)),
            (slot(2, 1), slot(3, 0)),
            (slot(3, 1), slot(0, 0)),
        ];
        let d = Diagram::from_slots(set(&[2, 2, 2, 2]), &pairs).unwrap();
        let f = d.flags();
        assert!(f.is_connected && !f.is_paired);
        assert_eq!(f.min_loop_order, Some(4));
        assert_eq!(classify(&d), *f);
    }

    #[test]
    fn tree_has_no_loop() {
        let pairs = [(slot(0, 0), slot(1, 0)), (slot(1, 1), slot(2, 0))];
        let d = Diagram::from_slots(set(&[1, 2, 1]), &pairs).unwrap();
        assert!(d.flags().is_tree());
        assert!(d.flags().is_connected);
    }

    #[test]
    fn rejects_bad_matchings() {
        let s = set(&[2, 2]);
        assert!(Diagram::new(s.clone(), &[(0, 1)]).is_err());
        assert!(Diagram::new(s.clone(), &[(0, 1), (1, 2)]).is_err());
        assert!(Diagram::new(s, &[(0, 1), (2, 3)]).is_ok());
    }
}
