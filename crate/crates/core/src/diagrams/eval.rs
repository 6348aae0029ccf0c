use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rayon::prelude::*;

use super::{enumerate_pairings_filtered, Diagram, IndexSet, PairFilter};
use crate::bispectrum::MultipoleTriple;
use crate::error::{Error, Result};
use crate::precision::Fixed;
use crate::wigner::ThreeJTable;

/// Default cap on visited m-lattice nodes per diagram evaluation.
pub const DEFAULT_NODE_BUDGET: u64 = 100_000_000;

/// The multipoles attached to the three columns of each row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TripleAssignment {
    rows: Vec<[u32; 3]>,
}

impl TripleAssignment {
    pub fn new(rows: Vec<[u32; 3]>) -> Self {
        TripleAssignment { rows }
    }

    /// Each triple replicated `2p` times, in order.
    pub fn replicated(triples: &[(MultipoleTriple, u32)]) -> Self {
        let mut rows = Vec::new();
        for &(t, p) in triples {
            rows.extend(std::iter::repeat_n(t.ls(), 2 * p as usize));
        }
        TripleAssignment { rows }
    }

    pub fn rows(&self) -> &[[u32; 3]] {
        &self.rows
    }

    pub fn index_set(&self) -> IndexSet {
        IndexSet::triples(self.rows.len())
    }

    fn ell(&self, slot: usize) -> u32 {
        self.rows[slot / 3][slot % 3]
    }

    /// Pairs only slots in distinct rows carrying the same multipole; every
    /// other pairing contributes exactly zero when all multipoles are positive.
    fn nonvanishing_filter(&self) -> PairFilter {
        let rows = self.rows.clone();
        Arc::new(move |a, b| a / 3 != b / 3 && rows[a / 3][a % 3] == rows[b / 3][b % 3])
    }
}

/// Evaluates `D(γ)` for diagrams over a fixed triple assignment, sharing the
/// 3j tables of repeated triples.
pub struct DiagramEvaluator {
    assign: TripleAssignment,
    tables: Vec<Arc<ThreeJTable>>,
    budget: u64,
}

struct RowPlan {
    row: usize,
    slots: [(usize, i32); 3],
    free: Vec<usize>,
    solved: Option<(usize, i32)>,
}

struct Walk<'a> {
    plans: &'a [RowPlan],
    tables: &'a [Arc<ThreeJTable>],
    edge_ell: &'a [i32],
    m: Vec<i32>,
    products: Vec<Fixed>,
    total: Fixed,
    nodes: u64,
    budget: u64,
}

impl DiagramEvaluator {
    pub fn new(assign: TripleAssignment, budget: u64) -> Result<Self> {
        let mut shared: HashMap<[u32; 3], Arc<ThreeJTable>> = HashMap::new();
        let mut tables = Vec::with_capacity(assign.rows.len());
        for &ls in &assign.rows {
            let t = match shared.get(&ls) {
                Some(t) => t.clone(),
                None => {
                    let t = Arc::new(ThreeJTable::new(ls[0], ls[1], ls[2])?);
                    shared.insert(ls, t.clone());
                    t
                }
            };
            tables.push(t);
        }
        Ok(DiagramEvaluator {
            assign,
            tables,
            budget,
        })
    }

    pub fn assignment(&self) -> &TripleAssignment {
        &self.assign
    }

    /// `Σ_m ∏_rows (ℓ_r1 ℓ_r2 ℓ_r3; m_r1 m_r2 m_r3) · δ(γ; ℒ)`.
    pub fn evaluate(&self, d: &Diagram) -> Result<Fixed> {
        let set = d.index_set();
        if set.row_count() != self.assign.rows.len() || set.row_sizes().iter().any(|&q| q != 3) {
            return Err(Error::InvalidArgument(
                "diagram rows do not match the triple assignment".into(),
            ));
        }
        let rows = set.row_count();
        let edges = d.edges();
        let mut edge_of_slot = vec![(0usize, 0i32); set.slot_count()];
        let mut edge_ell = Vec::with_capacity(edges.len());
        for (e, &(a, b)) in edges.iter().enumerate() {
            let (la, lb) = (self.assign.ell(a), self.assign.ell(b));
            if la != lb {
                return Ok(Fixed::zero());
            }
            if a / 3 == b / 3 {
                // A flat edge forces the third projection of its row to 0,
                // and Σ_m (-1)^m (l l L; m -m 0) vanishes unless L = 0.
                let third = 3 * (a / 3) + (3 - a % 3 - b % 3);
                if self.assign.ell(third) != 0 {
                    return Ok(Fixed::zero());
                }
            }
            edge_of_slot[a] = (e, 1);
            edge_of_slot[b] = (e, -1);
            edge_ell.push(la as i32);
        }

        let plans = plan_rows(rows, &edge_of_slot, edges.len());
        let mut walk = Walk {
            plans: &plans,
            tables: &self.tables,
            edge_ell: &edge_ell,
            m: vec![0; edges.len()],
            products: vec![Fixed::one(); rows + 1],
            total: Fixed::zero(),
            nodes: 0,
            budget: self.budget,
        };
        walk.row(0)?;
        Ok(walk.total)
    }
}

/// Row visiting order that keeps as many edges as possible already fixed.
fn plan_rows(rows: usize, edge_of_slot: &[(usize, i32)], edge_count: usize) -> Vec<RowPlan> {
    let mut assigned = vec![false; edge_count];
    let mut done = vec![false; rows];
    let mut plans = Vec::with_capacity(rows);
    for _ in 0..rows {
        let row = (0..rows)
            .filter(|&r| !done[r])
            .max_by_key(|&r| {
                let known = (0..3).filter(|&c| assigned[edge_of_slot[3 * r + c].0]).count();
                (known, std::cmp::Reverse(r))
            })
            .unwrap();
        done[row] = true;
        let slots = [0, 1, 2].map(|c| edge_of_slot[3 * row + c]);
        let mut fresh: Vec<usize> = Vec::new();
        for &(e, _) in &slots {
            if !assigned[e] && !fresh.contains(&e) {
                fresh.push(e);
            }
        }
        let coefficient = |e: usize| -> i32 { slots.iter().filter(|s| s.0 == e).map(|s| s.1).sum() };
        let solved = fresh
            .iter()
            .rposition(|&e| coefficient(e) != 0)
            .map(|i| fresh.remove(i))
            .map(|e| (e, coefficient(e)));
        for &e in fresh.iter().chain(solved.iter().map(|(e, _)| e)) {
            assigned[e] = true;
        }
        plans.push(RowPlan {
            row,
            slots,
            free: fresh,
            solved,
        });
    }
    plans
}

impl Walk<'_> {
    fn tick(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::BudgetExceeded {
                budget: self.budget,
            });
        }
        Ok(())
    }

    fn row(&mut self, level: usize) -> Result<()> {
        if level == self.plans.len() {
            let parity: i32 = self.m.iter().sum();
            let term = &self.products[level];
            if parity.rem_euclid(2) == 0 {
                self.total += term;
            } else {
                self.total -= term;
            }
            return Ok(());
        }
        self.free(level, 0)
    }

    fn free(&mut self, level: usize, i: usize) -> Result<()> {
        let plans = self.plans;
        let plan = &plans[level];
        if i < plan.free.len() {
            let e = plan.free[i];
            let l = self.edge_ell[e];
            for m in -l..=l {
                self.tick()?;
                self.m[e] = m;
                self.free(level, i + 1)?;
            }
            return Ok(());
        }
        let slot_m = |m: &[i32], s: (usize, i32)| s.1 * m[s.0];
        if let Some((e, coeff)) = plan.solved {
            let rest: i32 = plan
                .slots
                .iter()
                .filter(|s| s.0 != e)
                .map(|&s| slot_m(&self.m, s))
                .sum();
            let value = -rest * coeff;
            if value.abs() > self.edge_ell[e] {
                return Ok(());
            }
            self.m[e] = value;
        } else if plan.slots.iter().map(|&s| slot_m(&self.m, s)).sum::<i32>() != 0 {
            return Ok(());
        }
        self.tick()?;
        let m1 = slot_m(&self.m, plan.slots[0]);
        let m2 = slot_m(&self.m, plan.slots[1]);
        let tables = self.tables;
        let Some(value) = tables[plan.row].fixed(m1, m2) else {
            return Ok(());
        };
        if value.is_zero() {
            return Ok(());
        }
        self.products[level + 1] = &self.products[level] * value;
        self.row(level + 1)
    }
}

/// `D(γ; ℒ)` for one diagram.
pub fn evaluate_diagram(d: &Diagram, assign: &TripleAssignment, budget: u64) -> Result<Fixed> {
    DiagramEvaluator::new(assign.clone(), budget)?.evaluate(d)
}

/// Moment oracle output, split by diagram class. Diagrams with flat edges or
/// mismatched multipoles vanish identically and are not enumerated.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MomentBreakdown {
    pub total: Fixed,
    pub paired: Fixed,
    pub connected: Fixed,
    /// Disconnected diagrams that are not paired.
    pub other: Fixed,
    /// Non-paired contributions keyed by shortest loop length (0 for forests).
    pub by_loop_order: BTreeMap<u32, Fixed>,
    pub diagrams: usize,
    pub paired_diagrams: usize,
    pub connected_diagrams: usize,
}

fn sum_diagrams(assign: TripleAssignment, budget: u64, connected_only: bool) -> Result<MomentBreakdown> {
    let mut out = MomentBreakdown::default();
    let set = Arc::new(assign.index_set());
    if set.slot_count() % 2 == 1 {
        return Ok(out);
    }
    if assign.rows.iter().any(|ls| ls.contains(&0)) {
        // The filtered enumeration drops flat edges, which only vanish for
        // positive multipoles.
        return Err(Error::InvalidArgument("multipoles must be positive".into()));
    }
    let filter = assign.nonvanishing_filter();
    let diagrams: Vec<Diagram> = enumerate_pairings_filtered(set, Some(filter))?
        .filter(|d| !connected_only || d.flags().is_connected)
        .collect();
    let evaluator = DiagramEvaluator::new(assign, budget)?;
    let values: Vec<Fixed> = diagrams
        .par_iter()
        .map(|d| evaluator.evaluate(d))
        .collect::<Result<_>>()?;
    // Fixed-point addition is exact, so the grouping order cannot matter.
    for (d, v) in diagrams.iter().zip(values) {
        let f = d.flags();
        out.diagrams += 1;
        out.total += &v;
        if f.is_paired {
            out.paired_diagrams += 1;
            out.paired += &v;
            continue;
        }
        *out.by_loop_order.entry(f.min_loop_order.unwrap_or(0)).or_default() += &v;
        if f.is_connected {
            out.connected_diagrams += 1;
            out.connected += &v;
        } else {
            out.other += &v;
        }
    }
    Ok(out)
}

/// `E ∏ I_{t_i}^{2p_i}` as the sum of `D(γ)` over every pairing.
///
/// Parity-odd and triangle-violating triples carry `I ≡ 0`.
pub fn moment_by_diagram_sum(triples: &[(MultipoleTriple, u32)], budget: u64) -> Result<MomentBreakdown> {
    if triples.iter().any(|(t, p)| *p > 0 && !t.is_valid()) {
        return Ok(MomentBreakdown::default());
    }
    sum_diagrams(TripleAssignment::replicated(triples), budget, false)
}

/// Raw sum of `D(γ)` over every pairing of an arbitrary row assignment.
pub fn moment_by_rows(assign: TripleAssignment, budget: u64) -> Result<MomentBreakdown> {
    sum_diagrams(assign, budget, false)
}

/// `κ_u`: the contribution of connected diagrams on `u` copies of `t`.
pub fn kappa_u_by_connected_sum(t: MultipoleTriple, u: u32, budget: u64) -> Result<Fixed> {
    if u < 4 || u % 2 == 1 {
        return Err(Error::InvalidArgument(format!(
            "connected-sum cumulant needs even u >= 4, got {u}"
        )));
    }
    if !t.is_valid() {
        return Ok(Fixed::zero());
    }
    let assign = TripleAssignment::new(vec![t.ls(); u as usize]);
    Ok(sum_diagrams(assign, budget, true)?.connected)
}
