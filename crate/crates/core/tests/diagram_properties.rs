use std::collections::HashSet;
use std::sync::Arc;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bispec::bispectrum::{delta_factor, MultipoleTriple};
use bispec::diagrams::{
    abs_contraction, classify, enumerate_pairings, enumerate_pairings_filtered, evaluate_diagram,
    moment_by_diagram_sum, moment_by_rows, pairing_count, Diagram, IndexSet, PairFilter, Slot,
    SlotTensor, TripleAssignment, DEFAULT_NODE_BUDGET,
};
use bispec::precision::{approx_eq, Fixed};

fn t(a: u32, b: u32, c: u32) -> MultipoleTriple {
    MultipoleTriple::new(a, b, c).unwrap()
}

fn distinct_rows(set: &Arc<IndexSet>) -> PairFilter {
    let s = set.clone();
    Arc::new(move |a, b| s.row_of(a) != s.row_of(b))
}

fn row_sizes() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..5, 1..5).prop_filter("even, at most 12 slots", |v| {
        let n: usize = v.iter().sum();
        n % 2 == 0 && n <= 12
    })
}

proptest! {
    #[test]
    fn enumeration_counts_and_uniqueness(sizes in row_sizes()) {
        let set = Arc::new(IndexSet::new(sizes.clone()).unwrap());
        let all: Vec<Diagram> = enumerate_pairings(set.clone()).unwrap().collect();
        prop_assert_eq!(all.len() as u128, pairing_count(set.slot_count()));
        let unique: HashSet<Vec<(usize, usize)>> = all.iter().map(|d| d.edges().to_vec()).collect();
        prop_assert_eq!(unique.len(), all.len());
        for d in &all {
            prop_assert_eq!(&classify(d), d.flags());
        }
    }

    #[test]
    fn filtered_enumeration_is_a_subset(sizes in row_sizes()) {
        let set = Arc::new(IndexSet::new(sizes).unwrap());
        let all = enumerate_pairings(set.clone()).unwrap().filter(|d| !d.flags().has_flat_edge).count();
        let filtered: Vec<Diagram> = enumerate_pairings_filtered(set.clone(), Some(distinct_rows(&set))).unwrap().collect();
        prop_assert_eq!(filtered.len(), all);
        prop_assert!(filtered.iter().all(|d| !d.flags().has_flat_edge));
    }

    #[test]
    fn relabeling_rows_preserves_value(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pool = [[1u32, 1, 2], [1, 2, 3], [2, 2, 2], [2, 3, 3], [1, 2, 1]];
        let rows: Vec<[u32; 3]> = (0..4).map(|_| pool[rng.random_range(0..pool.len())]).collect();
        let assign = TripleAssignment::new(rows.clone());
        let set = Arc::new(assign.index_set());
        let diagrams: Vec<Diagram> = enumerate_pairings_filtered(set.clone(), Some(distinct_rows(&set))).unwrap().collect();
        let d = &diagrams[rng.random_range(0..diagrams.len())];
        let mut perm: Vec<usize> = (0..4).collect();
        perm.shuffle(&mut rng);
        let mut moved = rows.clone();
        for (old, &new) in perm.iter().enumerate() {
            moved[new] = rows[old];
        }
        let a = evaluate_diagram(d, &assign, DEFAULT_NODE_BUDGET).unwrap();
        let b = evaluate_diagram(&d.relabel_rows(&perm).unwrap(), &TripleAssignment::new(moved), DEFAULT_NODE_BUDGET).unwrap();
        prop_assert!(approx_eq(&a, &b, 1e-80), "{} vs {}", a, b);
    }
}

#[test]
fn cauchy_schwarz_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for instance in 0..100 {
        let rows = if instance % 2 == 0 { 2 } else { 4 };
        let ell: u32 = rng.random_range(1..=2);
        let set = Arc::new(IndexSet::triples(rows));
        let diagrams: Vec<Diagram> = enumerate_pairings_filtered(set.clone(), Some(distinct_rows(&set))).unwrap().collect();
        let d = &diagrams[rng.random_range(0..diagrams.len())];
        let n = (2 * ell + 1).pow(3) as usize;
        let tensors: Vec<SlotTensor> = (0..rows)
            .map(|_| SlotTensor::new(vec![ell; 3], (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap())
            .collect();
        let lhs = abs_contraction(&tensors, d).unwrap();
        let rhs: f64 = tensors.iter().map(SlotTensor::norm).product();
        assert!(lhs <= rhs * (1.0 + 1e-12), "instance {instance}: {lhs} > {rhs}");
    }
}

#[test]
fn contraction_rejects_flat_edges() {
    let set = Arc::new(IndexSet::triples(2));
    let d = Diagram::new(set, &[(0, 1), (2, 3), (4, 5)]).unwrap();
    let x = SlotTensor::new(vec![0; 3], vec![1.0]).unwrap();
    assert!(abs_contraction(&[x.clone(), x], &d).is_err());
}

#[test]
fn paired_group_matches_gaussian_product() {
    let cases: Vec<Vec<(MultipoleTriple, u32)>> = vec![
        vec![(t(1, 2, 3), 2)],
        vec![(t(2, 2, 2), 2)],
        vec![(t(1, 1, 2), 1), (t(1, 2, 3), 1)],
        vec![(t(1, 2, 3), 3)],
    ];
    for case in cases {
        let b = moment_by_diagram_sum(&case, DEFAULT_NODE_BUDGET).unwrap();
        let want: i64 = case
            .iter()
            .map(|&(tr, p)| {
                let dfact: i64 = (1..2 * p as i64).step_by(2).product();
                dfact * (delta_factor(tr) as i64).pow(p)
            })
            .product();
        assert!(approx_eq(&b.paired, &Fixed::from_integer(want), 1e-80), "{case:?}: {}", b.paired);
    }
}

#[test]
fn flat_edges_vanish() {
    let assign = TripleAssignment::new(vec![[1, 1, 2], [1, 1, 2]]);
    let set = Arc::new(assign.index_set());
    let flat = Diagram::from_slots(
        set,
        &[
            (Slot { row: 0, col: 0 }, Slot { row: 0, col: 1 }),
            (Slot { row: 0, col: 2 }, Slot { row: 1, col: 2 }),
            (Slot { row: 1, col: 0 }, Slot { row: 1, col: 1 }),
        ],
    )
    .unwrap();
    assert!(flat.flags().has_flat_edge);
    assert!(evaluate_diagram(&flat, &assign, DEFAULT_NODE_BUDGET).unwrap().is_zero());
}

#[test]
fn distinct_triples_are_uncorrelated() {
    let b = moment_by_rows(TripleAssignment::new(vec![[1, 2, 3], [2, 2, 2]]), DEFAULT_NODE_BUDGET).unwrap();
    assert!(b.total.is_zero());
    let b = moment_by_rows(TripleAssignment::new(vec![[1, 2, 3], [1, 2, 3]]), DEFAULT_NODE_BUDGET).unwrap();
    assert!(approx_eq(&b.total, &Fixed::from_integer(1), 1e-80));
}

#[test]
fn budget_is_enforced() {
    let r = moment_by_diagram_sum(&[(t(2, 2, 2), 2)], 10);
    assert!(r.is_err());
}
