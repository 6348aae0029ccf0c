use std::time::Instant;

use bispec::bispectrum::{fourth_moment_exact, kappa4_closed_form, MultipoleTriple};
use bispec::diagrams::{kappa_u_by_connected_sum, moment_by_diagram_sum, DEFAULT_NODE_BUDGET};
use bispec::precision::Fixed;

fn main() {
    for ls in [[1, 2, 3], [2, 2, 4], [1, 1, 2], [2, 3, 3], [2, 2, 2], [3, 3, 3]] {
        let t = MultipoleTriple::new(ls[0], ls[1], ls[2]).unwrap();
        let start = Instant::now();
        let m = moment_by_diagram_sum(&[(t, 2)], DEFAULT_NODE_BUDGET).unwrap();
        let k = kappa_u_by_connected_sum(t, 4, DEFAULT_NODE_BUDGET).unwrap();
        let exact = Fixed::from_rational(&fourth_moment_exact(t));
        let kc = Fixed::from_rational(&kappa4_closed_form(t));
        println!(
            "{t}: oracle {:.20} closed {:.20} rel {:e}; kappa rel {:e} ({} diagrams, {:?})",
            m.total,
            exact,
            m.total.relative_difference(&exact),
            k.relative_difference(&kc),
            m.diagrams,
            start.elapsed()
        );
    }
    for ls in [[1, 2, 3], [3, 4, 5]] {
        let t = MultipoleTriple::new(ls[0], ls[1], ls[2]).unwrap();
        let start = Instant::now();
        let m = moment_by_diagram_sum(&[(t, 3)], DEFAULT_NODE_BUDGET).unwrap();
        println!("{t} p=3: {:.20} ({} diagrams, {:?})", m.total, m.diagrams, start.elapsed());
    }
}
