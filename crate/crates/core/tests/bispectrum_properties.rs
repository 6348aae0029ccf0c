use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use proptest::prelude::*;

use bispec::bispectrum::{
    big_g_factor, delta_factor, edgeworth_cdf, edgeworth_with_kappa, feasible_normalized_bispectrum,
    fourth_moment_exact, fourth_moment_exact_feasible, fourth_moment_general, g_factor, hermite4,
    kappa4_closed_form, moment_expansion_exact, moment_recursion, normalized_bispectrum,
    sample_bispectrum, MultipoleTriple,
};
use bispec::diagrams::{moment_by_diagram_sum, DEFAULT_NODE_BUDGET};
use bispec::fieldsim::{sample_alms, AngularPowerSpectrum, HarmonicCoefficients};
use bispec::precision::{approx_eq, Fixed};

fn t(a: u32, b: u32, c: u32) -> MultipoleTriple {
    MultipoleTriple::new(a, b, c).unwrap()
}

fn any_triple() -> impl Strategy<Value = MultipoleTriple> {
    (1u32..12, 1u32..12, 1u32..12).prop_map(|(a, b, c)| MultipoleTriple::sorted(a, b, c).unwrap())
}

proptest! {
    #[test]
    fn invalid_triples_vanish_everywhere(tr in any_triple(), seed in any::<u64>()) {
        prop_assume!(!tr.is_valid());
        let spec = AngularPowerSpectrum::flat(tr.l3()).unwrap();
        let a = sample_alms(&spec, tr.l3(), seed).unwrap();
        prop_assert_eq!(sample_bispectrum(&a, tr).unwrap(), 0.0);
        prop_assert!(kappa4_closed_form(tr).is_zero());
        prop_assert!(fourth_moment_exact(tr).is_zero());
    }

    #[test]
    fn normalized_statistic_is_scale_invariant(seed in any::<u64>(), scale in 0.1f64..10.0) {
        let tr = t(2, 3, 5);
        let spec = AngularPowerSpectrum::power_law(5, 1.0).unwrap();
        let a = sample_alms(&spec, 5, seed).unwrap();
        let rows = (1..=5).map(|l| a.row(l).unwrap().iter().map(|z| z * scale).collect()).collect();
        let scaled = HarmonicCoefficients::from_rows(rows).unwrap();
        let spec2 = spec.scaled(scale * scale).unwrap();
        let i1 = normalized_bispectrum(&a, tr, &spec).unwrap();
        let i2 = normalized_bispectrum(&scaled, tr, &spec2).unwrap();
        prop_assert!((i1 - i2).abs() <= 1e-9 * (1.0 + i1.abs()));
        let f1 = feasible_normalized_bispectrum(&a, tr).unwrap();
        let f2 = feasible_normalized_bispectrum(&scaled, tr).unwrap();
        prop_assert!((f1 - f2).abs() <= 1e-9 * (1.0 + f1.abs()));
    }

    #[test]
    fn hatted_moment_is_g_times_unhatted(tr in any_triple()) {
        prop_assume!(tr.is_valid());
        prop_assert_eq!(fourth_moment_exact_feasible(tr), fourth_moment_exact(tr) * big_g_factor(&[(tr, 2)]));
    }

    #[test]
    fn g_factor_is_below_one(l in 1u32..200, p in 1u32..6) {
        let g = g_factor(l, p);
        prop_assert!(g <= BigRational::one());
        prop_assert!(g > BigRational::zero());
        // 1 - g = O(1/(2l+1)) with constant at most p².
        let gap = (BigRational::one() - g).to_f64().unwrap();
        prop_assert!(gap * (2 * l + 1) as f64 <= (p * p) as f64);
    }

    #[test]
    fn edgeworth_is_a_clamped_cdf(x in -8.0f64..8.0, kappa in -3.0f64..3.0) {
        let v = edgeworth_with_kappa(kappa, x);
        prop_assert!((0.0..=1.0).contains(&v.value));
        prop_assert_eq!(v.clamped, v.value != v.unclamped);
    }
}

#[test]
fn general_form_agrees_with_displays() {
    for l1 in 1..=8u32 {
        for l2 in l1..=8 {
            for l3 in l2..=l1 + l2 {
                let tr = t(l1, l2, l3);
                if tr.is_valid() {
                    assert_eq!(fourth_moment_exact(tr), fourth_moment_general(tr), "{tr}");
                }
            }
        }
    }
}

#[test]
fn sixth_moment_expansion_and_recursion_against_oracle() {
    let tr = t(1, 2, 3);
    let oracle = moment_by_diagram_sum(&[(tr, 3)], DEFAULT_NODE_BUDGET).unwrap().total;
    let e4 = Fixed::from_rational(&fourth_moment_exact(tr));
    let kappa6 = bispec::diagrams::kappa_u_by_connected_sum(tr, 6, DEFAULT_NODE_BUDGET).unwrap();
    let rec = moment_recursion(tr, 3, &[Fixed::from_integer(1), e4], Some(&kappa6)).unwrap();
    assert!(approx_eq(&rec, &oracle, 1e-60), "{rec} vs {oracle}");
    // The two-term expansion's relative error shrinks as the multipoles grow.
    let rel = |tr: MultipoleTriple, exact: f64| {
        let approx = moment_expansion_exact(tr, 3).prediction().to_f64().unwrap();
        (approx - exact).abs() / exact
    };
    let far = t(3, 4, 5);
    let far_oracle = moment_by_diagram_sum(&[(far, 3)], DEFAULT_NODE_BUDGET).unwrap().total;
    assert!(rel(far, far_oracle.to_f64()) < rel(tr, oracle.to_f64()));
    assert!(matches!(
        moment_recursion(tr, 3, &[Fixed::from_integer(1)], None),
        Err(bispec::Error::MissingMoment(4))
    ));
}

#[test]
fn edgeworth_reference_values() {
    let tr = t(10, 11, 13);
    assert_eq!(delta_factor(tr), 1);
    let v = edgeworth_cdf(tr, 0.0).unwrap();
    assert!((v.value - 0.5).abs() < 1e-15);
    assert!(edgeworth_cdf(t(1, 1, 1), 0.0).is_err());
    assert_eq!(hermite4(0.0), 3.0);
    assert_eq!(hermite4(1.0), -2.0);
    let lo = edgeworth_cdf(tr, -1.0).unwrap().value;
    let hi = edgeworth_cdf(tr, 1.0).unwrap().value;
    assert!((lo + hi - 1.0).abs() < 1e-12);
}
