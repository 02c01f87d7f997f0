mod common;

use common::{integer_catalog, poset, random_basis, rng, TOL};
use contextua_core::opalg::apply_function;
use contextua_core::presheaf::check_functoriality;
use contextua_core::spectral::{
    enumerate_global_sections, find_global_section, ks_triple_check, verify_section, SpectralPresheaf, Verdict,
};
use contextua_core::ComplexMatrix;
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn solver_agrees_with_enumeration(seed in any::<u64>(), d in 3usize..=4, k in 1usize..=6) {
        let mut r = rng(seed);
        let catalog = integer_catalog(&mut r, d, k);
        let p = poset(d, &catalog);
        let cert = find_global_section(&p);
        let all = enumerate_global_sections(&p, usize::MAX);
        prop_assert!(!all.truncated);
        prop_assert_eq!(cert.verdict == Verdict::Colorable, !all.sections.is_empty());
        if let Some(s) = &cert.section {
            prop_assert!(verify_section(&p, s));
            prop_assert!(all.sections.contains(s));
        }
        for s in &all.sections {
            prop_assert!(verify_section(&p, s));
        }
    }

    #[test]
    fn adding_contexts_never_creates_sections(seed in any::<u64>(), k in 2usize..=5) {
        let mut r = rng(seed);
        let catalog = integer_catalog(&mut r, 4, k);
        let small = poset(4, &catalog[..k - 1]);
        let large = poset(4, &catalog);
        let n_small = enumerate_global_sections(&small, usize::MAX).sections.len();
        let big = enumerate_global_sections(&large, usize::MAX);
        if n_small == 0 {
            prop_assert!(big.sections.is_empty());
        }
        // restrictions of sections of the larger catalog are sections of the smaller one
        for s in &big.sections {
            let mut restricted = contextua_core::spectral::SpectralSection::default();
            for id in small.node_ids() {
                let ctx = small.context(id).unwrap();
                let there = large.find_context(&ctx).unwrap();
                restricted.assignment.insert(id, s.assignment[&there]);
            }
            prop_assert!(verify_section(&small, &restricted));
        }
    }

    #[test]
    fn qubit_catalogs_are_colorable(seed in any::<u64>(), k in 1usize..=6) {
        let mut r = rng(seed);
        let catalog: Vec<_> = (0..k).map(|_| random_basis(&mut r, 2)).collect();
        let p = poset(2, &catalog);
        let cert = find_global_section(&p);
        prop_assert_eq!(cert.verdict, Verdict::Colorable);
        prop_assert!(verify_section(&p, cert.section.as_ref().unwrap()));
    }

    #[test]
    fn spectral_presheaf_is_functorial(seed in any::<u64>(), d in 3usize..=4) {
        let mut r = rng(seed);
        let k = r.gen_range(1..=3);
        let catalog = integer_catalog(&mut r, d, k);
        let p = poset(d, &catalog);
        let report = check_functoriality(&SpectralPresheaf { poset: &p });
        prop_assert!(report.holds());
        prop_assert!(report.checks >= p.len());
    }

    #[test]
    fn valuations_obey_spectrum_rule_and_functional_composition(seed in any::<u64>(), d in 2usize..=4) {
        let mut r = rng(seed);
        let basis = random_basis(&mut r, d);
        let p = poset(d, &[basis.clone()]);
        let cert = find_global_section(&p);
        let s = cert.section.unwrap();
        let node = p.catalog_nodes()[0];
        let values: Vec<f64> = (0..d).map(|_| r.gen_range(-5.0..5.0)).collect();
        let a = basis.observable(&values);
        let v = s.valuation(&p, node, &a, TOL).unwrap();
        prop_assert!(values.iter().any(|x| (x - v).abs() < 1e-7));
        let f = |x: f64| x * x - 1.0;
        let fa = apply_function(&a, TOL, f).unwrap();
        let vf = s.valuation(&p, node, &fa, TOL).unwrap();
        prop_assert!((vf - f(v)).abs() < 1e-6);
    }
}

#[test]
fn ks_triple_needs_common_function() {
    let basis = {
        let mut r = rng(11);
        random_basis(&mut r, 3)
    };
    let a = basis.observable(&[1.0, 1.0, 2.0]);
    let b = basis.observable(&[0.0, 3.0, 3.0]);
    let c = basis.observable(&[5.0, 6.0, 6.0]);
    // c separates e1 from e2, which a cannot
    assert!(!ks_triple_check(&a, &b, &c, TOL));
    let c2 = basis.observable(&[7.0, 7.0, 7.0]);
    assert!(ks_triple_check(&a, &b, &c2, TOL));
    let x = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    let z = ComplexMatrix::from_real_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]).unwrap();
    assert!(ks_triple_check(&x, &z, &ComplexMatrix::identity(2), TOL));
}

#[test]
fn trivial_node_is_always_assigned_its_only_atom() {
    let mut r = rng(3);
    let catalog = integer_catalog(&mut r, 3, 2);
    let p = poset(3, &catalog);
    for s in enumerate_global_sections(&p, 100).sections {
        assert_eq!(s.assignment[&p.bottom()], 0);
        assert!(s.assignment.keys().copied().eq(p.node_ids()));
    }
}
