mod common;

use crn_realize::network::{
    analyze_structure, deficiency_zero_by_characterization, induced_ode, is_complex_balanced_at,
    linkage_classes, positive_kernel,
};
use crn_realize::scalar::{Rational, Scalar};
use crn_realize::transform::{
    mass_conservation_vector, rescale_to_complex_balanced, MassConservation,
};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn deficiency_zero_iff_affinely_independent_classes(seed in any::<u64>()) {
        let r = common::random_network(&mut StdRng::seed_from_u64(seed), 4, 6, 0.3);
        let report = analyze_structure(&r);
        prop_assert_eq!(report.deficiency == 0, deficiency_zero_by_characterization(&r));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn structure_counts_are_consistent(seed in any::<u64>()) {
        let r = common::random_network(&mut StdRng::seed_from_u64(seed), 4, 6, 0.3);
        let report = analyze_structure(&r);
        prop_assert_eq!(report.linkage_classes, linkage_classes(&r).len());
        prop_assert!(report.terminal_classes >= report.linkage_classes);
        prop_assert!(report.stoichiometric_dim <= r.species_count());
        if report.reversible {
            prop_assert!(report.weakly_reversible);
        }
        if report.weakly_reversible {
            prop_assert_eq!(report.terminal_classes, report.linkage_classes);
        }
    }

    #[test]
    fn weakly_reversible_networks_have_positive_kernels(seed in any::<u64>()) {
        let r = common::random_weakly_reversible(&mut StdRng::seed_from_u64(seed), 3, 6);
        prop_assert!(analyze_structure(&r).weakly_reversible);
        let p = positive_kernel(&r).unwrap();
        prop_assert!(p.iter().all(Scalar::is_positive));
        for row in r.kirchhoff() {
            let dot = row.iter().zip(&p).fold(Rational::from_i64(0), |acc, (a, b)| acc + a * b);
            prop_assert_eq!(dot, Rational::from_i64(0));
        }
    }

    #[test]
    fn rescaling_is_complex_balanced_with_same_support(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let r = common::random_weakly_reversible(&mut rng, 3, 6);
        let xstar: Vec<Rational> = (0..r.species_count())
            .map(|_| Rational::from_i64(rng.gen_range(1..=4)) / Rational::from_i64(rng.gen_range(1..=3)))
            .collect();
        let out = rescale_to_complex_balanced(&r, &xstar).unwrap();
        prop_assert!(is_complex_balanced_at(&out, &xstar).unwrap());
        prop_assert_eq!(out.support(), r.support());
        prop_assert!(induced_ode(&out).is_kinetic());
    }

    #[test]
    fn mass_conservation_vector_is_orthogonal(seed in any::<u64>()) {
        let r = common::random_network(&mut StdRng::seed_from_u64(seed), 4, 5, 0.3);
        match mass_conservation_vector(&r).unwrap() {
            MassConservation::Conserving(rho) | MassConservation::Inconclusive(rho) => {
                prop_assert!(rho.iter().all(|x| *x >= Rational::from_i64(1)));
                for v in r.reaction_vectors() {
                    let dot = v.iter().zip(&rho).fold(Rational::from_i64(0), |acc, (a, b)| acc + a * b);
                    prop_assert_eq!(dot, Rational::from_i64(0));
                }
            }
            MassConservation::NotConserving => {}
        }
    }
}
