mod common;

use crn_realize::model::Complex;
use crn_realize::network::{analyze_structure, induced_ode, Reaction, Realization};
use crn_realize::realize::{sparse_realization, RealizationQuery};
use crn_realize::scalar::{Rational, Scalar};
use crn_realize::transform::{add_zero_complex, convex_combine, eliminate_complex};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn q(n: i64, d: i64) -> Rational {
    Rational::from_i64(n) / Rational::from_i64(d)
}

/// Two complexes `a` and `a + 2d` (not yet in `r`) and their midpoint.
fn segment(rng: &mut StdRng, r: &Realization) -> (Complex, Complex, Complex) {
    let m = r.species_count();
    loop {
        let a: Vec<u32> = (0..m).map(|_| rng.gen_range(0..=4)).collect();
        let d: Vec<u32> = (0..m).map(|_| rng.gen_range(0..=1)).collect();
        if d.iter().all(|&x| x == 0) {
            continue;
        }
        let mid = Complex(a.iter().zip(&d).map(|(x, y)| x + y).collect());
        let far = Complex(a.iter().zip(&d).map(|(x, y)| x + 2 * y).collect());
        let a = Complex(a);
        if [&a, &mid, &far]
            .iter()
            .all(|c| r.complex_index(c).is_none())
        {
            return (a, mid, far);
        }
    }
}

fn widen(r: &Realization, extra: &[Complex]) -> Realization {
    let mut complexes = r.complexes().to_vec();
    complexes.extend(extra.iter().cloned());
    r.with_complexes(complexes).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn convex_combination_realizes_the_same_system(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let r = common::random_nontrivial_network(&mut rng, 3, 5);
        let sys = induced_ode(&r);
        let query = RealizationQuery::new(sys.clone()).with_extra_complexes(r.complexes().to_vec());
        let other = sparse_realization(&query).unwrap();
        let aligned = r.with_complexes(other.complexes().to_vec()).unwrap();
        let w = q(rng.gen_range(1..=9), 10);
        let out = convex_combine(&[aligned, other], &[w.clone(), Rational::from_i64(1) - w]).unwrap();
        prop_assert_eq!(induced_ode(&out), sys);
    }

    #[test]
    fn convex_combination_keeps_weak_reversibility(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let a = common::random_weakly_reversible(&mut rng, 2, 5);
        // same support, fresh rates
        let reactions: Vec<Reaction> = a
            .reactions()
            .into_iter()
            .map(|x| Reaction { rate: q(rng.gen_range(1..=5), 2), ..x })
            .collect();
        let b = Realization::from_reactions(a.species_names(), a.complexes().to_vec(), reactions).unwrap();
        let out = convex_combine(&[a.clone(), b.clone()], &[q(1, 1), q(2, 1)]).unwrap();
        prop_assert!(analyze_structure(&out).weakly_reversible);
        let ob = induced_ode(&b);
        let oa = induced_ode(&a);
        // the result realizes ODE(a) + 2 ODE(b)
        let expected = crn_realize::model::KineticSystem::from_columns(
            a.species_names(),
            oa.complexes().iter().enumerate().map(|(n, c)| (c.clone(), oa.column(n)))
                .chain(ob.complexes().iter().enumerate().map(|(n, c)| {
                    (c.clone(), ob.column(n).into_iter().map(|v| v * Rational::from_i64(2)).collect())
                })),
        ).unwrap();
        prop_assert_eq!(induced_ode(&out), expected);
    }

    #[test]
    fn convex_combination_keeps_reversibility(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let a = common::random_reversible(&mut rng, 2, 4);
        let b = Realization::from_reactions(
            a.species_names(),
            a.complexes().to_vec(),
            a.reactions().into_iter().map(|x| Reaction { rate: q(rng.gen_range(1..=5), 3), ..x }),
        ).unwrap();
        let out = convex_combine(&[a, b], &[q(1, 3), q(2, 3)]).unwrap();
        prop_assert!(analyze_structure(&out).reversible);
    }

    #[test]
    fn adding_a_midpoint_complex_keeps_the_ode(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let r = common::random_network(&mut rng, 3, 5, 0.3);
        let (a, mid, far) = segment(&mut rng, &r);
        let wide = widen(&r, &[a, far]);
        let n = wide.complex_count();
        let mut v = vec![Rational::from_i64(0); n];
        v[n - 2] = q(1, 2);
        v[n - 1] = q(1, 2);
        let scale = Rational::from_i64(rng.gen_range(1..=4));
        let out = add_zero_complex(&wide, &mid, &v, &scale).unwrap();
        prop_assert_eq!(out.complex_count(), n + 1);
        prop_assert_eq!(induced_ode(&out), induced_ode(&r));
    }

    #[test]
    fn eliminating_a_zero_complex_keeps_the_ode(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let r = common::random_network(&mut rng, 3, 5, 0.3);
        let (a, mid, far) = segment(&mut rng, &r);
        let wide = widen(&r, &[a, mid.clone(), far]);
        let n = wide.complex_count();
        let (ia, imid, ifar) = (n - 3, n - 2, n - 1);
        let k = q(rng.gen_range(1..=4), 1);
        let mut reactions = wide.reactions();
        reactions.push(Reaction { reactant: imid, product: ia, rate: k.clone() });
        reactions.push(Reaction { reactant: imid, product: ifar, rate: k.clone() });
        for j in 0..n - 3 {
            if rng.gen_bool(0.5) {
                reactions.push(Reaction { reactant: j, product: imid, rate: q(rng.gen_range(1..=3), 1) });
            }
        }
        let with_mid = Realization::from_reactions(r.species_names(), wide.complexes().to_vec(), reactions).unwrap();
        let ode = induced_ode(&with_mid);
        let out = eliminate_complex(&with_mid, imid).unwrap();
        prop_assert_eq!(out.complex_count(), n - 1);
        prop_assert!(out.complex_index(&mid).is_none());
        prop_assert_eq!(induced_ode(&out), ode.clone());

        // put the complex back with a zero-contribution split
        let m = out.complex_count();
        let mut v = vec![Rational::from_i64(0); m];
        v[out.complex_index(&wide.complexes()[ia]).unwrap()] = q(1, 2);
        v[out.complex_index(&wide.complexes()[ifar]).unwrap()] = q(1, 2);
        let back = add_zero_complex(&out, &mid, &v, &(k * Rational::from_i64(2))).unwrap();
        prop_assert_eq!(induced_ode(&back), ode);
    }
}
