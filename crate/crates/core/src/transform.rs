//! Rewrites of realizations that keep the induced ODE, the rescaling from
//! weak reversibility to complex balance, and mass conservation.

use std::collections::BTreeSet;

use crate::linsolve::{solve_lp, Direction, LinearProgram, Relation, SolveError};
use crate::model::Complex;
use crate::network::{
    analyze_structure, close, induced_ode, is_complex_balanced_at, positive_kernel, NetworkError,
    Reaction, Realization,
};
use crate::scalar::{Rational, Scalar};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TransformError {
    #[error("realizations do not share species and complexes")]
    ComplexSetMismatch,
    #[error("complex is not the stated convex combination of the network's complexes")]
    NotConvexCombination,
    #[error("complex {0} is not the reactant of any reaction")]
    NoOutgoingReactions(usize),
    #[error("monomial of complex {0} appears in the ODE, so the complex cannot be removed")]
    MonomialPresent(usize),
    #[error("network is not weakly reversible")]
    NotWeaklyReversible,
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("transformed network does not reproduce the original ODE")]
    VerificationFailed,
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

/// `sum_i w_i A_k^i` over networks with identical species and complex lists.
///
/// With weights summing to one and every input realizing the same system,
/// the result realizes it too and its support is the union of the inputs'
/// supports restricted to positive weights.
pub fn convex_combine<S: Scalar>(
    rs: &[Realization<S>],
    w: &[S],
) -> Result<Realization<S>, TransformError> {
    let Some(first) = rs.first() else {
        return Err(TransformError::InvalidWeights(
            "no realizations given".into(),
        ));
    };
    if rs.len() != w.len() {
        return Err(TransformError::InvalidWeights(format!(
            "{} realizations but {} weights",
            rs.len(),
            w.len()
        )));
    }
    if w.iter().any(Scalar::is_negative) || w.iter().all(Scalar::is_negligible) {
        return Err(TransformError::InvalidWeights(
            "weights must be nonnegative and not all zero".into(),
        ));
    }
    if rs
        .iter()
        .any(|r| r.species() != first.species() || r.complexes() != first.complexes())
    {
        return Err(TransformError::ComplexSetMismatch);
    }
    let n = first.complex_count();
    let mut matrix = vec![vec![S::zero(); n]; n];
    for (r, weight) in rs.iter().zip(w) {
        for (i, row) in r.kirchhoff().iter().enumerate() {
            for (j, a) in row.iter().enumerate() {
                matrix[i][j] = matrix[i][j].clone() + weight.clone() * a.clone();
            }
        }
    }
    Ok(Realization::from_kirchhoff(
        first.species_names(),
        first.complexes().to_vec(),
        matrix,
    )?)
}

/// Adds reactions `y -> y_n` with rates `scale * v_n`, where `y` is the
/// convex combination `sum_n v_n y_n` of the existing complexes. Their net
/// contribution to the ODE is zero. `y` is appended when new; a weight on
/// `y` itself would be a self-loop and is skipped.
pub fn add_zero_complex(
    r: &Realization,
    y: &Complex,
    v: &[Rational],
    scale: &Rational,
) -> Result<Realization, TransformError> {
    let n = r.complex_count();
    if v.len() != n {
        return Err(TransformError::InvalidWeights(format!(
            "expected {n} weights, got {}",
            v.len()
        )));
    }
    if v.iter().any(Scalar::is_negative) || v.iter().sum::<Rational>() != Rational::from_i64(1) {
        return Err(TransformError::InvalidWeights(
            "weights must be nonnegative and sum to 1".into(),
        ));
    }
    if !scale.is_positive() {
        return Err(TransformError::InvalidWeights(
            "scale must be positive".into(),
        ));
    }
    if y.len() != r.species_count() {
        return Err(TransformError::NotConvexCombination);
    }
    for s in 0..r.species_count() {
        let combo: Rational = r
            .complexes()
            .iter()
            .zip(v)
            .map(|(c, vn)| vn * Rational::from_i64(c.exponents()[s] as i64))
            .sum();
        if combo != Rational::from_i64(y.exponents()[s] as i64) {
            return Err(TransformError::NotConvexCombination);
        }
    }
    let mut complexes = r.complexes().to_vec();
    let source = match r.complex_index(y) {
        Some(i) => i,
        None => {
            complexes.push(y.clone());
            n
        }
    };
    let widened = r.with_complexes(complexes.clone())?;
    let mut reactions = widened.reactions();
    for (target, vn) in v.iter().enumerate() {
        if target != source && vn.is_positive() {
            reactions.push(Reaction {
                reactant: source,
                product: target,
                rate: scale * vn,
            });
        }
    }
    let out = Realization::from_reactions(r.species_names(), complexes, reactions)?;
    if induced_ode(&out) != induced_ode(&widened) {
        return Err(TransformError::VerificationFailed);
    }
    Ok(out)
}

/// Removes a reactant complex whose monomial does not appear in the ODE.
///
/// With `v` the rates out of the complex and `u` the rates into it, every
/// path `j -> idx -> i` is replaced by `j -> i` with rate `u_j v_i / sum v`.
pub fn eliminate_complex<S: Scalar>(
    r: &Realization<S>,
    idx: usize,
) -> Result<Realization<S>, TransformError> {
    let n = r.complex_count();
    if idx >= n {
        return Err(NetworkError::ComplexIndex(idx).into());
    }
    let v: Vec<S> = (0..n)
        .map(|i| {
            if i == idx {
                S::zero()
            } else {
                r.rate(idx, i).clone()
            }
        })
        .collect();
    let total = v.iter().fold(S::zero(), |acc, x| acc + x.clone());
    if !total.is_positive() {
        return Err(TransformError::NoOutgoingReactions(idx));
    }
    let column = induced_ode(r).column_for(&r.complexes()[idx]);
    if column.iter().any(|c| !c.is_negligible()) {
        return Err(TransformError::MonomialPresent(idx));
    }
    for s in 0..r.species_count() {
        let mean = r
            .complexes()
            .iter()
            .zip(&v)
            .fold(S::zero(), |acc, (c, vi)| {
                acc + vi.clone() * S::from_i64(c.exponents()[s] as i64)
            })
            / total.clone();
        let own = S::from_i64(r.complexes()[idx].exponents()[s] as i64);
        assert!(
            close(&mean, &own),
            "eliminated complex is not the mean of its products"
        );
    }

    let keep: Vec<usize> = (0..n).filter(|&i| i != idx).collect();
    let position = |i: usize| keep.binary_search(&i).expect("kept complex");
    let mut reactions: Vec<Reaction<S>> = r
        .reactions()
        .into_iter()
        .filter(|x| x.reactant != idx && x.product != idx)
        .map(|x| Reaction {
            reactant: position(x.reactant),
            product: position(x.product),
            rate: x.rate,
        })
        .collect();
    for &j in &keep {
        let uj = r.rate(j, idx);
        if !uj.is_positive() {
            continue;
        }
        for &i in &keep {
            if i != j && v[i].is_positive() {
                reactions.push(Reaction {
                    reactant: position(j),
                    product: position(i),
                    rate: uj.clone() * v[i].clone() / total.clone(),
                });
            }
        }
    }
    let complexes = keep.iter().map(|&i| r.complexes()[i].clone()).collect();
    let out = Realization::from_reactions(r.species_names(), complexes, reactions)?;
    if !induced_ode(&out).approx_eq(&induced_ode(r)) {
        return Err(TransformError::VerificationFailed);
    }
    Ok(out)
}

/// Scales column `j` of the Kirchhoff matrix by `p_j / (x*)^{y_j}`, where
/// `p` is the positive kernel vector. The result has the same support and
/// is complex balanced at `x*`; its ODE generally differs from the input's.
pub fn rescale_to_complex_balanced<S: Scalar>(
    r: &Realization<S>,
    xstar: &[S],
) -> Result<Realization<S>, TransformError> {
    if xstar.len() != r.species_count() || xstar.iter().any(|x| !x.is_positive()) {
        return Err(TransformError::InvalidWeights(
            "x* must be a positive vector with one entry per species".into(),
        ));
    }
    let p = positive_kernel(r).map_err(|e| match e {
        NetworkError::NoPositiveKernel(_) => TransformError::NotWeaklyReversible,
        other => TransformError::Network(other),
    })?;
    let factor: Vec<S> = r
        .complexes()
        .iter()
        .zip(&p)
        .map(|(c, pj)| pj.clone() / c.monomial(xstar))
        .collect();
    let matrix: Vec<Vec<S>> = r
        .kirchhoff()
        .iter()
        .map(|row| {
            row.iter()
                .zip(&factor)
                .map(|(a, f)| a.clone() * f.clone())
                .collect()
        })
        .collect();
    let out = Realization::from_kirchhoff(r.species_names(), r.complexes().to_vec(), matrix)?;
    if out.support() != r.support() || !is_complex_balanced_at(&out, xstar)? {
        return Err(TransformError::VerificationFailed);
    }
    Ok(out)
}

/// Outcome of the mass conservation test.
#[derive(Debug, Clone, PartialEq)]
pub enum MassConservation<S = Rational> {
    /// `rho > 0` is orthogonal to every reaction vector and `L = T`.
    Conserving(Vec<S>),
    /// No positive vector is orthogonal to all reaction vectors.
    NotConserving,
    /// `rho` exists but `L != T`, where the test is only necessary.
    Inconclusive(Vec<S>),
}

/// Searches for `rho >= 1` with `rho . (y_j - y_i) = 0` for every reaction.
pub fn mass_conservation_vector<S: Scalar>(
    r: &Realization<S>,
) -> Result<MassConservation<S>, TransformError> {
    let m = r.species_count();
    let mut program = LinearProgram::<S>::new();
    let rho: Vec<usize> = (0..m)
        .map(|s| program.add_variable(format!("rho_{s}"), Some(S::one()), None, false))
        .collect();
    let vectors: BTreeSet<Vec<i64>> = r
        .reactions()
        .iter()
        .map(|x| r.complexes()[x.reactant].difference_to(&r.complexes()[x.product]))
        .collect();
    for d in &vectors {
        let row = d
            .iter()
            .enumerate()
            .filter(|(_, &ds)| ds != 0)
            .map(|(s, &ds)| (rho[s], S::from_i64(ds)))
            .collect();
        program.add_constraint(row, Relation::Eq, S::zero());
    }
    program.set_objective(
        rho.iter().map(|&v| (v, S::one())).collect(),
        Direction::Minimize,
    );
    let outcome = solve_lp(&program)?;
    let solved = outcome.is_solved();
    let Some(x) = outcome.assignment.filter(|_| solved) else {
        return Ok(MassConservation::NotConserving);
    };
    let report = analyze_structure(r);
    if report.linkage_classes == report.terminal_classes {
        Ok(MassConservation::Conserving(x))
    } else {
        Ok(MassConservation::Inconclusive(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_ode;
    use crate::network::parse_network;
    use crate::realize::canonical_realization;
    use crate::scalar::{int, ratio};

    fn net(text: &str) -> Realization {
        parse_network(text).unwrap()
    }

    fn cx(e: &[u32]) -> Complex {
        Complex::new(e.to_vec())
    }

    #[test]
    fn combining_with_itself_is_identity() {
        let r = net("X <=> 2X ; rates = 1, 3\n0 -> X ; rate = 2");
        let c = convex_combine(&[r.clone(), r.clone()], &[ratio(1, 2), ratio(1, 2)]).unwrap();
        assert_eq!(c, r);
    }

    #[test]
    fn combining_wr_networks_sums_their_systems() {
        let a =
            net("species: X, Y\nX <=> Y ; rates = 1, 2\n2X -> 2Y ; rate = 1\n2Y -> 2X ; rate = 1");
        let b =
            net("species: X, Y\nX -> Y ; rate = 1\nY -> X ; rate = 1\n2X <=> 2Y ; rates = 3, 1");
        let c = convex_combine(&[a.clone(), b.clone()], &[int(1), int(1)]).unwrap();
        assert!(analyze_structure(&c).weakly_reversible);
        let sum = parse_ode(
            "species: X, Y\ndX/dt = -2X + 3Y - 8X^2 + 4Y^2\ndY/dt = 2X - 3Y + 8X^2 - 4Y^2",
        )
        .unwrap();
        assert_eq!(induced_ode(&c), sum);
    }

    #[test]
    fn combine_rejects_mismatched_complexes_and_bad_weights() {
        let a = net("species: X\nX -> 2X ; rate = 1");
        let b = net("species: X\nX -> 0 ; rate = 1");
        assert_eq!(
            convex_combine(&[a.clone(), b], &[int(1), int(1)]),
            Err(TransformError::ComplexSetMismatch)
        );
        assert!(matches!(
            convex_combine(std::slice::from_ref(&a), &[int(0)]),
            Err(TransformError::InvalidWeights(_))
        ));
        assert!(matches!(
            convex_combine(&[a], &[int(-1)]),
            Err(TransformError::InvalidWeights(_))
        ));
    }

    #[test]
    fn add_midpoint_complex() {
        let r = Realization::<Rational>::empty(
            vec!["X".into(), "Y".into()],
            vec![cx(&[0, 2]), cx(&[2, 0])],
        )
        .unwrap();
        let out = add_zero_complex(&r, &cx(&[1, 1]), &[ratio(1, 2), ratio(1, 2)], &int(1)).unwrap();
        assert_eq!(out.complex_count(), 3);
        assert_eq!(out.rate_between(&cx(&[1, 1]), &cx(&[2, 0])), ratio(1, 2));
        assert_eq!(out.rate_between(&cx(&[1, 1]), &cx(&[0, 2])), ratio(1, 2));
        assert_eq!(
            induced_ode(&out),
            induced_ode(&r.with_complexes(out.complexes().to_vec()).unwrap())
        );
    }

    #[test]
    fn add_branching_pair_with_scale() {
        let r = Realization::<Rational>::empty(vec!["X".into()], vec![cx(&[0]), cx(&[2])]).unwrap();
        let k = int(5);
        let out =
            add_zero_complex(&r, &cx(&[1]), &[ratio(1, 2), ratio(1, 2)], &(int(2) * &k)).unwrap();
        let expected = net("species: X\nX -> 0 ; rate = 5\nX -> 2X ; rate = 5");
        assert!(out.same_network(&expected));
        assert_eq!(induced_ode(&out), parse_ode("dX/dt = 0").unwrap());
    }

    #[test]
    fn add_existing_complex_with_unit_weight_is_noop() {
        let r = net("species: X\nX -> 2X ; rate = 1");
        let y = r.complexes()[0].clone();
        let out = add_zero_complex(&r, &y, &[int(1), int(0)], &int(1)).unwrap();
        assert_eq!(out, r);
    }

    #[test]
    fn add_rejects_non_combination() {
        let r = Realization::<Rational>::empty(vec!["X".into()], vec![cx(&[0]), cx(&[2])]).unwrap();
        assert_eq!(
            add_zero_complex(&r, &cx(&[1]), &[ratio(1, 4), ratio(3, 4)], &int(1)),
            Err(TransformError::NotConvexCombination)
        );
    }

    #[test]
    fn eliminate_intermediate_complex() {
        let r = net("species: X, Y\nX -> 0 ; rate = 1\nX -> 2X ; rate = 1\n2X -> X ; rate = 1\n0 -> Y ; rate = 1");
        let x = r.complex_index(&cx(&[1, 0])).unwrap();
        let out = eliminate_complex(&r, x).unwrap();
        let expected = net("species: X, Y\n0 -> Y ; rate = 1\n2X -> 0 ; rate = 1/2");
        assert!(out.same_network(&expected));
        assert_eq!(induced_ode(&out), induced_ode(&r));
    }

    #[test]
    fn eliminate_without_inflow() {
        let r = net("species: X, Y\nX -> 0 ; rate = 1\nX -> 2X ; rate = 1\n0 -> Y ; rate = 1");
        let x = r.complex_index(&cx(&[1, 0])).unwrap();
        let out = eliminate_complex(&r, x).unwrap();
        assert!(out.same_network(&net("species: X, Y\n0 -> Y ; rate = 1")));
    }

    #[test]
    fn eliminate_rejects_present_monomial() {
        let r = canonical_realization(&parse_ode("dx/dt = x - x^2").unwrap()).unwrap();
        let x = r.complex_index(&cx(&[1])).unwrap();
        assert_eq!(
            eliminate_complex(&r, x),
            Err(TransformError::MonomialPresent(x))
        );
        let sink = net("species: x\nx -> 2x ; rate = 1");
        let sink_idx = sink.complex_index(&cx(&[2])).unwrap();
        assert_eq!(
            eliminate_complex(&sink, sink_idx),
            Err(TransformError::NoOutgoingReactions(sink_idx))
        );
    }

    #[test]
    fn rescale_open_gc_network() {
        let r =
            net("3X -> 2Y ; rate = 1\n2Y -> 3X ; rate = 2\n3X -> 0 ; rate = 3\n0 -> 2Y ; rate = 1");
        let out = rescale_to_complex_balanced(&r, &[int(1), int(1)]).unwrap();
        let expected =
            net("3X -> 2Y ; rate = 1\n2Y -> 3X ; rate = 4\n3X -> 0 ; rate = 3\n0 -> 2Y ; rate = 3");
        assert!(out.same_network(&expected));
        let ode = parse_ode("species: X, Y\ndX/dt = -12 X^3 + 12 Y^2\ndY/dt = 2 X^3 - 8 Y^2 + 6")
            .unwrap();
        assert_eq!(induced_ode(&out), ode);
        assert_eq!(
            induced_ode(&out).sign_pattern(),
            induced_ode(&r).sign_pattern()
        );
    }

    #[test]
    fn rescale_balanced_pair_is_identity() {
        let r = net("X <=> 2X ; rates = 1, 1");
        assert_eq!(rescale_to_complex_balanced(&r, &[int(1)]).unwrap(), r);
    }

    #[test]
    fn rescale_requires_weak_reversibility() {
        let r = net("species: X, Y\nX -> 3Y ; rate = 1\nY -> 2X ; rate = 1");
        assert_eq!(
            rescale_to_complex_balanced(&r, &[int(1), int(1)]),
            Err(TransformError::NotWeaklyReversible)
        );
    }

    #[test]
    fn mass_conservation_examples() {
        let r = net("2X + 5Y + Z <=> 3X + 4Y + Z ; rates = 1, 1");
        match mass_conservation_vector(&r).unwrap() {
            MassConservation::Conserving(rho) => {
                assert_eq!(rho[0], rho[1]);
                assert!(rho.iter().all(|x| *x >= int(1)));
            }
            other => panic!("expected conserving, got {other:?}"),
        }
        assert_eq!(
            mass_conservation_vector(&net("X <=> 2X ; rates = 1, 1")).unwrap(),
            MassConservation::NotConserving
        );
        assert_eq!(
            mass_conservation_vector(&net(
                "species: X, Y\nX -> 3Y ; rate = 1\nY -> 2X ; rate = 1"
            ))
            .unwrap(),
            MassConservation::NotConserving
        );
    }

    #[test]
    fn mass_conservation_without_terminal_match_is_inconclusive() {
        let r = net("species: X, Y, Z\nX -> Y ; rate = 1\nX -> Z ; rate = 1");
        assert!(matches!(
            mass_conservation_vector(&r).unwrap(),
            MassConservation::Inconclusive(_)
        ));
    }
}
