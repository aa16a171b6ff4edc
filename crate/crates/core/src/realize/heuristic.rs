//! Greedy search for a reversible realization by pairing terms.
//!
//! The pool holds one coefficient column per monomial. A term `(alpha, c)`
//! is paired with the term of `beta = alpha + d`, `d` the primitive integer
//! direction of `c`, when that term points back along `alpha - beta`. The
//! pair becomes `alpha -> beta` (rate `k`, `c = k d`) and `beta -> alpha`
//! (rate `lambda`, the largest multiple of `alpha - beta` the partner can
//! supply); what is left of the partner returns to the pool. Terms are
//! scanned in lexicographic monomial order and the scan restarts after
//! every pairing.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::model::{Complex, KineticSystem};
use crate::network::{induced_ode, Reaction, Realization};
use crate::scalar::Rational;

use super::{RealizationQuery, RealizeError};

/// Primitive integer direction `d` and factor `k` with `c = k d`, `k > 0`.
fn primitive_direction(c: &[Rational]) -> Option<(Vec<i64>, Rational)> {
    let lcm = c.iter().fold(BigInt::from(1), |acc, v| acc.lcm(v.denom()));
    let ints: Vec<BigInt> = c
        .iter()
        .map(|v| (v * Rational::from_integer(lcm.clone())).to_integer())
        .collect();
    let gcd = ints.iter().fold(BigInt::zero(), |acc, v| acc.gcd(v));
    if gcd.is_zero() {
        return None;
    }
    let d: Vec<i64> = ints
        .iter()
        .map(|v| (v / &gcd).to_i64())
        .collect::<Option<_>>()?;
    let k = Rational::new(gcd, lcm);
    Some((d, k))
}

/// Runs the pairing heuristic. Failure says nothing about whether a
/// reversible realization exists.
pub fn reversible_pairing_heuristic(sys: &KineticSystem) -> Result<Realization, RealizeError> {
    RealizationQuery::new(sys.clone()).validate()?;
    let mut pool: BTreeMap<Complex, Vec<Rational>> = sys
        .complexes()
        .iter()
        .enumerate()
        .map(|(n, y)| (y.clone(), sys.column(n)))
        .collect();
    let mut pairs: Vec<(Complex, Complex, Rational)> = Vec::new();
    while !pool.is_empty() {
        let step = pool.iter().find_map(|(alpha, c)| {
            let (d, k) = primitive_direction(c)?;
            let beta = alpha.shifted(&d)?;
            let partner = pool.get(&beta)?;
            let mut lambda: Option<Rational> = None;
            for (m, &dm) in d.iter().enumerate() {
                if dm == 0 {
                    continue;
                }
                let ratio = &partner[m] / Rational::from_integer(BigInt::from(-dm));
                if !ratio.is_positive() {
                    return None;
                }
                if lambda.as_ref().is_none_or(|l| ratio < *l) {
                    lambda = Some(ratio);
                }
            }
            let lambda = lambda?;
            let residual: Vec<Rational> = partner
                .iter()
                .zip(&d)
                .map(|(p, &dm)| p + &lambda * Rational::from_integer(BigInt::from(dm)))
                .collect();
            Some((alpha.clone(), beta, k, lambda, residual))
        });
        let Some((alpha, beta, k, lambda, residual)) = step else {
            let first = pool.keys().next().expect("nonempty pool");
            return Err(RealizeError::HeuristicFailure(format!(
                "no reverse partner for monomial {}",
                first.display(&sys.species_names())
            )));
        };
        pool.remove(&alpha);
        if residual.iter().all(Zero::is_zero) {
            pool.remove(&beta);
        } else {
            pool.insert(beta.clone(), residual);
        }
        pairs.push((alpha.clone(), beta.clone(), k));
        pairs.push((beta, alpha, lambda));
    }
    let complexes = sys.complexes().to_vec();
    let index = |c: &Complex| {
        complexes
            .binary_search(c)
            .expect("pool monomials come from the system")
    };
    let reactions: Vec<Reaction> = pairs
        .iter()
        .map(|(a, b, rate)| Reaction {
            reactant: index(a),
            product: index(b),
            rate: rate.clone(),
        })
        .collect();
    let r = Realization::from_reactions(sys.species_names(), complexes.clone(), reactions)?;
    if induced_ode(&r) != *sys {
        return Err(RealizeError::VerificationFailed);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_ode;
    use crate::network::{analyze_structure, parse_network};
    use crate::scalar::{int, ratio};

    #[test]
    fn primitive_directions() {
        let (d, k) = primitive_direction(&[ratio(2, 3), ratio(-4, 3)]).unwrap();
        assert_eq!(d, vec![1, -2]);
        assert_eq!(k, ratio(2, 3));
        assert!(primitive_direction(&[int(0)]).is_none());
    }

    #[test]
    fn logistic_pairs_into_one_reversible_reaction() {
        let sys = parse_ode("dx/dt = x - x^2").unwrap();
        let r = reversible_pairing_heuristic(&sys).unwrap();
        let expected: Realization = parse_network("species: x\nx <=> 2x ; rates = 1, 1").unwrap();
        assert!(r.same_network(&expected));
    }

    #[test]
    fn pure_inflow_cannot_be_paired() {
        let sys = parse_ode("dx/dt = 1").unwrap();
        assert!(matches!(
            reversible_pairing_heuristic(&sys),
            Err(RealizeError::HeuristicFailure(_))
        ));
    }

    #[test]
    fn residual_terms_are_reused() {
        // X <=> 2X takes the x-part of the x^2 column, the y-part pairs with x^2 y.
        let sys = parse_ode("dx/dt = x - 3 x^2\ndy/dt = x^2 - x^2 y").unwrap();
        let r = reversible_pairing_heuristic(&sys).unwrap();
        let expected: Realization =
            parse_network("species: x, y\nx <=> 2x ; rates = 1, 3\n2x <=> 2x + y ; rates = 1, 1")
                .unwrap();
        assert!(r.same_network(&expected));
        assert!(analyze_structure(&r).reversible);
    }
}
