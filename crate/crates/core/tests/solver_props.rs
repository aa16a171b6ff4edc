use crn_realize::linsolve::{
    solve_lp, solve_milp, Direction, LinearProgram, Relation, SolveStatus,
};
use crn_realize::scalar::{Rational, Scalar};
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Case {
    binaries: usize,
    continuous: bool,
    rows: Vec<(Vec<i64>, Relation, i64)>,
    objective: Vec<i64>,
    maximize: bool,
}

fn relation() -> impl Strategy<Value = Relation> {
    prop_oneof![Just(Relation::Le), Just(Relation::Ge), Just(Relation::Eq)]
}

fn case() -> impl Strategy<Value = Case> {
    (1usize..=12, any::<bool>()).prop_flat_map(|(binaries, continuous)| {
        let width = binaries + usize::from(continuous);
        let row = (
            prop::collection::vec(-3i64..=3, width),
            relation(),
            -2i64..=6,
        );
        (
            prop::collection::vec(row, 1..=4),
            prop::collection::vec(-4i64..=4, width),
            any::<bool>(),
        )
            .prop_map(move |(rows, objective, maximize)| Case {
                binaries,
                continuous,
                rows,
                objective,
                maximize,
            })
    })
}

fn build(case: &Case, fixed: Option<u32>) -> LinearProgram {
    let mut p = LinearProgram::new();
    for b in 0..case.binaries {
        match fixed {
            Some(mask) => {
                let v = Rational::from_i64(i64::from((mask >> b) & 1));
                p.add_variable(format!("b{b}"), Some(v.clone()), Some(v), false);
            }
            None => {
                p.add_binary(format!("b{b}"));
            }
        }
    }
    if case.continuous {
        p.add_variable(
            "c",
            Some(Rational::from_i64(0)),
            Some(Rational::from_i64(3)),
            false,
        );
    }
    let row = |coeffs: &[i64]| -> Vec<(usize, Rational)> {
        coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(i, &c)| (i, Rational::from_i64(c)))
            .collect()
    };
    for (coeffs, rel, rhs) in &case.rows {
        p.add_constraint(row(coeffs), *rel, Rational::from_i64(*rhs));
    }
    let direction = if case.maximize {
        Direction::Maximize
    } else {
        Direction::Minimize
    };
    p.set_objective(row(&case.objective), direction);
    p
}

/// Best objective over all binary assignments, each completed by an LP.
fn enumerate(case: &Case) -> Option<Rational> {
    let mut best: Option<Rational> = None;
    for mask in 0u32..(1 << case.binaries) {
        let out = solve_lp(&build(case, Some(mask))).unwrap();
        if out.status != SolveStatus::Optimal {
            continue;
        }
        let v = out.objective_value.unwrap();
        let better = match &best {
            None => true,
            Some(b) => (case.maximize && v > *b) || (!case.maximize && v < *b),
        };
        if better {
            best = Some(v);
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn branch_and_bound_matches_enumeration(case in case()) {
        let program = build(&case, None);
        let expected = enumerate(&case);
        let out = solve_milp(&program).unwrap();
        match expected {
            None => prop_assert_eq!(out.status, SolveStatus::Infeasible),
            Some(best) => {
                prop_assert_eq!(out.status, SolveStatus::Optimal);
                let x = out.assignment.unwrap();
                prop_assert!(program.is_satisfied_by(&x));
                prop_assert!(x[..case.binaries].iter().all(|v| v.is_integer()));
                prop_assert_eq!(program.objective_at(&x), best.clone());
                prop_assert_eq!(out.objective_value.unwrap(), best);
            }
        }
    }

    #[test]
    fn float_simplex_agrees_with_exact(case in case()) {
        let exact = solve_milp(&build(&case, None)).unwrap();
        let float_program = {
            let p = build(&case, None);
            LinearProgram::<f64> {
                variables: p.variables.iter().map(|v| crn_realize::linsolve::Variable {
                    name: v.name.clone(),
                    lower: v.lower.as_ref().map(Scalar::to_f64),
                    upper: v.upper.as_ref().map(Scalar::to_f64),
                    integral: v.integral,
                }).collect(),
                constraints: p.constraints.iter().map(|c| crn_realize::linsolve::Constraint {
                    coefficients: c.coefficients.iter().map(|(i, v)| (*i, v.to_f64())).collect(),
                    relation: c.relation,
                    rhs: c.rhs.to_f64(),
                }).collect(),
                objective: p.objective.as_ref().map(|o| crn_realize::linsolve::Objective {
                    coefficients: o.coefficients.iter().map(|(i, v)| (*i, v.to_f64())).collect(),
                    direction: o.direction,
                }),
            }
        };
        let float = solve_milp(&float_program).unwrap();
        prop_assert_eq!(exact.status, float.status);
        if let (Some(a), Some(b)) = (exact.objective_value, float.objective_value) {
            prop_assert!((a.to_f64() - b).abs() <= 1e-6 * (1.0 + a.to_f64().abs()));
        }
    }
}
