//! Compartmental and generalized compartmental realizations.
//!
//! A system `dx/dt = Z x^Y + b` (constant term in the zero complex's
//! column) is compartmental-realizable when `Z = Y B` and `b = Y v` for a
//! compartmental matrix `B` and `v >= 0`. The network then consists of the
//! transfers `y_n -> y_q` (rate `B_qn`), outflows `y_n -> 0` and inflows
//! `0 -> y_n`.

use crate::linalg;
use crate::linsolve::{self, LinearProgram, Relation};
use crate::model::{Complex, KineticSystem};
use crate::network::{induced_ode, Reaction, Realization};
use crate::scalar::{Rational, Scalar};

use super::RealizeError;

/// `B`, outflow rates `u` and inflow rates `v` over the nonzero complexes.
#[derive(Debug, Clone, PartialEq)]
pub struct CompartmentalDecomposition<S = Rational> {
    /// The nonzero monomial complexes, in system order.
    pub complexes: Vec<Complex>,
    /// `b_matrix[q][n]`, the compartmental matrix.
    pub b_matrix: Vec<Vec<S>>,
    /// `u_n = -B_nn - sum_{q != n} B_qn`, rate of `y_n -> 0`.
    pub outflow: Vec<S>,
    /// `v_n`, rate of `0 -> y_n`.
    pub inflow: Vec<S>,
}

impl<S: Scalar> CompartmentalDecomposition<S> {
    fn from_parts(complexes: Vec<Complex>, b_matrix: Vec<Vec<S>>, inflow: Vec<S>) -> Self {
        let n = complexes.len();
        let outflow = (0..n)
            .map(|c| {
                let off = (0..n)
                    .filter(|&q| q != c)
                    .fold(S::zero(), |acc, q| acc + b_matrix[q][c].clone());
                -b_matrix[c][c].clone() - off
            })
            .collect();
        CompartmentalDecomposition {
            complexes,
            b_matrix,
            outflow,
            inflow,
        }
    }

    /// Off-diagonal entries, outflows and inflows are all nonnegative.
    pub fn is_valid(&self) -> bool {
        let n = self.complexes.len();
        let off_ok = (0..n).all(|q| (0..n).all(|c| q == c || !self.b_matrix[q][c].is_negative()));
        off_ok
            && self.outflow.iter().all(|u| !u.is_negative())
            && self.inflow.iter().all(|v| !v.is_negative())
    }

    /// The network of transfers, outflows and inflows.
    pub fn realization(&self, species: Vec<String>) -> Result<Realization<S>, RealizeError> {
        let n = self.complexes.len();
        let m = species.len();
        let zero = Complex::zero(m);
        let uses_zero = self
            .outflow
            .iter()
            .chain(&self.inflow)
            .any(Scalar::is_positive);
        let mut complexes = self.complexes.clone();
        if uses_zero {
            complexes.push(zero.clone());
        }
        complexes.sort();
        let index = |c: &Complex| complexes.binary_search(c).expect("collected");
        let mut reactions = Vec::new();
        for c in 0..n {
            let from = index(&self.complexes[c]);
            for q in (0..n).filter(|&q| q != c) {
                if self.b_matrix[q][c].is_positive() {
                    reactions.push(Reaction {
                        reactant: from,
                        product: index(&self.complexes[q]),
                        rate: self.b_matrix[q][c].clone(),
                    });
                }
            }
            if self.outflow[c].is_positive() {
                reactions.push(Reaction {
                    reactant: from,
                    product: index(&zero),
                    rate: self.outflow[c].clone(),
                });
            }
            if self.inflow[c].is_positive() {
                reactions.push(Reaction {
                    reactant: index(&zero),
                    product: from,
                    rate: self.inflow[c].clone(),
                });
            }
        }
        Ok(Realization::from_reactions(species, complexes, reactions)?)
    }
}

/// Nonzero monomials and their coefficient columns, plus the constant term.
fn split_constant<S: Scalar>(sys: &KineticSystem<S>) -> (Vec<Complex>, Vec<Vec<S>>, Vec<S>) {
    let mut complexes = Vec::new();
    let mut columns = Vec::new();
    for (n, y) in sys.complexes().iter().enumerate() {
        if !y.is_zero() {
            complexes.push(y.clone());
            columns.push(sys.column(n));
        }
    }
    (complexes, columns, sys.constant_term())
}

/// Searches for `Z = Y B`, `b = Y v` with `B` compartmental and `v >= 0`.
///
/// When `Y` is square and invertible the solution is unique and obtained by
/// a linear solve; otherwise a linear program picks one.
pub fn compartmental_realization<S: Scalar>(
    sys: &KineticSystem<S>,
) -> Result<(CompartmentalDecomposition<S>, Realization<S>), RealizeError> {
    let (complexes, columns, b) = split_constant(sys);
    let m = sys.species_count();
    let n = complexes.len();
    let y: Vec<Vec<S>> = (0..m)
        .map(|s| {
            complexes
                .iter()
                .map(|c| S::from_i64(i64::from(c.0[s])))
                .collect()
        })
        .collect();
    let z: Vec<Vec<S>> = (0..m)
        .map(|s| columns.iter().map(|col| col[s].clone()).collect())
        .collect();

    let decomposition = match (n == m).then(|| linalg::inverse(&y)).flatten() {
        Some(inv) => {
            let b_matrix = linalg::matmul(&inv, &z);
            let b_col: Vec<Vec<S>> = b.iter().map(|v| vec![v.clone()]).collect();
            let inflow = linalg::matmul(&inv, &b_col)
                .into_iter()
                .map(|r| r[0].clone())
                .collect();
            CompartmentalDecomposition::from_parts(complexes, b_matrix, inflow)
        }
        None => solve_compartmental_lp(&complexes, &z, &b)?,
    };
    if !decomposition.is_valid() {
        return Err(RealizeError::NoRealization);
    }
    let r = decomposition.realization(sys.species_names())?;
    if !induced_ode(&r).approx_eq(sys) {
        return Err(RealizeError::VerificationFailed);
    }
    Ok((decomposition, r))
}

fn solve_compartmental_lp<S: Scalar>(
    complexes: &[Complex],
    z: &[Vec<S>],
    b: &[S],
) -> Result<CompartmentalDecomposition<S>, RealizeError> {
    let n = complexes.len();
    let m = b.len();
    let mut p = LinearProgram::new();
    let mut off = vec![vec![None; n]; n];
    for q in 0..n {
        for c in (0..n).filter(|&c| c != q) {
            off[q][c] = Some(p.add_variable(format!("B_{q}_{c}"), Some(S::zero()), None, false));
        }
    }
    let diag: Vec<usize> = (0..n)
        .map(|c| p.add_variable(format!("B_{c}_{c}"), None, None, false))
        .collect();
    let inflow: Vec<usize> = (0..n)
        .map(|c| p.add_variable(format!("v_{c}"), Some(S::zero()), None, false))
        .collect();
    let yv = |s: usize, c: usize| S::from_i64(i64::from(complexes[c].0[s]));
    for s in 0..m {
        for c in 0..n {
            // (Y B)_{s,c} = sum_q y_q^s B_qc
            let mut row: Vec<(usize, S)> = (0..n)
                .filter(|&q| q != c)
                .map(|q| (off[q][c].expect("off-diagonal"), yv(s, q)))
                .collect();
            row.push((diag[c], yv(s, c)));
            p.add_constraint(row, Relation::Eq, z[s][c].clone());
        }
        let row = (0..n).map(|c| (inflow[c], yv(s, c))).collect();
        p.add_constraint(row, Relation::Eq, b[s].clone());
    }
    // Compartmental: B_cc + sum_{q != c} B_qc <= 0.
    for c in 0..n {
        let mut row: Vec<(usize, S)> = (0..n)
            .filter(|&q| q != c)
            .map(|q| (off[q][c].expect("off-diagonal"), S::one()))
            .collect();
        row.push((diag[c], S::one()));
        p.add_constraint(row, Relation::Le, S::zero());
    }
    let out = linsolve::solve_lp(&p)?;
    let solved = out.is_solved();
    let Some(x) = out.assignment.filter(|_| solved) else {
        return Err(RealizeError::NoRealization);
    };
    let b_matrix = (0..n)
        .map(|q| {
            (0..n)
                .map(|c| x[off[q][c].unwrap_or(diag[c])].clone())
                .collect()
        })
        .collect();
    let inflow = inflow.iter().map(|&v| x[v].clone()).collect();
    Ok(CompartmentalDecomposition::from_parts(
        complexes.to_vec(),
        b_matrix,
        inflow,
    ))
}

/// Class of a generalized compartmental system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GcClass {
    Closed,
    HalfOpen,
    Open,
    NotGC,
}

impl std::fmt::Display for GcClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GcClass::Closed => "closed",
            GcClass::HalfOpen => "half-open",
            GcClass::Open => "open",
            GcClass::NotGC => "not generalized compartmental",
        })
    }
}

/// Decides whether the system is induced by a closed, half-open or open
/// generalized compartmental system (every complex is `y_m X(m)` and each
/// species has exactly one complex).
pub fn classify_generalized_compartmental<S: Scalar>(sys: &KineticSystem<S>) -> GcClass {
    let (complexes, columns, b) = split_constant(sys);
    let m = sys.species_count();
    if complexes.len() != m || m == 0 {
        return GcClass::NotGC;
    }
    // owner[s] = index of the complex y_s X(s), y[s] its coefficient.
    let mut owner = vec![None; m];
    let mut y = vec![S::zero(); m];
    for (n, c) in complexes.iter().enumerate() {
        let support: Vec<usize> = (0..m).filter(|&s| c.0[s] > 0).collect();
        let [s] = support[..] else {
            return GcClass::NotGC;
        };
        if owner[s].is_some() {
            return GcClass::NotGC;
        }
        owner[s] = Some(n);
        y[s] = S::from_i64(i64::from(c.0[s]));
    }
    if b.iter().any(Scalar::is_negative) {
        return GcClass::NotGC;
    }
    // z(row, col): coefficient of species `row` in the monomial of species `col`.
    let z = |row: usize, col: usize| columns[owner[col].expect("all species owned")][row].clone();
    let mut strict = false;
    let mut tight = true;
    for s in 0..m {
        if z(s, s).is_positive() {
            return GcClass::NotGC;
        }
        let mut beta = S::zero();
        for p in (0..m).filter(|&p| p != s) {
            if z(s, p).is_negative() {
                return GcClass::NotGC;
            }
            beta = beta + z(p, s) / y[p].clone();
        }
        if beta.is_negative() {
            return GcClass::NotGC;
        }
        let slack = z(s, s) + beta * y[s].clone();
        if slack.is_positive() {
            return GcClass::NotGC;
        }
        if slack.is_negative() {
            strict = true;
            tight = false;
        }
    }
    let inflow = b.iter().any(Scalar::is_positive);
    match (inflow, tight, strict) {
        (false, true, _) => GcClass::Closed,
        (false, _, true) => GcClass::HalfOpen,
        (true, _, _) => GcClass::Open,
        _ => GcClass::NotGC,
    }
}
