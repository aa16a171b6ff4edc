//! Realizations of kinetic systems with prescribed structure.
//!
//! Everything here works on a fixed complex set. A [`RealizationQuery`]
//! names the system, the complexes, the structural property and any
//! forbidden reactions; [`realization_constraints`] turns it into a linear
//! or mixed-integer program over the off-diagonal Kirchhoff entries.

mod compartmental;
mod heuristic;

use std::collections::BTreeSet;
use std::fmt;

use crate::linsolve::{self, Direction, LinearProgram, Relation, SolveError, SolveOutcome};
use crate::model::{Complex, KineticSystem, KineticViolation};
use crate::network::{self, analyze_structure, induced_ode, NetworkError, Reaction, Realization};
use crate::scalar::{Rational, Scalar};
use crate::transform::{self, TransformError};

pub use compartmental::{
    classify_generalized_compartmental, compartmental_realization, CompartmentalDecomposition,
    GcClass,
};
pub use heuristic::reversible_pairing_heuristic;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RealizeError {
    #[error("system is not kinetic ({} negative cross-effect(s))", .0.len())]
    NotKinetic(Vec<KineticViolation<Rational>>),
    #[error("monomial {0:?} is not in the complex set")]
    MonomialNotCovered(Complex),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    /// Certified: no realization exists on this complex set with this property.
    #[error("no realization with the requested property on this complex set")]
    NoRealization,
    #[error("pairing heuristic failed: {0}")]
    HeuristicFailure(String),
    #[error("realization does not reproduce the input system")]
    VerificationFailed,
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

impl RealizeError {
    /// True for mathematically certified negative answers.
    pub fn is_certified_negative(&self) -> bool {
        matches!(self, RealizeError::NoRealization)
    }
}

/// Structural requirement on the realization.
#[derive(Debug, Clone, PartialEq)]
pub enum Property<S = Rational> {
    Any,
    Reversible,
    WeaklyReversible,
    /// Detailed balanced at the given positive state.
    DetailedBalanced(Vec<S>),
    /// Complex balanced at the given positive state.
    ComplexBalanced(Vec<S>),
}

impl<S> Property<S> {
    /// Short name used by the command line and certificates.
    pub fn label(&self) -> &'static str {
        match self {
            Property::Any => "any",
            Property::Reversible => "rev",
            Property::WeaklyReversible => "wr",
            Property::DetailedBalanced(_) => "db",
            Property::ComplexBalanced(_) => "cb",
        }
    }
}

impl<S> fmt::Display for Property<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// The inputs of a realization search.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationQuery<S = Rational> {
    pub system: KineticSystem<S>,
    pub complexes: Vec<Complex>,
    pub property: Property<S>,
    /// Excluded `(reactant, product)` index pairs.
    pub forbidden: BTreeSet<(usize, usize)>,
    /// Lower bound for rates that must be present.
    pub epsilon: S,
    /// Upper bound for rates switched on by an indicator.
    pub big_m: S,
}

pub fn default_epsilon<S: Scalar>() -> S {
    S::one() / S::from_i64(1_000_000)
}

pub fn default_big_m<S: Scalar>() -> S {
    S::from_i64(1_000_000)
}

impl<S: Scalar> RealizationQuery<S> {
    /// Query over exactly the monomials of `system`, property `Any`.
    pub fn new(system: KineticSystem<S>) -> Self {
        let complexes = system.complexes().to_vec();
        RealizationQuery {
            system,
            complexes,
            property: Property::Any,
            forbidden: BTreeSet::new(),
            epsilon: default_epsilon(),
            big_m: default_big_m(),
        }
    }

    pub fn with_property(mut self, property: Property<S>) -> Self {
        self.property = property;
        self
    }

    /// Adds complexes to the set; the result is kept in lexicographic order.
    /// Forbidden pairs are cleared because indices shift.
    pub fn with_extra_complexes(mut self, extra: impl IntoIterator<Item = Complex>) -> Self {
        let set: BTreeSet<Complex> = self.complexes.drain(..).chain(extra).collect();
        self.complexes = set.into_iter().collect();
        self.forbidden.clear();
        self
    }

    /// Replaces the complex set (order is kept).
    pub fn with_complexes(mut self, complexes: Vec<Complex>) -> Self {
        self.complexes = complexes;
        self.forbidden.clear();
        self
    }

    pub fn forbid(mut self, reactant: usize, product: usize) -> Self {
        self.forbidden.insert((reactant, product));
        self
    }

    pub fn with_epsilon(mut self, epsilon: S) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_big_m(mut self, big_m: S) -> Self {
        self.big_m = big_m;
        self
    }

    pub fn complex_index(&self, complex: &Complex) -> Option<usize> {
        self.complexes.iter().position(|c| c == complex)
    }

    fn validate(&self) -> Result<(), RealizeError> {
        let m = self.system.species_count();
        let violations = self.system.kinetic_violations();
        if !violations.is_empty() {
            return Err(RealizeError::NotKinetic(
                violations
                    .into_iter()
                    .map(|v| KineticViolation {
                        species: v.species,
                        complex: v.complex,
                        coefficient: v.coefficient.to_rational(),
                    })
                    .collect(),
            ));
        }
        if let Some(c) = self.complexes.iter().find(|c| c.len() != m) {
            return Err(RealizeError::InvalidQuery(format!(
                "complex {:?} has {} entries, expected {m}",
                c.0,
                c.len()
            )));
        }
        if self.complexes.iter().collect::<BTreeSet<_>>().len() != self.complexes.len() {
            return Err(RealizeError::InvalidQuery("duplicate complexes".into()));
        }
        if let Some(y) = self
            .system
            .complexes()
            .iter()
            .find(|y| !self.complexes.contains(y))
        {
            return Err(RealizeError::MonomialNotCovered(y.clone()));
        }
        let n = self.complexes.len();
        if let Some(&(i, j)) = self.forbidden.iter().find(|&&(i, j)| i >= n || j >= n) {
            return Err(RealizeError::InvalidQuery(format!(
                "forbidden pair ({i}, {j}) out of range"
            )));
        }
        if !self.epsilon.is_positive() || !(self.big_m.clone() - self.epsilon.clone()).is_positive()
        {
            return Err(RealizeError::InvalidQuery(
                "need 0 < epsilon < big_m".into(),
            ));
        }
        if let Property::DetailedBalanced(x) | Property::ComplexBalanced(x) = &self.property {
            if x.len() != m {
                return Err(RealizeError::InvalidQuery(format!(
                    "x* has {} entries, expected {m}",
                    x.len()
                )));
            }
            if x.iter().any(|v| !v.is_positive()) {
                return Err(RealizeError::InvalidQuery(
                    "x* must be strictly positive".into(),
                ));
            }
        }
        Ok(())
    }

    /// Monomial values `(x*)^y` when the property carries a state.
    fn state_monomials(&self) -> Option<Vec<S>> {
        match &self.property {
            Property::DetailedBalanced(x) | Property::ComplexBalanced(x) => {
                Some(self.complexes.iter().map(|y| y.monomial(x)).collect())
            }
            _ => None,
        }
    }
}

/// A realization program together with its variable layout.
#[derive(Debug, Clone)]
pub struct RealizationProgram<S = Rational> {
    pub program: LinearProgram<S>,
    n: usize,
    /// `rate[i][j]` is the variable for the rate of `i -> j`.
    rate: Vec<Vec<Option<usize>>>,
    /// `indicator[i][j]` switches `i -> j` on, when present.
    indicator: Vec<Vec<Option<usize>>>,
}

impl<S: Scalar> RealizationProgram<S> {
    pub fn rate_variable(&self, from: usize, to: usize) -> Option<usize> {
        self.rate[from][to]
    }

    pub fn indicator_variable(&self, from: usize, to: usize) -> Option<usize> {
        self.indicator[from][to]
    }

    pub fn complex_count(&self) -> usize {
        self.n
    }

    /// Reads the realization off a solved assignment.
    fn realization(
        &self,
        q: &RealizationQuery<S>,
        x: &[S],
    ) -> Result<Realization<S>, RealizeError> {
        let mut reactions = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if let Some(v) = self.rate[i][j] {
                    if x[v].is_positive() {
                        reactions.push(Reaction {
                            reactant: i,
                            product: j,
                            rate: x[v].clone(),
                        });
                    }
                }
            }
        }
        Ok(Realization::from_reactions(
            q.system.species_names(),
            q.complexes.clone(),
            reactions,
        )?)
    }

    /// Adds `rate(i -> j) <= M * delta(i -> j)` indicators where missing.
    fn ensure_indicators(&mut self, big_m: &S) {
        for i in 0..self.n {
            for j in 0..self.n {
                if i == j || self.indicator[i][j].is_some() {
                    continue;
                }
                let a = self.rate[i][j].expect("off-diagonal rate variable");
                let d = self.program.add_binary(format!("d_{i}_{j}"));
                self.program.add_constraint(
                    vec![(a, S::one()), (d, -big_m.clone())],
                    Relation::Le,
                    S::zero(),
                );
                self.indicator[i][j] = Some(d);
            }
        }
    }
}

/// Builds the feasibility program of a query.
///
/// Variables are the rates of every ordered pair of distinct complexes,
/// reactant-major. The equality rows state `Ybar · A_k = Zbar` column by
/// column, where `Zbar` pads the system with zero columns for extra
/// complexes. Property constraints follow.
pub fn realization_constraints<S: Scalar>(
    q: &RealizationQuery<S>,
) -> Result<RealizationProgram<S>, RealizeError> {
    q.validate()?;
    let n = q.complexes.len();
    let mut program = LinearProgram::new();
    let mut rate = vec![vec![None; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let upper = q.forbidden.contains(&(i, j)).then(S::zero);
            rate[i][j] =
                Some(program.add_variable(format!("k_{i}_{j}"), Some(S::zero()), upper, false));
        }
    }
    for (j, yj) in q.complexes.iter().enumerate() {
        let target = q.system.column_for(yj);
        for (s, rhs) in target.into_iter().enumerate() {
            let row: Vec<(usize, S)> = (0..n)
                .filter(|&i| i != j)
                .filter_map(|i| {
                    let d = i64::from(q.complexes[i].0[s]) - i64::from(yj.0[s]);
                    (d != 0).then(|| (rate[j][i].expect("off-diagonal"), S::from_i64(d)))
                })
                .collect();
            program.add_constraint(row, Relation::Eq, rhs);
        }
    }
    let mut out = RealizationProgram {
        program,
        n,
        rate,
        indicator: vec![vec![None; n]; n],
    };
    match &q.property {
        Property::Any => {}
        Property::Reversible => add_reversible_pairing(&mut out, q),
        Property::WeaklyReversible => add_weak_reversibility(&mut out, q),
        Property::DetailedBalanced(_) => {
            add_reversible_pairing(&mut out, q);
            let mono = q.state_monomials().expect("state");
            for i in 0..n {
                for j in (i + 1)..n {
                    let a_ij = out.rate[i][j].expect("rate");
                    let a_ji = out.rate[j][i].expect("rate");
                    out.program.add_constraint(
                        vec![(a_ij, mono[i].clone()), (a_ji, -mono[j].clone())],
                        Relation::Eq,
                        S::zero(),
                    );
                }
            }
        }
        Property::ComplexBalanced(_) => {
            let mono = q.state_monomials().expect("state");
            for i in 0..n {
                let mut row = Vec::new();
                for k in 0..n {
                    if k != i {
                        row.push((out.rate[k][i].expect("rate"), mono[k].clone()));
                        row.push((out.rate[i][k].expect("rate"), -mono[i].clone()));
                    }
                }
                out.program.add_constraint(row, Relation::Eq, S::zero());
            }
        }
    }
    Ok(out)
}

/// `rate(i->j) <= M d_ij` and `rate(j->i) >= eps d_ij`: a reaction can only
/// be present together with its reverse.
fn add_reversible_pairing<S: Scalar>(p: &mut RealizationProgram<S>, q: &RealizationQuery<S>) {
    for i in 0..p.n {
        for j in 0..p.n {
            if i == j {
                continue;
            }
            let a_ij = p.rate[i][j].expect("rate");
            let a_ji = p.rate[j][i].expect("rate");
            let d = p.program.add_binary(format!("d_{i}_{j}"));
            p.program.add_constraint(
                vec![(a_ij, S::one()), (d, -q.big_m.clone())],
                Relation::Le,
                S::zero(),
            );
            p.program.add_constraint(
                vec![(a_ji, S::one()), (d, -q.epsilon.clone())],
                Relation::Ge,
                S::zero(),
            );
            p.indicator[i][j] = Some(d);
        }
    }
}

/// An auxiliary Kirchhoff matrix with the same support whose rows also sum
/// to zero. A balanced positive flow on the support exists iff every
/// reaction lies on a cycle.
fn add_weak_reversibility<S: Scalar>(p: &mut RealizationProgram<S>, q: &RealizationQuery<S>) {
    let n = p.n;
    let mut aux = vec![vec![None; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let a = p.rate[i][j].expect("rate");
            let upper = q.forbidden.contains(&(i, j)).then(S::zero);
            let b = p
                .program
                .add_variable(format!("w_{i}_{j}"), Some(S::zero()), upper, false);
            p.program.add_constraint(
                vec![(b, S::one()), (a, -q.epsilon.clone())],
                Relation::Ge,
                S::zero(),
            );
            p.program.add_constraint(
                vec![(a, S::one()), (b, -q.epsilon.clone())],
                Relation::Ge,
                S::zero(),
            );
            aux[i][j] = Some(b);
        }
    }
    // Inflow equals outflow at every complex.
    for i in 0..n {
        let mut row = Vec::new();
        for k in 0..n {
            if k != i {
                row.push((aux[k][i].expect("aux"), S::one()));
                row.push((aux[i][k].expect("aux"), -S::one()));
            }
        }
        p.program.add_constraint(row, Relation::Eq, S::zero());
    }
}

fn solve<S: Scalar>(program: &LinearProgram<S>) -> Result<SolveOutcome<S>, RealizeError> {
    Ok(if program.integral_count() > 0 {
        linsolve::solve_milp(program)?
    } else {
        linsolve::solve_lp(program)?
    })
}

/// Checks the round trip and the requested property.
fn verify<S: Scalar>(q: &RealizationQuery<S>, r: &Realization<S>) -> Result<(), RealizeError> {
    if !induced_ode(r).approx_eq(&q.system) {
        return Err(RealizeError::VerificationFailed);
    }
    if q.forbidden.iter().any(|&(i, j)| r.has_reaction(i, j)) {
        return Err(RealizeError::VerificationFailed);
    }
    let ok = match &q.property {
        Property::Any => true,
        Property::Reversible => analyze_structure(r).reversible,
        Property::WeaklyReversible => analyze_structure(r).weakly_reversible,
        Property::DetailedBalanced(x) => network::is_detailed_balanced_at(r, x).unwrap_or(false),
        Property::ComplexBalanced(x) => network::is_complex_balanced_at(r, x)?,
    };
    if ok {
        Ok(())
    } else {
        Err(RealizeError::VerificationFailed)
    }
}

fn solve_program<S: Scalar>(
    q: &RealizationQuery<S>,
    p: &RealizationProgram<S>,
) -> Result<Option<Realization<S>>, RealizeError> {
    let out = solve(&p.program)?;
    if !out.is_solved() {
        return Ok(None);
    }
    let r = p.realization(q, out.assignment.as_ref().expect("solved"))?;
    verify(q, &r)?;
    Ok(Some(r))
}

/// Solves the query's program.
///
/// Returns [`RealizeError::NoRealization`] when the program is infeasible.
/// Any returned network induces the input system and has the property.
pub fn find_realization<S: Scalar>(
    q: &RealizationQuery<S>,
) -> Result<Realization<S>, RealizeError> {
    let p = realization_constraints(q)?;
    solve_program(q, &p)?.ok_or(RealizeError::NoRealization)
}

/// The realization that turns every term into its own reaction:
/// `y_n -> y_n + sign(z) e_m` with rate `|z|`.
pub fn canonical_realization<S: Scalar>(
    sys: &KineticSystem<S>,
) -> Result<Realization<S>, RealizeError> {
    RealizationQuery::new(sys.clone()).validate()?;
    let m = sys.species_count();
    let mut pairs = Vec::new();
    for (n, y) in sys.complexes().iter().enumerate() {
        for s in 0..m {
            let z = sys.coefficient(s, n);
            if z.is_zero() {
                continue;
            }
            let mut delta = vec![0i64; m];
            delta[s] = if z.is_positive() { 1 } else { -1 };
            let target = y
                .shifted(&delta)
                .expect("kinetic systems only consume present species");
            pairs.push((y.clone(), target, z.abs()));
        }
    }
    let complexes: Vec<Complex> = sys
        .complexes()
        .iter()
        .cloned()
        .chain(pairs.iter().map(|(_, t, _)| t.clone()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index = |c: &Complex| complexes.binary_search(c).expect("collected");
    let reactions: Vec<Reaction<S>> = pairs
        .iter()
        .map(|(a, b, k)| Reaction {
            reactant: index(a),
            product: index(b),
            rate: k.clone(),
        })
        .collect();
    let r = Realization::from_reactions(sys.species_names(), complexes, reactions)?;
    if !induced_ode(&r).approx_eq(sys) {
        return Err(RealizeError::VerificationFailed);
    }
    Ok(r)
}

/// Result of the per-edge sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseRealization<S = Rational> {
    /// Uniform convex combination of the per-edge solutions.
    pub realization: Realization<S>,
    /// Every reaction that some realization of the query can contain.
    pub support: BTreeSet<(usize, usize)>,
}

/// Options for [`dense_realization_with`].
#[derive(Debug, Clone, Default)]
pub struct DenseOptions {
    /// Worker threads for the per-edge programs; 0 or 1 runs sequentially.
    pub jobs: usize,
    /// Candidate edge order, defaulting to reactant-major order.
    pub order: Option<Vec<(usize, usize)>>,
}

/// The realization with the largest number of reactions.
pub fn dense_realization<S: Scalar>(
    q: &RealizationQuery<S>,
) -> Result<DenseRealization<S>, RealizeError> {
    dense_realization_with(q, &DenseOptions::default())
}

/// For every candidate edge the program is solved with the edge's rate
/// bounded below by epsilon; the edge belongs to the dense support iff that
/// program is feasible. Sequential sweeps skip edges already present in an
/// earlier solution.
pub fn dense_realization_with<S: Scalar>(
    q: &RealizationQuery<S>,
    options: &DenseOptions,
) -> Result<DenseRealization<S>, RealizeError> {
    let base = realization_constraints(q)?;
    let first = solve_program(q, &base)?.ok_or(RealizeError::NoRealization)?;
    let n = q.complexes.len();
    let candidates: Vec<(usize, usize)> = match &options.order {
        Some(order) => order.clone(),
        None => (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .collect(),
    };
    let candidates: Vec<(usize, usize)> = candidates
        .into_iter()
        .filter(|&(i, j)| i != j && i < n && j < n && !q.forbidden.contains(&(i, j)))
        .collect();

    let probe = |edge: (usize, usize)| -> Result<Option<Realization<S>>, RealizeError> {
        let mut p = base.clone();
        let v = p.rate_variable(edge.0, edge.1).expect("rate");
        p.program
            .add_constraint(vec![(v, S::one())], Relation::Ge, q.epsilon.clone());
        solve_program(q, &p)
    };

    let mut found = vec![first];
    if options.jobs > 1 {
        let chunk = candidates.len().div_ceil(options.jobs).max(1);
        let results: Vec<Result<Vec<Realization<S>>, RealizeError>> = std::thread::scope(|scope| {
            let handles: Vec<_> = candidates
                .chunks(chunk)
                .map(|edges| {
                    let probe = &probe;
                    scope.spawn(move || {
                        let mut out = Vec::new();
                        for &e in edges {
                            if let Some(r) = probe(e)? {
                                out.push(r);
                            }
                        }
                        Ok(out)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("dense worker panicked"))
                .collect()
        });
        for r in results {
            found.extend(r?);
        }
    } else {
        for &(i, j) in &candidates {
            if found.iter().any(|r| r.has_reaction(i, j)) {
                continue;
            }
            if let Some(r) = probe((i, j))? {
                found.push(r);
            }
        }
    }

    let weight = S::one() / S::from_i64(found.len() as i64);
    let weights = vec![weight; found.len()];
    let realization = transform::convex_combine(&found, &weights)?;
    verify(q, &realization)?;
    let support = realization.support();
    Ok(DenseRealization {
        realization,
        support,
    })
}

/// A realization with the fewest reactions.
///
/// For property `Any` the program separates by reactant complex, so each
/// reactant's outgoing reactions are minimized independently. Other
/// properties minimize the indicator sum of the full program.
pub fn sparse_realization<S: Scalar>(
    q: &RealizationQuery<S>,
) -> Result<Realization<S>, RealizeError> {
    if q.property == Property::Any {
        return sparse_by_reactant(q);
    }
    let mut p = realization_constraints(q)?;
    p.ensure_indicators(&q.big_m);
    let objective: Vec<(usize, S)> = (0..p.n)
        .flat_map(|i| (0..p.n).map(move |j| (i, j)))
        .filter_map(|(i, j)| p.indicator[i][j].map(|d| (d, S::one())))
        .collect();
    p.program.set_objective(objective, Direction::Minimize);
    solve_program(q, &p)?.ok_or(RealizeError::NoRealization)
}

fn sparse_by_reactant<S: Scalar>(q: &RealizationQuery<S>) -> Result<Realization<S>, RealizeError> {
    q.validate()?;
    let n = q.complexes.len();
    let m = q.system.species_count();
    let mut reactions = Vec::new();
    for (j, yj) in q.complexes.iter().enumerate() {
        let target = q.system.column_for(yj);
        if target.iter().all(|v| v.is_zero()) {
            continue;
        }
        let mut p = LinearProgram::new();
        let mut vars = Vec::new();
        let mut objective = Vec::new();
        for i in (0..n).filter(|&i| i != j) {
            let upper = q.forbidden.contains(&(j, i)).then(S::zero);
            let a = p.add_variable(format!("k_{j}_{i}"), Some(S::zero()), upper, false);
            let d = p.add_binary(format!("d_{j}_{i}"));
            p.add_constraint(
                vec![(a, S::one()), (d, -q.big_m.clone())],
                Relation::Le,
                S::zero(),
            );
            objective.push((d, S::one()));
            vars.push((i, a));
        }
        for (s, rhs) in target.into_iter().enumerate().take(m) {
            let row: Vec<(usize, S)> = vars
                .iter()
                .filter_map(|&(i, a)| {
                    let d = i64::from(q.complexes[i].0[s]) - i64::from(yj.0[s]);
                    (d != 0).then(|| (a, S::from_i64(d)))
                })
                .collect();
            p.add_constraint(row, Relation::Eq, rhs);
        }
        p.set_objective(objective, Direction::Minimize);
        let out = linsolve::solve_milp(&p)?;
        if !out.is_solved() {
            return Err(RealizeError::NoRealization);
        }
        let x = out.assignment.expect("solved");
        for (i, a) in vars {
            if x[a].is_positive() {
                reactions.push(Reaction {
                    reactant: j,
                    product: i,
                    rate: x[a].clone(),
                });
            }
        }
    }
    let r = Realization::from_reactions(q.system.species_names(), q.complexes.clone(), reactions)?;
    verify(q, &r)?;
    Ok(r)
}
