//! Linear and mixed-integer programming over a [`Scalar`].
//!
//! [`solve_lp`] runs a two-phase dense-tableau simplex with Bland's rule, so
//! it terminates on degenerate programs. [`solve_milp`] adds depth-first
//! branch and bound over the integral variables. Every returned assignment is
//! checked against the original program before it is handed back.

use std::fmt;

use crate::scalar::{Rational, Scalar, FLOAT_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable<S = Rational> {
    pub name: String,
    /// `None` is minus infinity.
    pub lower: Option<S>,
    /// `None` is plus infinity.
    pub upper: Option<S>,
    pub integral: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint<S = Rational> {
    /// Sparse row of `(variable index, coefficient)`.
    pub coefficients: Vec<(usize, S)>,
    pub relation: Relation,
    pub rhs: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Objective<S = Rational> {
    pub coefficients: Vec<(usize, S)>,
    pub direction: Direction,
}

/// Variables with bounds, linear constraints and an optional objective.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<S = Rational> {
    pub variables: Vec<Variable<S>>,
    pub constraints: Vec<Constraint<S>>,
    pub objective: Option<Objective<S>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Infeasible,
    Unbounded,
    /// A solution of a program without objective.
    Feasible,
    Optimal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome<S = Rational> {
    pub status: SolveStatus,
    /// One value per variable, present unless infeasible.
    pub assignment: Option<Vec<S>>,
    pub objective_value: Option<S>,
}

impl<S: Scalar> SolveOutcome<S> {
    fn infeasible() -> Self {
        SolveOutcome {
            status: SolveStatus::Infeasible,
            assignment: None,
            objective_value: None,
        }
    }

    pub fn is_solved(&self) -> bool {
        matches!(self.status, SolveStatus::Feasible | SolveStatus::Optimal)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error("solve_lp called on a program with integral variables")]
    IntegralVariablePresent,
    #[error("invalid program: {0}")]
    InvalidProgram(String),
    #[error("solver produced an assignment that violates the program")]
    VerificationFailed,
}

impl<S: Scalar> LinearProgram<S> {
    pub fn new() -> Self {
        LinearProgram {
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: None,
        }
    }

    /// Adds a variable and returns its index.
    pub fn add_variable(
        &mut self,
        name: impl Into<String>,
        lower: Option<S>,
        upper: Option<S>,
        integral: bool,
    ) -> usize {
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
            integral,
        });
        self.variables.len() - 1
    }

    /// Adds a `{0, 1}` variable.
    pub fn add_binary(&mut self, name: impl Into<String>) -> usize {
        self.add_variable(name, Some(S::zero()), Some(S::one()), true)
    }

    pub fn add_constraint(&mut self, coefficients: Vec<(usize, S)>, relation: Relation, rhs: S) {
        self.constraints.push(Constraint {
            coefficients,
            relation,
            rhs,
        });
    }

    pub fn set_objective(&mut self, coefficients: Vec<(usize, S)>, direction: Direction) {
        self.objective = Some(Objective {
            coefficients,
            direction,
        });
    }

    pub fn variable_count(&self) -> usize {
        self.variables.len()
    }

    pub fn constraint_count(&self) -> usize {
        self.constraints.len()
    }

    pub fn integral_count(&self) -> usize {
        self.variables.iter().filter(|v| v.integral).count()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    fn validate(&self) -> Result<(), SolveError> {
        let n = self.variables.len();
        for v in &self.variables {
            if let (Some(l), Some(u)) = (&v.lower, &v.upper) {
                if l > u {
                    return Err(SolveError::InvalidProgram(format!(
                        "variable `{}` has lower bound above upper bound",
                        v.name
                    )));
                }
            }
        }
        let rows = self
            .constraints
            .iter()
            .map(|c| &c.coefficients)
            .chain(self.objective.iter().map(|o| &o.coefficients));
        for row in rows {
            if let Some((i, _)) = row.iter().find(|(i, _)| *i >= n) {
                return Err(SolveError::InvalidProgram(format!(
                    "variable index {i} out of range"
                )));
            }
        }
        Ok(())
    }

    /// Objective value of an assignment (zero without objective).
    pub fn objective_at(&self, x: &[S]) -> S {
        self.objective
            .as_ref()
            .map_or_else(S::zero, |o| dot(&o.coefficients, x))
    }

    /// True iff `x` satisfies every bound, constraint and integrality
    /// requirement (exactly, or within the float tolerance).
    pub fn is_satisfied_by(&self, x: &[S]) -> bool {
        if x.len() != self.variables.len() {
            return false;
        }
        let slack_ok = |lhs: &S, rhs: &S, relation: Relation, scale: f64| {
            let diff = lhs.clone() - rhs.clone();
            let tol = if S::EXACT {
                0.0
            } else {
                10.0 * FLOAT_TOLERANCE * scale.max(1.0)
            };
            let d = diff.to_f64();
            if S::EXACT {
                match relation {
                    Relation::Le => !diff.is_positive(),
                    Relation::Ge => !diff.is_negative(),
                    Relation::Eq => diff.is_zero(),
                }
            } else {
                match relation {
                    Relation::Le => d <= tol,
                    Relation::Ge => d >= -tol,
                    Relation::Eq => d.abs() <= tol,
                }
            }
        };
        for (v, value) in self.variables.iter().zip(x) {
            let scale = value.abs().to_f64();
            if let Some(l) = &v.lower {
                if !slack_ok(value, l, Relation::Ge, scale) {
                    return false;
                }
            }
            if let Some(u) = &v.upper {
                if !slack_ok(value, u, Relation::Le, scale) {
                    return false;
                }
            }
            if v.integral && !is_integral(value) {
                return false;
            }
        }
        self.constraints.iter().all(|c| {
            let lhs = dot(&c.coefficients, x);
            let scale = c
                .coefficients
                .iter()
                .map(|(i, a)| (a.clone() * x[*i].clone()).abs().to_f64())
                .fold(c.rhs.abs().to_f64(), f64::max);
            slack_ok(&lhs, &c.rhs, c.relation, scale)
        })
    }
}

impl<S: Scalar> Default for LinearProgram<S> {
    fn default() -> Self {
        Self::new()
    }
}

fn dot<S: Scalar>(row: &[(usize, S)], x: &[S]) -> S {
    row.iter()
        .fold(S::zero(), |acc, (i, a)| acc + a.clone() * x[*i].clone())
}

fn is_integral<S: Scalar>(v: &S) -> bool {
    let frac = v.clone() - v.floor();
    frac.is_negligible() || (S::one() - frac).is_negligible()
}

/// Plain-text LP-style listing, for debugging.
impl<S: Scalar> fmt::Display for LinearProgram<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let term_list = |row: &[(usize, S)]| -> String {
            if row.is_empty() {
                return "0".into();
            }
            row.iter()
                .enumerate()
                .map(|(k, (i, a))| {
                    let name = &self.variables[*i].name;
                    let sign = if a.is_negative() { "-" } else { "+" };
                    let mag = a.abs();
                    let body = if mag.is_one() {
                        name.clone()
                    } else {
                        format!("{} {name}", mag.render())
                    };
                    if k == 0 && sign == "+" {
                        body
                    } else if k == 0 {
                        format!("-{body}")
                    } else {
                        format!(" {sign} {body}")
                    }
                })
                .collect()
        };
        match &self.objective {
            Some(o) => {
                let dir = match o.direction {
                    Direction::Minimize => "minimize",
                    Direction::Maximize => "maximize",
                };
                writeln!(f, "{dir}\n  obj: {}", term_list(&o.coefficients))?;
            }
            None => writeln!(f, "feasibility")?,
        }
        writeln!(f, "subject to")?;
        for (k, c) in self.constraints.iter().enumerate() {
            let rel = match c.relation {
                Relation::Le => "<=",
                Relation::Eq => "=",
                Relation::Ge => ">=",
            };
            writeln!(
                f,
                "  c{k}: {} {rel} {}",
                term_list(&c.coefficients),
                c.rhs.render()
            )?;
        }
        writeln!(f, "bounds")?;
        for v in &self.variables {
            let lo = v.lower.as_ref().map_or("-inf".to_string(), Scalar::render);
            let hi = v.upper.as_ref().map_or("+inf".to_string(), Scalar::render);
            writeln!(f, "  {lo} <= {} <= {hi}", v.name)?;
        }
        let ints: Vec<&str> = self
            .variables
            .iter()
            .filter(|v| v.integral)
            .map(|v| v.name.as_str())
            .collect();
        if !ints.is_empty() {
            writeln!(f, "general\n  {}", ints.join(" "))?;
        }
        write!(f, "end")
    }
}

/// How an original variable maps onto nonnegative tableau columns.
#[derive(Debug, Clone)]
enum Mapping<S> {
    Fixed(S),
    /// `x = offset + col`.
    Shift {
        col: usize,
        offset: S,
    },
    /// `x = offset - col`.
    Flip {
        col: usize,
        offset: S,
    },
    /// `x = pos - neg`.
    Free {
        pos: usize,
        neg: usize,
    },
}

struct Tableau<S> {
    /// Constraint rows; the last entry of each row is the right-hand side.
    rows: Vec<Vec<S>>,
    /// Reduced-cost row; last entry is minus the objective value.
    z: Vec<S>,
    basis: Vec<usize>,
}

impl<S: Scalar> Tableau<S> {
    fn width(&self) -> usize {
        self.z.len() - 1
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let inv = S::one() / self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            if !v.is_zero() {
                *v = v.clone() * inv.clone();
            }
        }
        self.rows[r][c] = S::one();
        let pivot_row = self.rows[r].clone();
        let nz: Vec<usize> = (0..pivot_row.len())
            .filter(|&j| !pivot_row[j].is_zero())
            .collect();
        let eliminate = |row: &mut Vec<S>| {
            let factor = row[c].clone();
            if factor.is_zero() {
                return;
            }
            for &j in &nz {
                row[j] = row[j].clone() - factor.clone() * pivot_row[j].clone();
                if !S::EXACT && row[j].is_negligible() {
                    row[j] = S::zero();
                }
            }
            row[c] = S::zero();
        };
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                eliminate(row);
            }
        }
        eliminate(&mut self.z);
        self.basis[r] = c;
    }

    /// Bland's rule iterations. Returns false if unbounded.
    fn optimize(&mut self, allowed: &[bool]) -> bool {
        let w = self.width();
        loop {
            let Some(c) = (0..w).find(|&j| allowed[j] && self.z[j].is_negative()) else {
                return true;
            };
            let mut best: Option<(usize, S)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if !row[c].is_positive() {
                    continue;
                }
                let ratio = row[w].clone() / row[c].clone();
                let better = match &best {
                    None => true,
                    Some((bi, br)) => {
                        if S::EXACT {
                            ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi])
                        } else {
                            let d = ratio.clone() - br.clone();
                            d.is_negative()
                                || (d.is_negligible() && self.basis[i] < self.basis[*bi])
                        }
                    }
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, c),
                None => return false,
            }
        }
    }
}

/// Solves a program with continuous variables only.
pub fn solve_lp<S: Scalar>(p: &LinearProgram<S>) -> Result<SolveOutcome<S>, SolveError> {
    if p.variables.iter().any(|v| v.integral) {
        return Err(SolveError::IntegralVariablePresent);
    }
    p.validate()?;
    let outcome = simplex(p);
    if let Some(x) = &outcome.assignment {
        if !p.is_satisfied_by(x) {
            return Err(SolveError::VerificationFailed);
        }
    }
    Ok(outcome)
}

type Bounds<S> = Vec<(Option<S>, Option<S>)>;

/// Variable bounds after folding single-variable rows into them, plus the
/// rows that remain. `None` means the program is infeasible.
fn presolve<S: Scalar>(p: &LinearProgram<S>) -> Option<(Bounds<S>, Vec<bool>)> {
    let mut bounds: Bounds<S> = p
        .variables
        .iter()
        .map(|v| (v.lower.clone(), v.upper.clone()))
        .collect();
    let fixed = |b: &(Option<S>, Option<S>)| match b {
        (Some(l), Some(u)) => (u.clone() - l.clone()).is_negligible(),
        _ => false,
    };
    let mut active = vec![true; p.constraints.len()];
    loop {
        let mut changed = false;
        for (k, c) in p.constraints.iter().enumerate() {
            if !active[k] {
                continue;
            }
            let mut rhs = c.rhs.clone();
            let mut free: Option<(usize, S)> = None;
            let mut count = 0;
            for (i, a) in &c.coefficients {
                if a.is_zero() {
                    continue;
                }
                if fixed(&bounds[*i]) {
                    let v = bounds[*i].0.clone().expect("fixed variables have bounds");
                    rhs = rhs - a.clone() * v;
                } else if free.as_ref().is_some_and(|(j, _)| j == i) {
                    let (j, b) = free.take().expect("checked");
                    free = Some((j, b + a.clone()));
                } else {
                    count += 1;
                    free = Some((*i, a.clone()));
                }
            }
            if count > 1 {
                continue;
            }
            active[k] = false;
            changed = true;
            let Some((i, a)) = free.filter(|(_, a)| !a.is_negligible()) else {
                let ok = match c.relation {
                    Relation::Le => !rhs.is_negative(),
                    Relation::Ge => !rhs.is_positive(),
                    Relation::Eq => rhs.is_negligible(),
                };
                if !ok {
                    return None;
                }
                continue;
            };
            let limit = rhs / a.clone();
            let relation = match (c.relation, a.is_negative()) {
                (Relation::Le, true) => Relation::Ge,
                (Relation::Ge, true) => Relation::Le,
                (r, _) => r,
            };
            let (lo, hi) = &mut bounds[i];
            if matches!(relation, Relation::Ge | Relation::Eq)
                && lo.as_ref().is_none_or(|l| *l < limit)
            {
                *lo = Some(limit.clone());
            }
            if matches!(relation, Relation::Le | Relation::Eq)
                && hi.as_ref().is_none_or(|u| *u > limit)
            {
                *hi = Some(limit);
            }
            if let (Some(l), Some(u)) = (lo.as_ref(), hi.as_ref()) {
                let gap = u.clone() - l.clone();
                if gap.is_negative() {
                    return None;
                }
                if gap.is_negligible() {
                    *hi = Some(l.clone());
                }
            }
        }
        if !changed {
            break;
        }
    }
    Some((bounds, active))
}

fn simplex<S: Scalar>(p: &LinearProgram<S>) -> SolveOutcome<S> {
    let Some((bounds, active)) = presolve(p) else {
        return SolveOutcome::infeasible();
    };
    // Map variables onto nonnegative columns.
    let mut mapping = Vec::with_capacity(p.variables.len());
    let mut ncols = 0usize;
    // (column, upper limit) rows generated by finite two-sided bounds.
    let mut upper_rows: Vec<(usize, S)> = Vec::new();
    for (lower, upper) in &bounds {
        let m = match (lower, upper) {
            (Some(l), Some(u)) if l == u => Mapping::Fixed(l.clone()),
            (Some(l), u) => {
                let col = ncols;
                ncols += 1;
                if let Some(u) = u {
                    upper_rows.push((col, u.clone() - l.clone()));
                }
                Mapping::Shift {
                    col,
                    offset: l.clone(),
                }
            }
            (None, Some(u)) => {
                let col = ncols;
                ncols += 1;
                Mapping::Flip {
                    col,
                    offset: u.clone(),
                }
            }
            (None, None) => {
                let pos = ncols;
                ncols += 2;
                Mapping::Free { pos, neg: pos + 1 }
            }
        };
        mapping.push(m);
    }

    // Substitute into constraints: dense rows over structural columns.
    let substitute = |row: &[(usize, S)]| -> (Vec<S>, S) {
        let mut dense = vec![S::zero(); ncols];
        let mut constant = S::zero();
        for (i, a) in row {
            match &mapping[*i] {
                Mapping::Fixed(v) => constant = constant + a.clone() * v.clone(),
                Mapping::Shift { col, offset } => {
                    constant = constant + a.clone() * offset.clone();
                    dense[*col] = dense[*col].clone() + a.clone();
                }
                Mapping::Flip { col, offset } => {
                    constant = constant + a.clone() * offset.clone();
                    dense[*col] = dense[*col].clone() - a.clone();
                }
                Mapping::Free { pos, neg } => {
                    dense[*pos] = dense[*pos].clone() + a.clone();
                    dense[*neg] = dense[*neg].clone() - a.clone();
                }
            }
        }
        (dense, constant)
    };

    let mut rows: Vec<(Vec<S>, Relation, S)> = Vec::new();
    for (c, _) in p.constraints.iter().zip(&active).filter(|(_, a)| **a) {
        let (dense, constant) = substitute(&c.coefficients);
        let rhs = c.rhs.clone() - constant;
        if dense.iter().all(Scalar::is_negligible) {
            let ok = match c.relation {
                Relation::Le => !rhs.is_negative(),
                Relation::Ge => !rhs.is_positive(),
                Relation::Eq => rhs.is_negligible(),
            };
            if !ok {
                return SolveOutcome::infeasible();
            }
            continue;
        }
        rows.push((dense, c.relation, rhs));
    }
    for (col, limit) in upper_rows {
        let mut dense = vec![S::zero(); ncols];
        dense[col] = S::one();
        rows.push((dense, Relation::Le, limit));
    }

    // Normalize to nonnegative right-hand sides.
    for (dense, rel, rhs) in rows.iter_mut() {
        if rhs.is_negative() {
            for v in dense.iter_mut() {
                *v = -v.clone();
            }
            *rhs = -rhs.clone();
            *rel = match *rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }

    let m = rows.len();
    let n_slack = rows.iter().filter(|(_, r, _)| *r != Relation::Eq).count();
    let n_art = rows.iter().filter(|(_, r, _)| *r != Relation::Le).count();
    let width = ncols + n_slack + n_art;
    let art_start = ncols + n_slack;
    let mut tab = Tableau {
        rows: Vec::with_capacity(m),
        z: vec![S::zero(); width + 1],
        basis: vec![0; m],
    };
    let mut slack = ncols;
    let mut art = art_start;
    for (i, (dense, rel, rhs)) in rows.into_iter().enumerate() {
        let mut row = dense;
        row.resize(width + 1, S::zero());
        row[width] = rhs;
        match rel {
            Relation::Le => {
                row[slack] = S::one();
                tab.basis[i] = slack;
                slack += 1;
            }
            Relation::Ge => {
                row[slack] = -S::one();
                slack += 1;
                row[art] = S::one();
                tab.basis[i] = art;
                art += 1;
            }
            Relation::Eq => {
                row[art] = S::one();
                tab.basis[i] = art;
                art += 1;
            }
        }
        tab.rows.push(row);
    }

    // Phase one: minimize the sum of artificials.
    if n_art > 0 {
        for i in 0..m {
            if tab.basis[i] >= art_start {
                for j in 0..=width {
                    if j < art_start || j == width {
                        tab.z[j] = tab.z[j].clone() - tab.rows[i][j].clone();
                    }
                }
            }
        }
        let allowed = vec![true; width];
        tab.optimize(&allowed);
        let infeasibility = -tab.z[width].clone();
        if infeasibility.is_positive() {
            return SolveOutcome::infeasible();
        }
        // Drive remaining artificials out of the basis.
        let mut i = 0;
        while i < tab.rows.len() {
            if tab.basis[i] >= art_start {
                match (0..art_start).find(|&j| !tab.rows[i][j].is_negligible()) {
                    Some(j) => tab.pivot(i, j),
                    None => {
                        tab.rows.remove(i);
                        tab.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    // Phase two.
    let cost = match &p.objective {
        Some(o) => {
            let (dense, _) = substitute(&o.coefficients);
            match o.direction {
                Direction::Minimize => dense,
                Direction::Maximize => dense.into_iter().map(|v| -v).collect(),
            }
        }
        None => vec![S::zero(); ncols],
    };
    tab.z = vec![S::zero(); width + 1];
    for (j, c) in cost.iter().enumerate() {
        tab.z[j] = c.clone();
    }
    for i in 0..tab.rows.len() {
        let b = tab.basis[i];
        if b < ncols && !cost[b].is_zero() {
            let cb = cost[b].clone();
            for j in 0..=width {
                if !tab.rows[i][j].is_zero() {
                    tab.z[j] = tab.z[j].clone() - cb.clone() * tab.rows[i][j].clone();
                }
            }
        }
    }
    let allowed: Vec<bool> = (0..width).map(|j| j < art_start).collect();
    let bounded = tab.optimize(&allowed);

    let mut values = vec![S::zero(); width];
    for (i, &b) in tab.basis.iter().enumerate() {
        values[b] = tab.rows[i][width].clone();
    }
    let x: Vec<S> = mapping
        .iter()
        .map(|m| match m {
            Mapping::Fixed(v) => v.clone(),
            Mapping::Shift { col, offset } => offset.clone() + values[*col].clone(),
            Mapping::Flip { col, offset } => offset.clone() - values[*col].clone(),
            Mapping::Free { pos, neg } => values[*pos].clone() - values[*neg].clone(),
        })
        .collect();
    let objective_value = p.objective.as_ref().map(|_| p.objective_at(&x));
    let status = if !bounded {
        SolveStatus::Unbounded
    } else if p.objective.is_some() {
        SolveStatus::Optimal
    } else {
        SolveStatus::Feasible
    };
    SolveOutcome {
        status,
        assignment: Some(x),
        objective_value: if bounded { objective_value } else { None },
    }
}

/// Depth-first branch and bound.
///
/// Branches on the most fractional integral variable (ties by lowest index)
/// and explores the child nearest to the relaxed value first. Programs
/// without an objective stop at the first integral solution.
pub fn solve_milp<S: Scalar>(p: &LinearProgram<S>) -> Result<SolveOutcome<S>, SolveError> {
    p.validate()?;
    let integral: Vec<usize> = (0..p.variables.len())
        .filter(|&i| p.variables[i].integral)
        .collect();
    let mut relaxed = p.clone();
    for v in relaxed.variables.iter_mut() {
        v.integral = false;
    }
    // Integral bounds can be tightened to integers up front.
    for &i in &integral {
        let v = &mut relaxed.variables[i];
        v.lower = v.lower.as_ref().map(Scalar::ceil);
        v.upper = v.upper.as_ref().map(Scalar::floor);
        if let (Some(l), Some(u)) = (&v.lower, &v.upper) {
            if l > u {
                return Ok(SolveOutcome::infeasible());
            }
        }
    }
    if integral.is_empty() {
        let out = simplex(&relaxed);
        return finish(p, out);
    }

    let sense = match p.objective.as_ref().map(|o| o.direction) {
        Some(Direction::Maximize) => -S::one(),
        _ => S::one(),
    };
    let integral_objective = p.objective.as_ref().is_some_and(|o| {
        o.coefficients.iter().all(|(i, a)| {
            if p.variables[*i].integral {
                is_integral(a)
            } else {
                a.is_zero()
            }
        })
    });

    let mut best: Option<(Vec<S>, S)> = None;
    let mut stack = vec![relaxed];
    while let Some(node) = stack.pop() {
        let out = simplex(&node);
        match out.status {
            SolveStatus::Infeasible => continue,
            SolveStatus::Unbounded => {
                return Ok(SolveOutcome {
                    status: SolveStatus::Unbounded,
                    assignment: None,
                    objective_value: None,
                })
            }
            _ => {}
        }
        let x = out.assignment.expect("solved node has an assignment");
        let bound = sense.clone() * node.objective_at(&x);
        if let Some((_, incumbent)) = &best {
            let limit = if integral_objective {
                incumbent.clone() - S::one()
            } else {
                incumbent.clone()
            };
            let prune = if integral_objective {
                (bound.clone() - limit).is_positive()
            } else {
                !(bound.clone() - limit).is_negative()
            };
            if prune {
                continue;
            }
        }
        let mut pick: Option<(usize, S)> = None;
        for &i in &integral {
            let v = &x[i];
            if is_integral(v) {
                continue;
            }
            let frac = v.clone() - v.floor();
            let half = S::one() / S::from_i64(2);
            let distance = (frac - half).abs();
            if pick.as_ref().is_none_or(|(_, d)| distance < *d) {
                pick = Some((i, distance));
            }
        }
        match pick {
            None => {
                let rounded: Vec<S> = x
                    .iter()
                    .enumerate()
                    .map(|(i, v)| {
                        if p.variables[i].integral {
                            round_half_up(v)
                        } else {
                            v.clone()
                        }
                    })
                    .collect();
                if p.objective.is_none() {
                    return finish(
                        p,
                        SolveOutcome {
                            status: SolveStatus::Feasible,
                            assignment: Some(rounded),
                            objective_value: None,
                        },
                    );
                }
                let value = sense.clone() * p.objective_at(&rounded);
                if best.as_ref().is_none_or(|(_, b)| value < *b) {
                    best = Some((rounded, value));
                }
            }
            Some((i, _)) => {
                let v = &x[i];
                let down_value = v.floor();
                let up_value = v.ceil();
                let mut down = node.clone();
                down.variables[i].upper = Some(down_value);
                let mut up = node;
                up.variables[i].lower = Some(up_value);
                let frac = v.clone() - v.floor();
                let half = S::one() / S::from_i64(2);
                // Stack order: the child pushed last is explored first.
                if frac > half {
                    stack.push(down);
                    stack.push(up);
                } else {
                    stack.push(up);
                    stack.push(down);
                }
            }
        }
    }
    match best {
        None => Ok(SolveOutcome::infeasible()),
        Some((x, _)) => {
            let value = p.objective_at(&x);
            finish(
                p,
                SolveOutcome {
                    status: SolveStatus::Optimal,
                    assignment: Some(x),
                    objective_value: Some(value),
                },
            )
        }
    }
}

fn round_half_up<S: Scalar>(v: &S) -> S {
    let half = S::one() / S::from_i64(2);
    (v.clone() + half).floor()
}

fn finish<S: Scalar>(
    p: &LinearProgram<S>,
    out: SolveOutcome<S>,
) -> Result<SolveOutcome<S>, SolveError> {
    if let Some(x) = &out.assignment {
        if out.status != SolveStatus::Unbounded && !p.is_satisfied_by(x) {
            return Err(SolveError::VerificationFailed);
        }
    }
    Ok(out)
}
