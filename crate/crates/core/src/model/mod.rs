//! Polynomial right-hand sides `dx/dt = Z · x^Y`.
//!
//! A [`KineticSystem`] stores one coefficient column per distinct monomial. The
//! columns are kept in lexicographic order of their exponent vectors and a
//! constant term lives in the column of the zero complex.

mod parse;

use std::collections::BTreeMap;
use std::fmt;

use crate::scalar::{Rational, Scalar};

pub use parse::parse_ode;

/// Errors raised while building or evaluating kinetic systems.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown species `{name}` at line {line}, column {column}")]
    UnknownSpecies {
        name: String,
        line: usize,
        column: usize,
    },
    #[error("negative exponent at line {line}, column {column}")]
    NegativeExponent { line: usize, column: usize },
    #[error("duplicate species `{0}`")]
    DuplicateSpecies(String),
    #[error("complex has {found} entries but the system has {expected} species")]
    ComplexLength { expected: usize, found: usize },
    #[error("state must be strictly positive (component {0})")]
    NonPositiveState(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// A named chemical species and its position in the state vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Species {
    pub name: String,
    pub index: usize,
}

/// Stoichiometric coefficient vector of a complex (a monomial exponent).
///
/// Ordering is lexicographic on the exponent vector, which fixes the column
/// order of every system and realization built by this crate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Complex(pub Vec<u32>);

impl Complex {
    pub fn new(exponents: Vec<u32>) -> Self {
        Complex(exponents)
    }

    pub fn zero(species: usize) -> Self {
        Complex(vec![0; species])
    }

    /// `coefficient * e_species`.
    pub fn unit(species: usize, index: usize, coefficient: u32) -> Self {
        let mut v = vec![0; species];
        v[index] = coefficient;
        Complex(v)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// Total molecularity.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `x^y` for a state vector `x`.
    pub fn monomial<S: Scalar>(&self, x: &[S]) -> S {
        self.0
            .iter()
            .zip(x)
            .filter(|(&e, _)| e > 0)
            .fold(S::one(), |acc, (&e, xi)| acc * xi.powu(e))
    }

    /// `self + delta` if every entry stays nonnegative.
    pub fn shifted(&self, delta: &[i64]) -> Option<Complex> {
        self.0
            .iter()
            .zip(delta)
            .map(|(&a, &d)| u32::try_from(i64::from(a) + d).ok())
            .collect::<Option<Vec<_>>>()
            .map(Complex)
    }

    /// `other - self` as a signed vector.
    pub fn difference_to(&self, other: &Complex) -> Vec<i64> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| i64::from(b) - i64::from(a))
            .collect()
    }

    /// Formats as `2X + 5Y + Z`, or `0` for the empty complex.
    pub fn display<'a>(&'a self, names: &'a [String]) -> ComplexDisplay<'a> {
        ComplexDisplay {
            complex: self,
            names,
        }
    }
}

pub struct ComplexDisplay<'a> {
    complex: &'a Complex,
    names: &'a [String],
}

impl fmt::Display for ComplexDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.complex.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, &e) in self.complex.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if e != 1 {
                write!(f, "{e}")?;
            }
            write!(f, "{}", self.names[i])?;
        }
        Ok(())
    }
}

/// Componentwise sign of a coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Zero,
    Plus,
    Minus,
}

impl Sign {
    pub fn of<S: Scalar>(value: &S) -> Sign {
        if value.is_positive() {
            Sign::Plus
        } else if value.is_negative() {
            Sign::Minus
        } else {
            Sign::Zero
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Zero => "0",
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// An element of `{0,+,-}^(M x N)` paired with the complexes it refers to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignPattern {
    /// Row-major, `entries[m][n]`.
    pub entries: Vec<Vec<Sign>>,
    pub complexes: Vec<Complex>,
}

impl SignPattern {
    /// True iff no negative sign sits where the complex has a zero exponent.
    pub fn is_kinetically_compatible(&self) -> bool {
        is_kinetically_compatible(&self.complexes, self)
    }
}

/// Checks the sign pattern against an arbitrary complex list.
///
/// Returns false when dimensions disagree.
pub fn is_kinetically_compatible(complexes: &[Complex], sigma: &SignPattern) -> bool {
    if sigma.entries.iter().any(|row| row.len() != complexes.len()) {
        return false;
    }
    sigma.entries.iter().enumerate().all(|(m, row)| {
        row.iter()
            .zip(complexes)
            .all(|(&s, y)| y.0.get(m).is_some_and(|&e| e > 0) || s != Sign::Minus)
    })
}

/// A negative cross-effect: species `species` is consumed by a monomial that
/// does not contain it.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticViolation<S = Rational> {
    pub species: usize,
    pub complex: usize,
    pub coefficient: S,
}

/// A polynomial ODE system `dx/dt = Z · x^Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticSystem<S = Rational> {
    species: Vec<Species>,
    complexes: Vec<Complex>,
    /// `coefficients[m][n]` is the coefficient of monomial `n` in species `m`.
    coefficients: Vec<Vec<S>>,
}

impl<S: Scalar> KineticSystem<S> {
    /// Builds a system from `(monomial, coefficient column)` pairs.
    ///
    /// Columns for equal monomials are summed, negligible columns dropped and
    /// the rest sorted lexicographically.
    pub fn from_columns<I>(species: Vec<String>, columns: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = (Complex, Vec<S>)>,
    {
        let species = make_species(species)?;
        let m = species.len();
        let mut merged: BTreeMap<Complex, Vec<S>> = BTreeMap::new();
        for (complex, column) in columns {
            if complex.len() != m {
                return Err(ModelError::ComplexLength {
                    expected: m,
                    found: complex.len(),
                });
            }
            if column.len() != m {
                return Err(ModelError::DimensionMismatch(format!(
                    "coefficient column has {} entries, expected {m}",
                    column.len()
                )));
            }
            let entry = merged.entry(complex).or_insert_with(|| vec![S::zero(); m]);
            for (acc, v) in entry.iter_mut().zip(column) {
                *acc = acc.clone() + v;
            }
        }
        let mut complexes = Vec::new();
        let mut coefficients = vec![Vec::new(); m];
        for (complex, mut column) in merged {
            if column.iter().all(Scalar::is_negligible) {
                continue;
            }
            for v in column.iter_mut() {
                if v.is_negligible() {
                    *v = S::zero();
                }
            }
            complexes.push(complex);
            for (row, v) in coefficients.iter_mut().zip(column) {
                row.push(v);
            }
        }
        Ok(KineticSystem {
            species,
            complexes,
            coefficients,
        })
    }

    /// Builds a system from individual `(monomial, species, coefficient)` terms.
    pub fn from_terms<I>(species: Vec<String>, terms: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = (Complex, usize, S)>,
    {
        let m = species.len();
        let mut columns = Vec::new();
        for (complex, index, value) in terms {
            if index >= m {
                return Err(ModelError::DimensionMismatch(format!(
                    "species index {index} out of range"
                )));
            }
            let mut column = vec![S::zero(); m];
            column[index] = value;
            columns.push((complex, column));
        }
        Self::from_columns(species, columns)
    }

    /// The system `dx/dt = 0`.
    pub fn zero(species: Vec<String>) -> Result<Self, ModelError> {
        Self::from_columns(species, std::iter::empty())
    }

    pub fn species(&self) -> &[Species] {
        &self.species
    }

    pub fn species_names(&self) -> Vec<String> {
        self.species.iter().map(|s| s.name.clone()).collect()
    }

    pub fn species_count(&self) -> usize {
        self.species.len()
    }

    pub fn complexes(&self) -> &[Complex] {
        &self.complexes
    }

    pub fn complex_count(&self) -> usize {
        self.complexes.len()
    }

    pub fn coefficients(&self) -> &[Vec<S>] {
        &self.coefficients
    }

    pub fn coefficient(&self, species: usize, complex: usize) -> &S {
        &self.coefficients[species][complex]
    }

    /// Coefficient vector of monomial `n`.
    pub fn column(&self, n: usize) -> Vec<S> {
        self.coefficients.iter().map(|row| row[n].clone()).collect()
    }

    pub fn monomial_index(&self, complex: &Complex) -> Option<usize> {
        self.complexes.binary_search(complex).ok()
    }

    /// Coefficient column of `complex`, zero if the monomial is absent.
    pub fn column_for(&self, complex: &Complex) -> Vec<S> {
        match self.monomial_index(complex) {
            Some(n) => self.column(n),
            None => vec![S::zero(); self.species.len()],
        }
    }

    /// The constant term `b`, read from the zero complex's column.
    pub fn constant_term(&self) -> Vec<S> {
        self.column_for(&Complex::zero(self.species.len()))
    }

    /// Every negative cross-effect. Empty iff the system is kinetic.
    pub fn kinetic_violations(&self) -> Vec<KineticViolation<S>> {
        let mut out = Vec::new();
        for (m, row) in self.coefficients.iter().enumerate() {
            for (n, z) in row.iter().enumerate() {
                if z.is_negative() && self.complexes[n].0[m] == 0 {
                    out.push(KineticViolation {
                        species: m,
                        complex: n,
                        coefficient: z.clone(),
                    });
                }
            }
        }
        out
    }

    pub fn is_kinetic(&self) -> bool {
        self.kinetic_violations().is_empty()
    }

    pub fn sign_pattern(&self) -> SignPattern {
        SignPattern {
            entries: self
                .coefficients
                .iter()
                .map(|row| row.iter().map(Sign::of).collect())
                .collect(),
            complexes: self.complexes.clone(),
        }
    }

    /// `Z · x^Y` at a strictly positive state.
    pub fn evaluate(&self, x: &[S]) -> Result<Vec<S>, ModelError> {
        if x.len() != self.species.len() {
            return Err(ModelError::DimensionMismatch(format!(
                "state has {} entries, expected {}",
                x.len(),
                self.species.len()
            )));
        }
        if let Some(i) = x.iter().position(|v| !v.is_positive()) {
            return Err(ModelError::NonPositiveState(i));
        }
        let monomials: Vec<S> = self.complexes.iter().map(|y| y.monomial(x)).collect();
        Ok(self
            .coefficients
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&monomials)
                    .fold(S::zero(), |acc, (z, v)| acc + z.clone() * v.clone())
            })
            .collect())
    }

    /// Equality up to the scalar tolerance (exact for rationals).
    pub fn approx_eq(&self, other: &Self) -> bool {
        if self.species != other.species {
            return false;
        }
        let mut columns: BTreeMap<&Complex, Vec<S>> = BTreeMap::new();
        for (n, y) in self.complexes.iter().enumerate() {
            columns.insert(y, self.column(n));
        }
        for (n, y) in other.complexes.iter().enumerate() {
            let col = other.column(n);
            match columns.get_mut(y) {
                Some(existing) => {
                    for (a, b) in existing.iter_mut().zip(col) {
                        *a = a.clone() - b;
                    }
                }
                None => {
                    columns.insert(y, col.into_iter().map(|v| -v).collect());
                }
            }
        }
        columns.values().flatten().all(Scalar::is_negligible)
    }

    /// Converts every coefficient with `f`.
    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(&S) -> T) -> KineticSystem<T> {
        KineticSystem {
            species: self.species.clone(),
            complexes: self.complexes.clone(),
            coefficients: self
                .coefficients
                .iter()
                .map(|row| row.iter().map(&f).collect())
                .collect(),
        }
    }

    /// Renders the polynomial of species `m`.
    fn polynomial(&self, m: usize) -> String {
        let names = self.species_names();
        let mut out = String::new();
        for (n, z) in self.coefficients[m].iter().enumerate() {
            if z.is_zero() {
                continue;
            }
            let negative = z.is_negative();
            let magnitude = z.abs();
            if out.is_empty() {
                if negative {
                    out.push('-');
                }
            } else {
                out.push_str(if negative { " - " } else { " + " });
            }
            let monomial = monomial_text(&self.complexes[n], &names);
            let coeff = magnitude.render();
            match (monomial.is_empty(), magnitude.is_one()) {
                (true, _) => out.push_str(&coeff),
                (false, true) => out.push_str(&monomial),
                (false, false) => {
                    out.push_str(&coeff);
                    out.push('*');
                    out.push_str(&monomial);
                }
            }
        }
        if out.is_empty() {
            out.push('0');
        }
        out
    }
}

fn monomial_text(complex: &Complex, names: &[String]) -> String {
    complex
        .0
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > 0)
        .map(|(i, &e)| {
            if e == 1 {
                names[i].clone()
            } else {
                format!("{}^{e}", names[i])
            }
        })
        .collect::<Vec<_>>()
        .join("*")
}

/// Prints the system in the ODE text format accepted by [`parse_ode`].
impl<S: Scalar> fmt::Display for KineticSystem<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "species: {}", self.species_names().join(", "))?;
        for (m, s) in self.species.iter().enumerate() {
            writeln!(f, "d{}/dt = {}", s.name, self.polynomial(m))?;
        }
        Ok(())
    }
}

fn make_species(names: Vec<String>) -> Result<Vec<Species>, ModelError> {
    let mut seen = std::collections::HashSet::new();
    names
        .into_iter()
        .enumerate()
        .map(|(index, name)| {
            if !seen.insert(name.clone()) {
                return Err(ModelError::DuplicateSpecies(name));
            }
            Ok(Species { name, index })
        })
        .collect()
}

/// Free-function form of [`KineticSystem::kinetic_violations`].
pub fn is_kinetic<S: Scalar>(sys: &KineticSystem<S>) -> Vec<KineticViolation<S>> {
    sys.kinetic_violations()
}

pub fn sign_pattern<S: Scalar>(sys: &KineticSystem<S>) -> SignPattern {
    sys.sign_pattern()
}

pub fn evaluate_rhs<S: Scalar>(sys: &KineticSystem<S>, x: &[S]) -> Result<Vec<S>, ModelError> {
    sys.evaluate(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::int;

    fn logistic() -> KineticSystem {
        parse_ode("dx/dt = x - x^2").unwrap()
    }

    #[test]
    fn logistic_is_kinetic_with_two_columns() {
        let sys = logistic();
        assert_eq!(sys.complexes(), &[Complex(vec![1]), Complex(vec![2])]);
        assert_eq!(sys.coefficients(), &[vec![int(1), int(-1)]]);
        assert!(sys.is_kinetic());
    }

    #[test]
    fn negative_cross_effect_is_reported() {
        let sys = parse_ode("dx/dt = y - x\ndy/dt = x - x*z - y\ndz/dt = x*y - z").unwrap();
        let v = sys.kinetic_violations();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].species, 1);
        assert_eq!(sys.complexes()[v[0].complex], Complex(vec![1, 0, 1]));
        assert_eq!(v[0].coefficient, int(-1));
    }

    #[test]
    fn lotka_volterra_sign_pattern() {
        let sys = parse_ode("dx/dt = x - x*y\ndy/dt = x*y - y").unwrap();
        let sigma = sys.sign_pattern();
        // lexicographic order: Y=(0,1), X=(1,0), X+Y=(1,1)
        assert_eq!(
            sigma.complexes,
            vec![
                Complex(vec![0, 1]),
                Complex(vec![1, 0]),
                Complex(vec![1, 1])
            ]
        );
        use Sign::*;
        assert_eq!(
            sigma.entries,
            vec![vec![Zero, Plus, Minus], vec![Minus, Zero, Plus]]
        );
        assert!(sigma.is_kinetically_compatible());
    }

    #[test]
    fn kinetic_compatibility_edge_cases() {
        let forbidden = SignPattern {
            entries: vec![vec![Sign::Minus]],
            complexes: vec![Complex(vec![0])],
        };
        assert!(!forbidden.is_kinetically_compatible());
        let zeros = SignPattern {
            entries: vec![vec![Sign::Zero, Sign::Zero]],
            complexes: vec![Complex(vec![0]), Complex(vec![3])],
        };
        assert!(zeros.is_kinetically_compatible());
        assert!(!is_kinetically_compatible(&[Complex(vec![0])], &zeros));
    }

    #[test]
    fn zero_system_is_empty() {
        let sys = parse_ode("dx/dt = 0").unwrap();
        assert_eq!(sys.complex_count(), 0);
        assert!(sys.is_kinetic());
        assert!(sys.sign_pattern().entries[0].is_empty());
        assert_eq!(sys.evaluate(&[int(5)]).unwrap(), vec![int(0)]);
    }

    #[test]
    fn evaluate_logistic() {
        let sys = logistic();
        assert_eq!(sys.evaluate(&[int(1)]).unwrap(), vec![int(0)]);
        assert_eq!(sys.evaluate(&[int(2)]).unwrap(), vec![int(-2)]);
        assert_eq!(
            sys.evaluate(&[int(0)]),
            Err(ModelError::NonPositiveState(0))
        );
    }

    #[test]
    fn display_round_trips() {
        let sys = parse_ode("dx/dt = 1/2 - 3*x^2*y + x\ndy/dt = -x + 7/3*y").unwrap();
        let text = sys.to_string();
        assert_eq!(parse_ode(&text).unwrap(), sys);
    }
}
