//! Reaction networks `(Y, A_k)` and their structure.
//!
//! A [`Realization`] stores a dense Kirchhoff matrix with the convention that
//! `kirchhoff[i][j]` is the rate of the reaction `j -> i`. Diagonal entries
//! are always recomputed from the column sums, so every stored matrix has
//! exact zero column sums.

mod io;

use std::collections::BTreeSet;
use std::fmt;

use num_traits::Zero;
use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use petgraph::unionfind::UnionFind;
use serde::Serialize;

use crate::linalg;
use crate::model::{Complex, KineticSystem, ModelError, Species};
use crate::scalar::{Rational, Scalar, FLOAT_TOLERANCE};

pub use io::{
    parse_complex, parse_network, parse_network_json, to_json_value, Certificate, NetworkJson,
    ReactionJson,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetworkError {
    #[error("invalid Kirchhoff matrix: {0}")]
    InvalidKirchhoff(String),
    #[error("reaction {0} -> {0} is a self-loop")]
    SelfLoop(usize),
    #[error("reaction {from} -> {to} has a nonpositive rate")]
    NonPositiveRate { from: usize, to: usize },
    #[error("complex index {0} out of range")]
    ComplexIndex(usize),
    #[error("duplicate complex in complex list")]
    DuplicateComplex,
    #[error("network is not reversible")]
    NotReversible,
    #[error("no strictly positive kernel vector (linkage class containing complex {0} is not weakly reversible)")]
    NoPositiveKernel(usize),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid network JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A single reaction `reactant -> product` with its rate constant.
#[derive(Debug, Clone, PartialEq)]
pub struct Reaction<S = Rational> {
    pub reactant: usize,
    pub product: usize,
    pub rate: S,
}

/// A reaction network: complexes `Y` and Kirchhoff matrix `A_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization<S = Rational> {
    species: Vec<Species>,
    complexes: Vec<Complex>,
    kirchhoff: Vec<Vec<S>>,
}

impl<S: Scalar> Realization<S> {
    /// Builds a network from reactions over a fixed complex list.
    ///
    /// Parallel reactions are merged by summing their rates.
    pub fn from_reactions(
        species: Vec<String>,
        complexes: Vec<Complex>,
        reactions: impl IntoIterator<Item = Reaction<S>>,
    ) -> Result<Self, NetworkError> {
        let n = complexes.len();
        let mut matrix = vec![vec![S::zero(); n]; n];
        for r in reactions {
            if r.reactant >= n {
                return Err(NetworkError::ComplexIndex(r.reactant));
            }
            if r.product >= n {
                return Err(NetworkError::ComplexIndex(r.product));
            }
            if r.reactant == r.product {
                return Err(NetworkError::SelfLoop(r.reactant));
            }
            if !r.rate.is_positive() {
                return Err(NetworkError::NonPositiveRate {
                    from: r.reactant,
                    to: r.product,
                });
            }
            let diag = &mut matrix[r.reactant][r.reactant];
            *diag = diag.clone() - r.rate.clone();
            let cell = &mut matrix[r.product][r.reactant];
            *cell = cell.clone() + r.rate;
        }
        Self::from_kirchhoff(species, complexes, matrix)
    }

    /// Builds a network from a Kirchhoff matrix.
    ///
    /// Off-diagonal entries must be nonnegative (negligible ones are cleared)
    /// and column sums must vanish within the scalar tolerance. The diagonal
    /// is then reset to minus the off-diagonal column sum.
    pub fn from_kirchhoff(
        species: Vec<String>,
        complexes: Vec<Complex>,
        mut matrix: Vec<Vec<S>>,
    ) -> Result<Self, NetworkError> {
        let species = species_list(species)?;
        let n = complexes.len();
        for c in &complexes {
            if c.len() != species.len() {
                return Err(ModelError::ComplexLength {
                    expected: species.len(),
                    found: c.len(),
                }
                .into());
            }
        }
        if complexes.iter().collect::<BTreeSet<_>>().len() != n {
            return Err(NetworkError::DuplicateComplex);
        }
        if matrix.len() != n || matrix.iter().any(|row| row.len() != n) {
            return Err(NetworkError::InvalidKirchhoff(format!(
                "expected a {n}x{n} matrix"
            )));
        }
        for j in 0..n {
            let mut off = S::zero();
            for i in 0..n {
                if i == j {
                    continue;
                }
                let v = &matrix[i][j];
                if v.is_negative() {
                    return Err(NetworkError::InvalidKirchhoff(format!(
                        "negative rate for reaction {j} -> {i}"
                    )));
                }
                if v.is_negligible() {
                    matrix[i][j] = S::zero();
                } else {
                    off = off + v.clone();
                }
            }
            let sum = off.clone() + matrix[j][j].clone();
            let scale = if off.is_zero() {
                S::one()
            } else {
                off.abs() + S::one()
            };
            if !(sum / scale).is_negligible() {
                return Err(NetworkError::InvalidKirchhoff(format!(
                    "column {j} does not sum to zero"
                )));
            }
            matrix[j][j] = -off;
        }
        Ok(Realization {
            species,
            complexes,
            kirchhoff: matrix,
        })
    }

    /// The network with no reactions on the given complexes.
    pub fn empty(species: Vec<String>, complexes: Vec<Complex>) -> Result<Self, NetworkError> {
        let n = complexes.len();
        Self::from_kirchhoff(species, complexes, vec![vec![S::zero(); n]; n])
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

    pub fn complex_index(&self, complex: &Complex) -> Option<usize> {
        self.complexes.iter().position(|c| c == complex)
    }

    pub fn kirchhoff(&self) -> &[Vec<S>] {
        &self.kirchhoff
    }

    /// Rate of `from -> to`, zero when absent.
    pub fn rate(&self, from: usize, to: usize) -> &S {
        &self.kirchhoff[to][from]
    }

    pub fn has_reaction(&self, from: usize, to: usize) -> bool {
        from != to && !self.kirchhoff[to][from].is_zero()
    }

    /// Reactions ordered by reactant, then product.
    pub fn reactions(&self) -> Vec<Reaction<S>> {
        let n = self.complexes.len();
        let mut out = Vec::new();
        for from in 0..n {
            for to in 0..n {
                if self.has_reaction(from, to) {
                    out.push(Reaction {
                        reactant: from,
                        product: to,
                        rate: self.kirchhoff[to][from].clone(),
                    });
                }
            }
        }
        out
    }

    /// The set of `(reactant, product)` pairs with positive rate.
    pub fn support(&self) -> BTreeSet<(usize, usize)> {
        self.reactions()
            .into_iter()
            .map(|r| (r.reactant, r.product))
            .collect()
    }

    /// Support expressed through complexes, independent of index order.
    pub fn support_complexes(&self) -> BTreeSet<(Complex, Complex)> {
        self.support()
            .into_iter()
            .map(|(i, j)| (self.complexes[i].clone(), self.complexes[j].clone()))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.support().len()
    }

    /// Rate of the reaction between two complexes, zero when absent.
    pub fn rate_between(&self, from: &Complex, to: &Complex) -> S {
        match (self.complex_index(from), self.complex_index(to)) {
            (Some(i), Some(j)) => self.rate(i, j).clone(),
            _ => S::zero(),
        }
    }

    /// Indices of complexes that appear in at least one reaction.
    pub fn participating(&self) -> Vec<usize> {
        let n = self.complexes.len();
        (0..n)
            .filter(|&i| (0..n).any(|j| self.has_reaction(i, j) || self.has_reaction(j, i)))
            .collect()
    }

    /// `product - reactant` for every reaction, in [`Realization::reactions`] order.
    pub fn reaction_vectors(&self) -> Vec<Vec<S>> {
        self.reactions()
            .iter()
            .map(|r| difference(&self.complexes[r.reactant], &self.complexes[r.product]))
            .collect()
    }

    /// Converts every rate with `f`.
    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Realization<T> {
        Realization {
            species: self.species.clone(),
            complexes: self.complexes.clone(),
            kirchhoff: self
                .kirchhoff
                .iter()
                .map(|row| row.iter().map(&f).collect())
                .collect(),
        }
    }

    /// The same network over a complex list that contains every complex of
    /// `self`. Added complexes are isolated.
    pub fn with_complexes(&self, complexes: Vec<Complex>) -> Result<Self, NetworkError> {
        let map: Vec<usize> = self
            .complexes
            .iter()
            .map(|c| complexes.iter().position(|d| d == c))
            .collect::<Option<_>>()
            .ok_or_else(|| {
                NetworkError::InvalidKirchhoff("complex list does not cover the network".into())
            })?;
        let reactions = self.reactions().into_iter().map(|r| Reaction {
            reactant: map[r.reactant],
            product: map[r.product],
            rate: r.rate,
        });
        Self::from_reactions(self.species_names(), complexes, reactions)
    }

    /// Network restricted to the complexes that take part in a reaction.
    pub fn without_isolated(&self) -> Self {
        let keep = self.participating();
        let complexes: Vec<Complex> = keep.iter().map(|&i| self.complexes[i].clone()).collect();
        let kirchhoff = keep
            .iter()
            .map(|&i| keep.iter().map(|&j| self.kirchhoff[i][j].clone()).collect())
            .collect();
        Realization {
            species: self.species.clone(),
            complexes,
            kirchhoff,
        }
    }

    /// Equality of species, complex sets and rates, ignoring complex order
    /// and isolated complexes. Rates compare within the scalar tolerance.
    pub fn same_network(&self, other: &Self) -> bool {
        if self.species != other.species || self.support_complexes() != other.support_complexes() {
            return false;
        }
        self.reactions().iter().all(|r| {
            let rate = other.rate_between(&self.complexes[r.reactant], &self.complexes[r.product]);
            close(&r.rate, &rate)
        })
    }
}

fn species_list(names: Vec<String>) -> Result<Vec<Species>, NetworkError> {
    let sys = KineticSystem::<Rational>::zero(names)?;
    Ok(sys.species().to_vec())
}

fn difference<S: Scalar>(from: &Complex, to: &Complex) -> Vec<S> {
    from.difference_to(to)
        .into_iter()
        .map(S::from_i64)
        .collect()
}

/// Relative comparison used for rates and balance identities.
pub(crate) fn close<S: Scalar>(a: &S, b: &S) -> bool {
    if S::EXACT {
        return a == b;
    }
    let scale = a.abs().to_f64().max(b.abs().to_f64()).max(1.0);
    (a.clone() - b.clone()).abs().to_f64() <= FLOAT_TOLERANCE * scale
}

/// Structural invariants of a network.
///
/// Counts refer to complexes that take part in at least one reaction;
/// isolated entries of the complex list are ignored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StructureReport {
    /// `N`, number of complexes.
    pub complexes: usize,
    /// `L`, number of linkage classes.
    pub linkage_classes: usize,
    /// `S`, dimension of the stoichiometric subspace.
    pub stoichiometric_dim: usize,
    /// `T`, number of terminal strong linkage classes.
    pub terminal_classes: usize,
    pub deficiency: usize,
    pub reversible: bool,
    pub weakly_reversible: bool,
}

impl fmt::Display for StructureReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "complexes (N):          {}", self.complexes)?;
        writeln!(f, "linkage classes (L):    {}", self.linkage_classes)?;
        writeln!(f, "stoichiometric dim (S): {}", self.stoichiometric_dim)?;
        writeln!(f, "terminal classes (T):   {}", self.terminal_classes)?;
        writeln!(f, "deficiency:             {}", self.deficiency)?;
        writeln!(f, "reversible:             {}", self.reversible)?;
        write!(f, "weakly reversible:      {}", self.weakly_reversible)
    }
}

/// `dx/dt = Y · A_k · x^Y`.
pub fn induced_ode<S: Scalar>(r: &Realization<S>) -> KineticSystem<S> {
    let m = r.species_count();
    let n = r.complex_count();
    let columns = (0..n).map(|j| {
        let mut col = vec![S::zero(); m];
        for i in 0..n {
            let a = &r.kirchhoff[i][j];
            if a.is_zero() {
                continue;
            }
            for (s, &e) in r.complexes[i].0.iter().enumerate() {
                if e > 0 {
                    col[s] = col[s].clone() + a.clone() * S::from_i64(i64::from(e));
                }
            }
        }
        (r.complexes[j].clone(), col)
    });
    KineticSystem::from_columns(r.species_names(), columns)
        .expect("realization complexes match its species")
}

/// Linkage classes as sorted lists of complex indices, ordered by their
/// smallest member. Isolated complexes are omitted.
pub fn linkage_classes<S: Scalar>(r: &Realization<S>) -> Vec<Vec<usize>> {
    let n = r.complex_count();
    let mut uf = UnionFind::<usize>::new(n);
    for (i, j) in r.support() {
        uf.union(i, j);
    }
    let participating = r.participating();
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut root_of: Vec<Option<usize>> = vec![None; n];
    for &i in &participating {
        let root = uf.find(i);
        match root_of[root] {
            Some(c) => classes[c].push(i),
            None => {
                root_of[root] = Some(classes.len());
                classes.push(vec![i]);
            }
        }
    }
    classes
}

struct StrongClasses {
    /// Component id per complex index (isolated complexes get their own).
    component: Vec<usize>,
    terminal: Vec<bool>,
}

fn strong_classes<S: Scalar>(r: &Realization<S>) -> StrongClasses {
    let n = r.complex_count();
    let mut graph = DiGraph::<usize, ()>::with_capacity(n, 0);
    let nodes: Vec<NodeIndex> = (0..n).map(|i| graph.add_node(i)).collect();
    for (i, j) in r.support() {
        graph.add_edge(nodes[i], nodes[j], ());
    }
    let sccs = tarjan_scc(&graph);
    let mut component = vec![0; n];
    for (c, scc) in sccs.iter().enumerate() {
        for node in scc {
            component[node.index()] = c;
        }
    }
    let mut terminal = vec![true; sccs.len()];
    for (i, j) in r.support() {
        if component[i] != component[j] {
            terminal[component[i]] = false;
        }
    }
    StrongClasses {
        component,
        terminal,
    }
}

/// Computes `N`, `L`, `S`, `T`, the deficiency and reversibility flags.
pub fn analyze_structure<S: Scalar>(r: &Realization<S>) -> StructureReport {
    let participating = r.participating();
    let n = participating.len();
    let l = linkage_classes(r).len();
    let s = linalg::rank(&r.reaction_vectors());
    let strong = strong_classes(r);
    let t = participating
        .iter()
        .map(|&i| strong.component[i])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .filter(|&c| strong.terminal[c])
        .count();
    let support = r.support();
    let reversible = support.iter().all(|&(i, j)| support.contains(&(j, i)));
    let weakly_reversible = support
        .iter()
        .all(|&(i, j)| strong.component[i] == strong.component[j]);
    StructureReport {
        complexes: n,
        linkage_classes: l,
        stoichiometric_dim: s,
        terminal_classes: t,
        deficiency: n - l - s,
        reversible,
        weakly_reversible,
    }
}

/// Zero-deficiency test that avoids computing `N - L - S` directly.
///
/// True iff the complexes of every linkage class are affinely independent
/// and the per-class stoichiometric subspaces are linearly independent.
pub fn deficiency_zero_by_characterization<S: Scalar>(r: &Realization<S>) -> bool {
    let mut dims = 0;
    let mut all_differences = Vec::new();
    for class in linkage_classes(r) {
        let base = &r.complexes[class[0]];
        let differences: Vec<Vec<S>> = class[1..]
            .iter()
            .map(|&i| difference(base, &r.complexes[i]))
            .collect();
        let dim = linalg::rank(&differences);
        if dim != differences.len() {
            return false;
        }
        dims += dim;
        all_differences.extend(differences);
    }
    linalg::rank(&all_differences) == dims
}

fn state_monomials<S: Scalar>(r: &Realization<S>, xstar: &[S]) -> Result<Vec<S>, NetworkError> {
    if xstar.len() != r.species_count() {
        return Err(ModelError::DimensionMismatch(format!(
            "state has {} entries, expected {}",
            xstar.len(),
            r.species_count()
        ))
        .into());
    }
    if let Some(i) = xstar.iter().position(|v| !v.is_positive()) {
        return Err(ModelError::NonPositiveState(i).into());
    }
    Ok(r.complexes.iter().map(|y| y.monomial(xstar)).collect())
}

/// `k_{i->j} (x*)^{y_i} = k_{j->i} (x*)^{y_j}` for every reversible pair.
pub fn is_detailed_balanced_at<S: Scalar>(
    r: &Realization<S>,
    xstar: &[S],
) -> Result<bool, NetworkError> {
    let support = r.support();
    if support.iter().any(|&(i, j)| !support.contains(&(j, i))) {
        return Err(NetworkError::NotReversible);
    }
    let m = state_monomials(r, xstar)?;
    Ok(support.iter().filter(|(i, j)| i < j).all(|&(i, j)| {
        let forward = r.rate(i, j).clone() * m[i].clone();
        let backward = r.rate(j, i).clone() * m[j].clone();
        close(&forward, &backward)
    }))
}

/// `A_k · (x*)^Y = 0`.
///
/// In float mode the residual's max norm is compared with
/// `1e-9 · ‖A_k‖∞ · max(1, ‖(x*)^Y‖∞)`.
pub fn is_complex_balanced_at<S: Scalar>(
    r: &Realization<S>,
    xstar: &[S],
) -> Result<bool, NetworkError> {
    let m = state_monomials(r, xstar)?;
    let residual: Vec<S> = r
        .kirchhoff
        .iter()
        .map(|row| {
            row.iter()
                .zip(&m)
                .fold(S::zero(), |acc, (a, v)| acc + a.clone() * v.clone())
        })
        .collect();
    if S::EXACT {
        return Ok(residual.iter().all(Zero::is_zero));
    }
    let norm_a = r
        .kirchhoff
        .iter()
        .map(|row| row.iter().map(|v| v.abs().to_f64()).sum::<f64>())
        .fold(0.0, f64::max);
    let norm_m = m.iter().map(|v| v.to_f64()).fold(1.0, f64::max);
    let worst = residual
        .iter()
        .map(|v| v.abs().to_f64())
        .fold(0.0, f64::max);
    Ok(worst <= FLOAT_TOLERANCE * norm_a * norm_m)
}

/// A strictly positive vector `p` with `A_k · p = 0`.
///
/// Computed per linkage class; each class is scaled so its smallest entry is
/// 1. Isolated complexes get 1.
pub fn positive_kernel<S: Scalar>(r: &Realization<S>) -> Result<Vec<S>, NetworkError> {
    let mut p = vec![S::one(); r.complex_count()];
    for class in linkage_classes(r) {
        let sub: Vec<Vec<S>> = class
            .iter()
            .map(|&i| class.iter().map(|&j| r.kirchhoff[i][j].clone()).collect())
            .collect();
        let basis = linalg::null_space(&sub, class.len());
        if basis.len() != 1 {
            return Err(NetworkError::NoPositiveKernel(class[0]));
        }
        let v = &basis[0];
        let sign = if v.iter().all(Scalar::is_positive) {
            S::one()
        } else if v.iter().all(Scalar::is_negative) {
            -S::one()
        } else {
            return Err(NetworkError::NoPositiveKernel(class[0]));
        };
        let min = v
            .iter()
            .map(|x| x.clone() * sign.clone())
            .fold(None::<S>, |acc, x| match acc {
                Some(a) if a <= x => Some(a),
                _ => Some(x),
            })
            .expect("linkage classes are nonempty");
        for (&i, x) in class.iter().zip(v) {
            p[i] = x.clone() * sign.clone() / min.clone();
        }
    }
    Ok(p)
}
