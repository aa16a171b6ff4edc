#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use crn_realize::model::{parse_ode, Complex, KineticSystem};
use crn_realize::network::{parse_network, Reaction, Realization};
use crn_realize::realize::{find_realization, RealizationQuery};
use crn_realize::scalar::{Rational, Scalar};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn ode(name: &str) -> KineticSystem {
    parse_ode(&fixture_text(name)).unwrap()
}

pub fn net(name: &str) -> Realization {
    parse_network(&fixture_text(name)).unwrap()
}

pub fn species(m: usize) -> Vec<String> {
    (0..m).map(|i| format!("X{i}")).collect()
}

/// Up to `n` distinct complexes with entries in `0..=max`, sorted.
pub fn random_complexes(rng: &mut StdRng, m: usize, n: usize, max: u32) -> Vec<Complex> {
    let mut set = BTreeSet::new();
    for _ in 0..8 * n {
        if set.len() == n {
            break;
        }
        set.insert(Complex((0..m).map(|_| rng.gen_range(0..=max)).collect()));
    }
    set.into_iter().collect()
}

fn rate(rng: &mut StdRng) -> Rational {
    Rational::from_i64(rng.gen_range(1..=3)) / Rational::from_i64(rng.gen_range(1..=2))
}

/// Random network; each ordered pair is a reaction with probability `p`.
pub fn random_network(
    rng: &mut StdRng,
    max_species: usize,
    max_complexes: usize,
    p: f64,
) -> Realization {
    let m = rng.gen_range(1..=max_species);
    let n = rng.gen_range(2..=max_complexes);
    let complexes = random_complexes(rng, m, n, 2);
    let n = complexes.len();
    let mut reactions = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.gen_bool(p) {
                reactions.push(Reaction {
                    reactant: i,
                    product: j,
                    rate: rate(rng),
                });
            }
        }
    }
    Realization::from_reactions(species(m), complexes, reactions).unwrap()
}

/// Random network with at least one reaction whose induced ODE is nonzero.
pub fn random_nontrivial_network(
    rng: &mut StdRng,
    max_species: usize,
    max_complexes: usize,
) -> Realization {
    loop {
        let r = random_network(rng, max_species, max_complexes, 0.35);
        if crn_realize::network::induced_ode(&r).complex_count() > 0 {
            return r;
        }
    }
}

/// Random weakly reversible network: every linkage class is a union of cycles.
pub fn random_weakly_reversible(
    rng: &mut StdRng,
    max_species: usize,
    max_complexes: usize,
) -> Realization {
    let m = rng.gen_range(1..=max_species);
    let n = rng.gen_range(2..=max_complexes);
    let complexes = random_complexes(rng, m, n, 2);
    let n = complexes.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut reactions = Vec::new();
    let mut start = 0;
    while n - start >= 2 {
        let len = rng.gen_range(2..=n - start);
        let cycle = &order[start..start + len];
        for k in 0..len {
            reactions.push(Reaction {
                reactant: cycle[k],
                product: cycle[(k + 1) % len],
                rate: rate(rng),
            });
        }
        if len > 2 && rng.gen_bool(0.5) {
            reactions.push(Reaction {
                reactant: cycle[1],
                product: cycle[0],
                rate: rate(rng),
            });
        }
        start += len;
    }
    Realization::from_reactions(species(m), complexes, reactions).unwrap()
}

/// Random reversible network.
pub fn random_reversible(
    rng: &mut StdRng,
    max_species: usize,
    max_complexes: usize,
) -> Realization {
    loop {
        let m = rng.gen_range(1..=max_species);
        let n = rng.gen_range(2..=max_complexes);
        let complexes = random_complexes(rng, m, n, 2);
        let n = complexes.len();
        let mut reactions = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen_bool(0.4) {
                    reactions.push(Reaction {
                        reactant: i,
                        product: j,
                        rate: rate(rng),
                    });
                    reactions.push(Reaction {
                        reactant: j,
                        product: i,
                        rate: rate(rng),
                    });
                }
            }
        }
        if !reactions.is_empty() {
            return Realization::from_reactions(species(m), complexes, reactions).unwrap();
        }
    }
}

/// Positions of `sub`'s complexes inside `sup`'s complex list.
pub fn support_in(sub: &Realization, sup_complexes: &[Complex]) -> BTreeSet<(usize, usize)> {
    let pos = |c: &Complex| sup_complexes.iter().position(|d| d == c).unwrap();
    sub.support()
        .into_iter()
        .map(|(i, j)| (pos(&sub.complexes()[i]), pos(&sub.complexes()[j])))
        .collect()
}

pub fn candidates(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|(i, j)| i != j)
        .collect()
}

/// Fewest edges over all feasible supports, by enumerating edge subsets.
pub fn brute_force_sparse(sys: &KineticSystem) -> Option<usize> {
    let q = RealizationQuery::new(sys.clone());
    let all = candidates(q.complexes.len());
    let mut best: Option<usize> = None;
    for mask in 0u32..(1 << all.len()) {
        let size = mask.count_ones() as usize;
        if best.is_some_and(|b| size >= b) {
            continue;
        }
        let mut restricted = q.clone();
        for (k, &(i, j)) in all.iter().enumerate() {
            if mask & (1 << k) == 0 {
                restricted = restricted.forbid(i, j);
            }
        }
        if let Ok(r) = find_realization(&restricted) {
            best = Some(r.edge_count());
        }
    }
    best
}
