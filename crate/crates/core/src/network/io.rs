//! Network text format and JSON export.
//!
//! ```text
//! species: X, Y
//! 3X -> 2Y ; rate = 1
//! X + Y <=> 0 ; rates = 1/2, 3
//! ```

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{NetworkError, Reaction, Realization};
use crate::model::Complex;
use crate::scalar::{parse_scalar, Scalar};

fn perr(line: usize, message: impl Into<String>) -> NetworkError {
    NetworkError::Parse {
        line,
        message: message.into(),
    }
}

fn valid_ident(name: &str) -> bool {
    let mut chars = name.chars();
    chars
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parses `2X + 5Y + Z` or `0` into `(species name, coefficient)` pairs.
fn parse_complex_terms(text: &str, line: usize) -> Result<Vec<(String, u32)>, NetworkError> {
    let text = text.trim();
    if text == "0" {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for term in text.split('+') {
        let term = term.trim();
        let digits = term.chars().take_while(char::is_ascii_digit).count();
        let (coeff, name) = term.split_at(digits);
        let name = name.trim_start_matches('*').trim();
        if !valid_ident(name) {
            return Err(perr(line, format!("invalid complex term `{term}`")));
        }
        let coeff: u32 = if coeff.is_empty() {
            1
        } else {
            coeff
                .parse()
                .map_err(|_| perr(line, format!("invalid coefficient in `{term}`")))?
        };
        if coeff == 0 {
            return Err(perr(line, format!("zero coefficient in `{term}`")));
        }
        out.push((name.to_string(), coeff));
    }
    Ok(out)
}

/// Parses one complex such as `X + 2Y` over a known species list.
pub fn parse_complex(text: &str, species: &[String]) -> Result<Complex, NetworkError> {
    let mut exponents = vec![0u32; species.len()];
    for (name, coeff) in parse_complex_terms(text, 1)? {
        let idx = species
            .iter()
            .position(|s| *s == name)
            .ok_or_else(|| perr(1, format!("unknown species `{name}`")))?;
        exponents[idx] += coeff;
    }
    Ok(Complex(exponents))
}

struct RawReaction<S> {
    from: Vec<(String, u32)>,
    to: Vec<(String, u32)>,
    rate: S,
    line: usize,
}

/// Parses the network text format.
///
/// Species come from an optional `species:` line, otherwise from their
/// first appearance. Complexes are sorted lexicographically.
pub fn parse_network<S: Scalar>(text: &str) -> Result<Realization<S>, NetworkError> {
    let mut declared: Option<Vec<String>> = None;
    let mut raw: Vec<RawReaction<S>> = Vec::new();
    for (idx, full) in text.lines().enumerate() {
        let line = idx + 1;
        let content = full.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix("species:") {
            let names: Vec<String> = rest
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
            if let Some(bad) = names.iter().find(|n| !valid_ident(n)) {
                return Err(perr(line, format!("invalid species name `{bad}`")));
            }
            declared = Some(names);
            continue;
        }
        let (reaction, rates) = content
            .split_once(';')
            .ok_or_else(|| perr(line, "expected `; rate = ...`"))?;
        let (key, values) = rates
            .split_once('=')
            .ok_or_else(|| perr(line, "expected `rate = ...` or `rates = ...`"))?;
        let values: Vec<S> = values
            .split(',')
            .map(|v| parse_scalar(v.trim()).map_err(|e| perr(line, e.to_string())))
            .collect::<Result<_, _>>()?;
        let key = key.trim();
        if let Some((lhs, rhs)) = reaction.split_once("<=>") {
            if key != "rates" || values.len() != 2 {
                return Err(perr(
                    line,
                    "reversible reactions need `rates = <fwd>, <bwd>`",
                ));
            }
            let (a, b) = (
                parse_complex_terms(lhs, line)?,
                parse_complex_terms(rhs, line)?,
            );
            let mut values = values.into_iter();
            raw.push(RawReaction {
                from: a.clone(),
                to: b.clone(),
                rate: values.next().expect("two values"),
                line,
            });
            raw.push(RawReaction {
                from: b,
                to: a,
                rate: values.next().expect("two values"),
                line,
            });
        } else if let Some((lhs, rhs)) = reaction.split_once("->") {
            if key != "rate" || values.len() != 1 {
                return Err(perr(line, "irreversible reactions need `rate = <value>`"));
            }
            raw.push(RawReaction {
                from: parse_complex_terms(lhs, line)?,
                to: parse_complex_terms(rhs, line)?,
                rate: values.into_iter().next().expect("one value"),
                line,
            });
        } else {
            return Err(perr(line, "expected `->` or `<=>`"));
        }
    }

    let species = match declared {
        Some(names) => names,
        None => {
            let mut names: Vec<String> = Vec::new();
            for r in &raw {
                for (name, _) in r.from.iter().chain(&r.to) {
                    if !names.contains(name) {
                        names.push(name.clone());
                    }
                }
            }
            names
        }
    };
    let to_complex = |terms: &[(String, u32)], line: usize| -> Result<Complex, NetworkError> {
        let mut v = vec![0u32; species.len()];
        for (name, c) in terms {
            let i = species
                .iter()
                .position(|s| s == name)
                .ok_or_else(|| perr(line, format!("unknown species `{name}`")))?;
            v[i] += c;
        }
        Ok(Complex(v))
    };
    let mut pairs = Vec::new();
    for r in raw {
        let from = to_complex(&r.from, r.line)?;
        let to = to_complex(&r.to, r.line)?;
        if from == to {
            return Err(perr(r.line, "self-loop reaction"));
        }
        if !r.rate.is_positive() {
            return Err(perr(r.line, "rates must be positive"));
        }
        pairs.push((from, to, r.rate));
    }
    let complexes: Vec<Complex> = pairs
        .iter()
        .flat_map(|(a, b, _)| [a.clone(), b.clone()])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index = |c: &Complex| complexes.binary_search(c).expect("collected above");
    let reactions: Vec<Reaction<S>> = pairs
        .iter()
        .map(|(a, b, rate)| Reaction {
            reactant: index(a),
            product: index(b),
            rate: rate.clone(),
        })
        .collect();
    Realization::from_reactions(species, complexes, reactions)
}

/// Prints the network in the text format read by [`parse_network`].
impl<S: Scalar> fmt::Display for Realization<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = self.species_names();
        writeln!(f, "species: {}", names.join(", "))?;
        for r in self.reactions() {
            writeln!(
                f,
                "{} -> {} ; rate = {}",
                self.complexes[r.reactant].display(&names),
                self.complexes[r.product].display(&names),
                r.rate.render()
            )?;
        }
        Ok(())
    }
}

/// One reaction in the JSON export. The rate is a string so exact
/// rationals survive (`"1/2"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReactionJson {
    pub from: usize,
    pub to: usize,
    pub rate: String,
}

/// Outcome attached to realization output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// `realized` or `no_realization`.
    pub status: String,
    pub property: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edge_count: Option<usize>,
    pub epsilon: String,
    pub big_m: String,
}

/// JSON shape of a network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkJson {
    pub species: Vec<String>,
    pub complexes: Vec<Vec<u32>>,
    pub reactions: Vec<ReactionJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
}

impl<S: Scalar> Realization<S> {
    pub fn to_json(&self) -> NetworkJson {
        NetworkJson {
            species: self.species_names(),
            complexes: self.complexes.iter().map(|c| c.0.clone()).collect(),
            reactions: self
                .reactions()
                .into_iter()
                .map(|r| ReactionJson {
                    from: r.reactant,
                    to: r.product,
                    rate: r.rate.render(),
                })
                .collect(),
            certificate: None,
        }
    }

    pub fn from_json(json: &NetworkJson) -> Result<Self, NetworkError> {
        let reactions = json
            .reactions
            .iter()
            .map(|r| {
                parse_scalar(&r.rate)
                    .map(|rate| Reaction {
                        reactant: r.from,
                        product: r.to,
                        rate,
                    })
                    .map_err(|e| NetworkError::Json(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let complexes = json.complexes.iter().cloned().map(Complex).collect();
        Realization::from_reactions(json.species.clone(), complexes, reactions)
    }
}

/// Serializes a network (and optional certificate) to a JSON value.
pub fn to_json_value<S: Scalar>(
    r: &Realization<S>,
    certificate: Option<Certificate>,
) -> serde_json::Value {
    let mut json = r.to_json();
    json.certificate = certificate;
    serde_json::to_value(json).expect("network JSON is serializable")
}

/// Parses the JSON export back into a network.
pub fn parse_network_json<S: Scalar>(text: &str) -> Result<Realization<S>, NetworkError> {
    let json: NetworkJson =
        serde_json::from_str(text).map_err(|e| NetworkError::Json(e.to_string()))?;
    Realization::from_json(&json)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio, Rational};

    #[test]
    fn parses_single_complexes() {
        let names = vec!["X".to_string(), "Y".to_string()];
        assert_eq!(
            parse_complex("X + 2Y", &names).unwrap(),
            Complex(vec![1, 2])
        );
        assert_eq!(parse_complex("0", &names).unwrap(), Complex(vec![0, 0]));
        assert!(parse_complex("Z", &names).is_err());
    }

    #[test]
    fn text_round_trip() {
        let text = "species: X, Y\n3X -> 2Y ; rate = 1\nX + Y <=> 0 ; rates = 1/2, 3\n";
        let r: Realization<Rational> = parse_network(text).unwrap();
        assert_eq!(r.edge_count(), 3);
        let again: Realization<Rational> = parse_network(&r.to_string()).unwrap();
        assert_eq!(again, r);
        let zero = Complex(vec![0, 0]);
        let xy = Complex(vec![1, 1]);
        assert_eq!(r.rate_between(&xy, &zero), ratio(1, 2));
        assert_eq!(r.rate_between(&zero, &xy), int(3));
    }

    #[test]
    fn json_round_trip() {
        let r: Realization<Rational> =
            parse_network("2X + 5Y + Z <=> 3X + 4Y + Z ; rates = 1/3, 2").unwrap();
        let value = to_json_value(&r, None);
        let back: Realization<Rational> = parse_network_json(&value.to_string()).unwrap();
        assert_eq!(back, r);
        assert_eq!(value["reactions"][0]["rate"], "1/3");
    }

    #[test]
    fn rejects_malformed_lines() {
        let bad = |t: &str| parse_network::<Rational>(t).is_err();
        assert!(bad("X -> 2X"));
        assert!(bad("X -> X ; rate = 1"));
        assert!(bad("X -> 2X ; rate = -1"));
        assert!(bad("X <=> 2X ; rate = 1"));
        assert!(bad("species: X\nX -> Y ; rate = 1"));
        assert!(bad("X -> 2$ ; rate = 1"));
    }
}
