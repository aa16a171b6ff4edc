use std::collections::BTreeSet;
use std::error::Error;
use std::fs;
use std::path::Path;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};

use crn_realize::model::{parse_ode, Complex, KineticSystem};
use crn_realize::network::{
    analyze_structure, deficiency_zero_by_characterization, parse_complex, parse_network,
    parse_network_json, to_json_value, Certificate, Reaction, Realization,
};
use crn_realize::realize::{
    canonical_realization, classify_generalized_compartmental, compartmental_realization,
    default_big_m, default_epsilon, dense_realization_with, find_realization,
    reversible_pairing_heuristic, sparse_realization, DenseOptions, GcClass, Property,
    RealizationQuery, RealizeError,
};
use crn_realize::scalar::{parse_scalar, Rational, Scalar};
use crn_realize::transform::{
    add_zero_complex, convex_combine, eliminate_complex, mass_conservation_vector,
    rescale_to_complex_balanced, MassConservation,
};

use crate::{Cli, Command, Mode, PropertyArg, QueryArgs, TransformCommand};

type Fail = Box<dyn Error>;

pub const EXIT_OK: u8 = 0;
pub const EXIT_NEGATIVE: u8 = 2;

/// Rendered result of a command.
pub struct Report {
    pub text: String,
    pub json: Value,
    pub code: u8,
}

impl Report {
    fn ok(text: String, json: Value) -> Self {
        Report {
            text,
            json,
            code: EXIT_OK,
        }
    }

    fn negative(text: String, json: Value) -> Self {
        Report {
            text,
            json,
            code: EXIT_NEGATIVE,
        }
    }
}

pub fn execute(cli: &Cli) -> Result<Report, Fail> {
    match cli.mode {
        Mode::Rational => execute_in::<Rational>(cli),
        Mode::Float => execute_in::<f64>(cli),
    }
}

struct Tuning<S> {
    epsilon: S,
    big_m: S,
}

fn tuning<S: Scalar>(cli: &Cli) -> Result<Tuning<S>, Fail> {
    let epsilon: S = match &cli.epsilon {
        Some(t) => parse_scalar(t)?,
        None => default_epsilon(),
    };
    let big_m: S = match &cli.big_m {
        Some(t) => parse_scalar(t)?,
        None => default_big_m(),
    };
    if !epsilon.is_positive() {
        return Err("--epsilon must be positive".into());
    }
    if big_m <= epsilon {
        return Err("--big-m must exceed --epsilon".into());
    }
    Ok(Tuning { epsilon, big_m })
}

fn read(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn load_ode<S: Scalar>(path: &Path) -> Result<KineticSystem<S>, Fail> {
    let sys = parse_ode(&read(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(sys.map_scalar(S::from_rational))
}

fn load_net<S: Scalar>(path: &Path) -> Result<Realization<S>, Fail> {
    let text = read(path)?;
    let parsed = if text.trim_start().starts_with('{') {
        // reports that carry extra fields nest the network under "network"
        match serde_json::from_str::<serde_json::Value>(&text) {
            Ok(serde_json::Value::Object(map)) if map.contains_key("network") => {
                parse_network_json(&map["network"].to_string())
            }
            _ => parse_network_json(&text),
        }
    } else {
        parse_network(&text)
    };
    Ok(parsed.map_err(|e| format!("{}: {e}", path.display()))?)
}

fn parse_list<S: Scalar>(text: &str) -> Result<Vec<S>, Fail> {
    text.split(',')
        .map(|t| parse_scalar(t.trim()).map_err(Into::into))
        .collect()
}

fn net_report<S: Scalar>(r: &Realization<S>, certificate: Option<Certificate>) -> Report {
    Report::ok(r.to_string(), to_json_value(r, certificate))
}

fn monomial_text(c: &Complex, names: &[String]) -> String {
    let factors: Vec<String> = c
        .exponents()
        .iter()
        .zip(names)
        .filter(|(e, _)| **e > 0)
        .map(|(e, n)| {
            if *e == 1 {
                n.clone()
            } else {
                format!("{n}^{e}")
            }
        })
        .collect();
    if factors.is_empty() {
        "1".into()
    } else {
        factors.join("*")
    }
}

fn execute_in<S: Scalar>(cli: &Cli) -> Result<Report, Fail> {
    match &cli.command {
        Command::Check { ode } => check::<S>(&load_ode(ode)?),
        Command::Canonical { ode } => {
            let r = canonical_realization(&load_ode::<S>(ode)?)?;
            Ok(net_report(&r, None))
        }
        Command::Realize { ode, query } => {
            let q = build_query(load_ode::<S>(ode)?, query, &tuning(cli)?)?;
            certified(&q, find_realization(&q))
        }
        Command::Dense { ode, query, jobs } => {
            let q = build_query(load_ode::<S>(ode)?, query, &tuning(cli)?)?;
            let options = DenseOptions {
                jobs: *jobs,
                order: None,
            };
            certified(
                &q,
                dense_realization_with(&q, &options).map(|d| d.realization),
            )
        }
        Command::Sparse { ode, query } => {
            let q = build_query(load_ode::<S>(ode)?, query, &tuning(cli)?)?;
            certified(&q, sparse_realization(&q))
        }
        Command::Analyze { net } => {
            let r = load_net::<S>(net)?;
            let report = analyze_structure(&r);
            let characterization = deficiency_zero_by_characterization(&r);
            let mut json = serde_json::to_value(&report)?;
            json["deficiency_zero_characterization"] = json!(characterization);
            Ok(Report::ok(format!("{report}\n"), json))
        }
        Command::Compartmental { ode } => compartmental::<S>(&load_ode(ode)?),
        Command::ClassifyGc { ode } => {
            let class = classify_generalized_compartmental(&load_ode::<S>(ode)?);
            let text = format!("{class}\n");
            let json = json!({ "class": class.to_string() });
            Ok(if class == GcClass::NotGC {
                Report::negative(text, json)
            } else {
                Report::ok(text, json)
            })
        }
        Command::Transform { op } => transform::<S>(op),
        Command::HeuristicReversible { ode } => {
            let r = reversible_pairing_heuristic(&load_ode::<Rational>(ode)?)?;
            Ok(net_report(&r, None))
        }
        Command::Selftest { seed, count } => Ok(selftest(*seed, *count)),
    }
}

fn check<S: Scalar>(sys: &KineticSystem<S>) -> Result<Report, Fail> {
    let names = sys.species_names();
    let violations = sys.kinetic_violations();
    if violations.is_empty() {
        return Ok(Report::ok(
            "kinetic\n".into(),
            json!({ "kinetic": true, "violations": [] }),
        ));
    }
    let mut text = format!(
        "not kinetic: {} negative cross-effect(s)\n",
        violations.len()
    );
    let mut list = Vec::new();
    for v in &violations {
        let species = &names[v.species];
        let monomial = monomial_text(&sys.complexes()[v.complex], &names);
        text.push_str(&format!(
            "  d{species}/dt: term {} {monomial} does not contain {species}\n",
            v.coefficient.render()
        ));
        list.push(json!({
            "species": species,
            "monomial": monomial,
            "coefficient": v.coefficient.render(),
        }));
    }
    Ok(Report::negative(
        text,
        json!({ "kinetic": false, "violations": list }),
    ))
}

fn build_query<S: Scalar>(
    sys: KineticSystem<S>,
    args: &QueryArgs,
    tuning: &Tuning<S>,
) -> Result<RealizationQuery<S>, Fail> {
    let names = sys.species_names();
    let xstar = || -> Result<Vec<S>, Fail> {
        let text = args
            .xstar
            .as_deref()
            .ok_or("--xstar is required for db and cb")?;
        parse_list(text)
    };
    let property = match args.property {
        PropertyArg::Any => Property::Any,
        PropertyArg::Rev => Property::Reversible,
        PropertyArg::Wr => Property::WeaklyReversible,
        PropertyArg::Db => Property::DetailedBalanced(xstar()?),
        PropertyArg::Cb => Property::ComplexBalanced(xstar()?),
    };
    let mut q = RealizationQuery::new(sys)
        .with_property(property)
        .with_epsilon(tuning.epsilon.clone())
        .with_big_m(tuning.big_m.clone());
    if let Some(path) = args.complexes.strip_prefix("file:") {
        let text = read(Path::new(path))?;
        let extra = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(|l| parse_complex(l, &names))
            .collect::<Result<Vec<_>, _>>()?;
        q = q.with_extra_complexes(extra);
    } else if args.complexes != "monomials" {
        return Err(format!(
            "--complexes must be `monomials` or `file:<path>`, got `{}`",
            args.complexes
        )
        .into());
    }
    for pair in &args.forbid {
        let (from, to) = pair
            .split_once("->")
            .ok_or_else(|| format!("--forbid expects `A -> B`, got `{pair}`"))?;
        let index = |text: &str| -> Result<usize, Fail> {
            let c = parse_complex(text, &names)?;
            q.complex_index(&c).ok_or_else(|| {
                format!("complex `{}` is not in the complex set", text.trim()).into()
            })
        };
        let (i, j) = (index(from)?, index(to)?);
        q = q.forbid(i, j);
    }
    Ok(q)
}

fn certificate<S: Scalar>(
    q: &RealizationQuery<S>,
    status: &str,
    edges: Option<usize>,
) -> Certificate {
    Certificate {
        status: status.into(),
        property: q.property.label().into(),
        edge_count: edges,
        epsilon: q.epsilon.render(),
        big_m: q.big_m.render(),
    }
}

fn certified<S: Scalar>(
    q: &RealizationQuery<S>,
    result: Result<Realization<S>, RealizeError>,
) -> Result<Report, Fail> {
    match result {
        Ok(r) => {
            let cert = certificate(q, "realized", Some(r.edge_count()));
            Ok(net_report(&r, Some(cert)))
        }
        Err(RealizeError::NoRealization) => {
            let cert = certificate(q, "no_realization", None);
            let text = format!(
                "no realization with property {} on {} complexes\n",
                q.property,
                q.complexes.len()
            );
            Ok(Report::negative(text, json!({ "certificate": cert })))
        }
        Err(e) => Err(e.into()),
    }
}

fn compartmental<S: Scalar>(sys: &KineticSystem<S>) -> Result<Report, Fail> {
    let (dec, r) = match compartmental_realization(sys) {
        Ok(found) => found,
        Err(RealizeError::NoRealization) => {
            return Ok(Report::negative(
                "no compartmental realization\n".into(),
                json!({ "status": "no_realization" }),
            ))
        }
        Err(e) => return Err(e.into()),
    };
    let names = sys.species_names();
    let render = |v: &[S]| v.iter().map(Scalar::render).collect::<Vec<_>>();
    let b: Vec<Vec<String>> = dec.b_matrix.iter().map(|row| render(row)).collect();
    let complexes: Vec<String> = dec
        .complexes
        .iter()
        .map(|c| c.display(&names).to_string())
        .collect();
    let mut text = format!("complexes: {}\nB:\n", complexes.join(", "));
    for row in &b {
        text.push_str(&format!("  [{}]\n", row.join(", ")));
    }
    text.push_str(&format!("outflow: [{}]\n", render(&dec.outflow).join(", ")));
    text.push_str(&format!("inflow: [{}]\n", render(&dec.inflow).join(", ")));
    text.push_str(&r.to_string());
    let json = json!({
        "status": "realized",
        "complexes": complexes,
        "b_matrix": b,
        "outflow": render(&dec.outflow),
        "inflow": render(&dec.inflow),
        "network": to_json_value(&r, None),
    });
    Ok(Report::ok(text, json))
}

fn transform<S: Scalar>(op: &TransformCommand) -> Result<Report, Fail> {
    match op {
        TransformCommand::Combine { nets, weights } => {
            let rs = nets
                .iter()
                .map(|p| load_net::<S>(p))
                .collect::<Result<Vec<_>, _>>()?;
            let w = match weights {
                Some(t) => parse_list(t)?,
                None => vec![S::one() / S::from_i64(rs.len() as i64); rs.len()],
            };
            Ok(net_report(&convex_combine(&rs, &w)?, None))
        }
        TransformCommand::AddComplex {
            net,
            complex,
            weights,
            scale,
        } => {
            let r = load_net::<Rational>(net)?;
            let y = parse_complex(complex, &r.species_names())?;
            let v = parse_list(weights)?;
            let scale: Rational = parse_scalar(scale)?;
            Ok(net_report(&add_zero_complex(&r, &y, &v, &scale)?, None))
        }
        TransformCommand::Eliminate { net, complex } => {
            let r = load_net::<S>(net)?;
            let y = parse_complex(complex, &r.species_names())?;
            let idx = r
                .complex_index(&y)
                .ok_or_else(|| format!("complex `{complex}` is not in the network"))?;
            Ok(net_report(&eliminate_complex(&r, idx)?, None))
        }
        TransformCommand::RescaleCb { net, xstar } => {
            let r = load_net::<S>(net)?;
            let x = parse_list(xstar)?;
            Ok(net_report(&rescale_to_complex_balanced(&r, &x)?, None))
        }
        TransformCommand::Masscons { net } => {
            let r = load_net::<S>(net)?;
            let render = |v: &[S]| v.iter().map(Scalar::render).collect::<Vec<_>>();
            Ok(match mass_conservation_vector(&r)? {
                MassConservation::Conserving(rho) => Report::ok(
                    format!("mass conserving: rho = [{}]\n", render(&rho).join(", ")),
                    json!({ "status": "conserving", "rho": render(&rho) }),
                ),
                MassConservation::Inconclusive(rho) => Report::ok(
                    format!(
                        "inconclusive: rho = [{}] is orthogonal to all reactions but L != T\n",
                        render(&rho).join(", ")
                    ),
                    json!({ "status": "inconclusive", "rho": render(&rho) }),
                ),
                MassConservation::NotConserving => Report::negative(
                    "not mass conserving\n".into(),
                    json!({ "status": "not_conserving" }),
                ),
            })
        }
    }
}

fn random_network(rng: &mut StdRng) -> Realization {
    let m = rng.gen_range(1..=4);
    let names: Vec<String> = (0..m).map(|i| format!("X{i}")).collect();
    let target = rng.gen_range(2..=6);
    let mut complexes = BTreeSet::new();
    for _ in 0..4 * target {
        if complexes.len() == target {
            break;
        }
        complexes.insert(Complex((0..m).map(|_| rng.gen_range(0..=2)).collect()));
    }
    let complexes: Vec<Complex> = complexes.into_iter().collect();
    let n = complexes.len();
    let mut reactions = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.gen_bool(0.3) {
                reactions.push(Reaction {
                    reactant: i,
                    product: j,
                    rate: Rational::from_i64(rng.gen_range(1..=3)),
                });
            }
        }
    }
    Realization::from_reactions(names, complexes, reactions).expect("generated network is valid")
}

fn selftest(seed: u64, count: usize) -> Report {
    let mut rng = StdRng::seed_from_u64(seed);
    let mismatches = (0..count)
        .filter(|_| {
            let r = random_network(&mut rng);
            (analyze_structure(&r).deficiency == 0) != deficiency_zero_by_characterization(&r)
        })
        .count();
    let text = format!("checked {count} random networks (seed {seed}): {mismatches} mismatches\n");
    let json = json!({ "seed": seed, "count": count, "mismatches": mismatches });
    Report {
        text,
        json,
        code: if mismatches == 0 { EXIT_OK } else { 1 },
    }
}
