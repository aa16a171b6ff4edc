//! Parser for the ODE text format.
//!
//! ```text
//! # logistic growth
//! species: x
//! k1 = 1
//! dx/dt = k1*x - x^2
//! ```
//!
//! Terms are products of numbers (`3`, `0.5`, `1/3`), named constants and
//! species powers. `*` and `^1` may be omitted. Constants are resolved at
//! parse time; their names may not clash with species.

use std::collections::HashMap;

use num_traits::{One, Zero};

use super::{Complex, KineticSystem, ModelError};
use crate::scalar::{parse_rational, Rational};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
}

struct Lexed {
    tok: Tok,
    col: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> ModelError {
    ModelError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn lex(text: &str, line: usize, offset: usize) -> Result<Vec<Lexed>, ModelError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = offset + i + 1;
        match c {
            ' ' | '\t' | '\r' => i += 1,
            '+' => {
                out.push(Lexed {
                    tok: Tok::Plus,
                    col,
                });
                i += 1;
            }
            '-' => {
                out.push(Lexed {
                    tok: Tok::Minus,
                    col,
                });
                i += 1;
            }
            '*' => {
                out.push(Lexed {
                    tok: Tok::Star,
                    col,
                });
                i += 1;
            }
            '^' => {
                out.push(Lexed {
                    tok: Tok::Caret,
                    col,
                });
                i += 1;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                // exponent part, only when followed by digits
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '-' || chars[j] == '+') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        while j < chars.len() && chars[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let mut literal: String = chars[start..i].iter().collect();
                // rational literal p/q
                let mut j = i;
                while j < chars.len() && chars[j] == ' ' {
                    j += 1;
                }
                if j < chars.len() && chars[j] == '/' {
                    let mut k = j + 1;
                    while k < chars.len() && chars[k] == ' ' {
                        k += 1;
                    }
                    let den_start = k;
                    while k < chars.len() && chars[k].is_ascii_digit() {
                        k += 1;
                    }
                    if k == den_start {
                        return Err(syntax(
                            line,
                            offset + j + 1,
                            "expected denominator after `/`",
                        ));
                    }
                    literal.push('/');
                    literal.extend(&chars[den_start..k]);
                    i = k;
                }
                let value =
                    parse_rational(&literal).map_err(|e| syntax(line, col, e.to_string()))?;
                out.push(Lexed {
                    tok: Tok::Num(value),
                    col,
                });
            }
            c if is_ident_start(c) => {
                let start = i;
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                out.push(Lexed {
                    tok: Tok::Ident(chars[start..i].iter().collect()),
                    col,
                });
            }
            other => return Err(syntax(line, col, format!("unexpected character `{other}`"))),
        }
    }
    Ok(out)
}

struct Context<'a> {
    species: &'a [String],
    constants: &'a HashMap<String, Rational>,
    line: usize,
}

/// Parses one polynomial into `(monomial, coefficient)` terms.
fn parse_polynomial(
    tokens: &[Lexed],
    ctx: &Context<'_>,
    end_col: usize,
) -> Result<Vec<(Vec<u32>, Rational)>, ModelError> {
    let mut terms = Vec::new();
    let mut pos = 0;
    let m = ctx.species.len();
    if tokens.is_empty() {
        return Err(syntax(ctx.line, end_col, "expected a polynomial"));
    }
    loop {
        let mut sign = Rational::one();
        let mut have_sign = false;
        while let Some(t) = tokens.get(pos) {
            match t.tok {
                Tok::Plus => {}
                Tok::Minus => sign = -sign,
                _ => break,
            }
            if have_sign && pos > 0 && terms.is_empty() {
                // leading `--x` is accepted as a double sign
            }
            have_sign = true;
            pos += 1;
        }
        if !terms.is_empty() && !have_sign {
            let col = tokens.get(pos).map_or(end_col, |t| t.col);
            return Err(syntax(ctx.line, col, "expected `+` or `-` between terms"));
        }
        let mut coefficient = sign;
        let mut exponents = vec![0u32; m];
        let mut factors = 0;
        while let Some(t) = tokens.get(pos) {
            match &t.tok {
                Tok::Star if factors > 0 => {
                    pos += 1;
                    if !matches!(
                        tokens.get(pos).map(|t| &t.tok),
                        Some(Tok::Num(_) | Tok::Ident(_))
                    ) {
                        let col = tokens.get(pos).map_or(end_col, |t| t.col);
                        return Err(syntax(ctx.line, col, "expected a factor after `*`"));
                    }
                    continue;
                }
                Tok::Num(v) => {
                    coefficient *= v.clone();
                    pos += 1;
                }
                Tok::Ident(name) => {
                    let col = t.col;
                    pos += 1;
                    let power = parse_power(tokens, &mut pos, ctx, end_col)?;
                    if let Some(idx) = ctx.species.iter().position(|s| s == name) {
                        exponents[idx] += power;
                    } else if let Some(value) = ctx.constants.get(name) {
                        coefficient *= value.pow(power as i32);
                    } else {
                        return Err(ModelError::UnknownSpecies {
                            name: name.clone(),
                            line: ctx.line,
                            column: col,
                        });
                    }
                }
                _ => break,
            }
            factors += 1;
        }
        if factors == 0 {
            let col = tokens.get(pos).map_or(end_col, |t| t.col);
            return Err(syntax(ctx.line, col, "expected a term"));
        }
        terms.push((exponents, coefficient));
        if pos >= tokens.len() {
            break;
        }
    }
    Ok(terms)
}

fn parse_power(
    tokens: &[Lexed],
    pos: &mut usize,
    ctx: &Context<'_>,
    end_col: usize,
) -> Result<u32, ModelError> {
    if !matches!(tokens.get(*pos).map(|t| &t.tok), Some(Tok::Caret)) {
        return Ok(1);
    }
    let caret_col = tokens[*pos].col;
    *pos += 1;
    let negative = matches!(tokens.get(*pos).map(|t| &t.tok), Some(Tok::Minus));
    if negative {
        return Err(ModelError::NegativeExponent {
            line: ctx.line,
            column: tokens[*pos].col,
        });
    }
    match tokens.get(*pos) {
        Some(Lexed {
            tok: Tok::Num(v), ..
        }) if v.is_integer() => {
            *pos += 1;
            u32::try_from(v.to_integer())
                .map_err(|_| syntax(ctx.line, caret_col, "exponent out of range"))
        }
        Some(t) => Err(syntax(
            ctx.line,
            t.col,
            "exponent must be a nonnegative integer",
        )),
        None => Err(syntax(ctx.line, end_col, "missing exponent after `^`")),
    }
}

/// Left-hand side `d<name>/dt`.
fn equation_target(lhs: &str) -> Option<&str> {
    let name = lhs.trim().strip_prefix('d')?.strip_suffix("/dt")?;
    let mut chars = name.chars();
    let first = chars.next()?;
    (is_ident_start(first) && chars.all(is_ident_char)).then_some(name)
}

/// Parses the ODE text format into a normalized [`KineticSystem`].
///
/// Species are taken from the optional `species:` line, otherwise from the
/// order of the equations. Species without an equation have a zero
/// right-hand side.
pub fn parse_ode(text: &str) -> Result<KineticSystem, ModelError> {
    let mut declared: Option<Vec<String>> = None;
    let mut constants: HashMap<String, Rational> = HashMap::new();
    let mut equations: Vec<(usize, String, usize, &str, usize)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        if let Some(rest) = content.trim_start().strip_prefix("species:") {
            if declared.is_some() {
                return Err(syntax(line_no, 1, "duplicate `species:` line"));
            }
            if !equations.is_empty() {
                return Err(syntax(line_no, 1, "`species:` must precede the equations"));
            }
            let names: Vec<String> = rest
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
            for name in &names {
                let mut chars = name.chars();
                let ok = chars.next().is_some_and(is_ident_start) && chars.all(is_ident_char);
                if !ok {
                    return Err(syntax(line_no, 1, format!("invalid species name `{name}`")));
                }
            }
            declared = Some(names);
            continue;
        }
        let Some(eq) = content.find('=') else {
            return Err(syntax(
                line_no,
                1,
                "expected `d<name>/dt = ...` or `<name> = <number>`",
            ));
        };
        let lhs = &content[..eq];
        let rhs = &content[eq + 1..];
        if let Some(target) = equation_target(lhs) {
            equations.push((line_no, target.to_string(), eq, rhs, raw.len()));
        } else {
            let name = lhs.trim();
            let mut chars = name.chars();
            let ok = chars.next().is_some_and(is_ident_start) && chars.all(is_ident_char);
            if !ok {
                return Err(syntax(
                    line_no,
                    1,
                    format!("invalid left-hand side `{name}`"),
                ));
            }
            let value =
                parse_rational(rhs.trim()).map_err(|e| syntax(line_no, eq + 2, e.to_string()))?;
            constants.insert(name.to_string(), value);
        }
    }

    let species = match declared {
        Some(names) => names,
        None => {
            let mut names: Vec<String> = Vec::new();
            for (_, target, ..) in &equations {
                if !names.contains(target) {
                    names.push(target.clone());
                }
            }
            names
        }
    };
    if let Some(name) = constants.keys().find(|k| species.contains(k)) {
        return Err(ModelError::DuplicateSpecies(name.clone()));
    }

    let m = species.len();
    let mut seen = vec![false; m];
    let mut terms = Vec::new();
    for (line_no, target, eq, rhs, len) in equations {
        let Some(idx) = species.iter().position(|s| *s == target) else {
            return Err(ModelError::UnknownSpecies {
                name: target,
                line: line_no,
                column: 2,
            });
        };
        if seen[idx] {
            return Err(syntax(
                line_no,
                1,
                format!("duplicate equation for `{target}`"),
            ));
        }
        seen[idx] = true;
        let tokens = lex(rhs, line_no, eq + 1)?;
        let ctx = Context {
            species: &species,
            constants: &constants,
            line: line_no,
        };
        for (exponents, coefficient) in parse_polynomial(&tokens, &ctx, len + 1)? {
            if !coefficient.is_zero() {
                terms.push((Complex(exponents), idx, coefficient));
            }
        }
    }
    KineticSystem::from_terms(species, terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio};

    #[test]
    fn parses_logistic_with_constants() {
        let sys = parse_ode("k1 = 1\nk2 = 1\ndx/dt = k1*x - k2*x^2").unwrap();
        assert_eq!(sys.complexes(), &[Complex(vec![1]), Complex(vec![2])]);
        assert_eq!(sys.coefficients(), &[vec![int(1), int(-1)]]);
    }

    #[test]
    fn cancellation_leaves_no_complexes() {
        let sys = parse_ode("dx/dt = x - x").unwrap();
        assert_eq!(sys.complex_count(), 0);
        assert_eq!(sys.species_count(), 1);
    }

    #[test]
    fn implicit_multiplication_and_rationals() {
        let sys = parse_ode("species: x, y\ndx/dt = 2x y^2 + 1/2\ndy/dt = -0.25 x").unwrap();
        assert_eq!(
            sys.coefficient(0, sys.monomial_index(&Complex(vec![1, 2])).unwrap()),
            &int(2)
        );
        assert_eq!(sys.constant_term(), vec![ratio(1, 2), int(0)]);
        assert_eq!(
            sys.coefficient(1, sys.monomial_index(&Complex(vec![1, 0])).unwrap()),
            &ratio(-1, 4)
        );
    }

    #[test]
    fn repeated_factors_accumulate() {
        let sys = parse_ode("dx/dt = x*x*x - 3 x^2 x").unwrap();
        assert_eq!(sys.complexes(), &[Complex(vec![3])]);
        assert_eq!(sys.coefficients(), &[vec![int(-2)]]);
    }

    #[test]
    fn comments_and_missing_equations() {
        let sys = parse_ode("# header\nspecies: x, y, z\ndx/dt = y # inflow\n").unwrap();
        assert_eq!(sys.species_count(), 3);
        assert_eq!(sys.complexes(), &[Complex(vec![0, 1, 0])]);
    }

    #[test]
    fn reports_unknown_species_with_position() {
        let err = parse_ode("species: x\ndx/dt = x + w").unwrap_err();
        assert_eq!(
            err,
            ModelError::UnknownSpecies {
                name: "w".into(),
                line: 2,
                column: 13
            }
        );
    }

    #[test]
    fn reports_negative_exponent() {
        let err = parse_ode("dx/dt = x^-1").unwrap_err();
        assert!(matches!(
            err,
            ModelError::NegativeExponent {
                line: 1,
                column: 11
            }
        ));
    }

    #[test]
    fn reports_syntax_errors() {
        assert!(matches!(
            parse_ode("dx/dt = x +"),
            Err(ModelError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            parse_ode("dx/dt = x y z2 $"),
            Err(ModelError::Syntax { column: 16, .. })
        ));
        assert!(matches!(
            parse_ode("dx/dt = 1\ndx/dt = 2"),
            Err(ModelError::Syntax { line: 2, .. })
        ));
        assert!(matches!(
            parse_ode("dx/dt ="),
            Err(ModelError::Syntax { .. })
        ));
        assert!(matches!(parse_ode("x + y"), Err(ModelError::Syntax { .. })));
        assert!(matches!(
            parse_ode("dx/dt = x^1.5"),
            Err(ModelError::Syntax { .. })
        ));
    }
}
