//! JSON problem files.
//!
//! ```json
//! {
//!   "issues": ["1", "2"],
//!   "claimants": ["a", "b", "c"],
//!   "estates": { "1": 4, "2": "8" },
//!   "claims": { "a": 2, "b": "5", "c": "7/1" },
//!   "alpha": { "a": ["1"], "b": ["1", "2"], "c": ["2"] }
//! }
//! ```
//!
//! Amounts may be JSON numbers or strings holding an integer, a decimal or
//! `p/q`. Identifiers may be strings or non-negative integers. Written files
//! use canonical strings and re-read to the identical problem.

use std::fmt;
use std::marker::PhantomData;

use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::problem::{validate_problem, MbcProblem, RawProblem, ValidationError};
use crate::rational::{format_rational, parse_rational, Q};
use crate::rules::{Mode, RuleValue};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProblemError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{}{source}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Invalid {
        line: Option<usize>,
        source: ValidationError,
    },
}

/// Map entries kept in file order, duplicates included.
#[derive(Debug, Clone, PartialEq)]
struct Entries<T>(Vec<(String, T)>);

impl<'de, T: Deserialize<'de>> Deserialize<'de> for Entries<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V<T>(PhantomData<T>);
        impl<'de, T: Deserialize<'de>> Visitor<'de> for V<T> {
            type Value = Entries<T>;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, T>()? {
                    out.push((k, v));
                }
                Ok(Entries(out))
            }
        }
        d.deserialize_map(V(PhantomData))
    }
}

impl<T: Serialize> Serialize for Entries<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

/// An identifier written as a string or a non-negative integer.
#[derive(Debug, Clone, PartialEq)]
struct Id(String);

impl<'de> Deserialize<'de> for Id {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Id;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a string or non-negative integer identifier")
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Id, E> {
                Ok(Id(v.to_string()))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Id, E> {
                Ok(Id(v.to_string()))
            }
        }
        d.deserialize_any(V)
    }
}

/// An exact amount; floats are read through their shortest decimal form.
#[derive(Debug, Clone, PartialEq)]
struct Amount(Q);

impl<'de> Deserialize<'de> for Amount {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl V {
            fn parse<E: de::Error>(text: &str) -> Result<Amount, E> {
                parse_rational(text)
                    .map(Amount)
                    .map_err(|e| E::custom(format!("invalid amount {text:?}: {e}")))
            }
        }
        impl<'de> Visitor<'de> for V {
            type Value = Amount;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a string like \"7\", \"2.5\" or \"7/3\"")
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Amount, E> {
                Ok(Amount(Q::from_integer(v.into())))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Amount, E> {
                Ok(Amount(Q::from_integer(v.into())))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Amount, E> {
                if !v.is_finite() {
                    return Err(E::custom("amount must be finite"));
                }
                V::parse(&format!("{v}"))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Amount, E> {
                V::parse(v.trim())
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileIn {
    issues: Vec<Id>,
    claimants: Vec<Id>,
    estates: Entries<Amount>,
    claims: Entries<Amount>,
    alpha: Entries<Vec<Id>>,
}

#[derive(Serialize)]
struct FileOut {
    issues: Vec<String>,
    claimants: Vec<String>,
    estates: Entries<String>,
    claims: Entries<String>,
    alpha: Entries<Vec<String>>,
}

fn ids(v: Vec<Id>) -> Vec<String> {
    v.into_iter().map(|Id(s)| s).collect()
}

fn amounts(e: Entries<Amount>) -> Vec<(String, Q)> {
    e.0.into_iter().map(|(k, Amount(q))| (k, q)).collect()
}

/// Parses and validates a problem file.
pub fn parse_problem(text: &str) -> Result<MbcProblem, ProblemError> {
    let file: FileIn = serde_json::from_str(text).map_err(|e| ProblemError::Parse {
        line: e.line(),
        column: e.column(),
        message: strip_position(&e.to_string()),
    })?;
    let raw = RawProblem {
        issues: ids(file.issues),
        claimants: ids(file.claimants),
        estates: amounts(file.estates),
        claims: amounts(file.claims),
        alpha: file.alpha.0.into_iter().map(|(k, v)| (k, ids(v))).collect(),
    };
    validate_problem(raw).map_err(|source| ProblemError::Invalid {
        line: source
            .anchor()
            .and_then(|(section, key)| locate(text, section, key)),
        source,
    })
}

fn strip_position(message: &str) -> String {
    match message.rfind(" at line ") {
        Some(at) => message[..at].to_string(),
        None => message.to_string(),
    }
}

/// 1-based line of `key` inside `section`, falling back to the section header.
fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let header = format!("\"{section}\"");
    let needle = format!("\"{key}\"");
    let lines: Vec<&str> = text.lines().collect();
    let start = lines.iter().position(|l| l.contains(&header))?;
    let first = &lines[start][lines[start].find(&header).unwrap() + header.len()..];
    if first.contains(&needle) {
        return Some(start + 1);
    }
    let found = lines[start + 1..]
        .iter()
        .position(|l| l.contains(&needle))
        .map(|k| start + 2 + k);
    Some(found.unwrap_or(start + 1))
}

fn file_out(p: &MbcProblem) -> FileOut {
    FileOut {
        issues: p.issues().to_vec(),
        claimants: p.claimants().to_vec(),
        estates: Entries(
            p.issues()
                .iter()
                .zip(p.estates())
                .map(|(i, e)| (i.clone(), format_rational(e)))
                .collect(),
        ),
        claims: Entries(
            p.claimants()
                .iter()
                .zip(p.claims())
                .map(|(j, c)| (j.clone(), format_rational(c)))
                .collect(),
        ),
        alpha: Entries(
            (0..p.n())
                .map(|j| {
                    let set = p.alpha(j).iter().map(|&i| p.issues()[i].clone()).collect();
                    (p.claimants()[j].clone(), set)
                })
                .collect(),
        ),
    }
}

/// Writes `p` in canonical form: listed order, amounts as exact strings.
pub fn write_problem(p: &MbcProblem) -> String {
    let mut text = serde_json::to_string_pretty(&file_out(p)).expect("problem serializes");
    text.push('\n');
    text
}

#[derive(Serialize)]
struct SolutionOut<'a> {
    #[serde(flatten)]
    problem: FileOut,
    rule: &'a str,
    allocation: Entries<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    inner_samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    half_width: Option<Entries<f64>>,
}

fn solution_out<'a>(p: &MbcProblem, rule: &'a str, value: &RuleValue) -> SolutionOut<'a> {
    let by_claimant =
        |values: Vec<String>| Entries(p.claimants().iter().cloned().zip(values).collect());
    let allocation = by_claimant(
        value
            .allocation
            .values()
            .iter()
            .map(format_rational)
            .collect(),
    );
    let (samples, inner_samples, seed, half_width) = match &value.mode {
        Mode::Exact => (None, None, None, None),
        Mode::Sampled(s) => (
            Some(s.samples),
            s.inner_samples,
            Some(s.seed),
            s.half_width.as_ref().map(|h| {
                Entries(
                    p.claimants()
                        .iter()
                        .cloned()
                        .zip(h.iter().copied())
                        .collect(),
                )
            }),
        ),
    };
    SolutionOut {
        problem: file_out(p),
        rule,
        allocation,
        samples,
        inner_samples,
        seed,
        half_width,
    }
}

/// Structured rule output: the problem document plus `rule` and `allocation`
/// (and the sampling summary when sampled). One rule gives an object, several
/// give an array of objects.
pub fn write_solutions(p: &MbcProblem, values: &[(String, RuleValue)]) -> String {
    let docs: Vec<SolutionOut> = values
        .iter()
        .map(|(rule, v)| solution_out(p, rule, v))
        .collect();
    let mut text = if docs.len() == 1 {
        serde_json::to_string_pretty(&docs[0])
    } else {
        serde_json::to_string_pretty(&docs)
    }
    .expect("solution serializes");
    text.push('\n');
    text
}
