//! Golden JSON fixtures evaluated through the public API.
//!
//! A fixture file is a JSON array of records:
//!
//! ```json
//! {"name": "...", "op": "avg_purity", "input": {...}, "expected": {...},
//!  "tolerance": 1e-12, "source": "reference"}
//! ```
//!
//! `source` says where the expected value comes from: `reference` (a value
//! stated in the literature), `trivial` (follows from a symmetry or a limit)
//! or `derived` (computed independently of the code under test).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::channels::{
    choi_from_kraus, depolarizing_choi, from_pairs, stinespring_from_choi, ChoiOperator, KrausSet,
    PurificationVector,
};
use crate::ensembles::{mp_mu, EnsembleSpec};
use crate::error::{Error, Result};
use crate::linalg::{fidelity, partial_trace, ComplexMatrix, SubsystemDims};
use crate::theory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Reference,
    Trivial,
    Derived,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureRecord {
    pub name: String,
    pub op: String,
    pub input: Value,
    pub expected: Value,
    pub tolerance: f64,
    pub source: Source,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureOutcome {
    pub name: String,
    pub source: Source,
    pub passed: bool,
    /// Largest absolute deviation found, or the error message.
    pub detail: String,
    pub expected: Value,
    pub observed: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureReport {
    pub outcomes: Vec<FixtureOutcome>,
}

impl FixtureReport {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &FixtureOutcome> {
        self.outcomes.iter().filter(|o| !o.passed)
    }
}

/// Parse a fixture file. Malformed JSON or records raise [`Error::Parse`].
pub fn load_fixtures(path: &Path) -> Result<Vec<FixtureRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_fixtures(&text)
}

pub fn parse_fixtures(text: &str) -> Result<Vec<FixtureRecord>> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

/// Load and evaluate every record in a file.
pub fn run_fixtures(path: &Path) -> Result<FixtureReport> {
    Ok(evaluate_all(&load_fixtures(path)?))
}

pub fn evaluate_all(records: &[FixtureRecord]) -> FixtureReport {
    FixtureReport {
        outcomes: records.iter().map(evaluate).collect(),
    }
}

pub fn evaluate(rec: &FixtureRecord) -> FixtureOutcome {
    let (passed, detail, observed) = match compute(&rec.op, &rec.input) {
        Ok(observed) => match max_deviation(&rec.expected, &observed) {
            Some(dev) => (dev <= rec.tolerance, format!("max deviation {dev:e}"), observed),
            None => (false, "shape mismatch".to_string(), observed),
        },
        Err(e) => (false, e.to_string(), Value::Null),
    };
    FixtureOutcome {
        name: rec.name.clone(),
        source: rec.source,
        passed,
        detail,
        expected: rec.expected.clone(),
        observed,
    }
}

fn field<T: for<'de> Deserialize<'de>>(input: &Value, key: &str) -> Result<T> {
    let v = input
        .get(key)
        .ok_or_else(|| Error::Parse(format!("missing input field '{key}'")))?;
    serde_json::from_value(v.clone()).map_err(|e| Error::Parse(format!("field '{key}': {e}")))
}

fn spec_from(input: &Value) -> Result<EnsembleSpec> {
    EnsembleSpec::new(field(input, "d_I")?, field(input, "d_O")?, field(input, "d_E")?, 0)
}

fn square_from(input: &Value, key: &str) -> Result<ComplexMatrix> {
    let pairs: Vec<[f64; 2]> = field(input, key)?;
    let n = (pairs.len() as f64).sqrt().round() as usize;
    ComplexMatrix::from_vec(n, n, from_pairs(&pairs))
}

fn to_json<T: Serialize>(x: T) -> Result<Value> {
    serde_json::to_value(x).map_err(|e| Error::Parse(e.to_string()))
}

fn scalar(x: f64) -> Result<Value> {
    to_json(serde_json::json!({ "value": x }))
}

fn compute(op: &str, input: &Value) -> Result<Value> {
    match op {
        "depolarizing_choi" => to_json(depolarizing_choi(field(input, "d_I")?, field(input, "d_O")?)?),
        "avg_purity" => scalar(theory::avg_purity(&spec_from(input)?)),
        "eps_dep" => scalar(theory::eps_dep(&spec_from(input)?)),
        "eps_avg_ue" => scalar(theory::eps_avg_ue(&spec_from(input)?)),
        "purity_at_full_rank" => scalar(theory::purity_at_full_rank(field(input, "d_I")?, field(input, "d_O")?)),
        "mp_mu" => scalar(mp_mu(field(input, "c")?)?),
        "choi_roundtrip" => {
            let c: ChoiOperator = field(input, "choi")?;
            to_json(c)
        }
        "purification_marginal" => {
            let v: PurificationVector = field(input, "purification")?;
            to_json(v.marginal())
        }
        "stinespring_marginal" => {
            let c: ChoiOperator = field(input, "choi")?;
            let v = stinespring_from_choi(&c, field(input, "d_E")?)?;
            to_json(v.marginal())
        }
        "choi_from_kraus" => {
            let (d_i, d_o): (usize, usize) = (field(input, "d_I")?, field(input, "d_O")?);
            let raw: Vec<Vec<[f64; 2]>> = field(input, "kraus")?;
            let ops = raw
                .iter()
                .map(|k| ComplexMatrix::from_vec(d_o, d_i, from_pairs(k)))
                .collect::<Result<Vec<_>>>()?;
            to_json(choi_from_kraus(&KrausSet::new(d_i, d_o, ops)?))
        }
        "fidelity" => scalar(fidelity(&square_from(input, "rho")?, &square_from(input, "sigma")?)?),
        "partial_trace" => {
            let dims: Vec<usize> = field(input, "dims")?;
            let keep: Vec<usize> = field(input, "keep")?;
            let m = square_from(input, "matrix")?;
            let out = partial_trace(&m, &SubsystemDims::new(dims)?, &keep)?;
            to_json(serde_json::json!({ "matrix": crate::channels::to_pairs(out.as_slice()) }))
        }
        _ => Err(Error::Parse(format!("unknown fixture op '{op}'"))),
    }
}

/// Largest absolute difference between matching numeric leaves; `None` when
/// the structures differ.
fn max_deviation(expected: &Value, observed: &Value) -> Option<f64> {
    match (expected, observed) {
        (Value::Number(a), Value::Number(b)) => Some((a.as_f64()? - b.as_f64()?).abs()),
        (Value::Array(a), Value::Array(b)) if a.len() == b.len() => a
            .iter()
            .zip(b)
            .try_fold(0.0_f64, |acc, (x, y)| Some(acc.max(max_deviation(x, y)?))),
        (Value::Object(a), Value::Object(b)) => a.iter().try_fold(0.0_f64, |acc, (k, x)| {
            Some(acc.max(max_deviation(x, b.get(k)?)?))
        }),
        (a, b) if a == b => Some(0.0),
        _ => None,
    }
}
