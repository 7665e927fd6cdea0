//! JSON state files.
//!
//! ```json
//! {"dims": [2, 2], "kind": "pure", "data": [[0.7071, 0], [0, 0], [0, 0], [0.7071, 0]]}
//! {"dims": [2, 2], "kind": "density", "data": [[[0.5, 0], ...], ...]}
//! ```
//!
//! Complex numbers are `[re, im]` pairs. Inputs within 1e-8 of the state
//! invariants are accepted and renormalized exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{BipartiteDims, BipartitePureState, DensityOperator, State, INPUT_TOL};
use crate::densemath::{ComplexMatrix, C64};
use crate::error::{Error, Result};

/// On-disk representation, before validation.
#[derive(Debug, Serialize, Deserialize)]
pub struct StateFile {
    pub dims: Vec<usize>,
    pub kind: String,
    pub data: Value,
}

fn field_err(field: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        field: field.into(),
        message: message.into(),
    }
}

fn parse_complex(v: &Value, field: &str) -> Result<C64> {
    let pair = v
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| field_err(field, "expected an [re, im] pair"))?;
    let part = |x: &Value| -> Result<f64> {
        let f = x
            .as_f64()
            .ok_or_else(|| field_err(field, format!("`{x}` is not a number")))?;
        if !f.is_finite() {
            return Err(field_err(field, "non-finite number"));
        }
        Ok(f)
    };
    Ok(C64::new(part(&pair[0])?, part(&pair[1])?))
}

fn parse_vector(v: &Value, field: &str) -> Result<Vec<C64>> {
    v.as_array()
        .ok_or_else(|| field_err(field, "expected an array"))?
        .iter()
        .map(|z| parse_complex(z, field))
        .collect()
}

/// Parses and validates the text of a state file.
pub fn parse_state_file(text: &str) -> Result<State> {
    let raw: StateFile =
        serde_json::from_str(text).map_err(|e| field_err(json_field(&e), e.to_string()))?;
    let [a, b] = raw.dims[..] else {
        return Err(field_err("dims", "expected exactly two dimensions"));
    };
    let dims = BipartiteDims::new(a, b).map_err(|e| field_err("dims", e.to_string()))?;
    let invalid = |e: Error| field_err("data", e.to_string());
    match raw.kind.as_str() {
        "pure" => {
            let amps = parse_vector(&raw.data, "data")?;
            if amps.len() != dims.total() {
                return Err(field_err(
                    "data",
                    format!("{} amplitudes for dims ({a}, {b})", amps.len()),
                ));
            }
            Ok(State::Pure(
                BipartitePureState::with_tolerance(dims, amps, INPUT_TOL).map_err(invalid)?,
            ))
        }
        "density" => {
            let rows: Vec<Vec<C64>> = raw
                .data
                .as_array()
                .ok_or_else(|| field_err("data", "expected an array of rows"))?
                .iter()
                .map(|r| parse_vector(r, "data"))
                .collect::<Result<_>>()?;
            let n = dims.total();
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(field_err(
                    "data",
                    format!("density matrix must be {n}x{n} for dims ({a}, {b})"),
                ));
            }
            let m = ComplexMatrix::from_rows(&rows).map_err(invalid)?;
            Ok(State::Density(
                DensityOperator::with_tolerance(dims, m, INPUT_TOL).map_err(invalid)?,
            ))
        }
        other => Err(field_err(
            "kind",
            format!("`{other}` is neither \"pure\" nor \"density\""),
        )),
    }
}

/// Best-effort name of the field a serde error refers to.
fn json_field(e: &serde_json::Error) -> &'static str {
    let msg = e.to_string();
    ["dims", "kind", "data"]
        .into_iter()
        .find(|f| msg.contains(&format!("`{f}`")))
        .unwrap_or("file")
}

pub fn read_state_file(path: &Path) -> Result<State> {
    let text = std::fs::read_to_string(path)?;
    parse_state_file(&text)
}

fn pair(z: &C64) -> Value {
    serde_json::json!([z.re, z.im])
}

pub fn write_state_file(path: &Path, state: &State) -> Result<()> {
    let (a, b) = state.dims().as_tuple();
    let file = match state {
        State::Pure(p) => StateFile {
            dims: vec![a, b],
            kind: "pure".into(),
            data: Value::Array(p.amplitudes().iter().map(pair).collect()),
        },
        State::Density(d) => {
            let m = d.matrix();
            StateFile {
                dims: vec![a, b],
                kind: "density".into(),
                data: Value::Array(
                    (0..m.rows())
                        .map(|i| Value::Array(m.row(i).iter().map(pair).collect()))
                        .collect(),
                ),
            }
        }
    };
    let text = serde_json::to_string_pretty(&file).map_err(|e| field_err("file", e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}
