//! JSON channel files.
//!
//! Explicit form: `{"d_in": 2, "d_out": 2, "kraus": [K0, K1, ...]}` where
//! each matrix is a list of rows and each entry a `[re, im]` pair.
//!
//! Shorthand: `{"builtin": NAME, "d": 2, ...}` with `NAME` one of
//! `identity`, `depolarizing` (`p`), `dephasing` (`p`), `constant`
//! (optional `tau` matrix, default `|0⟩⟨0|`), `random` (`d_out`, `rank`,
//! `seed`).

use serde_json::{json, Map, Value};

use super::channel::QuantumChannel;
use super::constructors::{
    constant_channel, dephasing, depolarizing, identity_channel, random_channel,
};
use super::state::DensityOperator;
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};

fn input(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Input {
        path: path.into(),
        message: message.into(),
    }
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| input(key, "missing field"))
}

fn as_usize(v: &Value, path: &str) -> Result<usize> {
    v.as_u64()
        .filter(|&n| n > 0)
        .map(|n| n as usize)
        .ok_or_else(|| input(path, "expected a positive integer"))
}

fn opt_usize(obj: &Map<String, Value>, key: &str, default: usize) -> Result<usize> {
    obj.get(key).map_or(Ok(default), |v| as_usize(v, key))
}

fn as_f64(v: &Value, path: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| input(path, "expected a number"))
}

fn parse_matrix(v: &Value, path: &str) -> Result<CMatrix> {
    let rows = v
        .as_array()
        .ok_or_else(|| input(path, "expected a list of rows"))?;
    if rows.is_empty() {
        return Err(input(path, "matrix has no rows"));
    }
    let mut data = Vec::new();
    let mut ncols = None;
    for (i, row) in rows.iter().enumerate() {
        let rpath = format!("{path}[{i}]");
        let entries = row
            .as_array()
            .ok_or_else(|| input(&rpath, "expected a list of entries"))?;
        match ncols {
            None => ncols = Some(entries.len()),
            Some(n) if n != entries.len() => {
                return Err(input(&rpath, format!("row has {} entries, expected {n}", entries.len())))
            }
            _ => {}
        }
        for (j, e) in entries.iter().enumerate() {
            let epath = format!("{rpath}[{j}]");
            let pair = e
                .as_array()
                .filter(|p| p.len() == 2)
                .ok_or_else(|| input(&epath, "expected [re, im]"))?;
            data.push(c(
                as_f64(&pair[0], &format!("{epath}[0]"))?,
                as_f64(&pair[1], &format!("{epath}[1]"))?,
            ));
        }
    }
    let ncols = ncols.unwrap_or(0);
    if ncols == 0 {
        return Err(input(path, "matrix has no columns"));
    }
    Ok(CMatrix::from_row_slice(rows.len(), ncols, &data))
}

/// `[[re, im], ...]` rows, the layout read back by the channel parser.
pub fn matrix_to_json(m: &CMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| {
                Value::Array(
                    (0..m.ncols())
                        .map(|j| json!([m[(i, j)].re, m[(i, j)].im]))
                        .collect(),
                )
            })
            .collect(),
    )
}

fn with_path(e: Error, path: &str) -> Error {
    match e {
        Error::Input { .. } => e,
        other => input(path, other.to_string()),
    }
}

fn parse_builtin(obj: &Map<String, Value>, name: &str) -> Result<QuantumChannel> {
    let d = opt_usize(obj, "d", 2)?;
    let p = || -> Result<f64> { as_f64(field(obj, "p")?, "p") };
    let ch = match name {
        "identity" => identity_channel(d),
        "depolarizing" => depolarizing(d, p()?).map_err(|e| with_path(e, "p"))?,
        "dephasing" => dephasing(d, p()?).map_err(|e| with_path(e, "p"))?,
        "constant" => {
            let tau = match obj.get("tau") {
                Some(v) => DensityOperator::new(parse_matrix(v, "tau")?)
                    .map_err(|e| with_path(e, "tau"))?,
                None => {
                    let d_out = opt_usize(obj, "d_out", d)?;
                    let mut m = CMatrix::zeros(d_out, d_out);
                    m[(0, 0)] = c(1.0, 0.0);
                    DensityOperator::new(m)?
                }
            };
            constant_channel(d, &tau)?
        }
        "random" => {
            let d_out = opt_usize(obj, "d_out", d)?;
            let rank = opt_usize(obj, "rank", d * d_out)?;
            let seed = obj.get("seed").map_or(Ok(0), |v| {
                v.as_u64().ok_or_else(|| input("seed", "expected a nonnegative integer"))
            })?;
            random_channel(d, d_out, rank, seed).map_err(|e| with_path(e, "rank"))?
        }
        other => return Err(input("builtin", format!("unknown builtin channel `{other}`"))),
    };
    Ok(ch)
}

pub fn channel_from_json(v: &Value) -> Result<QuantumChannel> {
    let obj = v
        .as_object()
        .ok_or_else(|| input("$", "channel description must be a JSON object"))?;
    if let Some(b) = obj.get("builtin") {
        let name = b
            .as_str()
            .ok_or_else(|| input("builtin", "expected a string"))?;
        return parse_builtin(obj, name);
    }
    let d_in = as_usize(field(obj, "d_in")?, "d_in")?;
    let d_out = as_usize(field(obj, "d_out")?, "d_out")?;
    let list = field(obj, "kraus")?
        .as_array()
        .ok_or_else(|| input("kraus", "expected a list of matrices"))?;
    if list.is_empty() {
        return Err(input("kraus", "at least one Kraus operator is required"));
    }
    let mut kraus = Vec::with_capacity(list.len());
    for (k, m) in list.iter().enumerate() {
        let path = format!("kraus[{k}]");
        let mat = parse_matrix(m, &path)?;
        if mat.shape() != (d_out, d_in) {
            return Err(input(
                path,
                format!("shape {}x{} differs from d_out x d_in = {d_out}x{d_in}", mat.nrows(), mat.ncols()),
            ));
        }
        kraus.push(mat);
    }
    QuantumChannel::new(d_in, d_out, kraus).map_err(|e| with_path(e, "kraus"))
}

pub fn channel_to_json(n: &QuantumChannel) -> Value {
    json!({
        "d_in": n.d_in(),
        "d_out": n.d_out(),
        "kraus": n.kraus().iter().map(matrix_to_json).collect::<Vec<_>>(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::random_channel;

    #[test]
    fn round_trip() {
        let n = random_channel(2, 3, 2, 4).unwrap();
        let back = channel_from_json(&channel_to_json(&n)).unwrap();
        assert!(back.approx_eq(&n));
    }

    #[test]
    fn builtins() {
        let v = json!({"builtin": "depolarizing", "d": 2, "p": 0.3});
        assert!(channel_from_json(&v)
            .unwrap()
            .approx_eq(&depolarizing(2, 0.3).unwrap()));
        let v = json!({"builtin": "constant"});
        assert_eq!(channel_from_json(&v).unwrap().d_out(), 2);
        let v = json!({"builtin": "teleport"});
        assert!(matches!(channel_from_json(&v), Err(Error::Input { path, .. }) if path == "builtin"));
    }

    #[test]
    fn error_paths() {
        let v = json!({"d_in": 2, "d_out": 2});
        assert!(matches!(channel_from_json(&v), Err(Error::Input { path, .. }) if path == "kraus"));
        let v = json!({"d_in": 2, "d_out": 2, "kraus": [[[[1, 0], [0, 0]], [[0, 0], [1]]]]});
        assert!(
            matches!(channel_from_json(&v), Err(Error::Input { path, .. }) if path == "kraus[0][1][1]")
        );
        let v = json!({"d_in": 2, "d_out": 2, "kraus": [[[[1, 0], [0, 0]], [[0, 0], [0, 0]]]]});
        assert!(matches!(channel_from_json(&v), Err(Error::Input { path, .. }) if path == "kraus"));
        let v = json!({"builtin": "dephasing", "p": 2.0});
        assert!(matches!(channel_from_json(&v), Err(Error::Input { path, .. }) if path == "p"));
    }
}
