//! Text checkpoint: a version line, the config fingerprint, the model spec as
//! `key=value` lines, then every parameter as a `param name rows cols` line
//! followed by one line of row-major values in shortest round-trip form.

use std::collections::BTreeMap;
use std::path::Path;

use super::framework::{Model, ModelSpec};
use super::ModelParams;
use crate::data::write_atomic;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const CHECKPOINT_HEADER: &str = "coldstart-checkpoint 1";

#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub model: Model,
    pub params: ModelParams,
    pub fingerprint: String,
}

pub fn checkpoint_to_string(spec: &ModelSpec, params: &ModelParams, fingerprint: &str) -> String {
    let mut out = format!("{CHECKPOINT_HEADER}\nfingerprint {fingerprint}\n");
    for (k, v) in spec.to_pairs() {
        out.push_str(&format!("model.{k}={v}\n"));
    }
    for (name, t) in params.iter() {
        out.push_str(&format!("param {name} {} {}\n", t.rows(), t.cols()));
        let values: Vec<String> = t.data().iter().map(|x| x.to_string()).collect();
        out.push_str(&values.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_checkpoint(source: &str, text: &str) -> Result<Checkpoint> {
    let err = |line: usize, message: String| Error::Parse { path: source.to_string(), line, message };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, CHECKPOINT_HEADER)) => {}
        _ => return Err(err(1, format!("expected header {CHECKPOINT_HEADER:?}"))),
    }
    let fingerprint = match lines.next() {
        Some((_, l)) if l.starts_with("fingerprint ") => l["fingerprint ".len()..].to_string(),
        _ => return Err(err(2, "expected fingerprint line".into())),
    };
    let mut pairs = BTreeMap::new();
    let mut tensors = Vec::new();
    let mut names = Vec::new();
    while let Some((n, line)) = lines.next() {
        if let Some(kv) = line.strip_prefix("model.") {
            let (k, v) = kv.split_once('=').ok_or_else(|| err(n, "expected model.key=value".into()))?;
            pairs.insert(k.to_string(), v.to_string());
        } else if let Some(rest) = line.strip_prefix("param ") {
            let parts: Vec<&str> = rest.split(' ').collect();
            if parts.len() != 3 {
                return Err(err(n, "expected param NAME ROWS COLS".into()));
            }
            let rows: usize = parts[1].parse().map_err(|_| err(n, "invalid row count".into()))?;
            let cols: usize = parts[2].parse().map_err(|_| err(n, "invalid column count".into()))?;
            let (vn, values) = lines.next().ok_or_else(|| err(n + 1, "missing parameter values".into()))?;
            let data: Vec<f64> = values
                .split(' ')
                .map(|s| s.parse::<f64>().map_err(|_| err(vn, format!("invalid value {s:?}"))))
                .collect::<Result<_>>()?;
            let t = Tensor::new(rows, cols, data).map_err(|e| err(vn, e.to_string()))?;
            names.push(parts[0].to_string());
            tensors.push(t);
        } else if !line.is_empty() {
            return Err(err(n, format!("unexpected line {line:?}")));
        }
    }
    let spec = ModelSpec::from_pairs(&pairs)?;
    let (model, fresh) = Model::new(&spec, 0)?;
    if fresh.names() != names.as_slice() {
        return Err(Error::Checkpoint(format!("{source}: parameter names do not match the model layout")));
    }
    let params = fresh.with_tensors(tensors)?;
    Ok(Checkpoint { model, params, fingerprint })
}

pub fn save_checkpoint(path: &Path, spec: &ModelSpec, params: &ModelParams, fingerprint: &str) -> Result<()> {
    write_atomic(path, checkpoint_to_string(spec, params, fingerprint).as_bytes())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_checkpoint(&path.display().to_string(), &text)
}
