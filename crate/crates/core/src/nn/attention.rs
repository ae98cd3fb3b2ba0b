use rand::Rng;

use super::params::{glorot_uniform, ModelParams, ParamId};
use crate::error::{Error, Result};
use crate::tensor::{Graph, Var};

/// Single-head self-attention with learned query, key and value maps.
#[derive(Clone, Debug)]
pub struct SelfAttention {
    pub query: ParamId,
    pub key: ParamId,
    pub value: ParamId,
    pub dim: usize,
}

impl SelfAttention {
    pub fn new(params: &mut ModelParams, rng: &mut impl Rng, name: &str, dim: usize) -> Self {
        SelfAttention {
            query: params.push(format!("{name}.query"), glorot_uniform(rng, dim, dim)),
            key: params.push(format!("{name}.key"), glorot_uniform(rng, dim, dim)),
            value: params.push(format!("{name}.value"), glorot_uniform(rng, dim, dim)),
            dim,
        }
    }

    pub fn forward(&self, g: &mut Graph, p: &[Var], items: Var) -> Result<Var> {
        self_attention_forward(g, items, p[self.query], p[self.key], p[self.value]).map(|(out, _)| out)
    }
}

/// `softmax_rows(Q K^T / sqrt(d)) V` with `Q = R Wq`, `K = R Wk`, `V = R Wv`.
/// Returns the updated rows and the attention weights.
pub fn self_attention_forward(g: &mut Graph, items: Var, wq: Var, wk: Var, wv: Var) -> Result<(Var, Var)> {
    let (_, d) = g.shape(items);
    for w in [wq, wk, wv] {
        if g.shape(w) != (d, d) {
            return Err(Error::Shape { op: "self_attention", lhs: g.shape(items), rhs: g.shape(w) });
        }
    }
    let q = g.matmul(items, wq)?;
    let k = g.matmul(items, wk)?;
    let v = g.matmul(items, wv)?;
    let kt = g.transpose(k)?;
    let logits = g.matmul(q, kt)?;
    let logits = g.scale(logits, 1.0 / (d as f64).sqrt())?;
    let weights = g.softmax_rows(logits)?;
    let out = g.matmul(weights, v)?;
    Ok((out, weights))
}
