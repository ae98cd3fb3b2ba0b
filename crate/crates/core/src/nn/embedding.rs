use rand::Rng;

use super::params::{embedding_uniform, ModelParams, ParamId};
use crate::error::{Error, Result};
use crate::tensor::{Graph, Var};

/// Row 0 of every table is the out-of-vocabulary row.
pub const OOV_INDEX: usize = 0;

/// Learned lookup from a categorical index to a `dim`-wide vector.
#[derive(Clone, Debug)]
pub struct EmbeddingTable {
    pub weights: ParamId,
    pub vocab: usize,
    pub dim: usize,
}

impl EmbeddingTable {
    pub fn new(params: &mut ModelParams, rng: &mut impl Rng, name: &str, vocab: usize, dim: usize) -> Self {
        assert!(vocab >= 1, "embedding vocabulary must be non-empty");
        let weights = params.push(format!("{name}.weights"), embedding_uniform(rng, vocab, dim));
        EmbeddingTable { weights, vocab, dim }
    }

    /// Rows for `ids`; indices past the vocabulary fall back to the OOV row.
    pub fn lookup(&self, g: &mut Graph, p: &[Var], ids: &[usize]) -> Result<Var> {
        let ids: Vec<usize> = ids.iter().map(|&i| if i < self.vocab { i } else { OOV_INDEX }).collect();
        g.gather_rows(p[self.weights], &ids)
    }
}

/// Concatenation of one looked-up row per table, `1 x sum(dim)`.
pub fn embed_features(g: &mut Graph, p: &[Var], tables: &[EmbeddingTable], values: &[usize]) -> Result<Var> {
    embed_rows(g, p, tables, &[values])
}

/// Batched [`embed_features`]: one output row per entity in `rows`.
pub fn embed_rows<R: AsRef<[usize]>>(g: &mut Graph, p: &[Var], tables: &[EmbeddingTable], rows: &[R]) -> Result<Var> {
    if tables.is_empty() {
        return Err(Error::Block("embed_features needs at least one table".into()));
    }
    for r in rows {
        if r.as_ref().len() != tables.len() {
            return Err(Error::Block(format!(
                "embed_features: {} values for {} tables",
                r.as_ref().len(),
                tables.len()
            )));
        }
    }
    let parts = tables
        .iter()
        .enumerate()
        .map(|(f, table)| {
            let ids: Vec<usize> = rows.iter().map(|r| r.as_ref()[f]).collect();
            table.lookup(g, p, &ids)
        })
        .collect::<Result<Vec<_>>>()?;
    if parts.len() == 1 {
        return Ok(parts[0]);
    }
    g.concat(&parts)
}
