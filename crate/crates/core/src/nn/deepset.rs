use std::collections::HashSet;

use super::mlp::Mlp;
use crate::error::{Error, Result};
use crate::tensor::{Axis, Graph, Var};

/// Permutation-invariant set encoder `rho(sum_i phi(x_i))`.
#[derive(Clone, Debug)]
pub struct DeepSet {
    pub phi: Mlp,
    pub rho: Mlp,
}

impl DeepSet {
    /// Encodes the rows of `members`; `ids[k]` identifies row `k`.
    ///
    /// Rows are summed in ascending id order, so the output is bit-identical
    /// under any reordering of `(id, row)` pairs.
    pub fn forward(&self, g: &mut Graph, p: &[Var], members: Var, ids: &[usize]) -> Result<Var> {
        deepset_forward(g, p, members, ids, &self.phi, &self.rho)
    }
}

pub fn deepset_forward(g: &mut Graph, p: &[Var], members: Var, ids: &[usize], phi: &Mlp, rho: &Mlp) -> Result<Var> {
    let (n, d) = g.shape(members);
    if ids.len() != n {
        return Err(Error::Block(format!("deepset: {} ids for {n} members", ids.len())));
    }
    if d != phi.input_width() {
        return Err(Error::Shape { op: "deepset", lhs: (n, d), rhs: (phi.input_width(), phi.output_width()) });
    }
    if ids.iter().collect::<HashSet<_>>().len() != ids.len() {
        return Err(Error::Block("deepset: member ids must be distinct".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&k| ids[k]);
    let sorted = if order.iter().enumerate().all(|(i, &k)| i == k) { members } else { g.gather_rows(members, &order)? };
    let encoded = phi.forward(g, p, sorted)?;
    let pooled = g.reduce_sum(encoded, Axis::Rows)?;
    rho.forward(g, p, pooled)
}
