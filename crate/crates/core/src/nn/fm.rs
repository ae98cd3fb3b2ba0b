use crate::error::{Error, Result};
use crate::tensor::{Axis, Graph, Var};

/// Second-order factorization-machine term over `f x d` field embeddings:
/// `1/2 sum_d [(sum_f x)^2 - sum_f x^2]`, i.e. the sum of pairwise dot products.
pub fn fm_interaction(g: &mut Graph, fields: Var) -> Result<Var> {
    let (f, _) = g.shape(fields);
    if f < 2 {
        return Err(Error::Block(format!("fm_interaction needs at least 2 fields, got {f}")));
    }
    let total = g.reduce_sum(fields, Axis::Rows)?;
    let total_sq = g.mul(total, total)?;
    let sq = g.mul(fields, fields)?;
    let sum_sq = g.reduce_sum(sq, Axis::Rows)?;
    let diff = g.sub(total_sq, sum_sq)?;
    let s = g.reduce_sum(diff, Axis::All)?;
    g.scale(s, 0.5)
}
