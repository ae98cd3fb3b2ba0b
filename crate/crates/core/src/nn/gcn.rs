use rand::Rng;

use super::params::{glorot_uniform, ModelParams, ParamId};
use crate::error::{Error, Result};
use crate::tensor::{Graph, Tensor, Var};

/// Symmetric normalisation with self-loops, `D^-1/2 (A + I) D^-1/2`.
///
/// `edges` are undirected; duplicates are merged. Self-loops in the input are
/// rejected because the identity is added here.
pub fn normalized_adjacency(edges: &[(usize, usize)], n: usize) -> Result<Tensor> {
    if n == 0 {
        return Err(Error::Block("normalized_adjacency needs at least one node".into()));
    }
    let mut a = Tensor::identity(n);
    for &(u, v) in edges {
        if u >= n || v >= n {
            return Err(Error::Block(format!("edge ({u}, {v}) out of range for {n} nodes")));
        }
        if u == v {
            return Err(Error::Block(format!("self-loop on node {u}")));
        }
        a.set(u, v, 1.0);
        a.set(v, u, 1.0);
    }
    let inv_sqrt: Vec<f64> = (0..n).map(|i| 1.0 / a.row_slice(i).iter().sum::<f64>().sqrt()).collect();
    for i in 0..n {
        for j in 0..n {
            let v = a.get(i, j);
            if v != 0.0 {
                a.set(i, j, v * inv_sqrt[i] * inv_sqrt[j]);
            }
        }
    }
    Ok(a)
}

/// One propagation step `relu(A_hat H W)`.
pub fn gcn_layer_forward(g: &mut Graph, a_hat: Var, h: Var, w: Var) -> Result<Var> {
    let (n, m) = g.shape(a_hat);
    if n != m || g.shape(h).0 != n {
        return Err(Error::Shape { op: "gcn_layer", lhs: (n, m), rhs: g.shape(h) });
    }
    let propagated = g.matmul(a_hat, h)?;
    let mixed = g.matmul(propagated, w)?;
    g.relu(mixed)
}

/// Stack of GCN layers with its own weights.
#[derive(Clone, Debug)]
pub struct Gcn {
    pub layers: Vec<ParamId>,
}

impl Gcn {
    /// `dims` lists the node feature width followed by each layer's width.
    pub fn new(params: &mut ModelParams, rng: &mut impl Rng, name: &str, dims: &[usize]) -> Self {
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| params.push(format!("{name}.{i}.weight"), glorot_uniform(rng, w[0], w[1])))
            .collect();
        Gcn { layers }
    }

    pub fn forward(&self, g: &mut Graph, p: &[Var], a_hat: Var, features: Var) -> Result<Var> {
        let mut h = features;
        for &w in &self.layers {
            h = gcn_layer_forward(g, a_hat, h, p[w])?;
        }
        Ok(h)
    }
}
