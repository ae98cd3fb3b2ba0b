use rand::Rng;

use super::params::{glorot_uniform, ModelParams, ParamId};
use crate::error::Result;
use crate::tensor::{Graph, Tensor, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    pub fn apply(self, g: &mut Graph, x: Var) -> Result<Var> {
        match self {
            Activation::Relu => g.relu(x),
            Activation::Sigmoid => g.sigmoid(x),
            Activation::Identity => Ok(x),
        }
    }
}

/// Affine map `x W + b` with `W: in x out`, `b: 1 x out`.
#[derive(Clone, Debug)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: ParamId,
    pub input: usize,
    pub output: usize,
}

impl Linear {
    pub fn new(params: &mut ModelParams, rng: &mut impl Rng, name: &str, input: usize, output: usize) -> Self {
        let weight = params.push(format!("{name}.weight"), glorot_uniform(rng, input, output));
        let bias = params.push(format!("{name}.bias"), Tensor::zeros(1, output));
        Linear { weight, bias, input, output }
    }

    pub fn forward(&self, g: &mut Graph, p: &[Var], x: Var) -> Result<Var> {
        let h = g.matmul(x, p[self.weight])?;
        g.add(h, p[self.bias])
    }
}

/// Multi-layer perceptron: relu between layers, configurable output activation.
#[derive(Clone, Debug)]
pub struct Mlp {
    pub layers: Vec<Linear>,
    pub output: Activation,
}

impl Mlp {
    /// `dims` lists the input width followed by each layer's output width.
    pub fn new(params: &mut ModelParams, rng: &mut impl Rng, name: &str, dims: &[usize], output: Activation) -> Self {
        assert!(dims.len() >= 2, "an MLP needs at least one layer");
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| Linear::new(params, rng, &format!("{name}.{i}"), w[0], w[1]))
            .collect();
        Mlp { layers, output }
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].input
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map_or(0, |l| l.output)
    }

    pub fn forward(&self, g: &mut Graph, p: &[Var], x: Var) -> Result<Var> {
        let last = self.layers.len() - 1;
        let mut h = x;
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.forward(g, p, h)?;
            h = if i == last { self.output.apply(g, h)? } else { g.relu(h)? };
        }
        Ok(h)
    }
}
