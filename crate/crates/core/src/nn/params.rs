use rand::Rng;

use crate::error::{Error, Result};
use crate::tensor::{Graph, Tensor, Var};

/// Index of a parameter inside a [`ModelParams`] collection.
pub type ParamId = usize;

/// Ordered, named collection of parameter tensors.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ModelParams {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ModelParams {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        let name = name.into();
        debug_assert!(!self.names.contains(&name), "duplicate parameter {name}");
        self.names.push(name);
        self.tensors.push(value);
        self.tensors.len() - 1
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id]
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn by_name(&self, name: &str) -> Option<&Tensor> {
        self.names.iter().position(|n| n == name).map(|i| &self.tensors[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    pub fn scalar_count(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    /// Registers every parameter as a leaf of `g`.
    pub fn bind(&self, g: &mut Graph) -> Vec<Var> {
        self.tensors.iter().map(|t| g.leaf(t.clone())).collect()
    }

    /// Reads the current values of `vars` back into a collection with the same names.
    pub fn with_values_from(&self, g: &Graph, vars: &[Var]) -> ModelParams {
        ModelParams { names: self.names.clone(), tensors: vars.iter().map(|v| g.value(*v).clone()).collect() }
    }

    /// Same names and shapes, new values.
    pub fn with_tensors(&self, tensors: Vec<Tensor>) -> Result<ModelParams> {
        if tensors.len() != self.tensors.len() || tensors.iter().zip(&self.tensors).any(|(a, b)| a.shape() != b.shape())
        {
            return Err(Error::Checkpoint("parameter layout mismatch".into()));
        }
        Ok(ModelParams { names: self.names.clone(), tensors })
    }

    /// `self - rate * step`, elementwise over matching tensors.
    pub fn descend(&self, step: &[Tensor], rate: f64) -> ModelParams {
        assert_eq!(step.len(), self.tensors.len());
        let tensors = self
            .tensors
            .iter()
            .zip(step)
            .map(|(p, s)| {
                let mut out = p.clone();
                for (o, d) in out.data_mut().iter_mut().zip(s.data()) {
                    *o -= rate * d;
                }
                out
            })
            .collect();
        ModelParams { names: self.names.clone(), tensors }
    }

    /// Checks that `other` has the same names and shapes.
    pub fn check_layout(&self, other: &ModelParams) -> Result<()> {
        if self.names != other.names {
            return Err(Error::Checkpoint("parameter names differ from the model layout".into()));
        }
        for ((name, a), b) in self.names.iter().zip(&self.tensors).zip(&other.tensors) {
            if a.shape() != b.shape() {
                return Err(Error::Checkpoint(format!(
                    "parameter {name}: expected shape {:?}, found {:?}",
                    a.shape(),
                    b.shape()
                )));
            }
        }
        Ok(())
    }
}

/// Uniform in ±sqrt(6 / (fan_in + fan_out)).
pub fn glorot_uniform(rng: &mut impl Rng, fan_in: usize, fan_out: usize) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let data = (0..fan_in * fan_out).map(|_| rng.gen_range(-limit..=limit)).collect();
    Tensor::new(fan_in, fan_out, data).expect("positive fan sizes")
}

/// Embedding rows uniform in ±1/sqrt(dim).
pub fn embedding_uniform(rng: &mut impl Rng, vocab: usize, dim: usize) -> Tensor {
    let limit = 1.0 / (dim as f64).sqrt();
    let data = (0..vocab * dim).map(|_| rng.gen_range(-limit..=limit)).collect();
    Tensor::new(vocab, dim, data).expect("positive table size")
}
