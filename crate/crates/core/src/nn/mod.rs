//! Representation blocks: embeddings, MLPs, DeepSet, self-attention, GCN,
//! FM interaction, component averaging and the output head.

mod attention;
mod checkpoint;
mod deepset;
mod embedding;
mod fm;
mod framework;
mod gcn;
mod mlp;
mod params;

pub use attention::{self_attention_forward, SelfAttention};
pub use checkpoint::{
    checkpoint_to_string, load_checkpoint, parse_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_HEADER,
};
pub use deepset::{deepset_forward, DeepSet};
pub use embedding::{embed_features, embed_rows, EmbeddingTable, OOV_INDEX};
pub use fm::fm_interaction;
pub use framework::{
    fm_rows, AdaptScope, Components, Model, ModelContext, ModelKind, ModelSpec, UserGraph, HEAD_PREFIX,
};
pub use gcn::{gcn_layer_forward, normalized_adjacency, Gcn};
pub use mlp::{Activation, Linear, Mlp};
pub use params::{embedding_uniform, glorot_uniform, ModelParams, ParamId};

use crate::error::{Error, Result};
use crate::tensor::{Graph, LossKind, Var};

/// Prediction task; fixes the head's output activation and the loss.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    /// Non-negative score trained with MSE.
    Rating,
    /// Probability trained with BCE.
    Classification,
}

impl Task {
    pub fn activation(self) -> Activation {
        match self {
            Task::Rating => Activation::Relu,
            Task::Classification => Activation::Sigmoid,
        }
    }

    pub fn loss_kind(self) -> LossKind {
        match self {
            Task::Rating => LossKind::Mse,
            Task::Classification => LossKind::Bce,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Rating => "rating",
            Task::Classification => "classification",
        }
    }

    pub fn parse(s: &str) -> Result<Task> {
        match s {
            "rating" => Ok(Task::Rating),
            "classification" => Ok(Task::Classification),
            other => Err(Error::Config(vec![format!("unknown task {other:?}; expected rating or classification")])),
        }
    }
}

/// Elementwise mean of the component vectors, each `1 x d_user`.
pub fn user_representation(g: &mut Graph, components: &[Var]) -> Result<Var> {
    let first =
        *components.first().ok_or_else(|| Error::Block("user_representation needs at least one component".into()))?;
    let shape = g.shape(first);
    let mut total = first;
    for &c in &components[1..] {
        if g.shape(c) != shape {
            return Err(Error::Shape { op: "user_representation", lhs: shape, rhs: g.shape(c) });
        }
        total = g.add(total, c)?;
    }
    g.scale(total, 1.0 / components.len() as f64)
}

/// Head applied to `[user_rep, item_rep]`. `user_rep` may be a single row
/// broadcast against several item rows. The head's own output activation is
/// used, so build it with [`Task::activation`].
pub fn predict_score(g: &mut Graph, p: &[Var], user_rep: Var, item_rep: Var, head: &Mlp) -> Result<Var> {
    let (ur, uc) = g.shape(user_rep);
    let (ir, ic) = g.shape(item_rep);
    if uc + ic != head.input_width() || (ur != ir && ur != 1) {
        return Err(Error::Shape { op: "predict_score", lhs: (ur, uc), rhs: (ir, ic) });
    }
    let user = if ur == ir { user_rep } else { g.broadcast_to(user_rep, (ir, uc))? };
    let x = g.concat(&[user, item_rep])?;
    head.forward(g, p, x)
}
