use super::graph::{Axis, Graph, Var};
use crate::error::{Error, Result};

/// Probability clamp applied inside binary cross-entropy.
pub const BCE_EPSILON: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossKind {
    Mse,
    Bce,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::Mse => "mse",
            LossKind::Bce => "bce",
        }
    }
}

/// Mean squared error or binary cross-entropy between `pred` and `target`,
/// returned as a `1 x 1` node.
pub fn loss(g: &mut Graph, kind: LossKind, pred: Var, target: Var) -> Result<Var> {
    if g.shape(pred) != g.shape(target) {
        return Err(Error::Shape { op: "loss", lhs: g.shape(pred), rhs: g.shape(target) });
    }
    match kind {
        LossKind::Mse => {
            let diff = g.sub(pred, target)?;
            let sq = g.mul(diff, diff)?;
            g.reduce_mean(sq, Axis::All)
        }
        LossKind::Bce => {
            if let Some(bad) = g.value(target).data().iter().find(|&&t| t != 0.0 && t != 1.0) {
                return Err(Error::Loss(format!("bce target {bad} is not 0 or 1")));
            }
            let p = g.clamp(pred, BCE_EPSILON, 1.0 - BCE_EPSILON)?;
            let one = g.scalar(1.0);
            let ln_p = g.ln(p)?;
            let q = g.sub(one, p)?;
            let ln_q = g.ln(q)?;
            let t_comp = g.sub(one, target)?;
            let pos = g.mul(target, ln_p)?;
            let neg = g.mul(t_comp, ln_q)?;
            let total = g.add(pos, neg)?;
            let mean = g.reduce_mean(total, Axis::All)?;
            g.neg(mean)
        }
    }
}
