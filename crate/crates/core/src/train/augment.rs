use crate::data::{Episode, RatingKind};
use crate::error::Result;
use crate::tensor::Tensor;

/// One-hot rating slots appended to item inputs: support rows carry their
/// rating, target rows are all zero.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedLabels {
    pub support: Tensor,
    pub target: Tensor,
}

pub fn augment_support_labels(ep: &Episode, kind: RatingKind) -> Result<AugmentedLabels> {
    Ok(AugmentedLabels {
        support: one_hot_labels(&ep.support, kind)?,
        target: Tensor::zeros(ep.target.len().max(1), kind.label_slots()),
    })
}

/// `n x slots` one-hot encoding of the ratings in `pairs`.
pub fn one_hot_labels(pairs: &[(usize, f64)], kind: RatingKind) -> Result<Tensor> {
    let mut out = Tensor::zeros(pairs.len().max(1), kind.label_slots());
    for (k, &(_, r)) in pairs.iter().enumerate() {
        out.set(k, kind.label_index(r)?, 1.0);
    }
    Ok(out)
}
