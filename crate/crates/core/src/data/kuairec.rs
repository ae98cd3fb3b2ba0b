//! Split procedure for datasets with a fully-observed user x item block.

use std::collections::HashSet;

use super::dataset::{Dataset, Interaction};
use super::split::{bundle_from_partition, choose_sorted, fraction_of, SplitBundle, SplitConfig};
use crate::error::{Error, Result};

/// Share of block items, block users and remaining block interactions moved
/// to the item-cold, user-cold and warm sets respectively.
pub const KUAIREC_FRACTION: f64 = 0.1;

/// Positive ("like") label: the watch time is at least twice the video length.
pub fn like_label(watch_time: f64, video_length: f64) -> f64 {
    if watch_time >= 2.0 * video_length {
        1.0
    } else {
        0.0
    }
}

/// The five disjoint interaction sets produced by [`kuairec_partition`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KuairecPartition {
    pub item_cold: Vec<Interaction>,
    pub user_cold: Vec<Interaction>,
    pub warm: Vec<Interaction>,
    pub train: Vec<Interaction>,
    pub user_item_cold: Vec<Interaction>,
    pub cold_items: Vec<usize>,
    pub cold_users: Vec<usize>,
}

impl KuairecPartition {
    /// Named sets in output order.
    pub fn sets(&self) -> [(&'static str, &[Interaction]); 5] {
        [
            ("item_cold", &self.item_cold),
            ("user_cold", &self.user_cold),
            ("warm", &self.warm),
            ("train", &self.train),
            ("user_item_cold", &self.user_item_cold),
        ]
    }

    pub fn test_pool(&self) -> Vec<Interaction> {
        let mut pool = Vec::with_capacity(
            self.item_cold.len() + self.user_cold.len() + self.warm.len() + self.user_item_cold.len(),
        );
        pool.extend_from_slice(&self.item_cold);
        pool.extend_from_slice(&self.user_cold);
        pool.extend_from_slice(&self.warm);
        pool.extend_from_slice(&self.user_item_cold);
        pool
    }
}

/// Runs the four steps in order:
/// 1. a tenth of the block items and all their block interactions become item-cold;
/// 2. a tenth of the block users and their remaining block interactions become user-cold;
/// 3. a tenth of the remaining block interactions become warm, the rest train;
/// 4. every interaction outside the block becomes user-item-cold.
pub fn kuairec_partition(d: &Dataset, seed: u64) -> Result<KuairecPartition> {
    let block = d.block.as_ref().ok_or_else(|| Error::Data("kuairec split requires a fully-observed block".into()))?;
    if block.users.is_empty() || block.items.is_empty() {
        return Err(Error::Data("fully-observed block is empty".into()));
    }
    let block_users: HashSet<usize> = block.users.iter().copied().collect();
    let block_items: HashSet<usize> = block.items.iter().copied().collect();
    let present: HashSet<(usize, usize)> = d
        .interactions
        .iter()
        .filter(|it| block_users.contains(&it.user) && block_items.contains(&it.item))
        .map(|it| (it.user, it.item))
        .collect();
    if present.len() != block.users.len() * block.items.len() {
        return Err(Error::Data(format!(
            "block is not fully observed: {} of {} interactions present",
            present.len(),
            block.users.len() * block.items.len()
        )));
    }

    let cold_items =
        choose_sorted(&block.items, fraction_of(block.items.len(), KUAIREC_FRACTION), seed, "kuairec-items");
    let cold_users =
        choose_sorted(&block.users, fraction_of(block.users.len(), KUAIREC_FRACTION), seed, "kuairec-users");
    let cold_item_set: HashSet<usize> = cold_items.iter().copied().collect();
    let cold_user_set: HashSet<usize> = cold_users.iter().copied().collect();

    let mut part = KuairecPartition { cold_items, cold_users, ..Default::default() };
    let mut remaining = Vec::new();
    for it in &d.interactions {
        let in_block = block_users.contains(&it.user) && block_items.contains(&it.item);
        if !in_block {
            part.user_item_cold.push(*it);
        } else if cold_item_set.contains(&it.item) {
            part.item_cold.push(*it);
        } else if cold_user_set.contains(&it.user) {
            part.user_cold.push(*it);
        } else {
            remaining.push(*it);
        }
    }
    let positions: Vec<usize> = (0..remaining.len()).collect();
    let warm: HashSet<usize> =
        choose_sorted(&positions, fraction_of(remaining.len(), KUAIREC_FRACTION), seed, "kuairec-warm")
            .into_iter()
            .collect();
    for (k, it) in remaining.into_iter().enumerate() {
        if warm.contains(&k) {
            part.warm.push(it);
        } else {
            part.train.push(it);
        }
    }
    Ok(part)
}

/// [`kuairec_partition`] followed by episode construction and group assignment.
pub fn kuairec_split(d: &Dataset, cfg: &SplitConfig, seed: u64) -> Result<(KuairecPartition, SplitBundle)> {
    let part = kuairec_partition(d, seed)?;
    let bundle = bundle_from_partition(d, part.train.clone(), &part.test_pool(), cfg, seed);
    Ok((part, bundle))
}
