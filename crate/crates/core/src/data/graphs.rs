//! Related-user graph heuristics. All builders return undirected edges as
//! sorted `(a, b)` pairs with `a < b`, without duplicates.

use std::collections::{BTreeMap, HashMap};

use super::dataset::Dataset;
use crate::error::{Error, Result};

/// Threshold used for the same-rating graph unless configured otherwise.
pub const DEFAULT_SAME_RATING_K: usize = 3;

/// Connects two users when they gave the same rating to at least `k` items.
pub fn build_same_rating_graph(d: &Dataset, k: usize) -> Vec<(usize, usize)> {
    assert!(k >= 1, "same-rating threshold must be at least 1");
    // item -> rating bits -> users
    let mut groups: BTreeMap<(usize, u64), Vec<usize>> = BTreeMap::new();
    for it in &d.interactions {
        groups.entry((it.item, it.rating.to_bits())).or_default().push(it.user);
    }
    let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
    for users in groups.values_mut() {
        users.sort_unstable();
        for (x, &a) in users.iter().enumerate() {
            for &b in &users[x + 1..] {
                *counts.entry((a, b)).or_default() += 1;
            }
        }
    }
    let mut edges: Vec<(usize, usize)> = counts.into_iter().filter(|&(_, c)| c >= k).map(|(e, _)| e).collect();
    edges.sort_unstable();
    edges
}

/// Connects two users sharing the same value of user feature `field`.
pub fn build_same_attribute_graph(d: &Dataset, field: usize) -> Result<Vec<(usize, usize)>> {
    if field >= d.users.fields.len() {
        return Err(Error::Data(format!("user field {field} out of range ({} fields)", d.users.fields.len())));
    }
    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (u, values) in d.users.features.iter().enumerate() {
        classes.entry(values[field]).or_default().push(u);
    }
    let mut edges = Vec::new();
    for members in classes.values() {
        for (x, &a) in members.iter().enumerate() {
            for &b in &members[x + 1..] {
                edges.push((a, b));
            }
        }
    }
    edges.sort_unstable();
    Ok(edges)
}
