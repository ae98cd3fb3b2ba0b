//! Latent-factor generator for desk-scale experiments.
//!
//! Users and items get standard-normal latent vectors. Each categorical
//! feature is an equal-frequency quantization of one latent coordinate, so
//! features genuinely predict preferences. User coordinates beyond
//! `user_fields` are not exposed through any feature: that part of a user's
//! taste can only be recovered from their interactions.

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

use super::dataset::{Block, Dataset, EntityTable, Interaction, RatingKind};
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::tensor::Tensor;

#[derive(Clone, Debug)]
pub struct SyntheticSpec {
    pub users: usize,
    pub items: usize,
    pub latent_dim: usize,
    /// Number of user features; feature `f` quantizes latent coordinate `f`.
    pub user_fields: usize,
    /// Number of item features; feature `f` quantizes latent coordinate `f`.
    pub item_fields: usize,
    pub cardinality: usize,
    /// Share of observed user x item pairs (outside the block, if any).
    pub density: f64,
    pub noise: f64,
    pub kind: RatingKind,
    /// Fully-observed block `(users, items)` made of the first users and items.
    pub block: Option<(usize, usize)>,
    /// Social edges to each user's nearest neighbours in latent space.
    pub social_neighbors: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            users: 500,
            items: 200,
            latent_dim: 8,
            user_fields: 4,
            item_fields: 8,
            cardinality: 4,
            density: 0.2,
            noise: 0.1,
            kind: RatingKind::Binary,
            block: None,
            social_neighbors: 0,
            seed: 0,
        }
    }
}

/// Generated dataset together with the latents that produced it.
#[derive(Clone, Debug)]
pub struct SyntheticData {
    pub dataset: Dataset,
    pub user_latents: Tensor,
    pub item_latents: Tensor,
}

impl SyntheticData {
    /// Noise-free preference score used by the generator.
    pub fn oracle_score(&self, user: usize, item: usize) -> f64 {
        latent_score(self.user_latents.row_slice(user), self.item_latents.row_slice(item))
    }
}

pub fn latent_score(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    dot / (u.len() as f64).sqrt()
}

fn rating_from_score(kind: RatingKind, score: f64) -> f64 {
    match kind {
        RatingKind::Binary => {
            if score > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        RatingKind::Scale { min, max } => {
            let mid = (min + max) as f64 / 2.0;
            let spread = (max - min) as f64 / 2.5;
            (mid + spread * score).round().clamp(min as f64, max as f64)
        }
    }
}

fn latents(rng: &mut impl Rng, n: usize, dim: usize) -> Tensor {
    let data = (0..n * dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    Tensor::new(n, dim, data).expect("positive sizes")
}

/// Equal-frequency bins of coordinate `coord` across all rows.
fn quantize(latent: &Tensor, coord: usize, bins: usize) -> Vec<usize> {
    let n = latent.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| latent.get(a, coord).total_cmp(&latent.get(b, coord)).then(a.cmp(&b)));
    let mut out = vec![0; n];
    for (rank, &k) in order.iter().enumerate() {
        out[k] = rank * bins / n;
    }
    out
}

fn entity_table(prefix: &str, field_prefix: &str, latent: &Tensor, fields: usize, bins: usize) -> Result<EntityTable> {
    let columns: Vec<Vec<usize>> = (0..fields).map(|f| quantize(latent, f, bins)).collect();
    let rows = (0..latent.rows())
        .map(|k| {
            let values = columns.iter().map(|c| format!("b{}", c[k])).collect();
            (format!("{prefix}{k}"), values)
        })
        .collect();
    EntityTable::new((1..=fields).map(|f| format!("{field_prefix}{f}")).collect(), rows)
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    if spec.users == 0 || spec.items == 0 || spec.latent_dim == 0 {
        return Err(Error::Data("synthetic sizes must be positive".into()));
    }
    if spec.user_fields > spec.latent_dim || spec.item_fields > spec.latent_dim {
        return Err(Error::Data("feature count cannot exceed the latent dimension".into()));
    }
    if spec.user_fields == 0 || spec.item_fields == 0 || spec.cardinality == 0 {
        return Err(Error::Data("synthetic entities need at least one feature".into()));
    }
    if !(0.0..=1.0).contains(&spec.density) {
        return Err(Error::Data("density must lie in [0, 1]".into()));
    }
    let (block_users, block_items) = spec.block.unwrap_or((0, 0));
    if block_users > spec.users || block_items > spec.items {
        return Err(Error::Data("block exceeds the dataset".into()));
    }

    let user_latents = latents(&mut stream_rng(spec.seed, "user-latents", 0), spec.users, spec.latent_dim);
    let item_latents = latents(&mut stream_rng(spec.seed, "item-latents", 0), spec.items, spec.latent_dim);
    let users = entity_table("u", "f", &user_latents, spec.user_fields, spec.cardinality)?;
    let items = entity_table("i", "g", &item_latents, spec.item_fields, spec.cardinality)?;

    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for u in 0..block_users {
        for i in 0..block_items {
            pairs.push((u, i));
        }
    }
    // cells outside the block: the right part of the block rows, then whole rows
    let right = spec.items - block_items;
    let cells = spec.users * spec.items - block_users * block_items;
    if cells > 0 {
        let count = ((cells as f64) * spec.density).round() as usize;
        let mut picked = index::sample(&mut stream_rng(spec.seed, "pairs", 0), cells, count).into_vec();
        picked.sort_unstable();
        pairs.extend(picked.into_iter().map(|c| {
            if c < block_users * right {
                (c / right, block_items + c % right)
            } else {
                let c = c - block_users * right;
                (block_users + c / spec.items, c % spec.items)
            }
        }));
    }

    let mut noise_rng = stream_rng(spec.seed, "noise", 0);
    let interactions = pairs
        .into_iter()
        .map(|(user, item)| {
            let eps: f64 = noise_rng.sample(StandardNormal);
            let score = latent_score(user_latents.row_slice(user), item_latents.row_slice(item));
            Interaction { user, item, rating: rating_from_score(spec.kind, score + spec.noise * eps), timestamp: None }
        })
        .collect();

    let mut social = Vec::new();
    if spec.social_neighbors > 0 {
        for u in 0..spec.users {
            let mut others: Vec<(f64, usize)> = (0..spec.users)
                .filter(|&v| v != u)
                .map(|v| (-latent_score(user_latents.row_slice(u), user_latents.row_slice(v)), v))
                .collect();
            others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            social.extend(others.into_iter().take(spec.social_neighbors).map(|(_, v)| (u, v)));
        }
    }

    let block = spec
        .block
        .filter(|&(u, i)| u > 0 && i > 0)
        .map(|_| Block { users: (0..block_users).collect(), items: (0..block_items).collect() });
    let dataset = Dataset::new(users, items, interactions, social, spec.kind, block)?;
    Ok(SyntheticData { dataset, user_latents, item_latents })
}
