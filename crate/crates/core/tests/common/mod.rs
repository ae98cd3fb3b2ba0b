//! Fixtures and independent oracles shared by the integration tests.
#![allow(dead_code)]

use coldstart::data::{Dataset, EntityTable, Episode, Group, Interaction, RatingKind};
use coldstart::nn::{
    deepset_forward, fm_interaction, gcn_layer_forward, normalized_adjacency, predict_score, self_attention_forward,
    Activation, Mlp, Model, ModelContext, ModelKind, ModelParams, ModelSpec, Task,
};
use coldstart::tensor::{check_gradients, Axis, Graph, Tensor, Var};
use coldstart::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    Tensor::new(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// `sum(v * w)`: turns any node into a scalar with a generic gradient.
pub fn weighted_sum(g: &mut Graph, v: Var, w: &Tensor) -> Result<Var> {
    let wv = g.leaf(w.clone());
    let p = g.mul(v, wv)?;
    g.reduce_sum(p, Axis::All)
}

/// Entity table with ids `{prefix}{k}` and `fields` columns cycling
/// through `cardinality` values.
pub fn table(prefix: &str, n: usize, fields: usize, cardinality: usize) -> EntityTable {
    let names = (1..=fields).map(|f| format!("{}{f}", if prefix == "u" { "f" } else { "g" })).collect();
    let rows = (0..n)
        .map(|k| {
            let values = (0..fields).map(|f| format!("v{}", (k + f) % cardinality)).collect();
            (format!("{prefix}{k}"), values)
        })
        .collect();
    EntityTable::new(names, rows).unwrap()
}

pub fn interaction(user: usize, item: usize, rating: f64) -> Interaction {
    Interaction { user, item, rating, timestamp: None }
}

pub fn dataset(users: usize, items: usize, ratings: &[(usize, usize, f64)], kind: RatingKind) -> Dataset {
    let interactions = ratings.iter().map(|&(u, i, r)| interaction(u, i, r)).collect();
    Dataset::new(table("u", users, 1, 2), table("i", items, 1, 2), interactions, vec![], kind, None).unwrap()
}

pub fn episode(user: usize, support: &[(usize, f64)], target: &[(usize, f64)]) -> Episode {
    Episode { id: format!("e{user}"), user, group: Group::Train, support: support.to_vec(), target: target.to_vec() }
}

/// Scalar quadratic: a constant model `theta` under MSE against rating 1 on
/// both halves, so every loss is `(theta - 1)^2`. `theta` starts at 0.
pub struct Quadratic {
    pub model: Model,
    pub ctx: ModelContext,
    pub params: ModelParams,
    pub episode: Episode,
}

pub fn quadratic() -> Quadratic {
    let d = dataset(1, 2, &[(0, 0, 1.0), (0, 1, 1.0)], RatingKind::Scale { min: 0, max: 1 });
    let mut spec = ModelSpec::for_dataset(&d, Task::Rating);
    spec.kind = ModelKind::Constant;
    let (model, params) = Model::new(&spec, 0).unwrap();
    let ctx = ModelContext::new(&spec, &d).unwrap();
    Quadratic { model, ctx, params, episode: episode(0, &[(0, 1.0)], &[(1, 1.0)]) }
}

/// A framework model small enough for full finite differences.
pub fn tiny_framework(task: Task) -> (Model, ModelContext, ModelParams, Vec<Episode>) {
    let mut r = rng(5);
    let ratings: Vec<(usize, usize, f64)> = (0..4)
        .flat_map(|u| (0..6).map(move |i| (u, i)))
        .map(|(u, i)| (u, i, if r.gen_bool(0.5) { 1.0 } else { 0.0 }))
        .collect();
    let d = dataset(4, 6, &ratings, RatingKind::Binary);
    let mut spec = ModelSpec::for_dataset(&d, task);
    spec.components.interactions = false;
    spec.embedding_dim = 2;
    spec.user_dim = 3;
    spec.item_dim = 3;
    spec.hidden = 4;
    let (model, params) = Model::new(&spec, 11).unwrap();
    let ctx = ModelContext::new(&spec, &d).unwrap();
    let rating = |u: usize, i: usize| ratings[u * 6 + i].2;
    let episodes = (0..4)
        .map(|u| {
            episode(
                u,
                &[(0, rating(u, 0)), (1, rating(u, 1)), (2, rating(u, 2))],
                &[(3, rating(u, 3)), (4, rating(u, 4)), (5, rating(u, 5))],
            )
        })
        .collect();
    (model, ctx, params, episodes)
}

/// Relative error `|a - b| / max(|a|, |b|, 1e-8)` over flattened vectors.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / na.max(nb).max(1e-8)
}

/// Central differences of `f` at every coordinate of `params`.
pub fn finite_difference(params: &ModelParams, h: f64, f: impl Fn(&ModelParams) -> f64) -> Vec<f64> {
    let mut out = Vec::new();
    for (k, t) in params.tensors().iter().enumerate() {
        for j in 0..t.len() {
            let shifted = |delta: f64| {
                let mut tensors = params.tensors().to_vec();
                tensors[k].data_mut()[j] += delta;
                f(&params.with_tensors(tensors).unwrap())
            };
            out.push((shifted(h) - shifted(-h)) / (2.0 * h));
        }
    }
    out
}

type BlockFn = Box<dyn Fn(&mut Graph, &[Var]) -> Result<Var>>;

/// One random instance of each composed block, as a scalar function of its
/// parameters and inputs.
fn block_instance(name: &str, r: &mut ChaCha8Rng) -> (BlockFn, Vec<Tensor>) {
    match name {
        "deepset" => {
            let mut params = ModelParams::new();
            let phi = Mlp::new(&mut params, r, "phi", &[3, 4], Activation::Relu);
            let rho = Mlp::new(&mut params, r, "rho", &[4, 2], Activation::Identity);
            let n = params.len();
            let members = random_tensor(r, 5, 3);
            let ids: Vec<usize> = vec![4, 1, 3, 0, 2];
            let w = random_tensor(r, 1, 2);
            let mut points = params.tensors().to_vec();
            points.push(members);
            let f: BlockFn = Box::new(move |g, v| {
                let out = deepset_forward(g, &v[..n], v[n], &ids, &phi, &rho)?;
                weighted_sum(g, out, &w)
            });
            (f, points)
        }
        "self_attention" => {
            let w = random_tensor(r, 4, 3);
            let points =
                vec![random_tensor(r, 4, 3), random_tensor(r, 3, 3), random_tensor(r, 3, 3), random_tensor(r, 3, 3)];
            let f: BlockFn = Box::new(move |g, v| {
                let (out, _) = self_attention_forward(g, v[0], v[1], v[2], v[3])?;
                weighted_sum(g, out, &w)
            });
            (f, points)
        }
        "gcn_layer" => {
            let a_hat = normalized_adjacency(&[(0, 1), (1, 2), (2, 3), (0, 3), (1, 3)], 4).unwrap();
            let w = random_tensor(r, 4, 2);
            let points = vec![random_tensor(r, 4, 3), random_tensor(r, 3, 2)];
            let f: BlockFn = Box::new(move |g, v| {
                let a = g.leaf(a_hat.clone());
                let out = gcn_layer_forward(g, a, v[0], v[1])?;
                weighted_sum(g, out, &w)
            });
            (f, points)
        }
        "fm" => {
            let points = vec![random_tensor(r, 4, 3)];
            let f: BlockFn = Box::new(move |g, v| fm_interaction(g, v[0]));
            (f, points)
        }
        "predictor" => {
            let mut params = ModelParams::new();
            let head = Mlp::new(&mut params, r, "head", &[5, 4, 1], Activation::Sigmoid);
            let n = params.len();
            let w = random_tensor(r, 3, 1);
            let mut points = params.tensors().to_vec();
            points.push(random_tensor(r, 1, 2));
            points.push(random_tensor(r, 3, 3));
            let f: BlockFn = Box::new(move |g, v| {
                let out = predict_score(g, &v[..n], v[n], v[n + 1], &head)?;
                weighted_sum(g, out, &w)
            });
            (f, points)
        }
        other => panic!("unknown block {other}"),
    }
}

pub const BLOCKS: [&str; 5] = ["deepset", "self_attention", "gcn_layer", "fm", "predictor"];

/// Largest finite-difference relative error per block over `instances`
/// random instances.
pub fn block_gradient_errors(instances: usize, seed: u64) -> Vec<(&'static str, f64)> {
    let mut r = rng(seed);
    BLOCKS
        .iter()
        .map(|&name| {
            let worst = (0..instances)
                .map(|_| {
                    let (f, points) = block_instance(name, &mut r);
                    check_gradients(|g, v| f(g, v), &points, 1e-5).unwrap()
                })
                .fold(0.0, f64::max);
            (name, worst)
        })
        .collect()
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for rest in permutations(n - 1) {
        for pos in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(pos, n - 1);
            out.push(p);
        }
    }
    out
}

fn dcg_of(order: &[usize], rels: &[f64], k: usize) -> f64 {
    order.iter().take(k).enumerate().map(|(pos, &i)| rels[i] / ((pos + 2) as f64).log2()).sum()
}

/// nDCG@k by enumeration: the ideal DCG is the best over every ordering and
/// the model's ordering is the one permutation that lists scores in
/// descending order with ties by position.
pub fn ndcg_oracle(scores: &[f64], rels: &[f64], k: usize) -> f64 {
    let perms = permutations(scores.len());
    let ideal = perms.iter().map(|p| dcg_of(p, rels, k)).fold(f64::NEG_INFINITY, f64::max);
    let ranked = perms
        .iter()
        .find(|p| p.windows(2).all(|w| scores[w[0]] > scores[w[1]] || (scores[w[0]] == scores[w[1]] && w[0] < w[1])))
        .expect("exactly one sorted permutation");
    if ideal == 0.0 {
        1.0
    } else {
        dcg_of(ranked, rels, k) / ideal
    }
}

/// AUC by counting every positive/negative pair, ties as one half.
pub fn auc_oracle(scores: &[f64], labels: &[f64]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        for (j, &lj) in labels.iter().enumerate() {
            if li == 1.0 && lj == 0.0 {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}
