//! Browser demo: a MAML trace on a scalar quadratic, a ranking-metric
//! explorer and a self-attention heatmap. Every export returns JSON; failures
//! come back as `{"error": "..."}`.

use coldstart::data::{Dataset, EntityTable, Episode, Group, Interaction, RatingKind};
use coldstart::eval::{ndcg_at_k, roc_auc};
use coldstart::nn::{glorot_uniform, self_attention_forward, Model, ModelContext, ModelKind, ModelSpec, Task};
use coldstart::tensor::{Graph, Tensor};
use coldstart::train::{adapt_params, meta_update, MetaOrder, TrainConfig};
use coldstart::{stream_rng, Result};
use rand::Rng;
use serde_json::{json, Value};
use wasm_bindgen::prelude::wasm_bindgen;

fn respond(r: Result<Value>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

fn quadratic_setup(target: f64) -> Result<(Model, ModelContext, coldstart::nn::ModelParams, Episode)> {
    let users = EntityTable::new(vec!["f".into()], vec![("u".into(), vec!["a".into()])])?;
    let items =
        EntityTable::new(vec!["g".into()], vec![("s".into(), vec!["a".into()]), ("t".into(), vec!["a".into()])])?;
    let interactions = [0, 1].map(|item| Interaction { user: 0, item, rating: target, timestamp: None }).to_vec();
    let lo = target.floor().min(0.0) as i64;
    let hi = target.ceil().max(1.0) as i64;
    let d = Dataset::new(users, items, interactions, vec![], RatingKind::Scale { min: lo, max: hi }, None)?;
    let mut spec = ModelSpec::for_dataset(&d, Task::Rating);
    spec.kind = ModelKind::Constant;
    let (model, params) = Model::new(&spec, 0)?;
    let ctx = ModelContext::new(&spec, &d)?;
    let ep =
        Episode { id: "e".into(), user: 0, group: Group::Train, support: vec![(0, target)], target: vec![(1, target)] };
    Ok((model, ctx, params, ep))
}

/// Outer iterations of MAML on the loss `(theta - target)^2`, starting from
/// `theta0`. Each record holds the shared value, its adapted value, the
/// outer loss and the meta-gradient.
pub fn maml_trace_json(
    theta0: f64,
    target: f64,
    inner_lr: f64,
    inner_steps: usize,
    outer_lr: f64,
    iterations: usize,
    second_order: bool,
) -> String {
    respond((|| {
        if !(theta0.is_finite() && target.is_finite()) || iterations > 1000 || inner_steps > 50 {
            return Err(coldstart::Error::Config(vec![
                "values must be finite, iterations at most 1000 and inner steps at most 50".into(),
            ]));
        }
        let (model, ctx, init, ep) = quadratic_setup(target)?;
        let mut params = init.with_tensors(vec![Tensor::scalar(theta0)])?;
        let cfg = TrainConfig {
            lr: outer_lr,
            inner_lr,
            inner_steps,
            batch_size: 1,
            order: if second_order { MetaOrder::Second } else { MetaOrder::First },
            clip_norm: f64::MAX,
            ..TrainConfig::default()
        };
        let errors = cfg.validate();
        if !errors.is_empty() {
            return Err(coldstart::Error::Config(errors));
        }
        let mut steps = Vec::with_capacity(iterations + 1);
        for k in 0..=iterations {
            let theta = params.tensors()[0].item();
            let adapted = adapt_params(&model, &ctx, &params, &ep, inner_lr, inner_steps, cfg.scope)?;
            let step = meta_update(&model, &ctx, &params, &[&ep], &cfg)?;
            steps.push(json!({
                "iteration": k,
                "theta": theta,
                "adapted": adapted.tensors()[0].item(),
                "loss": step.loss,
                "gradient": step.gradient[0].item(),
            }));
            params = step.params;
        }
        Ok(json!({ "steps": steps }))
    })())
}

fn parse_list(name: &str, text: &str) -> Result<Vec<f64>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| coldstart::Error::Config(vec![format!("{name}: {s:?} is not a number")]))
        })
        .collect()
}

/// nDCG@k and AUC for comma- or space-separated scores and labels, plus the
/// induced ranking. A metric that is undefined for the input is reported as
/// a string instead of a number.
pub fn rank_metrics_json(scores: &str, labels: &str, k: usize) -> String {
    respond((|| {
        let s = parse_list("scores", scores)?;
        let l = parse_list("labels", labels)?;
        let show = |r: Result<f64>| match r {
            Ok(v) => json!(v),
            Err(e) => json!(e.to_string()),
        };
        let mut order: Vec<usize> = (0..s.len()).collect();
        order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
        Ok(json!({
            "ndcg": show(ndcg_at_k(&s, &l, k)),
            "auc": show(roc_auc(&s, &l)),
            "ranking": order,
        }))
    })())
}

/// Attention weights of `items` random rows of width `dim` under random
/// query, key and value maps.
pub fn attention_json(items: usize, dim: usize, seed: u64) -> String {
    respond((|| {
        if !(1..=32).contains(&items) || !(1..=32).contains(&dim) {
            return Err(coldstart::Error::Config(vec!["items and dim must lie in 1..=32".into()]));
        }
        let mut rng = stream_rng(seed, "demo-attention", 0);
        let data = (0..items * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = Tensor::new(items, dim, data)?;
        let mut g = Graph::new();
        let xv = g.leaf(x);
        let w: Vec<_> = (0..3).map(|_| g.leaf(glorot_uniform(&mut rng, dim, dim))).collect();
        let (_, weights) = self_attention_forward(&mut g, xv, w[0], w[1], w[2])?;
        let a = g.value(weights);
        let rows: Vec<Vec<f64>> = (0..items).map(|i| a.row_slice(i).to_vec()).collect();
        Ok(json!({ "weights": rows }))
    })())
}

#[wasm_bindgen]
pub fn maml_trace(
    theta0: f64,
    target: f64,
    inner_lr: f64,
    inner_steps: usize,
    outer_lr: f64,
    iterations: usize,
    second_order: bool,
) -> String {
    maml_trace_json(theta0, target, inner_lr, inner_steps, outer_lr, iterations, second_order)
}

#[wasm_bindgen]
pub fn rank_metrics(scores: &str, labels: &str, k: usize) -> String {
    rank_metrics_json(scores, labels, k)
}

#[wasm_bindgen]
pub fn attention(items: usize, dim: usize, seed: u64) -> String {
    attention_json(items, dim, seed)
}
