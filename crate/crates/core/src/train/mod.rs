//! Standard and MAML-style training.
//!
//! Both trainers share one outer step: per episode, adapt a copy of the
//! parameters on the support set (zero steps for standard training), compute
//! the target loss with the adapted parameters, and descend on the
//! batch-averaged gradient with respect to the shared parameters.

mod augment;

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;

pub use augment::{augment_support_labels, one_hot_labels, AugmentedLabels};

use crate::data::{write_atomic, Episode};
use crate::error::{Error, Result};
use crate::nn::{AdaptScope, Model, ModelContext, ModelParams};
use crate::rng::stream_rng;
use crate::tensor::{loss, Graph, Tensor, Var};

/// Global gradient-norm bound applied before every outer update.
pub const DEFAULT_CLIP_NORM: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetaOrder {
    /// Inner gradients are constants: the outer gradient is taken at the
    /// adapted parameters and applied to the shared ones.
    First,
    /// Differentiates through every inner step.
    Second,
}

impl MetaOrder {
    pub fn as_str(self) -> &'static str {
        match self {
            MetaOrder::First => "first",
            MetaOrder::Second => "second",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(MetaOrder::First),
            "second" => Ok(MetaOrder::Second),
            other => Err(Error::Config(vec![format!("unknown meta order {other:?}; expected first or second")])),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Episodes per outer step.
    pub batch_size: usize,
    /// Outer learning rate.
    pub lr: f64,
    /// Inner learning rate.
    pub inner_lr: f64,
    pub inner_steps: usize,
    pub eval_inner_steps: usize,
    pub order: MetaOrder,
    pub scope: AdaptScope,
    pub patience: usize,
    /// Coefficient of the squared-norm penalty on all parameters.
    pub l2: f64,
    pub clip_norm: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 32,
            lr: 0.05,
            inner_lr: 0.1,
            inner_steps: 2,
            eval_inner_steps: 2,
            order: MetaOrder::Second,
            scope: AdaptScope::All,
            patience: 5,
            l2: 0.0,
            clip_norm: DEFAULT_CLIP_NORM,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut errors = Vec::new();
        if !self.lr.is_finite() || self.lr < 0.0 {
            errors.push("train.lr must be a finite non-negative number".into());
        }
        if !self.inner_lr.is_finite() || self.inner_lr < 0.0 {
            errors.push("train.inner_lr must be a finite non-negative number".into());
        }
        if self.batch_size == 0 {
            errors.push("train.batch_size must be at least 1".into());
        }
        if !self.l2.is_finite() || self.l2 < 0.0 {
            errors.push("train.l2 must be a finite non-negative number".into());
        }
        if self.clip_norm.is_nan() || self.clip_norm <= 0.0 {
            errors.push("train.clip_norm must be positive".into());
        }
        errors
    }
}

/// Which half of an episode a loss is computed on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EpisodeSet {
    Support,
    Target,
}

fn as_diverged(e: Error, context: &str) -> Error {
    match e {
        Error::NonFinite(op) => Error::Diverged(format!("{context}: {op} produced a non-finite value")),
        other => other,
    }
}

/// Loss of `model` with parameters `p` on one half of `ep`.
pub fn episode_loss(
    g: &mut Graph,
    model: &Model,
    ctx: &ModelContext,
    p: &[Var],
    ep: &Episode,
    set: EpisodeSet,
) -> Result<Var> {
    let pairs = match set {
        EpisodeSet::Support => &ep.support,
        EpisodeSet::Target => &ep.target,
    };
    if pairs.is_empty() {
        return Err(Error::Adaptation(format!("episode {} has an empty {set:?} set", ep.id)));
    }
    let items: Vec<usize> = pairs.iter().map(|&(i, _)| i).collect();
    let labels: Vec<f64> = pairs.iter().map(|&(_, r)| r).collect();
    let scores = model.scores(g, p, ctx, ep.user, &ep.support, &items)?;
    let target = g.leaf(Tensor::new(labels.len(), 1, labels)?);
    loss(g, model.task().loss_kind(), scores, target)
}

/// Records `steps` gradient-descent steps on the support loss starting at
/// `theta`, updating only parameters with `mask[k]` set. With `create_graph`
/// the steps stay differentiable with respect to `theta`.
#[allow(clippy::too_many_arguments)]
pub fn adapt(
    g: &mut Graph,
    model: &Model,
    ctx: &ModelContext,
    theta: &[Var],
    mask: &[bool],
    ep: &Episode,
    inner_lr: f64,
    steps: usize,
    create_graph: bool,
) -> Result<Vec<Var>> {
    let mut current = theta.to_vec();
    if steps == 0 {
        return Ok(current);
    }
    if ep.support.is_empty() {
        return Err(Error::Adaptation(format!("episode {} has an empty support set", ep.id)));
    }
    let adapted: Vec<usize> = (0..theta.len()).filter(|&k| mask[k]).collect();
    for _ in 0..steps {
        let l = episode_loss(g, model, ctx, &current, ep, EpisodeSet::Support)?;
        let wrt: Vec<Var> = adapted.iter().map(|&k| current[k]).collect();
        let grads = g.grad(l, &wrt, create_graph)?;
        for (&k, grad) in adapted.iter().zip(grads) {
            let step = g.scale(grad, inner_lr)?;
            current[k] = g.sub(current[k], step)?;
        }
    }
    Ok(current)
}

/// Adapted parameters for one episode; `params` is left untouched.
pub fn adapt_params(
    model: &Model,
    ctx: &ModelContext,
    params: &ModelParams,
    ep: &Episode,
    inner_lr: f64,
    steps: usize,
    scope: AdaptScope,
) -> Result<ModelParams> {
    let mut g = Graph::new();
    let theta = params.bind(&mut g);
    let mask = model.adaptable(params, scope);
    let adapted =
        adapt(&mut g, model, ctx, &theta, &mask, ep, inner_lr, steps, false).map_err(|e| as_diverged(e, &ep.id))?;
    Ok(params.with_values_from(&g, &adapted))
}

/// Batch-mean outer loss and its gradient with respect to the shared
/// parameters, adapting each episode with `steps` inner steps.
pub fn meta_gradient(
    model: &Model,
    ctx: &ModelContext,
    params: &ModelParams,
    batch: &[&Episode],
    cfg: &TrainConfig,
    steps: usize,
) -> Result<(Vec<Tensor>, f64)> {
    if batch.is_empty() {
        return Err(Error::Adaptation("meta update needs a non-empty batch".into()));
    }
    let mask = model.adaptable(params, cfg.scope);
    let mut total: Vec<Tensor> = params.tensors().iter().map(|t| Tensor::zeros(t.rows(), t.cols())).collect();
    let mut loss_sum = 0.0;
    let create_graph = cfg.order == MetaOrder::Second && steps > 0 && cfg.inner_lr != 0.0;
    for ep in batch {
        let mut g = Graph::new();
        let theta = params.bind(&mut g);
        let run = |g: &mut Graph| -> Result<(Var, Vec<Var>)> {
            let adapted = adapt(g, model, ctx, &theta, &mask, ep, cfg.inner_lr, steps, create_graph)?;
            let outer = episode_loss(g, model, ctx, &adapted, ep, EpisodeSet::Target)?;
            let grads = g.grad(outer, &theta, false)?;
            Ok((outer, grads))
        };
        let (outer, grads) = run(&mut g).map_err(|e| as_diverged(e, &ep.id))?;
        let value = g.value(outer).item();
        if !value.is_finite() {
            return Err(Error::Diverged(format!("episode {}: outer loss is {value}", ep.id)));
        }
        loss_sum += value;
        for (acc, gv) in total.iter_mut().zip(grads) {
            for (a, d) in acc.data_mut().iter_mut().zip(g.value(gv).data()) {
                *a += d;
            }
        }
    }
    let n = batch.len() as f64;
    for t in &mut total {
        for a in t.data_mut() {
            *a /= n;
        }
    }
    Ok((total, loss_sum / n))
}

/// Rescales `grads` in place so their global norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_global_norm(grads: &mut [Tensor], max_norm: f64) -> f64 {
    let norm = grads.iter().map(Tensor::squared_norm).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        for t in grads.iter_mut() {
            for v in t.data_mut() {
                *v *= s;
            }
        }
    }
    norm
}

/// Result of one outer step.
#[derive(Clone, Debug)]
pub struct MetaStep {
    pub params: ModelParams,
    /// Batch-mean outer loss before the update.
    pub loss: f64,
    /// Gradient of the batch-mean outer loss, before the penalty and clipping.
    pub gradient: Vec<Tensor>,
}

/// One outer update with `cfg.inner_steps` inner steps per episode.
pub fn meta_update(
    model: &Model,
    ctx: &ModelContext,
    params: &ModelParams,
    batch: &[&Episode],
    cfg: &TrainConfig,
) -> Result<MetaStep> {
    outer_step(model, ctx, params, batch, cfg, cfg.inner_steps)
}

fn outer_step(
    model: &Model,
    ctx: &ModelContext,
    params: &ModelParams,
    batch: &[&Episode],
    cfg: &TrainConfig,
    steps: usize,
) -> Result<MetaStep> {
    let (gradient, loss) = meta_gradient(model, ctx, params, batch, cfg, steps)?;
    let mut step = gradient.clone();
    if cfg.l2 > 0.0 {
        for (s, p) in step.iter_mut().zip(params.tensors()) {
            for (d, v) in s.data_mut().iter_mut().zip(p.data()) {
                *d += 2.0 * cfg.l2 * v;
            }
        }
    }
    let norm = clip_global_norm(&mut step, cfg.clip_norm);
    if !norm.is_finite() {
        return Err(Error::Diverged(format!("gradient norm is {norm}")));
    }
    let params = params.descend(&step, cfg.lr);
    if params.tensors().iter().any(|t| !t.is_finite()) {
        return Err(Error::Diverged("parameters became non-finite".into()));
    }
    Ok(MetaStep { params, loss, gradient })
}

/// Mean target loss over `episodes` after `steps` inner steps each.
pub fn evaluation_loss(
    model: &Model,
    ctx: &ModelContext,
    params: &ModelParams,
    episodes: &[Episode],
    inner_lr: f64,
    steps: usize,
    scope: AdaptScope,
) -> Result<f64> {
    if episodes.is_empty() {
        return Ok(f64::NAN);
    }
    let mask = model.adaptable(params, scope);
    let mut sum = 0.0;
    for ep in episodes {
        let mut g = Graph::new();
        let theta = params.bind(&mut g);
        let value = (|| -> Result<f64> {
            let adapted = adapt(&mut g, model, ctx, &theta, &mask, ep, inner_lr, steps, false)?;
            let l = episode_loss(&mut g, model, ctx, &adapted, ep, EpisodeSet::Target)?;
            Ok(g.value(l).item())
        })()
        .map_err(|e| as_diverged(e, &ep.id))?;
        sum += value;
    }
    Ok(sum / episodes.len() as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub elapsed_ms: u128,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Snapshot with the lowest validation loss among trained epochs.
    pub params: ModelParams,
    pub best_epoch: usize,
    /// Epoch 0 holds the losses of the initial parameters.
    pub history: Vec<EpochRecord>,
}

impl TrainOutcome {
    pub fn best_val_loss(&self) -> f64 {
        self.history.iter().find(|r| r.epoch == self.best_epoch).map_or(f64::INFINITY, |r| r.val_loss)
    }
}

pub const HISTORY_HEADER: &str = "epoch,train_loss,val_loss,elapsed_ms";

pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut out = format!("{HISTORY_HEADER}\n");
    for r in history {
        let _ = writeln!(out, "{},{},{},{}", r.epoch, r.train_loss, r.val_loss, r.elapsed_ms);
    }
    out
}

pub fn write_history(path: &Path, history: &[EpochRecord]) -> Result<()> {
    write_atomic(path, history_csv(history).as_bytes())
}

/// MAML: inner adaptation with `cfg.inner_steps` during training and
/// `cfg.eval_inner_steps` for validation.
pub fn train_meta(
    model: &Model,
    ctx: &ModelContext,
    init: &ModelParams,
    train: &[Episode],
    val: &[Episode],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    run_training(model, ctx, init, train, val, cfg, cfg.inner_steps, cfg.eval_inner_steps)
}

/// Plain minibatch descent on target losses; no adaptation anywhere. Support
/// information reaches the model only through its input plumbing.
pub fn train_standard(
    model: &Model,
    ctx: &ModelContext,
    init: &ModelParams,
    train: &[Episode],
    val: &[Episode],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    run_training(model, ctx, init, train, val, cfg, 0, 0)
}

#[allow(clippy::too_many_arguments)]
fn run_training(
    model: &Model,
    ctx: &ModelContext,
    init: &ModelParams,
    train: &[Episode],
    val: &[Episode],
    cfg: &TrainConfig,
    steps: usize,
    eval_steps: usize,
) -> Result<TrainOutcome> {
    let errors = cfg.validate();
    if !errors.is_empty() {
        return Err(Error::Config(errors));
    }
    if train.is_empty() {
        return Err(Error::Data("training needs at least one episode".into()));
    }
    let start = Instant::now();
    let select = |train_loss: f64, val_loss: f64| if val.is_empty() { train_loss } else { val_loss };
    let train_loss0 = evaluation_loss(model, ctx, init, train, cfg.inner_lr, eval_steps, cfg.scope)?;
    let val_loss0 = evaluation_loss(model, ctx, init, val, cfg.inner_lr, eval_steps, cfg.scope)?;
    let mut history = vec![EpochRecord {
        epoch: 0,
        train_loss: train_loss0,
        val_loss: val_loss0,
        elapsed_ms: start.elapsed().as_millis(),
    }];
    let mut params = init.clone();
    let mut best = (f64::INFINITY, init.clone(), 0usize);
    let mut since_best = 0;
    for epoch in 1..=cfg.epochs {
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut stream_rng(cfg.seed, "shuffle", epoch as u64));
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&Episode> = chunk.iter().map(|&k| &train[k]).collect();
            let step = outer_step(model, ctx, &params, &batch, cfg, steps)?;
            loss_sum += step.loss * batch.len() as f64;
            params = step.params;
        }
        let train_loss = loss_sum / train.len() as f64;
        let val_loss = evaluation_loss(model, ctx, &params, val, cfg.inner_lr, eval_steps, cfg.scope)?;
        history.push(EpochRecord { epoch, train_loss, val_loss, elapsed_ms: start.elapsed().as_millis() });
        let score = select(train_loss, val_loss);
        if score < best.0 || best.2 == 0 {
            best = (score, params.clone(), epoch);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > cfg.patience {
                break;
            }
        }
    }
    Ok(TrainOutcome { params: best.1, best_epoch: best.2, history })
}
