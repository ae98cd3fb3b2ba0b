//! Ranking and classification metrics, the adapt-then-predict and direct
//! inference paths, and per-scenario reports.

mod report;

pub use report::{parse_report_csv, render_comparison, render_report, report_csv, ReportRow, REPORT_HEADER};

use std::cmp::Ordering;
use std::fmt;

use crate::data::Episode;
use crate::error::{Error, Result};
use crate::nn::{AdaptScope, Model, ModelContext, ModelParams};
use crate::tensor::Graph;
use crate::train::adapt;

/// Positions of `scores` sorted by descending score, ties by ascending index.
fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    order
}

fn dcg(rels: impl Iterator<Item = f64>) -> f64 {
    rels.enumerate().map(|(pos, r)| r / ((pos + 2) as f64).log2()).sum()
}

/// nDCG@k with linear gain `rel / log2(pos + 1)`, positions from 1. Returns
/// 1 when every relevance is zero.
pub fn ndcg_at_k(scores: &[f64], relevances: &[f64], k: usize) -> Result<f64> {
    if scores.len() != relevances.len() || scores.is_empty() {
        return Err(Error::UndefinedMetric(format!(
            "ndcg needs equal non-empty lists, got {} scores and {} relevances",
            scores.len(),
            relevances.len()
        )));
    }
    if k == 0 {
        return Err(Error::UndefinedMetric("ndcg cutoff must be at least 1".into()));
    }
    if let Some(r) = relevances.iter().find(|r| r.is_nan() || **r < 0.0) {
        return Err(Error::UndefinedMetric(format!("negative relevance {r}")));
    }
    let actual = dcg(ranking(scores).into_iter().take(k).map(|i| relevances[i]));
    let mut ideal = relevances.to_vec();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let best = dcg(ideal.into_iter().take(k));
    if best == 0.0 {
        return Ok(1.0);
    }
    Ok(actual / best)
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half. Computed from mid-ranks.
pub fn roc_auc(scores: &[f64], labels: &[f64]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::UndefinedMetric(format!(
            "auc needs equal lengths, got {} scores and {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(l) = labels.iter().find(|&&l| l != 0.0 && l != 1.0) {
        return Err(Error::UndefinedMetric(format!("auc label {l} is not 0 or 1")));
    }
    let positives = labels.iter().filter(|&&l| l == 1.0).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::UndefinedMetric("auc needs at least one positive and one negative".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && scores[order[end + 1]] == scores[order[start]] {
            end += 1;
        }
        let mid = (start + end) as f64 / 2.0 + 1.0;
        rank_sum += mid * order[start..=end].iter().filter(|&&i| labels[i] == 1.0).count() as f64;
        start = end + 1;
    }
    let p = positives as f64;
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * negatives as f64))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Ndcg(usize),
    Auc,
}

impl Metric {
    pub fn parse(s: &str) -> Result<Self> {
        if s == "auc" {
            return Ok(Metric::Auc);
        }
        s.strip_prefix("ndcg@")
            .and_then(|k| k.parse().ok())
            .filter(|&k| k >= 1)
            .map(Metric::Ndcg)
            .ok_or_else(|| Error::Config(vec![format!("unknown metric {s:?}; expected ndcg@K or auc")]))
    }

    pub fn compute(self, scores: &[f64], labels: &[f64]) -> Result<f64> {
        match self {
            Metric::Ndcg(k) => ndcg_at_k(scores, labels, k),
            Metric::Auc => roc_auc(scores, labels),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Ndcg(k) => write!(f, "ndcg@{k}"),
            Metric::Auc => f.write_str("auc"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InferencePath {
    /// Adapt on the support set, score the target with the adapted parameters.
    Meta { inner_lr: f64, steps: usize, scope: AdaptScope },
    /// Score the target with the shared parameters.
    Direct,
}

/// Target-set scores for one episode under `path`. `params` is never modified.
pub fn episode_scores(
    model: &Model,
    ctx: &ModelContext,
    params: &ModelParams,
    ep: &Episode,
    path: InferencePath,
) -> Result<Vec<f64>> {
    let mut g = Graph::new();
    let theta = params.bind(&mut g);
    let p = match path {
        InferencePath::Direct => theta,
        InferencePath::Meta { inner_lr, steps, scope } => {
            let mask = model.adaptable(params, scope);
            adapt(&mut g, model, ctx, &theta, &mask, ep, inner_lr, steps, false)?
        }
    };
    let items = ep.target_items();
    let s = model.scores(&mut g, &p, ctx, ep.user, &ep.support, &items)?;
    Ok(g.value(s).data().to_vec())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioReport {
    pub model: String,
    pub scenario: String,
    pub metric: Metric,
    pub values: Vec<f64>,
    pub mean: f64,
    /// Episodes whose metric was undefined and left out of the mean.
    pub excluded: usize,
    pub fingerprint: String,
}

impl ScenarioReport {
    pub fn episodes(&self) -> usize {
        self.values.len()
    }
}

/// Scores every episode of one test group and averages the metric.
pub fn evaluate_scenario(
    model: &Model,
    ctx: &ModelContext,
    params: &ModelParams,
    episodes: &[Episode],
    path: InferencePath,
    metric: Metric,
) -> Result<ScenarioReport> {
    let first = episodes.first().ok_or_else(|| Error::Data("evaluate_scenario needs at least one episode".into()))?;
    if episodes.iter().any(|e| e.group != first.group) {
        return Err(Error::Data("evaluate_scenario expects episodes from a single group".into()));
    }
    let mut values = Vec::with_capacity(episodes.len());
    let mut excluded = 0;
    for ep in episodes {
        let scores = episode_scores(model, ctx, params, ep, path)?;
        match metric.compute(&scores, &ep.target_ratings()) {
            Ok(v) => values.push(v),
            Err(Error::UndefinedMetric(_)) => excluded += 1,
            Err(e) => return Err(e),
        }
    }
    let mean = if values.is_empty() { f64::NAN } else { values.iter().sum::<f64>() / values.len() as f64 };
    Ok(ScenarioReport {
        model: String::new(),
        scenario: first.group.to_string(),
        metric,
        values,
        mean,
        excluded,
        fingerprint: String::new(),
    })
}
