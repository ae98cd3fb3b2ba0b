//! Random hyperparameter search over finite grids.
//!
//! A search space maps config keys (as accepted by [`crate::config`]) to
//! candidate values. Each trial draws one value per key, trains through a
//! caller-supplied closure and records the final validation loss.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rand::Rng;

use crate::data::write_atomic;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng};

pub const DEFAULT_BUDGET: usize = 100;

/// Named dimensions, each a non-empty list of values.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SearchSpace {
    pub dims: BTreeMap<String, Vec<String>>,
}

impl SearchSpace {
    /// Grids for the framework and the meta-learning trainer.
    pub fn default_grid() -> Self {
        let dims: [(&str, &[&str]); 15] = [
            ("model.hidden", &["32", "64", "128"]),
            ("model.user_dim", &["16", "32", "64", "128"]),
            ("model.item_dim", &["16", "32", "64", "128"]),
            ("model.gcn_layers", &["1", "2", "3"]),
            ("model.social", &["true", "false"]),
            ("model.same_rating", &["true", "false"]),
            ("model.same_attribute", &["true", "false"]),
            ("model.same_rating_k", &["3"]),
            ("train.lr", &["0.1", "0.01", "0.005", "0.001"]),
            ("train.l2", &["0.0", "0.1", "0.01", "0.001"]),
            ("train.epochs", &["5", "10", "20", "30", "40", "50", "60"]),
            ("train.batch_size", &["10", "20"]),
            ("train.inner_steps", &["1", "2", "4"]),
            ("train.inner_lr", &["0.05", "0.01", "0.1", "0.001"]),
            ("model.embedding_dim", &["32", "64", "128"]),
        ];
        SearchSpace {
            dims: dims.iter().map(|(k, v)| (k.to_string(), v.iter().map(|s| s.to_string()).collect())).collect(),
        }
    }

    /// One `key = v1, v2, ...` line per dimension; `#` starts a comment.
    pub fn parse(source: &str, text: &str) -> Result<Self> {
        let mut dims = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse { path: source.to_string(), line: n + 1, message };
            let (key, values) = line.split_once('=').ok_or_else(|| err("expected key = v1, v2, ...".into()))?;
            let key = key.trim();
            let values: Vec<String> =
                values.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
            if key.is_empty() || values.is_empty() {
                return Err(err(format!("dimension {key:?} needs a name and at least one value")));
            }
            if dims.insert(key.to_string(), values).is_some() {
                return Err(err(format!("dimension {key} declared twice")));
            }
        }
        Ok(SearchSpace { dims })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&path.display().to_string(), &text)
    }

    /// Number of distinct configurations.
    pub fn size(&self) -> usize {
        self.dims.values().map(Vec::len).product()
    }
}

impl fmt::Display for SearchSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.dims {
            writeln!(f, "{k} = {}", v.join(", "))?;
        }
        Ok(())
    }
}

pub type TrialConfig = BTreeMap<String, String>;

/// Independent uniform draw per dimension, in key order.
pub fn sample_config(space: &SearchSpace, rng: &mut impl Rng) -> TrialConfig {
    space.dims.iter().map(|(k, values)| (k.clone(), values[rng.gen_range(0..values.len())].clone())).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum TrialStatus {
    Ok,
    Diverged,
    Failed(String),
}

impl fmt::Display for TrialStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrialStatus::Ok => f.write_str("ok"),
            TrialStatus::Diverged => f.write_str("diverged"),
            TrialStatus::Failed(m) => write!(f, "failed: {m}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trial {
    pub index: usize,
    pub seed: u64,
    pub config: TrialConfig,
    /// Infinite for trials that did not finish.
    pub val_loss: f64,
    pub status: TrialStatus,
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub best: usize,
    pub trials: Vec<Trial>,
}

impl SearchOutcome {
    pub fn best_trial(&self) -> &Trial {
        &self.trials[self.best]
    }
}

/// Runs `budget` trials. Trial `i` samples its config from its own stream and
/// receives a seed derived from `(seed, i)`, so outcomes do not depend on
/// execution order. The winner is the lowest validation loss, earliest trial
/// first on ties.
pub fn random_search<F>(space: &SearchSpace, budget: usize, seed: u64, mut trainer: F) -> Result<SearchOutcome>
where
    F: FnMut(&TrialConfig, u64) -> Result<f64>,
{
    if budget == 0 {
        return Err(Error::Search("budget must be at least 1".into()));
    }
    if let Some((k, _)) = space.dims.iter().find(|(_, v)| v.is_empty()) {
        return Err(Error::Search(format!("dimension {k} has no values")));
    }
    let mut trials = Vec::with_capacity(budget);
    for index in 0..budget {
        let config = sample_config(space, &mut stream_rng(seed, "search-config", index as u64));
        let trial_seed = derive_seed(seed, "trial", index as u64);
        let (val_loss, status) = match trainer(&config, trial_seed) {
            Ok(v) if v.is_finite() => (v, TrialStatus::Ok),
            Ok(_) | Err(Error::Diverged(_)) | Err(Error::NonFinite(_)) => (f64::INFINITY, TrialStatus::Diverged),
            Err(e) => (f64::INFINITY, TrialStatus::Failed(e.to_string())),
        };
        trials.push(Trial { index, seed: trial_seed, config, val_loss, status });
    }
    let best = trials
        .iter()
        .filter(|t| t.val_loss.is_finite())
        .min_by(|a, b| a.val_loss.total_cmp(&b.val_loss).then(a.index.cmp(&b.index)))
        .map(|t| t.index)
        .ok_or_else(|| {
            Error::Search(format!("all {budget} trials diverged or failed; trial 0: {}", trials[0].status))
        })?;
    Ok(SearchOutcome { best, trials })
}

pub const TRIAL_LOG_HEADER: [&str; 5] = ["trial", "seed", "config_json", "val_loss", "status"];

pub fn trial_log_csv(trials: &[Trial]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRIAL_LOG_HEADER)?;
    for t in trials {
        let json = serde_json::to_string(&t.config).expect("string map serializes");
        w.write_record([t.index.to_string(), t.seed.to_string(), json, t.val_loss.to_string(), t.status.to_string()])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Search(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Reads a trial log back; used to audit the winner.
pub fn parse_trial_log(text: &str) -> Result<Vec<Trial>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let bad = |what: &str| Error::Search(format!("trial log: invalid {what}"));
        let config: TrialConfig = serde_json::from_str(&rec[2]).map_err(|_| bad("config_json"))?;
        let status = match &rec[4] {
            "ok" => TrialStatus::Ok,
            "diverged" => TrialStatus::Diverged,
            other => TrialStatus::Failed(other.strip_prefix("failed: ").unwrap_or(other).to_string()),
        };
        out.push(Trial {
            index: rec[0].parse().map_err(|_| bad("trial"))?,
            seed: rec[1].parse().map_err(|_| bad("seed"))?,
            config,
            val_loss: rec[3].parse().map_err(|_| bad("val_loss"))?,
            status,
        });
    }
    Ok(out)
}

pub fn write_trial_log(path: &Path, trials: &[Trial]) -> Result<()> {
    write_atomic(path, trial_log_csv(trials)?.as_bytes())
}
