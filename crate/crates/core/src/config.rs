//! Run configuration: flat `section.key = value` files, exhaustive validation,
//! canonical serialization and a content fingerprint.

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::data::{generate_synthetic, load_dir, Dataset, RatingKind, SplitConfig, SyntheticSpec};
use crate::error::{Error, Result};
use crate::eval::{InferencePath, Metric};
use crate::nn::{AdaptScope, Components, ModelKind, ModelSpec, Task};
use crate::train::{MetaOrder, TrainConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitMode {
    Generic,
    Kuairec,
}

impl SplitMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitMode::Generic => "generic",
            SplitMode::Kuairec => "kuairec",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "generic" => Ok(SplitMode::Generic),
            "kuairec" => Ok(SplitMode::Kuairec),
            other => Err(Error::Config(vec![format!("unknown split mode {other:?}; expected generic or kuairec")])),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrainerKind {
    Meta,
    Standard,
}

impl TrainerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TrainerKind::Meta => "meta",
            TrainerKind::Standard => "standard",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "meta" => Ok(TrainerKind::Meta),
            "standard" => Ok(TrainerKind::Standard),
            other => Err(Error::Config(vec![format!("unknown trainer {other:?}; expected meta or standard")])),
        }
    }
}

/// Where the dataset comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    Dir(PathBuf),
    Synthetic,
}

/// Model settings that do not depend on the dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelOptions {
    pub kind: ModelKind,
    pub task: Task,
    pub components: Components,
    pub embedding_dim: usize,
    pub user_dim: usize,
    pub item_dim: usize,
    pub attention_dim: usize,
    pub hidden: usize,
    pub gcn_layers: usize,
    pub same_rating_k: usize,
    pub fm: bool,
    pub label_augmentation: bool,
}

impl Default for ModelOptions {
    fn default() -> Self {
        ModelOptions {
            kind: ModelKind::Framework,
            task: Task::Rating,
            components: Components { interactions: true, ..Default::default() },
            embedding_dim: 8,
            user_dim: 16,
            item_dim: 16,
            attention_dim: 16,
            hidden: 32,
            gcn_layers: 2,
            same_rating_k: crate::data::DEFAULT_SAME_RATING_K,
            fm: false,
            label_augmentation: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub seed: u64,
    pub data: DataSource,
    pub rating_kind: Option<RatingKind>,
    pub synthetic: SyntheticSpec,
    pub split_mode: SplitMode,
    pub split: SplitConfig,
    /// Directory holding the output of `split`.
    pub split_dir: Option<PathBuf>,
    pub model: ModelOptions,
    pub trainer: TrainerKind,
    pub train: TrainConfig,
    pub metric: Metric,
    pub path: InferencePath,
    pub search_budget: usize,
    /// Not part of the fingerprint.
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        RunConfig {
            seed: 0,
            data: DataSource::Synthetic,
            rating_kind: None,
            synthetic: SyntheticSpec::default(),
            split_mode: SplitMode::Generic,
            split: SplitConfig::default(),
            split_dir: None,
            model: ModelOptions::default(),
            trainer: TrainerKind::Meta,
            path: InferencePath::Meta { inner_lr: train.inner_lr, steps: train.eval_inner_steps, scope: train.scope },
            train,
            metric: Metric::Ndcg(3),
            search_budget: crate::search::DEFAULT_BUDGET,
            out: None,
        }
    }
}

fn num<T: std::str::FromStr>(v: &str, what: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("expected {what}, got {v:?}"))
}

fn flag(v: &str) -> std::result::Result<bool, String> {
    num(v, "true or false")
}

fn config_message(e: Error) -> String {
    match e {
        Error::Config(mut m) if m.len() == 1 => m.remove(0),
        other => other.to_string(),
    }
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let v = value.trim();
        let m = &mut self.model;
        let t = &mut self.train;
        let s = &mut self.synthetic;
        match key {
            "seed" => self.seed = num(v, "an unsigned integer")?,
            "out" => self.out = (!v.is_empty()).then(|| PathBuf::from(v)),
            "data.source" => {
                self.data = match v {
                    "synthetic" => DataSource::Synthetic,
                    "dir" => match &self.data {
                        DataSource::Dir(_) => self.data.clone(),
                        DataSource::Synthetic => DataSource::Dir(PathBuf::new()),
                    },
                    other => return Err(format!("expected synthetic or dir, got {other:?}")),
                }
            }
            "data.dir" => {
                if !v.is_empty() {
                    self.data = DataSource::Dir(PathBuf::from(v));
                }
            }
            "data.rating_kind" => {
                self.rating_kind = match v {
                    "" | "infer" => None,
                    other => Some(RatingKind::parse(other).map_err(config_message)?),
                }
            }
            "synthetic.users" => s.users = num(v, "a count")?,
            "synthetic.items" => s.items = num(v, "a count")?,
            "synthetic.latent_dim" => s.latent_dim = num(v, "a count")?,
            "synthetic.user_fields" => s.user_fields = num(v, "a count")?,
            "synthetic.item_fields" => s.item_fields = num(v, "a count")?,
            "synthetic.cardinality" => s.cardinality = num(v, "a count")?,
            "synthetic.density" => s.density = num(v, "a number")?,
            "synthetic.noise" => s.noise = num(v, "a number")?,
            "synthetic.kind" => s.kind = RatingKind::parse(v).map_err(config_message)?,
            "synthetic.block" => {
                s.block = match v {
                    "none" | "" => None,
                    dims => {
                        let (u, i) =
                            dims.split_once('x').ok_or_else(|| format!("expected UxI or none, got {dims:?}"))?;
                        Some((num(u, "a count")?, num(i, "a count")?))
                    }
                }
            }
            "synthetic.social_neighbors" => s.social_neighbors = num(v, "a count")?,
            "split.mode" => self.split_mode = SplitMode::parse(v).map_err(config_message)?,
            "split.dir" => self.split_dir = (!v.is_empty()).then(|| PathBuf::from(v)),
            "split.support_size" => self.split.support_size = num(v, "a count")?,
            "split.validation_fraction" => self.split.validation_fraction = num(v, "a number")?,
            "split.cold_user_fraction" => self.split.cold_user_fraction = num(v, "a number")?,
            "split.cold_item_fraction" => self.split.cold_item_fraction = num(v, "a number")?,
            "split.warm_fraction" => self.split.warm_fraction = num(v, "a number")?,
            "model.kind" => m.kind = ModelKind::parse(v).map_err(config_message)?,
            "model.task" => m.task = Task::parse(v).map_err(config_message)?,
            "model.components" => m.components = Components::parse(v).map_err(config_message)?,
            "model.interactions" => m.components.interactions = flag(v)?,
            "model.items_to_rank" => m.components.items_to_rank = flag(v)?,
            "model.social" => m.components.social = flag(v)?,
            "model.same_rating" => m.components.same_rating = flag(v)?,
            "model.same_attribute" => {
                m.components.same_attribute = match v {
                    "false" | "none" => None,
                    "true" => Some(0),
                    field => Some(num(field, "true, false or a field index")?),
                }
            }
            "model.embedding_dim" => m.embedding_dim = num(v, "a count")?,
            "model.user_dim" => m.user_dim = num(v, "a count")?,
            "model.item_dim" => m.item_dim = num(v, "a count")?,
            "model.attention_dim" => m.attention_dim = num(v, "a count")?,
            "model.hidden" => m.hidden = num(v, "a count")?,
            "model.gcn_layers" => m.gcn_layers = num(v, "a count")?,
            "model.same_rating_k" => m.same_rating_k = num(v, "a count")?,
            "model.fm" => m.fm = flag(v)?,
            "model.label_augmentation" => m.label_augmentation = flag(v)?,
            "train.trainer" => self.trainer = TrainerKind::parse(v).map_err(config_message)?,
            "train.epochs" => t.epochs = num(v, "a count")?,
            "train.batch_size" => t.batch_size = num(v, "a count")?,
            "train.lr" => t.lr = num(v, "a number")?,
            "train.inner_lr" => t.inner_lr = num(v, "a number")?,
            "train.inner_steps" => t.inner_steps = num(v, "a count")?,
            "train.eval_inner_steps" => t.eval_inner_steps = num(v, "a count")?,
            "train.order" => t.order = MetaOrder::parse(v).map_err(config_message)?,
            "train.scope" => t.scope = AdaptScope::parse(v).map_err(config_message)?,
            "train.patience" => t.patience = num(v, "a count")?,
            "train.l2" => t.l2 = num(v, "a number")?,
            "train.clip_norm" => t.clip_norm = num(v, "a number")?,
            "eval.metric" => self.metric = Metric::parse(v).map_err(config_message)?,
            "eval.path" => {
                self.path = match v {
                    "direct" => InferencePath::Direct,
                    "meta" => InferencePath::Meta { inner_lr: t.inner_lr, steps: t.eval_inner_steps, scope: t.scope },
                    other => return Err(format!("expected meta or direct, got {other:?}")),
                }
            }
            "search.budget" => self.search_budget = num(v, "a count")?,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// Applies settings in order, collecting every error.
    pub fn apply<'a>(&mut self, pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<()> {
        let mut errors = Vec::new();
        for (k, v) in pairs {
            if let Err(e) = self.set(k, v) {
                errors.push(format!("{k}: {e}"));
            }
        }
        self.sync_path();
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }

    /// Keeps the meta inference path in step with the training settings.
    fn sync_path(&mut self) {
        if let InferencePath::Meta { .. } = self.path {
            self.path = InferencePath::Meta {
                inner_lr: self.train.inner_lr,
                steps: self.train.eval_inner_steps,
                scope: self.train.scope,
            };
        }
    }

    /// Parses a config file body on top of the defaults. Every malformed line,
    /// unknown key and bad value is reported together with the cross-field
    /// problems.
    pub fn parse(source: &str, text: &str) -> Result<Self> {
        let (cfg, mut errors) = Self::read(source, text);
        errors.extend(cfg.validate());
        if errors.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::Config(errors))
        }
    }

    /// [`RunConfig::parse`] without the cross-field checks, for callers that
    /// layer further overrides on top.
    pub fn parse_settings(source: &str, text: &str) -> Result<Self> {
        let (cfg, errors) = Self::read(source, text);
        if errors.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::Config(errors))
        }
    }

    fn read(source: &str, text: &str) -> (Self, Vec<String>) {
        let mut cfg = RunConfig::default();
        let mut errors = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) => {
                    if let Err(e) = cfg.set(k.trim(), v) {
                        errors.push(format!("{source}:{}: {}: {e}", n + 1, k.trim()));
                    }
                }
                None => errors.push(format!("{source}:{}: expected key = value", n + 1)),
            }
        }
        cfg.sync_path();
        (cfg, errors)
    }

    /// Reads a file with [`RunConfig::parse_settings`].
    pub fn load_settings(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_settings(&path.display().to_string(), &text)
    }

    /// Cross-field checks; returns every problem found.
    pub fn validate(&self) -> Vec<String> {
        let mut errors = self.train.validate();
        let sp = &self.split;
        if sp.support_size == 0 {
            errors.push("split.support_size must be at least 1".into());
        }
        for (name, f) in [
            ("validation_fraction", sp.validation_fraction),
            ("cold_user_fraction", sp.cold_user_fraction),
            ("cold_item_fraction", sp.cold_item_fraction),
            ("warm_fraction", sp.warm_fraction),
        ] {
            if !(0.0..1.0).contains(&f) {
                errors.push(format!("split.{name} must lie in [0, 1)"));
            }
        }
        if let DataSource::Dir(p) = &self.data {
            if p.as_os_str().is_empty() {
                errors.push("data.dir must be set when data.source = dir".into());
            }
        }
        let m = &self.model;
        if m.kind == ModelKind::Framework {
            for (name, v) in [
                ("embedding_dim", m.embedding_dim),
                ("user_dim", m.user_dim),
                ("item_dim", m.item_dim),
                ("hidden", m.hidden),
            ] {
                if v == 0 {
                    errors.push(format!("model.{name} must be positive"));
                }
            }
            let graphs = m.components.social || m.components.same_rating || m.components.same_attribute.is_some();
            if graphs && !(1..=3).contains(&m.gcn_layers) {
                errors.push("model.gcn_layers must be 1, 2 or 3".into());
            }
        }
        if self.search_budget == 0 {
            errors.push("search.budget must be at least 1".into());
        }
        let syn = &self.synthetic;
        if self.data == DataSource::Synthetic {
            if syn.users == 0 || syn.items == 0 || syn.latent_dim == 0 {
                errors.push("synthetic.users, synthetic.items and synthetic.latent_dim must be positive".into());
            }
            if !(0.0..=1.0).contains(&syn.density) {
                errors.push("synthetic.density must lie in [0, 1]".into());
            }
        }
        errors
    }

    /// Every fingerprinted setting, in a fixed order.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let s = &self.synthetic;
        let sp = &self.split;
        let m = &self.model;
        let t = &self.train;
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let (source, dir) = match &self.data {
            DataSource::Dir(p) => ("dir", p.display().to_string()),
            DataSource::Synthetic => ("synthetic", String::new()),
        };
        vec![
            ("seed", self.seed.to_string()),
            ("data.source", source.into()),
            ("data.dir", dir),
            ("data.rating_kind", self.rating_kind.map_or("infer".into(), |k| k.to_string())),
            ("synthetic.users", s.users.to_string()),
            ("synthetic.items", s.items.to_string()),
            ("synthetic.latent_dim", s.latent_dim.to_string()),
            ("synthetic.user_fields", s.user_fields.to_string()),
            ("synthetic.item_fields", s.item_fields.to_string()),
            ("synthetic.cardinality", s.cardinality.to_string()),
            ("synthetic.density", s.density.to_string()),
            ("synthetic.noise", s.noise.to_string()),
            ("synthetic.kind", s.kind.to_string()),
            ("synthetic.block", s.block.map_or("none".into(), |(u, i)| format!("{u}x{i}"))),
            ("synthetic.social_neighbors", s.social_neighbors.to_string()),
            ("split.mode", self.split_mode.as_str().into()),
            ("split.dir", path(&self.split_dir)),
            ("split.support_size", sp.support_size.to_string()),
            ("split.validation_fraction", sp.validation_fraction.to_string()),
            ("split.cold_user_fraction", sp.cold_user_fraction.to_string()),
            ("split.cold_item_fraction", sp.cold_item_fraction.to_string()),
            ("split.warm_fraction", sp.warm_fraction.to_string()),
            ("model.kind", m.kind.as_str().into()),
            ("model.task", m.task.as_str().into()),
            ("model.components", m.components.to_string()),
            ("model.embedding_dim", m.embedding_dim.to_string()),
            ("model.user_dim", m.user_dim.to_string()),
            ("model.item_dim", m.item_dim.to_string()),
            ("model.attention_dim", m.attention_dim.to_string()),
            ("model.hidden", m.hidden.to_string()),
            ("model.gcn_layers", m.gcn_layers.to_string()),
            ("model.same_rating_k", m.same_rating_k.to_string()),
            ("model.fm", m.fm.to_string()),
            ("model.label_augmentation", m.label_augmentation.to_string()),
            ("train.trainer", self.trainer.as_str().into()),
            ("train.epochs", t.epochs.to_string()),
            ("train.batch_size", t.batch_size.to_string()),
            ("train.lr", t.lr.to_string()),
            ("train.inner_lr", t.inner_lr.to_string()),
            ("train.inner_steps", t.inner_steps.to_string()),
            ("train.eval_inner_steps", t.eval_inner_steps.to_string()),
            ("train.order", t.order.as_str().into()),
            ("train.scope", t.scope.as_str().into()),
            ("train.patience", t.patience.to_string()),
            ("train.l2", t.l2.to_string()),
            ("train.clip_norm", t.clip_norm.to_string()),
            ("eval.metric", self.metric.to_string()),
            (
                "eval.path",
                match self.path {
                    InferencePath::Direct => "direct".into(),
                    InferencePath::Meta { .. } => "meta".into(),
                },
            ),
            ("search.budget", self.search_budget.to_string()),
        ]
    }

    /// `key = value` lines; parsing them back yields an equal config.
    pub fn canonical(&self) -> String {
        self.to_pairs().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// First 16 hex digits of the SHA-256 of [`RunConfig::canonical`].
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// The resolved config as written beside outputs.
    pub fn resolved(&self) -> String {
        format!("# fingerprint {}\n{}", self.fingerprint(), self.canonical())
    }

    /// Seeds the master seed into the train config and synthetic generator.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig { seed: crate::derive_seed(self.seed, "train", 0), ..self.train.clone() }
    }

    pub fn synthetic_spec(&self) -> SyntheticSpec {
        SyntheticSpec { seed: crate::derive_seed(self.seed, "synthetic", 0), ..self.synthetic.clone() }
    }

    /// Loads or generates the full dataset.
    pub fn dataset(&self) -> Result<Dataset> {
        match &self.data {
            DataSource::Dir(p) => load_dir(p, self.rating_kind),
            DataSource::Synthetic => Ok(generate_synthetic(&self.synthetic_spec())?.dataset),
        }
    }

    /// Full model spec sized for `d`.
    pub fn model_spec(&self, d: &Dataset) -> ModelSpec {
        let m = &self.model;
        ModelSpec {
            kind: m.kind,
            components: m.components.clone(),
            embedding_dim: m.embedding_dim,
            user_dim: m.user_dim,
            item_dim: m.item_dim,
            attention_dim: m.attention_dim,
            hidden: m.hidden,
            gcn_layers: m.gcn_layers,
            same_rating_k: m.same_rating_k,
            fm: m.fm,
            label_augmentation: m.label_augmentation,
            latent_dim: self.synthetic.latent_dim,
            ..ModelSpec::for_dataset(d, m.task)
        }
    }
}
