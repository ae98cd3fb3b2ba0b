//! The modular recommender: a user representation averaged from enabled
//! components, an item representation from feature embeddings, and an MLP
//! head over their concatenation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;

use super::{
    deepset_forward, embed_rows, self_attention_forward, user_representation, Activation, DeepSet, EmbeddingTable, Gcn,
    Linear, Mlp, ModelParams, ParamId, SelfAttention, Task,
};
use crate::data::{build_same_attribute_graph, build_same_rating_graph, Dataset, RatingKind};
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::tensor::{Axis, Graph, Tensor, Var};
use crate::train::one_hot_labels;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    /// The component framework.
    Framework,
    /// A single learned scalar returned for every item. Output is the raw
    /// value for rating tasks and its sigmoid for classification.
    Constant,
    /// Dot product of stored user and item latent vectors.
    LatentOracle,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Framework => "framework",
            ModelKind::Constant => "constant",
            ModelKind::LatentOracle => "latent_oracle",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "framework" => Ok(ModelKind::Framework),
            "constant" => Ok(ModelKind::Constant),
            "latent_oracle" => Ok(ModelKind::LatentOracle),
            other => Err(Error::Config(vec![format!(
                "unknown model kind {other:?}; expected framework, constant or latent_oracle"
            )])),
        }
    }
}

/// Enabled user-representation components. User features are always on.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Components {
    pub interactions: bool,
    pub items_to_rank: bool,
    pub social: bool,
    pub same_rating: bool,
    /// User feature field defining the same-attribute graph.
    pub same_attribute: Option<usize>,
}

impl Components {
    pub fn parse(s: &str) -> Result<Self> {
        let mut c = Components::default();
        for name in s.split(',').map(str::trim).filter(|n| !n.is_empty()) {
            match name {
                "user_features" => {}
                "interactions" => c.interactions = true,
                "items_to_rank" => c.items_to_rank = true,
                "social" => c.social = true,
                "same_rating" => c.same_rating = true,
                other => {
                    let field = other
                        .strip_prefix("same_attribute:")
                        .and_then(|f| f.parse().ok())
                        .ok_or_else(|| Error::Config(vec![format!("unknown component {other:?}")]))?;
                    c.same_attribute = Some(field);
                }
            }
        }
        Ok(c)
    }
}

impl fmt::Display for Components {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut names = vec!["user_features".to_string()];
        for (on, name) in [
            (self.interactions, "interactions"),
            (self.items_to_rank, "items_to_rank"),
            (self.social, "social"),
            (self.same_rating, "same_rating"),
        ] {
            if on {
                names.push(name.into());
            }
        }
        if let Some(field) = self.same_attribute {
            names.push(format!("same_attribute:{field}"));
        }
        f.write_str(&names.join(","))
    }
}

/// Declarative model description; together with a seed it determines the
/// parameter layout and initial values.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
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
    /// Feed support ratings to the interaction encoder as one-hot slots.
    pub label_augmentation: bool,
    pub user_vocab: Vec<usize>,
    pub item_vocab: Vec<usize>,
    pub label_slots: usize,
    pub users: usize,
    pub items: usize,
    pub latent_dim: usize,
}

impl ModelSpec {
    /// Framework defaults sized for `d`: user features plus interactions.
    pub fn for_dataset(d: &Dataset, task: Task) -> Self {
        ModelSpec {
            kind: ModelKind::Framework,
            task,
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
            user_vocab: d.users.table_sizes(),
            item_vocab: d.items.table_sizes(),
            label_slots: d.rating_kind.label_slots(),
            users: d.num_users(),
            items: d.num_items(),
            latent_dim: 0,
        }
    }

    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let list = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        vec![
            ("kind", self.kind.as_str().into()),
            ("task", self.task.as_str().into()),
            ("components", self.components.to_string()),
            ("embedding_dim", self.embedding_dim.to_string()),
            ("user_dim", self.user_dim.to_string()),
            ("item_dim", self.item_dim.to_string()),
            ("attention_dim", self.attention_dim.to_string()),
            ("hidden", self.hidden.to_string()),
            ("gcn_layers", self.gcn_layers.to_string()),
            ("same_rating_k", self.same_rating_k.to_string()),
            ("fm", self.fm.to_string()),
            ("label_augmentation", self.label_augmentation.to_string()),
            ("user_vocab", list(&self.user_vocab)),
            ("item_vocab", list(&self.item_vocab)),
            ("label_slots", self.label_slots.to_string()),
            ("users", self.users.to_string()),
            ("items", self.items.to_string()),
            ("latent_dim", self.latent_dim.to_string()),
        ]
    }

    /// Inverse of [`ModelSpec::to_pairs`]; every key is required.
    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self> {
        let mut errors = Vec::new();
        let get = |k: &str, errors: &mut Vec<String>| -> String {
            pairs.get(k).cloned().unwrap_or_else(|| {
                errors.push(format!("missing model key {k}"));
                String::new()
            })
        };
        let num = |k: &str, errors: &mut Vec<String>| -> usize {
            let v = get(k, errors);
            v.parse().unwrap_or_else(|_| {
                if !v.is_empty() {
                    errors.push(format!("{k}: expected a non-negative integer, got {v:?}"));
                }
                0
            })
        };
        let flag = |k: &str, errors: &mut Vec<String>| -> bool {
            let v = get(k, errors);
            v.parse().unwrap_or_else(|_| {
                if !v.is_empty() {
                    errors.push(format!("{k}: expected true or false, got {v:?}"));
                }
                false
            })
        };
        let list = |k: &str, errors: &mut Vec<String>| -> Vec<usize> {
            let v = get(k, errors);
            v.split(',')
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse().unwrap_or_else(|_| {
                        errors.push(format!("{k}: invalid entry {s:?}"));
                        0
                    })
                })
                .collect()
        };
        let kind = get("kind", &mut errors);
        let kind = collect_config(ModelKind::parse(&kind), &mut errors);
        let task = get("task", &mut errors);
        let task = collect_config(Task::parse(&task), &mut errors);
        let components = get("components", &mut errors);
        let components = collect_config(Components::parse(&components), &mut errors);
        let spec = ModelSpec {
            kind: kind.unwrap_or(ModelKind::Framework),
            task: task.unwrap_or(Task::Rating),
            components: components.unwrap_or_default(),
            embedding_dim: num("embedding_dim", &mut errors),
            user_dim: num("user_dim", &mut errors),
            item_dim: num("item_dim", &mut errors),
            attention_dim: num("attention_dim", &mut errors),
            hidden: num("hidden", &mut errors),
            gcn_layers: num("gcn_layers", &mut errors),
            same_rating_k: num("same_rating_k", &mut errors),
            fm: flag("fm", &mut errors),
            label_augmentation: flag("label_augmentation", &mut errors),
            user_vocab: list("user_vocab", &mut errors),
            item_vocab: list("item_vocab", &mut errors),
            label_slots: num("label_slots", &mut errors),
            users: num("users", &mut errors),
            items: num("items", &mut errors),
            latent_dim: num("latent_dim", &mut errors),
        };
        if errors.is_empty() {
            Ok(spec)
        } else {
            Err(Error::Config(errors))
        }
    }

    /// Lists every structural problem.
    pub fn validate(&self) -> Vec<String> {
        let mut errors = Vec::new();
        match self.kind {
            ModelKind::Framework => {
                for (name, v) in [
                    ("embedding_dim", self.embedding_dim),
                    ("user_dim", self.user_dim),
                    ("item_dim", self.item_dim),
                    ("hidden", self.hidden),
                ] {
                    if v == 0 {
                        errors.push(format!("model.{name} must be positive"));
                    }
                }
                if self.components.items_to_rank && self.attention_dim == 0 {
                    errors.push("model.attention_dim must be positive when items_to_rank is enabled".into());
                }
                let graphs =
                    self.components.social || self.components.same_rating || self.components.same_attribute.is_some();
                if graphs && !(1..=3).contains(&self.gcn_layers) {
                    errors.push("model.gcn_layers must be 1, 2 or 3".into());
                }
                if self.components.same_rating && self.same_rating_k == 0 {
                    errors.push("model.same_rating_k must be at least 1".into());
                }
                if self.user_vocab.is_empty() || self.item_vocab.is_empty() {
                    errors.push("users and items need at least one feature field".into());
                }
                if self.user_vocab.iter().chain(&self.item_vocab).any(|&v| v == 0) {
                    errors.push("vocabulary sizes must be positive".into());
                }
                if let Some(f) = self.components.same_attribute {
                    if f >= self.user_vocab.len() {
                        errors.push(format!(
                            "same_attribute field {f} out of range for {} user fields",
                            self.user_vocab.len()
                        ));
                    }
                }
                if self.label_augmentation && self.label_slots == 0 {
                    errors.push("label augmentation needs a rating vocabulary".into());
                }
            }
            ModelKind::Constant => {}
            ModelKind::LatentOracle => {
                if self.latent_dim == 0 || self.users == 0 || self.items == 0 {
                    errors.push("latent oracle needs positive users, items and latent_dim".into());
                }
            }
        }
        errors
    }
}

fn collect_config<T>(r: Result<T>, errors: &mut Vec<String>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(Error::Config(e)) => {
            errors.extend(e);
            None
        }
        Err(e) => {
            errors.push(e.to_string());
            None
        }
    }
}

/// Dataset-derived inputs shared by every forward pass: features, training
/// histories and the normalised user graphs.
#[derive(Clone, Debug)]
pub struct ModelContext {
    pub user_features: Vec<Vec<usize>>,
    pub item_features: Vec<Vec<usize>>,
    /// Items each user interacted with in the training data, sorted.
    pub histories: Vec<Vec<usize>>,
    pub rating_kind: RatingKind,
    /// In component order: social, same-rating, same-attribute.
    pub graphs: Vec<UserGraph>,
}

/// Undirected user graph with self-loop degrees for symmetric normalisation.
#[derive(Clone, Debug)]
pub struct UserGraph {
    pub name: &'static str,
    pub neighbors: Vec<Vec<usize>>,
    pub inv_sqrt_degree: Vec<f64>,
}

impl UserGraph {
    pub fn new(name: &'static str, n: usize, edges: &[(usize, usize)]) -> Self {
        let mut sets = vec![BTreeSet::new(); n];
        for &(a, b) in edges {
            if a != b {
                sets[a].insert(b);
                sets[b].insert(a);
            }
        }
        let neighbors: Vec<Vec<usize>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();
        let inv_sqrt_degree = neighbors.iter().map(|n| 1.0 / ((n.len() + 1) as f64).sqrt()).collect();
        UserGraph { name, neighbors, inv_sqrt_degree }
    }

    /// Nodes within `hops` of `center`, sorted.
    pub fn ego(&self, center: usize, hops: usize) -> Vec<usize> {
        let mut seen = BTreeSet::from([center]);
        let mut frontier = vec![center];
        for _ in 0..hops {
            let mut next = Vec::new();
            for u in frontier {
                for &v in &self.neighbors[u] {
                    if seen.insert(v) {
                        next.push(v);
                    }
                }
            }
            frontier = next;
        }
        seen.into_iter().collect()
    }

    /// Rows and columns `nodes` of the full-graph normalised adjacency.
    pub fn sub_adjacency(&self, nodes: &[usize]) -> Tensor {
        let n = nodes.len();
        let mut a = Tensor::zeros(n, n);
        for (i, &u) in nodes.iter().enumerate() {
            for (j, &v) in nodes.iter().enumerate() {
                if i == j || self.neighbors[u].binary_search(&v).is_ok() {
                    a.set(i, j, self.inv_sqrt_degree[u] * self.inv_sqrt_degree[v]);
                }
            }
        }
        a
    }
}

impl ModelContext {
    /// `train` supplies histories and the same-rating graph; features and
    /// social edges cover every user and item.
    pub fn new(spec: &ModelSpec, train: &Dataset) -> Result<Self> {
        let n = train.num_users();
        let mut histories = vec![Vec::new(); n];
        for it in &train.interactions {
            histories[it.user].push(it.item);
        }
        for h in &mut histories {
            h.sort_unstable();
        }
        let mut graphs = Vec::new();
        if spec.kind == ModelKind::Framework {
            if spec.components.social {
                graphs.push(UserGraph::new("social", n, &train.social));
            }
            if spec.components.same_rating {
                graphs.push(UserGraph::new("same_rating", n, &build_same_rating_graph(train, spec.same_rating_k)));
            }
            if let Some(field) = spec.components.same_attribute {
                graphs.push(UserGraph::new("same_attribute", n, &build_same_attribute_graph(train, field)?));
            }
        }
        Ok(ModelContext {
            user_features: train.users.features.clone(),
            item_features: train.items.features.clone(),
            histories,
            rating_kind: train.rating_kind,
            graphs,
        })
    }
}

/// Which parameters the inner loop adapts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdaptScope {
    All,
    HeadOnly,
}

impl AdaptScope {
    pub fn as_str(self) -> &'static str {
        match self {
            AdaptScope::All => "all",
            AdaptScope::HeadOnly => "head_only",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(AdaptScope::All),
            "head_only" => Ok(AdaptScope::HeadOnly),
            other => Err(Error::Config(vec![format!("unknown adapt scope {other:?}; expected all or head_only")])),
        }
    }
}

#[derive(Clone, Debug)]
struct GraphBranch {
    gcn: Gcn,
    proj: Linear,
}

#[derive(Clone, Debug)]
struct FrameworkLayout {
    user_tables: Vec<EmbeddingTable>,
    item_tables: Vec<EmbeddingTable>,
    user_proj: Linear,
    item_proj: Linear,
    interactions: Option<DeepSet>,
    items_in: Option<Linear>,
    attention: Option<SelfAttention>,
    items_set: Option<DeepSet>,
    graphs: Vec<GraphBranch>,
    head: Mlp,
}

#[derive(Clone, Debug)]
enum Layout {
    Framework(Box<FrameworkLayout>),
    Constant { theta: ParamId },
    Oracle { users: ParamId, items: ParamId },
}

/// A configured model: parameter layout plus forward pass.
#[derive(Clone, Debug)]
pub struct Model {
    pub spec: ModelSpec,
    layout: Layout,
}

/// Stable name for the head parameters, used by [`AdaptScope::HeadOnly`].
pub const HEAD_PREFIX: &str = "head.";

impl Model {
    /// Builds the layout and freshly initialised parameters.
    pub fn new(spec: &ModelSpec, seed: u64) -> Result<(Model, ModelParams)> {
        let errors = spec.validate();
        if !errors.is_empty() {
            return Err(Error::Config(errors));
        }
        let mut rng = stream_rng(seed, "init", 0);
        let mut params = ModelParams::new();
        let layout = match spec.kind {
            ModelKind::Framework => Layout::Framework(Box::new(build_framework(spec, &mut params, &mut rng))),
            ModelKind::Constant => Layout::Constant { theta: params.push("constant.theta", Tensor::scalar(0.0)) },
            ModelKind::LatentOracle => Layout::Oracle {
                users: params.push("oracle.users", Tensor::zeros(spec.users, spec.latent_dim)),
                items: params.push("oracle.items", Tensor::zeros(spec.items, spec.latent_dim)),
            },
        };
        Ok((Model { spec: spec.clone(), layout }, params))
    }

    pub fn task(&self) -> Task {
        self.spec.task
    }

    /// Per-parameter flag: adapted by the inner loop under `scope`.
    pub fn adaptable(&self, params: &ModelParams, scope: AdaptScope) -> Vec<bool> {
        params.names().iter().map(|n| scope == AdaptScope::All || n.starts_with(HEAD_PREFIX)).collect()
    }

    /// Scores of `candidates` for `user`, an `n x 1` node. The support set
    /// feeds the interaction encoder; `candidates` are also the items to rank.
    pub fn scores(
        &self,
        g: &mut Graph,
        p: &[Var],
        ctx: &ModelContext,
        user: usize,
        support: &[(usize, f64)],
        candidates: &[usize],
    ) -> Result<Var> {
        if candidates.is_empty() {
            return Err(Error::Block("no candidate items to score".into()));
        }
        match &self.layout {
            Layout::Constant { theta } => {
                let out = g.broadcast_to(p[*theta], (candidates.len(), 1))?;
                match self.spec.task {
                    Task::Rating => Ok(out),
                    Task::Classification => g.sigmoid(out),
                }
            }
            Layout::Oracle { users, items } => {
                let u = g.gather_rows(p[*users], &[user])?;
                let v = g.gather_rows(p[*items], candidates)?;
                let ut = g.transpose(u)?;
                let dot = g.matmul(v, ut)?;
                let s = g.scale(dot, 1.0 / (self.spec.latent_dim as f64).sqrt())?;
                match self.spec.task {
                    Task::Rating => Ok(s),
                    Task::Classification => g.sigmoid(s),
                }
            }
            Layout::Framework(f) => self.framework_scores(f, g, p, ctx, user, support, candidates),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn framework_scores(
        &self,
        f: &FrameworkLayout,
        g: &mut Graph,
        p: &[Var],
        ctx: &ModelContext,
        user: usize,
        support: &[(usize, f64)],
        candidates: &[usize],
    ) -> Result<Var> {
        let spec = &self.spec;
        let item_reps = |g: &mut Graph, items: &[usize]| -> Result<Var> {
            let rows: Vec<&[usize]> = items.iter().map(|&i| ctx.item_features[i].as_slice()).collect();
            let e = embed_rows(g, p, &f.item_tables, &rows)?;
            f.item_proj.forward(g, p, e)
        };
        let label_width = if spec.label_augmentation { spec.label_slots } else { 0 };

        let user_embedded = embed_rows(g, p, &f.user_tables, &[ctx.user_features[user].as_slice()])?;
        let mut components = vec![f.user_proj.forward(g, p, user_embedded)?];

        if let Some(set) = &f.interactions {
            let part = if support.is_empty() {
                g.leaf(Tensor::zeros(1, spec.user_dim))
            } else {
                let items: Vec<usize> = support.iter().map(|&(i, _)| i).collect();
                let reps = item_reps(g, &items)?;
                let members = if label_width > 0 {
                    let labels = g.leaf(one_hot_labels(support, ctx.rating_kind)?);
                    g.concat(&[reps, labels])?
                } else {
                    reps
                };
                deepset_forward(g, p, members, &items, &set.phi, &set.rho)?
            };
            components.push(part);
        }

        let candidate_reps = item_reps(g, candidates)?;

        if let (Some(inp), Some(att), Some(set)) = (&f.items_in, &f.attention, &f.items_set) {
            let rows = if label_width > 0 {
                let zeros = g.leaf(Tensor::zeros(candidates.len(), label_width));
                g.concat(&[candidate_reps, zeros])?
            } else {
                candidate_reps
            };
            let r = inp.forward(g, p, rows)?;
            let (attended, _) = self_attention_forward(g, r, p[att.query], p[att.key], p[att.value])?;
            components.push(deepset_forward(g, p, attended, candidates, &set.phi, &set.rho)?);
        }

        for (branch, graph) in f.graphs.iter().zip(&ctx.graphs) {
            let nodes = graph.ego(user, spec.gcn_layers);
            let a_hat = g.leaf(graph.sub_adjacency(&nodes));
            let feats: Vec<&[usize]> = nodes.iter().map(|&u| ctx.user_features[u].as_slice()).collect();
            let user_part = embed_rows(g, p, &f.user_tables, &feats)?;
            let history: Vec<usize> = nodes
                .iter()
                .flat_map(|&u| ctx.histories[u].iter().copied())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let item_part = if history.is_empty() {
                g.leaf(Tensor::zeros(nodes.len(), spec.item_dim))
            } else {
                let mut mean = Tensor::zeros(nodes.len(), history.len());
                for (r, &u) in nodes.iter().enumerate() {
                    let h = &ctx.histories[u];
                    for &i in h {
                        let c = history.binary_search(&i).expect("history item indexed");
                        mean.set(r, c, 1.0 / h.len() as f64);
                    }
                }
                let mean = g.leaf(mean);
                let reps = item_reps(g, &history)?;
                g.matmul(mean, reps)?
            };
            let h = g.concat(&[user_part, item_part])?;
            let out = branch.gcn.forward(g, p, a_hat, h)?;
            let ego_row = nodes.binary_search(&user).expect("ego contains its center");
            let ego = g.gather_rows(out, &[ego_row])?;
            components.push(branch.proj.forward(g, p, ego)?);
        }

        let user_rep = user_representation(g, &components)?;
        let broadcast = g.broadcast_to(user_rep, (candidates.len(), spec.user_dim))?;
        let x = g.concat(&[broadcast, candidate_reps])?;
        let out = f.head.forward(g, p, x)?;
        if !spec.fm {
            return Ok(out);
        }
        let user_fields: Vec<Var> = f
            .user_tables
            .iter()
            .zip(&ctx.user_features[user])
            .map(|(t, &v)| t.lookup(g, p, &[v]))
            .collect::<Result<_>>()?;
        let item_fields: Vec<Var> = f
            .item_tables
            .iter()
            .enumerate()
            .map(|(k, t)| {
                let ids: Vec<usize> = candidates.iter().map(|&i| ctx.item_features[i][k]).collect();
                t.lookup(g, p, &ids)
            })
            .collect::<Result<_>>()?;
        let fm = fm_rows(g, &user_fields, &item_fields)?;
        let logits = g.add(out, fm)?;
        spec.task.activation().apply(g, logits)
    }
}

/// Batched FM term: one row per candidate, fields = the shared user rows
/// (`1 x d` each) plus that candidate's item rows (`n x d` each).
pub fn fm_rows(g: &mut Graph, user_fields: &[Var], item_fields: &[Var]) -> Result<Var> {
    let all: Vec<Var> = user_fields.iter().chain(item_fields).copied().collect();
    if all.len() < 2 {
        return Err(Error::Block("fm needs at least 2 fields".into()));
    }
    let mut total = all[0];
    let mut squares = g.mul(all[0], all[0])?;
    for &x in &all[1..] {
        total = g.add(total, x)?;
        let sq = g.mul(x, x)?;
        squares = g.add(squares, sq)?;
    }
    let total_sq = g.mul(total, total)?;
    let diff = g.sub(total_sq, squares)?;
    let s = g.reduce_sum(diff, Axis::Cols)?;
    g.scale(s, 0.5)
}

fn build_framework(spec: &ModelSpec, params: &mut ModelParams, rng: &mut impl Rng) -> FrameworkLayout {
    let d = spec.embedding_dim;
    let user_tables: Vec<EmbeddingTable> = spec
        .user_vocab
        .iter()
        .enumerate()
        .map(|(k, &v)| EmbeddingTable::new(params, rng, &format!("user_features.table{k}"), v, d))
        .collect();
    let item_tables: Vec<EmbeddingTable> = spec
        .item_vocab
        .iter()
        .enumerate()
        .map(|(k, &v)| EmbeddingTable::new(params, rng, &format!("item.table{k}"), v, d))
        .collect();
    let user_width = d * user_tables.len();
    let user_proj = Linear::new(params, rng, "user_features.proj", user_width, spec.user_dim);
    let item_proj = Linear::new(params, rng, "item.proj", d * item_tables.len(), spec.item_dim);
    let label_width = if spec.label_augmentation { spec.label_slots } else { 0 };
    let member_width = spec.item_dim + label_width;
    let deepset = |params: &mut ModelParams, rng: &mut _, name: &str, input: usize| DeepSet {
        phi: Mlp::new(params, rng, &format!("{name}.phi"), &[input, spec.hidden], Activation::Relu),
        rho: Mlp::new(params, rng, &format!("{name}.rho"), &[spec.hidden, spec.user_dim], Activation::Identity),
    };
    let interactions = spec.components.interactions.then(|| deepset(params, rng, "interactions", member_width));
    let (items_in, attention, items_set) = if spec.components.items_to_rank {
        (
            Some(Linear::new(params, rng, "items_to_rank.in", member_width, spec.attention_dim)),
            Some(SelfAttention::new(params, rng, "items_to_rank.attention", spec.attention_dim)),
            Some(deepset(params, rng, "items_to_rank.set", spec.attention_dim)),
        )
    } else {
        (None, None, None)
    };
    let mut graphs = Vec::new();
    let graph_names = [
        (spec.components.social, "social"),
        (spec.components.same_rating, "same_rating"),
        (spec.components.same_attribute.is_some(), "same_attribute"),
    ];
    for (on, name) in graph_names {
        if on {
            let mut dims = vec![user_width + spec.item_dim];
            dims.extend(std::iter::repeat_n(spec.hidden, spec.gcn_layers));
            graphs.push(GraphBranch {
                gcn: Gcn::new(params, rng, &format!("{name}.gcn"), &dims),
                proj: Linear::new(params, rng, &format!("{name}.proj"), spec.hidden, spec.user_dim),
            });
        }
    }
    let head_activation = if spec.fm { Activation::Identity } else { spec.task.activation() };
    let head = Mlp::new(params, rng, "head", &[spec.user_dim + spec.item_dim, spec.hidden, 1], head_activation);
    FrameworkLayout {
        user_tables,
        item_tables,
        user_proj,
        item_proj,
        interactions,
        items_in,
        attention,
        items_set,
        graphs,
        head,
    }
}
