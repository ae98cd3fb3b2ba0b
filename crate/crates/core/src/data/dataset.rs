use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};

/// How interaction ratings are expressed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RatingKind {
    /// Labels in {0, 1}.
    Binary,
    /// Integer ratings in `min..=max`.
    Scale { min: i64, max: i64 },
}

impl RatingKind {
    pub fn contains(self, rating: f64) -> bool {
        match self {
            RatingKind::Binary => rating == 0.0 || rating == 1.0,
            RatingKind::Scale { min, max } => rating >= min as f64 && rating <= max as f64,
        }
    }

    /// Size of the one-hot rating vocabulary.
    pub fn label_slots(self) -> usize {
        match self {
            RatingKind::Binary => 2,
            RatingKind::Scale { min, max } => (max - min + 1) as usize,
        }
    }

    /// Position of `rating` in the one-hot vocabulary.
    pub fn label_index(self, rating: f64) -> Result<usize> {
        let base = match self {
            RatingKind::Binary => 0,
            RatingKind::Scale { min, .. } => min,
        };
        if rating.fract() != 0.0 || !self.contains(rating) {
            return Err(Error::Data(format!("rating {rating} is outside the {self} vocabulary")));
        }
        Ok((rating as i64 - base) as usize)
    }

    pub fn parse(s: &str) -> Result<Self> {
        if s == "binary" {
            return Ok(RatingKind::Binary);
        }
        let bad = || Error::Data(format!("unknown rating kind {s:?}; expected binary or scale:MIN-MAX"));
        let range = s.strip_prefix("scale:").ok_or_else(bad)?;
        let (lo, hi) = range.split_once('-').ok_or_else(bad)?;
        let min: i64 = lo.parse().map_err(|_| bad())?;
        let max: i64 = hi.parse().map_err(|_| bad())?;
        if max < min {
            return Err(bad());
        }
        Ok(RatingKind::Scale { min, max })
    }

    /// Binary when every rating is 0 or 1, otherwise the integer hull of the values.
    pub fn infer(ratings: impl Iterator<Item = f64>) -> Self {
        let (mut lo, mut hi, mut binary) = (f64::INFINITY, f64::NEG_INFINITY, true);
        for r in ratings {
            lo = lo.min(r);
            hi = hi.max(r);
            binary &= r == 0.0 || r == 1.0;
        }
        if binary {
            RatingKind::Binary
        } else {
            RatingKind::Scale { min: lo.floor() as i64, max: hi.ceil() as i64 }
        }
    }
}

impl fmt::Display for RatingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RatingKind::Binary => write!(f, "binary"),
            RatingKind::Scale { min, max } => write!(f, "scale:{min}-{max}"),
        }
    }
}

/// Categorical vocabulary for one feature field. Index 0 is reserved for
/// unseen values; known values are numbered from 1 in first-seen order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Vocab {
    values: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    pub fn insert(&mut self, value: &str) -> usize {
        if let Some(&i) = self.index.get(value) {
            return i;
        }
        self.values.push(value.to_string());
        let i = self.values.len();
        self.index.insert(value.to_string(), i);
        i
    }

    pub fn encode(&self, value: &str) -> usize {
        self.index.get(value).copied().unwrap_or(0)
    }

    pub fn decode(&self, index: usize) -> Option<&str> {
        index.checked_sub(1).and_then(|i| self.values.get(i)).map(String::as_str)
    }

    /// Rows needed in an embedding table, including the OOV row.
    pub fn table_size(&self) -> usize {
        self.values.len() + 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interaction {
    pub user: usize,
    pub item: usize,
    pub rating: f64,
    pub timestamp: Option<i64>,
}

/// Users or items with their categorical feature fields.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EntityTable {
    pub ids: Vec<String>,
    pub fields: Vec<String>,
    pub vocabs: Vec<Vocab>,
    /// Encoded feature values, one row per entity.
    pub features: Vec<Vec<usize>>,
    index: HashMap<String, usize>,
}

impl EntityTable {
    pub fn new(fields: Vec<String>, rows: Vec<(String, Vec<String>)>) -> Result<Self> {
        let mut table = EntityTable { vocabs: vec![Vocab::default(); fields.len()], fields, ..Default::default() };
        for (id, values) in rows {
            if values.len() != table.fields.len() {
                return Err(Error::Data(format!(
                    "{id}: expected {} feature values, got {}",
                    table.fields.len(),
                    values.len()
                )));
            }
            if table.index.contains_key(&id) {
                return Err(Error::Data(format!("duplicate id {id}")));
            }
            let encoded = values.iter().zip(table.vocabs.iter_mut()).map(|(v, vocab)| vocab.insert(v)).collect();
            table.index.insert(id.clone(), table.ids.len());
            table.ids.push(id);
            table.features.push(encoded);
        }
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn lookup(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn table_sizes(&self) -> Vec<usize> {
        self.vocabs.iter().map(Vocab::table_size).collect()
    }

    /// Raw (decoded) feature values of entity `k`.
    pub fn raw_values(&self, k: usize) -> Vec<&str> {
        self.features[k].iter().zip(&self.vocabs).map(|(&i, v)| v.decode(i).unwrap_or("")).collect()
    }
}

/// A user x item block in which every user rated every item.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Block {
    pub users: Vec<usize>,
    pub items: Vec<usize>,
}

/// Users, items, interaction log and optional social edges.
///
/// Immutable after construction; subsets are derived with
/// [`Dataset::with_interactions`].
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub users: EntityTable,
    pub items: EntityTable,
    pub interactions: Vec<Interaction>,
    /// Undirected, deduplicated, stored with `a < b`.
    pub social: Vec<(usize, usize)>,
    pub rating_kind: RatingKind,
    pub block: Option<Block>,
}

impl Dataset {
    pub fn new(
        users: EntityTable,
        items: EntityTable,
        interactions: Vec<Interaction>,
        social: Vec<(usize, usize)>,
        rating_kind: RatingKind,
        block: Option<Block>,
    ) -> Result<Self> {
        let mut seen = HashSet::with_capacity(interactions.len());
        for it in &interactions {
            if it.user >= users.len() || it.item >= items.len() {
                return Err(Error::Data(format!(
                    "interaction references unknown user {} or item {}",
                    it.user, it.item
                )));
            }
            if !seen.insert((it.user, it.item)) {
                return Err(Error::DuplicateInteraction {
                    user: users.ids[it.user].clone(),
                    item: items.ids[it.item].clone(),
                });
            }
            if !rating_kind.contains(it.rating) {
                return Err(Error::Data(format!(
                    "rating {} for ({}, {}) is outside {rating_kind}",
                    it.rating, users.ids[it.user], items.ids[it.item]
                )));
            }
        }
        let mut edges = BTreeSet::new();
        for &(a, b) in &social {
            if a >= users.len() || b >= users.len() {
                return Err(Error::Data(format!("social edge ({a}, {b}) references an unknown user")));
            }
            if a != b {
                edges.insert((a.min(b), a.max(b)));
            }
        }
        if let Some(block) = &block {
            let present: HashSet<(usize, usize)> = seen;
            for &u in &block.users {
                for &i in &block.items {
                    if !present.contains(&(u, i)) {
                        return Err(Error::Data(format!(
                            "block is not fully observed: user {} has no rating for item {}",
                            users.ids[u], items.ids[i]
                        )));
                    }
                }
            }
        }
        Ok(Dataset { users, items, interactions, social: edges.into_iter().collect(), rating_kind, block })
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    /// Same users, items and social graph with a different interaction log.
    /// The fully-observed block is dropped.
    pub fn with_interactions(&self, interactions: Vec<Interaction>) -> Dataset {
        Dataset {
            users: self.users.clone(),
            items: self.items.clone(),
            interactions,
            social: self.social.clone(),
            rating_kind: self.rating_kind,
            block: None,
        }
    }

    /// Interactions grouped per user, each list sorted by item.
    pub fn by_user(&self) -> Vec<Vec<Interaction>> {
        let mut out = vec![Vec::new(); self.num_users()];
        for it in &self.interactions {
            out[it.user].push(*it);
        }
        for list in &mut out {
            list.sort_by_key(|it| it.item);
        }
        out
    }

    pub fn users_with_interactions(&self) -> HashSet<usize> {
        self.interactions.iter().map(|it| it.user).collect()
    }

    pub fn items_with_interactions(&self) -> HashSet<usize> {
        self.interactions.iter().map(|it| it.item).collect()
    }
}
