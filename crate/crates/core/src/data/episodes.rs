use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;

use super::dataset::{Dataset, Interaction};
use super::io::write_atomic;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// Support size used for training episodes unless configured otherwise.
pub const DEFAULT_SUPPORT_SIZE: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Group {
    Train,
    Validation,
    UserCold,
    ItemCold,
    UserItemCold,
    Warm,
}

impl Group {
    pub const TESTS: [Group; 4] = [Group::UserCold, Group::ItemCold, Group::UserItemCold, Group::Warm];

    pub fn as_str(self) -> &'static str {
        match self {
            Group::Train => "train",
            Group::Validation => "validation",
            Group::UserCold => "user_cold",
            Group::ItemCold => "item_cold",
            Group::UserItemCold => "user_item_cold",
            Group::Warm => "warm",
        }
    }

    /// Test group for a user/item pair given their presence in training data.
    pub fn classify(user_seen: bool, item_seen: bool) -> Group {
        match (user_seen, item_seen) {
            (false, true) => Group::UserCold,
            (true, false) => Group::ItemCold,
            (false, false) => Group::UserItemCold,
            (true, true) => Group::Warm,
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "train" => Group::Train,
            "validation" => Group::Validation,
            "user_cold" => Group::UserCold,
            "item_cold" => Group::ItemCold,
            "user_item_cold" => Group::UserItemCold,
            "warm" => Group::Warm,
            other => return Err(Error::Data(format!("unknown episode group {other:?}"))),
        })
    }
}

/// One user's support and target sets, as `(item, rating)` pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    pub id: String,
    pub user: usize,
    pub group: Group,
    pub support: Vec<(usize, f64)>,
    pub target: Vec<(usize, f64)>,
}

impl Episode {
    pub fn target_items(&self) -> Vec<usize> {
        self.target.iter().map(|&(i, _)| i).collect()
    }

    pub fn target_ratings(&self) -> Vec<f64> {
        self.target.iter().map(|&(_, r)| r).collect()
    }
}

type Pairs = Vec<(usize, f64)>;

/// Samples `support_size` interactions without replacement as support and
/// keeps the rest as target. Returns `None` when the list is too short.
pub(crate) fn sample_episode(
    list: &[Interaction],
    support_size: usize,
    rng: &mut impl rand::Rng,
) -> Option<(Pairs, Pairs)> {
    if list.len() < support_size + 1 {
        return None;
    }
    let mut idx: Vec<usize> = (0..list.len()).collect();
    idx.shuffle(rng);
    let mut chosen = idx[..support_size].to_vec();
    chosen.sort_unstable();
    let mut in_support = vec![false; list.len()];
    for &k in &chosen {
        in_support[k] = true;
    }
    let support = chosen.iter().map(|&k| (list[k].item, list[k].rating)).collect();
    let target = list.iter().enumerate().filter(|(k, _)| !in_support[*k]).map(|(_, it)| (it.item, it.rating)).collect();
    Some((support, target))
}

/// One training episode per user with at least `support_size + 1`
/// interactions. Returns the episodes and the number of users skipped.
///
/// Each user's sample depends only on `(seed, user)`.
pub fn make_episodes(d: &Dataset, support_size: usize, seed: u64) -> (Vec<Episode>, usize) {
    assert!(support_size >= 1, "support size must be at least 1");
    let mut episodes = Vec::new();
    let mut skipped = 0;
    for (user, list) in d.by_user().into_iter().enumerate() {
        if list.is_empty() {
            continue;
        }
        let mut rng = stream_rng(seed, "episodes", user as u64);
        match sample_episode(&list, support_size, &mut rng) {
            Some((support, target)) => episodes.push(Episode {
                id: format!("train-{}", d.users.ids[user]),
                user,
                group: Group::Train,
                support,
                target,
            }),
            None => skipped += 1,
        }
    }
    (episodes, skipped)
}

fn format_pairs(d: &Dataset, label: &str, list: &[(usize, f64)]) -> String {
    let body: Vec<String> = list.iter().map(|&(i, r)| format!("{}={}", d.items.ids[i], r)).collect();
    format!("{label}:{}", body.join(","))
}

/// Line format: `episode_id<TAB>user_id<TAB>group<TAB>support:i=r,...<TAB>target:j=s,...`.
pub fn episodes_to_string(d: &Dataset, episodes: &[Episode]) -> String {
    let mut out = String::new();
    for e in episodes {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            e.id,
            d.users.ids[e.user],
            e.group,
            format_pairs(d, "support", &e.support),
            format_pairs(d, "target", &e.target)
        ));
    }
    out
}

pub fn write_episodes(path: &Path, d: &Dataset, episodes: &[Episode]) -> Result<()> {
    write_atomic(path, episodes_to_string(d, episodes).as_bytes())
}

pub fn parse_episodes(source: &str, text: &str, d: &Dataset) -> Result<Vec<Episode>> {
    let err = |line: usize, message: String| Error::Parse { path: source.to_string(), line, message };
    let parse_list = |line: usize, field: &str, label: &str| -> Result<Vec<(usize, f64)>> {
        let body = field
            .strip_prefix(label)
            .and_then(|s| s.strip_prefix(':'))
            .ok_or_else(|| err(line, format!("expected {label}:...")))?;
        if body.is_empty() {
            return Ok(Vec::new());
        }
        body.split(',')
            .map(|pair| {
                let (item, rating) =
                    pair.split_once('=').ok_or_else(|| err(line, format!("malformed pair {pair:?}")))?;
                let item = d.items.lookup(item).ok_or_else(|| err(line, format!("unknown item {item}")))?;
                let rating: f64 = rating.parse().map_err(|_| err(line, format!("invalid rating {rating:?}")))?;
                Ok((item, rating))
            })
            .collect()
    };
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').collect();
        if fields.len() != 5 {
            return Err(err(line, format!("expected 5 tab-separated fields, found {}", fields.len())));
        }
        let user = d.users.lookup(fields[1]).ok_or_else(|| err(line, format!("unknown user {}", fields[1])))?;
        let group: Group = fields[2].parse().map_err(|e: Error| err(line, e.to_string()))?;
        let support = parse_list(line, fields[3], "support")?;
        let target = parse_list(line, fields[4], "target")?;
        if target.is_empty() {
            return Err(err(line, "empty target set".into()));
        }
        out.push(Episode { id: fields[0].to_string(), user, group, support, target });
    }
    Ok(out)
}

pub fn read_episodes(path: &Path, d: &Dataset) -> Result<Vec<Episode>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_episodes(&path.display().to_string(), &text, d)
}
