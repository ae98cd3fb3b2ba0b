//! Four-scenario test split: user-cold, item-cold, user-item-cold and warm.

use std::collections::{BTreeMap, HashSet};

use rand::seq::{index, SliceRandom};

use super::dataset::{Dataset, Interaction};
use super::episodes::{make_episodes, sample_episode, Episode, Group, DEFAULT_SUPPORT_SIZE};
use crate::rng::{derive_seed, stream_rng};

#[derive(Clone, Debug)]
pub struct SplitConfig {
    pub support_size: usize,
    /// Share of training users whose episodes are held out for validation.
    pub validation_fraction: f64,
    pub cold_user_fraction: f64,
    pub cold_item_fraction: f64,
    pub warm_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            support_size: DEFAULT_SUPPORT_SIZE,
            validation_fraction: 0.1,
            cold_user_fraction: 0.1,
            cold_item_fraction: 0.1,
            warm_fraction: 0.1,
        }
    }
}

/// Test episodes by scenario.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TestGroups {
    pub user_cold: Vec<Episode>,
    pub item_cold: Vec<Episode>,
    pub user_item_cold: Vec<Episode>,
    pub warm: Vec<Episode>,
}

impl TestGroups {
    pub fn get(&self, group: Group) -> &[Episode] {
        match group {
            Group::UserCold => &self.user_cold,
            Group::ItemCold => &self.item_cold,
            Group::UserItemCold => &self.user_item_cold,
            Group::Warm => &self.warm,
            Group::Train | Group::Validation => &[],
        }
    }

    fn get_mut(&mut self, group: Group) -> &mut Vec<Episode> {
        match group {
            Group::UserCold => &mut self.user_cold,
            Group::ItemCold => &mut self.item_cold,
            Group::UserItemCold => &mut self.user_item_cold,
            Group::Warm => &mut self.warm,
            Group::Train | Group::Validation => unreachable!("not a test group"),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Episode> {
        Group::TESTS.into_iter().flat_map(move |g| self.get(g).iter())
    }
}

/// Training and validation episodes plus the four test groups.
#[derive(Clone, Debug, Default)]
pub struct SplitBundle {
    pub train_interactions: Vec<Interaction>,
    pub train: Vec<Episode>,
    pub validation: Vec<Episode>,
    pub tests: TestGroups,
    /// Users left out because they had too few interactions for an episode.
    pub skipped_users: usize,
}

impl SplitBundle {
    pub fn episodes(&self, group: Group) -> &[Episode] {
        match group {
            Group::Train => &self.train,
            Group::Validation => &self.validation,
            g => self.tests.get(g),
        }
    }

    pub fn summary(&self) -> String {
        let mut out = format!("train_interactions\t{}\n", self.train_interactions.len());
        for g in [Group::Train, Group::Validation].into_iter().chain(Group::TESTS) {
            let eps = self.episodes(g);
            let targets: usize = eps.iter().map(|e| e.target.len()).sum();
            out.push_str(&format!("{g}\t{} episodes\t{targets} targets\n", eps.len()));
        }
        out.push_str(&format!("skipped_users\t{}\n", self.skipped_users));
        out
    }
}

/// Labels each test episode by whether its user and target items appear in
/// `train`. Episodes whose targets mix seen and unseen items are split in two,
/// sharing the support.
pub fn assign_test_groups(train: &Dataset, episodes: Vec<Episode>) -> TestGroups {
    let users = train.users_with_interactions();
    let items = train.items_with_interactions();
    let mut groups = TestGroups::default();
    for e in episodes {
        let user_seen = users.contains(&e.user);
        let (seen, unseen): (Vec<_>, Vec<_>) = e.target.iter().partition(|(i, _)| items.contains(i));
        for (item_seen, target) in [(true, seen), (false, unseen)] {
            if target.is_empty() {
                continue;
            }
            let group = Group::classify(user_seen, item_seen);
            groups.get_mut(group).push(Episode {
                id: format!("{group}-{}", train.users.ids[e.user]),
                user: e.user,
                group,
                support: e.support.clone(),
                target,
            });
        }
    }
    groups
}

/// Builds one test episode per user appearing in `pool`.
///
/// Users known to `train` draw their support from their training
/// interactions and are scored on all their pool interactions. Unseen users
/// draw the support from the pool itself.
pub fn test_episodes(train: &Dataset, pool: &[Interaction], support_size: usize, seed: u64) -> (Vec<Episode>, usize) {
    let history = train.by_user();
    let mut by_user: BTreeMap<usize, Vec<Interaction>> = BTreeMap::new();
    for it in pool {
        by_user.entry(it.user).or_default().push(*it);
    }
    let mut out = Vec::new();
    let mut skipped = 0;
    for (user, mut list) in by_user {
        list.sort_by_key(|it| it.item);
        let mut rng = stream_rng(seed, "test-episodes", user as u64);
        let known = &history[user];
        let sampled = if known.is_empty() {
            sample_episode(&list, support_size, &mut rng)
        } else if known.len() >= support_size {
            let mut idx: Vec<usize> = index::sample(&mut rng, known.len(), support_size).into_vec();
            idx.sort_unstable();
            let support = idx.iter().map(|&k| (known[k].item, known[k].rating)).collect();
            Some((support, list.iter().map(|it| (it.item, it.rating)).collect()))
        } else {
            None
        };
        match sampled {
            Some((support, target)) => out.push(Episode {
                id: format!("test-{}", train.users.ids[user]),
                user,
                group: Group::Warm,
                support,
                target,
            }),
            None => skipped += 1,
        }
    }
    (out, skipped)
}

/// Holds out the episodes of `fraction` of the users for validation.
pub fn split_validation(episodes: Vec<Episode>, fraction: f64, seed: u64) -> (Vec<Episode>, Vec<Episode>) {
    let mut users: Vec<usize> = episodes.iter().map(|e| e.user).collect();
    users.sort_unstable();
    users.dedup();
    let count = ((users.len() as f64) * fraction).round() as usize;
    users.shuffle(&mut stream_rng(seed, "validation", 0));
    let held: HashSet<usize> = users.into_iter().take(count).collect();
    let (mut val, train): (Vec<_>, Vec<_>) = episodes.into_iter().partition(|e| held.contains(&e.user));
    for e in &mut val {
        e.group = Group::Validation;
        e.id = e.id.replacen("train-", "validation-", 1);
    }
    (train, val)
}

/// Rounded share of `n`.
pub fn fraction_of(n: usize, fraction: f64) -> usize {
    ((n as f64) * fraction).round() as usize
}

/// Uniformly chosen subset of `candidates` of the given size, returned sorted.
pub(crate) fn choose_sorted(candidates: &[usize], count: usize, seed: u64, stream: &str) -> Vec<usize> {
    let mut rng = stream_rng(seed, stream, 0);
    let mut out: Vec<usize> = index::sample(&mut rng, candidates.len(), count.min(candidates.len()))
        .into_iter()
        .map(|k| candidates[k])
        .collect();
    out.sort_unstable();
    out
}

/// Turns a train/test interaction partition into episodes.
pub fn bundle_from_partition(
    d: &Dataset,
    train_interactions: Vec<Interaction>,
    pool: &[Interaction],
    cfg: &SplitConfig,
    seed: u64,
) -> SplitBundle {
    let train_ds = d.with_interactions(train_interactions);
    let (episodes, skipped_train) = make_episodes(&train_ds, cfg.support_size, derive_seed(seed, "train-episodes", 0));
    let (train, validation) = split_validation(episodes, cfg.validation_fraction, seed);
    let (tests, skipped_test) = test_episodes(&train_ds, pool, cfg.support_size, seed);
    SplitBundle {
        tests: assign_test_groups(&train_ds, tests),
        train,
        validation,
        train_interactions: train_ds.interactions,
        skipped_users: skipped_train + skipped_test,
    }
}

/// Generic split: a share of users and items become cold, a share of the
/// remaining interactions becomes warm test data, the rest is training data.
pub fn generic_split(d: &Dataset, cfg: &SplitConfig, seed: u64) -> SplitBundle {
    let mut users: Vec<usize> = d.users_with_interactions().into_iter().collect();
    users.sort_unstable();
    let mut items: Vec<usize> = d.items_with_interactions().into_iter().collect();
    items.sort_unstable();
    let cold_users: HashSet<usize> =
        choose_sorted(&users, fraction_of(users.len(), cfg.cold_user_fraction), seed, "cold-users")
            .into_iter()
            .collect();
    let cold_items: HashSet<usize> =
        choose_sorted(&items, fraction_of(items.len(), cfg.cold_item_fraction), seed, "cold-items")
            .into_iter()
            .collect();

    let mut pool = Vec::new();
    let mut remaining = Vec::new();
    for it in &d.interactions {
        if cold_users.contains(&it.user) || cold_items.contains(&it.item) {
            pool.push(*it);
        } else {
            remaining.push(*it);
        }
    }
    let positions: Vec<usize> = (0..remaining.len()).collect();
    let warm: HashSet<usize> =
        choose_sorted(&positions, fraction_of(remaining.len(), cfg.warm_fraction), seed, "warm").into_iter().collect();
    let mut train = Vec::new();
    for (k, it) in remaining.into_iter().enumerate() {
        if warm.contains(&k) {
            pool.push(it);
        } else {
            train.push(it);
        }
    }
    bundle_from_partition(d, train, &pool, cfg, seed)
}
