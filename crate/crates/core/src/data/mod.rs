//! Datasets, graph heuristics, episodes and the cold-start split generators.

mod dataset;
mod episodes;
mod graphs;
mod io;
mod kuairec;
mod split;
mod synthetic;

pub use dataset::{Block, Dataset, EntityTable, Interaction, RatingKind, Vocab};
pub use episodes::{
    episodes_to_string, make_episodes, parse_episodes, read_episodes, write_episodes, Episode, Group,
    DEFAULT_SUPPORT_SIZE,
};
pub use graphs::{build_same_attribute_graph, build_same_rating_graph, DEFAULT_SAME_RATING_K};
pub use io::{
    interactions_csv, load_dataset, load_dir, read_interactions, write_atomic, write_dir, DatasetFiles, BLOCK_FILE,
    INTERACTIONS_FILE, ITEMS_FILE, SOCIAL_FILE, USERS_FILE,
};
pub use kuairec::{kuairec_partition, kuairec_split, like_label, KuairecPartition, KUAIREC_FRACTION};
pub use split::{
    assign_test_groups, bundle_from_partition, fraction_of, generic_split, split_validation, test_episodes,
    SplitBundle, SplitConfig, TestGroups,
};
pub use synthetic::{generate_synthetic, latent_score, SyntheticData, SyntheticSpec};
