//! CSV formats for users, items, interactions, social edges and the optional
//! fully-observed block declaration.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::dataset::{Block, Dataset, EntityTable, Interaction, RatingKind};
use crate::error::{Error, Result};

pub const USERS_FILE: &str = "users.csv";
pub const ITEMS_FILE: &str = "items.csv";
pub const INTERACTIONS_FILE: &str = "interactions.csv";
pub const SOCIAL_FILE: &str = "social.csv";
pub const BLOCK_FILE: &str = "block.csv";

/// Paths of the files making up a dataset.
#[derive(Clone, Debug)]
pub struct DatasetFiles {
    pub users: PathBuf,
    pub items: PathBuf,
    pub interactions: PathBuf,
    pub social: Option<PathBuf>,
    pub block: Option<PathBuf>,
}

impl DatasetFiles {
    /// Standard file names inside `dir`; optional files are used when present.
    pub fn in_dir(dir: &Path) -> Self {
        let optional = |name: &str| Some(dir.join(name)).filter(|p| p.exists());
        DatasetFiles {
            users: dir.join(USERS_FILE),
            items: dir.join(ITEMS_FILE),
            interactions: dir.join(INTERACTIONS_FILE),
            social: optional(SOCIAL_FILE),
            block: optional(BLOCK_FILE),
        }
    }
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(file))
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse { path: path.display().to_string(), line: line as usize, message: message.into() }
}

fn read_entities(path: &Path, id_column: &str) -> Result<EntityTable> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers()?.clone();
    if headers.get(0) != Some(id_column) {
        return Err(parse_err(path, 1, format!("header must start with {id_column}")));
    }
    let fields: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != headers.len() {
            return Err(parse_err(path, line, format!("expected {} columns, found {}", headers.len(), rec.len())));
        }
        let id = rec[0].to_string();
        if id.is_empty() {
            return Err(parse_err(path, line, "empty id"));
        }
        rows.push((id, rec.iter().skip(1).map(str::to_string).collect()));
    }
    EntityTable::new(fields, rows).map_err(|e| parse_err(path, 0, e.to_string()))
}

/// Reads `user_id,item_id,rating[,timestamp]` rows against known users/items.
pub fn read_interactions(path: &Path, users: &EntityTable, items: &EntityTable) -> Result<Vec<Interaction>> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers()?.clone();
    let names: Vec<&str> = headers.iter().collect();
    if names.len() < 3 || names[..3] != ["user_id", "item_id", "rating"] || names.len() > 4 {
        return Err(parse_err(path, 1, "header must be user_id,item_id,rating[,timestamp]"));
    }
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() < 3 || rec.len() > names.len() {
            return Err(parse_err(path, line, format!("expected {} columns, found {}", names.len(), rec.len())));
        }
        let user = users.lookup(&rec[0]).ok_or_else(|| parse_err(path, line, format!("unknown user {}", &rec[0])))?;
        let item = items.lookup(&rec[1]).ok_or_else(|| parse_err(path, line, format!("unknown item {}", &rec[1])))?;
        let rating: f64 = rec[2]
            .parse()
            .ok()
            .filter(|r: &f64| r.is_finite())
            .ok_or_else(|| parse_err(path, line, format!("invalid rating {:?}", &rec[2])))?;
        let timestamp = match rec.get(3) {
            Some(s) if !s.is_empty() => {
                Some(s.parse().map_err(|_| parse_err(path, line, format!("invalid timestamp {s:?}")))?)
            }
            _ => None,
        };
        if !seen.insert((user, item)) {
            return Err(Error::DuplicateInteraction { user: rec[0].to_string(), item: rec[1].to_string() });
        }
        out.push(Interaction { user, item, rating, timestamp });
    }
    Ok(out)
}

fn read_social(path: &Path, users: &EntityTable) -> Result<Vec<(usize, usize)>> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["user_a", "user_b"] {
        return Err(parse_err(path, 1, "header must be user_a,user_b"));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 2 {
            return Err(parse_err(path, line, "expected 2 columns"));
        }
        let a = users.lookup(&rec[0]).ok_or_else(|| parse_err(path, line, format!("unknown user {}", &rec[0])))?;
        let b = users.lookup(&rec[1]).ok_or_else(|| parse_err(path, line, format!("unknown user {}", &rec[1])))?;
        out.push((a, b));
    }
    Ok(out)
}

fn read_block(path: &Path, users: &EntityTable, items: &EntityTable) -> Result<Block> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["kind", "id"] {
        return Err(parse_err(path, 1, "header must be kind,id"));
    }
    let mut block = Block::default();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        match (rec.get(0), rec.get(1)) {
            (Some("user"), Some(id)) => {
                block.users.push(users.lookup(id).ok_or_else(|| parse_err(path, line, format!("unknown user {id}")))?)
            }
            (Some("item"), Some(id)) => {
                block.items.push(items.lookup(id).ok_or_else(|| parse_err(path, line, format!("unknown item {id}")))?)
            }
            _ => return Err(parse_err(path, line, "expected user,<id> or item,<id>")),
        }
    }
    block.users.sort_unstable();
    block.users.dedup();
    block.items.sort_unstable();
    block.items.dedup();
    Ok(block)
}

/// Loads and validates a dataset. The rating kind is inferred from the
/// interaction values when not given.
pub fn load_dataset(files: &DatasetFiles, rating_kind: Option<RatingKind>) -> Result<Dataset> {
    let users = read_entities(&files.users, "user_id")?;
    let items = read_entities(&files.items, "item_id")?;
    let interactions = read_interactions(&files.interactions, &users, &items)?;
    let social = match &files.social {
        Some(p) => read_social(p, &users)?,
        None => Vec::new(),
    };
    let block = match &files.block {
        Some(p) => Some(read_block(p, &users, &items)?),
        None => None,
    };
    let kind = rating_kind.unwrap_or_else(|| RatingKind::infer(interactions.iter().map(|i| i.rating)));
    Dataset::new(users, items, interactions, social, kind, block)
}

pub fn load_dir(dir: &Path, rating_kind: Option<RatingKind>) -> Result<Dataset> {
    load_dataset(&DatasetFiles::in_dir(dir), rating_kind)
}

/// Writes `contents` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let tmp = path.with_extension(format!("{}.tmp", path.extension().and_then(|e| e.to_str()).unwrap_or("")));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(contents).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn entity_csv(table: &EntityTable, id_column: &str) -> String {
    let mut out = String::from(id_column);
    for f in &table.fields {
        out.push(',');
        out.push_str(f);
    }
    out.push('\n');
    for (k, id) in table.ids.iter().enumerate() {
        out.push_str(id);
        for v in table.raw_values(k) {
            out.push(',');
            out.push_str(v);
        }
        out.push('\n');
    }
    out
}

pub fn interactions_csv(d: &Dataset, interactions: &[Interaction]) -> String {
    let with_ts = interactions.iter().any(|i| i.timestamp.is_some());
    let mut out = String::from(if with_ts { "user_id,item_id,rating,timestamp\n" } else { "user_id,item_id,rating\n" });
    for it in interactions {
        out.push_str(&format!("{},{},{}", d.users.ids[it.user], d.items.ids[it.item], it.rating));
        if with_ts {
            out.push(',');
            if let Some(ts) = it.timestamp {
                out.push_str(&ts.to_string());
            }
        }
        out.push('\n');
    }
    out
}

/// Writes the standard file set for `d` into `dir`.
pub fn write_dir(d: &Dataset, dir: &Path) -> Result<()> {
    write_atomic(&dir.join(USERS_FILE), entity_csv(&d.users, "user_id").as_bytes())?;
    write_atomic(&dir.join(ITEMS_FILE), entity_csv(&d.items, "item_id").as_bytes())?;
    write_atomic(&dir.join(INTERACTIONS_FILE), interactions_csv(d, &d.interactions).as_bytes())?;
    if !d.social.is_empty() {
        let mut s = String::from("user_a,user_b\n");
        for &(a, b) in &d.social {
            s.push_str(&format!("{},{}\n", d.users.ids[a], d.users.ids[b]));
        }
        write_atomic(&dir.join(SOCIAL_FILE), s.as_bytes())?;
    }
    if let Some(block) = &d.block {
        let mut s = String::from("kind,id\n");
        for &u in &block.users {
            s.push_str(&format!("user,{}\n", d.users.ids[u]));
        }
        for &i in &block.items {
            s.push_str(&format!("item,{}\n", d.items.ids[i]));
        }
        write_atomic(&dir.join(BLOCK_FILE), s.as_bytes())?;
    }
    Ok(())
}
