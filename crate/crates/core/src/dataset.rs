//! Interaction ingest, binarization, filtering, splitting and sparsification.
//!
//! Everything downstream works on dense integer indices. The [`Dataset`]
//! produced by [`split`] owns the string-to-index maps for users and items
//! and the three disjoint interaction sets.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_file, write_file};
use crate::rng;

/// A set of `(user, item)` index pairs with `r_ui = 1`, ordered by `(u, i)`.
pub type Interactions = BTreeSet<(usize, usize)>;

/// A set of `(user_key, item_key)` pairs before indexing.
pub type KeyPairs = BTreeSet<(String, String)>;

/// One row of a raw interaction log.
#[derive(Debug, Clone, PartialEq)]
pub struct RawInteraction {
    pub user_key: String,
    pub item_key: String,
    /// Rating or count. Discarded by [`binarize`].
    pub value: f64,
    pub timestamp: Option<i64>,
}

/// Column layout of a delimiter-separated interaction log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputFormat {
    pub delimiter: char,
    pub user_col: usize,
    pub item_col: usize,
    pub value_col: Option<usize>,
    pub timestamp_col: Option<usize>,
    pub has_header: bool,
}

impl Default for InputFormat {
    fn default() -> Self {
        InputFormat {
            delimiter: ',',
            user_col: 0,
            item_col: 1,
            value_col: Some(2),
            timestamp_col: None,
            has_header: false,
        }
    }
}

impl InputFormat {
    fn max_col(&self) -> usize {
        [
            Some(self.user_col),
            Some(self.item_col),
            self.value_col,
            self.timestamp_col,
        ]
        .into_iter()
        .flatten()
        .max()
        .unwrap_or(0)
    }
}

/// Parses a delimiter-separated interaction log.
///
/// Rows are returned in input order. A missing value column yields `1.0`.
/// Errors carry the 1-based line number of the offending row.
pub fn ingest<R: Read>(source: R, format: &InputFormat) -> Result<Vec<RawInteraction>> {
    if !format.delimiter.is_ascii() {
        return Err(Error::InvalidArgument(format!(
            "delimiter {:?} is not a single-byte character",
            format.delimiter
        )));
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(format.delimiter as u8)
        .has_headers(format.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let mut expected_len = if format.has_header {
        Some(reader.headers().map_err(csv_error)?.len())
    } else {
        None
    };
    let required = format.max_col() + 1;

    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let expected = *expected_len.get_or_insert(record.len());
        if record.len() != expected || record.len() < required {
            return Err(Error::parse(
                line,
                format!(
                    "expected {} columns, found {}",
                    expected.max(required),
                    record.len()
                ),
            ));
        }
        let user_key = &record[format.user_col];
        let item_key = &record[format.item_col];
        if user_key.is_empty() {
            return Err(Error::parse(line, "empty user key"));
        }
        if item_key.is_empty() {
            return Err(Error::parse(line, "empty item key"));
        }
        let value = match format.value_col {
            Some(c) => record[c]
                .parse::<f64>()
                .map_err(|e| Error::parse(line, format!("bad value {:?}: {e}", &record[c])))?,
            None => 1.0,
        };
        let timestamp = match format.timestamp_col {
            Some(c) => Some(record[c].parse::<i64>().map_err(|e| {
                Error::parse(line, format!("bad timestamp {:?}: {e}", &record[c]))
            })?),
            None => None,
        };
        out.push(RawInteraction {
            user_key: user_key.to_string(),
            item_key: item_key.to_string(),
            value,
            timestamp,
        });
    }
    Ok(out)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::parse(line, format!("{other:?}")),
    }
}

/// Collapses raw rows into distinct binary `(user, item)` interactions.
pub fn binarize(raws: &[RawInteraction]) -> KeyPairs {
    raws.iter()
        .map(|r| (r.user_key.clone(), r.item_key.clone()))
        .collect()
}

/// Removes users and items with fewer than `min_count` interactions,
/// repeating until no further removal is needed.
pub fn filter_min_interactions(pairs: &KeyPairs, min_count: usize) -> KeyPairs {
    let mut current = pairs.clone();
    if min_count == 0 {
        return current;
    }
    loop {
        let mut user_deg: HashMap<&str, usize> = HashMap::new();
        let mut item_deg: HashMap<&str, usize> = HashMap::new();
        for (u, i) in &current {
            *user_deg.entry(u).or_default() += 1;
            *item_deg.entry(i).or_default() += 1;
        }
        let keep: KeyPairs = current
            .iter()
            .filter(|(u, i)| user_deg[u.as_str()] >= min_count && item_deg[i.as_str()] >= min_count)
            .cloned()
            .collect();
        if keep.len() == current.len() {
            return keep;
        }
        current = keep;
    }
}

/// Dense index for external keys.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMap {
    forward: HashMap<String, usize>,
    backward: Vec<String>,
}

impl IdMap {
    /// Builds a map over the given keys in iteration order, skipping repeats.
    pub fn from_keys<I, S>(keys: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut map = IdMap::default();
        for key in keys {
            map.insert(key.into());
        }
        map
    }

    fn insert(&mut self, key: String) -> usize {
        if let Some(&idx) = self.forward.get(&key) {
            return idx;
        }
        let idx = self.backward.len();
        self.forward.insert(key.clone(), idx);
        self.backward.push(key);
        idx
    }

    pub fn index(&self, key: &str) -> Option<usize> {
        self.forward.get(key).copied()
    }

    pub fn key(&self, index: usize) -> Option<&str> {
        self.backward.get(index).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.backward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.backward.is_empty()
    }

    pub fn keys(&self) -> &[String] {
        &self.backward
    }
}

/// Indexed interactions split into train, validation and test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub user_map: IdMap,
    pub item_map: IdMap,
    pub train: Interactions,
    pub valid: Interactions,
    pub test: Interactions,
}

impl Dataset {
    pub fn num_users(&self) -> usize {
        self.user_map.len()
    }

    pub fn num_items(&self) -> usize {
        self.item_map.len()
    }

    /// Checks range, disjointness and map consistency.
    pub fn validate(&self) -> Result<()> {
        let (m, n) = (self.num_users(), self.num_items());
        for split in [&self.train, &self.valid, &self.test] {
            for &(u, i) in split {
                if u >= m {
                    return Err(Error::OutOfRange { what: "user", index: u, size: m });
                }
                if i >= n {
                    return Err(Error::OutOfRange { what: "item", index: i, size: n });
                }
            }
        }
        let overlap = self.train.intersection(&self.valid).next().is_some()
            || self.train.intersection(&self.test).next().is_some()
            || self.valid.intersection(&self.test).next().is_some();
        if overlap {
            return Err(Error::InvalidArgument("splits are not disjoint".into()));
        }
        Ok(())
    }

    /// Writes `train.tsv`, `valid.tsv`, `test.tsv`, `users.tsv` and `items.tsv`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|source| Error::File {
            path: dir.to_path_buf(),
            source,
        })?;
        write_file(&dir.join("users.tsv"), &format_id_map(&self.user_map)?)?;
        write_file(&dir.join("items.tsv"), &format_id_map(&self.item_map)?)?;
        write_file(&dir.join("train.tsv"), &format_interactions(&self.train))?;
        write_file(&dir.join("valid.tsv"), &format_interactions(&self.valid))?;
        write_file(&dir.join("test.tsv"), &format_interactions(&self.test))?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let dataset = Dataset {
            user_map: parse_id_map(&read_file(&dir.join("users.tsv"))?)?,
            item_map: parse_id_map(&read_file(&dir.join("items.tsv"))?)?,
            train: parse_interactions(&read_file(&dir.join("train.tsv"))?)?,
            valid: parse_interactions(&read_file(&dir.join("valid.tsv"))?)?,
            test: parse_interactions(&read_file(&dir.join("test.tsv"))?)?,
        };
        dataset.validate()?;
        Ok(dataset)
    }
}

/// Splits `pairs` at random into train/valid/test with the given ratios.
///
/// Valid and test receive `⌊|pairs| · ratio⌋` interactions each; train gets
/// everything else. User and item maps cover the full pair set, in sorted
/// key order.
pub fn split(pairs: &KeyPairs, ratios: [f64; 3], seed: u64) -> Result<Dataset> {
    if ratios.iter().any(|r| r.is_nan() || *r <= 0.0 || r.is_infinite()) {
        return Err(Error::InvalidArgument(format!(
            "split ratios must be positive, got {ratios:?}"
        )));
    }
    if (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "split ratios must sum to 1, got {ratios:?}"
        )));
    }
    if pairs.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 interactions to split, got {}",
            pairs.len()
        )));
    }

    let users: BTreeSet<&str> = pairs.iter().map(|(u, _)| u.as_str()).collect();
    let items: BTreeSet<&str> = pairs.iter().map(|(_, i)| i.as_str()).collect();
    let user_map = IdMap::from_keys(users);
    let item_map = IdMap::from_keys(items);

    let mut indexed: Vec<(usize, usize)> = pairs
        .iter()
        .map(|(u, i)| (user_map.forward[u], item_map.forward[i]))
        .collect();
    indexed.sort_unstable();
    indexed.shuffle(&mut rng::stream(seed));

    let n = indexed.len() as f64;
    let n_valid = floor_count(n * ratios[1]);
    let n_test = floor_count(n * ratios[2]);

    let valid = indexed[..n_valid].iter().copied().collect();
    let test = indexed[n_valid..n_valid + n_test].iter().copied().collect();
    let train = indexed[n_valid + n_test..].iter().copied().collect();

    Ok(Dataset {
        user_map,
        item_map,
        train,
        valid,
        test,
    })
}

// Products like 0.29 * 100 land just below the integer.
fn floor_count(x: f64) -> usize {
    (x + 1e-9).floor() as usize
}

/// Keeps `⌈d_u · keep_fraction⌉` of each user's interactions, chosen
/// uniformly at random per user.
pub fn sparsify(train: &Interactions, keep_fraction: f64, seed: u64) -> Result<Interactions> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "keep_fraction must be in (0, 1], got {keep_fraction}"
        )));
    }
    if keep_fraction == 1.0 {
        return Ok(train.clone());
    }
    let mut by_user: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(u, i) in train {
        by_user.entry(u).or_default().push(i);
    }
    let mut out = Interactions::new();
    for (u, mut items) in by_user {
        let keep = ((items.len() as f64 * keep_fraction) - 1e-9).ceil().max(1.0) as usize;
        let mut rng = rng::keyed_stream(seed, u as u64, 0);
        let (chosen, _) = items.partial_shuffle(&mut rng, keep);
        out.extend(chosen.iter().map(|&i| (u, i)));
    }
    Ok(out)
}

/// Per-user item lists over `num_users` users.
pub fn items_by_user(interactions: &Interactions, num_users: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); num_users];
    for &(u, i) in interactions {
        out[u].push(i);
    }
    out
}

pub fn format_interactions(set: &Interactions) -> String {
    let mut out = String::with_capacity(set.len() * 8);
    for (u, i) in set {
        let _ = writeln!(out, "{u}\t{i}");
    }
    out
}

pub fn parse_interactions(text: &str) -> Result<Interactions> {
    let mut out = Interactions::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n as u64 + 1;
        let mut parts = line.split('\t');
        let (Some(u), Some(i), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::parse(line_no, "expected \"u<TAB>i\""));
        };
        let u = u
            .parse()
            .map_err(|e| Error::parse(line_no, format!("bad user index: {e}")))?;
        let i = i
            .parse()
            .map_err(|e| Error::parse(line_no, format!("bad item index: {e}")))?;
        if !out.insert((u, i)) {
            return Err(Error::parse(line_no, "duplicate interaction"));
        }
    }
    Ok(out)
}

fn check_key(key: &str) -> Result<()> {
    if key.is_empty() || key.contains(['\t', '\n', '\r']) {
        return Err(Error::InvalidArgument(format!(
            "key {key:?} cannot be stored in a tab-separated file"
        )));
    }
    Ok(())
}

fn format_id_map(map: &IdMap) -> Result<String> {
    let mut out = String::new();
    for (idx, key) in map.keys().iter().enumerate() {
        check_key(key)?;
        let _ = writeln!(out, "{idx}\t{key}");
    }
    Ok(out)
}

fn parse_id_map(text: &str) -> Result<IdMap> {
    let mut map = IdMap::default();
    for (n, line) in text.lines().enumerate() {
        let line_no = n as u64 + 1;
        let Some((idx, key)) = line.split_once('\t') else {
            return Err(Error::parse(line_no, "expected \"index<TAB>key\""));
        };
        let idx: usize = idx
            .parse()
            .map_err(|e| Error::parse(line_no, format!("bad index: {e}")))?;
        if idx != n {
            return Err(Error::parse(line_no, format!("index {idx} out of sequence")));
        }
        if map.forward.contains_key(key) {
            return Err(Error::parse(line_no, format!("duplicate key {key:?}")));
        }
        map.insert(key.to_string());
    }
    Ok(map)
}

/// Writes `user_key<TAB>item_key` lines in sorted order.
pub fn format_key_pairs(pairs: &KeyPairs) -> Result<String> {
    let mut out = String::new();
    for (u, i) in pairs {
        check_key(u)?;
        check_key(i)?;
        let _ = writeln!(out, "{u}\t{i}");
    }
    Ok(out)
}

pub fn parse_key_pairs(text: &str) -> Result<KeyPairs> {
    let mut out = KeyPairs::new();
    for (n, line) in text.lines().enumerate() {
        let Some((u, i)) = line.split_once('\t') else {
            return Err(Error::parse(n as u64 + 1, "expected \"user<TAB>item\""));
        };
        if u.is_empty() || i.is_empty() || i.contains('\t') {
            return Err(Error::parse(n as u64 + 1, "malformed key pair"));
        }
        out.insert((u.to_string(), i.to_string()));
    }
    Ok(out)
}
