//! Windowed user–item pair extraction from the walk corpus.
//!
//! Every user occurrence in a walk is paired with each item at an odd offset
//! of at most `sigma` positions. Pairs are counted with multiplicity, and the
//! resulting statistics carry both marginals and the corpus size.

use std::collections::HashMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Vertex;
use crate::io::parse_field;
use crate::walks::WalkCorpus;

/// Counts over the sampled pair multiset `C`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairCorpusStats {
    pair_count: HashMap<(u32, u32), u64>,
    user_count: Vec<u64>,
    item_count: Vec<u64>,
    total: u64,
}

impl PairCorpusStats {
    pub fn empty(num_users: usize, num_items: usize) -> Self {
        PairCorpusStats {
            pair_count: HashMap::new(),
            user_count: vec![0; num_users],
            item_count: vec![0; num_items],
            total: 0,
        }
    }

    /// Builds stats from explicit `(user, item, count)` triples.
    pub fn from_counts<I>(num_users: usize, num_items: usize, counts: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, u64)>,
    {
        let mut stats = Self::empty(num_users, num_items);
        for (u, i, c) in counts {
            stats.check(u, i)?;
            stats.add(u as u32, i as u32, c);
        }
        Ok(stats)
    }

    fn check(&self, u: usize, i: usize) -> Result<()> {
        if u >= self.num_users() {
            return Err(Error::OutOfRange { what: "user", index: u, size: self.num_users() });
        }
        if i >= self.num_items() {
            return Err(Error::OutOfRange { what: "item", index: i, size: self.num_items() });
        }
        Ok(())
    }

    fn add(&mut self, u: u32, i: u32, count: u64) {
        if count == 0 {
            return;
        }
        *self.pair_count.entry((u, i)).or_default() += count;
        self.user_count[u as usize] += count;
        self.item_count[i as usize] += count;
        self.total += count;
    }

    pub fn num_users(&self) -> usize {
        self.user_count.len()
    }

    pub fn num_items(&self) -> usize {
        self.item_count.len()
    }

    /// `#(u, i)`.
    pub fn pair_count(&self, user: usize, item: usize) -> u64 {
        self.pair_count
            .get(&(user as u32, item as u32))
            .copied()
            .unwrap_or(0)
    }

    /// `#(u)`.
    pub fn user_count(&self, user: usize) -> u64 {
        self.user_count[user]
    }

    /// `#(i)`.
    pub fn item_count(&self, item: usize) -> u64 {
        self.item_count[item]
    }

    pub fn user_counts(&self) -> &[u64] {
        &self.user_count
    }

    pub fn item_counts(&self) -> &[u64] {
        &self.item_count
    }

    /// `|C|`.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of distinct pairs with a positive count.
    pub fn distinct_pairs(&self) -> usize {
        self.pair_count.len()
    }

    /// All positive counts, sorted by `(user, item)`.
    pub fn sorted_counts(&self) -> Vec<(usize, usize, u64)> {
        let mut out: Vec<_> = self
            .pair_count
            .iter()
            .map(|(&(u, i), &c)| (u as usize, i as usize, c))
            .collect();
        out.sort_unstable();
        out
    }

    /// Checks the marginal identities `Σ_i #(u,i) = #(u)`, `Σ_u #(u,i) = #(i)`
    /// and `Σ #(u) = Σ #(i) = |C|`.
    pub fn check_marginals(&self) -> Result<()> {
        let mut users = vec![0u64; self.num_users()];
        let mut items = vec![0u64; self.num_items()];
        for (&(u, i), &c) in &self.pair_count {
            users[u as usize] += c;
            items[i as usize] += c;
        }
        let bad = |what: &str| Err(Error::InvalidArgument(format!("inconsistent pair statistics: {what}")));
        if users != self.user_count {
            return bad("user marginals");
        }
        if items != self.item_count {
            return bad("item marginals");
        }
        if self.user_count.iter().sum::<u64>() != self.total
            || self.item_count.iter().sum::<u64>() != self.total
        {
            return bad("total");
        }
        Ok(())
    }

    /// Header `#pairs<TAB>M<TAB>N<TAB>|C|`, then `u<TAB>i<TAB>count` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "#pairs\t{}\t{}\t{}", self.num_users(), self.num_items(), self.total);
        for (u, i, c) in self.sorted_counts() {
            let _ = writeln!(out, "{u}\t{i}\t{c}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
        let mut h = header.split('\t');
        if h.next() != Some("#pairs") {
            return Err(Error::parse(1, "expected #pairs header"));
        }
        let m: usize = parse_field(h.next(), 1, "user count")?;
        let n: usize = parse_field(h.next(), 1, "item count")?;
        let total: u64 = parse_field(h.next(), 1, "total")?;
        let mut stats = Self::empty(m, n);
        for (k, line) in lines.enumerate() {
            let line_no = k as u64 + 2;
            let mut f = line.split('\t');
            let u: usize = parse_field(f.next(), line_no, "user")?;
            let i: usize = parse_field(f.next(), line_no, "item")?;
            let c: u64 = parse_field(f.next(), line_no, "count")?;
            stats.check(u, i).map_err(|e| Error::parse(line_no, e.to_string()))?;
            stats.add(u as u32, i as u32, c);
        }
        if stats.total != total {
            return Err(Error::parse(1, format!("header total {total} != summed counts {}", stats.total)));
        }
        Ok(stats)
    }
}

/// Elementwise sum of two statistics over the same users and items.
pub fn merge(a: &PairCorpusStats, b: &PairCorpusStats) -> Result<PairCorpusStats> {
    let mut out = a.clone();
    merge_into(&mut out, b)?;
    debug_assert!(out.check_marginals().is_ok());
    Ok(out)
}

fn merge_into(acc: &mut PairCorpusStats, other: &PairCorpusStats) -> Result<()> {
    if acc.num_users() != other.num_users() || acc.num_items() != other.num_items() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            acc.num_users(),
            acc.num_items(),
            other.num_users(),
            other.num_items()
        )));
    }
    for (&(u, i), &c) in &other.pair_count {
        acc.add(u, i, c);
    }
    Ok(())
}

fn check_sigma(sigma: usize) -> Result<()> {
    if sigma == 0 || sigma.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "window size must be odd and >= 1, got {sigma}"
        )));
    }
    Ok(())
}

/// Extracts all windowed user–item pairs from `corpus`.
///
/// Only user positions act as centers; each pairs with the items at offsets
/// `±1, ±3, …, ±sigma` that fall inside the walk. `sigma` must be odd.
pub fn sample_pairs(corpus: &WalkCorpus, sigma: usize) -> Result<PairCorpusStats> {
    check_sigma(sigma)?;
    let (m, n) = (corpus.num_users, corpus.num_items);
    let stats: PairCorpusStats = corpus
        .walks
        .par_chunks(256)
        .map(|chunk| {
            let mut stats = PairCorpusStats::empty(m, n);
            for walk in chunk {
                sample_walk(walk, sigma, &mut stats)?;
            }
            Ok::<_, Error>(stats)
        })
        .try_reduce(
            || PairCorpusStats::empty(m, n),
            |mut a, b| {
                merge_into(&mut a, &b)?;
                Ok(a)
            },
        )?;
    debug_assert!(stats.check_marginals().is_ok());
    Ok(stats)
}

fn sample_walk(walk: &[Vertex], sigma: usize, stats: &mut PairCorpusStats) -> Result<()> {
    for (j, pair) in walk.windows(2).enumerate() {
        if pair[0].is_user() == pair[1].is_user() {
            return Err(Error::InvalidWalk(format!(
                "positions {j} and {} are both {}",
                j + 1,
                if pair[0].is_user() { "users" } else { "items" }
            )));
        }
    }
    for (j, &center) in walk.iter().enumerate() {
        let Vertex::User(u) = center else { continue };
        if u as usize >= stats.num_users() {
            return Err(Error::OutOfRange { what: "user", index: u as usize, size: stats.num_users() });
        }
        let lo = j.saturating_sub(sigma);
        // Offsets have the parity of sigma (odd), so k == j never occurs.
        let first = if (j - lo) % 2 == 1 { lo } else { lo + 1 };
        let hi = (j + sigma).min(walk.len() - 1);
        for k in (first..=hi).step_by(2) {
            let Vertex::Item(i) = walk[k] else {
                unreachable!("alternating walk has items at odd offsets")
            };
            if i as usize >= stats.num_items() {
                return Err(Error::OutOfRange { what: "item", index: i as usize, size: stats.num_items() });
            }
            stats.add(u, i, 1);
        }
    }
    Ok(())
}
