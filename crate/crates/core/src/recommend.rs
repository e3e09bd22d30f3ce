//! Top-K ranking with training-item masking, and the popularity baseline.

use std::cmp::Ordering;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::dataset::{items_by_user, Interactions};
use crate::error::{Error, Result};
use crate::factorization::FactorModel;
use crate::io::{format_f64, parse_field};

/// Items recommended to one user, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub user: usize,
    pub items: Vec<(usize, f64)>,
}

impl RankedList {
    pub fn item_ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.items.iter().map(|&(i, _)| i)
    }
}

/// Anything that scores every item for a user.
pub trait Scorer: Sync {
    fn num_items(&self) -> usize;
    fn score_user(&self, user: usize, out: &mut [f64]);
}

impl Scorer for FactorModel {
    fn num_items(&self) -> usize {
        self.num_items
    }

    fn score_user(&self, user: usize, out: &mut [f64]) {
        FactorModel::score_user(self, user, out)
    }
}

/// Non-personalized popularity: every user gets the training degree of each item.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemPop {
    pub scores: Vec<f64>,
}

impl Scorer for ItemPop {
    fn num_items(&self) -> usize {
        self.scores.len()
    }

    fn score_user(&self, _user: usize, out: &mut [f64]) {
        out.copy_from_slice(&self.scores);
    }
}

/// Training degree of every item.
pub fn item_pop_scores(train: &Interactions, num_items: usize) -> Vec<f64> {
    let mut scores = vec![0.0; num_items];
    for &(_, i) in train {
        scores[i] += 1.0;
    }
    scores
}

fn rank_order(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// The `k` best unmasked items by score, ties to the lower item index.
/// `mask` must be sorted ascending.
pub fn top_k(user: usize, scores: &[f64], k: usize, mask: &[usize]) -> RankedList {
    let mut candidates: Vec<(usize, f64)> = scores
        .iter()
        .copied()
        .enumerate()
        .filter(|(i, _)| mask.binary_search(i).is_err())
        .collect();
    if k < candidates.len() {
        candidates.select_nth_unstable_by(k, rank_order);
        candidates.truncate(k);
    }
    candidates.sort_unstable_by(rank_order);
    RankedList { user, items: candidates }
}

/// Ranks items for every user in `0..num_users`, optionally hiding each
/// user's training items.
pub fn recommend_all<S: Scorer + ?Sized>(
    scorer: &S,
    train: &Interactions,
    num_users: usize,
    k: usize,
    mask_train: bool,
) -> Result<Vec<RankedList>> {
    if k == 0 {
        return Err(Error::config("recommend.k_items", "must be >= 1"));
    }
    let seen = if mask_train {
        items_by_user(train, num_users)
    } else {
        vec![Vec::new(); num_users]
    };
    let n = scorer.num_items();
    Ok((0..num_users)
        .into_par_iter()
        .map_init(
            || vec![0.0; n],
            |buf, u| {
                scorer.score_user(u, buf);
                top_k(u, buf, k, &seen[u])
            },
        )
        .collect())
}

/// `u<TAB>rank<TAB>i<TAB>score` lines, ranks from 1.
pub fn format_recommendations(lists: &[RankedList]) -> String {
    let mut out = String::new();
    for list in lists {
        for (rank, (i, s)) in list.items.iter().enumerate() {
            let _ = writeln!(out, "{}\t{}\t{}\t{}", list.user, rank + 1, i, format_f64(*s));
        }
    }
    out
}

/// Parses a recommendation dump into one list per user; users without lines
/// get empty lists.
pub fn parse_recommendations(text: &str, num_users: usize) -> Result<Vec<RankedList>> {
    let mut lists: Vec<RankedList> = (0..num_users)
        .map(|user| RankedList { user, items: Vec::new() })
        .collect();
    for (k, line) in text.lines().enumerate() {
        let line_no = k as u64 + 1;
        let mut f = line.split('\t');
        let u: usize = parse_field(f.next(), line_no, "user")?;
        let rank: usize = parse_field(f.next(), line_no, "rank")?;
        let i: usize = parse_field(f.next(), line_no, "item")?;
        let s: f64 = parse_field(f.next(), line_no, "score")?;
        let list = lists
            .get_mut(u)
            .ok_or_else(|| Error::parse(line_no, format!("user {u} out of range")))?;
        if rank != list.items.len() + 1 {
            return Err(Error::parse(line_no, format!("rank {rank} out of sequence")));
        }
        list.items.push((i, s));
    }
    Ok(lists)
}
