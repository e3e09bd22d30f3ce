//! Precision, recall and F1 at cutoff, averaged over all users.
//!
//! Users with no test interactions stay in the averages and contribute zero
//! to every metric.

use serde::{Deserialize, Serialize};

use crate::dataset::{items_by_user, Interactions};
use crate::error::{Error, Result};
use crate::recommend::RankedList;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffMetrics {
    pub k: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub user_count: usize,
    pub cutoffs: Vec<CutoffMetrics>,
}

impl MetricsReport {
    pub fn at(&self, k: usize) -> Option<&CutoffMetrics> {
        self.cutoffs.iter().find(|c| c.k == k)
    }

    /// F1 at cutoff `k`, or 0 if `k` was not evaluated.
    pub fn f1_at(&self, k: usize) -> f64 {
        self.at(k).map_or(0.0, |c| c.f1)
    }
}

/// Per-user metrics at one cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserMetrics {
    pub hits: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// `relevant` must be sorted ascending.
pub fn user_metrics(list: &RankedList, relevant: &[usize], k: usize) -> UserMetrics {
    let hits = list
        .item_ids()
        .take(k)
        .filter(|i| relevant.binary_search(i).is_ok())
        .count();
    let precision = hits as f64 / k as f64;
    let recall = if relevant.is_empty() {
        0.0
    } else {
        hits as f64 / relevant.len() as f64
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    UserMetrics { hits, precision, recall, f1 }
}

/// Averages per-user metrics over users `0..num_users`.
///
/// `recs[u]` must be the list for user `u`.
pub fn evaluate(recs: &[RankedList], test: &Interactions, num_users: usize, cutoffs: &[usize]) -> Result<MetricsReport> {
    if cutoffs.is_empty() || cutoffs.contains(&0) {
        return Err(Error::config("evaluate.cutoffs", "must be a non-empty list of positive integers"));
    }
    for u in 0..num_users {
        match recs.get(u) {
            Some(list) if list.user == u => {}
            _ => {
                return Err(Error::InvalidArgument(format!("missing recommendation list for user {u}")));
            }
        }
    }
    if recs.len() != num_users {
        return Err(Error::DimensionMismatch(format!(
            "{} recommendation lists for {num_users} users",
            recs.len()
        )));
    }
    if let Some(&(u, _)) = test.iter().find(|(u, _)| *u >= num_users) {
        return Err(Error::OutOfRange { what: "user", index: u, size: num_users });
    }
    let relevant = items_by_user(test, num_users);
    let denom = num_users.max(1) as f64;
    let cutoffs = cutoffs
        .iter()
        .map(|&k| {
            let (mut p, mut r, mut f) = (0.0, 0.0, 0.0);
            for (list, rel) in recs.iter().zip(&relevant) {
                let m = user_metrics(list, rel, k);
                p += m.precision;
                r += m.recall;
                f += m.f1;
            }
            CutoffMetrics { k, precision: p / denom, recall: r / denom, f1: f / denom }
        })
        .collect();
    Ok(MetricsReport { user_count: num_users, cutoffs })
}
