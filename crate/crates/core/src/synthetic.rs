//! Block-structured synthetic interaction data.
//!
//! Users and items are cut into `groups` contiguous communities. Each
//! user–item edge appears with probability `p_in` inside a community and
//! `p_out` across communities; each user then keeps at most
//! `max_per_user` of its edges, chosen at random.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::KeyPairs;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub users: usize,
    pub items: usize,
    pub groups: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub max_per_user: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            users: 500,
            items: 500,
            groups: 10,
            p_in: 0.2,
            p_out: 0.006,
            max_per_user: 5,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let key = |k: &str| format!("data.synthetic.{k}");
        if self.users == 0 || self.items == 0 {
            return Err(Error::config(key("users"), "users and items must be >= 1"));
        }
        if self.groups == 0 || self.groups > self.users.min(self.items) {
            return Err(Error::config(key("groups"), "must be in 1..=min(users, items)"));
        }
        for (name, p) in [("p_in", self.p_in), ("p_out", self.p_out)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(key(name), "must be a probability"));
            }
        }
        if self.max_per_user == 0 {
            return Err(Error::config(key("max_per_user"), "must be >= 1"));
        }
        Ok(())
    }

    pub fn user_group(&self, u: usize) -> usize {
        u * self.groups / self.users
    }

    pub fn item_group(&self, i: usize) -> usize {
        i * self.groups / self.items
    }
}

/// Zero-padded key so lexicographic and numeric order agree.
pub fn user_key(u: usize, cfg: &SyntheticConfig) -> String {
    format!("u{u:0width$}", width = digits(cfg.users))
}

pub fn item_key(i: usize, cfg: &SyntheticConfig) -> String {
    format!("i{i:0width$}", width = digits(cfg.items))
}

fn digits(n: usize) -> usize {
    n.saturating_sub(1).to_string().len()
}

/// Generates the interaction set. Every user gets at least one edge, drawn
/// from its own community when the Bernoulli draws produce none.
pub fn generate(cfg: &SyntheticConfig, seed: u64) -> Result<KeyPairs> {
    cfg.validate()?;
    let mut pairs = KeyPairs::new();
    for u in 0..cfg.users {
        let mut rng = rng::keyed_stream(seed, u as u64, 0);
        let g = cfg.user_group(u);
        let mut items: Vec<usize> = (0..cfg.items)
            .filter(|&i| {
                let p = if cfg.item_group(i) == g { cfg.p_in } else { cfg.p_out };
                rng.gen::<f64>() < p
            })
            .collect();
        if items.is_empty() {
            let own: Vec<usize> = (0..cfg.items).filter(|&i| cfg.item_group(i) == g).collect();
            items.push(*own.choose(&mut rng).expect("every group has items"));
        }
        let keep = items.len().min(cfg.max_per_user);
        let (chosen, _) = items.partial_shuffle(&mut rng, keep);
        for &i in chosen.iter() {
            pairs.insert((user_key(u, cfg), item_key(i, cfg)));
        }
    }
    Ok(pairs)
}
