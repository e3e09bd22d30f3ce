//! Pseudo-implicit feedback matrices built from pair statistics.
//!
//! Two measures are supported. Co-occurrence uses the raw pair count.
//! Shifted positive PMI uses
//!
//! ```text
//! s_ui = max(ln(#(u,i) · |C| / (#(u) · #(i))) − ln k, 0)
//! ```
//!
//! Only strictly positive entries are stored; a pair that never co-occurs
//! and a pair whose shifted PMI falls to zero are both absent.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::Interactions;
use crate::error::{Error, Result};
use crate::io::{format_f64, parse_field};
use crate::pairs::PairCorpusStats;
use crate::sparse::CsrMatrix;

/// How `s_ui` is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    /// Raw co-occurrence count.
    Co,
    /// Shifted positive pointwise mutual information.
    Pmi,
    /// The binary training matrix itself; used by the plain-MF baseline.
    Binary,
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Measure::Co => "co",
            Measure::Pmi => "pmi",
            Measure::Binary => "binary",
        })
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "co" => Ok(Measure::Co),
            "pmi" => Ok(Measure::Pmi),
            "binary" => Ok(Measure::Binary),
            other => Err(Error::InvalidArgument(format!("unknown measure {other:?}"))),
        }
    }
}

/// Sparse non-negative matrix `S` of pseudo-implicit feedback.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceMatrix {
    pub matrix: CsrMatrix,
    pub measure: Measure,
    /// Shift constant `k`; meaningful for [`Measure::Pmi`] only.
    pub shift_k: f64,
}

impl ConfidenceMatrix {
    pub fn num_users(&self) -> usize {
        self.matrix.rows()
    }

    pub fn num_items(&self) -> usize {
        self.matrix.cols()
    }

    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }

    pub fn get(&self, user: usize, item: usize) -> f64 {
        self.matrix.get(user, item)
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nnz() == 0
    }

    /// Header `#confidence<TAB>M<TAB>N<TAB>measure<TAB>k`, then
    /// `u<TAB>i<TAB>s_ui` lines with 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "#confidence\t{}\t{}\t{}\t{}",
            self.num_users(),
            self.num_items(),
            self.measure,
            format_f64(self.shift_k)
        );
        for (u, i, s) in self.matrix.iter() {
            let _ = writeln!(out, "{u}\t{i}\t{}", format_f64(s));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
        let mut h = header.split('\t');
        if h.next() != Some("#confidence") {
            return Err(Error::parse(1, "expected #confidence header"));
        }
        let m: usize = parse_field(h.next(), 1, "user count")?;
        let n: usize = parse_field(h.next(), 1, "item count")?;
        let measure: Measure = parse_field::<String>(h.next(), 1, "measure")?
            .parse()
            .map_err(|e: Error| Error::parse(1, e.to_string()))?;
        let shift_k: f64 = parse_field(h.next(), 1, "shift")?;
        let mut triplets = Vec::new();
        for (k, line) in lines.enumerate() {
            let line_no = k as u64 + 2;
            let mut f = line.split('\t');
            let u: usize = parse_field(f.next(), line_no, "user")?;
            let i: usize = parse_field(f.next(), line_no, "item")?;
            let s: f64 = parse_field(f.next(), line_no, "value")?;
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::parse(line_no, format!("entry must be positive and finite, got {s}")));
            }
            triplets.push((u, i, s));
        }
        Ok(ConfidenceMatrix {
            matrix: CsrMatrix::from_sorted_triplets(m, n, &triplets)?,
            measure,
            shift_k,
        })
    }
}

/// `s_ui = #(u, i)`.
pub fn co_matrix(stats: &PairCorpusStats) -> ConfidenceMatrix {
    let triplets: Vec<_> = stats
        .sorted_counts()
        .into_iter()
        .map(|(u, i, c)| (u, i, c as f64))
        .collect();
    ConfidenceMatrix {
        matrix: CsrMatrix::from_sorted_triplets(stats.num_users(), stats.num_items(), &triplets)
            .expect("stats are in range and sorted"),
        measure: Measure::Co,
        shift_k: 1.0,
    }
}

/// Shifted positive PMI with shift constant `shift_k ≥ 1` (natural log).
pub fn sppmi_matrix(stats: &PairCorpusStats, shift_k: f64) -> Result<ConfidenceMatrix> {
    if !(shift_k >= 1.0 && shift_k.is_finite()) {
        return Err(Error::InvalidArgument(format!("shift_k must be >= 1, got {shift_k}")));
    }
    if stats.total() == 0 {
        return Err(Error::EmptyCorpus);
    }
    let total = stats.total() as f64;
    let log_shift = shift_k.ln();
    let triplets: Vec<_> = stats
        .sorted_counts()
        .into_iter()
        .filter_map(|(u, i, c)| {
            let ratio = (c as f64 * total) / (stats.user_count(u) as f64 * stats.item_count(i) as f64);
            let s = ratio.ln() - log_shift;
            (s > 0.0).then_some((u, i, s))
        })
        .collect();
    Ok(ConfidenceMatrix {
        matrix: CsrMatrix::from_sorted_triplets(stats.num_users(), stats.num_items(), &triplets)?,
        measure: Measure::Pmi,
        shift_k,
    })
}

/// The binary interaction matrix `R` as a confidence matrix.
pub fn binary_matrix(train: &Interactions, num_users: usize, num_items: usize) -> Result<ConfidenceMatrix> {
    let triplets: Vec<_> = train.iter().map(|&(u, i)| (u, i, 1.0)).collect();
    Ok(ConfidenceMatrix {
        matrix: CsrMatrix::from_sorted_triplets(num_users, num_items, &triplets)?,
        measure: Measure::Binary,
        shift_k: 1.0,
    })
}
