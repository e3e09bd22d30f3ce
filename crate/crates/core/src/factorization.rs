//! Latent factor model fitted to `S` by alternating least squares.
//!
//! The objective sums squared error over every user–item cell, zeros
//! included, plus a ridge penalty:
//!
//! ```text
//! loss = Σ_{u,i} (s_ui − x_u·y_i)² + λ (Σ_u |x_u|² + Σ_i |y_i|²)
//! ```
//!
//! With one side fixed the other has a closed form, `x_u = (YᵀY + λI)⁻¹ Yᵀ s_u`.
//! The system matrix is shared by every row of a half-sweep, so it is
//! factored once and each row costs two triangular solves plus a sparse
//! right-hand side.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::confidence::ConfidenceMatrix;
use crate::error::{Error, Result};
use crate::io::{format_f64, parse_field};
use crate::linalg::{dot, gram, Cholesky};
use crate::rng;
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlsConfig {
    /// Latent dimension.
    pub factors: usize,
    /// Ridge strength.
    pub lambda: f64,
    pub sweeps: usize,
    pub seed: u64,
    /// Initial entries are uniform in `[-init_scale, init_scale]`.
    pub init_scale: f64,
}

impl Default for AlsConfig {
    fn default() -> Self {
        AlsConfig {
            factors: 100,
            lambda: 0.25,
            sweeps: 15,
            seed: 0,
            init_scale: 0.01,
        }
    }
}

impl AlsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.factors == 0 {
            return Err(Error::config("als.factors", "must be >= 1"));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::config("als.lambda", "must be > 0"));
        }
        if self.sweeps == 0 {
            return Err(Error::config("als.sweeps", "must be >= 1"));
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return Err(Error::config("als.init_scale", "must be >= 0"));
        }
        Ok(())
    }
}

/// User factors `X` (M×K) and item factors `Y` (N×K), row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    pub num_users: usize,
    pub num_items: usize,
    pub factors: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Objective after each full sweep.
    pub loss_trace: Vec<f64>,
    pub config: AlsConfig,
}

impl FactorModel {
    pub fn user_factors(&self, u: usize) -> &[f64] {
        &self.x[u * self.factors..(u + 1) * self.factors]
    }

    pub fn item_factors(&self, i: usize) -> &[f64] {
        &self.y[i * self.factors..(i + 1) * self.factors]
    }

    /// `x_u · y_i`.
    pub fn predict(&self, u: usize, i: usize) -> Result<f64> {
        if u >= self.num_users {
            return Err(Error::OutOfRange { what: "user", index: u, size: self.num_users });
        }
        if i >= self.num_items {
            return Err(Error::OutOfRange { what: "item", index: i, size: self.num_items });
        }
        Ok(dot(self.user_factors(u), self.item_factors(i)))
    }

    /// Scores of every item for user `u`, written into `out`.
    pub fn score_user(&self, u: usize, out: &mut [f64]) {
        let xu = self.user_factors(u);
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = dot(xu, self.item_factors(i));
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.y).all(|v| v.is_finite())
    }

    /// Text layout: a `#model` header with `M N K λ sweeps seed init_scale`,
    /// a `#loss` line, then the rows of `X` and of `Y`, tab-separated with 17
    /// significant digits.
    pub fn to_text(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "#model\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.num_users,
            self.num_items,
            self.factors,
            format_f64(c.lambda),
            c.sweeps,
            c.seed,
            format_f64(c.init_scale)
        );
        out.push_str("#loss");
        for v in &self.loss_trace {
            out.push('\t');
            out.push_str(&format_f64(*v));
        }
        out.push('\n');
        for row in self.x.chunks(self.factors).chain(self.y.chunks(self.factors)) {
            for (k, v) in row.iter().enumerate() {
                if k > 0 {
                    out.push('\t');
                }
                out.push_str(&format_f64(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
        let mut h = header.split('\t');
        if h.next() != Some("#model") {
            return Err(Error::parse(1, "expected #model header"));
        }
        let num_users: usize = parse_field(h.next(), 1, "user count")?;
        let num_items: usize = parse_field(h.next(), 1, "item count")?;
        let factors: usize = parse_field(h.next(), 1, "factor count")?;
        let config = AlsConfig {
            factors,
            lambda: parse_field(h.next(), 1, "lambda")?,
            sweeps: parse_field(h.next(), 1, "sweeps")?,
            seed: parse_field(h.next(), 1, "seed")?,
            init_scale: parse_field(h.next(), 1, "init_scale")?,
        };
        let loss_line = lines.next().ok_or_else(|| Error::parse(2, "missing #loss line"))?;
        let mut l = loss_line.split('\t');
        if l.next() != Some("#loss") {
            return Err(Error::parse(2, "expected #loss line"));
        }
        let loss_trace = l
            .map(|v| parse_field(Some(v), 2, "loss"))
            .collect::<Result<Vec<f64>>>()?;
        let mut values = Vec::with_capacity((num_users + num_items) * factors);
        let mut rows = 0;
        for (k, line) in lines.enumerate() {
            let line_no = k as u64 + 3;
            let before = values.len();
            for v in line.split('\t') {
                values.push(parse_field::<f64>(Some(v), line_no, "factor")?);
            }
            if values.len() - before != factors {
                return Err(Error::parse(line_no, format!("expected {factors} values")));
            }
            rows += 1;
        }
        if rows != num_users + num_items {
            return Err(Error::parse(0, format!("expected {} factor rows, found {rows}", num_users + num_items)));
        }
        let y = values.split_off(num_users * factors);
        Ok(FactorModel {
            num_users,
            num_items,
            factors,
            x: values,
            y,
            loss_trace,
            config,
        })
    }
}

/// Random uniform initialization keyed by `cfg.seed`.
pub fn init_factors(num_users: usize, num_items: usize, cfg: &AlsConfig) -> FactorModel {
    let k = cfg.factors;
    let mut rng = rng::stream(cfg.seed);
    let mut draw = |len: usize| -> Vec<f64> {
        (0..len)
            .map(|_| (2.0 * rng.gen::<f64>() - 1.0) * cfg.init_scale)
            .collect()
    };
    let x = draw(num_users * k);
    let y = draw(num_items * k);
    FactorModel {
        num_users,
        num_items,
        factors: k,
        x,
        y,
        loss_trace: Vec::new(),
        config: *cfg,
    }
}

/// Solves `(FᵀF + λI) t_r = Fᵀ s_r` for every row `r` of `targets`, where
/// `fixed` is `F` and `out` receives the rows `t_r`.
fn half_sweep(targets: &CsrMatrix, fixed: &[f64], out: &mut [f64], k: usize, lambda: f64) -> Result<()> {
    let mut system = gram(fixed, k);
    for d in 0..k {
        system[d * k + d] += lambda;
    }
    let chol = Cholesky::factor(&system, k)?;
    out.par_chunks_mut(k).enumerate().for_each(|(r, row)| {
        row.fill(0.0);
        let (cols, vals) = targets.row(r);
        for (&c, &s) in cols.iter().zip(vals) {
            for (acc, f) in row.iter_mut().zip(&fixed[c * k..(c + 1) * k]) {
                *acc += s * f;
            }
        }
        chol.solve_in_place(row);
    });
    Ok(())
}

fn check_dims(s: &ConfidenceMatrix, model: &FactorModel) -> Result<()> {
    if s.num_users() != model.num_users || s.num_items() != model.num_items {
        return Err(Error::DimensionMismatch(format!(
            "S is {}x{}, model is {}x{}",
            s.num_users(),
            s.num_items(),
            model.num_users,
            model.num_items
        )));
    }
    Ok(())
}

/// Recomputes every user row with the item factors held fixed.
pub fn update_users(s: &ConfidenceMatrix, model: &mut FactorModel, lambda: f64) -> Result<()> {
    check_dims(s, model)?;
    let k = model.factors;
    half_sweep(&s.matrix, &model.y, &mut model.x, k, lambda)
}

/// Recomputes every item row with the user factors held fixed.
pub fn update_items(s: &ConfidenceMatrix, model: &mut FactorModel, lambda: f64) -> Result<()> {
    check_dims(s, model)?;
    let k = model.factors;
    half_sweep(&s.matrix.transpose(), &model.x, &mut model.y, k, lambda)
}

/// Fits `X` and `Y` to `s` with `cfg.sweeps` alternating sweeps.
pub fn als_fit(s: &ConfidenceMatrix, cfg: &AlsConfig) -> Result<FactorModel> {
    cfg.validate()?;
    let mut model = init_factors(s.num_users(), s.num_items(), cfg);
    let by_item = s.matrix.transpose();
    let k = cfg.factors;
    for sweep in 1..=cfg.sweeps {
        half_sweep(&s.matrix, &model.y, &mut model.x, k, cfg.lambda)
            .map_err(|_| Error::NonFinite { sweep })?;
        half_sweep(&by_item, &model.x, &mut model.y, k, cfg.lambda)
            .map_err(|_| Error::NonFinite { sweep })?;
        let l = loss(s, &model, cfg.lambda)?;
        if !model.is_finite() || !l.is_finite() {
            return Err(Error::NonFinite { sweep });
        }
        model.loss_trace.push(l);
    }
    Ok(model)
}

/// The full objective, using `Σ_{u,i} (x_u·y_i)² = tr(XᵀX · YᵀY)` for the
/// dense part and only the stored entries of `s` for the cross terms.
pub fn loss(s: &ConfidenceMatrix, model: &FactorModel, lambda: f64) -> Result<f64> {
    check_dims(s, model)?;
    let k = model.factors;
    let gx = gram(&model.x, k);
    let gy = gram(&model.y, k);
    let dense_sq = dot(&gx, &gy);
    let cross: f64 = s
        .matrix
        .iter()
        .map(|(u, i, v)| v * dot(model.user_factors(u), model.item_factors(i)))
        .sum();
    let reg = dot(&model.x, &model.x) + dot(&model.y, &model.y);
    Ok(s.matrix.frobenius_sq() - 2.0 * cross + dense_sq + lambda * reg)
}
