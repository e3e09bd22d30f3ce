//! Small dense symmetric positive-definite algebra for the ALS normal equations.
//!
//! Matrices are row-major `Vec<f64>`; `k` is the side length.

use crate::error::{Error, Result};

/// `AᵀA` for a row-major `rows × k` matrix `a`.
pub fn gram(a: &[f64], k: usize) -> Vec<f64> {
    let mut g = vec![0.0; k * k];
    for row in a.chunks_exact(k) {
        for p in 0..k {
            let rp = row[p];
            if rp == 0.0 {
                continue;
            }
            let gp = &mut g[p * k..p * k + k];
            for q in p..k {
                gp[q] += rp * row[q];
            }
        }
    }
    for p in 0..k {
        for q in 0..p {
            g[p * k + q] = g[q * k + p];
        }
    }
    g
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Vec<f64>,
    k: usize,
}

impl Cholesky {
    pub fn factor(a: &[f64], k: usize) -> Result<Self> {
        assert_eq!(a.len(), k * k);
        let mut l = vec![0.0; k * k];
        for j in 0..k {
            let mut d = a[j * k + j];
            for p in 0..j {
                d -= l[j * k + p] * l[j * k + p];
            }
            if d.is_nan() || d <= 0.0 {
                return Err(Error::NotPositiveDefinite { pivot: j });
            }
            let d = d.sqrt();
            l[j * k + j] = d;
            for i in j + 1..k {
                let mut s = a[i * k + j];
                for p in 0..j {
                    s -= l[i * k + p] * l[j * k + p];
                }
                l[i * k + j] = s / d;
            }
        }
        Ok(Cholesky { l, k })
    }

    /// Overwrites `b` with `A⁻¹ b`.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (l, k) = (&self.l, self.k);
        for i in 0..k {
            let mut s = b[i];
            for p in 0..i {
                s -= l[i * k + p] * b[p];
            }
            b[i] = s / l[i * k + i];
        }
        for i in (0..k).rev() {
            let mut s = b[i];
            for p in i + 1..k {
                s -= l[p * k + i] * b[p];
            }
            b[i] = s / l[i * k + i];
        }
    }
}
