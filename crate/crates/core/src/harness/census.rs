//! Exact singularity census of random sign matrices.

use num_rational::Ratio;
use rand::Rng;

use crate::ensembles::SeedPath;
use crate::error::ensure;
use crate::stats::wilson_interval;
use crate::{par, Result};

/// Largest dimension enumerated exhaustively (`2^25` matrices).
pub const MAX_CENSUS_DIM: usize = 5;
const MC_BLOCK: usize = 4096;

/// Integer determinant by fraction-free (Bareiss) elimination with row
/// pivoting. `m` is `n×n` row-major and is overwritten.
pub fn bareiss_det(m: &mut [i64], n: usize) -> i64 {
    let mut sign = 1;
    let mut prev = 1i64;
    for k in 0..n.saturating_sub(1) {
        if m[k * n + k] == 0 {
            let Some(p) = (k + 1..n).find(|&r| m[r * n + k] != 0) else {
                return 0;
            };
            for c in 0..n {
                m.swap(k * n + c, p * n + c);
            }
            sign = -sign;
        }
        let pivot = m[k * n + k];
        for i in k + 1..n {
            for j in k + 1..n {
                m[i * n + j] = (m[i * n + j] * pivot - m[i * n + k] * m[k * n + j]) / prev;
            }
        }
        prev = pivot;
    }
    if n == 0 {
        1
    } else {
        sign * m[n * n - 1]
    }
}

/// The `±1` matrix whose entry `(i, j)` is `-1` exactly when bit `i·n + j`
/// of `code` is set.
pub fn sign_matrix(code: u64, n: usize) -> Vec<i64> {
    (0..n * n).map(|b| if code >> b & 1 == 1 { -1 } else { 1 }).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignCensus {
    pub n: usize,
    pub singular: u64,
    pub total: u64,
}

impl SignCensus {
    pub fn probability(&self) -> Ratio<u64> {
        Ratio::new(self.singular, self.total)
    }
}

/// Count singular `n×n` sign matrices over all `2^{n²}` of them.
pub fn sign_census(n: usize) -> Result<SignCensus> {
    ensure!(n >= 1, Validation, "census needs n >= 1");
    ensure!(
        n <= MAX_CENSUS_DIM,
        Resource,
        "2^{} sign matrices exceed the census budget (n <= {MAX_CENSUS_DIM})",
        n * n
    );
    let total = 1u64 << (n * n);
    let singular = par::count_range_u64(total, |code| {
        let mut m = sign_matrix(code, n);
        bareiss_det(&mut m, n) == 0
    });
    Ok(SignCensus { n, singular, total })
}

/// Monte Carlo estimate `(p̂, ci_low, ci_high)` of the singularity probability.
pub fn sign_census_mc(n: usize, trials: usize, seed: &SeedPath) -> Result<(f64, f64, f64)> {
    ensure!(n >= 1 && trials >= 1, Validation, "need n >= 1 and trials >= 1");
    ensure!(n <= 62, Resource, "integer determinants are limited to n <= 62");
    let blocks = trials.div_ceil(MC_BLOCK);
    let hits: usize = par::map_range(blocks, |b| {
        let mut rng = seed.trial(b as u64).rng();
        let len = MC_BLOCK.min(trials - b * MC_BLOCK);
        (0..len)
            .filter(|_| {
                let mut m: Vec<i64> = (0..n * n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
                bareiss_det_wide(&mut m, n) == 0
            })
            .count()
    })
    .into_iter()
    .sum();
    let (lo, hi) = wilson_interval(hits as u64, trials as u64, 0.95)?;
    Ok((hits as f64 / trials as f64, lo, hi))
}

/// Bareiss in `i128` for larger sign matrices, whose minors outgrow `i64`.
fn bareiss_det_wide(m: &mut [i64], n: usize) -> i128 {
    if n <= 12 {
        return bareiss_det(m, n) as i128;
    }
    let mut w: Vec<i128> = m.iter().map(|&v| v as i128).collect();
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if w[k * n + k] == 0 {
            let Some(p) = (k + 1..n).find(|&r| w[r * n + k] != 0) else {
                return 0;
            };
            for c in 0..n {
                w.swap(k * n + c, p * n + c);
            }
            sign = -sign;
        }
        let pivot = w[k * n + k];
        for i in k + 1..n {
            for j in k + 1..n {
                w[i * n + j] = (w[i * n + j] * pivot - w[i * n + k] * w[k * n + j]) / prev;
            }
        }
        prev = pivot;
    }
    sign * w[n * n - 1]
}
