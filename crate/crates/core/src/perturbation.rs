//! Tail experiments for `s_n(D + U)` with Haar-distributed `U`, and the
//! operator-norm distance to the orthogonal group.

use std::io::Write;

use num_complex::Complex64;

use crate::ensembles::{haar_orthogonal_with, haar_unitary_with, SeedPath};
use crate::error::ensure;
use crate::spectra::{singular_values, smallest_singular_value, smallest_singular_value_complex};
use crate::stats::wilson_interval;
use crate::{par, ComplexMatrix, Error, RealMatrix, Result};

/// `s_n` below `DEGENERATE_REL · (‖D‖ + 1)` counts as singular.
pub const DEGENERATE_REL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Group {
    Unitary,
    Orthogonal,
    SpecialOrthogonal,
}

impl Group {
    pub fn name(&self) -> &'static str {
        match self {
            Group::Unitary => "unitary",
            Group::Orthogonal => "orthogonal",
            Group::SpecialOrthogonal => "special_orthogonal",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "unitary" => Ok(Group::Unitary),
            "orthogonal" => Ok(Group::Orthogonal),
            "special_orthogonal" => Ok(Group::SpecialOrthogonal),
            other => Err(Error::Validation(format!("unknown group '{other}'"))),
        }
    }
}

/// `inf_{V ∈ O(n)} ‖D − V‖ = max_i |s_i(D) − 1|`, attained at the polar factor.
pub fn dist_to_orthogonal(d: &RealMatrix) -> Result<f64> {
    ensure!(d.is_square(), Dimension, "D must be square, got {}x{}", d.nrows(), d.ncols());
    let s = singular_values(d)?;
    Ok(s.values.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max))
}

/// Descriptors recorded with a tail curve.
#[derive(Debug, Clone, PartialEq)]
pub struct TailMeta {
    pub n: usize,
    pub group: Group,
    pub norm_d: f64,
    /// Distance to `O(n)`; `None` for complex `D`.
    pub dist_to_orthogonal: Option<f64>,
    pub master_seed: u64,
}

/// Empirical `P(s_n(D + U) ≤ t)` on a grid of thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct TailCurve {
    pub thresholds: Vec<f64>,
    pub probs: Vec<f64>,
    pub ci: Vec<(f64, f64)>,
    pub trials: usize,
    /// Trials with `s_n < DEGENERATE_REL · (‖D‖ + 1)`.
    pub degenerate: usize,
    pub meta: TailMeta,
}

impl TailCurve {
    pub fn degenerate_fraction(&self) -> f64 {
        self.degenerate as f64 / self.trials as f64
    }
}

fn check_thresholds(ts: &[f64]) -> Result<()> {
    ensure!(!ts.is_empty(), Validation, "need at least one threshold");
    ensure!(
        ts.iter().all(|t| *t > 0.0 && t.is_finite()) && ts.windows(2).all(|w| w[0] < w[1]),
        Validation,
        "thresholds must be positive and strictly increasing"
    );
    Ok(())
}

fn build_curve(mut samples: Vec<f64>, thresholds: &[f64], meta: TailMeta) -> Result<TailCurve> {
    let trials = samples.len();
    let floor = DEGENERATE_REL * (meta.norm_d + 1.0);
    let degenerate = samples.iter().filter(|s| **s < floor).count();
    par::sort_f64(&mut samples);
    let mut probs = Vec::with_capacity(thresholds.len());
    let mut ci = Vec::with_capacity(thresholds.len());
    for &t in thresholds {
        let hits = samples.partition_point(|s| *s <= t);
        probs.push(hits as f64 / trials as f64);
        ci.push(wilson_interval(hits as u64, trials as u64, 0.95)?);
    }
    Ok(TailCurve { thresholds: thresholds.to_vec(), probs, ci, trials, degenerate, meta })
}

/// `s_n(D + U)` for each trial.
pub fn perturbation_samples(d: &RealMatrix, group: Group, trials: usize, seed: &SeedPath) -> Result<Vec<f64>> {
    ensure!(d.is_square() && d.nrows() >= 1, Dimension, "D must be square and nonempty");
    ensure!(d.iter().all(|v| v.is_finite()), Validation, "D must be finite");
    let n = d.nrows();
    let dc = d.map(Complex64::from);
    let out = par::map_range(trials, |i| {
        let mut rng = seed.trial(i as u64).rng();
        match group {
            Group::Unitary => smallest_singular_value_complex(&(&dc + haar_unitary_with(n, &mut rng))),
            Group::Orthogonal => smallest_singular_value(&(d + haar_orthogonal_with(n, false, &mut rng))),
            Group::SpecialOrthogonal => smallest_singular_value(&(d + haar_orthogonal_with(n, true, &mut rng))),
        }
    });
    out.into_iter().collect()
}

/// Monte Carlo tail of `s_n(D + U)` with Wilson intervals.
pub fn perturbation_tail(
    d: &RealMatrix,
    group: Group,
    thresholds: &[f64],
    trials: usize,
    seed: &SeedPath,
) -> Result<TailCurve> {
    check_thresholds(thresholds)?;
    ensure!(trials >= 1, Validation, "need at least one trial");
    let samples = perturbation_samples(d, group, trials, seed)?;
    let meta = TailMeta {
        n: d.nrows(),
        group,
        norm_d: singular_values(d)?.largest(),
        dist_to_orthogonal: Some(dist_to_orthogonal(d)?),
        master_seed: seed.master_seed,
    };
    build_curve(samples, thresholds, meta)
}

/// Unitary tail for a complex `D`.
pub fn perturbation_tail_complex(
    d: &ComplexMatrix,
    thresholds: &[f64],
    trials: usize,
    seed: &SeedPath,
) -> Result<TailCurve> {
    check_thresholds(thresholds)?;
    ensure!(trials >= 1, Validation, "need at least one trial");
    ensure!(d.is_square() && d.nrows() >= 1, Dimension, "D must be square and nonempty");
    let n = d.nrows();
    let samples: Vec<f64> = par::map_range(trials, |i| {
        let mut rng = seed.trial(i as u64).rng();
        smallest_singular_value_complex(&(d + haar_unitary_with(n, &mut rng)))
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let meta = TailMeta {
        n,
        group: Group::Unitary,
        norm_d: crate::spectra::singular_values_complex(d)?.largest(),
        dist_to_orthogonal: None,
        master_seed: seed.master_seed,
    };
    build_curve(samples, thresholds, meta)
}

/// Whether `prob ≤ t^c n^C + (ci_high − ci_low)/2` at every threshold.
pub fn tail_envelope_check(curve: &TailCurve, c: f64, big_c: f64) -> bool {
    let n = curve.meta.n as f64;
    curve
        .thresholds
        .iter()
        .zip(&curve.probs)
        .zip(&curve.ci)
        .all(|((t, p), (lo, hi))| *p <= t.powf(c) * n.powf(big_c) + 0.5 * (hi - lo))
}

/// Rows `(group, n, t, prob, ci_low, ci_high, trials, norm_D, dist_to_On, seed)`.
pub fn write_csv<W: Write>(out: W, curves: &[TailCurve]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["group", "n", "t", "prob", "ci_low", "ci_high", "trials", "norm_D", "dist_to_On", "seed"])?;
    for c in curves {
        for ((t, p), (lo, hi)) in c.thresholds.iter().zip(&c.probs).zip(&c.ci) {
            w.write_record([
                c.meta.group.name().to_string(),
                c.meta.n.to_string(),
                t.to_string(),
                p.to_string(),
                lo.to_string(),
                hi.to_string(),
                c.trials.to_string(),
                c.meta.norm_d.to_string(),
                c.meta.dist_to_orthogonal.map(|v| v.to_string()).unwrap_or_default(),
                c.meta.master_seed.to_string(),
            ])?;
        }
    }
    w.flush().map_err(Error::from)
}
