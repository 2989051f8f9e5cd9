//! Lévy concentration functions `L(S, ε) = sup_v P(|S − v| ≤ ε)` of weighted
//! sums `S = Σ a_k ξ_k`, together with the bounds that control them.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use statrs::function::erf::erf;

use crate::ensembles::{ScalarKind, ScalarLaw, SeedPath};
use crate::error::ensure;
use crate::stats::wilson_interval;
use crate::structure::{essential_lcd, LcdOutcome, LcdQuery};
use crate::{par, Error, Result};

/// Largest weight vector handled by exhaustive sign enumeration.
pub const MAX_EXACT_DIM: usize = 24;
const SUFFIX_BITS: usize = 12;
const MC_BLOCK: usize = 4096;

/// How a concentration value was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Exact,
    MonteCarlo { trials: usize, ci_low: f64, ci_high: f64 },
    EsseenBound,
    SbpBound,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::MonteCarlo { .. } => "monte_carlo",
            Method::EsseenBound => "esseen_bound",
            Method::SbpBound => "sbp_bound",
        }
    }
}

/// A concentration value. Probabilities lie in `[0, 1]`; the two bound
/// methods may exceed 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcentrationResult {
    pub epsilon: f64,
    pub value: f64,
    pub method: Method,
    /// Centre `v` attaining the supremum (exact and Monte Carlo methods).
    pub witness_v: Option<f64>,
}

fn check_weights(a: &[f64]) -> Result<()> {
    ensure!(
        a.iter().all(|x| x.is_finite()),
        Validation,
        "weights must be finite"
    );
    Ok(())
}

fn check_eps(eps: f64) -> Result<()> {
    ensure!(eps >= 0.0 && !eps.is_nan(), Validation, "epsilon must be >= 0, got {eps}");
    Ok(())
}

/// All `2^k` sums `Σ ±w_j`; bit `j` of the index set means `-w_j`.
fn sign_table(w: &[f64]) -> Vec<f64> {
    let mut table = vec![0.0; 1 << w.len()];
    for (j, &x) in w.iter().enumerate() {
        let half = 1usize << j;
        for i in 0..half {
            let base = table[i];
            table[i] = base + x;
            table[i + half] = base - x;
        }
    }
    table
}

/// All `2ⁿ` signed sums of `a`. The low coordinates form a fixed suffix
/// table that is added to each high-coordinate prefix, one block per prefix.
pub fn signed_sums(a: &[f64]) -> Result<Vec<f64>> {
    check_weights(a)?;
    ensure!(
        a.len() <= MAX_EXACT_DIM,
        Resource,
        "2^{} sign patterns exceed the exact budget (n <= {MAX_EXACT_DIM}); use Monte Carlo",
        a.len()
    );
    let low = a.len().min(SUFFIX_BITS);
    let suffix = sign_table(&a[..low]);
    let prefix = sign_table(&a[low..]);
    let mut sums = vec![0.0; 1 << a.len()];
    par::fill_chunks(&mut sums, suffix.len(), |start, block| {
        let p = prefix[start / suffix.len()];
        for (out, s) in block.iter_mut().zip(&suffix) {
            *out = p + s;
        }
    });
    Ok(sums)
}

/// Largest number of sorted values inside a closed window of width `width`
/// (plus `tol`), with the index of the window's left edge.
pub fn max_window(sorted: &[f64], width: f64, tol: f64) -> (usize, usize) {
    let mut best = (0, 0);
    let mut j = 0;
    for i in 0..sorted.len() {
        if j < i {
            j = i;
        }
        let limit = sorted[i] + width + tol;
        while j + 1 < sorted.len() && sorted[j + 1] <= limit {
            j += 1;
        }
        let count = j - i + 1;
        if count > best.0 {
            best = (count, i);
        }
    }
    best
}

fn edge_tol(a: &[f64]) -> f64 {
    1e-12 * a.iter().map(|x| x.abs()).sum::<f64>()
}

fn window_result(sorted: &[f64], eps: f64, tol: f64) -> (usize, f64) {
    if eps.is_infinite() {
        return (sorted.len(), 0.0);
    }
    let (count, left) = max_window(sorted, 2.0 * eps, tol);
    (count, sorted[left] + eps)
}

/// Exact `L(S, ε)` for Rademacher signs: enumerate, sort, slide a closed
/// window of width `2ε`.
pub fn levy_exact_rademacher(a: &[f64], eps: f64) -> Result<ConcentrationResult> {
    check_eps(eps)?;
    let mut sums = signed_sums(a)?;
    par::sort_f64(&mut sums);
    let (count, v) = window_result(&sums, eps, edge_tol(a));
    Ok(ConcentrationResult {
        epsilon: eps,
        value: count as f64 / sums.len() as f64,
        method: Method::Exact,
        witness_v: Some(v),
    })
}

/// Exact `L(S, ε)` on a grid of widths, sharing one enumeration.
pub fn levy_exact_rademacher_grid(a: &[f64], eps_grid: &[f64]) -> Result<Vec<ConcentrationResult>> {
    for &e in eps_grid {
        check_eps(e)?;
    }
    let mut sums = signed_sums(a)?;
    par::sort_f64(&mut sums);
    let tol = edge_tol(a);
    Ok(eps_grid
        .iter()
        .map(|&eps| {
            let (count, v) = window_result(&sums, eps, tol);
            ConcentrationResult {
                epsilon: eps,
                value: count as f64 / sums.len() as f64,
                method: Method::Exact,
                witness_v: Some(v),
            }
        })
        .collect())
}

/// Monte Carlo weighted sums, drawn in fixed blocks of trials.
pub fn sample_weighted_sums(
    kind: &ScalarKind,
    a: &[f64],
    trials: usize,
    seed: &SeedPath,
) -> Result<Vec<f64>> {
    check_weights(a)?;
    let law = ScalarLaw::new(kind, true)?;
    let blocks = trials.div_ceil(MC_BLOCK);
    let chunks = par::map_range(blocks, |b| {
        let mut rng = seed.trial(b as u64).rng();
        let len = MC_BLOCK.min(trials - b * MC_BLOCK);
        (0..len)
            .map(|_| a.iter().map(|w| w * law.sample(&mut rng)).sum::<f64>())
            .collect::<Vec<f64>>()
    });
    Ok(chunks.concat())
}

/// Monte Carlo estimate of `L(S, ε)`: the best closed window over the
/// empirical sample, with a Wilson interval at `confidence`.
pub fn levy_monte_carlo(
    kind: &ScalarKind,
    a: &[f64],
    eps: f64,
    trials: usize,
    seed: &SeedPath,
    confidence: f64,
) -> Result<ConcentrationResult> {
    check_eps(eps)?;
    ensure!(trials >= 100, Validation, "need at least 100 trials, got {trials}");
    let mut sums = sample_weighted_sums(kind, a, trials, seed)?;
    par::sort_f64(&mut sums);
    let (count, v) = window_result(&sums, eps, edge_tol(a));
    let (ci_low, ci_high) = wilson_interval(count as u64, trials as u64, confidence)?;
    Ok(ConcentrationResult {
        epsilon: eps,
        value: count as f64 / trials as f64,
        method: Method::MonteCarlo { trials, ci_low, ci_high },
        witness_v: Some(v),
    })
}

/// Constant of the characteristic-function bound
/// `sup_v P(|Y − v| ≤ 1) ≤ C_E ∫_{-2}^{2} |φ_Y(θ)| dθ`.
///
/// With `ψ = χ_{[-1,1]} * χ_{[-1,1]}` (a tent of height 2) and
/// `f = ψ̂ = (2 sin t / t)²`, one has `f ≥ c = 4 sin²1` on `[-1, 1]` and
/// `E f(Y − v) ≤ ∫ ψ |φ_Y| ≤ 2 ∫_{-2}^{2} |φ_Y|`, so `C_E = 2 / c`.
pub fn esseen_constant() -> f64 {
    2.0 / (4.0 * 1f64.sin().powi(2))
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    const PANELS: usize = 64;
    let width = (hi - lo) / PANELS as f64;
    (0..PANELS)
        .map(|k| {
            let a = lo + width * k as f64;
            let b = if k + 1 == PANELS { hi } else { a + width };
            let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
            let whole = simpson(fa, fm, fb, b - a);
            recurse(f, a, b, fa, fm, fb, whole, tol / PANELS as f64, 40)
        })
        .sum()
}

/// Characteristic-function bound for Rademacher sums:
/// `C_E ∫_{-2}^{2} Π_j |cos(a_j θ / ε)| dθ`.
pub fn esseen_bound(a: &[f64], eps: f64) -> Result<ConcentrationResult> {
    check_weights(a)?;
    ensure!(eps > 0.0, Validation, "Esseen bound needs epsilon > 0, got {eps}");
    let integrand = |theta: f64| -> f64 {
        a.iter()
            .map(|&w| (w * theta / eps).cos().abs())
            .product::<f64>()
    };
    // The integrand is even.
    let integral = 2.0 * adaptive_simpson(&integrand, 0.0, 2.0, 0.5e-10);
    Ok(ConcentrationResult {
        epsilon: eps,
        value: esseen_constant() * integral,
        method: Method::EsseenBound,
        witness_v: None,
    })
}

/// Constants `(C, c)` of the bound `C ε + C exp(−c α²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SbpConstants {
    pub big: f64,
    pub small: f64,
}

impl Default for SbpConstants {
    fn default() -> Self {
        Self { big: 10.0, small: 0.01 }
    }
}

/// `(4/π) / LCD_α(a)`: the smallest width at which the small-ball bound
/// applies. When the LCD exceeds `theta_max` the ceiling is used, which
/// gives an admissible (larger) width.
pub fn min_admissible_eps(a: &[f64], alpha: f64, gamma: f64, theta_max: f64) -> Result<f64> {
    let lcd = essential_lcd(a, &LcdQuery::new(gamma, alpha, theta_max))?;
    Ok(4.0 / PI / lcd.value_or_ceiling())
}

/// Small-ball bound `C ε + C e^{−c α²}` for unit `a`, valid once
/// `ε ≥ (4/π) / LCD_α(a)`; the precondition is checked by an LCD scan up
/// to `(4/π)/ε`.
pub fn sbp_bound(
    a: &[f64],
    alpha: f64,
    gamma: f64,
    eps: f64,
    constants: SbpConstants,
) -> Result<ConcentrationResult> {
    ensure!(eps > 0.0 && eps.is_finite(), Validation, "epsilon must be positive and finite");
    let needed = 4.0 / PI / eps;
    let lcd = essential_lcd(a, &LcdQuery::new(gamma, alpha, needed))?;
    if let LcdOutcome::Found { theta, .. } = lcd.outcome {
        ensure!(
            theta >= needed * (1.0 - 1e-9),
            Validation,
            "precondition violated: LCD_alpha(a) <= {theta} < (4/pi)/eps = {needed}"
        );
    }
    Ok(ConcentrationResult {
        epsilon: eps,
        value: constants.big * eps + constants.big * (-constants.small * alpha * alpha).exp(),
        method: Method::SbpBound,
        witness_v: None,
    })
}

/// Paley-Zygmund: `P(|S| > λ) ≥ (E S² − λ²)² / E S⁴` for `0 < λ < √(E S²)`.
pub fn paley_zygmund(es2: f64, es4: f64, lambda: f64) -> Result<f64> {
    ensure!(es4 > 0.0, Validation, "fourth moment must be positive");
    ensure!(
        lambda > 0.0 && lambda < es2.sqrt(),
        Validation,
        "lambda = {lambda} must lie in (0, sqrt(E S^2)) = (0, {})",
        es2.sqrt()
    );
    Ok((es2 - lambda * lambda).powi(2) / es4)
}

/// `(E S², E S⁴)` for a Rademacher sum: `Σa²` and `3(Σa²)² − 2Σa⁴`.
pub fn rademacher_moments(a: &[f64]) -> (f64, f64) {
    let s2: f64 = a.iter().map(|x| x * x).sum();
    let s4: f64 = a.iter().map(|x| x.powi(4)).sum();
    (s2, 3.0 * s2 * s2 - 2.0 * s4)
}

/// Exact `P(|S| > λ)` for a Rademacher sum.
pub fn rademacher_tail_exact(a: &[f64], lambda: f64) -> Result<f64> {
    let sums = signed_sums(a)?;
    let above = sums.iter().filter(|s| s.abs() > lambda).count();
    Ok(above as f64 / sums.len() as f64)
}

/// One point of an empirical tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailPoint {
    pub t: f64,
    pub prob: f64,
    /// Monte Carlo standard error `√(p(1−p)/trials)`.
    pub stderr: f64,
}

/// Empirical `P(|Σ a_j ξ_j| > t)` for Rademacher `ξ`.
pub fn rademacher_tail_mc(a: &[f64], ts: &[f64], trials: usize, seed: &SeedPath) -> Result<Vec<TailPoint>> {
    ensure!(trials > 0, Validation, "need at least one trial");
    let sums = sample_weighted_sums(&ScalarKind::Rademacher, a, trials, seed)?;
    Ok(ts
        .iter()
        .map(|&t| {
            let p = sums.iter().filter(|s| s.abs() > t).count() as f64 / trials as f64;
            TailPoint {
                t,
                prob: p,
                stderr: (p * (1.0 - p) / trials as f64).sqrt(),
            }
        })
        .collect())
}

/// Law of one coordinate `ζ` in the tensorization audit.
#[derive(Debug, Clone, PartialEq)]
pub enum CoordinateLaw {
    Gaussian,
    /// `ζ = Σ w_j ξ_j` with Rademacher `ξ`.
    RademacherSum(Vec<f64>),
}

impl CoordinateLaw {
    /// `P(|ζ| < ε)`, exactly.
    pub fn small_ball(&self, eps: f64) -> Result<f64> {
        match self {
            CoordinateLaw::Gaussian => Ok(erf(eps / std::f64::consts::SQRT_2)),
            CoordinateLaw::RademacherSum(w) => {
                let sums = signed_sums(w)?;
                Ok(sums.iter().filter(|s| s.abs() < eps).count() as f64 / sums.len() as f64)
            }
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, gauss: &ScalarLaw) -> f64 {
        match self {
            CoordinateLaw::Gaussian => gauss.sample(rng),
            CoordinateLaw::RademacherSum(w) => w
                .iter()
                .map(|x| if rng.random::<bool>() { *x } else { -*x })
                .sum(),
        }
    }
}

/// Exact `P(Σ_{k=1}^m X_k < threshold)` for i.i.d. `X` uniform on `values`
/// (nonnegative), by pruned enumeration of `m`-tuples of distinct values.
pub fn sum_below_exact(values: &[f64], m: usize, threshold: f64) -> f64 {
    let mut distinct: Vec<(f64, f64)> = Vec::new();
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let w = 1.0 / values.len() as f64;
    for v in sorted {
        match distinct.last_mut() {
            Some((last, p)) if *last == v => *p += w,
            _ => distinct.push((v, w)),
        }
    }
    fn go(d: &[(f64, f64)], left: usize, acc: f64, threshold: f64) -> f64 {
        if left == 0 {
            return if acc < threshold { 1.0 } else { 0.0 };
        }
        let mut total = 0.0;
        for &(v, p) in d {
            if acc + v >= threshold {
                break;
            }
            total += p * go(d, left - 1, acc + v, threshold);
        }
        total
    }
    go(&distinct, m, 0.0, threshold)
}

/// One width of the tensorization audit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensorizationRow {
    pub eps: f64,
    /// Monte Carlo estimate of `P(Σ ζ_k² < ε² m)`.
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Exact left side when the coordinate law is discrete.
    pub exact: Option<f64>,
    /// `(C_T K ε)^m`.
    pub bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorizationReport {
    pub hypothesis_ok: bool,
    /// Widths where `P(|ζ| < ε) ≤ K ε` failed.
    pub hypothesis_violations: Vec<f64>,
    pub rows: Vec<TensorizationRow>,
    pub pass: bool,
}

/// Parameters of [`tensorization_audit`].
#[derive(Debug, Clone, PartialEq)]
pub struct TensorizationParams {
    /// Per-coordinate small-ball constant `K`.
    pub k: f64,
    /// Smallest width `ε₀` where the hypothesis is required.
    pub eps0: f64,
    pub m: usize,
    pub eps_grid: Vec<f64>,
    pub trials: usize,
    /// Tensorized constant `C_T`.
    pub c_t: f64,
}

impl TensorizationParams {
    pub fn new(k: f64, eps0: f64, m: usize, eps_grid: Vec<f64>, trials: usize) -> Self {
        Self { k, eps0, m, eps_grid, trials, c_t: 30.0 }
    }
}

/// Check `P(Σ_{k≤m} ζ_k² < ε² m) ≤ (C_T K ε)^m` on a grid of widths, after
/// verifying the per-coordinate hypothesis `P(|ζ| < ε) ≤ K ε` there.
pub fn tensorization_audit(
    law: &CoordinateLaw,
    params: &TensorizationParams,
    seed: &SeedPath,
) -> Result<TensorizationReport> {
    ensure!(params.m >= 1 && params.trials >= 1, Validation, "need m >= 1 and trials >= 1");
    let grid: Vec<f64> = params
        .eps_grid
        .iter()
        .copied()
        .filter(|&e| e >= params.eps0)
        .collect();
    ensure!(!grid.is_empty(), Validation, "no grid width at or above eps0");
    let mut violations = Vec::new();
    for &e in &grid {
        if law.small_ball(e)? > params.k * e {
            violations.push(e);
        }
    }
    if !violations.is_empty() {
        return Ok(TensorizationReport {
            hypothesis_ok: false,
            hypothesis_violations: violations,
            rows: Vec::new(),
            pass: false,
        });
    }
    let gauss = ScalarLaw::new(&ScalarKind::Gaussian, true)?;
    let m = params.m;
    let blocks = params.trials.div_ceil(MC_BLOCK);
    let sums: Vec<f64> = par::map_range(blocks, |b| {
        let mut rng = seed.trial(b as u64).rng();
        let len = MC_BLOCK.min(params.trials - b * MC_BLOCK);
        (0..len)
            .map(|_| (0..m).map(|_| law.sample(&mut rng, &gauss).powi(2)).sum::<f64>())
            .collect::<Vec<f64>>()
    })
    .concat();
    let squares = match law {
        CoordinateLaw::RademacherSum(w) => {
            Some(signed_sums(w)?.into_iter().map(|s| s * s).collect::<Vec<f64>>())
        }
        CoordinateLaw::Gaussian => None,
    };
    let mut rows = Vec::with_capacity(grid.len());
    for &e in &grid {
        let thr = e * e * m as f64;
        let hits = sums.iter().filter(|&&s| s < thr).count();
        let (ci_low, ci_high) = wilson_interval(hits as u64, params.trials as u64, 0.95)?;
        let estimate = hits as f64 / params.trials as f64;
        let exact = squares.as_ref().map(|sq| sum_below_exact(sq, m, thr));
        let bound = (params.c_t * params.k * e).powi(m as i32);
        let holds = exact.unwrap_or(estimate) <= bound;
        rows.push(TensorizationRow { eps: e, estimate, ci_low, ci_high, exact, bound, holds });
    }
    let pass = rows.iter().all(|r| r.holds);
    Ok(TensorizationReport {
        hypothesis_ok: true,
        hypothesis_violations: Vec::new(),
        rows,
        pass,
    })
}

/// One width of the single-vector invertibility check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleVectorRow {
    pub t: f64,
    /// Empirical `P(‖A′x‖₂ < t√m)`.
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `(C_T K t)^m` with `K` the small-ball constant implied by the
    /// small-ball bound at the smallest admissible width.
    pub bound: f64,
}

/// Empirical `P(‖A′x‖₂ < t√m)` for an `m×n` Rademacher matrix `A′` and a
/// fixed unit `x`, against the tensorized small-ball bound. Each coordinate
/// of `A′x` is a Rademacher sum with weights `x`, so
/// `P(|⟨A′_k, x⟩| < ε) ≤ K ε` for admissible `ε` with
/// `K = sbp_bound(ε_min) / ε_min`. Widths below `ε_min` are rejected.
#[allow(clippy::too_many_arguments)]
pub fn single_vector_invertibility(
    x: &[f64],
    m: usize,
    ts: &[f64],
    alpha: f64,
    gamma: f64,
    theta_max: f64,
    trials: usize,
    seed: &SeedPath,
) -> Result<Vec<SingleVectorRow>> {
    ensure!(m >= 1 && trials >= 1, Validation, "need m >= 1 and trials >= 1");
    let eps_min = min_admissible_eps(x, alpha, gamma, theta_max)?;
    ensure!(
        ts.iter().all(|&t| t >= eps_min),
        Validation,
        "widths must be at least the admissible minimum {eps_min}"
    );
    let k = sbp_bound(x, alpha, gamma, eps_min, SbpConstants::default())?.value / eps_min;
    let c_t = TensorizationParams::new(k, eps_min, m, Vec::new(), 1).c_t;
    let blocks = trials.div_ceil(MC_BLOCK);
    let norms: Vec<f64> = par::map_range(blocks, |b| {
        let mut rng = seed.trial(b as u64).rng();
        let len = MC_BLOCK.min(trials - b * MC_BLOCK);
        (0..len)
            .map(|_| {
                (0..m)
                    .map(|_| {
                        let s: f64 = x.iter().map(|w| if rng.random::<bool>() { *w } else { -*w }).sum();
                        s * s
                    })
                    .sum::<f64>()
            })
            .collect::<Vec<f64>>()
    })
    .concat();
    ts.iter()
        .map(|&t| {
            let hits = norms.iter().filter(|&&q| q < t * t * m as f64).count();
            let (ci_low, ci_high) = wilson_interval(hits as u64, trials as u64, 0.95)?;
            Ok(SingleVectorRow {
                t,
                estimate: hits as f64 / trials as f64,
                ci_low,
                ci_high,
                bound: (c_t * k * t).powi(m as i32),
            })
        })
        .collect()
}

/// CSV rows `(method, epsilon, value, ci_low, ci_high, witness_v)`.
pub fn write_csv<W: Write>(out: W, results: &[ConcentrationResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "epsilon", "value", "ci_low", "ci_high", "witness_v"])?;
    for r in results {
        let (lo, hi) = match r.method {
            Method::MonteCarlo { ci_low, ci_high, .. } => (ci_low.to_string(), ci_high.to_string()),
            _ => (String::new(), String::new()),
        };
        w.write_record([
            r.method.name().to_string(),
            r.epsilon.to_string(),
            r.value.to_string(),
            lo,
            hi,
            r.witness_v.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(Error::from)
}
