//! Arithmetic structure of coefficient vectors: exact and essential least
//! common denominators, compressibility and spread sets.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;

use crate::ensembles::{EnsembleSpec, ScalarKind, ScalarLaw, SeedPath};
use crate::error::ensure;
use crate::spectra::{columns_of, random_normal_vector};
use crate::{par, Error, RealVector, Result};

/// Upper limit on lattice-distance evaluations in one essential-LCD scan.
pub const MAX_SCAN_EVALUATIONS: u64 = 1_000_000_000;

const SCAN_CHUNKS: usize = 32;
const CHUNK_BATCH: usize = 8;
const REFINE_TOL: f64 = 1e-10;

/// `inf{θ > 0 : θa ∈ Zⁿ \ {0}}` in exact arithmetic; `None` for `a = 0`.
pub fn exact_lcd(a: &[BigRational]) -> Option<BigRational> {
    let nonzero: Vec<&BigRational> = a.iter().filter(|x| !x.is_zero()).collect();
    if nonzero.is_empty() {
        return None;
    }
    let l = nonzero
        .iter()
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let g = nonzero.iter().fold(BigInt::zero(), |acc, x| {
        let scaled = x.numer() * (&l / x.denom());
        acc.gcd(&scaled)
    });
    Some(BigRational::new(l, g.abs()))
}

/// Parameters of an essential-LCD search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LcdQuery {
    /// Aperture `γ ∈ (0, 1)`.
    pub gamma: f64,
    /// Distance cap `α > 0`.
    pub alpha: f64,
    /// Search ceiling for θ.
    pub theta_max: f64,
    /// Certification slack `δ_s`.
    pub slack: f64,
}

impl LcdQuery {
    /// Query with the default slack `α / 100`.
    pub fn new(gamma: f64, alpha: f64, theta_max: f64) -> Self {
        Self {
            gamma,
            alpha,
            theta_max,
            slack: alpha / 100.0,
        }
    }

    pub fn with_slack(mut self, slack: f64) -> Self {
        self.slack = slack;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.gamma > 0.0 && self.gamma < 1.0,
            Validation,
            "gamma must lie in (0, 1), got {}",
            self.gamma
        );
        ensure!(
            self.alpha > 0.0 && self.theta_max > 0.0 && self.slack > 0.0,
            Validation,
            "alpha, theta_max and slack must be positive"
        );
        ensure!(
            self.theta_max.is_finite(),
            Validation,
            "theta_max must be finite"
        );
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LcdOutcome {
    /// Smallest certified θ with `dist(θa, Zⁿ) < min(γ‖θa‖, α)`.
    Found { theta: f64, distance: f64 },
    /// No θ ≤ `theta_max` satisfies the condition with margin `slack`.
    Exceeds { theta_max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LcdResult {
    pub outcome: LcdOutcome,
    pub certified: bool,
    /// Lattice-distance evaluations spent by the scan.
    pub evaluations: u64,
}

impl LcdResult {
    /// Found θ, or the ceiling when the search was exhausted.
    pub fn value_or_ceiling(&self) -> f64 {
        match self.outcome {
            LcdOutcome::Found { theta, .. } => theta,
            LcdOutcome::Exceeds { theta_max } => theta_max,
        }
    }

    pub fn found(&self) -> Option<f64> {
        match self.outcome {
            LcdOutcome::Found { theta, .. } => Some(theta),
            LcdOutcome::Exceeds { .. } => None,
        }
    }
}

/// `dist(θa, Zⁿ)`, rounding each coordinate to the nearest integer.
pub fn lattice_distance(a: &[f64], theta: f64) -> f64 {
    a.iter()
        .map(|&x| {
            let t = theta * x;
            let d = t - t.round();
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Re-verify a witness: `dist(θa, Zⁿ) < min(γ‖θa‖₂, α)`.
pub fn check_lcd_witness(a: &[f64], theta: f64, gamma: f64, alpha: f64) -> bool {
    theta > 0.0 && lattice_distance(a, theta) < (gamma * theta * norm(a)).min(alpha)
}

/// Signed gap of the LCD condition; negative exactly on hits.
fn lcd_gap(a: &[f64], a_norm: f64, theta: f64, q: &LcdQuery) -> f64 {
    lattice_distance(a, theta) - (q.gamma * theta * a_norm).min(q.alpha)
}

enum ChunkScan {
    Hit { theta: f64, evaluations: u64 },
    Clear { evaluations: u64 },
    Budget,
}

/// Scan `[start, end]`. The gap is `(1+γ)‖a‖`-Lipschitz in θ, so from a
/// point with gap `g ≥ 0` the next `g / L` is hit-free; steps never drop
/// below `slack / (2‖a‖)`, which bounds any missed dip by the slack.
fn scan_chunk(a: &[f64], a_norm: f64, q: &LcdQuery, start: f64, end: f64, budget: u64) -> ChunkScan {
    let lipschitz = (1.0 + q.gamma) * a_norm;
    let min_step = q.slack / (2.0 * a_norm);
    let mut theta = start;
    let mut prev: Option<f64> = None;
    let mut evaluations = 0u64;
    loop {
        evaluations += 1;
        if evaluations > budget {
            return ChunkScan::Budget;
        }
        let gap = lcd_gap(a, a_norm, theta, q);
        if gap < 0.0 && theta > 0.0 {
            let theta = match prev {
                Some(lo) => refine(a, a_norm, q, lo, theta, &mut evaluations),
                None => theta,
            };
            return ChunkScan::Hit { theta, evaluations };
        }
        if theta >= end {
            return ChunkScan::Clear { evaluations };
        }
        prev = Some(theta);
        let step = (gap / lipschitz).max(min_step);
        theta = (theta + step).min(end);
    }
}

/// Bisection between a non-hit `lo` and a hit `hi`; returns a hit.
fn refine(a: &[f64], a_norm: f64, q: &LcdQuery, mut lo: f64, mut hi: f64, evals: &mut u64) -> f64 {
    for _ in 0..200 {
        if hi - lo <= REFINE_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        *evals += 1;
        if lcd_gap(a, a_norm, mid, q) < 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Certified search for the essential LCD of a unit vector.
///
/// The range `(0, θ_max]` is cut into fixed chunks scanned in parallel
/// batches; the lowest chunk with a hit wins, so the answer does not depend
/// on the worker count.
pub fn essential_lcd(a: &[f64], q: &LcdQuery) -> Result<LcdResult> {
    essential_lcd_with_budget(a, q, MAX_SCAN_EVALUATIONS)
}

/// [`essential_lcd`] with an explicit evaluation budget.
pub fn essential_lcd_with_budget(a: &[f64], q: &LcdQuery, budget: u64) -> Result<LcdResult> {
    q.validate()?;
    ensure!(!a.is_empty(), Validation, "empty vector");
    let a_norm = norm(a);
    ensure!(
        (a_norm - 1.0).abs() <= 1e-10,
        Validation,
        "essential LCD expects a unit vector, got norm {a_norm}"
    );
    let per_chunk_budget = (budget / SCAN_CHUNKS as u64).max(1);
    let width = q.theta_max / SCAN_CHUNKS as f64;
    let mut evaluations = 0u64;
    for batch in (0..SCAN_CHUNKS).step_by(CHUNK_BATCH) {
        let chunk_ids: Vec<usize> = (batch..(batch + CHUNK_BATCH).min(SCAN_CHUNKS)).collect();
        let scans = par::map_slice(&chunk_ids, |&k| {
            let start = width * k as f64;
            let end = if k + 1 == SCAN_CHUNKS {
                q.theta_max
            } else {
                width * (k + 1) as f64
            };
            scan_chunk(a, a_norm, q, start, end, per_chunk_budget)
        });
        for scan in scans {
            match scan {
                ChunkScan::Budget => {
                    return Err(Error::Resource(format!(
                        "essential LCD scan exceeded {budget} evaluations \
                         (theta_max = {}, slack = {})",
                        q.theta_max, q.slack
                    )))
                }
                ChunkScan::Clear { evaluations: e } => evaluations += e,
                ChunkScan::Hit { theta, evaluations: e } => {
                    evaluations += e;
                    let distance = lattice_distance(a, theta);
                    return Ok(LcdResult {
                        outcome: LcdOutcome::Found { theta, distance },
                        certified: check_lcd_witness(a, theta, q.gamma, q.alpha),
                        evaluations,
                    });
                }
            }
        }
    }
    Ok(LcdResult {
        outcome: LcdOutcome::Exceeds {
            theta_max: q.theta_max,
        },
        certified: true,
        evaluations,
    })
}

/// Proof constants `(ν₁, ν₂, ν₃)` of the spread-set lemma:
/// `ν₁ = δρ²/4`, `ν₂ = ρ/√2`, `ν₃ = √(2/δ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadConstants {
    pub nu1: f64,
    pub nu2: f64,
    pub nu3: f64,
}

impl SpreadConstants {
    pub fn new(delta: f64, rho: f64) -> Self {
        Self {
            nu1: delta * rho * rho / 4.0,
            nu2: rho / std::f64::consts::SQRT_2,
            nu3: (2.0 / delta).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Compressibility {
    Compressible,
    Incompressible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressibilityReport {
    pub delta: f64,
    pub rho: f64,
    /// Distance from `x` to the `⌊δn⌋`-sparse vectors.
    pub distance_to_sparse: f64,
    pub class: Compressibility,
    /// Spread set `σ(x)`, present for incompressible vectors.
    pub spread_set: Option<Vec<usize>>,
    pub nu: SpreadConstants,
}

fn check_delta_rho(delta: f64, rho: f64) -> Result<()> {
    ensure!(
        delta > 0.0 && delta < 1.0 && rho > 0.0 && rho < 1.0,
        Validation,
        "delta and rho must lie in (0, 1), got ({delta}, {rho})"
    );
    Ok(())
}

fn sparsity(n: usize, delta: f64) -> Result<usize> {
    let k = (delta * n as f64).floor() as usize;
    ensure!(k >= 1, Validation, "floor(delta * n) = 0 for delta = {delta}, n = {n}");
    Ok(k)
}

/// Distance to the `k`-sparse vectors: norm of everything outside the `k`
/// largest-magnitude coordinates, summed in index order.
pub fn distance_to_sparse(x: &[f64], k: usize) -> f64 {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&i, &j| x[j].abs().total_cmp(&x[i].abs()).then(i.cmp(&j)));
    let mut kept = vec![false; x.len()];
    for &i in order.iter().take(k) {
        kept[i] = true;
    }
    x.iter()
        .zip(&kept)
        .filter(|(_, &keep)| !keep)
        .map(|(v, _)| v * v)
        .sum::<f64>()
        .sqrt()
}

/// Compressible iff within distance `ρ` of the `⌊δn⌋`-sparse vectors.
pub fn classify(x: &[f64], delta: f64, rho: f64) -> Result<CompressibilityReport> {
    check_delta_rho(delta, rho)?;
    let k = sparsity(x.len(), delta)?;
    let distance = distance_to_sparse(x, k);
    let nu = SpreadConstants::new(delta, rho);
    let class = if distance <= rho {
        Compressibility::Compressible
    } else {
        Compressibility::Incompressible
    };
    let spread_set = match class {
        Compressibility::Compressible => None,
        Compressibility::Incompressible => Some(spread_indices(x, &nu)),
    };
    Ok(CompressibilityReport {
        delta,
        rho,
        distance_to_sparse: distance,
        class,
        spread_set,
        nu,
    })
}

fn spread_indices(x: &[f64], nu: &SpreadConstants) -> Vec<usize> {
    let sqrt_n = (x.len() as f64).sqrt();
    let (lo, hi) = (nu.nu2 / sqrt_n, nu.nu3 / sqrt_n);
    (0..x.len())
        .filter(|&k| (lo..=hi).contains(&x[k].abs()))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpreadSet {
    pub indices: Vec<usize>,
    pub nu: SpreadConstants,
}

/// `σ(x) = {k : ν₂/√n ≤ |x_k| ≤ ν₃/√n}` for an incompressible unit vector,
/// checked to have at least `ν₁n` elements.
pub fn spread_set(x: &[f64], delta: f64, rho: f64) -> Result<SpreadSet> {
    let report = classify(x, delta, rho)?;
    let indices = report.spread_set.ok_or_else(|| {
        Error::Validation(format!(
            "vector is compressible (distance {} <= rho {rho})",
            report.distance_to_sparse
        ))
    })?;
    let need = report.nu.nu1 * x.len() as f64;
    ensure!(
        indices.len() as f64 >= need - 1e-9,
        Calibration,
        "spread set has {} indices, fewer than nu1*n = {need}",
        indices.len()
    );
    Ok(SpreadSet {
        indices,
        nu: report.nu,
    })
}

/// `λ = 1 / (ν₃ + 2γ/ν₁)`: every incompressible vector has
/// `LCD_α ≥ λ√n` when `γ < ν₂√(ν₁/2)`.
pub fn incompressible_lcd_floor(delta: f64, rho: f64, gamma: f64) -> Result<f64> {
    check_delta_rho(delta, rho)?;
    let nu = SpreadConstants::new(delta, rho);
    let gamma_cap = nu.nu2 * (nu.nu1 / 2.0).sqrt();
    ensure!(
        gamma > 0.0 && gamma < gamma_cap,
        Validation,
        "gamma = {gamma} must be below nu2*sqrt(nu1/2) = {gamma_cap}"
    );
    Ok(1.0 / (nu.nu3 + 2.0 * gamma / nu.nu1))
}

/// Outcome distribution of the essential LCD of random normals.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelLcdSummary {
    pub n: usize,
    pub trials: usize,
    /// Trials whose `n - 1` columns were rank-deficient.
    pub degenerate: usize,
    /// Trials where the LCD exceeded `theta_max`.
    pub exceeds: usize,
    /// Found LCD values, ascending.
    pub found: Vec<f64>,
    pub theta_max: f64,
}

impl KernelLcdSummary {
    /// Fraction of non-degenerate trials whose LCD exceeded the ceiling.
    pub fn exceeds_fraction(&self) -> f64 {
        let valid = self.trials - self.degenerate;
        if valid == 0 {
            return f64::NAN;
        }
        self.exceeds as f64 / valid as f64
    }

    pub fn quantile(&self, q: f64) -> Option<f64> {
        crate::stats::quantile(&self.found, q)
    }
}

/// Default ceiling `e^{n/4}` for the random-normal experiment.
pub fn default_kernel_theta_max(n: usize) -> f64 {
    (n as f64 / 4.0).exp()
}

/// Essential LCD of the unit normal to `n - 1` random columns, per trial.
pub fn kernel_lcd_experiment(
    kind: &ScalarKind,
    n: usize,
    trials: usize,
    q: &LcdQuery,
    seed: &SeedPath,
) -> Result<KernelLcdSummary> {
    ensure!((2..=64).contains(&n), Validation, "n must lie in 2..=64, got {n}");
    q.validate()?;
    let spec = EnsembleSpec::new(kind.clone(), n, n - 1);
    spec.validate()?;
    let outcomes = par::map_range(trials, |t| -> Result<Option<LcdResult>> {
        let m = crate::ensembles::sample_matrix(&spec, &seed.trial(t as u64))?;
        match random_normal_vector(&columns_of(&m)) {
            Ok(z) => essential_lcd(z.as_slice(), q).map(Some),
            Err(Error::Degenerate(_)) => Ok(None),
            Err(e) => Err(e),
        }
    });
    let mut summary = KernelLcdSummary {
        n,
        trials,
        degenerate: 0,
        exceeds: 0,
        found: Vec::new(),
        theta_max: q.theta_max,
    };
    for outcome in outcomes {
        match outcome? {
            None => summary.degenerate += 1,
            Some(r) => match r.outcome {
                LcdOutcome::Found { theta, .. } => summary.found.push(theta),
                LcdOutcome::Exceeds { .. } => summary.exceeds += 1,
            },
        }
    }
    summary.found.sort_unstable_by(f64::total_cmp);
    Ok(summary)
}

/// Unit vectors whose essential LCD lies in `[level, 2·level]`, paired with
/// that LCD. Candidates are perturbed primitive integer directions.
pub fn level_set_vectors(
    n: usize,
    level: f64,
    gamma: f64,
    alpha: f64,
    count: usize,
    seed: &SeedPath,
) -> Result<Vec<(RealVector, f64)>> {
    ensure!(n >= 1 && level > 0.0, Validation, "need n >= 1 and level > 0");
    let q = LcdQuery::new(gamma, alpha, 2.0 * level);
    q.validate()?;
    let mut rng = seed.rng();
    let gauss = ScalarLaw::new(&ScalarKind::Gaussian, true)?;
    let radius = (1.5 * level).ceil() as i64 + 1;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count.saturating_mul(2000).max(1000) {
        if out.len() == count {
            break;
        }
        let p: Vec<f64> = (0..n)
            .map(|_| rng.random_range(-radius..=radius) as f64)
            .collect();
        let pn = norm(&p);
        if pn == 0.0 {
            continue;
        }
        let jitter = 0.2 * alpha / level;
        let x: Vec<f64> = p.iter().map(|v| v / pn + jitter * gauss.sample(&mut rng) / (n as f64).sqrt()).collect();
        let xn = norm(&x);
        let x: Vec<f64> = x.iter().map(|v| v / xn).collect();
        if let LcdOutcome::Found { theta, .. } = essential_lcd(&x, &q)?.outcome {
            if theta >= level && theta <= 2.0 * level {
                out.push((RealVector::from_vec(x), theta));
            }
        }
    }
    ensure!(
        out.len() == count,
        Resource,
        "found only {} of {count} level-set vectors",
        out.len()
    );
    Ok(out)
}

/// Rows `(outcome, theta, distance, theta_max, certified, evaluations)`;
/// `theta_max` is filled for exhausted searches.
pub fn write_lcd_csv<W: std::io::Write>(out: W, results: &[LcdResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["outcome", "theta", "distance", "theta_max", "certified", "evaluations"])?;
    for r in results {
        let (tag, theta, dist, ceiling) = match r.outcome {
            LcdOutcome::Found { theta, distance } => ("found", theta.to_string(), distance.to_string(), String::new()),
            LcdOutcome::Exceeds { theta_max } => ("exceeds", String::new(), String::new(), theta_max.to_string()),
        };
        w.write_record([tag.to_string(), theta, dist, ceiling, r.certified.to_string(), r.evaluations.to_string()])?;
    }
    w.flush().map_err(Error::from)
}

/// Rows `(delta, rho, distance_to_sparse, class, spread_size, nu1, nu2, nu3)`.
pub fn write_compressibility_csv<W: std::io::Write>(out: W, reports: &[CompressibilityReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["delta", "rho", "distance_to_sparse", "class", "spread_size", "nu1", "nu2", "nu3"])?;
    for r in reports {
        let class = match r.class {
            Compressibility::Compressible => "compressible",
            Compressibility::Incompressible => "incompressible",
        };
        w.write_record([
            r.delta.to_string(),
            r.rho.to_string(),
            r.distance_to_sparse.to_string(),
            class.to_string(),
            r.spread_set.as_ref().map(|s| s.len().to_string()).unwrap_or_default(),
            r.nu.nu1.to_string(),
            r.nu.nu2.to_string(),
            r.nu.nu3.to_string(),
        ])?;
    }
    w.flush().map_err(Error::from)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::unit_vector;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn exact_lcd_examples() {
        // a⁽²⁾ at n = 4: entries 1/2, lcd = 2 = √n.
        assert_eq!(exact_lcd(&vec![rat(1, 2); 4]), Some(rat(2, 1)));
        // a⁽³⁾ at n = 4: entries (4+k)/8, lcd = 8 = n^{3/2}.
        let a3: Vec<_> = (1..=4).map(|k| rat(4 + k, 8)).collect();
        assert_eq!(exact_lcd(&a3), Some(rat(8, 1)));
        assert_eq!(exact_lcd(&[rat(1, 1), rat(2, 1), rat(3, 1)]), Some(rat(1, 1)));
        assert_eq!(exact_lcd(&[rat(0, 1), rat(0, 1)]), None);
        assert_eq!(exact_lcd(&[rat(2, 3), rat(-4, 9)]), Some(rat(9, 2)));
    }

    #[test]
    fn flat_vector_lcd_is_sqrt_n_over_one_plus_gamma() {
        // θ a⁽²⁾ is within γθ of (1,…,1) once |θ - √n| < γθ.
        let a = vec![0.25; 16];
        let r = essential_lcd(&a, &LcdQuery::new(0.1, 4.0, 10.0)).unwrap();
        assert!(r.certified);
        let theta = r.found().unwrap();
        assert!((theta - 4.0 / 1.1).abs() < 1e-9, "{theta}");
        let tiny = essential_lcd(&a, &LcdQuery::new(1e-9, 1.0, 10.0).with_slack(1e-10)).unwrap();
        assert!((tiny.found().unwrap() - 4.0).abs() < 1e-8);
    }

    #[test]
    fn basis_vector_lcd() {
        let mut e1 = vec![0.0; 5];
        e1[0] = 1.0;
        let r = essential_lcd(&e1, &LcdQuery::new(0.1, 1.0, 5.0)).unwrap();
        // Hits begin where |θ - 1| < 0.1 θ.
        assert!((r.found().unwrap() - 1.0 / 1.1).abs() < 1e-9);
        let r = essential_lcd(&e1, &LcdQuery::new(1e-9, 1.0, 5.0).with_slack(1e-11)).unwrap();
        assert!((r.found().unwrap() - 1.0).abs() < 1e-8);
        assert!(check_lcd_witness(&e1, 1.0, 0.1, 1.0));
    }

    #[test]
    fn lcd_rejects_bad_input() {
        assert!(essential_lcd(&[0.5, 0.5], &LcdQuery::new(0.1, 1.0, 2.0)).is_err());
        assert!(essential_lcd(&[1.0], &LcdQuery::new(1.5, 1.0, 2.0)).is_err());
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let q = LcdQuery::new(1e-3, 1e-3, 1e6).with_slack(1e-9);
        let r = essential_lcd_with_budget(&[h, h * 0.999_999, (1.0 - h * h - (h * 0.999_999f64).powi(2)).sqrt()], &q, 10_000);
        assert!(matches!(r, Err(Error::Resource(_))));
    }

    #[test]
    fn certification_soundness_fine_grid() {
        let mut rng = SeedPath::new(2, "cert", 0).rng();
        for _ in 0..20 {
            let a = unit_vector(6, &mut rng);
            let q = LcdQuery::new(0.05, 0.5, 8.0);
            let r = essential_lcd(a.as_slice(), &q).unwrap();
            let limit = r.found().unwrap_or(q.theta_max);
            let h = q.slack / 2.0 / 10.0;
            let mut theta = h;
            while theta < limit - 1e-9 {
                let relaxed = (q.gamma * theta).min(q.alpha) - q.slack;
                assert!(lattice_distance(a.as_slice(), theta) >= relaxed, "violation at {theta}");
                theta += h;
            }
            if let Some(t) = r.found() {
                assert!(check_lcd_witness(a.as_slice(), t, q.gamma, q.alpha));
            }
        }
    }

    #[test]
    fn lcd_symmetries() {
        let mut rng = SeedPath::new(4, "sym", 0).rng();
        let q = LcdQuery::new(0.1, 1.0, 20.0);
        for _ in 0..10 {
            let a = unit_vector(7, &mut rng);
            let base = essential_lcd(a.as_slice(), &q).unwrap().value_or_ceiling();
            let mut b: Vec<f64> = a.iter().rev().copied().collect();
            b[2] = -b[2];
            b[5] = -b[5];
            let other = essential_lcd(&b, &q).unwrap().value_or_ceiling();
            assert!((base - other).abs() < 1e-9, "{base} vs {other}");
        }
    }

    #[test]
    fn lcd_bounded_by_rational_rounding() {
        let mut rng = SeedPath::new(8, "round", 0).rng();
        for _ in 0..50 {
            let a = unit_vector(8, &mut rng);
            let denom = 10i64;
            let r: Vec<BigRational> = a
                .iter()
                .map(|v| rat((v * denom as f64).round() as i64, denom))
                .collect();
            let Some(lcd) = exact_lcd(&r) else { continue };
            let lcd = lcd.numer().to_string().parse::<f64>().unwrap()
                / lcd.denom().to_string().parse::<f64>().unwrap();
            let err: f64 = a
                .iter()
                .zip(&r)
                .map(|(x, y)| {
                    let y = y.numer().to_string().parse::<f64>().unwrap() / denom as f64;
                    (x - y).powi(2)
                })
                .sum::<f64>()
                .sqrt();
            // At θ = lcd(r), dist(θa, Zⁿ) ≤ θ‖a − r‖, so the LCD is at most lcd(r).
            let gamma = (2.0 * err).min(0.99);
            let alpha = 2.0 * lcd * err + 1e-12;
            let q = LcdQuery::new(gamma, alpha, lcd * 1.01);
            let found = essential_lcd(a.as_slice(), &q).unwrap().found();
            assert!(found.is_some_and(|t| t <= lcd + 1e-9), "{found:?} vs {lcd}");
        }
    }

    #[test]
    fn classification_examples() {
        let mut e1 = vec![0.0; 8];
        e1[0] = 1.0;
        let r = classify(&e1, 0.125, 0.5).unwrap();
        assert_eq!(r.distance_to_sparse, 0.0);
        assert_eq!(r.class, Compressibility::Compressible);

        let flat = vec![0.25; 16];
        let r = classify(&flat, 0.25, 0.5).unwrap();
        assert!((r.distance_to_sparse - 0.75f64.sqrt()).abs() < 1e-15);
        assert_eq!(r.class, Compressibility::Incompressible);
        assert_eq!(r.spread_set.unwrap(), (0..16).collect::<Vec<_>>());

        assert!(classify(&flat, 0.01, 0.5).is_err());
    }

    #[test]
    fn brute_force_support_oracle() {
        let mut rng = SeedPath::new(6, "supports", 0).rng();
        for n in 2..=10usize {
            let x = unit_vector(n, &mut rng);
            for k in 1..n {
                let mut best = f64::INFINITY;
                for mask in 0u32..(1 << n) {
                    if mask.count_ones() as usize != k {
                        continue;
                    }
                    let d = (0..n)
                        .filter(|i| mask & (1 << i) == 0)
                        .map(|i| x[i] * x[i])
                        .sum::<f64>()
                        .sqrt();
                    best = best.min(d);
                }
                assert_eq!(distance_to_sparse(x.as_slice(), k), best);
            }
        }
    }

    #[test]
    fn spread_set_examples() {
        let n = 16;
        let x: Vec<f64> = (0..n)
            .map(|i| if i % 2 == 0 { (2.0 / n as f64).sqrt() * if i % 4 == 0 { 1.0 } else { -1.0 } } else { 0.0 })
            .collect();
        let s = spread_set(&x, 0.25, 0.5).unwrap();
        assert_eq!(s.indices, (0..n).step_by(2).collect::<Vec<_>>());

        let mut e1 = vec![0.0; 16];
        e1[3] = 1.0;
        assert!(matches!(spread_set(&e1, 0.25, 0.5), Err(Error::Validation(_))));
    }

    #[test]
    fn spread_constants_hold_on_random_vectors() {
        let n = 32;
        let failures = par::count_range(10_000, |t| {
            let mut rng = SeedPath::new(10, "spread", t as u64).rng();
            let x = unit_vector(n, &mut rng);
            match spread_set(x.as_slice(), 0.25, 0.5) {
                Ok(_) | Err(Error::Validation(_)) => false,
                Err(_) => true,
            }
        });
        assert_eq!(failures, 0);
    }

    #[test]
    fn lcd_floor_plugin() {
        let nu = SpreadConstants::new(0.25, 0.5);
        let cap = nu.nu2 * (nu.nu1 / 2.0).sqrt();
        let lambda = incompressible_lcd_floor(0.25, 0.5, 0.5 * cap).unwrap();
        assert!((lambda - 1.0 / (nu.nu3 + cap / nu.nu1)).abs() < 1e-15);
        assert!(lambda > 0.0);
        assert!(incompressible_lcd_floor(0.25, 0.5, cap).is_err());
    }

    #[test]
    fn lcd_scaling_is_exact() {
        let a: Vec<_> = [3, -5, 7, 0, 11].iter().map(|&v| rat(v, 6)).collect();
        let base = exact_lcd(&a).unwrap();
        for (num, den) in [(2, 1), (3, 7), (5, 2)] {
            let c = rat(num, den);
            let scaled: Vec<_> = a.iter().map(|x| x * &c).collect();
            assert_eq!(exact_lcd(&scaled).unwrap(), &base / &c);
        }
    }

    #[test]
    fn planar_kernel_normal() {
        let z = random_normal_vector(&[RealVector::from_vec(vec![1.0, 1.0])]).unwrap();
        let q = LcdQuery::new(1e-9, 0.5, 3.0).with_slack(1e-11);
        let theta = essential_lcd(z.as_slice(), &q).unwrap().found().unwrap();
        assert!((theta - 2f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn kernel_experiment_respects_floor() {
        let gamma = 0.03;
        let lambda = incompressible_lcd_floor(0.25, 0.5, gamma).unwrap();
        let q = LcdQuery::new(gamma, 8f64.sqrt(), 100.0);
        let s = kernel_lcd_experiment(&ScalarKind::Rademacher, 8, 200, &q, &SeedPath::new(1, "kernel", 0)).unwrap();
        assert_eq!(s.trials, 200);
        assert!(s.found.iter().all(|&t| t >= lambda * 8f64.sqrt()));
    }

    #[test]
    fn csv_exports() {
        let a = vec![0.25; 16];
        let found = essential_lcd(&a, &LcdQuery::new(0.1, 4.0, 10.0)).unwrap();
        let none = essential_lcd(&a, &LcdQuery::new(0.1, 4.0, 1.0)).unwrap();
        let mut buf = Vec::new();
        write_lcd_csv(&mut buf, &[found, none]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("found,") && lines[2].starts_with("exceeds,,,1,"));
        let mut buf = Vec::new();
        write_compressibility_csv(&mut buf, &[classify(&a, 0.25, 0.5).unwrap()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().contains(",incompressible,16,"));
    }
}
