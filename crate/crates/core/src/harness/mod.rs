//! Experiment orchestration: configuration, dispatch, Monte Carlo tail
//! experiments and CSV emission.
//!
//! Every experiment writes rows of one fixed schema,
//! `experiment,n,N,param_name,param_value,threshold,estimate,ci_low,ci_high,trials,seed`,
//! with empty cells where a column does not apply.

mod census;
mod config;

use std::fs;
use std::path::{Path, PathBuf};

pub use census::{bareiss_det, sign_census, sign_census_mc, sign_matrix, SignCensus, MAX_CENSUS_DIM};
pub use config::{Experiment, ExperimentConfig};

use crate::concentration::{
    esseen_bound, levy_exact_rademacher_grid, levy_monte_carlo, sbp_bound, ConcentrationResult, Method,
    SbpConstants,
};
use crate::ensembles::{unit_vector, EnsembleSpec, ScalarKind, SeedPath};
use crate::error::ensure;
use crate::geometry::{khinchin_constants, octahedron_section};
use crate::nets::{build_sphere_net, volumetric_cap};
use crate::perturbation::{perturbation_tail, Group};
use crate::spectra::smallest_singular_value;
use crate::stats::wilson_interval;
use crate::structure::{default_kernel_theta_max, kernel_lcd_experiment, LcdQuery};
use crate::{par, Error, RealMatrix, Result};


pub const CSV_HEADER: [&str; 11] = [
    "experiment", "n", "N", "param_name", "param_value", "threshold", "estimate", "ci_low", "ci_high", "trials",
    "seed",
];

/// One output row.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub experiment: Experiment,
    pub n: usize,
    pub big_n: Option<usize>,
    pub param_name: String,
    pub param_value: String,
    pub threshold: Option<f64>,
    pub estimate: f64,
    pub ci: Option<(f64, f64)>,
    pub trials: u64,
    pub seed: u64,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Render rows with the fixed header.
pub fn rows_to_csv(rows: &[Row]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.experiment.name().to_string(),
            r.n.to_string(),
            r.big_n.map(|v| v.to_string()).unwrap_or_default(),
            r.param_name.clone(),
            r.param_value.clone(),
            opt(r.threshold),
            r.estimate.to_string(),
            opt(r.ci.map(|c| c.0)),
            opt(r.ci.map(|c| c.1)),
            r.trials.to_string(),
            r.seed.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Empirical `P(X ≤ threshold)` at one grid parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate {
    pub param: f64,
    pub threshold: f64,
    pub hits: u64,
    pub trials: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// `s_n(A)` for `trials` independent draws of an `rows×cols` matrix.
pub fn smallest_singular_samples(kind: &ScalarKind, rows: usize, cols: usize, trials: usize, seed: &SeedPath) -> Result<Vec<f64>> {
    let spec = EnsembleSpec::new(kind.clone(), rows, cols);
    spec.validate()?;
    par::map_range(trials, |t| {
        let a = crate::ensembles::sample_matrix(&spec, &seed.trial(t as u64))?;
        smallest_singular_value(&a)
    })
    .into_iter()
    .collect()
}

fn tail_estimates(samples: &[f64], grid: &[f64], scale: f64) -> Result<Vec<TailEstimate>> {
    let trials = samples.len() as u64;
    grid.iter()
        .map(|&g| {
            let threshold = g * scale;
            let hits = samples.iter().filter(|s| **s <= threshold).count() as u64;
            let (ci_low, ci_high) = wilson_interval(hits, trials, 0.95)?;
            Ok(TailEstimate {
                param: g,
                threshold,
                hits,
                trials,
                estimate: hits as f64 / trials as f64,
                ci_low,
                ci_high,
            })
        })
        .collect()
}

fn check_grid(grid: &[f64], what: &str) -> Result<()> {
    ensure!(!grid.is_empty(), Validation, "{what} must not be empty");
    ensure!(
        grid.iter().all(|g| *g > 0.0 && g.is_finite()),
        Validation,
        "{what} values must be positive"
    );
    Ok(())
}

/// `P(s_n(A) ≤ ε n^{−1/2})` for a square `n×n` ensemble, per `ε`.
pub fn tail_square(kind: &ScalarKind, n: usize, eps_grid: &[f64], trials: usize, seed: &SeedPath) -> Result<Vec<TailEstimate>> {
    check_grid(eps_grid, "eps_grid")?;
    ensure!(n >= 1 && trials >= 1, Validation, "need n >= 1 and trials >= 1");
    let samples = smallest_singular_samples(kind, n, n, trials, seed)?;
    tail_estimates(&samples, eps_grid, 1.0 / (n as f64).sqrt())
}

/// Limiting Gaussian law `P(√n s_n ≤ ε) → 1 − exp(−ε²/2 − ε)`.
pub fn edelman_limit(eps: f64) -> f64 {
    1.0 - (-eps * eps / 2.0 - eps).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RectangularTail {
    pub points: Vec<TailEstimate>,
    /// For aspect ratio `n/N ≤ 0.1`: whether `P(s_n ≤ 0.05√N) ≤ 1%`.
    pub pass: Option<bool>,
}

/// `P(s_n(A) ≤ c₁√N)` for a tall `N×n` ensemble, per `c₁`.
pub fn tail_rectangular(
    kind: &ScalarKind,
    big_n: usize,
    n: usize,
    c_grid: &[f64],
    trials: usize,
    seed: &SeedPath,
) -> Result<RectangularTail> {
    check_grid(c_grid, "c_grid")?;
    ensure!(n >= 1 && n < big_n, Validation, "rectangular tails need 1 <= n < N, got n={n}, N={big_n}");
    ensure!(trials >= 1, Validation, "need trials >= 1");
    let samples = smallest_singular_samples(kind, big_n, n, trials, seed)?;
    let root = (big_n as f64).sqrt();
    let points = tail_estimates(&samples, c_grid, root)?;
    let pass = (n as f64 / big_n as f64 <= 0.1).then(|| {
        let hits = samples.iter().filter(|s| **s <= 0.05 * root).count();
        hits as f64 <= 0.01 * trials as f64
    });
    Ok(RectangularTail { points, pass })
}

/// Output of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub rows: Vec<Row>,
    pub csv: String,
    /// Sidecar line: version, config hash, master seed.
    pub meta: String,
}

/// Run the configured experiment; with `threads` set, on a dedicated pool.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let rows = match cfg.threads {
        Some(t) => par::with_threads(t, || dispatch(cfg)),
        None => dispatch(cfg),
    }?;
    for r in &rows {
        debug_assert!(r.ci.is_none_or(|(lo, hi)| lo <= r.estimate && r.estimate <= hi));
    }
    let csv = rows_to_csv(&rows)?;
    let meta = format!(
        "version={} config_sha256={} master_seed={}\n",
        env!("CARGO_PKG_VERSION"),
        cfg.hash(),
        cfg.master_seed
    );
    Ok(RunOutput { rows, csv, meta })
}

/// Path of the metadata sidecar for an output file.
pub fn meta_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// [`run`], then write the CSV to `cfg.output` and the sidecar next to it.
pub fn run_to_files(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let out = cfg
        .output
        .clone()
        .ok_or_else(|| Error::Validation("no output path (key 'out' or --out)".into()))?;
    let result = run(cfg)?;
    fs::write(&out, &result.csv)?;
    fs::write(meta_path(&out), &result.meta)?;
    Ok(result)
}

struct RowBuilder {
    experiment: Experiment,
    n: usize,
    big_n: Option<usize>,
    seed: u64,
    rows: Vec<Row>,
}

impl RowBuilder {
    fn push(
        &mut self,
        name: &str,
        value: impl ToString,
        threshold: Option<f64>,
        estimate: f64,
        ci: Option<(f64, f64)>,
        trials: u64,
    ) {
        self.rows.push(Row {
            experiment: self.experiment,
            n: self.n,
            big_n: self.big_n,
            param_name: name.to_string(),
            param_value: value.to_string(),
            threshold,
            estimate,
            ci,
            trials,
            seed: self.seed,
        });
    }

    fn push_tail(&mut self, name: &str, points: &[TailEstimate]) {
        for p in points {
            self.push(name, p.param, Some(p.threshold), p.estimate, Some((p.ci_low, p.ci_high)), p.trials);
        }
    }
}

fn weights(cfg: &ExperimentConfig, n: usize, seed: &SeedPath) -> Result<Vec<f64>> {
    let spec = cfg.str_or("weights", "random");
    let w = match spec {
        "random" => unit_vector(n, &mut seed.child("weights").rng()).iter().copied().collect(),
        "flat" => vec![1.0 / (n as f64).sqrt(); n],
        "sparse" => {
            ensure!(n >= 2, Validation, "sparse weights need n >= 2");
            let mut w = vec![0.0; n];
            w[0] = std::f64::consts::FRAC_1_SQRT_2;
            w[1] = std::f64::consts::FRAC_1_SQRT_2;
            w
        }
        _ => cfg.list_or("weights", &[])?,
    };
    ensure!(w.len() == n, Validation, "weights have length {} but n = {n}", w.len());
    Ok(w)
}

fn dispatch(cfg: &ExperimentConfig) -> Result<Vec<Row>> {
    let exp = cfg.experiment;
    let seed = SeedPath::new(cfg.master_seed, exp.name(), 0);
    let n = cfg.usize_req("n")?;
    let big_n = match exp {
        Experiment::TailRectangular | Experiment::Khinchin | Experiment::Kashin => Some(cfg.usize_req("N")?),
        _ => None,
    };
    let mut out = RowBuilder { experiment: exp, n, big_n, seed: cfg.master_seed, rows: Vec::new() };
    match exp {
        Experiment::TailSquare => {
            let kind = cfg.scalar_kind("gaussian")?;
            let grid = cfg.list_or("eps_grid", &[])?;
            let pts = tail_square(&kind, n, &grid, cfg.usize_or("trials", 1000)?, &seed)?;
            out.push_tail("eps", &pts);
        }
        Experiment::Edelman => {
            let grid = cfg.list_or("eps_grid", &[])?;
            let pts = tail_square(&ScalarKind::Gaussian, n, &grid, cfg.usize_or("trials", 2000)?, &seed)?;
            out.push_tail("eps", &pts);
            for p in &pts {
                out.push("limit", p.param, Some(p.threshold), edelman_limit(p.param), None, 0);
            }
        }
        Experiment::TailRectangular => {
            let kind = cfg.scalar_kind("gaussian")?;
            let grid = cfg.list_or("c_grid", &[0.05, 0.1, 0.2, 0.5])?;
            let big_n = big_n.expect("set above");
            let trials = cfg.usize_or("trials", 10_000)?;
            let r = tail_rectangular(&kind, big_n, n, &grid, trials, &seed)?;
            out.push_tail("c1", &r.points);
            if let Some(pass) = r.pass {
                let t = 0.05 * (big_n as f64).sqrt();
                out.push("pass", 0.05, Some(t), if pass { 1.0 } else { 0.0 }, None, trials as u64);
            }
        }
        Experiment::SignCensus => {
            let c = sign_census(n)?;
            let p = c.probability();
            out.push("method", "exact", None, c.singular as f64 / c.total as f64, None, c.total);
            out.push("singular_count", format!("{}/{}", p.numer(), p.denom()), None, c.singular as f64, None, c.total);
            let trials = cfg.usize_or("trials", 0)?;
            if trials > 0 {
                let (est, lo, hi) = sign_census_mc(n, trials, &seed)?;
                out.push("method", "monte_carlo", None, est, Some((lo, hi)), trials as u64);
            }
        }
        Experiment::Levy => {
            let a = weights(cfg, n, &seed)?;
            let grid = cfg.list_or("eps_grid", &[0.0, 0.1, 0.5, 1.0])?;
            let method = cfg.str_or("method", "exact");
            let results: Vec<ConcentrationResult> = match method {
                "exact" => levy_exact_rademacher_grid(&a, &grid)?,
                "monte_carlo" => {
                    let kind = cfg.scalar_kind("rademacher")?;
                    let trials = cfg.usize_or("trials", 100_000)?;
                    let conf = cfg.f64_or("confidence", 0.95)?;
                    grid.iter()
                        .map(|&e| levy_monte_carlo(&kind, &a, e, trials, &seed, conf))
                        .collect::<Result<_>>()?
                }
                "esseen" => grid.iter().map(|&e| esseen_bound(&a, e)).collect::<Result<_>>()?,
                "sbp" => {
                    let alpha = cfg.f64_or("alpha", 1.0)?;
                    let gamma = cfg.f64_or("gamma", 0.1)?;
                    grid.iter()
                        .map(|&e| sbp_bound(&a, alpha, gamma, e, SbpConstants::default()))
                        .collect::<Result<_>>()?
                }
                other => return Err(Error::Validation(format!("unknown levy method '{other}'"))),
            };
            for r in &results {
                let (ci, trials) = match r.method {
                    Method::MonteCarlo { trials, ci_low, ci_high } => (Some((ci_low, ci_high)), trials as u64),
                    Method::Exact => (None, 1u64 << n),
                    _ => (None, 0),
                };
                out.push(r.method.name(), r.epsilon, Some(r.epsilon), r.value, ci, trials);
            }
        }
        Experiment::Lcd => {
            let kind = cfg.scalar_kind("rademacher")?;
            let gamma = cfg.f64_or("gamma", 0.1)?;
            let alpha = cfg.f64_or("alpha", 0.2)?;
            let theta_max = cfg.f64_or("theta_max", default_kernel_theta_max(n))?;
            let trials = cfg.usize_or("trials", 200)?;
            let s = kernel_lcd_experiment(&kind, n, trials, &LcdQuery::new(gamma, alpha, theta_max), &seed)?;
            let valid = (s.trials - s.degenerate) as u64;
            let ci = if valid > 0 { Some(wilson_interval(s.exceeds as u64, valid, 0.95)?) } else { None };
            out.push("exceeds_fraction", theta_max, Some(theta_max), s.exceeds_fraction(), ci, valid);
            out.push("degenerate", theta_max, None, s.degenerate as f64, None, s.trials as u64);
            for q in [0.1, 0.5, 0.9] {
                if let Some(v) = s.quantile(q) {
                    out.push("found_quantile", q, None, v, None, s.found.len() as u64);
                }
            }
        }
        Experiment::Khinchin => {
            let kind = cfg.scalar_kind("gaussian")?;
            let big_n = big_n.expect("set above");
            let p = cfg.f64_req("p")?;
            let a = crate::ensembles::sample_matrix(&EnsembleSpec::new(kind, big_n, n), &seed.child("matrix"))?;
            let k = khinchin_constants(&a, p, &seed.child("search"))?;
            let tag = |exact: bool| if exact { "exact" } else { "approx" };
            out.push(&format!("alpha_{}", tag(k.alpha_exact)), p, None, k.alpha, None, 1);
            out.push(&format!("beta_{}", tag(k.beta_exact)), p, None, k.beta, None, 1);
        }
        Experiment::Kashin => {
            let kind = cfg.scalar_kind("gaussian")?;
            let big_n = big_n.expect("set above");
            let trials = cfg.usize_or("trials", 50)?;
            let spec = EnsembleSpec::new(kind, big_n, n);
            let mut worst: f64 = 0.0;
            for t in 0..trials {
                let a = crate::ensembles::sample_matrix(&spec, &seed.trial(t as u64))?;
                let r = octahedron_section(&a)?;
                worst = worst.max(r.kashin_ratio);
                out.push("kashin_ratio", t, None, r.kashin_ratio, None, 1);
                out.push("diameter", t, None, r.diameter, None, 1);
                out.push("min_l1", t, None, r.min_l1, None, 1);
            }
            out.push("max_kashin_ratio", trials, None, worst, None, trials as u64);
        }
        Experiment::Perturb => {
            let group = Group::from_name(cfg.str_or("group", "unitary"))?;
            let d = shift_matrix(cfg.str_or("d", "identity"), n, &seed)?;
            let ts = cfg.list_or("thresholds", &[1e-3, 3e-3, 1e-2, 3e-2, 1e-1])?;
            let trials = cfg.usize_or("trials", 10_000)?;
            let c = perturbation_tail(&d, group, &ts, trials, &seed)?;
            for ((t, p), ci) in c.thresholds.iter().zip(&c.probs).zip(&c.ci) {
                out.push("t", t, Some(*t), *p, Some(*ci), trials as u64);
            }
            let floor = crate::perturbation::DEGENERATE_REL * (c.meta.norm_d + 1.0);
            let ci = wilson_interval(c.degenerate as u64, trials as u64, 0.95)?;
            out.push("degenerate_fraction", group.name(), Some(floor), c.degenerate_fraction(), Some(ci), trials as u64);
            out.push("norm_D", group.name(), None, c.meta.norm_d, None, 0);
            out.push("dist_to_On", group.name(), None, c.meta.dist_to_orthogonal.unwrap_or(f64::NAN), None, 0);
        }
        Experiment::NetAudit => {
            let eps = cfg.f64_req("eps")?;
            let tests = cfg.usize_or("trials", 10_000)?;
            let net = build_sphere_net(n, eps, &seed.child("net"))?;
            out.push("cardinality", eps, None, net.points.len() as f64, None, 0);
            if eps < 1.0 {
                let cap = volumetric_cap(n, eps)?;
                let cap: f64 = cap.to_string().parse().unwrap_or(f64::INFINITY);
                out.push("volumetric_cap", eps, None, cap, None, 0);
            }
            out.push("min_separation", eps, Some(eps), net.min_separation(), None, 0);
            let misses = net.covering_misses(tests, &seed.child("audit"));
            let ci = wilson_interval(misses as u64, tests as u64, 0.95)?;
            out.push("covering_miss", eps, Some(eps), misses as f64 / tests as f64, Some(ci), tests as u64);
        }
    }
    Ok(out.rows)
}

/// Named shift matrices for the perturbation experiment.
fn shift_matrix(name: &str, n: usize, seed: &SeedPath) -> Result<RealMatrix> {
    Ok(match name {
        "identity" => RealMatrix::identity(n, n),
        "minus_identity" => -RealMatrix::identity(n, n),
        "zero" => RealMatrix::zeros(n, n),
        "gaussian" => crate::ensembles::sample_matrix(&EnsembleSpec::new(ScalarKind::Gaussian, n, n), &seed.child("shift"))?,
        other => return Err(Error::Validation(format!(
            "unknown shift '{other}' (identity, minus_identity, zero, gaussian)"
        ))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::parse(text).unwrap()
    }

    #[test]
    fn square_tail_is_monotone() {
        let pts = tail_square(&ScalarKind::Rademacher, 20, &[0.05, 0.1, 0.2, 0.4], 500, &SeedPath::new(1, "sq", 0)).unwrap();
        assert!(pts.windows(2).all(|w| w[0].estimate <= w[1].estimate));
        for p in &pts {
            assert!(p.ci_low <= p.estimate && p.estimate <= p.ci_high);
        }
    }

    #[test]
    fn rectangular_tail() {
        let r = tail_rectangular(&ScalarKind::Gaussian, 200, 10, &[0.05, 0.5], 2000, &SeedPath::new(2, "re", 0)).unwrap();
        assert_eq!(r.points[0].hits, 0);
        assert_eq!(r.pass, Some(true));
        assert!(tail_rectangular(&ScalarKind::Gaussian, 10, 10, &[0.1], 10, &SeedPath::new(2, "re", 0)).is_err());
        // A squarer aspect ratio has the heavier tail at a fixed c₁.
        let wide = tail_rectangular(&ScalarKind::Gaussian, 60, 30, &[0.3], 2000, &SeedPath::new(2, "re", 1)).unwrap();
        let thin = tail_rectangular(&ScalarKind::Gaussian, 60, 6, &[0.3], 2000, &SeedPath::new(2, "re", 1)).unwrap();
        assert!(wide.points[0].estimate > thin.points[0].estimate);
        assert_eq!(wide.pass, None);
    }

    #[test]
    fn edelman_limit_value() {
        assert!((edelman_limit(0.1) - (1.0 - (-0.105f64).exp())).abs() < 1e-15);
        assert!((edelman_limit(0.1) - 0.09967).abs() < 1e-5);
    }

    #[test]
    fn run_writes_header_and_meta() {
        let out = run(&cfg("experiment = sign_census\nn = 2\nseed = 3\n")).unwrap();
        let mut lines = out.csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(lines.next().unwrap(), "sign_census,2,,method,exact,,0.5,,,16,3");
        assert!(out.meta.starts_with("version="));
        assert!(out.meta.contains("master_seed=3"));
    }

    #[test]
    fn every_experiment_runs_small() {
        let configs = [
            "experiment = tail_square\nn = 5\neps_grid = 0.1, 1\ntrials = 50\nensemble = heavy_tail\n",
            "experiment = tail_rectangular\nN = 20\nn = 2\ntrials = 50\n",
            "experiment = sign_census\nn = 3\ntrials = 1000\n",
            "experiment = edelman\nn = 10\neps_grid = 0.1\ntrials = 50\n",
            "experiment = levy\nn = 6\nmethod = monte_carlo\ntrials = 1000\n",
            "experiment = levy\nn = 6\nmethod = esseen\neps_grid = 0.5\n",
            "experiment = levy\nn = 4\nweights = flat\nmethod = sbp\nalpha = 2\neps_grid = 1\n",
            "experiment = lcd\nn = 6\ntrials = 20\n",
            "experiment = khinchin\nN = 20\nn = 3\np = 2\n",
            "experiment = kashin\nN = 6\nn = 4\ntrials = 2\n",
            "experiment = perturb\nn = 3\ntrials = 100\ngroup = orthogonal\nd = minus_identity\n",
            "experiment = net_audit\nn = 3\neps = 0.8\ntrials = 500\n",
        ];
        for text in configs {
            let out = run(&cfg(text)).unwrap_or_else(|e| panic!("{text}: {e}"));
            assert!(!out.rows.is_empty(), "{text}");
            for r in &out.rows {
                if let Some((lo, hi)) = r.ci {
                    assert!((0.0..=1.0).contains(&r.estimate));
                    assert!(lo <= r.estimate && r.estimate <= hi, "{text}: {r:?}");
                }
            }
        }
    }

    #[test]
    fn bad_values_are_validation_errors() {
        let e = run(&cfg("experiment = levy\nn = 4\nmethod = guess\n")).unwrap_err();
        assert!(matches!(e, Error::Validation(_)));
        let e = run(&cfg("experiment = sign_census\nn = six\n")).unwrap_err();
        assert!(e.to_string().contains("'n'"));
        let e = run(&cfg("experiment = sign_census\nn = 6\n")).unwrap_err();
        assert_eq!(e.exit_code(), 3);
    }
}
