//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::path::PathBuf;

use sha2::{Digest, Sha256};

use crate::ensembles::{Atom, ScalarKind, DEFAULT_TAIL_MASS};
use crate::error::ensure;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    TailSquare,
    TailRectangular,
    SignCensus,
    Edelman,
    Levy,
    Lcd,
    Khinchin,
    Kashin,
    Perturb,
    NetAudit,
}

impl Experiment {
    pub const ALL: [Experiment; 10] = [
        Experiment::TailSquare,
        Experiment::TailRectangular,
        Experiment::SignCensus,
        Experiment::Edelman,
        Experiment::Levy,
        Experiment::Lcd,
        Experiment::Khinchin,
        Experiment::Kashin,
        Experiment::Perturb,
        Experiment::NetAudit,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::TailSquare => "tail_square",
            Experiment::TailRectangular => "tail_rectangular",
            Experiment::SignCensus => "sign_census",
            Experiment::Edelman => "edelman",
            Experiment::Levy => "levy",
            Experiment::Lcd => "lcd",
            Experiment::Khinchin => "khinchin",
            Experiment::Kashin => "kashin",
            Experiment::Perturb => "perturb",
            Experiment::NetAudit => "net_audit",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == name)
            .ok_or_else(|| Error::Validation(format!("unknown experiment '{name}'")))
    }

    /// Keys that must be present.
    pub fn required_keys(&self) -> &'static [&'static str] {
        match self {
            Experiment::TailSquare => &["n", "eps_grid"],
            Experiment::TailRectangular => &["N", "n"],
            Experiment::SignCensus => &["n"],
            Experiment::Edelman => &["n", "eps_grid"],
            Experiment::Levy => &["n"],
            Experiment::Lcd => &["n"],
            Experiment::Khinchin => &["N", "n", "p"],
            Experiment::Kashin => &["N", "n"],
            Experiment::Perturb => &["n"],
            Experiment::NetAudit => &["n", "eps"],
        }
    }

    /// Keys that may be present besides the required ones.
    pub fn optional_keys(&self) -> &'static [&'static str] {
        const ENSEMBLE: [&str; 3] = ["ensemble", "tail_mass", "atoms"];
        match self {
            Experiment::TailSquare => &["trials", "ensemble", "tail_mass", "atoms"],
            Experiment::TailRectangular => &["trials", "c_grid", "ensemble", "tail_mass", "atoms"],
            Experiment::SignCensus => &["trials"],
            Experiment::Edelman => &["trials"],
            Experiment::Levy => &[
                "trials", "weights", "eps_grid", "method", "alpha", "gamma", "confidence", "ensemble",
                "tail_mass", "atoms",
            ],
            Experiment::Lcd => &["trials", "gamma", "alpha", "theta_max", "ensemble", "tail_mass", "atoms"],
            Experiment::Khinchin => &ENSEMBLE,
            Experiment::Kashin => &["trials", "ensemble", "tail_mass", "atoms"],
            Experiment::Perturb => &["trials", "group", "d", "thresholds"],
            Experiment::NetAudit => &["trials"],
        }
    }
}

/// A parsed configuration. `seed`, `out` and `threads` are routed to
/// dedicated fields; every other key is an experiment parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub master_seed: u64,
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
    pub params: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment, master_seed: u64) -> Self {
        Self { experiment, master_seed, output: None, threads: None, params: BTreeMap::new() }
    }

    /// Parse `key = value` lines; `#` starts a comment. Keys are validated
    /// against the experiment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(String, String)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Validation(format!("line {}: expected 'key = value'", lineno + 1)))?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            ensure!(!k.is_empty(), Validation, "line {}: empty key", lineno + 1);
            ensure!(
                entries.iter().all(|(e, _)| *e != k),
                Validation,
                "line {}: duplicate key '{k}'",
                lineno + 1
            );
            entries.push((k, v));
        }
        let exp = entries
            .iter()
            .find(|(k, _)| k == "experiment")
            .ok_or_else(|| Error::Validation("missing key 'experiment'".into()))?;
        let mut cfg = Self::new(Experiment::from_name(&exp.1)?, 0);
        for (k, v) in entries {
            if k != "experiment" {
                cfg.set(&k, &v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Set one key, as from a config line or a command line override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "experiment" => self.experiment = Experiment::from_name(value)?,
            "seed" => {
                self.master_seed = value
                    .parse()
                    .map_err(|_| Error::Validation(format!("seed must be an unsigned 64-bit integer, got '{value}'")))?
            }
            "out" => self.output = Some(PathBuf::from(value)),
            "threads" => {
                let t: usize = value
                    .parse()
                    .map_err(|_| Error::Validation(format!("threads must be a positive integer, got '{value}'")))?;
                ensure!(t >= 1, Validation, "threads must be >= 1");
                self.threads = Some(t);
            }
            _ => {
                self.params.insert(key.to_string(), value.to_string());
            }
        }
        Ok(())
    }

    /// Reject unknown keys and report missing required ones.
    pub fn validate(&self) -> Result<()> {
        let exp = self.experiment;
        let unknown: Vec<&str> = self
            .params
            .keys()
            .map(String::as_str)
            .filter(|k| !exp.required_keys().contains(k) && !exp.optional_keys().contains(k))
            .collect();
        ensure!(
            unknown.is_empty(),
            Validation,
            "unknown key(s) for experiment '{}': {}",
            exp.name(),
            unknown.join(", ")
        );
        let missing: Vec<&str> = exp
            .required_keys()
            .iter()
            .copied()
            .filter(|k| !self.params.contains_key(*k))
            .collect();
        ensure!(
            missing.is_empty(),
            Validation,
            "missing key(s) for experiment '{}': {}",
            exp.name(),
            missing.join(", ")
        );
        Ok(())
    }

    /// Canonical text of everything that affects results (not `out` or
    /// `threads`).
    pub fn canonical(&self) -> String {
        let mut s = format!("experiment = {}\nseed = {}\n", self.experiment.name(), self.master_seed);
        for (k, v) in &self.params {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    /// Hex SHA-256 of [`canonical`](Self::canonical).
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }

    fn parse_value<T: std::str::FromStr>(&self, key: &str, v: &str, what: &str) -> Result<T> {
        v.parse()
            .map_err(|_| Error::Validation(format!("key '{key}': expected {what}, got '{v}'")))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.raw(key) {
            Some(v) => self.parse_value(key, v, "a nonnegative integer"),
            None => Ok(default),
        }
    }

    pub fn usize_req(&self, key: &str) -> Result<usize> {
        let v = self.raw(key).ok_or_else(|| Error::Validation(format!("missing key '{key}'")))?;
        self.parse_value(key, v, "a nonnegative integer")
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.raw(key) {
            Some(v) => self.parse_value(key, v, "a number"),
            None => Ok(default),
        }
    }

    pub fn f64_req(&self, key: &str) -> Result<f64> {
        let v = self.raw(key).ok_or_else(|| Error::Validation(format!("missing key '{key}'")))?;
        self.parse_value(key, v, "a number")
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.raw(key).unwrap_or(default)
    }

    /// Comma-separated list of numbers.
    pub fn list_or(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.raw(key) {
            Some(v) => v
                .split(',')
                .map(|x| self.parse_value(key, x.trim(), "a comma-separated list of numbers"))
                .collect(),
            None => Ok(default.to_vec()),
        }
    }

    /// Scalar law from `ensemble` (plus `tail_mass` or `atoms`).
    pub fn scalar_kind(&self, default: &str) -> Result<ScalarKind> {
        let name = self.str_or("ensemble", default);
        if name == "discrete" {
            let spec = self
                .raw("atoms")
                .ok_or_else(|| Error::Validation("ensemble 'discrete' needs key 'atoms' (value:prob, ...)".into()))?;
            let atoms = spec
                .split(',')
                .map(|pair| {
                    let (v, p) = pair
                        .split_once(':')
                        .ok_or_else(|| Error::Validation(format!("atom '{pair}' is not value:prob")))?;
                    Ok(Atom {
                        value: self.parse_value("atoms", v.trim(), "a number")?,
                        prob: self.parse_value("atoms", p.trim(), "a number")?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok(ScalarKind::Discrete(atoms));
        }
        ensure!(self.raw("atoms").is_none(), Validation, "key 'atoms' requires ensemble = discrete");
        let kind = ScalarKind::from_name(name)?;
        if let ScalarKind::HeavyTail4thMoment { .. } = kind {
            return Ok(ScalarKind::HeavyTail4thMoment {
                tail_mass: self.f64_or("tail_mass", DEFAULT_TAIL_MASS)?,
            });
        }
        ensure!(self.raw("tail_mass").is_none(), Validation, "key 'tail_mass' requires the heavy-tailed ensemble");
        Ok(kind)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_with_comments() {
        let cfg = ExperimentConfig::parse(
            "# square tails\nexperiment = tail_square\nseed = 7 # master\nn = 10\neps_grid = 0.1, 0.2\n\ntrials=50\n",
        )
        .unwrap();
        assert_eq!(cfg.experiment, Experiment::TailSquare);
        assert_eq!(cfg.master_seed, 7);
        assert_eq!(cfg.list_or("eps_grid", &[]).unwrap(), vec![0.1, 0.2]);
        assert_eq!(cfg.usize_or("trials", 1).unwrap(), 50);
    }

    #[test]
    fn errors_name_the_offender() {
        let err = ExperimentConfig::parse("experiment = tail_square\nn = 3\neps_grid = 0.1\ntrails = 5\n").unwrap_err();
        assert!(err.to_string().contains("trails"), "{err}");
        let err = ExperimentConfig::parse("experiment = edelman\nn = 3\n").unwrap_err();
        assert!(err.to_string().contains("eps_grid"), "{err}");
        assert!(ExperimentConfig::parse("experiment = nope\n").is_err());
        assert!(ExperimentConfig::parse("n = 3\n").is_err());
        assert!(ExperimentConfig::parse("experiment = sign_census\nn = 3\nn = 4\n").is_err());
        assert!(ExperimentConfig::parse("experiment = sign_census\nn 3\n").is_err());
    }

    #[test]
    fn hash_ignores_output_and_threads() {
        let mut a = ExperimentConfig::parse("experiment = sign_census\nn = 2\n").unwrap();
        let h = a.hash();
        a.set("threads", "3").unwrap();
        a.set("out", "/tmp/x.csv").unwrap();
        assert_eq!(a.hash(), h);
        a.set("seed", "1").unwrap();
        assert_ne!(a.hash(), h);
    }

    #[test]
    fn scalar_kinds() {
        let mut cfg = ExperimentConfig::new(Experiment::TailSquare, 0);
        cfg.set("ensemble", "discrete").unwrap();
        cfg.set("atoms", "-1:0.5, 1:0.5").unwrap();
        assert!(matches!(cfg.scalar_kind("gaussian").unwrap(), ScalarKind::Discrete(a) if a.len() == 2));
        let mut cfg = ExperimentConfig::new(Experiment::TailSquare, 0);
        cfg.set("ensemble", "heavy_tail").unwrap();
        cfg.set("tail_mass", "0.1").unwrap();
        assert_eq!(cfg.scalar_kind("gaussian").unwrap(), ScalarKind::HeavyTail4thMoment { tail_mass: 0.1 });
        cfg.set("ensemble", "gaussian").unwrap();
        assert!(cfg.scalar_kind("gaussian").is_err());
    }
}
