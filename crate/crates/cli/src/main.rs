use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rmtlab::harness::{self, Experiment, ExperimentConfig};

/// Random matrix laboratory: run one experiment and write its CSV.
#[derive(Parser, Debug)]
#[command(name = "rmtlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: Global,
}

#[derive(Args, Debug)]
struct Global {
    /// Config file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output CSV path; a `.meta` sidecar is written next to it. Without it
    /// the CSV goes to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Trial count (overrides the config).
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Extra parameter, repeatable: `--param n=10`.
    #[arg(long = "param", value_name = "KEY=VALUE", global = true)]
    params: Vec<String>,
    /// No summary on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
#[command(rename_all = "snake_case")]
enum Command {
    /// P(s_n(A) <= eps/sqrt(n)) for square ensembles.
    TailSquare,
    /// P(s_n(A) <= c1 sqrt(N)) for tall ensembles.
    TailRectangular,
    /// Exact singularity count of sign matrices.
    SignCensus,
    /// Gaussian square tail against its limiting law.
    Edelman,
    /// Concentration function of weighted sums.
    Levy,
    /// Essential LCD of random normals.
    Lcd,
    /// Empirical Khinchin constants.
    Khinchin,
    /// Sections of the octahedron.
    Kashin,
    /// Tails of s_n(D + U) for Haar U.
    Perturb,
    /// Sphere net construction and covering audit.
    NetAudit,
}

impl Command {
    fn experiment(self) -> Experiment {
        match self {
            Command::TailSquare => Experiment::TailSquare,
            Command::TailRectangular => Experiment::TailRectangular,
            Command::SignCensus => Experiment::SignCensus,
            Command::Edelman => Experiment::Edelman,
            Command::Levy => Experiment::Levy,
            Command::Lcd => Experiment::Lcd,
            Command::Khinchin => Experiment::Khinchin,
            Command::Kashin => Experiment::Kashin,
            Command::Perturb => Experiment::Perturb,
            Command::NetAudit => Experiment::NetAudit,
        }
    }
}

fn build_config(cli: &Cli) -> rmtlab::Result<ExperimentConfig> {
    let exp = cli.command.experiment();
    let g = &cli.global;
    let mut cfg = match &g.config {
        Some(path) => {
            let cfg = ExperimentConfig::parse(&std::fs::read_to_string(path)?)?;
            if cfg.experiment != exp {
                return Err(rmtlab::Error::Validation(format!(
                    "config is for '{}' but the subcommand is '{}'",
                    cfg.experiment.name(),
                    exp.name()
                )));
            }
            cfg
        }
        None => ExperimentConfig::new(exp, 0),
    };
    for p in &g.params {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| rmtlab::Error::Validation(format!("--param expects KEY=VALUE, got '{p}'")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(s) = g.seed {
        cfg.master_seed = s;
    }
    if let Some(t) = g.trials {
        cfg.set("trials", &t.to_string())?;
    }
    if let Some(t) = g.threads {
        cfg.set("threads", &t.to_string())?;
    }
    if let Some(o) = &g.out {
        cfg.output = Some(o.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> rmtlab::Result<()> {
    let cfg = build_config(cli)?;
    let out = if cfg.output.is_some() {
        harness::run_to_files(&cfg)?
    } else {
        let out = harness::run(&cfg)?;
        std::io::stdout().write_all(out.csv.as_bytes())?;
        out
    };
    if !cli.global.quiet {
        eprintln!("{}: {} rows; {}", cfg.experiment.name(), out.rows.len(), out.meta.trim_end());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rmtlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
