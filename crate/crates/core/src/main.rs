use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use infogain::harness::{compare_modes, run_episode, sweep, verify_bounds, write_sweep, EpisodeLog, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "infogain",
    version,
    about = "Learn the gap between expected and realized information gain"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode per seed and write per-step logs.
    Run(ConfigArgs),
    /// Run every (T, seed) pair and fit the regret growth rate.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// Episode lengths, comma separated.
        #[arg(long, default_value = "64,256,1024,4096")]
        lengths: String,
    },
    /// Compare corrected, raw and random planners on the same seeds.
    Compare(ConfigArgs),
    /// Check the regret bounds; exits nonzero if any check fails.
    VerifyBounds(ConfigArgs),
}

/// Every field can come from a config file and be overridden by a flag.
#[derive(Args)]
struct ConfigArgs {
    /// `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario name (rooms, flicker, mixed, tiny) or `file:<path>`.
    #[arg(long)]
    world: Option<String>,
    /// Executed observations T.
    #[arg(long)]
    steps: Option<String>,
    /// Burst length Δt.
    #[arg(long)]
    horizon: Option<String>,
    #[arg(long)]
    bins: Option<String>,
    /// Gain cap β.
    #[arg(long)]
    gain_cap: Option<String>,
    /// Divisor c in the cell update.
    #[arg(long)]
    coefficient: Option<String>,
    /// Candidate paths N per burst.
    #[arg(long)]
    candidates: Option<String>,
    /// Exploration level τ, or `auto`.
    #[arg(long)]
    tau: Option<String>,
    /// none, gaussian or impulse.
    #[arg(long)]
    noise: Option<String>,
    /// full or bandit.
    #[arg(long)]
    feedback: Option<String>,
    /// corrected, raw or random.
    #[arg(long)]
    estimator: Option<String>,
    #[arg(long)]
    execute_exploration: Option<String>,
    #[arg(long)]
    ray_count: Option<String>,
    #[arg(long)]
    max_range: Option<String>,
    #[arg(long)]
    l_hit: Option<String>,
    #[arg(long)]
    l_miss: Option<String>,
    /// Seeds such as `0..20` or `1,5,9`.
    #[arg(long)]
    seeds: Option<String>,
    /// Output directory.
    #[arg(long)]
    output: Option<String>,
}

impl ConfigArgs {
    fn build(&self) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path).with_context(|| format!("reading {}", path.display()))?,
            None => ExperimentConfig::default(),
        };
        let overrides = [
            ("world", &self.world),
            ("steps", &self.steps),
            ("horizon", &self.horizon),
            ("bins", &self.bins),
            ("gain_cap", &self.gain_cap),
            ("coefficient", &self.coefficient),
            ("candidates", &self.candidates),
            ("tau", &self.tau),
            ("noise", &self.noise),
            ("feedback", &self.feedback),
            ("estimator", &self.estimator),
            ("execute_exploration", &self.execute_exploration),
            ("ray_count", &self.ray_count),
            ("max_range", &self.max_range),
            ("l_hit", &self.l_hit),
            ("l_miss", &self.l_miss),
            ("seeds", &self.seeds),
            ("output", &self.output),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                config
                    .set(key, v)
                    .with_context(|| format!("--{}", key.replace('_', "-")))?;
            }
        }
        config.validate()?;
        Ok(config)
    }
}

fn prepare_output(config: &ExperimentConfig) -> Result<&Path> {
    let dir = config.output.as_path();
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    std::fs::write(dir.join("config.txt"), config.to_text())?;
    Ok(dir)
}

fn episode_summary(log: &EpisodeLog) -> Result<String> {
    let regret = log.regret()?;
    let mut out = String::new();
    writeln!(
        out,
        "seed {:>4}: steps {}  tau {:.4}  gain {:.4}  err corrected {:.5}  err raw {:.5}  rho {:.4}  rho' {:.4}  lambda {:.4}",
        log.seed,
        log.steps(),
        log.tau,
        log.cumulative_gain(),
        log.mean_corrected_error(infogain::harness::BURN_IN),
        log.mean_raw_error(infogain::harness::BURN_IN),
        regret.rho,
        regret.rho_prime,
        regret.lambda
    )?;
    if let Ok(p) = log.perception() {
        writeln!(
            out,
            "           varrho {:.4}  bound {:.4}  gamma {:.4}  holds {}",
            p.varrho,
            p.bound,
            p.gamma,
            p.holds()
        )?;
    }
    Ok(out)
}

fn run(config: &ExperimentConfig) -> Result<()> {
    let dir = prepare_output(config)?;
    let mut summary = String::new();
    for &seed in &config.seeds {
        let log = match run_episode(config, seed) {
            Ok(log) => log,
            Err(failure) => {
                if let Some(partial) = &failure.partial {
                    std::fs::write(dir.join(format!("records_{seed}.csv")), partial.records_csv())?;
                }
                return Err(anyhow::Error::new(failure).context(format!("seed {seed}")));
            }
        };
        std::fs::write(dir.join(format!("records_{seed}.csv")), log.records_csv())?;
        std::fs::write(
            dir.join(format!("belief_{seed}.csv")),
            log.final_belief.to_probability_csv(),
        )?;
        std::fs::write(dir.join(format!("improvement_{seed}.txt")), log.function.to_text())?;
        let line = episode_summary(&log)?;
        print!("{line}");
        summary.push_str(&line);
    }
    std::fs::write(dir.join("summary.txt"), summary)?;
    Ok(())
}

fn parse_lengths(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().with_context(|| format!("bad episode length {s:?}")))
        .collect()
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run(args) => run(&args.build()?)?,
        Command::Sweep { config, lengths } => {
            let config = config.build()?;
            let dir = prepare_output(&config)?;
            let result = sweep(&config, &parse_lengths(&lengths)?, &config.seeds)?;
            let csv = write_sweep(dir, &result)?;
            print!("{}", result.report());
            println!("wrote {}", csv.display());
        }
        Command::Compare(args) => {
            let config = args.build()?;
            let dir = prepare_output(&config)?;
            let report = compare_modes(&config, &config.seeds)?.report();
            std::fs::write(dir.join("compare.txt"), &report)?;
            print!("{report}");
        }
        Command::VerifyBounds(args) => {
            let config = args.build()?;
            let report = verify_bounds(&config)?;
            print!("{}", report.report());
            if !report.passed() {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
