//! `promot`: run experiments, sweeps, attacks, landscape exports and the
//! verification suites.

mod commands;
mod failure;
mod load;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};

use promot::presets::{MethodId, Task};
use promot::verify::{Effort, Suite};
use promot::{Kernel, Transform};

use crate::failure::ConfigError;

#[derive(Parser)]
#[command(name = "promot", version, about = "Zeroth-order global optimization by probabilistic smoothing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Override the config's first seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args, Clone)]
struct OutDir {
    /// Output root; overrides the config's `out_dir`.
    #[arg(long, env = "PROMOT_OUT_DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment file over its seeds.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        out: OutDir,
        /// Leave the `mu_i` columns out of trajectory CSVs.
        #[arg(long)]
        omit_mu: bool,
    },
    /// Evaluate the sweep grid of an experiment file.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        out: OutDir,
    },
    /// Attack the synthetic classifier, from a config or a shipped preset.
    Attack {
        /// Attack experiment file; defaults to the preset of `--task`.
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = AttackTask::Cifar)]
        task: AttackTask,
        #[arg(long, default_value = "promot_loo")]
        method: String,
        /// Number of clean inputs.
        #[arg(long)]
        inputs: Option<usize>,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        out: OutDir,
    },
    /// Export smoothed curves of a one-dimensional objective as CSV.
    Landscape {
        /// landscape, ackley or griewank.
        #[arg(long, default_value = "landscape")]
        objective: String,
        #[arg(long, default_value = "logistic")]
        kernel: String,
        #[arg(long, default_value = "exponential")]
        transform: String,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        /// Comma-separated amplification values.
        #[arg(long, value_delimiter = ',', default_value = "10")]
        theta: Vec<f64>,
        /// Comma-separated smoothing scales.
        #[arg(long, value_delimiter = ',', default_value = "2,2.5,3,3.5")]
        sigma: Vec<f64>,
        #[arg(long, default_value_t = -30.0, allow_negative_numbers = true)]
        lo: f64,
        #[arg(long, default_value_t = 30.0, allow_negative_numbers = true)]
        hi: f64,
        #[arg(long, default_value_t = 241)]
        points: usize,
        /// CSV destination; stdout if absent.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Run the numeric verification suites.
    Verify {
        /// Suites to run; all when absent.
        #[arg(long, value_enum)]
        suite: Vec<SuiteArg>,
        #[arg(long, value_enum, default_value_t = EffortArg::Full)]
        effort: EffortArg,
        #[command(flatten)]
        common: Common,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Write the shipped experiment files into a directory.
    Presets {
        #[arg(default_value = "presets")]
        dir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AttackTask {
    Cifar,
    Vitaldb,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Constants,
    Transforms,
    Unbiasedness,
    Loo,
    Bounds,
    Localization,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Constants => Suite::Constants,
            SuiteArg::Transforms => Suite::Transforms,
            SuiteArg::Unbiasedness => Suite::Unbiasedness,
            SuiteArg::Loo => Suite::Loo,
            SuiteArg::Bounds => Suite::Bounds,
            SuiteArg::Localization => Suite::Localization,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EffortArg {
    Quick,
    Full,
}

fn out_root(flag: &OutDir, cfg: &promot::config::ExperimentConfig) -> PathBuf {
    flag.out
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("runs"))
}

fn load(path: &std::path::Path, common: &Common) -> Result<promot::config::ExperimentConfig> {
    let mut cfg = load::load_config(path)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            common,
            out,
            omit_mu,
        } => {
            let cfg = load(&config, &common)?;
            let root = out_root(&out, &cfg);
            let dir = promot::par::with_jobs(common.jobs, || commands::run(&cfg, &root, !omit_mu))?;
            eprintln!("wrote {}", dir.display());
        }
        Command::Sweep { config, common, out } => {
            let cfg = load(&config, &common)?;
            let root = out_root(&out, &cfg);
            let dir = promot::par::with_jobs(common.jobs, || commands::run_sweep(&cfg, &root))?;
            eprintln!("wrote {}", dir.display());
        }
        Command::Attack {
            config,
            task,
            method,
            inputs,
            common,
            out,
        } => {
            let mut cfg = match &config {
                Some(p) => load(p, &common)?,
                None => {
                    let task = match task {
                        AttackTask::Cifar => Task::Cifar,
                        AttackTask::Vitaldb => Task::Vitaldb,
                    };
                    let method = MethodId::ALL
                        .into_iter()
                        .find(|m| m.name() == method)
                        .ok_or_else(|| ConfigError::new(format!("unknown method `{method}`")))?;
                    let mut c = commands::attack_preset(task, method)?;
                    if let Some(s) = common.seed {
                        c.seed = s;
                    }
                    c
                }
            };
            if let Some(n) = inputs {
                match &mut cfg.objective {
                    promot::config::ObjectiveConfig::Attack { inputs, .. } => *inputs = n,
                    _ => return Err(ConfigError::new("`--inputs` needs an attack objective").into()),
                }
                cfg.validate().map_err(ConfigError::from)?;
            }
            let root = out_root(&out, &cfg);
            let dir = promot::par::with_jobs(common.jobs, || commands::attack(&cfg, &root))?;
            eprintln!("wrote {}", dir.display());
        }
        Command::Landscape {
            objective,
            kernel,
            transform,
            c,
            alpha,
            beta,
            theta,
            sigma,
            lo,
            hi,
            points,
            output,
            jobs,
        } => {
            let kernel: Kernel = kernel
                .parse()
                .map_err(|e: promot::Error| ConfigError::from(promot::Error::field("kernel", e.to_string())))?;
            let transform = Transform::from_parts(&transform, c, alpha, beta)
                .map_err(|m| ConfigError::from(promot::Error::field("transform", m)))?;
            let args = commands::LandscapeArgs {
                objective,
                kernel,
                transform,
                thetas: theta,
                sigmas: sigma,
                lo,
                hi,
                points,
            };
            let csv = promot::par::with_jobs(jobs, || commands::landscape(&args))?;
            match output {
                Some(p) => {
                    promot::harness::write_atomic(&p, &csv)?;
                    eprintln!("wrote {}", p.display());
                }
                None => {
                    use std::io::Write;
                    std::io::stdout().write_all(&csv)?;
                }
            }
        }
        Command::Verify {
            suite,
            effort,
            common,
            json,
        } => {
            let suites: Vec<Suite> = if suite.is_empty() {
                Suite::ALL.to_vec()
            } else {
                suite.into_iter().map(Suite::from).collect()
            };
            let effort = match effort {
                EffortArg::Quick => Effort::Quick,
                EffortArg::Full => Effort::Full,
            };
            let seed = common.seed.unwrap_or(0);
            promot::par::with_jobs(common.jobs, || commands::verify(&suites, effort, seed, json.as_deref()))?;
        }
        Command::Presets { dir } => {
            let n = commands::write_presets(&dir)?;
            eprintln!("wrote {n} presets to {}", dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, json) = failure::classify(&e);
            eprintln!("error: {e:#}");
            eprintln!("{json}");
            ExitCode::from(code as u8)
        }
    }
}
