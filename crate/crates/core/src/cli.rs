//! `qdp` command-line front end.
//!
//! Exit codes: 0 on success, 2 on usage or config errors, 1 on runtime
//! failures.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::accountant::{self, DpPoint, MechanismSpec};
use crate::error::{Error, Result};
use crate::flsim::{self, artifact, FlRunConfig};
use crate::kv::KvMap;
use crate::lira::{self, AttackConfig};
use crate::pmf::NoiseSpec;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(
    name = "qdp",
    version,
    about = "Privacy budgets for quantized Gaussian noise in federated learning"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BudgetOrder {
    #[value(name = "1")]
    One,
    #[value(name = "inf")]
    Inf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the order-1 or order-infinity budget of one mechanism.
    Budget {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        cq: f64,
        #[arg(long)]
        sigma: f64,
        #[arg(long, value_enum)]
        alpha: BudgetOrder,
    },
    /// Write the budget-versus-levels table as CSV.
    Sweep {
        /// Level counts, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<usize>,
        #[arg(long)]
        cq: f64,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Smallest Gaussian noise meeting an (epsilon, delta) target after T rounds.
    Calibrate {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        rounds: usize,
        #[arg(long, default_value_t = 1.0)]
        sensitivity: f64,
    },
    /// Run federated training and write a run artifact.
    FlTrain {
        config: PathBuf,
        #[arg(long, env = "QDP_SEED")]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the membership-inference audit and write report.json.
    Mia {
        config: PathBuf,
        #[arg(long, env = "QDP_SEED")]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Written into every output directory.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: PathBuf,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub tool_version: String,
}

impl RunManifest {
    fn write(&self) -> Result<()> {
        let path = self.output_dir.join("manifest.json");
        artifact::write_file(&path, &(serde_json::to_string_pretty(self)? + "\n"))
    }
}

/// Formats `v` with 12 significant digits.
pub fn format_significant(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return v.to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:.11e}")
    }
}

/// CSV with header `k,eps1,eps_inf,eps_gauss_alpha1`, sorted by k.
pub fn sweep_csv(levels: &[usize], noise: NoiseSpec, clip: f64) -> Result<String> {
    let mut ks = levels.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let rows = accountant::budget_sweep(&ks, noise, clip)?;
    let mut out = String::from("k,eps1,eps_inf,eps_gauss_alpha1\n");
    for r in rows {
        writeln!(out, "{},{},{},{}", r.levels, r.eps_one, r.eps_inf, r.eps_gauss).unwrap();
    }
    Ok(out)
}

enum Failure {
    Usage(Error),
    Runtime(Error),
}

fn read_config(path: &Path) -> std::result::Result<KvMap, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(Error::io(path, e)))?;
    KvMap::parse(&text).map_err(Failure::Usage)
}

fn runtime<T>(r: Result<T>) -> std::result::Result<T, Failure> {
    r.map_err(Failure::Runtime)
}

fn usage<T>(r: Result<T>) -> std::result::Result<T, Failure> {
    r.map_err(Failure::Usage)
}

fn execute(cmd: Command) -> std::result::Result<(), Failure> {
    match cmd {
        Command::Budget { k, cq, sigma, alpha } => {
            let mech = usage(MechanismSpec::from_parts(k, cq, sigma))?;
            let eps = runtime(match alpha {
                BudgetOrder::One => accountant::epsilon_one(&mech),
                BudgetOrder::Inf => accountant::epsilon_infinity(&mech),
            })?;
            println!("{}", format_significant(eps));
        }
        Command::Sweep { k, cq, sigma, out } => {
            if let Some(bad) = k.iter().find(|&&k| k < 2) {
                return Err(Failure::Usage(Error::param(
                    "k",
                    format!("level counts must be >= 2, got {bad}"),
                )));
            }
            let noise = usage(NoiseSpec::new(sigma))?;
            let csv = usage(sweep_csv(&k, noise, cq))?;
            runtime(artifact::write_file(&out, &csv))?;
        }
        Command::Calibrate {
            epsilon,
            delta,
            rounds,
            sensitivity,
        } => {
            let target = usage(DpPoint::new(epsilon, delta))?;
            let grid = accountant::default_alpha_grid();
            let sigma = runtime(accountant::calibrate_sigma(target, rounds, sensitivity, &grid))?;
            let (eps, alpha) = runtime(accountant::gaussian_dp_epsilon(
                sigma,
                rounds,
                sensitivity,
                delta,
                &grid,
            ))?;
            println!("sigma = {}", format_significant(sigma));
            println!("achieved_epsilon = {}", format_significant(eps));
            println!("best_alpha = {alpha}");
            println!("assumptions = full participation, no subsampling amplification, alpha grid 1.25..256");
        }
        Command::FlTrain { config, seed, out } => {
            let mut kv = read_config(&config)?;
            let mut cfg = usage(FlRunConfig::from_kv(&mut kv))?;
            usage(kv.finish())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let run = runtime(flsim::train(&cfg))?;
            for d in &run.diagnostics {
                eprintln!("{d}");
            }
            runtime(artifact::write_run(&out, &run))?;
            runtime(
                RunManifest {
                    command: "fl-train".into(),
                    config_path: config,
                    seed: cfg.seed,
                    output_dir: out,
                    tool_version: TOOL_VERSION.into(),
                }
                .write(),
            )?;
            println!("final_test_accuracy = {}", run.final_accuracy());
        }
        Command::Mia { config, seed, out } => {
            let mut kv = read_config(&config)?;
            let mut fl = usage(FlRunConfig::from_kv(&mut kv))?;
            let attack = usage(AttackConfig::from_kv(&mut kv))?;
            usage(kv.finish())?;
            if let Some(s) = seed {
                fl.seed = s;
            }
            let outcomes = runtime(lira::audit_repeated(&fl, &attack))?;
            let json = runtime(lira::report_json(&fl, &attack, &outcomes))?;
            runtime(fs::create_dir_all(&out).map_err(|e| Error::io(&out, e)))?;
            runtime(artifact::write_file(&out.join("report.json"), &json))?;
            runtime(
                RunManifest {
                    command: "mia".into(),
                    config_path: config,
                    seed: fl.seed,
                    output_dir: out,
                    tool_version: TOOL_VERSION.into(),
                }
                .write(),
            )?;
            println!("mia_accuracy = {}", lira::mean_accuracy(&outcomes));
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e}");
            eprintln!("run `qdp --help` for usage");
            2
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}
