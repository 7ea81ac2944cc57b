use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sqz_core::io::{load_config, run_batch, RunConfig};
use sqz_core::noise::WienerPath;
use sqz_core::oracle::{equivalence_check, MAX_ORACLE_ATOMS};
use sqz_core::{derive_params, Error, PhysicalParams};

const ORACLE_TOL: f64 = 1e-8;

#[derive(Parser)]
#[command(
    name = "sqz",
    version,
    about = "Conditional spin squeezing under continuous measurement"
)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the trajectories described by a config file.
    Run {
        config: PathBuf,
        /// Override `run.workers`.
        #[arg(long)]
        workers: Option<usize>,
        /// Override `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Like `run`, but the config must define a sweep.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the collective solver with the full-space oracle.
    OracleCheck { config: PathBuf },
    /// Write a file of standard-normal draws.
    GenNoise {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Config(Error),
    AllFailed,
    Oracle,
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::AllFailed => 2,
            Failure::Oracle => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Config(e)
    }
}

fn load(config: &Path, workers: Option<usize>, out: Option<PathBuf>) -> Result<RunConfig, Failure> {
    let mut cfg = load_config(config)?;
    if let Some(w) = workers {
        cfg.workers = w;
    }
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    Ok(cfg)
}

fn batch(cfg: &RunConfig) -> Result<(), Failure> {
    let summary = run_batch(cfg)?;
    let m = &summary.manifest;
    println!(
        "{} trajectories, {} failed, output in {}",
        m.jobs.len(),
        m.failures,
        cfg.output_dir.display()
    );
    for j in m.jobs.iter().filter(|j| !j.ok) {
        eprintln!("{}: {}", j.dir, j.error.as_deref().unwrap_or(""));
    }
    if summary.all_failed() {
        return Err(Failure::AllFailed);
    }
    Ok(())
}

fn oracle_check(cfg: &RunConfig) -> Result<(), Failure> {
    let sizes: Vec<usize> = if cfg.physical.n_atoms <= MAX_ORACLE_ATOMS {
        vec![cfg.physical.n_atoms]
    } else {
        log::warn!(
            "N = {} exceeds the oracle limit of {MAX_ORACLE_ATOMS}; checking N = 2 and 3",
            cfg.physical.n_atoms
        );
        vec![2, 3]
    };
    let noise = match (cfg.noise_files.first(), cfg.seeds.first()) {
        (Some(f), _) => WienerPath::read_file(f)?,
        (None, Some(&s)) => WienerPath::seeded(s, cfg.step.n_steps()),
        (None, None) => unreachable!("config guarantees a noise source"),
    };
    let mut ok = true;
    for n in sizes {
        let p = PhysicalParams {
            n_atoms: n,
            ..cfg.physical.clone()
        };
        let d = derive_params(&p)?;
        let rep = equivalence_check(&d, &cfg.step, p.theta, p.phi, &noise)?;
        let pass = rep.passed(ORACLE_TOL);
        println!(
            "N={} steps={} max_element_diff={:.3e} max_observable_diff={:.3e} permutation_residual={:.3e} {}",
            rep.n_atoms,
            rep.steps,
            rep.max_element_diff,
            rep.max_observable_diff,
            rep.max_permutation_residual,
            if pass { "PASS" } else { "FAIL" }
        );
        ok &= pass;
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Oracle)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.cmd {
        Command::Run {
            config,
            workers,
            out,
        } => load(&config, workers, out).and_then(|c| batch(&c)),
        Command::Sweep {
            config,
            workers,
            out,
        } => load(&config, workers, out).and_then(|c| {
            if c.sweep.is_none() {
                return Err(Failure::Config(Error::Config {
                    key: "sweep.parameter".into(),
                    msg: "the sweep command needs a sweep section".into(),
                }));
            }
            batch(&c)
        }),
        Command::OracleCheck { config } => load(&config, None, None).and_then(|c| oracle_check(&c)),
        Command::GenNoise { seed, count, out } => WienerPath::seeded(seed, count)
            .write_file(&out)
            .map_err(Failure::from),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(e) => eprintln!("error: {e}"),
                Failure::AllFailed => eprintln!("error: every trajectory failed"),
                Failure::Oracle => eprintln!("error: collective solver disagrees with the oracle"),
            }
            ExitCode::from(f.code())
        }
    }
}
