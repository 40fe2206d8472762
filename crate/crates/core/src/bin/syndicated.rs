use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use syndicated::envs::als;
use syndicated::harness::{self, io, Experiment, ExperimentConfig};
use syndicated::Error;

/// Overrides the output directory of `run` and `sweep`.
const OUTPUT_ENV: &str = "SYNDICATED_OUTPUT_DIR";

#[derive(Parser)]
#[command(
    name = "syndicated",
    version,
    about = "Online hyper-parameter tuning for contextual bandits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every repeat of a config; write per-repeat traces and a summary.
    Run {
        config: PathBuf,
        /// Run repeats one after another instead of on a thread pool.
        #[arg(long)]
        serial: bool,
    },
    /// Grid over fixed (alpha, lambda) values; one summary per cell.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        serial: bool,
    },
    /// Factorize a ratings file into user and item feature files.
    PrepMovielens {
        ratings: PathBuf,
        outdir: PathBuf,
        #[arg(long, default_value_t = 20)]
        d: usize,
        #[arg(long, default_value_t = 0.1)]
        reg: f64,
        #[arg(long, default_value_t = 30)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Aggregate the traces in a directory into summary.csv.
    Report { trace_dir: PathBuf },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } => Failure::Config(e.to_string()),
            e => Failure::Runtime(e.to_string()),
        }
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let cfg = harness::parse_config(&text)?;
    cfg.validate()?;
    Ok(cfg)
}

fn output_dir(cfg: &ExperimentConfig, config_path: &Path) -> PathBuf {
    if let Some(dir) = std::env::var_os(OUTPUT_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(dir);
    }
    cfg.output.clone().unwrap_or_else(|| {
        let stem = config_path
            .file_stem()
            .map_or("run".into(), |s| s.to_string_lossy().into_owned());
        PathBuf::from("results").join(stem)
    })
}

fn run(config: &Path, serial: bool) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    let out = output_dir(&cfg, config);
    let exp = Experiment::new(cfg)?;
    let traces = exp.run_all(!serial)?;
    io::write_traces(&traces, &out)?;
    let summary = harness::aggregate(&traces)?;
    io::write_summary(&summary, out.join("summary.csv"))?;
    io::write_selections(&summary, out.join("selections.csv"))?;
    println!(
        "{} repeats, final cumulative regret {} ± {} -> {}",
        summary.n_traces,
        io::fmt_g(summary.final_mean),
        io::fmt_g(summary.final_std),
        out.display()
    );
    Ok(())
}

fn sweep(config: &Path, serial: bool) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    let out = output_dir(&cfg, config);
    let cells = harness::sweep(&cfg, !serial)?;
    fs::create_dir_all(&out).map_err(Error::from)?;
    let mut table = String::from("alpha,lambda,final_mean,final_std\n");
    for c in &cells {
        let name = format!(
            "summary_alpha{}_lambda{}.csv",
            io::fmt_g(c.alpha),
            io::fmt_g(c.lambda)
        );
        io::write_summary(&c.summary, out.join(name))?;
        table += &format!(
            "{},{},{},{}\n",
            io::fmt_g(c.alpha),
            io::fmt_g(c.lambda),
            io::fmt_g(c.summary.final_mean),
            io::fmt_g(c.summary.final_std)
        );
    }
    fs::write(out.join("sweep.csv"), &table).map_err(Error::from)?;
    print!("{table}");
    Ok(())
}

fn prep(
    ratings: &Path,
    outdir: &Path,
    d: usize,
    reg: f64,
    iters: usize,
    seed: u64,
) -> Result<(), Failure> {
    let data = als::read_ratings(ratings)?;
    let f = als::als_factorize(&data, d, reg, iters, seed)?;
    fs::create_dir_all(outdir).map_err(Error::from)?;
    als::write_features(outdir.join("users.txt"), &f.users)?;
    als::write_features(outdir.join("items.txt"), &f.items)?;
    println!(
        "{} ratings, {} users, {} items, train rmse {}",
        data.len(),
        f.users.len(),
        f.items.len(),
        io::fmt_g(f.rmse(&data))
    );
    Ok(())
}

fn report(dir: &Path) -> Result<(), Failure> {
    let traces = io::read_traces(dir).map_err(|e| match e {
        Error::Io(e) => Failure::Runtime(format!("{}: {e}", dir.display())),
        e => e.into(),
    })?;
    let summary = harness::aggregate(&traces)?;
    io::write_summary(&summary, dir.join("summary.csv"))?;
    println!(
        "{} traces, final cumulative regret {} ± {}",
        summary.n_traces,
        io::fmt_g(summary.final_mean),
        io::fmt_g(summary.final_std)
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, serial } => run(config, *serial),
        Command::Sweep { config, serial } => sweep(config, *serial),
        Command::PrepMovielens {
            ratings,
            outdir,
            d,
            reg,
            iters,
            seed,
        } => prep(ratings, outdir, *d, *reg, *iters, *seed),
        Command::Report { trace_dir } => report(trace_dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
