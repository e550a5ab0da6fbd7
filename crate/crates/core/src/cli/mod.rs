//! Command-line front end.

pub mod config;
pub mod output;
pub mod run;

use std::path::PathBuf;

use clap::Parser;

use config::{parse_config, Command, ConfigError, Overrides, RunConfig};
use output::Output;
use run::{EXIT_INVALID, EXIT_MISMATCH, EXIT_NUMERICAL, EXIT_OK, EXIT_PARSE};

#[derive(Debug, Parser)]
#[command(name = "fracdual", version, about = "Experiments for the dual fractional operator ∂_t^α + (-Δ)^s")]
pub struct Cli {
    /// What to run.
    #[arg(value_enum)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (default `out/<command>`).
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Compare fresh results with the files in the output directory instead
    /// of writing them.
    #[arg(long)]
    pub check: bool,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long = "R")]
    pub r: Option<f64>,
    #[arg(long = "lambda-max")]
    pub lambda_max: Option<f64>,
    #[arg(long)]
    pub l: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub nx: Option<usize>,
}

fn init_threads() {
    if let Some(n) = std::env::var("FRACDUAL_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Runs the program and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
        }
    };
    init_threads();
    let mut cfg = match &cli.config {
        Some(p) => match parse_config(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("{e}");
                return EXIT_PARSE;
            }
        },
        None => RunConfig::default(),
    };
    cfg.apply(&Overrides {
        alpha: cli.alpha,
        s: cli.s,
        r: cli.r,
        lambda_max: cli.lambda_max,
        l: cli.l,
        dt: cli.dt,
        nx: cli.nx,
        seed: cli.seed,
        output: cli.output.clone(),
    });
    let command = cli.command;
    if let Err(e) = cfg.validate(command) {
        eprintln!("{e}");
        return match e {
            ConfigError::Parse(_) => EXIT_PARSE,
            ConfigError::Invalid { .. } => EXIT_INVALID,
        };
    }
    let dir = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("out").join(command.name()));

    if command == Command::Report {
        return match run::summarize(&dir) {
            Ok((text, summary, ok)) => {
                print!("{text}");
                let mut out = Output::default();
                out.add("summary.md", "summary", text);
                out.json("summary.json", "summary", &summary);
                if let Err(e) = write_plain(&out, &dir) {
                    eprintln!("report: {e}");
                    return EXIT_NUMERICAL;
                }
                if ok {
                    EXIT_OK
                } else {
                    EXIT_MISMATCH
                }
            }
            Err(e) => {
                eprintln!("report: {e}");
                EXIT_PARSE
            }
        };
    }

    let mut out = Output::default();
    out.json("config.json", "config", &{
        let mut c = cfg.clone();
        c.command = Some(command);
        c
    });
    let result = run::execute(&cfg, command, &mut out);
    if cli.check {
        if let Err(e) = &result {
            eprintln!("{e}");
            return EXIT_NUMERICAL;
        }
        let diffs = out.check(&dir, cfg.check_tolerance);
        for d in &diffs {
            eprintln!("check: {d}");
        }
        println!("check: {} files compared, {} differ", out.paths().count(), diffs.len());
        return if diffs.is_empty() { EXIT_OK } else { EXIT_MISMATCH };
    }
    if let Err(e) = out.write(&dir, command.name(), result.is_ok()) {
        eprintln!("writing {}: {e}", dir.display());
        return EXIT_NUMERICAL;
    }
    if let Err(e) = result {
        eprintln!("{e}");
        return EXIT_NUMERICAL;
    }
    let mut code = EXIT_OK;
    for v in &out.verdicts {
        let ok = v.verdict == v.expected;
        println!("{:<12} {} (expected {})", run::verdict_name(v.verdict), v.name, run::verdict_name(v.expected));
        if !ok {
            code = EXIT_MISMATCH;
        }
    }
    println!("results in {}", dir.display());
    code
}

fn write_plain(out: &Output, dir: &std::path::Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    out.write_files(dir).map(|_| ())
}
