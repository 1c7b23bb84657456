use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use acflow::cli::{catalog, run_converge, run_verify, RunConfig, RunReport};

/// Residual certification for exact Allen-Cahn, Eikonal and Euler/Navier-Stokes solutions.
#[derive(Parser)]
#[command(name = "acflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured checks and write a JSON report.
    Verify(RunArgs),
    /// Measure residuals over the refinement levels and fit the observed order.
    Converge(RunArgs),
    /// Print the catalog of targets and their checks.
    List {
        /// Print the catalog as JSON.
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration.
    config: PathBuf,
    /// Report path; overrides the config's `output`. Defaults to stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Tolerance override, `check=value`; repeatable.
    #[arg(long = "tol", value_name = "CHECK=VALUE")]
    tol: Vec<String>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the residual table as CSV.
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
}

fn load(args: &RunArgs) -> acflow::Result<RunConfig> {
    let mut cfg = RunConfig::load(&args.config)?;
    cfg.apply_tol_overrides(&args.tol)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.output {
        cfg.output = Some(out.clone());
    }
    Ok(cfg)
}

fn emit(report: &RunReport, csv: Option<&PathBuf>) -> acflow::Result<()> {
    let text = report.to_json()?;
    match &report.config.output {
        Some(path) => std::fs::write(path, text + "\n")?,
        None => writeln!(io::stdout(), "{text}")?,
    }
    if let Some(path) = csv {
        report.write_csv(File::create(path)?)?;
    }
    for c in &report.checks {
        let status = if c.pass { "pass" } else { "FAIL" };
        match &c.error {
            Some(e) => eprintln!("{status}  {:<16} error: {e}", c.name),
            None => eprintln!("{status}  {:<16} {:.3e} (tol {:.1e})", c.name, c.value, c.tol),
        }
    }
    for e in &report.convergence {
        let status = if e.pass { "pass" } else { "FAIL" };
        let order = e
            .outcome
            .slope()
            .map(|s| format!("{s:.3}"))
            .unwrap_or_else(|| "saturated".into());
        eprintln!("{status}  {:<16} order {order}", e.check);
    }
    Ok(())
}

fn list(json: bool) -> acflow::Result<()> {
    let mut out = io::stdout().lock();
    if json {
        writeln!(out, "{}", serde_json::to_string_pretty(catalog())?)?;
        return Ok(());
    }
    for item in catalog() {
        writeln!(
            out,
            "{}\n    {}\n    checks: {}",
            item.id,
            item.description,
            item.checks.join(", ")
        )?;
        writeln!(out, "    params: {}", item.params)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::List { json } => match list(*json) {
            Err(acflow::Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => Ok(true),
            r => r.map(|_| true),
        },
        Command::Verify(args) => load(args).and_then(|c| run_verify(&c)).and_then(|r| {
            emit(&r, args.csv.as_ref())?;
            Ok(r.pass)
        }),
        Command::Converge(args) => load(args).and_then(|c| run_converge(&c)).and_then(|r| {
            emit(&r, args.csv.as_ref())?;
            Ok(r.pass)
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
