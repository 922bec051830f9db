use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rayleigh_cli::{
    analyze_tables, cmd_analyze, cmd_eval, cmd_roots, cmd_verify, eval_csv, json_text, load_config,
    roots_csv, write_artifact, CliError,
};

#[derive(Parser)]
#[command(name = "rayres", version, about = "Rayleigh-wave eigenvalues and resonances")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Tolerance override, `KEY=VALUE`; may be repeated.
    #[arg(long = "tol-override", value_name = "K=V")]
    tol_override: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Quasi-momenta, sheet determinants and F at the configured points.
    Eval(Common),
    /// Runs the invariant suites; exits 1 if any check fails.
    Verify(Common),
    /// Zeros of the configured target in the configured region.
    Roots(Common),
    /// Growth fits, Cartwright indices, zero counts, forbidden domain.
    Analyze(Common),
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let (Command::Eval(common)
    | Command::Verify(common)
    | Command::Roots(common)
    | Command::Analyze(common)) = &cli.command;
    let cfg = load_config(&common.config, &common.tol_override)?;
    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.out));
    let written = match &cli.command {
        Command::Eval(_) => {
            let rows = cmd_eval(&cfg)?;
            vec![(write_artifact(&dir, "eval.csv", &eval_csv(&cfg, &rows)?)?, true)]
        }
        Command::Verify(_) => {
            let report = cmd_verify(&cfg);
            for c in report.failures() {
                eprintln!("FAIL {}::{} measured {:e} tolerance {:e} {}", c.suite, c.name, c.measured, c.tolerance, c.note);
            }
            vec![(write_artifact(&dir, "verify.json", &json_text(&cfg, &report)?)?, report.pass)]
        }
        Command::Roots(_) => {
            let records = cmd_roots(&cfg)?;
            vec![(write_artifact(&dir, "roots.csv", &roots_csv(&cfg, &records)?)?, true)]
        }
        Command::Analyze(_) => {
            let report = cmd_analyze(&cfg)?;
            let (samples, counts) = analyze_tables(&cfg, &report)?;
            vec![
                (write_artifact(&dir, "analyze.json", &json_text(&cfg, &report)?)?, report.pass),
                (write_artifact(&dir, "growth_samples.csv", &samples)?, true),
                (write_artifact(&dir, "counts.csv", &counts)?, true),
            ]
        }
    };
    for (path, _) in &written {
        println!("{}", path.display());
    }
    Ok(written.iter().all(|(_, pass)| *pass))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
