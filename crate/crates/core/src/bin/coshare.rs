use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use coshare::problem::{run_problem, RunOptions};
use coshare::report::Format;
use coshare::reproduce::{reproduce, CASES};

/// Constrained comonotonic risk sharing: solve a problem file or reproduce a
/// canonical case.
#[derive(Parser)]
#[command(name = "coshare", version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    /// JSON problem file.
    task_file: Option<PathBuf>,

    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Output format.
    #[arg(long, global = true, default_value = "json", value_parser = parse_format)]
    format: Format,
    /// Seed for the solidity falsifier.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Feasibility tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a canonical case and check its pinned numbers.
    Reproduce {
        /// One of ex-3.1, ex-4.2, ex-4.3, fig-6.3, sec-6.4.
        case: String,
        /// Directory for the CSV tables and the JSON report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: coshare::Error| e.to_string())
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("COSHARE_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().with_context(|| format!("COSHARE_THREADS={v:?} is not a count"))?;
    if n == 0 {
        bail!("COSHARE_THREADS must be positive");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

/// Runs the command; `Ok(false)` means a reproduction mismatch.
fn run(cli: Cli) -> anyhow::Result<bool> {
    configure_threads()?;
    let opts = RunOptions { seed: cli.common.seed, tol: cli.common.tol };
    if let Some(tol) = opts.tol {
        if !(tol >= 0.0 && tol.is_finite()) {
            bail!("--tol must be a nonnegative number");
        }
    }
    let (report, out) = match cli.command {
        Some(Command::Reproduce { case, out }) => {
            if !CASES.contains(&case.as_str()) {
                bail!("unknown case {case:?}; known cases: {}", CASES.join(", "));
            }
            (reproduce(&case, opts)?, out.map(|d| (d, case)))
        }
        None => {
            let Some(path) = cli.task_file else {
                bail!("expected a problem file or `reproduce <case-id>` (see --help)");
            };
            let r = run_problem(&path, opts).with_context(|| format!("running {}", path.display()))?;
            (r, None)
        }
    };
    let text = report.render(cli.common.format)?;
    if let Some((dir, case)) = out {
        report
            .write_artifacts(&dir, &case)
            .with_context(|| format!("writing artifacts to {}", dir.display()))?;
    }
    print!("{text}");
    if !report.all_checks_pass() {
        eprintln!("reproduction mismatch:\n{}", report.mismatch_diff());
        return Ok(false);
    }
    Ok(true)
}

fn main() -> ExitCode {
    // clap's own usage-error code (2) would read as "infeasible"
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.chain().find_map(|c| c.downcast_ref::<coshare::Error>()).map_or(1, |e| e.exit_code());
            ExitCode::from(code as u8)
        }
    }
}
