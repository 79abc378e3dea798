use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use drlab::cli::{cmd_run, cmd_slope, cmd_verify, format_slopes, RunFlags};
use drlab::policy::PolicyKind;

#[derive(Parser)]
#[command(name = "drlab", version, about = "Risk-sensitive demand-response pricing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo experiment and write traces, summaries and regret.
    Run(Common),
    /// Evaluate the exact bounds and the quantile concentration grid.
    Verify(Common),
    /// Fit log-log regret slopes from a regret table.
    Slope {
        /// Path to regret.csv.
        input: PathBuf,
        /// First period of the fit window (default T/2).
        #[arg(long)]
        from: Option<usize>,
        /// Last period of the fit window (default T).
        #[arg(long)]
        to: Option<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// Configuration file; the bundled case study when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    /// Comma-separated list of myopic, perturbed, oracle.
    #[arg(long, value_delimiter = ',')]
    policies: Option<Vec<PolicyKind>>,
    #[arg(long)]
    horizon: Option<usize>,
}

impl From<Common> for RunFlags {
    fn from(c: Common) -> Self {
        RunFlags {
            config: c.config,
            out: c.out,
            seed: c.seed,
            reps: c.reps,
            policies: c.policies,
            horizon: c.horizon,
        }
    }
}

fn run(cli: Cli) -> drlab::Result<ExitCode> {
    match cli.command {
        Command::Run(common) => {
            let cfg = RunFlags::from(common).resolve()?;
            let report = cmd_run(&cfg)?;
            for p in &report.summary.policies {
                println!(
                    "{:<10} reps {:>3}  regret(T) {:.6}  clamped {}",
                    p.kind.name(),
                    p.completed,
                    p.final_regret(),
                    p.clamped
                );
                for f in &p.failures {
                    eprintln!("replication {} of {} failed: {}", f.rep, p.kind, f.message);
                }
            }
            println!("wrote {} files to {}", report.files.len(), report.out_dir.display());
            Ok(if report.failures() > 0 { ExitCode::FAILURE } else { ExitCode::SUCCESS })
        }
        Command::Verify(common) => {
            let cfg = RunFlags::from(common).resolve()?;
            let report = cmd_verify(&cfg)?;
            for row in &report.rows {
                println!("{row}");
            }
            println!(
                "exact violations {}  dkw cells above bound {}  clamped periods {}",
                report.violations, report.dkw_failures, report.clamped
            );
            println!("wrote {}", report.report.display());
            if report.replication_failures > 0 {
                eprintln!("{} replications failed", report.replication_failures);
                return Ok(ExitCode::FAILURE);
            }
            Ok(if report.violations > 0 { ExitCode::FAILURE } else { ExitCode::SUCCESS })
        }
        Command::Slope { input, from, to } => {
            let fits = cmd_slope(&input, from, to)?;
            print!("{}", format_slopes(&fits));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("drlab: {e}");
            ExitCode::from(2)
        }
    }
}
