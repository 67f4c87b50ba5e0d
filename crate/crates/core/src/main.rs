use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kinetic_limits::harness::{
    acceptance_report, default_criteria, read_csv_file, run_sweep, verify_ops, write_csv, write_csv_file,
    AcceptanceReport, OpsScale, Study, SweepConfig, SweepRecord,
};
use kinetic_limits::Result;

#[derive(Parser)]
#[command(name = "kinlab", version, about = "Fluid limits of the Boltzmann equation at desk scale")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Collision, Maxwellian and fluid property suites.
    VerifyOps {
        /// Smaller grids; minutes become seconds.
        #[arg(long)]
        quick: bool,
        /// CSV destination (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// |mu^delta - mu^0 - delta G| along a delta ladder.
    ExpandCheck(SweepArgs),
    /// H^s distance between Euler and acoustic solutions.
    LinearizeCheck(SweepArgs),
    /// |F^eps - mu^delta| and remainder diagnostics along an eps ladder.
    EulerLimit(SweepArgs),
    /// sup_t |G^eps - G| in the coupled regime delta = eps^m.
    AcousticLimit {
        #[command(flatten)]
        sweep: SweepArgs,
        /// Hold eps fixed and vary delta instead.
        #[arg(long)]
        fixed_epsilon: bool,
    },
    /// Acceptance verdicts over one or more record files.
    Report {
        #[arg(required = true)]
        records: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep configuration (TOML); the bundled preset when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// CSV destination; overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,
}

fn emit(records: &[SweepRecord], out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => write_csv_file(records, path),
        None => write_csv(records, std::io::stdout().lock()),
    }
}

/// Prints the verdicts of the criteria that have rows, on stderr so stdout stays CSV.
fn judge(records: &[SweepRecord], ids: &[&str]) -> AcceptanceReport {
    let criteria: Vec<_> = default_criteria().into_iter().filter(|c| ids.contains(&c.id.as_str())).collect();
    let report = acceptance_report(records, &criteria);
    eprintln!("{report}");
    report
}

fn sweep(args: &SweepArgs, study: Study, ids: &[&str]) -> Result<i32> {
    let mut cfg = match &args.config {
        Some(path) => SweepConfig::load(path)?,
        None => SweepConfig::preset(study),
    };
    if let Some(out) = &args.out {
        cfg.output = Some(out.clone());
    }
    if args.print_config {
        print!("{}", cfg.to_toml()?);
        return Ok(0);
    }
    let records = run_sweep(&cfg)?;
    let failed = records.iter().filter(|r| !r.is_ok()).count();
    if failed > 0 {
        eprintln!("{failed} of {} rows failed", records.len());
    }
    emit(&records, cfg.output.as_ref())?;
    Ok(judge(&records, ids).exit_code())
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::VerifyOps { quick, out } => {
            let records = verify_ops(if quick { OpsScale::Quick } else { OpsScale::Full })?;
            emit(&records, out.as_ref())?;
            Ok(judge(&records, &["1", "4", "5", "8"]).exit_code())
        }
        Command::ExpandCheck(a) => sweep(&a, Study::Expansion, &["2"]),
        Command::LinearizeCheck(a) => sweep(&a, Study::Linearization, &["3"]),
        Command::EulerLimit(a) => sweep(&a, Study::EulerLimit, &["6"]),
        Command::AcousticLimit { sweep: a, fixed_epsilon } => {
            if fixed_epsilon {
                sweep(&a, Study::AcousticFixedEpsilon, &["7b"])
            } else {
                sweep(&a, Study::AcousticLimit, &["7a"])
            }
        }
        Command::Report { records } => {
            let mut all = Vec::new();
            for path in &records {
                all.extend(read_csv_file(path)?);
            }
            let report = acceptance_report(&all, &default_criteria());
            println!("{report}");
            Ok(report.exit_code())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("kinlab: {e}");
            ExitCode::from(2)
        }
    }
}
