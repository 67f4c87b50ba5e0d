//! Acceptance criteria 1-8. Prints one PASS/FAIL line per criterion, then the
//! per-check detail, and exits non-zero when a criterion outside `KNOWN_RED`
//! fails or cannot be evaluated.
//!
//! Runs without the libtest harness so the verdict lines always reach the
//! terminal. Takes roughly 20 minutes on one core.

use std::process::ExitCode;
use std::time::Instant;

use kinetic_limits::harness::{
    acceptance_report, default_criteria, run_sweep, verify_ops, OpsScale, Outcome, Study, SweepConfig, SweepRecord,
};

/// Criteria measured at full resolution whose verdict is red. They are still
/// evaluated at the stated tolerance and printed as FAIL; see the README.
const KNOWN_RED: &[&str] = &["7b"];

fn main() -> ExitCode {
    let mut records: Vec<SweepRecord> = Vec::new();
    let mut errors = Vec::new();

    let t = Instant::now();
    match verify_ops(OpsScale::Full) {
        Ok(r) => records.extend(r),
        Err(e) => errors.push(format!("operator suites: {e}")),
    }
    eprintln!("operator suites: {:.1}s", t.elapsed().as_secs_f64());

    for study in [
        Study::Expansion,
        Study::Linearization,
        Study::EulerLimit,
        Study::AcousticLimit,
        Study::AcousticFixedEpsilon,
    ] {
        let t = Instant::now();
        match run_sweep(&SweepConfig::preset(study)) {
            Ok(r) => {
                for bad in r.iter().filter(|r| !r.is_ok()) {
                    errors.push(format!("{study:?}: {} at eps {} delta {}: {}", bad.quantity, bad.epsilon, bad.delta, bad.status.tag()));
                }
                records.extend(r);
            }
            Err(e) => errors.push(format!("{study:?}: {e}")),
        }
        eprintln!("{study:?} sweep: {:.1}s", t.elapsed().as_secs_f64());
    }

    let report = acceptance_report(&records, &default_criteria());
    println!();
    for v in &report.verdicts {
        let note = if KNOWN_RED.contains(&v.id.as_str()) && v.outcome != Outcome::Pass { " (known red)" } else { "" };
        println!("criterion {}: {}{note} - {}", v.id, v.outcome.tag(), v.title);
    }
    println!();
    for v in &report.verdicts {
        println!("{v}");
    }
    for e in &errors {
        println!("error: {e}");
    }

    let blocking: Vec<&str> = report
        .verdicts
        .iter()
        .filter(|v| v.outcome == Outcome::Incomplete || (v.outcome == Outcome::Fail && !KNOWN_RED.contains(&v.id.as_str())))
        .map(|v| v.id.as_str())
        .collect();
    if blocking.is_empty() && errors.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("blocking: {blocking:?}");
        ExitCode::FAILURE
    }
}
