//! Sweep configuration and orchestration, rate fits, acceptance verdicts and
//! every file format the laboratory reads or writes.

mod config;
mod fit;
mod ops;
mod report;
mod snapshot;
mod sweep;

pub use config::{DeltaRule, FluidOptions, InitialData, KineticOptions, Quantity, Study, SweepConfig};
pub use fit::{fit_points, fit_rate, RateFit, XAxis};
pub use ops::{
    acoustic_energy_suite, collision_suite, kernel_split_suite, solvability_suite, verify_ops, OpsScale,
};
pub use report::{
    acceptance_report, default_criteria, AcceptanceReport, Check, CheckResult, Criterion, Outcome, Selector, Verdict,
};
pub use snapshot::Snapshot;
pub use sweep::{
    read_csv, read_csv_file, run_sweep, write_csv, write_csv_file, Status, SweepRecord, CSV_HEADER,
};
