//! Scaling studies over the chain length, power-law fits, report emission and the ED oracle run.

pub mod cli;
mod fit;
mod oracle;
mod study;

pub use fit::{fit_power_law, PowerLawFit, MIN_FIT_SIZES};
pub use oracle::{bethe_form_factors, run_oracle, ORACLE_PHASE_TOLERANCE, ORACLE_TOLERANCE};
pub use study::{
    emit, read_json_records, run_scaling_study, scaling_record, write_csv, write_json, AlphaSummary, OutputPaths,
    ReportFormat, ScalingRecord, ScalingStudy, StudyConfig, StudyExcitation, CSV_HEADER,
};

#[cfg(test)]
mod tests;
