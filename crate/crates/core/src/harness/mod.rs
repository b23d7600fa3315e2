//! Experiment orchestration: configuration, seeded runs, sweeps and
//! reports.

mod config;
mod report;
mod run;
mod sweep;

pub use config::{Algorithm, ExperimentConfig, SweepSpec, LAMBDA_GRID, STEP_SIZE_GRID, TAU_GRID};
pub use report::{
    build_report, emit_report, final_window, render_summary, score_cells, select_best, CellScore, Criterion, CurveRow,
    Report, SummaryRow,
};
pub use run::{run_seed, run_single, run_single_traced, RunRecord, TracedRun};
pub use sweep::{aggregate, read_raw_csv, read_raw_csv_file, run_cells, run_sweep, write_csv, AggregateRow, RawRow, SweepOutcome};
