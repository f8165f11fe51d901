//! Benchmark harness: datasets, the optimizer grid, metrics and reports.

pub mod bench;
pub mod dataset;
pub mod metrics;
pub mod report;

pub use bench::{
    aggregate, prepare_datasets, run_benchmark, run_prepared, Aggregate, BenchmarkConfig, BenchmarkOutput,
    CellResult, ClockMode, DecompositionTemplate, PreparedDataset,
};
pub use dataset::{
    batch_dataset, decomposition_target, load_idx, load_raw_gray_dir, parse_idx, synthesize_tensor,
    DatasetSource, DatasetSpec,
};
pub use metrics::convergence_rate;
pub use report::{emit_report, render, ReportFormat};
