//! Files in and out: configs, designs, datasets, reports, and the three
//! command entry points behind the binary.

mod commands;
mod config;
mod dataset;
mod report;

pub use commands::{
    cmd_analyze, cmd_example1, cmd_simulate, AnalyzeOptions, Example1Options, Example1Row, SimulateOptions,
};
pub use config::{
    canonical_grid, config_hash, load_design, parse_design, GridSection, ReplicationSection, SimulationConfig,
    StudySection,
};
pub use dataset::{
    ingest_dataset, ingest_reader, summarize_rows, write_dataset, DatasetRow, IngestedData, DATASET_HEADER,
};
pub use report::{format_sig, write_metric_csv, REPORT_COLUMNS};
