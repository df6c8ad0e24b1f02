//! Traces, synthetic workloads, exact truth and accuracy scoring.

mod metrics;
mod oracle;
mod synth;
mod tables;
mod trace;

pub use metrics::{evaluate, evaluate_sets, mean_rates, AccuracyResult};
pub use oracle::{exact_counts, ExactCounter, GroundTruth};
pub use synth::{synth_trace, BackgroundSpec, PlantedHost, SynthSpec, SyntheticTrace, MAX_HOSTS};
pub use tables::{
    read_reports, read_truth, write_eval, write_truth, ReportTable, ReportWriter, EVAL_HEADER,
    REPORT_HEADER, TRUTH_HEADER,
};
pub use trace::{
    format_addr, orient_pairs, parse_addr, read_trace, read_trace_auto, write_trace, CnetSpec,
    TraceFormat, TraceReader, TraceRecord, TraceWriter, TRACE_MAGIC, TRACE_VERSION,
};
