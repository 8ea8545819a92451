//! Deterministic MapReduce engine that meters every map, combine and reduce
//! invocation and reports key complexity (per-invocation maxima) and
//! sequential complexity (sums), plus a harness that checks how those
//! measures scale for Word Count, PageRank and combiner aggregation.

pub mod algorithms;
pub mod cli;
pub mod doc;
pub mod engine;
pub mod experiments;
pub mod metrics;
pub mod workloads;

pub use engine::{
    run_job, run_pipeline, ClusterConfig, Datum, Engine, Executor, JobRun, JobSpec, KVPair, ReduceRecord, ReducerMode,
};
pub use metrics::{ComplexityReport, KeyComplexity, SequentialComplexity, SkewReport};
