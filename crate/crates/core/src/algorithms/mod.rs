//! Reference jobs: Word Count, one PageRank iteration, and combiner-backed
//! aggregation. Each comes in batched and streaming form with identical output.

pub mod aggregate;
pub mod pagerank;
pub mod wordcount;

pub use aggregate::{aggregation_job, run_aggregation, AggregateError, AggregateOp, AggregateValue};
pub use pagerank::{
    pagerank_input, pagerank_iteration_job, ranks_from_outputs, run_pagerank, AnnotatedEdge, DanglingPolicy,
    PageRankError, PageRankParams, RankEntry, RankOutput,
};
pub use wordcount::{counts_from_outputs, documents_to_records, word_count_job, Document};
