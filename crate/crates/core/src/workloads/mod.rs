//! Deterministic workload generators and the tab-separated file formats.
//!
//! Generators run on a single ChaCha stream seeded from the spec, so a spec
//! and seed always produce the same bytes. Every generator returns realized
//! statistics (S, f_i, f_MAX for corpora; N, M, d_MAX for graphs) computed
//! from what it actually emitted.

mod corpus;
mod formats;
mod graph;

use thiserror::Error;

pub use corpus::{gen_corpus, vocab_word, Corpus, CorpusSpec, CorpusStats, Distribution};
pub use formats::{
    parse_corpus, parse_graph, parse_numbers, parse_ranks, parse_word_counts, render_corpus, render_graph,
    render_numbers, render_ranks, render_word_counts, FormatError,
};
pub use graph::{annotate, degree_stats, gen_graph, validate_annotations, Graph, GraphModel, GraphSpec, GraphStats};

#[derive(Debug, Error, PartialEq)]
pub enum WorkloadError {
    #[error("vocab_size must be at least 1")]
    EmptyVocab,
    #[error("num_docs is 0 but {0} tokens were requested")]
    NoDocs(u64),
    #[error("explicit frequency list has {found} entries, vocab_size is {expected}")]
    FrequencyLength { expected: u64, found: usize },
    #[error("explicit frequencies sum to {sum}, total_tokens is {total}")]
    FrequencySum { sum: u64, total: u64 },
    #[error("invalid distribution parameter: {0}")]
    Distribution(String),
    #[error("unsatisfiable graph: {0}")]
    Unsatisfiable(String),
    #[error("edge {src}->{dst} annotated with out-degree {annotated}, actual {actual}")]
    Annotation {
        src: u64,
        dst: u64,
        annotated: u64,
        actual: u64,
    },
}
