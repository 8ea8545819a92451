//! Single-process MapReduce under bulk-synchronous semantics.
//!
//! A job runs in three phases. Map applies the map UDF to each input record
//! (records striped round-robin over mappers) and optionally folds each
//! mapper's output per key with a combiner. Shuffle routes every pair to the
//! reducer chosen by a seeded hash of its key and groups equal keys into one
//! [`ReduceRecord`], permuting values so no caller can depend on arrival
//! order. Reduce starts only once the shuffle has completed and applies the
//! reduce UDF to each record, one record at a time per reducer worker.
//!
//! Every invocation is metered; see [`crate::metrics`].

mod datum;
mod events;
mod exec;
mod executor;
mod job;
mod shuffle;

pub use datum::{Datum, DecodeError, KVPair, ReduceRecord};
pub use events::{PhaseEvent, PhaseEventLog, TimedEvent};
pub use exec::{run_job, run_pipeline, Engine, EngineError, JobRun, MapPhaseOutput, PipelineRun, ReducePhaseOutput};
pub use executor::Executor;
pub use job::{
    BatchedReduce, ClusterConfig, CombineUdf, ConfigError, Emitter, IdentityMap, IdentityReduce, JobSpec, MapUdf,
    RecordKind, ReduceUdf, ReducerMode, StreamingReduce, UdfError,
};
pub use shuffle::{reducer_for, shuffle, shuffle_with, ShuffleOutput};
