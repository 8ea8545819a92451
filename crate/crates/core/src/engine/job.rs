use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use super::datum::{Datum, KVPair};

/// Failure raised by a user-defined function.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{0}")]
pub struct UdfError(pub String);

impl UdfError {
    pub fn new(msg: impl Into<String>) -> Self {
        UdfError(msg.into())
    }
}

impl From<super::datum::DecodeError> for UdfError {
    fn from(e: super::datum::DecodeError) -> Self {
        UdfError(e.to_string())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum ReducerMode {
    #[default]
    Batched,
    Streaming,
}

impl ReducerMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ReducerMode::Batched => "batched",
            ReducerMode::Streaming => "streaming",
        }
    }
}

impl std::str::FromStr for ReducerMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "batched" => Ok(ReducerMode::Batched),
            "streaming" => Ok(ReducerMode::Streaming),
            other => Err(format!("unknown reducer mode `{other}` (batched|streaming)")),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("num_mappers must be at least 1")]
    NoMappers,
    #[error("num_reducers must be at least 1")]
    NoReducers,
}

/// Shape of the simulated cluster. Mapper and reducer counts are kept apart;
/// one never stands in for the other.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ClusterConfig {
    num_mappers: usize,
    num_reducers: usize,
    shuffle_seed: u64,
}

impl ClusterConfig {
    pub fn new(num_mappers: usize, num_reducers: usize, shuffle_seed: u64) -> Result<Self, ConfigError> {
        if num_mappers == 0 {
            return Err(ConfigError::NoMappers);
        }
        if num_reducers == 0 {
            return Err(ConfigError::NoReducers);
        }
        Ok(ClusterConfig {
            num_mappers,
            num_reducers,
            shuffle_seed,
        })
    }

    pub fn num_mappers(&self) -> usize {
        self.num_mappers
    }

    pub fn num_reducers(&self) -> usize {
        self.num_reducers
    }

    pub fn shuffle_seed(&self) -> u64 {
        self.shuffle_seed
    }

    pub fn with_seed(self, shuffle_seed: u64) -> Self {
        ClusterConfig { shuffle_seed, ..self }
    }
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            num_mappers: 1,
            num_reducers: 1,
            shuffle_seed: 0,
        }
    }
}

/// Collects pairs emitted by one UDF invocation along with the work and
/// memory the UDF declares on top of what the framework already sees.
#[derive(Debug, Default)]
pub struct Emitter {
    out: Vec<KVPair>,
    extra_work: i64,
    held_bytes: u64,
}

impl Emitter {
    pub(crate) fn new() -> Self {
        Emitter::default()
    }

    pub fn emit(&mut self, key: impl Into<Datum>, value: impl Into<Datum>) {
        self.out.push(KVPair::new(key, value));
    }

    pub fn emit_pair(&mut self, pair: KVPair) {
        self.out.push(pair);
    }

    /// Extra cost units beyond bytes touched. Negative totals fail metering.
    pub fn declare_work(&mut self, units: i64) {
        self.extra_work = self.extra_work.saturating_add(units);
    }

    /// Bytes of private working memory the UDF held at its peak.
    pub fn declare_held(&mut self, bytes: u64) {
        self.held_bytes = self.held_bytes.max(bytes);
    }

    pub(crate) fn extra_work(&self) -> i64 {
        self.extra_work
    }

    pub(crate) fn held_bytes(&self) -> u64 {
        self.held_bytes
    }

    pub(crate) fn into_pairs(self) -> Vec<KVPair> {
        self.out
    }
}

pub trait MapUdf: Send + Sync {
    fn map(&self, record: &KVPair, out: &mut Emitter) -> Result<(), UdfError>;
}

impl<F> MapUdf for F
where
    F: Fn(&KVPair, &mut Emitter) -> Result<(), UdfError> + Send + Sync,
{
    fn map(&self, record: &KVPair, out: &mut Emitter) -> Result<(), UdfError> {
        self(record, out)
    }
}

/// Local fold applied once per (mapper, key) group before the shuffle.
pub trait CombineUdf: Send + Sync {
    fn combine(&self, key: &Datum, values: Vec<Datum>) -> Result<Vec<Datum>, UdfError>;
}

impl<F> CombineUdf for F
where
    F: Fn(&Datum, Vec<Datum>) -> Result<Vec<Datum>, UdfError> + Send + Sync,
{
    fn combine(&self, key: &Datum, values: Vec<Datum>) -> Result<Vec<Datum>, UdfError> {
        self(key, values)
    }
}

/// Reducer that sees the entire reduce record at once.
pub trait BatchedReduce: Send + Sync {
    fn reduce(&self, key: &Datum, values: &[Datum], out: &mut Emitter) -> Result<(), UdfError>;
}

impl<F> BatchedReduce for F
where
    F: Fn(&Datum, &[Datum], &mut Emitter) -> Result<(), UdfError> + Send + Sync,
{
    fn reduce(&self, key: &Datum, values: &[Datum], out: &mut Emitter) -> Result<(), UdfError> {
        self(key, values, out)
    }
}

/// Reducer that consumes one value at a time. The state is a [`Datum`] so
/// its size is always defined and metered.
pub trait StreamingReduce: Send + Sync {
    fn init(&self, key: &Datum) -> Datum;
    fn step(&self, key: &Datum, state: Datum, value: &Datum, out: &mut Emitter) -> Result<Datum, UdfError>;
    fn finish(&self, key: &Datum, state: Datum, out: &mut Emitter) -> Result<(), UdfError>;
}

#[derive(Clone)]
pub enum ReduceUdf {
    Batched(Arc<dyn BatchedReduce>),
    Streaming(Arc<dyn StreamingReduce>),
}

impl ReduceUdf {
    pub fn mode(&self) -> ReducerMode {
        match self {
            ReduceUdf::Batched(_) => ReducerMode::Batched,
            ReduceUdf::Streaming(_) => ReducerMode::Streaming,
        }
    }
}

/// Names the record schema a job consumes or produces, so chained jobs can
/// be checked before anything runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RecordKind(pub &'static str);

impl RecordKind {
    pub const ANY: RecordKind = RecordKind("any");

    pub fn accepts(self, produced: RecordKind) -> bool {
        self == RecordKind::ANY || produced == RecordKind::ANY || self == produced
    }
}

impl fmt::Display for RecordKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.0)
    }
}

#[derive(Clone)]
pub struct JobSpec {
    pub name: String,
    pub input_kind: RecordKind,
    pub output_kind: RecordKind,
    pub map: Arc<dyn MapUdf>,
    pub combine: Option<Arc<dyn CombineUdf>>,
    pub reduce: ReduceUdf,
    pub cluster: ClusterConfig,
}

impl JobSpec {
    pub fn new(name: impl Into<String>, map: Arc<dyn MapUdf>, reduce: ReduceUdf, cluster: ClusterConfig) -> Self {
        JobSpec {
            name: name.into(),
            input_kind: RecordKind::ANY,
            output_kind: RecordKind::ANY,
            map,
            combine: None,
            reduce,
            cluster,
        }
    }

    pub fn with_combiner(mut self, combine: Arc<dyn CombineUdf>) -> Self {
        self.combine = Some(combine);
        self
    }

    pub fn with_kinds(mut self, input: RecordKind, output: RecordKind) -> Self {
        self.input_kind = input;
        self.output_kind = output;
        self
    }

    pub fn mode(&self) -> ReducerMode {
        self.reduce.mode()
    }
}

impl fmt::Debug for JobSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JobSpec")
            .field("name", &self.name)
            .field("input_kind", &self.input_kind)
            .field("output_kind", &self.output_kind)
            .field("combiner", &self.combine.is_some())
            .field("mode", &self.mode())
            .field("cluster", &self.cluster)
            .finish()
    }
}

/// Passes every record through unchanged.
pub struct IdentityMap;

impl MapUdf for IdentityMap {
    fn map(&self, record: &KVPair, out: &mut Emitter) -> Result<(), UdfError> {
        out.emit_pair(record.clone());
        Ok(())
    }
}

/// Emits `(key, v)` for every value of the record.
pub struct IdentityReduce;

impl BatchedReduce for IdentityReduce {
    fn reduce(&self, key: &Datum, values: &[Datum], out: &mut Emitter) -> Result<(), UdfError> {
        for v in values {
            out.emit(key.clone(), v.clone());
        }
        Ok(())
    }
}

impl StreamingReduce for IdentityReduce {
    fn init(&self, _key: &Datum) -> Datum {
        Datum::empty()
    }

    fn step(&self, key: &Datum, state: Datum, value: &Datum, out: &mut Emitter) -> Result<Datum, UdfError> {
        out.emit(key.clone(), value.clone());
        Ok(state)
    }

    fn finish(&self, _key: &Datum, _state: Datum, _out: &mut Emitter) -> Result<(), UdfError> {
        Ok(())
    }
}
