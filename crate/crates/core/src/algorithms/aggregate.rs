//! Sum / max / average over integer records, all sent to one key.
//!
//! Map emits a partial per record; the combiner folds a mapper's partials
//! into one, so with `K` mappers the single reduce record holds at most `K`
//! values instead of `N`. Average partials are `(sum, count)` pairs so the
//! combiner stays a plain fold.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::engine::{
    BatchedReduce, ClusterConfig, CombineUdf, Datum, Emitter, Engine, EngineError, JobRun, JobSpec, KVPair, MapUdf,
    RecordKind, ReduceUdf, ReducerMode, StreamingReduce, UdfError,
};

pub const NUMBERS: RecordKind = RecordKind("numbers");
pub const AGGREGATE: RecordKind = RecordKind("aggregate");

/// The single shared map-output key.
pub const AGGREGATE_KEY: &str = "*";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AggregateOp {
    Sum,
    Max,
    Average,
}

impl AggregateOp {
    pub fn as_str(self) -> &'static str {
        match self {
            AggregateOp::Sum => "sum",
            AggregateOp::Max => "max",
            AggregateOp::Average => "avg",
        }
    }
}

impl fmt::Display for AggregateOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AggregateOp {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sum" => Ok(AggregateOp::Sum),
            "max" => Ok(AggregateOp::Max),
            "avg" | "average" => Ok(AggregateOp::Average),
            other => Err(format!("unknown aggregate `{other}` (sum|max|avg)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AggregateValue {
    Int(i64),
    Real(f64),
}

impl fmt::Display for AggregateValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AggregateValue::Int(v) => write!(f, "{v}"),
            AggregateValue::Real(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum AggregateError {
    #[error("{0} over zero records is undefined")]
    EmptyInput(AggregateOp),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("malformed aggregate output: {0}")]
    Output(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Partial {
    Sum(i64),
    Max(i64),
    Avg { sum: i64, count: u64 },
}

impl Partial {
    fn of(op: AggregateOp, v: i64) -> Partial {
        match op {
            AggregateOp::Sum => Partial::Sum(v),
            AggregateOp::Max => Partial::Max(v),
            AggregateOp::Average => Partial::Avg { sum: v, count: 1 },
        }
    }

    fn identity(op: AggregateOp) -> Partial {
        match op {
            AggregateOp::Sum => Partial::Sum(0),
            AggregateOp::Max => Partial::Max(i64::MIN),
            AggregateOp::Average => Partial::Avg { sum: 0, count: 0 },
        }
    }

    fn fold(self, other: Partial) -> Result<Partial, UdfError> {
        let overflow = || UdfError::new("aggregate overflow");
        match (self, other) {
            (Partial::Sum(a), Partial::Sum(b)) => a.checked_add(b).map(Partial::Sum).ok_or_else(overflow),
            (Partial::Max(a), Partial::Max(b)) => Ok(Partial::Max(a.max(b))),
            (Partial::Avg { sum: s1, count: c1 }, Partial::Avg { sum: s2, count: c2 }) => Ok(Partial::Avg {
                sum: s1.checked_add(s2).ok_or_else(overflow)?,
                count: c1 + c2,
            }),
            (a, b) => Err(UdfError::new(format!("mismatched partials {a:?} and {b:?}"))),
        }
    }

    fn encode(self) -> Datum {
        match self {
            Partial::Sum(v) | Partial::Max(v) => Datum::from_i64(v),
            Partial::Avg { sum, count } => {
                let mut b = sum.to_be_bytes().to_vec();
                b.extend_from_slice(&count.to_be_bytes());
                Datum::new(b)
            }
        }
    }

    fn decode(op: AggregateOp, d: &Datum) -> Result<Partial, UdfError> {
        match op {
            AggregateOp::Sum => Ok(Partial::Sum(d.as_i64()?)),
            AggregateOp::Max => Ok(Partial::Max(d.as_i64()?)),
            AggregateOp::Average => {
                let b = d.as_bytes();
                if b.len() != 16 {
                    return Err(UdfError::new(format!("average partial must be 16 bytes, got {}", b.len())));
                }
                Ok(Partial::Avg {
                    sum: i64::from_be_bytes(b[..8].try_into().unwrap()),
                    count: u64::from_be_bytes(b[8..].try_into().unwrap()),
                })
            }
        }
    }

    fn finish(self) -> Datum {
        match self {
            Partial::Sum(v) | Partial::Max(v) => Datum::from_i64(v),
            Partial::Avg { sum, count } => Datum::from_f64(sum as f64 / count as f64),
        }
    }
}

fn fold_all(op: AggregateOp, values: &[Datum]) -> Result<Partial, UdfError> {
    values
        .iter()
        .try_fold(Partial::identity(op), |acc, v| acc.fold(Partial::decode(op, v)?))
}

struct PartialMap(AggregateOp);

impl MapUdf for PartialMap {
    fn map(&self, record: &KVPair, out: &mut Emitter) -> Result<(), UdfError> {
        out.emit(AGGREGATE_KEY, Partial::of(self.0, record.value.as_i64()?).encode());
        Ok(())
    }
}

struct PartialFold(AggregateOp);

impl CombineUdf for PartialFold {
    fn combine(&self, _key: &Datum, values: Vec<Datum>) -> Result<Vec<Datum>, UdfError> {
        Ok(vec![fold_all(self.0, &values)?.encode()])
    }
}

impl BatchedReduce for PartialFold {
    fn reduce(&self, key: &Datum, values: &[Datum], out: &mut Emitter) -> Result<(), UdfError> {
        out.emit(key.clone(), fold_all(self.0, values)?.finish());
        Ok(())
    }
}

impl StreamingReduce for PartialFold {
    fn init(&self, _key: &Datum) -> Datum {
        Partial::identity(self.0).encode()
    }

    fn step(&self, _key: &Datum, state: Datum, value: &Datum, _out: &mut Emitter) -> Result<Datum, UdfError> {
        Ok(Partial::decode(self.0, &state)?
            .fold(Partial::decode(self.0, value)?)?
            .encode())
    }

    fn finish(&self, key: &Datum, state: Datum, out: &mut Emitter) -> Result<(), UdfError> {
        out.emit(key.clone(), Partial::decode(self.0, &state)?.finish());
        Ok(())
    }
}

pub fn aggregation_job(op: AggregateOp, mode: ReducerMode, cluster: ClusterConfig, use_combiner: bool) -> JobSpec {
    let reduce = match mode {
        ReducerMode::Batched => ReduceUdf::Batched(Arc::new(PartialFold(op))),
        ReducerMode::Streaming => ReduceUdf::Streaming(Arc::new(PartialFold(op))),
    };
    let job = JobSpec::new(format!("aggregate:{op}"), Arc::new(PartialMap(op)), reduce, cluster)
        .with_kinds(NUMBERS, AGGREGATE);
    if use_combiner {
        job.with_combiner(Arc::new(PartialFold(op)))
    } else {
        job
    }
}

pub fn numbers_to_records(values: &[i64]) -> Vec<KVPair> {
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| KVPair::new(Datum::from_u64(i as u64), Datum::from_i64(v)))
        .collect()
}

#[derive(Clone, Debug)]
pub struct AggregateRun {
    pub value: AggregateValue,
    pub run: JobRun,
}

/// Runs the job and decodes its scalar. An empty input yields 0 for sum and
/// an [`AggregateError::EmptyInput`] for max and average.
pub fn run_aggregation(
    engine: &Engine,
    values: &[i64],
    op: AggregateOp,
    mode: ReducerMode,
    cluster: ClusterConfig,
    use_combiner: bool,
) -> Result<AggregateRun, AggregateError> {
    let job = aggregation_job(op, mode, cluster, use_combiner);
    let run = engine.run_job(&numbers_to_records(values), &job)?;
    let value = match (run.outputs.as_slice(), op) {
        ([], AggregateOp::Sum) => AggregateValue::Int(0),
        ([], op) => return Err(AggregateError::EmptyInput(op)),
        ([p], AggregateOp::Average) => {
            AggregateValue::Real(p.value.as_f64().map_err(|e| AggregateError::Output(e.to_string()))?)
        }
        ([p], _) => AggregateValue::Int(p.value.as_i64().map_err(|e| AggregateError::Output(e.to_string()))?),
        (many, _) => return Err(AggregateError::Output(format!("expected one output, got {}", many.len()))),
    };
    Ok(AggregateRun { value, run })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(values: &[i64], op: AggregateOp, mode: ReducerMode, k: usize, combine: bool) -> AggregateRun {
        let cluster = ClusterConfig::new(k, 3, 17).unwrap();
        run_aggregation(&Engine::sequential(), values, op, mode, cluster, combine).unwrap()
    }

    #[test]
    fn closed_forms() {
        let one_to_hundred: Vec<i64> = (1..=100).collect();
        for mode in [ReducerMode::Batched, ReducerMode::Streaming] {
            for combine in [false, true] {
                assert_eq!(run(&one_to_hundred, AggregateOp::Sum, mode, 4, combine).value, AggregateValue::Int(5050));
                assert_eq!(run(&[-3, 7, 7], AggregateOp::Max, mode, 2, combine).value, AggregateValue::Int(7));
                assert_eq!(
                    run(&one_to_hundred, AggregateOp::Average, mode, 3, combine).value,
                    AggregateValue::Real(50.5)
                );
            }
        }
    }

    #[test]
    fn empty_input() {
        let engine = Engine::sequential();
        let c = ClusterConfig::default();
        assert_eq!(
            run_aggregation(&engine, &[], AggregateOp::Average, ReducerMode::Batched, c, true).unwrap_err(),
            AggregateError::EmptyInput(AggregateOp::Average)
        );
        assert_eq!(
            run_aggregation(&engine, &[], AggregateOp::Sum, ReducerMode::Batched, c, true)
                .unwrap()
                .value,
            AggregateValue::Int(0)
        );
    }

    #[test]
    fn combiner_shrinks_reduce_record_to_mapper_count() {
        let values: Vec<i64> = (0..1000).collect();
        let with = run(&values, AggregateOp::Sum, ReducerMode::Batched, 16, true);
        let without = run(&values, AggregateOp::Sum, ReducerMode::Batched, 16, false);
        assert_eq!(with.run.report.reduce_record_sizes[0].value_count, 16);
        assert_eq!(without.run.report.reduce_record_sizes[0].value_count, 1000);
        assert_eq!(with.value, without.value);
        // fewer mappers with records than K: only those contribute a partial
        let few = run(&values[..5], AggregateOp::Max, ReducerMode::Batched, 16, true);
        assert_eq!(few.run.report.reduce_record_sizes[0].value_count, 5);
    }

    #[test]
    fn combiner_reapplication_is_stable() {
        for op in [AggregateOp::Sum, AggregateOp::Max, AggregateOp::Average] {
            let vals: Vec<Datum> = (1..=9).map(|v| Partial::of(op, v).encode()).collect();
            let key = Datum::text(AGGREGATE_KEY);
            let once = PartialFold(op).combine(&key, vals).unwrap();
            let twice = PartialFold(op).combine(&key, once.clone()).unwrap();
            assert_eq!(once, twice);
        }
    }

    #[test]
    fn parse_ops() {
        assert_eq!("avg".parse::<AggregateOp>(), Ok(AggregateOp::Average));
        assert!("median".parse::<AggregateOp>().is_err());
    }
}
