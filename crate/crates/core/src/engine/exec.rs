use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use thiserror::Error;

use super::datum::{Datum, KVPair, ReduceRecord};
use super::events::{PhaseEvent, PhaseEventLog};
use super::executor::Executor;
use super::job::{ClusterConfig, Emitter, JobSpec, RecordKind, ReduceUdf, ReducerMode, UdfError};
use super::shuffle::{shuffle_with, ShuffleOutput};
use crate::metrics::{meter_invocation, ComplexityReport, InvocationMetrics, MemoryProfile, MeterError, PhaseMetrics, RecordSize};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("map failed on record {record_index} (mapper {mapper}): {source}")]
    Map {
        mapper: usize,
        record_index: usize,
        source: UdfError,
    },
    #[error("combine failed for key {key} (mapper {mapper}): {source}")]
    Combine {
        mapper: usize,
        key: Datum,
        source: UdfError,
    },
    #[error("reduce failed for key {key} (reducer {reducer}): {source}")]
    Reduce {
        reducer: usize,
        key: Datum,
        source: UdfError,
    },
    #[error("metering failed in {phase} worker {worker}: {source}")]
    Meter {
        phase: &'static str,
        worker: usize,
        source: MeterError,
    },
    #[error("reduce record for key {key} on reducer {reducer} has no values")]
    EmptyRecord { reducer: usize, key: Datum },
    #[error("reduce phase requested before the shuffle completed")]
    BarrierNotReached,
    #[error("expected {expected} reducer inboxes, got {found}")]
    InboxCount { expected: usize, found: usize },
    #[error("pipeline stage {stage} ({name}) expects `{expected}` records but the previous stage produces `{found}`")]
    StageMismatch {
        stage: usize,
        name: String,
        expected: RecordKind,
        found: RecordKind,
    },
    #[error("pipeline has no stages")]
    EmptyPipeline,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MapPhaseOutput {
    pub per_mapper: Vec<Vec<KVPair>>,
    /// Map and combine invocations, per mapper, in execution order.
    pub invocations: Vec<Vec<InvocationMetrics>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReducePhaseOutput {
    pub per_reducer: Vec<Vec<KVPair>>,
    pub invocations: Vec<Vec<InvocationMetrics>>,
    /// Peak memory each reducer worker held across its records.
    pub worker_peak_memory: Vec<u64>,
}

impl ReducePhaseOutput {
    pub fn outputs(&self) -> impl Iterator<Item = &KVPair> {
        self.per_reducer.iter().flatten()
    }
}

#[derive(Clone, Debug)]
pub struct JobRun {
    pub outputs: Vec<KVPair>,
    pub report: ComplexityReport,
    pub log: PhaseEventLog,
    /// Informational only; never part of a report.
    pub wall_time: Duration,
}

#[derive(Clone, Debug)]
pub struct PipelineRun {
    pub outputs: Vec<KVPair>,
    pub reports: Vec<ComplexityReport>,
    pub logs: Vec<PhaseEventLog>,
    pub phase_count: usize,
}

/// Runs jobs under BSP semantics with the chosen [`Executor`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Engine {
    executor: Executor,
}

impl Engine {
    pub fn new(executor: Executor) -> Self {
        Engine { executor }
    }

    pub fn sequential() -> Self {
        Engine::new(Executor::Sequential)
    }

    pub fn parallel() -> Self {
        Engine::new(Executor::Parallel)
    }

    pub fn executor(&self) -> Executor {
        self.executor
    }

    /// Records are striped round-robin: mapper `i` gets records `i, i+K, i+2K, ...`.
    pub fn run_map_phase(
        &self,
        input: &[KVPair],
        spec: &JobSpec,
        log: &mut PhaseEventLog,
    ) -> Result<MapPhaseOutput, EngineError> {
        let mappers = spec.cluster.num_mappers();
        let splits: Vec<Vec<(usize, &KVPair)>> = (0..mappers)
            .map(|m| input.iter().enumerate().skip(m).step_by(mappers).collect())
            .collect();

        let results = self
            .executor
            .map_indexed(splits, |mapper, split| run_mapper(mapper, &split, spec));

        let mut per_mapper = Vec::with_capacity(mappers);
        let mut invocations = Vec::with_capacity(mappers);
        for (mapper, r) in results.into_iter().enumerate() {
            let (pairs, metrics, clock) = r?;
            log.record(1, PhaseEvent::MapStart(mapper));
            log.record(clock, PhaseEvent::MapEnd(mapper));
            per_mapper.push(pairs);
            invocations.push(metrics);
        }
        Ok(MapPhaseOutput {
            per_mapper,
            invocations,
        })
    }

    /// Groups map output into reduce records and marks the barrier in `log`.
    pub fn shuffle(&self, map_outputs: Vec<Vec<KVPair>>, cluster: &ClusterConfig, log: &mut PhaseEventLog) -> ShuffleOutput {
        let out = shuffle_with(self.executor, map_outputs, cluster);
        let at = log.max_map_end().unwrap_or(0) + 1;
        log.record(at, PhaseEvent::ShuffleDone);
        out
    }

    pub fn run_reduce_phase(
        &self,
        inboxes: &[Vec<ReduceRecord>],
        spec: &JobSpec,
        log: &mut PhaseEventLog,
    ) -> Result<ReducePhaseOutput, EngineError> {
        let barrier = log.shuffle_done_at().ok_or(EngineError::BarrierNotReached)?;
        if inboxes.len() != spec.cluster.num_reducers() {
            return Err(EngineError::InboxCount {
                expected: spec.cluster.num_reducers(),
                found: inboxes.len(),
            });
        }
        let workers: Vec<&Vec<ReduceRecord>> = inboxes.iter().collect();
        let results = self
            .executor
            .map_indexed(workers, |reducer, records| run_reducer(reducer, records, &spec.reduce));

        let mut out = ReducePhaseOutput {
            per_reducer: Vec::with_capacity(inboxes.len()),
            invocations: Vec::with_capacity(inboxes.len()),
            worker_peak_memory: Vec::with_capacity(inboxes.len()),
        };
        for (reducer, r) in results.into_iter().enumerate() {
            let (pairs, metrics) = r?;
            let start = barrier + 1;
            log.record(start, PhaseEvent::ReduceStart(reducer));
            log.record(start + metrics.len() as u64 + 1, PhaseEvent::ReduceEnd(reducer));
            out.worker_peak_memory
                .push(metrics.iter().map(|m| m.memory_bytes).max().unwrap_or(0));
            out.per_reducer.push(pairs);
            out.invocations.push(metrics);
        }
        Ok(out)
    }

    pub fn run_job(&self, input: &[KVPair], spec: &JobSpec) -> Result<JobRun, EngineError> {
        let started = Instant::now();
        let mut log = PhaseEventLog::new();

        let mapped = self.run_map_phase(input, spec, &mut log)?;
        let map_metrics = mapped
            .invocations
            .iter()
            .map(PhaseMetrics::from_invocations)
            .fold(PhaseMetrics::default(), PhaseMetrics::merge);

        let shuffled = self.shuffle(mapped.per_mapper, &spec.cluster, &mut log);
        let record_sizes: Vec<RecordSize> = shuffled
            .inboxes
            .iter()
            .flatten()
            .map(|r| RecordSize {
                key: r.key.clone(),
                size_bytes: r.size_bytes(),
                value_count: r.values.len() as u64,
            })
            .collect();

        let reduced = self.run_reduce_phase(&shuffled.inboxes, spec, &mut log)?;
        let reduce_metrics = reduced
            .invocations
            .iter()
            .map(PhaseMetrics::from_invocations)
            .fold(PhaseMetrics::default(), PhaseMetrics::merge);
        log.seal();

        let mode = spec.mode();
        let mut report = ComplexityReport::empty(
            mode,
            spec.cluster.num_mappers() as u64,
            spec.cluster.num_reducers() as u64,
        );
        report.map_key_cx = map_metrics.key;
        report.reduce_key_cx = reduce_metrics.key;
        report.sequential = map_metrics.sequential.merge(reduce_metrics.sequential);
        report.shuffle_bytes = shuffled.shuffle_bytes;
        report.reduce_record_sizes = record_sizes;
        if mode == ReducerMode::Streaming {
            report.total_streaming_reducer_memory = Some(reduced.worker_peak_memory.iter().sum());
        }

        Ok(JobRun {
            outputs: reduced.per_reducer.into_iter().flatten().collect(),
            report,
            log,
            wall_time: started.elapsed(),
        })
    }

    /// Chains jobs: the reduce output of stage `i` is the map input of stage `i + 1`.
    /// Record kinds are checked for every boundary before anything runs.
    pub fn run_pipeline(&self, input: Vec<KVPair>, specs: &[JobSpec]) -> Result<PipelineRun, EngineError> {
        if specs.is_empty() {
            return Err(EngineError::EmptyPipeline);
        }
        for (stage, pair) in specs.windows(2).enumerate() {
            if !pair[1].input_kind.accepts(pair[0].output_kind) {
                return Err(EngineError::StageMismatch {
                    stage: stage + 1,
                    name: pair[1].name.clone(),
                    expected: pair[1].input_kind,
                    found: pair[0].output_kind,
                });
            }
        }
        let mut data = input;
        let mut reports = Vec::with_capacity(specs.len());
        let mut logs = Vec::with_capacity(specs.len());
        for spec in specs {
            let run = self.run_job(&data, spec)?;
            data = run.outputs;
            reports.push(run.report);
            logs.push(run.log);
        }
        Ok(PipelineRun {
            outputs: data,
            reports,
            logs,
            phase_count: specs.len(),
        })
    }
}

type MapperResult = Result<(Vec<KVPair>, Vec<InvocationMetrics>, u64), EngineError>;

/// Returns the mapper's output, its invocation metrics, and its final Lamport clock.
fn run_mapper(mapper: usize, split: &[(usize, &KVPair)], spec: &JobSpec) -> MapperResult {
    let mut clock = 1u64;
    let mut pairs = Vec::new();
    let mut metrics = Vec::with_capacity(split.len());
    for &(record_index, record) in split {
        let mut em = Emitter::new();
        spec.map.map(record, &mut em).map_err(|source| EngineError::Map {
            mapper,
            record_index,
            source,
        })?;
        let (extra, held) = (em.extra_work(), em.held_bytes());
        let emitted = em.into_pairs();
        let out_sizes: Vec<u64> = emitted.iter().map(KVPair::size_bytes).collect();
        let peak = out_sizes.iter().copied().max().unwrap_or(0).max(held);
        let m = meter_invocation(
            &[record.key.size_bytes(), record.value.size_bytes()],
            &out_sizes,
            extra,
            MemoryProfile::Mapper { peak_held_output: peak },
        )
        .map_err(|source| EngineError::Meter {
            phase: "map",
            worker: mapper,
            source,
        })?;
        metrics.push(m);
        pairs.extend(emitted);
        clock += 1;
    }

    if let Some(combine) = &spec.combine {
        let mut groups: BTreeMap<Datum, Vec<Datum>> = BTreeMap::new();
        for p in pairs {
            groups.entry(p.key).or_default().push(p.value);
        }
        pairs = Vec::with_capacity(groups.len());
        for (key, values) in groups {
            let mut in_sizes = Vec::with_capacity(values.len() + 1);
            in_sizes.push(key.size_bytes());
            in_sizes.extend(values.iter().map(Datum::size_bytes));
            let combined = combine.combine(&key, values).map_err(|source| EngineError::Combine {
                mapper,
                key: key.clone(),
                source,
            })?;
            let out_sizes: Vec<u64> = combined.iter().map(|v| key.size_bytes() + v.size_bytes()).collect();
            let m = meter_invocation(&in_sizes, &out_sizes, 0, MemoryProfile::Batched).map_err(|source| {
                EngineError::Meter {
                    phase: "combine",
                    worker: mapper,
                    source,
                }
            })?;
            metrics.push(m);
            pairs.extend(combined.into_iter().map(|v| KVPair {
                key: key.clone(),
                value: v,
            }));
            clock += 1;
        }
    }
    Ok((pairs, metrics, clock + 1))
}

type ReducerResult = Result<(Vec<KVPair>, Vec<InvocationMetrics>), EngineError>;

/// One reducer worker: records are processed strictly one after another.
fn run_reducer(reducer: usize, records: &[ReduceRecord], udf: &ReduceUdf) -> ReducerResult {
    let mut out = Vec::new();
    let mut metrics = Vec::with_capacity(records.len());
    for record in records {
        if record.values.is_empty() {
            return Err(EngineError::EmptyRecord {
                reducer,
                key: record.key.clone(),
            });
        }
        let fail = |source| EngineError::Reduce {
            reducer,
            key: record.key.clone(),
            source,
        };
        let mut em = Emitter::new();
        let profile = match udf {
            ReduceUdf::Batched(r) => {
                r.reduce(&record.key, &record.values, &mut em).map_err(fail)?;
                MemoryProfile::Batched
            }
            ReduceUdf::Streaming(r) => {
                let mut state = r.init(&record.key);
                let mut peak = 0u64;
                for v in &record.values {
                    peak = peak.max(state.size_bytes() + v.size_bytes());
                    state = r.step(&record.key, state, v, &mut em).map_err(fail)?;
                }
                r.finish(&record.key, state, &mut em).map_err(fail)?;
                MemoryProfile::Streaming {
                    peak_step_bytes: peak.max(em.held_bytes()),
                }
            }
        };
        let extra = em.extra_work();
        let emitted = em.into_pairs();
        let mut in_sizes = Vec::with_capacity(record.values.len() + 1);
        in_sizes.push(record.key.size_bytes());
        in_sizes.extend(record.values.iter().map(Datum::size_bytes));
        let out_sizes: Vec<u64> = emitted.iter().map(KVPair::size_bytes).collect();
        let m = meter_invocation(&in_sizes, &out_sizes, extra, profile).map_err(|source| EngineError::Meter {
            phase: "reduce",
            worker: reducer,
            source,
        })?;
        metrics.push(m);
        out.extend(emitted);
    }
    Ok((out, metrics))
}

/// Runs a job on the default executor.
pub fn run_job(input: &[KVPair], spec: &JobSpec) -> Result<JobRun, EngineError> {
    Engine::default().run_job(input, spec)
}

/// Runs a pipeline on the default executor.
pub fn run_pipeline(input: Vec<KVPair>, specs: &[JobSpec]) -> Result<PipelineRun, EngineError> {
    Engine::default().run_pipeline(input, specs)
}
