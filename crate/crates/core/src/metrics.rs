//! Per-invocation metering and the two complexity measures built from it.
//!
//! Key complexity is a maximum over invocations (largest pair, costliest
//! invocation, most memory held). Sequential complexity is a sum over all
//! map and reduce invocations. Total memory is deliberately not summed.
//!
//! Time is measured in abstract cost units: bytes touched plus whatever
//! extra work a UDF declares. Memory is framework-tracked record and
//! accumulator bytes, not process RSS. Disk is not modelled.

use thiserror::Error;

use crate::doc::{DocError, FlatDoc};
use crate::engine::{Datum, ReducerMode};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MeterError {
    #[error("declared extra work must be non-negative, got {0}")]
    NegativeWork(i64),
}

/// How the memory of one invocation is charged.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MemoryProfile {
    /// The whole input is resident: memory = sum of input sizes.
    Batched,
    /// Peak of (state + current value) observed across steps.
    Streaming { peak_step_bytes: u64 },
    /// Input record plus the most output held at once.
    Mapper { peak_held_output: u64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct InvocationMetrics {
    /// Largest key-value pair this invocation consumed or produced.
    pub pair_size_bytes: u64,
    pub io_bytes: u64,
    pub cost_units: u64,
    pub memory_bytes: u64,
}

/// Meters one UDF invocation. `input_sizes` are the sizes of the parts of
/// the input pair (key, then values); `output_sizes` are whole output pairs.
pub fn meter_invocation(
    input_sizes: &[u64],
    output_sizes: &[u64],
    declared_extra_work: i64,
    memory: MemoryProfile,
) -> Result<InvocationMetrics, MeterError> {
    if declared_extra_work < 0 {
        return Err(MeterError::NegativeWork(declared_extra_work));
    }
    let input: u64 = input_sizes.iter().sum();
    let output: u64 = output_sizes.iter().sum();
    let io_bytes = input + output;
    let memory_bytes = match memory {
        MemoryProfile::Batched => input,
        MemoryProfile::Streaming { peak_step_bytes } => peak_step_bytes,
        MemoryProfile::Mapper { peak_held_output } => input + peak_held_output,
    };
    Ok(InvocationMetrics {
        pair_size_bytes: output_sizes.iter().copied().fold(input, u64::max),
        io_bytes,
        cost_units: io_bytes + declared_extra_work as u64,
        memory_bytes,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct KeyComplexity {
    pub max_pair_size_bytes: u64,
    pub max_cost_units: u64,
    pub max_memory_bytes: u64,
}

impl KeyComplexity {
    pub fn absorb(&mut self, m: &InvocationMetrics) {
        self.max_pair_size_bytes = self.max_pair_size_bytes.max(m.pair_size_bytes);
        self.max_cost_units = self.max_cost_units.max(m.cost_units);
        self.max_memory_bytes = self.max_memory_bytes.max(m.memory_bytes);
    }

    pub fn merge(self, other: KeyComplexity) -> KeyComplexity {
        KeyComplexity {
            max_pair_size_bytes: self.max_pair_size_bytes.max(other.max_pair_size_bytes),
            max_cost_units: self.max_cost_units.max(other.max_cost_units),
            max_memory_bytes: self.max_memory_bytes.max(other.max_memory_bytes),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SequentialComplexity {
    pub total_io_bytes: u64,
    pub total_cost_units: u64,
}

impl SequentialComplexity {
    pub fn absorb(&mut self, m: &InvocationMetrics) {
        self.total_io_bytes += m.io_bytes;
        self.total_cost_units += m.cost_units;
    }

    pub fn merge(self, other: SequentialComplexity) -> SequentialComplexity {
        SequentialComplexity {
            total_io_bytes: self.total_io_bytes + other.total_io_bytes,
            total_cost_units: self.total_cost_units + other.total_cost_units,
        }
    }
}

/// Running totals for one phase (or one worker within a phase). Merging is
/// associative and commutative, so partials from concurrent workers can be
/// combined in any grouping.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PhaseMetrics {
    pub key: KeyComplexity,
    pub sequential: SequentialComplexity,
    pub invocations: u64,
}

impl PhaseMetrics {
    pub fn absorb(&mut self, m: &InvocationMetrics) {
        self.key.absorb(m);
        self.sequential.absorb(m);
        self.invocations += 1;
    }

    pub fn merge(self, other: PhaseMetrics) -> PhaseMetrics {
        PhaseMetrics {
            key: self.key.merge(other.key),
            sequential: self.sequential.merge(other.sequential),
            invocations: self.invocations + other.invocations,
        }
    }

    pub fn from_invocations<'a>(it: impl IntoIterator<Item = &'a InvocationMetrics>) -> Self {
        let mut p = PhaseMetrics::default();
        for m in it {
            p.absorb(m);
        }
        p
    }
}

/// Size of one reduce record as seen by the reducer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecordSize {
    pub key: Datum,
    pub size_bytes: u64,
    pub value_count: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexityReport {
    pub mode: ReducerMode,
    pub num_mappers: u64,
    pub num_reducers: u64,
    pub map_key_cx: KeyComplexity,
    pub reduce_key_cx: KeyComplexity,
    pub sequential: SequentialComplexity,
    /// Informational: bytes crossing the shuffle, not folded into `sequential`.
    pub shuffle_bytes: u64,
    /// One entry per reduce record, ordered by reducer then key.
    pub reduce_record_sizes: Vec<RecordSize>,
    /// Sum over reducer workers of the peak memory each one held. Streaming only.
    pub total_streaming_reducer_memory: Option<u64>,
}

impl ComplexityReport {
    pub fn empty(mode: ReducerMode, num_mappers: u64, num_reducers: u64) -> Self {
        ComplexityReport {
            mode,
            num_mappers,
            num_reducers,
            map_key_cx: KeyComplexity::default(),
            reduce_key_cx: KeyComplexity::default(),
            sequential: SequentialComplexity::default(),
            shuffle_bytes: 0,
            reduce_record_sizes: Vec::new(),
            total_streaming_reducer_memory: match mode {
                ReducerMode::Streaming => Some(0),
                ReducerMode::Batched => None,
            },
        }
    }

    /// Builds the key and sequential measures from raw per-phase invocations.
    pub fn aggregate(
        mode: ReducerMode,
        num_mappers: u64,
        num_reducers: u64,
        map: &[InvocationMetrics],
        reduce: &[InvocationMetrics],
    ) -> Self {
        let m = PhaseMetrics::from_invocations(map);
        let r = PhaseMetrics::from_invocations(reduce);
        let mut report = ComplexityReport::empty(mode, num_mappers, num_reducers);
        report.map_key_cx = m.key;
        report.reduce_key_cx = r.key;
        report.sequential = m.sequential.merge(r.sequential);
        report
    }

    pub fn skew(&self) -> SkewReport {
        skew(&self.reduce_record_sizes)
    }

    /// Canonical machine document: one `field=value` line per metric.
    pub fn to_document(&self) -> FlatDoc {
        let mut d = FlatDoc::new("complexity-report");
        d.push("mode", self.mode.as_str());
        d.push("num_mappers", self.num_mappers);
        d.push("num_reducers", self.num_reducers);
        for (prefix, k) in [("map_key_cx", &self.map_key_cx), ("reduce_key_cx", &self.reduce_key_cx)] {
            d.push(format!("{prefix}.max_pair_size_bytes"), k.max_pair_size_bytes);
            d.push(format!("{prefix}.max_cost_units"), k.max_cost_units);
            d.push(format!("{prefix}.max_memory_bytes"), k.max_memory_bytes);
        }
        d.push("sequential.total_io_bytes", self.sequential.total_io_bytes);
        d.push("sequential.total_cost_units", self.sequential.total_cost_units);
        d.push("shuffle_bytes", self.shuffle_bytes);
        d.push(
            "total_streaming_reducer_memory",
            self.total_streaming_reducer_memory
                .map_or_else(|| "-".to_string(), |v| v.to_string()),
        );
        let skew = self.skew();
        d.push("skew.max_record_size", skew.max_record_size);
        d.push("skew.mean_record_size", skew.mean_record_size);
        d.push("skew.skew_ratio", skew.skew_ratio);
        d.push(
            "skew.heaviest_key",
            skew.heaviest_key.as_ref().map_or_else(String::new, Datum::to_hex),
        );
        d.push("reduce_record_count", self.reduce_record_sizes.len());
        d.push("reduce_record_sizes", join(self.reduce_record_sizes.iter().map(|r| r.size_bytes)));
        d.push(
            "reduce_record_value_counts",
            join(self.reduce_record_sizes.iter().map(|r| r.value_count)),
        );
        d.push(
            "reduce_record_keys",
            join(self.reduce_record_sizes.iter().map(|r| r.key.to_hex())),
        );
        d
    }

    pub fn from_document(d: &FlatDoc) -> Result<Self, DocError> {
        d.expect_kind("complexity-report")?;
        let mode = match d.get("mode")? {
            "batched" => ReducerMode::Batched,
            "streaming" => ReducerMode::Streaming,
            other => return Err(d.invalid("mode", other)),
        };
        let key_cx = |prefix: &str| -> Result<KeyComplexity, DocError> {
            Ok(KeyComplexity {
                max_pair_size_bytes: d.parse(&format!("{prefix}.max_pair_size_bytes"))?,
                max_cost_units: d.parse(&format!("{prefix}.max_cost_units"))?,
                max_memory_bytes: d.parse(&format!("{prefix}.max_memory_bytes"))?,
            })
        };
        let sizes: Vec<u64> = d.parse_list("reduce_record_sizes")?;
        let counts: Vec<u64> = d.parse_list("reduce_record_value_counts")?;
        let keys: Vec<String> = d.parse_list("reduce_record_keys")?;
        if sizes.len() != counts.len() || sizes.len() != keys.len() {
            return Err(d.invalid("reduce_record_sizes", "list lengths disagree"));
        }
        let mut records = Vec::with_capacity(sizes.len());
        for ((size_bytes, value_count), key) in sizes.into_iter().zip(counts).zip(keys) {
            let key = Datum::from_hex(&key).ok_or_else(|| d.invalid("reduce_record_keys", &key))?;
            records.push(RecordSize {
                key,
                size_bytes,
                value_count,
            });
        }
        let total_streaming_reducer_memory = match d.get("total_streaming_reducer_memory")? {
            "-" => None,
            _ => Some(d.parse("total_streaming_reducer_memory")?),
        };
        Ok(ComplexityReport {
            mode,
            num_mappers: d.parse("num_mappers")?,
            num_reducers: d.parse("num_reducers")?,
            map_key_cx: key_cx("map_key_cx")?,
            reduce_key_cx: key_cx("reduce_key_cx")?,
            sequential: SequentialComplexity {
                total_io_bytes: d.parse("sequential.total_io_bytes")?,
                total_cost_units: d.parse("sequential.total_cost_units")?,
            },
            shuffle_bytes: d.parse("shuffle_bytes")?,
            reduce_record_sizes: records,
            total_streaming_reducer_memory,
        })
    }
}

fn join<T: ToString>(it: impl Iterator<Item = T>) -> String {
    it.map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// "Curse of the last reducer" summary of reduce record sizes.
#[derive(Clone, Debug, PartialEq)]
pub struct SkewReport {
    pub max_record_size: u64,
    pub mean_record_size: f64,
    /// max / mean, or 0 when there are no records.
    pub skew_ratio: f64,
    pub heaviest_key: Option<Datum>,
}

/// Ties on the largest size go to the lexicographically smallest key.
pub fn skew(records: &[RecordSize]) -> SkewReport {
    let Some(heaviest) = records.iter().min_by(|a, b| {
        b.size_bytes
            .cmp(&a.size_bytes)
            .then_with(|| a.key.as_bytes().cmp(b.key.as_bytes()))
    }) else {
        return SkewReport {
            max_record_size: 0,
            mean_record_size: 0.0,
            skew_ratio: 0.0,
            heaviest_key: None,
        };
    };
    let total: u64 = records.iter().map(|r| r.size_bytes).sum();
    let mean = total as f64 / records.len() as f64;
    SkewReport {
        max_record_size: heaviest.size_bytes,
        mean_record_size: mean,
        skew_ratio: if mean > 0.0 {
            heaviest.size_bytes as f64 / mean
        } else {
            // all records empty-sized: uniform
            1.0
        },
        heaviest_key: Some(heaviest.key.clone()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rs(key: &str, size: u64) -> RecordSize {
        RecordSize {
            key: Datum::text(key),
            size_bytes: size,
            value_count: 1,
        }
    }

    #[test]
    fn zero_invocation() {
        let m = meter_invocation(&[], &[], 0, MemoryProfile::Batched).unwrap();
        assert_eq!((m.io_bytes, m.cost_units, m.memory_bytes), (0, 0, 0));
    }

    #[test]
    fn io_and_cost_arithmetic() {
        let m = meter_invocation(&[10], &[5], 7, MemoryProfile::Batched).unwrap();
        assert_eq!(m.io_bytes, 15);
        assert_eq!(m.cost_units, 22);
        assert_eq!(m.pair_size_bytes, 10);
    }

    #[test]
    fn negative_work_rejected() {
        assert_eq!(
            meter_invocation(&[1], &[1], -1, MemoryProfile::Batched),
            Err(MeterError::NegativeWork(-1))
        );
    }

    #[test]
    fn batched_sum_memory_from_serialization_rules() {
        // 1-byte key, one hundred 8-byte integers
        let mut inputs = vec![Datum::text("x").size_bytes()];
        inputs.extend((1..=100).map(|v| Datum::from_i64(v).size_bytes()));
        let m = meter_invocation(&inputs, &[9], 0, MemoryProfile::Batched).unwrap();
        assert_eq!(m.memory_bytes, 1 + 800);
    }

    #[test]
    fn streaming_and_mapper_profiles() {
        let s = meter_invocation(&[1, 8, 8, 8], &[9], 0, MemoryProfile::Streaming { peak_step_bytes: 16 })
            .unwrap();
        assert_eq!(s.memory_bytes, 16);
        let m = meter_invocation(&[8, 20], &[9, 9, 9], 0, MemoryProfile::Mapper { peak_held_output: 9 })
            .unwrap();
        assert_eq!(m.memory_bytes, 37);
        assert_eq!(m.pair_size_bytes, 28);
    }

    #[test]
    fn empty_aggregate_is_zero() {
        let r = ComplexityReport::aggregate(ReducerMode::Batched, 1, 1, &[], &[]);
        assert_eq!(r.map_key_cx, KeyComplexity::default());
        assert_eq!(r.reduce_key_cx, KeyComplexity::default());
        assert_eq!(r.sequential, SequentialComplexity::default());
    }

    #[test]
    fn max_and_sum_of_costs() {
        let a = InvocationMetrics {
            cost_units: 3,
            ..Default::default()
        };
        let b = InvocationMetrics {
            cost_units: 9,
            ..Default::default()
        };
        let r = ComplexityReport::aggregate(ReducerMode::Batched, 1, 1, &[a], &[b]);
        assert_eq!(r.map_key_cx.max_cost_units, 3);
        assert_eq!(r.reduce_key_cx.max_cost_units, 9);
        assert_eq!(r.sequential.total_cost_units, 12);
        let p = PhaseMetrics::from_invocations(&[a, b]);
        assert_eq!(p.key.max_cost_units, 9);
        assert_eq!(p.sequential.total_cost_units, 12);
    }

    #[test]
    fn skew_examples() {
        let s = skew(&[rs("a", 10), rs("b", 10), rs("c", 10)]);
        assert_eq!(s.skew_ratio, 1.0);
        assert_eq!(s.heaviest_key, Some(Datum::text("a")));
        let s = skew(&[rs("b", 10), rs("z", 100), rs("c", 10)]);
        assert_eq!(s.skew_ratio, 2.5);
        assert_eq!(s.heaviest_key, Some(Datum::text("z")));
        let s = skew(&[]);
        assert_eq!(s.skew_ratio, 0.0);
        assert_eq!(s.heaviest_key, None);
    }

    #[test]
    fn skew_ties_pick_smallest_key() {
        let s = skew(&[rs("m", 50), rs("b", 50), rs("x", 1)]);
        assert_eq!(s.heaviest_key, Some(Datum::text("b")));
    }

    #[test]
    fn report_document_round_trips() {
        let mut r = ComplexityReport::empty(ReducerMode::Streaming, 4, 3);
        r.map_key_cx = KeyComplexity {
            max_pair_size_bytes: 10,
            max_cost_units: 30,
            max_memory_bytes: 20,
        };
        r.sequential.total_io_bytes = 1234;
        r.sequential.total_cost_units = 1300;
        r.shuffle_bytes = 99;
        r.total_streaming_reducer_memory = Some(48);
        r.reduce_record_sizes = vec![rs("a", 17), rs("bb", 34)];
        let text = r.to_document().render();
        let back = ComplexityReport::from_document(&text.parse::<FlatDoc>().unwrap()).unwrap();
        assert_eq!(back, r);
        assert!(text.contains("reduce_key_cx.max_memory_bytes=0\n"));
    }

    fn arb_invocation() -> impl Strategy<Value = InvocationMetrics> {
        (0u64..1000, 0u64..1000, 0u64..100, 0u64..1000).prop_map(|(p, io, extra, mem)| InvocationMetrics {
            pair_size_bytes: p,
            io_bytes: io,
            cost_units: io + extra,
            memory_bytes: mem,
        })
    }

    proptest! {
        #[test]
        fn merge_is_associative_and_commutative(
            a in proptest::collection::vec(arb_invocation(), 0..6),
            b in proptest::collection::vec(arb_invocation(), 0..6),
            c in proptest::collection::vec(arb_invocation(), 0..6),
        ) {
            let (pa, pb, pc) = (
                PhaseMetrics::from_invocations(&a),
                PhaseMetrics::from_invocations(&b),
                PhaseMetrics::from_invocations(&c),
            );
            prop_assert_eq!(pa.merge(pb).merge(pc), pa.merge(pb.merge(pc)));
            prop_assert_eq!(pa.merge(pb), pb.merge(pa));
            let all: Vec<_> = a.iter().chain(&b).chain(&c).copied().collect();
            prop_assert_eq!(pa.merge(pb).merge(pc), PhaseMetrics::from_invocations(&all));
        }

        #[test]
        fn absorbing_never_decreases(
            base in proptest::collection::vec(arb_invocation(), 0..8),
            extra in arb_invocation(),
        ) {
            let before = PhaseMetrics::from_invocations(&base);
            let mut after = before;
            after.absorb(&extra);
            prop_assert!(after.key.max_pair_size_bytes >= before.key.max_pair_size_bytes);
            prop_assert!(after.key.max_cost_units >= before.key.max_cost_units);
            prop_assert!(after.key.max_memory_bytes >= before.key.max_memory_bytes);
            prop_assert!(after.sequential.total_io_bytes >= before.sequential.total_io_bytes);
            prop_assert!(after.sequential.total_cost_units >= before.sequential.total_cost_units);
        }

        #[test]
        fn skew_ratio_at_least_one(sizes in proptest::collection::vec(1u64..10_000, 1..50)) {
            let recs: Vec<_> = sizes.iter().enumerate().map(|(i, &s)| rs(&format!("k{i}"), s)).collect();
            let s = skew(&recs);
            prop_assert!(s.skew_ratio >= 1.0 - 1e-12);
            prop_assert_eq!(s.max_record_size, *sizes.iter().max().unwrap());
        }

        #[test]
        fn cost_dominates_io(
            ins in proptest::collection::vec(0u64..500, 0..5),
            outs in proptest::collection::vec(0u64..500, 0..5),
            extra in 0i64..1000,
        ) {
            let m = meter_invocation(&ins, &outs, extra, MemoryProfile::Batched).unwrap();
            prop_assert!(m.cost_units >= m.io_bytes);
        }
    }
}
