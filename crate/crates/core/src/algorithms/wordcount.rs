//! Word Count: map emits `(word, 1)` per token, reduce sums.
//!
//! Documents arrive pre-tokenized; a document record is
//! `(doc_id, space-joined tokens)` and splitting on spaces is not metered
//! as extra work.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::engine::{
    BatchedReduce, ClusterConfig, Datum, Emitter, JobSpec, KVPair, MapUdf, RecordKind, ReduceUdf, ReducerMode,
    StreamingReduce, UdfError,
};

pub const DOCUMENT: RecordKind = RecordKind("document");
pub const WORD_COUNT: RecordKind = RecordKind("word-count");

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Document {
    pub doc_id: u64,
    pub tokens: Vec<Vec<u8>>,
}

impl Document {
    pub fn new(doc_id: u64, tokens: impl IntoIterator<Item = impl AsRef<[u8]>>) -> Self {
        Document {
            doc_id,
            tokens: tokens.into_iter().map(|t| t.as_ref().to_vec()).collect(),
        }
    }

    pub fn to_record(&self) -> KVPair {
        KVPair::new(Datum::from_u64(self.doc_id), Datum::new(self.tokens.join(&b' ')))
    }
}

pub fn documents_to_records(docs: &[Document]) -> Vec<KVPair> {
    docs.iter().map(Document::to_record).collect()
}

struct TokenMap;

impl MapUdf for TokenMap {
    fn map(&self, record: &KVPair, out: &mut Emitter) -> Result<(), UdfError> {
        for word in record.value.as_bytes().split(|&b| b == b' ').filter(|w| !w.is_empty()) {
            out.emit(Datum::from(word), Datum::from_i64(1));
        }
        Ok(())
    }
}

fn sum_counts(values: &[Datum]) -> Result<i64, UdfError> {
    values.iter().try_fold(0i64, |acc, v| {
        acc.checked_add(v.as_i64()?)
            .ok_or_else(|| UdfError::new("count overflow"))
    })
}

struct SumCombine;

impl crate::engine::CombineUdf for SumCombine {
    fn combine(&self, _key: &Datum, values: Vec<Datum>) -> Result<Vec<Datum>, UdfError> {
        Ok(vec![Datum::from_i64(sum_counts(&values)?)])
    }
}

struct CountReduce;

impl BatchedReduce for CountReduce {
    fn reduce(&self, key: &Datum, values: &[Datum], out: &mut Emitter) -> Result<(), UdfError> {
        out.emit(key.clone(), Datum::from_i64(sum_counts(values)?));
        Ok(())
    }
}

/// State is a single 8-byte counter.
impl StreamingReduce for CountReduce {
    fn init(&self, _key: &Datum) -> Datum {
        Datum::from_i64(0)
    }

    fn step(&self, _key: &Datum, state: Datum, value: &Datum, _out: &mut Emitter) -> Result<Datum, UdfError> {
        let n = state
            .as_i64()?
            .checked_add(value.as_i64()?)
            .ok_or_else(|| UdfError::new("count overflow"))?;
        Ok(Datum::from_i64(n))
    }

    fn finish(&self, key: &Datum, state: Datum, out: &mut Emitter) -> Result<(), UdfError> {
        out.emit(key.clone(), state);
        Ok(())
    }
}

pub fn word_count_job(mode: ReducerMode, cluster: ClusterConfig, use_combiner: bool) -> JobSpec {
    let reduce = match mode {
        ReducerMode::Batched => ReduceUdf::Batched(Arc::new(CountReduce)),
        ReducerMode::Streaming => ReduceUdf::Streaming(Arc::new(CountReduce)),
    };
    let job = JobSpec::new("wordcount", Arc::new(TokenMap), reduce, cluster).with_kinds(DOCUMENT, WORD_COUNT);
    if use_combiner {
        job.with_combiner(Arc::new(SumCombine))
    } else {
        job
    }
}

/// Decodes `(word, count)` outputs into a map ordered by word bytes.
pub fn counts_from_outputs(outputs: &[KVPair]) -> Result<BTreeMap<Vec<u8>, u64>, UdfError> {
    let mut counts = BTreeMap::new();
    for p in outputs {
        let n = p.value.as_i64()?;
        if n < 0 || counts.insert(p.key.as_bytes().to_vec(), n as u64).is_some() {
            return Err(UdfError::new(format!("bad word-count output for {}", p.key)));
        }
    }
    Ok(counts)
}
