//! Independent oracles shared by the integration tests. None of these call
//! into the engine; they recompute results from first principles.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use mrmeter::algorithms::{AnnotatedEdge, Document};
use mrmeter::engine::{IdentityMap, IdentityReduce, ReduceUdf};
use mrmeter::{ClusterConfig, Datum, JobSpec, KVPair, ReducerMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Word frequencies from one pass over the tokens.
pub fn count_words(docs: &[Document]) -> BTreeMap<Vec<u8>, u64> {
    let mut counts = BTreeMap::new();
    for d in docs {
        for t in &d.tokens {
            *counts.entry(t.clone()).or_insert(0) += 1;
        }
    }
    counts
}

/// Sort all pairs by key and gather each key's values, values sorted.
pub fn sort_and_group(pairs: &[KVPair]) -> BTreeMap<Datum, Vec<Datum>> {
    let mut sorted = pairs.to_vec();
    sorted.sort();
    let mut groups: BTreeMap<Datum, Vec<Datum>> = BTreeMap::new();
    for p in sorted {
        groups.entry(p.key).or_default().push(p.value);
    }
    groups
}

/// One PageRank step as a dense matrix-vector product.
pub fn dense_pagerank_step(n: usize, edges: &[AnnotatedEdge], ranks: &[f64], damping: f64, redistribute: bool) -> Vec<f64> {
    let mut m = vec![vec![0.0f64; n]; n];
    let mut outdeg = vec![0usize; n];
    for e in edges {
        outdeg[e.src as usize] += 1;
    }
    for e in edges {
        m[e.dst as usize][e.src as usize] += 1.0 / outdeg[e.src as usize] as f64;
    }
    let dangling: f64 = (0..n).filter(|&i| outdeg[i] == 0).map(|i| ranks[i]).sum();
    let teleport = (1.0 - damping) / n as f64 + if redistribute { damping * dangling / n as f64 } else { 0.0 };
    (0..n)
        .map(|i| teleport + damping * (0..n).map(|j| m[i][j] * ranks[j]).sum::<f64>())
        .collect()
}

/// Random edges on `n` nodes with exact out-degree annotations.
pub fn random_graph(n: u64, m: usize, seed: u64) -> Vec<AnnotatedEdge> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(u64, u64)> = (0..m).map(|_| (rng.gen_range(0..n), rng.gen_range(0..n))).collect();
    let mut outdeg = vec![0u64; n as usize];
    for &(s, _) in &pairs {
        outdeg[s as usize] += 1;
    }
    pairs
        .into_iter()
        .map(|(src, dst)| AnnotatedEdge { src, dst, src_outdeg: outdeg[src as usize] })
        .collect()
}

/// `len` pairs over `keys` distinct short keys with random 0..16-byte values.
pub fn random_pairs(len: usize, keys: u64, seed: u64) -> Vec<KVPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| {
            let k = rng.gen_range(0..keys.max(1));
            let vlen = rng.gen_range(0..16);
            let v: Vec<u8> = (0..vlen).map(|_| rng.gen()).collect();
            KVPair::new(Datum::from_u64(k), Datum::new(v))
        })
        .collect()
}

pub fn identity_job(mode: ReducerMode, cluster: ClusterConfig) -> JobSpec {
    let reduce = match mode {
        ReducerMode::Batched => ReduceUdf::Batched(Arc::new(IdentityReduce)),
        ReducerMode::Streaming => ReduceUdf::Streaming(Arc::new(IdentityReduce)),
    };
    JobSpec::new("identity", Arc::new(IdentityMap), reduce, cluster)
}

pub fn sorted(mut pairs: Vec<KVPair>) -> Vec<KVPair> {
    pairs.sort();
    pairs
}
