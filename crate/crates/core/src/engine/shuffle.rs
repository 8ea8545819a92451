use std::collections::BTreeMap;
use std::hash::Hasher;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use siphasher::sip::SipHasher13;

use super::datum::{Datum, KVPair, ReduceRecord};
use super::executor::Executor;
use super::job::ClusterConfig;

const PARTITION_SALT: u64 = 0x6d72_6d65_7465_7231;
const PERMUTE_SALT: u64 = 0x7065_726d_7574_6531;

fn keyed_hash(seed: u64, salt: u64, bytes: &[u8]) -> u64 {
    let mut h = SipHasher13::new_with_keys(seed, salt);
    h.write(bytes);
    h.finish()
}

/// Destination reducer of a key: seeded SipHash of the key bytes modulo the
/// reducer count. Keys land independently of one another.
pub fn reducer_for(key: &Datum, cluster: &ClusterConfig) -> usize {
    (keyed_hash(cluster.shuffle_seed(), PARTITION_SALT, key.as_bytes()) % cluster.num_reducers() as u64) as usize
}

/// Reorders a record's values by a permutation derived from (seed, key).
pub(crate) fn permute_values(key: &Datum, values: &mut [Datum], seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(keyed_hash(seed, PERMUTE_SALT, key.as_bytes()));
    values.shuffle(&mut rng);
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShuffleOutput {
    /// One inbox per reducer, records sorted by key bytes.
    pub inboxes: Vec<Vec<ReduceRecord>>,
    pub shuffle_bytes: u64,
}

pub fn shuffle(map_outputs: Vec<Vec<KVPair>>, cluster: &ClusterConfig) -> ShuffleOutput {
    shuffle_with(Executor::Sequential, map_outputs, cluster)
}

pub fn shuffle_with(executor: Executor, map_outputs: Vec<Vec<KVPair>>, cluster: &ClusterConfig) -> ShuffleOutput {
    let reducers = cluster.num_reducers();
    let shuffle_bytes = map_outputs
        .iter()
        .flatten()
        .map(KVPair::size_bytes)
        .sum();

    // Route each mapper's output into per-reducer buckets.
    let routed: Vec<Vec<Vec<KVPair>>> = executor.map_indexed(map_outputs, |_, pairs| {
        let mut buckets = vec![Vec::new(); reducers];
        for p in pairs {
            buckets[reducer_for(&p.key, cluster)].push(p);
        }
        buckets
    });

    // Transpose to reducer-major, keeping mapper order within each reducer.
    let mut per_reducer: Vec<Vec<Vec<KVPair>>> = (0..reducers).map(|_| Vec::new()).collect();
    for buckets in routed {
        for (j, bucket) in buckets.into_iter().enumerate() {
            per_reducer[j].push(bucket);
        }
    }

    let seed = cluster.shuffle_seed();
    let inboxes = executor.map_indexed(per_reducer, |_, from_mappers| {
        let mut groups: BTreeMap<Datum, Vec<Datum>> = BTreeMap::new();
        for pair in from_mappers.into_iter().flatten() {
            groups.entry(pair.key).or_default().push(pair.value);
        }
        groups
            .into_iter()
            .map(|(key, mut values)| {
                permute_values(&key, &mut values, seed);
                ReduceRecord { key, values }
            })
            .collect()
    });

    ShuffleOutput {
        inboxes,
        shuffle_bytes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(k: &str, v: &str) -> KVPair {
        KVPair::new(k, v)
    }

    #[test]
    fn empty_input_gives_empty_inboxes() {
        let c = ClusterConfig::new(2, 4, 1).unwrap();
        let out = shuffle(vec![vec![], vec![]], &c);
        assert_eq!(out.inboxes.len(), 4);
        assert!(out.inboxes.iter().all(Vec::is_empty));
        assert_eq!(out.shuffle_bytes, 0);
    }

    #[test]
    fn groups_by_key() {
        let c = ClusterConfig::new(1, 2, 7).unwrap();
        let out = shuffle(vec![vec![pair("x", "a"), pair("x", "b"), pair("y", "c")]], &c);
        let mut records: Vec<ReduceRecord> = out.inboxes.into_iter().flatten().collect();
        records.sort_by(|a, b| a.key.cmp(&b.key));
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].key, Datum::text("x"));
        let mut xs = records[0].values.clone();
        xs.sort();
        assert_eq!(xs, vec![Datum::text("a"), Datum::text("b")]);
        assert_eq!(records[1].values, vec![Datum::text("c")]);
        assert_eq!(out.shuffle_bytes, 6);
    }

    #[test]
    fn routing_depends_on_seed_not_arrival() {
        let key = Datum::text("hello");
        let c = ClusterConfig::new(1, 1000, 3).unwrap();
        assert_eq!(reducer_for(&key, &c), reducer_for(&key, &c));
        let moved = (0..16u64)
            .map(|s| reducer_for(&key, &c.with_seed(s)))
            .collect::<std::collections::HashSet<_>>();
        assert!(moved.len() > 1);
    }

    #[test]
    fn value_order_is_seed_permuted() {
        let values: Vec<KVPair> = (0..64).map(|i| KVPair::new("k", Datum::from_i64(i))).collect();
        let arrival: Vec<Datum> = values.iter().map(|p| p.value.clone()).collect();
        let orders: Vec<Vec<Datum>> = (0..4u64)
            .map(|s| {
                let c = ClusterConfig::new(1, 1, s).unwrap();
                shuffle(vec![values.clone()], &c).inboxes[0][0].values.clone()
            })
            .collect();
        assert!(orders.iter().any(|o| *o != arrival));
        assert!(orders.windows(2).any(|w| w[0] != w[1]));
    }

    #[test]
    fn parallel_matches_sequential() {
        let c = ClusterConfig::new(3, 5, 11).unwrap();
        let outputs: Vec<Vec<KVPair>> = (0..3)
            .map(|m| (0..200).map(|i| KVPair::new(format!("k{}", (i * 7 + m) % 37).as_str(), Datum::from_i64(i))).collect())
            .collect();
        assert_eq!(
            shuffle_with(Executor::Sequential, outputs.clone(), &c),
            shuffle_with(Executor::Parallel, outputs, &c)
        );
    }
}
