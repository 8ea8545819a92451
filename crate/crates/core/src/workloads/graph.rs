use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::WorkloadError;
use crate::algorithms::AnnotatedEdge;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphModel {
    /// In- and out-degrees spread as evenly as possible, endpoints paired at
    /// random. Self-loops and parallel edges may occur.
    RegularIsh,
    /// Node 0 linked both ways to nodes `1..=max_degree`.
    Star,
    /// `i -> i + 1 (mod N)`.
    Cycle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GraphSpec {
    pub num_nodes: u64,
    /// Used by `RegularIsh`; the other models fix their own edge count.
    pub num_edges: u64,
    pub max_degree: u64,
    pub model: GraphModel,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GraphStats {
    pub num_nodes: u64,
    pub num_edges: u64,
    pub max_in_degree: u64,
    pub max_out_degree: u64,
    pub d_max: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    pub num_nodes: u64,
    pub edges: Vec<AnnotatedEdge>,
    pub stats: GraphStats,
}

pub fn degree_stats(num_nodes: u64, edges: &[AnnotatedEdge]) -> GraphStats {
    let mut ins = vec![0u64; num_nodes as usize];
    let mut outs = vec![0u64; num_nodes as usize];
    for e in edges {
        outs[e.src as usize] += 1;
        ins[e.dst as usize] += 1;
    }
    let max_in_degree = ins.into_iter().max().unwrap_or(0);
    let max_out_degree = outs.into_iter().max().unwrap_or(0);
    GraphStats {
        num_nodes,
        num_edges: edges.len() as u64,
        max_in_degree,
        max_out_degree,
        d_max: max_in_degree.max(max_out_degree),
    }
}

/// Annotates `(src, dst)` pairs with the true out-degree of each source.
pub fn annotate(num_nodes: u64, pairs: &[(u64, u64)]) -> Vec<AnnotatedEdge> {
    let mut outs = vec![0u64; num_nodes as usize];
    for &(s, _) in pairs {
        outs[s as usize] += 1;
    }
    pairs
        .iter()
        .map(|&(src, dst)| AnnotatedEdge {
            src,
            dst,
            src_outdeg: outs[src as usize],
        })
        .collect()
}

/// Checks every annotation against out-degrees recounted from the edge list.
pub fn validate_annotations(num_nodes: u64, edges: &[AnnotatedEdge]) -> Result<(), WorkloadError> {
    let mut outs = vec![0u64; num_nodes as usize];
    for e in edges {
        if e.src >= num_nodes || e.dst >= num_nodes {
            return Err(WorkloadError::Unsatisfiable(format!(
                "edge {}->{} outside 0..{num_nodes}",
                e.src, e.dst
            )));
        }
        outs[e.src as usize] += 1;
    }
    match edges.iter().find(|e| e.src_outdeg != outs[e.src as usize]) {
        Some(e) => Err(WorkloadError::Annotation {
            src: e.src,
            dst: e.dst,
            annotated: e.src_outdeg,
            actual: outs[e.src as usize],
        }),
        None => Ok(()),
    }
}

pub fn gen_graph(spec: &GraphSpec) -> Result<Graph, WorkloadError> {
    let n = spec.num_nodes;
    let d = spec.max_degree;
    if n == 0 {
        return Err(WorkloadError::Unsatisfiable("num_nodes must be at least 1".into()));
    }
    let pairs: Vec<(u64, u64)> = match spec.model {
        GraphModel::Cycle => {
            if d < 1 {
                return Err(WorkloadError::Unsatisfiable("cycle needs max_degree >= 1".into()));
            }
            (0..n).map(|i| (i, (i + 1) % n)).collect()
        }
        GraphModel::Star => {
            if n < d + 1 {
                return Err(WorkloadError::Unsatisfiable(format!(
                    "star with hub degree {d} needs num_nodes >= {}, got {n}",
                    d + 1
                )));
            }
            (1..=d).flat_map(|leaf| [(0, leaf), (leaf, 0)]).collect()
        }
        GraphModel::RegularIsh => {
            let m = spec.num_edges;
            if m > n.saturating_mul(d) {
                return Err(WorkloadError::Unsatisfiable(format!(
                    "num_edges {m} exceeds num_nodes * max_degree = {}",
                    n.saturating_mul(d)
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let stubs = |rng: &mut ChaCha8Rng| {
                let mut v: Vec<u64> = (0..m).map(|i| i % n).collect();
                v.shuffle(rng);
                v
            };
            let mut srcs = stubs(&mut rng);
            srcs.sort_unstable();
            let dsts = stubs(&mut rng);
            srcs.into_iter().zip(dsts).collect()
        }
    };
    let edges = annotate(n, &pairs);
    let stats = degree_stats(n, &edges);
    if stats.d_max > d {
        return Err(WorkloadError::Unsatisfiable(format!(
            "realized degree {} exceeds max_degree {d}",
            stats.d_max
        )));
    }
    Ok(Graph {
        num_nodes: n,
        edges,
        stats,
    })
}
