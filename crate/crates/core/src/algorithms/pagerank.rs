//! One PageRank iteration per MapReduce job.
//!
//! Input records are edges keyed by source node, each annotated with the
//! source's out-degree and current rank. Map sends `damping * rank / outdeg`
//! to the destination. Reduce at node `v` sums what arrived and adds the
//! teleport term `(1 - damping) / N`.
//!
//! With [`RankOutput::WithEdges`] the map also passes each edge back to its
//! source node, and the reducer re-emits those edges annotated with the new
//! rank, so the output of one iteration is the input of the next. A
//! streaming reducer cannot know the new rank before its last value, so in
//! that layout it buffers the node's out-links in its state. With
//! [`RankOutput::RanksOnly`] the reducer keeps just the running sum.
//!
//! Contributions are carried as unsigned fixed point with [`FIXED_SCALE`]
//! units per 1.0. Integer addition makes the sum independent of the order
//! in which the shuffle delivers values.

use std::sync::Arc;

use thiserror::Error;

use crate::engine::{
    BatchedReduce, ClusterConfig, Datum, DecodeError, Emitter, Engine, EngineError, JobSpec, KVPair, MapUdf,
    PipelineRun, RecordKind, ReduceUdf, ReducerMode, StreamingReduce, UdfError,
};

pub const PAGERANK_STATE: RecordKind = RecordKind("pagerank-state");
pub const RANKS: RecordKind = RecordKind("ranks");

/// 2^56 fixed-point units per unit of rank.
pub const FIXED_SCALE: f64 = (1u64 << 56) as f64;

pub type NodeId = u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AnnotatedEdge {
    pub src: NodeId,
    pub dst: NodeId,
    pub src_outdeg: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankEntry {
    pub node: NodeId,
    pub rank: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DanglingPolicy {
    /// Mass sitting on nodes without out-edges leaves the system.
    #[default]
    Drop,
    /// That mass is spread evenly over all nodes.
    Redistribute,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RankOutput {
    #[default]
    WithEdges,
    RanksOnly,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PageRankParams {
    pub damping: f64,
    pub num_nodes: u64,
    pub dangling: DanglingPolicy,
    /// Total rank on dangling nodes entering this iteration; used only by
    /// [`DanglingPolicy::Redistribute`].
    pub dangling_mass: f64,
    pub output: RankOutput,
}

impl PageRankParams {
    pub fn new(num_nodes: u64) -> Self {
        PageRankParams {
            damping: 0.85,
            num_nodes,
            dangling: DanglingPolicy::Drop,
            dangling_mass: 0.0,
            output: RankOutput::WithEdges,
        }
    }

    /// Rank of a node that receives nothing this iteration.
    pub fn base_rank(&self) -> f64 {
        let n = self.num_nodes as f64;
        let mut r = (1.0 - self.damping) / n;
        if self.dangling == DanglingPolicy::Redistribute {
            r += self.damping * self.dangling_mass / n;
        }
        r
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PageRankError {
    #[error("damping must lie in [0, 1], got {0}")]
    Damping(f64),
    #[error("graph must have at least one node")]
    NoNodes,
    #[error("edge {src}->{dst} has out-degree 0")]
    ZeroOutDegree { src: NodeId, dst: NodeId },
    #[error("edge {src}->{dst} references a node outside 0..{num_nodes}")]
    NodeRange { src: NodeId, dst: NodeId, num_nodes: u64 },
    #[error("rank vector has {found} entries, graph has {expected} nodes")]
    RankLength { expected: u64, found: usize },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("malformed pagerank output: {0}")]
    Output(String),
}

/// Values exchanged by the PageRank job.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PrValue {
    /// Input edge `key -> dst` annotated with the key node's out-degree and rank.
    Edge { dst: NodeId, src_outdeg: u64, src_rank: f64 },
    /// Rank flowing along one edge, fixed point.
    Contribution(u64),
    /// Structural pass-through of an out-edge back to its source.
    Link { dst: NodeId, src_outdeg: u64 },
    /// A node's rank after the iteration.
    Rank { rank: f64, dangling: bool },
}

const TAG_EDGE: u8 = b'E';
const TAG_CONTRIB: u8 = b'C';
const TAG_LINK: u8 = b'L';
const TAG_RANK: u8 = b'R';

impl PrValue {
    pub fn encode(&self) -> Datum {
        let mut b = Vec::with_capacity(25);
        match *self {
            PrValue::Edge { dst, src_outdeg, src_rank } => {
                b.push(TAG_EDGE);
                b.extend_from_slice(&dst.to_be_bytes());
                b.extend_from_slice(&src_outdeg.to_be_bytes());
                b.extend_from_slice(&src_rank.to_bits().to_be_bytes());
            }
            PrValue::Contribution(units) => {
                b.push(TAG_CONTRIB);
                b.extend_from_slice(&units.to_be_bytes());
            }
            PrValue::Link { dst, src_outdeg } => {
                b.push(TAG_LINK);
                b.extend_from_slice(&dst.to_be_bytes());
                b.extend_from_slice(&src_outdeg.to_be_bytes());
            }
            PrValue::Rank { rank, dangling } => {
                b.push(TAG_RANK);
                b.extend_from_slice(&rank.to_bits().to_be_bytes());
                b.push(dangling as u8);
            }
        }
        Datum::new(b)
    }

    pub fn decode(d: &Datum) -> Result<PrValue, DecodeError> {
        let b = d.as_bytes();
        let (&tag, rest) = b.split_first().ok_or(DecodeError::Truncated { need: 1, have: 0 })?;
        let word = |i: usize| -> u64 { u64::from_be_bytes(rest[i * 8..i * 8 + 8].try_into().unwrap()) };
        let need = |n: usize| {
            if rest.len() == n {
                Ok(())
            } else {
                Err(DecodeError::Width {
                    expected: n + 1,
                    found: b.len(),
                })
            }
        };
        match tag {
            TAG_EDGE => need(24).map(|_| PrValue::Edge {
                dst: word(0),
                src_outdeg: word(1),
                src_rank: f64::from_bits(word(2)),
            }),
            TAG_CONTRIB => need(8).map(|_| PrValue::Contribution(word(0))),
            TAG_LINK => need(16).map(|_| PrValue::Link {
                dst: word(0),
                src_outdeg: word(1),
            }),
            TAG_RANK => need(9).map(|_| PrValue::Rank {
                rank: f64::from_bits(word(0)),
                dangling: rest[8] != 0,
            }),
            other => Err(DecodeError::Tag(other)),
        }
    }
}

fn to_fixed(x: f64) -> Result<u64, UdfError> {
    let units = (x * FIXED_SCALE).round();
    if !(0.0..=u64::MAX as f64).contains(&units) {
        return Err(UdfError::new(format!("contribution {x} outside fixed-point range")));
    }
    Ok(units as u64)
}

fn from_fixed(units: u64) -> f64 {
    units as f64 / FIXED_SCALE
}

struct ContributeMap {
    params: PageRankParams,
}

impl MapUdf for ContributeMap {
    fn map(&self, record: &KVPair, out: &mut Emitter) -> Result<(), UdfError> {
        match PrValue::decode(&record.value)? {
            PrValue::Edge { dst, src_outdeg, src_rank } => {
                if src_outdeg == 0 {
                    return Err(UdfError::new(format!("edge to {dst} has out-degree 0")));
                }
                let share = self.params.damping * src_rank / src_outdeg as f64;
                out.emit(Datum::from_u64(dst), PrValue::Contribution(to_fixed(share)?).encode());
                if self.params.output == RankOutput::WithEdges {
                    out.emit(record.key.clone(), PrValue::Link { dst, src_outdeg }.encode());
                }
                Ok(())
            }
            // ranks from the previous iteration are recomputed, not forwarded
            PrValue::Rank { .. } => Ok(()),
            other => Err(UdfError::new(format!("unexpected map input {other:?}"))),
        }
    }
}

struct RankReduce {
    params: PageRankParams,
}

impl RankReduce {
    fn emit_node(&self, key: &Datum, units: u64, links: &[(NodeId, u64)], out: &mut Emitter) {
        let rank = self.params.base_rank() + from_fixed(units);
        let dangling = self.params.output == RankOutput::WithEdges && links.is_empty();
        out.emit(key.clone(), PrValue::Rank { rank, dangling }.encode());
        for &(dst, src_outdeg) in links {
            out.emit(
                key.clone(),
                PrValue::Edge {
                    dst,
                    src_outdeg,
                    src_rank: rank,
                }
                .encode(),
            );
        }
    }
}

fn add_units(a: u64, b: u64) -> Result<u64, UdfError> {
    a.checked_add(b)
        .ok_or_else(|| UdfError::new("rank sum overflow"))
}

impl BatchedReduce for RankReduce {
    fn reduce(&self, key: &Datum, values: &[Datum], out: &mut Emitter) -> Result<(), UdfError> {
        let mut units = 0u64;
        let mut links = Vec::new();
        for v in values {
            match PrValue::decode(v)? {
                PrValue::Contribution(c) => units = add_units(units, c)?,
                PrValue::Link { dst, src_outdeg } => links.push((dst, src_outdeg)),
                other => return Err(UdfError::new(format!("unexpected reduce value {other:?}"))),
            }
        }
        links.sort_unstable();
        self.emit_node(key, units, &links, out);
        Ok(())
    }
}

/// State layout: 8-byte fixed-point sum, then 16 bytes per buffered out-link.
impl StreamingReduce for RankReduce {
    fn init(&self, _key: &Datum) -> Datum {
        Datum::from_u64(0)
    }

    fn step(&self, _key: &Datum, state: Datum, value: &Datum, _out: &mut Emitter) -> Result<Datum, UdfError> {
        let mut bytes = state.into_bytes();
        match PrValue::decode(value)? {
            PrValue::Contribution(c) => {
                let sum = add_units(u64::from_be_bytes(bytes[..8].try_into().unwrap()), c)?;
                bytes[..8].copy_from_slice(&sum.to_be_bytes());
            }
            PrValue::Link { dst, src_outdeg } => {
                bytes.extend_from_slice(&dst.to_be_bytes());
                bytes.extend_from_slice(&src_outdeg.to_be_bytes());
            }
            other => return Err(UdfError::new(format!("unexpected reduce value {other:?}"))),
        }
        Ok(Datum::new(bytes))
    }

    fn finish(&self, key: &Datum, state: Datum, out: &mut Emitter) -> Result<(), UdfError> {
        let b = state.as_bytes();
        let units = u64::from_be_bytes(b[..8].try_into().unwrap());
        let mut links: Vec<(NodeId, u64)> = b[8..]
            .chunks_exact(16)
            .map(|c| {
                (
                    u64::from_be_bytes(c[..8].try_into().unwrap()),
                    u64::from_be_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect();
        links.sort_unstable();
        self.emit_node(key, units, &links, out);
        Ok(())
    }
}

pub fn pagerank_iteration_job(
    mode: ReducerMode,
    cluster: ClusterConfig,
    params: PageRankParams,
) -> Result<JobSpec, PageRankError> {
    if !(0.0..=1.0).contains(&params.damping) {
        return Err(PageRankError::Damping(params.damping));
    }
    if params.num_nodes == 0 {
        return Err(PageRankError::NoNodes);
    }
    let reduce = match mode {
        ReducerMode::Batched => ReduceUdf::Batched(Arc::new(RankReduce { params })),
        ReducerMode::Streaming => ReduceUdf::Streaming(Arc::new(RankReduce { params })),
    };
    let output_kind = match params.output {
        RankOutput::WithEdges => PAGERANK_STATE,
        RankOutput::RanksOnly => RANKS,
    };
    Ok(JobSpec::new("pagerank", Arc::new(ContributeMap { params }), reduce, cluster)
        .with_kinds(PAGERANK_STATE, output_kind))
}

/// Builds iteration input: one record per edge, annotated with `ranks[src]`.
pub fn pagerank_input(edges: &[AnnotatedEdge], ranks: &[f64], num_nodes: u64) -> Result<Vec<KVPair>, PageRankError> {
    if ranks.len() as u64 != num_nodes {
        return Err(PageRankError::RankLength {
            expected: num_nodes,
            found: ranks.len(),
        });
    }
    edges
        .iter()
        .map(|e| {
            if e.src_outdeg == 0 {
                return Err(PageRankError::ZeroOutDegree { src: e.src, dst: e.dst });
            }
            if e.src >= num_nodes || e.dst >= num_nodes {
                return Err(PageRankError::NodeRange {
                    src: e.src,
                    dst: e.dst,
                    num_nodes,
                });
            }
            Ok(KVPair::new(
                Datum::from_u64(e.src),
                PrValue::Edge {
                    dst: e.dst,
                    src_outdeg: e.src_outdeg,
                    src_rank: ranks[e.src as usize],
                }
                .encode(),
            ))
        })
        .collect()
}

/// Dense rank vector from job output. Nodes without a rank record get `base_rank`.
pub fn ranks_from_outputs(outputs: &[KVPair], num_nodes: u64, base_rank: f64) -> Result<Vec<f64>, PageRankError> {
    let mut ranks = vec![base_rank; num_nodes as usize];
    for p in outputs {
        let v = PrValue::decode(&p.value).map_err(|e| PageRankError::Output(e.to_string()))?;
        if let PrValue::Rank { rank, .. } = v {
            let node = p.key.as_u64().map_err(|e| PageRankError::Output(e.to_string()))?;
            let slot = ranks
                .get_mut(node as usize)
                .ok_or_else(|| PageRankError::Output(format!("node {node} out of range")))?;
            *slot = rank;
        }
    }
    Ok(ranks)
}

/// Rank held by nodes flagged dangling in a `WithEdges` output.
pub fn dangling_mass_from_outputs(outputs: &[KVPair]) -> Result<f64, PageRankError> {
    let mut mass = 0.0;
    for p in outputs {
        if let PrValue::Rank { rank, dangling: true } =
            PrValue::decode(&p.value).map_err(|e| PageRankError::Output(e.to_string()))?
        {
            mass += rank;
        }
    }
    Ok(mass)
}

pub fn dangling_mass(edges: &[AnnotatedEdge], ranks: &[f64]) -> f64 {
    let mut has_out = vec![false; ranks.len()];
    for e in edges {
        if let Some(slot) = has_out.get_mut(e.src as usize) {
            *slot = true;
        }
    }
    ranks
        .iter()
        .zip(has_out)
        .filter(|(_, out)| !out)
        .map(|(r, _)| r)
        .sum()
}

#[derive(Clone, Debug)]
pub struct PageRankRun {
    pub ranks: Vec<f64>,
    pub pipeline: PipelineRun,
}

/// Runs `iterations` chained jobs from `initial` ranks. Under
/// [`DanglingPolicy::Redistribute`] the dangling mass for each stage is
/// read from the previous stage's output before the stage is configured.
pub fn run_pagerank(
    engine: &Engine,
    edges: &[AnnotatedEdge],
    initial: &[f64],
    iterations: usize,
    mode: ReducerMode,
    cluster: ClusterConfig,
    params: PageRankParams,
) -> Result<PageRankRun, PageRankError> {
    let params = PageRankParams {
        output: RankOutput::WithEdges,
        ..params
    };
    let mut data = pagerank_input(edges, initial, params.num_nodes)?;
    let mut mass = dangling_mass(edges, initial);
    let mut reports = Vec::with_capacity(iterations);
    let mut logs = Vec::with_capacity(iterations);
    let mut ranks = initial.to_vec();
    for _ in 0..iterations {
        let stage = PageRankParams {
            dangling_mass: mass,
            ..params
        };
        let job = pagerank_iteration_job(mode, cluster, stage)?;
        let run = engine.run_job(&data, &job)?;
        ranks = ranks_from_outputs(&run.outputs, params.num_nodes, stage.base_rank())?;
        // nodes with no edges at all never produce a record, so add their share back
        mass = dangling_mass_from_outputs(&run.outputs)? + isolated_mass(edges, &ranks);
        data = run.outputs;
        reports.push(run.report);
        logs.push(run.log);
    }
    Ok(PageRankRun {
        ranks,
        pipeline: PipelineRun {
            outputs: data,
            reports,
            logs,
            phase_count: iterations,
        },
    })
}

fn isolated_mass(edges: &[AnnotatedEdge], ranks: &[f64]) -> f64 {
    let mut touched = vec![false; ranks.len()];
    for e in edges {
        touched[e.src as usize] = true;
        touched[e.dst as usize] = true;
    }
    ranks
        .iter()
        .zip(touched)
        .filter(|(_, t)| !t)
        .map(|(r, _)| r)
        .sum()
}
