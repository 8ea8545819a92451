use super::fit::{fit_power_law, max_min_ratio, span_decades};
use super::registry::{Check, ClaimId, Registry};
use super::ExperimentError;
use crate::algorithms::aggregate::{aggregation_job, numbers_to_records, AggregateOp};
use crate::algorithms::{documents_to_records, pagerank_input, pagerank_iteration_job, word_count_job, PageRankParams};
use crate::doc::FlatDoc;
use crate::engine::{ClusterConfig, Engine, Executor, ReducerMode};
use crate::metrics::ComplexityReport;
use crate::workloads::{gen_corpus, gen_graph, CorpusSpec, Distribution, GraphModel, GraphSpec};

/// Vocabulary used by the f_MAX sweeps; frequencies follow `f / rank`.
const FMAX_VOCAB: u64 = 50;
const FMAX_DOCS: u64 = 20;
const ZIPF_VOCAB: u64 = 1_000;
const TOKENS_PER_DOC: u64 = 100;
/// Average degree of the edge-count sweep; the degree cap is twice that.
const EDGES_PER_NODE: u64 = 4;
/// C8 uses a flat vocabulary so that every reducer receives keys.
const FLAT_VOCAB: u64 = 2_000;

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub claim: ClaimId,
    pub points: Vec<u64>,
    pub mode: ReducerMode,
    pub combiner: bool,
    /// Ignored by C6, whose parameter is the mapper count.
    pub mappers: usize,
    /// Ignored by C8, whose parameter is the reducer count.
    pub reducers: usize,
    pub seed: u64,
    /// Workload size for sweeps over cluster shape: input records for C6,
    /// corpus tokens for C8.
    pub scale: u64,
}

impl SweepSpec {
    /// The settings each claim is stated under, with the registry's default points.
    pub fn for_claim(claim: ClaimId, registry: &Registry) -> SweepSpec {
        let streaming = matches!(claim, ClaimId::C2 | ClaimId::C8);
        SweepSpec {
            claim,
            points: registry.entry(claim).default_points.to_vec(),
            mode: if streaming {
                ReducerMode::Streaming
            } else {
                ReducerMode::Batched
            },
            combiner: claim == ClaimId::C6,
            mappers: 4,
            reducers: 4,
            seed: 7,
            scale: match claim {
                ClaimId::C8 => 20_000,
                _ => 10_000,
            },
        }
    }

    pub fn with_points(mut self, points: Vec<u64>) -> Self {
        self.points = points;
        self
    }

    fn write_settings(&self, d: &mut FlatDoc) {
        d.push("claim", self.claim);
        d.push("mode", self.mode.as_str());
        d.push("combiner", self.combiner);
        d.push("mappers", self.mappers);
        d.push("reducers", self.reducers);
        d.push("seed", self.seed);
        d.push("scale", self.scale);
        d.push("points", join(&self.points));
    }

    fn read_settings(d: &FlatDoc) -> Result<SweepSpec, ExperimentError> {
        Ok(SweepSpec {
            claim: d.get("claim")?.parse()?,
            points: d.parse_list("points")?,
            mode: d.parse("mode")?,
            combiner: d.parse("combiner")?,
            mappers: d.parse("mappers")?,
            reducers: d.parse("reducers")?,
            seed: d.parse("seed")?,
            scale: d.parse("scale")?,
        })
    }
}

/// One tracked metric across a sweep, in parameter order.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingSeries {
    pub metric: String,
    /// `(realized parameter, metric value)`.
    pub points: Vec<(u64, u64)>,
    /// Absent when the fit is undefined (fewer than 2 points, a zero value,
    /// or a single repeated parameter).
    pub fitted_exponent: Option<f64>,
    pub fit_residual: Option<f64>,
}

impl ScalingSeries {
    pub fn new(metric: impl Into<String>, points: Vec<(u64, u64)>) -> Self {
        let xy: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x as f64, y as f64)).collect();
        let fit = fit_power_law(&xy).ok();
        ScalingSeries {
            metric: metric.into(),
            points,
            fitted_exponent: fit.map(|f| f.exponent),
            fit_residual: fit.map(|f| f.residual),
        }
    }

    pub fn params(&self) -> Vec<u64> {
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn values(&self) -> Vec<u64> {
        self.points.iter().map(|p| p.1).collect()
    }

    pub fn max_min_ratio(&self) -> Option<f64> {
        max_min_ratio(&self.values().iter().map(|&v| v as f64).collect::<Vec<_>>())
    }

    fn write(&self, d: &mut FlatDoc) {
        let m = &self.metric;
        d.push(format!("{m}.params"), join(&self.params()));
        d.push(format!("{m}.values"), join(&self.values()));
        d.push(format!("{m}.fitted_exponent"), opt(self.fitted_exponent));
        d.push(format!("{m}.fit_residual"), opt(self.fit_residual));
    }

    fn read(d: &FlatDoc, metric: &str) -> Result<ScalingSeries, ExperimentError> {
        let params: Vec<u64> = d.parse_list(&format!("{metric}.params"))?;
        let values: Vec<u64> = d.parse_list(&format!("{metric}.values"))?;
        if params.len() != values.len() {
            return Err(d.invalid(&format!("{metric}.values"), d.get(&format!("{metric}.values"))?).into());
        }
        Ok(ScalingSeries::new(metric, params.into_iter().zip(values).collect()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub series: Vec<ScalingSeries>,
}

impl SweepResult {
    pub fn to_document(&self) -> FlatDoc {
        let mut d = FlatDoc::new("scaling-series");
        self.spec.write_settings(&mut d);
        d.push("metrics", self.series.iter().map(|s| s.metric.as_str()).collect::<Vec<_>>().join(","));
        for s in &self.series {
            s.write(&mut d);
        }
        d
    }

    /// Fits are recomputed from the stored points rather than trusted.
    pub fn from_document(d: &FlatDoc) -> Result<SweepResult, ExperimentError> {
        d.expect_kind("scaling-series")?;
        let spec = SweepSpec::read_settings(d)?;
        let metrics: Vec<String> = d.parse_list("metrics")?;
        let series = metrics
            .iter()
            .map(|m| ScalingSeries::read(d, m))
            .collect::<Result<_, _>>()?;
        Ok(SweepResult { spec, series })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub claim: ClaimId,
    pub pass: bool,
    /// Why the claim failed; empty on pass.
    pub reasons: Vec<String>,
    pub evidence: FlatDoc,
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

fn cluster(spec: &SweepSpec, mappers: usize, reducers: usize, param: u64) -> Result<ClusterConfig, ExperimentError> {
    ClusterConfig::new(mappers, reducers, spec.seed).map_err(|e| ExperimentError::Point {
        claim: spec.claim,
        param,
        reason: e.to_string(),
    })
}

/// Generates and runs one point. Returns the realized parameter and the report.
fn measure(spec: &SweepSpec, param: u64, engine: &Engine) -> Result<(u64, ComplexityReport), ExperimentError> {
    let fail = |reason: String| ExperimentError::Point {
        claim: spec.claim,
        param,
        reason,
    };
    let base = cluster(spec, spec.mappers, spec.reducers, param)?;
    match spec.claim {
        ClaimId::C1 | ClaimId::C2 | ClaimId::C3 | ClaimId::C8 => {
            let corpus_spec = match spec.claim {
                ClaimId::C1 | ClaimId::C2 => {
                    let freqs: Vec<u64> = (1..=FMAX_VOCAB)
                        .map(|i| ((param as f64 / i as f64).round() as u64).max(1))
                        .collect();
                    CorpusSpec {
                        num_docs: FMAX_DOCS,
                        vocab_size: FMAX_VOCAB,
                        total_tokens: freqs.iter().sum(),
                        distribution: Distribution::Explicit(freqs),
                        seed: spec.seed,
                    }
                }
                ClaimId::C3 => CorpusSpec {
                    num_docs: param.div_ceil(TOKENS_PER_DOC).max(1),
                    vocab_size: ZIPF_VOCAB,
                    total_tokens: param,
                    distribution: Distribution::Zipf(1.0),
                    seed: spec.seed,
                },
                _ => CorpusSpec {
                    num_docs: spec.scale.div_ceil(TOKENS_PER_DOC).max(1),
                    vocab_size: FLAT_VOCAB,
                    total_tokens: spec.scale,
                    distribution: Distribution::Zipf(0.0),
                    seed: spec.seed,
                },
            };
            let corpus = gen_corpus(&corpus_spec).map_err(|e| fail(e.to_string()))?;
            let (realized, cl) = match spec.claim {
                ClaimId::C1 | ClaimId::C2 => (corpus.stats.f_max, base),
                ClaimId::C3 => (corpus.stats.total_tokens, base),
                _ => {
                    let reducers = usize::try_from(param).map_err(|e| fail(e.to_string()))?;
                    (param, cluster(spec, spec.mappers, reducers, param)?)
                }
            };
            let job = word_count_job(spec.mode, cl, spec.combiner);
            let run = engine
                .run_job(&documents_to_records(&corpus.docs), &job)
                .map_err(|e| fail(e.to_string()))?;
            Ok((realized, run.report))
        }
        ClaimId::C4 | ClaimId::C5 => {
            let graph_spec = if spec.claim == ClaimId::C4 {
                GraphSpec {
                    num_nodes: param + 1,
                    num_edges: 2 * param,
                    max_degree: param,
                    model: GraphModel::Star,
                    seed: spec.seed,
                }
            } else {
                GraphSpec {
                    num_nodes: param.div_ceil(EDGES_PER_NODE).max(1),
                    num_edges: param,
                    max_degree: 2 * EDGES_PER_NODE,
                    model: GraphModel::RegularIsh,
                    seed: spec.seed,
                }
            };
            let g = gen_graph(&graph_spec).map_err(|e| fail(e.to_string()))?;
            let realized = if spec.claim == ClaimId::C4 {
                g.stats.d_max
            } else {
                g.stats.num_edges
            };
            let params = PageRankParams::new(g.num_nodes);
            let job = pagerank_iteration_job(spec.mode, base, params).map_err(|e| fail(e.to_string()))?;
            let ranks = vec![1.0 / g.num_nodes as f64; g.num_nodes as usize];
            let input = pagerank_input(&g.edges, &ranks, g.num_nodes).map_err(|e| fail(e.to_string()))?;
            let run = engine.run_job(&input, &job).map_err(|e| fail(e.to_string()))?;
            Ok((realized, run.report))
        }
        ClaimId::C6 | ClaimId::C7 => {
            let (n, cl) = if spec.claim == ClaimId::C6 {
                let mappers = usize::try_from(param).map_err(|e| fail(e.to_string()))?;
                (spec.scale, cluster(spec, mappers, spec.reducers, param)?)
            } else {
                (param, base)
            };
            let values: Vec<i64> = (1..=n as i64).collect();
            let job = aggregation_job(AggregateOp::Sum, spec.mode, cl, spec.combiner);
            let run = engine
                .run_job(&numbers_to_records(&values), &job)
                .map_err(|e| fail(e.to_string()))?;
            Ok((param, run.report))
        }
    }
}

fn extract(report: &ComplexityReport, metric: &str) -> Result<u64, String> {
    if metric == "reduce_record_value_count" {
        return match report.reduce_record_sizes.as_slice() {
            [only] => Ok(only.value_count),
            other => Err(format!("expected one reduce record, found {}", other.len())),
        };
    }
    report
        .to_document()
        .parse(metric)
        .map_err(|e| format!("metric {metric}: {e}"))
}

/// Runs every point (concurrently under a parallel executor) and returns one
/// series per tracked metric. Point order in the result follows `spec.points`.
pub fn run_sweep(spec: &SweepSpec, registry: &Registry, executor: Executor) -> Result<SweepResult, ExperimentError> {
    let entry = registry.entry(spec.claim);
    let invalid = |reason: String| ExperimentError::Sweep {
        claim: spec.claim,
        reason,
    };
    if spec.points.is_empty() {
        return Err(invalid("no parameter points".into()));
    }
    if let Some(&p) = spec.points.iter().find(|&&p| p == 0) {
        return Err(invalid(format!("parameter {p} must be positive")));
    }
    if entry.check.band().is_some() {
        check_fit_shape(spec.points.iter().map(|&p| p as f64).collect(), registry).map_err(invalid)?;
    }
    let engine = Engine::new(executor);
    let measured = executor.map_indexed(spec.points.clone(), |_, p| {
        let (realized, report) = measure(spec, p, &engine)?;
        let values = entry
            .metrics
            .iter()
            .map(|m| extract(&report, m))
            .collect::<Result<Vec<u64>, String>>()
            .map_err(|reason| ExperimentError::Point {
                claim: spec.claim,
                param: p,
                reason,
            })?;
        Ok((realized, values))
    });
    let measured = measured.into_iter().collect::<Result<Vec<_>, ExperimentError>>()?;
    let series = entry
        .metrics
        .iter()
        .enumerate()
        .map(|(i, m)| ScalingSeries::new(*m, measured.iter().map(|(x, ys)| (*x, ys[i])).collect()))
        .collect();
    Ok(SweepResult {
        spec: spec.clone(),
        series,
    })
}

fn check_fit_shape(params: Vec<f64>, registry: &Registry) -> Result<(), String> {
    if params.len() < registry.min_points {
        return Err(format!(
            "exponent fit needs at least {} points, got {}",
            registry.min_points,
            params.len()
        ));
    }
    let span = span_decades(&params);
    if span < registry.min_span_decades {
        return Err(format!(
            "parameters span {span:.3} decades, need at least {}",
            registry.min_span_decades
        ));
    }
    Ok(())
}

/// Judges stored series against the registry. Pure: the same series and
/// registry always give the same verdict and evidence.
pub fn verify_claim(registry: &Registry, claim: ClaimId, series: &[ScalingSeries]) -> Result<Verdict, ExperimentError> {
    let entry = registry.entry(claim);
    let tracked: Vec<&ScalingSeries> = entry
        .metrics
        .iter()
        .map(|m| {
            series
                .iter()
                .find(|s| s.metric == *m)
                .ok_or_else(|| ExperimentError::MissingSeries {
                    claim,
                    metric: m.to_string(),
                })
        })
        .collect::<Result<_, _>>()?;

    let mut reasons = Vec::new();
    let exponent_band = |s: &ScalingSeries, lo: f64, hi: f64, reasons: &mut Vec<String>| {
        if let Err(r) = check_fit_shape(s.params().iter().map(|&p| p as f64).collect(), registry) {
            reasons.push(format!("{}: {r}", s.metric));
        }
        match s.fitted_exponent {
            Some(k) if (lo..=hi).contains(&k) => {}
            Some(k) => reasons.push(format!("{}: exponent {k:.4} outside [{lo}, {hi}]", s.metric)),
            None => reasons.push(format!("{}: no exponent could be fitted", s.metric)),
        }
    };
    let constant = |s: &ScalingSeries, max_ratio: f64, reasons: &mut Vec<String>| match s.max_min_ratio() {
        Some(r) if r <= max_ratio => {}
        Some(r) => reasons.push(format!("{}: max/min {r:.4} exceeds {max_ratio}", s.metric)),
        None => reasons.push(format!("{}: series empty or contains zero", s.metric)),
    };
    match entry.check {
        Check::Exponent { lo, hi } => exponent_band(tracked[0], lo, hi, &mut reasons),
        Check::Constant { max_ratio } => constant(tracked[0], max_ratio, &mut reasons),
        Check::EqualsParam => {
            if tracked[0].points.is_empty() {
                reasons.push(format!("{}: series is empty", tracked[0].metric));
            }
            for &(p, v) in &tracked[0].points {
                if p != v {
                    reasons.push(format!("{}: value {v} at parameter {p}", tracked[0].metric));
                }
            }
        }
        Check::ExponentAndConstant { lo, hi, max_ratio } => {
            exponent_band(tracked[0], lo, hi, &mut reasons);
            constant(tracked[1], max_ratio, &mut reasons);
        }
    }

    let pass = reasons.is_empty();
    let mut d = FlatDoc::new("claim-evidence");
    d.push("claim", claim);
    d.push("statement", entry.statement);
    d.push("param", entry.param);
    d.push("check", entry.check.name());
    if let Some((lo, hi)) = entry.check.band() {
        d.push("band", format!("{lo},{hi}"));
        d.push("min_points", registry.min_points);
        d.push("min_span_decades", registry.min_span_decades);
    }
    if let Some(r) = entry.check.max_ratio() {
        d.push("max_ratio", r);
    }
    for s in &tracked {
        s.write(&mut d);
        d.push(format!("{}.max_min_ratio", s.metric), opt(s.max_min_ratio()));
    }
    d.push("verdict", if pass { "pass" } else { "fail" });
    d.push("reasons", if pass { "-".to_string() } else { reasons.join("; ") });
    Ok(Verdict {
        claim,
        pass,
        reasons,
        evidence: d,
    })
}
