//! Command-line front end. [`run`] takes the full argv and returns the
//! process exit status: 0 success, 1 a claim failed, 2 usage error, 3 I/O
//! or format error.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::algorithms::aggregate::{run_aggregation, AggregateOp};
use crate::algorithms::pagerank::run_pagerank;
use crate::algorithms::{counts_from_outputs, documents_to_records, word_count_job, DanglingPolicy, PageRankParams};
use crate::doc::FlatDoc;
use crate::engine::{ClusterConfig, Engine, Executor, ReducerMode};
use crate::experiments::{run_sweep, verify_claim, ClaimId, Registry, SweepResult, SweepSpec};
use crate::metrics::ComplexityReport;
use crate::workloads::{
    gen_corpus, gen_graph, parse_corpus, parse_graph, parse_numbers, parse_ranks, render_corpus, render_graph,
    render_ranks, render_word_counts, CorpusSpec, Distribution, GraphModel, GraphSpec,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CLAIM_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, PartialEq, Eq)]
pub enum CliError {
    Usage(String),
    Io(String),
    ClaimFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
            CliError::ClaimFailed(_) => EXIT_CLAIM_FAILED,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "error: {m}"),
            CliError::ClaimFailed(m) => write!(f, "claim failed: {m}"),
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn io_err(path: &Path, e: impl fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "mrmeter", version, about = "Metered single-process MapReduce")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic corpus, one document per line.
    GenerateCorpus(CorpusArgs),
    /// Write a synthetic graph as annotated edges.
    GenerateGraph(GraphArgs),
    /// Run a job and write its outputs and complexity report.
    Run(RunArgs),
    /// Sweep a registered claim and write the series and verdict.
    Experiment(ExperimentArgs),
    /// Render a stored report document as aligned text or CSV.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct CorpusArgs {
    /// Number of documents; defaults to one per 100 tokens.
    #[arg(long)]
    docs: Option<u64>,
    #[arg(long)]
    vocab: u64,
    #[arg(long)]
    tokens: u64,
    /// Zipf exponent (the default distribution, exponent 1.0).
    #[arg(long, conflicts_with_all = ["freqs", "planted"])]
    zipf: Option<f64>,
    /// Exact comma-separated frequency per vocabulary word.
    #[arg(long, value_delimiter = ',', conflicts_with = "planted")]
    freqs: Option<Vec<u64>>,
    /// Fraction of tokens given to word `w0`; the rest are uniform.
    #[arg(long)]
    planted: Option<f64>,
    #[arg(long, env = "MRMETER_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelArg {
    RegularIsh,
    Star,
    Cycle,
}

#[derive(Debug, Args)]
struct GraphArgs {
    #[arg(long, value_enum)]
    model: ModelArg,
    #[arg(long)]
    nodes: u64,
    /// Edge count for `regular-ish`.
    #[arg(long)]
    edges: Option<u64>,
    /// Degree bound for `regular-ish`, hub degree for `star`.
    #[arg(long)]
    max_degree: Option<u64>,
    #[arg(long, env = "MRMETER_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum JobSelector {
    WordCount,
    PageRank,
    Aggregate(AggregateOp),
}

impl FromStr for JobSelector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "wordcount" => Ok(JobSelector::WordCount),
            "pagerank" => Ok(JobSelector::PageRank),
            _ => match s.strip_prefix("aggregate:") {
                Some(op) => Ok(JobSelector::Aggregate(op.parse()?)),
                None => Err(format!("unknown job `{s}` (wordcount|pagerank|aggregate:sum|max|avg)")),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DanglingArg {
    Drop,
    Redistribute,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    job: JobSelector,
    #[arg(long, default_value = "batched")]
    mode: ReducerMode,
    /// Run the job's combiner on each mapper (wordcount and aggregate).
    #[arg(long)]
    combiner: bool,
    #[arg(long, default_value_t = 1)]
    mappers: usize,
    #[arg(long, default_value_t = 1)]
    reducers: usize,
    /// Shuffle seed.
    #[arg(long, env = "MRMETER_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.85)]
    damping: f64,
    /// Number of chained PageRank iterations.
    #[arg(long, default_value_t = 1)]
    iterations: usize,
    #[arg(long, value_enum, default_value = "drop")]
    dangling: DanglingArg,
    /// Initial PageRank ranks; uniform when absent.
    #[arg(long)]
    ranks: Option<PathBuf>,
    /// Run workers one at a time.
    #[arg(long)]
    sequential: bool,
    #[arg(long = "in")]
    input: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// C1..C8, or `all`.
    #[arg(long)]
    claim: String,
    /// Comma-separated parameter points; the claim's defaults when absent.
    #[arg(long, value_delimiter = ',')]
    points: Option<Vec<u64>>,
    #[arg(long)]
    mappers: Option<usize>,
    #[arg(long)]
    reducers: Option<usize>,
    #[arg(long, env = "MRMETER_SEED")]
    seed: Option<u64>,
    /// Band overrides as a `claim-registry` document.
    #[arg(long)]
    registry: Option<PathBuf>,
    /// Judge a stored `scaling-series` document instead of running a sweep.
    #[arg(long, conflicts_with = "points")]
    series: Option<PathBuf>,
    #[arg(long)]
    sequential: bool,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Text,
    Csv,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `argv` (including the program name), runs the command and
/// returns the exit status. Messages go to stdout/stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn execute(cmd: Command) -> Result<Vec<String>, CliError> {
    match cmd {
        Command::GenerateCorpus(a) => generate_corpus(a),
        Command::GenerateGraph(a) => generate_graph(a),
        Command::Run(a) => run_job(a),
        Command::Experiment(a) => experiment(a),
        Command::Report(a) => report(a),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn make_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| io_err(path, e))
}

fn executor(sequential: bool) -> Executor {
    if sequential {
        Executor::Sequential
    } else {
        Executor::Parallel
    }
}

fn generate_corpus(a: CorpusArgs) -> Result<Vec<String>, CliError> {
    let distribution = match (a.zipf, a.freqs, a.planted) {
        (_, Some(f), _) => Distribution::Explicit(f),
        (_, _, Some(p)) => Distribution::PlantedHeavy(p),
        (z, _, _) => Distribution::Zipf(z.unwrap_or(1.0)),
    };
    let spec = CorpusSpec {
        num_docs: a.docs.unwrap_or(a.tokens.div_ceil(100).max(1)),
        vocab_size: a.vocab,
        total_tokens: a.tokens,
        distribution,
        seed: a.seed,
    };
    let corpus = gen_corpus(&spec).map_err(|e| usage(e.to_string()))?;
    let text = render_corpus(&corpus.docs).map_err(|e| io_err(&a.out, e))?;
    write(&a.out, &text)?;
    Ok(vec![format!(
        "wrote {} ({} docs, S={}, f_max={})",
        a.out.display(),
        corpus.docs.len(),
        corpus.stats.total_tokens,
        corpus.stats.f_max
    )])
}

fn generate_graph(a: GraphArgs) -> Result<Vec<String>, CliError> {
    let need_degree = || a.max_degree.ok_or_else(|| usage("--max-degree is required for this model"));
    let spec = match a.model {
        ModelArg::Cycle => GraphSpec {
            num_nodes: a.nodes,
            num_edges: a.nodes,
            max_degree: 1,
            model: GraphModel::Cycle,
            seed: a.seed,
        },
        ModelArg::Star => GraphSpec {
            num_nodes: a.nodes,
            num_edges: 0,
            max_degree: need_degree()?,
            model: GraphModel::Star,
            seed: a.seed,
        },
        ModelArg::RegularIsh => GraphSpec {
            num_nodes: a.nodes,
            num_edges: a.edges.ok_or_else(|| usage("--edges is required for regular-ish"))?,
            max_degree: need_degree()?,
            model: GraphModel::RegularIsh,
            seed: a.seed,
        },
    };
    let g = gen_graph(&spec).map_err(|e| usage(e.to_string()))?;
    write(&a.out, &render_graph(g.num_nodes, &g.edges))?;
    Ok(vec![format!(
        "wrote {} (N={}, M={}, d_max={})",
        a.out.display(),
        g.stats.num_nodes,
        g.stats.num_edges,
        g.stats.d_max
    )])
}

fn run_job(a: RunArgs) -> Result<Vec<String>, CliError> {
    let cluster = ClusterConfig::new(a.mappers, a.reducers, a.seed).map_err(|e| usage(e.to_string()))?;
    if a.job != JobSelector::PageRank {
        if a.iterations != 1 {
            return Err(usage("--iterations applies only to --job pagerank"));
        }
        if a.ranks.is_some() {
            return Err(usage("--ranks applies only to --job pagerank"));
        }
    } else {
        if a.combiner {
            return Err(usage("pagerank has no combiner; drop --combiner"));
        }
        if !(0.0..=1.0).contains(&a.damping) {
            return Err(usage(format!("--damping must lie in [0, 1], got {}", a.damping)));
        }
        if a.iterations == 0 {
            return Err(usage("--iterations must be at least 1"));
        }
    }
    let engine = Engine::new(executor(a.sequential));
    let text = read(&a.input)?;
    let data_err = |e: &dyn fmt::Display| io_err(&a.input, e);

    // (file name, contents) in write order
    let mut files: Vec<(String, String)> = Vec::new();
    match a.job {
        JobSelector::WordCount => {
            let docs = parse_corpus(&text).map_err(|e| data_err(&e))?;
            let job = word_count_job(a.mode, cluster, a.combiner);
            let run = engine
                .run_job(&documents_to_records(&docs), &job)
                .map_err(|e| data_err(&e))?;
            let counts = counts_from_outputs(&run.outputs).map_err(|e| data_err(&e))?;
            files.push(("counts.tsv".into(), render_word_counts(&counts).map_err(|e| data_err(&e))?));
            files.push(("report.txt".into(), run.report.to_document().render()));
        }
        JobSelector::Aggregate(op) => {
            let values = parse_numbers(&text).map_err(|e| data_err(&e))?;
            let res = run_aggregation(&engine, &values, op, a.mode, cluster, a.combiner).map_err(|e| data_err(&e))?;
            files.push(("aggregate.tsv".into(), format!("{}\t{}\n", op.as_str(), res.value)));
            files.push(("report.txt".into(), res.run.report.to_document().render()));
        }
        JobSelector::PageRank => {
            let (n, edges) = parse_graph(&text).map_err(|e| data_err(&e))?;
            if n == 0 {
                return Err(data_err(&"graph has no nodes"));
            }
            let initial = match &a.ranks {
                Some(p) => {
                    let r = parse_ranks(&read(p)?).map_err(|e| io_err(p, e))?;
                    if r.len() as u64 != n {
                        return Err(io_err(p, format!("{} ranks for {n} nodes", r.len())));
                    }
                    r
                }
                None => vec![1.0 / n as f64; n as usize],
            };
            let params = PageRankParams {
                damping: a.damping,
                dangling: match a.dangling {
                    DanglingArg::Drop => DanglingPolicy::Drop,
                    DanglingArg::Redistribute => DanglingPolicy::Redistribute,
                },
                ..PageRankParams::new(n)
            };
            let res = run_pagerank(&engine, &edges, &initial, a.iterations, a.mode, cluster, params)
                .map_err(|e| data_err(&e))?;
            files.push(("ranks.tsv".into(), render_ranks(&res.ranks)));
            let reports = &res.pipeline.reports;
            if reports.len() == 1 {
                files.push(("report.txt".into(), reports[0].to_document().render()));
            } else {
                for (i, r) in reports.iter().enumerate() {
                    files.push((format!("report-{}.txt", i + 1), r.to_document().render()));
                }
                files.push(("pipeline.txt".into(), pipeline_summary(reports).render()));
            }
        }
    }
    make_dir(&a.out)?;
    let mut lines = Vec::new();
    for (name, contents) in files {
        let path = a.out.join(name);
        write(&path, &contents)?;
        lines.push(format!("wrote {}", path.display()));
    }
    Ok(lines)
}

/// Phase count plus the largest reduce key complexity across phases and
/// summed sequential complexity.
fn pipeline_summary(reports: &[ComplexityReport]) -> FlatDoc {
    let mut d = FlatDoc::new("pipeline-summary");
    d.push("phase_count", reports.len());
    let max = |f: fn(&ComplexityReport) -> u64| reports.iter().map(f).max().unwrap_or(0);
    d.push("reduce_key_cx.max_pair_size_bytes", max(|r| r.reduce_key_cx.max_pair_size_bytes));
    d.push("reduce_key_cx.max_cost_units", max(|r| r.reduce_key_cx.max_cost_units));
    d.push("reduce_key_cx.max_memory_bytes", max(|r| r.reduce_key_cx.max_memory_bytes));
    d.push(
        "sequential.total_io_bytes",
        reports.iter().map(|r| r.sequential.total_io_bytes).sum::<u64>(),
    );
    d.push(
        "sequential.total_cost_units",
        reports.iter().map(|r| r.sequential.total_cost_units).sum::<u64>(),
    );
    d
}

fn experiment(a: ExperimentArgs) -> Result<Vec<String>, CliError> {
    let claims: Vec<ClaimId> = if a.claim.eq_ignore_ascii_case("all") {
        ClaimId::ALL.to_vec()
    } else {
        vec![a.claim.parse().map_err(|e: crate::experiments::ExperimentError| usage(format!("--claim: {e}")))?]
    };
    if claims.len() > 1 && (a.points.is_some() || a.series.is_some()) {
        return Err(usage("--points and --series need a single --claim"));
    }
    let registry = match &a.registry {
        Some(p) => {
            let doc: FlatDoc = read(p)?.parse().map_err(|e| io_err(p, e))?;
            Registry::from_document(&doc).map_err(|e| io_err(p, e))?
        }
        None => Registry::default(),
    };
    let ex = executor(a.sequential);

    let mut results = Vec::new();
    for claim in claims {
        let result = match &a.series {
            Some(p) => {
                let doc: FlatDoc = read(p)?.parse().map_err(|e| io_err(p, e))?;
                let stored = SweepResult::from_document(&doc).map_err(|e| io_err(p, e))?;
                if stored.spec.claim != claim {
                    return Err(io_err(p, format!("series is for {}, not {claim}", stored.spec.claim)));
                }
                stored
            }
            None => {
                let mut spec = SweepSpec::for_claim(claim, &registry);
                if let Some(p) = &a.points {
                    spec.points = p.clone();
                }
                spec.mappers = a.mappers.unwrap_or(spec.mappers);
                spec.reducers = a.reducers.unwrap_or(spec.reducers);
                spec.seed = a.seed.unwrap_or(spec.seed);
                run_sweep(&spec, &registry, ex).map_err(|e| usage(e.to_string()))?
            }
        };
        let verdict = verify_claim(&registry, claim, &result.series).map_err(|e| usage(e.to_string()))?;
        results.push((result, verdict));
    }

    make_dir(&a.out)?;
    let mut lines = Vec::new();
    let mut failed = Vec::new();
    for (result, verdict) in results {
        let id = verdict.claim;
        write(&a.out.join(format!("series-{id}.txt")), &result.to_document().render())?;
        write(&a.out.join(format!("evidence-{id}.txt")), &verdict.evidence.render())?;
        if verdict.pass {
            lines.push(format!("{id} pass"));
        } else {
            lines.push(format!("{id} FAIL: {}", verdict.reasons.join("; ")));
            failed.push(id.to_string());
        }
    }
    if failed.is_empty() {
        Ok(lines)
    } else {
        for l in &lines {
            println!("{l}");
        }
        Err(CliError::ClaimFailed(failed.join(", ")))
    }
}

const REPORT_KINDS: [&str; 5] = [
    "complexity-report",
    "pipeline-summary",
    "scaling-series",
    "claim-evidence",
    "claim-registry",
];

fn report(a: ReportArgs) -> Result<Vec<String>, CliError> {
    let doc: FlatDoc = read(&a.input)?.parse().map_err(|e| io_err(&a.input, e))?;
    match doc.kind() {
        Some("complexity-report") => {
            ComplexityReport::from_document(&doc).map_err(|e| io_err(&a.input, e))?;
        }
        Some("scaling-series") => {
            SweepResult::from_document(&doc).map_err(|e| io_err(&a.input, e))?;
        }
        Some(k) if REPORT_KINDS.contains(&k) => {}
        other => {
            return Err(io_err(
                &a.input,
                format!("unrecognized document kind {:?}", other.unwrap_or("")),
            ))
        }
    }
    let rendered = match a.format {
        FormatArg::Text => render_text(&doc),
        FormatArg::Csv => render_csv(&doc).map_err(|e| io_err(&a.input, e))?,
    };
    match &a.out {
        Some(p) => {
            write(p, &rendered)?;
            Ok(vec![format!("wrote {}", p.display())])
        }
        None => {
            print!("{rendered}");
            Ok(Vec::new())
        }
    }
}

fn render_text(doc: &FlatDoc) -> String {
    let width = doc.fields().iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    doc.fields()
        .iter()
        .map(|(k, v)| format!("{k:<width$}  {v}\n"))
        .collect()
}

fn render_csv(doc: &FlatDoc) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["field", "value"])?;
    for (k, v) in doc.fields() {
        w.write_record([k, v])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv of UTF-8 fields is UTF-8"))
}
