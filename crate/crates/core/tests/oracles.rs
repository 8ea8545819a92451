mod common;

use common::{count_words, dense_pagerank_step, random_graph};
use mrmeter::algorithms::aggregate::{run_aggregation, AggregateOp, AggregateValue};
use mrmeter::algorithms::{
    counts_from_outputs, documents_to_records, pagerank_input, pagerank_iteration_job, ranks_from_outputs,
    run_pagerank, word_count_job, DanglingPolicy, PageRankParams, RankOutput,
};
use mrmeter::experiments::fit_power_law;
use mrmeter::workloads::{gen_corpus, gen_graph, CorpusSpec, Distribution, GraphModel, GraphSpec};
use mrmeter::{ClusterConfig, Engine, ReducerMode};
use proptest::prelude::*;

fn cluster(m: usize, r: usize) -> ClusterConfig {
    ClusterConfig::new(m, r, 99).unwrap()
}

#[test]
fn word_count_on_a_megabyte_corpus() {
    let c = gen_corpus(&CorpusSpec {
        num_docs: 500,
        vocab_size: 5_000,
        total_tokens: 300_000,
        distribution: Distribution::Zipf(1.0),
        seed: 21,
    })
    .unwrap();
    let bytes: usize = c.docs.iter().flat_map(|d| &d.tokens).map(|t| t.len() + 1).sum();
    assert!(bytes >= 1_000_000, "corpus is only {bytes} bytes");
    let run = Engine::default()
        .run_job(&documents_to_records(&c.docs), &word_count_job(ReducerMode::Streaming, cluster(8, 5), true))
        .unwrap();
    assert_eq!(counts_from_outputs(&run.outputs).unwrap(), count_words(&c.docs));
}

#[test]
fn batched_reduce_memory_tracks_f_max() {
    let c = gen_corpus(&CorpusSpec {
        num_docs: 40,
        vocab_size: 300,
        total_tokens: 20_000,
        distribution: Distribution::Zipf(1.0),
        seed: 4,
    })
    .unwrap();
    let oracle = count_words(&c.docs);
    let (word, &f_max) = oracle.iter().max_by_key(|(w, f)| (**f, std::cmp::Reverse(*w))).unwrap();
    let run = Engine::default()
        .run_job(&documents_to_records(&c.docs), &word_count_job(ReducerMode::Batched, cluster(4, 4), false))
        .unwrap();
    // key bytes plus one 8-byte count per occurrence
    assert_eq!(run.report.reduce_key_cx.max_memory_bytes, word.len() as u64 + 8 * f_max);
    assert_eq!(run.report.skew().heaviest_key.unwrap().as_bytes(), word.as_slice());
}

#[test]
fn five_node_graph_one_iteration() {
    let edges = random_graph(5, 9, 1);
    let ranks = vec![0.2; 5];
    for mode in [ReducerMode::Batched, ReducerMode::Streaming] {
        let params = PageRankParams::new(5);
        let run = Engine::default()
            .run_job(&pagerank_input(&edges, &ranks, 5).unwrap(), &pagerank_iteration_job(mode, cluster(2, 3), params).unwrap())
            .unwrap();
        let got = ranks_from_outputs(&run.outputs, 5, params.base_rank()).unwrap();
        let want = dense_pagerank_step(5, &edges, &ranks, 0.85, false);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-9, "{got:?} vs {want:?}");
        }
    }
}

#[test]
fn two_chained_iterations_on_five_nodes() {
    let edges = random_graph(5, 8, 17);
    let start = vec![0.1, 0.3, 0.2, 0.15, 0.25];
    for policy in [DanglingPolicy::Drop, DanglingPolicy::Redistribute] {
        let params = PageRankParams {
            dangling: policy,
            ..PageRankParams::new(5)
        };
        let run = run_pagerank(&Engine::default(), &edges, &start, 2, ReducerMode::Batched, cluster(3, 2), params).unwrap();
        assert_eq!(run.pipeline.phase_count, 2);
        let redistribute = policy == DanglingPolicy::Redistribute;
        let once = dense_pagerank_step(5, &edges, &start, 0.85, redistribute);
        let twice = dense_pagerank_step(5, &edges, &once, 0.85, redistribute);
        for (g, w) in run.ranks.iter().zip(&twice) {
            assert!((g - w).abs() < 1e-9, "{policy:?}: {:?} vs {twice:?}", run.ranks);
        }
    }
}

#[test]
fn redistribute_conserves_mass_across_iterations() {
    // node 4 has no out-edges and node 5 has no edges at all
    let mut pairs: Vec<(u64, u64)> = random_graph(4, 10, 5).iter().map(|e| (e.src, e.dst)).collect();
    pairs.push((0, 4));
    let edges = mrmeter::workloads::annotate(6, &pairs);
    let params = PageRankParams {
        dangling: DanglingPolicy::Redistribute,
        ..PageRankParams::new(6)
    };
    let run = run_pagerank(&Engine::default(), &edges, &[1.0 / 6.0; 6], 5, ReducerMode::Streaming, cluster(2, 2), params).unwrap();
    let total: f64 = run.ranks.iter().sum();
    assert!((total - 1.0).abs() < 1e-9, "mass {total}");
}

#[test]
fn star_hub_memory_linear_batched_flat_streaming_ranks_only() {
    let mut batched = Vec::new();
    let mut streaming = Vec::new();
    for d in [10u64, 100, 1_000, 10_000] {
        let g = gen_graph(&GraphSpec {
            num_nodes: d + 1,
            num_edges: 0,
            max_degree: d,
            model: GraphModel::Star,
            seed: 0,
        })
        .unwrap();
        let input = pagerank_input(&g.edges, &vec![1.0 / (d + 1) as f64; (d + 1) as usize], d + 1).unwrap();
        let params = PageRankParams {
            output: RankOutput::RanksOnly,
            ..PageRankParams::new(d + 1)
        };
        let b = Engine::default()
            .run_job(&input, &pagerank_iteration_job(ReducerMode::Batched, cluster(4, 4), params).unwrap())
            .unwrap();
        let s = Engine::default()
            .run_job(&input, &pagerank_iteration_job(ReducerMode::Streaming, cluster(4, 4), params).unwrap())
            .unwrap();
        assert_eq!(sorted_outputs(&b), sorted_outputs(&s));
        batched.push((d as f64, b.report.reduce_key_cx.max_memory_bytes as f64));
        streaming.push((d as f64, s.report.reduce_key_cx.max_memory_bytes as f64));
    }
    let kb = fit_power_law(&batched).unwrap().exponent;
    let ks = fit_power_law(&streaming).unwrap().exponent;
    assert!((0.9..=1.1).contains(&kb), "batched exponent {kb}");
    assert!(ks.abs() < 0.05, "streaming exponent {ks}");
}

fn sorted_outputs(r: &mrmeter::JobRun) -> Vec<mrmeter::KVPair> {
    common::sorted(r.outputs.clone())
}

#[test]
fn aggregation_value_counts_k_versus_n() {
    let values: Vec<i64> = (1..=10_000).collect();
    for (combine, expected) in [(true, 16u64), (false, 10_000)] {
        let run = run_aggregation(&Engine::default(), &values, AggregateOp::Sum, ReducerMode::Batched, cluster(16, 3), combine).unwrap();
        assert_eq!(run.value, AggregateValue::Int(50_005_000));
        assert_eq!(run.run.report.reduce_record_sizes.len(), 1);
        assert_eq!(run.run.report.reduce_record_sizes[0].value_count, expected);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pagerank_step_matches_dense_oracle(
        n in 1u64..60,
        density in 0usize..5,
        seed in any::<u64>(),
        damping in 0.0f64..=1.0,
        m in 1usize..5,
        r in 1usize..5,
        streaming in any::<bool>(),
    ) {
        let edges = random_graph(n, n as usize * density, seed);
        let ranks: Vec<f64> = (0..n).map(|i| ((i * 7 + 3) % 11 + 1) as f64).collect();
        let total: f64 = ranks.iter().sum();
        let ranks: Vec<f64> = ranks.iter().map(|x| x / total).collect();
        let params = PageRankParams { damping, ..PageRankParams::new(n) };
        let mode = if streaming { ReducerMode::Streaming } else { ReducerMode::Batched };
        let run = run_pagerank(&Engine::default(), &edges, &ranks, 1, mode, cluster(m, r), params).unwrap();
        let want = dense_pagerank_step(n as usize, &edges, &ranks, damping, false);
        for (g, w) in run.ranks.iter().zip(&want) {
            prop_assert!((g - w).abs() < 1e-9);
        }
    }

    #[test]
    fn aggregates_match_closed_forms(
        values in proptest::collection::vec(-1_000_000i64..1_000_000, 1..400),
        m in 1usize..9,
        r in 1usize..4,
        combine in any::<bool>(),
        streaming in any::<bool>(),
    ) {
        let mode = if streaming { ReducerMode::Streaming } else { ReducerMode::Batched };
        let run = |op| run_aggregation(&Engine::default(), &values, op, mode, cluster(m, r), combine).unwrap().value;
        prop_assert_eq!(run(AggregateOp::Sum), AggregateValue::Int(values.iter().sum()));
        prop_assert_eq!(run(AggregateOp::Max), AggregateValue::Int(*values.iter().max().unwrap()));
        let avg = values.iter().sum::<i64>() as f64 / values.len() as f64;
        match run(AggregateOp::Average) {
            AggregateValue::Real(x) => prop_assert!((x - avg).abs() <= 1e-9 * avg.abs().max(1.0)),
            other => prop_assert!(false, "{other:?}"),
        }
    }

    #[test]
    fn word_count_matches_counting_oracle(
        vocab in 1u64..200,
        tokens in 0u64..3_000,
        seed in any::<u64>(),
        m in 1usize..6,
        r in 1usize..8,
        combine in any::<bool>(),
        streaming in any::<bool>(),
    ) {
        let c = gen_corpus(&CorpusSpec {
            num_docs: 9,
            vocab_size: vocab,
            total_tokens: tokens,
            distribution: Distribution::Zipf(1.0),
            seed,
        }).unwrap();
        let mode = if streaming { ReducerMode::Streaming } else { ReducerMode::Batched };
        let run = Engine::default()
            .run_job(&documents_to_records(&c.docs), &word_count_job(mode, cluster(m, r), combine))
            .unwrap();
        prop_assert_eq!(counts_from_outputs(&run.outputs).unwrap(), count_words(&c.docs));
    }
}
