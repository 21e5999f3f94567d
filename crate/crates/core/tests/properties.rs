use std::collections::BTreeSet;

use proptest::prelude::*;

use hopsim::engine::trace::TraceTable;
use hopsim::featstore::pregather::plan_pregather;
use hopsim::featstore::{charge_fetch, ELEM_BYTES};
use hopsim::graph::io::{load_edge_list, read_csr_binary, write_csr_binary, write_edge_list};
use hopsim::graph::partition::{partition_greedy_locality, partition_hash};
use hopsim::report::{r_micro, r_sub, read_metrics_csv, write_metrics_csv, MetricsRow};
use hopsim::sampler::{build_subgraph, redistribute_roots, sample_micrograph};
use hopsim::{Category, CommLedger, Graph, PartitionMap, SamplerConfig, SamplingMode};

fn graph_strategy() -> impl Strategy<Value = Graph> {
    (2usize..40).prop_flat_map(|n| {
        prop::collection::vec((0..n as u32, 0..n as u32), 0..120)
            .prop_map(move |edges| Graph::from_undirected_edges(n, &edges).unwrap())
    })
}

fn mode_strategy() -> impl Strategy<Value = SamplingMode> {
    prop_oneof![Just(SamplingMode::NodeWise), Just(SamplingMode::LayerWise)]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn csr_round_trips(g in graph_strategy()) {
        let mut bin = Vec::new();
        write_csr_binary(&g, &mut bin).unwrap();
        prop_assert_eq!(&read_csr_binary(bin.as_slice()).unwrap(), &g);
        let mut text = Vec::new();
        write_edge_list(&g, &mut text).unwrap();
        prop_assert_eq!(&load_edge_list(text.as_slice(), None).unwrap(), &g);
        for v in 0..g.n_vertices() as u32 {
            for &u in g.neighbors(v) {
                prop_assert!(g.neighbors(u).contains(&v));
            }
        }
    }

    #[test]
    fn greedy_partition_respects_capacity(g in graph_strategy(), s in 1usize..6, slack in 0.0f64..0.5) {
        let p = partition_greedy_locality(&g, s, slack, 0).unwrap();
        let cap = ((1.0 + slack) * g.n_vertices() as f64 / s as f64).ceil() as usize;
        prop_assert!(p.part_sizes().iter().all(|&c| c <= cap), "{:?} cap {}", p.part_sizes(), cap);
        prop_assert_eq!(p.part_sizes().iter().sum::<usize>(), g.n_vertices());
    }

    #[test]
    fn sampling_depends_only_on_the_key(
        g in graph_strategy(),
        fanout in 1usize..4,
        layers in 1usize..4,
        mode in mode_strategy(),
        seed: u64,
        epoch in 0u64..3,
    ) {
        let cfg = SamplerConfig { fanouts: vec![fanout; layers], mode, seed };
        for root in 0..g.n_vertices() as u32 {
            let a = sample_micrograph(&g, root, &cfg, cfg.key(epoch, 1, root)).unwrap();
            let b = sample_micrograph(&g, root, &cfg, cfg.key(epoch, 1, root)).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(a.layers[layers].clone(), vec![root]);
            for k in 1..=layers {
                prop_assert!(a.layers[k - 1].starts_with(&a.layers[k]));
                for &(dst, src) in &a.blocks[k - 1].pairs {
                    let (d, s) = (a.layers[k][dst as usize], a.layers[k - 1][src as usize]);
                    prop_assert!(g.neighbors(d).contains(&s));
                }
            }
        }
    }

    #[test]
    fn pregathered_rows_are_the_unique_remote_rows(
        g in graph_strategy(),
        s in 1usize..5,
        batch in 1usize..6,
        seed: u64,
    ) {
        let p = partition_hash(&g, s, seed).unwrap();
        let cfg = SamplerConfig::node_wise(vec![2, 2], seed);
        let n = g.n_vertices().min(batch * s);
        let roots: Vec<u32> = (0..n as u32).collect();
        let micros: Vec<_> = roots
            .iter()
            .map(|&r| sample_micrograph(&g, r, &cfg, cfg.key(0, 0, r)).unwrap())
            .collect();
        for at in 0..s as u32 {
            // micrographs trained at `at`, one fetch each without pre-gathering
            let here: Vec<_> = micros.iter().filter(|m| (m.root as usize) % s == at as usize).collect();
            let mut ledger = CommLedger::new();
            let mut separate = 0;
            for m in &here {
                separate += charge_fetch(at, m.vertices(), &p, 1, &mut ledger);
            }
            let plan = plan_pregather(at, here.iter().copied(), &p);
            let unique: BTreeSet<u32> = here
                .iter()
                .flat_map(|m| m.vertices().iter().copied())
                .filter(|&v| p.home(v) != at)
                .collect();
            prop_assert_eq!(plan.len(), unique.len());
            prop_assert!(plan.len() as u64 <= separate);
            prop_assert_eq!(ledger.category_bytes(Category::Feature), separate * ELEM_BYTES);
        }
    }

    #[test]
    fn merging_preserves_rows_and_bijections(
        counts in (2usize..6).prop_flat_map(|n| prop::collection::vec(prop::collection::vec(0usize..7, n), n)),
        key: u64,
        removals in 1usize..5,
    ) {
        let tt = TraceTable::from_counts(&counts).unwrap();
        let rows = tt.row_sums();
        let mut cur = tt;
        for i in 0..removals.min(counts.len() - 1) {
            let col = cur.find_fewest_column().unwrap();
            cur = cur.delete_column_and_redistribute(col, key ^ i as u64).unwrap();
            cur.check_bijection().unwrap();
            prop_assert_eq!(cur.row_sums(), rows.clone());
            for row in cur.root_counts() {
                let (lo, hi) = (row.iter().min().unwrap(), row.iter().max().unwrap());
                prop_assert!(*lo <= *hi);
            }
        }
    }

    #[test]
    fn ratios_ignore_server_names(
        g in graph_strategy(),
        s in 1usize..5,
        seed: u64,
        rot in 0usize..5,
    ) {
        let p = partition_hash(&g, s, seed).unwrap();
        let perm: Vec<u32> = (0..s).map(|i| ((i + rot) % s) as u32).collect();
        let q: PartitionMap = p.relabel(&perm).unwrap();
        let cfg = SamplerConfig::node_wise(vec![3, 2], seed);
        let micros: Vec<_> = (0..g.n_vertices().min(6) as u32)
            .map(|r| sample_micrograph(&g, r, &cfg, cfg.key(0, 0, r)).unwrap())
            .collect();
        for m in &micros {
            prop_assert_eq!(r_micro(m, &p), r_micro(m, &q));
        }
        let sg = build_subgraph(micros).unwrap();
        prop_assert_eq!(r_sub(&sg, &p).unwrap(), r_sub(&sg, &q).unwrap());
    }

    #[test]
    fn redistribution_keeps_every_root(
        g in graph_strategy(),
        s in 1usize..5,
        seed: u64,
    ) {
        let p = partition_hash(&g, s, seed).unwrap();
        let all: Vec<u32> = (0..g.n_vertices() as u32).collect();
        let batches: Vec<Vec<u32>> = all.chunks(all.len().div_ceil(s)).map(<[u32]>::to_vec).collect();
        let plan = redistribute_roots(&batches, &p);
        for (d, per_server) in plan.groups.iter().enumerate() {
            let mut got: Vec<u32> = per_server.iter().flatten().copied().collect();
            got.sort();
            prop_assert_eq!(got, batches[d].clone());
            for (srv, roots) in per_server.iter().enumerate() {
                prop_assert!(roots.iter().all(|&r| p.home(r) as usize == srv));
            }
        }
    }

    #[test]
    fn ledger_merge_is_commutative(
        a in prop::collection::vec((0u32..4, 0u32..4, 0usize..5, 0u64..1000), 0..30),
        b in prop::collection::vec((0u32..4, 0u32..4, 0usize..5, 0u64..1000), 0..30),
    ) {
        let fill = |xs: &[(u32, u32, usize, u64)]| {
            let mut l = CommLedger::new();
            for &(s, d, c, bytes) in xs {
                l.record(s, d, Category::ALL[c], bytes);
            }
            l
        };
        let (la, lb) = (fill(&a), fill(&b));
        let mut ab = la.clone();
        ab.merge(&lb);
        let mut ba = lb.clone();
        ba.merge(&la);
        prop_assert!(ab.same_totals(&ba));
        let events: u64 = ab.events().iter().map(|e| e.bytes).sum();
        prop_assert_eq!(events, ab.total_bytes());
    }

    #[test]
    fn metrics_csv_round_trips_bit_exactly(
        rows in prop::collection::vec(
            (0usize..100, "[a-z+-]{1,20}", any::<f64>().prop_filter("finite", |x| x.is_finite()), 0usize..1000,
             any::<[u64; 5]>(), 0.0f64..1.0, any::<f64>().prop_filter("finite", |x| x.is_finite()), 0.0f64..4.0),
            0..8,
        ),
    ) {
        let rows: Vec<MetricsRow> = rows
            .into_iter()
            .map(|(epoch, strategy, sim_seconds, steps, b, miss_rate, alpha, imbalance)| MetricsRow {
                epoch,
                strategy,
                sim_seconds,
                steps,
                feature_bytes: b[0],
                model_bytes: b[1],
                gradient_bytes: b[2],
                intermediate_bytes: b[3],
                topology_bytes: b[4],
                miss_rate,
                alpha,
                imbalance,
            })
            .collect();
        let mut buf = Vec::new();
        write_metrics_csv(&rows, &mut buf).unwrap();
        let back = read_metrics_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), rows.len());
        for (x, y) in back.iter().zip(&rows) {
            prop_assert_eq!(x.sim_seconds.to_bits(), y.sim_seconds.to_bits());
            prop_assert_eq!(x.alpha.to_bits(), y.alpha.to_bits());
            prop_assert_eq!(x, y);
        }
    }
}
