mod common;

use common::{max_rel_diff, small_config};
use hopsim::engine::config::{GraphSource, PartitionerKind};
use hopsim::engine::sim::{Cluster, Trainer};
use hopsim::report::compare::run_strategy;
use hopsim::report::compare_strategies;
use hopsim::{Arch, Category, CostModel, Strategy, TrainConfig};

const HOP: Strategy = Strategy::HopGnn {
    pregather: false,
    merge: false,
};
const HOP_PG: Strategy = Strategy::HopGnn {
    pregather: true,
    merge: false,
};

fn train(cluster: &Cluster, s: Strategy, epochs: usize) -> Vec<f64> {
    let mut t = Trainer::new(cluster);
    for e in 0..epochs {
        t.run_epoch(s, e, &[]).unwrap();
    }
    t.models()[0].params.clone()
}

#[test]
fn hopgnn_matches_model_centric_for_many_seeds() {
    for seed in 0..6 {
        for arch in [Arch::Gcn, Arch::SageMean] {
            let cfg = TrainConfig {
                arch,
                ..small_config(3, seed)
            };
            let c = Cluster::from_config(&cfg).unwrap();
            let mc = train(&c, Strategy::ModelCentric, 2);
            for s in [HOP, HOP_PG] {
                let d = max_rel_diff(&mc, &train(&c, s, 2));
                assert!(d <= 1e-9, "seed {seed} {arch:?} {s}: {d}");
            }
        }
    }
}

#[test]
fn single_server_collapses_every_strategy() {
    let cfg = small_config(1, 3);
    let c = Cluster::from_config(&cfg).unwrap();
    let mut mc = Trainer::new(&c);
    let base = mc.run_epoch(Strategy::ModelCentric, 0, &[]).unwrap().metrics;
    assert_eq!(base.total_bytes(), 0);
    for s in Strategy::COMPARED {
        let mut t = Trainer::new(&c);
        let m = run_strategy(&c, s, 1, 1).unwrap().remove(0);
        assert_eq!(m.ledger.total_bytes(), 0, "{s}");
        t.run_epoch(if matches!(s, Strategy::HopGnn { merge: true, .. }) { HOP } else { s }, 0, &[])
            .unwrap();
        assert_eq!(t.models()[0].params, mc.models()[0].params, "{s}");
    }
    let mut naive = Trainer::new(&c);
    let n = naive.run_epoch(Strategy::Naive, 0, &[]).unwrap().metrics;
    assert_eq!(n.sim_seconds, base.sim_seconds);
    assert_eq!(n.steps, base.steps);
    assert_eq!(n.ledger.hits(), base.ledger.hits());
    assert_eq!(n.busy, base.busy);
}

#[test]
fn locality_optimized_diverges_and_hopgnn_does_not() {
    let c = Cluster::from_config(&small_config(4, 9)).unwrap();
    let mut lo = Trainer::new(&c);
    let out = lo.run_epoch(Strategy::LocalityOptimized, 0, &[]).unwrap();
    assert!(out.composition_diverged());
    let mut hop = Trainer::new(&c);
    assert!(!hop.run_epoch(HOP, 0, &[]).unwrap().composition_diverged());
    let lo_feat = out.metrics.feature_bytes();
    let hop_feat = Trainer::new(&c).run_epoch(HOP, 0, &[]).unwrap().metrics.feature_bytes();
    assert!(lo_feat <= hop_feat);
    assert_eq!(out.metrics.bytes(Category::Model), 0);
}

#[test]
fn feature_traffic_ordering_on_locality_partition() {
    let cfg = TrainConfig {
        graph: GraphSource::Sbm {
            blocks: vec![60; 4],
            p_in: 0.2,
            p_out: 0.005,
        },
        partitioner: PartitionerKind::Greedy { slack: 0.05 },
        servers: 4,
        batch: 8,
        iterations: Some(3),
        ..small_config(4, 21)
    };
    let c = Cluster::from_config(&cfg).unwrap();
    let run = |s| Trainer::new(&c).run_epoch(s, 0, &[]).unwrap().metrics;
    let (mc, hop, pg) = (run(Strategy::ModelCentric), run(HOP), run(HOP_PG));
    assert!(pg.feature_bytes() <= hop.feature_bytes());
    assert!(hop.feature_bytes() <= mc.feature_bytes());
    assert!(hop.miss_rate < mc.miss_rate, "{} vs {}", hop.miss_rate, mc.miss_rate);
    assert!(pg.max_staged_bytes > 0);
}

fn naive_vs_mc(layers: usize, hidden: usize, dim: usize, fanout: usize, batch: usize) -> (u64, u64) {
    let cfg = TrainConfig {
        graph: GraphSource::Sbm {
            blocks: vec![50; 4],
            p_in: 0.15,
            p_out: 0.01,
        },
        servers: 4,
        fanouts: vec![fanout; layers],
        hidden: vec![hidden; layers],
        dim,
        batch,
        iterations: Some(1),
        ..small_config(4, 5)
    };
    let c = Cluster::from_config(&cfg).unwrap();
    let run = |s| Trainer::new(&c).run_epoch(s, 0, &[]).unwrap().metrics.total_bytes();
    (run(Strategy::Naive), run(Strategy::ModelCentric))
}

#[test]
fn naive_costs_more_when_deep_and_less_when_shallow() {
    let (naive, mc) = naive_vs_mc(6, 256, 16, 2, 4);
    assert!(naive > mc, "deep: naive {naive} mc {mc}");
    let (naive, mc) = naive_vs_mc(1, 4, 512, 5, 16);
    assert!(naive < mc, "shallow: naive {naive} mc {mc}");
}

#[test]
fn ledger_totals_match_event_log() {
    let c = Cluster::from_config(&small_config(4, 2)).unwrap();
    for s in Strategy::COMPARED {
        for m in run_strategy(&c, s, 2, 1).unwrap() {
            let from_events: u64 = m.ledger.events().iter().map(|e| e.bytes).sum();
            let by_cat: u64 = Category::ALL.iter().map(|&k| m.bytes(k)).sum();
            assert_eq!(from_events, by_cat, "{s}");
            assert_eq!(m.ledger.total_bytes(), by_cat);
        }
    }
}

#[test]
fn parallel_and_serial_runs_agree() {
    let cfg = small_config(4, 8);
    let par = TrainConfig {
        parallel: true,
        ..cfg.clone()
    };
    let a = compare_strategies(&cfg).unwrap();
    let b = compare_strategies(&par).unwrap();
    assert_eq!(a, b);
}

#[test]
fn alpha_exceeds_one_on_a_deep_wide_sample() {
    let cfg = TrainConfig {
        graph: GraphSource::Sbm {
            blocks: vec![1000; 4],
            p_in: 0.01,
            p_out: 0.0005,
        },
        partitioner: PartitionerKind::Hash,
        servers: 4,
        fanouts: vec![10; 3],
        hidden: vec![16; 3],
        dim: 128,
        batch: 16,
        iterations: Some(1),
        cost: CostModel::zero(),
        ..small_config(4, 1)
    };
    let c = Cluster::from_config(&cfg).unwrap();
    let m = Trainer::new(&c).run_epoch(Strategy::ModelCentric, 0, &[]).unwrap().metrics;
    assert!(m.alpha > 1.0, "alpha {}", m.alpha);
}
