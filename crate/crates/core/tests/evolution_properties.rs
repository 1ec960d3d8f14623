use ca_graphlab::evolution::{replicate, run, snapshot_states, Evolution, ReplicateOptions};
use ca_graphlab::metrics::{avg_clustering, increment_bounds, submartingale_check};
use ca_graphlab::{AttachmentParams, DeletionMode, EvolutionConfig, Graph, InitialGraph, NodeId};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cfg(initial: InitialGraph, params: AttachmentParams, steps: usize, seed: u64) -> EvolutionConfig {
    EvolutionConfig { params, initial, steps, seed, ..EvolutionConfig::default() }
}

/// Average clustering computed from scratch via explicit neighbor-pair checks.
fn reference_avg_clustering(g: &Graph) -> f64 {
    let nodes = g.sorted_nodes();
    let mut total = 0.0;
    for &i in &nodes {
        let nb = g.sorted_neighbors(i).unwrap();
        let k = nb.len();
        if k < 2 {
            continue;
        }
        let mut links = 0;
        for a in 0..k {
            for b in a + 1..k {
                if g.has_edge(nb[a], nb[b]) {
                    links += 1;
                }
            }
        }
        total += 2.0 * links as f64 / (k * (k - 1)) as f64;
    }
    total / nodes.len() as f64
}

#[test]
fn same_seed_same_trajectory() {
    let c = cfg(InitialGraph::Triangle, AttachmentParams::ca(1.0, 0.5).unwrap(), 500, 99);
    let a = run(&c).unwrap();
    let b = run(&c).unwrap();
    assert_eq!(a.records, b.records);
    assert_eq!(a.graph.to_edge_list(), b.graph.to_edge_list());
    let other = run(&EvolutionConfig { seed: 100, ..c }).unwrap();
    assert_ne!(a.graph.to_edge_list(), other.graph.to_edge_list());
}

#[test]
fn increments_stay_in_envelope() {
    for (initial, alpha, eps) in [
        (InitialGraph::Triangle, 1.0, 0.0),
        (InitialGraph::Triangle, 0.5, 1.0),
        (InitialGraph::Complete(12), 2.0, 0.0),
        (InitialGraph::IcosahedronFull, 0.0, 1.0),
    ] {
        for seed in 0..3 {
            let tr = run(&cfg(initial.clone(), AttachmentParams::ca(alpha, eps).unwrap(), 1500, seed)).unwrap();
            assert!(tr.bound_applies());
            assert!(tr.bound_violations().is_empty(), "{initial} α={alpha} ε={eps}");
            for r in &tr.records[..tr.records.len() - 1] {
                let env = increment_bounds(tr.v0_size, r.t);
                assert!(env.contains(r.increment.unwrap()));
            }
        }
    }
    let tr = run(&cfg(InitialGraph::Triangle, AttachmentParams::lpa(), 1500, 4)).unwrap();
    assert!(tr.bound_violations().is_empty());
}

#[test]
fn running_average_agrees_with_reference() {
    for deletion in [DeletionMode::None, DeletionMode::UniformNode, DeletionMode::UniformEdge] {
        let mut c = cfg(InitialGraph::Complete(8), AttachmentParams::ca(1.0, 1.0).unwrap(), 0, 3);
        c.deletion = deletion;
        c.recompute_period = 97;
        let mut evo = Evolution::new(c).unwrap();
        for _ in 0..600 {
            evo.step().unwrap();
            let want = reference_avg_clustering(evo.graph());
            assert!((evo.avg_clustering() - want).abs() <= 1e-10, "{deletion}");
        }
        assert!((avg_clustering(evo.graph()).unwrap() - reference_avg_clustering(evo.graph())).abs() <= 1e-12);
    }
}

#[test]
fn degrees_and_triangles_never_drop_without_deletion() {
    let c = cfg(InitialGraph::Triangle, AttachmentParams::ca(1.0, 0.2).unwrap(), 0, 8);
    let mut evo = Evolution::new(c).unwrap();
    let mut last: Vec<(NodeId, usize, u64)> = Vec::new();
    for _ in 0..800 {
        evo.step().unwrap();
        let g = evo.graph();
        for &(i, k, tri) in &last {
            assert!(g.degree(i).unwrap() >= k);
            assert!(g.triangles(i).unwrap() >= tri);
        }
        last = g.sorted_nodes().into_iter().map(|i| (i, g.degree(i).unwrap(), g.triangles(i).unwrap())).collect();
    }
}

#[test]
fn conditional_increments_match_enumeration_and_replays() {
    let params = AttachmentParams::ca(1.0, 0.3).unwrap();
    let c = cfg(InitialGraph::Triangle, params, 0, 21);
    let states = snapshot_states(&c, &[0, 2, 5, 9]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let report = submartingale_check(&states, &params, 12, 10_000, &mut rng).unwrap();
    assert!(report.max_enumeration_discrepancy() <= 1e-12);
    assert!(report.max_abs_z() <= 4.0, "max |z| = {}", report.max_abs_z());
    assert!(report.nondecreasing_in_expectation());
    for s in &report.states {
        assert!((s.degree_prob_sum - 2.0).abs() <= 1e-10);
    }
}

#[test]
fn replica_zero_is_a_plain_run() {
    let mut c = cfg(InitialGraph::Triangle, AttachmentParams::ca(1.0, 1.0).unwrap(), 200, 5);
    c.tracked_nodes = vec![NodeId(1), NodeId(50)];
    let single = run(&c).unwrap();
    let summary = replicate(&c, 4, ReplicateOptions { threads: Some(2), ..Default::default() }).unwrap();
    let first = summary.replicas[0].result.as_ref().unwrap();
    assert_eq!(first.records, single.records);
    assert_eq!(summary.succeeded, 4);
    assert_eq!(summary.k_bar.len(), 2);
    assert!(summary.k_bar[1][..47].iter().all(|&k| k == 0.0));
    assert!(summary.k_bar[1][47] >= 2.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn count_laws_hold(seed in any::<u64>(), steps in 1usize..300, mode in 0u8..3) {
        let deletion = [DeletionMode::None, DeletionMode::UniformNode, DeletionMode::UniformEdge][mode as usize];
        let mut c = cfg(InitialGraph::Complete(5), AttachmentParams::ca(1.0, 1.0).unwrap(), steps, seed);
        c.deletion = deletion;
        let tr = run(&c).unwrap();
        for r in &tr.records {
            let (n, e) = match deletion {
                DeletionMode::None => (5 + r.t, 10 + 2 * r.t),
                DeletionMode::UniformNode => (5, r.n_edges),
                DeletionMode::UniformEdge => (5 + r.t, 10 + r.t),
            };
            prop_assert_eq!((r.n_nodes, r.n_edges), (n, e));
        }
        prop_assert!(tr.graph.validate().is_ok());
    }
}
