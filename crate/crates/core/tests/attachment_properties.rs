use ca_graphlab::attachment::{attachment_distribution, pair_probability, sample_from_index, weight_index};
use ca_graphlab::evolution::{snapshot_states, EvolutionConfig, InitialGraph};
use ca_graphlab::graph::{Graph, NodeId};
use ca_graphlab::AttachmentParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::collections::HashMap;

fn random_graph(rng: &mut impl Rng, max_nodes: u64) -> Graph {
    let n = rng.random_range(3..=max_nodes);
    let density = rng.random_range(0.1..0.8);
    let mut edges = Vec::new();
    for u in 1..=n {
        for v in u + 1..=n {
            if rng.random_bool(density) {
                edges.push((u, v));
            }
        }
    }
    let mut g = Graph::from_edges(edges).unwrap();
    for i in 1..=n {
        g.ensure_node(NodeId(i)).unwrap();
    }
    g
}

fn random_params(rng: &mut impl Rng) -> AttachmentParams {
    let alpha = [0.0, 0.5, 1.0, 2.0][rng.random_range(0..4)];
    let epsilon = if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.01..2.0) };
    AttachmentParams::ca(alpha, epsilon).unwrap()
}

/// Evolved and purely random states, paired with the parameters to use.
fn states(count: usize, seed: u64) -> Vec<(Graph, AttachmentParams)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let params = random_params(&mut rng);
        let g = if rng.random_bool(0.5) {
            random_graph(&mut rng, 50)
        } else {
            let cfg = EvolutionConfig {
                params,
                initial: if rng.random_bool(0.5) { InitialGraph::Triangle } else { InitialGraph::Complete(6) },
                seed: rng.random(),
                ..EvolutionConfig::default()
            };
            let steps = rng.random_range(0..40);
            snapshot_states(&cfg, &[steps]).unwrap().pop().unwrap().1
        };
        let Ok(dist) = attachment_distribution(&g, &params) else { continue };
        if dist.support().count() < 2 {
            continue;
        }
        out.push((g, params));
    }
    out
}

fn sequential_draw(pi: f64, pj: f64) -> f64 {
    pj * pi / (1.0 - pj) + pi * pj / (1.0 - pi)
}

#[test]
fn pair_probabilities_normalize() {
    for (g, params) in states(200, 1) {
        let dist = attachment_distribution(&g, &params).unwrap();
        let nodes = g.sorted_nodes();
        let support: Vec<NodeId> = dist.support().collect();
        let mut total = 0.0;
        let mut support_total = 0.0;
        for (a, &i) in nodes.iter().enumerate() {
            for &j in &nodes[a + 1..] {
                let p = pair_probability(&dist, i, j).unwrap();
                assert!(p >= 0.0);
                total += p;
                if support.contains(&i) && support.contains(&j) {
                    support_total += p;
                }
            }
        }
        assert!((total - 1.0).abs() <= 1e-10, "Σ pairs = {total} ({params:?})");
        assert!((support_total - 1.0).abs() <= 1e-10);
    }
}

#[test]
fn pair_probability_is_ordered_draw_sum() {
    for (g, params) in states(100, 2) {
        let dist = attachment_distribution(&g, &params).unwrap();
        let s = dist.probs().iter().sum::<f64>();
        assert!((s - 1.0).abs() <= 1e-12);
        for (a, (i, pi)) in dist.iter().enumerate() {
            for (j, pj) in dist.iter().skip(a + 1) {
                if pi == 0.0 || pj == 0.0 {
                    assert_eq!(pair_probability(&dist, i, j).unwrap(), 0.0);
                    continue;
                }
                let got = pair_probability(&dist, i, j).unwrap();
                assert!((got - sequential_draw(pi, pj)).abs() <= 1e-12, "{i},{j}");
            }
        }
    }
}

#[test]
fn sampler_matches_pair_distribution() {
    let draws = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut p_values = Vec::new();
    for (g, params) in states(400, 4).into_iter().filter(|(g, _)| g.node_count() <= 8).take(20) {
        let dist = attachment_distribution(&g, &params).unwrap();
        let mut index = weight_index(&g, &params).unwrap();
        let mut counts: HashMap<(NodeId, NodeId), usize> = HashMap::new();
        for _ in 0..draws {
            let t = sample_from_index(&mut index, 2, &mut rng).unwrap();
            *counts.entry((t[0].min(t[1]), t[0].max(t[1]))).or_default() += 1;
        }
        let nodes = g.sorted_nodes();
        let (mut stat, mut cells) = (0.0, 0usize);
        let (mut rest_obs, mut rest_exp) = (0.0, 0.0);
        for (a, &i) in nodes.iter().enumerate() {
            for &j in &nodes[a + 1..] {
                let expected = pair_probability(&dist, i, j).unwrap() * draws as f64;
                let observed = counts.get(&(i, j)).copied().unwrap_or(0) as f64;
                if expected == 0.0 {
                    assert_eq!(observed, 0.0, "zero-probability pair {i},{j} drawn");
                } else if expected < 5.0 {
                    rest_obs += observed;
                    rest_exp += expected;
                } else {
                    stat += (observed - expected).powi(2) / expected;
                    cells += 1;
                }
            }
        }
        if rest_exp > 0.0 {
            stat += (rest_obs - rest_exp).powi(2) / rest_exp;
            cells += 1;
        }
        if cells < 2 {
            continue;
        }
        let p = 1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(stat);
        p_values.push(p);
    }
    assert_eq!(p_values.len(), 20);
    for p in p_values {
        assert!(p > 0.001, "chi-square p-value {p}");
    }
}

#[test]
fn weight_total_tracks_exact_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (g, params) = states(1, 6).pop().unwrap();
    let mut index = weight_index(&g, &params).unwrap();
    let mut shadow = index.weights().to_vec();
    for _ in 0..10_000 {
        let slot = rng.random_range(0..shadow.len() + 3);
        let w = if rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.0..5.0) };
        index.set(slot, w);
        if slot >= shadow.len() {
            shadow.resize(slot + 1, 0.0);
        }
        shadow[slot] = w;
        let exact: f64 = shadow.iter().sum();
        assert!((index.total() - exact).abs() <= 1e-9 * exact.max(1.0));
    }
}
