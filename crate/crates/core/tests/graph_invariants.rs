use ca_graphlab::graph::{parse_edge_list, Graph, NodeId};
use proptest::prelude::*;

const MAX_NODES: usize = 12;

/// Dense reference model: adjacency matrix with removed rows masked out.
#[derive(Clone)]
struct Dense {
    adj: [[bool; MAX_NODES + 1]; MAX_NODES + 1],
    alive: [bool; MAX_NODES + 1],
}

impl Dense {
    fn new(n: usize) -> Self {
        let mut alive = [false; MAX_NODES + 1];
        alive[1..=n].iter_mut().for_each(|a| *a = true);
        Dense { adj: [[false; MAX_NODES + 1]; MAX_NODES + 1], alive }
    }

    fn degree(&self, i: usize) -> usize {
        (1..=MAX_NODES).filter(|&j| self.adj[i][j]).count()
    }

    fn triangles(&self, i: usize) -> u64 {
        let mut t = 0;
        for j in 1..=MAX_NODES {
            for k in j + 1..=MAX_NODES {
                if self.adj[i][j] && self.adj[i][k] && self.adj[j][k] {
                    t += 1;
                }
            }
        }
        t
    }
}

#[derive(Debug, Clone)]
enum Op {
    Add(usize, usize),
    RemoveEdge(usize, usize),
    RemoveNode(usize),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        6 => (1..=MAX_NODES, 1..=MAX_NODES).prop_map(|(a, b)| Op::Add(a, b)),
        3 => (1..=MAX_NODES, 1..=MAX_NODES).prop_map(|(a, b)| Op::RemoveEdge(a, b)),
        1 => (1..=MAX_NODES).prop_map(Op::RemoveNode),
    ]
}

fn n(i: usize) -> NodeId {
    NodeId(i as u64)
}

fn assert_matches(g: &Graph, d: &Dense) -> Result<(), TestCaseError> {
    for i in 1..=MAX_NODES {
        prop_assert_eq!(g.contains(n(i)), d.alive[i]);
        if d.alive[i] {
            prop_assert_eq!(g.degree(n(i)).unwrap(), d.degree(i), "degree of {}", i);
            prop_assert_eq!(g.triangles(n(i)).unwrap(), d.triangles(i), "triangles of {}", i);
        }
    }
    let corners: u64 = (1..=MAX_NODES).filter(|&i| d.alive[i]).map(|i| d.triangles(i)).sum();
    prop_assert_eq!(g.corner_sum(), corners);
    prop_assert!(g.validate().is_ok());
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn incremental_counts_match_dense_model(ops in prop::collection::vec(op(), 1..80)) {
        let mut g = Graph::new();
        for _ in 0..MAX_NODES {
            g.add_node();
        }
        let mut d = Dense::new(MAX_NODES);
        for op in ops {
            match op {
                Op::Add(a, b) => {
                    let ok = a != b && d.alive[a] && d.alive[b] && !d.adj[a][b];
                    let res = g.add_edge(n(a), n(b));
                    prop_assert_eq!(res.is_ok(), ok);
                    if let Ok(report) = res {
                        let common = (1..=MAX_NODES).filter(|&k| d.adj[a][k] && d.adj[b][k]).count();
                        prop_assert_eq!(report.triangles(), common);
                        d.adj[a][b] = true;
                        d.adj[b][a] = true;
                    }
                }
                Op::RemoveEdge(a, b) => {
                    let ok = a != b && d.adj[a][b];
                    let res = g.remove_edge(n(a), n(b));
                    prop_assert_eq!(res.is_ok(), ok);
                    if res.is_ok() {
                        d.adj[a][b] = false;
                        d.adj[b][a] = false;
                    }
                }
                Op::RemoveNode(a) => {
                    let res = g.remove_node(n(a));
                    prop_assert_eq!(res.is_ok(), d.alive[a]);
                    if res.is_ok() {
                        for j in 1..=MAX_NODES {
                            d.adj[a][j] = false;
                            d.adj[j][a] = false;
                        }
                        d.alive[a] = false;
                    }
                }
            }
            assert_matches(&g, &d)?;
        }
    }

    #[test]
    fn add_then_remove_is_identity(
        edges in prop::collection::vec((1u64..=10, 1u64..=10), 0..30),
        a in 1u64..=10,
        b in 1u64..=10,
    ) {
        prop_assume!(a != b);
        let mut g = Graph::from_edges(edges.into_iter().filter(|(u, v)| u != v)).unwrap();
        g.ensure_node(NodeId(a)).unwrap();
        g.ensure_node(NodeId(b)).unwrap();
        prop_assume!(!g.has_edge(NodeId(a), NodeId(b)));
        let before: Vec<_> = g.sorted_nodes().into_iter().map(|i| (i, g.degree(i).unwrap(), g.triangles(i).unwrap())).collect();
        let added = g.add_edge(NodeId(a), NodeId(b)).unwrap();
        let removed = g.remove_edge(NodeId(a), NodeId(b)).unwrap();
        prop_assert_eq!(added, removed);
        let after: Vec<_> = g.sorted_nodes().into_iter().map(|i| (i, g.degree(i).unwrap(), g.triangles(i).unwrap())).collect();
        prop_assert_eq!(before, after);
    }

    #[test]
    fn clustering_is_a_fraction(edges in prop::collection::vec((1u64..=9, 1u64..=9), 0..40)) {
        let g = Graph::from_edges(edges.into_iter().filter(|(u, v)| u != v)).unwrap();
        for i in g.nodes() {
            let c = g.clustering_coefficient(i).unwrap();
            prop_assert!((0.0..=1.0).contains(&c));
            if g.degree(i).unwrap() < 2 {
                prop_assert_eq!(c, 0.0);
            }
        }
    }

    #[test]
    fn edge_list_round_trip(edges in prop::collection::vec((1u64..=15, 1u64..=15), 0..40)) {
        let g = Graph::from_edges(edges.into_iter().filter(|(u, v)| u != v)).unwrap();
        let back = parse_edge_list(g.to_edge_list().as_bytes()).unwrap();
        prop_assert_eq!(back.sorted_nodes(), g.sorted_nodes());
        let mut e1: Vec<_> = g.edges().collect();
        let mut e2: Vec<_> = back.edges().collect();
        e1.sort();
        e2.sort();
        prop_assert_eq!(e1, e2);
    }
}

#[test]
fn removed_ids_are_never_reused() {
    let mut g = Graph::from_edges([(1, 2), (2, 3)]).unwrap();
    g.remove_node(NodeId(3)).unwrap();
    let fresh = g.add_node();
    assert_eq!(fresh, NodeId(4));
    assert!(g.ensure_node(NodeId(3)).is_err());
}
