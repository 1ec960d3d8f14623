//! Dynamic undirected simple graph with incrementally maintained per-node
//! degrees and triangle counts.
//!
//! Every mutation keeps `triangles(i)` equal to the number of edges among the
//! neighbors of `i`, so clustering coefficients can be read in O(1) at any
//! point of an evolution.

use std::fmt;
use std::io::BufRead;

use indexmap::IndexSet;
use rustc_hash::{FxBuildHasher, FxHashSet};
use thiserror::Error;

/// Stable node identifier. Identifiers are 1-based and never reused after a
/// node is removed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u64);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u64> for NodeId {
    fn from(v: u64) -> Self {
        NodeId(v)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("edge {{{0}, {1}}} already present")]
    DuplicateEdge(NodeId, NodeId),
    #[error("edge {{{0}, {1}}} not present")]
    UnknownEdge(NodeId, NodeId),
    #[error("node id 0 is reserved; identifiers are 1-based")]
    ZeroId,
    #[error("node {0} was already retired and cannot be re-added")]
    RetiredId(NodeId),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

/// Outcome of a single edge insertion or removal.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeReport {
    /// Common neighbors of the two endpoints; each one gained (or lost) a
    /// triangle together with both endpoints.
    pub common: Vec<NodeId>,
}

impl EdgeReport {
    /// Number of triangles created (insertion) or destroyed (removal).
    pub fn triangles(&self) -> usize {
        self.common.len()
    }
}

#[derive(Debug, Clone, Default)]
struct NodeState {
    adj: FxHashSet<NodeId>,
    triangles: u64,
}

type FxIndexSet<T> = IndexSet<T, FxBuildHasher>;

#[inline]
fn edge_key(u: NodeId, v: NodeId) -> (NodeId, NodeId) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Graph {
    // Indexed by NodeId; slot 0 is never used.
    slots: Vec<Option<NodeState>>,
    nodes: FxIndexSet<NodeId>,
    edges: FxIndexSet<(NodeId, NodeId)>,
    retired: FxHashSet<NodeId>,
    next_id: u64,
    corner_sum: u64,
}

impl Graph {
    pub fn new() -> Self {
        Graph {
            slots: vec![None],
            nodes: FxIndexSet::default(),
            edges: FxIndexSet::default(),
            retired: FxHashSet::default(),
            next_id: 1,
            corner_sum: 0,
        }
    }

    /// Builds a graph from an edge list. Nodes are created on first sight;
    /// repeated pairs (in either orientation) are ignored.
    pub fn from_edges<I>(edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (u64, u64)>,
    {
        let mut g = Graph::new();
        for (u, v) in edges {
            let (u, v) = (NodeId(u), NodeId(v));
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            g.ensure_node(u)?;
            g.ensure_node(v)?;
            if !g.has_edge(u, v) {
                g.add_edge(u, v)?;
            }
        }
        Ok(g)
    }

    /// Appends a fresh node with the next unused identifier.
    pub fn add_node(&mut self) -> NodeId {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        self.grow_to(id);
        self.slots[id.index()] = Some(NodeState::default());
        self.nodes.insert(id);
        id
    }

    /// Inserts node `id` if absent. Fails for id 0 and for retired ids.
    pub fn ensure_node(&mut self, id: NodeId) -> Result<(), GraphError> {
        if id.0 == 0 {
            return Err(GraphError::ZeroId);
        }
        if self.contains(id) {
            return Ok(());
        }
        if self.retired.contains(&id) {
            return Err(GraphError::RetiredId(id));
        }
        self.grow_to(id);
        self.slots[id.index()] = Some(NodeState::default());
        self.nodes.insert(id);
        self.next_id = self.next_id.max(id.0 + 1);
        Ok(())
    }

    fn grow_to(&mut self, id: NodeId) {
        if self.slots.len() <= id.index() {
            self.slots.resize_with(id.index() + 1, || None);
        }
    }

    #[inline]
    fn state(&self, id: NodeId) -> Result<&NodeState, GraphError> {
        self.slots
            .get(id.index())
            .and_then(Option::as_ref)
            .ok_or(GraphError::UnknownNode(id))
    }

    #[inline]
    fn state_mut(&mut self, id: NodeId) -> Result<&mut NodeState, GraphError> {
        self.slots
            .get_mut(id.index())
            .and_then(Option::as_mut)
            .ok_or(GraphError::UnknownNode(id))
    }

    pub fn contains(&self, id: NodeId) -> bool {
        matches!(self.slots.get(id.index()), Some(Some(_)))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Identifier the next call to [`Graph::add_node`] will return.
    pub fn next_id(&self) -> NodeId {
        NodeId(self.next_id)
    }

    /// Upper bound (exclusive) on raw identifiers ever used; handy for sizing
    /// id-indexed side tables.
    pub fn id_bound(&self) -> usize {
        self.slots.len()
    }

    /// Present nodes, in an order that is deterministic for a given mutation
    /// history (not sorted).
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().copied()
    }

    /// Present nodes sorted by identifier.
    pub fn sorted_nodes(&self) -> Vec<NodeId> {
        let mut v: Vec<NodeId> = self.nodes().collect();
        v.sort_unstable();
        v
    }

    pub fn node_at(&self, idx: usize) -> Option<NodeId> {
        self.nodes.get_index(idx).copied()
    }

    /// Edges as `(min, max)` pairs in deterministic (not sorted) order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_at(&self, idx: usize) -> Option<(NodeId, NodeId)> {
        self.edges.get_index(idx).copied()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.edges.contains(&edge_key(u, v))
    }

    pub fn degree(&self, id: NodeId) -> Result<usize, GraphError> {
        Ok(self.state(id)?.adj.len())
    }

    pub fn triangles(&self, id: NodeId) -> Result<u64, GraphError> {
        Ok(self.state(id)?.triangles)
    }

    pub fn neighbors(&self, id: NodeId) -> Result<impl Iterator<Item = NodeId> + '_, GraphError> {
        Ok(self.state(id)?.adj.iter().copied())
    }

    /// Neighbors sorted by identifier.
    pub fn sorted_neighbors(&self, id: NodeId) -> Result<Vec<NodeId>, GraphError> {
        let mut v: Vec<NodeId> = self.neighbors(id)?.collect();
        v.sort_unstable();
        Ok(v)
    }

    /// Running value of the per-node triangle counts summed over all nodes
    /// (three times the number of triangles).
    pub fn corner_sum(&self) -> u64 {
        self.corner_sum
    }

    fn common_neighbors(&self, u: NodeId, v: NodeId) -> Result<Vec<NodeId>, GraphError> {
        let (a, b) = (&self.state(u)?.adj, &self.state(v)?.adj);
        let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
        let mut common: Vec<NodeId> = small.iter().filter(|w| large.contains(w)).copied().collect();
        common.sort_unstable();
        Ok(common)
    }

    pub fn add_edge(&mut self, u: NodeId, v: NodeId) -> Result<EdgeReport, GraphError> {
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        self.state(u)?;
        self.state(v)?;
        let key = edge_key(u, v);
        if self.edges.contains(&key) {
            return Err(GraphError::DuplicateEdge(key.0, key.1));
        }
        let common = self.common_neighbors(u, v)?;
        let c = common.len() as u64;
        for &w in &common {
            self.state_mut(w)?.triangles += 1;
        }
        {
            let su = self.state_mut(u)?;
            su.adj.insert(v);
            su.triangles += c;
        }
        {
            let sv = self.state_mut(v)?;
            sv.adj.insert(u);
            sv.triangles += c;
        }
        self.edges.insert(key);
        self.corner_sum += 3 * c;
        Ok(EdgeReport { common })
    }

    pub fn remove_edge(&mut self, u: NodeId, v: NodeId) -> Result<EdgeReport, GraphError> {
        let key = edge_key(u, v);
        if !self.edges.contains(&key) {
            return Err(GraphError::UnknownEdge(key.0, key.1));
        }
        let common = self.common_neighbors(u, v)?;
        let c = common.len() as u64;
        for &w in &common {
            self.state_mut(w)?.triangles -= 1;
        }
        {
            let su = self.state_mut(u)?;
            su.adj.remove(&v);
            su.triangles -= c;
        }
        {
            let sv = self.state_mut(v)?;
            sv.adj.remove(&u);
            sv.triangles -= c;
        }
        self.edges.swap_remove(&key);
        self.corner_sum -= 3 * c;
        Ok(EdgeReport { common })
    }

    /// Removes `u` and all of its edges. Returns the reports of the individual
    /// edge removals, in ascending neighbor order; their count is the former
    /// degree of `u`.
    pub fn remove_node(&mut self, u: NodeId) -> Result<Vec<(NodeId, EdgeReport)>, GraphError> {
        let neighbors = self.sorted_neighbors(u)?;
        let mut reports = Vec::with_capacity(neighbors.len());
        for v in neighbors {
            let r = self.remove_edge(u, v)?;
            reports.push((v, r));
        }
        self.slots[u.index()] = None;
        self.nodes.swap_remove(&u);
        self.retired.insert(u);
        Ok(reports)
    }

    /// Local clustering coefficient `2Δ/(k(k-1))`, zero for degree below 2.
    pub fn clustering_coefficient(&self, i: NodeId) -> Result<f64, GraphError> {
        let s = self.state(i)?;
        Ok(clustering_from(s.adj.len(), s.triangles))
    }

    /// Counts edges among the neighbors of `i` by pairwise adjacency lookups,
    /// ignoring the incremental counters.
    pub fn triangle_count_bruteforce(&self, i: NodeId) -> Result<u64, GraphError> {
        let nbrs = self.sorted_neighbors(i)?;
        let mut count = 0;
        for (a, &u) in nbrs.iter().enumerate() {
            for &w in &nbrs[a + 1..] {
                if self.state(u)?.adj.contains(&w) {
                    count += 1;
                }
            }
        }
        Ok(count)
    }

    /// Checks symmetry, degree and triangle bookkeeping against brute force.
    /// Intended for tests and debug assertions; cost is O(Σ k²).
    pub fn validate(&self) -> Result<(), String> {
        let mut corners = 0u64;
        let mut half_edges = 0usize;
        for id in self.nodes() {
            let s = self.state(id).map_err(|e| e.to_string())?;
            for &w in &s.adj {
                if w == id {
                    return Err(format!("self-loop at {id}"));
                }
                let sw = self.state(w).map_err(|e| e.to_string())?;
                if !sw.adj.contains(&id) {
                    return Err(format!("asymmetric adjacency {id} -> {w}"));
                }
                if !self.edges.contains(&edge_key(id, w)) {
                    return Err(format!("edge {{{id}, {w}}} missing from edge index"));
                }
            }
            half_edges += s.adj.len();
            let brute = self.triangle_count_bruteforce(id).map_err(|e| e.to_string())?;
            if brute != s.triangles {
                return Err(format!("node {id}: incremental triangles {} != brute force {brute}", s.triangles));
            }
            corners += s.triangles;
        }
        if half_edges != 2 * self.edges.len() {
            return Err(format!("edge index holds {} edges, adjacency holds {half_edges} half-edges", self.edges.len()));
        }
        if corners != self.corner_sum {
            return Err(format!("corner sum {} != recomputed {corners}", self.corner_sum));
        }
        if !corners.is_multiple_of(3) {
            return Err(format!("triangle corner sum {corners} not divisible by 3"));
        }
        Ok(())
    }

    /// Serializes the edge list in the text format read by [`parse_edge_list`],
    /// edges sorted; isolated nodes are written as single-id lines.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        let mut edges: Vec<_> = self.edges().collect();
        edges.sort_unstable();
        for id in self.sorted_nodes() {
            if self.state(id).map(|s| s.adj.is_empty()).unwrap_or(false) {
                out.push_str(&format!("{id}\n"));
            }
        }
        for (u, v) in edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }
}

#[inline]
pub fn clustering_from(degree: usize, triangles: u64) -> f64 {
    if degree < 2 {
        0.0
    } else {
        let k = degree as f64;
        2.0 * triangles as f64 / (k * (k - 1.0))
    }
}

/// Parses the initial-graph edge-list format: one `u v` pair per line,
/// whitespace-separated 1-based integers, `#` starts a comment. A line with a
/// single id declares an isolated node. Repeated pairs are merged.
pub fn parse_edge_list<R: BufRead>(reader: R) -> Result<Graph, GraphError> {
    let mut g = Graph::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| GraphError::Io(e.to_string()))?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        let parse = |s: &str| -> Result<NodeId, GraphError> {
            let v: u64 = s.parse().map_err(|_| GraphError::Parse {
                line: lineno,
                message: format!("invalid node id `{s}`"),
            })?;
            if v == 0 {
                return Err(GraphError::Parse { line: lineno, message: "node ids are 1-based".into() });
            }
            Ok(NodeId(v))
        };
        match fields.as_slice() {
            [a] => {
                g.ensure_node(parse(a)?)?;
            }
            [a, b] => {
                let (u, v) = (parse(a)?, parse(b)?);
                if u == v {
                    return Err(GraphError::Parse { line: lineno, message: format!("self-loop on node {u}") });
                }
                g.ensure_node(u)?;
                g.ensure_node(v)?;
                if !g.has_edge(u, v) {
                    g.add_edge(u, v)?;
                }
            }
            _ => {
                return Err(GraphError::Parse {
                    line: lineno,
                    message: format!("expected `u v`, found {} fields", fields.len()),
                })
            }
        }
    }
    Ok(g)
}
