//! Step-by-step graph evolution: append a node, attach it to `m0` distinct
//! targets drawn by weighted sampling without replacement, and optionally
//! delete a uniformly chosen node or edge. Replicated runs are averaged per
//! step.

use std::fmt;
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::attachment::{sample_from_index, AttachmentError, AttachmentParams};
use crate::graph::{parse_edge_list, EdgeReport, Graph, GraphError, NodeId};
use crate::metrics::{self, fill_increments, CompensatedSum, MetricsError, MetricsRecord};
use crate::weights::WeightIndex;

pub const DEFAULT_RECOMPUTE_PERIOD: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeletionMode {
    None,
    /// Remove one node, drawn uniformly from the nodes present before the
    /// step's append, together with its edges.
    UniformNode,
    /// Remove one edge drawn uniformly from the edge pool.
    UniformEdge,
}

/// Which edges are candidates for uniform edge deletion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgePool {
    /// Edges after this step's attachment, including the new ones.
    PostAttachment,
    /// Only edges that existed before this step.
    PreAttachment,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum InitialGraph {
    Triangle,
    /// 4-cycle 1-2-3-4-1.
    Rectangle,
    /// Rectangle plus the diagonal {1, 3}.
    RectangleDiag,
    /// Icosahedron with all diagonals, i.e. the complete graph on 12 nodes.
    IcosahedronFull,
    Complete(usize),
    File(PathBuf),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolutionError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("cannot build initial graph: {0}")]
    Initial(String),
    #[error("step {t}: {source}")]
    Step { t: usize, source: AttachmentError },
    #[error("step {t}: {source}")]
    Graph { t: usize, source: GraphError },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

impl EvolutionError {
    /// True for violations of the model's own preconditions (not enough
    /// nodes with positive attachment weight).
    pub fn is_model_precondition(&self) -> bool {
        matches!(
            self,
            EvolutionError::Step {
                source: AttachmentError::AllWeightsZero | AttachmentError::InsufficientEligibleNodes { .. },
                ..
            }
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionConfig {
    pub params: AttachmentParams,
    pub m0: usize,
    pub steps: usize,
    pub deletion: DeletionMode,
    pub edge_pool: EdgePool,
    pub initial: InitialGraph,
    pub seed: u64,
    pub tracked_nodes: Vec<NodeId>,
    pub recompute_period: usize,
    /// Deterministic hook: attach every new node to exactly these nodes
    /// instead of sampling.
    pub forced_targets: Option<Vec<NodeId>>,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            params: AttachmentParams { alpha: 1.0, epsilon: 0.0, family: crate::attachment::AttachmentFamily::Ca },
            m0: 2,
            steps: 0,
            deletion: DeletionMode::None,
            edge_pool: EdgePool::PostAttachment,
            initial: InitialGraph::Triangle,
            seed: 0,
            tracked_nodes: Vec::new(),
            recompute_period: DEFAULT_RECOMPUTE_PERIOD,
            forced_targets: None,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<(), EvolutionError> {
        self.params.validate().map_err(|e| EvolutionError::InvalidConfig(e.to_string()))?;
        if self.m0 < 2 {
            return Err(EvolutionError::InvalidConfig(format!("m0 must be >= 2, got {}", self.m0)));
        }
        if self.recompute_period == 0 {
            return Err(EvolutionError::InvalidConfig("recompute_period must be >= 1".into()));
        }
        if self.tracked_nodes.iter().any(|n| n.0 == 0) {
            return Err(EvolutionError::InvalidConfig("tracked node ids are 1-based".into()));
        }
        if let Some(forced) = &self.forced_targets {
            if forced.len() != self.m0 {
                return Err(EvolutionError::InvalidConfig(format!(
                    "forced_targets has {} entries but m0 = {}",
                    forced.len(),
                    self.m0
                )));
            }
            let mut sorted = forced.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != forced.len() {
                return Err(EvolutionError::InvalidConfig("forced_targets must be distinct".into()));
            }
        }
        Ok(())
    }
}

pub fn complete_graph(n: usize) -> Graph {
    let mut g = Graph::new();
    for _ in 0..n {
        g.add_node();
    }
    for u in 1..=n as u64 {
        for v in u + 1..=n as u64 {
            g.add_edge(NodeId(u), NodeId(v)).expect("fresh complete graph");
        }
    }
    g
}

pub fn init_graph(kind: &InitialGraph) -> Result<Graph, EvolutionError> {
    let built = match kind {
        InitialGraph::Triangle => Graph::from_edges([(1, 2), (2, 3), (1, 3)]),
        InitialGraph::Rectangle => Graph::from_edges([(1, 2), (2, 3), (3, 4), (4, 1)]),
        InitialGraph::RectangleDiag => Graph::from_edges([(1, 2), (2, 3), (3, 4), (4, 1), (1, 3)]),
        InitialGraph::IcosahedronFull => Ok(complete_graph(12)),
        InitialGraph::Complete(n) => {
            if *n == 0 {
                return Err(EvolutionError::Initial("complete graph needs at least one node".into()));
            }
            Ok(complete_graph(*n))
        }
        InitialGraph::File(path) => {
            let f = File::open(path).map_err(|e| EvolutionError::Initial(format!("{}: {e}", path.display())))?;
            parse_edge_list(BufReader::new(f))
        }
    };
    let g = built.map_err(|e| EvolutionError::Initial(e.to_string()))?;
    if g.is_empty() {
        return Err(EvolutionError::Initial("initial graph has no nodes".into()));
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepReport {
    pub t: usize,
    pub appended: NodeId,
    pub targets: Vec<NodeId>,
    /// Removed node and its former degree.
    pub deleted_node: Option<(NodeId, usize)>,
    pub deleted_edge: Option<(NodeId, NodeId)>,
}

/// A single evolution run in progress.
#[derive(Debug, Clone)]
pub struct Evolution {
    config: EvolutionConfig,
    graph: Graph,
    weights: WeightIndex,
    // Local clustering coefficient per node slot, for the running average.
    clustering: Vec<f64>,
    clustering_sum: CompensatedSum,
    rng: ChaCha8Rng,
    t: usize,
    v0_size: usize,
    since_refresh: usize,
}

impl Evolution {
    pub fn new(config: EvolutionConfig) -> Result<Self, EvolutionError> {
        let g = init_graph(&config.initial)?;
        Self::from_graph(config, g, 0)
    }

    /// Starts from an explicit initial graph; `stream` selects an
    /// independent random stream for the same seed.
    pub fn from_graph(config: EvolutionConfig, graph: Graph, stream: u64) -> Result<Self, EvolutionError> {
        config.validate()?;
        if graph.is_empty() {
            return Err(EvolutionError::Initial("initial graph has no nodes".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(stream);
        let mut evo = Evolution {
            v0_size: graph.node_count(),
            config,
            graph,
            weights: WeightIndex::new(),
            clustering: Vec::new(),
            clustering_sum: CompensatedSum::default(),
            rng,
            t: 0,
            since_refresh: 0,
        };
        evo.refresh();
        Ok(evo)
    }

    pub fn config(&self) -> &EvolutionConfig {
        &self.config
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn into_graph(self) -> Graph {
        self.graph
    }

    pub fn weights(&self) -> &WeightIndex {
        &self.weights
    }

    /// Steps applied so far.
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn v0_size(&self) -> usize {
        self.v0_size
    }

    /// Average clustering coefficient from the running sum.
    pub fn avg_clustering(&self) -> f64 {
        let n = self.graph.node_count();
        if n == 0 {
            0.0
        } else {
            self.clustering_sum.value() / n as f64
        }
    }

    pub fn record(&self) -> Result<MetricsRecord, EvolutionError> {
        Ok(MetricsRecord::observe(&self.graph, self.t, self.avg_clustering(), &self.config.tracked_nodes)?)
    }

    /// Recomputes all weights, the sampling index and the clustering sum
    /// from the graph.
    pub fn refresh(&mut self) {
        let bound = self.graph.id_bound();
        let mut w = vec![0.0; bound];
        self.clustering = vec![0.0; bound];
        let mut sum = CompensatedSum::default();
        for id in self.graph.sorted_nodes() {
            let k = self.graph.degree(id).unwrap_or(0);
            let tri = self.graph.triangles(id).unwrap_or(0);
            w[id.index()] = self.config.params.weight_for(k, tri);
            let c = crate::graph::clustering_from(k, tri);
            self.clustering[id.index()] = c;
            sum.add(c);
        }
        self.weights = WeightIndex::from_weights(w);
        self.clustering_sum = sum;
        self.since_refresh = 0;
    }

    fn touch(&mut self, id: NodeId) {
        let slot = id.index();
        if self.clustering.len() <= slot {
            self.clustering.resize(slot + 1, 0.0);
        }
        let (w, c) = if self.graph.contains(id) {
            let k = self.graph.degree(id).unwrap_or(0);
            let tri = self.graph.triangles(id).unwrap_or(0);
            (self.config.params.weight_for(k, tri), crate::graph::clustering_from(k, tri))
        } else {
            (0.0, 0.0)
        };
        let old = self.clustering[slot];
        if old != c {
            self.clustering_sum.add(c - old);
            self.clustering[slot] = c;
        }
        self.weights.set(slot, w);
    }

    fn choose_targets(&mut self) -> Result<Vec<NodeId>, AttachmentError> {
        if let Some(forced) = &self.config.forced_targets {
            for &f in forced {
                if !self.graph.contains(f) {
                    return Err(GraphError::UnknownNode(f).into());
                }
            }
            return Ok(forced.clone());
        }
        sample_from_index(&mut self.weights, self.config.m0, &mut self.rng)
    }

    pub fn step(&mut self) -> Result<StepReport, EvolutionError> {
        let t = self.t;
        let step_err = |source: AttachmentError| EvolutionError::Step { t, source };
        let graph_err = |source: GraphError| EvolutionError::Graph { t, source };

        let n_before = self.graph.node_count();
        let e_before = self.graph.edge_count();
        let targets = self.choose_targets().map_err(step_err)?;

        let appended = self.graph.add_node();
        let mut touched = vec![appended];
        for &target in &targets {
            let r = self.graph.add_edge(appended, target).map_err(graph_err)?;
            touched.push(target);
            touched.extend(r.common);
        }

        let mut deleted_node = None;
        let mut deleted_edge = None;
        match self.config.deletion {
            DeletionMode::None => {}
            DeletionMode::UniformNode => {
                // The appended node sits last in insertion order, so the
                // first n_before positions are exactly the pre-step nodes.
                let victim = self.graph.node_at(self.rng.random_range(0..n_before)).expect("index in range");
                let reports = self.graph.remove_node(victim).map_err(graph_err)?;
                deleted_node = Some((victim, reports.len()));
                touched.push(victim);
                for (v, EdgeReport { common }) in reports {
                    touched.push(v);
                    touched.extend(common);
                }
            }
            DeletionMode::UniformEdge => {
                let pool = match self.config.edge_pool {
                    EdgePool::PostAttachment => self.graph.edge_count(),
                    EdgePool::PreAttachment => e_before,
                };
                if pool > 0 {
                    let (u, v) = self.graph.edge_at(self.rng.random_range(0..pool)).expect("index in range");
                    let r = self.graph.remove_edge(u, v).map_err(graph_err)?;
                    deleted_edge = Some((u, v));
                    touched.push(u);
                    touched.push(v);
                    touched.extend(r.common);
                }
            }
        }

        touched.sort_unstable();
        touched.dedup();
        for id in touched {
            self.touch(id);
        }

        self.t += 1;
        self.since_refresh += 1;
        if self.since_refresh >= self.config.recompute_period {
            self.refresh();
        }
        Ok(StepReport { t, appended, targets, deleted_node, deleted_edge })
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: EvolutionConfig,
    pub v0_size: usize,
    /// One record per step `t = 0..=steps`.
    pub records: Vec<MetricsRecord>,
    pub graph: Graph,
}

impl Trajectory {
    /// Steps whose increment leaves the pair-attachment envelope. Empty when
    /// the envelope does not apply (deletion, or `m0 != 2`).
    pub fn bound_violations(&self) -> Vec<usize> {
        if !self.bound_applies() {
            return Vec::new();
        }
        metrics::bound_violations(&self.records, self.v0_size)
    }

    pub fn bound_applies(&self) -> bool {
        self.config.m0 == 2 && self.config.deletion == DeletionMode::None
    }
}

/// A failed run, with the records gathered before the failure.
#[derive(Debug, Clone)]
pub struct RunFailure {
    pub error: EvolutionError,
    pub partial: Option<Trajectory>,
}

impl fmt::Display for RunFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.error.fmt(f)
    }
}

impl std::error::Error for RunFailure {}

impl From<EvolutionError> for RunFailure {
    fn from(error: EvolutionError) -> Self {
        RunFailure { error, partial: None }
    }
}

pub fn run(config: &EvolutionConfig) -> Result<Trajectory, Box<RunFailure>> {
    let g = init_graph(&config.initial).map_err(|e| Box::new(e.into()))?;
    run_from(config, g, 0)
}

pub fn run_from(config: &EvolutionConfig, graph: Graph, stream: u64) -> Result<Trajectory, Box<RunFailure>> {
    let evo = Evolution::from_graph(config.clone(), graph, stream).map_err(|e| Box::new(e.into()))?;
    drive(evo)
}

fn drive(mut evo: Evolution) -> Result<Trajectory, Box<RunFailure>> {
    let steps = evo.config.steps;
    let mut records = Vec::with_capacity(steps + 1);
    let finish = |evo: Evolution, mut records: Vec<MetricsRecord>| {
        fill_increments(&mut records);
        Trajectory { v0_size: evo.v0_size, config: evo.config, records, graph: evo.graph }
    };
    match evo.record() {
        Ok(r) => records.push(r),
        Err(e) => return Err(Box::new(e.into())),
    }
    for _ in 0..steps {
        let outcome = evo.step().and_then(|_| evo.record());
        match outcome {
            Ok(r) => records.push(r),
            Err(error) => return Err(Box::new(RunFailure { error, partial: Some(finish(evo, records)) })),
        }
    }
    Ok(finish(evo, records))
}

/// Graph states after each requested step of a run (steps sorted, deduped).
pub fn snapshot_states(config: &EvolutionConfig, steps: &[usize]) -> Result<Vec<(usize, Graph)>, EvolutionError> {
    let mut wanted = steps.to_vec();
    wanted.sort_unstable();
    wanted.dedup();
    let mut evo = Evolution::new(config.clone())?;
    let mut out = Vec::with_capacity(wanted.len());
    for s in wanted {
        while evo.t() < s {
            evo.step()?;
        }
        out.push((s, evo.graph().clone()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ReplicateOptions {
    /// Average over the successful replicas instead of failing on the first
    /// failed one.
    pub tolerate_failures: bool,
    /// Cap on worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ReplicaOutcome {
    pub index: usize,
    pub seed: u64,
    pub stream: u64,
    pub result: Result<Trajectory, Box<RunFailure>>,
}

/// Per-step means across replicas.
#[derive(Debug, Clone)]
pub struct ReplicateSummary {
    pub tracked: Vec<NodeId>,
    pub t: Vec<usize>,
    /// Mean of `C̄ₜ − C̄ₜ₊₁`; `None` on the last step.
    pub delta_bar: Vec<Option<f64>>,
    /// `k_bar[j][t]`: mean degree of tracked node `j` at step `t`.
    pub k_bar: Vec<Vec<f64>>,
    pub tri_bar: Vec<Vec<f64>>,
    pub replicas: Vec<ReplicaOutcome>,
    pub succeeded: usize,
}

#[derive(Debug, Error)]
pub enum ReplicateError {
    #[error("runs must be >= 1")]
    NoRuns,
    #[error("replica {index} failed: {error}")]
    ReplicaFailed { index: usize, error: EvolutionError, replicas: Vec<ReplicaOutcome> },
    #[error("every replica failed")]
    AllFailed { replicas: Vec<ReplicaOutcome> },
    #[error("cannot start worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
}

pub fn replicate(config: &EvolutionConfig, runs: usize, opts: ReplicateOptions) -> Result<ReplicateSummary, ReplicateError> {
    if runs == 0 {
        return Err(ReplicateError::NoRuns);
    }
    config.validate()?;
    let initial = init_graph(&config.initial)?;
    let job = |index: usize| ReplicaOutcome {
        index,
        seed: config.seed,
        stream: index as u64,
        result: run_from(config, initial.clone(), index as u64),
    };
    let replicas: Vec<ReplicaOutcome> = match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| ReplicateError::Pool(e.to_string()))?
            .install(|| (0..runs).into_par_iter().map(job).collect()),
        None => (0..runs).into_par_iter().map(job).collect(),
    };

    if !opts.tolerate_failures {
        if let Some(bad) = replicas.iter().find(|r| r.result.is_err()) {
            let index = bad.index;
            let error = bad.result.as_ref().err().map(|f| f.error.clone()).expect("failed replica");
            return Err(ReplicateError::ReplicaFailed { index, error, replicas });
        }
    }
    let ok: Vec<&Trajectory> = replicas.iter().filter_map(|r| r.result.as_ref().ok()).collect();
    if ok.is_empty() {
        return Err(ReplicateError::AllFailed { replicas });
    }
    let steps = config.steps;
    let m = ok.len() as f64;
    let tracked = config.tracked_nodes.clone();
    let mut delta_bar = Vec::with_capacity(steps + 1);
    let mut k_bar = vec![Vec::with_capacity(steps + 1); tracked.len()];
    let mut tri_bar = vec![Vec::with_capacity(steps + 1); tracked.len()];
    for t in 0..=steps {
        // Reduction in replica-index order keeps the result independent of
        // scheduling.
        delta_bar.push(if t < steps {
            Some(ok.iter().map(|tr| tr.records[t].increment.unwrap_or(0.0)).sum::<f64>() / m)
        } else {
            None
        });
        for j in 0..tracked.len() {
            k_bar[j].push(ok.iter().map(|tr| tr.records[t].tracked[j].degree as f64).sum::<f64>() / m);
            tri_bar[j].push(ok.iter().map(|tr| tr.records[t].tracked[j].triangles as f64).sum::<f64>() / m);
        }
    }
    let succeeded = ok.len();
    Ok(ReplicateSummary { tracked, t: (0..=steps).collect(), delta_bar, k_bar, tri_bar, replicas, succeeded })
}

impl fmt::Display for DeletionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DeletionMode::None => "none",
            DeletionMode::UniformNode => "node",
            DeletionMode::UniformEdge => "edge",
        })
    }
}

impl FromStr for DeletionMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(DeletionMode::None),
            "node" | "uniform-node" => Ok(DeletionMode::UniformNode),
            "edge" | "uniform-edge" => Ok(DeletionMode::UniformEdge),
            other => Err(format!("unknown deletion mode `{other}` (expected none, node or edge)")),
        }
    }
}

impl fmt::Display for EdgePool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgePool::PostAttachment => "post",
            EdgePool::PreAttachment => "pre",
        })
    }
}

impl FromStr for EdgePool {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "post" => Ok(EdgePool::PostAttachment),
            "pre" => Ok(EdgePool::PreAttachment),
            other => Err(format!("unknown edge pool `{other}` (expected post or pre)")),
        }
    }
}

impl fmt::Display for InitialGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialGraph::Triangle => f.write_str("triangle"),
            InitialGraph::Rectangle => f.write_str("rectangle"),
            InitialGraph::RectangleDiag => f.write_str("rectangle-diag"),
            InitialGraph::IcosahedronFull => f.write_str("icosahedron"),
            InitialGraph::Complete(n) => write!(f, "complete:{n}"),
            InitialGraph::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl FromStr for InitialGraph {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "triangle" => Ok(InitialGraph::Triangle),
            "rectangle" => Ok(InitialGraph::Rectangle),
            "rectangle-diag" => Ok(InitialGraph::RectangleDiag),
            "icosahedron" => Ok(InitialGraph::IcosahedronFull),
            _ => {
                if let Some(n) = s.strip_prefix("complete:") {
                    n.parse()
                        .map(InitialGraph::Complete)
                        .map_err(|_| format!("invalid node count in `{s}`"))
                } else if let Some(p) = s.strip_prefix("file:") {
                    Ok(InitialGraph::File(PathBuf::from(p)))
                } else {
                    Err(format!(
                        "unknown initial graph `{s}` (expected triangle, rectangle, rectangle-diag, icosahedron, complete:N or file:PATH)"
                    ))
                }
            }
        }
    }
}
