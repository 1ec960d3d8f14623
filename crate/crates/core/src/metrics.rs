//! Graph-level statistics, the per-step increment envelope of the average
//! clustering coefficient, and the one-step conditional increment
//! probabilities of node degrees and triangle counts for pair attachment.

use rand::Rng;
use thiserror::Error;

use crate::attachment::{
    attachment_distribution, pair_probability, pair_probability_raw, sample_targets, AttachmentError,
    AttachmentParams, ProbabilityVector,
};
use crate::graph::{Graph, GraphError, NodeId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("triangle corner sum {0} is not divisible by 3")]
    InternalInconsistency(u64),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Attachment(#[from] AttachmentError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackedNode {
    pub id: NodeId,
    pub degree: usize,
    pub triangles: u64,
    pub clustering: f64,
}

impl TrackedNode {
    /// Reads the node from `g`; absent nodes (not yet born, or deleted)
    /// report zeros.
    pub fn observe(g: &Graph, id: NodeId) -> Self {
        if !g.contains(id) {
            return TrackedNode { id, degree: 0, triangles: 0, clustering: 0.0 };
        }
        TrackedNode {
            id,
            degree: g.degree(id).unwrap_or(0),
            triangles: g.triangles(id).unwrap_or(0),
            clustering: g.clustering_coefficient(id).unwrap_or(0.0),
        }
    }
}

/// Snapshot of the graph after step `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub t: usize,
    pub n_nodes: usize,
    pub n_edges: usize,
    pub avg_clustering: f64,
    /// `C̄ₜ − C̄ₜ₊₁`; `None` on the last record of a series.
    pub increment: Option<f64>,
    pub total_triangles: u64,
    pub tracked: Vec<TrackedNode>,
}

impl MetricsRecord {
    pub fn observe(g: &Graph, t: usize, avg_clustering: f64, tracked: &[NodeId]) -> Result<Self, MetricsError> {
        Ok(MetricsRecord {
            t,
            n_nodes: g.node_count(),
            n_edges: g.edge_count(),
            avg_clustering,
            increment: None,
            total_triangles: triangles_from_corners(g.corner_sum())?,
            tracked: tracked.iter().map(|&id| TrackedNode::observe(g, id)).collect(),
        })
    }
}

/// Fills `increment` on every record but the last from consecutive averages.
pub fn fill_increments(records: &mut [MetricsRecord]) {
    for k in 0..records.len() {
        records[k].increment = records.get(k + 1).map(|next| records[k].avg_clustering - next.avg_clustering);
    }
}

/// Mean of the local clustering coefficients over all present nodes.
pub fn avg_clustering(g: &Graph) -> Result<f64, MetricsError> {
    if g.is_empty() {
        return Err(MetricsError::EmptyGraph);
    }
    let mut ids = g.sorted_nodes();
    ids.sort_unstable();
    let sum: f64 = ids.iter().map(|&i| g.clustering_coefficient(i).unwrap_or(0.0)).sum();
    Ok(sum / g.node_count() as f64)
}

fn triangles_from_corners(corners: u64) -> Result<u64, MetricsError> {
    if !corners.is_multiple_of(3) {
        return Err(MetricsError::InternalInconsistency(corners));
    }
    Ok(corners / 3)
}

/// Number of triangles in the graph, from the per-node counts.
pub fn total_triangles(g: &Graph) -> Result<u64, MetricsError> {
    let corners: u64 = g.nodes().map(|i| g.triangles(i).unwrap_or(0)).sum();
    triangles_from_corners(corners)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundEnvelope {
    pub lower: f64,
    pub upper: f64,
}

impl BoundEnvelope {
    pub fn contains(&self, increment: f64) -> bool {
        self.lower <= increment && increment <= self.upper
    }
}

/// Envelope for `C̄ₜ − C̄ₜ₊₁` under pair attachment without deletion.
pub fn increment_bounds(v0_size: usize, t: usize) -> BoundEnvelope {
    let denom = (v0_size + t + 1) as f64;
    BoundEnvelope { lower: -3.0 / denom, upper: (7.0 / 3.0) / denom }
}

/// Steps whose increment leaves the envelope. Only meaningful for runs with
/// two targets per step and no deletion.
pub fn bound_violations(records: &[MetricsRecord], v0_size: usize) -> Vec<usize> {
    records
        .iter()
        .filter_map(|r| r.increment.map(|d| (r.t, d)))
        .filter(|&(t, d)| !increment_bounds(v0_size, t).contains(d))
        .map(|(t, _)| t)
        .collect()
}

/// Probability that node `i` is one of the two sampled targets.
pub fn degree_increment_probability(dist: &ProbabilityVector, i: NodeId) -> Result<f64, MetricsError> {
    let pi = dist.get(i).ok_or(AttachmentError::NotInDistribution(i))?;
    let mut acc = 0.0;
    for (j, pj) in dist.iter() {
        if pj >= 1.0 {
            return Err(AttachmentError::DegenerateProbability(j).into());
        }
        if j != i {
            acc += pj / (1.0 - pj);
        }
    }
    Ok(pi * (1.0 + acc))
}

/// Probability that the triangle count of `i` grows at the next step: the new
/// node must attach to `i` and to one of its neighbors.
pub fn triangle_increment_probability(g: &Graph, dist: &ProbabilityVector, i: NodeId) -> Result<f64, MetricsError> {
    let mut acc = 0.0;
    for j in g.sorted_neighbors(i)? {
        acc += pair_probability(dist, i, j)?;
    }
    Ok(acc)
}

/// Expected number of triangles created at the next step: the probability
/// that the sampled pair is an existing edge.
pub fn expected_triangle_gain(g: &Graph, dist: &ProbabilityVector) -> Result<f64, MetricsError> {
    let mut edges: Vec<_> = g.edges().collect();
    edges.sort_unstable();
    let mut acc = 0.0;
    for (a, b) in edges {
        acc += pair_probability(dist, a, b)?;
    }
    Ok(acc)
}

/// Per-state outcome of the conditional-increment checks.
#[derive(Debug, Clone, PartialEq)]
pub struct StateCheck {
    pub step: usize,
    pub n_nodes: usize,
    pub degree_probs: Vec<(NodeId, f64)>,
    pub triangle_probs: Vec<(NodeId, f64)>,
    pub min_degree_prob: f64,
    pub min_triangle_prob: f64,
    /// `Σᵢ p⁽¹⁾ᵢ`, equal to 2 for pair attachment.
    pub degree_prob_sum: f64,
    pub expected_triangle_gain: f64,
    /// Max |closed form − pair enumeration| over p⁽¹⁾, p⁽²⁾ and the total
    /// triangle gain; `None` when the state exceeded the enumeration cap.
    pub enumeration_discrepancy: Option<f64>,
    pub monte_carlo: Option<MonteCarloCheck>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloCheck {
    pub replays: usize,
    /// Largest |z| of the empirical mean degree increment against p⁽¹⁾.
    pub max_abs_z_degree: f64,
    /// Largest |z| of the empirical mean triangle increment against p⁽²⁾.
    pub max_abs_z_triangles: f64,
    pub mean_degree_increments: Vec<(NodeId, f64)>,
    pub mean_triangle_increments: Vec<(NodeId, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SubmartingaleReport {
    pub states: Vec<StateCheck>,
}

impl SubmartingaleReport {
    pub fn max_enumeration_discrepancy(&self) -> f64 {
        self.states.iter().filter_map(|s| s.enumeration_discrepancy).fold(0.0, f64::max)
    }

    pub fn max_abs_z(&self) -> f64 {
        self.states
            .iter()
            .filter_map(|s| s.monte_carlo.as_ref())
            .map(|m| m.max_abs_z_degree.max(m.max_abs_z_triangles))
            .fold(0.0, f64::max)
    }

    /// All conditional increments nonnegative, i.e. degrees, triangle counts
    /// and the total triangle count drift upward in expectation.
    pub fn nondecreasing_in_expectation(&self) -> bool {
        self.states
            .iter()
            .all(|s| s.min_degree_prob >= 0.0 && s.min_triangle_prob >= 0.0 && s.expected_triangle_gain >= 0.0)
    }
}

/// Increments of (degree, triangles) per original node, and of the total
/// triangle count, when a new node attaches to `targets`. `scratch` is
/// restored apart from the retired id of the temporary node.
fn attach_and_measure(
    scratch: &mut Graph,
    nodes: &[NodeId],
    targets: &[NodeId],
) -> Result<(Vec<(usize, u64)>, u64), GraphError> {
    let before: Vec<_> = nodes.iter().map(|&i| Ok((scratch.degree(i)?, scratch.triangles(i)?))).collect::<Result<_, GraphError>>()?;
    let corners_before = scratch.corner_sum();
    let x = scratch.add_node();
    for &t in targets {
        scratch.add_edge(x, t)?;
    }
    let mut inc = Vec::with_capacity(nodes.len());
    for (k, &i) in nodes.iter().enumerate() {
        inc.push((scratch.degree(i)? - before[k].0, scratch.triangles(i)? - before[k].1));
    }
    let gained = (scratch.corner_sum() - corners_before) / 3;
    scratch.remove_node(x)?;
    Ok((inc, gained))
}

/// Checks one state: closed-form p⁽¹⁾/p⁽²⁾, optionally against enumeration of
/// all target pairs (states with at most `enumeration_cap` nodes) and against
/// `replays` Monte-Carlo replays of the next step.
pub fn check_state<R: Rng + ?Sized>(
    g: &Graph,
    step: usize,
    params: &AttachmentParams,
    enumeration_cap: usize,
    replays: usize,
    rng: &mut R,
) -> Result<StateCheck, MetricsError> {
    let dist = attachment_distribution(g, params)?;
    let nodes = g.sorted_nodes();
    let mut degree_probs = Vec::with_capacity(nodes.len());
    let mut triangle_probs = Vec::with_capacity(nodes.len());
    for &i in &nodes {
        degree_probs.push((i, degree_increment_probability(&dist, i)?));
        triangle_probs.push((i, triangle_increment_probability(g, &dist, i)?));
    }
    let gain = expected_triangle_gain(g, &dist)?;

    let enumeration_discrepancy = if nodes.len() <= enumeration_cap {
        let mut scratch = g.clone();
        let mut e_deg = vec![0.0; nodes.len()];
        let mut e_tri = vec![0.0; nodes.len()];
        let mut e_gain = 0.0;
        for a in 0..nodes.len() {
            for b in a + 1..nodes.len() {
                let p = pair_probability_raw(dist.probs()[a], dist.probs()[b]);
                if p == 0.0 {
                    continue;
                }
                let (inc, gained) = attach_and_measure(&mut scratch, &nodes, &[nodes[a], nodes[b]])?;
                for (k, (dk, dt)) in inc.into_iter().enumerate() {
                    e_deg[k] += p * dk as f64;
                    e_tri[k] += p * dt as f64;
                }
                e_gain += p * gained as f64;
            }
        }
        let mut worst = (e_gain - gain).abs();
        for k in 0..nodes.len() {
            worst = worst.max((e_deg[k] - degree_probs[k].1).abs());
            worst = worst.max((e_tri[k] - triangle_probs[k].1).abs());
        }
        Some(worst)
    } else {
        None
    };

    let monte_carlo = if replays > 0 {
        let mut scratch = g.clone();
        let mut sum_deg = vec![0u64; nodes.len()];
        let mut sum_tri = vec![0u64; nodes.len()];
        for _ in 0..replays {
            let targets = sample_targets(g, params, 2, rng)?;
            let (inc, _) = attach_and_measure(&mut scratch, &nodes, &targets)?;
            for (k, (dk, dt)) in inc.into_iter().enumerate() {
                sum_deg[k] += dk as u64;
                sum_tri[k] += dt;
            }
        }
        let r = replays as f64;
        let z = |sum: u64, p: f64| -> f64 {
            let mean = sum as f64 / r;
            let var = p * (1.0 - p) / r;
            if var <= 0.0 {
                if (mean - p).abs() < 1e-12 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                (mean - p) / var.sqrt()
            }
        };
        let max_abs_z_degree = (0..nodes.len()).map(|k| z(sum_deg[k], degree_probs[k].1).abs()).fold(0.0, f64::max);
        let max_abs_z_triangles =
            (0..nodes.len()).map(|k| z(sum_tri[k], triangle_probs[k].1).abs()).fold(0.0, f64::max);
        Some(MonteCarloCheck {
            replays,
            max_abs_z_degree,
            max_abs_z_triangles,
            mean_degree_increments: nodes.iter().zip(&sum_deg).map(|(&i, &s)| (i, s as f64 / r)).collect(),
            mean_triangle_increments: nodes.iter().zip(&sum_tri).map(|(&i, &s)| (i, s as f64 / r)).collect(),
        })
    } else {
        None
    };

    Ok(StateCheck {
        step,
        n_nodes: nodes.len(),
        min_degree_prob: degree_probs.iter().map(|e| e.1).fold(f64::INFINITY, f64::min),
        min_triangle_prob: triangle_probs.iter().map(|e| e.1).fold(f64::INFINITY, f64::min),
        degree_prob_sum: degree_probs.iter().map(|e| e.1).sum(),
        degree_probs,
        triangle_probs,
        expected_triangle_gain: gain,
        enumeration_discrepancy,
        monte_carlo,
    })
}

/// Runs [`check_state`] over a list of `(step, graph)` states.
pub fn submartingale_check<R: Rng + ?Sized>(
    states: &[(usize, Graph)],
    params: &AttachmentParams,
    enumeration_cap: usize,
    replays: usize,
    rng: &mut R,
) -> Result<SubmartingaleReport, MetricsError> {
    let mut report = SubmartingaleReport::default();
    for (step, g) in states {
        report.states.push(check_state(g, *step, params, enumeration_cap, replays, rng)?);
    }
    Ok(report)
}

/// Running sum of local clustering coefficients with Neumaier compensation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
