//! Clustering-attachment weights, the induced attachment distribution, the
//! closed-form law of the sampled target pair, and weighted sampling of
//! distinct targets.

use rand::Rng;
use thiserror::Error;

use crate::graph::{clustering_from, Graph, GraphError, NodeId};
use crate::weights::{SampleError, WeightIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttachmentFamily {
    /// Clustering attachment: weight `c^α + ε`.
    Ca,
    /// Linear preferential attachment: weight equal to the degree.
    Lpa,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttachmentError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("invalid attachment parameter: {0}")]
    InvalidParams(String),
    #[error("all attachment weights are zero")]
    AllWeightsZero,
    #[error("need {needed} nodes with positive attachment weight, only {available} eligible")]
    InsufficientEligibleNodes { needed: usize, available: usize },
    #[error("degenerate probability: node {0} carries all attachment mass")]
    DegenerateProbability(NodeId),
    #[error("pair probability needs two distinct nodes, got {0} twice")]
    SameNode(NodeId),
    #[error("node {0} is not in the distribution")]
    NotInDistribution(NodeId),
}

impl From<SampleError> for AttachmentError {
    fn from(e: SampleError) -> Self {
        match e {
            SampleError::Insufficient { needed, available } => {
                AttachmentError::InsufficientEligibleNodes { needed, available }
            }
            SampleError::AllZero => AttachmentError::AllWeightsZero,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttachmentParams {
    pub alpha: f64,
    pub epsilon: f64,
    pub family: AttachmentFamily,
}

impl AttachmentParams {
    pub fn ca(alpha: f64, epsilon: f64) -> Result<Self, AttachmentError> {
        let p = AttachmentParams { alpha, epsilon, family: AttachmentFamily::Ca };
        p.validate()?;
        Ok(p)
    }

    pub fn lpa() -> Self {
        AttachmentParams { alpha: 0.0, epsilon: 0.0, family: AttachmentFamily::Lpa }
    }

    pub fn validate(&self) -> Result<(), AttachmentError> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(AttachmentError::InvalidParams(format!("alpha must be finite and >= 0, got {}", self.alpha)));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(AttachmentError::InvalidParams(format!(
                "epsilon must be finite and >= 0, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// Attachment weight for a node with the given degree and triangle count.
    #[inline]
    pub fn weight_for(&self, degree: usize, triangles: u64) -> f64 {
        match self.family {
            AttachmentFamily::Lpa => degree as f64,
            AttachmentFamily::Ca => {
                let c = clustering_from(degree, triangles);
                // 0^0 = 0: alpha = 0 reduces to the indicator of c > 0.
                let base = if c <= 0.0 {
                    0.0
                } else if self.alpha == 0.0 {
                    1.0
                } else {
                    c.powf(self.alpha)
                };
                base + self.epsilon
            }
        }
    }
}

pub fn ca_weight(g: &Graph, i: NodeId, params: &AttachmentParams) -> Result<f64, AttachmentError> {
    Ok(params.weight_for(g.degree(i)?, g.triangles(i)?))
}

/// Attachment probabilities over the present nodes, sorted by node id.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    nodes: Vec<NodeId>,
    probs: Vec<f64>,
}

impl ProbabilityVector {
    /// Normalizes raw `(node, weight)` pairs.
    pub fn from_weights(mut entries: Vec<(NodeId, f64)>) -> Result<Self, AttachmentError> {
        entries.sort_unstable_by_key(|e| e.0);
        let total: f64 = entries.iter().map(|e| e.1).sum();
        if total.is_nan() || total <= 0.0 {
            return Err(AttachmentError::AllWeightsZero);
        }
        let (nodes, probs) = entries.into_iter().map(|(n, w)| (n, w / total)).unzip();
        Ok(ProbabilityVector { nodes, probs })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.nodes.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn get(&self, i: NodeId) -> Option<f64> {
        self.nodes.binary_search(&i).ok().map(|k| self.probs[k])
    }

    fn require(&self, i: NodeId) -> Result<f64, AttachmentError> {
        self.get(i).ok_or(AttachmentError::NotInDistribution(i))
    }

    /// Nodes with strictly positive probability.
    pub fn support(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.iter().filter(|e| e.1 > 0.0).map(|e| e.0)
    }
}

pub fn attachment_distribution(g: &Graph, params: &AttachmentParams) -> Result<ProbabilityVector, AttachmentError> {
    let mut entries = Vec::with_capacity(g.node_count());
    for i in g.nodes() {
        entries.push((i, ca_weight(g, i, params)?));
    }
    ProbabilityVector::from_weights(entries)
}

/// Probability that sequential weighted sampling without replacement of two
/// nodes returns the unordered pair `{i, j}`, from their single-draw
/// probabilities.
#[inline]
pub fn pair_probability_raw(pi: f64, pj: f64) -> f64 {
    pi * pj * (2.0 - pi - pj) / ((1.0 - pi) * (1.0 - pj))
}

pub fn pair_probability(dist: &ProbabilityVector, i: NodeId, j: NodeId) -> Result<f64, AttachmentError> {
    if i == j {
        return Err(AttachmentError::SameNode(i));
    }
    let (pi, pj) = (dist.require(i)?, dist.require(j)?);
    if pi >= 1.0 {
        return Err(AttachmentError::DegenerateProbability(i));
    }
    if pj >= 1.0 {
        return Err(AttachmentError::DegenerateProbability(j));
    }
    Ok(pair_probability_raw(pi, pj))
}

/// Builds a weight index over the graph's node slots.
pub fn weight_index(g: &Graph, params: &AttachmentParams) -> Result<WeightIndex, AttachmentError> {
    let mut w = vec![0.0; g.id_bound()];
    for i in g.nodes() {
        w[i.index()] = ca_weight(g, i, params)?;
    }
    Ok(WeightIndex::from_weights(w))
}

/// Draws `m0` distinct targets by sequential weighted sampling without
/// replacement. Returned in draw order.
pub fn sample_targets<R: Rng + ?Sized>(
    g: &Graph,
    params: &AttachmentParams,
    m0: usize,
    rng: &mut R,
) -> Result<Vec<NodeId>, AttachmentError> {
    let mut index = weight_index(g, params)?;
    sample_from_index(&mut index, m0, rng)
}

pub fn sample_from_index<R: Rng + ?Sized>(
    index: &mut WeightIndex,
    m0: usize,
    rng: &mut R,
) -> Result<Vec<NodeId>, AttachmentError> {
    if index.positive_count() == 0 {
        return Err(AttachmentError::AllWeightsZero);
    }
    let slots = index.draw_distinct(m0, rng)?;
    Ok(slots.into_iter().map(|s| NodeId(s as u64)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn n(i: u64) -> NodeId {
        NodeId(i)
    }

    fn k3() -> Graph {
        Graph::from_edges([(1, 2), (2, 3), (1, 3)]).unwrap()
    }

    fn rectangle() -> Graph {
        Graph::from_edges([(1, 2), (2, 3), (3, 4), (4, 1)]).unwrap()
    }

    fn rect_diag() -> Graph {
        Graph::from_edges([(1, 2), (2, 3), (3, 4), (4, 1), (1, 3)]).unwrap()
    }

    fn dist(p: &[f64]) -> ProbabilityVector {
        ProbabilityVector::from_weights(p.iter().enumerate().map(|(k, &w)| (n(k as u64 + 1), w)).collect()).unwrap()
    }

    #[test]
    fn weights() {
        assert_eq!(ca_weight(&k3(), n(1), &AttachmentParams::ca(1.0, 0.0).unwrap()).unwrap(), 1.0);
        assert_eq!(ca_weight(&rectangle(), n(1), &AttachmentParams::ca(1.0, 1.0).unwrap()).unwrap(), 1.0);
        assert_eq!(ca_weight(&rectangle(), n(1), &AttachmentParams::ca(0.0, 0.0).unwrap()).unwrap(), 0.0);
        // degree 4 with one triangle: c = 2/12
        let g = Graph::from_edges([(1, 2), (1, 3), (1, 4), (1, 5), (2, 3)]).unwrap();
        let p0 = AttachmentParams::ca(0.0, 0.0).unwrap();
        assert_eq!(ca_weight(&g, n(1), &p0).unwrap(), 1.0);
        assert_eq!(ca_weight(&g, n(1), &AttachmentParams::lpa()).unwrap(), 4.0);
        assert_eq!(p0.weight_for(9, 9), 1.0); // c = 0.25
    }

    #[test]
    fn rejects_negative_params() {
        assert!(AttachmentParams::ca(-1.0, 0.0).is_err());
        assert!(AttachmentParams::ca(1.0, -0.5).is_err());
        assert!(AttachmentParams::ca(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn distributions() {
        let d = attachment_distribution(&k3(), &AttachmentParams::ca(1.0, 0.0).unwrap()).unwrap();
        for &p in d.probs() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        let d = attachment_distribution(&rectangle(), &AttachmentParams::ca(1.0, 1.0).unwrap()).unwrap();
        assert!(d.probs().iter().all(|&p| p == 0.25));
        let d = attachment_distribution(&rect_diag(), &AttachmentParams::ca(1.0, 0.0).unwrap()).unwrap();
        for (p, want) in d.probs().iter().zip([0.2, 0.3, 0.2, 0.3]) {
            assert!((p - want).abs() < 1e-15);
        }
        assert_eq!(
            attachment_distribution(&rectangle(), &AttachmentParams::ca(1.0, 0.0).unwrap()),
            Err(AttachmentError::AllWeightsZero)
        );
    }

    #[test]
    fn pair_probabilities() {
        let u = dist(&[1.0, 1.0, 1.0]);
        assert!((pair_probability(&u, n(1), n(2)).unwrap() - 1.0 / 3.0).abs() < 1e-15);

        let d = dist(&[0.5, 0.3, 0.2]);
        // two ordered draws: 1 then 2, or 2 then 1
        let oracle = 0.5 * 0.3 / (1.0 - 0.5) + 0.3 * 0.5 / (1.0 - 0.3);
        let p12 = pair_probability(&d, n(1), n(2)).unwrap();
        assert!((p12 - oracle).abs() < 1e-15);
        assert!((p12 - 0.18 / 0.35).abs() < 1e-15);
        let total = p12 + pair_probability(&d, n(1), n(3)).unwrap() + pair_probability(&d, n(2), n(3)).unwrap();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pair_probability_errors() {
        let d = dist(&[1.0, 0.0, 0.0]);
        assert_eq!(pair_probability(&d, n(1), n(2)), Err(AttachmentError::DegenerateProbability(n(1))));
        assert_eq!(pair_probability(&d, n(2), n(2)), Err(AttachmentError::SameNode(n(2))));
        assert_eq!(pair_probability(&d, n(2), n(7)), Err(AttachmentError::NotInDistribution(n(7))));
    }

    #[test]
    fn sampling_k3_pairs_uniformly() {
        let g = k3();
        let params = AttachmentParams::ca(1.0, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let draws = 30_000;
        let mut counts = [0usize; 3];
        for _ in 0..draws {
            let mut t = sample_targets(&g, &params, 2, &mut rng).unwrap();
            t.sort();
            let k = match (t[0].0, t[1].0) {
                (1, 2) => 0,
                (1, 3) => 1,
                (2, 3) => 2,
                other => panic!("unexpected pair {other:?}"),
            };
            counts[k] += 1;
        }
        let p = 1.0 / 3.0;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - draws as f64 * p).abs() < 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn sampling_needs_eligible_nodes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = sample_targets(&rectangle(), &AttachmentParams::ca(1.0, 0.0).unwrap(), 2, &mut rng).unwrap_err();
        assert_eq!(err, AttachmentError::AllWeightsZero);
        // one eligible node only
        let g = Graph::from_edges([(1, 2), (1, 3), (2, 3), (3, 4), (4, 5)]).unwrap();
        let err = sample_targets(&g, &AttachmentParams::ca(1.0, 0.0).unwrap(), 4, &mut rng).unwrap_err();
        assert_eq!(err, AttachmentError::InsufficientEligibleNodes { needed: 4, available: 3 });
    }

    #[test]
    fn sampling_is_deterministic_for_a_seed() {
        let g = rect_diag();
        let params = AttachmentParams::ca(1.0, 0.5).unwrap();
        let a: Vec<_> = {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            (0..50).map(|_| sample_targets(&g, &params, 3, &mut rng).unwrap()).collect()
        };
        let b: Vec<_> = {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            (0..50).map(|_| sample_targets(&g, &params, 3, &mut rng).unwrap()).collect()
        };
        assert_eq!(a, b);
    }
}
