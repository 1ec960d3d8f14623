//! Random graphs grown by clustering attachment.
//!
//! A new node attaches to `m0` existing nodes chosen by weighted sampling
//! without replacement, with weights driven by local clustering coefficients
//! (or by degree, in the preferential-attachment cross-check mode). Runs may
//! delete a uniform node or edge per step. The crate tracks degrees, triangle
//! counts and clustering exactly, checks the per-step envelope of the
//! average clustering increment, evaluates the one-step conditional
//! increment probabilities, and estimates extreme value indices of degree and
//! triangle-count samples. The [`ingest`] module applies the same metrics to
//! timestamped edge streams.

pub mod attachment;
pub mod config;
pub mod evi;
pub mod evolution;
pub mod graph;
pub mod ingest;
pub mod metrics;
pub mod weights;

pub use attachment::{AttachmentError, AttachmentFamily, AttachmentParams, ProbabilityVector};
pub use evolution::{DeletionMode, EvolutionConfig, EvolutionError, InitialGraph, Trajectory};
pub use graph::{Graph, GraphError, NodeId};
pub use metrics::MetricsRecord;
