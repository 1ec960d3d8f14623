//! Flat `key = value` experiment configuration.
//!
//! Recognized keys: `alpha`, `epsilon`, `m0`, `steps`, `deletion`,
//! `edge_pool`, `initial`, `seed`, `attachment`, `tracked_nodes`,
//! `recompute_period`, `forced_targets`. Blank lines and `#` comments are
//! ignored; unknown keys are rejected.

use std::path::Path;

use thiserror::Error;

use crate::attachment::{AttachmentFamily, AttachmentParams};
use crate::evolution::{EvolutionConfig, InitialGraph};
use crate::graph::NodeId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("key `{key}`: {message}")]
    Value { key: String, message: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("duplicate key `{0}`")]
    DuplicateKey(String),
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read config: {0}")]
    Io(String),
}

const KEYS: [&str; 12] = [
    "alpha",
    "epsilon",
    "m0",
    "steps",
    "deletion",
    "edge_pool",
    "initial",
    "seed",
    "attachment",
    "tracked_nodes",
    "recompute_period",
    "forced_targets",
];

fn value_err(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Value { key: key.to_string(), message: message.into() }
}

fn parse_ids(key: &str, raw: &str) -> Result<Vec<NodeId>, ConfigError> {
    if raw.trim().is_empty() {
        return Ok(Vec::new());
    }
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<u64>()
                .map(NodeId)
                .map_err(|_| value_err(key, format!("invalid node id `{}`", s.trim())))
        })
        .collect()
}

fn join_ids(ids: &[NodeId]) -> String {
    ids.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")
}

/// Parses config text. Relative `file:` initial-graph paths are resolved
/// against `base_dir` when given.
pub fn parse_config(text: &str, base_dir: Option<&Path>) -> Result<EvolutionConfig, ConfigError> {
    let mut cfg = EvolutionConfig::default();
    let mut seen: Vec<&str> = Vec::new();
    let mut family = AttachmentFamily::Ca;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: idx + 1,
            message: format!("expected `key = value`, found `{line}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        let known = KEYS.iter().find(|k| **k == key).ok_or_else(|| ConfigError::UnknownKey(key.to_string()))?;
        if seen.contains(known) {
            return Err(ConfigError::DuplicateKey(key.to_string()));
        }
        seen.push(known);
        let num = |what: &str| value_err(key, format!("expected {what}, found `{value}`"));
        match key {
            "alpha" => cfg.params.alpha = value.parse().map_err(|_| num("a number"))?,
            "epsilon" => cfg.params.epsilon = value.parse().map_err(|_| num("a number"))?,
            "m0" => cfg.m0 = value.parse().map_err(|_| num("an integer"))?,
            "steps" => cfg.steps = value.parse().map_err(|_| num("an integer"))?,
            "seed" => cfg.seed = value.parse().map_err(|_| num("an unsigned 64-bit integer"))?,
            "recompute_period" => cfg.recompute_period = value.parse().map_err(|_| num("an integer"))?,
            "deletion" => cfg.deletion = value.parse().map_err(|e: String| value_err(key, e))?,
            "edge_pool" => cfg.edge_pool = value.parse().map_err(|e: String| value_err(key, e))?,
            "initial" => {
                let mut init: InitialGraph = value.parse().map_err(|e: String| value_err(key, e))?;
                if let (InitialGraph::File(p), Some(base)) = (&init, base_dir) {
                    if p.is_relative() {
                        init = InitialGraph::File(base.join(p));
                    }
                }
                cfg.initial = init;
            }
            "attachment" => {
                family = match value {
                    "ca" => AttachmentFamily::Ca,
                    "lpa" => AttachmentFamily::Lpa,
                    other => return Err(value_err(key, format!("unknown family `{other}` (expected ca or lpa)"))),
                }
            }
            "tracked_nodes" => cfg.tracked_nodes = parse_ids(key, value)?,
            "forced_targets" => {
                let ids = parse_ids(key, value)?;
                cfg.forced_targets = if ids.is_empty() { None } else { Some(ids) };
            }
            _ => unreachable!("key list and match arms agree"),
        }
    }
    cfg.params.family = family;
    cfg.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<EvolutionConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text, path.parent())
}

/// Resolved configuration as ordered key/value pairs; feeding the rendered
/// text back to [`parse_config`] reproduces the same config.
pub fn config_entries(cfg: &EvolutionConfig) -> Vec<(&'static str, String)> {
    let AttachmentParams { alpha, epsilon, family } = cfg.params;
    vec![
        ("alpha", format!("{alpha:?}")),
        ("epsilon", format!("{epsilon:?}")),
        ("m0", cfg.m0.to_string()),
        ("steps", cfg.steps.to_string()),
        ("deletion", cfg.deletion.to_string()),
        ("edge_pool", cfg.edge_pool.to_string()),
        ("initial", cfg.initial.to_string()),
        ("seed", cfg.seed.to_string()),
        ("attachment", match family {
            AttachmentFamily::Ca => "ca".to_string(),
            AttachmentFamily::Lpa => "lpa".to_string(),
        }),
        ("tracked_nodes", join_ids(&cfg.tracked_nodes)),
        ("recompute_period", cfg.recompute_period.to_string()),
        ("forced_targets", cfg.forced_targets.as_deref().map(join_ids).unwrap_or_default()),
    ]
}

pub fn render_config(cfg: &EvolutionConfig) -> String {
    config_entries(cfg).into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}
