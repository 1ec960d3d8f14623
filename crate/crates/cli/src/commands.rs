use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use ca_graphlab::config::{config_entries, load_config, render_config, ConfigError};
use ca_graphlab::evi::{self, evi_sweep, Estimator, EviError};
use ca_graphlab::evolution::{replicate, run, ReplicaOutcome, ReplicateError, ReplicateOptions, ReplicateSummary};
use ca_graphlab::ingest::{parse_temporal_edges, snapshot_series, DegreeMode, EdgeFormat, IngestError, WindowMode};
use ca_graphlab::metrics::increment_bounds;
use ca_graphlab::{EvolutionConfig, EvolutionError, NodeId, Trajectory};
use serde_json::{json, Value};
use thiserror::Error;

use crate::output::{fmt_float, fmt_opt, lines, unix_seconds, Csv, Manifest, OutDir};
use crate::plot::{line_chart, Series};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Precondition(String),
    #[error("{0}")]
    Invariant(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Precondition(_) => 3,
            CliError::Invariant(_) => 4,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io(m) => CliError::Io(m),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<EvolutionError> for CliError {
    fn from(e: EvolutionError) -> Self {
        if e.is_model_precondition() {
            return CliError::Precondition(e.to_string());
        }
        match e {
            EvolutionError::InvalidConfig(_) | EvolutionError::Initial(_) => CliError::Config(e.to_string()),
            other => CliError::Invariant(other.to_string()),
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Io(m) => CliError::Io(m),
            IngestError::Parse { .. } | IngestError::EmptyInput | IngestError::ZeroWindow => {
                CliError::Config(e.to_string())
            }
            IngestError::Evolution(inner) => inner.into(),
            other => CliError::Invariant(other.to_string()),
        }
    }
}

fn config_json(cfg: &EvolutionConfig) -> Value {
    let map: serde_json::Map<String, Value> =
        config_entries(cfg).into_iter().map(|(k, v)| (k.to_string(), Value::String(v))).collect();
    Value::Object(map)
}

fn base_manifest(command: &str, started: f64, cfg: &EvolutionConfig, config_path: &Path) -> Manifest {
    let mut m = Manifest::new(command, started);
    m.set("config_path", json!(config_path.display().to_string()))
        .set("config", config_json(cfg))
        .set("config_text", json!(render_config(cfg)))
        .set("seed", json!(cfg.seed));
    m
}

fn trajectory_csv(traj: &Trajectory) -> String {
    let tracked = &traj.config.tracked_nodes;
    let mut header: Vec<String> =
        ["t", "n_nodes", "n_edges", "avg_clustering", "delta", "total_triangles", "bound_lower", "bound_upper"]
            .iter()
            .map(|s| s.to_string())
            .collect();
    for id in tracked {
        header.extend([format!("k_{id}"), format!("tri_{id}"), format!("c_{id}")]);
    }
    let mut csv = Csv::new(&header);
    let bounded = traj.bound_applies();
    for r in &traj.records {
        let (lo, hi) = if bounded {
            let env = increment_bounds(traj.v0_size, r.t);
            (fmt_float(env.lower), fmt_float(env.upper))
        } else {
            (String::new(), String::new())
        };
        let mut row = vec![
            r.t.to_string(),
            r.n_nodes.to_string(),
            r.n_edges.to_string(),
            fmt_float(r.avg_clustering),
            fmt_opt(r.increment),
            r.total_triangles.to_string(),
            lo,
            hi,
        ];
        for n in &r.tracked {
            row.extend([n.degree.to_string(), n.triangles.to_string(), fmt_float(n.clustering)]);
        }
        csv.row(&row);
    }
    csv.into_string()
}

fn delta_plot(title: &str, points: Vec<(f64, f64)>, v0: usize, bounded: bool) -> String {
    let mut series = vec![Series::new("delta", points.clone())];
    if bounded {
        let ts: Vec<f64> = points.iter().map(|p| p.0).collect();
        let env = |f: fn(&ca_graphlab::metrics::BoundEnvelope) -> f64| {
            ts.iter().map(|&t| (t, f(&increment_bounds(v0, t as usize)))).collect::<Vec<_>>()
        };
        series.push(Series::new("lower bound", env(|e| e.lower)).dashed());
        series.push(Series::new("upper bound", env(|e| e.upper)).dashed());
    }
    line_chart(title, "t", "delta", &series)
}

fn write_trajectory_outputs(out: &mut OutDir, traj: &Trajectory, final_graph: bool, plots: bool) -> Result<(), CliError> {
    out.write("trajectory.csv", &trajectory_csv(traj))?;
    if final_graph {
        out.write("final_graph.edges", &traj.graph.to_edge_list())?;
    }
    if plots {
        let pts = traj.records.iter().filter_map(|r| r.increment.map(|d| (r.t as f64, d))).collect();
        out.write("trajectory_delta.svg", &delta_plot("average clustering increment", pts, traj.v0_size, traj.bound_applies()))?;
        if !traj.config.tracked_nodes.is_empty() {
            let series: Vec<Series> = traj
                .config
                .tracked_nodes
                .iter()
                .enumerate()
                .map(|(j, id)| {
                    Series::new(
                        format!("k_{id}"),
                        traj.records.iter().map(|r| (r.t as f64, r.tracked[j].degree as f64)).collect(),
                    )
                })
                .collect();
            out.write("trajectory_degrees.svg", &line_chart("tracked degrees", "t", "degree", &series))?;
        }
    }
    Ok(())
}

pub struct EvolveArgs {
    pub config: PathBuf,
    pub out: PathBuf,
    pub final_graph: bool,
    pub plots: bool,
}

pub fn evolve(args: &EvolveArgs) -> Result<(), CliError> {
    let started = unix_seconds();
    let cfg = load_config(&args.config)?;
    let mut out = OutDir::create(&args.out)?;
    let mut manifest = base_manifest("evolve", started, &cfg, &args.config);
    match run(&cfg) {
        Ok(traj) => {
            write_trajectory_outputs(&mut out, &traj, args.final_graph, args.plots)?;
            let violations = traj.bound_violations();
            manifest.set("v0_size", json!(traj.v0_size)).set("bound_violations", json!(violations));
            manifest.finish(&mut out, "manifest.json")?;
            if let Some(t) = violations.first() {
                return Err(CliError::Invariant(format!(
                    "average clustering increment left the envelope at {} step(s), first at t = {t}",
                    violations.len()
                )));
            }
            Ok(())
        }
        Err(failure) => {
            if let Some(partial) = &failure.partial {
                write_trajectory_outputs(&mut out, partial, args.final_graph, args.plots)?;
                manifest.set("v0_size", json!(partial.v0_size));
            }
            manifest.set("error", json!(failure.error.to_string()));
            manifest.finish(&mut out, "manifest.json")?;
            Err(failure.error.into())
        }
    }
}

pub struct ReplicateArgs {
    pub config: PathBuf,
    pub out: PathBuf,
    pub runs: usize,
    pub threads: Option<usize>,
    pub tolerate_failures: bool,
    pub plots: bool,
}

fn averages_csv(s: &ReplicateSummary) -> String {
    let mut header = vec!["t".to_string(), "delta_bar".to_string()];
    for id in &s.tracked {
        header.push(format!("k_bar_{id}"));
    }
    for id in &s.tracked {
        header.push(format!("tri_bar_{id}"));
    }
    let mut csv = Csv::new(&header);
    for (row_idx, &t) in s.t.iter().enumerate() {
        let mut row = vec![t.to_string(), fmt_opt(s.delta_bar[row_idx])];
        row.extend(s.k_bar.iter().map(|k| fmt_float(k[row_idx])));
        row.extend(s.tri_bar.iter().map(|k| fmt_float(k[row_idx])));
        csv.row(&row);
    }
    csv.into_string()
}

fn write_replica_manifests(out: &mut OutDir, cfg: &EvolutionConfig, replicas: &[ReplicaOutcome]) -> Result<usize, CliError> {
    let mut violating = 0;
    for r in replicas {
        let mut m = Manifest::new("replicate", unix_seconds());
        m.set("index", json!(r.index))
            .set("seed", json!(r.seed))
            .set("stream", json!(r.stream))
            .set("config", config_json(cfg));
        match &r.result {
            Ok(traj) => {
                let v = traj.bound_violations();
                if !v.is_empty() {
                    violating += 1;
                }
                let last = traj.records.last().expect("at least the initial record");
                m.set("status", json!("ok"))
                    .set("final_nodes", json!(last.n_nodes))
                    .set("final_edges", json!(last.n_edges))
                    .set("final_avg_clustering", json!(fmt_float(last.avg_clustering)))
                    .set("bound_violations", json!(v));
            }
            Err(f) => {
                m.set("status", json!("failed")).set("error", json!(f.error.to_string()));
                if let Some(p) = &f.partial {
                    m.set("failed_after_steps", json!(p.records.len() - 1));
                }
            }
        }
        // The per-replica file list would mention only itself; keep it empty.
        let mut side = OutDir::create(&out.path().join("replicas"))?;
        m.finish(&mut side, &format!("replica_{:04}.json", r.index))?;
    }
    Ok(violating)
}

pub fn replicate_cmd(args: &ReplicateArgs) -> Result<(), CliError> {
    let started = unix_seconds();
    let cfg = load_config(&args.config)?;
    if args.runs == 0 {
        return Err(CliError::Config("--runs must be at least 1".into()));
    }
    let mut out = OutDir::create(&args.out)?;
    let mut manifest = base_manifest("replicate", started, &cfg, &args.config);
    manifest
        .set("runs", json!(args.runs))
        .set("tolerate_failures", json!(args.tolerate_failures))
        .set("replica_streams", json!("ChaCha8 seeded with `seed`, stream = replica index"));
    let opts = ReplicateOptions { tolerate_failures: args.tolerate_failures, threads: args.threads };
    match replicate(&cfg, args.runs, opts) {
        Ok(summary) => {
            out.write("averages.csv", &averages_csv(&summary))?;
            if args.plots {
                let pts = summary.t.iter().zip(&summary.delta_bar).filter_map(|(&t, d)| d.map(|d| (t as f64, d))).collect();
                let v0 = summary.replicas.iter().find_map(|r| r.result.as_ref().ok().map(|t| t.v0_size)).unwrap_or(1);
                let bounded = cfg.m0 == 2 && cfg.deletion == ca_graphlab::DeletionMode::None;
                out.write("delta_bar.svg", &delta_plot("mean clustering increment", pts, v0, bounded))?;
                if !summary.tracked.is_empty() {
                    let series: Vec<Series> = summary
                        .tracked
                        .iter()
                        .zip(&summary.k_bar)
                        .map(|(id, k)| Series::new(format!("k_bar_{id}"), summary.t.iter().map(|&t| t as f64).zip(k.iter().copied()).collect()))
                        .collect();
                    out.write("k_bar.svg", &line_chart("mean tracked degrees", "t", "degree", &series))?;
                }
            }
            let violating = write_replica_manifests(&mut out, &cfg, &summary.replicas)?;
            let failed: Vec<usize> = summary.replicas.iter().filter(|r| r.result.is_err()).map(|r| r.index).collect();
            manifest.set("succeeded", json!(summary.succeeded)).set("failed_replicas", json!(failed));
            manifest.finish(&mut out, "manifest.json")?;
            if violating > 0 {
                return Err(CliError::Invariant(format!("{violating} replica(s) left the increment envelope")));
            }
            Ok(())
        }
        Err(ReplicateError::ReplicaFailed { index, error, replicas }) => {
            write_replica_manifests(&mut out, &cfg, &replicas)?;
            manifest.set("error", json!(format!("replica {index}: {error}")));
            manifest.finish(&mut out, "manifest.json")?;
            let mapped: CliError = error.into();
            Err(match mapped {
                CliError::Precondition(m) => CliError::Precondition(format!("replica {index}: {m}")),
                CliError::Invariant(m) => CliError::Invariant(format!("replica {index}: {m}")),
                other => other,
            })
        }
        Err(ReplicateError::AllFailed { replicas }) => {
            write_replica_manifests(&mut out, &cfg, &replicas)?;
            manifest.set("error", json!("every replica failed"));
            manifest.finish(&mut out, "manifest.json")?;
            let first = replicas.into_iter().find_map(|r| r.result.err()).expect("all replicas failed");
            Err(first.error.into())
        }
        Err(ReplicateError::NoRuns) => Err(CliError::Config("--runs must be at least 1".into())),
        Err(ReplicateError::Pool(m)) => Err(CliError::Io(m)),
        Err(ReplicateError::Evolution(e)) => Err(e.into()),
    }
}

pub struct EviArgs {
    pub input: PathBuf,
    pub out: PathBuf,
    pub estimators: Vec<Estimator>,
    pub s_grid: Vec<f64>,
    pub min_exclusive: f64,
    pub plots: bool,
}

/// One numeric value per line; blank lines and `#` comments are skipped.
pub fn read_values(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut values = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| CliError::Config(format!("{}:{}: not a number: `{line}`", path.display(), idx + 1)))?;
        values.push(v);
    }
    Ok(values)
}

pub fn parse_s_grid(spec: &str) -> Result<Vec<f64>, String> {
    let grid: Vec<f64> = if let Some((range, step)) = spec.rsplit_once(':').filter(|_| spec.matches(':').count() == 2) {
        let (a, b) = range.split_once(':').expect("two colons");
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("invalid number `{s}` in s-grid"));
        let (a, b, step) = (parse(a)?, parse(b)?, parse(step)?);
        if step <= 0.0 || b < a {
            return Err("s-grid range needs start <= end and a positive step".into());
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| a + i as f64 * step).collect()
    } else {
        spec.split(',').map(|s| s.trim().parse::<f64>().map_err(|_| format!("invalid number `{s}` in s-grid"))).collect::<Result<_, _>>()?
    };
    if grid.is_empty() || grid.iter().any(|s| !(*s > 0.0 && *s < 1.0)) {
        return Err("s values must lie in (0, 1)".into());
    }
    Ok(grid)
}

pub fn parse_estimators(spec: &str) -> Result<Vec<Estimator>, String> {
    if spec.trim() == "all" {
        return Ok(Estimator::ALL.to_vec());
    }
    spec.split(',').map(|s| s.trim().parse::<Estimator>()).collect()
}

pub fn evi_cmd(args: &EviArgs) -> Result<(), CliError> {
    let started = unix_seconds();
    let values = read_values(&args.input)?;
    let sample = evi::filter_sample(&values, args.min_exclusive).map_err(|e| match e {
        EviError::EmptyAfterFilter(_) => CliError::Precondition(e.to_string()),
        other => CliError::Config(other.to_string()),
    })?;
    if sample.len() < 3 {
        return Err(CliError::Precondition(format!(
            "{} observation(s) above {}; at least 3 are needed",
            sample.len(),
            args.min_exclusive
        )));
    }
    let rows = evi_sweep(&sample, &args.estimators, &args.s_grid);
    let mut csv = Csv::new(&["estimator", "s", "k", "gamma", "valid"]);
    for r in &rows {
        csv.row(&[r.estimator.to_string(), fmt_float(r.s), r.k.to_string(), fmt_float(r.gamma), r.valid().to_string()]);
    }
    let mut out = OutDir::create(&args.out)?;
    out.write("evi_sweep.csv", &csv.into_string())?;
    if args.plots {
        let series: Vec<Series> = args
            .estimators
            .iter()
            .map(|&e| {
                Series::new(
                    e.to_string(),
                    rows.iter().filter(|r| r.estimator == e).map(|r| (r.s, if r.valid() { r.gamma } else { f64::NAN })).collect(),
                )
            })
            .collect();
        out.write("evi_sweep.svg", &line_chart("extreme value index", "s", "gamma", &series))?;
    }
    let mut manifest = Manifest::new("evi", started);
    manifest
        .set("input", json!(args.input.display().to_string()))
        .set("estimators", json!(args.estimators.iter().map(|e| e.to_string()).collect::<Vec<_>>()))
        .set("s_grid", json!(args.s_grid.iter().map(|&s| fmt_float(s)).collect::<Vec<_>>()))
        .set("min_exclusive", json!(args.min_exclusive))
        .set("n_input", json!(values.len()))
        .set("n_used", json!(sample.len()));
    manifest.finish(&mut out, "manifest.json")?;
    Ok(())
}

pub struct IngestArgs {
    pub input: PathBuf,
    pub out: PathBuf,
    pub format: EdgeFormat,
    pub window: i64,
    pub mode: WindowMode,
    pub degree: DegreeMode,
    pub tracked: Vec<NodeId>,
    pub plots: bool,
}

pub fn ingest_cmd(args: &IngestArgs) -> Result<(), CliError> {
    let started = unix_seconds();
    let file = File::open(&args.input).map_err(|e| CliError::Io(format!("{}: {e}", args.input.display())))?;
    let parsed = parse_temporal_edges(BufReader::new(file), &args.format)?;
    let series = snapshot_series(&parsed.events, args.window, args.mode, args.degree, &args.tracked)?;

    let mut header: Vec<String> =
        ["t", "n_active_edges", "avg_clustering", "delta", "total_triangles"].iter().map(|s| s.to_string()).collect();
    for id in &args.tracked {
        header.extend([format!("k_{id}"), format!("tri_{id}")]);
    }
    let mut csv = Csv::new(&header);
    for r in &series.records {
        let mut row = vec![
            r.t.to_string(),
            r.n_edges.to_string(),
            fmt_float(r.avg_clustering),
            fmt_opt(r.increment),
            r.total_triangles.to_string(),
        ];
        for n in &r.tracked {
            row.extend([n.degree.to_string(), n.triangles.to_string()]);
        }
        csv.row(&row);
    }
    let mut out = OutDir::create(&args.out)?;
    out.write("window_series.csv", &csv.into_string())?;
    out.write("final_degrees.txt", &lines(series.final_degrees.iter().map(|d| d.1)))?;
    out.write("final_triangles.txt", &lines(series.final_triangles.iter().map(|d| d.1)))?;
    if args.plots {
        let pts = series.records.iter().filter_map(|r| r.increment.map(|d| (r.t as f64, d))).collect();
        out.write("window_delta.svg", &line_chart("window clustering increment", "window", "delta", &[Series::new("delta", pts)]))?;
    }
    let format = match &args.format {
        EdgeFormat::Whitespace => json!("whitespace"),
        EdgeFormat::Csv { u_col, v_col, t_col, delimiter, has_header } => json!({
            "csv": { "u_col": u_col, "v_col": v_col, "t_col": t_col,
                     "delimiter": (*delimiter as char).to_string(), "header": has_header }
        }),
    };
    let mut manifest = Manifest::new("ingest", started);
    manifest
        .set("input", json!(args.input.display().to_string()))
        .set("format", format)
        .set("window", json!(args.window))
        .set("mode", json!(args.mode.to_string()))
        .set("degree", json!(args.degree.to_string()))
        .set("tracked", json!(args.tracked.iter().map(|i| i.0).collect::<Vec<_>>()))
        .set("origin", json!(series.origin))
        .set("events", json!(parsed.events.len()))
        .set("self_loops_dropped", json!(parsed.self_loops_dropped))
        .set("windows", json!(series.records.len()));
    manifest.finish(&mut out, "manifest.json")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn s_grid_forms() {
        let g = parse_s_grid("0.05:0.95:0.05").unwrap();
        assert_eq!(g.len(), 19);
        assert!((g[18] - 0.95).abs() < 1e-12);
        assert_eq!(parse_s_grid("0.4, 0.5,0.6").unwrap(), vec![0.4, 0.5, 0.6]);
        assert!(parse_s_grid("0:1:0.1").is_err());
        assert!(parse_s_grid("0.5:0.4:0.1").is_err());
        assert!(parse_s_grid("x").is_err());
    }

    #[test]
    fn estimator_lists() {
        assert_eq!(parse_estimators("all").unwrap().len(), 4);
        assert_eq!(parse_estimators("hill,mixed_moment").unwrap(), vec![Estimator::Hill, Estimator::MixedMoment]);
        assert!(parse_estimators("hill,pickands").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Io(String::new()).exit_code(), 1);
        assert_eq!(CliError::from(ConfigError::UnknownKey("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(EvolutionError::InvalidConfig("x".into())).exit_code(), 2);
        let pre = EvolutionError::Step { t: 0, source: ca_graphlab::AttachmentError::AllWeightsZero };
        assert_eq!(CliError::from(pre).exit_code(), 3);
        assert_eq!(CliError::from(IngestError::EmptyInput).exit_code(), 2);
    }
}
