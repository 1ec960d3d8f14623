//! Timestamped interaction streams turned into windowed graph snapshots and
//! per-window clustering, triangle and degree series.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Read};
use std::str::FromStr;

use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::evolution::{EvolutionConfig, EvolutionError, Evolution};
use crate::graph::{Graph, GraphError, NodeId};
use crate::metrics::{avg_clustering, fill_increments, MetricsError, MetricsRecord, TrackedNode};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("input contains no events")]
    EmptyInput,
    #[error("window length must be positive")]
    ZeroWindow,
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
}

/// Undirected interaction between two external node ids; stored with
/// `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TemporalEdgeEvent {
    pub u: NodeId,
    pub v: NodeId,
    pub timestamp: i64,
}

impl TemporalEdgeEvent {
    /// Normalizes orientation; `None` for self-loops.
    pub fn new(a: u64, b: u64, timestamp: i64) -> Option<Self> {
        match a.cmp(&b) {
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Less => Some(TemporalEdgeEvent { u: NodeId(a), v: NodeId(b), timestamp }),
            std::cmp::Ordering::Greater => Some(TemporalEdgeEvent { u: NodeId(b), v: NodeId(a), timestamp }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EdgeFormat {
    /// `u v t` per line, whitespace separated, `#` comments.
    Whitespace,
    /// Delimited text with zero-based column indices for u, v and t.
    Csv { u_col: usize, v_col: usize, t_col: usize, delimiter: u8, has_header: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedEvents {
    /// Sorted by timestamp (stable with respect to input order).
    pub events: Vec<TemporalEdgeEvent>,
    pub self_loops_dropped: usize,
}

fn parse_field<T: FromStr>(raw: &str, line: usize, what: &str) -> Result<T, IngestError> {
    raw.trim().parse().map_err(|_| IngestError::Parse { line, message: format!("invalid {what} `{}`", raw.trim()) })
}

pub fn parse_temporal_edges<R: Read>(reader: R, format: &EdgeFormat) -> Result<ParsedEvents, IngestError> {
    let mut events = Vec::new();
    let mut self_loops = 0;
    let mut push = |a: u64, b: u64, t: i64| match TemporalEdgeEvent::new(a, b, t) {
        Some(e) => events.push(e),
        None => self_loops += 1,
    };
    match format {
        EdgeFormat::Whitespace => {
            for (idx, line) in std::io::BufReader::new(reader).lines().enumerate() {
                let lineno = idx + 1;
                let line = line.map_err(|e| IngestError::Io(e.to_string()))?;
                let body = line.split('#').next().unwrap_or("").trim();
                if body.is_empty() {
                    continue;
                }
                let f: Vec<&str> = body.split_whitespace().collect();
                if f.len() != 3 {
                    return Err(IngestError::Parse {
                        line: lineno,
                        message: format!("expected `u v t`, found {} fields", f.len()),
                    });
                }
                push(parse_field(f[0], lineno, "node id")?, parse_field(f[1], lineno, "node id")?, parse_field(f[2], lineno, "timestamp")?);
            }
        }
        EdgeFormat::Csv { u_col, v_col, t_col, delimiter, has_header } => {
            let mut rdr = csv::ReaderBuilder::new()
                .delimiter(*delimiter)
                .has_headers(*has_header)
                .comment(Some(b'#'))
                .flexible(true)
                .from_reader(reader);
            for rec in rdr.records() {
                let rec = rec.map_err(|e| IngestError::Parse {
                    line: e.position().map(|p| p.line() as usize).unwrap_or(0),
                    message: e.to_string(),
                })?;
                let lineno = rec.position().map(|p| p.line() as usize).unwrap_or(0);
                let col = |c: usize| {
                    rec.get(c).ok_or_else(|| IngestError::Parse { line: lineno, message: format!("missing column {c}") })
                };
                push(
                    parse_field(col(*u_col)?, lineno, "node id")?,
                    parse_field(col(*v_col)?, lineno, "node id")?,
                    parse_field(col(*t_col)?, lineno, "timestamp")?,
                );
            }
        }
    }
    if events.is_empty() && self_loops == 0 {
        return Err(IngestError::EmptyInput);
    }
    if self_loops > 0 {
        log::warn!("dropped {self_loops} self-loop event(s)");
    }
    events.sort_by_key(|e| e.timestamp);
    Ok(ParsedEvents { events, self_loops_dropped: self_loops })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowMode {
    /// Each window's graph holds every edge seen so far.
    Cumulative,
    /// Each window's graph holds only the edges seen in that window.
    PerWindow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegreeMode {
    /// Number of events incident to the node.
    Multiplicity,
    /// Number of distinct neighbors in the window's simple graph.
    Simple,
}

impl FromStr for WindowMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cumulative" => Ok(WindowMode::Cumulative),
            "per-window" | "window" => Ok(WindowMode::PerWindow),
            other => Err(format!("unknown window mode `{other}` (expected cumulative or per-window)")),
        }
    }
}

impl fmt::Display for WindowMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WindowMode::Cumulative => "cumulative",
            WindowMode::PerWindow => "per-window",
        })
    }
}

impl FromStr for DegreeMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "multiplicity" => Ok(DegreeMode::Multiplicity),
            "simple" => Ok(DegreeMode::Simple),
            other => Err(format!("unknown degree mode `{other}` (expected multiplicity or simple)")),
        }
    }
}

impl fmt::Display for DegreeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DegreeMode::Multiplicity => "multiplicity",
            DegreeMode::Simple => "simple",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowSeries {
    pub window_length: i64,
    pub mode: WindowMode,
    pub degree_mode: DegreeMode,
    /// Timestamp at which window 0 starts.
    pub origin: i64,
    /// One record per window; `tracked` ids are external ids and `degree`
    /// follows `degree_mode`.
    pub records: Vec<MetricsRecord>,
    /// Events per window.
    pub event_counts: Vec<usize>,
    /// Node degrees (per `degree_mode`) and triangle counts in the last
    /// window, over all nodes ever seen, sorted by external id.
    pub final_degrees: Vec<(NodeId, u64)>,
    pub final_triangles: Vec<(NodeId, u64)>,
}

/// Maps external ids onto dense internal ids `1..=n` in ascending order.
struct IdMap {
    ext: Vec<NodeId>,
    int: FxHashMap<NodeId, NodeId>,
}

impl IdMap {
    fn new(events: &[TemporalEdgeEvent], tracked: &[NodeId]) -> Self {
        let mut ext: Vec<NodeId> = events.iter().flat_map(|e| [e.u, e.v]).chain(tracked.iter().copied()).collect();
        ext.sort_unstable();
        ext.dedup();
        let int = ext.iter().enumerate().map(|(k, &e)| (e, NodeId(k as u64 + 1))).collect();
        IdMap { ext, int }
    }

    fn internal(&self, e: NodeId) -> NodeId {
        self.int[&e]
    }

    fn empty_graph(&self) -> Graph {
        let mut g = Graph::new();
        for _ in 0..self.ext.len() {
            g.add_node();
        }
        g
    }
}

pub fn snapshot_series(
    events: &[TemporalEdgeEvent],
    window_length: i64,
    mode: WindowMode,
    degree_mode: DegreeMode,
    tracked: &[NodeId],
) -> Result<WindowSeries, IngestError> {
    if window_length <= 0 {
        return Err(IngestError::ZeroWindow);
    }
    if events.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    let ids = IdMap::new(events, tracked);
    let origin = events.iter().map(|e| e.timestamp).min().expect("nonempty");
    let last = events.iter().map(|e| e.timestamp).max().expect("nonempty");
    let n_windows = ((last - origin) / window_length + 1) as usize;
    let mut buckets: Vec<Vec<&TemporalEdgeEvent>> = vec![Vec::new(); n_windows];
    for e in events {
        buckets[((e.timestamp - origin) / window_length) as usize].push(e);
    }

    let mut graph = ids.empty_graph();
    let mut multiplicity: Vec<u64> = vec![0; ids.ext.len() + 1];
    let mut records = Vec::with_capacity(n_windows);
    let mut event_counts = Vec::with_capacity(n_windows);
    for (w, bucket) in buckets.iter().enumerate() {
        if mode == WindowMode::PerWindow {
            graph = ids.empty_graph();
            multiplicity.iter_mut().for_each(|m| *m = 0);
        }
        for e in bucket {
            let (a, b) = (ids.internal(e.u), ids.internal(e.v));
            multiplicity[a.index()] += 1;
            multiplicity[b.index()] += 1;
            if !graph.has_edge(a, b) {
                graph.add_edge(a, b)?;
            }
        }
        event_counts.push(bucket.len());
        let c = avg_clustering(&graph)?;
        let mut rec = MetricsRecord::observe(&graph, w, c, &[])?;
        rec.tracked = tracked
            .iter()
            .map(|&ext| {
                let int = ids.internal(ext);
                let obs = TrackedNode::observe(&graph, int);
                let degree = match degree_mode {
                    DegreeMode::Simple => obs.degree,
                    DegreeMode::Multiplicity => multiplicity[int.index()] as usize,
                };
                TrackedNode { id: ext, degree, ..obs }
            })
            .collect();
        records.push(rec);
    }
    fill_increments(&mut records);

    let mut final_degrees = Vec::with_capacity(ids.ext.len());
    let mut final_triangles = Vec::with_capacity(ids.ext.len());
    for (k, &ext) in ids.ext.iter().enumerate() {
        let int = NodeId(k as u64 + 1);
        let d = match degree_mode {
            DegreeMode::Simple => graph.degree(int)? as u64,
            DegreeMode::Multiplicity => multiplicity[int.index()],
        };
        final_degrees.push((ext, d));
        final_triangles.push((ext, graph.triangles(int)?));
    }
    Ok(WindowSeries {
        window_length,
        mode,
        degree_mode,
        origin,
        records,
        event_counts,
        final_degrees,
        final_triangles,
    })
}

/// Per step, `(degree, triangles)` of each tracked node.
pub type TrackedSeries = Vec<Vec<(usize, u64)>>;

/// Emits the edge stream of a growing (deletion-free) evolution: edges of
/// the initial graph at timestamp 0 and edges created at step `t` at
/// timestamp `t + 1`. With window length 1 in cumulative mode, window `t`
/// reproduces the evolved graph after `t` steps. Returns the events and the
/// per-step `(degree, triangles)` of the config's tracked nodes.
pub fn events_from_evolution(
    config: &EvolutionConfig,
) -> Result<(Vec<TemporalEdgeEvent>, TrackedSeries), IngestError> {
    if config.deletion != crate::evolution::DeletionMode::None {
        return Err(IngestError::Evolution(EvolutionError::InvalidConfig(
            "event synthesis needs a run without deletion".into(),
        )));
    }
    let mut evo = Evolution::new(config.clone())?;
    let mut events: Vec<TemporalEdgeEvent> = {
        let mut e: Vec<_> = evo.graph().edges().collect();
        e.sort_unstable();
        e.into_iter().filter_map(|(u, v)| TemporalEdgeEvent::new(u.0, v.0, 0)).collect()
    };
    let observe = |g: &Graph| -> Vec<(usize, u64)> {
        config
            .tracked_nodes
            .iter()
            .map(|&i| {
                let o = TrackedNode::observe(g, i);
                (o.degree, o.triangles)
            })
            .collect()
    };
    let mut truth = vec![observe(evo.graph())];
    for _ in 0..config.steps {
        let r = evo.step()?;
        for t in r.targets {
            events.extend(TemporalEdgeEvent::new(r.appended.0, t.0, r.t as i64 + 1));
        }
        truth.push(observe(evo.graph()));
    }
    Ok((events, truth))
}

/// Counts of each distinct value; handy for summarizing final samples.
pub fn value_counts(values: &[u64]) -> BTreeMap<u64, usize> {
    let mut m = BTreeMap::new();
    for &v in values {
        *m.entry(v).or_insert(0) += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attachment::AttachmentParams;
    use crate::evolution::InitialGraph;

    fn n(i: u64) -> NodeId {
        NodeId(i)
    }

    fn parse(text: &str) -> Result<ParsedEvents, IngestError> {
        parse_temporal_edges(text.as_bytes(), &EdgeFormat::Whitespace)
    }

    #[test]
    fn normalizes_direction() {
        let p = parse("1 2 100\n2 1 100\n").unwrap();
        assert_eq!(p.events.len(), 2);
        assert!(p.events.iter().all(|e| (e.u, e.v) == (n(1), n(2))));
    }

    #[test]
    fn drops_self_loops() {
        let p = parse("3 3 50\n1 2 7\n").unwrap();
        assert_eq!(p.self_loops_dropped, 1);
        assert_eq!(p.events.len(), 1);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(parse("1 2 3\n1 x 4\n"), Err(IngestError::Parse { line: 2, .. })));
        assert!(matches!(parse("1 2\n"), Err(IngestError::Parse { line: 1, .. })));
        assert_eq!(parse("# nothing\n\n"), Err(IngestError::EmptyInput));
    }

    #[test]
    fn sorts_by_timestamp() {
        let p = parse("1 2 30\n2 3 10 # early\n3 4 20\n").unwrap();
        let ts: Vec<i64> = p.events.iter().map(|e| e.timestamp).collect();
        assert_eq!(ts, vec![10, 20, 30]);
    }

    #[test]
    fn csv_with_column_mapping() {
        let text = "time,src,dst,weight\n5,10,20,1\n6,20,30,1\n";
        let fmt = EdgeFormat::Csv { u_col: 1, v_col: 2, t_col: 0, delimiter: b',', has_header: true };
        let p = parse_temporal_edges(text.as_bytes(), &fmt).unwrap();
        assert_eq!(p.events, vec![
            TemporalEdgeEvent::new(10, 20, 5).unwrap(),
            TemporalEdgeEvent::new(20, 30, 6).unwrap()
        ]);
        let bad = "time,src,dst\n5,10\n";
        assert!(matches!(parse_temporal_edges(bad.as_bytes(), &fmt), Err(IngestError::Parse { .. })));
    }

    #[test]
    fn single_window_triangle() {
        let p = parse("1 2 0\n2 3 1\n1 3 2\n").unwrap();
        let s = snapshot_series(&p.events, 10, WindowMode::PerWindow, DegreeMode::Simple, &[n(1)]).unwrap();
        assert_eq!(s.records.len(), 1);
        assert_eq!(s.records[0].avg_clustering, 1.0);
        assert_eq!(s.records[0].total_triangles, 1);
        assert_eq!(s.records[0].increment, None);
    }

    #[test]
    fn empty_second_window_removes_edges() {
        let p = parse("1 2 0\n2 3 1\n1 3 2\n4 5 25\n").unwrap();
        let s = snapshot_series(&p.events, 10, WindowMode::PerWindow, DegreeMode::Simple, &[n(1)]).unwrap();
        assert_eq!(s.records.len(), 3);
        assert_eq!(s.event_counts, vec![3, 0, 1]);
        assert_eq!(s.records[1].avg_clustering, 0.0);
        assert_eq!(s.records[1].n_edges, 0);
        assert_eq!(s.records[1].tracked[0].degree, 0);
        // all five nodes count in the denominator: three of them have c = 1
        assert!((s.records[0].avg_clustering - 0.6).abs() < 1e-15);
        assert!((s.records[0].increment.unwrap() - 0.6).abs() < 1e-15);

        let c = snapshot_series(&p.events, 10, WindowMode::Cumulative, DegreeMode::Simple, &[n(1)]).unwrap();
        assert_eq!(c.records[1].tracked[0].degree, 2);
        assert_eq!(c.records[2].n_edges, 4);
    }

    #[test]
    fn multiplicity_versus_simple_degree() {
        let p = parse("1 2 0\n2 1 0\n1 2 1\n1 3 1\n2 3 1\n").unwrap();
        let m = snapshot_series(&p.events, 5, WindowMode::PerWindow, DegreeMode::Multiplicity, &[n(1)]).unwrap();
        let s = snapshot_series(&p.events, 5, WindowMode::PerWindow, DegreeMode::Simple, &[n(1)]).unwrap();
        assert_eq!(m.records[0].tracked[0].degree, 4);
        assert_eq!(s.records[0].tracked[0].degree, 2);
        assert_eq!(m.records[0].tracked[0].triangles, 1);
        assert_eq!(s.records[0].tracked[0].triangles, 1);
        assert_eq!(m.final_degrees, vec![(n(1), 4), (n(2), 4), (n(3), 2)]);
    }

    #[test]
    fn duplicated_events_leave_simple_series_unchanged() {
        let text = "1 2 0\n2 3 1\n3 4 2\n4 1 3\n1 3 4\n2 5 11\n5 3 12\n";
        let once = parse(text).unwrap().events;
        let mut twice = once.clone();
        twice.extend(once.iter().copied());
        twice.sort_by_key(|e| e.timestamp);
        for mode in [WindowMode::PerWindow, WindowMode::Cumulative] {
            let a = snapshot_series(&once, 10, mode, DegreeMode::Simple, &[n(1), n(3)]).unwrap();
            let b = snapshot_series(&twice, 10, mode, DegreeMode::Simple, &[n(1), n(3)]).unwrap();
            assert_eq!(a.records, b.records);
            assert_eq!(b.event_counts.iter().sum::<usize>(), twice.len());
        }
    }

    #[test]
    fn window_partition_conserves_events() {
        let text: String = (0..97).map(|k| format!("{} {} {}\n", k % 7 + 1, k % 5 + 9, k * 3)).collect();
        let p = parse(&text).unwrap();
        for len in [1, 2, 10, 1000] {
            let s = snapshot_series(&p.events, len, WindowMode::PerWindow, DegreeMode::Simple, &[]).unwrap();
            assert_eq!(s.event_counts.iter().sum::<usize>(), p.events.len());
        }
        assert_eq!(
            snapshot_series(&p.events, 0, WindowMode::PerWindow, DegreeMode::Simple, &[]),
            Err(IngestError::ZeroWindow)
        );
    }

    #[test]
    fn synthetic_stream_round_trip() {
        let config = EvolutionConfig {
            params: AttachmentParams::ca(1.0, 0.5).unwrap(),
            initial: InitialGraph::Triangle,
            steps: 60,
            seed: 17,
            tracked_nodes: vec![n(1), n(2), n(10)],
            ..Default::default()
        };
        let (events, truth) = events_from_evolution(&config).unwrap();
        let s = snapshot_series(&events, 1, WindowMode::Cumulative, DegreeMode::Simple, &config.tracked_nodes).unwrap();
        assert_eq!(s.records.len(), truth.len());
        for (rec, want) in s.records.iter().zip(&truth) {
            let got: Vec<_> = rec.tracked.iter().map(|t| (t.degree, t.triangles)).collect();
            assert_eq!(&got, want, "window {}", rec.t);
        }
    }
}
