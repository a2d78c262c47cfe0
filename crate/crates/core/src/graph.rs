//! Simple undirected graphs, file readers, test-family generators and the
//! graph Laplacian.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Smallest vertex count accepted by the relaxations.
pub const MIN_VERTICES: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("line {line}: malformed header: {reason}")]
    MalformedHeader { line: usize, reason: String },
    #[error("line {line}: malformed entry: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: vertex {vertex} outside [1, {n}]")]
    VertexOutOfRange { line: usize, vertex: i64, n: usize },
    #[error("line {line}: self-loop on vertex {vertex}")]
    SelfLoop { line: usize, vertex: usize },
    #[error("line {line}: duplicate edge {{{u}, {v}}}")]
    DuplicateEdge { line: usize, u: usize, v: usize },
    #[error("graph has {n} vertices, at least {MIN_VERTICES} required")]
    TooFewVertices { n: usize },
    #[error("header announces {expected} edges but {found} were read")]
    EdgeCountMismatch { expected: usize, found: usize },
    #[error("invalid generator parameters: {0}")]
    InvalidParameters(String),
    #[error("G({n}, {p}) sample with seed {seed} is disconnected")]
    DisconnectedSample { n: usize, p: f64, seed: u64 },
}

/// Input file encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GraphFormat {
    /// Header `n m` followed by `m` lines `i j`.
    #[value(name = "edgelist")]
    EdgeList,
    /// METIS adjacency: header `n m`, line `1 + i` lists the neighbours of `i`.
    Metis,
}

/// A simple undirected graph on vertices `0..n`.
///
/// Edges are stored once, as `(u, v)` with `u < v`, in sorted order. Files
/// and user-facing output are 1-indexed; only the parsers and
/// [`Graph::to_edge_list`] convert.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from 0-indexed edges, rejecting loops and repeats.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, GraphError> {
        if n < MIN_VERTICES {
            return Err(GraphError::TooFewVertices { n });
        }
        let mut set = BTreeSet::new();
        for (k, (u, v)) in edges.into_iter().enumerate() {
            for w in [u, v] {
                if w >= n {
                    return Err(GraphError::VertexOutOfRange { line: k + 1, vertex: w as i64 + 1, n });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop { line: k + 1, vertex: u + 1 });
            }
            let e = (u.min(v), u.max(v));
            if !set.insert(e) {
                return Err(GraphError::DuplicateEdge { line: k + 1, u: e.0 + 1, v: e.1 + 1 });
            }
        }
        Ok(Self::from_sorted(n, set.into_iter().collect()))
    }

    fn from_sorted(n: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Self { n, edges, adjacency }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// Edges as 0-indexed pairs `(u, v)`, `u < v`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &w in &self.adjacency[u] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }

    /// Graph Laplacian `D - A` as a dense matrix.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.n, self.n);
        for &(u, v) in &self.edges {
            l[(u, v)] = -1.0;
            l[(v, u)] = -1.0;
            l[(u, u)] += 1.0;
            l[(v, v)] += 1.0;
        }
        l
    }

    /// Serializes in the edge-list format read by [`parse_graph`].
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.m());
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "{} {}", u + 1, v + 1);
        }
        out
    }

    /// Serializes in METIS adjacency format.
    pub fn to_metis(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.m());
        for list in &self.adjacency {
            let line: Vec<String> = list.iter().map(|w| (w + 1).to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

/// Parses a graph file. Lines starting with `%` or `#` are comments.
pub fn parse_graph(text: &str, format: GraphFormat) -> Result<Graph, GraphError> {
    match format {
        GraphFormat::EdgeList => parse_edge_list(text),
        GraphFormat::Metis => parse_metis(text),
    }
}

fn is_comment(line: &str) -> bool {
    let t = line.trim_start();
    t.starts_with('%') || t.starts_with('#')
}

fn parse_header(line_no: usize, line: &str) -> Result<(usize, usize), GraphError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() < 2 {
        return Err(GraphError::MalformedHeader {
            line: line_no,
            reason: format!("expected `n m`, found {line:?}"),
        });
    }
    let parse = |s: &str| {
        s.parse::<usize>().map_err(|_| GraphError::MalformedHeader {
            line: line_no,
            reason: format!("{s:?} is not a non-negative integer"),
        })
    };
    let n = parse(fields[0])?;
    let m = parse(fields[1])?;
    // METIS allows a third `fmt` field; only the unweighted form is supported.
    if let Some(fmt) = fields.get(2) {
        if !fmt.trim_start_matches('0').is_empty() {
            return Err(GraphError::MalformedHeader {
                line: line_no,
                reason: format!("weighted format code {fmt} not supported"),
            });
        }
    }
    if n < MIN_VERTICES {
        return Err(GraphError::TooFewVertices { n });
    }
    Ok((n, m))
}

fn parse_vertex(line_no: usize, token: &str, n: usize) -> Result<usize, GraphError> {
    let v: i64 = token.parse().map_err(|_| GraphError::MalformedLine {
        line: line_no,
        reason: format!("{token:?} is not an integer"),
    })?;
    if v < 1 || v as u64 > n as u64 {
        return Err(GraphError::VertexOutOfRange { line: line_no, vertex: v, n });
    }
    Ok(v as usize - 1)
}

fn parse_edge_list(text: &str) -> Result<Graph, GraphError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty() && !is_comment(l));
    let (hline, header) = lines.next().ok_or(GraphError::MalformedHeader {
        line: 1,
        reason: "empty input".into(),
    })?;
    let (n, m) = parse_header(hline, header)?;
    let mut seen = BTreeSet::new();
    for (line_no, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(GraphError::MalformedLine {
                line: line_no,
                reason: format!("expected `i j`, found {line:?}"),
            });
        }
        let u = parse_vertex(line_no, fields[0], n)?;
        let v = parse_vertex(line_no, fields[1], n)?;
        if u == v {
            return Err(GraphError::SelfLoop { line: line_no, vertex: u + 1 });
        }
        let e = (u.min(v), u.max(v));
        if !seen.insert(e) {
            return Err(GraphError::DuplicateEdge { line: line_no, u: e.0 + 1, v: e.1 + 1 });
        }
    }
    if seen.len() != m {
        return Err(GraphError::EdgeCountMismatch { expected: m, found: seen.len() });
    }
    Ok(Graph::from_sorted(n, seen.into_iter().collect()))
}

fn parse_metis(text: &str) -> Result<Graph, GraphError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !is_comment(l));
    // Skip blank lines before the header only; afterwards a blank line is an
    // isolated vertex.
    let (hline, header) = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or(GraphError::MalformedHeader { line: 1, reason: "empty input".into() })?;
    let (n, m) = parse_header(hline, header)?;
    let mut edges = BTreeSet::new();
    let mut half_edges = 0usize;
    let mut vertex = 0usize;
    for (line_no, line) in lines {
        if vertex == n {
            if line.trim().is_empty() {
                continue;
            }
            return Err(GraphError::MalformedLine {
                line: line_no,
                reason: format!("more than {n} adjacency lines"),
            });
        }
        let mut row = BTreeSet::new();
        for tok in line.split_whitespace() {
            let w = parse_vertex(line_no, tok, n)?;
            if w == vertex {
                return Err(GraphError::SelfLoop { line: line_no, vertex: w + 1 });
            }
            if !row.insert(w) {
                return Err(GraphError::DuplicateEdge {
                    line: line_no,
                    u: vertex.min(w) + 1,
                    v: vertex.max(w) + 1,
                });
            }
            half_edges += 1;
            edges.insert((vertex.min(w), vertex.max(w)));
        }
        vertex += 1;
    }
    if vertex < n {
        return Err(GraphError::MalformedLine {
            line: text.lines().count(),
            reason: format!("expected {n} adjacency lines, found {vertex}"),
        });
    }
    // Each edge appears in both endpoint lines.
    if half_edges != 2 * edges.len() {
        return Err(GraphError::MalformedLine {
            line: hline,
            reason: "adjacency lists are not symmetric".into(),
        });
    }
    if edges.len() != m {
        return Err(GraphError::EdgeCountMismatch { expected: m, found: edges.len() });
    }
    Ok(Graph::from_sorted(n, edges.into_iter().collect()))
}

/// Parametrized graph families used for tests and benchmarks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Cycle(usize),
    Path(usize),
    Complete(usize),
    CompleteBipartite(usize, usize),
    /// Erdős–Rényi `G(n, p)` with a fixed seed.
    Gnp { n: usize, p: f64, seed: u64 },
}

impl std::str::FromStr for Family {
    type Err = GraphError;

    /// Parses `cycle:5`, `path:4`, `complete:6`, `bipartite:2,3`,
    /// `gnp:10,0.5,1` (seed optional, defaults to 0).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GraphError::InvalidParameters(format!("cannot parse family {s:?}"));
        let (name, args) = s.split_once(':').ok_or_else(bad)?;
        let args: Vec<&str> = args.split(',').map(str::trim).collect();
        let int = |i: usize| args.get(i).and_then(|a| a.parse::<usize>().ok()).ok_or_else(bad);
        match (name, args.len()) {
            ("cycle", 1) => Ok(Family::Cycle(int(0)?)),
            ("path", 1) => Ok(Family::Path(int(0)?)),
            ("complete", 1) => Ok(Family::Complete(int(0)?)),
            ("bipartite" | "complete-bipartite", 2) => Ok(Family::CompleteBipartite(int(0)?, int(1)?)),
            ("gnp", 2 | 3) => {
                let p = args[1].parse::<f64>().map_err(|_| bad())?;
                let seed = match args.get(2) {
                    Some(a) => a.parse::<u64>().map_err(|_| bad())?,
                    None => 0,
                };
                Ok(Family::Gnp { n: int(0)?, p, seed })
            }
            _ => Err(bad()),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Family::Cycle(n) => write!(f, "cycle{n}"),
            Family::Path(n) => write!(f, "path{n}"),
            Family::Complete(n) => write!(f, "K{n}"),
            Family::CompleteBipartite(a, b) => write!(f, "K{a}x{b}"),
            Family::Gnp { n, p, seed } => write!(f, "gnp{n}_{p}_s{seed}"),
        }
    }
}

/// Generates a member of a graph family. `G(n, p)` samples are deterministic
/// in the seed; a disconnected sample yields [`GraphError::DisconnectedSample`].
pub fn generate_family(family: Family) -> Result<Graph, GraphError> {
    match family {
        Family::Cycle(n) => Graph::new(n, (0..n).map(|i| (i, (i + 1) % n))),
        Family::Path(n) => Graph::new(n, (1..n).map(|i| (i - 1, i))),
        Family::Complete(n) => {
            Graph::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
        }
        Family::CompleteBipartite(a, b) => {
            if a == 0 || b == 0 {
                return Err(GraphError::InvalidParameters(format!(
                    "complete bipartite sides must be non-empty, got ({a}, {b})"
                )));
            }
            Graph::new(a + b, (0..a).flat_map(|i| (a..a + b).map(move |j| (i, j))))
        }
        Family::Gnp { n, p, seed } => {
            if !(0.0..=1.0).contains(&p) {
                return Err(GraphError::InvalidParameters(format!("p = {p} outside [0, 1]")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut edges = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if rng.gen::<f64>() < p {
                        edges.push((i, j));
                    }
                }
            }
            let g = Graph::new(n, edges)?;
            if !g.is_connected() {
                return Err(GraphError::DisconnectedSample { n, p, seed });
            }
            Ok(g)
        }
    }
}
