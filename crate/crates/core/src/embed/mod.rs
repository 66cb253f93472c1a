//! Hardware graphs, minor embeddings and their verification.
//!
//! A minor embedding maps each problem node to a *chain* of hardware nodes:
//! chains are disjoint, each chain is connected, and every problem edge is
//! realised by at least one hardware edge between the two chains.

mod search;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::qubo::QuboMatrix;

pub use search::{find_embedding, find_embedding_multi, EmbedFailure, EmbedParams};

/// Undirected simple graph on nodes `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
    adj: Vec<Vec<usize>>,
}

impl Graph {
    pub fn new<I: IntoIterator<Item = (usize, usize)>>(n: usize, edges: I) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u == v {
                return Err(param(format!("self-loop on node {u}")));
            }
            if u >= n || v >= n {
                return Err(param(format!("edge ({u}, {v}) out of range for {n} nodes")));
            }
            set.insert((u.min(v), u.max(v)));
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in &set {
            adj[u].push(v);
            adj[v].push(u);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        Ok(Self { n, edges: set, adj })
    }

    /// One node per variable, one edge per off-diagonal entry.
    pub fn from_qubo(q: &QuboMatrix) -> Self {
        let edges: Vec<(usize, usize)> = q.entries().filter(|&(i, j, _)| i != j).map(|(i, j, _)| (i, j)).collect();
        Self::new(q.n(), edges).expect("QUBO entries are in range and off-diagonal")
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adj[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }
}

pub type ProblemGraph = Graph;

/// Complete graph `K_n`.
pub fn clique_graph(n: usize) -> ProblemGraph {
    let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
    Graph::new(n, edges).expect("clique edges are valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Topology {
    /// `rows x cols` grid of `K_{t,t}` cells.
    Chimera { rows: usize, cols: usize, shore: usize },
    /// Loaded from a file; no coordinate system.
    Custom,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HardwareGraph {
    pub graph: Graph,
    pub topology: Topology,
}

impl HardwareGraph {
    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn custom(graph: Graph) -> Self {
        Self { graph, topology: Topology::Custom }
    }
}

/// Chimera node index of `(row, col, shore side, k)`; side 0 couples
/// vertically, side 1 horizontally.
pub fn chimera_index(cols: usize, t: usize, row: usize, col: usize, side: usize, k: usize) -> usize {
    ((row * cols + col) * 2 + side) * t + k
}

pub fn chimera_graph(rows: usize, cols: usize, t: usize) -> Result<HardwareGraph> {
    if rows == 0 || cols == 0 || t == 0 {
        return Err(param(format!("chimera dimensions must be positive, got ({rows}, {cols}, {t})")));
    }
    let idx = |r, c, s, k| chimera_index(cols, t, r, c, s, k);
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            for a in 0..t {
                for b in 0..t {
                    edges.push((idx(r, c, 0, a), idx(r, c, 1, b)));
                }
                if r + 1 < rows {
                    edges.push((idx(r, c, 0, a), idx(r + 1, c, 0, a)));
                }
                if c + 1 < cols {
                    edges.push((idx(r, c, 1, a), idx(r, c + 1, 1, a)));
                }
            }
        }
    }
    let graph = Graph::new(2 * t * rows * cols, edges)?;
    Ok(HardwareGraph { graph, topology: Topology::Chimera { rows, cols, shore: t } })
}

/// Problem node -> hardware nodes, each chain sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding {
    pub chains: BTreeMap<usize, Vec<usize>>,
}

impl Embedding {
    pub fn new<I: IntoIterator<Item = (usize, Vec<usize>)>>(chains: I) -> Self {
        let chains = chains
            .into_iter()
            .map(|(u, mut c)| {
                c.sort_unstable();
                c.dedup();
                (u, c)
            })
            .collect();
        Self { chains }
    }

    pub fn total_nodes(&self) -> usize {
        self.chains.values().map(Vec::len).sum()
    }

    pub fn max_chain(&self) -> usize {
        self.chains.values().map(Vec::len).max().unwrap_or(0)
    }

    /// Pretty JSON, problem node keys in ascending order.
    pub fn to_json(&self) -> Result<String> {
        let value = serde_json::to_value(self)?;
        Ok(serde_json::to_string_pretty(&value)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    MissingChain { node: usize },
    EmptyChain { node: usize },
    UnknownProblemNode { node: usize },
    InvalidHardwareNode { node: usize, hardware: usize },
    Overlap { hardware: usize, first: usize, second: usize },
    Disconnected { node: usize },
    MissingCoupler { u: usize, v: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::MissingChain { node } => write!(f, "problem node {node} has no chain"),
            Self::EmptyChain { node } => write!(f, "chain of problem node {node} is empty"),
            Self::UnknownProblemNode { node } => write!(f, "chain for unknown problem node {node}"),
            Self::InvalidHardwareNode { node, hardware } => {
                write!(f, "chain of {node} uses nonexistent hardware node {hardware}")
            }
            Self::Overlap { hardware, first, second } => {
                write!(f, "hardware node {hardware} shared by chains {first} and {second}")
            }
            Self::Disconnected { node } => write!(f, "chain of problem node {node} is disconnected"),
            Self::MissingCoupler { u, v } => write!(f, "no coupler realises problem edge ({u}, {v})"),
        }
    }
}

/// Every violated embedding condition; empty means valid.
pub fn verify_embedding(p: &ProblemGraph, h: &HardwareGraph, e: &Embedding) -> Vec<Violation> {
    let hn = h.num_nodes();
    let mut out = Vec::new();
    for &node in e.chains.keys() {
        if node >= p.num_nodes() {
            out.push(Violation::UnknownProblemNode { node });
        }
    }
    let mut owner: BTreeMap<usize, usize> = BTreeMap::new();
    for u in 0..p.num_nodes() {
        let Some(chain) = e.chains.get(&u) else {
            out.push(Violation::MissingChain { node: u });
            continue;
        };
        if chain.is_empty() {
            out.push(Violation::EmptyChain { node: u });
            continue;
        }
        let mut valid = true;
        for &q in chain {
            if q >= hn {
                out.push(Violation::InvalidHardwareNode { node: u, hardware: q });
                valid = false;
                continue;
            }
            if let Some(&prev) = owner.get(&q) {
                out.push(Violation::Overlap { hardware: q, first: prev, second: u });
            } else {
                owner.insert(q, u);
            }
        }
        if valid && !chain_connected(&h.graph, chain) {
            out.push(Violation::Disconnected { node: u });
        }
    }
    for (u, v) in p.edges() {
        let (Some(cu), Some(cv)) = (e.chains.get(&u), e.chains.get(&v)) else {
            continue;
        };
        let linked = cu
            .iter()
            .filter(|&&a| a < hn)
            .any(|&a| cv.iter().any(|&b| b < hn && h.graph.has_edge(a, b)));
        if !linked {
            out.push(Violation::MissingCoupler { u, v });
        }
    }
    out
}

pub(crate) fn chain_connected(g: &Graph, chain: &[usize]) -> bool {
    let Some(&start) = chain.first() else {
        return false;
    };
    let members: BTreeSet<usize> = chain.iter().copied().collect();
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(a) = queue.pop_front() {
        for &b in g.neighbors(a) {
            if members.contains(&b) && seen.insert(b) {
                queue.push_back(b);
            }
        }
    }
    seen.len() == members.len()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingStats {
    pub total_nodes: usize,
    pub max_chain: usize,
    pub elapsed_s: f64,
}

pub fn embedding_stats(e: &Embedding, elapsed_s: f64) -> EmbeddingStats {
    EmbeddingStats { total_nodes: e.total_nodes(), max_chain: e.max_chain(), elapsed_s }
}

/// `g <n>` followed by `u v` lines with `u < v`; `#` starts a comment line.
pub fn parse_graph(text: &str) -> Result<Graph> {
    let mut n: Option<usize> = None;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |m: String| Error::Parse { line: line_no, message: m };
        let toks: Vec<&str> = line.split_whitespace().collect();
        match (n, toks.as_slice()) {
            (None, ["g", count]) => {
                n = Some(count.parse().map_err(|_| err(format!("invalid node count `{count}`")))?);
            }
            (None, _) => return Err(err("expected header `g <num_nodes>`".into())),
            (Some(count), [a, b]) => {
                let u: usize = a.parse().map_err(|_| err(format!("invalid node `{a}`")))?;
                let v: usize = b.parse().map_err(|_| err(format!("invalid node `{b}`")))?;
                if u >= v {
                    return Err(err(format!("edge ({u}, {v}) must satisfy u < v")));
                }
                if v >= count {
                    return Err(err(format!("edge ({u}, {v}) out of range for {count} nodes")));
                }
                edges.push((u, v));
            }
            (Some(_), _) => return Err(err(format!("malformed line `{line}`"))),
        }
    }
    let n = n.ok_or_else(|| Error::Parse { line: text.lines().count().max(1), message: "missing header".into() })?;
    Graph::new(n, edges)
}

pub fn serialize_graph(g: &Graph) -> String {
    let mut out = format!("g {}\n", g.num_nodes());
    for (u, v) in g.edges() {
        writeln!(out, "{u} {v}").unwrap();
    }
    out
}
