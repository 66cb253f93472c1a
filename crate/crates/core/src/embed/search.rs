//! Chain-growth heuristic with negotiated congestion.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{chain_connected, verify_embedding, Embedding, Graph, HardwareGraph, ProblemGraph};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbedParams {
    pub seed: u64,
    /// Wall-clock budget in seconds.
    pub timeout_s: f64,
    /// Rip-up-and-reroute passes before giving up.
    pub max_passes: usize,
    /// Chain-shortening rounds after a valid embedding is found.
    pub tighten_rounds: usize,
}

impl Default for EmbedParams {
    fn default() -> Self {
        Self { seed: 0, timeout_s: 60.0, max_passes: 64, tighten_rounds: 2 }
    }
}

impl EmbedParams {
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmbedFailure {
    #[error("problem has {problem} nodes but hardware only {hardware}")]
    InsufficientNodes { problem: usize, hardware: usize },
    #[error("no overlap-free embedding after {passes} passes ({elapsed_s:.3} s)")]
    Exhausted { passes: usize, elapsed_s: f64 },
    #[error("timed out after {passes} passes ({elapsed_s:.3} s)")]
    Timeout { passes: usize, elapsed_s: f64 },
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Search<'a> {
    p: &'a ProblemGraph,
    h: &'a Graph,
    usage: Vec<u32>,
    /// Per-node weight, doubled each pass the node ends up shared.
    history: Vec<f64>,
    /// Global sharing multiplier, doubled each pass.
    present: f64,
    chains: Vec<Vec<usize>>,
    rng: ChaCha8Rng,
}

impl Search<'_> {
    fn cost(&self, q: usize, forbid: bool) -> f64 {
        match self.usage[q] {
            0 => 1.0,
            _ if forbid => f64::INFINITY,
            u => self.history[q] * (1.0 + self.present * f64::from(u)),
        }
    }

    fn take(&mut self, u: usize) -> Vec<usize> {
        let chain = std::mem::take(&mut self.chains[u]);
        for &q in &chain {
            self.usage[q] -= 1;
        }
        chain
    }

    fn put(&mut self, u: usize, chain: Vec<usize>) {
        for &q in &chain {
            self.usage[q] += 1;
        }
        self.chains[u] = chain;
    }

    /// Node-weighted shortest paths out of `sources`; a path's length is
    /// the summed cost of its interior nodes.
    fn dijkstra(&self, sources: &[usize], forbid: bool) -> (Vec<f64>, Vec<usize>) {
        let n = self.h.num_nodes();
        let mut dist = vec![f64::INFINITY; n];
        let mut parent = vec![usize::MAX; n];
        let mut is_source = vec![false; n];
        let mut heap = BinaryHeap::new();
        for &s in sources {
            dist[s] = 0.0;
            is_source[s] = true;
            heap.push(Entry { dist: 0.0, node: s });
        }
        while let Some(Entry { dist: d, node: a }) = heap.pop() {
            if d > dist[a] {
                continue;
            }
            let step = if is_source[a] { 0.0 } else { self.cost(a, forbid) };
            if !step.is_finite() {
                continue;
            }
            for &b in self.h.neighbors(a) {
                let nd = d + step;
                if nd < dist[b] {
                    dist[b] = nd;
                    parent[b] = a;
                    heap.push(Entry { dist: nd, node: b });
                }
            }
        }
        (dist, parent)
    }

    fn pick(&mut self, score: &[f64]) -> Option<usize> {
        let best = score.iter().copied().fold(f64::INFINITY, f64::min);
        if !best.is_finite() {
            return None;
        }
        let ties: Vec<usize> = (0..score.len()).filter(|&q| score[q] == best).collect();
        ties.choose(&mut self.rng).copied()
    }

    /// Places `u` at the root minimising its cost plus the path costs to
    /// every placed neighbour. Each connecting path is split: the half next
    /// to the root joins `u`, the half next to the neighbour extends that
    /// neighbour's chain. With `forbid`, occupied nodes are unusable and
    /// paths stay whole.
    fn route(&mut self, u: usize, forbid: bool) -> Option<Vec<usize>> {
        let placed: Vec<usize> = self.p.neighbors(u).iter().copied().filter(|&v| !self.chains[v].is_empty()).collect();
        let n = self.h.num_nodes();
        let mut score: Vec<f64> = (0..n).map(|q| self.cost(q, forbid)).collect();
        let mut trees = Vec::with_capacity(placed.len());
        for &v in &placed {
            let (dist, parent) = self.dijkstra(&self.chains[v], forbid);
            for (s, d) in score.iter_mut().zip(&dist) {
                *s += d;
            }
            trees.push((dist, parent));
        }
        let root = self.pick(&score)?;

        let mut chain = BTreeSet::from([root]);
        let mut halves = Vec::new();
        for (&v, (dist, parent)) in placed.iter().zip(&trees) {
            let mut path = Vec::new();
            let mut q = root;
            while parent[q] != usize::MAX {
                let next = parent[q];
                if dist[next] == 0.0 && parent[next] == usize::MAX {
                    break; // reached v's chain
                }
                path.push(next);
                q = next;
            }
            if forbid {
                chain.extend(path);
            } else {
                let keep = path.len().div_ceil(2);
                chain.extend(path[..keep].iter().copied());
                halves.push((v, path.split_off(keep)));
            }
        }
        let mut given = BTreeSet::new();
        for (v, half) in halves {
            // a half that crosses another path would break contiguity
            if half.iter().any(|q| chain.contains(q) || given.contains(q)) {
                chain.extend(half);
                continue;
            }
            given.extend(half.iter().copied());
            for &q in &half {
                self.usage[q] += 1;
            }
            self.chains[v].extend(half);
            self.chains[v].sort_unstable();
        }
        Some(chain.into_iter().collect())
    }

    /// Whether `chain(u)` minus `x` stays connected and still touches every
    /// placed neighbour.
    fn removable(&self, u: usize, x: usize) -> bool {
        let rest: Vec<usize> = self.chains[u].iter().copied().filter(|&q| q != x).collect();
        if rest.is_empty() || !chain_connected(self.h, &rest) {
            return false;
        }
        self.p.neighbors(u).iter().all(|&v| {
            let cv = &self.chains[v];
            cv.is_empty()
                || rest
                    .iter()
                    .any(|&a| cv.binary_search(&a).is_ok() || self.h.neighbors(a).iter().any(|b| cv.binary_search(b).is_ok()))
        })
    }

    /// Drops chain nodes nothing depends on.
    fn trim(&mut self, u: usize) {
        loop {
            let mut changed = false;
            for x in self.chains[u].clone().into_iter().rev() {
                if self.removable(u, x) {
                    self.chains[u].retain(|&q| q != x);
                    self.usage[x] -= 1;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }

    fn overused(&self) -> Vec<usize> {
        (0..self.usage.len()).filter(|&q| self.usage[q] > 1).collect()
    }
}

/// Searches for a minor embedding of `p` into `h`. Deterministic for a
/// fixed seed unless the timeout cuts the search short.
pub fn find_embedding(p: &ProblemGraph, h: &HardwareGraph, params: &EmbedParams) -> Result<Embedding, EmbedFailure> {
    let start = Instant::now();
    let np = p.num_nodes();
    let nh = h.num_nodes();
    if np > nh {
        return Err(EmbedFailure::InsufficientNodes { problem: np, hardware: nh });
    }
    let mut order: Vec<usize> = (0..np).collect();
    order.sort_by(|&a, &b| p.degree(b).cmp(&p.degree(a)).then(a.cmp(&b)));
    let mut s = Search {
        p,
        h: &h.graph,
        usage: vec![0; nh],
        history: vec![1.0; nh],
        present: 1.0,
        chains: vec![Vec::new(); np],
        rng: seed::rng(params.seed),
    };
    let timed_out = |passes| {
        let elapsed_s = start.elapsed().as_secs_f64();
        (elapsed_s > params.timeout_s).then_some(EmbedFailure::Timeout { passes, elapsed_s })
    };

    let mut reroute = order.clone();
    let mut passes = 0;
    loop {
        if passes >= params.max_passes.max(1) {
            return Err(EmbedFailure::Exhausted { passes, elapsed_s: start.elapsed().as_secs_f64() });
        }
        // lift every conflicting chain before re-placing any of them
        for &u in &reroute {
            s.take(u);
        }
        for &u in &reroute {
            if let Some(err) = timed_out(passes) {
                return Err(err);
            }
            let chain = s.route(u, false).expect("unrestricted routing always finds a root");
            s.put(u, chain);
        }
        for u in 0..np {
            s.trim(u);
        }
        passes += 1;
        let over = s.overused();
        if over.is_empty() {
            break;
        }
        for &q in &over {
            s.history[q] *= 2.0;
        }
        s.present *= 2.0;
        reroute = (0..np).filter(|&u| s.chains[u].iter().any(|q| over.binary_search(q).is_ok())).collect();
        reroute.shuffle(&mut s.rng);
    }

    for _ in 0..params.tighten_rounds {
        let mut improved = false;
        for &u in &order {
            if timed_out(passes).is_some() {
                break;
            }
            let old = s.take(u);
            match s.route(u, true) {
                Some(new) if new.len() < old.len() => {
                    s.put(u, new);
                    s.trim(u);
                    improved = true;
                }
                _ => s.put(u, old),
            }
        }
        if !improved {
            break;
        }
    }

    let e = Embedding::new(s.chains.into_iter().enumerate());
    let violations = verify_embedding(p, h, &e);
    assert!(violations.is_empty(), "internal embedding error: {violations:?}");
    Ok(e)
}

/// Runs one search per seed in parallel and keeps the embedding with the
/// fewest hardware nodes, lowest seed on ties. Returns the first failure
/// (in seed order) when every seed fails.
pub fn find_embedding_multi(
    p: &ProblemGraph,
    h: &HardwareGraph,
    seeds: &[u64],
    params: &EmbedParams,
) -> Result<(u64, Embedding), EmbedFailure> {
    let results: Vec<(u64, Result<Embedding, EmbedFailure>)> =
        seeds.par_iter().map(|&sd| (sd, find_embedding(p, h, &params.with_seed(sd)))).collect();
    let mut best: Option<(u64, Embedding)> = None;
    let mut first_err = None;
    for (sd, r) in results {
        match r {
            Ok(e) => {
                let better = best.as_ref().is_none_or(|(bs, be)| (e.total_nodes(), sd) < (be.total_nodes(), *bs));
                if better {
                    best = Some((sd, e));
                }
            }
            Err(err) => {
                first_err.get_or_insert(err);
            }
        }
    }
    best.ok_or_else(|| first_err.unwrap_or(EmbedFailure::Exhausted { passes: 0, elapsed_s: 0.0 }))
}
