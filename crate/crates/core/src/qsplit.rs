//! Recursive quadrant decomposition of a QUBO matrix.
//!
//! A problem larger than the cut dimension is split at `m = ceil(n / 2)`
//! into the upper-left block (variables `0..m`), the bottom-right block
//! (`m..n`) and the upper-right coupling block; the bottom-left quadrant of
//! an upper-triangular matrix is always empty.
//!
//! ```text
//!   +------+------+
//!   |  UL  |  UR  |     UL, BR: recursive sub-QUBOs
//!   +------+------+     UR:     couplings, solved padded to n variables
//!   |  0   |  BR  |
//!   +------+------+
//! ```
//!
//! The diagonal-block solutions are concatenated into conflict-free
//! candidates (S1). Each S1 candidate is paired with each coupling-block
//! candidate; the variables on which the pair disagrees are re-optimised as a
//! sub-QUBO conditioned on the agreed values, and only the `k` best full
//! assignments survive.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{dim, param, Result};
use crate::qubo::{Assignment, QuboMatrix, Sample, SampleSet};
use crate::samplers::{Sampler, SamplerOutcome};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QSplitConfig {
    /// Problems of at most this many variables go straight to the sampler.
    pub cut_dim: usize,
    /// Beam width: candidates kept after every aggregation.
    pub k: usize,
    pub sampler: Sampler,
    pub seed: u64,
}

impl QSplitConfig {
    pub fn new(cut_dim: usize, k: usize, sampler: Sampler, seed: u64) -> Result<Self> {
        let cfg = Self { cut_dim, k, sampler, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cut_dim < 2 {
            return Err(param(format!("cut_dim must be at least 2, got {}", self.cut_dim)));
        }
        if self.k == 0 {
            return Err(param("beam width k must be at least 1"));
        }
        Ok(())
    }
}

/// The three non-empty quadrants of an upper-triangular matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSplit {
    /// Split point; UL covers `0..m`.
    pub m: usize,
    pub ul: QuboMatrix,
    /// Reindexed so that parent variable `m` is index 0.
    pub br: QuboMatrix,
    /// Coupling entries `(i, j, v)` with `i < m <= j`, in parent indices.
    pub ur: Vec<(usize, usize, f64)>,
}

impl BlockSplit {
    pub fn n(&self) -> usize {
        self.m + self.br.n()
    }

    /// Reassemble the parent matrix.
    pub fn reconstruct(&self) -> Result<QuboMatrix> {
        let m = self.m;
        let entries = self
            .ul
            .entries()
            .chain(self.br.entries().map(|(i, j, v)| (i + m, j + m, v)))
            .chain(self.ur.iter().copied());
        QuboMatrix::from_entries(self.n(), entries, self.ul.offset() + self.br.offset())
    }
}

/// Quadrant split at `ceil(n / 2)`. The parent offset stays with UL.
pub fn split(q: &QuboMatrix) -> Result<BlockSplit> {
    let n = q.n();
    if n < 2 {
        return Err(param(format!("cannot split a problem with {n} variables")));
    }
    let m = n.div_ceil(2);
    let mut ul = QuboMatrix::new(m);
    let mut br = QuboMatrix::new(n - m);
    let mut ur = Vec::new();
    for (i, j, v) in q.entries() {
        if j < m {
            ul.set(i, j, v)?;
        } else if i >= m {
            br.set(i - m, j - m, v)?;
        } else {
            ur.push((i, j, v));
        }
    }
    ul.set_offset(q.offset())?;
    Ok(BlockSplit { m, ul, br, ur })
}

/// Sampler-time bookkeeping across a whole decomposition.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Accounting {
    pub sampler_time: f64,
    pub sampler_calls: u64,
    /// Leaf blocks solved directly.
    pub direct_calls: u64,
    /// Padded coupling blocks.
    pub coupling_calls: u64,
    /// Conflict sub-QUBOs.
    pub conflict_calls: u64,
    pub max_padded_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CallKind {
    Direct,
    Coupling,
    Conflict,
}

impl Accounting {
    pub fn record(&mut self, kind: CallKind, size: usize, outcome: &SamplerOutcome) {
        self.sampler_time += outcome.sampler_time;
        self.sampler_calls += outcome.calls;
        match kind {
            CallKind::Direct => self.direct_calls += outcome.calls,
            CallKind::Coupling => self.coupling_calls += outcome.calls,
            CallKind::Conflict => self.conflict_calls += outcome.calls,
        }
        self.max_padded_size = self.max_padded_size.max(size);
    }

    /// Close the books: everything not spent in the sampler is CPU time.
    pub fn finish(self, best: SampleSet, wall_time: f64) -> SolveReport {
        SolveReport {
            best,
            cpu_time: (wall_time - self.sampler_time).max(0.0),
            sampler_time: self.sampler_time,
            sampler_calls: self.sampler_calls,
            direct_calls: self.direct_calls,
            coupling_calls: self.coupling_calls,
            conflict_calls: self.conflict_calls,
            max_padded_size: self.max_padded_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub best: SampleSet,
    pub cpu_time: f64,
    pub sampler_time: f64,
    pub sampler_calls: u64,
    pub direct_calls: u64,
    pub coupling_calls: u64,
    pub conflict_calls: u64,
    pub max_padded_size: usize,
}

impl SolveReport {
    pub fn total_time(&self) -> f64 {
        self.cpu_time + self.sampler_time
    }

    pub fn best_energy(&self) -> Option<f64> {
        self.best.min_energy()
    }
}

/// Number of leaf and coupling solves in the recursion tree for `n` variables.
pub fn structural_calls(n: usize, cut_dim: usize) -> u64 {
    if n <= cut_dim {
        1
    } else {
        let m = n.div_ceil(2);
        structural_calls(m, cut_dim) + structural_calls(n - m, cut_dim) + 1
    }
}

/// Solve the coupling block padded to `n` variables.
pub fn solve_coupling(
    ur: &[(usize, usize, f64)],
    n: usize,
    sampler: &Sampler,
    seed: u64,
) -> Result<SamplerOutcome> {
    let padded = QuboMatrix::from_entries(n, ur.iter().copied(), 0.0)?;
    sampler.sample(&padded, seed)
}

/// All concatenations of the top `k` of `a` (variables `0..m`) with the top
/// `k` of `b` (variables `m..n`), rescored under `q` and cut back to `k`.
pub fn combine_disjoint(a: &SampleSet, b: &SampleSet, q: &QuboMatrix, k: usize) -> Result<SampleSet> {
    let (Some(first_a), Some(first_b)) = (a.best(), b.best()) else {
        return Ok(SampleSet::default());
    };
    let (m, rest) = (first_a.assignment.len(), first_b.assignment.len());
    if m + rest != q.n() {
        return Err(dim(format!("blocks of {m} and {rest} variables do not cover {}", q.n())));
    }
    let mut pool = Vec::new();
    for sa in a.iter().take(k) {
        for sb in b.iter().take(k) {
            if sa.assignment.len() != m || sb.assignment.len() != rest {
                return Err(dim("sample sets with mixed assignment lengths"));
            }
            let mut bits = Vec::with_capacity(m + rest);
            bits.extend_from_slice(sa.assignment.bits());
            bits.extend_from_slice(sb.assignment.bits());
            let assignment = Assignment::from_bits_unchecked(bits);
            pool.push(Sample { energy: q.energy(&assignment)?, assignment, occurrences: 1 });
        }
    }
    Ok(SampleSet::from_samples(pool).truncated(k))
}

/// Reconcile the S1 candidates with the coupling-block candidates.
///
/// For each pair, variables where the two disagree form the conflict set;
/// the rest are fixed to their agreed values and the conditioned sub-QUBO is
/// handed to the sampler. The pool also keeps the input candidates
/// themselves, so the result is never worse than the best of them. Identical
/// conflict sub-problems within one merge are solved once.
pub fn merge_resolve(
    s1: &SampleSet,
    u: &SampleSet,
    q: &QuboMatrix,
    cfg: &QSplitConfig,
    seed: u64,
    acct: &mut Accounting,
) -> Result<SampleSet> {
    let (n, k) = (q.n(), cfg.k);
    let mut pool: Vec<Sample> = Vec::new();
    for s in s1.iter().take(k).chain(u.iter().take(k)) {
        pool.push(Sample { energy: q.energy(&s.assignment)?, assignment: s.assignment.clone(), occurrences: 1 });
    }
    let mut solved: HashMap<Vec<u8>, SampleSet> = HashMap::new();
    let mut pair_index = 0u64;
    for s in s1.iter().take(k) {
        for t in u.iter().take(k) {
            pair_index += 1;
            let (a, b) = (s.assignment.bits(), t.assignment.bits());
            if a.len() != n || b.len() != n {
                return Err(dim("merge candidates must be full-length assignments"));
            }
            // 0/1 = agreed value, 2 = conflict
            let key: Vec<u8> = a.iter().zip(b).map(|(&x, &y)| if x == y { x } else { 2 }).collect();
            let conflicts = key.iter().filter(|&&v| v == 2).count();
            if conflicts == 0 {
                continue;
            }
            if !solved.contains_key(&key) {
                let fixed: BTreeMap<usize, u8> =
                    key.iter().enumerate().filter(|(_, &v)| v != 2).map(|(i, &v)| (i, v)).collect();
                let (sub, _) = q.fix_variables(&fixed)?;
                if conflicts > cfg.cut_dim {
                    log::warn!("conflict set of {conflicts} variables exceeds cut_dim {}", cfg.cut_dim);
                }
                let out = cfg.sampler.sample(&sub, seed::derive(seed, pair_index))?;
                acct.record(CallKind::Conflict, sub.n(), &out);
                solved.insert(key.clone(), out.samples.truncated(k));
            }
            for sub_sample in &solved[&key] {
                let mut bits = key.clone();
                let mut free = sub_sample.assignment.bits().iter();
                for v in bits.iter_mut().filter(|v| **v == 2) {
                    *v = *free.next().expect("sub-assignment covers the conflict set");
                }
                let assignment = Assignment::from_bits_unchecked(bits);
                pool.push(Sample { energy: q.energy(&assignment)?, assignment, occurrences: 1 });
            }
        }
    }
    Ok(SampleSet::from_samples(pool).truncated(k))
}

/// Full decomposition solve.
pub fn qsplit_solve(q: &QuboMatrix, cfg: &QSplitConfig) -> Result<SolveReport> {
    cfg.validate()?;
    if q.n() == 0 {
        return Err(param("cannot solve a problem with zero variables"));
    }
    let started = Instant::now();
    let mut acct = Accounting::default();
    let best = solve_node(q, cfg, cfg.seed, &mut acct)?;
    Ok(acct.finish(best, started.elapsed().as_secs_f64()))
}

fn solve_node(q: &QuboMatrix, cfg: &QSplitConfig, node_seed: u64, acct: &mut Accounting) -> Result<SampleSet> {
    if q.n() <= cfg.cut_dim {
        let out = cfg.sampler.sample(q, node_seed)?;
        acct.record(CallKind::Direct, q.n(), &out);
        return Ok(out.samples.truncated(cfg.k));
    }
    let blocks = split(q)?;
    let a = solve_node(&blocks.ul, cfg, seed::derive_label(node_seed, "ul"), acct)?;
    let b = solve_node(&blocks.br, cfg, seed::derive_label(node_seed, "br"), acct)?;
    let s1 = combine_disjoint(&a, &b, q, cfg.k)?;
    let coupling = solve_coupling(&blocks.ur, q.n(), &cfg.sampler, seed::derive_label(node_seed, "ur"))?;
    acct.record(CallKind::Coupling, q.n(), &coupling);
    let u = coupling.samples.truncated(cfg.k);
    merge_resolve(&s1, &u, q, cfg, seed::derive_label(node_seed, "merge"), acct)
}
