//! Solver backends behind a single contract.
//!
//! [`exhaustive_solve`] is the ground-truth oracle; [`simulated_anneal`] is
//! the classical stand-in for an annealing processor. Both return a
//! [`SamplerOutcome`] whose energies are recomputed exactly with
//! [`QuboMatrix::energy`].

use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::qubo::{Assignment, QuboMatrix, Sample, SampleSet};
use crate::seed;

/// Linear terms plus a CSR adjacency of the off-diagonal couplings.
#[derive(Debug, Clone)]
pub(crate) struct Couplings {
    pub linear: Vec<f64>,
    start: Vec<usize>,
    neighbor: Vec<usize>,
    weight: Vec<f64>,
}

impl Couplings {
    pub fn new(q: &QuboMatrix) -> Self {
        let n = q.n();
        let mut linear = vec![0.0; n];
        let mut degree = vec![0usize; n];
        for (i, j, v) in q.entries() {
            if i == j {
                linear[i] = v;
            } else {
                degree[i] += 1;
                degree[j] += 1;
            }
        }
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + degree[i];
        }
        let mut fill = start.clone();
        let mut neighbor = vec![0usize; start[n]];
        let mut weight = vec![0.0; start[n]];
        for (i, j, v) in q.entries() {
            if i != j {
                neighbor[fill[i]] = j;
                weight[fill[i]] = v;
                fill[i] += 1;
                neighbor[fill[j]] = i;
                weight[fill[j]] = v;
                fill[j] += 1;
            }
        }
        Self { linear, start, neighbor, weight }
    }

    pub fn len(&self) -> usize {
        self.linear.len()
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.start[i]..self.start[i + 1];
        self.neighbor[r.clone()].iter().copied().zip(self.weight[r].iter().copied())
    }

    pub fn degree(&self, i: usize) -> usize {
        self.start[i + 1] - self.start[i]
    }
}

/// Assignment with incrementally maintained local fields and energy.
///
/// `field[i] = Q_ii + sum_j Q_ij x_j`, so flipping `i` changes the energy by
/// `(1 - 2 x_i) * field[i]`.
#[derive(Debug, Clone)]
pub(crate) struct LocalFieldState<'a> {
    couplings: &'a Couplings,
    bits: Vec<u8>,
    field: Vec<f64>,
    energy: f64,
}

impl<'a> LocalFieldState<'a> {
    pub fn new(couplings: &'a Couplings, bits: Vec<u8>, offset: f64) -> Self {
        let mut field = couplings.linear.clone();
        let mut energy = offset;
        for i in 0..bits.len() {
            if bits[i] == 1 {
                energy += couplings.linear[i];
                for (j, w) in couplings.neighbors(i) {
                    field[j] += w;
                    if j > i && bits[j] == 1 {
                        energy += w;
                    }
                }
            }
        }
        Self { couplings, bits, field, energy }
    }

    #[inline]
    pub fn delta(&self, i: usize) -> f64 {
        if self.bits[i] == 0 {
            self.field[i]
        } else {
            -self.field[i]
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        let delta = self.delta(i);
        let sign = if self.bits[i] == 0 { 1.0 } else { -1.0 };
        self.bits[i] ^= 1;
        self.energy += delta;
        for (j, w) in self.couplings.neighbors(i) {
            self.field[j] += sign * w;
        }
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    #[cfg(test)]
    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn into_bits(self) -> Vec<u8> {
        self.bits
    }
}

/// Annealing parameters.
///
/// `beta_range` is `(beta_hot, beta_cold)`; `None` selects
/// `(1 / max|Q|, 50 / max|Q|)` for the problem at hand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerParams {
    pub num_reads: usize,
    pub num_sweeps: usize,
    pub beta_range: Option<(f64, f64)>,
    pub seed: u64,
}

impl Default for SamplerParams {
    fn default() -> Self {
        Self { num_reads: 100, num_sweeps: 1000, beta_range: None, seed: 0 }
    }
}

impl SamplerParams {
    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_reads == 0 || self.num_sweeps == 0 {
            return Err(param("num_reads and num_sweeps must be at least 1"));
        }
        if let Some((hot, cold)) = self.beta_range {
            if !(hot > 0.0 && hot.is_finite() && cold.is_finite() && hot < cold) {
                return Err(param(format!(
                    "beta range must satisfy 0 < beta_hot < beta_cold, got ({hot}, {cold})"
                )));
            }
        }
        Ok(())
    }

    /// Inverse temperatures for each sweep, geometric from hot to cold.
    pub fn schedule(&self, q: &QuboMatrix) -> Vec<f64> {
        let (hot, cold) = self.beta_range.unwrap_or_else(|| {
            let scale = q.max_abs_coeff();
            let scale = if scale > 0.0 { scale } else { 1.0 };
            (1.0 / scale, 50.0 / scale)
        });
        if self.num_sweeps == 1 {
            return vec![cold];
        }
        let ratio = cold / hot;
        let last = (self.num_sweeps - 1) as f64;
        (0..self.num_sweeps).map(|s| hot * ratio.powf(s as f64 / last)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerOutcome {
    pub samples: SampleSet,
    /// Wall-clock seconds spent inside the backend.
    pub sampler_time: f64,
    pub calls: u64,
}

/// Limits for the exhaustive oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExhaustiveLimits {
    /// Largest number of variables enumerated explicitly.
    pub max_enumerated: usize,
    /// Largest number of tied minimizers returned.
    pub max_ties: usize,
}

impl Default for ExhaustiveLimits {
    fn default() -> Self {
        Self { max_enumerated: 24, max_ties: 1 << 16 }
    }
}

pub fn exhaustive_solve(q: &QuboMatrix) -> Result<SamplerOutcome> {
    exhaustive_solve_with(q, &ExhaustiveLimits::default())
}

/// Every global minimizer of `q` (up to `max_ties`).
///
/// Variables are split into a vertex cover of the coupling graph, which is
/// enumerated in Gray-code order, and the complementary independent set,
/// whose members are optimised in closed form given the cover. The cover is
/// what `max_enumerated` bounds; for dense problems it is `n - 1`.
pub fn exhaustive_solve_with(q: &QuboMatrix, limits: &ExhaustiveLimits) -> Result<SamplerOutcome> {
    let started = Instant::now();
    let n = q.n();
    let c = Couplings::new(q);

    // Greedy independent set, lowest degree first.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (c.degree(i), i));
    let mut in_free = vec![false; n];
    let mut blocked = vec![false; n];
    for &v in &order {
        if !blocked[v] {
            in_free[v] = true;
            for (j, _) in c.neighbors(v) {
                blocked[j] = true;
            }
        }
    }
    let cover: Vec<usize> = (0..n).filter(|&i| !in_free[i]).collect();
    let free: Vec<usize> = (0..n).filter(|&i| in_free[i]).collect();
    if cover.len() > limits.max_enumerated {
        return Err(Error::Capacity(format!(
            "exhaustive search over {} coupled variables exceeds the cap of {}",
            cover.len(),
            limits.max_enumerated
        )));
    }

    let scale: f64 = q.entries().map(|(_, _, v)| v.abs()).sum::<f64>() + q.offset().abs();
    let tol = 1e-10 * (1.0 + scale);

    // Gray-code walk over the cover with free variables held at zero.
    let mut state = LocalFieldState::new(&c, vec![0u8; n], q.offset());
    let free_part = |s: &LocalFieldState| free.iter().map(|&v| s.field[v].min(0.0)).sum::<f64>();
    let mut best = state.energy() + free_part(&state);
    let mut candidates: Vec<u64> = vec![0];
    let total: u64 = 1u64 << cover.len();
    let mut code: u64 = 0;
    for step in 1..total {
        let bit = step.trailing_zeros() as usize;
        code ^= 1 << bit;
        state.flip(cover[bit]);
        let e = state.energy() + free_part(&state);
        if e < best - tol {
            best = e;
            candidates.clear();
            candidates.push(code);
        } else if e <= best + tol && candidates.len() < limits.max_ties {
            candidates.push(code);
        }
    }

    // Expand each candidate cover state into full minimizers, exactly scored.
    let mut found: Vec<(Vec<u8>, f64)> = Vec::new();
    'outer: for &code in &candidates {
        let mut bits = vec![0u8; n];
        for (b, &v) in cover.iter().enumerate() {
            bits[v] = ((code >> b) & 1) as u8;
        }
        let mut ties = Vec::new();
        for &v in &free {
            let f = c.linear[v]
                + c.neighbors(v).map(|(j, w)| w * f64::from(bits[j])).sum::<f64>();
            if f.abs() <= tol {
                ties.push(v);
            } else if f < 0.0 {
                bits[v] = 1;
            }
        }
        let combos: u64 = if ties.len() >= 63 { u64::MAX } else { 1u64 << ties.len() };
        for t in 0..combos {
            for (b, &v) in ties.iter().enumerate() {
                bits[v] = ((t >> b) & 1) as u8;
            }
            let e = q.energy_of_bits(&bits);
            found.push((bits.clone(), e));
            if found.len() >= limits.max_ties {
                break 'outer;
            }
        }
    }
    let exact_min = found.iter().map(|&(_, e)| e).fold(f64::INFINITY, f64::min);
    let samples = SampleSet::from_samples(found.into_iter().filter(|&(_, e)| e <= exact_min + tol).map(
        |(bits, energy)| Sample {
            assignment: Assignment::from_bits_unchecked(bits),
            energy,
            occurrences: 1,
        },
    ));
    Ok(SamplerOutcome { samples, sampler_time: started.elapsed().as_secs_f64(), calls: 1 })
}

/// Single-bit Metropolis annealing with a geometric inverse-temperature ramp.
///
/// Read `r` draws from a generator seeded by `derive(seed, r)`, so a run with
/// more reads sees a superset of the states of a run with fewer.
pub fn simulated_anneal(q: &QuboMatrix, params: &SamplerParams) -> Result<SamplerOutcome> {
    params.validate()?;
    if q.n() == 0 {
        return Err(param("simulated annealing needs at least one variable"));
    }
    let started = Instant::now();
    let couplings = Couplings::new(q);
    let schedule = params.schedule(q);
    let reads: Vec<Vec<u8>> = (0..params.num_reads)
        .into_par_iter()
        .map(|r| anneal_read(&couplings, q.offset(), &schedule, seed::derive(params.seed, r as u64)))
        .collect();
    let samples = SampleSet::from_samples(reads.into_iter().map(|bits| Sample {
        energy: q.energy_of_bits(&bits),
        assignment: Assignment::from_bits_unchecked(bits),
        occurrences: 1,
    }));
    Ok(SamplerOutcome { samples, sampler_time: started.elapsed().as_secs_f64(), calls: 1 })
}

fn anneal_read(couplings: &Couplings, offset: f64, schedule: &[f64], seed: u64) -> Vec<u8> {
    let mut rng = seed::rng(seed);
    let n = couplings.len();
    let bits: Vec<u8> = (0..n).map(|_| rng.gen_range(0..=1)).collect();
    let mut state = LocalFieldState::new(couplings, bits, offset);
    for &beta in schedule {
        for i in 0..n {
            let delta = state.delta(i);
            if delta <= 0.0 || rng.gen::<f64>() < (-beta * delta).exp() {
                state.flip(i);
            }
        }
    }
    state.into_bits()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Exhaustive,
    #[serde(rename = "sa")]
    SimulatedAnnealing,
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhaustive" => Ok(Self::Exhaustive),
            "sa" => Ok(Self::SimulatedAnnealing),
            other => Err(param(format!("unknown sampler kind `{other}`"))),
        }
    }
}

impl std::fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Exhaustive => "exhaustive",
            Self::SimulatedAnnealing => "sa",
        })
    }
}

/// Run the chosen backend and time it.
pub fn sampler_dispatch(kind: SamplerKind, q: &QuboMatrix, params: &SamplerParams) -> Result<SamplerOutcome> {
    let started = Instant::now();
    let mut out = match kind {
        SamplerKind::Exhaustive => exhaustive_solve(q)?,
        SamplerKind::SimulatedAnnealing => simulated_anneal(q, params)?,
    };
    out.sampler_time = started.elapsed().as_secs_f64();
    Ok(out)
}

/// A backend together with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sampler {
    pub kind: SamplerKind,
    pub params: SamplerParams,
}

impl Sampler {
    pub fn exhaustive() -> Self {
        Self { kind: SamplerKind::Exhaustive, params: SamplerParams::default() }
    }

    pub fn annealing(params: SamplerParams) -> Self {
        Self { kind: SamplerKind::SimulatedAnnealing, params }
    }

    /// Sample with the seed replaced by `seed`.
    pub fn sample(&self, q: &QuboMatrix, seed: u64) -> Result<SamplerOutcome> {
        sampler_dispatch(self.kind, q, &self.params.with_seed(seed))
    }
}
