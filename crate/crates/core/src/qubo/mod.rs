//! QUBO problem representation and the transformations into and out of it.
//!
//! A [`QuboMatrix`] stores the upper triangle of `Q` sparsely, so that the
//! energy of an assignment is `sum_{i <= j} Q_ij x_i x_j + offset`. Diagonal
//! entries act as linear terms because `x_i^2 = x_i`.

mod format;
mod instance;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{dim, param, Result};

pub use format::{parse_qubo_file, serialize_qubo_file};
pub use instance::{normalized_gap, random_baseline_energy, random_clique_qubo};

/// Sparse upper-triangular quadratic form over binary variables.
///
/// Stored keys always satisfy `i <= j < n`, no stored coefficient is exactly
/// zero, and every value is finite.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuboMatrix {
    n: usize,
    entries: BTreeMap<(usize, usize), f64>,
    offset: f64,
}

fn check_finite(v: f64, what: &str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(param(format!("{what} must be finite, got {v}")))
    }
}

impl QuboMatrix {
    /// Empty problem over `n` variables.
    pub fn new(n: usize) -> Self {
        Self { n, entries: BTreeMap::new(), offset: 0.0 }
    }

    /// Build from `(i, j, value)` triples with `i <= j`; repeated keys accumulate.
    pub fn from_entries<I>(n: usize, entries: I, offset: f64) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut q = Self::new(n);
        q.set_offset(offset)?;
        for (i, j, v) in entries {
            q.add(i, j, v)?;
        }
        Ok(q)
    }

    /// Fold an arbitrary square coefficient layout into upper-triangular form.
    ///
    /// `Q'_ij = M_ij + M_ji` for `i < j`; diagonal entries are kept.
    pub fn from_symmetric<I>(n: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut q = Self::new(n);
        for (i, j, v) in entries {
            if i >= n || j >= n {
                return Err(dim(format!("index ({i}, {j}) out of range for n = {n}")));
            }
            q.add(i.min(j), i.max(j), v)?;
        }
        Ok(q)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn set_offset(&mut self, offset: f64) -> Result<()> {
        check_finite(offset, "offset")?;
        self.offset = offset;
        Ok(())
    }

    pub fn num_entries(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Coefficient at `(i, j)`; zero when absent or when `i > j`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries.get(&(i, j)).copied().unwrap_or(0.0)
    }

    /// Entries in ascending `(i, j)` order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries.iter().map(|(&(i, j), &v)| (i, j, v))
    }

    fn check_key(&self, i: usize, j: usize) -> Result<()> {
        if i > j {
            return Err(dim(format!("entry ({i}, {j}) is below the diagonal")));
        }
        if j >= self.n {
            return Err(dim(format!("entry ({i}, {j}) out of range for n = {}", self.n)));
        }
        Ok(())
    }

    /// Add `v` to the coefficient at `(i, j)`. A sum of exactly zero removes the entry.
    pub fn add(&mut self, i: usize, j: usize, v: f64) -> Result<()> {
        self.check_key(i, j)?;
        check_finite(v, "coefficient")?;
        let slot = self.entries.entry((i, j)).or_insert(0.0);
        *slot += v;
        if !slot.is_finite() {
            return Err(param(format!("coefficient overflow at ({i}, {j})")));
        }
        if *slot == 0.0 {
            self.entries.remove(&(i, j));
        }
        Ok(())
    }

    /// Overwrite the coefficient at `(i, j)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) -> Result<()> {
        self.check_key(i, j)?;
        check_finite(v, "coefficient")?;
        if v == 0.0 {
            self.entries.remove(&(i, j));
        } else {
            self.entries.insert((i, j), v);
        }
        Ok(())
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.entries.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Exact energy of `x`.
    pub fn energy(&self, x: &Assignment) -> Result<f64> {
        if x.len() != self.n {
            return Err(dim(format!(
                "assignment has {} bits, problem has {} variables",
                x.len(),
                self.n
            )));
        }
        Ok(self.energy_of_bits(x.bits()))
    }

    /// Energy without the length check. Entries are summed in ascending key
    /// order so that reported energies are reproducible bit for bit.
    pub(crate) fn energy_of_bits(&self, bits: &[u8]) -> f64 {
        let mut e = 0.0;
        for (&(i, j), &v) in &self.entries {
            if bits[i] == 1 && bits[j] == 1 {
                e += v;
            }
        }
        e + self.offset
    }

    /// Add `lambda * (a.x - rhs)^2` for every constraint.
    pub fn compose_penalty(&self, constraints: &[LinearConstraint], lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(param(format!("penalty weight must be positive, got {lambda}")));
        }
        let mut out = self.clone();
        for c in constraints {
            if let Some((&idx, _)) = c.coefficients.iter().find(|(&i, _)| i >= self.n) {
                return Err(dim(format!("constraint references variable {idx} >= n = {}", self.n)));
            }
            let terms: Vec<(usize, f64)> = c.coefficients.iter().map(|(&i, &a)| (i, a)).collect();
            for (p, &(i, a)) in terms.iter().enumerate() {
                out.add(i, i, lambda * (a * a - 2.0 * c.rhs * a))?;
                for &(j, b) in &terms[p + 1..] {
                    out.add(i, j, 2.0 * lambda * a * b)?;
                }
            }
            out.set_offset(out.offset + lambda * c.rhs * c.rhs)?;
        }
        Ok(out)
    }

    /// Negate everything for a maximization objective; identity otherwise.
    pub fn to_minimization(&self, sense: Sense) -> Self {
        match sense {
            Sense::Minimize => self.clone(),
            Sense::Maximize => Self {
                n: self.n,
                entries: self.entries.iter().map(|(&k, &v)| (k, -v)).collect(),
                offset: -self.offset,
            },
        }
    }

    /// Condition on a partial assignment.
    ///
    /// Returns the problem over the free variables (in ascending original
    /// order) and the map from new index to original index. Couplings to
    /// variables fixed at 1 fold into the free variable's diagonal; terms among
    /// fixed variables fold into the offset.
    pub fn fix_variables(&self, fixed: &BTreeMap<usize, u8>) -> Result<(Self, Vec<usize>)> {
        for (&i, &b) in fixed {
            if i >= self.n {
                return Err(dim(format!("fixed variable {i} out of range for n = {}", self.n)));
            }
            if b > 1 {
                return Err(param(format!("fixed value {b} for variable {i} is not binary")));
            }
        }
        let remap: Vec<usize> = (0..self.n).filter(|i| !fixed.contains_key(i)).collect();
        let mut position = vec![usize::MAX; self.n];
        for (new, &old) in remap.iter().enumerate() {
            position[old] = new;
        }
        let mut sub = Self::new(remap.len());
        let mut offset = self.offset;
        for (&(i, j), &v) in &self.entries {
            match (fixed.get(&i), fixed.get(&j)) {
                (None, None) => sub.add(position[i], position[j], v)?,
                (None, Some(&bj)) => {
                    if bj == 1 {
                        sub.add(position[i], position[i], v)?;
                    }
                }
                (Some(&bi), None) => {
                    if bi == 1 {
                        sub.add(position[j], position[j], v)?;
                    }
                }
                (Some(&bi), Some(&bj)) => {
                    if bi == 1 && bj == 1 {
                        offset += v;
                    }
                }
            }
        }
        sub.set_offset(offset)?;
        Ok((sub, remap))
    }

    /// Rows and columns of `keep`, densely reindexed in ascending order; offset dropped.
    pub fn extract_submatrix(&self, keep: &BTreeSet<usize>) -> Result<Self> {
        if let Some(&bad) = keep.iter().find(|&&i| i >= self.n) {
            return Err(dim(format!("index {bad} out of range for n = {}", self.n)));
        }
        let mut position = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            position[old] = new;
        }
        let mut sub = Self::new(keep.len());
        for (&(i, j), &v) in &self.entries {
            if position[i] != usize::MAX && position[j] != usize::MAX {
                sub.entries.insert((position[i], position[j]), v);
            }
        }
        Ok(sub)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// A binary assignment, one byte per variable holding 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(Vec<u8>);

impl Assignment {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(param(format!("assignment value {b} is not binary")));
        }
        Ok(Self(bits))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0; n])
    }

    /// Bits of `index`, variable 0 in the least significant position.
    pub fn from_index(n: usize, index: u64) -> Self {
        Self((0..n).map(|i| ((index >> i) & 1) as u8).collect())
    }

    pub(crate) fn from_bits_unchecked(bits: Vec<u8>) -> Self {
        Self(bits)
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_bits(self) -> Vec<u8> {
        self.0
    }
}

impl std::ops::Index<usize> for Assignment {
    type Output = u8;

    fn index(&self, i: usize) -> &u8 {
        &self.0[i]
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub assignment: Assignment,
    pub energy: f64,
    pub occurrences: u64,
}

/// Energy-sorted, deduplicated samples.
///
/// Ties in energy are ordered by assignment so that the order is a pure
/// function of the contents.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SampleSet {
    samples: Vec<Sample>,
}

impl SampleSet {
    /// Merge duplicate assignments (summing occurrences) and sort.
    pub fn from_samples<I: IntoIterator<Item = Sample>>(samples: I) -> Self {
        let mut merged: BTreeMap<Assignment, Sample> = BTreeMap::new();
        for s in samples {
            match merged.get_mut(&s.assignment) {
                Some(existing) => existing.occurrences += s.occurrences,
                None => {
                    merged.insert(s.assignment.clone(), s);
                }
            }
        }
        let mut samples: Vec<Sample> = merged.into_values().collect();
        samples.sort_by(|a, b| {
            a.energy.total_cmp(&b.energy).then_with(|| a.assignment.cmp(&b.assignment))
        });
        Self { samples }
    }

    /// Score each assignment under `q` and build a set.
    pub fn from_assignments<I>(q: &QuboMatrix, assignments: I) -> Result<Self>
    where
        I: IntoIterator<Item = Assignment>,
    {
        let samples = assignments
            .into_iter()
            .map(|a| Ok(Sample { energy: q.energy(&a)?, assignment: a, occurrences: 1 }))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_samples(samples))
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Sample> {
        self.samples.iter()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn best(&self) -> Option<&Sample> {
        self.samples.first()
    }

    pub fn min_energy(&self) -> Option<f64> {
        self.best().map(|s| s.energy)
    }

    /// Keep the `k` lowest-energy samples.
    pub fn truncated(mut self, k: usize) -> Self {
        self.samples.truncate(k);
        self
    }

    pub fn into_samples(self) -> Vec<Sample> {
        self.samples
    }
}

impl<'a> IntoIterator for &'a SampleSet {
    type Item = &'a Sample;
    type IntoIter = std::slice::Iter<'a, Sample>;

    fn into_iter(self) -> Self::IntoIter {
        self.samples.iter()
    }
}

/// Equality constraint `sum_i a_i x_i = rhs`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearConstraint {
    pub coefficients: BTreeMap<usize, f64>,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn new<I: IntoIterator<Item = (usize, f64)>>(coefficients: I, rhs: f64) -> Self {
        let mut map = BTreeMap::new();
        for (i, a) in coefficients {
            *map.entry(i).or_insert(0.0) += a;
        }
        Self { coefficients: map, rhs }
    }

    pub fn residual(&self, bits: &[u8]) -> f64 {
        self.coefficients
            .iter()
            .map(|(&i, &a)| a * f64::from(bits[i]))
            .sum::<f64>()
            - self.rhs
    }
}

/// Binary encoding of bounded non-negative integers.
///
/// Group `v` lists `(binary index, weight)` with weights `1, 2, 4, ...`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableMap {
    groups: Vec<Vec<(usize, u64)>>,
}

impl VariableMap {
    /// `num_vars` integers of `bits` bits each, laid out variable-major with
    /// ascending weights.
    pub fn encode_integers(num_vars: usize, bits: usize) -> Result<Self> {
        if num_vars == 0 || bits == 0 {
            return Err(param("integer encoding needs at least one variable and one bit"));
        }
        if bits > 62 {
            return Err(param(format!("{bits} bits per integer is too many")));
        }
        let groups = (0..num_vars)
            .map(|v| (0..bits).map(|k| (v * bits + k, 1u64 << k)).collect())
            .collect();
        Ok(Self { groups })
    }

    pub fn groups(&self) -> &[Vec<(usize, u64)>] {
        &self.groups
    }

    pub fn num_integers(&self) -> usize {
        self.groups.len()
    }

    pub fn total_bits(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    /// Largest representable value of integer `v`.
    pub fn max_value(&self, v: usize) -> u64 {
        self.groups[v].iter().map(|&(_, w)| w).sum()
    }

    pub fn decode(&self, x: &Assignment) -> Result<Vec<u64>> {
        if x.len() != self.total_bits() {
            return Err(dim(format!(
                "assignment has {} bits, encoding uses {}",
                x.len(),
                self.total_bits()
            )));
        }
        Ok(self
            .groups
            .iter()
            .map(|g| g.iter().map(|&(b, w)| w * u64::from(x[b])).sum())
            .collect())
    }

    pub fn encode(&self, values: &[u64]) -> Result<Assignment> {
        if values.len() != self.groups.len() {
            return Err(dim(format!(
                "{} values for {} encoded integers",
                values.len(),
                self.groups.len()
            )));
        }
        let mut bits = vec![0u8; self.total_bits()];
        for (v, (group, &value)) in self.groups.iter().zip(values).enumerate() {
            if value > self.max_value(v) {
                return Err(param(format!("value {value} does not fit integer {v}")));
            }
            for &(b, w) in group {
                bits[b] = u8::from(value & w != 0);
            }
        }
        Ok(Assignment(bits))
    }
}
