//! Soft-margin SVM training as a QUBO.
//!
//! The dual is restricted to integers `alpha_i in [0, 2^B - 1]`, each encoded
//! with `B` bits, and the balance constraint `sum_i alpha_i y_i = 0` enters as
//! a quadratic penalty. The minimised objective is
//!
//! ```text
//! F(alpha) = sum_{i,j} c_ij alpha_i alpha_j - sum_i alpha_i,
//! c_ij     = y_i y_j (K_ij / 2 + lambda)
//! ```
//!
//! The box constraint is structural: `C = 2^B - 1`.

mod io;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{dim, param, Error, Result};
use crate::qsplit::{qsplit_solve, QSplitConfig};
use crate::qubo::{QuboMatrix, SampleSet, VariableMap};
use crate::samplers::Sampler;
use crate::seed;

pub use io::{load_model, read_dataset_csv, save_model, write_dataset_csv, write_predictions_csv};

/// Labelled points; every label is `-1` or `+1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    points: Vec<Vec<f64>>,
    labels: Vec<i8>,
}

impl Dataset {
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<i8>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(dim(format!("{} points but {} labels", points.len(), labels.len())));
        }
        if let Some(first) = points.first() {
            let d = first.len();
            if d == 0 {
                return Err(dim("points must have at least one feature"));
            }
            if let Some(p) = points.iter().position(|p| p.len() != d) {
                return Err(dim(format!("point {p} has {} features, expected {d}", points[p].len())));
            }
        }
        if let Some(l) = labels.iter().find(|&&l| l != 1 && l != -1) {
            return Err(Error::Data(format!("label {l} is not -1 or +1")));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite feature value".into()));
        }
        Ok(Self { points, labels })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    fn check_two_classes(&self) -> Result<()> {
        if self.len() < 2 {
            return Err(Error::Data("training needs at least two points".into()));
        }
        if !self.labels.contains(&1) || !self.labels.contains(&-1) {
            return Err(Error::Data("training data must contain both classes".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    Rbf { gamma: f64 },
}

impl KernelSpec {
    pub fn rbf(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(param(format!("rbf gamma must be positive, got {gamma}")));
        }
        Ok(Self::Rbf { gamma })
    }

    pub fn eval(&self, x: &[f64], z: &[f64]) -> Result<f64> {
        if x.len() != z.len() {
            return Err(dim(format!("kernel inputs of dimension {} and {}", x.len(), z.len())));
        }
        Ok(self.eval_unchecked(x, z))
    }

    fn eval_unchecked(&self, x: &[f64], z: &[f64]) -> f64 {
        match *self {
            Self::Linear => x.iter().zip(z).map(|(a, b)| a * b).sum(),
            Self::Rbf { gamma } => {
                let d2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * d2).exp()
            }
        }
    }

    pub fn gram(&self, data: &Dataset) -> Vec<Vec<f64>> {
        let pts = data.points();
        pts.iter().map(|a| pts.iter().map(|b| self.eval_unchecked(a, b)).collect()).collect()
    }
}

/// `5 * max |K_ij|` over the training set.
pub fn default_lambda(data: &Dataset, kernel: &KernelSpec) -> f64 {
    let max = kernel.gram(data).iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    5.0 * if max > 0.0 { max } else { 1.0 }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmQuboEncoding {
    pub bits: usize,
    pub lambda: f64,
    pub map: VariableMap,
    pub kernel: KernelSpec,
}

impl SvmQuboEncoding {
    pub fn max_alpha(&self) -> u64 {
        (1u64 << self.bits) - 1
    }
}

/// Integer-encoded dual with the balance penalty, as a QUBO whose energy is
/// exactly `F(decode(bits))`.
pub fn build_svm_qubo(
    data: &Dataset,
    kernel: &KernelSpec,
    bits: usize,
    lambda: f64,
) -> Result<(QuboMatrix, SvmQuboEncoding)> {
    data.check_two_classes()?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(param(format!("penalty weight must be positive, got {lambda}")));
    }
    if bits == 0 || bits > 16 {
        return Err(param(format!("bits per dual variable must be in 1..=16, got {bits}")));
    }
    let n = data.len();
    let map = VariableMap::encode_integers(n, bits)?;
    let gram = kernel.gram(data);
    let y = data.labels();
    let c = |i: usize, j: usize| f64::from(y[i] * y[j]) * (0.5 * gram[i][j] + lambda);
    let mut q = QuboMatrix::new(n * bits);
    let w = |k: usize| (1u64 << k) as f64;
    for i in 0..n {
        for k in 0..bits {
            let u = i * bits + k;
            q.add(u, u, c(i, i) * w(k) * w(k) - w(k))?;
            for l in k + 1..bits {
                q.add(u, i * bits + l, 2.0 * c(i, i) * w(k) * w(l))?;
            }
            for j in i + 1..n {
                let cij = c(i, j);
                for l in 0..bits {
                    q.add(u, j * bits + l, 2.0 * cij * w(k) * w(l))?;
                }
            }
        }
    }
    Ok((q, SvmQuboEncoding { bits, lambda, map, kernel: *kernel }))
}

/// Bias from the margin support vectors, falling back to all support vectors.
pub fn compute_bias(alphas: &[u64], data: &Dataset, kernel: &KernelSpec, bits: usize) -> Result<f64> {
    if alphas.len() != data.len() {
        return Err(dim(format!("{} alphas for {} points", alphas.len(), data.len())));
    }
    let cap = (1u64 << bits) - 1;
    let mut support: Vec<usize> = (0..alphas.len()).filter(|&i| alphas[i] > 0 && alphas[i] < cap).collect();
    if support.is_empty() {
        support = (0..alphas.len()).filter(|&i| alphas[i] > 0).collect();
    }
    if support.is_empty() {
        return Ok(0.0);
    }
    let pts = data.points();
    let y = data.labels();
    let total: f64 = support
        .iter()
        .map(|&i| {
            let s: f64 = (0..alphas.len())
                .map(|j| alphas[j] as f64 * f64::from(y[j]) * kernel.eval_unchecked(&pts[j], &pts[i]))
                .sum();
            f64::from(y[i]) - s
        })
        .sum();
    Ok(total / support.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub alphas: Vec<u64>,
    pub bias: f64,
}

/// Majority-vote ensemble over models sharing one kernel and training set.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel {
    pub kernel: KernelSpec,
    pub bits: usize,
    pub data: Dataset,
    pub members: Vec<SvmModel>,
}

fn sign(v: f64) -> i8 {
    if v >= 0.0 {
        1
    } else {
        -1
    }
}

impl EnsembleModel {
    pub fn new(kernel: KernelSpec, bits: usize, data: Dataset, members: Vec<SvmModel>) -> Result<Self> {
        if members.is_empty() {
            return Err(param("an ensemble needs at least one member"));
        }
        let cap = (1u64 << bits) - 1;
        for m in &members {
            if m.alphas.len() != data.len() {
                return Err(dim(format!("member has {} alphas for {} points", m.alphas.len(), data.len())));
            }
            if m.alphas.iter().any(|&a| a > cap) {
                return Err(param(format!("alpha exceeds {cap}")));
            }
        }
        Ok(Self { kernel, bits, data, members })
    }

    /// A single-member ensemble with the given member.
    pub fn single(&self, member: usize) -> Self {
        Self { members: vec![self.members[member].clone()], ..self.clone() }
    }

    /// `sum_i alpha_i y_i K(x_i, x) + b` for one member.
    pub fn member_decision(&self, member: usize, x: &[f64]) -> Result<f64> {
        if x.len() != self.data.dim() {
            return Err(dim(format!("input has {} features, model expects {}", x.len(), self.data.dim())));
        }
        let m = &self.members[member];
        let s: f64 = self
            .data
            .points()
            .iter()
            .zip(self.data.labels())
            .zip(&m.alphas)
            .filter(|(_, &a)| a > 0)
            .map(|((p, &y), &a)| a as f64 * f64::from(y) * self.kernel.eval_unchecked(p, x))
            .sum();
        Ok(s + m.bias)
    }

    /// Majority vote; ties go to the side with the larger summed |decision|,
    /// then to +1.
    pub fn predict(&self, x: &[f64]) -> Result<i8> {
        let (mut pos, mut neg) = (0usize, 0usize);
        let (mut pos_mass, mut neg_mass) = (0.0, 0.0);
        for m in 0..self.members.len() {
            let f = self.member_decision(m, x)?;
            if sign(f) > 0 {
                pos += 1;
                pos_mass += f.abs();
            } else {
                neg += 1;
                neg_mass += f.abs();
            }
        }
        Ok(match pos.cmp(&neg) {
            std::cmp::Ordering::Greater => 1,
            std::cmp::Ordering::Less => -1,
            std::cmp::Ordering::Equal => {
                if neg_mass > pos_mass {
                    -1
                } else {
                    1
                }
            }
        })
    }

    pub fn predict_all(&self, points: &[Vec<f64>]) -> Result<Vec<i8>> {
        points.iter().map(|p| self.predict(p)).collect()
    }
}

/// Backend used to minimise the SVM QUBO.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainSolver {
    Sampler { sampler: Sampler, seed: u64 },
    QSplit(QSplitConfig),
}

impl TrainSolver {
    fn solve(&self, q: &QuboMatrix) -> Result<SampleSet> {
        match self {
            Self::Sampler { sampler, seed } => Ok(sampler.sample(q, *seed)?.samples),
            Self::QSplit(cfg) => Ok(qsplit_solve(q, cfg)?.best),
        }
    }
}

/// Build, solve and decode; one member per distinct top sample, up to `ensemble`.
pub fn train(
    data: &Dataset,
    kernel: &KernelSpec,
    bits: usize,
    lambda: f64,
    solver: &TrainSolver,
    ensemble: usize,
) -> Result<EnsembleModel> {
    if ensemble == 0 {
        return Err(param("ensemble size must be at least 1"));
    }
    let (q, enc) = build_svm_qubo(data, kernel, bits, lambda)?;
    let samples = solver.solve(&q)?;
    let members = samples
        .iter()
        .take(ensemble)
        .map(|s| {
            let alphas = enc.map.decode(&s.assignment)?;
            let bias = compute_bias(&alphas, data, kernel, bits)?;
            Ok(SvmModel { alphas, bias })
        })
        .collect::<Result<Vec<_>>>()?;
    EnsembleModel::new(*kernel, bits, data.clone(), members)
}

/// F1 of the positive class; 0 when precision + recall has no support.
pub fn f1_score(predicted: &[i8], truth: &[i8]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(dim(format!("{} predictions for {} labels", predicted.len(), truth.len())));
    }
    let tp = predicted.iter().zip(truth).filter(|(&p, &t)| p == 1 && t == 1).count() as f64;
    let fp = predicted.iter().zip(truth).filter(|(&p, &t)| p == 1 && t != 1).count() as f64;
    let fneg = predicted.iter().zip(truth).filter(|(&p, &t)| p != 1 && t == 1).count() as f64;
    if tp == 0.0 {
        return Ok(0.0);
    }
    let precision = tp / (tp + fp);
    let recall = tp / (tp + fneg);
    Ok(2.0 * precision * recall / (precision + recall))
}

/// Balanced two-class data on the first axis: positives in `[margin, 1]`,
/// negatives in `[-1, -margin]`, second coordinate zero, then
/// `floor(noise_flip * n)` labels flipped.
pub fn synthetic_axis_dataset(n: usize, margin: f64, noise_flip: f64, seed: u64) -> Result<Dataset> {
    if n == 0 || n % 2 != 0 {
        return Err(param(format!("dataset size must be a positive even number, got {n}")));
    }
    if !(margin > 0.0 && margin < 1.0) {
        return Err(param(format!("margin must be in (0, 1), got {margin}")));
    }
    if !(0.0..0.5).contains(&noise_flip) {
        return Err(param(format!("noise_flip must be in [0, 0.5), got {noise_flip}")));
    }
    let mut rng = seed::rng(seed::derive_label(seed, "points"));
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let x: f64 = rng.gen_range(margin..=1.0);
        let positive = i < n / 2;
        points.push(vec![if positive { x } else { -x }, 0.0]);
        labels.push(if positive { 1 } else { -1 });
    }
    let flips = (noise_flip * n as f64).floor() as usize;
    let mut flip_rng = seed::rng(seed::derive_label(seed, "flips"));
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut flip_rng);
    for &i in &idx[..flips] {
        labels[i] = -labels[i];
    }
    Dataset::new(points, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubo::Assignment;

    /// Dual objective evaluated directly from its definition.
    fn dual_objective(data: &Dataset, kernel: &KernelSpec, lambda: f64, alphas: &[u64]) -> f64 {
        let n = data.len();
        let y = data.labels();
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                let k = kernel.eval(&data.points()[i], &data.points()[j]).unwrap();
                quad += alphas[i] as f64 * alphas[j] as f64 * f64::from(y[i] * y[j]) * 0.5 * k;
            }
        }
        let balance: f64 = (0..n).map(|i| alphas[i] as f64 * f64::from(y[i])).sum();
        quad + lambda * balance * balance - alphas.iter().map(|&a| a as f64).sum::<f64>()
    }

    fn two_points() -> Dataset {
        Dataset::new(vec![vec![1.0], vec![-1.0]], vec![1, -1]).unwrap()
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(KernelSpec::Linear.eval(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        let rbf = KernelSpec::rbf(1.0).unwrap();
        assert_eq!(rbf.eval(&[0.3, 2.0], &[0.3, 2.0]).unwrap(), 1.0);
        assert!((rbf.eval(&[0.0], &[1.0]).unwrap() - 0.36787944117144233).abs() < 1e-15);
        assert!(KernelSpec::Linear.eval(&[1.0], &[1.0, 2.0]).is_err());
        assert!(KernelSpec::rbf(0.0).is_err());
    }

    #[test]
    fn qubo_matches_dual_for_two_points() {
        let data = two_points();
        let (q, enc) = build_svm_qubo(&data, &KernelSpec::Linear, 1, 1.0).unwrap();
        let x = Assignment::new(vec![1, 1]).unwrap();
        // c = y y (K/2 + 1): c00 = c11 = 1.5, c01 = -(-0.5 + 1) = -0.5
        // F(1, 1) = 1.5 + 1.5 - 0.5 - 0.5 - 2 = 0
        assert_eq!(q.energy(&x).unwrap(), 0.0);
        assert_eq!(dual_objective(&data, &KernelSpec::Linear, 1.0, &[1, 1]), 0.0);
        assert_eq!(q.energy(&Assignment::zeros(2)).unwrap(), 0.0);
        assert_eq!(enc.max_alpha(), 1);
    }

    #[test]
    fn qubo_matches_dual_exhaustively() {
        let data = Dataset::new(vec![vec![0.5, 0.1], vec![-0.7, 0.2]], vec![1, -1]).unwrap();
        for kernel in [KernelSpec::Linear, KernelSpec::rbf(0.7).unwrap()] {
            let (q, enc) = build_svm_qubo(&data, &kernel, 2, 1.3).unwrap();
            assert_eq!(q.n(), 4);
            for idx in 0..16 {
                let x = Assignment::from_index(4, idx);
                let alphas = enc.map.decode(&x).unwrap();
                let f = dual_objective(&data, &kernel, 1.3, &alphas);
                let e = q.energy(&x).unwrap();
                assert!((e - f).abs() <= 1e-9 * (1.0 + f.abs()), "{idx}: {e} vs {f}");
            }
        }
    }

    #[test]
    fn build_rejects_bad_input() {
        let one_class = Dataset::new(vec![vec![1.0], vec![2.0]], vec![1, 1]).unwrap();
        assert!(matches!(build_svm_qubo(&one_class, &KernelSpec::Linear, 1, 1.0), Err(Error::Data(_))));
        assert!(build_svm_qubo(&two_points(), &KernelSpec::Linear, 1, 0.0).is_err());
        assert!(build_svm_qubo(&two_points(), &KernelSpec::Linear, 0, 1.0).is_err());
    }

    #[test]
    fn bias_examples() {
        let data = two_points();
        assert_eq!(compute_bias(&[0, 0], &data, &KernelSpec::Linear, 1).unwrap(), 0.0);
        assert_eq!(compute_bias(&[1, 1], &data, &KernelSpec::Linear, 1).unwrap(), 0.0);
        for c in [0.5, -2.0, 3.25] {
            let shifted = Dataset::new(vec![vec![1.0 + c], vec![-1.0 + c]], vec![1, -1]).unwrap();
            let b = compute_bias(&[1, 1], &shifted, &KernelSpec::Linear, 1).unwrap();
            assert!((b + 2.0 * c).abs() < 1e-12);
            let model = EnsembleModel::new(KernelSpec::Linear, 1, shifted, vec![SvmModel { alphas: vec![1, 1], bias: b }]).unwrap();
            assert!(model.member_decision(0, &[c]).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn bias_prefers_margin_vectors() {
        let data = Dataset::new(vec![vec![1.0], vec![-1.0], vec![2.0]], vec![1, -1, 1]).unwrap();
        // B = 2 caps alpha at 3; only index 0 is strictly inside the box.
        let b = compute_bias(&[1, 3, 0], &data, &KernelSpec::Linear, 2).unwrap();
        // y0 - (1*1*1 + 3*(-1)*(-1)) = 1 - 4
        assert_eq!(b, -3.0);
    }

    #[test]
    fn ensemble_voting() {
        let data = two_points();
        let m = |a: u64, b: f64| SvmModel { alphas: vec![a, a], bias: b };
        let one = EnsembleModel::new(KernelSpec::Linear, 2, data.clone(), vec![m(1, 0.0)]).unwrap();
        let three = EnsembleModel::new(KernelSpec::Linear, 2, data.clone(), vec![m(1, 0.0); 3]).unwrap();
        for x in [-2.0, -0.1, 0.0, 0.4, 3.0] {
            assert_eq!(one.predict(&[x]).unwrap(), three.predict(&[x]).unwrap());
        }
        assert_eq!(one.predict(&[0.0]).unwrap(), 1);
        // Two members disagree at x = 0.5: +1 votes with |f| = 1.5, -1 with |f| = 0.5.
        let split = EnsembleModel::new(KernelSpec::Linear, 2, data.clone(), vec![m(1, 0.5), m(1, -1.5)]).unwrap();
        assert_eq!(split.member_decision(0, &[0.5]).unwrap(), 1.5);
        assert_eq!(split.member_decision(1, &[0.5]).unwrap(), -0.5);
        assert_eq!(split.predict(&[0.5]).unwrap(), 1);
        let split = EnsembleModel::new(KernelSpec::Linear, 2, data.clone(), vec![m(1, -0.5), m(1, 2.5)]).unwrap();
        assert_eq!(split.predict(&[-1.0]).unwrap(), -1);
        assert!(one.predict(&[1.0, 2.0]).is_err());
        assert!(EnsembleModel::new(KernelSpec::Linear, 2, data, vec![]).is_err());
    }

    #[test]
    fn f1_examples() {
        assert_eq!(f1_score(&[1, -1, 1], &[1, -1, 1]).unwrap(), 1.0);
        let f = f1_score(&[1, 1, 1, 1], &[1, 1, -1, -1]).unwrap();
        assert!((f - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(f1_score(&[-1, -1], &[-1, -1]).unwrap(), 0.0);
        assert!(f1_score(&[1], &[1, 1]).is_err());
    }

    #[test]
    fn synthetic_dataset_examples() {
        let d = synthetic_axis_dataset(8, 0.5, 0.0, 3).unwrap();
        assert_eq!(d.labels().iter().filter(|&&l| l == 1).count(), 4);
        assert!(d.points().iter().all(|p| p[0].abs() >= 0.5 && p[1] == 0.0));
        assert!(d.points().iter().zip(d.labels()).all(|(p, &l)| (p[0] > 0.0) == (l == 1)));
        assert_eq!(d, synthetic_axis_dataset(8, 0.5, 0.0, 3).unwrap());
        let noisy = synthetic_axis_dataset(40, 0.3, 0.1, 3).unwrap();
        let wrong = noisy.points().iter().zip(noisy.labels()).filter(|(p, &l)| (p[0] > 0.0) != (l == 1)).count();
        assert_eq!(wrong, 4);
        assert!(synthetic_axis_dataset(7, 0.5, 0.0, 1).is_err());
        assert!(synthetic_axis_dataset(8, 1.0, 0.0, 1).is_err());
        assert!(synthetic_axis_dataset(8, 0.5, 0.5, 1).is_err());
    }

    #[test]
    fn train_on_separable_data_with_oracle() {
        let data = synthetic_axis_dataset(8, 0.5, 0.0, 11).unwrap();
        let solver = TrainSolver::Sampler { sampler: Sampler::exhaustive(), seed: 0 };
        let model = train(&data, &KernelSpec::Linear, 2, 5.0, &solver, 3).unwrap();
        let pred = model.predict_all(data.points()).unwrap();
        assert_eq!(f1_score(&pred, data.labels()).unwrap(), 1.0);
        assert_eq!(model, train(&data, &KernelSpec::Linear, 2, 5.0, &solver, 3).unwrap());
        let single = train(&data, &KernelSpec::Linear, 2, 5.0, &solver, 1).unwrap();
        assert_eq!(single.members.len(), 1);
        for x in [-1.0, -0.3, 0.0, 0.2, 0.9] {
            let p = single.predict(&[x, 0.0]).unwrap();
            assert_eq!(p, sign(single.member_decision(0, &[x, 0.0]).unwrap()));
        }
    }

    #[test]
    fn default_lambda_scales_with_kernel() {
        let data = Dataset::new(vec![vec![2.0], vec![-1.0]], vec![1, -1]).unwrap();
        assert_eq!(default_lambda(&data, &KernelSpec::Linear), 20.0);
        assert_eq!(default_lambda(&data, &KernelSpec::rbf(1.0).unwrap()), 5.0);
    }
}
