use rand::Rng;

use super::QuboMatrix;
use crate::error::{param, Result};
use crate::seed;

/// Fully dense upper triangle with coefficients uniform on `[-1, 1]`.
pub fn random_clique_qubo(n: usize, seed: u64) -> Result<QuboMatrix> {
    if n == 0 {
        return Err(param("random clique needs at least one variable"));
    }
    let mut rng = seed::rng(seed);
    let mut q = QuboMatrix::new(n);
    for i in 0..n {
        for j in i..n {
            let v = loop {
                let v: f64 = rng.gen_range(-1.0..=1.0);
                if v != 0.0 {
                    break v;
                }
            };
            q.set(i, j, v)?;
        }
    }
    Ok(q)
}

/// Mean energy of `samples` uniform random assignments.
pub fn random_baseline_energy(q: &QuboMatrix, samples: usize, seed: u64) -> f64 {
    if samples == 0 {
        return q.offset();
    }
    let mut rng = seed::rng(seed);
    let mut total = 0.0;
    let mut bits = vec![0u8; q.n()];
    for _ in 0..samples {
        for b in bits.iter_mut() {
            *b = rng.gen_range(0..=1);
        }
        total += q.energy_of_bits(&bits);
    }
    total / samples as f64
}

/// Map an energy onto `[0, 1]`: 0 at `best`, 1 at (or beyond) `baseline`.
pub fn normalized_gap(energy: f64, best: f64, baseline: f64) -> Result<f64> {
    if baseline < best {
        return Err(param(format!("baseline {baseline} is below best {best}")));
    }
    if baseline == best {
        return Ok(0.0);
    }
    Ok(((energy - best) / (baseline - best)).clamp(0.0, 1.0))
}
