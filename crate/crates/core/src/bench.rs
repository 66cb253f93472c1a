//! Decomposition and embedding benchmark harnesses.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::embed::{chimera_graph, clique_graph, embedding_stats, find_embedding, EmbedParams};
use crate::error::{param, Result};
use crate::qsplit::{qsplit_solve, QSplitConfig};
use crate::qubo::{normalized_gap, random_baseline_energy, random_clique_qubo};
use crate::samplers::{exhaustive_solve, Sampler};
use crate::seed;

pub const CSV_VERSION_LINE: &str = "# qsplit-toolkit v1";

/// Largest instance for which the exhaustive optimum joins the best-known pool.
pub const EXACT_REFERENCE_MAX_VARS: usize = 24;

const RANDOM_BASELINE_SAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecordQSplit {
    pub cut_dim: usize,
    pub cpu_time_s: f64,
    pub sampler_time_s: f64,
    pub sampler_calls: f64,
    pub best_energy: f64,
    pub normalized_gap: f64,
    pub baseline_total_time_s: f64,
    pub baseline_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecordEmbed {
    pub clique_n: usize,
    /// Mean total chain size over successful seeds; empty when none succeeded.
    pub embedding_nodes: Option<f64>,
    pub avg_time_s: f64,
    pub success_rate: f64,
}

#[derive(Debug, Clone)]
pub struct QSplitBench {
    pub vars: usize,
    pub cut_dims: Vec<usize>,
    pub trials: usize,
    pub k: usize,
    pub sampler: Sampler,
    pub seed: u64,
}

impl QSplitBench {
    pub fn validate(&self) -> Result<()> {
        if self.cut_dims.is_empty() {
            return Err(param("at least one cut dimension is required"));
        }
        if self.trials == 0 {
            return Err(param("trials must be positive"));
        }
        let max_cut = *self.cut_dims.iter().max().unwrap();
        if self.vars < max_cut {
            return Err(param(format!("{} variables is less than cut dimension {max_cut}", self.vars)));
        }
        for &c in &self.cut_dims {
            QSplitConfig::new(c, self.k, self.sampler.clone(), 0)?;
        }
        self.sampler.params.validate()
    }
}

#[derive(Default, Clone, Copy)]
struct Acc {
    cpu: f64,
    sampler: f64,
    calls: f64,
    energy: f64,
    gap: f64,
}

impl Acc {
    fn add(&mut self, cpu: f64, sampler: f64, calls: f64, energy: f64, gap: f64) {
        self.cpu += cpu;
        self.sampler += sampler;
        self.calls += calls;
        self.energy += energy;
        self.gap += gap;
    }
}

/// Per cut dimension means over `trials` shared instances, followed by the
/// direct-sampler row (`cut_dim = vars`). The baseline columns repeat the
/// direct sampler's mean time and gap on every row.
pub fn bench_qsplit(cfg: &QSplitBench) -> Result<Vec<BenchRecordQSplit>> {
    cfg.validate()?;
    let mut rows = vec![Acc::default(); cfg.cut_dims.len()];
    let mut direct = Acc::default();
    for t in 0..cfg.trials {
        let trial_seed = seed::derive(cfg.seed, t as u64);
        let q = random_clique_qubo(cfg.vars, seed::derive_label(trial_seed, "instance"))?;

        let mut reports = Vec::with_capacity(cfg.cut_dims.len());
        for &cut in &cfg.cut_dims {
            let sub = seed::derive_label(trial_seed, &format!("qsplit-{cut}"));
            let qc = QSplitConfig::new(cut, cfg.k, cfg.sampler.clone(), sub)?;
            reports.push(qsplit_solve(&q, &qc)?);
        }
        let start = Instant::now();
        let base = cfg.sampler.sample(&q, seed::derive_label(trial_seed, "direct"))?;
        let base_wall = start.elapsed().as_secs_f64();
        let base_energy = base.samples.min_energy().expect("sampler returns samples");

        let mut best = reports
            .iter()
            .filter_map(|r| r.best_energy())
            .fold(base_energy, f64::min);
        if cfg.vars <= EXACT_REFERENCE_MAX_VARS {
            if let Some(e) = exhaustive_solve(&q)?.samples.min_energy() {
                best = best.min(e);
            }
        }
        let random = random_baseline_energy(&q, RANDOM_BASELINE_SAMPLES, seed::derive_label(trial_seed, "random"));
        let random = random.max(best);

        for (acc, r) in rows.iter_mut().zip(&reports) {
            let e = r.best_energy().expect("qsplit returns samples");
            let calls = (r.direct_calls + r.coupling_calls) as f64;
            acc.add(r.cpu_time, r.sampler_time, calls, e, normalized_gap(e, best, random)?);
        }
        let cpu = (base_wall - base.sampler_time).max(0.0);
        direct.add(cpu, base.sampler_time, base.calls as f64, base_energy, normalized_gap(base_energy, best, random)?);
    }

    let n = cfg.trials as f64;
    let base_total = (direct.cpu + direct.sampler) / n;
    let base_gap = direct.gap / n;
    let record = |cut_dim, a: &Acc| BenchRecordQSplit {
        cut_dim,
        cpu_time_s: round_ms(a.cpu / n),
        sampler_time_s: round_ms(a.sampler / n),
        sampler_calls: a.calls / n,
        best_energy: a.energy / n,
        normalized_gap: a.gap / n,
        baseline_total_time_s: round_ms(base_total),
        baseline_gap: base_gap,
    };
    let mut out: Vec<BenchRecordQSplit> = cfg.cut_dims.iter().zip(&rows).map(|(&c, a)| record(c, a)).collect();
    out.push(record(cfg.vars, &direct));
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct EmbedBench {
    pub cliques: Vec<usize>,
    pub target: (usize, usize, usize),
    pub seeds: usize,
    pub timeout_s: f64,
    pub max_passes: usize,
    pub seed: u64,
}

impl EmbedBench {
    pub fn validate(&self) -> Result<()> {
        if self.cliques.is_empty() {
            return Err(param("at least one clique size is required"));
        }
        if self.cliques.contains(&0) {
            return Err(param("clique sizes must be positive"));
        }
        if self.seeds == 0 {
            return Err(param("seed count must be positive"));
        }
        if !(self.timeout_s > 0.0) {
            return Err(param("timeout must be positive"));
        }
        Ok(())
    }
}

/// One row per clique size: mean chain total over successes, mean search
/// time over all seeds, and the success fraction.
pub fn bench_embed(cfg: &EmbedBench) -> Result<Vec<BenchRecordEmbed>> {
    cfg.validate()?;
    let (m, n, t) = cfg.target;
    let h = chimera_graph(m, n, t)?;
    let mut out = Vec::with_capacity(cfg.cliques.len());
    for &size in &cfg.cliques {
        let p = clique_graph(size);
        let mut total_time = 0.0;
        let mut nodes = Vec::new();
        for r in 0..cfg.seeds {
            let params = EmbedParams {
                seed: seed::derive(seed::derive_label(cfg.seed, &format!("clique-{size}")), r as u64),
                timeout_s: cfg.timeout_s,
                max_passes: cfg.max_passes,
                ..EmbedParams::default()
            };
            let start = Instant::now();
            let result = find_embedding(&p, &h, &params);
            let elapsed = start.elapsed().as_secs_f64();
            total_time += elapsed;
            if let Ok(e) = result {
                nodes.push(embedding_stats(&e, elapsed).total_nodes as f64);
            }
        }
        out.push(BenchRecordEmbed {
            clique_n: size,
            embedding_nodes: (!nodes.is_empty()).then(|| nodes.iter().sum::<f64>() / nodes.len() as f64),
            avg_time_s: round_ms(total_time / cfg.seeds as f64),
            success_rate: nodes.len() as f64 / cfg.seeds as f64,
        });
    }
    Ok(out)
}

pub fn round_ms(seconds: f64) -> f64 {
    (seconds * 1000.0).round() / 1000.0
}

/// Version comment line, header, then one row per record.
pub fn write_csv<T: Serialize, W: Write>(records: &[T], mut writer: W) -> Result<()> {
    writeln!(writer, "{CSV_VERSION_LINE}")?;
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
