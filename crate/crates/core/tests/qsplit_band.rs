use qsplit_toolkit::qsplit::{qsplit_solve, QSplitConfig};
use qsplit_toolkit::qubo::{normalized_gap, random_baseline_energy, random_clique_qubo};
use qsplit_toolkit::samplers::{Sampler, SamplerParams};
use qsplit_toolkit::seed;

/// n=32 cliques, cut dimension 8, exhaustive leaves. The reference optimum is
/// the better of QSplit and a long direct annealing run.
#[test]
fn n32_cut8_gap_stays_in_band() {
    let reference = Sampler::annealing(SamplerParams { num_reads: 200, num_sweeps: 4000, ..SamplerParams::default() });
    let mut gaps = Vec::new();
    for i in 0..20u64 {
        let s = seed::derive(seed::derive_label(11, "band"), i);
        let q = random_clique_qubo(32, s).unwrap();
        let cfg = QSplitConfig::new(8, 5, Sampler::exhaustive(), s).unwrap();
        let got = qsplit_solve(&q, &cfg).unwrap().best_energy().unwrap();
        let best = reference.sample(&q, s).unwrap().samples.min_energy().unwrap().min(got);
        let random = random_baseline_energy(&q, 1000, s).max(best);
        gaps.push(normalized_gap(got, best, random).unwrap());
    }
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    println!("mean normalized gap {mean:.4} over {} instances: {gaps:.3?}", gaps.len());
    assert!((0.0..=0.6).contains(&mean));
}
