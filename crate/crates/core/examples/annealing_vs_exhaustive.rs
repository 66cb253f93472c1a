//! Simulated annealing against the exhaustive oracle on random 16-variable cliques.

use qsplit_toolkit::qubo::random_clique_qubo;
use qsplit_toolkit::samplers::{exhaustive_solve, Sampler, SamplerParams};
use qsplit_toolkit::seed;

fn main() -> qsplit_toolkit::Result<()> {
    let trials = 20;
    let sa = Sampler::annealing(SamplerParams::default());
    let mut hits = 0;
    for t in 0..trials {
        let s = seed::derive(42, t);
        let q = random_clique_qubo(16, s)?;
        let exact = exhaustive_solve(&q)?;
        let annealed = sa.sample(&q, s)?;
        let (opt, got) = (exact.samples.min_energy().unwrap(), annealed.samples.min_energy().unwrap());
        let hit = (got - opt).abs() < 1e-9;
        hits += hit as usize;
        println!(
            "instance {t:2}: optimum {opt:9.4} annealed {got:9.4} {} ({:.1} ms vs {:.1} ms)",
            if hit { "hit " } else { "miss" },
            exact.sampler_time * 1e3,
            annealed.sampler_time * 1e3
        );
    }
    println!("{hits}/{trials} optimal");
    Ok(())
}
