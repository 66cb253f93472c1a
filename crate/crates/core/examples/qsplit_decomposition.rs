//! One decomposition solve, with the quadrant split and call accounting.

use qsplit_toolkit::qsplit::{qsplit_solve, split, structural_calls, QSplitConfig};
use qsplit_toolkit::qubo::random_clique_qubo;
use qsplit_toolkit::samplers::{exhaustive_solve, Sampler};

fn main() -> qsplit_toolkit::Result<()> {
    let q = random_clique_qubo(20, 7)?;
    let parts = split(&q)?;
    println!(
        "n = {}: UL {} vars, BR {} vars, {} coupling entries",
        q.n(),
        parts.ul.n(),
        parts.br.n(),
        parts.ur.len()
    );

    let optimum = exhaustive_solve(&q)?.samples.min_energy().unwrap();
    for cut in [2, 4, 8, 16] {
        let cfg = QSplitConfig::new(cut, 5, Sampler::exhaustive(), 7)?;
        let r = qsplit_solve(&q, &cfg)?;
        println!(
            "cut {cut:2}: best {:9.4} (optimum {optimum:9.4})  calls {:3} = {} tree + {} conflict  largest {}",
            r.best_energy().unwrap(),
            r.sampler_calls,
            r.direct_calls + r.coupling_calls,
            r.conflict_calls,
            r.max_padded_size
        );
        assert_eq!(r.direct_calls + r.coupling_calls, structural_calls(q.n(), cut));
    }
    Ok(())
}
