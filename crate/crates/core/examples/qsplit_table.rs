//! The decomposition benchmark table: QSplit at each cut dimension against
//! the direct sampler on random 128-variable cliques.
//!
//! Pass a trial count as the first argument (default 3).

use qsplit_toolkit::bench::{bench_qsplit, write_csv, QSplitBench};
use qsplit_toolkit::samplers::{Sampler, SamplerParams};

fn main() -> qsplit_toolkit::Result<()> {
    let trials = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(3);
    let cfg = QSplitBench {
        vars: 128,
        cut_dims: vec![2, 4, 8, 16, 32],
        trials,
        k: 5,
        sampler: Sampler::annealing(SamplerParams { num_reads: 20, num_sweeps: 500, ..SamplerParams::default() }),
        seed: 2024,
    };
    let rows = bench_qsplit(&cfg)?;
    println!("{:>7} {:>9} {:>9} {:>7} {:>8}", "cut", "cpu s", "sampler s", "calls", "gap");
    for r in &rows {
        println!(
            "{:>7} {:>9.3} {:>9.3} {:>7.0} {:>8.4}",
            r.cut_dim, r.cpu_time_s, r.sampler_time_s, r.sampler_calls, r.normalized_gap
        );
    }
    write_csv(&rows, std::io::stderr())
}
