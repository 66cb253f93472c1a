//! Embed cliques into a 16x16 Chimera graph and check the chains.

use std::time::Instant;

use qsplit_toolkit::embed::{chimera_graph, clique_graph, find_embedding, verify_embedding, EmbedParams};

fn main() -> qsplit_toolkit::Result<()> {
    let h = chimera_graph(16, 16, 4)?;
    println!("chimera(16,16,4): {} qubits, {} couplers", h.num_nodes(), h.graph.num_edges());
    for n in [4, 8, 16, 24] {
        let p = clique_graph(n);
        let start = Instant::now();
        match find_embedding(&p, &h, &EmbedParams::default().with_seed(3)) {
            Ok(e) => {
                let problems = verify_embedding(&p, &h, &e);
                println!(
                    "K{n:<2}: {:4} qubits, longest chain {:2}, {:.3} s, {}",
                    e.total_nodes(),
                    e.max_chain(),
                    start.elapsed().as_secs_f64(),
                    if problems.is_empty() { "valid" } else { "INVALID" }
                );
            }
            Err(err) => println!("K{n:<2}: {err}"),
        }
    }
    Ok(())
}
