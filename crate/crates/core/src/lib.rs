//! QUBO optimization toolkit.
//!
//! The crate is organised around two currencies: [`QuboMatrix`], an
//! upper-triangular quadratic form over binary variables, and
//! [`SampleSet`], the energy-sorted output every solver backend returns.
//!
//! - [`qubo`]: problem representation and transformations (penalties,
//!   integer encoding, variable fixing, file format, random instances).
//! - [`samplers`]: exhaustive oracle and simulated-annealing sampler.
//! - [`qsplit`]: recursive quadrant decomposition solver.
//! - [`svm`]: soft-margin SVM training reduced to QUBO, ensemble inference.
//! - [`embed`]: Chimera hardware graphs and chain-growth minor embedding.
//! - [`bench`]: the decomposition and embedding benchmark harnesses.
//! - [`cli`]: the `qsplit` command-line front end.
//!
//! Runnable walkthroughs for each capability live in `examples/`:
//!
//! ```bash
//! cargo run --release -p qsplit-toolkit --example qubo_basics
//! cargo run --release -p qsplit-toolkit --example annealing_vs_exhaustive
//! cargo run --release -p qsplit-toolkit --example qsplit_decomposition
//! cargo run --release -p qsplit-toolkit --example svm_on_axis
//! cargo run --release -p qsplit-toolkit --example chimera_embedding
//! cargo run --release -p qsplit-toolkit --example qsplit_table
//! ```

pub mod bench;
pub mod cli;
pub mod embed;
mod error;
pub mod qsplit;
pub mod qubo;
pub mod samplers;
pub mod seed;
pub mod svm;

pub use error::{Error, Result};
pub use qubo::{Assignment, QuboMatrix, Sample, SampleSet};
