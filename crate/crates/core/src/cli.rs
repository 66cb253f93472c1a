//! Command-line front end. [`run`] returns the process exit code:
//! 0 success, 1 usage or parameter error, 2 input parse or IO error,
//! 3 solver capacity or timeout.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::bench::{bench_embed, bench_qsplit, write_csv, EmbedBench, QSplitBench};
use crate::embed::{
    chimera_graph, clique_graph, embedding_stats, find_embedding, parse_graph, verify_embedding, EmbedParams,
};
use crate::error::Error;
use crate::qsplit::{qsplit_solve, QSplitConfig};
use crate::qubo::{parse_qubo_file, random_clique_qubo, serialize_qubo_file, QuboMatrix, SampleSet};
use crate::samplers::{Sampler, SamplerParams};
use crate::seed;
use crate::svm::{
    default_lambda, f1_score, load_model, read_dataset_csv, save_model, synthetic_axis_dataset, train,
    write_dataset_csv, write_predictions_csv, KernelSpec, TrainSolver,
};

#[derive(Parser, Debug)]
#[command(name = "qsplit", version, about = "QUBO decomposition, annealing, SVM and embedding toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a random dense QUBO instance.
    GenQubo {
        #[arg(long)]
        vars: usize,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve a QUBO file and print a JSON report.
    Solve {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long)]
        cut_dim: Option<usize>,
        /// Samples kept per subproblem and reported.
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// Backend for qsplit subproblems.
        #[arg(long, value_enum, default_value_t = Backend::Sa)]
        backend: Backend,
        #[command(flatten)]
        anneal: AnnealArgs,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare QSplit at several cut dimensions against the direct sampler.
    BenchQsplit {
        #[arg(long, default_value_t = 128)]
        vars: usize,
        #[arg(long, default_value = "2,4,8,16,32")]
        cut_dims: String,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long, value_enum, default_value_t = Backend::Sa)]
        backend: Backend,
        #[arg(long, default_value_t = 20)]
        reads: usize,
        #[arg(long, default_value_t = 500)]
        sweeps: usize,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Embedding cost of cliques on a Chimera target.
    BenchEmbed {
        #[arg(long)]
        cliques: String,
        #[arg(long, default_value = "16,16,4")]
        target: String,
        #[arg(long, default_value_t = 5)]
        seeds: usize,
        #[arg(long, default_value_t = 60.0)]
        timeout: f64,
        #[arg(long, default_value_t = 64)]
        max_passes: usize,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Embed one problem graph into a Chimera target.
    Embed {
        /// Problem graph file; mutually exclusive with --clique.
        #[arg(long, conflicts_with = "clique", required_unless_present = "clique")]
        graph: Option<PathBuf>,
        #[arg(long)]
        clique: Option<usize>,
        #[arg(long, default_value = "16,16,4")]
        target: String,
        #[arg(long, default_value_t = 60.0)]
        timeout: f64,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// SVM training on QUBO samplers.
    Svm {
        #[command(subcommand)]
        command: SvmCommand,
    },
}

#[derive(Subcommand, Debug)]
enum SvmCommand {
    /// Synthetic balanced dataset on the x-axis.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.3)]
        margin: f64,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: PathBuf,
    },
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 3)]
        bits: usize,
        /// Defaults to 5 max|K_ij|.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, value_enum, default_value_t = KernelArg::Linear)]
        kernel: KernelArg,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 3)]
        ensemble: usize,
        #[arg(long, value_enum, default_value_t = Method::Sa)]
        method: Method,
        #[arg(long)]
        cut_dim: Option<usize>,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[command(flatten)]
        anneal: AnnealArgs,
        #[command(flatten)]
        seed: SeedArg,
        /// Model JSON destination.
        #[arg(long, alias = "model")]
        out: PathBuf,
    },
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct SeedArg {
    /// Master seed; every sub-seed is derived from it.
    #[arg(long, env = "QSPLIT_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct AnnealArgs {
    #[arg(long, default_value_t = 100)]
    reads: usize,
    #[arg(long, default_value_t = 1000)]
    sweeps: usize,
}

impl AnnealArgs {
    fn params(&self) -> SamplerParams {
        SamplerParams { num_reads: self.reads, num_sweeps: self.sweeps, ..SamplerParams::default() }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Method {
    Exhaustive,
    Sa,
    Qsplit,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Backend {
    Exhaustive,
    Sa,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum KernelArg {
    Linear,
    Rbf,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: 1, message: message.into() }
}

/// Errors reading user input are always exit 2.
fn input(e: Error) -> Failure {
    Failure { code: 2, message: e.to_string() }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Dimension(_) | Error::Parameter(_) | Error::Data(_) => 1,
            Error::Parse { .. } | Error::Io(_) | Error::Json(_) | Error::Csv(_) => 2,
            Error::Capacity(_) => 3,
        };
        Failure { code, message: e.to_string() }
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Parse `args` (including the program name) and execute.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cmd: Command) -> CmdResult {
    match cmd {
        Command::GenQubo { vars, seed, out } => gen_qubo(vars, seed.seed, &out),
        Command::Solve { input, method, cut_dim, k, backend, anneal, seed, out } => {
            solve(&input, method, cut_dim, k, backend, &anneal, seed.seed, out.as_deref())
        }
        Command::BenchQsplit { vars, cut_dims, trials, k, backend, reads, sweeps, seed, out } => {
            let params = SamplerParams { num_reads: reads, num_sweeps: sweeps, ..SamplerParams::default() };
            let cfg = QSplitBench {
                vars,
                cut_dims: parse_list(&cut_dims, "--cut-dims")?,
                trials,
                k,
                sampler: sampler_for(backend, params),
                seed: seed.seed,
            };
            let rows = bench_qsplit(&cfg)?;
            let mut buf = Vec::new();
            write_csv(&rows, &mut buf)?;
            emit(out.as_deref(), &buf)
        }
        Command::BenchEmbed { cliques, target, seeds, timeout, max_passes, seed, out } => {
            let cfg = EmbedBench {
                cliques: parse_list(&cliques, "--cliques")?,
                target: parse_target(&target)?,
                seeds,
                timeout_s: timeout,
                max_passes,
                seed: seed.seed,
            };
            let rows = bench_embed(&cfg)?;
            let mut buf = Vec::new();
            write_csv(&rows, &mut buf)?;
            emit(out.as_deref(), &buf)
        }
        Command::Embed { graph, clique, target, timeout, seed, out } => {
            embed(graph.as_deref(), clique, &target, timeout, seed.seed, out.as_deref())
        }
        Command::Svm { command } => svm(command),
    }
}

fn sampler_for(backend: Backend, params: SamplerParams) -> Sampler {
    match backend {
        Backend::Exhaustive => Sampler::exhaustive(),
        Backend::Sa => Sampler::annealing(params),
    }
}

fn parse_list(text: &str, flag: &str) -> std::result::Result<Vec<usize>, Failure> {
    let items: Vec<&str> = text.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(usage(format!("{flag} must list at least one value")));
    }
    items
        .iter()
        .map(|s| s.parse::<usize>().map_err(|_| usage(format!("{flag}: `{s}` is not a non-negative integer"))))
        .collect()
}

fn parse_target(text: &str) -> std::result::Result<(usize, usize, usize), Failure> {
    match parse_list(text, "--target")?[..] {
        [m, n, t] => Ok((m, n, t)),
        _ => Err(usage("--target expects rows,cols,shore")),
    }
}

fn read_input(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure { code: 2, message: format!("{}: {e}", path.display()) })
}

fn write_output(path: &Path, bytes: &[u8]) -> CmdResult {
    fs::write(path, bytes).map_err(|e| Failure { code: 2, message: format!("{}: {e}", path.display()) })
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> CmdResult {
    match path {
        Some(p) => write_output(p, bytes),
        None => std::io::stdout().write_all(bytes).map_err(|e| input(e.into())),
    }
}

fn pretty(value: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("json values serialize");
    s.push('\n');
    s.into_bytes()
}

fn gen_qubo(vars: usize, seed: u64, out: &Path) -> CmdResult {
    if vars == 0 {
        return Err(usage("--vars must be at least 1"));
    }
    let q = random_clique_qubo(vars, seed)?;
    write_output(out, serialize_qubo_file(&q).as_bytes())
}

fn samples_json(set: &SampleSet, k: usize) -> Value {
    Value::Array(
        set.iter()
            .take(k)
            .map(|s| json!({"assignment": s.assignment.to_string(), "energy": s.energy, "occurrences": s.occurrences}))
            .collect(),
    )
}

#[allow(clippy::too_many_arguments)]
fn solve(
    path: &Path,
    method: Method,
    cut_dim: Option<usize>,
    k: usize,
    backend: Backend,
    anneal: &AnnealArgs,
    seed: u64,
    out: Option<&Path>,
) -> CmdResult {
    if method != Method::Qsplit && cut_dim.is_some() {
        return Err(usage("--cut-dim only applies to --method qsplit"));
    }
    if k == 0 {
        return Err(usage("--k must be at least 1"));
    }
    let q: QuboMatrix = parse_qubo_file(&read_input(path)?).map_err(input)?;
    let report = match method {
        Method::Exhaustive | Method::Sa => {
            let sampler = match method {
                Method::Exhaustive => Sampler::exhaustive(),
                _ => Sampler::annealing(anneal.params()),
            };
            let outcome = sampler.sample(&q, seed)?;
            json!({
                "method": sampler.kind.to_string(),
                "n": q.n(),
                "seed": seed,
                "best_energy": outcome.samples.min_energy(),
                "samples": samples_json(&outcome.samples, k),
                "sampler_calls": outcome.calls,
                "timing": {"cpu_time_s": 0.0, "sampler_time_s": outcome.sampler_time},
            })
        }
        Method::Qsplit => {
            let cut = cut_dim.ok_or_else(|| usage("--method qsplit requires --cut-dim"))?;
            let cfg = QSplitConfig::new(cut, k, sampler_for(backend, anneal.params()), seed)?;
            let r = qsplit_solve(&q, &cfg)?;
            json!({
                "method": "qsplit",
                "n": q.n(),
                "seed": seed,
                "cut_dim": cut,
                "k": k,
                "best_energy": r.best_energy(),
                "samples": samples_json(&r.best, k),
                "sampler_calls": r.sampler_calls,
                "direct_calls": r.direct_calls,
                "coupling_calls": r.coupling_calls,
                "conflict_calls": r.conflict_calls,
                "max_padded_size": r.max_padded_size,
                "timing": {"cpu_time_s": r.cpu_time, "sampler_time_s": r.sampler_time},
            })
        }
    };
    emit(out, &pretty(&report))
}

fn embed(
    graph: Option<&Path>,
    clique: Option<usize>,
    target: &str,
    timeout: f64,
    seed: u64,
    out: Option<&Path>,
) -> CmdResult {
    let (m, n, t) = parse_target(target)?;
    let h = chimera_graph(m, n, t)?;
    let p = match (graph, clique) {
        (Some(path), _) => parse_graph(&read_input(path)?).map_err(input)?,
        (None, Some(c)) => clique_graph(c),
        (None, None) => return Err(usage("either --graph or --clique is required")),
    };
    if !(timeout > 0.0) {
        return Err(usage("--timeout must be positive"));
    }
    let params = EmbedParams { seed: seed::derive_label(seed, "embed"), timeout_s: timeout, ..EmbedParams::default() };
    let start = std::time::Instant::now();
    let e = find_embedding(&p, &h, &params).map_err(|f| Failure { code: 3, message: f.to_string() })?;
    let stats = embedding_stats(&e, start.elapsed().as_secs_f64());
    debug_assert!(verify_embedding(&p, &h, &e).is_empty());
    eprintln!("total_nodes {} max_chain {} elapsed_s {:.3}", stats.total_nodes, stats.max_chain, stats.elapsed_s);
    let mut text = e.to_json()?;
    text.push('\n');
    emit(out, text.as_bytes())
}

fn svm(cmd: SvmCommand) -> CmdResult {
    match cmd {
        SvmCommand::Gen { n, margin, noise, seed, out } => {
            let data = synthetic_axis_dataset(n, margin, noise, seed.seed)?;
            let mut buf = Vec::new();
            write_dataset_csv(&data, &mut buf)?;
            write_output(&out, &buf)
        }
        SvmCommand::Train {
            data,
            bits,
            lambda,
            kernel,
            gamma,
            ensemble,
            method,
            cut_dim,
            k,
            anneal,
            seed,
            out,
        } => {
            let data = read_dataset_csv(read_input(&data)?.as_bytes()).map_err(input)?;
            let kernel = match kernel {
                KernelArg::Linear => KernelSpec::Linear,
                KernelArg::Rbf => KernelSpec::rbf(gamma)?,
            };
            let lambda = lambda.unwrap_or_else(|| default_lambda(&data, &kernel));
            let solve_seed = seed::derive_label(seed.seed, "svm-train");
            let solver = match method {
                Method::Exhaustive => TrainSolver::Sampler { sampler: Sampler::exhaustive(), seed: solve_seed },
                Method::Sa => TrainSolver::Sampler { sampler: Sampler::annealing(anneal.params()), seed: solve_seed },
                Method::Qsplit => {
                    let cut = cut_dim.ok_or_else(|| usage("--method qsplit requires --cut-dim"))?;
                    TrainSolver::QSplit(QSplitConfig::new(cut, k, Sampler::annealing(anneal.params()), solve_seed)?)
                }
            };
            let model = train(&data, &kernel, bits, lambda, &solver, ensemble)?;
            let f1 = f1_score(&model.predict_all(data.points())?, data.labels())?;
            let mut text = save_model(&model)?;
            text.push('\n');
            write_output(&out, text.as_bytes())?;
            println!("members {} train_f1 {f1:.3}", model.members.len());
            Ok(())
        }
        SvmCommand::Predict { model, data, out } => {
            let model = load_model(&read_input(&model)?).map_err(input)?;
            let data = read_dataset_csv(read_input(&data)?.as_bytes()).map_err(input)?;
            if data.dim() != model.data.dim() {
                return Err(Failure {
                    code: 2,
                    message: format!("data has {} features, model expects {}", data.dim(), model.data.dim()),
                });
            }
            let pred = model.predict_all(data.points())?;
            let mut buf = Vec::new();
            write_predictions_csv(&pred, &mut buf)?;
            emit(out.as_deref(), &buf)?;
            println!("f1 {:.3}", f1_score(&pred, data.labels())?);
            Ok(())
        }
    }
}
