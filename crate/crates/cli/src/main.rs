mod record;

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use stopstare::bounds::{default_epsilon_split, EpsilonSplit};
use stopstare::graph::{
    load_edge_list, read_binary, write_binary, write_edge_list, LoadOptions, BINARY_MAGIC,
};
use stopstare::harness::{generate, guarantee_trial, SyntheticSpec};
use stopstare::oracle::{exact_influence, exact_opt, mc_influence};
use stopstare::sampling::RngStream;
use stopstare::tvm::{run_plain, tvm_run};
use stopstare::{Algo, Graph, Model, NodeId, StopStareConfig, TargetWeights};

use record::{
    EvalRecord, ExactRecord, GraphInfo, GuaranteeRecord, RunContext, RunRecord, SCHEMA_VERSION,
};

#[derive(Parser)]
#[command(
    name = "stopstare",
    version,
    about = "Stop-and-stare influence maximization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a graph between the text edge list and the binary format.
    Convert(ConvertArgs),
    /// Select k seeds with SSA or D-SSA.
    Im(ImArgs),
    /// Targeted seed selection: roots weighted by a per-node weights file.
    Tvm(TvmArgs),
    /// Monte Carlo influence of a seed set.
    Eval(EvalArgs),
    /// Exact influence or exhaustive OPT on a small graph.
    Exact(ExactArgs),
    /// Run every (algo, k) pair, or the approximation-guarantee suite.
    Bench(BenchArgs),
}

#[derive(Args, Clone)]
struct GraphArgs {
    /// Graph file: binary (detected by its magic bytes) or text edge list.
    #[arg(long)]
    graph: PathBuf,
    /// Text input only: add both directions for every listed edge.
    #[arg(long)]
    undirected: bool,
    /// Text input: ignore any weight column and use 1/d_in(v). Binary
    /// input: overwrite the stored weights the same way.
    #[arg(long)]
    auto_weight: bool,
}

#[derive(Args)]
struct ConvertArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Output format; by default the opposite of the input's.
    #[arg(long, value_enum)]
    to: Option<Format>,
    #[arg(long)]
    undirected: bool,
    #[arg(long)]
    auto_weight: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Binary,
}

#[derive(Clone, Copy, Debug)]
enum Delta {
    Auto,
    Value(f64),
}

impl FromStr for Delta {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Delta::Auto);
        }
        s.parse::<f64>()
            .map(Delta::Value)
            .map_err(|_| format!("expected a number or `auto`, got `{s}`"))
    }
}

impl Delta {
    fn resolve(self, n: usize) -> f64 {
        match self {
            Delta::Auto => 1.0 / n as f64,
            Delta::Value(d) => d,
        }
    }
}

#[derive(Args, Clone)]
struct RunArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, value_parser = parse_model, default_value = "lt")]
    model: Model,
    #[arg(long, value_parser = parse_algo, default_value = "dssa")]
    algo: Algo,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Failure probability, or `auto` for 1/n.
    #[arg(long, default_value = "auto")]
    delta: Delta,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    exec: ExecArgs,
    #[command(flatten)]
    split: SplitArgs,
}

#[derive(Args, Clone)]
struct ExecArgs {
    /// Sampler threads; 1 is the reproducibility mode.
    #[arg(long, env = "SSA_THREADS", default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    threads: u64,
    /// Report `wall_ms` as null so that output is byte-stable.
    #[arg(long)]
    no_timing: bool,
    /// Write CSV instead of JSON.
    #[arg(long)]
    csv: bool,
    /// Write to this file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

/// SSA precision split; all three or none.
#[derive(Args, Clone)]
struct SplitArgs {
    #[arg(long, requires_all = ["eps2", "eps3"])]
    eps1: Option<f64>,
    #[arg(long, requires_all = ["eps1", "eps3"])]
    eps2: Option<f64>,
    #[arg(long, requires_all = ["eps1", "eps2"])]
    eps3: Option<f64>,
}

impl SplitArgs {
    fn get(&self) -> Option<EpsilonSplit> {
        match (self.eps1, self.eps2, self.eps3) {
            (Some(a), Some(b), Some(c)) => Some(EpsilonSplit::new(a, b, c)),
            _ => None,
        }
    }
}

#[derive(Args)]
struct ImArgs {
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct TvmArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Lines of `node_id weight`; unlisted nodes weigh 0.
    #[arg(long)]
    weights: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, value_parser = parse_model, default_value = "lt")]
    model: Model,
    /// Comma-separated node ids.
    #[arg(long, value_delimiter = ',', required = true)]
    seeds: Vec<NodeId>,
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    runs: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ExactArgs {
    /// `influence` needs --seeds, `opt` needs --k; inferred when omitted.
    #[arg(value_enum)]
    mode: Option<ExactMode>,
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, value_parser = parse_model, default_value = "lt")]
    model: Model,
    #[arg(long, value_delimiter = ',', conflicts_with = "k")]
    seeds: Option<Vec<NodeId>>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExactMode {
    Influence,
    Opt,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    /// Approximation-guarantee trials against exact OPT on a small graph.
    Guarantees,
}

#[derive(Args)]
struct BenchArgs {
    /// Graph file; the guarantees suite generates its own graph if omitted.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    undirected: bool,
    #[arg(long)]
    auto_weight: bool,
    #[arg(long, value_enum)]
    suite: Option<Suite>,
    #[arg(long, value_parser = parse_model, default_value = "lt")]
    model: Model,
    #[arg(long, value_delimiter = ',', value_parser = parse_algo, default_value = "ssa,dssa")]
    algos: Vec<Algo>,
    /// Comma-separated seed-set sizes (default 10; 2 for the guarantees suite).
    #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(u64).range(1..))]
    ks: Vec<u64>,
    /// Default 0.1 (0.3 for the guarantees suite).
    #[arg(long)]
    eps: Option<f64>,
    /// Default `auto` (0.2 for the guarantees suite).
    #[arg(long)]
    delta: Option<Delta>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Runs per (algo, k), with seeds seed, seed + 1, ...
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    repeats: u64,
    /// Guarantees suite: trials per (algo, model).
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[command(flatten)]
    exec: ExecArgs,
}

fn parse_model(s: &str) -> Result<Model, String> {
    s.parse::<Model>().map_err(|e| e.to_string())
}

fn parse_algo(s: &str) -> Result<Algo, String> {
    s.parse::<Algo>().map_err(|e| e.to_string())
}

/// Invalid input detected after argument parsing; exits with status 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let is_usage = e.chain().any(|c| {
                c.is::<UsageError>()
                    || matches!(
                        c.downcast_ref::<stopstare::Error>(),
                        Some(stopstare::Error::Argument(_))
                    )
            });
            eprintln!("error: {e:#}");
            ExitCode::from(if is_usage { 2 } else { 1 })
        }
    }
}

fn dispatch(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Convert(a) => convert(a),
        Command::Im(a) => im(a.run, None),
        Command::Tvm(a) => im(a.run, Some(a.weights)),
        Command::Eval(a) => eval(a),
        Command::Exact(a) => exact(a),
        Command::Bench(a) => bench(a),
    }
}

// ---------------------------------------------------------------------------
// Graph I/O

fn is_binary(path: &Path) -> anyhow::Result<bool> {
    let mut head = [0u8; 4];
    let mut f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut got = 0;
    while got < head.len() {
        match f.read(&mut head[got..])? {
            0 => break,
            r => got += r,
        }
    }
    Ok(got == head.len() && &head == BINARY_MAGIC)
}

fn load_graph(path: &Path, undirected: bool, auto_weight: bool) -> anyhow::Result<Graph> {
    let ctx = || format!("loading {}", path.display());
    let file = File::open(path).with_context(ctx)?;
    let g = if is_binary(path)? {
        if undirected {
            return Err(usage("--undirected applies to text edge lists only"));
        }
        let g = read_binary(BufReader::new(file)).with_context(ctx)?;
        if auto_weight {
            g.auto_weight()
        } else {
            g
        }
    } else {
        let options = LoadOptions {
            weighted: !auto_weight,
            undirected,
        };
        load_edge_list(BufReader::new(file), options).with_context(ctx)?
    };
    log::info!("loaded {}: n = {}, m = {}", path.display(), g.n(), g.m());
    Ok(g)
}

fn graph_info(path: &Path, g: &Graph) -> GraphInfo {
    GraphInfo {
        path: path.display().to_string(),
        n: g.n(),
        m: g.m(),
    }
}

fn convert(a: ConvertArgs) -> anyhow::Result<()> {
    let from_binary = is_binary(&a.input)?;
    let g = load_graph(&a.input, a.undirected, a.auto_weight)?;
    let to = a.to.unwrap_or(if from_binary {
        Format::Text
    } else {
        Format::Binary
    });
    let out =
        File::create(&a.output).with_context(|| format!("creating {}", a.output.display()))?;
    let mut w = BufWriter::new(out);
    match to {
        Format::Binary => write_binary(&g, &mut w)?,
        Format::Text => write_edge_list(&g, &mut w)?,
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Output

fn open_output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: serde::Serialize>(out: &mut dyn Write, value: &T) -> anyhow::Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn write_runs(exec: &ExecArgs, records: &[RunRecord]) -> anyhow::Result<()> {
    let mut out = open_output(exec.output.as_deref())?;
    if exec.csv {
        writeln!(out, "{}", RunRecord::CSV_HEADER)?;
        for r in records {
            writeln!(out, "{}", r.csv_row())?;
        }
    } else {
        for r in records {
            write_json(&mut out, r)?;
        }
    }
    out.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Commands

fn check_k(k: u64, n: usize) -> anyhow::Result<usize> {
    if k > n as u64 {
        return Err(usage(format!("--k {k} exceeds the number of nodes ({n})")));
    }
    Ok(k as usize)
}

fn used_split(
    algo: Algo,
    explicit: Option<EpsilonSplit>,
    eps: f64,
) -> anyhow::Result<Option<EpsilonSplit>> {
    match (algo, explicit) {
        (Algo::Dssa, Some(_)) => Err(usage("--eps1/--eps2/--eps3 apply to SSA only")),
        (Algo::Dssa, None) => Ok(None),
        (Algo::Ssa, Some(s)) => Ok(Some(s)),
        (Algo::Ssa, None) => Ok(Some(default_epsilon_split(eps)?)),
    }
}

fn im(a: RunArgs, weights_path: Option<PathBuf>) -> anyhow::Result<()> {
    let g = load_graph(&a.graph.graph, a.graph.undirected, a.graph.auto_weight)?;
    let info = graph_info(&a.graph.graph, &g);
    let k = check_k(a.k, g.n())?;
    let delta = a.delta.resolve(g.n());
    let split = used_split(a.algo, a.split.get(), a.eps)?;
    let mut config = StopStareConfig::new(&g, k, a.eps, a.model)
        .with_delta(delta)
        .with_seed(a.seed)
        .with_threads(a.exec.threads as usize);
    config.split = a.split.get();

    let (result, weights, command) = match &weights_path {
        Some(p) => {
            let file = File::open(p).with_context(|| format!("opening {}", p.display()))?;
            let tw = TargetWeights::load(BufReader::new(file), g.n())
                .with_context(|| format!("loading {}", p.display()))?;
            let r = tvm_run(&g, &tw, &config, a.algo)?;
            (r, Some((p.display().to_string(), tw.gamma())), "tvm")
        }
        None => (run_plain(&g, &config, a.algo)?, None, "im"),
    };
    let ctx = RunContext {
        command,
        algo: a.algo,
        model: a.model,
        graph: &info,
        k,
        eps: a.eps,
        delta,
        eps_split: split,
        threads: a.exec.threads as usize,
        weights,
        timing: !a.exec.no_timing,
    };
    write_runs(&a.exec, &[RunRecord::new(&ctx, &result)])
}

fn check_seeds(seeds: &[NodeId], n: usize) -> anyhow::Result<()> {
    if let Some(s) = seeds.iter().find(|&&s| s as usize >= n) {
        return Err(usage(format!("seed {s} out of range for n = {n}")));
    }
    Ok(())
}

fn eval(a: EvalArgs) -> anyhow::Result<()> {
    let g = load_graph(&a.graph.graph, a.graph.undirected, a.graph.auto_weight)?;
    check_seeds(&a.seeds, g.n())?;
    let mut rng = RngStream::new(a.seed, 0).rng();
    let est = mc_influence(&g, &a.seeds, a.model, a.runs, &mut rng)?;
    let rec = EvalRecord {
        schema_version: SCHEMA_VERSION,
        command: "eval",
        model: a.model,
        graph: a.graph.graph.display().to_string(),
        n: g.n(),
        m: g.m(),
        seeds: a.seeds,
        runs: a.runs,
        rng_seed: a.seed,
        mean: est.mean,
        stderr: est.stderr,
    };
    let mut out = open_output(a.output.as_deref())?;
    write_json(&mut out, &rec)?;
    out.flush()?;
    Ok(())
}

fn exact(a: ExactArgs) -> anyhow::Result<()> {
    let mode = match (a.mode, &a.seeds, a.k) {
        (Some(m), _, _) => m,
        (None, Some(_), None) => ExactMode::Influence,
        (None, None, Some(_)) => ExactMode::Opt,
        _ => return Err(usage("give --seeds (influence) or --k (opt)")),
    };
    let g = load_graph(&a.graph.graph, a.graph.undirected, a.graph.auto_weight)?;
    let (seeds, influence, outcomes, k) = match mode {
        ExactMode::Influence => {
            let Some(seeds) = a.seeds else {
                return Err(usage("exact influence needs --seeds"));
            };
            check_seeds(&seeds, g.n())?;
            let r = exact_influence(&g, &seeds, a.model)?;
            let k = seeds.len();
            (seeds, r.influence, r.outcomes_enumerated, k)
        }
        ExactMode::Opt => {
            let Some(k) = a.k else {
                return Err(usage("exact opt needs --k"));
            };
            let k = check_k(k, g.n())?;
            let r = exact_opt(&g, k, a.model)?;
            (r.seeds, r.opt, r.outcomes_enumerated, k)
        }
    };
    let rec = ExactRecord {
        schema_version: SCHEMA_VERSION,
        command: "exact",
        mode: match mode {
            ExactMode::Influence => "influence",
            ExactMode::Opt => "opt",
        },
        model: a.model,
        graph: a.graph.graph.display().to_string(),
        n: g.n(),
        m: g.m(),
        k,
        seeds,
        influence,
        outcomes_enumerated: outcomes,
    };
    let mut out = open_output(a.output.as_deref())?;
    write_json(&mut out, &rec)?;
    out.flush()?;
    Ok(())
}

/// Graph used by the guarantees suite when none is given: 8-node G(n, 0.3),
/// auto-weighted.
const GUARANTEE_GRAPH_SEED: u64 = 1;

fn bench(a: BenchArgs) -> anyhow::Result<()> {
    if a.suite == Some(Suite::Guarantees) {
        return bench_guarantees(a);
    }
    let Some(path) = a.graph.clone() else {
        return Err(usage("bench needs --graph unless --suite is given"));
    };
    let g = load_graph(&path, a.undirected, a.auto_weight)?;
    let info = graph_info(&path, &g);
    let eps = a.eps.unwrap_or(0.1);
    let delta = a.delta.unwrap_or(Delta::Auto).resolve(g.n());
    let ks = if a.ks.is_empty() {
        vec![10]
    } else {
        a.ks.clone()
    };
    let mut records = Vec::new();
    for &algo in &a.algos {
        for &k in &ks {
            let k = check_k(k, g.n())?;
            for r in 0..a.repeats {
                let seed = a.seed.wrapping_add(r);
                let config = StopStareConfig::new(&g, k, eps, a.model)
                    .with_delta(delta)
                    .with_seed(seed)
                    .with_threads(a.exec.threads as usize);
                let result = run_plain(&g, &config, algo)?;
                log::info!(
                    "{algo} k = {k} seed = {seed}: {} RR sets",
                    result.rr_count_total()
                );
                let ctx = RunContext {
                    command: "bench",
                    algo,
                    model: a.model,
                    graph: &info,
                    k,
                    eps,
                    delta,
                    eps_split: used_split(algo, None, eps)?,
                    threads: a.exec.threads as usize,
                    weights: None,
                    timing: !a.exec.no_timing,
                };
                records.push(RunRecord::new(&ctx, &result));
            }
        }
    }
    write_runs(&a.exec, &records)
}

fn bench_guarantees(a: BenchArgs) -> anyhow::Result<()> {
    if a.exec.csv {
        return Err(usage("the guarantees suite writes JSON only"));
    }
    let (g, path) = match &a.graph {
        Some(p) => (
            load_graph(p, a.undirected, a.auto_weight)?,
            p.display().to_string(),
        ),
        None => (
            generate(&SyntheticSpec::erdos_renyi(8, 0.3, GUARANTEE_GRAPH_SEED))?,
            format!("synthetic:erdos_renyi(8,0.3,seed={GUARANTEE_GRAPH_SEED})"),
        ),
    };
    let eps = a.eps.unwrap_or(0.3);
    let delta = a.delta.unwrap_or(Delta::Value(0.2)).resolve(g.n());
    let ks = if a.ks.is_empty() {
        vec![2]
    } else {
        a.ks.clone()
    };
    let mut out = open_output(a.exec.output.as_deref())?;
    let mut all_hold = true;
    for &algo in &a.algos {
        for &k in &ks {
            let k = check_k(k, g.n())?;
            let report =
                guarantee_trial(&g, k, eps, delta, algo, a.model, a.trials as usize, a.seed)?;
            all_hold &= report.holds();
            let rec = GuaranteeRecord {
                schema_version: SCHEMA_VERSION,
                command: "bench",
                suite: "guarantees",
                graph: path.clone(),
                n: g.n(),
                m: g.m(),
                base_seed: a.seed,
                holds: report.holds(),
                report,
            };
            write_json(&mut out, &rec)?;
        }
    }
    out.flush()?;
    if !all_hold {
        bail!("pass fraction below the binomial lower bound");
    }
    Ok(())
}
