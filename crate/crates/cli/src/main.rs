use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use mmap_core::harness::{self, BenchmarkSpec};
use mmap_core::inference::DEFAULT_ORACLE_CAP;
use mmap_core::synth::{pairwise_model, PairwiseSpec, Topology};
use mmap_core::{uai, Evidence, ExplanationTrace, GraphicalModel, HeuristicConfig, Oracle, VariableId};

#[derive(Parser)]
#[command(name = "mmap", version, about = "Marginal MAP by sequential marginal inference")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Explain a set of variables with the greedy heuristic.
    Solve {
        #[command(flatten)]
        query: Query,
        /// Stop once the least entropic marginal reaches this entropy.
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Solve the same query exactly by enumeration.
    Oracle {
        #[command(flatten)]
        query: Query,
        /// Largest number of joint states of the explained variables.
        #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
        cap: u64,
    },
    /// Run the threshold sweep against the exact solver.
    Bench(BenchArgs),
    /// Write a random pairwise model in UAI format.
    Gen(GenArgs),
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("targets").required(true).args(["explain", "all_unobserved"]))]
struct Query {
    /// Model file in UAI format.
    #[arg(long)]
    model: PathBuf,
    /// Evidence file: a count followed by `variable state` pairs.
    #[arg(long)]
    evidence: Option<PathBuf>,
    /// Comma-separated variable indices to explain.
    #[arg(long, value_delimiter = ',')]
    explain: Vec<usize>,
    /// Explain every unobserved variable with at least two states.
    #[arg(long)]
    all_unobserved: bool,
}

impl Query {
    fn load(&self) -> Result<(GraphicalModel, Evidence, BTreeSet<VariableId>)> {
        let model = uai::read_model(&self.model)?;
        let evidence = match &self.evidence {
            Some(path) => uai::read_evidence(path, &model)?,
            None => Evidence::new(),
        };
        let explain: BTreeSet<VariableId> = if self.all_unobserved {
            model
                .variables()
                .filter(|&v| !evidence.contains(v) && model.cardinality(v) >= 2)
                .collect()
        } else {
            self.explain.iter().copied().map(VariableId).collect()
        };
        Ok((model, evidence, explain))
    }
}

#[derive(Args)]
struct BenchArgs {
    /// TOML file with any of: model_path, k, q, epsilon_grid, seed, oracle_cap.
    /// Flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Observed variables per instance.
    #[arg(long)]
    k: Option<usize>,
    /// Instances per threshold.
    #[arg(long)]
    q: Option<usize>,
    /// Comma-separated, strictly increasing thresholds.
    #[arg(long, value_delimiter = ',', conflicts_with = "grid_points")]
    epsilons: Option<Vec<f64>>,
    /// Evenly spaced thresholds from 0 to 1.
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    oracle_cap: Option<u64>,
    /// Directory for the data files.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Prefix of the output files; defaults to the model file stem.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BenchConfig {
    model_path: Option<PathBuf>,
    k: Option<usize>,
    q: Option<usize>,
    epsilon_grid: Option<Vec<f64>>,
    seed: Option<u64>,
    oracle_cap: Option<u64>,
}

const DEFAULT_GRID_POINTS: usize = 21;

impl BenchArgs {
    fn spec(&self) -> Result<BenchmarkSpec> {
        let config = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                toml::from_str::<BenchConfig>(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => BenchConfig::default(),
        };
        let epsilon_grid = match (&self.epsilons, self.grid_points) {
            (Some(grid), _) => grid.clone(),
            (None, Some(points)) => harness::uniform_grid(points),
            (None, None) => config
                .epsilon_grid
                .unwrap_or_else(|| harness::uniform_grid(DEFAULT_GRID_POINTS)),
        };
        let Some(model_path) = self.model.clone().or(config.model_path) else {
            bail!("no model given (use --model or model_path in the config file)");
        };
        Ok(BenchmarkSpec {
            model_path,
            k: self.k.or(config.k).unwrap_or(5),
            q: self.q.or(config.q).unwrap_or(100),
            epsilon_grid,
            seed: self.seed.or(config.seed).unwrap_or(0),
            oracle_cap: self.oracle_cap.or(config.oracle_cap).unwrap_or(DEFAULT_ORACLE_CAP),
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TopologyArg {
    Grid,
    Chain,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum, default_value_t = TopologyArg::Grid)]
    topology: TopologyArg,
    #[arg(long, default_value_t = 3)]
    rows: usize,
    #[arg(long, default_value_t = 3)]
    cols: usize,
    #[arg(long, default_value_t = 2)]
    cardinality: usize,
    /// Log-potentials are drawn from [-coupling, coupling].
    #[arg(long, default_value_t = 1.0)]
    coupling: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn format_assignment(model_states: impl IntoIterator<Item = (VariableId, usize)>) -> String {
    let parts: Vec<String> = model_states.into_iter().map(|(v, s)| format!("{v}={s}")).collect();
    if parts.is_empty() {
        "(none)".into()
    } else {
        parts.join(" ")
    }
}

fn describe(path: &Path, model: &GraphicalModel) -> String {
    format!(
        "# model {} (n={}, f={}, omega={})",
        path.display(),
        model.n(),
        model.f(),
        model.max_cardinality()
    )
}

fn print_trace(trace: &ExplanationTrace) {
    println!("step\tvariable\tstate\tentropy\tmarginal");
    for (i, s) in trace.steps.iter().enumerate() {
        let probs: Vec<String> = s.marginal.probs().iter().map(|p| format!("{p:.6}")).collect();
        println!(
            "{}\t{}\t{}\t{:.6}\t[{}]",
            i + 1,
            s.variable,
            s.chosen_state,
            s.entropy,
            probs.join(", ")
        );
    }
    if let Some(h) = trace.break_entropy {
        println!("stopped: smallest remaining entropy {h:.6}");
    }
    println!("explained: {}", format_assignment(trace.explained.iter().map(|(&v, &s)| (v, s))));
    if !trace.unexplained.is_empty() {
        let open: Vec<String> = trace.unexplained.iter().map(|v| v.to_string()).collect();
        println!("unexplained: {}", open.join(" "));
    }
    println!("p_tilde: {}", trace.p_tilde);
    println!("confidence: {:.6}", trace.confidence);
    println!("mar_calls: {}", trace.mar_calls);
}

fn solve(query: &Query, epsilon: Option<f64>) -> Result<()> {
    let (model, evidence, explain) = query.load()?;
    let config = match epsilon {
        Some(e) => HeuristicConfig::with_epsilon(e)?,
        None => HeuristicConfig::exhaustive(),
    };
    let trace = mmap_core::heuristic::run(&model, &explain, &evidence, config)?;
    println!("{}", describe(&query.model, &model));
    print_trace(&trace);
    Ok(())
}

fn oracle(query: &Query, cap: u64) -> Result<()> {
    let (model, evidence, explain) = query.load()?;
    let sol = Oracle::new(cap).mmap(&model, &evidence, &explain)?;
    println!("{}", describe(&query.model, &model));
    println!("assignment: {}", format_assignment(sol.assignment.into_iter()));
    println!("p_star: {}", sol.probability);
    Ok(())
}

fn bench(args: &BenchArgs) -> Result<()> {
    let spec = args.spec()?;
    let report = harness::run_benchmark(&spec)?;
    let name = match &args.name {
        Some(n) => n.clone(),
        None => spec
            .model_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "bench".into()),
    };
    fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    let match_path = args.out_dir.join(format!("{name}_match.dat"));
    let hamming_path = args.out_dir.join(format!("{name}_hamming.dat"));
    let csv_path = args.out_dir.join(format!("{name}_instances.csv"));
    harness::emit_dat(&report.points, &match_path, &hamming_path)?;
    harness::write_instances_csv(&report.instances, &csv_path)?;

    println!(
        "# model {} seed {} k {} q {}",
        spec.model_path.display(),
        spec.seed,
        spec.k,
        spec.q
    );
    println!("epsilon\texact_match\thamming\texplained_fraction\tinstances");
    for p in &report.points {
        println!(
            "{}\t{:.4}\t{:.4}\t{:.4}\t{}",
            p.epsilon, p.exact_match_rate, p.mean_hamming, p.mean_explained_fraction, p.instances
        );
    }
    for s in &report.skipped {
        let at = s.epsilon.map(|e| format!(" at epsilon {e}")).unwrap_or_default();
        eprintln!("skipped instance {}{at}: {}", s.seed_index, s.reason);
    }
    let (t_mar, t_mmap) = report
        .instances
        .iter()
        .fold((0.0, 0.0), |(a, b), r| (a + r.t_mar, b + r.t_mmap));
    eprintln!("total T_MAR {t_mar:.3}s, T_MMAP {t_mmap:.3}s");
    eprintln!(
        "wrote {}, {}, {}",
        match_path.display(),
        hamming_path.display(),
        csv_path.display()
    );
    Ok(())
}

fn gen(args: &GenArgs) -> Result<()> {
    if args.rows == 0 || args.cols == 0 || args.cardinality == 0 {
        bail!("rows, cols and cardinality must be positive");
    }
    if !(args.coupling.is_finite() && args.coupling >= 0.0) {
        bail!("coupling must be a non-negative number");
    }
    let spec = PairwiseSpec {
        topology: match args.topology {
            TopologyArg::Grid => Topology::Grid,
            TopologyArg::Chain => Topology::Chain,
        },
        rows: args.rows,
        cols: args.cols,
        cardinality: args.cardinality,
        coupling: args.coupling,
        seed: args.seed,
    };
    let text = uai::write_uai(&pairwise_model(&spec));
    match &args.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Solve { query, epsilon } => solve(query, *epsilon),
        Command::Oracle { query, cap } => oracle(query, *cap),
        Command::Bench(args) => bench(args),
        Command::Gen(args) => gen(args),
    }
}
