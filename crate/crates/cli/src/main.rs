//! `rlap` command-line front end.
//!
//! Exit codes: 0 success, 2 usage or input errors, 3 verification failure,
//! 4 I/O failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rlap::analysis::{monte_carlo_unbiasedness, trend_csv, trend_scan};
use rlap::augment::{augment_stream, AugmentorKind, AugmentorSpec};
use rlap::bench::{bench_csv, bench_csv_detailed, bench_suite, SuiteConfig, TrackingAllocator};
use rlap::diffusion::{diffuse, rlap_then_diffuse, sparsify, KeepSet, PipelineMode};
use rlap::generators;
use rlap::io::{format_edge_list, read_graph};
use rlap::rlap::{elimination_order, rlap_with_order};
use rlap::rng::stream_rng;
use rlap::{DiffusionKind, DiffusionSpec, Error, RlapConfig, Transition, Variant, WeightedGraph};

#[global_allocator]
static ALLOC: TrackingAllocator = TrackingAllocator;

#[derive(Parser)]
#[command(name = "rlap", version, about = "Randomized Schur complement graph augmentation")]
struct Cli {
    /// Worker threads for trial-parallel commands.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write one or two augmented views of a graph as edge-list TSV.
    Augment(AugmentArgs),
    /// Monte-Carlo unbiasedness and Laplacian-structure check.
    Verify(VerifyArgs),
    /// sigma_max and edge count along elimination trajectories (CSV).
    Trend(TrendArgs),
    /// Diffuse and sparsify a graph (TSV).
    Diffuse(DiffuseArgs),
    /// Run a benchmark suite (CSV).
    Bench(BenchArgs),
}

#[derive(Args)]
struct SeedArg {
    /// Falls back to RLAP_SEED, then to the augmentor spec's seed, then 0.
    #[arg(long, env = "RLAP_SEED")]
    seed: Option<u64>,
}

#[derive(Args)]
struct AugmentArgs {
    /// Edge-list TSV or Matrix Market file.
    #[arg(long)]
    input: PathBuf,
    /// Spec file (.toml / .json), inline JSON, or `Kind[:key=value,...]`.
    #[arg(long)]
    augmentor: String,
    #[command(flatten)]
    seed: SeedArg,
    /// Output TSV. With two views, `.view1` / `.view2` go before the extension.
    #[arg(long)]
    output: PathBuf,
    /// 1, or 2 for a pair of views drawn from streams 0 and 1.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    views: u8,
    /// Perturbation ratio of the first view (overrides the spec).
    #[arg(long)]
    gamma1: Option<f64>,
    /// Perturbation ratio of the second view.
    #[arg(long)]
    gamma2: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Graph file, or a built-in family: pN, cN, kN, starN.
    #[arg(long)]
    graph: String,
    /// Comma-separated elimination order. Without it the order of
    /// `--variant` at `--gamma` is used.
    #[arg(long, value_delimiter = ',')]
    order: Option<Vec<usize>>,
    /// Supplies the neighbor ordering, and the order itself without `--order`.
    #[arg(long, default_value = "rLap-rand-asc")]
    variant: String,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long, default_value_t = 20_000)]
    trials: usize,
    /// Largest allowed deviation, in standard errors.
    #[arg(long, default_value_t = 4.0)]
    threshold: f64,
    #[command(flatten)]
    seed: SeedArg,
    /// Per-entry CSV report.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct TrendArgs {
    /// Edge-list TSV or Matrix Market file.
    #[arg(long)]
    input: PathBuf,
    /// `all` or comma-separated labels such as rLap-deg-asc.
    #[arg(long, default_value = "all")]
    variants: String,
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2,0.3,0.4,0.5")]
    gammas: Vec<f64>,
    #[command(flatten)]
    seed: SeedArg,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Ppr,
    Heat,
    Markov,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransitionArg {
    Rw,
    Sym,
}

#[derive(Args)]
struct DiffuseArgs {
    /// Edge-list TSV or Matrix Market file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "ppr")]
    kind: KindArg,
    #[arg(long, default_value_t = 0.2)]
    alpha: f64,
    /// Heat diffusion time.
    #[arg(long, default_value_t = 5.0)]
    t: f64,
    /// Markov diffusion steps.
    #[arg(long = "steps", default_value_t = 10)]
    k: usize,
    /// Sparsification threshold.
    #[arg(long, default_value_t = 1e-4)]
    eps: f64,
    #[arg(long, value_enum, default_value = "rw")]
    transition: TransitionArg,
    /// Use the series route above the dense cap.
    #[arg(long)]
    iterative: bool,
    /// Eliminate this fraction with rLap first and diffuse the reduced
    /// graph (PPR only).
    #[arg(long)]
    rlap_gamma: Option<f64>,
    #[arg(long, default_value = "rLap-rand-asc")]
    variant: String,
    #[command(flatten)]
    seed: SeedArg,
    /// Output TSV.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Suite file (.toml or .json).
    #[arg(long)]
    config: PathBuf,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Add spread, trial count, seed and build profile columns.
    #[arg(long)]
    detailed: bool,
}

enum Failure {
    Usage(String),
    Verification(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io { .. } => Failure::Io(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

type CliResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("rlap: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Augment(a) => cmd_augment(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Trend(a) => cmd_trend(a),
        Command::Diffuse(a) => cmd_diffuse(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("rlap: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Verification(m)) => {
            eprintln!("rlap: verification failed: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Io(m)) => {
            eprintln!("rlap: {m}");
            ExitCode::from(4)
        }
    }
}

/// A missing input is a usage error; failures while reading an existing file
/// are I/O errors.
fn load_input(path: &Path) -> Result<WeightedGraph, Failure> {
    if !path.is_file() {
        return Err(Failure::Usage(format!("input file {} does not exist", path.display())));
    }
    Ok(read_graph(path)?)
}

fn write_output(path: &Path, text: &str) -> CliResult {
    fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn emit(path: Option<&Path>, text: &str) -> CliResult {
    match path {
        Some(p) => write_output(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// `Kind:key=value,...` to the TOML form of a spec.
fn compact_to_toml(s: &str) -> String {
    let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
    let mut out = format!("kind = \"{}\"\n", kind.trim());
    for pair in rest.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, v) = pair.split_once('=').unwrap_or((pair, ""));
        let v = v.trim();
        let literal = v.parse::<f64>().is_ok() || v == "true" || v == "false";
        if literal {
            out.push_str(&format!("{} = {v}\n", k.trim()));
        } else {
            out.push_str(&format!("{} = \"{v}\"\n", k.trim()));
        }
    }
    out
}

fn parse_augmentor(arg: &str) -> Result<AugmentorSpec, Failure> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("{arg}: {e}")))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        return Ok(if is_json { AugmentorSpec::from_json(&text)? } else { AugmentorSpec::from_toml(&text)? });
    }
    if arg.trim_start().starts_with('{') {
        return Ok(AugmentorSpec::from_json(arg)?);
    }
    Ok(AugmentorSpec::from_toml(&compact_to_toml(arg))?)
}

/// `out.tsv` -> `out.view1.tsv`.
fn view_path(base: &Path, view: u8) -> PathBuf {
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}.view{view}.{}", ext.to_string_lossy()),
        None => format!("{stem}.view{view}"),
    };
    base.with_file_name(name)
}

fn checked_tsv(g: &WeightedGraph) -> Result<String, Failure> {
    g.check_invariants().map_err(Failure::Verification)?;
    Ok(format_edge_list(g))
}

fn cmd_augment(a: AugmentArgs) -> CliResult {
    let mut spec = parse_augmentor(&a.augmentor)?;
    if let Some(seed) = a.seed.seed {
        spec.seed = seed;
    }
    if matches!(spec.kind, AugmentorKind::FeatureMasking { .. }) {
        return Err(Failure::Usage("FeatureMasking acts on features, not on the graph".into()));
    }
    let g = load_input(&a.input)?;
    if a.views == 1 {
        let spec = match a.gamma1 {
            Some(g1) => spec.with_gamma(g1),
            None => spec,
        };
        return write_output(&a.output, &checked_tsv(&augment_stream(&g, &spec, 0)?)?);
    }
    let diffusion = matches!(spec.kind, AugmentorKind::PprDiffusion { .. } | AugmentorKind::MarkovDiffusion { .. });
    let s1 = a.gamma1.map_or_else(|| spec.clone(), |x| spec.with_gamma(x));
    let s2 = a.gamma2.map_or_else(|| spec.clone(), |x| spec.with_gamma(x));
    let first = augment_stream(&g, &s1, 0)?;
    // the second view of a diffusion is the input graph itself
    let second = if diffusion { g.clone() } else { augment_stream(&g, &s2, 1)? };
    write_output(&view_path(&a.output, 1), &checked_tsv(&first)?)?;
    write_output(&view_path(&a.output, 2), &checked_tsv(&second)?)
}

fn builtin_graph(name: &str) -> Option<WeightedGraph> {
    let num = |prefix: &str| name.strip_prefix(prefix).and_then(|s| s.parse::<usize>().ok());
    if let Some(n) = num("star") {
        return Some(generators::star(n));
    }
    if let Some(n) = num("p") {
        return Some(generators::path(n));
    }
    if let Some(n) = num("c").filter(|&n| n >= 3) {
        return Some(generators::cycle(n));
    }
    num("k").map(generators::complete)
}

fn cmd_verify(a: VerifyArgs) -> CliResult {
    let g = match builtin_graph(&a.graph) {
        Some(g) => g,
        None => load_input(Path::new(&a.graph))?,
    };
    let variant: Variant = a.variant.parse()?;
    let seed = a.seed.seed.unwrap_or(0);
    let order = match a.order {
        Some(o) => o,
        None => elimination_order(&g, &RlapConfig::new(a.gamma, variant, seed))?,
    };
    let report = monte_carlo_unbiasedness(&g, &order, variant.o_n, a.trials, seed)?;
    if let Some(path) = &a.report {
        write_output(path, &report.to_csv())?;
    }

    let mut structure_failures = 0usize;
    let structure_trials = 100;
    for t in 0..structure_trials {
        let view = rlap_with_order(&g, &order, variant.o_n, stream_rng(seed ^ 0x9E37_79B9, t))?;
        if view.laplacian.check_structure().is_err() || view.laplacian.check_psd().is_err() {
            structure_failures += 1;
        }
    }
    println!(
        "order={:?} o_n={} trials={} max_abs_dev={:e} max_dev_in_stderr={:.4} structure_failures={}/{}",
        order,
        variant.o_n.label(),
        a.trials,
        report.max_abs_dev,
        report.max_dev_in_stderr,
        structure_failures,
        structure_trials
    );
    if !report.within(a.threshold) {
        return Err(Failure::Verification(format!(
            "deviation {:.3} standard errors exceeds {}",
            report.max_dev_in_stderr, a.threshold
        )));
    }
    if structure_failures > 0 {
        return Err(Failure::Verification(format!("{structure_failures} outputs failed the Laplacian checks")));
    }
    Ok(())
}

fn parse_variants(s: &str) -> Result<Vec<Variant>, Failure> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(Variant::ALL.to_vec());
    }
    s.split(',').map(|v| v.trim().parse::<Variant>().map_err(Failure::from)).collect()
}

fn cmd_trend(a: TrendArgs) -> CliResult {
    let g = load_input(&a.input)?;
    let variants = parse_variants(&a.variants)?;
    let records = trend_scan(&g, &variants, &a.gammas, a.seed.seed.unwrap_or(0))?;
    emit(a.output.as_deref(), &trend_csv(&records))
}

fn cmd_diffuse(a: DiffuseArgs) -> CliResult {
    let g = load_input(&a.input)?;
    let spec = DiffusionSpec {
        kind: match a.kind {
            KindArg::Ppr => DiffusionKind::Ppr,
            KindArg::Heat => DiffusionKind::Heat,
            KindArg::Markov => DiffusionKind::Markov,
        },
        alpha: a.alpha,
        t: a.t,
        k: a.k,
        eps: a.eps,
        transition: match a.transition {
            TransitionArg::Rw => Transition::RowStochasticRW,
            TransitionArg::Sym => Transition::Symmetric,
        },
        iterative: a.iterative,
        ..DiffusionSpec::default()
    };
    let out = match a.rlap_gamma {
        None => sparsify(&diffuse(&g, &spec)?, spec.eps)?,
        Some(gamma) => {
            let seed = a.seed.seed.unwrap_or(0);
            let config = RlapConfig::new(gamma, a.variant.parse()?, seed);
            let reduced =
                rlap_then_diffuse(&g, &KeepSet::FromConfig, &spec, &config, PipelineMode::Sddm, stream_rng(seed, 0))?;
            let small = sparsify(&reduced.matrix, spec.eps)?;
            let mut full = WeightedGraph::new(g.node_count());
            for (u, v, w) in small.edges() {
                full.add_edge(reduced.keep[u], reduced.keep[v], w)?;
            }
            full
        }
    };
    write_output(&a.output, &checked_tsv(&out)?)
}

fn cmd_bench(a: BenchArgs) -> CliResult {
    if !a.config.is_file() {
        return Err(Failure::Usage(format!("config file {} does not exist", a.config.display())));
    }
    let text = fs::read_to_string(&a.config).map_err(|e| Failure::Io(format!("{}: {e}", a.config.display())))?;
    let is_json = a.config.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let config = if is_json { SuiteConfig::from_json(&text)? } else { SuiteConfig::from_toml(&text)? };
    let base = a.config.parent().unwrap_or(Path::new("."));
    let records = bench_suite(&config, base)?;
    let csv = if a.detailed { bench_csv_detailed(&records) } else { bench_csv(&records) };
    emit(a.output.as_deref(), &csv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compact_spec_syntax() {
        assert_eq!(compact_to_toml("rLap:gamma=0.5,o_v=deg"), "kind = \"rLap\"\ngamma = 0.5\no_v = \"deg\"\n");
        assert_eq!(compact_to_toml("EdgeDropping"), "kind = \"EdgeDropping\"\n");
    }

    #[test]
    fn view_paths() {
        assert_eq!(view_path(Path::new("/tmp/out.tsv"), 2), PathBuf::from("/tmp/out.view2.tsv"));
        assert_eq!(view_path(Path::new("out"), 1), PathBuf::from("out.view1"));
    }

    #[test]
    fn builtins() {
        assert_eq!(builtin_graph("p3").unwrap().edge_count(), 2);
        assert_eq!(builtin_graph("star4").unwrap().edge_count(), 4);
        assert_eq!(builtin_graph("k4").unwrap().edge_count(), 6);
        assert!(builtin_graph("c2").is_none());
        assert!(builtin_graph("graph.tsv").is_none());
    }
}
