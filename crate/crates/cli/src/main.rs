use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use ermatch_core::bounds::{curves_csv, threshold_report, tradeoff_curves, uniform_s_grid};
use ermatch_core::experiment::{emit, run_trials, DistributionSpec, Format, SuccessConvention, SweepConfig};
use ermatch_core::matching::{map_estimate, DEFAULT_MATCH_LIMIT};
use ermatch_core::model::{apply_permutation, sample_pair_with, Graph, JointEdgeDistribution, Permutation};
use ermatch_core::rng::stream;
use ermatch_core::structure::{automorphisms, blocking_pairs, factorial_saturating, intersect, DEFAULT_AUTOMORPHISM_LIMIT};
use ermatch_core::verify::verify_suite;
use ermatch_core::Error;

const SEED_ENV: &str = "ERMATCH_SEED";

/// Exact matching of correlated Erdős–Rényi graph pairs.
#[derive(Parser)]
#[command(name = "ermatch", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a correlated pair and write both graphs in text form.
    Sample(SampleArgs),
    /// Exact MAP matching of two graph files.
    Match(MatchArgs),
    /// Monte Carlo sweep of exact MAP recovery.
    Sweep(SweepArgs),
    /// Threshold report for one law at one n, as JSON.
    Bounds(BoundsArgs),
    /// Correlation/density trade-off curves as CSV.
    Curves(CurvesArgs),
    /// Automorphisms of the intersection and blocking pairs of two graphs.
    Structure(StructureArgs),
    /// Run the identity and property suite; exits 1 on any failure.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    n: usize,
    /// Edge law: JSON text or a path to a JSON file.
    #[arg(long)]
    dist: String,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_a: PathBuf,
    #[arg(long)]
    out_b: PathBuf,
    /// Relabel the first graph by a hidden uniform permutation and print it.
    #[arg(long)]
    shuffle: bool,
}

#[derive(Args)]
struct MatchArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long)]
    dist: String,
    #[arg(long, default_value_t = DEFAULT_MATCH_LIMIT)]
    limit: usize,
    /// Also list every optimal permutation.
    #[arg(long)]
    ties: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Convention {
    StrictTie,
    UniformTie,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep config JSON; flags below override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    ns: Option<Vec<usize>>,
    /// Replaces the config's distributions with this single law.
    #[arg(long)]
    dist: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, env = SEED_ENV)]
    base_seed: Option<u64>,
    #[arg(long)]
    slack: Option<f64>,
    #[arg(long)]
    matcher_limit: Option<usize>,
    #[arg(long, value_enum)]
    success: Option<Convention>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    compute_automorphisms: bool,
    #[arg(long, value_enum, default_value = "csv")]
    format: OutFormat,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    dist: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0.0)]
    slack: f64,
}

#[derive(Args)]
struct CurvesArgs {
    /// JSON with either `s_grid` (list) or `steps` (uniform grid on (0, 1]).
    #[arg(long, conflicts_with_all = ["s", "steps"])]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    s: Option<Vec<f64>>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StructureArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long, default_value_t = DEFAULT_AUTOMORPHISM_LIMIT)]
    limit: usize,
}

#[derive(Args)]
struct VerifyArgs {
    /// Print the report as JSON instead of a table.
    #[arg(long)]
    json: bool,
}

/// Failure with its exit status.
struct Failure {
    code: u8,
    message: String,
}

fn config_error(message: impl std::fmt::Display) -> Failure {
    Failure {
        code: 2,
        message: message.to_string(),
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        config_error(e)
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| config_error(format!("{}: {e}", path.display())))
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| config_error(format!("{}: {e}", path.display()))),
        None => {
            stdout(text);
            Ok(())
        }
    }
}

/// Inline JSON or a file path; either a plain `{p11,p10,p01,p00}` object or
/// a tagged `joint` / `subsample` / `channel` form.
fn load_distribution(arg: &str) -> Result<JointEdgeDistribution, Failure> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        read_text(Path::new(arg))?
    };
    let plain = match JointEdgeDistribution::from_json(&text) {
        Ok(p) => return Ok(p),
        Err(e) => e,
    };
    let spec: DistributionSpec =
        serde_json::from_str(&text).map_err(|_| config_error(format!("distribution: {plain}")))?;
    Ok(spec.resolve()?)
}

fn load_graph(path: &Path) -> Result<Graph, Failure> {
    Graph::from_text(&read_text(path)?).map_err(|e| config_error(format!("{}: {e}", path.display())))
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn stdout(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn print_json(value: &serde_json::Value) {
    stdout(&format!("{}\n", serde_json::to_string_pretty(value).expect("json value serializes")));
}

fn sample(args: SampleArgs) -> Result<(), Failure> {
    if args.n == 0 {
        return Err(config_error("n must be at least 1"));
    }
    let p = load_distribution(&args.dist)?;
    let mut rng = stream(args.seed, 0, 0);
    let (ga, gb) = sample_pair_with(args.n, &p, &mut rng);
    let mut report = json!({ "n": args.n, "seed": args.seed });
    let first = if args.shuffle {
        let truth = Permutation::random(args.n, &mut rng);
        report["permutation"] = json!(truth.image());
        apply_permutation(&ga, &truth)?
    } else {
        ga
    };
    write_or_print(Some(&args.out_a), &first.to_text())?;
    write_or_print(Some(&args.out_b), &gb.to_text())?;
    print_json(&report);
    Ok(())
}

fn match_graphs(args: MatchArgs) -> Result<(), Failure> {
    let gc = load_graph(&args.a)?;
    let gb = load_graph(&args.b)?;
    let p = load_distribution(&args.dist)?;
    let res = map_estimate(&gc, &gb, &p, args.limit)?;
    let identity = Permutation::identity(gc.n());
    let mut report = json!({
        "n": gc.n(),
        "optimum_value": res.optimum_value,
        "objective_sense": res.objective_sense,
        "tie_count": res.tie_count(),
        "degenerate": res.is_degenerate(),
        "identity_unique_optimum": res.strict_success(&identity),
        "identity_among_optima": res.minimizers.contains(&identity),
    });
    if args.ties {
        report["ties"] = json!(res.minimizers.iter().map(|p| p.image().to_vec()).collect::<Vec<_>>());
    }
    print_json(&report);
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<(), Failure> {
    let mut cfg = match &args.config {
        Some(path) => SweepConfig::from_json(&read_text(path)?)?,
        None => SweepConfig::new(Vec::new(), Vec::new(), 100, 0),
    };
    if let Some(ns) = args.ns {
        cfg.ns = ns;
    }
    if let Some(dist) = &args.dist {
        cfg.distributions = vec![DistributionSpec::Joint(load_distribution(dist)?)];
    }
    if args.config.is_none() && (cfg.ns.is_empty() || cfg.distributions.is_empty()) {
        return Err(config_error("sweep needs --config, or both --ns and --dist"));
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(seed) = args.base_seed {
        cfg.base_seed = seed;
    }
    if let Some(s) = args.slack {
        cfg.slack = s;
    }
    if let Some(l) = args.matcher_limit {
        cfg.matcher_limit = l;
    }
    if let Some(c) = args.success {
        cfg.success = match c {
            Convention::StrictTie => SuccessConvention::StrictTie,
            Convention::UniformTie => SuccessConvention::UniformTie,
        };
    }
    if args.workers.is_some() {
        cfg.workers = args.workers;
    }
    cfg.compute_automorphisms |= args.compute_automorphisms;
    let result = run_trials(&cfg)?;
    let format = match args.format {
        OutFormat::Csv => Format::Csv,
        OutFormat::Json => Format::Json,
    };
    let mut text = emit(&result, format);
    if !text.ends_with('\n') {
        text.push('\n');
    }
    write_or_print(args.out.as_deref(), &text)
}

fn bounds(args: BoundsArgs) -> Result<(), Failure> {
    let p = load_distribution(&args.dist)?;
    let report = threshold_report(&p, args.n, args.slack)?;
    print_json(&serde_json::to_value(&report).expect("report serializes"));
    Ok(())
}

fn curves(args: CurvesArgs) -> Result<(), Failure> {
    let grid = if let Some(path) = &args.config {
        let value: serde_json::Value = serde_json::from_str(&read_text(path)?)
            .map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        if let Some(list) = value.get("s_grid") {
            serde_json::from_value::<Vec<f64>>(list.clone())
                .map_err(|e| config_error(format!("s_grid: {e}")))?
        } else if let Some(steps) = value.get("steps").and_then(|v| v.as_u64()) {
            uniform_s_grid(steps as usize)
        } else {
            return Err(config_error("curves config needs `s_grid` or `steps`"));
        }
    } else if let Some(s) = args.s {
        s
    } else {
        uniform_s_grid(args.steps.unwrap_or(100))
    };
    let rows = tradeoff_curves(&grid)?;
    write_or_print(args.out.as_deref(), &curves_csv(&rows))
}

fn structure(args: StructureArgs) -> Result<(), Failure> {
    let ga = load_graph(&args.a)?;
    let gb = load_graph(&args.b)?;
    let both = intersect(&ga, &gb)?;
    let blocking = blocking_pairs(&ga, &gb)?.len();
    let isolated = both.isolated_vertices();
    let (count, note) = match automorphisms(&both, args.limit) {
        Ok(r) => (json!(r.count.to_string()), None),
        Err(e @ Error::AutomorphismCapacity { .. }) => (serde_json::Value::Null, Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let mut report = json!({
        "n": ga.n(),
        "intersection_edges": both.edge_count(),
        "automorphisms": count,
        "isolated": isolated,
        "factorial_lower_bound": factorial_saturating(isolated).to_string(),
        "blocking_pairs": blocking,
    });
    if let Some(note) = note {
        report["note"] = json!(note);
    }
    print_json(&report);
    Ok(())
}

fn verify(args: VerifyArgs) -> Result<(), Failure> {
    let report = verify_suite();
    if args.json {
        print_json(&serde_json::to_value(&report).expect("report serializes"));
    } else {
        stdout(&report.to_table());
    }
    if report.all_passed() {
        Ok(())
    } else {
        Err(Failure {
            code: 1,
            message: format!(
                "{} of {} checks failed",
                report.rows.iter().filter(|r| !r.passed).count(),
                report.rows.len()
            ),
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Sample(a) => sample(a),
        Command::Match(a) => match_graphs(a),
        Command::Sweep(a) => sweep(a),
        Command::Bounds(a) => bounds(a),
        Command::Curves(a) => curves(a),
        Command::Structure(a) => structure(a),
        Command::Verify(a) => verify(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("ermatch: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
