//! Implementation of the `loosecycle` command line.
//!
//! [`run`] parses arguments, dispatches to the library and returns the
//! process exit code:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success, witness found, certificate valid |
//! | 1 | negative result: none exists, certificate invalid |
//! | 2 | search budget exhausted |
//! | 3 | usage error |
//! | 4 | I/O or parse error |
//!
//! Errors go to stderr as `loosecycle: error[<kind>]: <message>`. JSON
//! outputs carry the effective configuration under a `"config"` key; the
//! hypergraph text output is kept free of extras and its configuration is
//! echoed to stderr as `loosecycle: config <json>`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use loosecycle::linking::{
    assemble_pipeline, build_supplementary, cover_walk, plan_congruences, ClusterSystem, HostKind,
    SyntheticConfig, SyntheticInstance,
};
use loosecycle::packing::{augment, connected_filter, greedy_pack, AugmentBudget};
use loosecycle::random_split::{
    random_kpartite_host, run_split_experiment, SplitExperimentConfig, SplitVariant,
};
use loosecycle::search::{
    count_loose_hamilton, find_generic_hamilton, find_loose_hamilton, find_spanning_loose_path,
    Count, Outcome, SearchBudget,
};
use loosecycle::{build_ak, extremal_construction, Certificate, KGraph};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;
pub const EXIT_USAGE: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "loosecycle", version, about = "Loose Hamilton cycles in k-uniform hypergraphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a hypergraph in text format.
    Generate(GenerateArgs),
    /// Validate a certificate against a hypergraph.
    Check(CheckArgs),
    /// Exact search for a Hamilton cycle or spanning path.
    Find(FindArgs),
    /// Count loose Hamilton cycles (distinct edge sets).
    Count(CountArgs),
    /// Greedy A_k-packing with optional augmentation.
    Pack(PackArgs),
    /// Congruence plan for a cluster system.
    Plan(PlanArgs),
    /// Run the linking pipeline on a synthetic instance.
    Assemble(AssembleArgs),
    /// Monte Carlo random-split density experiment.
    SplitExperiment(SplitArgs),
    /// Minimum codegree and codegree histogram.
    Degrees(DegreesArgs),
}

#[derive(Args, Debug)]
struct OutArg {
    /// Output path (written atomically); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Family {
    Extremal,
    Complete,
    Random,
    Ak,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(value_enum)]
    family: Family,
    #[arg(long)]
    k: usize,
    /// Vertex count (ignored for `ak`).
    #[arg(long, default_value_t = 0)]
    n: usize,
    /// Edge probability for `random`.
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON sidecar with V1/V2 or U_i part labels.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    cert: PathBuf,
    /// Also require the certificate to span every vertex.
    #[arg(long)]
    hamilton: bool,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Clone, Copy, Debug, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
enum What {
    LooseHamilton,
    GenericHamilton,
    LoosePath,
}

#[derive(Args, Debug)]
struct BudgetArgs {
    #[arg(long, default_value_t = 200_000_000)]
    budget_nodes: u64,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Explore root branches in parallel; the witness is then first found.
    #[arg(long)]
    parallel: bool,
}

impl BudgetArgs {
    fn budget(&self) -> SearchBudget {
        SearchBudget {
            max_nodes: self.budget_nodes,
            time_limit: self.time_limit.map(Duration::from_secs_f64),
            deterministic: !self.parallel,
        }
    }

    fn config(&self) -> Value {
        json!({
            "budget_nodes": self.budget_nodes,
            "time_limit": self.time_limit,
            "parallel": self.parallel,
        })
    }
}

#[derive(Args, Debug)]
struct FindArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_enum)]
    what: What,
    /// Start vertex for `loose-path`.
    #[arg(long)]
    from: Option<usize>,
    /// End vertex for `loose-path`.
    #[arg(long)]
    to: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    budget: BudgetArgs,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug)]
struct CountArgs {
    #[arg(long)]
    graph: PathBuf,
    #[command(flatten)]
    budget: BudgetArgs,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug)]
struct PackArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Maximum number of augmentation rounds after the greedy packing.
    #[arg(long, default_value_t = 0)]
    augment_rounds: usize,
    #[arg(long, default_value_t = 200_000)]
    max_sets: usize,
    #[arg(long, default_value_t = 2_000_000)]
    max_keys: usize,
    /// Keep only the copies of the largest component.
    #[arg(long)]
    connected: bool,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug)]
struct PlanArgs {
    /// Cluster system JSON: {"k", "groups": [{"classes", "clusters"}], "reduced_edges"}.
    #[arg(long)]
    system: PathBuf,
    /// Group where the walk starts.
    #[arg(long)]
    from: usize,
    /// Group where the walk ends.
    #[arg(long)]
    to: usize,
    /// Vertices outside the exceptional path modulo k-1; defaults to the
    /// total group size.
    #[arg(long)]
    excess: Option<usize>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug)]
struct AssembleArgs {
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 2)]
    groups: usize,
    #[arg(long, default_value_t = 30)]
    vertices: usize,
    #[arg(long, default_value_t = 2)]
    exceptional: usize,
    /// `complete`, `group-local` or a density in (0, 1] for a random host.
    #[arg(long, default_value = "complete")]
    host: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the synthetic host in text format.
    #[arg(long)]
    graph_out: Option<PathBuf>,
    #[command(flatten)]
    budget: BudgetArgs,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VariantArg {
    Exact,
    Independent,
}

#[derive(Args, Debug)]
struct SplitArgs {
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "exact")]
    variant: VariantArg,
    /// Failure threshold; defaults to half the host density.
    #[arg(long)]
    threshold: Option<f64>,
    /// Class sizes of the random k-partite host (k = number of classes).
    #[arg(long, value_delimiter = ',', default_value = "150,150,150")]
    sizes: Vec<usize>,
    /// Target sample sizes, one per class.
    #[arg(long, value_delimiter = ',', default_value = "75,75,75")]
    targets: Vec<usize>,
    /// Crossing-edge probability of the host.
    #[arg(long, default_value_t = 0.2)]
    density: f64,
    /// Seed of the host; defaults to `seed`.
    #[arg(long)]
    host_seed: Option<u64>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug)]
struct DegreesArgs {
    #[arg(long)]
    graph: PathBuf,
    #[command(flatten)]
    out: OutArg,
}

/// Failure carrying an exit code and a stderr kind tag.
#[derive(Debug)]
struct Failure {
    code: i32,
    kind: &'static str,
    message: String,
}

impl Failure {
    fn io(message: impl ToString) -> Self {
        Failure {
            code: EXIT_IO,
            kind: "io",
            message: message.to_string(),
        }
    }

    fn parse(message: impl ToString) -> Self {
        Failure {
            code: EXIT_IO,
            kind: "parse",
            message: message.to_string(),
        }
    }

    fn usage(message: impl ToString) -> Self {
        Failure {
            code: EXIT_USAGE,
            kind: "usage",
            message: message.to_string(),
        }
    }
}

type CmdResult = Result<i32, Failure>;

/// Runs the command line and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let first = e.to_string();
                    let first = first.lines().next().unwrap_or("").trim_start_matches("error: ");
                    let _ = writeln!(stderr, "loosecycle: error[usage]: {first}");
                    EXIT_USAGE
                }
            };
        }
    };
    let mut io = Io { stdout, stderr };
    let result = match &cli.command {
        Command::Generate(a) => generate(a, &mut io),
        Command::Check(a) => check(a, &mut io),
        Command::Find(a) => find(a, &mut io),
        Command::Count(a) => count(a, &mut io),
        Command::Pack(a) => pack(a, &mut io),
        Command::Plan(a) => plan(a, &mut io),
        Command::Assemble(a) => assemble(a, &mut io),
        Command::SplitExperiment(a) => split(a, &mut io),
        Command::Degrees(a) => degrees(a, &mut io),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(io.stderr, "loosecycle: error[{}]: {}", f.kind, f.message);
            f.code
        }
    }
}

struct Io<'a> {
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
}

impl Io<'_> {
    fn emit(&mut self, out: &OutArg, text: &str) -> Result<(), Failure> {
        match &out.out {
            Some(path) => write_atomic(path, text),
            None => self.stdout.write_all(text.as_bytes()).map_err(Failure::io),
        }
    }

    fn emit_json(&mut self, out: &OutArg, mut value: Value, config: Value) -> Result<(), Failure> {
        if let Value::Object(map) = &mut value {
            map.insert("config".into(), config);
        }
        self.emit(out, &to_canonical_json(&value))
    }
}

/// Pretty JSON with sorted keys and a trailing newline.
pub fn to_canonical_json(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values serialize");
    s.push('\n');
    s
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, text: &str) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
    tmp.write_all(text.as_bytes()).map_err(Failure::io)?;
    tmp.persist(path).map_err(|e| Failure::io(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn read_graph(path: &Path) -> Result<KGraph, Failure> {
    KGraph::parse_text(&read(path)?).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    serde_json::from_str(&read(path)?).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))
}

fn generate(a: &GenerateArgs, io: &mut Io) -> CmdResult {
    let config = json!({
        "command": "generate",
        "family": format!("{:?}", a.family).to_lowercase(),
        "k": a.k,
        "n": a.n,
        "p": a.p,
        "seed": a.seed,
    });
    let (graph, labels) = match a.family {
        Family::Extremal => {
            let x = extremal_construction(a.n, a.k).map_err(Failure::usage)?;
            (x.graph, json!({"V1": x.v1, "V2": x.v2}))
        }
        Family::Complete => (KGraph::complete(a.n, a.k).map_err(Failure::usage)?, json!({})),
        Family::Random => {
            if !(0.0..=1.0).contains(&a.p) {
                return Err(Failure::usage(format!("probability {} outside [0, 1]", a.p)));
            }
            (KGraph::random(a.n, a.k, a.p, a.seed).map_err(Failure::usage)?, json!({}))
        }
        Family::Ak => {
            let g = build_ak(a.k).map_err(Failure::usage)?;
            let parts: serde_json::Map<String, Value> =
                g.parts.iter().enumerate().map(|(i, p)| (format!("U{i}"), json!(p))).collect();
            (g.graph, Value::Object(parts))
        }
    };
    let _ = writeln!(io.stderr, "loosecycle: config {}", serde_json::to_string(&config).unwrap());
    if let Some(path) = &a.labels {
        write_atomic(path, &to_canonical_json(&json!({"config": config, "labels": labels})))?;
    }
    io.emit(&a.out, &graph.to_text())?;
    Ok(EXIT_OK)
}

fn check(a: &CheckArgs, io: &mut Io) -> CmdResult {
    let g = read_graph(&a.graph)?;
    let cert: Certificate = read_json(&a.cert)?;
    let config = json!({
        "command": "check",
        "graph": a.graph.display().to_string(),
        "cert": a.cert.display().to_string(),
        "hamilton": a.hamilton,
    });
    match cert.check(&g, a.hamilton) {
        Ok(()) => {
            io.emit_json(&a.out, json!({"valid": true}), config)?;
            Ok(EXIT_OK)
        }
        Err(v) => {
            io.emit_json(&a.out, json!({"valid": false, "violation": v}), config)?;
            Ok(EXIT_NEGATIVE)
        }
    }
}

fn outcome_json<T>(outcome: Outcome<T>, cert: impl Fn(T) -> Certificate) -> (Value, i32) {
    match outcome {
        Outcome::Found(x) => (serde_json::to_value(cert(x)).unwrap(), EXIT_OK),
        Outcome::None => (json!({"result": "none"}), EXIT_NEGATIVE),
        Outcome::BudgetExhausted => (json!({"result": "budget_exhausted"}), EXIT_BUDGET),
    }
}

fn find(a: &FindArgs, io: &mut Io) -> CmdResult {
    let g = read_graph(&a.graph)?;
    let budget = a.budget.budget();
    let config = json!({
        "command": "find",
        "graph": a.graph.display().to_string(),
        "what": a.what,
        "from": a.from,
        "to": a.to,
        "seed": a.seed,
        "budget": a.budget.config(),
    });
    let (value, code) = match a.what {
        What::LooseHamilton => {
            let o = find_loose_hamilton(&g, &budget).map_err(Failure::usage)?;
            outcome_json(o, |c| Certificate::loose_cycle(&c))
        }
        What::GenericHamilton => {
            let o = find_generic_hamilton(&g, &budget).map_err(Failure::usage)?;
            outcome_json(o, |c| Certificate::generic_cycle(&c))
        }
        What::LoosePath => {
            let (Some(u), Some(v)) = (a.from, a.to) else {
                return Err(Failure::usage("loose-path needs --from and --to"));
            };
            let all: Vec<usize> = (0..g.n()).collect();
            let o = find_spanning_loose_path(&g, &all, u, v, &budget).map_err(Failure::usage)?;
            outcome_json(o, |p| Certificate::loose_path(&p))
        }
    };
    io.emit_json(&a.out, value, config)?;
    Ok(code)
}

fn count(a: &CountArgs, io: &mut Io) -> CmdResult {
    let g = read_graph(&a.graph)?;
    let config = json!({
        "command": "count",
        "graph": a.graph.display().to_string(),
        "budget": a.budget.config(),
    });
    let (value, code) = match count_loose_hamilton(&g, &a.budget.budget()).map_err(Failure::usage)? {
        Count::Exact(c) => (json!({"result": "exact", "count": c}), if c > 0 { EXIT_OK } else { EXIT_NEGATIVE }),
        Count::BudgetExhausted => (json!({"result": "budget_exhausted"}), EXIT_BUDGET),
    };
    io.emit_json(&a.out, value, config)?;
    Ok(code)
}

fn pack(a: &PackArgs, io: &mut Io) -> CmdResult {
    let g = read_graph(&a.graph)?;
    let budget = AugmentBudget {
        max_sets: a.max_sets,
        max_keys: a.max_keys,
    };
    let config = json!({
        "command": "pack",
        "graph": a.graph.display().to_string(),
        "augment_rounds": a.augment_rounds,
        "max_sets": a.max_sets,
        "max_keys": a.max_keys,
        "connected": a.connected,
    });
    let mut p = greedy_pack(&g);
    for _ in 0..a.augment_rounds {
        match augment(&g, &p, &budget).map_err(Failure::usage)? {
            Some(bigger) => p = bigger,
            None => break,
        }
    }
    if a.connected {
        p = connected_filter(&g, &p);
    }
    io.emit_json(&a.out, p.to_json(g.n()), config)?;
    Ok(EXIT_OK)
}

fn plan(a: &PlanArgs, io: &mut Io) -> CmdResult {
    let cs: ClusterSystem = read_json(&a.system)?;
    cs.validate().map_err(Failure::parse)?;
    let q = cs.k - 1;
    let excess = a.excess.unwrap_or_else(|| (0..cs.t()).map(|i| cs.group_size(i)).sum::<usize>() % q);
    let config = json!({
        "command": "plan",
        "system": a.system.display().to_string(),
        "from": a.from,
        "to": a.to,
        "excess": excess,
    });
    let sg = build_supplementary(&cs).map_err(Failure::parse)?;
    let walk = match cover_walk(&sg, a.from, a.to) {
        Ok(w) => w,
        Err(e) => {
            io.emit_json(&a.out, json!({"result": "infeasible", "reason": e.to_string()}), config)?;
            return Ok(EXIT_NEGATIVE);
        }
    };
    match plan_congruences(&cs, &walk, excess) {
        Ok(plan) => {
            io.emit_json(&a.out, json!({"result": "ok", "plan": plan, "supplementary": sg}), config)?;
            Ok(EXIT_OK)
        }
        Err(e) => {
            io.emit_json(&a.out, json!({"result": "infeasible", "reason": e.to_string()}), config)?;
            Ok(EXIT_NEGATIVE)
        }
    }
}

fn parse_host(s: &str) -> Result<HostKind, Failure> {
    match s {
        "complete" => Ok(HostKind::Complete),
        "group-local" => Ok(HostKind::GroupLocal),
        other => match other.parse::<f64>() {
            Ok(p) if p > 0.0 && p <= 1.0 => Ok(HostKind::Random(p)),
            _ => Err(Failure::usage(format!("unknown host kind {other:?}"))),
        },
    }
}

fn assemble(a: &AssembleArgs, io: &mut Io) -> CmdResult {
    let cfg = SyntheticConfig {
        k: a.k,
        groups: a.groups,
        vertices: a.vertices,
        exceptional: a.exceptional,
        host: parse_host(&a.host)?,
        seed: a.seed,
    };
    let config = json!({
        "command": "assemble",
        "synthetic": cfg,
        "seed": a.seed,
        "budget": a.budget.config(),
    });
    let inst = SyntheticInstance::generate(&cfg).map_err(Failure::usage)?;
    if let Some(path) = &a.graph_out {
        write_atomic(path, &inst.host.to_text())?;
    }
    match assemble_pipeline(&inst, a.seed, &a.budget.budget()) {
        Ok(out) => {
            io.emit_json(&a.out, serde_json::to_value(Certificate::loose_cycle(&out.cycle)).unwrap(), config)?;
            Ok(EXIT_OK)
        }
        Err(f) => {
            io.emit_json(&a.out, json!({"result": "failed", "failure": f}), config)?;
            Ok(EXIT_NEGATIVE)
        }
    }
}

fn split(a: &SplitArgs, io: &mut Io) -> CmdResult {
    if a.sizes.len() < 2 || a.sizes.len() != a.targets.len() {
        return Err(Failure::usage("--sizes and --targets need the same number (>= 2) of classes"));
    }
    if !(0.0..=1.0).contains(&a.density) {
        return Err(Failure::usage(format!("density {} outside [0, 1]", a.density)));
    }
    let host_seed = a.host_seed.unwrap_or(a.seed);
    let (host, classes) = random_kpartite_host(&a.sizes, a.density, host_seed);
    let variant = match a.variant {
        VariantArg::Exact => SplitVariant::ExactSize,
        VariantArg::Independent => SplitVariant::IndependentInclusion,
    };
    let cfg = SplitExperimentConfig {
        host,
        classes,
        targets: a.targets.clone(),
        trials: a.trials,
        seed: a.seed,
        variant,
    };
    let density = loosecycle::random_split::kpartite_density(&cfg.host, &cfg.classes).map_err(Failure::usage)?;
    let threshold = a.threshold.unwrap_or(density / 2.0);
    let config = json!({
        "command": "split-experiment",
        "trials": a.trials,
        "seed": a.seed,
        "host_seed": host_seed,
        "variant": variant,
        "threshold": threshold,
        "sizes": a.sizes,
        "targets": a.targets,
        "density": a.density,
    });
    let report = run_split_experiment(&cfg, threshold).map_err(Failure::usage)?;
    io.emit_json(&a.out, serde_json::to_value(report).unwrap(), config)?;
    Ok(EXIT_OK)
}

fn degrees(a: &DegreesArgs, io: &mut Io) -> CmdResult {
    let g = read_graph(&a.graph)?;
    let hist = g.codegree_histogram().map_err(Failure::usage)?;
    let min = g.min_codegree().map_err(Failure::usage)?;
    let histogram: serde_json::Map<String, Value> = hist
        .iter()
        .map(|(d, c)| (d.to_string(), u64::try_from(*c).map_or_else(|_| json!(c.to_string()), |c| json!(c))))
        .collect();
    let config = json!({"command": "degrees", "graph": a.graph.display().to_string()});
    let value = json!({"n": g.n(), "k": g.k(), "min_codegree": min, "histogram": histogram});
    io.emit_json(&a.out, value, config)?;
    Ok(EXIT_OK)
}
