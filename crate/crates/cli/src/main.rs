use anyhow::{bail, Context, Result};
use cgbench::adapters::{self, LabelPattern};
use cgbench::bench::{self, BenchConfig, BenchInput, Target};
use cgbench::compare::{self, deserialize_merged, serialize_merged};
use cgbench::extractor::{extract_call_graph, ExtractionMode, SourceFile};
use cgbench::generator::{self, Category, GeneratorParams};
use cgbench::metrics::{self, ratio_percent, Rounding, SampleSizeQuery};
use cgbench::model::{self, NodeKey};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

mod validate;

/// Error carrying one of the library's error codes.
#[derive(Debug)]
pub struct Coded {
    pub code: &'static str,
    pub message: String,
}

impl fmt::Display for Coded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for Coded {}

macro_rules! coded_from {
    ($($t:ty),*) => {$(
        impl From<$t> for Coded {
            fn from(e: $t) -> Self {
                Coded { code: e.code(), message: e.to_string() }
            }
        }
    )*};
}

coded_from!(
    cgbench::frontend::FrontendError,
    cgbench::model::ModelError,
    cgbench::adapters::AdapterError,
    cgbench::compare::CompareError,
    cgbench::metrics::MetricsError,
    cgbench::generator::GeneratorError,
    cgbench::bench::BenchError
);

fn coded<E: Into<Coded>>(e: E) -> anyhow::Error {
    anyhow::Error::new(e.into())
}

#[derive(Parser)]
#[command(name = "cgbench", version, about = "Static JavaScript call-graph workbench")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Extract a call graph from JavaScript sources (or ESTree .json dumps).
    Extract(ExtractArgs),
    /// Convert a foreign DOT dump or positioned edge list to a unified document.
    Convert(ConvertArgs),
    /// Merge per-tool unified documents into a tool-attributed document.
    Merge(MergeArgs),
    /// Precision, recall and F-measure per tool combination of a validated merge.
    Stats(TableArgs),
    /// Edge counts per exact tool subset.
    Venn(TableArgs),
    /// Draw a seeded random sample of edges from one Venn region.
    Sample(SampleArgs),
    /// Generate a synthetic program with its ground-truth call graph.
    Generate(GenerateArgs),
    /// Check a generated program directory against its ground truth.
    Verify(VerifyArgs),
    /// Measure wall time and peak memory of an extraction target.
    Bench(BenchArgs),
    /// Interactively mark merged edges as true or false.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Pessimistic,
    Optimistic,
}

impl From<ModeArg> for ExtractionMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Pessimistic => ExtractionMode::PessimisticOneshot,
            ModeArg::Optimistic => ExtractionMode::Optimistic,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GraphFormat {
    Json,
    Dot,
    Edges,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TableFormat {
    Csv,
    Table,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long, value_enum, default_value = "pessimistic")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "json")]
    format: GraphFormat,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(required = true)]
    files: Vec<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum InputFormat {
    Dot,
    Edges,
}

#[derive(Args)]
struct ConvertArgs {
    /// Input format; guessed from the extension (.dot/.gv) when omitted.
    #[arg(long, value_enum)]
    from: Option<InputFormat>,
    /// Regex with named groups file, line and optionally column and label.
    #[arg(long, conflicts_with = "preset")]
    node_pattern: Option<String>,
    /// Best-effort label convention: unified, wala, tajs, edge-list.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    line_offset: i64,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    column_offset: i64,
    /// Label (or file) denoting the global scope.
    #[arg(long)]
    global_label: Option<String>,
    /// Position repairs, one `old-key -> new-key` per line.
    #[arg(long)]
    patch: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: GraphFormat,
    #[arg(short, long)]
    output: Option<PathBuf>,
    input: PathBuf,
}

#[derive(Args)]
struct MergeArgs {
    /// `id=path` of a unified document; repeat per tool.
    #[arg(long = "tool", required = true)]
    tools: Vec<String>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct TableArgs {
    merged: PathBuf,
    #[arg(long, value_enum, default_value = "table")]
    format: TableFormat,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    merged: PathBuf,
    /// Comma-separated tool ids; the region of edges found by exactly these.
    #[arg(long, value_delimiter = ',', required = true)]
    region: Vec<String>,
    /// Sample size; defaults to the finite-population Cochran size.
    #[arg(long)]
    size: Option<usize>,
    #[arg(long, default_value_t = 1.96)]
    z: f64,
    #[arg(long, default_value_t = 0.05)]
    margin: f64,
    #[arg(long, default_value_t = 0.5)]
    proportion: f64,
    #[arg(long, env = "CGBENCH_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    /// One of s_small, s_medium, s_large, c_medium, c_large.
    #[arg(long, conflicts_with_all = ["category", "functions", "edges"])]
    preset: Option<String>,
    #[arg(long, default_value = "simple")]
    category: Category,
    #[arg(long)]
    functions: Option<usize>,
    #[arg(long)]
    edges: Option<usize>,
    #[arg(long)]
    files: Option<usize>,
    #[arg(long)]
    min_statements: Option<usize>,
    #[arg(long)]
    max_statements: Option<usize>,
    #[arg(long)]
    callback_fraction: Option<f64>,
    #[arg(long, env = "CGBENCH_SEED", default_value_t = 0)]
    seed: u64,
    /// Program name; defaults to the preset name.
    #[arg(long)]
    name: Option<String>,
    /// Parent directory of `<name>/src` and `<name>/ground-truth.json`.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    dir: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Built-in extractor target: `reference` or `reference-optimistic`.
    #[arg(long, conflicts_with = "command")]
    target: Option<String>,
    /// External command, split on whitespace; `{input}` and `{output}` expand.
    #[arg(long)]
    command: Option<String>,
    /// Target id used in reports.
    #[arg(long)]
    id: Option<String>,
    #[arg(long, default_value_t = 10)]
    runs: usize,
    #[arg(long, default_value_t = bench::DEFAULT_INTERVAL_MS)]
    interval_ms: u64,
    /// Per-run sample sidecars go here.
    #[arg(long)]
    samples_dir: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Files, source directories or generated program directories.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

#[derive(Args)]
pub struct ValidateArgs {
    pub merged: PathBuf,
    /// Directory source paths are resolved against.
    #[arg(long, default_value = ".")]
    pub root: PathBuf,
    /// Also visit edges that already carry a flag.
    #[arg(long)]
    pub revisit: bool,
    /// Only visit the edge keys listed in this file (one per line).
    #[arg(long)]
    pub only: Option<PathBuf>,
    /// Write here instead of updating the merged document in place.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Source lines shown around each position.
    #[arg(long, default_value_t = 3)]
    pub context: usize,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn render_graph(graph: &model::CallGraph, format: GraphFormat) -> String {
    match format {
        GraphFormat::Json => model::serialize(graph),
        GraphFormat::Dot => adapters::to_dot(graph),
        GraphFormat::Edges => adapters::to_edge_list(graph),
    }
}

fn extract(args: ExtractArgs) -> Result<()> {
    let files = args
        .files
        .iter()
        .map(|p| Ok(SourceFile::new(p.to_string_lossy(), read(p)?)))
        .collect::<Result<Vec<_>>>()?;
    let graph = extract_call_graph(&files, args.mode.into()).map_err(coded)?;
    emit(args.output.as_deref(), &render_graph(&graph, args.format))
}

fn parse_patch(text: &str) -> Result<Vec<(NodeKey, NodeKey)>> {
    let mut patch = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match model::parse_edge_key(line) {
            Some(pair) => patch.push(pair),
            None => bail!("patch line {}: expected `old-key -> new-key`", i + 1),
        }
    }
    Ok(patch)
}

fn convert(args: ConvertArgs) -> Result<()> {
    let mut pattern = match (&args.node_pattern, &args.preset) {
        (Some(re), _) => LabelPattern::new(re).map_err(coded)?,
        (None, Some(name)) => match LabelPattern::preset(name) {
            Some(p) => p,
            None => bail!("unknown preset `{name}`"),
        },
        (None, None) => LabelPattern::default(),
    }
    .with_offsets(args.line_offset, args.column_offset);
    if let Some(label) = args.global_label {
        pattern = pattern.with_global_label(label);
    }
    let text = read(&args.input)?;
    let is_dot = match args.from {
        Some(InputFormat::Dot) => true,
        Some(InputFormat::Edges) => false,
        None => args
            .input
            .extension()
            .is_some_and(|e| e == "dot" || e == "gv"),
    };
    let mut graph = if is_dot {
        adapters::parse_dot(&text, &pattern)
    } else {
        if args.node_pattern.is_none() && args.preset.is_none() {
            pattern = LabelPattern::preset("edge-list")
                .expect("edge-list preset")
                .with_offsets(args.line_offset, args.column_offset)
                .with_global_label(pattern.global_label.clone());
        }
        adapters::parse_edge_list(&text, &pattern)
    }
    .map_err(coded)?;
    if let Some(path) = &args.patch {
        let patch = parse_patch(&read(path)?)?;
        graph = adapters::repair_positions(&graph, &patch).map_err(coded)?;
    }
    emit(args.output.as_deref(), &render_graph(&graph, args.format))
}

fn merge(args: MergeArgs) -> Result<()> {
    let mut graphs = Vec::new();
    for spec in &args.tools {
        let Some((id, path)) = spec.split_once('=') else {
            bail!("--tool expects `id=path`, got `{spec}`");
        };
        let graph = model::deserialize(&read(Path::new(path))?)
            .map_err(coded)
            .with_context(|| format!("in {path}"))?;
        graphs.push((id.to_string(), graph));
    }
    let inputs: Vec<(&str, &model::CallGraph)> = graphs.iter().map(|(id, g)| (id.as_str(), g)).collect();
    let merged = compare::merge(&inputs).map_err(coded)?;
    emit(args.output.as_deref(), &serialize_merged(&merged))
}

fn load_merged(path: &Path) -> Result<compare::MergedGraph> {
    deserialize_merged(&read(path)?)
        .map_err(coded)
        .with_context(|| format!("in {}", path.display()))
}

fn stats(args: TableArgs) -> Result<()> {
    let merged = load_merged(&args.merged)?;
    let rows = match metrics::combination_stats(&merged) {
        Ok(rows) => rows,
        Err(metrics::MetricsError::UnvalidatedEdges(keys)) => {
            for k in &keys {
                eprintln!("unvalidated: {k}");
            }
            return Err(coded(metrics::MetricsError::UnvalidatedEdges(keys)));
        }
        Err(e) => return Err(coded(e)),
    };
    let text = match args.format {
        TableFormat::Csv => metrics::stats_csv(&rows),
        TableFormat::Table => metrics::stats_table(&rows),
    };
    emit(args.output.as_deref(), &text)
}

fn venn(args: TableArgs) -> Result<()> {
    let merged = load_merged(&args.merged)?;
    let v = compare::venn_regions(&merged).map_err(coded)?;
    let total = v.total_edges() as u64;
    let share = |n: usize| ratio_percent(n as u64, total, 1, Rounding::HalfAwayFromZero);
    let mut text = String::new();
    match args.format {
        TableFormat::Csv => {
            text.push_str("region,edges,true_edges,share_pct\n");
            for r in &v.regions {
                text.push_str(&format!("{},{},{},{}\n", r.tools.join("+"), r.edges, r.true_edges, share(r.edges)));
            }
        }
        TableFormat::Table => {
            let width = v.regions.iter().map(|r| r.tools.join("+").len()).max().unwrap_or(6).max(6);
            text.push_str(&format!("{:<width$}  {:>7}  {:>7}  {:>6}\n", "region", "edges", "true", "share"));
            for r in &v.regions {
                let true_edges = if v.validated { r.true_edges.to_string() } else { "-".into() };
                text.push_str(&format!(
                    "{:<width$}  {:>7}  {:>7}  {:>5}%\n",
                    r.tools.join("+"),
                    r.edges,
                    true_edges,
                    share(r.edges)
                ));
            }
            text.push_str(&format!("{:<width$}  {:>7}\n", "union", total));
        }
    }
    emit(args.output.as_deref(), &text)
}

fn sample(args: SampleArgs) -> Result<()> {
    let merged = load_merged(&args.merged)?;
    let region: Vec<&str> = args.region.iter().map(String::as_str).collect();
    let population = metrics::region_edges(&merged, &region).len();
    let n = match args.size {
        Some(n) => n,
        None if population == 0 => 0,
        None => {
            let q = SampleSizeQuery {
                population: population as u64,
                z: args.z,
                margin: args.margin,
                proportion: args.proportion,
            };
            q.validate().map_err(coded)?;
            metrics::sample_size(&q) as usize
        }
    };
    let keys = metrics::sample_edges(&merged, &region, n, args.seed).map_err(coded)?;
    eprintln!("region {}: {} of {} edges (seed {})", region.join("+"), keys.len(), population, args.seed);
    let text: String = keys.iter().map(|k| format!("{}\n", model::format_edge_key(k))).collect();
    emit(args.output.as_deref(), &text)
}

fn generate(args: GenerateArgs) -> Result<()> {
    let mut params = match &args.preset {
        Some(name) => match GeneratorParams::preset(name, args.seed) {
            Some(p) => p,
            None => bail!("unknown preset `{name}`; known: {}", generator::PRESETS.join(", ")),
        },
        None => {
            let (Some(functions), Some(edges)) = (args.functions, args.edges) else {
                bail!("either --preset or both --functions and --edges are required");
            };
            GeneratorParams::new(args.category, functions, edges, args.seed)
        }
    };
    if let Some(files) = args.files {
        params.files = files;
    }
    if let Some(lo) = args.min_statements {
        params.statements.0 = lo;
    }
    if let Some(hi) = args.max_statements {
        params.statements.1 = hi;
    }
    if let Some(f) = args.callback_fraction {
        params.callback_fraction = f;
    }
    let name = args
        .name
        .or(args.preset)
        .unwrap_or_else(|| format!("{}_{}", params.category, params.functions));
    let program = generator::generate(&name, &params).map_err(coded)?;
    let root = generator::write_generated(&args.out, &program).map_err(coded)?;
    eprint!("{}", generator::describe(&program));
    println!("{}", root.display());
    Ok(())
}

fn verify(args: VerifyArgs) -> Result<()> {
    let (files, manifest) = generator::read_generated(&args.dir).map_err(coded)?;
    let report = generator::verify_generated(&files, &manifest);
    print!("{report}");
    if !report.passed() {
        return Err(anyhow::Error::new(Coded {
            code: "VERIFY_FAILED",
            message: format!("{} check(s) failed", report.failed().count()),
        }));
    }
    Ok(())
}

fn bench_input(path: &Path) -> Result<BenchInput> {
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    if path.is_dir() {
        let src = path.join("src");
        let dir = if src.is_dir() { src } else { path.to_path_buf() };
        let input = BenchInput::from_dir(id, &dir).with_context(|| format!("cannot list {}", dir.display()))?;
        if input.paths.is_empty() {
            bail!("no .js files in {}", dir.display());
        }
        Ok(input)
    } else {
        Ok(BenchInput {
            id,
            paths: vec![path.to_path_buf()],
        })
    }
}

fn run_bench(args: BenchArgs) -> Result<()> {
    let target = match (&args.target, &args.command) {
        (_, Some(command)) => {
            let mut words = command.split_whitespace().map(String::from);
            let Some(program) = words.next() else {
                bail!("--command is empty");
            };
            Target::Command {
                id: args.id.clone().unwrap_or_else(|| program.clone()),
                program,
                args: words.collect(),
            }
        }
        (target, None) => {
            let name = target.as_deref().unwrap_or("reference");
            let mode = match name {
                "reference" | "reference-pessimistic" => ExtractionMode::PessimisticOneshot,
                "reference-optimistic" => ExtractionMode::Optimistic,
                other => bail!("unknown target `{other}`"),
            };
            Target::InProcess {
                id: args.id.clone().unwrap_or_else(|| name.to_string()),
                mode,
            }
        }
    };
    let inputs = args.inputs.iter().map(|p| bench_input(p)).collect::<Result<Vec<_>>>()?;
    let config = BenchConfig {
        runs: args.runs,
        interval_ms: args.interval_ms,
        scratch: None,
    };
    let reports = bench::run_benchmark(&target, &inputs, &config).map_err(coded)?;
    if let Some(dir) = &args.samples_dir {
        bench::write_samples(dir, &reports).map_err(coded)?;
    }
    emit(args.output.as_deref(), &bench::report_csv(&reports))?;
    eprint!("{}", bench::summary(&reports));
    let failures: Vec<_> = reports.iter().flat_map(|r| r.failures()).collect();
    for f in &failures {
        eprintln!("{f}");
    }
    if let Some(first) = failures.into_iter().next() {
        return Err(coded(first));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Cmd::Extract(a) => extract(a),
        Cmd::Convert(a) => convert(a),
        Cmd::Merge(a) => merge(a),
        Cmd::Stats(a) => stats(a),
        Cmd::Venn(a) => venn(a),
        Cmd::Sample(a) => sample(a),
        Cmd::Generate(a) => generate(a),
        Cmd::Verify(a) => verify(a),
        Cmd::Bench(a) => run_bench(a),
        Cmd::Validate(a) => {
            let stdin = io::stdin();
            validate::run(&a, &mut stdin.lock(), &mut io::stderr())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            match err.downcast_ref::<Coded>() {
                Some(c) => {
                    eprintln!("error[{}]: {}", c.code, c.message);
                    let outer = err.to_string();
                    if outer != c.to_string() {
                        eprintln!("  {outer}");
                    }
                }
                None => eprintln!("error: {err:#}"),
            }
            ExitCode::from(1)
        }
    }
}
