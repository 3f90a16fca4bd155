//! Seeded generator of ES5 programs with an exact ground-truth call graph.
//!
//! Every generated function gets a unique global name, so each direct call
//! resolves to exactly one function. COMPLEX programs additionally route some
//! edges through callback parameters of helper functions; those edges are
//! only discoverable with interprocedural flow and are annotated as such.

use crate::extractor::{extract_call_graph, ExtractionMode, SourceFile};
use crate::frontend::parse_program;
use crate::model::{
    deserialize, format_edge_key, serialize, CallGraph, EdgeKey, GraphBuilder, ModelError, NodeKey, ANONYMOUS,
};
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use std::collections::BTreeSet;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, thiserror::Error)]
pub enum GeneratorError {
    #[error("infeasible parameters: {0}")]
    InfeasibleParams(String),
    #[error("ground-truth manifest: {0}")]
    Manifest(#[from] ModelError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl GeneratorError {
    pub fn code(&self) -> &'static str {
        match self {
            GeneratorError::InfeasibleParams(_) => "INFEASIBLE_PARAMS",
            GeneratorError::Manifest(e) => e.code(),
            GeneratorError::Io { .. } => "IO_ERROR",
        }
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> GeneratorError + '_ {
    move |source| GeneratorError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Simple,
    Complex,
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::Simple => "simple",
            Category::Complex => "complex",
        })
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "simple" => Ok(Category::Simple),
            "complex" => Ok(Category::Complex),
            other => Err(format!("unknown category `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub category: Category,
    pub functions: usize,
    /// Distinct function-to-function edges, not counting the rooting call.
    pub edges: usize,
    pub seed: u64,
    /// Filler statements per function body, inclusive bounds.
    pub statements: (usize, usize),
    pub files: usize,
    /// COMPLEX only: share of helper out-edges realized through callbacks.
    pub callback_fraction: f64,
}

pub const PRESETS: [&str; 5] = ["s_small", "s_medium", "s_large", "c_medium", "c_large"];

impl GeneratorParams {
    pub fn new(category: Category, functions: usize, edges: usize, seed: u64) -> Self {
        let statements = match category {
            Category::Simple => (6, 9),
            Category::Complex => (8, 12),
        };
        GeneratorParams {
            category,
            functions,
            edges,
            seed,
            statements,
            files: 1,
            callback_fraction: 0.3,
        }
    }

    /// Named benchmark input sizes.
    pub fn preset(name: &str, seed: u64) -> Option<Self> {
        let (category, functions, edges, statements) = match name {
            "s_small" => (Category::Simple, 1000, 49_286, (6, 9)),
            "s_medium" => (Category::Simple, 2600, 331_267, (6, 9)),
            "s_large" => (Category::Simple, 5000, 1_224_251, (6, 9)),
            "c_medium" => (Category::Complex, 400, 3000, (20, 30)),
            "c_large" => (Category::Complex, 1000, 50_000, (130, 170)),
            _ => return None,
        };
        Some(GeneratorParams {
            statements,
            ..GeneratorParams::new(category, functions, edges, seed)
        })
    }

    /// Largest feasible edge count. In COMPLEX programs the `log` function
    /// has no outgoing calls.
    pub fn max_edges(&self) -> usize {
        let n = self.functions;
        match self.category {
            Category::Simple => n * n.saturating_sub(1),
            Category::Complex => n.saturating_sub(1) * n.saturating_sub(1),
        }
    }

    pub fn check(&self) -> Result<(), GeneratorError> {
        let fail = |m: String| Err(GeneratorError::InfeasibleParams(m));
        if self.functions == 0 {
            return fail("function count must be positive".into());
        }
        if self.files == 0 || self.files > self.functions {
            return fail(format!("file count {} outside 1..={}", self.files, self.functions));
        }
        if self.statements.0 > self.statements.1 {
            return fail("statement range is empty".into());
        }
        if !(0.0..=1.0).contains(&self.callback_fraction) {
            return fail("callback fraction outside [0, 1]".into());
        }
        if self.edges > self.max_edges() {
            return fail(format!(
                "{} edges requested but only {} distinct pairs exist among {} functions",
                self.edges,
                self.max_edges(),
                self.functions
            ));
        }
        Ok(())
    }
}

/// Expected call graph with per-edge interprocedural annotations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruthManifest {
    pub graph: CallGraph,
    pub interprocedural: BTreeSet<EdgeKey>,
}

impl GroundTruthManifest {
    pub fn requires_interprocedural(&self, edge: &EdgeKey) -> bool {
        self.interprocedural.contains(edge)
    }

    /// Edges discoverable without interprocedural flow.
    pub fn direct_edges(&self) -> BTreeSet<EdgeKey> {
        self.graph
            .edge_keys()
            .into_iter()
            .filter(|e| !self.interprocedural.contains(e))
            .collect()
    }

    /// Unified document with a `requires_interprocedural` flag on each edge.
    pub fn to_json(&self) -> String {
        let mut doc: Value = serde_json::from_str(&serialize(&self.graph)).expect("unified document");
        let edges = self.graph.edges().collect::<Vec<_>>();
        for (record, edge) in doc["edges"].as_array_mut().expect("edges").iter_mut().zip(edges) {
            let flag = self.requires_interprocedural(&self.graph.edge_key(edge));
            record["requires_interprocedural"] = Value::Bool(flag);
        }
        let mut out = serde_json::to_string_pretty(&doc).expect("manifest serialization");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let graph = deserialize(text)?;
        let doc: Value = serde_json::from_str(text).map_err(|e| ModelError::MalformedDocument(e.to_string()))?;
        let mut interprocedural = BTreeSet::new();
        let by_id = |id: &Value| -> Option<NodeKey> {
            let node = doc["nodes"].as_array()?.iter().find(|n| n["id"] == *id)?;
            Some(NodeKey::new(
                node["file"].as_str()?,
                node["line"].as_u64()? as u32,
                node["column"].as_u64()? as u32,
            ))
        };
        for e in doc["edges"].as_array().into_iter().flatten() {
            match &e["requires_interprocedural"] {
                Value::Bool(true) => {
                    let key = by_id(&e["source"]).zip(by_id(&e["target"]));
                    interprocedural.extend(key);
                }
                Value::Bool(false) | Value::Null => {}
                _ => {
                    return Err(ModelError::SchemaViolation(
                        "requires_interprocedural must be a boolean".into(),
                    ))
                }
            }
        }
        Ok(GroundTruthManifest { graph, interprocedural })
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedProgram {
    pub name: String,
    pub category: Category,
    pub files: Vec<SourceFile>,
    pub manifest: GroundTruthManifest,
}

impl GeneratedProgram {
    pub fn line_count(&self) -> usize {
        self.files.iter().map(|f| f.text.lines().count()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Declaration,
    Expression,
    /// COMPLEX: first parameter is invoked as a callback.
    Helper,
    /// COMPLEX: the no-op logging sink.
    Log,
}

struct Function {
    role: Role,
    name: String,
    /// Direct calls, by target index.
    calls: Vec<usize>,
    /// Calls to a helper passing a callback: (helper, callback).
    carried: Vec<(usize, usize)>,
}

fn roles(params: &GeneratorParams) -> Vec<Role> {
    let n = params.functions;
    (0..n)
        .map(|i| match params.category {
            Category::Simple => Role::Declaration,
            Category::Complex if n >= 2 && i == n - 1 => Role::Log,
            Category::Complex if i > 0 && i % 8 == 3 => Role::Helper,
            Category::Complex if i % 4 == 1 => Role::Expression,
            Category::Complex => Role::Declaration,
        })
        .collect()
}

/// Samples distinct ordered pairs `(i, j)`, `i != j`, uniformly; sources
/// are restricted to the first `sources` functions.
fn sample_pairs(rng: &mut ChaCha8Rng, n: usize, sources: usize, count: usize) -> Vec<(usize, usize)> {
    if count == 0 || n < 2 {
        return Vec::new();
    }
    let mut pairs: Vec<(usize, usize)> = index::sample(rng, sources * (n - 1), count)
        .into_iter()
        .map(|idx| {
            let (i, r) = (idx / (n - 1), idx % (n - 1));
            (i, if r < i { r } else { r + 1 })
        })
        .collect();
    pairs.sort_unstable();
    pairs
}

struct Writer {
    text: String,
    line: u32,
}

impl Writer {
    fn line(&mut self, s: &str) {
        self.text.push_str(s);
        self.text.push('\n');
        self.line += 1;
    }
}

enum Item {
    Filler,
    Call(usize),
    Carry(usize, usize),
}

struct Emitter<'a> {
    params: &'a GeneratorParams,
    funcs: &'a [Function],
    rng: ChaCha8Rng,
}

impl Emitter<'_> {
    fn filler(&mut self, w: &mut Writer, i: usize, k: usize) {
        let x = format!("x{i}");
        let n: u32 = self.rng.gen_range(1..100);
        match self.rng.gen_range(0..5) {
            0 => w.line(&format!("  var v{i}_{k} = {n};")),
            1 => w.line(&format!("  var o{i}_{k} = {{ a: {n}, b: \"s{k}\", c: [{n}, {k}] }};")),
            2 => {
                w.line(&format!("  var o{i}_{k} = {{ a: {n}, b: {{ c: {k} }} }};"));
                w.line(&format!("  {x} = {x} + o{i}_{k}.a * o{i}_{k}.b.c;"));
            }
            3 => {
                w.line(&format!("  for (var i{i}_{k} = 0; i{i}_{k} < {n}; i{i}_{k}++) {{"));
                w.line(&format!("    {x} += i{i}_{k} % 3;"));
                w.line("  }");
            }
            _ => {
                w.line(&format!("  while ({x} > {}) {{", n * 10));
                w.line(&format!("    {x} = {x} - {n};"));
                w.line("  }");
            }
        }
    }

    fn call(&mut self, w: &mut Writer, i: usize, k: usize, j: usize) {
        let target = &self.funcs[j];
        let name = &target.name;
        if self.params.category == Category::Simple {
            w.line(&format!("  {name}();"));
            return;
        }
        match target.role {
            Role::Log => w.line(&format!("  {name}(\"{} step {k}\");", self.funcs[i].name)),
            Role::Helper => w.line(&format!("  {name}(0, x{i});")),
            _ => match self.rng.gen_range(0..3) {
                0 => w.line(&format!("  {name}(x{i}, {k});")),
                1 => w.line(&format!("  var r{i}_{k} = {name}({k}, x{i});")),
                _ => {
                    w.line(&format!("  for (var j{i}_{k} = 0; j{i}_{k} < 2; j{i}_{k}++) {{"));
                    w.line(&format!("    {name}(j{i}_{k}, x{i});"));
                    w.line("  }");
                }
            },
        }
    }

    /// Emits function `i`; returns its (line, column).
    fn function(&mut self, w: &mut Writer, i: usize) -> (u32, u32) {
        let f = &self.funcs[i];
        let complex = self.params.category == Category::Complex;
        let header_line = w.line;
        let (params, column) = match f.role {
            Role::Log => {
                w.line(&format!("function {}(msg) {{", f.name));
                w.line("  return msg;");
                w.line("}");
                return (header_line, 1);
            }
            Role::Helper => (format!("cb{i}, p{i}"), 1),
            _ if complex => (format!("p{i}, q{i}"), 1),
            _ => (String::new(), 1),
        };
        let column = if f.role == Role::Expression {
            let prefix = format!("var {} = ", f.name);
            w.line(&format!("{prefix}function ({params}) {{"));
            prefix.len() as u32 + 1
        } else {
            w.line(&format!("function {}({params}) {{", f.name));
            column
        };
        let seed = if complex {
            match f.role {
                Role::Helper => format!("p{i}"),
                _ => format!("p{i} + q{i}"),
            }
        } else {
            self.rng.gen_range(0..1000).to_string()
        };
        w.line(&format!("  var x{i} = {seed};"));
        if f.role == Role::Helper {
            w.line(&format!("  if (typeof cb{i} === \"function\") {{"));
            w.line(&format!("    x{i} = cb{i}(p{i}, x{i});"));
            w.line("  }");
        }
        let (lo, hi) = self.params.statements;
        let fillers = self.rng.gen_range(lo..=hi);
        let mut items: Vec<Item> = (0..fillers).map(|_| Item::Filler).collect();
        items.extend(f.calls.iter().map(|&j| Item::Call(j)));
        items.extend(f.carried.iter().map(|&(h, c)| Item::Carry(h, c)));
        items.shuffle(&mut self.rng);
        for (k, item) in items.iter().enumerate() {
            match *item {
                Item::Filler => self.filler(w, i, k),
                Item::Call(j) => self.call(w, i, k, j),
                Item::Carry(h, c) => {
                    w.line(&format!("  {}({}, x{i});", self.funcs[h].name, self.funcs[c].name))
                }
            }
        }
        w.line(&format!("  return x{i};"));
        w.line(if f.role == Role::Expression { "};" } else { "}" });
        (header_line, column)
    }
}

fn file_name(name: &str, files: usize, k: usize) -> String {
    if files == 1 {
        format!("{name}.js")
    } else {
        format!("{name}_{k}.js")
    }
}

/// Generates sources and the matching manifest. Functions are laid out in
/// index order across files; the rooting call `f0()` ends the first file.
pub fn generate(name: &str, params: &GeneratorParams) -> Result<GeneratedProgram, GeneratorError> {
    params.check()?;
    let n = params.functions;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let roles = roles(params);
    let sources = match params.category {
        Category::Simple => n,
        Category::Complex => n.saturating_sub(1),
    };
    let pairs = sample_pairs(&mut rng, n, sources, params.edges);

    let mut funcs: Vec<Function> = roles
        .iter()
        .enumerate()
        .map(|(i, &role)| Function {
            role,
            name: if role == Role::Log { "log".into() } else { format!("f{i}") },
            calls: Vec::new(),
            carried: Vec::new(),
        })
        .collect();
    // Callback carriers must reach the helper by a direct call, so only
    // non-helper callers qualify.
    let mut callers: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(i, j) in &pairs {
        if roles[i] != Role::Helper {
            callers[j].push(i);
        }
    }
    let mut callback = BTreeSet::new();
    for &(i, j) in &pairs {
        let carrier = (roles[i] == Role::Helper && rng.gen_bool(params.callback_fraction))
            .then(|| callers[i].choose(&mut rng).copied())
            .flatten();
        match carrier {
            Some(k) => {
                funcs[k].carried.push((i, j));
                callback.insert((i, j));
            }
            None => funcs[i].calls.push(j),
        }
    }

    let mut emitter = Emitter {
        params,
        funcs: &funcs,
        rng,
    };
    let chunk = n.div_ceil(params.files);
    let mut files = Vec::with_capacity(params.files);
    let mut positions = Vec::with_capacity(n);
    for k in 0..params.files {
        let path = file_name(name, params.files, k);
        let mut w = Writer {
            text: String::new(),
            line: 1,
        };
        for i in (k * chunk..((k + 1) * chunk).min(n)).collect::<Vec<_>>() {
            let (line, column) = emitter.function(&mut w, i);
            positions.push(NodeKey::new(&path, line, column));
            w.line("");
        }
        if k == 0 {
            let root = match params.category {
                Category::Simple => "f0();",
                Category::Complex => "f0(1, 2);",
            };
            w.line(root);
        }
        files.push(SourceFile::new(path, w.text));
    }

    let mut b = GraphBuilder::new();
    let top = b.add_toplevel();
    let ids: Vec<usize> = funcs
        .iter()
        .zip(&positions)
        .map(|(f, key)| {
            let label = if f.role == Role::Expression { ANONYMOUS } else { &f.name };
            b.add_node(key.clone(), label)
        })
        .collect();
    b.add_edge(top, ids[0]);
    for &(i, j) in &pairs {
        b.add_edge(ids[i], ids[j]);
    }
    let interprocedural = callback
        .iter()
        .map(|&(i, j)| (positions[i].clone(), positions[j].clone()))
        .collect();
    Ok(GeneratedProgram {
        name: name.to_string(),
        category: params.category,
        files,
        manifest: GroundTruthManifest {
            graph: b.finish(),
            interprocedural,
        },
    })
}

/// Writes `<dir>/<name>/src/*.js` and `<dir>/<name>/ground-truth.json`.
pub fn write_generated(dir: &Path, program: &GeneratedProgram) -> Result<PathBuf, GeneratorError> {
    let root = dir.join(&program.name);
    let src = root.join("src");
    fs::create_dir_all(&src).map_err(io_error(&src))?;
    for f in &program.files {
        let path = src.join(&f.path);
        fs::write(&path, &f.text).map_err(io_error(&path))?;
    }
    let manifest = root.join("ground-truth.json");
    fs::write(&manifest, program.manifest.to_json()).map_err(io_error(&manifest))?;
    Ok(root)
}

/// Reads a directory written by [`write_generated`]. Source paths are
/// relative to `src/`, as in the manifest.
pub fn read_generated(root: &Path) -> Result<(Vec<SourceFile>, GroundTruthManifest), GeneratorError> {
    let manifest_path = root.join("ground-truth.json");
    let text = fs::read_to_string(&manifest_path).map_err(io_error(&manifest_path))?;
    let manifest = GroundTruthManifest::from_json(&text)?;
    let src = root.join("src");
    let mut names: Vec<String> = fs::read_dir(&src)
        .map_err(io_error(&src))?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".js"))
        .collect();
    names.sort();
    let mut files = Vec::with_capacity(names.len());
    for n in names {
        let path = src.join(&n);
        let text = fs::read_to_string(&path).map_err(io_error(&path))?;
        files.push(SourceFile::new(n, text));
    }
    Ok((files, manifest))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        Ok(())
    }
}

fn first_difference(expected: &BTreeSet<EdgeKey>, actual: &BTreeSet<EdgeKey>) -> Option<String> {
    if let Some(e) = expected.difference(actual).next() {
        return Some(format!("missing edge {}", format_edge_key(e)));
    }
    actual
        .difference(expected)
        .next()
        .map(|e| format!("unexpected edge {}", format_edge_key(e)))
}

/// Checks that the sources parse, that pessimistic extraction yields exactly
/// the direct manifest edges, and that optimistic extraction covers the
/// whole manifest.
pub fn verify_generated(files: &[SourceFile], manifest: &GroundTruthManifest) -> VerifyReport {
    let mut report = VerifyReport::default();
    let parse_error = files.iter().find_map(|f| parse_program(&f.text, &f.path).err());
    report.checks.push(CheckResult {
        name: "parse",
        passed: parse_error.is_none(),
        detail: match &parse_error {
            Some(e) => e.to_string(),
            None => format!("{} files parse", files.len()),
        },
    });
    if parse_error.is_some() {
        for name in ["pessimistic", "optimistic"] {
            report.checks.push(CheckResult {
                name,
                passed: false,
                detail: "skipped: sources do not parse".into(),
            });
        }
        return report;
    }
    let pessimistic = extract_call_graph(files, ExtractionMode::PessimisticOneshot).expect("sources parse");
    let direct = manifest.direct_edges();
    let actual = pessimistic.edge_keys();
    let node_mismatch = manifest
        .graph
        .node_keys()
        .symmetric_difference(&pessimistic.node_keys())
        .next()
        .map(|k| format!("node {k} differs"));
    let mismatch = first_difference(&direct, &actual).or(node_mismatch);
    report.checks.push(CheckResult {
        name: "pessimistic",
        passed: mismatch.is_none(),
        detail: mismatch.unwrap_or_else(|| format!("{} direct edges match", direct.len())),
    });
    let optimistic = extract_call_graph(files, ExtractionMode::Optimistic).expect("sources parse");
    let expected = manifest.graph.edge_keys();
    let missing = expected
        .difference(&optimistic.edge_keys())
        .next()
        .map(|e| format!("missing edge {}", format_edge_key(e)));
    report.checks.push(CheckResult {
        name: "optimistic",
        passed: missing.is_none(),
        detail: missing.unwrap_or_else(|| format!("all {} manifest edges found", expected.len())),
    });
    report
}

/// Line-count summary for reporting, e.g. `s_small.js 66012 lines`.
pub fn describe(program: &GeneratedProgram) -> String {
    let mut out = String::new();
    for f in &program.files {
        let _ = writeln!(out, "{} {} lines", f.path, f.text.lines().count());
    }
    let g = &program.manifest.graph;
    let _ = writeln!(
        out,
        "{} nodes, {} edges ({} interprocedural)",
        g.node_count(),
        g.edge_count(),
        program.manifest.interprocedural.len()
    );
    out
}
