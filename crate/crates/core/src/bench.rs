//! Wall-time and resident-memory benchmarking of extraction targets.
//!
//! Memory is observed from a sibling thread that polls the operating system
//! (`/proc` on Linux) for the resident set size of the target process tree.
//! On other platforms no samples are taken and peaks read 0.

use crate::extractor::{extract_call_graph, ExtractionMode, SourceFile};
use crate::model::serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

pub const DEFAULT_INTERVAL_MS: u64 = 50;
pub const MIN_INTERVAL_MS: u64 = 10;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BenchError {
    #[error("invalid benchmark configuration: {0}")]
    InvalidConfig(String),
    #[error("target {target} failed on {input} (run {run}): {reason}")]
    TargetFailed {
        target: String,
        input: String,
        run: usize,
        reason: String,
    },
    #[error("{0}")]
    Io(String),
}

impl BenchError {
    pub fn code(&self) -> &'static str {
        match self {
            BenchError::InvalidConfig(_) => "INVALID_CONFIG",
            BenchError::TargetFailed { .. } => "TARGET_FAILED",
            BenchError::Io(_) => "IO_ERROR",
        }
    }
}

#[derive(Debug, Clone)]
pub enum Target {
    /// External command. Arguments equal to `{input}` expand to the input
    /// paths and `{output}` to a scratch output path; without an `{input}`
    /// argument the paths are appended.
    Command {
        id: String,
        program: String,
        args: Vec<String>,
    },
    /// The reference extractor, run inside this process: read, extract,
    /// serialize and write the result.
    InProcess { id: String, mode: ExtractionMode },
}

impl Target {
    pub fn id(&self) -> &str {
        match self {
            Target::Command { id, .. } | Target::InProcess { id, .. } => id,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchInput {
    pub id: String,
    pub paths: Vec<PathBuf>,
}

impl BenchInput {
    /// All `.js` files directly under `dir`, sorted.
    pub fn from_dir(id: impl Into<String>, dir: &Path) -> std::io::Result<Self> {
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "js"))
            .collect();
        paths.sort();
        Ok(BenchInput { id: id.into(), paths })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run: usize,
    pub wall_seconds: f64,
    pub peak_rss_mb: f64,
    /// `(milliseconds since start, resident MB)`.
    pub samples: Vec<(f64, f64)>,
    pub failure: Option<String>,
}

impl RunRecord {
    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub target: String,
    pub input: String,
    pub runs: Vec<RunRecord>,
}

impl BenchReport {
    fn mean(&self, f: impl Fn(&RunRecord) -> f64) -> Option<f64> {
        let ok: Vec<f64> = self.runs.iter().filter(|r| r.succeeded()).map(f).collect();
        (!ok.is_empty()).then(|| ok.iter().sum::<f64>() / ok.len() as f64)
    }

    /// Mean over successful runs; `None` when every run failed.
    pub fn mean_wall(&self) -> Option<f64> {
        self.mean(|r| r.wall_seconds)
    }

    pub fn mean_peak(&self) -> Option<f64> {
        self.mean(|r| r.peak_rss_mb)
    }

    pub fn failures(&self) -> Vec<BenchError> {
        self.runs
            .iter()
            .filter_map(|r| {
                r.failure.as_ref().map(|reason| BenchError::TargetFailed {
                    target: self.target.clone(),
                    input: self.input.clone(),
                    run: r.run,
                    reason: reason.clone(),
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub runs: usize,
    pub interval_ms: u64,
    /// Where scratch outputs go; the system temp directory by default.
    pub scratch: Option<PathBuf>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            runs: 10,
            interval_ms: DEFAULT_INTERVAL_MS,
            scratch: None,
        }
    }
}

fn status_rss_kb(pid: u32) -> Option<u64> {
    let status = fs::read_to_string(format!("/proc/{pid}/status")).ok()?;
    let line = status.lines().find(|l| l.starts_with("VmRSS:"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}

fn parent_of(pid: u32) -> Option<u32> {
    let stat = fs::read_to_string(format!("/proc/{pid}/stat")).ok()?;
    // The command name may contain spaces; fields resume after the last `)`.
    let rest = &stat[stat.rfind(')')? + 2..];
    rest.split_whitespace().nth(1)?.parse().ok()
}

/// Resident MB of `root` and all its descendants.
fn tree_rss_mb(root: u32, include_children: bool) -> Option<f64> {
    let mut total = status_rss_kb(root)?;
    if include_children {
        let mut tree = vec![root];
        let mut pids: Vec<(u32, u32)> = fs::read_dir("/proc")
            .ok()?
            .filter_map(|e| e.ok()?.file_name().to_str()?.parse::<u32>().ok())
            .filter_map(|pid| Some((pid, parent_of(pid)?)))
            .collect();
        loop {
            let before = tree.len();
            pids.retain(|&(pid, ppid)| {
                if tree.contains(&ppid) && !tree.contains(&pid) {
                    tree.push(pid);
                    false
                } else {
                    true
                }
            });
            if tree.len() == before {
                break;
            }
        }
        total += tree[1..].iter().filter_map(|&p| status_rss_kb(p)).sum::<u64>();
    }
    Some(total as f64 / 1024.0)
}

/// Polls the memory of a process tree until stopped; owns its buffer.
struct Sampler {
    stop: Arc<AtomicBool>,
    handle: thread::JoinHandle<Vec<(f64, f64)>>,
}

impl Sampler {
    fn start(pid: u32, include_children: bool, interval: Duration, start: Instant) -> Self {
        let stop = Arc::new(AtomicBool::new(false));
        let flag = Arc::clone(&stop);
        let handle = thread::spawn(move || {
            let mut samples = Vec::new();
            loop {
                if let Some(mb) = tree_rss_mb(pid, include_children) {
                    samples.push((start.elapsed().as_secs_f64() * 1000.0, mb));
                }
                let deadline = Instant::now() + interval;
                while Instant::now() < deadline {
                    if flag.load(Ordering::Relaxed) {
                        return samples;
                    }
                    thread::sleep(Duration::from_millis(2).min(interval));
                }
            }
        });
        Sampler { stop, handle }
    }

    fn finish(self) -> Vec<(f64, f64)> {
        self.stop.store(true, Ordering::Relaxed);
        self.handle.join().unwrap_or_default()
    }
}

fn scratch_path(config: &BenchConfig, target: &str, run: usize) -> PathBuf {
    let dir = config.scratch.clone().unwrap_or_else(std::env::temp_dir);
    let safe: String = target
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    dir.join(format!("cgbench-{}-{safe}-{run}.out", std::process::id()))
}

fn run_in_process(input: &BenchInput, mode: ExtractionMode, output: &Path) -> Result<(), String> {
    let mut files = Vec::with_capacity(input.paths.len());
    for p in &input.paths {
        let text = fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
        files.push(SourceFile::new(p.to_string_lossy(), text));
    }
    let graph = extract_call_graph(&files, mode).map_err(|e| e.to_string())?;
    fs::write(output, serialize(&graph)).map_err(|e| format!("{}: {e}", output.display()))
}

fn command_args(args: &[String], input: &BenchInput, output: &Path) -> Vec<String> {
    let paths: Vec<String> = input.paths.iter().map(|p| p.to_string_lossy().into_owned()).collect();
    let mut out = Vec::new();
    let mut placed = false;
    for a in args {
        match a.as_str() {
            "{input}" => {
                out.extend(paths.iter().cloned());
                placed = true;
            }
            "{output}" => out.push(output.to_string_lossy().into_owned()),
            _ => out.push(a.clone()),
        }
    }
    if !placed {
        out.extend(paths);
    }
    out
}

fn run_once(target: &Target, input: &BenchInput, config: &BenchConfig, run: usize) -> RunRecord {
    let interval = Duration::from_millis(config.interval_ms);
    let output = scratch_path(config, target.id(), run);
    let start = Instant::now();
    let (failure, samples) = match target {
        Target::InProcess { mode, .. } => {
            let sampler = Sampler::start(std::process::id(), false, interval, start);
            let result = run_in_process(input, *mode, &output);
            (result.err(), sampler.finish())
        }
        Target::Command { program, args, .. } => {
            let spawned = Command::new(program)
                .args(command_args(args, input, &output))
                .stdin(Stdio::null())
                .stdout(Stdio::null())
                .stderr(Stdio::null())
                .spawn();
            match spawned {
                Err(e) => (Some(format!("cannot start `{program}`: {e}")), Vec::new()),
                Ok(mut child) => {
                    let sampler = Sampler::start(child.id(), true, interval, start);
                    let status = child.wait();
                    let samples = sampler.finish();
                    let failure = match status {
                        Ok(s) if s.success() => None,
                        Ok(s) => Some(s.to_string()),
                        Err(e) => Some(e.to_string()),
                    };
                    (failure, samples)
                }
            }
        }
    };
    let wall_seconds = start.elapsed().as_secs_f64().max(f64::MIN_POSITIVE);
    let _ = fs::remove_file(&output);
    let peak_rss_mb = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    RunRecord {
        run,
        wall_seconds,
        peak_rss_mb,
        samples,
        failure,
    }
}

/// Runs `target` on each input `config.runs` times, one execution at a time.
pub fn run_benchmark(
    target: &Target,
    inputs: &[BenchInput],
    config: &BenchConfig,
) -> Result<Vec<BenchReport>, BenchError> {
    if config.runs == 0 {
        return Err(BenchError::InvalidConfig("runs must be at least 1".into()));
    }
    if config.interval_ms < MIN_INTERVAL_MS {
        return Err(BenchError::InvalidConfig(format!(
            "interval must be at least {MIN_INTERVAL_MS} ms"
        )));
    }
    Ok(inputs
        .iter()
        .map(|input| BenchReport {
            target: target.id().to_string(),
            input: input.id.clone(),
            runs: (1..=config.runs).map(|run| run_once(target, input, config, run)).collect(),
        })
        .collect())
}

/// One row per successful run; failed runs are reported through
/// [`BenchReport::failures`] instead.
pub fn report_csv(reports: &[BenchReport]) -> String {
    let mut out = String::from("target,input,run,wall_seconds,peak_rss_mb\n");
    for r in reports {
        for run in r.runs.iter().filter(|run| run.succeeded()) {
            let _ = writeln!(
                out,
                "{},{},{},{:.6},{:.3}",
                r.target, r.input, run.run, run.wall_seconds, run.peak_rss_mb
            );
        }
    }
    out
}

pub fn samples_csv(run: &RunRecord) -> String {
    let mut out = String::from("t_ms,rss_mb\n");
    for (t, mb) in &run.samples {
        let _ = writeln!(out, "{t:.1},{mb:.3}");
    }
    out
}

/// Writes `<target>_<input>_run<k>.csv` sample sidecars into `dir`.
pub fn write_samples(dir: &Path, reports: &[BenchReport]) -> Result<Vec<PathBuf>, BenchError> {
    fs::create_dir_all(dir).map_err(|e| BenchError::Io(format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();
    for r in reports {
        for run in &r.runs {
            let path = dir.join(format!("{}_{}_run{}.csv", r.target, r.input, run.run));
            fs::write(&path, samples_csv(run)).map_err(|e| BenchError::Io(format!("{}: {e}", path.display())))?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Aggregate table: target, input, successful runs, mean wall, mean peak.
pub fn summary(reports: &[BenchReport]) -> String {
    let mut out = String::from("target,input,ok_runs,mean_wall_seconds,mean_peak_rss_mb\n");
    for r in reports {
        let ok = r.runs.iter().filter(|x| x.succeeded()).count();
        let fmt = |v: Option<f64>, digits: usize| v.map(|v| format!("{v:.digits$}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.target,
            r.input,
            ok,
            fmt(r.mean_wall(), 6),
            fmt(r.mean_peak(), 3)
        );
    }
    out
}
