//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the verdict lines are always printed.
//! The process fails when a criterion fails in a way not already analysed in
//! `KNOWN_UNREPRODUCIBLE`.

mod common;

use cgbench::bench::{self, BenchConfig, BenchInput, Target};
use cgbench::compare;
use cgbench::extractor::{extract_call_graph, extract_source, has_labeled_edge, ExtractionMode};
use cgbench::generator::{self, GeneratorParams};
use cgbench::metrics::{self, ratio_percent, CombinationStats, Rounding, SampleSizeQuery};
use cgbench::model::{self, canonicalize, CallGraph, GraphBuilder, NodeKey, TOPLEVEL};
use rand::{Rng, SeedableRng};
use std::time::{Duration, Instant};

use ExtractionMode::{Optimistic, PessimisticOneshot};

/// Printed cells that half-away rounding of the exact ratios misses; truncation
/// misses far more, so no single rule fits every cell.
/// (combination, column, printed, computed)
const KNOWN_UNREPRODUCIBLE: [(&str, &str, u32, u32); 3] = [
    ("npm-cg", "f", 77, 78),
    ("npm-cg+Closure+TAJS", "recall", 99, 100),
    ("npm-cg+TAJS+WALA+Closure", "recall", 99, 100),
];

struct Verdict {
    pass: bool,
    /// Failure matches an analysed, unattainable expectation.
    known: bool,
    detail: String,
}

impl Verdict {
    fn pass(detail: impl Into<String>) -> Self {
        Verdict { pass: true, known: false, detail: detail.into() }
    }

    fn fail(detail: impl Into<String>) -> Self {
        Verdict { pass: false, known: false, detail: detail.into() }
    }
}

type Criterion = (&'static str, fn() -> Verdict);

fn check(cond: bool, what: &str, failures: &mut Vec<String>) {
    if !cond {
        failures.push(what.to_string());
    }
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let text = include_str!("fixtures/tool_combinations.csv");
    let mut cells = 0;
    let mut mismatches = Vec::new();
    let mut rows = 0;
    let mut truncation_mismatches = 0;
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let num = |i: usize| f[i].parse::<u64>().expect("numeric fixture cell");
        let combination: Vec<String> = f[0].split('+').map(String::from).collect();
        let stats = CombinationStats::from_counts(combination, num(1), num(2), num(3));
        rows += 1;
        let (tp, all, star) = (num(1), num(2), num(3));
        let truncated = [(tp, all), (tp, star), (2 * tp, all + star)]
            .map(|(n, d)| ratio_percent(n, d, 0, Rounding::Truncate).parse::<u32>().unwrap());
        truncation_mismatches += (4..7).filter(|&i| num(i) as u32 != truncated[i - 4]).count();
        for (column, printed, computed) in [
            ("precision", num(4) as u32, stats.precision_pct()),
            ("recall", num(5) as u32, stats.recall_pct()),
            ("f", num(6) as u32, stats.f_pct()),
        ] {
            cells += 1;
            if printed != computed {
                mismatches.push((f[0].to_string(), column, printed, computed));
            }
        }
    }
    let elapsed = start.elapsed();
    // The analysed cells only count as known when truncation does no better.
    let known = truncation_mismatches > 0
        && mismatches.len() == KNOWN_UNREPRODUCIBLE.len()
        && mismatches
            .iter()
            .zip(KNOWN_UNREPRODUCIBLE.iter())
            .all(|(m, k)| m.0 == k.0 && m.1 == k.1 && m.2 == k.2 && m.3 == k.3);
    let listed: Vec<String> = mismatches
        .iter()
        .map(|(c, col, p, got)| format!("{c} {col} printed {p} computed {got}"))
        .collect();
    let detail = format!(
        "{rows} combinations, {}/{cells} cells exact in {:.3}s (truncation: {}/{cells}){}",
        cells - mismatches.len(),
        elapsed.as_secs_f64(),
        cells - truncation_mismatches,
        if listed.is_empty() { String::new() } else { format!("; mismatched: {}", listed.join("; ")) }
    );
    if rows != 31 || elapsed >= Duration::from_secs(1) {
        return Verdict::fail(detail);
    }
    if mismatches.is_empty() {
        Verdict::pass(detail)
    } else {
        Verdict { pass: false, known, detail }
    }
}

fn criterion_2() -> Verdict {
    let got: Vec<(u64, u64)> = [336, 641, 1304]
        .iter()
        .map(|&n| (n, metrics::sample_size(&SampleSizeQuery::new(n))))
        .collect();
    let detail = got.iter().map(|(n, s)| format!("N={n} -> {s}")).collect::<Vec<_>>().join(", ");
    if got.iter().map(|g| g.1).eq([179, 240, 297]) {
        Verdict::pass(detail)
    } else {
        Verdict::fail(detail)
    }
}

fn region_graph(prefix: &str, ranges: &[(usize, usize)]) -> CallGraph {
    let mut b = GraphBuilder::new();
    for &(lo, hi) in ranges {
        for i in lo..hi {
            let caller = b.add_node(NodeKey::new(&format!("{prefix}.js"), i as u32 + 1, 1), &format!("c{i}"));
            let callee = b.add_node(NodeKey::new("lib.js", i as u32 + 1, 1), &format!("t{i}"));
            b.add_edge(caller, callee);
        }
    }
    b.finish()
}

fn criterion_3() -> Verdict {
    // Edge i is common for i < 1304, ACG-only up to 1640, Closure-only up to 2281.
    let acg = region_graph("app", &[(0, 1640)]);
    let closure = region_graph("app", &[(0, 1304), (1640, 2281)]);
    let d = compare::diff(&acg, &closure);
    let m = compare::merge(&[("acg", &acg), ("closure", &closure)]).unwrap();
    let venn = compare::venn_regions(&m).unwrap();
    let union = venn.total_edges() as u64;
    let region = |tools: &[&str]| venn.get(tools).map_or(0, |r| r.edges) as u64;
    let pct = |n: u64| ratio_percent(n, union, 1, Rounding::HalfAwayFromZero);
    let got = (
        d.union(),
        d.common.len(),
        d.only_a.len(),
        d.only_b.len(),
        pct(region(&["acg", "closure"])),
        pct(region(&["acg"])),
        pct(region(&["closure"])),
    );
    let truncated = ratio_percent(region(&["acg", "closure"]), union, 1, Rounding::Truncate);
    let detail = format!(
        "union {} (common {}, only-acg {}, only-closure {}); shares {}% / {}% / {}% (truncation would give {}% common)",
        got.0, got.1, got.2, got.3, got.4, got.5, got.6, truncated
    );
    let expected = (2281, 1304, 336, 641, "57.2".to_string(), "14.7".to_string(), "28.1".to_string());
    if got == expected && union == 2281 {
        Verdict::pass(detail)
    } else {
        Verdict::fail(detail)
    }
}

const IIFE_CALLER: &str = "function Sun(){\n\
    \x20 return new Body(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, SOLAR_MASS);\n\
    }\n\
    function NBodySystem(bodies){ this.bodies = bodies; }\n\
    var ret = 0;\n\
    for ( var n = 3; n <= 24; n *= 2 ) {\n\
    \x20 (function(){\n\
    \x20   var bodies = new NBodySystem( Array(\n\
    \x20     Sun(),Jupiter(),Saturn(),Uranus(),Neptune()\n\
    \x20   ));\n\
    \x20 })();\n\
    }\n";

const PROTOTYPE_METHOD: &str = "Date.prototype.formatDate = function (input,time) {\n\
    \x20 function W() {\n\
    \x20   var prevNY = new Date(\"December 31 \" + (Y()-1) + \" 00:00:00\");\n\
    \x20   return prevNY.formatDate(\"W\");\n\
    \x20 }\n\
    \x20 return W();\n\
    };\n";

const CALLBACK_PARAM: &str = "function fast3bitlookup(b) {\n\
    \x20 var c, bi3b = 0xE994;\n\
    \x20 c = 3 & (bi3b >> ((b << 1) & 14));\n\
    \x20 return c;\n\
    }\n\
    function TimeFunc(func) {\n\
    \x20 var x, y, t;\n\
    \x20 var sum = 0;\n\
    \x20 for(var y=0; y<256; y++) sum += func(y);\n\
    \x20 return sum;\n\
    }\n\
    sum = TimeFunc(fast3bitlookup);\n";

const SHADOWED_PARAMS: &str = "var decompressedMochiKit = function(p,a,c\n\
    \x20   ,k,e,d){e=function(c){return(c<a?\"\":\n\
    \x20   e(parseInt(c/a)))+((c=c%a)>35?String.\n\
    \x20   fromCharCode(c+29):c.toString(36))}\n\
    \x20   return e(p);\n\
    }(1,2,3,4,5,6);\n\
    var decompressedDojo = function(p,a,c\n\
    \x20   ,k,e,d){e=function(c){return(c<a?\"\":\n\
    \x20   e(parseInt(c/a)))+((c=c%a)>35?String.\n\
    \x20   fromCharCode(c+29):c.toString(36))}\n\
    \x20   return e(p);\n\
    }(1,2,3,4,5,6);\n";

fn criterion_4() -> Verdict {
    let mut failures = Vec::new();
    let run = |src: &str, mode| extract_source("snippet.js", src, mode).expect("snippet parses");
    for mode in [PessimisticOneshot, Optimistic] {
        let g = run(IIFE_CALLER, mode);
        check(has_labeled_edge(&g, "anonymous", "Sun"), &format!("iife anonymous->Sun ({mode})"), &mut failures);
        check(!has_labeled_edge(&g, TOPLEVEL, "Sun"), &format!("iife toplevel->Sun absent ({mode})"), &mut failures);

        let g = run(PROTOTYPE_METHOD, mode);
        let w = g.nodes().iter().find(|n| n.label == "W").map(|n| n.key());
        let method = NodeKey::new("snippet.js", 1, 29);
        check(
            w.is_some_and(|w| g.contains_edge(&w, &method)),
            &format!("prototype W->formatDate ({mode})"),
            &mut failures,
        );
    }
    let g = run(CALLBACK_PARAM, PessimisticOneshot);
    check(!has_labeled_edge(&g, "TimeFunc", "fast3bitlookup"), "callback edge absent when pessimistic", &mut failures);
    let g = run(CALLBACK_PARAM, Optimistic);
    check(has_labeled_edge(&g, "TimeFunc", "fast3bitlookup"), "callback edge present when optimistic", &mut failures);
    for mode in [PessimisticOneshot, Optimistic] {
        let g = run(SHADOWED_PARAMS, mode);
        let inner = [NodeKey::new("snippet.js", 2, 15), NodeKey::new("snippet.js", 8, 15)];
        for k in &inner {
            check(g.contains_edge(k, k), &format!("shadowed self edge at {k} ({mode})"), &mut failures);
        }
        check(
            !g.contains_edge(&inner[0], &inner[1]) && !g.contains_edge(&inner[1], &inner[0]),
            &format!("shadowed no cross-scope edge ({mode})"),
            &mut failures,
        );
    }
    if failures.is_empty() {
        Verdict::pass("iife caller, prototype method, callback parameter and shadowed parameters behave as expected in both modes")
    } else {
        Verdict::fail(failures.join("; "))
    }
}

fn criterion_5() -> Verdict {
    let mut failures = Vec::new();
    let mut notes = Vec::new();
    for name in ["s_small", "c_medium", "c_large"] {
        let params = GeneratorParams::preset(name, 42).expect("preset");
        let program = match generator::generate(name, &params) {
            Ok(p) => p,
            Err(e) => return Verdict::fail(format!("{name}: {e}")),
        };
        let manifest = program.manifest.graph.edge_keys();
        for mode in [PessimisticOneshot, Optimistic] {
            let start = Instant::now();
            let g = match extract_call_graph(&program.files, mode) {
                Ok(g) => g,
                Err(e) => return Verdict::fail(format!("{name}: {e}")),
            };
            let secs = start.elapsed().as_secs_f64();
            let got = g.edge_keys();
            let ok = match (params.category, mode) {
                (generator::Category::Simple, _) => got == manifest && g.node_keys() == program.manifest.graph.node_keys(),
                (_, PessimisticOneshot) => program.manifest.direct_edges().is_subset(&got),
                (_, Optimistic) => manifest.is_subset(&got),
            };
            check(ok, &format!("{name} {mode} oracle mismatch"), &mut failures);
            if name == "s_small" && secs >= 60.0 {
                failures.push(format!("s_small {mode} took {secs:.1}s"));
            }
            notes.push(format!("{name}/{mode} {} edges {secs:.2}s", got.len()));
        }
    }
    let detail = notes.join(", ");
    if failures.is_empty() {
        Verdict::pass(detail)
    } else {
        Verdict::fail(format!("{}; {detail}", failures.join("; ")))
    }
}

fn criterion_6() -> Verdict {
    let mut failures = Vec::new();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
    let merge_instances = 1000;
    for _ in 0..merge_instances {
        let seed = rng.gen();
        if let Err(e) = common::check_merge_instance(&common::random_instance(seed, 20)) {
            failures.push(format!("merge seed {seed}: {e}"));
            break;
        }
    }
    for _ in 0..500 {
        let seed = rng.gen();
        let raw = common::random_raw(seed, 30);
        let once = canonicalize(&raw);
        let twice = canonicalize(&once.flatten());
        if once.node_keys() != twice.node_keys() || once.edge_keys() != twice.edge_keys() {
            failures.push(format!("canonicalize seed {seed} not idempotent"));
            break;
        }
        match model::deserialize(&model::serialize(&once)) {
            Ok(back) if back.same_shape(&once) => {}
            _ => {
                failures.push(format!("roundtrip seed {seed} failed"));
                break;
            }
        }
    }
    let generations = 200;
    for _ in 0..generations {
        let seed = rng.gen();
        if let Err(e) = common::check_mode_monotonicity(&common::random_complex_params(seed)) {
            failures.push(e);
            break;
        }
    }
    for _ in 0..500 {
        let seed = rng.gen();
        let graphs = common::random_instance(seed, 20);
        let named: Vec<(&str, &CallGraph)> = common::TOOLS.iter().copied().zip(graphs.iter()).collect();
        let m = common::validate_randomly(&compare::merge(&named).unwrap(), seed);
        if let Err(e) = common::check_combination_stats(&m) {
            failures.push(format!("stats seed {seed}: {e}"));
            break;
        }
    }
    if failures.is_empty() {
        Verdict::pass(format!(
            "{merge_instances} merge instances, 500 canonicalize/roundtrip, {generations} COMPLEX generations, 500 validated merges"
        ))
    } else {
        Verdict::fail(failures.join("; "))
    }
}

fn criterion_7() -> Verdict {
    let dir = tempfile::tempdir().expect("tempdir");
    let mut inputs = Vec::new();
    for name in ["s_small", "s_medium"] {
        let params = GeneratorParams::preset(name, 7).expect("preset");
        let program = generator::generate(name, &params).expect("generate");
        let root = generator::write_generated(dir.path(), &program).expect("write");
        inputs.push(BenchInput::from_dir(name, &root.join("src")).expect("list sources"));
    }
    let target = Target::InProcess { id: "reference".into(), mode: PessimisticOneshot };
    let config = BenchConfig { runs: 10, scratch: Some(dir.path().to_path_buf()), ..BenchConfig::default() };
    let reports = match bench::run_benchmark(&target, &inputs, &config) {
        Ok(r) => r,
        Err(e) => return Verdict::fail(e.to_string()),
    };
    let mut failures = Vec::new();
    let csv = bench::report_csv(&reports);
    let mut lines = csv.lines();
    check(lines.next() == Some("target,input,run,wall_seconds,peak_rss_mb"), "csv header", &mut failures);
    let mut rows = 0;
    for line in lines {
        rows += 1;
        let f: Vec<&str> = line.split(',').collect();
        let ok = f.len() == 5
            && f[0] == "reference"
            && f[2].parse::<usize>().is_ok()
            && f[3].parse::<f64>().is_ok_and(|w| w > 0.0)
            && f[4].parse::<f64>().is_ok_and(|m| m >= 0.0);
        check(ok, &format!("malformed row `{line}`"), &mut failures);
    }
    check(rows == 20, &format!("{rows} csv rows instead of 20"), &mut failures);
    let mut means = Vec::new();
    for r in &reports {
        check(r.failures().is_empty() && r.runs.len() == 10, &format!("{} had failed runs", r.input), &mut failures);
        let n = r.runs.len() as f64;
        let wall = r.runs.iter().map(|x| x.wall_seconds).sum::<f64>() / n;
        let peak = r.runs.iter().map(|x| x.peak_rss_mb).sum::<f64>() / n;
        let (mw, mp) = (r.mean_wall().unwrap_or(f64::NAN), r.mean_peak().unwrap_or(f64::NAN));
        check((mw - wall).abs() <= 1e-9 && (mp - peak).abs() <= 1e-9, &format!("{} aggregates", r.input), &mut failures);
        means.push((r.input.clone(), mw, mp));
    }
    check(means.len() == 2 && means[0].1 <= means[1].1, "mean wall not monotone", &mut failures);
    let detail = means
        .iter()
        .map(|(i, w, p)| format!("{i} {w:.3}s {p:.1}MB"))
        .collect::<Vec<_>>()
        .join(", ");
    if failures.is_empty() {
        Verdict::pass(detail)
    } else {
        Verdict::fail(format!("{}; {detail}", failures.join("; ")))
    }
}

fn main() {
    // libtest flags such as --nocapture or a name filter are accepted and ignored.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let criteria: [Criterion; 7] = [
        ("tool combination percentages", criterion_1),
        ("sample sizes", criterion_2),
        ("two-tool overlap arithmetic", criterion_3),
        ("snippet-level extractor behaviour", criterion_4),
        ("generator oracle equivalence", criterion_5),
        ("property suites", criterion_6),
        ("bench harness sanity", criterion_7),
    ];
    let mut unexpected = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let v = run();
        let status = if v.pass { "PASS" } else { "FAIL" };
        let note = if !v.pass && v.known { " [known: no single rounding rule matches every printed cell]" } else { "" };
        println!("{status} criterion {} ({name}): {}{note}", i + 1, v.detail);
        if !v.pass && !v.known {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        eprintln!("{unexpected} criterion(s) failed unexpectedly");
        std::process::exit(1);
    }
}
