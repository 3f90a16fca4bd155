//! Reference field-based call graph extractor.

mod flow;

pub use flow::{
    build_flow_graph, CallId, CallRecord, FlowGraph, FlowVertex, FuncId, FunctionRecord, VertexId,
};

use crate::frontend::{load_ast_document, parse_program, FrontendError};
use crate::model::{CallGraph, GraphBuilder, NodeKey};
use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ExtractionMode {
    #[default]
    PessimisticOneshot,
    Optimistic,
}

impl fmt::Display for ExtractionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExtractionMode::PessimisticOneshot => "pessimistic",
            ExtractionMode::Optimistic => "optimistic",
        })
    }
}

impl FromStr for ExtractionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pessimistic" | "oneshot" | "pessimistic_oneshot" => Ok(ExtractionMode::PessimisticOneshot),
            "optimistic" => Ok(ExtractionMode::Optimistic),
            other => Err(format!("unknown extraction mode `{other}`")),
        }
    }
}

/// Fixpoint result: the set of functions reaching every flow vertex, plus the
/// resolved targets of each call site.
#[derive(Debug, Clone, Default)]
pub struct Reachability {
    points_to: Vec<BTreeSet<FuncId>>,
    targets: Vec<BTreeSet<FuncId>>,
}

impl Reachability {
    pub fn reaching(&self, v: VertexId) -> &BTreeSet<FuncId> {
        &self.points_to[v as usize]
    }

    pub fn call_targets(&self, call: CallId) -> &BTreeSet<FuncId> {
        &self.targets[call as usize]
    }

    /// Callee vertex to the functions reaching it, for callee vertices only.
    pub fn callee_map(&self, fg: &FlowGraph) -> HashMap<VertexId, BTreeSet<FuncId>> {
        let mut map = HashMap::new();
        for call in fg.calls() {
            for &v in &call.callees {
                map.insert(v, self.points_to[v as usize].clone());
            }
        }
        map
    }

    pub fn is_empty(&self) -> bool {
        self.targets.iter().all(BTreeSet::is_empty)
    }
}

struct Solver<'g> {
    fg: &'g FlowGraph,
    pts: Vec<HashSet<FuncId>>,
    delta: Vec<Vec<FuncId>>,
    queued: Vec<bool>,
    worklist: VecDeque<VertexId>,
    extra: HashMap<VertexId, Vec<VertexId>>,
    extra_set: HashSet<(VertexId, VertexId)>,
}

impl Solver<'_> {
    fn add(&mut self, v: VertexId, f: FuncId) {
        if self.pts[v as usize].insert(f) {
            self.delta[v as usize].push(f);
            if !self.queued[v as usize] {
                self.queued[v as usize] = true;
                self.worklist.push_back(v);
            }
        }
    }

    fn add_edge(&mut self, from: VertexId, to: VertexId) {
        if self.fg.has_edge(from, to) || !self.extra_set.insert((from, to)) {
            return;
        }
        self.extra.entry(from).or_default().push(to);
        let known: Vec<FuncId> = self.pts[from as usize].iter().copied().collect();
        for f in known {
            self.add(to, f);
        }
    }

    /// Interprocedural edges between call site `c` and its target `g`.
    fn link(&mut self, c: CallId, g: FuncId) {
        let call = &self.fg.calls()[c as usize];
        let func = &self.fg.functions()[g as usize];
        let pairs: Vec<(VertexId, VertexId)> = call
            .args
            .iter()
            .zip(&func.params)
            .filter_map(|(a, p)| a.map(|a| (a, *p)))
            .chain(func.ret.zip(call.result))
            .collect();
        for (from, to) in pairs {
            self.add_edge(from, to);
        }
    }
}

pub fn propagate(fg: &FlowGraph, mode: ExtractionMode) -> Reachability {
    let n = fg.vertex_count();
    let mut s = Solver {
        fg,
        pts: vec![HashSet::new(); n],
        delta: vec![Vec::new(); n],
        queued: vec![false; n],
        worklist: VecDeque::new(),
        extra: HashMap::new(),
        extra_set: HashSet::new(),
    };
    for (i, call) in fg.calls().iter().enumerate() {
        if let Some(g) = call.one_shot {
            s.link(i as CallId, g);
        }
    }
    for f in 0..fg.functions().len() as FuncId {
        s.add(fg.fun(f), f);
    }

    let mut calls_of: HashMap<VertexId, Vec<CallId>> = HashMap::new();
    if mode == ExtractionMode::Optimistic {
        for (i, call) in fg.calls().iter().enumerate() {
            for &v in &call.callees {
                calls_of.entry(v).or_default().push(i as CallId);
            }
        }
    }
    let mut linked: HashSet<(CallId, FuncId)> = HashSet::new();

    while let Some(v) = s.worklist.pop_front() {
        s.queued[v as usize] = false;
        let delta = std::mem::take(&mut s.delta[v as usize]);
        if delta.is_empty() {
            continue;
        }
        for &w in fg.successors(v) {
            for &f in &delta {
                s.add(w, f);
            }
        }
        if let Some(extra) = s.extra.get(&v).cloned() {
            for w in extra {
                for &f in &delta {
                    s.add(w, f);
                }
            }
        }
        if let Some(calls) = calls_of.get(&v) {
            for &c in calls {
                for &f in &delta {
                    if linked.insert((c, f)) {
                        s.link(c, f);
                    }
                }
            }
        }
    }

    let targets = fg
        .calls()
        .iter()
        .map(|call| {
            call.callees
                .iter()
                .flat_map(|v| s.pts[*v as usize].iter().copied())
                .collect()
        })
        .collect();
    Reachability {
        points_to: s.pts.into_iter().map(|set| set.into_iter().collect()).collect(),
        targets,
    }
}

/// Emits the call graph: every function literal is a node, the toplevel node
/// is present when some global-scope call resolves.
pub fn call_graph_from(fg: &FlowGraph, reach: &Reachability) -> CallGraph {
    let mut edges: BTreeSet<(Option<FuncId>, FuncId)> = BTreeSet::new();
    for (i, call) in fg.calls().iter().enumerate() {
        for &g in reach.call_targets(i as CallId) {
            edges.insert((call.enclosing, g));
        }
    }
    let mut b = GraphBuilder::new();
    let toplevel = edges.iter().any(|(c, _)| c.is_none()).then(|| b.add_toplevel());
    let ids: Vec<_> = fg
        .functions()
        .iter()
        .map(|f| b.add_node(f.key(), &f.label))
        .collect();
    for (caller, callee) in edges {
        let source = match caller {
            Some(f) => ids[f as usize],
            None => toplevel.expect("toplevel node"),
        };
        b.add_edge(source, ids[callee as usize]);
    }
    b.finish()
}

#[derive(Debug, Clone)]
pub struct SourceFile {
    pub path: String,
    pub text: String,
}

impl SourceFile {
    pub fn new(path: impl Into<String>, text: impl Into<String>) -> Self {
        SourceFile {
            path: path.into(),
            text: text.into(),
        }
    }

    /// ESTree JSON documents are recognized by extension.
    pub fn is_ast_document(&self) -> bool {
        self.path.ends_with(".json")
    }
}

pub fn extract_call_graph(sources: &[SourceFile], mode: ExtractionMode) -> Result<CallGraph, FrontendError> {
    let programs = sources
        .iter()
        .map(|s| {
            if s.is_ast_document() {
                load_ast_document(&s.text, &s.path)
            } else {
                parse_program(&s.text, &s.path)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let refs: Vec<_> = programs.iter().collect();
    let fg = build_flow_graph(&refs);
    let reach = propagate(&fg, mode);
    Ok(call_graph_from(&fg, &reach))
}

/// Convenience for a single in-memory script.
pub fn extract_source(path: &str, text: &str, mode: ExtractionMode) -> Result<CallGraph, FrontendError> {
    extract_call_graph(&[SourceFile::new(path, text)], mode)
}

/// Looks up an edge by caller and callee labels; `toplevel` names the
/// global scope. Fails on ambiguous labels.
pub fn has_labeled_edge(graph: &CallGraph, source: &str, target: &str) -> bool {
    let keys = |label: &str| -> Vec<NodeKey> {
        graph
            .nodes()
            .iter()
            .filter(|n| n.label == label)
            .map(|n| n.key())
            .collect()
    };
    let (sources, targets) = (keys(source), keys(target));
    sources
        .iter()
        .any(|s| targets.iter().any(|t| graph.contains_edge(s, t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{serialize, TOPLEVEL};
    use ExtractionMode::*;

    fn extract(src: &str, mode: ExtractionMode) -> CallGraph {
        extract_source("t.js", src, mode).unwrap()
    }

    const IIFE_CALLER: &str = "function Sun(){ return {}; }\n\
        function NBodySystem(b){ this.bodies = b; }\n\
        for (var n = 3; n <= 24; n *= 2) {\n\
        \x20 (function(){\n\
        \x20   var bodies = new NBodySystem(Array(Sun(), Sun()));\n\
        \x20 })();\n\
        }";

    const CALLBACK_PARAM: &str = "function fast3bitlookup(b) { return b & 7; }\n\
        function TimeFunc(func) {\n\
        \x20 var sum = 0;\n\
        \x20 for(var y=0; y<256; y++) sum += func(y);\n\
        \x20 return sum;\n\
        }\n\
        var sum = TimeFunc(fast3bitlookup);";

    #[test]
    fn iife_is_the_caller() {
        for mode in [PessimisticOneshot, Optimistic] {
            let g = extract(IIFE_CALLER, mode);
            assert!(has_labeled_edge(&g, "anonymous", "Sun"));
            assert!(has_labeled_edge(&g, "anonymous", "NBodySystem"));
            assert!(has_labeled_edge(&g, TOPLEVEL, "anonymous"));
            assert!(!has_labeled_edge(&g, TOPLEVEL, "Sun"));
        }
    }

    #[test]
    fn prototype_method() {
        let src = "Date.prototype.formatDate = function (input,time) {\n\
                   \x20 function W() {\n\
                   \x20   var prevNY = new Date(\"December 31 \" + (Y()-1) + \" 00:00:00\");\n\
                   \x20   return prevNY.formatDate(\"W\");\n\
                   \x20 }\n\
                   };";
        for mode in [PessimisticOneshot, Optimistic] {
            let g = extract(src, mode);
            let w = g.nodes().iter().find(|n| n.label == "W").unwrap();
            let method = g.nodes().iter().find(|n| n.position.column == 29).unwrap();
            assert!(g.contains_edge(&w.key(), &method.key()));
            assert_eq!(g.edge_count(), 1);
        }
    }

    #[test]
    fn callback_needs_optimistic_mode() {
        let g = extract(CALLBACK_PARAM, PessimisticOneshot);
        assert!(!has_labeled_edge(&g, "TimeFunc", "fast3bitlookup"));
        assert!(has_labeled_edge(&g, TOPLEVEL, "TimeFunc"));
        let g = extract(CALLBACK_PARAM, Optimistic);
        assert!(has_labeled_edge(&g, "TimeFunc", "fast3bitlookup"));
    }

    #[test]
    fn shadowed_parameters_stay_apart() {
        let src = "var a = function(p,e){e=function(c){return e(c)}}(1,2);\n\
                   var b = function(p,e){e=function(c){return e(c)}}(1,2);";
        for mode in [PessimisticOneshot, Optimistic] {
            let g = extract(src, mode);
            let inner: Vec<NodeKey> = g
                .nodes()
                .iter()
                .filter(|n| n.position.column == 25)
                .map(|n| n.key())
                .collect();
            assert_eq!(inner.len(), 2);
            assert!(g.contains_edge(&inner[0], &inner[0]));
            assert!(g.contains_edge(&inner[1], &inner[1]));
            assert!(!g.contains_edge(&inner[0], &inner[1]));
            assert!(!g.contains_edge(&inner[1], &inner[0]));
        }
    }

    #[test]
    fn direct_recursion() {
        let g = extract("function r(){ r(); } r();", PessimisticOneshot);
        assert!(has_labeled_edge(&g, TOPLEVEL, "r"));
        assert!(has_labeled_edge(&g, "r", "r"));
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn mutual_recursion_microbenchmark() {
        let src = "function ack(m, n) {\n\
                   \x20 if (m == 0) { return n + 1; }\n\
                   \x20 if (n == 0) { return ack(m - 1, 1); }\n\
                   \x20 return ack(m - 1, ack(m, n - 1));\n\
                   }\n\
                   function fib(n) {\n\
                   \x20 if (n < 2) { return 1; }\n\
                   \x20 return fib(n - 2) + fib(n - 1);\n\
                   }\n\
                   function tak(x, y, z) {\n\
                   \x20 if (y >= x) return z;\n\
                   \x20 return tak(tak(x - 1, y, z), tak(y - 1, z, x), tak(z - 1, x, y));\n\
                   }\n\
                   var result = 0;\n\
                   for (var i = 3; i <= 5; i++) {\n\
                   \x20 result += ack(3, i);\n\
                   \x20 result += fib(17.0 + i);\n\
                   \x20 result += tak(3 * i + 3, 2 * i + 2, i + 1);\n\
                   }";
        let g = extract(src, PessimisticOneshot);
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.edge_count(), 6);
    }

    #[test]
    fn new_is_a_call() {
        let g = extract("function F(){} var x = new F();", PessimisticOneshot);
        assert!(has_labeled_edge(&g, TOPLEVEL, "F"));
    }

    #[test]
    fn builtins_produce_nothing() {
        let g = extract("Math.max(1, 2); console.log('x');", Optimistic);
        assert!(g.is_empty());
        let fg = build_flow_graph(&[]);
        assert!(propagate(&fg, Optimistic).is_empty());
    }

    #[test]
    fn callback_through_return() {
        let src = "function mk(){ return function inner(){}; }\nvar h = mk(); h();";
        assert!(!has_labeled_edge(&extract(src, PessimisticOneshot), TOPLEVEL, "inner"));
        assert!(has_labeled_edge(&extract(src, Optimistic), TOPLEVEL, "inner"));
    }

    #[test]
    fn iife_arguments_flow_pessimistically() {
        let src = "function cb(){}\n(function(k){ k(); })(cb);";
        let g = extract(src, PessimisticOneshot);
        assert!(has_labeled_edge(&g, "anonymous", "cb"));
    }

    #[test]
    fn modes_are_monotone_and_deterministic() {
        for src in [IIFE_CALLER, CALLBACK_PARAM] {
            let p = extract(src, PessimisticOneshot);
            let o = extract(src, Optimistic);
            assert!(p.edge_keys().is_subset(&o.edge_keys()));
            assert_eq!(serialize(&o), serialize(&extract(src, Optimistic)));
        }
    }

    #[test]
    fn multi_file_require() {
        let files = [
            SourceFile::new("m/a.js", "module.exports = function helper(){};"),
            SourceFile::new("m/b.js", "var h = require('./a'); function main(){ h(); } main();"),
        ];
        let g = extract_call_graph(&files, PessimisticOneshot).unwrap();
        assert!(has_labeled_edge(&g, "main", "helper"));
    }

    #[test]
    fn errors_name_the_file() {
        let files = [
            SourceFile::new("ok.js", "f();"),
            SourceFile::new("bad.js", "function ("),
        ];
        let err = extract_call_graph(&files, Optimistic).unwrap_err();
        assert_eq!(err.code(), "PARSE_ERROR");
        assert_eq!(err.file(), "bad.js");
        let err = extract_source("c.js", "class A {}", Optimistic).unwrap_err();
        assert_eq!(err.code(), "UNSUPPORTED_CONSTRUCT");
    }
}
