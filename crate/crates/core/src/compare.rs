//! Tool-attributed merging, pairwise diffs and Venn regions.

use crate::model::{
    build_nodes, format_edge_key, json_error, CallGraph, EdgeKey, FunctionNode, GraphBuilder, ModelError, NodeId,
    NodeKey, SourcePosition,
};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompareError {
    #[error("tool id `{0}` given more than once")]
    DuplicateToolId(String),
    #[error("tool id must be non-empty")]
    EmptyToolId,
    #[error("no edge {0} in the merged graph")]
    UnknownEdge(String),
    #[error("{0} tools exceed the Venn region limit of {MAX_VENN_TOOLS}")]
    TooManyTools(usize),
    #[error(transparent)]
    Document(#[from] ModelError),
}

impl CompareError {
    pub fn code(&self) -> &'static str {
        match self {
            CompareError::DuplicateToolId(_) => "DUPLICATE_TOOL_ID",
            CompareError::EmptyToolId => "EMPTY_TOOL_ID",
            CompareError::UnknownEdge(_) => "UNKNOWN_EDGE",
            CompareError::TooManyTools(_) => "TOO_MANY_TOOLS",
            CompareError::Document(e) => e.code(),
        }
    }
}

pub const MAX_VENN_TOOLS: usize = 20;

pub type ToolSet = BTreeSet<String>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergedNode {
    pub id: NodeId,
    pub label: String,
    pub position: SourcePosition,
    pub tools: ToolSet,
    /// Every distinct label reported for this key, in input order.
    pub labels: Vec<String>,
}

impl MergedNode {
    pub fn key(&self) -> NodeKey {
        NodeKey::from(&self.position)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergedEdge {
    pub source: NodeId,
    pub target: NodeId,
    pub tools: ToolSet,
    pub valid: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MergedGraph {
    tools: ToolSet,
    nodes: Vec<MergedNode>,
    index: HashMap<NodeKey, NodeId>,
    edges: BTreeMap<(NodeId, NodeId), MergedEdge>,
}

impl MergedGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sorted tool universe.
    pub fn tools(&self) -> &ToolSet {
        &self.tools
    }

    pub fn nodes(&self) -> &[MergedNode] {
        &self.nodes
    }

    /// Edges sorted by `(source, target)`.
    pub fn edges(&self) -> impl Iterator<Item = &MergedEdge> {
        self.edges.values()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_key(&self, e: &MergedEdge) -> EdgeKey {
        (self.nodes[e.source].key(), self.nodes[e.target].key())
    }

    pub fn find_edge(&self, key: &EdgeKey) -> Option<&MergedEdge> {
        let s = self.index.get(&key.0)?;
        let t = self.index.get(&key.1)?;
        self.edges.get(&(*s, *t))
    }

    fn node_id(&mut self, node: &FunctionNode) -> NodeId {
        let key = node.key();
        if let Some(&id) = self.index.get(&key) {
            return id;
        }
        let id = self.nodes.len();
        self.nodes.push(MergedNode {
            id,
            label: node.label.clone(),
            position: key.to_position(),
            tools: ToolSet::new(),
            labels: Vec::new(),
        });
        self.index.insert(key, id);
        id
    }

    /// Adds one more tool's graph. Tool ids are compared case-insensitively
    /// and stored lowercase.
    pub fn absorb(&mut self, tool: &str, graph: &CallGraph) -> Result<(), CompareError> {
        let tool = tool.trim().to_lowercase();
        if tool.is_empty() {
            return Err(CompareError::EmptyToolId);
        }
        if !self.tools.insert(tool.clone()) {
            return Err(CompareError::DuplicateToolId(tool));
        }
        let ids: Vec<NodeId> = graph.nodes().iter().map(|n| self.node_id(n)).collect();
        for (n, &id) in graph.nodes().iter().zip(&ids) {
            let merged = &mut self.nodes[id];
            merged.tools.insert(tool.clone());
            if !merged.labels.contains(&n.label) {
                merged.labels.push(n.label.clone());
            }
        }
        for e in graph.edges() {
            let (source, target) = (ids[e.source], ids[e.target]);
            self.edges
                .entry((source, target))
                .or_insert_with(|| MergedEdge {
                    source,
                    target,
                    tools: ToolSet::new(),
                    valid: None,
                })
                .tools
                .insert(tool.clone());
        }
        Ok(())
    }

    /// The graph reported by one tool.
    pub fn project(&self, tool: &str) -> CallGraph {
        let mut b = GraphBuilder::new();
        let mut ids = HashMap::new();
        for n in self.nodes.iter().filter(|n| n.tools.contains(tool)) {
            ids.insert(n.id, b.add_node(n.key(), &n.label));
        }
        for e in self.edges().filter(|e| e.tools.contains(tool)) {
            let s = *ids.entry(e.source).or_insert_with(|| {
                let n = &self.nodes[e.source];
                b.add_node(n.key(), &n.label)
            });
            let t = *ids.entry(e.target).or_insert_with(|| {
                let n = &self.nodes[e.target];
                b.add_node(n.key(), &n.label)
            });
            b.add_edge(s, t);
        }
        b.finish()
    }

    /// Union graph without attribution.
    pub fn to_call_graph(&self) -> CallGraph {
        let mut b = GraphBuilder::new();
        for n in &self.nodes {
            b.add_node(n.key(), &n.label);
        }
        for e in self.edges() {
            b.add_edge(e.source, e.target);
        }
        b.finish()
    }

    pub fn validated_count(&self) -> usize {
        self.edges().filter(|e| e.valid.is_some()).count()
    }

    pub fn true_count(&self) -> usize {
        self.edges().filter(|e| e.valid == Some(true)).count()
    }
}

/// Merges per-tool graphs; nodes and edges carry the ids of the inputs that
/// contain them. The merged label of a node comes from the first input
/// reporting it.
pub fn merge(inputs: &[(&str, &CallGraph)]) -> Result<MergedGraph, CompareError> {
    let mut m = MergedGraph::new();
    for (tool, graph) in inputs {
        m.absorb(tool, graph)?;
    }
    Ok(m)
}

pub fn set_validity(m: &MergedGraph, labels: &[(EdgeKey, bool)]) -> Result<MergedGraph, CompareError> {
    let mut out = m.clone();
    for (key, valid) in labels {
        let ids = out
            .index
            .get(&key.0)
            .zip(out.index.get(&key.1))
            .map(|(s, t)| (*s, *t));
        match ids.and_then(|ids| out.edges.get_mut(&ids)) {
            Some(e) => e.valid = Some(*valid),
            None => return Err(CompareError::UnknownEdge(format_edge_key(key))),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Diff {
    pub common: BTreeSet<EdgeKey>,
    pub only_a: BTreeSet<EdgeKey>,
    pub only_b: BTreeSet<EdgeKey>,
}

impl Diff {
    pub fn union(&self) -> usize {
        self.common.len() + self.only_a.len() + self.only_b.len()
    }

    /// Percentages of the union as `(common, only a, only b)`; zeros for an
    /// empty union.
    pub fn shares(&self) -> (f64, f64, f64) {
        let u = self.union();
        if u == 0 {
            return (0.0, 0.0, 0.0);
        }
        let pct = |n: usize| n as f64 * 100.0 / u as f64;
        (pct(self.common.len()), pct(self.only_a.len()), pct(self.only_b.len()))
    }
}

pub fn diff(a: &CallGraph, b: &CallGraph) -> Diff {
    let (ka, kb) = (a.edge_keys(), b.edge_keys());
    Diff {
        common: ka.intersection(&kb).cloned().collect(),
        only_a: ka.difference(&kb).cloned().collect(),
        only_b: kb.difference(&ka).cloned().collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VennRegion {
    /// Sorted tool ids; the region holds edges found by exactly these tools.
    pub tools: Vec<String>,
    pub edges: usize,
    pub true_edges: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VennRegions {
    pub tools: Vec<String>,
    /// Ordered by subset size, then lexicographically by tool ids.
    pub regions: Vec<VennRegion>,
    /// Whether any edge carries a validity flag.
    pub validated: bool,
}

impl VennRegions {
    pub fn get(&self, tools: &[&str]) -> Option<&VennRegion> {
        let mut want: Vec<String> = tools.iter().map(|t| t.to_lowercase()).collect();
        want.sort();
        self.regions.iter().find(|r| r.tools == want)
    }

    pub fn total_edges(&self) -> usize {
        self.regions.iter().map(|r| r.edges).sum()
    }

    pub fn total_true_edges(&self) -> usize {
        self.regions.iter().map(|r| r.true_edges).sum()
    }
}

pub fn venn_regions(m: &MergedGraph) -> Result<VennRegions, CompareError> {
    let tools: Vec<String> = m.tools.iter().cloned().collect();
    let n = tools.len();
    if n > MAX_VENN_TOOLS {
        return Err(CompareError::TooManyTools(n));
    }
    let bit: HashMap<&str, usize> = tools.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
    let mut counts = vec![(0usize, 0usize); 1 << n];
    for e in m.edges() {
        let mask = e.tools.iter().fold(0usize, |acc, t| acc | 1 << bit[t.as_str()]);
        counts[mask].0 += 1;
        if e.valid == Some(true) {
            counts[mask].1 += 1;
        }
    }
    let mut masks: Vec<usize> = (1..1usize << n).collect();
    let members = |mask: usize| -> Vec<String> {
        (0..n).filter(|i| mask >> i & 1 == 1).map(|i| tools[i].clone()).collect()
    };
    masks.sort_by_key(|&mask| (mask.count_ones(), members(mask)));
    let regions = masks
        .into_iter()
        .map(|mask| VennRegion {
            tools: members(mask),
            edges: counts[mask].0,
            true_edges: counts[mask].1,
        })
        .collect();
    Ok(VennRegions {
        tools,
        regions,
        validated: m.edges().any(|e| e.valid.is_some()),
    })
}

#[derive(Serialize, Deserialize)]
struct MergedNodeRecord {
    id: u64,
    label: String,
    file: String,
    line: u32,
    column: u32,
    tools: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    labels: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct MergedEdgeRecord {
    source: u64,
    target: u64,
    tools: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    valid: Option<bool>,
}

#[derive(Serialize, Deserialize)]
struct MergedDocument {
    #[serde(default)]
    tools: Vec<String>,
    nodes: Vec<MergedNodeRecord>,
    edges: Vec<MergedEdgeRecord>,
}

pub fn serialize_merged(m: &MergedGraph) -> String {
    let doc = MergedDocument {
        tools: m.tools.iter().cloned().collect(),
        nodes: m
            .nodes
            .iter()
            .map(|n| MergedNodeRecord {
                id: n.id as u64,
                label: n.label.clone(),
                file: n.position.file.clone(),
                line: n.position.line,
                column: n.position.column,
                tools: n.tools.iter().cloned().collect(),
                labels: if n.labels.len() > 1 { n.labels.clone() } else { Vec::new() },
            })
            .collect(),
        edges: m
            .edges()
            .map(|e| MergedEdgeRecord {
                source: e.source as u64,
                target: e.target as u64,
                tools: e.tools.iter().cloned().collect(),
                valid: e.valid,
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("document serialization");
    out.push('\n');
    out
}

fn tool_set(tools: &[String], what: &str) -> Result<ToolSet, ModelError> {
    let set: ToolSet = tools.iter().map(|t| t.trim().to_lowercase()).collect();
    if set.iter().any(String::is_empty) {
        return Err(ModelError::SchemaViolation(format!("{what}: empty tool id")));
    }
    Ok(set)
}

pub fn deserialize_merged(text: &str) -> Result<MergedGraph, CompareError> {
    let doc: MergedDocument = serde_json::from_str(text).map_err(json_error)?;
    let mut builder = GraphBuilder::new();
    let ids = build_nodes(
        &mut builder,
        doc.nodes
            .iter()
            .map(|n| (n.id, n.label.as_str(), n.file.as_str(), n.line, n.column)),
    )?;
    let mut m = MergedGraph {
        tools: tool_set(&doc.tools, "tool universe")?,
        ..MergedGraph::default()
    };
    let declared = !doc.tools.is_empty();
    for (node, rec) in builder.finish().nodes().iter().zip(&doc.nodes) {
        let id = m.node_id(node);
        let tools = tool_set(&rec.tools, &format!("node {}", rec.id))?;
        let n = &mut m.nodes[id];
        n.tools = tools;
        n.labels = if rec.labels.is_empty() {
            vec![rec.label.clone()]
        } else {
            rec.labels.clone()
        };
    }
    for rec in &doc.edges {
        let (source, target) = (ids.resolve(rec.source)?, ids.resolve(rec.target)?);
        let tools = tool_set(&rec.tools, &format!("edge {} -> {}", rec.source, rec.target))?;
        if tools.is_empty() {
            return Err(ModelError::SchemaViolation(format!(
                "edge {} -> {} has no tools",
                rec.source, rec.target
            ))
            .into());
        }
        let edge = MergedEdge {
            source,
            target,
            tools,
            valid: rec.valid,
        };
        if m.edges.insert((source, target), edge).is_some() {
            return Err(ModelError::SchemaViolation(format!(
                "duplicate edge {} -> {}",
                rec.source, rec.target
            ))
            .into());
        }
    }
    let used: ToolSet = m
        .nodes
        .iter()
        .flat_map(|n| n.tools.iter())
        .chain(m.edges.values().flat_map(|e| e.tools.iter()))
        .cloned()
        .collect();
    if declared {
        if let Some(stray) = used.difference(&m.tools).next() {
            return Err(ModelError::SchemaViolation(format!("tool `{stray}` is not in the tool universe")).into());
        }
    } else {
        m.tools = used;
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_edge_key, Caller, NodeRef, RawEdge};

    fn graph(edges: &[&str]) -> CallGraph {
        let raw: Vec<RawEdge> = edges
            .iter()
            .map(|e| {
                let (s, t) = parse_edge_key(e).unwrap();
                let caller = if s.is_toplevel() {
                    Caller::Global
                } else {
                    Caller::Function(NodeRef::new(s, "f"))
                };
                RawEdge {
                    caller,
                    callee: NodeRef::new(t, "g"),
                }
            })
            .collect();
        crate::model::canonicalize(&raw)
    }

    #[test]
    fn singleton_merge() {
        let g = graph(&["toplevel:1:1->a.js:1:1", "a.js:1:1->a.js:5:1"]);
        let m = merge(&[("ACG", &g)]).unwrap();
        assert_eq!(m.tools().iter().collect::<Vec<_>>(), ["acg"]);
        assert!(m.edges().all(|e| e.tools.len() == 1 && e.valid.is_none()));
        assert!(m.project("acg").same_shape(&g));
        assert!(m.to_call_graph().same_shape(&g));
    }

    #[test]
    fn identical_graphs_union() {
        let g = graph(&["a.js:1:1->a.js:5:1"]);
        let m = merge(&[("a", &g), ("b", &g)]).unwrap();
        assert!(m.edges().all(|e| e.tools.len() == 2));
        assert_eq!(merge(&[("a", &g), ("A", &g)]).unwrap_err().code(), "DUPLICATE_TOOL_ID");
    }

    #[test]
    fn diff_laws() {
        let g = graph(&["a.js:1:1->a.js:5:1", "a.js:5:1->a.js:1:1"]);
        let d = diff(&g, &g);
        assert_eq!((d.common.len(), d.only_a.len(), d.only_b.len()), (2, 0, 0));
        let d = diff(&g, &CallGraph::default());
        assert_eq!((d.common.len(), d.only_a.len(), d.only_b.len()), (0, 2, 0));
        assert_eq!(Diff::default().shares(), (0.0, 0.0, 0.0));
    }

    #[test]
    fn disjoint_singletons_and_subsets() {
        let gs: Vec<CallGraph> = (1..=5).map(|i| graph(&[&format!("a.js:{i}:1->b.js:{i}:1")])).collect();
        let names = ["t1", "t2", "t3", "t4", "t5"];
        let inputs: Vec<(&str, &CallGraph)> = names.iter().copied().zip(gs.iter()).collect();
        let v = venn_regions(&merge(&inputs).unwrap()).unwrap();
        assert_eq!(v.regions.len(), 31);
        for r in &v.regions {
            assert_eq!(r.edges, usize::from(r.tools.len() == 1));
        }
        let small = graph(&["a.js:1:1->a.js:2:1"]);
        let big = graph(&["a.js:1:1->a.js:2:1", "a.js:2:1->a.js:3:1"]);
        let v = venn_regions(&merge(&[("a", &small), ("b", &big)]).unwrap()).unwrap();
        assert_eq!(v.get(&["a"]).unwrap().edges, 0);
        assert_eq!(v.get(&["b"]).unwrap().edges, 1);
        assert_eq!(v.get(&["b", "a"]).unwrap().edges, 1);
        assert_eq!(v.regions[2].tools, ["a", "b"]);
    }

    #[test]
    fn validity() {
        let g = graph(&["a.js:1:1->a.js:5:1", "a.js:5:1->a.js:9:1"]);
        let m = merge(&[("x", &g)]).unwrap();
        assert_eq!(set_validity(&m, &[]).unwrap(), m);
        let key = parse_edge_key("a.js:1:1->a.js:5:1").unwrap();
        let v = set_validity(&m, &[(key.clone(), true)]).unwrap();
        assert_eq!(v.find_edge(&key).unwrap().valid, Some(true));
        assert_eq!((v.validated_count(), v.true_count()), (1, 1));
        let bad = parse_edge_key("a.js:9:1->a.js:1:1").unwrap();
        assert_eq!(set_validity(&m, &[(bad, false)]).unwrap_err().code(), "UNKNOWN_EDGE");
    }

    #[test]
    fn merged_document_roundtrip() {
        let a = graph(&["toplevel:1:1->a.js:1:1", "a.js:1:1->a.js:5:1"]);
        let b = graph(&["a.js:1:1->a.js:5:1", "a.js:5:1->a.js:5:1"]);
        let m = merge(&[("acg", &a), ("wala", &b)]).unwrap();
        let key = parse_edge_key("a.js:5:1->a.js:5:1").unwrap();
        let m = set_validity(&m, &[(key, false)]).unwrap();
        let text = serialize_merged(&m);
        assert!(text.contains("\"valid\": false"));
        let back = deserialize_merged(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(serialize_merged(&back), text);
        let plain = crate::model::deserialize(&text).unwrap();
        assert!(plain.same_shape(&m.to_call_graph()));
    }

    #[test]
    fn merged_document_violations() {
        let empty_tools = r#"{"nodes":[{"id":0,"label":"f","file":"a.js","line":1,"column":1,"tools":["a"]}],
            "edges":[{"source":0,"target":0,"tools":[]}]}"#;
        assert_eq!(deserialize_merged(empty_tools).unwrap_err().code(), "SCHEMA_VIOLATION");
        let stray = r#"{"tools":["a"],"nodes":[{"id":0,"label":"f","file":"a.js","line":1,"column":1,"tools":["a"]}],
            "edges":[{"source":0,"target":0,"tools":["b"]}]}"#;
        assert_eq!(deserialize_merged(stray).unwrap_err().code(), "SCHEMA_VIOLATION");
        assert_eq!(deserialize_merged("{").unwrap_err().code(), "MALFORMED_DOCUMENT");
    }
}
