//! Unified call-graph model.
//!
//! A call graph has one node per function, identified by the position of the
//! function in the source (file, line, column), and at most one directed edge
//! per ordered pair of nodes. Calls made outside of any function originate
//! from an artificial `toplevel` node positioned at `toplevel:1:1`.
//!
//! Node ids are local aliases assigned densely from zero; every cross-graph
//! comparison goes through [`NodeKey`].

use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

/// File name and label of the artificial global-scope node.
pub const TOPLEVEL: &str = "toplevel";

/// Label used for function expressions without a name.
pub const ANONYMOUS: &str = "anonymous";

pub type NodeId = usize;

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
}

impl ModelError {
    pub fn code(&self) -> &'static str {
        match self {
            ModelError::MalformedDocument(_) => "MALFORMED_DOCUMENT",
            ModelError::SchemaViolation(_) => "SCHEMA_VIOLATION",
        }
    }
}

/// A 1-based position in a source file.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SourcePosition {
    pub file: String,
    pub line: u32,
    pub column: u32,
}

impl SourcePosition {
    pub fn new(file: impl Into<String>, line: u32, column: u32) -> Self {
        SourcePosition {
            file: file.into(),
            line,
            column,
        }
    }

    pub fn toplevel() -> Self {
        SourcePosition::new(TOPLEVEL, 1, 1)
    }
}

impl fmt::Display for SourcePosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

/// Separators are normalized to `/`; no case folding, relative paths stay relative.
pub fn normalize_path(path: &str) -> String {
    path.replace('\\', "/")
}

/// Identity of a function across graphs produced by different tools.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeKey {
    file: String,
    line: u32,
    column: u32,
}

impl NodeKey {
    pub fn new(file: &str, line: u32, column: u32) -> Self {
        NodeKey {
            file: normalize_path(file),
            line,
            column,
        }
    }

    pub fn toplevel() -> Self {
        NodeKey::new(TOPLEVEL, 1, 1)
    }

    pub fn is_toplevel(&self) -> bool {
        self.file == TOPLEVEL && self.line == 1 && self.column == 1
    }

    pub fn file(&self) -> &str {
        &self.file
    }

    pub fn line(&self) -> u32 {
        self.line
    }

    pub fn column(&self) -> u32 {
        self.column
    }

    pub fn to_position(&self) -> SourcePosition {
        SourcePosition::new(self.file.clone(), self.line, self.column)
    }

    /// Parses the `file:line:column` form. The file part may itself contain colons.
    pub fn parse(text: &str) -> Option<NodeKey> {
        let mut parts = text.trim().rsplitn(3, ':');
        let column = parts.next()?.parse().ok()?;
        let line = parts.next()?.parse().ok()?;
        let file = parts.next()?;
        if file.is_empty() || line == 0 || column == 0 {
            return None;
        }
        Some(NodeKey::new(file, line, column))
    }
}

impl From<&SourcePosition> for NodeKey {
    fn from(pos: &SourcePosition) -> Self {
        NodeKey::new(&pos.file, pos.line, pos.column)
    }
}

impl fmt::Display for NodeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

/// An edge identified by the keys of its endpoints.
pub type EdgeKey = (NodeKey, NodeKey);

pub fn format_edge_key(edge: &EdgeKey) -> String {
    format!("{}->{}", edge.0, edge.1)
}

/// Parses `caller->callee` (whitespace around the arrow is allowed).
pub fn parse_edge_key(text: &str) -> Option<EdgeKey> {
    let (a, b) = text.split_once("->")?;
    Some((NodeKey::parse(a)?, NodeKey::parse(b)?))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionNode {
    pub id: NodeId,
    pub label: String,
    pub position: SourcePosition,
}

impl FunctionNode {
    pub fn key(&self) -> NodeKey {
        NodeKey::from(&self.position)
    }
}

/// Identity triple of a node; label and id play no part in it.
pub fn node_key(node: &FunctionNode) -> NodeKey {
    node.key()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CallEdge {
    pub source: NodeId,
    pub target: NodeId,
}

/// A node reference carrying the display label a producer attached to it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeRef {
    pub key: NodeKey,
    pub label: String,
}

impl NodeRef {
    pub fn new(key: NodeKey, label: impl Into<String>) -> Self {
        NodeRef {
            key,
            label: label.into(),
        }
    }
}

/// Caller side of a raw edge: either a function or the global scope.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Caller {
    Global,
    Function(NodeRef),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawEdge {
    pub caller: Caller,
    pub callee: NodeRef,
}

#[derive(Debug, Clone, Default)]
pub struct CallGraph {
    nodes: Vec<FunctionNode>,
    edges: BTreeSet<CallEdge>,
    index: HashMap<NodeKey, NodeId>,
}

impl PartialEq for CallGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.edges == other.edges
    }
}

impl Eq for CallGraph {}

impl CallGraph {
    pub fn nodes(&self) -> &[FunctionNode] {
        &self.nodes
    }

    /// Edges sorted by `(source, target)`.
    pub fn edges(&self) -> impl Iterator<Item = CallEdge> + '_ {
        self.edges.iter().copied()
    }

    pub fn node(&self, id: NodeId) -> &FunctionNode {
        &self.nodes[id]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn id_of(&self, key: &NodeKey) -> Option<NodeId> {
        self.index.get(key).copied()
    }

    pub fn contains_edge(&self, source: &NodeKey, target: &NodeKey) -> bool {
        match (self.id_of(source), self.id_of(target)) {
            (Some(s), Some(t)) => self.edges.contains(&CallEdge { source: s, target: t }),
            _ => false,
        }
    }

    pub fn edge_key(&self, edge: CallEdge) -> EdgeKey {
        (self.nodes[edge.source].key(), self.nodes[edge.target].key())
    }

    pub fn node_keys(&self) -> BTreeSet<NodeKey> {
        self.nodes.iter().map(FunctionNode::key).collect()
    }

    pub fn edge_keys(&self) -> BTreeSet<EdgeKey> {
        self.edges.iter().map(|e| self.edge_key(*e)).collect()
    }

    /// Equality up to id renaming: same node keys and same edge key pairs.
    pub fn same_shape(&self, other: &CallGraph) -> bool {
        self.node_keys() == other.node_keys() && self.edge_keys() == other.edge_keys()
    }

    /// Raw edge list that canonicalizes back to this graph (isolated nodes are dropped).
    pub fn flatten(&self) -> Vec<RawEdge> {
        self.edges
            .iter()
            .map(|e| {
                let src = &self.nodes[e.source];
                let tgt = &self.nodes[e.target];
                let caller = if src.key().is_toplevel() {
                    Caller::Global
                } else {
                    Caller::Function(NodeRef::new(src.key(), src.label.clone()))
                };
                RawEdge {
                    caller,
                    callee: NodeRef::new(tgt.key(), tgt.label.clone()),
                }
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serialize(self)
    }
}

/// Incremental construction of a canonical graph.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    graph: CallGraph,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id for `key`, creating the node on first sight. The first
    /// label seen for a key is kept.
    pub fn add_node(&mut self, key: NodeKey, label: &str) -> NodeId {
        if let Some(&id) = self.graph.index.get(&key) {
            return id;
        }
        let id = self.graph.nodes.len();
        let label = if key.is_toplevel() { TOPLEVEL } else { label };
        self.graph.nodes.push(FunctionNode {
            id,
            label: label.to_string(),
            position: key.to_position(),
        });
        self.graph.index.insert(key, id);
        id
    }

    pub fn add_toplevel(&mut self) -> NodeId {
        self.add_node(NodeKey::toplevel(), TOPLEVEL)
    }

    pub fn add_edge(&mut self, source: NodeId, target: NodeId) -> bool {
        assert!(source < self.graph.nodes.len() && target < self.graph.nodes.len());
        self.graph.edges.insert(CallEdge { source, target })
    }

    pub fn add_raw(&mut self, raw: &RawEdge) {
        let source = match &raw.caller {
            Caller::Global => self.add_toplevel(),
            Caller::Function(r) => self.add_node(r.key.clone(), &r.label),
        };
        let target = self.add_node(raw.callee.key.clone(), &raw.callee.label);
        self.add_edge(source, target);
    }

    pub fn finish(self) -> CallGraph {
        self.graph
    }
}

/// Collapses duplicate pairs, routes global-scope callers through a single
/// `toplevel` node and assigns ids in first-appearance order.
pub fn canonicalize(raw: &[RawEdge]) -> CallGraph {
    let mut builder = GraphBuilder::new();
    for edge in raw {
        builder.add_raw(edge);
    }
    builder.finish()
}

#[derive(Serialize, Deserialize)]
struct NodeRecord {
    id: u64,
    label: String,
    file: String,
    line: u32,
    column: u32,
}

#[derive(Serialize, Deserialize)]
struct EdgeRecord {
    source: u64,
    target: u64,
}

#[derive(Serialize, Deserialize)]
struct Document {
    nodes: Vec<NodeRecord>,
    edges: Vec<EdgeRecord>,
}

/// Writes the unified JSON document: nodes by id, edges by `(source, target)`.
pub fn serialize(graph: &CallGraph) -> String {
    let doc = Document {
        nodes: graph
            .nodes
            .iter()
            .map(|n| NodeRecord {
                id: n.id as u64,
                label: n.label.clone(),
                file: n.position.file.clone(),
                line: n.position.line,
                column: n.position.column,
            })
            .collect(),
        edges: graph
            .edges
            .iter()
            .map(|e| EdgeRecord {
                source: e.source as u64,
                target: e.target as u64,
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("document serialization");
    out.push('\n');
    out
}

pub(crate) fn json_error(err: serde_json::Error) -> ModelError {
    use serde_json::error::Category;
    match err.classify() {
        Category::Data => ModelError::SchemaViolation(err.to_string()),
        _ => ModelError::MalformedDocument(err.to_string()),
    }
}

pub(crate) fn check_position(file: &str, line: u32, column: u32) -> Result<(), ModelError> {
    if file.is_empty() {
        return Err(ModelError::SchemaViolation("empty file name".into()));
    }
    if line == 0 || column == 0 {
        return Err(ModelError::SchemaViolation(format!(
            "{file}:{line}:{column}: line and column are 1-based"
        )));
    }
    Ok(())
}

/// Maps document ids onto dense ids while checking the node invariants.
pub(crate) struct IdMap {
    ids: HashMap<u64, NodeId>,
}

impl IdMap {
    pub(crate) fn resolve(&self, id: u64) -> Result<NodeId, ModelError> {
        self.ids
            .get(&id)
            .copied()
            .ok_or_else(|| ModelError::SchemaViolation(format!("edge endpoint {id} has no node")))
    }
}

pub(crate) fn build_nodes<'a>(
    builder: &mut GraphBuilder,
    nodes: impl Iterator<Item = (u64, &'a str, &'a str, u32, u32)>,
) -> Result<IdMap, ModelError> {
    let mut ids = HashMap::new();
    for (id, label, file, line, column) in nodes {
        check_position(file, line, column)?;
        let key = NodeKey::new(file, line, column);
        if builder.graph.index.contains_key(&key) {
            return Err(ModelError::SchemaViolation(format!("duplicate node position {key}")));
        }
        let dense = builder.add_node(key, label);
        if ids.insert(id, dense).is_some() {
            return Err(ModelError::SchemaViolation(format!("duplicate node id {id}")));
        }
    }
    Ok(IdMap { ids })
}

pub fn deserialize(text: &str) -> Result<CallGraph, ModelError> {
    let doc: Document = serde_json::from_str(text).map_err(json_error)?;
    let mut builder = GraphBuilder::new();
    let ids = build_nodes(
        &mut builder,
        doc.nodes
            .iter()
            .map(|n| (n.id, n.label.as_str(), n.file.as_str(), n.line, n.column)),
    )?;
    let mut seen = HashSet::new();
    for e in &doc.edges {
        let source = ids.resolve(e.source)?;
        let target = ids.resolve(e.target)?;
        if !seen.insert((source, target)) {
            return Err(ModelError::SchemaViolation(format!(
                "duplicate edge {} -> {}",
                e.source, e.target
            )));
        }
        builder.add_edge(source, target);
    }
    Ok(builder.finish())
}
