//! Conversion of foreign call-graph dumps (DOT digraphs and positioned edge
//! lists) into the unified model.

use crate::model::{CallGraph, GraphBuilder, NodeKey, ANONYMOUS, TOPLEVEL};
use regex::Regex;
use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AdapterError {
    #[error("DOT syntax error at line {line}: {message}")]
    DotSyntax { line: usize, message: String },
    #[error("label of node `{node}` does not match the pattern: {label:?}")]
    LabelMismatch { node: String, label: String },
    #[error("edge list syntax error at line {line}: {message}")]
    EdgeListSyntax { line: usize, message: String },
    #[error("invalid label pattern: {0}")]
    InvalidPattern(String),
    #[error("patch refers to unknown node {0}")]
    UnknownKey(String),
    #[error("patch maps two nodes onto {0}")]
    KeyCollision(String),
}

impl AdapterError {
    pub fn code(&self) -> &'static str {
        match self {
            AdapterError::DotSyntax { .. } => "DOT_SYNTAX",
            AdapterError::LabelMismatch { .. } => "LABEL_MISMATCH",
            AdapterError::EdgeListSyntax { .. } => "EDGE_LIST_SYNTAX",
            AdapterError::InvalidPattern(_) => "INVALID_PATTERN",
            AdapterError::UnknownKey(_) => "UNKNOWN_KEY",
            AdapterError::KeyCollision(_) => "KEY_COLLISION",
        }
    }
}

/// Default node label template: an optional function name followed by a
/// literal `\n` escape, then `file:line:column`.
pub const DEFAULT_PATTERN: &str = r"^(?:(?P<label>.*)\\n)?(?P<file>.+):(?P<line>\d+):(?P<column>\d+)$";

/// Capture template for node labels. Named groups `file` and `line` are
/// required; `column` defaults to 1 when the group is absent or unmatched;
/// `label` is optional.
#[derive(Debug, Clone)]
pub struct LabelPattern {
    regex: Regex,
    pub line_offset: i64,
    pub column_offset: i64,
    /// Labels equal to this, or whose file is this, denote the global scope.
    pub global_label: String,
}

/// What a node label resolved to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolved {
    Global,
    Function { key: NodeKey, label: String },
}

impl Default for LabelPattern {
    fn default() -> Self {
        LabelPattern::new(DEFAULT_PATTERN).expect("default pattern compiles")
    }
}

impl LabelPattern {
    pub fn new(template: &str) -> Result<Self, AdapterError> {
        let regex = Regex::new(template).map_err(|e| AdapterError::InvalidPattern(e.to_string()))?;
        let names: HashSet<&str> = regex.capture_names().flatten().collect();
        for required in ["file", "line"] {
            if !names.contains(required) {
                return Err(AdapterError::InvalidPattern(format!("missing named group `{required}`")));
            }
        }
        Ok(LabelPattern {
            regex,
            line_offset: 0,
            column_offset: 0,
            global_label: TOPLEVEL.to_string(),
        })
    }

    /// Best-effort presets for known tool conventions.
    pub fn preset(name: &str) -> Option<Self> {
        let mut p = match name {
            "unified" | "default" => LabelPattern::default(),
            // `name@file:line`, line numbers only.
            "wala" => LabelPattern::new(r"^(?:(?P<label>[^@]*)@)?(?P<file>.+):(?P<line>\d+)$").ok()?,
            "tajs" => LabelPattern::default(),
            "edge-list" => LabelPattern::new(r"^(?P<file>.+):(?P<line>\d+):(?P<column>\d+)$").ok()?,
            _ => return None,
        };
        if name == "wala" {
            p.global_label = "<main>".to_string();
        }
        Some(p)
    }

    pub fn with_offsets(mut self, line_offset: i64, column_offset: i64) -> Self {
        self.line_offset = line_offset;
        self.column_offset = column_offset;
        self
    }

    pub fn with_global_label(mut self, label: impl Into<String>) -> Self {
        self.global_label = label.into();
        self
    }

    pub fn template(&self) -> &str {
        self.regex.as_str()
    }

    /// `None` when the label defies the pattern or yields a non-positive
    /// position after offsets.
    pub fn apply(&self, text: &str) -> Option<Resolved> {
        if text == self.global_label {
            return Some(Resolved::Global);
        }
        let caps = self.regex.captures(text)?;
        let file = caps.name("file")?.as_str();
        if file == self.global_label {
            return Some(Resolved::Global);
        }
        let shift = |value: Option<regex::Match>, offset: i64| -> Option<u32> {
            let raw: i64 = match value {
                Some(m) => m.as_str().parse().ok()?,
                None => 1,
            };
            u32::try_from(raw + offset).ok().filter(|v| *v >= 1)
        };
        let line = shift(caps.name("line"), self.line_offset)?;
        let column = shift(caps.name("column"), self.column_offset)?;
        let label = caps
            .name("label")
            .map(|m| m.as_str())
            .filter(|l| !l.is_empty())
            .unwrap_or(ANONYMOUS);
        Some(Resolved::Function {
            key: NodeKey::new(file, line, column),
            label: label.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum DotTok {
    Id(String),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Eq,
    Arrow,
    UndirectedEdge,
    Colon,
}

fn dot_error(line: usize, message: impl Into<String>) -> AdapterError {
    AdapterError::DotSyntax {
        line,
        message: message.into(),
    }
}

fn tokenize_dot(text: &str) -> Result<Vec<(DotTok, usize)>, AdapterError> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut line_start = true;
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            line += 1;
            line_start = true;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' && line_start {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        line_start = false;
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            i += 2;
            loop {
                match chars.get(i) {
                    None => return Err(dot_error(line, "unterminated comment")),
                    Some('*') if chars.get(i + 1) == Some(&'/') => {
                        i += 2;
                        break;
                    }
                    Some('\n') => line += 1,
                    _ => {}
                }
                i += 1;
            }
            continue;
        }
        let simple = match c {
            '{' => Some(DotTok::LBrace),
            '}' => Some(DotTok::RBrace),
            '[' => Some(DotTok::LBracket),
            ']' => Some(DotTok::RBracket),
            ';' => Some(DotTok::Semi),
            ',' => Some(DotTok::Comma),
            '=' => Some(DotTok::Eq),
            ':' => Some(DotTok::Colon),
            _ => None,
        };
        if let Some(t) = simple {
            toks.push((t, line));
            i += 1;
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'>') {
            toks.push((DotTok::Arrow, line));
            i += 2;
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            toks.push((DotTok::UndirectedEdge, line));
            i += 2;
            continue;
        }
        if c == '"' {
            let start_line = line;
            let mut s = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None => return Err(dot_error(start_line, "unterminated string")),
                    Some('"') => {
                        i += 1;
                        break;
                    }
                    Some('\\') if chars.get(i + 1) == Some(&'"') => {
                        s.push('"');
                        i += 2;
                    }
                    Some('\\') if chars.get(i + 1) == Some(&'\n') => {
                        line += 1;
                        i += 2;
                    }
                    Some(ch) => {
                        if *ch == '\n' {
                            line += 1;
                        }
                        s.push(*ch);
                        i += 1;
                    }
                }
            }
            toks.push((DotTok::Id(s), start_line));
            continue;
        }
        if c == '<' {
            return Err(dot_error(line, "HTML-like labels are not supported"));
        }
        if c.is_alphanumeric() || c == '_' || c == '.' || c == '-' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                i += 1;
            }
            if i == start {
                i += 1;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
            }
            toks.push((DotTok::Id(chars[start..i].iter().collect()), line));
            continue;
        }
        return Err(dot_error(line, format!("unexpected character `{c}`")));
    }
    Ok(toks)
}

struct DotParser {
    toks: Vec<(DotTok, usize)>,
    pos: usize,
    /// Node id to label, in first-appearance order.
    order: Vec<String>,
    labels: HashMap<String, Option<String>>,
    edges: Vec<(String, String)>,
}

fn is_keyword(id: &str, kw: &str) -> bool {
    id.eq_ignore_ascii_case(kw)
}

impl DotParser {
    fn peek(&self) -> Option<&DotTok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|(_, l)| *l)
            .unwrap_or(1)
    }

    fn next(&mut self) -> Option<DotTok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: DotTok, what: &str) -> Result<(), AdapterError> {
        let line = self.line();
        match self.next() {
            Some(t) if t == want => Ok(()),
            _ => Err(dot_error(line, format!("expected {what}"))),
        }
    }

    fn id(&mut self, what: &str) -> Result<String, AdapterError> {
        let line = self.line();
        match self.next() {
            Some(DotTok::Id(s)) => Ok(s),
            _ => Err(dot_error(line, format!("expected {what}"))),
        }
    }

    fn touch(&mut self, node: &str) {
        if !self.labels.contains_key(node) {
            self.labels.insert(node.to_string(), None);
            self.order.push(node.to_string());
        }
    }

    fn attr_list(&mut self) -> Result<Vec<(String, String)>, AdapterError> {
        let mut attrs = Vec::new();
        while self.peek() == Some(&DotTok::LBracket) {
            self.pos += 1;
            loop {
                match self.peek() {
                    Some(DotTok::RBracket) => {
                        self.pos += 1;
                        break;
                    }
                    Some(DotTok::Comma) | Some(DotTok::Semi) => self.pos += 1,
                    _ => {
                        let key = self.id("attribute name")?;
                        self.expect(DotTok::Eq, "`=`")?;
                        let value = self.id("attribute value")?;
                        attrs.push((key, value));
                    }
                }
            }
        }
        Ok(attrs)
    }

    fn node_id(&mut self) -> Result<String, AdapterError> {
        let id = self.id("node id")?;
        if self.peek() == Some(&DotTok::Colon) {
            return Err(dot_error(self.line(), "ports are not supported"));
        }
        Ok(id)
    }

    fn graph(&mut self) -> Result<(), AdapterError> {
        let mut head = self.id("`digraph`")?;
        if is_keyword(&head, "strict") {
            head = self.id("`digraph`")?;
        }
        if is_keyword(&head, "graph") {
            return Err(dot_error(self.line(), "undirected graphs are not supported"));
        }
        if !is_keyword(&head, "digraph") {
            return Err(dot_error(self.line(), "expected `digraph`"));
        }
        if let Some(DotTok::Id(_)) = self.peek() {
            self.pos += 1;
        }
        self.expect(DotTok::LBrace, "`{`")?;
        loop {
            match self.peek() {
                None => return Err(dot_error(self.line(), "unexpected end of input")),
                Some(DotTok::RBrace) => {
                    self.pos += 1;
                    break;
                }
                Some(DotTok::Semi) | Some(DotTok::Comma) => self.pos += 1,
                Some(DotTok::LBrace) => return Err(dot_error(self.line(), "subgraphs are not supported")),
                Some(DotTok::Id(_)) => self.statement()?,
                Some(_) => return Err(dot_error(self.line(), "unexpected token")),
            }
        }
        if self.pos < self.toks.len() {
            return Err(dot_error(self.line(), "trailing input after graph"));
        }
        Ok(())
    }

    fn statement(&mut self) -> Result<(), AdapterError> {
        let line = self.line();
        let Some(DotTok::Id(first)) = self.peek().cloned() else {
            unreachable!()
        };
        if is_keyword(&first, "subgraph") {
            return Err(dot_error(line, "subgraphs are not supported"));
        }
        if ["graph", "node", "edge"].iter().any(|k| is_keyword(&first, k))
            && self.toks.get(self.pos + 1).map(|(t, _)| t) == Some(&DotTok::LBracket)
        {
            self.pos += 1;
            self.attr_list()?;
            return Ok(());
        }
        if self.toks.get(self.pos + 1).map(|(t, _)| t) == Some(&DotTok::Eq) {
            self.pos += 2;
            self.id("attribute value")?;
            return Ok(());
        }
        let mut chain = vec![self.node_id()?];
        loop {
            match self.peek() {
                Some(DotTok::Arrow) => {
                    self.pos += 1;
                    if self.peek() == Some(&DotTok::LBrace) {
                        return Err(dot_error(self.line(), "subgraphs are not supported"));
                    }
                    chain.push(self.node_id()?);
                }
                Some(DotTok::UndirectedEdge) => {
                    return Err(dot_error(self.line(), "`--` edges are not allowed in a digraph"))
                }
                _ => break,
            }
        }
        let attrs = self.attr_list()?;
        for n in &chain {
            self.touch(n);
        }
        if chain.len() == 1 {
            if let Some((_, v)) = attrs.iter().rev().find(|(k, _)| k == "label") {
                self.labels.insert(first, Some(v.clone()));
            }
        } else {
            for pair in chain.windows(2) {
                self.edges.push((pair[0].clone(), pair[1].clone()));
            }
        }
        Ok(())
    }
}

/// Parses a DOT digraph into a canonical call graph. Nodes are taken in
/// first-appearance order; a node without a `label` attribute is labeled by
/// its id.
pub fn parse_dot(text: &str, pattern: &LabelPattern) -> Result<CallGraph, AdapterError> {
    let mut p = DotParser {
        toks: tokenize_dot(text)?,
        pos: 0,
        order: Vec::new(),
        labels: HashMap::new(),
        edges: Vec::new(),
    };
    p.graph()?;
    let mut builder = GraphBuilder::new();
    let mut ids = HashMap::new();
    for node in &p.order {
        let text = p.labels[node].as_deref().unwrap_or(node);
        let id = match pattern.apply(text) {
            Some(Resolved::Global) => builder.add_toplevel(),
            Some(Resolved::Function { key, label }) => builder.add_node(key, &label),
            None => {
                return Err(AdapterError::LabelMismatch {
                    node: node.clone(),
                    label: text.to_string(),
                })
            }
        };
        ids.insert(node.as_str(), id);
    }
    for (a, b) in &p.edges {
        builder.add_edge(ids[a.as_str()], ids[b.as_str()]);
    }
    Ok(builder.finish())
}

/// Parses the positioned edge-list text format: one `caller -> callee` pair
/// per line, each side matched against `pattern`. Blank lines and lines
/// starting with `#` are skipped.
pub fn parse_edge_list(text: &str, pattern: &LabelPattern) -> Result<CallGraph, AdapterError> {
    let mut builder = GraphBuilder::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((left, right)) = line.split_once("->") else {
            return Err(AdapterError::EdgeListSyntax {
                line: i + 1,
                message: "expected `caller -> callee`".into(),
            });
        };
        let mut ends = [0; 2];
        for (slot, side) in ends.iter_mut().zip([left.trim(), right.trim()]) {
            *slot = match pattern.apply(side) {
                Some(Resolved::Global) => builder.add_toplevel(),
                Some(Resolved::Function { key, label }) => builder.add_node(key, &label),
                None => {
                    return Err(AdapterError::LabelMismatch {
                        node: format!("line {}", i + 1),
                        label: side.to_string(),
                    })
                }
            };
        }
        builder.add_edge(ends[0], ends[1]);
    }
    Ok(builder.finish())
}

/// Rekeys nodes; edges follow their nodes and ids are preserved.
pub fn repair_positions(graph: &CallGraph, patch: &[(NodeKey, NodeKey)]) -> Result<CallGraph, AdapterError> {
    let mut mapping: HashMap<&NodeKey, &NodeKey> = HashMap::new();
    for (old, new) in patch {
        if graph.id_of(old).is_none() {
            return Err(AdapterError::UnknownKey(old.to_string()));
        }
        mapping.insert(old, new);
    }
    let mut seen = HashSet::new();
    let rekeyed: Vec<NodeKey> = graph
        .nodes()
        .iter()
        .map(|n| {
            let key = n.key();
            mapping.get(&key).map(|k| (*k).clone()).unwrap_or(key)
        })
        .collect();
    for key in &rekeyed {
        if !seen.insert(key) {
            return Err(AdapterError::KeyCollision(key.to_string()));
        }
    }
    let mut builder = GraphBuilder::new();
    for (node, key) in graph.nodes().iter().zip(rekeyed) {
        builder.add_node(key, &node.label);
    }
    for e in graph.edges() {
        builder.add_edge(e.source, e.target);
    }
    Ok(builder.finish())
}

fn dot_quote(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Emits a DOT digraph readable by [`parse_dot`] with the default pattern.
pub fn to_dot(graph: &CallGraph) -> String {
    let mut out = String::from("digraph callgraph {\n");
    for n in graph.nodes() {
        let key = n.key();
        let label = if key.is_toplevel() {
            key.to_string()
        } else {
            format!("{}\\n{}", dot_quote(&n.label), dot_quote(&key.to_string()))
        };
        let _ = writeln!(out, "  n{} [label=\"{}\"];", n.id, label);
    }
    for e in graph.edges() {
        let _ = writeln!(out, "  n{} -> n{};", e.source, e.target);
    }
    out.push_str("}\n");
    out
}

/// Emits the positioned edge-list text format.
pub fn to_edge_list(graph: &CallGraph) -> String {
    let mut out = String::new();
    for e in graph.edges() {
        let (s, t) = graph.edge_key(e);
        let _ = writeln!(out, "{s} -> {t}");
    }
    out
}
