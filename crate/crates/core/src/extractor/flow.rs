//! Field-based flow graph construction.
//!
//! Vertices abstract the values a function literal can flow into: local
//! variables (per declaring scope), properties (one vertex per property name,
//! program-wide), parameters, returns, call arguments and call results.
//! Identifiers without a declaring scope are properties of the global object.

use crate::frontend::ast::{self, Expr, ExprKind, ForInTarget, ForInit, Function, Pos, Program, Stmt};
use crate::frontend::enumerate_functions;
use crate::model::{NodeKey, SourcePosition, ANONYMOUS};
use std::collections::{HashMap, HashSet};
use std::fmt;

pub type VertexId = u32;
pub type FuncId = u32;
pub type CallId = u32;
pub type ScopeId = u32;
pub type Symbol = u32;
pub type FileId = u32;

const GLOBAL_SCOPE: ScopeId = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FlowVertex {
    Fun(FuncId),
    Var(ScopeId, Symbol),
    Prop(Symbol),
    Param(FuncId, u32),
    Ret(FuncId),
    Arg(CallId, u32),
    Res(CallId),
    /// `module.exports` of one input file.
    Exports(FileId),
}

#[derive(Debug, Clone)]
pub struct FunctionRecord {
    pub position: SourcePosition,
    pub label: String,
    pub params: Vec<VertexId>,
    pub ret: Option<VertexId>,
}

impl FunctionRecord {
    pub fn key(&self) -> NodeKey {
        NodeKey::from(&self.position)
    }
}

#[derive(Debug, Clone)]
pub struct CallRecord {
    pub position: SourcePosition,
    /// `None` for calls made in the global scope.
    pub enclosing: Option<FuncId>,
    pub callees: Vec<VertexId>,
    pub args: Vec<Option<VertexId>>,
    pub result: Option<VertexId>,
    /// Set when the callee is a function expression invoked in place.
    pub one_shot: Option<FuncId>,
    pub is_new: bool,
}

#[derive(Debug, Default, Clone)]
pub struct FlowGraph {
    vertices: Vec<FlowVertex>,
    index: HashMap<FlowVertex, VertexId>,
    succs: Vec<Vec<VertexId>>,
    edge_set: HashSet<(VertexId, VertexId)>,
    symbols: Vec<String>,
    symbol_index: HashMap<String, Symbol>,
    pub(crate) functions: Vec<FunctionRecord>,
    pub(crate) calls: Vec<CallRecord>,
    files: Vec<String>,
}

impl FlowGraph {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_set.len()
    }

    pub fn vertex(&self, id: VertexId) -> FlowVertex {
        self.vertices[id as usize]
    }

    pub fn lookup(&self, v: &FlowVertex) -> Option<VertexId> {
        self.index.get(v).copied()
    }

    pub fn successors(&self, id: VertexId) -> &[VertexId] {
        &self.succs[id as usize]
    }

    pub fn has_edge(&self, from: VertexId, to: VertexId) -> bool {
        self.edge_set.contains(&(from, to))
    }

    pub fn functions(&self) -> &[FunctionRecord] {
        &self.functions
    }

    pub fn calls(&self) -> &[CallRecord] {
        &self.calls
    }

    pub fn symbol(&self, name: &str) -> Option<Symbol> {
        self.symbol_index.get(name).copied()
    }

    pub fn prop(&self, name: &str) -> Option<VertexId> {
        self.lookup(&FlowVertex::Prop(self.symbol(name)?))
    }

    pub fn fun(&self, id: FuncId) -> VertexId {
        self.lookup(&FlowVertex::Fun(id)).expect("function vertex")
    }

    /// Finds a function by label (first in source order).
    pub fn function_named(&self, label: &str) -> Option<FuncId> {
        self.functions.iter().position(|f| f.label == label).map(|i| i as FuncId)
    }

    pub(crate) fn intern(&mut self, v: FlowVertex) -> VertexId {
        if let Some(&id) = self.index.get(&v) {
            return id;
        }
        let id = self.vertices.len() as VertexId;
        self.vertices.push(v);
        self.succs.push(Vec::new());
        self.index.insert(v, id);
        id
    }

    pub(crate) fn add_edge(&mut self, from: VertexId, to: VertexId) -> bool {
        if self.edge_set.insert((from, to)) {
            self.succs[from as usize].push(to);
            true
        } else {
            false
        }
    }

    fn sym(&mut self, name: &str) -> Symbol {
        if let Some(&s) = self.symbol_index.get(name) {
            return s;
        }
        let s = self.symbols.len() as Symbol;
        self.symbols.push(name.to_string());
        self.symbol_index.insert(name.to_string(), s);
        s
    }

    pub fn describe(&self, id: VertexId) -> String {
        let fpos = |f: FuncId| self.functions[f as usize].position.to_string();
        let cpos = |c: CallId| self.calls[c as usize].position.to_string();
        match self.vertex(id) {
            FlowVertex::Fun(f) => format!("FUN({})", fpos(f)),
            FlowVertex::Var(s, n) => format!("VAR({s}, {})", self.symbols[n as usize]),
            FlowVertex::Prop(n) => format!("PROP({})", self.symbols[n as usize]),
            FlowVertex::Param(f, i) => format!("PARAM({}, {i})", fpos(f)),
            FlowVertex::Ret(f) => format!("RET({})", fpos(f)),
            FlowVertex::Arg(c, i) => format!("ARG({}, {i})", cpos(c)),
            FlowVertex::Res(c) => format!("RES({})", cpos(c)),
            FlowVertex::Exports(file) => format!("EXPORTS({})", self.files[file as usize]),
        }
    }
}

impl fmt::Display for FlowGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (from, succs) in self.succs.iter().enumerate() {
            for to in succs {
                writeln!(f, "{} -> {}", self.describe(from as VertexId), self.describe(*to))?;
            }
        }
        Ok(())
    }
}

/// Lexical scopes: every function body, the name binding of a named function
/// expression, and every catch clause. Scope 0 is the global scope, whose
/// bindings are properties.
struct Scope {
    parent: Option<ScopeId>,
    names: HashSet<Symbol>,
}

/// Resolves `require("...")` specifiers against the set of input files.
struct Modules {
    paths: HashMap<String, FileId>,
}

fn normalize_components(path: &str) -> String {
    let absolute = path.starts_with('/');
    let mut parts: Vec<&str> = Vec::new();
    for part in path.split('/') {
        match part {
            "" | "." => {}
            ".." => {
                if matches!(parts.last(), Some(p) if *p != "..") {
                    parts.pop();
                } else if !absolute {
                    parts.push("..");
                }
            }
            p => parts.push(p),
        }
    }
    let joined = parts.join("/");
    if absolute {
        format!("/{joined}")
    } else {
        joined
    }
}

impl Modules {
    fn new(files: &[String]) -> Self {
        let paths = files
            .iter()
            .enumerate()
            .map(|(i, p)| (normalize_components(&p.replace('\\', "/")), i as FileId))
            .collect();
        Modules { paths }
    }

    fn resolve(&self, from: &str, spec: &str) -> Option<FileId> {
        if !(spec.starts_with("./") || spec.starts_with("../") || spec.starts_with('/')) {
            return None;
        }
        let from = from.replace('\\', "/");
        let dir = match from.rfind('/') {
            Some(i) => &from[..i],
            None => "",
        };
        let joined = if spec.starts_with('/') || dir.is_empty() {
            spec.to_string()
        } else {
            format!("{dir}/{spec}")
        };
        let base = normalize_components(&joined);
        [base.clone(), format!("{base}.js"), format!("{base}/index.js")]
            .iter()
            .find_map(|candidate| self.paths.get(candidate).copied())
    }
}

/// Values an expression may evaluate to. Call results are materialized as
/// vertices only when something consumes them.
#[derive(Clone, Copy)]
enum Val {
    Vertex(VertexId),
    Result(CallId),
}

type Vals = Vec<Val>;

struct Builder<'g> {
    g: &'g mut FlowGraph,
    scopes: Vec<Scope>,
    modules: Modules,
    file: FileId,
    path: String,
    func_ids: HashMap<Pos, FuncId>,
    scope: ScopeId,
    current: Option<FuncId>,
}

/// Names declared by `var` and function declarations directly in a body,
/// not descending into nested functions.
fn hoisted_names(stmts: &[Stmt], out: &mut Vec<String>) {
    for s in stmts {
        hoisted_in(s, out);
    }
}

fn hoisted_in(stmt: &Stmt, out: &mut Vec<String>) {
    match stmt {
        Stmt::Var(decls) => out.extend(decls.iter().map(|d| d.name.clone())),
        Stmt::Function(f) => out.extend(f.name.clone()),
        Stmt::If {
            consequent,
            alternate,
            ..
        } => {
            hoisted_in(consequent, out);
            if let Some(a) = alternate {
                hoisted_in(a, out);
            }
        }
        Stmt::For { init, body, .. } => {
            if let Some(ForInit::Var(decls)) = init {
                out.extend(decls.iter().map(|d| d.name.clone()));
            }
            hoisted_in(body, out);
        }
        Stmt::ForIn { left, body, .. } => {
            if let ForInTarget::Var(d) = left {
                out.push(d.name.clone());
            }
            hoisted_in(body, out);
        }
        Stmt::While { body, .. } | Stmt::DoWhile { body, .. } | Stmt::Labeled { body, .. } => {
            hoisted_in(body, out)
        }
        Stmt::Block(stmts) => hoisted_names(stmts, out),
        Stmt::Switch { cases, .. } => cases.iter().for_each(|c| hoisted_names(&c.body, out)),
        Stmt::Try {
            block,
            handler,
            finalizer,
        } => {
            hoisted_names(block, out);
            if let Some(h) = handler {
                hoisted_names(&h.body, out);
            }
            if let Some(fin) = finalizer {
                hoisted_names(fin, out);
            }
        }
        Stmt::Expr(_)
        | Stmt::Return(_)
        | Stmt::Break(_)
        | Stmt::Continue(_)
        | Stmt::Throw(_)
        | Stmt::Empty
        | Stmt::Debugger => {}
    }
}

impl Builder<'_> {
    fn new_scope(&mut self, parent: ScopeId, names: &[String]) -> ScopeId {
        let names = names.iter().map(|n| self.g.sym(n)).collect();
        self.scopes.push(Scope {
            parent: Some(parent),
            names,
        });
        (self.scopes.len() - 1) as ScopeId
    }

    fn is_unresolved(&self, name: &str) -> bool {
        let Some(sym) = self.g.symbol(name) else {
            return true;
        };
        self.declaring_scope(sym).is_none()
    }

    fn declaring_scope(&self, sym: Symbol) -> Option<ScopeId> {
        let mut s = self.scope;
        while s != GLOBAL_SCOPE {
            let scope = &self.scopes[s as usize];
            if scope.names.contains(&sym) {
                return Some(s);
            }
            s = scope.parent.unwrap_or(GLOBAL_SCOPE);
        }
        None
    }

    fn ident_vertex(&mut self, name: &str) -> VertexId {
        let sym = self.g.sym(name);
        match self.declaring_scope(sym) {
            Some(s) => self.g.intern(FlowVertex::Var(s, sym)),
            None if name == "exports" => self.g.intern(FlowVertex::Exports(self.file)),
            None => self.g.intern(FlowVertex::Prop(sym)),
        }
    }

    fn prop_vertex(&mut self, name: &str) -> VertexId {
        let sym = self.g.sym(name);
        self.g.intern(FlowVertex::Prop(sym))
    }

    fn materialize(&mut self, v: Val) -> VertexId {
        match v {
            Val::Vertex(id) => id,
            Val::Result(c) => {
                if let Some(r) = self.g.calls[c as usize].result {
                    return r;
                }
                let r = self.g.intern(FlowVertex::Res(c));
                self.g.calls[c as usize].result = Some(r);
                r
            }
        }
    }

    fn flow(&mut self, vals: &[Val], to: VertexId) {
        for v in vals {
            let from = self.materialize(*v);
            self.g.add_edge(from, to);
        }
    }

    fn stmts(&mut self, stmts: &[Stmt]) {
        for s in stmts {
            self.stmt(s);
        }
    }

    fn var_decl(&mut self, d: &ast::VarDecl) {
        let target = self.ident_vertex(&d.name);
        if let Some(init) = &d.init {
            let vals = self.expr(init);
            self.flow(&vals, target);
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match s {
            Stmt::Var(decls) => decls.iter().for_each(|d| self.var_decl(d)),
            Stmt::Function(f) => {
                let fid = self.function(f, false);
                let fun = self.g.fun(fid);
                let name = f.name.as_deref().expect("declarations are named");
                let target = self.ident_vertex(name);
                self.g.add_edge(fun, target);
            }
            Stmt::Expr(e) | Stmt::Throw(e) => {
                self.expr(e);
            }
            Stmt::Return(e) => {
                let Some(e) = e else { return };
                let vals = self.expr(e);
                if let Some(fid) = self.current {
                    if !vals.is_empty() {
                        let ret = self.ret_vertex(fid);
                        self.flow(&vals, ret);
                    }
                }
            }
            Stmt::If {
                test,
                consequent,
                alternate,
            } => {
                self.expr(test);
                self.stmt(consequent);
                if let Some(a) = alternate {
                    self.stmt(a);
                }
            }
            Stmt::For {
                init,
                test,
                update,
                body,
            } => {
                match init {
                    Some(ForInit::Var(decls)) => decls.iter().for_each(|d| self.var_decl(d)),
                    Some(ForInit::Expr(e)) => {
                        self.expr(e);
                    }
                    None => {}
                }
                for e in [test, update].into_iter().flatten() {
                    self.expr(e);
                }
                self.stmt(body);
            }
            Stmt::ForIn { left, right, body } => {
                match left {
                    ForInTarget::Var(d) => self.var_decl(d),
                    ForInTarget::Expr(e) => {
                        self.expr(e);
                    }
                }
                self.expr(right);
                self.stmt(body);
            }
            Stmt::While { test, body } | Stmt::DoWhile { body, test } => {
                self.expr(test);
                self.stmt(body);
            }
            Stmt::Block(stmts) => self.stmts(stmts),
            Stmt::Switch {
                discriminant,
                cases,
            } => {
                self.expr(discriminant);
                for case in cases {
                    if let Some(t) = &case.test {
                        self.expr(t);
                    }
                    self.stmts(&case.body);
                }
            }
            Stmt::Try {
                block,
                handler,
                finalizer,
            } => {
                self.stmts(block);
                if let Some(h) = handler {
                    let saved = self.scope;
                    self.scope = self.new_scope(saved, std::slice::from_ref(&h.param));
                    self.stmts(&h.body);
                    self.scope = saved;
                }
                if let Some(fin) = finalizer {
                    self.stmts(fin);
                }
            }
            Stmt::Labeled { body, .. } => self.stmt(body),
            Stmt::Break(_) | Stmt::Continue(_) | Stmt::Empty | Stmt::Debugger => {}
        }
    }

    fn ret_vertex(&mut self, fid: FuncId) -> VertexId {
        if let Some(r) = self.g.functions[fid as usize].ret {
            return r;
        }
        let r = self.g.intern(FlowVertex::Ret(fid));
        self.g.functions[fid as usize].ret = Some(r);
        r
    }

    fn function(&mut self, f: &Function, is_expression: bool) -> FuncId {
        let fid = self.func_ids[&f.start];
        let fun = self.g.intern(FlowVertex::Fun(fid));
        let saved_scope = self.scope;
        let saved_fn = self.current;
        let mut parent = self.scope;
        if is_expression {
            if let Some(name) = &f.name {
                parent = self.new_scope(parent, std::slice::from_ref(name));
                let sym = self.g.sym(name);
                let binding = self.g.intern(FlowVertex::Var(parent, sym));
                self.g.add_edge(fun, binding);
            }
        }
        let mut names = f.params.clone();
        hoisted_names(&f.body, &mut names);
        let scope = self.new_scope(parent, &names);
        self.scope = scope;
        self.current = Some(fid);
        let mut params = Vec::with_capacity(f.params.len());
        for (i, p) in f.params.iter().enumerate() {
            let param = self.g.intern(FlowVertex::Param(fid, i as u32));
            let local = self.ident_vertex(p);
            self.g.add_edge(param, local);
            params.push(param);
        }
        self.g.functions[fid as usize].params = params;
        self.stmts(&f.body);
        self.scope = saved_scope;
        self.current = saved_fn;
        fid
    }

    /// The `require("m")` form resolving to an input file.
    fn required_module(&mut self, callee: &Expr, args: &[Expr]) -> Option<FileId> {
        match (&callee.kind, args) {
            (ExprKind::Ident(name), [arg]) if name == "require" && self.is_unresolved("require") => {
                match &arg.kind {
                    ExprKind::Str(spec) => self.modules.resolve(&self.path, spec),
                    _ => None,
                }
            }
            _ => None,
        }
    }

    fn is_module_exports(&self, object: &Expr, property: &str) -> bool {
        property == "exports"
            && matches!(&object.kind, ExprKind::Ident(n) if n == "module")
            && self.is_unresolved("module")
    }

    fn call(&mut self, e: &Expr, callee: &Expr, args: &[Expr], is_new: bool) -> Vals {
        if !is_new {
            if let Some(file) = self.required_module(callee, args) {
                return vec![Val::Vertex(self.g.intern(FlowVertex::Exports(file)))];
            }
        }
        let cid = self.g.calls.len() as CallId;
        self.g.calls.push(CallRecord {
            position: SourcePosition::new(self.path.clone(), e.pos.line, e.pos.column),
            enclosing: self.current,
            callees: Vec::new(),
            args: Vec::new(),
            result: None,
            one_shot: None,
            is_new,
        });
        let one_shot = match (&callee.kind, is_new) {
            (ExprKind::Function(f), false) => Some(self.func_ids[&f.start]),
            _ => None,
        };
        let callee_vals = self.expr(callee);
        let callees: Vec<VertexId> = callee_vals.iter().map(|v| self.materialize(*v)).collect();
        let mut arg_vertices = Vec::with_capacity(args.len());
        for (i, a) in args.iter().enumerate() {
            let vals = self.expr(a);
            if vals.is_empty() {
                arg_vertices.push(None);
            } else {
                let arg = self.g.intern(FlowVertex::Arg(cid, i as u32));
                self.flow(&vals, arg);
                arg_vertices.push(Some(arg));
            }
        }
        let record = &mut self.g.calls[cid as usize];
        record.callees = callees;
        record.args = arg_vertices;
        record.one_shot = one_shot;
        vec![Val::Result(cid)]
    }

    fn assignment_target(&mut self, target: &Expr) -> Option<VertexId> {
        match &target.kind {
            ExprKind::Ident(name) => Some(self.ident_vertex(name)),
            ExprKind::Member { object, property } => {
                if self.is_module_exports(object, property) {
                    return Some(self.g.intern(FlowVertex::Exports(self.file)));
                }
                self.expr(object);
                Some(self.prop_vertex(property))
            }
            _ => {
                self.expr(target);
                None
            }
        }
    }

    fn expr(&mut self, e: &Expr) -> Vals {
        match &e.kind {
            ExprKind::Ident(name) => vec![Val::Vertex(self.ident_vertex(name))],
            ExprKind::This
            | ExprKind::Null
            | ExprKind::Bool(_)
            | ExprKind::Num(_)
            | ExprKind::Str(_)
            | ExprKind::Regex { .. } => Vec::new(),
            ExprKind::Array(items) => {
                for item in items.iter().flatten() {
                    self.expr(item);
                }
                Vec::new()
            }
            ExprKind::Object(props) => {
                for p in props {
                    let vals = self.expr(&p.value);
                    if !vals.is_empty() {
                        let target = self.prop_vertex(&p.key);
                        self.flow(&vals, target);
                    }
                }
                Vec::new()
            }
            ExprKind::Function(f) => {
                let fid = self.function(f, true);
                vec![Val::Vertex(self.g.fun(fid))]
            }
            ExprKind::Member { object, property } => {
                if self.is_module_exports(object, property) {
                    return vec![Val::Vertex(self.g.intern(FlowVertex::Exports(self.file)))];
                }
                self.expr(object);
                vec![Val::Vertex(self.prop_vertex(property))]
            }
            ExprKind::Index { object, index } => {
                self.expr(object);
                self.expr(index);
                Vec::new()
            }
            ExprKind::Call { callee, args } => self.call(e, callee, args, false),
            ExprKind::New { callee, args } => self.call(e, callee, args, true),
            ExprKind::Assign { op, target, value } => {
                if op != "=" {
                    self.expr(target);
                    self.expr(value);
                    return Vec::new();
                }
                let target = self.assignment_target(target);
                let vals = self.expr(value);
                if let Some(t) = target {
                    self.flow(&vals, t);
                }
                vals
            }
            ExprKind::Unary { arg, .. } | ExprKind::Update { arg, .. } => {
                self.expr(arg);
                Vec::new()
            }
            ExprKind::Binary { left, right, .. } => {
                self.expr(left);
                self.expr(right);
                Vec::new()
            }
            ExprKind::Logical { left, right, .. } => {
                let mut vals = self.expr(left);
                vals.extend(self.expr(right));
                vals
            }
            ExprKind::Conditional {
                test,
                consequent,
                alternate,
            } => {
                self.expr(test);
                let mut vals = self.expr(consequent);
                vals.extend(self.expr(alternate));
                vals
            }
            ExprKind::Sequence(items) => {
                let mut last = Vec::new();
                for item in items {
                    last = self.expr(item);
                }
                last
            }
        }
    }
}

/// Builds one flow graph over all programs; they share the global scope and
/// the property namespace.
pub fn build_flow_graph(programs: &[&Program]) -> FlowGraph {
    let mut g = FlowGraph {
        files: programs.iter().map(|p| p.path.clone()).collect(),
        ..FlowGraph::default()
    };
    let mut func_ids = Vec::with_capacity(programs.len());
    for p in programs {
        let mut ids = HashMap::new();
        for info in enumerate_functions(p, &p.path) {
            let fid = g.functions.len() as FuncId;
            g.functions.push(FunctionRecord {
                position: info.position.clone(),
                label: info.name.clone().unwrap_or_else(|| ANONYMOUS.to_string()),
                params: Vec::new(),
                ret: None,
            });
            ids.insert(info.function.start, fid);
        }
        func_ids.push(ids);
    }
    let modules = Modules::new(&g.files);
    let mut builder = Builder {
        g: &mut g,
        scopes: vec![Scope {
            parent: None,
            names: HashSet::new(),
        }],
        modules,
        file: 0,
        path: String::new(),
        func_ids: HashMap::new(),
        scope: GLOBAL_SCOPE,
        current: None,
    };
    for (i, (p, ids)) in programs.iter().zip(func_ids).enumerate() {
        builder.file = i as FileId;
        builder.path = p.path.clone();
        builder.func_ids = ids;
        builder.scope = GLOBAL_SCOPE;
        builder.current = None;
        builder.stmts(&p.body);
    }
    g
}
