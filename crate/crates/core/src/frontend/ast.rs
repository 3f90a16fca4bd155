//! Positioned syntax tree for the supported ECMAScript 5 subset.

/// 1-based line and column of a token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pos {
    pub line: u32,
    pub column: u32,
}

impl Pos {
    pub fn new(line: u32, column: u32) -> Self {
        Pos { line, column }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub path: String,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarDecl {
    pub name: String,
    pub init: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ForInit {
    Var(Vec<VarDecl>),
    Expr(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ForInTarget {
    Var(VarDecl),
    Expr(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchCase {
    pub test: Option<Expr>,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatchClause {
    pub param: String,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Var(Vec<VarDecl>),
    Function(Function),
    Expr(Expr),
    Return(Option<Expr>),
    If {
        test: Expr,
        consequent: Box<Stmt>,
        alternate: Option<Box<Stmt>>,
    },
    For {
        init: Option<ForInit>,
        test: Option<Expr>,
        update: Option<Expr>,
        body: Box<Stmt>,
    },
    ForIn {
        left: ForInTarget,
        right: Expr,
        body: Box<Stmt>,
    },
    While {
        test: Expr,
        body: Box<Stmt>,
    },
    DoWhile {
        body: Box<Stmt>,
        test: Expr,
    },
    Block(Vec<Stmt>),
    Switch {
        discriminant: Expr,
        cases: Vec<SwitchCase>,
    },
    Break(Option<String>),
    Continue(Option<String>),
    Try {
        block: Vec<Stmt>,
        handler: Option<CatchClause>,
        finalizer: Option<Vec<Stmt>>,
    },
    Throw(Expr),
    Labeled {
        label: String,
        body: Box<Stmt>,
    },
    Empty,
    Debugger,
}

/// A function declaration or expression. `start` is the position of the
/// `function` keyword, `end` the position just past the closing brace.
#[derive(Debug, Clone, PartialEq)]
pub struct Function {
    pub name: Option<String>,
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
    pub start: Pos,
    pub end: Pos,
}

impl Function {
    pub fn contains(&self, pos: Pos) -> bool {
        self.start <= pos && pos < self.end
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Property {
    pub key: String,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Ident(String),
    This,
    Null,
    Bool(bool),
    Num(f64),
    Str(String),
    Regex {
        pattern: String,
        flags: String,
    },
    Array(Vec<Option<Expr>>),
    Object(Vec<Property>),
    Function(Box<Function>),
    Member {
        object: Box<Expr>,
        property: String,
    },
    Index {
        object: Box<Expr>,
        index: Box<Expr>,
    },
    Call {
        callee: Box<Expr>,
        args: Vec<Expr>,
    },
    New {
        callee: Box<Expr>,
        args: Vec<Expr>,
    },
    Assign {
        op: String,
        target: Box<Expr>,
        value: Box<Expr>,
    },
    Unary {
        op: String,
        arg: Box<Expr>,
    },
    Update {
        op: String,
        prefix: bool,
        arg: Box<Expr>,
    },
    Binary {
        op: String,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    Logical {
        op: String,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    Conditional {
        test: Box<Expr>,
        consequent: Box<Expr>,
        alternate: Box<Expr>,
    },
    Sequence(Vec<Expr>),
}

impl Expr {
    pub fn new(kind: ExprKind, pos: Pos) -> Self {
        Expr { kind, pos }
    }

    /// Parentheses are not kept in the tree, so `(function(){})` is still a
    /// function expression here.
    pub fn as_function(&self) -> Option<&Function> {
        match &self.kind {
            ExprKind::Function(f) => Some(f),
            _ => None,
        }
    }
}

/// Pre-order traversal over every expression and statement, used by the
/// enumerators and the extractor.
pub trait Visitor<'a> {
    fn enter_function(&mut self, _func: &'a Function) {}
    fn exit_function(&mut self, _func: &'a Function) {}
    fn visit_expr(&mut self, _expr: &'a Expr) {}
}

pub fn walk_program<'a, V: Visitor<'a>>(program: &'a Program, v: &mut V) {
    walk_stmts(&program.body, v);
}

pub fn walk_stmts<'a, V: Visitor<'a>>(stmts: &'a [Stmt], v: &mut V) {
    for s in stmts {
        walk_stmt(s, v);
    }
}

pub fn walk_function<'a, V: Visitor<'a>>(func: &'a Function, v: &mut V) {
    v.enter_function(func);
    walk_stmts(&func.body, v);
    v.exit_function(func);
}

fn walk_var<'a, V: Visitor<'a>>(decl: &'a VarDecl, v: &mut V) {
    if let Some(init) = &decl.init {
        walk_expr(init, v);
    }
}

pub fn walk_stmt<'a, V: Visitor<'a>>(stmt: &'a Stmt, v: &mut V) {
    match stmt {
        Stmt::Var(decls) => decls.iter().for_each(|d| walk_var(d, v)),
        Stmt::Function(f) => walk_function(f, v),
        Stmt::Expr(e) | Stmt::Throw(e) => walk_expr(e, v),
        Stmt::Return(e) => {
            if let Some(e) = e {
                walk_expr(e, v)
            }
        }
        Stmt::If {
            test,
            consequent,
            alternate,
        } => {
            walk_expr(test, v);
            walk_stmt(consequent, v);
            if let Some(alt) = alternate {
                walk_stmt(alt, v);
            }
        }
        Stmt::For {
            init,
            test,
            update,
            body,
        } => {
            match init {
                Some(ForInit::Var(decls)) => decls.iter().for_each(|d| walk_var(d, v)),
                Some(ForInit::Expr(e)) => walk_expr(e, v),
                None => {}
            }
            for e in [test, update].into_iter().flatten() {
                walk_expr(e, v);
            }
            walk_stmt(body, v);
        }
        Stmt::ForIn { left, right, body } => {
            match left {
                ForInTarget::Var(d) => walk_var(d, v),
                ForInTarget::Expr(e) => walk_expr(e, v),
            }
            walk_expr(right, v);
            walk_stmt(body, v);
        }
        Stmt::While { test, body } => {
            walk_expr(test, v);
            walk_stmt(body, v);
        }
        Stmt::DoWhile { body, test } => {
            walk_stmt(body, v);
            walk_expr(test, v);
        }
        Stmt::Block(stmts) => walk_stmts(stmts, v),
        Stmt::Switch {
            discriminant,
            cases,
        } => {
            walk_expr(discriminant, v);
            for case in cases {
                if let Some(t) = &case.test {
                    walk_expr(t, v);
                }
                walk_stmts(&case.body, v);
            }
        }
        Stmt::Try {
            block,
            handler,
            finalizer,
        } => {
            walk_stmts(block, v);
            if let Some(h) = handler {
                walk_stmts(&h.body, v);
            }
            if let Some(fin) = finalizer {
                walk_stmts(fin, v);
            }
        }
        Stmt::Labeled { body, .. } => walk_stmt(body, v),
        Stmt::Break(_) | Stmt::Continue(_) | Stmt::Empty | Stmt::Debugger => {}
    }
}

pub fn walk_expr<'a, V: Visitor<'a>>(expr: &'a Expr, v: &mut V) {
    v.visit_expr(expr);
    match &expr.kind {
        ExprKind::Ident(_)
        | ExprKind::This
        | ExprKind::Null
        | ExprKind::Bool(_)
        | ExprKind::Num(_)
        | ExprKind::Str(_)
        | ExprKind::Regex { .. } => {}
        ExprKind::Array(items) => items.iter().flatten().for_each(|e| walk_expr(e, v)),
        ExprKind::Object(props) => props.iter().for_each(|p| walk_expr(&p.value, v)),
        ExprKind::Function(f) => walk_function(f, v),
        ExprKind::Member { object, .. } => walk_expr(object, v),
        ExprKind::Index { object, index } => {
            walk_expr(object, v);
            walk_expr(index, v);
        }
        ExprKind::Call { callee, args } | ExprKind::New { callee, args } => {
            walk_expr(callee, v);
            args.iter().for_each(|a| walk_expr(a, v));
        }
        ExprKind::Assign { target, value, .. } => {
            walk_expr(target, v);
            walk_expr(value, v);
        }
        ExprKind::Unary { arg, .. } | ExprKind::Update { arg, .. } => walk_expr(arg, v),
        ExprKind::Binary { left, right, .. } | ExprKind::Logical { left, right, .. } => {
            walk_expr(left, v);
            walk_expr(right, v);
        }
        ExprKind::Conditional {
            test,
            consequent,
            alternate,
        } => {
            walk_expr(test, v);
            walk_expr(consequent, v);
            walk_expr(alternate, v);
        }
        ExprKind::Sequence(items) => items.iter().for_each(|e| walk_expr(e, v)),
    }
}
