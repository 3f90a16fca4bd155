//! JavaScript front end: parsing, function and call-site enumeration, and
//! loading of ESTree interchange documents produced by external parsers.

pub mod ast;
mod estree;
mod lexer;
mod parser;

use crate::model::{SourcePosition, ANONYMOUS};
use ast::{Expr, ExprKind, Function, Pos, Program, Visitor};
use std::fmt;

pub use estree::{load_ast_document, to_estree};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FrontendError {
    #[error("{file}:{pos}: parse error: {message}")]
    Parse {
        file: String,
        pos: Pos,
        message: String,
    },
    #[error("{file}:{pos}: unsupported construct: {construct}")]
    Unsupported {
        file: String,
        pos: Pos,
        construct: String,
    },
    #[error("{file}: malformed AST document: {message}")]
    MalformedDocument { file: String, message: String },
    #[error("{file}: AST document lacks location data on a {kind} node")]
    MissingLocations { file: String, kind: String },
}

impl FrontendError {
    pub fn code(&self) -> &'static str {
        match self {
            FrontendError::Parse { .. } => "PARSE_ERROR",
            FrontendError::Unsupported { .. } => "UNSUPPORTED_CONSTRUCT",
            FrontendError::MalformedDocument { .. } => "MALFORMED_DOCUMENT",
            FrontendError::MissingLocations { .. } => "MISSING_LOCATIONS",
        }
    }

    pub fn file(&self) -> &str {
        match self {
            FrontendError::Parse { file, .. }
            | FrontendError::Unsupported { file, .. }
            | FrontendError::MalformedDocument { file, .. }
            | FrontendError::MissingLocations { file, .. } => file,
        }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

pub fn parse_program(source: &str, path: &str) -> Result<Program, FrontendError> {
    parser::Parser::new(source, path)?.parse_program()
}

#[derive(Debug, Clone)]
pub struct FunctionInfo<'a> {
    pub position: SourcePosition,
    pub name: Option<String>,
    pub params: Vec<String>,
    /// Index of the lexically enclosing function in the same list; `None`
    /// for functions defined in the global scope.
    pub enclosing: Option<usize>,
    pub function: &'a Function,
}

impl FunctionInfo<'_> {
    pub fn label(&self) -> &str {
        self.name.as_deref().unwrap_or(ANONYMOUS)
    }
}

#[derive(Debug, Clone)]
pub struct CallSiteInfo<'a> {
    pub position: SourcePosition,
    pub callee: &'a Expr,
    pub args: &'a [Expr],
    /// Index into [`enumerate_functions`]' result; `None` is the global scope.
    pub enclosing: Option<usize>,
    pub is_new: bool,
    /// The callee is a function expression invoked where it is defined.
    pub one_shot: bool,
}

fn position(path: &str, pos: Pos) -> SourcePosition {
    SourcePosition::new(path, pos.line, pos.column)
}

/// Single pre-order pass collecting functions and call sites together, so
/// that call-site `enclosing` indices line up with the function list.
struct Collector<'a, 'p> {
    path: &'p str,
    stack: Vec<usize>,
    functions: Vec<FunctionInfo<'a>>,
    calls: Vec<CallSiteInfo<'a>>,
}

impl<'a> Visitor<'a> for Collector<'a, '_> {
    fn enter_function(&mut self, func: &'a Function) {
        let idx = self.functions.len();
        self.functions.push(FunctionInfo {
            position: position(self.path, func.start),
            name: func.name.clone(),
            params: func.params.clone(),
            enclosing: self.stack.last().copied(),
            function: func,
        });
        self.stack.push(idx);
    }

    fn exit_function(&mut self, _func: &'a Function) {
        self.stack.pop();
    }

    fn visit_expr(&mut self, expr: &'a Expr) {
        let (callee, args, is_new) = match &expr.kind {
            ExprKind::Call { callee, args } => (callee, args, false),
            ExprKind::New { callee, args } => (callee, args, true),
            _ => return,
        };
        self.calls.push(CallSiteInfo {
            position: position(self.path, expr.pos),
            callee,
            args,
            enclosing: self.stack.last().copied(),
            is_new,
            one_shot: !is_new && callee.as_function().is_some(),
        });
    }
}

fn collect<'a, 'p>(program: &'a Program, path: &'p str) -> Collector<'a, 'p> {
    let mut c = Collector {
        path,
        stack: Vec::new(),
        functions: Vec::new(),
        calls: Vec::new(),
    };
    ast::walk_program(program, &mut c);
    c
}

/// One entry per function declaration or expression, in source order,
/// with links to the lexically enclosing function.
pub fn enumerate_functions<'a>(program: &'a Program, path: &str) -> Vec<FunctionInfo<'a>> {
    collect(program, path).functions
}

/// One entry per call or `new` expression. `enclosing` indexes into the
/// list returned by [`enumerate_functions`] for the same program.
pub fn enumerate_call_sites<'a>(program: &'a Program, path: &str) -> Vec<CallSiteInfo<'a>> {
    collect(program, path).calls
}
