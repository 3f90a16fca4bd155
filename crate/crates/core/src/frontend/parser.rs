//! Recursive-descent parser for the ECMAScript 5 subset.
//!
//! Every expression node is positioned at its first token, including an
//! opening parenthesis when the node's leftmost operand is parenthesized.
//! Semicolons may be omitted before `}`, at end of input and after a line
//! break; `return`, `break`, `continue` and postfix `++`/`--` honor the
//! no-line-break restriction.

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::FrontendError;

const RESERVED: &[&str] = &[
    "break", "case", "catch", "continue", "debugger", "default", "delete", "do", "else", "finally",
    "for", "function", "if", "in", "instanceof", "new", "return", "switch", "this", "throw", "try",
    "typeof", "var", "void", "while", "with", "null", "true", "false", "class", "const", "enum",
    "export", "extends", "import", "super",
];

const ASSIGN_OPS: &[&str] = &[
    "=", "+=", "-=", "*=", "/=", "%=", "<<=", ">>=", ">>>=", "&=", "|=", "^=",
];

fn binary_precedence(tok: &Tok, no_in: bool) -> Option<(u8, &'static str)> {
    let op: &'static str = match tok {
        Tok::Punct(p) => p,
        Tok::Ident(name) if name == "instanceof" => "instanceof",
        Tok::Ident(name) if name == "in" && !no_in => "in",
        _ => return None,
    };
    let prec = match op {
        "||" => 1,
        "&&" => 2,
        "|" => 3,
        "^" => 4,
        "&" => 5,
        "==" | "!=" | "===" | "!==" => 6,
        "<" | ">" | "<=" | ">=" | "instanceof" | "in" => 7,
        "<<" | ">>" | ">>>" => 8,
        "+" | "-" => 9,
        "*" | "/" | "%" | "**" => 10,
        _ => return None,
    };
    Some((prec, op))
}

/// Renders a numeric property key the way JavaScript would stringify it.
pub(crate) fn number_key(value: f64) -> String {
    if value.fract() == 0.0 && value.abs() < 1e21 {
        format!("{}", value as i64)
    } else {
        format!("{value}")
    }
}

pub struct Parser<'a> {
    file: &'a str,
    toks: Vec<Token>,
    i: usize,
    function_depth: usize,
}

type PResult<T> = Result<T, FrontendError>;

impl<'a> Parser<'a> {
    pub fn new(source: &str, file: &'a str) -> PResult<Self> {
        Ok(Parser {
            file,
            toks: tokenize(source, file)?,
            i: 0,
            function_depth: 0,
        })
    }

    pub fn parse_program(mut self) -> PResult<Program> {
        let mut body = Vec::new();
        while !self.at_eof() {
            body.push(self.statement()?);
        }
        Ok(Program {
            path: self.file.to_string(),
            body,
        })
    }

    fn peek(&self) -> &Token {
        &self.toks[self.i]
    }

    fn peek_at(&self, k: usize) -> &Token {
        let idx = (self.i + k).min(self.toks.len() - 1);
        &self.toks[idx]
    }

    fn pos(&self) -> Pos {
        self.peek().pos
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn at_eof(&self) -> bool {
        self.peek().tok == Tok::Eof
    }

    fn at(&self, p: &str) -> bool {
        matches!(&self.peek().tok, Tok::Punct(q) if *q == p)
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(name) if name == kw)
    }

    fn eat(&mut self, p: &str) -> bool {
        if self.at(p) {
            self.next();
            true
        } else {
            false
        }
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Ident(n) => format!("`{n}`"),
            Tok::Num(v) => format!("number {v}"),
            Tok::Str(_) => "string literal".into(),
            Tok::Regex { .. } => "regular expression".into(),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn error_here(&self, message: impl Into<String>) -> FrontendError {
        FrontendError::Parse {
            file: self.file.to_string(),
            pos: self.pos(),
            message: message.into(),
        }
    }

    fn unexpected(&self) -> FrontendError {
        self.error_here(format!("unexpected {}", Self::describe(&self.peek().tok)))
    }

    fn unsupported(&self, pos: Pos, construct: &str) -> FrontendError {
        FrontendError::Unsupported {
            file: self.file.to_string(),
            pos,
            construct: construct.to_string(),
        }
    }

    fn expect(&mut self, p: &str) -> PResult<Token> {
        if self.at(p) {
            Ok(self.next())
        } else {
            Err(self.error_here(format!(
                "expected `{p}`, found {}",
                Self::describe(&self.peek().tok)
            )))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.at_kw(kw) {
            self.next();
            Ok(())
        } else {
            Err(self.error_here(format!(
                "expected `{kw}`, found {}",
                Self::describe(&self.peek().tok)
            )))
        }
    }

    fn binding_identifier(&mut self) -> PResult<String> {
        match &self.peek().tok {
            Tok::Ident(name) if !RESERVED.contains(&name.as_str()) => {
                let name = name.clone();
                self.next();
                Ok(name)
            }
            other => Err(self.error_here(format!(
                "expected identifier, found {}",
                Self::describe(other)
            ))),
        }
    }

    /// IdentifierName after `.`: reserved words are allowed.
    fn identifier_name(&mut self) -> PResult<String> {
        match &self.peek().tok {
            Tok::Ident(name) => {
                let name = name.clone();
                self.next();
                Ok(name)
            }
            other => Err(self.error_here(format!(
                "expected property name, found {}",
                Self::describe(other)
            ))),
        }
    }

    fn consume_semicolon(&mut self) -> PResult<()> {
        if self.eat(";") {
            return Ok(());
        }
        if self.at("}") || self.at_eof() || self.peek().newline_before {
            return Ok(());
        }
        Err(self.error_here(format!(
            "expected `;`, found {}",
            Self::describe(&self.peek().tok)
        )))
    }

    fn statement(&mut self) -> PResult<Stmt> {
        let pos = self.pos();
        let tok = self.peek().tok.clone();
        match &tok {
            Tok::Punct("{") => Ok(Stmt::Block(self.block()?)),
            Tok::Punct(";") => {
                self.next();
                Ok(Stmt::Empty)
            }
            Tok::Ident(kw) => match kw.as_str() {
                "var" => {
                    self.next();
                    let decls = self.var_declarations(false)?;
                    self.consume_semicolon()?;
                    Ok(Stmt::Var(decls))
                }
                "const" => Err(self.unsupported(pos, "const declaration")),
                "let" if matches!(self.peek_at(1).tok, Tok::Ident(_) | Tok::Punct("[") | Tok::Punct("{")) => {
                    Err(self.unsupported(pos, "let declaration"))
                }
                "class" => Err(self.unsupported(pos, "class declaration")),
                "import" | "export" => Err(self.unsupported(pos, "module declaration")),
                "with" => Err(self.unsupported(pos, "with statement")),
                "function" => Ok(Stmt::Function(self.function(true)?)),
                "if" => self.if_statement(),
                "for" => self.for_statement(),
                "while" => {
                    self.next();
                    self.expect("(")?;
                    let test = self.expression(false)?;
                    self.expect(")")?;
                    let body = Box::new(self.statement()?);
                    Ok(Stmt::While { test, body })
                }
                "do" => {
                    self.next();
                    let body = Box::new(self.statement()?);
                    self.expect_kw("while")?;
                    self.expect("(")?;
                    let test = self.expression(false)?;
                    self.expect(")")?;
                    self.eat(";");
                    Ok(Stmt::DoWhile { body, test })
                }
                "return" => {
                    if self.function_depth == 0 {
                        return Err(self.error_here("`return` outside of a function"));
                    }
                    self.next();
                    let arg = if self.at(";") || self.at("}") || self.at_eof() || self.peek().newline_before {
                        None
                    } else {
                        Some(self.expression(false)?)
                    };
                    self.consume_semicolon()?;
                    Ok(Stmt::Return(arg))
                }
                "break" | "continue" => {
                    let is_break = kw == "break";
                    self.next();
                    let label = match &self.peek().tok {
                        Tok::Ident(l) if !self.peek().newline_before && !RESERVED.contains(&l.as_str()) => {
                            let l = l.clone();
                            self.next();
                            Some(l)
                        }
                        _ => None,
                    };
                    self.consume_semicolon()?;
                    Ok(if is_break {
                        Stmt::Break(label)
                    } else {
                        Stmt::Continue(label)
                    })
                }
                "throw" => {
                    self.next();
                    if self.peek().newline_before {
                        return Err(self.error_here("line break after `throw`"));
                    }
                    let arg = self.expression(false)?;
                    self.consume_semicolon()?;
                    Ok(Stmt::Throw(arg))
                }
                "try" => self.try_statement(),
                "switch" => self.switch_statement(),
                "debugger" => {
                    self.next();
                    self.consume_semicolon()?;
                    Ok(Stmt::Debugger)
                }
                name if !RESERVED.contains(&name) && self.peek_at(1).tok == Tok::Punct(":") => {
                    let label = name.to_string();
                    self.next();
                    self.next();
                    let body = Box::new(self.statement()?);
                    Ok(Stmt::Labeled { label, body })
                }
                _ => self.expression_statement(),
            },
            _ => self.expression_statement(),
        }
    }

    fn expression_statement(&mut self) -> PResult<Stmt> {
        let e = self.expression(false)?;
        self.consume_semicolon()?;
        Ok(Stmt::Expr(e))
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect("{")?;
        let mut body = Vec::new();
        while !self.at("}") {
            if self.at_eof() {
                return Err(self.error_here("expected `}`, found end of input"));
            }
            body.push(self.statement()?);
        }
        self.next();
        Ok(body)
    }

    fn var_declarations(&mut self, no_in: bool) -> PResult<Vec<VarDecl>> {
        let mut decls = Vec::new();
        loop {
            if self.at("{") || self.at("[") {
                return Err(self.unsupported(self.pos(), "destructuring pattern"));
            }
            let name = self.binding_identifier()?;
            let init = if self.eat("=") {
                Some(self.assignment(no_in)?)
            } else {
                None
            };
            decls.push(VarDecl { name, init });
            if !self.eat(",") {
                return Ok(decls);
            }
        }
    }

    fn if_statement(&mut self) -> PResult<Stmt> {
        self.next();
        self.expect("(")?;
        let test = self.expression(false)?;
        self.expect(")")?;
        let consequent = Box::new(self.statement()?);
        let alternate = if self.at_kw("else") {
            self.next();
            Some(Box::new(self.statement()?))
        } else {
            None
        };
        Ok(Stmt::If {
            test,
            consequent,
            alternate,
        })
    }

    fn for_statement(&mut self) -> PResult<Stmt> {
        let pos = self.pos();
        self.next();
        if self.at_kw("each") {
            return Err(self.unsupported(pos, "for each statement"));
        }
        self.expect("(")?;
        let init = if self.at(";") {
            None
        } else if self.at_kw("var") {
            self.next();
            let mut decls = self.var_declarations(true)?;
            if self.at_kw("in") && decls.len() == 1 && decls[0].init.is_none() {
                self.next();
                let right = self.expression(false)?;
                self.expect(")")?;
                let body = Box::new(self.statement()?);
                return Ok(Stmt::ForIn {
                    left: ForInTarget::Var(decls.remove(0)),
                    right,
                    body,
                });
            }
            if self.at_kw("of") {
                return Err(self.unsupported(pos, "for-of statement"));
            }
            Some(ForInit::Var(decls))
        } else if self.at_kw("let") || self.at_kw("const") {
            return Err(self.unsupported(self.pos(), "block-scoped declaration"));
        } else {
            let e = self.expression(true)?;
            if self.at_kw("in") {
                if !is_assignable(&e) {
                    return Err(self.error_here("invalid left-hand side in for-in"));
                }
                self.next();
                let right = self.expression(false)?;
                self.expect(")")?;
                let body = Box::new(self.statement()?);
                return Ok(Stmt::ForIn {
                    left: ForInTarget::Expr(e),
                    right,
                    body,
                });
            }
            if self.at_kw("of") {
                return Err(self.unsupported(pos, "for-of statement"));
            }
            Some(ForInit::Expr(e))
        };
        self.expect(";")?;
        let test = if self.at(";") {
            None
        } else {
            Some(self.expression(false)?)
        };
        self.expect(";")?;
        let update = if self.at(")") {
            None
        } else {
            Some(self.expression(false)?)
        };
        self.expect(")")?;
        let body = Box::new(self.statement()?);
        Ok(Stmt::For {
            init,
            test,
            update,
            body,
        })
    }

    fn try_statement(&mut self) -> PResult<Stmt> {
        self.next();
        let block = self.block()?;
        let handler = if self.at_kw("catch") {
            self.next();
            self.expect("(")?;
            let param = self.binding_identifier()?;
            self.expect(")")?;
            let body = self.block()?;
            Some(CatchClause { param, body })
        } else {
            None
        };
        let finalizer = if self.at_kw("finally") {
            self.next();
            Some(self.block()?)
        } else {
            None
        };
        if handler.is_none() && finalizer.is_none() {
            return Err(self.error_here("`try` without `catch` or `finally`"));
        }
        Ok(Stmt::Try {
            block,
            handler,
            finalizer,
        })
    }

    fn switch_statement(&mut self) -> PResult<Stmt> {
        self.next();
        self.expect("(")?;
        let discriminant = self.expression(false)?;
        self.expect(")")?;
        self.expect("{")?;
        let mut cases = Vec::new();
        let mut seen_default = false;
        while !self.eat("}") {
            let test = if self.at_kw("case") {
                self.next();
                Some(self.expression(false)?)
            } else if self.at_kw("default") {
                if seen_default {
                    return Err(self.error_here("multiple `default` clauses"));
                }
                seen_default = true;
                self.next();
                None
            } else {
                return Err(self.unexpected());
            };
            self.expect(":")?;
            let mut body = Vec::new();
            while !(self.at_kw("case") || self.at_kw("default") || self.at("}")) {
                if self.at_eof() {
                    return Err(self.error_here("expected `}`, found end of input"));
                }
                body.push(self.statement()?);
            }
            cases.push(SwitchCase { test, body });
        }
        Ok(Stmt::Switch {
            discriminant,
            cases,
        })
    }

    fn function(&mut self, is_declaration: bool) -> PResult<Function> {
        let start = self.pos();
        self.expect_kw("function")?;
        if self.at("*") {
            return Err(self.unsupported(start, "generator function"));
        }
        let name = if is_declaration || matches!(self.peek().tok, Tok::Ident(_)) {
            Some(self.binding_identifier()?)
        } else {
            None
        };
        self.expect("(")?;
        let mut params = Vec::new();
        if !self.at(")") {
            loop {
                if self.at("...") {
                    return Err(self.unsupported(self.pos(), "rest parameter"));
                }
                params.push(self.binding_identifier()?);
                if self.at("=") {
                    return Err(self.unsupported(self.pos(), "default parameter"));
                }
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        self.function_depth += 1;
        let body = self.block();
        self.function_depth -= 1;
        let body = body?;
        let end = self.toks[self.i - 1].end;
        Ok(Function {
            name,
            params,
            body,
            start,
            end,
        })
    }

    pub(crate) fn expression(&mut self, no_in: bool) -> PResult<Expr> {
        let start = self.pos();
        let first = self.assignment(no_in)?;
        if !self.at(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat(",") {
            items.push(self.assignment(no_in)?);
        }
        Ok(Expr::new(ExprKind::Sequence(items), start))
    }

    fn assignment(&mut self, no_in: bool) -> PResult<Expr> {
        let start = self.pos();
        if matches!(self.peek().tok, Tok::Ident(_)) && self.peek_at(1).tok == Tok::Punct("=>") {
            return Err(self.unsupported(start, "arrow function"));
        }
        let target = self.conditional(no_in)?;
        if self.at("=>") {
            return Err(self.unsupported(start, "arrow function"));
        }
        let op = match &self.peek().tok {
            Tok::Punct(p) if ASSIGN_OPS.contains(p) => *p,
            Tok::Punct("**=") => return Err(self.unsupported(self.pos(), "exponent operator")),
            _ => return Ok(target),
        };
        if !is_assignable(&target) {
            return Err(self.error_here("invalid assignment target"));
        }
        self.next();
        let value = self.assignment(no_in)?;
        Ok(Expr::new(
            ExprKind::Assign {
                op: op.to_string(),
                target: Box::new(target),
                value: Box::new(value),
            },
            start,
        ))
    }

    fn conditional(&mut self, no_in: bool) -> PResult<Expr> {
        let start = self.pos();
        let test = self.binary(0, no_in)?;
        if !self.eat("?") {
            return Ok(test);
        }
        let consequent = self.assignment(false)?;
        self.expect(":")?;
        let alternate = self.assignment(no_in)?;
        Ok(Expr::new(
            ExprKind::Conditional {
                test: Box::new(test),
                consequent: Box::new(consequent),
                alternate: Box::new(alternate),
            },
            start,
        ))
    }

    fn binary(&mut self, min_prec: u8, no_in: bool) -> PResult<Expr> {
        let start = self.pos();
        let mut left = self.unary()?;
        while let Some((prec, op)) = binary_precedence(&self.peek().tok, no_in) {
            if prec < min_prec {
                break;
            }
            if op == "**" {
                return Err(self.unsupported(self.pos(), "exponent operator"));
            }
            self.next();
            let right = self.binary(prec + 1, no_in)?;
            let kind = if op == "||" || op == "&&" {
                ExprKind::Logical {
                    op: op.to_string(),
                    left: Box::new(left),
                    right: Box::new(right),
                }
            } else {
                ExprKind::Binary {
                    op: op.to_string(),
                    left: Box::new(left),
                    right: Box::new(right),
                }
            };
            left = Expr::new(kind, start);
        }
        Ok(left)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let start = self.pos();
        let op = match &self.peek().tok {
            Tok::Punct(p @ ("!" | "~" | "+" | "-" | "++" | "--")) => Some(*p),
            Tok::Ident(k) if k == "typeof" => Some("typeof"),
            Tok::Ident(k) if k == "void" => Some("void"),
            Tok::Ident(k) if k == "delete" => Some("delete"),
            _ => None,
        };
        if let Some(op) = op {
            self.next();
            let arg = self.unary()?;
            if op == "++" || op == "--" {
                if !is_assignable(&arg) {
                    return Err(self.error_here("invalid update target"));
                }
                return Ok(Expr::new(
                    ExprKind::Update {
                        op: op.to_string(),
                        prefix: true,
                        arg: Box::new(arg),
                    },
                    start,
                ));
            }
            return Ok(Expr::new(
                ExprKind::Unary {
                    op: op.to_string(),
                    arg: Box::new(arg),
                },
                start,
            ));
        }
        let e = self.left_hand_side()?;
        if (self.at("++") || self.at("--")) && !self.peek().newline_before {
            if !is_assignable(&e) {
                return Err(self.error_here("invalid update target"));
            }
            let op = match self.next().tok {
                Tok::Punct(p) => p,
                _ => unreachable!(),
            };
            return Ok(Expr::new(
                ExprKind::Update {
                    op: op.to_string(),
                    prefix: false,
                    arg: Box::new(e),
                },
                start,
            ));
        }
        Ok(e)
    }

    fn arguments(&mut self) -> PResult<Vec<Expr>> {
        self.expect("(")?;
        let mut args = Vec::new();
        if self.eat(")") {
            return Ok(args);
        }
        loop {
            if self.at("...") {
                return Err(self.unsupported(self.pos(), "spread element"));
            }
            args.push(self.assignment(false)?);
            if self.eat(")") {
                return Ok(args);
            }
            self.expect(",")?;
        }
    }

    /// Member accesses following `start`; calls only when `allow_call`.
    fn member_tail(&mut self, mut e: Expr, start: Pos, allow_call: bool) -> PResult<Expr> {
        loop {
            if self.eat(".") {
                let property = self.identifier_name()?;
                e = Expr::new(
                    ExprKind::Member {
                        object: Box::new(e),
                        property,
                    },
                    start,
                );
            } else if self.eat("[") {
                let index = self.expression(false)?;
                self.expect("]")?;
                e = Expr::new(
                    ExprKind::Index {
                        object: Box::new(e),
                        index: Box::new(index),
                    },
                    start,
                );
            } else if allow_call && self.at("(") {
                let args = self.arguments()?;
                e = Expr::new(
                    ExprKind::Call {
                        callee: Box::new(e),
                        args,
                    },
                    start,
                );
            } else {
                return Ok(e);
            }
        }
    }

    fn new_expression(&mut self) -> PResult<Expr> {
        let start = self.pos();
        self.expect_kw("new")?;
        if self.at(".") {
            return Err(self.unsupported(start, "new.target"));
        }
        let callee_start = self.pos();
        let callee = if self.at_kw("new") {
            self.new_expression()?
        } else {
            let primary = self.primary()?;
            self.member_tail(primary, callee_start, false)?
        };
        let args = if self.at("(") {
            self.arguments()?
        } else {
            Vec::new()
        };
        Ok(Expr::new(
            ExprKind::New {
                callee: Box::new(callee),
                args,
            },
            start,
        ))
    }

    fn left_hand_side(&mut self) -> PResult<Expr> {
        let start = self.pos();
        let e = if self.at_kw("new") {
            self.new_expression()?
        } else {
            self.primary()?
        };
        self.member_tail(e, start, true)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let start = self.pos();
        let tok = self.peek().tok.clone();
        let kind = match tok {
            Tok::Ident(name) => match name.as_str() {
                "function" => {
                    let f = self.function(false)?;
                    return Ok(Expr::new(ExprKind::Function(Box::new(f)), start));
                }
                "this" => ExprKind::This,
                "null" => ExprKind::Null,
                "true" => ExprKind::Bool(true),
                "false" => ExprKind::Bool(false),
                "class" => return Err(self.unsupported(start, "class expression")),
                "super" => return Err(self.unsupported(start, "super")),
                n if RESERVED.contains(&n) => return Err(self.unexpected()),
                _ => ExprKind::Ident(name),
            },
            Tok::Num(v) => ExprKind::Num(v),
            Tok::Str(s) => ExprKind::Str(s),
            Tok::Regex { pattern, flags } => ExprKind::Regex { pattern, flags },
            Tok::Punct("(") => {
                self.next();
                if self.at(")") && self.peek_at(1).tok == Tok::Punct("=>") {
                    return Err(self.unsupported(start, "arrow function"));
                }
                let e = self.expression(false)?;
                self.expect(")")?;
                if self.at("=>") {
                    return Err(self.unsupported(start, "arrow function"));
                }
                return Ok(e);
            }
            Tok::Punct("[") => return self.array_literal(),
            Tok::Punct("{") => return self.object_literal(),
            _ => return Err(self.unexpected()),
        };
        self.next();
        Ok(Expr::new(kind, start))
    }

    fn array_literal(&mut self) -> PResult<Expr> {
        let start = self.pos();
        self.expect("[")?;
        let mut items = Vec::new();
        loop {
            if self.eat("]") {
                break;
            }
            if self.eat(",") {
                items.push(None);
                continue;
            }
            if self.at("...") {
                return Err(self.unsupported(self.pos(), "spread element"));
            }
            items.push(Some(self.assignment(false)?));
            if self.eat("]") {
                break;
            }
            self.expect(",")?;
        }
        Ok(Expr::new(ExprKind::Array(items), start))
    }

    fn property_key(&mut self) -> PResult<String> {
        match self.peek().tok.clone() {
            Tok::Ident(name) => {
                self.next();
                Ok(name)
            }
            Tok::Str(s) => {
                self.next();
                Ok(s)
            }
            Tok::Num(v) => {
                self.next();
                Ok(number_key(v))
            }
            Tok::Punct("[") => Err(self.unsupported(self.pos(), "computed property key")),
            _ => Err(self.unexpected()),
        }
    }

    fn object_literal(&mut self) -> PResult<Expr> {
        let start = self.pos();
        self.expect("{")?;
        let mut props = Vec::new();
        loop {
            if self.eat("}") {
                break;
            }
            let key_pos = self.pos();
            let is_accessor = (self.at_kw("get") || self.at_kw("set"))
                && !matches!(self.peek_at(1).tok, Tok::Punct(":" | "," | "}" | "("));
            if is_accessor {
                return Err(self.unsupported(key_pos, "getter/setter"));
            }
            let key = self.property_key()?;
            if self.at("(") {
                return Err(self.unsupported(key_pos, "method definition"));
            }
            if self.at(",") || self.at("}") {
                return Err(self.unsupported(key_pos, "shorthand property"));
            }
            self.expect(":")?;
            let value = self.assignment(false)?;
            props.push(Property { key, value });
            if self.eat("}") {
                break;
            }
            self.expect(",")?;
        }
        Ok(Expr::new(ExprKind::Object(props), start))
    }
}

fn is_assignable(e: &Expr) -> bool {
    matches!(
        e.kind,
        ExprKind::Ident(_) | ExprKind::Member { .. } | ExprKind::Index { .. }
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(src: &str) -> Program {
        Parser::new(src, "t.js").unwrap().parse_program().unwrap()
    }

    fn parse_err(src: &str) -> FrontendError {
        Parser::new(src, "t.js")
            .and_then(|p| p.parse_program())
            .unwrap_err()
    }

    fn expr(src: &str) -> Expr {
        match parse(src).body.remove(0) {
            Stmt::Expr(e) => e,
            other => panic!("not an expression statement: {other:?}"),
        }
    }

    #[test]
    fn precedence() {
        let e = expr("a + b * c || d");
        let ExprKind::Logical { op, left, .. } = e.kind else {
            panic!()
        };
        assert_eq!(op, "||");
        let ExprKind::Binary { op, right, .. } = left.kind else {
            panic!()
        };
        assert_eq!(op, "+");
        assert!(matches!(right.kind, ExprKind::Binary { ref op, .. } if op == "*"));
    }

    #[test]
    fn parenthesized_operand_starts_at_paren() {
        let e = expr("(a + b) * c");
        assert_eq!(e.pos, Pos::new(1, 1));
        let ExprKind::Binary { left, .. } = e.kind else {
            panic!()
        };
        assert_eq!(left.pos, Pos::new(1, 2));
    }

    #[test]
    fn iife_shapes() {
        let e = expr("(function(){ return 1; })();");
        let ExprKind::Call { callee, .. } = e.kind else {
            panic!()
        };
        assert_eq!(callee.pos, Pos::new(1, 2));
        assert!(callee.as_function().is_some());
        let p = parse("var x = function(a){ return a; }(1);");
        let Stmt::Var(decls) = &p.body[0] else { panic!() };
        let init = decls[0].init.as_ref().unwrap();
        assert!(matches!(&init.kind, ExprKind::Call { callee, .. } if callee.as_function().is_some()));
    }

    #[test]
    fn new_with_and_without_arguments() {
        let e = expr("new a.B(1).c()");
        let ExprKind::Call { callee, .. } = e.kind else {
            panic!()
        };
        let ExprKind::Member { object, property } = callee.kind else {
            panic!()
        };
        assert_eq!(property, "c");
        assert!(matches!(object.kind, ExprKind::New { ref args, .. } if args.len() == 1));
        assert!(matches!(expr("new F").kind, ExprKind::New { ref args, .. } if args.is_empty()));
    }

    #[test]
    fn statements() {
        let p = parse(
            "for (var i = 0; i < 3; i++) { continue; }\n\
             for (var k in o) {}\n\
             for (k in o) break;\n\
             do x(); while (y)\n\
             switch (v) { case 1: f(); break; default: g(); }\n\
             try { a(); } catch (e) { b(); } finally { c(); }\n\
             outer: while (1) { break outer; }\n\
             if (a) b(); else { c() }",
        );
        assert_eq!(p.body.len(), 8);
        assert!(matches!(p.body[1], Stmt::ForIn { left: ForInTarget::Var(_), .. }));
        assert!(matches!(p.body[2], Stmt::ForIn { left: ForInTarget::Expr(_), .. }));
    }

    #[test]
    fn semicolon_insertion() {
        let p = parse("var a = 1\nvar b = 2\nfunction f() { return\n a }");
        assert_eq!(p.body.len(), 3);
        let Stmt::Function(f) = &p.body[2] else { panic!() };
        assert_eq!(f.body.len(), 2);
        assert!(matches!(f.body[0], Stmt::Return(None)));
        assert!(matches!(parse_err("a b"), FrontendError::Parse { .. }));
    }

    #[test]
    fn object_literal_keys() {
        let e = expr("({ a: 1, 'b c': 2, 3: x, if: y })");
        let ExprKind::Object(props) = e.kind else { panic!() };
        let keys: Vec<_> = props.iter().map(|p| p.key.as_str()).collect();
        assert_eq!(keys, ["a", "b c", "3", "if"]);
    }

    #[test]
    fn function_end_is_past_closing_brace() {
        let p = parse("function f(a, b) {\n  return a;\n}");
        let Stmt::Function(f) = &p.body[0] else { panic!() };
        assert_eq!(f.start, Pos::new(1, 1));
        assert_eq!(f.end, Pos::new(3, 2));
        assert_eq!(f.params, ["a", "b"]);
    }

    #[test]
    fn unsupported_constructs() {
        for (src, what) in [
            ("class A {}", "class declaration"),
            ("var f = x => x;", "arrow function"),
            ("var f = (a, b) => a;", "arrow function"),
            ("with (o) { f(); }", "with statement"),
            ("let x = 1;", "let declaration"),
            ("const x = 1;", "const declaration"),
            ("f(...xs);", "spread element"),
            ("var o = { get x() { return 1; } };", "getter/setter"),
            ("function* g() {}", "generator function"),
        ] {
            match parse_err(src) {
                FrontendError::Unsupported { construct, .. } => assert_eq!(construct, what, "{src}"),
                other => panic!("{src}: {other:?}"),
            }
        }
    }

    #[test]
    fn parse_errors_carry_positions() {
        match parse_err("function f({") {
            FrontendError::Parse { pos, .. } => assert_eq!(pos.line, 1),
            other => panic!("{other:?}"),
        }
        match parse_err("var a = 1;\nvar = 2;") {
            FrontendError::Parse { pos, .. } => assert_eq!(pos, Pos::new(2, 5)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_err("return 1;"), FrontendError::Parse { .. }));
        assert!(matches!(parse_err("1 = 2;"), FrontendError::Parse { .. }));
        assert!(matches!(parse_err("f(1"), FrontendError::Parse { .. }));
    }

    #[test]
    fn get_and_set_as_plain_keys() {
        let e = expr("({ get: 1, set: function() {} })");
        let ExprKind::Object(props) = e.kind else { panic!() };
        assert_eq!(props.len(), 2);
    }
}
