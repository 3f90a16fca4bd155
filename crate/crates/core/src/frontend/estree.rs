//! ESTree interchange: loading JSON dumps of external parsers (acorn,
//! esprima, espree) and exporting our own trees in the same shape.
//!
//! Interchange columns are 0-based and are shifted to 1-based on load; lines
//! are 1-based on both sides. Besides the ES5 node kinds, `let`/`const`
//! declarations and arrow functions are accepted so that newer sources can be
//! analyzed after parsing them elsewhere.

use super::ast::*;
use super::parser::number_key;
use super::FrontendError;
use serde_json::{json, Map, Value};

struct Loader<'p> {
    file: &'p str,
}

type LResult<T> = Result<T, FrontendError>;

fn node_type(v: &Value) -> &str {
    v.get("type").and_then(Value::as_str).unwrap_or("")
}

impl Loader<'_> {
    fn malformed(&self, message: impl Into<String>) -> FrontendError {
        FrontendError::MalformedDocument {
            file: self.file.to_string(),
            message: message.into(),
        }
    }

    fn unsupported(&self, v: &Value, construct: impl Into<String>) -> FrontendError {
        FrontendError::Unsupported {
            file: self.file.to_string(),
            pos: self.pos(v).unwrap_or(Pos::new(0, 0)),
            construct: construct.into(),
        }
    }

    fn loc_point(v: &Value, which: &str) -> Option<Pos> {
        let p = v.get("loc")?.get(which)?;
        let line = p.get("line")?.as_u64()?;
        let column = p.get("column")?.as_u64()?;
        Some(Pos::new(line as u32, column as u32 + 1))
    }

    fn pos(&self, v: &Value) -> Option<Pos> {
        Self::loc_point(v, "start")
    }

    /// Position for nodes whose location the analysis depends on.
    fn required_pos(&self, v: &Value) -> LResult<Pos> {
        self.pos(v).ok_or_else(|| FrontendError::MissingLocations {
            file: self.file.to_string(),
            kind: node_type(v).to_string(),
        })
    }

    fn field<'v>(&self, v: &'v Value, name: &str) -> LResult<&'v Value> {
        v.get(name)
            .ok_or_else(|| self.malformed(format!("{} node without `{name}`", node_type(v))))
    }

    fn array<'v>(&self, v: &'v Value, name: &str) -> LResult<&'v Vec<Value>> {
        self.field(v, name)?
            .as_array()
            .ok_or_else(|| self.malformed(format!("`{name}` of {} is not an array", node_type(v))))
    }

    fn string(&self, v: &Value, name: &str) -> LResult<String> {
        self.field(v, name)?
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| self.malformed(format!("`{name}` of {} is not a string", node_type(v))))
    }

    fn optional<'v>(v: &'v Value, name: &str) -> Option<&'v Value> {
        v.get(name).filter(|x| !x.is_null())
    }

    fn identifier(&self, v: &Value) -> LResult<String> {
        match node_type(v) {
            "Identifier" => self.string(v, "name"),
            "ObjectPattern" | "ArrayPattern" | "AssignmentPattern" | "RestElement" => {
                Err(self.unsupported(v, node_type(v)))
            }
            other => Err(self.malformed(format!("expected Identifier, found `{other}`"))),
        }
    }

    fn program(&self, v: &Value) -> LResult<Program> {
        if node_type(v) != "Program" {
            return Err(self.malformed(format!("root node is `{}`, not Program", node_type(v))));
        }
        Ok(Program {
            path: self.file.to_string(),
            body: self.statements(self.array(v, "body")?)?,
        })
    }

    fn statements(&self, items: &[Value]) -> LResult<Vec<Stmt>> {
        items.iter().map(|s| self.statement(s)).collect()
    }

    fn block_body(&self, v: &Value) -> LResult<Vec<Stmt>> {
        if node_type(v) != "BlockStatement" {
            return Err(self.malformed(format!("expected BlockStatement, found `{}`", node_type(v))));
        }
        self.statements(self.array(v, "body")?)
    }

    fn var_decls(&self, v: &Value) -> LResult<Vec<VarDecl>> {
        match v.get("kind").and_then(Value::as_str) {
            Some("var" | "let" | "const") => {}
            other => return Err(self.malformed(format!("bad declaration kind {other:?}"))),
        }
        self.array(v, "declarations")?
            .iter()
            .map(|d| {
                Ok(VarDecl {
                    name: self.identifier(self.field(d, "id")?)?,
                    init: Self::optional(d, "init").map(|e| self.expr(e)).transpose()?,
                })
            })
            .collect()
    }

    fn boxed_stmt(&self, v: &Value, name: &str) -> LResult<Box<Stmt>> {
        Ok(Box::new(self.statement(self.field(v, name)?)?))
    }

    fn opt_expr(&self, v: &Value, name: &str) -> LResult<Option<Expr>> {
        Self::optional(v, name).map(|e| self.expr(e)).transpose()
    }

    fn label(&self, v: &Value) -> LResult<Option<String>> {
        Self::optional(v, "label").map(|l| self.identifier(l)).transpose()
    }

    fn statement(&self, v: &Value) -> LResult<Stmt> {
        Ok(match node_type(v) {
            "VariableDeclaration" => Stmt::Var(self.var_decls(v)?),
            "FunctionDeclaration" => Stmt::Function(self.function(v)?),
            "ExpressionStatement" => Stmt::Expr(self.expr(self.field(v, "expression")?)?),
            "ReturnStatement" => Stmt::Return(self.opt_expr(v, "argument")?),
            "IfStatement" => Stmt::If {
                test: self.expr(self.field(v, "test")?)?,
                consequent: self.boxed_stmt(v, "consequent")?,
                alternate: Self::optional(v, "alternate")
                    .map(|a| self.statement(a).map(Box::new))
                    .transpose()?,
            },
            "ForStatement" => Stmt::For {
                init: match Self::optional(v, "init") {
                    None => None,
                    Some(i) if node_type(i) == "VariableDeclaration" => Some(ForInit::Var(self.var_decls(i)?)),
                    Some(i) => Some(ForInit::Expr(self.expr(i)?)),
                },
                test: self.opt_expr(v, "test")?,
                update: self.opt_expr(v, "update")?,
                body: self.boxed_stmt(v, "body")?,
            },
            "ForInStatement" => {
                let left = self.field(v, "left")?;
                let left = if node_type(left) == "VariableDeclaration" {
                    let mut decls = self.var_decls(left)?;
                    if decls.len() != 1 {
                        return Err(self.malformed("for-in declares more than one variable"));
                    }
                    ForInTarget::Var(decls.remove(0))
                } else {
                    ForInTarget::Expr(self.expr(left)?)
                };
                Stmt::ForIn {
                    left,
                    right: self.expr(self.field(v, "right")?)?,
                    body: self.boxed_stmt(v, "body")?,
                }
            }
            "WhileStatement" => Stmt::While {
                test: self.expr(self.field(v, "test")?)?,
                body: self.boxed_stmt(v, "body")?,
            },
            "DoWhileStatement" => Stmt::DoWhile {
                body: self.boxed_stmt(v, "body")?,
                test: self.expr(self.field(v, "test")?)?,
            },
            "BlockStatement" => Stmt::Block(self.block_body(v)?),
            "SwitchStatement" => Stmt::Switch {
                discriminant: self.expr(self.field(v, "discriminant")?)?,
                cases: self
                    .array(v, "cases")?
                    .iter()
                    .map(|c| {
                        Ok(SwitchCase {
                            test: self.opt_expr(c, "test")?,
                            body: self.statements(self.array(c, "consequent")?)?,
                        })
                    })
                    .collect::<LResult<_>>()?,
            },
            "BreakStatement" => Stmt::Break(self.label(v)?),
            "ContinueStatement" => Stmt::Continue(self.label(v)?),
            "TryStatement" => Stmt::Try {
                block: self.block_body(self.field(v, "block")?)?,
                handler: Self::optional(v, "handler")
                    .map(|h| {
                        Ok(CatchClause {
                            param: self.identifier(self.field(h, "param")?)?,
                            body: self.block_body(self.field(h, "body")?)?,
                        })
                    })
                    .transpose()?,
                finalizer: Self::optional(v, "finalizer")
                    .map(|f| self.block_body(f))
                    .transpose()?,
            },
            "ThrowStatement" => Stmt::Throw(self.expr(self.field(v, "argument")?)?),
            "LabeledStatement" => Stmt::Labeled {
                label: self.identifier(self.field(v, "label")?)?,
                body: self.boxed_stmt(v, "body")?,
            },
            "EmptyStatement" => Stmt::Empty,
            "DebuggerStatement" => Stmt::Debugger,
            "" => return Err(self.malformed("node without `type`")),
            other => return Err(self.unsupported(v, other)),
        })
    }

    fn function(&self, v: &Value) -> LResult<Function> {
        if v.get("generator").and_then(Value::as_bool) == Some(true) {
            return Err(self.unsupported(v, "generator function"));
        }
        if v.get("async").and_then(Value::as_bool) == Some(true) {
            return Err(self.unsupported(v, "async function"));
        }
        let start = self.required_pos(v)?;
        let end = Self::loc_point(v, "end").unwrap_or(start);
        let name = Self::optional(v, "id").map(|i| self.identifier(i)).transpose()?;
        let params = self
            .array(v, "params")?
            .iter()
            .map(|p| self.identifier(p))
            .collect::<LResult<_>>()?;
        let body_node = self.field(v, "body")?;
        let body = if node_type(body_node) == "BlockStatement" {
            self.block_body(body_node)?
        } else {
            // arrow function with an expression body
            vec![Stmt::Return(Some(self.expr(body_node)?))]
        };
        Ok(Function {
            name,
            params,
            body,
            start,
            end,
        })
    }

    fn boxed(&self, v: &Value, name: &str) -> LResult<Box<Expr>> {
        Ok(Box::new(self.expr(self.field(v, name)?)?))
    }

    fn operator(&self, v: &Value) -> LResult<String> {
        self.string(v, "operator")
    }

    fn args(&self, v: &Value) -> LResult<Vec<Expr>> {
        self.array(v, "arguments")?.iter().map(|a| self.expr(a)).collect()
    }

    fn property_key(&self, p: &Value) -> LResult<String> {
        if p.get("computed").and_then(Value::as_bool) == Some(true) {
            return Err(self.unsupported(p, "computed property key"));
        }
        let key = self.field(p, "key")?;
        match node_type(key) {
            "Identifier" => self.string(key, "name"),
            "Literal" => match key.get("value") {
                Some(Value::String(s)) => Ok(s.clone()),
                Some(Value::Number(n)) => Ok(number_key(n.as_f64().unwrap_or(0.0))),
                _ => Err(self.malformed("unsupported literal property key")),
            },
            other => Err(self.unsupported(key, other)),
        }
    }

    fn expr(&self, v: &Value) -> LResult<Expr> {
        let ty = node_type(v);
        let kind = match ty {
            "ParenthesizedExpression" => return self.expr(self.field(v, "expression")?),
            "FunctionExpression" | "ArrowFunctionExpression" => {
                let f = self.function(v)?;
                let pos = f.start;
                return Ok(Expr::new(ExprKind::Function(Box::new(f)), pos));
            }
            "CallExpression" | "NewExpression" => {
                if v.get("optional").and_then(Value::as_bool) == Some(true) {
                    return Err(self.unsupported(v, "optional call"));
                }
                let pos = self.required_pos(v)?;
                let callee = self.boxed(v, "callee")?;
                let args = self.args(v)?;
                let kind = if ty == "NewExpression" {
                    ExprKind::New { callee, args }
                } else {
                    ExprKind::Call { callee, args }
                };
                return Ok(Expr::new(kind, pos));
            }
            "Identifier" => ExprKind::Ident(self.string(v, "name")?),
            "ThisExpression" => ExprKind::This,
            "Literal" => {
                if let Some(re) = v.get("regex") {
                    ExprKind::Regex {
                        pattern: self.string(re, "pattern")?,
                        flags: self.string(re, "flags")?,
                    }
                } else {
                    match v.get("value") {
                        Some(Value::Null) | None => ExprKind::Null,
                        Some(Value::Bool(b)) => ExprKind::Bool(*b),
                        Some(Value::Number(n)) => ExprKind::Num(n.as_f64().unwrap_or(0.0)),
                        Some(Value::String(s)) => ExprKind::Str(s.clone()),
                        Some(_) => return Err(self.malformed("unrecognized literal value")),
                    }
                }
            }
            "ArrayExpression" => ExprKind::Array(
                self.array(v, "elements")?
                    .iter()
                    .map(|e| if e.is_null() { Ok(None) } else { self.expr(e).map(Some) })
                    .collect::<LResult<_>>()?,
            ),
            "ObjectExpression" => ExprKind::Object(
                self.array(v, "properties")?
                    .iter()
                    .map(|p| {
                        if node_type(p) != "Property" {
                            return Err(self.unsupported(p, node_type(p)));
                        }
                        match p.get("kind").and_then(Value::as_str) {
                            Some("init") | None => {}
                            Some(_) => return Err(self.unsupported(p, "getter/setter")),
                        }
                        Ok(Property {
                            key: self.property_key(p)?,
                            value: self.expr(self.field(p, "value")?)?,
                        })
                    })
                    .collect::<LResult<_>>()?,
            ),
            "MemberExpression" => {
                if v.get("optional").and_then(Value::as_bool) == Some(true) {
                    return Err(self.unsupported(v, "optional chaining"));
                }
                let object = self.boxed(v, "object")?;
                if v.get("computed").and_then(Value::as_bool) == Some(true) {
                    ExprKind::Index {
                        object,
                        index: self.boxed(v, "property")?,
                    }
                } else {
                    ExprKind::Member {
                        object,
                        property: self.identifier(self.field(v, "property")?)?,
                    }
                }
            }
            "AssignmentExpression" => ExprKind::Assign {
                op: self.operator(v)?,
                target: self.boxed(v, "left")?,
                value: self.boxed(v, "right")?,
            },
            "UnaryExpression" => ExprKind::Unary {
                op: self.operator(v)?,
                arg: self.boxed(v, "argument")?,
            },
            "UpdateExpression" => ExprKind::Update {
                op: self.operator(v)?,
                prefix: v.get("prefix").and_then(Value::as_bool).unwrap_or(false),
                arg: self.boxed(v, "argument")?,
            },
            "BinaryExpression" => ExprKind::Binary {
                op: self.operator(v)?,
                left: self.boxed(v, "left")?,
                right: self.boxed(v, "right")?,
            },
            "LogicalExpression" => ExprKind::Logical {
                op: self.operator(v)?,
                left: self.boxed(v, "left")?,
                right: self.boxed(v, "right")?,
            },
            "ConditionalExpression" => ExprKind::Conditional {
                test: self.boxed(v, "test")?,
                consequent: self.boxed(v, "consequent")?,
                alternate: self.boxed(v, "alternate")?,
            },
            "SequenceExpression" => ExprKind::Sequence(
                self.array(v, "expressions")?
                    .iter()
                    .map(|e| self.expr(e))
                    .collect::<LResult<_>>()?,
            ),
            "" => return Err(self.malformed("node without `type`")),
            other => return Err(self.unsupported(v, other)),
        };
        Ok(Expr::new(kind, self.pos(v).unwrap_or(Pos::new(0, 0))))
    }
}

/// Loads an ESTree JSON document with location data.
pub fn load_ast_document(text: &str, path: &str) -> Result<Program, FrontendError> {
    let loader = Loader { file: path };
    let value: Value = serde_json::from_str(text).map_err(|e| loader.malformed(e.to_string()))?;
    loader.program(&value)
}

fn loc(start: Pos, end: Option<Pos>) -> Value {
    let point = |p: Pos| json!({"line": p.line, "column": p.column.saturating_sub(1)});
    let mut m = Map::new();
    m.insert("start".into(), point(start));
    if let Some(end) = end {
        m.insert("end".into(), point(end));
    }
    Value::Object(m)
}

fn ident(name: &str) -> Value {
    json!({"type": "Identifier", "name": name})
}

fn export_function(f: &Function, ty: &str) -> Value {
    json!({
        "type": ty,
        "id": f.name.as_deref().map(ident),
        "params": f.params.iter().map(|p| ident(p)).collect::<Vec<_>>(),
        "body": {"type": "BlockStatement", "body": export_stmts(&f.body)},
        "generator": false,
        "loc": loc(f.start, Some(f.end)),
    })
}

fn export_stmts(stmts: &[Stmt]) -> Vec<Value> {
    stmts.iter().map(export_stmt).collect()
}

fn export_decls(decls: &[VarDecl]) -> Value {
    json!({
        "type": "VariableDeclaration",
        "kind": "var",
        "declarations": decls.iter().map(|d| json!({
            "type": "VariableDeclarator",
            "id": ident(&d.name),
            "init": d.init.as_ref().map(export_expr),
        })).collect::<Vec<_>>(),
    })
}

fn block(stmts: &[Stmt]) -> Value {
    json!({"type": "BlockStatement", "body": export_stmts(stmts)})
}

fn export_stmt(s: &Stmt) -> Value {
    match s {
        Stmt::Var(decls) => export_decls(decls),
        Stmt::Function(f) => export_function(f, "FunctionDeclaration"),
        Stmt::Expr(e) => json!({"type": "ExpressionStatement", "expression": export_expr(e)}),
        Stmt::Return(e) => json!({"type": "ReturnStatement", "argument": e.as_ref().map(export_expr)}),
        Stmt::If {
            test,
            consequent,
            alternate,
        } => json!({
            "type": "IfStatement",
            "test": export_expr(test),
            "consequent": export_stmt(consequent),
            "alternate": alternate.as_deref().map(export_stmt),
        }),
        Stmt::For {
            init,
            test,
            update,
            body,
        } => json!({
            "type": "ForStatement",
            "init": match init {
                Some(ForInit::Var(d)) => export_decls(d),
                Some(ForInit::Expr(e)) => export_expr(e),
                None => Value::Null,
            },
            "test": test.as_ref().map(export_expr),
            "update": update.as_ref().map(export_expr),
            "body": export_stmt(body),
        }),
        Stmt::ForIn { left, right, body } => json!({
            "type": "ForInStatement",
            "left": match left {
                ForInTarget::Var(d) => export_decls(std::slice::from_ref(d)),
                ForInTarget::Expr(e) => export_expr(e),
            },
            "right": export_expr(right),
            "body": export_stmt(body),
        }),
        Stmt::While { test, body } => {
            json!({"type": "WhileStatement", "test": export_expr(test), "body": export_stmt(body)})
        }
        Stmt::DoWhile { body, test } => {
            json!({"type": "DoWhileStatement", "body": export_stmt(body), "test": export_expr(test)})
        }
        Stmt::Block(stmts) => block(stmts),
        Stmt::Switch {
            discriminant,
            cases,
        } => json!({
            "type": "SwitchStatement",
            "discriminant": export_expr(discriminant),
            "cases": cases.iter().map(|c| json!({
                "type": "SwitchCase",
                "test": c.test.as_ref().map(export_expr),
                "consequent": export_stmts(&c.body),
            })).collect::<Vec<_>>(),
        }),
        Stmt::Break(l) => json!({"type": "BreakStatement", "label": l.as_deref().map(ident)}),
        Stmt::Continue(l) => json!({"type": "ContinueStatement", "label": l.as_deref().map(ident)}),
        Stmt::Try {
            block: b,
            handler,
            finalizer,
        } => json!({
            "type": "TryStatement",
            "block": block(b),
            "handler": handler.as_ref().map(|h| json!({
                "type": "CatchClause",
                "param": ident(&h.param),
                "body": block(&h.body),
            })),
            "finalizer": finalizer.as_deref().map(block),
        }),
        Stmt::Throw(e) => json!({"type": "ThrowStatement", "argument": export_expr(e)}),
        Stmt::Labeled { label, body } => {
            json!({"type": "LabeledStatement", "label": ident(label), "body": export_stmt(body)})
        }
        Stmt::Empty => json!({"type": "EmptyStatement"}),
        Stmt::Debugger => json!({"type": "DebuggerStatement"}),
    }
}

fn export_expr(e: &Expr) -> Value {
    let mut v = match &e.kind {
        ExprKind::Function(f) => return export_function(f, "FunctionExpression"),
        ExprKind::Ident(n) => ident(n),
        ExprKind::This => json!({"type": "ThisExpression"}),
        ExprKind::Null => json!({"type": "Literal", "value": null}),
        ExprKind::Bool(b) => json!({"type": "Literal", "value": b}),
        ExprKind::Num(n) => json!({"type": "Literal", "value": n}),
        ExprKind::Str(s) => json!({"type": "Literal", "value": s}),
        ExprKind::Regex { pattern, flags } => {
            json!({"type": "Literal", "value": {}, "regex": {"pattern": pattern, "flags": flags}})
        }
        ExprKind::Array(items) => json!({
            "type": "ArrayExpression",
            "elements": items.iter().map(|i| i.as_ref().map(export_expr)).collect::<Vec<_>>(),
        }),
        ExprKind::Object(props) => json!({
            "type": "ObjectExpression",
            "properties": props.iter().map(|p| json!({
                "type": "Property",
                "kind": "init",
                "computed": false,
                "key": {"type": "Literal", "value": p.key},
                "value": export_expr(&p.value),
            })).collect::<Vec<_>>(),
        }),
        ExprKind::Member { object, property } => json!({
            "type": "MemberExpression",
            "computed": false,
            "object": export_expr(object),
            "property": ident(property),
        }),
        ExprKind::Index { object, index } => json!({
            "type": "MemberExpression",
            "computed": true,
            "object": export_expr(object),
            "property": export_expr(index),
        }),
        ExprKind::Call { callee, args } => json!({
            "type": "CallExpression",
            "callee": export_expr(callee),
            "arguments": args.iter().map(export_expr).collect::<Vec<_>>(),
        }),
        ExprKind::New { callee, args } => json!({
            "type": "NewExpression",
            "callee": export_expr(callee),
            "arguments": args.iter().map(export_expr).collect::<Vec<_>>(),
        }),
        ExprKind::Assign { op, target, value } => json!({
            "type": "AssignmentExpression",
            "operator": op,
            "left": export_expr(target),
            "right": export_expr(value),
        }),
        ExprKind::Unary { op, arg } => {
            json!({"type": "UnaryExpression", "operator": op, "prefix": true, "argument": export_expr(arg)})
        }
        ExprKind::Update { op, prefix, arg } => {
            json!({"type": "UpdateExpression", "operator": op, "prefix": prefix, "argument": export_expr(arg)})
        }
        ExprKind::Binary { op, left, right } => json!({
            "type": "BinaryExpression",
            "operator": op,
            "left": export_expr(left),
            "right": export_expr(right),
        }),
        ExprKind::Logical { op, left, right } => json!({
            "type": "LogicalExpression",
            "operator": op,
            "left": export_expr(left),
            "right": export_expr(right),
        }),
        ExprKind::Conditional {
            test,
            consequent,
            alternate,
        } => json!({
            "type": "ConditionalExpression",
            "test": export_expr(test),
            "consequent": export_expr(consequent),
            "alternate": export_expr(alternate),
        }),
        ExprKind::Sequence(items) => json!({
            "type": "SequenceExpression",
            "expressions": items.iter().map(export_expr).collect::<Vec<_>>(),
        }),
    };
    v["loc"] = loc(e.pos, None);
    v
}

/// Exports a program as an ESTree document (0-based columns).
pub fn to_estree(program: &Program) -> Value {
    json!({
        "type": "Program",
        "sourceType": "script",
        "body": export_stmts(&program.body),
    })
}
