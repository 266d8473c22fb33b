use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ast::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DocField {
    Description,
    Parts,
    ValidOptions,
    Parameters,
}

impl fmt::Display for DocField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DocField::Description => "Description",
            DocField::Parts => "Parts",
            DocField::ValidOptions => "Valid options",
            DocField::Parameters => "Parameters",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ViolationKind {
    BuiltinNameClash,
    FrameNotFirst,
    WrongReturnType {
        found: String,
    },
    MissingDocField {
        field: DocField,
        detail: String,
    },
    ValidOptionsTooSmall {
        value: i64,
    },
    EmptyEnum {
        param: String,
    },
    DuplicateEnumOption {
        param: String,
        option: String,
    },
    DuplicateParam {
        param: String,
    },
    UnusedParameter {
        param: String,
    },
    UnknownCall {
        name: String,
    },
    CallArity {
        name: String,
        expected: usize,
        found: usize,
    },
    Recursion {
        cycle: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterfaceViolation {
    pub function: String,
    #[serde(flatten)]
    pub kind: ViolationKind,
}

impl fmt::Display for InterfaceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = &self.function;
        match &self.kind {
            ViolationKind::BuiltinNameClash => write!(f, "`{name}` shadows a builtin"),
            ViolationKind::FrameNotFirst => {
                write!(
                    f,
                    "`{name}`: first parameter must be the frame (`cf: Frame`)"
                )
            }
            ViolationKind::WrongReturnType { found } => {
                write!(f, "`{name}`: return type must be PartList, found `{found}`")
            }
            ViolationKind::MissingDocField { field, detail } if detail.is_empty() => {
                write!(f, "`{name}`: doc-string is missing the '{field}' field")
            }
            ViolationKind::MissingDocField { field, detail } => {
                write!(
                    f,
                    "`{name}`: doc-string '{field}' field is incomplete ({detail})"
                )
            }
            ViolationKind::ValidOptionsTooSmall { value } => {
                write!(f, "`{name}`: valid option {value} must be greater than 1")
            }
            ViolationKind::EmptyEnum { param } => {
                write!(f, "`{name}`: enum parameter `{param}` declares no options")
            }
            ViolationKind::DuplicateEnumOption { param, option } => {
                write!(
                    f,
                    "`{name}`: enum parameter `{param}` repeats option `{option}`"
                )
            }
            ViolationKind::DuplicateParam { param } => {
                write!(f, "`{name}`: parameter `{param}` declared twice")
            }
            ViolationKind::UnusedParameter { param } => {
                write!(f, "`{name}`: parameter `{param}` is never used in the body")
            }
            ViolationKind::UnknownCall { name: callee } => {
                write!(f, "`{name}`: body calls unknown function `{callee}`")
            }
            ViolationKind::CallArity {
                name: callee,
                expected,
                found,
            } => write!(
                f,
                "`{name}`: call to `{callee}` passes {found} arguments, expected {expected}"
            ),
            ViolationKind::Recursion { cycle } => {
                write!(f, "`{name}`: recursive call chain {}", cycle.join(" -> "))
            }
        }
    }
}

fn violation(function: &str, kind: ViolationKind) -> InterfaceViolation {
    InterfaceViolation {
        function: function.to_string(),
        kind,
    }
}

/// Check the signature and doc-string rules of every function in `lib`.
/// An empty result means the interface conforms.
pub fn validate_interface(lib: &Library) -> Vec<InterfaceViolation> {
    let mut out = Vec::new();
    for f in lib.functions.values() {
        out.extend(validate_function_interface(f));
    }
    out
}

pub fn validate_function_interface(f: &LibraryFunction) -> Vec<InterfaceViolation> {
    let mut out = Vec::new();
    let v = |kind| violation(&f.name, kind);
    if is_builtin(&f.name) {
        out.push(v(ViolationKind::BuiltinNameClash));
    }
    if f.frame_param.is_none() {
        out.push(v(ViolationKind::FrameNotFirst));
    }
    if f.return_type != PART_LIST_TYPE {
        out.push(v(ViolationKind::WrongReturnType {
            found: f.return_type.clone(),
        }));
    }
    let mut names = BTreeSet::new();
    for p in &f.params {
        if !names.insert(p.name.as_str()) || f.frame_param.as_deref() == Some(p.name.as_str()) {
            out.push(v(ViolationKind::DuplicateParam {
                param: p.name.clone(),
            }));
        }
        if let ParamType::Enum(opts) = &p.ty {
            if opts.is_empty() {
                out.push(v(ViolationKind::EmptyEnum {
                    param: p.name.clone(),
                }));
            }
            let mut seen = BTreeSet::new();
            for o in opts {
                if !seen.insert(o) {
                    out.push(v(ViolationKind::DuplicateEnumOption {
                        param: p.name.clone(),
                        option: o.clone(),
                    }));
                }
            }
        }
    }
    let doc = &f.doc;
    let missing = |field| ViolationKind::MissingDocField {
        field,
        detail: String::new(),
    };
    if doc.description.trim().is_empty() {
        out.push(v(missing(DocField::Description)));
    }
    if doc.parts_spec.trim().is_empty() {
        out.push(v(missing(DocField::Parts)));
    }
    if doc.valid_options.is_empty() {
        out.push(v(missing(DocField::ValidOptions)));
    }
    for &opt in &doc.valid_options {
        if opt <= 1 {
            out.push(v(ViolationKind::ValidOptionsTooSmall { value: opt }));
        }
    }
    let undocumented: Vec<&str> = f
        .params
        .iter()
        .filter(|p| !doc.parameters_spec.contains_key(&p.name))
        .map(|p| p.name.as_str())
        .collect();
    if !undocumented.is_empty() {
        let detail = if undocumented.len() == f.params.len() {
            String::new()
        } else {
            format!("undocumented: {}", undocumented.join(", "))
        };
        out.push(v(ViolationKind::MissingDocField {
            field: DocField::Parameters,
            detail,
        }));
    }
    out
}

/// Collect every variable name read and every function called in a block.
#[derive(Default)]
struct Uses {
    vars: BTreeSet<String>,
    calls: Vec<(String, usize)>,
}

fn walk_block(block: &Block, uses: &mut Uses) {
    for stmt in block {
        match stmt {
            Stmt::Let { value, .. } | Stmt::Return { value, .. } => walk_expr(value, uses),
            Stmt::Assign { name, value, .. } => {
                uses.vars.insert(name.clone());
                walk_expr(value, uses);
            }
            Stmt::For {
                start, end, body, ..
            } => {
                walk_expr(start, uses);
                walk_expr(end, uses);
                walk_block(body, uses);
            }
            Stmt::If {
                cond,
                then_block,
                else_block,
                ..
            } => {
                walk_expr(cond, uses);
                walk_block(then_block, uses);
                if let Some(b) = else_block {
                    walk_block(b, uses);
                }
            }
            Stmt::Expr { expr, .. } => walk_expr(expr, uses),
        }
    }
}

fn walk_expr(e: &Expr, uses: &mut Uses) {
    match &e.kind {
        ExprKind::Var(name) => {
            uses.vars.insert(name.clone());
        }
        ExprKind::Field(b, _) => walk_expr(b, uses),
        ExprKind::Index(b, i) => {
            walk_expr(b, uses);
            walk_expr(i, uses);
        }
        ExprKind::List(items) => items.iter().for_each(|x| walk_expr(x, uses)),
        ExprKind::Unary(_, x) => walk_expr(x, uses),
        ExprKind::Binary(_, l, r) => {
            walk_expr(l, uses);
            walk_expr(r, uses);
        }
        ExprKind::Call(name, args) => {
            uses.calls.push((name.clone(), args.len()));
            args.iter().for_each(|x| walk_expr(x, uses));
        }
        _ => {}
    }
}

/// Library functions called anywhere in `block`, in first-call order.
pub fn called_functions(block: &Block, lib: &Library) -> Vec<String> {
    let mut uses = Uses::default();
    walk_block(block, &mut uses);
    let mut out: Vec<String> = Vec::new();
    for (name, _) in uses.calls {
        if lib.get(&name).is_some() && !out.contains(&name) {
            out.push(name);
        }
    }
    out
}

/// Whether `block` mentions the builtin or variable `name`.
pub fn mentions(block: &Block, name: &str) -> bool {
    let mut uses = Uses::default();
    walk_block(block, &mut uses);
    uses.vars.contains(name) || uses.calls.iter().any(|(n, _)| n == name)
}

/// Static checks on function bodies: parameter use, known callees, call arity
/// against library signatures, and absence of recursion.
pub fn check_bodies(lib: &Library) -> Vec<InterfaceViolation> {
    let mut out = Vec::new();
    let mut graph: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    for f in lib.functions.values() {
        let Some(body) = &f.body else { continue };
        out.extend(check_body(
            &f.name,
            body,
            f.params.iter().map(|p| p.name.as_str()),
            lib,
        ));
        let mut uses = Uses::default();
        walk_block(body, &mut uses);
        let callees = uses
            .calls
            .iter()
            .filter(|(n, _)| lib.get(n).is_some())
            .map(|(n, _)| n.clone())
            .collect();
        graph.insert(f.name.as_str(), callees);
    }
    for start in graph.keys() {
        if let Some(cycle) = find_cycle(start, &graph) {
            out.push(violation(start, ViolationKind::Recursion { cycle }));
        }
    }
    out
}

/// Body checks for one function (or sampler) against a library.
pub fn check_body<'a>(
    name: &str,
    body: &Block,
    params: impl IntoIterator<Item = &'a str>,
    lib: &Library,
) -> Vec<InterfaceViolation> {
    let mut out = Vec::new();
    let mut uses = Uses::default();
    walk_block(body, &mut uses);
    for p in params {
        if !uses.vars.contains(p) {
            out.push(violation(
                name,
                ViolationKind::UnusedParameter {
                    param: p.to_string(),
                },
            ));
        }
    }
    let mut reported = BTreeSet::new();
    for (callee, argc) in &uses.calls {
        if is_builtin(callee) {
            continue;
        }
        match lib.get(callee) {
            None => {
                if reported.insert(callee.clone()) {
                    out.push(violation(
                        name,
                        ViolationKind::UnknownCall {
                            name: callee.clone(),
                        },
                    ));
                }
            }
            Some(g) => {
                let expected = g.params.len() + 1;
                if *argc != expected && reported.insert(callee.clone()) {
                    out.push(violation(
                        name,
                        ViolationKind::CallArity {
                            name: callee.clone(),
                            expected,
                            found: *argc,
                        },
                    ));
                }
            }
        }
    }
    out
}

fn find_cycle(start: &str, graph: &BTreeMap<&str, BTreeSet<String>>) -> Option<Vec<String>> {
    fn dfs(
        node: &str,
        start: &str,
        graph: &BTreeMap<&str, BTreeSet<String>>,
        path: &mut Vec<String>,
        visited: &mut BTreeSet<String>,
    ) -> bool {
        for next in graph.get(node).into_iter().flatten() {
            if next == start {
                path.push(next.clone());
                return true;
            }
            if visited.insert(next.clone()) {
                path.push(next.clone());
                if dfs(next, start, graph, path, visited) {
                    return true;
                }
                path.pop();
            }
        }
        false
    }
    let mut path = vec![start.to_string()];
    let mut visited = BTreeSet::new();
    dfs(start, start, graph, &mut path, &mut visited).then_some(path)
}
