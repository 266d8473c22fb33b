//! Syntax tree for ShapeScript libraries, samplers and client programs.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::shape::CoordFrame;

/// 1-based source position.
///
/// Spans are diagnostic metadata only: two spans always compare equal, so
/// derived equality on syntax nodes is structural.
#[derive(Debug, Clone, Copy, Default, Eq, Serialize, Deserialize)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub const fn new(line: u32, col: u32) -> Self {
        Span { line, col }
    }
}

impl PartialEq for Span {
    fn eq(&self, _other: &Span) -> bool {
        true
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParamType {
    Float,
    Int,
    Bool,
    Enum(Vec<String>),
}

impl ParamType {
    pub fn name(&self) -> &'static str {
        match self {
            ParamType::Float => "float",
            ParamType::Int => "int",
            ParamType::Bool => "bool",
            ParamType::Enum(_) => "enum",
        }
    }

    /// Whether `lit` is an acceptable value; ints are accepted where floats are declared.
    pub fn accepts(&self, lit: &Literal) -> bool {
        match (self, lit) {
            (ParamType::Float, Literal::Float(_) | Literal::Int(_)) => true,
            (ParamType::Int, Literal::Int(_)) => true,
            (ParamType::Bool, Literal::Bool(_)) => true,
            (ParamType::Enum(opts), Literal::Str(s)) => opts.iter().any(|o| o == s),
            _ => false,
        }
    }

    /// Convert an accepted literal to the declared representation.
    pub fn coerce(&self, lit: &Literal) -> Option<Literal> {
        if !self.accepts(lit) {
            return None;
        }
        Some(match (self, lit) {
            (ParamType::Float, Literal::Int(i)) => Literal::Float(*i as f64),
            _ => lit.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub ty: ParamType,
}

/// Structured doc-string of an abstraction function.
///
/// Fields may be empty after lenient parsing; `validate_interface` reports
/// which rules are broken.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DocString {
    pub description: String,
    pub parts_spec: String,
    pub valid_options: Vec<i64>,
    pub parameters_spec: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryFunction {
    pub name: String,
    /// Name of the leading frame parameter; `None` when the signature does not start with one.
    pub frame_param: Option<String>,
    pub params: Vec<Param>,
    /// Declared return type name. Always `PartList` in a conforming interface.
    pub return_type: String,
    pub doc: DocString,
    pub body: Option<Block>,
    #[serde(skip)]
    pub span: Span,
}

impl LibraryFunction {
    pub fn param(&self, name: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn frame_name(&self) -> &str {
        self.frame_param.as_deref().unwrap_or("cf")
    }

    pub fn signature_only(&self) -> LibraryFunction {
        LibraryFunction {
            body: None,
            ..self.clone()
        }
    }
}

pub const FRAME_TYPE: &str = "Frame";
pub const PART_LIST_TYPE: &str = "PartList";

/// Names reserved for builtins; user functions may not shadow them.
pub const BUILTINS: [&str; 13] = [
    "part",
    "make_part",
    "group_parts",
    "frame",
    "min",
    "max",
    "abs",
    "floor",
    "clamp",
    "uniform",
    "randint",
    "choice",
    "bernoulli",
];

pub const RNG_BUILTINS: [&str; 4] = ["uniform", "randint", "choice", "bernoulli"];

pub fn is_builtin(name: &str) -> bool {
    BUILTINS.contains(&name)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Library {
    pub functions: BTreeMap<String, LibraryFunction>,
}

impl Library {
    pub fn new() -> Self {
        Library::default()
    }

    pub fn get(&self, name: &str) -> Option<&LibraryFunction> {
        self.functions.get(name)
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.functions.keys().map(String::as_str)
    }

    pub fn insert(&mut self, f: LibraryFunction) -> Option<LibraryFunction> {
        self.functions.insert(f.name.clone(), f)
    }

    /// Copy of the library with every body removed.
    pub fn interface(&self) -> Library {
        Library {
            functions: self
                .functions
                .iter()
                .map(|(k, f)| (k.clone(), f.signature_only()))
                .collect(),
        }
    }
}

/// A stochastic program that emits shape programs over a library.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sampler {
    pub name: String,
    pub frame_param: String,
    pub body: Block,
    #[serde(skip)]
    pub span: Span,
}

pub type Block = Vec<Stmt>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Stmt {
    Let {
        name: String,
        value: Expr,
        #[serde(skip)]
        span: Span,
    },
    Assign {
        name: String,
        value: Expr,
        #[serde(skip)]
        span: Span,
    },
    /// `for var in start..end { body }`; half-open range.
    For {
        var: String,
        start: Expr,
        end: Expr,
        body: Block,
        #[serde(skip)]
        span: Span,
    },
    If {
        cond: Expr,
        then_block: Block,
        else_block: Option<Block>,
        #[serde(skip)]
        span: Span,
    },
    Return {
        value: Expr,
        #[serde(skip)]
        span: Span,
    },
    Expr {
        expr: Expr,
        #[serde(skip)]
        span: Span,
    },
}

impl Stmt {
    pub fn span(&self) -> Span {
        match self {
            Stmt::Let { span, .. }
            | Stmt::Assign { span, .. }
            | Stmt::For { span, .. }
            | Stmt::If { span, .. }
            | Stmt::Return { span, .. }
            | Stmt::Expr { span, .. } => *span,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

impl BinOp {
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 5,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Or => "or",
            BinOp::And => "and",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expr {
    pub kind: ExprKind,
    #[serde(skip)]
    pub span: Span,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    pub fn synthetic(kind: ExprKind) -> Self {
        Expr {
            kind,
            span: Span::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ExprKind {
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(String),
    /// The `?` placeholder used for masked parameter values.
    Masked,
    Var(String),
    Field(Box<Expr>, String),
    Index(Box<Expr>, Box<Expr>),
    List(Vec<Expr>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
}

/// A concrete argument value in a client program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Literal {
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Bool(b) => write!(f, "{b}"),
            Literal::Int(i) => write!(f, "{i}"),
            Literal::Float(v) => f.write_str(&super::printer::format_float(*v)),
            Literal::Str(s) => f.write_str(&super::printer::quote(s)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProgramStmt {
    Call {
        fn_name: String,
        frame: CoordFrame,
        args: Vec<Literal>,
    },
    MakePart {
        frame: CoordFrame,
        label: String,
    },
}

impl ProgramStmt {
    pub fn frame(&self) -> &CoordFrame {
        match self {
            ProgramStmt::Call { frame, .. } | ProgramStmt::MakePart { frame, .. } => frame,
        }
    }

    pub fn fn_name(&self) -> &str {
        match self {
            ProgramStmt::Call { fn_name, .. } => fn_name,
            ProgramStmt::MakePart { .. } => "make_part",
        }
    }
}

/// A client program: a flat sequence of abstraction calls and `make_part` fallbacks.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ShapeProgram {
    pub statements: Vec<ProgramStmt>,
}

impl ShapeProgram {
    pub fn new(statements: Vec<ProgramStmt>) -> Self {
        ShapeProgram { statements }
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    pub fn concat(&self, other: &ShapeProgram) -> ShapeProgram {
        let mut statements = self.statements.clone();
        statements.extend(other.statements.iter().cloned());
        ShapeProgram { statements }
    }
}
