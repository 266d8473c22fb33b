//! ShapeScript: the closed language abstraction functions, samplers and
//! client programs are written in.
//!
//! A library source is a sequence of `fn` items, each optionally preceded by
//! a structured doc block:
//!
//! ```text
//! /// @description Two posts joined by evenly spaced horizontal slats.
//! /// @parts Two vertical posts plus `n_slats` slats.
//! /// @valid_options [4, 5, 6]
//! /// @param n_slats number of horizontal slats
//! /// @param slat_ratio fraction of the frame height covered by slats
//! fn ladder_back(cf: Frame, n_slats: int, slat_ratio: float) -> PartList;
//! ```
//!
//! A client program is a flat list of calls with literal arguments:
//!
//! ```text
//! ladder_back(frame(0.8, 1.0, 0.1, 0.0, 1.5, -0.35), 3, 0.5);
//! make_part(frame(0.8, 0.1, 0.8, 0.0, 0.45, 0.0), "seat");
//! ```

pub mod ast;
pub mod check;
pub mod lexer;
mod parser;
pub mod printer;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ast::*;
pub use check::{
    called_functions, check_bodies, check_body, validate_function_interface, validate_interface,
    DocField, InterfaceViolation, ViolationKind,
};
pub use printer::{
    format_float, print_expr, print_frame, print_function, print_library, print_program,
    print_program_stmt, print_sampler, print_samplers, quantize, quantize_frame, quantize_literal,
};

use parser::{Parser, RawFunction, TypeName};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScriptError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: u32, col: u32, msg: String },
    #[error("duplicate function `{name}` at {line}:{col}")]
    DuplicateFunction { name: String, line: u32, col: u32 },
    #[error("function `{function}`: doc-string is missing the '{field}' field")]
    MissingDocField { function: String, field: DocField },
    #[error("function `{function}`: valid option {value} must be greater than 1")]
    ValidOptionsTooSmall { function: String, value: i64 },
    #[error("interface violation: {0}")]
    Interface(InterfaceViolation),
    #[error("unknown function `{name}` at {line}:{col}")]
    UnknownFunction { name: String, line: u32, col: u32 },
    #[error("`{name}` at {line}:{col} takes {expected} arguments, found {found}")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
        line: u32,
        col: u32,
    },
    #[error("type mismatch at {line}:{col}: {msg}")]
    TypeMismatch { line: u32, col: u32, msg: String },
    #[error("frame at {line}:{col} must have strictly positive dimensions")]
    NonPositiveFrameDims { line: u32, col: u32 },
    #[error("invalid sampler `{name}`: {msg}")]
    InvalidSampler { name: String, msg: String },
}

impl ScriptError {
    /// Stable machine-readable error name.
    pub fn code(&self) -> &'static str {
        match self {
            ScriptError::Syntax { .. } => "SyntaxError",
            ScriptError::DuplicateFunction { .. } => "DuplicateFunction",
            ScriptError::MissingDocField { .. } => "MissingDocField",
            ScriptError::ValidOptionsTooSmall { .. } => "ValidOptionsTooSmall",
            ScriptError::Interface(_) => "InterfaceViolation",
            ScriptError::UnknownFunction { .. } => "UnknownFunction",
            ScriptError::ArityMismatch { .. } => "ArityMismatch",
            ScriptError::TypeMismatch { .. } => "TypeMismatch",
            ScriptError::NonPositiveFrameDims { .. } => "NonPositiveFrameDims",
            ScriptError::InvalidSampler { .. } => "InvalidSampler",
        }
    }

    /// Source position, when the error has one.
    pub fn position(&self) -> Option<(u32, u32)> {
        match self {
            ScriptError::Syntax { line, col, .. }
            | ScriptError::DuplicateFunction { line, col, .. }
            | ScriptError::UnknownFunction { line, col, .. }
            | ScriptError::ArityMismatch { line, col, .. }
            | ScriptError::TypeMismatch { line, col, .. }
            | ScriptError::NonPositiveFrameDims { line, col } => Some((*line, *col)),
            _ => None,
        }
    }
}

impl From<InterfaceViolation> for ScriptError {
    fn from(v: InterfaceViolation) -> Self {
        match v.kind {
            ViolationKind::MissingDocField { field, .. } => ScriptError::MissingDocField {
                function: v.function,
                field,
            },
            ViolationKind::ValidOptionsTooSmall { value } => ScriptError::ValidOptionsTooSmall {
                function: v.function,
                value,
            },
            _ => ScriptError::Interface(v),
        }
    }
}

fn convert(raw: RawFunction) -> Result<LibraryFunction, ScriptError> {
    let mut frame_param = None;
    let mut params = Vec::new();
    for (i, (name, ty, span)) in raw.params.into_iter().enumerate() {
        match ty {
            TypeName::Frame if i == 0 => frame_param = Some(name),
            TypeName::Frame => {
                return Err(ScriptError::Syntax {
                    line: span.line,
                    col: span.col,
                    msg: format!("`{name}`: Frame is only allowed as the first parameter"),
                })
            }
            TypeName::Param(ty) => params.push(Param { name, ty }),
            TypeName::Other(t) => {
                return Err(ScriptError::Syntax {
                    line: span.line,
                    col: span.col,
                    msg: format!(
                        "unknown parameter type `{t}` (expected float, int, bool, enum(...))"
                    ),
                })
            }
        }
    }
    Ok(LibraryFunction {
        name: raw.name,
        frame_param,
        params,
        return_type: raw.return_type,
        doc: raw.doc.map(|d| d.into_doc()).unwrap_or_default(),
        body: raw.body,
        span: raw.span,
    })
}

fn raw_functions(text: &str) -> Result<Vec<RawFunction>, ScriptError> {
    let raws = Parser::new(text)?.functions()?;
    let mut seen = BTreeSet::new();
    for r in &raws {
        if !seen.insert(r.name.clone()) {
            return Err(ScriptError::DuplicateFunction {
                name: r.name.clone(),
                line: r.span.line,
                col: r.span.col,
            });
        }
    }
    Ok(raws)
}

/// Parse a library without enforcing the interface rules. Missing doc fields
/// are left empty; use [`validate_interface`] to list what is wrong.
pub fn parse_library_lenient(text: &str) -> Result<Library, ScriptError> {
    let mut lib = Library::new();
    for raw in raw_functions(text)? {
        lib.insert(convert(raw)?);
    }
    Ok(lib)
}

/// Parse a library and require every interface and body rule to hold.
pub fn parse_library(text: &str) -> Result<Library, ScriptError> {
    let lib = parse_library_lenient(text)?;
    if let Some(v) = validate_interface(&lib).into_iter().next() {
        return Err(v.into());
    }
    if let Some(v) = check_bodies(&lib).into_iter().next() {
        return Err(v.into());
    }
    Ok(lib)
}

/// Parse standalone function definitions (doc blocks optional), e.g. candidate
/// implementations returned by a model.
pub fn parse_functions(text: &str) -> Result<Vec<LibraryFunction>, ScriptError> {
    raw_functions(text)?.into_iter().map(convert).collect()
}

/// Parse sampler definitions: `fn name(cf: Frame) -> PartList { ... }` bodies
/// that may call any function of `lib`.
pub fn parse_samplers(text: &str, lib: &Library) -> Result<Vec<Sampler>, ScriptError> {
    let mut out = Vec::new();
    for raw in raw_functions(text)? {
        let f = convert(raw)?;
        let invalid = |msg: &str| ScriptError::InvalidSampler {
            name: f.name.clone(),
            msg: msg.to_string(),
        };
        let frame_param = f
            .frame_param
            .clone()
            .ok_or_else(|| invalid("first parameter must be `cf: Frame`"))?;
        if !f.params.is_empty() {
            return Err(invalid("samplers take only the frame parameter"));
        }
        if f.return_type != PART_LIST_TYPE {
            return Err(invalid("samplers must return PartList"));
        }
        let body = f
            .body
            .clone()
            .ok_or_else(|| invalid("sampler has no body"))?;
        if let Some(v) = check_body(&f.name, &body, [], lib).into_iter().next() {
            return Err(invalid(&v.to_string()));
        }
        out.push(Sampler {
            name: f.name,
            frame_param,
            body,
            span: f.span,
        });
    }
    Ok(out)
}

/// Parse and type-check a client program against `lib`.
pub fn parse_program(text: &str, lib: &Library) -> Result<ShapeProgram, ScriptError> {
    Parser::new(text)?.program(lib)
}

/// Parse a single expression in which `?` placeholders are permitted.
pub fn parse_expr_masked(text: &str) -> Result<Expr, ScriptError> {
    let mut p = Parser::new(text)?.with_masked();
    let e = p.expr()?;
    if !p.at_end() {
        return Err(ScriptError::Syntax {
            line: 1,
            col: 1,
            msg: "trailing input after expression".into(),
        });
    }
    Ok(e)
}

/// Degrees of freedom of a program: counted tokens of its canonical print.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DofCount(pub usize);

impl DofCount {
    pub fn value(self) -> usize {
        self.0
    }
}

/// Count the lexer tokens of the canonical printing, excluding parentheses,
/// brackets, braces, commas, semicolons, colons and `=`. Each counted token
/// weighs 1.
pub fn count_dof_tokens(prog: &ShapeProgram) -> DofCount {
    DofCount(prog.statements.iter().map(statement_dof).sum())
}

pub fn statement_dof(stmt: &ProgramStmt) -> usize {
    count_text_tokens(&print_program_stmt(stmt))
}

fn count_text_tokens(text: &str) -> usize {
    lexer::lex(text)
        .expect("canonical print always lexes")
        .iter()
        .filter(|t| !t.kind.is_punctuation())
        .count()
}
