// Recursive-descent parser for ShapeScript.
//
// Three entry shapes share one expression grammar:
//   * library / sampler sources: a sequence of `fn` items with optional doc blocks;
//   * client programs: a flat list of call statements with literal arguments;
//   * single call lines, used when reading model responses that may contain `?`.

use std::collections::BTreeMap;

use super::ast::*;
use super::lexer::{lex, Token, TokenKind};
use super::ScriptError;
use crate::shape::CoordFrame;

pub(crate) struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    allow_masked: bool,
}

/// A parsed `fn` item before it is classified as a library function or sampler.
#[derive(Debug, Clone)]
pub(crate) struct RawFunction {
    pub name: String,
    pub params: Vec<(String, TypeName, Span)>,
    pub return_type: String,
    pub doc: Option<RawDoc>,
    pub body: Option<Block>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum TypeName {
    Frame,
    Param(ParamType),
    Other(String),
}

#[derive(Debug, Clone, Default)]
pub(crate) struct RawDoc {
    pub description: Option<String>,
    pub parts: Option<String>,
    pub valid_options: Option<Vec<i64>>,
    pub params: BTreeMap<String, String>,
}

impl RawDoc {
    pub fn into_doc(self) -> DocString {
        DocString {
            description: self.description.unwrap_or_default(),
            parts_spec: self.parts.unwrap_or_default(),
            valid_options: self.valid_options.unwrap_or_default(),
            parameters_spec: self.params,
        }
    }
}

impl Parser {
    pub fn new(src: &str) -> Result<Self, ScriptError> {
        Ok(Parser {
            tokens: lex(src)?,
            pos: 0,
            allow_masked: false,
        })
    }

    pub fn with_masked(mut self) -> Self {
        self.allow_masked = true;
        self
    }

    fn peek(&self) -> Option<&TokenKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn peek_at(&self, n: usize) -> Option<&TokenKind> {
        self.tokens.get(self.pos + n).map(|t| &t.kind)
    }

    fn span(&self) -> Span {
        self.tokens
            .get(self.pos)
            .or_else(|| self.tokens.last())
            .map(|t| t.span)
            .unwrap_or(Span::new(1, 1))
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek() == Some(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn error(&self, msg: impl Into<String>) -> ScriptError {
        let span = self.span();
        ScriptError::Syntax {
            line: span.line,
            col: span.col,
            msg: msg.into(),
        }
    }

    fn unexpected(&self, expected: &str) -> ScriptError {
        match self.peek() {
            Some(k) => self.error(format!("expected {expected}, found {k}")),
            None => self.error(format!("expected {expected}, found end of input")),
        }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<Span, ScriptError> {
        let span = self.span();
        if self.eat(&kind) {
            Ok(span)
        } else {
            Err(self.unexpected(&kind.to_string()))
        }
    }

    fn ident(&mut self) -> Result<(String, Span), ScriptError> {
        let span = self.span();
        match self.peek() {
            Some(TokenKind::Ident(name)) => {
                let name = name.clone();
                self.pos += 1;
                Ok((name, span))
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    // ---- items ----------------------------------------------------------

    pub fn functions(&mut self) -> Result<Vec<RawFunction>, ScriptError> {
        let mut out = Vec::new();
        while !self.at_end() {
            out.push(self.function()?);
        }
        Ok(out)
    }

    fn doc_block(&mut self) -> Result<Option<RawDoc>, ScriptError> {
        let mut lines = Vec::new();
        while let Some(TokenKind::Doc(text)) = self.peek() {
            lines.push((text.clone(), self.span()));
            self.pos += 1;
        }
        if lines.is_empty() {
            return Ok(None);
        }
        parse_doc(&lines).map(Some)
    }

    fn function(&mut self) -> Result<RawFunction, ScriptError> {
        let doc = self.doc_block()?;
        let span = self.expect(TokenKind::Fn)?;
        let (name, _) = self.ident()?;
        self.expect(TokenKind::LParen)?;
        let mut params = Vec::new();
        if !self.eat(&TokenKind::RParen) {
            loop {
                let (pname, pspan) = self.ident()?;
                self.expect(TokenKind::Colon)?;
                let ty = self.type_name()?;
                params.push((pname, ty, pspan));
                if self.eat(&TokenKind::Comma) {
                    continue;
                }
                self.expect(TokenKind::RParen)?;
                break;
            }
        }
        self.expect(TokenKind::Arrow)?;
        let (return_type, _) = self.ident()?;
        let body = if self.eat(&TokenKind::Semicolon) {
            None
        } else {
            Some(self.block()?)
        };
        Ok(RawFunction {
            name,
            params,
            return_type,
            doc,
            body,
            span,
        })
    }

    fn type_name(&mut self) -> Result<TypeName, ScriptError> {
        let (name, _) = self.ident()?;
        Ok(match name.as_str() {
            "float" => TypeName::Param(ParamType::Float),
            "int" => TypeName::Param(ParamType::Int),
            "bool" => TypeName::Param(ParamType::Bool),
            "Frame" => TypeName::Frame,
            "enum" => {
                self.expect(TokenKind::LParen)?;
                let mut opts = Vec::new();
                if !self.eat(&TokenKind::RParen) {
                    loop {
                        let (opt, _) = self.ident()?;
                        opts.push(opt);
                        if self.eat(&TokenKind::Comma) {
                            continue;
                        }
                        self.expect(TokenKind::RParen)?;
                        break;
                    }
                }
                TypeName::Param(ParamType::Enum(opts))
            }
            _ => TypeName::Other(name),
        })
    }

    // ---- statements -----------------------------------------------------

    fn block(&mut self) -> Result<Block, ScriptError> {
        self.expect(TokenKind::LBrace)?;
        let mut out = Vec::new();
        while !self.eat(&TokenKind::RBrace) {
            if self.at_end() {
                return Err(self.unexpected("`}`"));
            }
            out.push(self.statement()?);
        }
        Ok(out)
    }

    pub fn statement(&mut self) -> Result<Stmt, ScriptError> {
        let span = self.span();
        match self.peek() {
            Some(TokenKind::Let) => {
                self.pos += 1;
                let (name, _) = self.ident()?;
                self.expect(TokenKind::Assign)?;
                let value = self.expr()?;
                self.expect(TokenKind::Semicolon)?;
                Ok(Stmt::Let { name, value, span })
            }
            Some(TokenKind::For) => {
                self.pos += 1;
                let (var, _) = self.ident()?;
                self.expect(TokenKind::In)?;
                let start = self.expr()?;
                self.expect(TokenKind::DotDot)?;
                let end = self.expr()?;
                let body = self.block()?;
                Ok(Stmt::For {
                    var,
                    start,
                    end,
                    body,
                    span,
                })
            }
            Some(TokenKind::If) => self.if_stmt(),
            Some(TokenKind::Return) => {
                self.pos += 1;
                let value = self.expr()?;
                self.expect(TokenKind::Semicolon)?;
                Ok(Stmt::Return { value, span })
            }
            Some(TokenKind::Ident(_)) if self.peek_at(1) == Some(&TokenKind::Assign) => {
                let (name, _) = self.ident()?;
                self.expect(TokenKind::Assign)?;
                let value = self.expr()?;
                self.expect(TokenKind::Semicolon)?;
                Ok(Stmt::Assign { name, value, span })
            }
            Some(TokenKind::Doc(_)) => Err(self.error("doc comment is only allowed before `fn`")),
            _ => {
                let expr = self.expr()?;
                self.expect(TokenKind::Semicolon)?;
                Ok(Stmt::Expr { expr, span })
            }
        }
    }

    fn if_stmt(&mut self) -> Result<Stmt, ScriptError> {
        let span = self.expect(TokenKind::If)?;
        let cond = self.expr()?;
        let then_block = self.block()?;
        let else_block = if self.eat(&TokenKind::Else) {
            if self.peek() == Some(&TokenKind::If) {
                Some(vec![self.if_stmt()?])
            } else {
                Some(self.block()?)
            }
        } else {
            None
        };
        Ok(Stmt::If {
            cond,
            then_block,
            else_block,
            span,
        })
    }

    // ---- expressions ----------------------------------------------------

    pub fn expr(&mut self) -> Result<Expr, ScriptError> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek()? {
            TokenKind::Or => BinOp::Or,
            TokenKind::And => BinOp::And,
            TokenKind::EqEq => BinOp::Eq,
            TokenKind::NotEq => BinOp::Ne,
            TokenKind::Lt => BinOp::Lt,
            TokenKind::Le => BinOp::Le,
            TokenKind::Gt => BinOp::Gt,
            TokenKind::Ge => BinOp::Ge,
            TokenKind::Plus => BinOp::Add,
            TokenKind::Minus => BinOp::Sub,
            TokenKind::Star => BinOp::Mul,
            TokenKind::Slash => BinOp::Div,
            TokenKind::Percent => BinOp::Rem,
            _ => return None,
        })
    }

    // Precedence climbing; every level is left-associative.
    fn binary(&mut self, min_prec: u8) -> Result<Expr, ScriptError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            let span = self.span();
            self.pos += 1;
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ScriptError> {
        let span = self.span();
        if self.eat(&TokenKind::Minus) {
            let inner = self.unary()?;
            return Ok(Expr::new(ExprKind::Unary(UnOp::Neg, Box::new(inner)), span));
        }
        if self.eat(&TokenKind::Not) {
            let inner = self.unary()?;
            return Ok(Expr::new(ExprKind::Unary(UnOp::Not, Box::new(inner)), span));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Expr, ScriptError> {
        let mut e = self.primary()?;
        loop {
            let span = self.span();
            if self.eat(&TokenKind::Dot) {
                let (field, _) = self.ident()?;
                e = Expr::new(ExprKind::Field(Box::new(e), field), span);
            } else if self.eat(&TokenKind::LBracket) {
                let idx = self.expr()?;
                self.expect(TokenKind::RBracket)?;
                e = Expr::new(ExprKind::Index(Box::new(e), Box::new(idx)), span);
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> Result<Expr, ScriptError> {
        let span = self.span();
        let tok = match self.bump() {
            Some(t) => t,
            None => return Err(self.unexpected("expression")),
        };
        let kind = match tok.kind {
            TokenKind::Int(v) => ExprKind::Int(v),
            TokenKind::Float(v) => ExprKind::Float(v),
            TokenKind::Str(s) => ExprKind::Str(s),
            TokenKind::True => ExprKind::Bool(true),
            TokenKind::False => ExprKind::Bool(false),
            TokenKind::Question if self.allow_masked => ExprKind::Masked,
            TokenKind::LParen => {
                let inner = self.expr()?;
                self.expect(TokenKind::RParen)?;
                return Ok(inner);
            }
            TokenKind::LBracket => ExprKind::List(self.expr_list(TokenKind::RBracket)?),
            TokenKind::Ident(name) => {
                if self.eat(&TokenKind::LParen) {
                    ExprKind::Call(name, self.expr_list(TokenKind::RParen)?)
                } else {
                    ExprKind::Var(name)
                }
            }
            other => {
                self.pos -= 1;
                return Err(self.error(format!("expected expression, found {other}")));
            }
        };
        Ok(Expr::new(kind, span))
    }

    fn expr_list(&mut self, close: TokenKind) -> Result<Vec<Expr>, ScriptError> {
        let mut out = Vec::new();
        if self.eat(&close) {
            return Ok(out);
        }
        loop {
            out.push(self.expr()?);
            if self.eat(&TokenKind::Comma) {
                // allow a trailing comma
                if self.eat(&close) {
                    return Ok(out);
                }
                continue;
            }
            self.expect(close)?;
            return Ok(out);
        }
    }

    // ---- client programs ------------------------------------------------

    pub fn program(&mut self, lib: &Library) -> Result<ShapeProgram, ScriptError> {
        let mut statements = Vec::new();
        while !self.at_end() {
            let span = self.span();
            let expr = self.expr()?;
            self.expect(TokenKind::Semicolon)?;
            statements.push(program_stmt(&expr, lib, span)?);
        }
        Ok(ShapeProgram { statements })
    }
}

fn parse_doc(lines: &[(String, Span)]) -> Result<RawDoc, ScriptError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Field {
        Description,
        Parts,
        Param,
        ValidOptions,
    }
    let mut doc = RawDoc::default();
    let mut current = Field::Description;
    let mut current_param = String::new();
    let append = |slot: &mut Option<String>, text: &str| {
        let s = slot.get_or_insert_with(String::new);
        if !s.is_empty() && !text.is_empty() {
            s.push(' ');
        }
        s.push_str(text);
    };
    for (line, span) in lines {
        let syntax = |msg: String| ScriptError::Syntax {
            line: span.line,
            col: span.col,
            msg,
        };
        let line = line.trim();
        if let Some(rest) = line.strip_prefix('@') {
            let (tag, text) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
            let text = text.trim();
            match tag {
                "description" => {
                    current = Field::Description;
                    append(&mut doc.description, text);
                }
                "parts" => {
                    current = Field::Parts;
                    append(&mut doc.parts, text);
                }
                "valid_options" => {
                    current = Field::ValidOptions;
                    doc.valid_options = Some(parse_int_list(text).map_err(syntax)?);
                }
                "param" => {
                    let (name, desc) = text.split_once(char::is_whitespace).unwrap_or((text, ""));
                    if name.is_empty() {
                        return Err(syntax("`@param` needs a parameter name".into()));
                    }
                    current = Field::Param;
                    current_param = name.to_string();
                    doc.params.insert(name.to_string(), desc.trim().to_string());
                }
                other => return Err(syntax(format!("unknown doc tag `@{other}`"))),
            }
        } else {
            match current {
                Field::Description => append(&mut doc.description, line),
                Field::Parts => append(&mut doc.parts, line),
                Field::Param => {
                    let entry = doc.params.entry(current_param.clone()).or_default();
                    let mut slot = Some(std::mem::take(entry));
                    append(&mut slot, line);
                    *entry = slot.unwrap_or_default();
                }
                Field::ValidOptions => {
                    if !line.is_empty() {
                        return Err(syntax("unexpected text after `@valid_options`".into()));
                    }
                }
            }
        }
    }
    Ok(doc)
}

fn parse_int_list(text: &str) -> Result<Vec<i64>, String> {
    let inner = text
        .trim()
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| format!("expected `[n, ...]`, found `{text}`"))?;
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    inner
        .split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<i64>()
                .map_err(|_| format!("valid option `{s}` is not an integer"))
        })
        .collect()
}

/// Extract a literal from a (possibly negated) literal expression.
pub(crate) fn expr_literal(e: &Expr) -> Option<Literal> {
    match &e.kind {
        ExprKind::Int(v) => Some(Literal::Int(*v)),
        ExprKind::Float(v) => Some(Literal::Float(*v)),
        ExprKind::Bool(b) => Some(Literal::Bool(*b)),
        ExprKind::Str(s) => Some(Literal::Str(s.clone())),
        ExprKind::Unary(UnOp::Neg, inner) => match expr_literal(inner)? {
            Literal::Int(v) => v.checked_neg().map(Literal::Int),
            Literal::Float(v) => Some(Literal::Float(-v)),
            _ => None,
        },
        _ => None,
    }
}

fn number(e: &Expr) -> Option<f64> {
    match expr_literal(e)? {
        Literal::Int(v) => Some(v as f64),
        Literal::Float(v) => Some(v),
        _ => None,
    }
}

/// Parse `frame(w, h, d, x, y, z)` with numeric literal arguments.
pub(crate) fn frame_literal(e: &Expr) -> Result<CoordFrame, ScriptError> {
    let bad = |msg: &str| ScriptError::TypeMismatch {
        line: e.span.line,
        col: e.span.col,
        msg: msg.to_string(),
    };
    match &e.kind {
        ExprKind::Call(name, args) if name == "frame" => {
            if args.len() != 6 {
                return Err(ScriptError::ArityMismatch {
                    name: "frame".into(),
                    expected: 6,
                    found: args.len(),
                    line: e.span.line,
                    col: e.span.col,
                });
            }
            let mut v = [0.0; 6];
            for (slot, a) in v.iter_mut().zip(args) {
                *slot = number(a).ok_or_else(|| bad("frame arguments must be numeric literals"))?;
            }
            let frame = CoordFrame::from_whd_xyz(v);
            if !frame.dims.all_positive() {
                return Err(ScriptError::NonPositiveFrameDims {
                    line: e.span.line,
                    col: e.span.col,
                });
            }
            Ok(frame)
        }
        _ => Err(bad("expected a `frame(w, h, d, x, y, z)` literal")),
    }
}

fn program_stmt(e: &Expr, lib: &Library, span: Span) -> Result<ProgramStmt, ScriptError> {
    let (name, args) = match &e.kind {
        ExprKind::Call(name, args) => (name, args),
        _ => {
            return Err(ScriptError::Syntax {
                line: span.line,
                col: span.col,
                msg: "program statements must be function calls".into(),
            })
        }
    };
    if name == "make_part" {
        if args.len() != 2 {
            return Err(ScriptError::ArityMismatch {
                name: name.clone(),
                expected: 2,
                found: args.len(),
                line: span.line,
                col: span.col,
            });
        }
        let frame = frame_literal(&args[0])?;
        let label = match &args[1].kind {
            ExprKind::Str(s) => s.clone(),
            _ => {
                return Err(ScriptError::TypeMismatch {
                    line: args[1].span.line,
                    col: args[1].span.col,
                    msg: "make_part label must be a string literal".into(),
                })
            }
        };
        return Ok(ProgramStmt::MakePart { frame, label });
    }
    let f = lib.get(name).ok_or_else(|| ScriptError::UnknownFunction {
        name: name.clone(),
        line: span.line,
        col: span.col,
    })?;
    if args.len() != f.params.len() + 1 {
        return Err(ScriptError::ArityMismatch {
            name: name.clone(),
            expected: f.params.len() + 1,
            found: args.len(),
            line: span.line,
            col: span.col,
        });
    }
    let frame = frame_literal(&args[0])?;
    let mut lits = Vec::with_capacity(f.params.len());
    for (p, a) in f.params.iter().zip(&args[1..]) {
        let mismatch = |msg: String| ScriptError::TypeMismatch {
            line: a.span.line,
            col: a.span.col,
            msg,
        };
        let lit = expr_literal(a)
            .ok_or_else(|| mismatch(format!("argument `{}` must be a literal", p.name)))?;
        let lit = p.ty.coerce(&lit).ok_or_else(|| {
            mismatch(format!(
                "argument `{}` expects {}, found `{lit}`",
                p.name,
                describe_type(&p.ty)
            ))
        })?;
        lits.push(lit);
    }
    Ok(ProgramStmt::Call {
        fn_name: name.clone(),
        frame,
        args: lits,
    })
}

pub(crate) fn describe_type(ty: &ParamType) -> String {
    match ty {
        ParamType::Enum(opts) => format!("one of {opts:?}"),
        other => other.name().to_string(),
    }
}
