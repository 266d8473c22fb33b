use std::collections::HashMap;

use rand::Rng;

use super::rng::{self, RngStreams};
use super::{ExecError, ExecFlag, ExecLimits};
use crate::shape::{AxisBox, CoordFrame, Part};
use crate::shapescript::{
    print_expr, quantize_frame, quantize_literal, BinOp, Block, Expr, ExprKind, Library,
    LibraryFunction, Literal, ParamType, ProgramStmt, Span, Stmt, UnOp,
};

const MAX_CALL_DEPTH: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(String),
    Frame(CoordFrame),
    Part(Part),
    List(Vec<Value>),
}

impl Value {
    fn type_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Float(_) => "float",
            Value::Bool(_) => "bool",
            Value::Str(_) => "string",
            Value::Frame(_) => "Frame",
            Value::Part(_) => "Part",
            Value::List(_) => "list",
        }
    }

    pub(crate) fn from_literal(l: &Literal) -> Value {
        match l {
            Literal::Int(v) => Value::Int(*v),
            Literal::Float(v) => Value::Float(*v),
            Literal::Bool(b) => Value::Bool(*b),
            Literal::Str(s) => Value::Str(s.clone()),
        }
    }

    fn to_literal(&self) -> Option<Literal> {
        Some(match self {
            Value::Int(v) => Literal::Int(*v),
            Value::Float(v) => Literal::Float(*v),
            Value::Bool(b) => Literal::Bool(*b),
            Value::Str(s) => Literal::Str(s.clone()),
            _ => return None,
        })
    }
}

type Flow = Option<Value>;

/// One abstraction call or `make_part` made directly by a sampler body.
#[derive(Debug, Clone)]
pub(crate) struct TraceEntry {
    pub stmt: ProgramStmt,
    pub parts: Vec<Part>,
}

pub(crate) struct Interp<'a> {
    lib: &'a Library,
    limits: &'a ExecLimits,
    steps: usize,
    depth: usize,
    rng: RngStreams,
    pub flags: Vec<ExecFlag>,
    /// Set while running a sampler: top-level calls are recorded here.
    pub trace: Option<Vec<TraceEntry>>,
    current_fn: String,
    site_keys: HashMap<*const Expr, String>,
}

struct Env {
    scopes: Vec<HashMap<String, Value>>,
}

impl Env {
    fn new() -> Self {
        Env {
            scopes: vec![HashMap::new()],
        }
    }

    fn get(&self, name: &str) -> Option<&Value> {
        self.scopes.iter().rev().find_map(|s| s.get(name))
    }

    fn define(&mut self, name: &str, v: Value) {
        self.scopes
            .last_mut()
            .expect("at least one scope")
            .insert(name.to_string(), v);
    }

    fn assign(&mut self, name: &str, v: Value) -> bool {
        for s in self.scopes.iter_mut().rev() {
            if let Some(slot) = s.get_mut(name) {
                *slot = v;
                return true;
            }
        }
        false
    }
}

fn runtime(span: Span, msg: impl Into<String>) -> ExecError {
    ExecError::Runtime {
        line: span.line,
        col: span.col,
        msg: msg.into(),
    }
}

fn finite(v: f64, span: Span) -> Result<f64, ExecError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ExecError::NonFiniteValue {
            line: span.line,
            col: span.col,
        })
    }
}

fn num(v: &Value, span: Span) -> Result<f64, ExecError> {
    match v {
        Value::Int(i) => Ok(*i as f64),
        Value::Float(f) => Ok(*f),
        other => Err(runtime(
            span,
            format!("expected a number, found {}", other.type_name()),
        )),
    }
}

fn int(v: &Value, span: Span) -> Result<i64, ExecError> {
    match v {
        Value::Int(i) => Ok(*i),
        other => Err(runtime(
            span,
            format!("expected an int, found {}", other.type_name()),
        )),
    }
}

fn boolean(v: &Value, span: Span) -> Result<bool, ExecError> {
    match v {
        Value::Bool(b) => Ok(*b),
        other => Err(runtime(
            span,
            format!("expected a bool, found {}", other.type_name()),
        )),
    }
}

fn frame_of(v: &Value, span: Span) -> Result<CoordFrame, ExecError> {
    match v {
        Value::Frame(f) => Ok(*f),
        Value::Part(p) => Ok(p.frame()),
        other => Err(runtime(
            span,
            format!("expected a Frame, found {}", other.type_name()),
        )),
    }
}

/// Flatten a value into parts; nested lists are flattened.
pub(crate) fn collect_parts(v: &Value, span: Span, out: &mut Vec<Part>) -> Result<(), ExecError> {
    match v {
        Value::Part(p) => out.push(p.clone()),
        Value::List(items) => {
            for it in items {
                collect_parts(it, span, out)?;
            }
        }
        other => {
            return Err(runtime(
                span,
                format!("expected a list of parts, found {}", other.type_name()),
            ))
        }
    }
    Ok(())
}

fn make_box(vals: &[f64; 6], span: Span) -> Result<CoordFrame, ExecError> {
    for v in vals {
        finite(*v, span)?;
    }
    let f = CoordFrame::from_whd_xyz(*vals);
    if !f.dims.all_positive() {
        return Err(ExecError::NonPositiveDims {
            line: span.line,
            col: span.col,
        });
    }
    Ok(f)
}

pub fn bounding_frame(parts: &[Part]) -> Option<CoordFrame> {
    crate::shape::bounds_of(parts).map(|(lo, hi)| CoordFrame::from_min_max(lo, hi))
}

impl<'a> Interp<'a> {
    pub fn new(lib: &'a Library, limits: &'a ExecLimits, seed: u64) -> Self {
        Interp {
            lib,
            limits,
            steps: 0,
            depth: 0,
            rng: RngStreams::new(seed),
            flags: Vec::new(),
            trace: None,
            current_fn: String::new(),
            site_keys: HashMap::new(),
        }
    }

    fn step(&mut self) -> Result<(), ExecError> {
        self.steps += 1;
        if self.steps > self.limits.max_steps {
            return Err(ExecError::StepLimitExceeded {
                limit: self.limits.max_steps,
            });
        }
        Ok(())
    }

    /// Type-check and coerce arguments against a signature.
    pub fn bind_args(
        &self,
        f: &LibraryFunction,
        args: &[Literal],
    ) -> Result<Vec<Literal>, ExecError> {
        if args.len() != f.params.len() {
            return Err(ExecError::ArgumentMismatch {
                function: f.name.clone(),
                msg: format!(
                    "expected {} arguments, found {}",
                    f.params.len(),
                    args.len()
                ),
            });
        }
        f.params
            .iter()
            .zip(args)
            .map(|(p, a)| {
                p.ty.coerce(a).ok_or_else(|| ExecError::ArgumentMismatch {
                    function: f.name.clone(),
                    msg: format!(
                        "parameter `{}` ({}) cannot take `{a}`",
                        p.name,
                        type_label(&p.ty)
                    ),
                })
            })
            .collect()
    }

    /// Run `f` with a frame and typed arguments, returning its parts.
    pub fn call_function(
        &mut self,
        f: &LibraryFunction,
        cf: CoordFrame,
        args: &[Literal],
    ) -> Result<Vec<Part>, ExecError> {
        let body = f.body.as_ref().ok_or_else(|| ExecError::MissingBody {
            function: f.name.clone(),
        })?;
        if !cf.is_valid() {
            return Err(ExecError::NonPositiveDims { line: 0, col: 0 });
        }
        let args = self.bind_args(f, args)?;
        if self.depth >= MAX_CALL_DEPTH {
            return Err(ExecError::CallDepthExceeded {
                limit: MAX_CALL_DEPTH,
            });
        }
        let mut env = Env::new();
        env.define(f.frame_name(), Value::Frame(cf));
        for (p, a) in f.params.iter().zip(&args) {
            env.define(&p.name, Value::from_literal(a));
        }
        let saved_fn = std::mem::replace(&mut self.current_fn, f.name.clone());
        self.depth += 1;
        let flow = self.exec_block(body, &mut env);
        self.depth -= 1;
        self.current_fn = saved_fn;
        let value = flow?.ok_or_else(|| ExecError::MissingReturn {
            function: f.name.clone(),
        })?;
        let mut parts = Vec::new();
        collect_parts(&value, f.span, &mut parts)?;
        if parts.len() > self.limits.max_parts {
            return Err(ExecError::PartLimitExceeded {
                limit: self.limits.max_parts,
            });
        }
        self.soft_checks(f, &cf, &parts);
        Ok(parts)
    }

    fn soft_checks(&mut self, f: &LibraryFunction, cf: &CoordFrame, parts: &[Part]) {
        let opts = &f.doc.valid_options;
        if !opts.is_empty() && !opts.contains(&(parts.len() as i64)) {
            self.flags.push(ExecFlag::ValidOptionsMismatch {
                function: f.name.clone(),
                count: parts.len(),
                valid_options: opts.clone(),
            });
        }
        let tolerance = 0.05 * cf.diagonal();
        for (i, p) in parts.iter().enumerate() {
            let lo = cf.min_corner() - p.min_corner();
            let hi = p.max_corner() - cf.max_corner();
            let excess = lo.max(hi).max_elem();
            if excess > tolerance {
                self.flags.push(ExecFlag::OutsideFrame {
                    function: f.name.clone(),
                    part_index: i,
                    excess,
                });
            }
        }
    }

    /// Run a sampler body with call tracing enabled.
    pub fn run_traced(
        &mut self,
        name: &str,
        frame_param: &str,
        body: &Block,
        cf: CoordFrame,
    ) -> Result<Vec<TraceEntry>, ExecError> {
        self.trace = Some(Vec::new());
        let mut env = Env::new();
        env.define(frame_param, Value::Frame(cf));
        self.current_fn = name.to_string();
        self.exec_block(body, &mut env)?;
        Ok(self.trace.take().unwrap_or_default())
    }

    fn exec_block(&mut self, block: &Block, env: &mut Env) -> Result<Flow, ExecError> {
        env.scopes.push(HashMap::new());
        let result = self.exec_stmts(block, env);
        env.scopes.pop();
        result
    }

    fn exec_stmts(&mut self, block: &Block, env: &mut Env) -> Result<Flow, ExecError> {
        for stmt in block {
            self.step()?;
            match stmt {
                Stmt::Let { name, value, .. } => {
                    let v = self.eval(value, env)?;
                    env.define(name, v);
                }
                Stmt::Assign { name, value, span } => {
                    let v = self.eval(value, env)?;
                    if !env.assign(name, v) {
                        return Err(runtime(
                            *span,
                            format!("assignment to undeclared variable `{name}`"),
                        ));
                    }
                }
                Stmt::For {
                    var,
                    start,
                    end,
                    body,
                    span,
                } => {
                    let s = int(&self.eval(start, env)?, start.span)?;
                    let e = int(&self.eval(end, env)?, end.span)?;
                    let count = e.saturating_sub(s).max(0);
                    if count as u64 > self.limits.max_loop_iters as u64 {
                        return Err(ExecError::LoopLimitExceeded {
                            limit: self.limits.max_loop_iters,
                            requested: count,
                            line: span.line,
                            col: span.col,
                        });
                    }
                    for i in s..e {
                        env.scopes.push(HashMap::new());
                        env.define(var, Value::Int(i));
                        let flow = self.exec_block(body, env);
                        env.scopes.pop();
                        if let Some(v) = flow? {
                            return Ok(Some(v));
                        }
                    }
                }
                Stmt::If {
                    cond,
                    then_block,
                    else_block,
                    ..
                } => {
                    let c = boolean(&self.eval(cond, env)?, cond.span)?;
                    let flow = if c {
                        self.exec_block(then_block, env)?
                    } else if let Some(b) = else_block {
                        self.exec_block(b, env)?
                    } else {
                        None
                    };
                    if flow.is_some() {
                        return Ok(flow);
                    }
                }
                Stmt::Return { value, .. } => return Ok(Some(self.eval(value, env)?)),
                Stmt::Expr { expr, .. } => {
                    self.eval(expr, env)?;
                }
            }
        }
        Ok(None)
    }

    fn eval(&mut self, e: &Expr, env: &mut Env) -> Result<Value, ExecError> {
        self.step()?;
        let span = e.span;
        Ok(match &e.kind {
            ExprKind::Int(v) => Value::Int(*v),
            ExprKind::Float(v) => Value::Float(*v),
            ExprKind::Bool(b) => Value::Bool(*b),
            ExprKind::Str(s) => Value::Str(s.clone()),
            ExprKind::Masked => return Err(runtime(span, "masked value `?` cannot be executed")),
            ExprKind::Var(name) => env
                .get(name)
                .cloned()
                .ok_or_else(|| runtime(span, format!("undefined variable `{name}`")))?,
            ExprKind::Field(base, field) => {
                let b = self.eval(base, env)?;
                self.field(&b, field, span)?
            }
            ExprKind::Index(base, idx) => {
                let b = self.eval(base, env)?;
                let i = int(&self.eval(idx, env)?, idx.span)?;
                match b {
                    Value::List(items) => usize::try_from(i)
                        .ok()
                        .and_then(|i| items.get(i).cloned())
                        .ok_or_else(|| {
                            runtime(
                                span,
                                format!("index {i} out of range for list of {}", items.len()),
                            )
                        })?,
                    other => {
                        return Err(runtime(span, format!("cannot index {}", other.type_name())))
                    }
                }
            }
            ExprKind::List(items) => {
                let mut out = Vec::with_capacity(items.len());
                for it in items {
                    out.push(self.eval(it, env)?);
                }
                Value::List(out)
            }
            ExprKind::Unary(op, inner) => {
                let v = self.eval(inner, env)?;
                match (op, v) {
                    (UnOp::Neg, Value::Int(i)) => Value::Int(
                        i.checked_neg()
                            .ok_or_else(|| runtime(span, "integer overflow"))?,
                    ),
                    (UnOp::Neg, Value::Float(f)) => Value::Float(-f),
                    (UnOp::Not, Value::Bool(b)) => Value::Bool(!b),
                    (op, v) => {
                        return Err(runtime(
                            span,
                            format!("cannot apply {op:?} to {}", v.type_name()),
                        ))
                    }
                }
            }
            ExprKind::Binary(op, lhs, rhs) => self.binary(*op, lhs, rhs, env, span)?,
            ExprKind::Call(name, args) => self.call(e, name, args, env)?,
        })
    }

    fn field(&self, b: &Value, field: &str, span: Span) -> Result<Value, ExecError> {
        let (center, dims) = match b {
            Value::Frame(f) => (f.center, f.dims),
            Value::Part(p) => {
                if field == "label" {
                    return Ok(Value::Str(p.label.clone()));
                }
                (p.center, p.dims)
            }
            other => {
                return Err(runtime(
                    span,
                    format!("{} has no field `{field}`", other.type_name()),
                ))
            }
        };
        let lo = center - dims * 0.5;
        let hi = center + dims * 0.5;
        let v = match field {
            "w" => dims.x,
            "h" => dims.y,
            "d" => dims.z,
            "x" => center.x,
            "y" => center.y,
            "z" => center.z,
            "min_x" => lo.x,
            "max_x" => hi.x,
            "min_y" => lo.y,
            "max_y" => hi.y,
            "min_z" => lo.z,
            "max_z" => hi.z,
            _ => return Err(runtime(span, format!("unknown field `{field}`"))),
        };
        Ok(Value::Float(v))
    }

    fn binary(
        &mut self,
        op: BinOp,
        lhs: &Expr,
        rhs: &Expr,
        env: &mut Env,
        span: Span,
    ) -> Result<Value, ExecError> {
        if matches!(op, BinOp::And | BinOp::Or) {
            let l = boolean(&self.eval(lhs, env)?, lhs.span)?;
            if (op == BinOp::And && !l) || (op == BinOp::Or && l) {
                return Ok(Value::Bool(l));
            }
            return Ok(Value::Bool(boolean(&self.eval(rhs, env)?, rhs.span)?));
        }
        let l = self.eval(lhs, env)?;
        let r = self.eval(rhs, env)?;
        let overflow = || runtime(span, "integer overflow");
        Ok(match (op, &l, &r) {
            (BinOp::Add, Value::List(a), Value::List(b)) => {
                Value::List(a.iter().chain(b.iter()).cloned().collect())
            }
            (BinOp::Add, Value::Str(a), Value::Str(b)) => Value::Str(format!("{a}{b}")),
            (BinOp::Eq, _, _) => Value::Bool(values_equal(&l, &r)),
            (BinOp::Ne, _, _) => Value::Bool(!values_equal(&l, &r)),
            (BinOp::Add, Value::Int(a), Value::Int(b)) => {
                Value::Int(a.checked_add(*b).ok_or_else(overflow)?)
            }
            (BinOp::Sub, Value::Int(a), Value::Int(b)) => {
                Value::Int(a.checked_sub(*b).ok_or_else(overflow)?)
            }
            (BinOp::Mul, Value::Int(a), Value::Int(b)) => {
                Value::Int(a.checked_mul(*b).ok_or_else(overflow)?)
            }
            (BinOp::Rem, Value::Int(a), Value::Int(b)) => {
                if *b == 0 {
                    return Err(ExecError::NonFiniteValue {
                        line: span.line,
                        col: span.col,
                    });
                }
                Value::Int(a.rem_euclid(*b))
            }
            (BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge, _, _) => {
                let a = num(&l, lhs.span)?;
                let b = num(&r, rhs.span)?;
                Value::Bool(match op {
                    BinOp::Lt => a < b,
                    BinOp::Le => a <= b,
                    BinOp::Gt => a > b,
                    _ => a >= b,
                })
            }
            (BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Rem, _, _) => {
                let a = num(&l, lhs.span)?;
                let b = num(&r, rhs.span)?;
                let v = match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    _ => a.rem_euclid(b),
                };
                Value::Float(finite(v, span)?)
            }
            _ => unreachable!("logical operators handled above"),
        })
    }

    fn call(
        &mut self,
        e: &Expr,
        name: &str,
        args: &[Expr],
        env: &mut Env,
    ) -> Result<Value, ExecError> {
        let span = e.span;
        if let Some(f) = self.lib.get(name) {
            let mut vals = Vec::with_capacity(args.len());
            for a in args {
                vals.push(self.eval(a, env)?);
            }
            if vals.len() != f.params.len() + 1 {
                return Err(ExecError::ArgumentMismatch {
                    function: name.to_string(),
                    msg: format!(
                        "expected {} arguments, found {}",
                        f.params.len() + 1,
                        vals.len()
                    ),
                });
            }
            let mut cf = frame_of(&vals[0], args[0].span)?;
            let mut lits = Vec::with_capacity(f.params.len());
            for (v, a) in vals[1..].iter().zip(&args[1..]) {
                lits.push(v.to_literal().ok_or_else(|| {
                    runtime(
                        a.span,
                        format!("cannot pass {} as a parameter", v.type_name()),
                    )
                })?);
            }
            let tracing = self.depth == 0 && self.trace.is_some();
            if tracing {
                // recorded programs print at fixed precision, so execute what will be printed
                cf = quantize_frame(&cf);
                lits = self
                    .bind_args(f, &lits)?
                    .iter()
                    .map(quantize_literal)
                    .collect();
            }
            let parts = self.call_function(f, cf, &lits)?;
            if tracing {
                self.record(
                    ProgramStmt::Call {
                        fn_name: name.to_string(),
                        frame: cf,
                        args: lits,
                    },
                    &parts,
                )?;
            }
            return Ok(Value::List(parts.into_iter().map(Value::Part).collect()));
        }
        let mut vals = Vec::with_capacity(args.len());
        for a in args {
            vals.push(self.eval(a, env)?);
        }
        let arity = |n: usize| -> Result<(), ExecError> {
            if vals.len() != n {
                Err(ExecError::ArgumentMismatch {
                    function: name.to_string(),
                    msg: format!("expected {n} arguments, found {}", vals.len()),
                })
            } else {
                Ok(())
            }
        };
        let six = |vals: &[Value]| -> Result<[f64; 6], ExecError> {
            let mut out = [0.0; 6];
            for (o, (v, a)) in out.iter_mut().zip(vals.iter().zip(args)) {
                *o = num(v, a.span)?;
            }
            Ok(out)
        };
        Ok(match name {
            "part" => {
                arity(6)?;
                let f = make_box(&six(&vals)?, span)?;
                Value::Part(Part::unlabeled(f.dims, f.center))
            }
            "frame" => {
                arity(6)?;
                Value::Frame(make_box(&six(&vals)?, span)?)
            }
            "make_part" => {
                arity(2)?;
                let mut f = frame_of(&vals[0], args[0].span)?;
                let label = match &vals[1] {
                    Value::Str(s) => s.clone(),
                    other => {
                        return Err(runtime(
                            args[1].span,
                            format!("label must be a string, found {}", other.type_name()),
                        ))
                    }
                };
                let tracing = self.depth == 0 && self.trace.is_some();
                if tracing {
                    f = quantize_frame(&f);
                }
                let part = Part::from_frame(&f, label.clone());
                if tracing {
                    self.record(
                        ProgramStmt::MakePart { frame: f, label },
                        std::slice::from_ref(&part),
                    )?;
                }
                Value::Part(part)
            }
            "group_parts" => {
                let mut parts = Vec::new();
                for (v, a) in vals.iter().zip(args) {
                    collect_parts(v, a.span, &mut parts)?;
                }
                Value::Frame(bounding_frame(&parts).ok_or(ExecError::EmptyGroup)?)
            }
            "min" | "max" => {
                let items: Vec<Value> = match vals.as_slice() {
                    [Value::List(items)] => items.clone(),
                    _ => vals.clone(),
                };
                if items.is_empty() {
                    return Err(runtime(span, format!("`{name}` needs at least one value")));
                }
                let all_int = items.iter().all(|v| matches!(v, Value::Int(_)));
                if all_int {
                    let ints = items
                        .iter()
                        .map(|v| int(v, span))
                        .collect::<Result<Vec<_>, _>>()?;
                    Value::Int(if name == "min" {
                        *ints.iter().min().unwrap()
                    } else {
                        *ints.iter().max().unwrap()
                    })
                } else {
                    let fs = items
                        .iter()
                        .map(|v| num(v, span))
                        .collect::<Result<Vec<_>, _>>()?;
                    let v = if name == "min" {
                        fs.iter().copied().fold(f64::INFINITY, f64::min)
                    } else {
                        fs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                    };
                    Value::Float(v)
                }
            }
            "abs" => {
                arity(1)?;
                match &vals[0] {
                    Value::Int(i) => Value::Int(
                        i.checked_abs()
                            .ok_or_else(|| runtime(span, "integer overflow"))?,
                    ),
                    v => Value::Float(num(v, span)?.abs()),
                }
            }
            "floor" => {
                arity(1)?;
                let v = finite(num(&vals[0], span)?, span)?.floor();
                if v.abs() > 9.0e15 {
                    return Err(runtime(span, "floor result out of integer range"));
                }
                Value::Int(v as i64)
            }
            "clamp" => {
                arity(3)?;
                if vals.iter().all(|v| matches!(v, Value::Int(_))) {
                    let (x, lo, hi) = (
                        int(&vals[0], span)?,
                        int(&vals[1], span)?,
                        int(&vals[2], span)?,
                    );
                    Value::Int(x.max(lo).min(hi))
                } else {
                    let (x, lo, hi) = (
                        num(&vals[0], span)?,
                        num(&vals[1], span)?,
                        num(&vals[2], span)?,
                    );
                    Value::Float(x.max(lo).min(hi))
                }
            }
            "uniform" => {
                arity(2)?;
                let (lo, hi) = (num(&vals[0], span)?, num(&vals[1], span)?);
                finite(lo, span)?;
                finite(hi, span)?;
                let site = self.site_key(e);
                let r = self.rng.stream(&self.current_fn.clone(), &site);
                Value::Float(rng::uniform(r, lo.min(hi), lo.max(hi)))
            }
            "randint" => {
                arity(2)?;
                let (lo, hi) = (int(&vals[0], span)?, int(&vals[1], span)?);
                if lo > hi {
                    return Err(runtime(span, format!("randint range {lo}..={hi} is empty")));
                }
                let site = self.site_key(e);
                let r = self.rng.stream(&self.current_fn.clone(), &site);
                Value::Int(r.random_range(lo..=hi))
            }
            "choice" => {
                arity(1)?;
                let items = match &vals[0] {
                    Value::List(items) if !items.is_empty() => items.clone(),
                    Value::List(_) => return Err(runtime(span, "choice from an empty list")),
                    other => {
                        return Err(runtime(
                            span,
                            format!("choice needs a list, found {}", other.type_name()),
                        ))
                    }
                };
                let site = self.site_key(e);
                let r = self.rng.stream(&self.current_fn.clone(), &site);
                items[r.random_range(0..items.len())].clone()
            }
            "bernoulli" => {
                arity(1)?;
                let p = num(&vals[0], span)?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(runtime(
                        span,
                        format!("bernoulli probability {p} outside [0, 1]"),
                    ));
                }
                let site = self.site_key(e);
                let r = self.rng.stream(&self.current_fn.clone(), &site);
                Value::Bool(r.random::<f64>() < p)
            }
            _ => {
                return Err(ExecError::UnknownFunction {
                    function: name.to_string(),
                })
            }
        })
    }

    fn site_key(&mut self, e: &Expr) -> String {
        self.site_keys
            .entry(e as *const Expr)
            .or_insert_with(|| print_expr(e))
            .clone()
    }

    fn record(&mut self, stmt: ProgramStmt, parts: &[Part]) -> Result<(), ExecError> {
        let trace = self.trace.as_mut().expect("tracing");
        let total: usize = trace.iter().map(|t| t.parts.len()).sum::<usize>() + parts.len();
        if total > self.limits.max_parts {
            return Err(ExecError::PartLimitExceeded {
                limit: self.limits.max_parts,
            });
        }
        trace.push(TraceEntry {
            stmt,
            parts: parts.to_vec(),
        });
        Ok(())
    }
}

fn values_equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Int(x), Value::Float(y)) | (Value::Float(y), Value::Int(x)) => (*x as f64) == *y,
        _ => a == b,
    }
}

fn type_label(ty: &ParamType) -> String {
    match ty {
        ParamType::Enum(opts) => format!("enum({})", opts.join(", ")),
        t => t.name().to_string(),
    }
}
