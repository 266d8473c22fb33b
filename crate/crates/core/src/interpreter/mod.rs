//! ShapeScript execution: function bodies, client programs and samplers.
//!
//! The interpreter is a tree walker over the parsed AST. Every run carries
//! its own step counter and random streams, so a [`Library`] can be shared
//! read-only between any number of concurrent executions.

mod eval;
pub mod rng;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::shape::{CoordFrame, Part};
use crate::shapescript::{Library, LibraryFunction, Literal, ProgramStmt, Sampler, ShapeProgram};
use eval::Interp;

pub use eval::bounding_frame;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecLimits {
    pub max_steps: usize,
    pub max_parts: usize,
    pub max_loop_iters: usize,
}

impl Default for ExecLimits {
    fn default() -> Self {
        ExecLimits {
            max_steps: 100_000,
            max_parts: 64,
            max_loop_iters: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error, Serialize)]
#[serde(tag = "code")]
pub enum ExecError {
    #[error("step limit of {limit} exceeded")]
    StepLimitExceeded { limit: usize },
    #[error("part limit of {limit} exceeded")]
    PartLimitExceeded { limit: usize },
    #[error("{line}:{col}: loop of {requested} iterations exceeds the limit of {limit}")]
    LoopLimitExceeded {
        limit: usize,
        requested: i64,
        line: u32,
        col: u32,
    },
    #[error("{line}:{col}: non-finite value")]
    NonFiniteValue { line: u32, col: u32 },
    #[error("{line}:{col}: cuboid dimensions must be positive")]
    NonPositiveDims { line: u32, col: u32 },
    #[error("group_parts called with no parts")]
    EmptyGroup,
    #[error("unknown function `{function}`")]
    UnknownFunction { function: String },
    #[error("function `{function}` has no body")]
    MissingBody { function: String },
    #[error("function `{function}` finished without returning")]
    MissingReturn { function: String },
    #[error("bad arguments to `{function}`: {msg}")]
    ArgumentMismatch { function: String, msg: String },
    #[error("call depth limit of {limit} exceeded")]
    CallDepthExceeded { limit: usize },
    #[error("sampler emitted no statements")]
    SamplerReturnedEmpty,
    #[error("{line}:{col}: {msg}")]
    Runtime { line: u32, col: u32, msg: String },
}

impl ExecError {
    pub fn code(&self) -> &'static str {
        match self {
            ExecError::StepLimitExceeded { .. } => "StepLimitExceeded",
            ExecError::PartLimitExceeded { .. } => "PartLimitExceeded",
            ExecError::LoopLimitExceeded { .. } => "LoopLimitExceeded",
            ExecError::NonFiniteValue { .. } => "NonFiniteValue",
            ExecError::NonPositiveDims { .. } => "NonPositiveDims",
            ExecError::EmptyGroup => "EmptyGroup",
            ExecError::UnknownFunction { .. } => "UnknownFunction",
            ExecError::MissingBody { .. } => "MissingBody",
            ExecError::MissingReturn { .. } => "MissingReturn",
            ExecError::ArgumentMismatch { .. } => "ArgumentMismatch",
            ExecError::CallDepthExceeded { .. } => "CallDepthExceeded",
            ExecError::SamplerReturnedEmpty => "SamplerReturnedEmpty",
            ExecError::Runtime { .. } => "Runtime",
        }
    }
}

/// Soft problems noticed during execution; the parts are still returned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ExecFlag {
    ValidOptionsMismatch {
        function: String,
        count: usize,
        valid_options: Vec<i64>,
    },
    OutsideFrame {
        function: String,
        part_index: usize,
        excess: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub statement_index: usize,
    pub fn_name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionOutput {
    pub parts: Vec<Part>,
    pub flags: Vec<ExecFlag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Execution {
    pub parts: Vec<Part>,
    pub provenance: Vec<Provenance>,
    pub rng_seed: u64,
    pub flags: Vec<ExecFlag>,
}

/// A program drawn from a sampler together with the parts it produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub program: ShapeProgram,
    pub parts: Vec<Part>,
    pub seed: u64,
}

pub fn execute_function(
    lib: &Library,
    name: &str,
    cf: CoordFrame,
    args: &[Literal],
    limits: &ExecLimits,
) -> Result<FunctionOutput, ExecError> {
    let f = lib.get(name).ok_or_else(|| ExecError::UnknownFunction {
        function: name.to_string(),
    })?;
    execute_function_with(lib, f, cf, args, limits)
}

/// Run `f`, which need not be the library's own version of that function.
/// Validation uses this to try candidate implementations.
pub fn execute_function_with(
    lib: &Library,
    f: &LibraryFunction,
    cf: CoordFrame,
    args: &[Literal],
    limits: &ExecLimits,
) -> Result<FunctionOutput, ExecError> {
    let mut interp = Interp::new(lib, limits, 0);
    let parts = interp.call_function(f, cf, args)?;
    Ok(FunctionOutput {
        parts,
        flags: interp.flags,
    })
}

pub fn execute_program(
    lib: &Library,
    prog: &ShapeProgram,
    limits: &ExecLimits,
) -> Result<Execution, ExecError> {
    let mut interp = Interp::new(lib, limits, 0);
    let mut parts = Vec::new();
    let mut provenance = Vec::new();
    for (i, stmt) in prog.statements.iter().enumerate() {
        let produced = match stmt {
            ProgramStmt::Call {
                fn_name,
                frame,
                args,
            } => {
                let f = lib.get(fn_name).ok_or_else(|| ExecError::UnknownFunction {
                    function: fn_name.clone(),
                })?;
                interp.call_function(f, *frame, args)?
            }
            ProgramStmt::MakePart { frame, label } => {
                if !frame.is_valid() {
                    return Err(ExecError::NonPositiveDims { line: 0, col: 0 });
                }
                vec![Part::from_frame(frame, label.clone())]
            }
        };
        if parts.len() + produced.len() > limits.max_parts {
            return Err(ExecError::PartLimitExceeded {
                limit: limits.max_parts,
            });
        }
        provenance.extend(produced.iter().map(|_| Provenance {
            statement_index: i,
            fn_name: stmt.fn_name().to_string(),
        }));
        parts.extend(produced);
    }
    Ok(Execution {
        parts,
        provenance,
        rng_seed: 0,
        flags: interp.flags,
    })
}

/// Tightest frame around a nonempty part list.
pub fn group_parts(parts: &[Part]) -> Result<CoordFrame, ExecError> {
    bounding_frame(parts).ok_or(ExecError::EmptyGroup)
}

/// Draw one program from a sampler. The program lists every library call and
/// `make_part` the sampler body made directly, with the arguments actually
/// used, so executing it reproduces `parts` exactly.
pub fn run_sampler(
    lib: &Library,
    sampler: &Sampler,
    cf: CoordFrame,
    seed: u64,
    limits: &ExecLimits,
) -> Result<Sample, ExecError> {
    let mut interp = Interp::new(lib, limits, seed);
    let trace = interp.run_traced(&sampler.name, &sampler.frame_param, &sampler.body, cf)?;
    if trace.is_empty() {
        return Err(ExecError::SamplerReturnedEmpty);
    }
    let mut statements = Vec::with_capacity(trace.len());
    let mut parts = Vec::new();
    for entry in trace {
        statements.push(entry.stmt);
        parts.extend(entry.parts);
    }
    Ok(Sample {
        program: ShapeProgram::new(statements),
        parts,
        seed,
    })
}
