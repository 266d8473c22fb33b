//! Language-model stages behind a provider abstraction with record/replay.

mod coverage;
mod design;
pub mod parse;
pub mod prompts;
pub mod provider;
mod stages;

use thiserror::Error;

pub use coverage::{coverage_report, perturb_parts, CoverageReport, StructureGap, StructureRef};
pub use design::{revalidate, run_design, sampler_frame, DesignOutput, FunctionOutcome};
pub use provider::{
    canonical_prompt, prompt_hash, read_transcript, write_transcript, LiveProvider, Provider,
    ProviderError, ProviderSpec, RecordingProvider, ReplayProvider, Request, Stage, Transcript,
    TranscriptRecord,
};
pub use stages::{
    describe_parts, diff_summary, masked_examples, stage_applications, stage_edit,
    stage_implementations, stage_interface, stage_sampler, ApplicationsOutcome, CandidateRecord,
    EditFailure, ImplementationsOutcome, InterfaceOutcome, MaskedExample, RejectedLine,
    SamplerContext, SamplerOutcome, COVERAGE_DRAWS, GROUP_MATCH_TOL,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LlmError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("no function descriptions given")]
    EmptyIntent,
    #[error("unparseable response: {0}")]
    UnparseableResponse(String),
    #[error("no proposals for `{0}`")]
    NoProposals(String),
    #[error("no candidate implementation of `{0}` parsed")]
    AllCandidatesUnparseable(String),
    #[error("sampler unusable: {0}")]
    SamplerUnparseable(String),
    #[error("edit request is empty")]
    EmptyRequest,
    #[error("edited program does not check: {0}")]
    EditUnparseable(String),
    #[error("no function survived validation")]
    NoValidatedFunctions,
    #[error("configuration: {0}")]
    Config(String),
}

impl LlmError {
    pub fn code(&self) -> &'static str {
        match self {
            LlmError::Provider(ProviderError::Unreachable(_)) => "ProviderUnreachable",
            LlmError::Provider(_) => "ProviderFailure",
            LlmError::EmptyIntent => "EmptyIntent",
            LlmError::UnparseableResponse(_) => "UnparseableResponse",
            LlmError::NoProposals(_) => "NoProposals",
            LlmError::AllCandidatesUnparseable(_) => "AllCandidatesUnparseable",
            LlmError::SamplerUnparseable(_) => "SamplerUnparseable",
            LlmError::EmptyRequest => "EmptyRequest",
            LlmError::EditUnparseable(_) => "EditUnparseable",
            LlmError::NoValidatedFunctions => "NoValidatedFunctions",
            LlmError::Config(_) => "Config",
        }
    }
}
