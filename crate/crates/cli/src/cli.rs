use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "shapekit",
    version,
    about = "Design, validate and use cuboid shape-program libraries"
)]
pub struct Cli {
    /// Print errors as JSON on stderr.
    #[arg(long, global = true)]
    pub json: bool,
    /// Seed for every random choice; drawn at random and recorded when omitted.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Pipeline config file (`key = value` lines).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override one config field, e.g. `--set k_a=3`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub sets: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full library-design pipeline.
    Design(DesignArgs),
    /// Re-run geometric validation of a library on stored proposals.
    Validate(ValidateArgs),
    /// Search for a program explaining a target shape.
    Infer(InferArgs),
    /// Draw programs from the samplers.
    Sample(SampleArgs),
    /// Edit a program from a natural-language request.
    Edit(EditArgs),
    /// Deform a mesh from one program's layout to another's.
    Deform(DeformArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
    /// Reformat a library or program.
    Fmt(FmtArgs),
    /// Count the degrees of freedom of a program.
    Dof(ProgramArgs),
    /// Execute a program and print its parts.
    Run(RunArgs),
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    #[arg(long)]
    pub seed_set: PathBuf,
    #[arg(long)]
    pub descriptions: PathBuf,
    /// `replay:<file-or-dir>` or `live:<name>`.
    #[arg(long)]
    pub provider: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Transcript file for live runs (default `<out>/transcript.jsonl`).
    #[arg(long)]
    pub record: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub lib: PathBuf,
    #[arg(long)]
    pub seed_set: PathBuf,
    /// `proposals.json` from a design run.
    #[arg(long)]
    pub proposals: PathBuf,
}

#[derive(Debug, Args)]
pub struct SamplerInputs {
    #[arg(long)]
    pub lib: PathBuf,
    #[arg(long)]
    pub samplers: PathBuf,
    /// Sampler frame `w,h,d,x,y,z` (default: `sampler_frame.json` beside the samplers).
    #[arg(long)]
    pub frame: Option<String>,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[command(flatten)]
    pub inputs: SamplerInputs,
    /// Parts JSON, `.xyz` point cloud, or `.bin` voxel grid.
    #[arg(long)]
    pub target: PathBuf,
    /// Sample budget (default: the config's `infer_samples`).
    #[arg(long)]
    pub budget: Option<usize>,
    /// Wall-clock limit in seconds; 0 disables it (default: the config's `infer_timeout_s`).
    #[arg(long)]
    pub timeout: Option<f64>,
    /// Label voter for naming the output parts.
    #[arg(long)]
    pub voter: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub inputs: SamplerInputs,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Write `sample_<i>.ss` and `sample_<i>.json` here instead of printing.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EditArgs {
    #[arg(long)]
    pub lib: PathBuf,
    #[arg(long)]
    pub program: PathBuf,
    #[arg(long)]
    pub request: String,
    #[arg(long)]
    pub provider: String,
    #[arg(long)]
    pub record: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DeformArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long)]
    pub lib: PathBuf,
    /// Program whose layout matches the mesh.
    #[arg(long)]
    pub from: PathBuf,
    /// Edited program.
    #[arg(long)]
    pub to: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Cache the weights in this sidecar file.
    #[arg(long)]
    pub weights: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Asset store with `shapes/`, `programs/` and `meshes/`.
    #[arg(long)]
    pub data_dir: PathBuf,
    #[arg(long)]
    pub lib: PathBuf,
    #[arg(long)]
    pub samplers: Option<PathBuf>,
    #[arg(long)]
    pub frame: Option<String>,
    #[arg(long)]
    pub voter: Option<PathBuf>,
    /// Provider for `/edit`; without one `/edit` answers 503.
    #[arg(long)]
    pub provider: Option<String>,
    /// Allowed CORS origin (default: any).
    #[arg(long)]
    pub cors_origin: Option<String>,
    /// Concurrent inference jobs.
    #[arg(long, default_value_t = 2)]
    pub max_jobs: usize,
}

#[derive(Debug, Args)]
pub struct FmtArgs {
    pub file: PathBuf,
    /// Library to check a program against; without it the file is read as a library.
    #[arg(long)]
    pub lib: Option<PathBuf>,
    /// Rewrite the file in place.
    #[arg(long)]
    pub write: bool,
}

#[derive(Debug, Args)]
pub struct ProgramArgs {
    pub program: PathBuf,
    #[arg(long)]
    pub lib: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub program: PathBuf,
    #[arg(long)]
    pub lib: PathBuf,
    #[arg(long)]
    pub voter: Option<PathBuf>,
}
