use std::io::Write;
use std::path::Path;

use rand::Rng;
use serde_json::json;

use shapekit::deform::{
    apply_deformation, compute_weights, layout_pair_from_programs, load_obj, save_obj,
    weights_cached, DEFAULT_EPS,
};
use shapekit::interpreter::{execute_program, ExecLimits};
use shapekit::llm::{diff_summary, revalidate, run_design, stage_edit, ProviderSpec};
use shapekit::search::{candidate_draw, infer_program, SearchBudget};
use shapekit::shapescript::{
    count_dof_tokens, parse_library, parse_program, print_library, print_program,
};
use shapekit::validation::{ApplicationProposal, Selection};
use shapekit::PipelineConfig;

use crate::cli::{
    Cli, Command, DeformArgs, DesignArgs, EditArgs, FmtArgs, InferArgs, ProgramArgs, RunArgs,
    SampleArgs, ValidateArgs,
};
use crate::error::{CliError, CliResult};
use crate::inputs::*;
use crate::manifest::RunManifest;
use crate::settings::load_config;
use crate::views::layout_view;

/// Settings every command sees.
#[derive(Debug, Clone)]
pub struct Ctx {
    pub config: PipelineConfig,
    pub seed: u64,
    pub seed_given: bool,
}

impl Ctx {
    pub fn from_cli(cli: &Cli) -> CliResult<Self> {
        let config = load_config(cli.config.as_deref(), &cli.sets)?;
        let (seed, seed_given) = match cli.seed {
            Some(s) => (s, true),
            None => (rand::rng().random(), false),
        };
        Ok(Ctx {
            config,
            seed,
            seed_given,
        })
    }

    fn manifest(&self, command: &str) -> RunManifest {
        RunManifest::new(command, &self.config, self.seed, self.seed_given)
    }
}

fn json_line(out: &mut dyn Write, v: &impl serde::Serialize) -> CliResult<()> {
    let text = serde_json::to_string_pretty(v)?;
    writeln!(out, "{text}").map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

fn line(out: &mut dyn Write, s: &str) -> CliResult<()> {
    writeln!(out, "{s}").map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    if let Some(n) = cli.threads {
        // fails only when a pool exists already, e.g. across in-process calls
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
    let ctx = Ctx::from_cli(&cli)?;
    match cli.command {
        Command::Design(a) => design(&ctx, &a, out),
        Command::Validate(a) => validate(&ctx, &a, out),
        Command::Infer(a) => infer(&ctx, &a, out),
        Command::Sample(a) => sample(&ctx, &a, out),
        Command::Edit(a) => edit(&a, out),
        Command::Deform(a) => deform(&a, out),
        Command::Serve(a) => crate::service::serve_blocking(&ctx, &a),
        Command::Fmt(a) => fmt(&a, out),
        Command::Dof(a) => dof(&a, out),
        Command::Run(a) => run_program(&a, out),
    }
}

pub fn design(ctx: &Ctx, a: &DesignArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut manifest = ctx.manifest("design");
    let seed_set = load_seed_set(&a.seed_set)?;
    let descriptions = load_descriptions(&a.descriptions)?;
    manifest.input("seed_set", &a.seed_set)?;
    manifest.input("descriptions", &a.descriptions)?;
    let spec: ProviderSpec = a.provider.parse()?;
    if let ProviderSpec::Replay(p) = &spec {
        manifest.input("transcript", p)?;
    }
    manifest.provider = Some(a.provider.clone());
    std::fs::create_dir_all(&a.out).map_err(|e| CliError::io(&a.out, e))?;
    let record = a
        .record
        .clone()
        .unwrap_or_else(|| a.out.join("transcript.jsonl"));
    let provider = spec.build(Some(&record))?;

    let result = manifest.timed("design", || {
        run_design(&seed_set, &descriptions, &provider, &ctx.config, ctx.seed)
    })?;
    let files = manifest
        .timed("write", || result.write_to(&a.out))
        .map_err(|e| CliError::io(&a.out, e))?;
    for f in &files {
        manifest.output(f, &a.out.join(f))?;
    }
    manifest.write(&a.out.join("manifest.json"))?;

    let removed: Vec<_> = result
        .functions
        .iter()
        .filter_map(|f| {
            f.removed
                .as_ref()
                .map(|r| json!({"function": f.fn_name, "reason": r}))
        })
        .collect();
    json_line(
        out,
        &json!({
            "library": result.library.functions.keys().collect::<Vec<_>>(),
            "removed": removed,
            "covered_fraction": result.covered_fraction(&seed_set),
            "seed": ctx.seed,
            "out": a.out,
        }),
    )
}

pub fn validate(ctx: &Ctx, a: &ValidateArgs, out: &mut dyn Write) -> CliResult<()> {
    let lib = load_library(&a.lib)?;
    let seed_set = load_seed_set(&a.seed_set)?;
    let proposals: Vec<ApplicationProposal> = serde_json::from_str(&read_text(&a.proposals)?)?;
    let reports = revalidate(&lib, &proposals, &seed_set, &ctx.config, ctx.seed)?;
    let summary: serde_json::Map<String, serde_json::Value> = reports
        .iter()
        .map(|(name, (report, sel))| {
            let v = match sel {
                Selection::Chosen { .. } => json!({
                    "validated": true,
                    "shapes": report.impls.first().map(|s| s.distinct_shapes).unwrap_or(0),
                }),
                Selection::Rejected {
                    best_distinct_shapes,
                } => json!({
                    "validated": false,
                    "shapes": best_distinct_shapes,
                }),
            };
            (name.clone(), v)
        })
        .collect();
    json_line(out, &summary)
}

pub fn infer(ctx: &Ctx, a: &InferArgs, out: &mut dyn Write) -> CliResult<()> {
    let lib = load_library(&a.inputs.lib)?;
    let samplers = load_sampler_set(&a.inputs.samplers, &lib, a.inputs.frame.as_deref())?;
    let target = load_target(&a.target)?;
    let timeout = a.timeout.unwrap_or(ctx.config.infer_timeout_s);
    let budget = SearchBudget {
        max_samples: a.budget.unwrap_or(ctx.config.infer_samples),
        timeout_s: (timeout > 0.0).then_some(timeout),
        seed: ctx.seed,
    };
    let result = infer_program(&target, &samplers, &lib, &budget, &ctx.config, None)?;
    let voter = a.voter.as_deref().map(load_voter).transpose()?;
    let ex = execute_program(&lib, &result.program_ast, &ExecLimits::default())?;
    let payload = json!({
        "program": result.program,
        "score": result.score,
        "metrics": result.metrics,
        "samples": result.samples,
        "merges": result.merges,
        "seed": result.seed,
        "timed_out": result.timed_out,
        "layout": layout_view(&ex, voter.as_ref()),
    });
    if let Some(p) = &a.out {
        write_text(p, &result.program)?;
    }
    json_line(out, &payload)
}

pub fn sample(ctx: &Ctx, a: &SampleArgs, out: &mut dyn Write) -> CliResult<()> {
    let lib = load_library(&a.inputs.lib)?;
    let set = load_sampler_set(&a.inputs.samplers, &lib, a.inputs.frame.as_deref())?;
    if set.samplers.is_empty() {
        return Err(shapekit::search::SearchError::NoSamplers.into());
    }
    let limits = ExecLimits::default();
    for i in 0..a.n {
        let (k, draw) = candidate_draw(&set, &lib, ctx.seed, i, &limits)?;
        let program = print_program(&draw.program);
        let record = json!({
            "index": i,
            "sampler": set.samplers[k].name,
            "seed": draw.seed,
            "program": program,
            "parts": draw.parts,
        });
        match &a.out {
            Some(dir) => {
                write_text(&dir.join(format!("sample_{i}.ss")), &program)?;
                write_text(
                    &dir.join(format!("sample_{i}.json")),
                    &(serde_json::to_string_pretty(&record)? + "\n"),
                )?;
            }
            None => line(out, &serde_json::to_string(&record)?)?,
        }
    }
    if let Some(dir) = &a.out {
        line(
            out,
            &format!("{} samples written to {}", a.n, dir.display()),
        )?;
    }
    Ok(())
}

pub fn edit(a: &EditArgs, out: &mut dyn Write) -> CliResult<()> {
    let lib = load_library(&a.lib)?;
    let prog = load_program(&a.program, &lib)?;
    let spec: ProviderSpec = a.provider.parse()?;
    let record = a
        .record
        .clone()
        .unwrap_or_else(|| a.program.with_extension("transcript.jsonl"));
    let provider = spec.build(Some(&record))?;
    let edited =
        stage_edit(&prog, &a.request, &lib, &provider).map_err(|f| CliError::from(f.error))?;
    let text = print_program(&edited);
    for d in diff_summary(&prog, &edited) {
        log::info!("{d}");
    }
    match &a.out {
        Some(p) => write_text(p, &text),
        None => line(out, text.trim_end()),
    }
}

pub fn deform(a: &DeformArgs, out: &mut dyn Write) -> CliResult<()> {
    let lib = load_library(&a.lib)?;
    let from = load_program(&a.from, &lib)?;
    let to = load_program(&a.to, &lib)?;
    let mesh = load_obj(&a.mesh)?;
    let pair = layout_pair_from_programs(&lib, &from, &to, &ExecLimits::default())?;
    let weights = match &a.weights {
        Some(p) => weights_cached(&mesh, &pair.source, DEFAULT_EPS, p)?,
        None => compute_weights(&mesh, &pair.source, DEFAULT_EPS)?,
    };
    let moved = apply_deformation(&mesh, &weights, &pair)?;
    save_obj(&moved, &a.out)?;
    let max = mesh
        .vertices
        .iter()
        .zip(&moved.vertices)
        .map(|(p, q)| p.distance(*q))
        .fold(0.0, f64::max);
    json_line(
        out,
        &json!({ "out": a.out, "vertices": moved.vertices.len(), "faces": moved.faces.len(), "max_displacement": max }),
    )
}

pub fn fmt(a: &FmtArgs, out: &mut dyn Write) -> CliResult<()> {
    let text = read_text(&a.file)?;
    let formatted = match &a.lib {
        Some(l) => print_program(&parse_program(&text, &load_library(l)?)?),
        None => print_library(&parse_library(&text)?),
    };
    if a.write {
        write_text(&a.file, &formatted)
    } else {
        line(out, formatted.trim_end())
    }
}

pub fn dof(a: &ProgramArgs, out: &mut dyn Write) -> CliResult<()> {
    let lib = load_library(&a.lib)?;
    let prog = load_program(&a.program, &lib)?;
    line(out, &count_dof_tokens(&prog).value().to_string())
}

pub fn run_program(a: &RunArgs, out: &mut dyn Write) -> CliResult<()> {
    let lib = load_library(&a.lib)?;
    let prog = load_program(&a.program, &lib)?;
    let voter = a.voter.as_deref().map(load_voter).transpose()?;
    let ex = execute_program(&lib, &prog, &ExecLimits::default())?;
    json_line(out, &layout_view(&ex, voter.as_ref()))
}
