//! The model-driven steps of library design, plus program editing.

use std::collections::BTreeSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::coverage::{coverage_report, CoverageReport, StructureRef};
use super::parse::{application_line, params_block, resolve_group, script_of};
use super::prompts::Template;
use super::provider::{Provider, Request, Stage};
use super::LlmError;
use crate::config::PipelineConfig;
use crate::interpreter::{run_sampler, ExecLimits};
use crate::seedset::SeedShape;
use crate::shape::{CoordFrame, Part};
use crate::shapescript::{
    check_body, format_float, parse_functions, parse_library_lenient, parse_program,
    parse_samplers, print_frame, print_function, print_library, print_program, print_program_stmt,
    print_sampler, validate_function_interface, Library, LibraryFunction, Literal, Sampler,
    ShapeProgram,
};
use crate::validation::{
    group_frame, group_targets, prune_proposal, ApplicationProposal, ProposalSource, PruneReason,
};

/// mmcd tolerance for resolving referenced boxes to seed parts (normalized space).
pub const GROUP_MATCH_TOL: f64 = 0.05;

/// Draws per coverage check between sampler feedback rounds.
pub const COVERAGE_DRAWS: usize = 256;

fn ask(provider: &dyn Provider, stage: Stage, prompt: String) -> Result<String, LlmError> {
    Ok(provider.complete(&Request::text(stage, prompt))?)
}

// ---------------------------------------------------------------- interface

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceOutcome {
    pub library: Library,
    pub repaired: Vec<String>,
    /// `(function, reason)` for functions that still broke the rules after repair.
    pub dropped: Vec<(String, String)>,
}

fn parse_interface(text: &str) -> Result<Library, String> {
    let lib = parse_library_lenient(&script_of(text)).map_err(|e| e.to_string())?;
    let mut out = Library::new();
    for f in lib.functions.into_values() {
        out.insert(f.signature_only());
    }
    Ok(out)
}

pub fn stage_interface(
    descriptions: &[String],
    provider: &dyn Provider,
) -> Result<InterfaceOutcome, LlmError> {
    let descriptions: Vec<&str> = descriptions
        .iter()
        .map(|d| d.trim())
        .filter(|d| !d.is_empty())
        .collect();
    if descriptions.is_empty() {
        return Err(LlmError::EmptyIntent);
    }
    let listing: String = descriptions
        .iter()
        .enumerate()
        .map(|(i, d)| format!("{}. {d}\n", i + 1))
        .collect();
    let first = ask(
        provider,
        Stage::Interface,
        Template::Interface.render(&[("descriptions", &listing)]),
    )?;

    let mut lib = match parse_interface(&first) {
        Ok(lib) => lib,
        Err(e) => {
            let prompt = Template::InterfaceRepair.render(&[
                ("violations", &format!("- {e}")),
                ("functions", &script_of(&first)),
            ]);
            let again = ask(provider, Stage::InterfaceRepair, prompt)?;
            let lib = parse_interface(&again).map_err(LlmError::UnparseableResponse)?;
            return Ok(finish_interface(lib, Vec::new()));
        }
    };

    let bad: Vec<&LibraryFunction> = lib
        .functions
        .values()
        .filter(|f| !validate_function_interface(f).is_empty())
        .collect();
    let mut repaired = Vec::new();
    if !bad.is_empty() {
        let violations: String = bad
            .iter()
            .flat_map(|f| validate_function_interface(f))
            .map(|v| format!("- {v}\n"))
            .collect();
        let functions: Vec<String> = bad.iter().map(|f| print_function(f)).collect();
        let prompt = Template::InterfaceRepair.render(&[
            ("violations", violations.trim_end()),
            ("functions", &functions.join("\n")),
        ]);
        let names: BTreeSet<String> = bad.iter().map(|f| f.name.clone()).collect();
        let again = ask(provider, Stage::InterfaceRepair, prompt)?;
        match parse_interface(&again) {
            Ok(fixed) => {
                for f in fixed.functions.into_values() {
                    if names.contains(&f.name) {
                        repaired.push(f.name.clone());
                        lib.insert(f);
                    }
                }
            }
            Err(e) => log::warn!("interface repair unparseable: {e}"),
        }
    }
    Ok(finish_interface(lib, repaired))
}

fn finish_interface(lib: Library, repaired: Vec<String>) -> InterfaceOutcome {
    let mut out = Library::new();
    let mut dropped = Vec::new();
    for f in lib.functions.into_values() {
        let v = validate_function_interface(&f);
        if v.is_empty() {
            out.insert(f);
        } else {
            let reason = v
                .iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join("; ");
            log::warn!("dropping `{}`: {reason}", f.name);
            dropped.push((f.name, reason));
        }
    }
    InterfaceOutcome {
        library: out,
        repaired,
        dropped,
    }
}

// ------------------------------------------------------------- applications

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedLine {
    pub round: usize,
    pub line: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ApplicationsOutcome {
    pub proposals: Vec<ApplicationProposal>,
    pub pruned: Vec<(ApplicationProposal, PruneReason)>,
    pub skipped: Vec<RejectedLine>,
    pub failed_rounds: Vec<(usize, String)>,
}

pub fn describe_parts(parts: &[Part]) -> String {
    parts
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let v = [
                p.dims.x, p.dims.y, p.dims.z, p.center.x, p.center.y, p.center.z,
            ]
            .map(format_float);
            let label = if p.label.is_empty() {
                "unlabeled"
            } else {
                &p.label
            };
            format!("{i}: {label}, part({})\n", v.join(", "))
        })
        .collect()
}

/// `k_a` proposal rounds for one (normalized) seed shape.
pub fn stage_applications(
    shape: &SeedShape,
    lib: &Library,
    provider: &dyn Provider,
    k_a: usize,
) -> Result<ApplicationsOutcome, LlmError> {
    let library = print_library(lib);
    let parts = describe_parts(&shape.parts);
    let description = shape
        .description
        .as_deref()
        .map(|d| format!("\nDescription: {d}\n"))
        .unwrap_or_default();
    let mut out = ApplicationsOutcome::default();
    let mut last_err = None;
    for round in 0..k_a {
        let prompt = Template::Applications.render(&[
            ("shape_id", &shape.id),
            ("round", &(round + 1).to_string()),
            ("rounds", &k_a.to_string()),
            ("library", library.trim_end()),
            ("parts", parts.trim_end()),
            ("description", &description),
        ]);
        let mut req = Request::text(
            if round == 0 {
                Stage::ApplicationsPrimary
            } else {
                Stage::Applications
            },
            prompt,
        );
        if round == 0 && provider.vision() {
            if let Some(r) = &shape.render_path {
                req.images.push(PathBuf::from(r));
            }
        }
        let resp = match provider.complete(&req) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("applications round {round} for `{}` failed: {e}", shape.id);
                out.failed_rounds.push((round, e.to_string()));
                last_err = Some(e);
                continue;
            }
        };
        for line in script_of(&resp).lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with("//") || line.starts_with('#') {
                continue;
            }
            match proposal_of(line, shape, lib, round) {
                Ok(p) => {
                    let doc = &lib.get(&p.fn_name).expect("checked").doc;
                    match prune_proposal(&p, doc) {
                        Ok(()) => out.proposals.push(p),
                        Err(r) => out.pruned.push((p, r)),
                    }
                }
                Err(reason) => {
                    log::debug!("skipping line `{line}`: {reason}");
                    out.skipped.push(RejectedLine {
                        round,
                        line: line.to_string(),
                        reason,
                    });
                }
            }
        }
    }
    if k_a > 0 && out.failed_rounds.len() == k_a {
        return Err(last_err.expect("a round failed").into());
    }
    Ok(out)
}

fn coerce_args(
    f: &LibraryFunction,
    args: &[Option<Literal>],
) -> Result<Vec<Option<Literal>>, String> {
    if args.len() != f.params.len() {
        return Err(format!(
            "`{}` takes {} arguments, got {}",
            f.name,
            f.params.len(),
            args.len()
        ));
    }
    f.params
        .iter()
        .zip(args)
        .map(|(p, a)| match a {
            None => Ok(None),
            Some(l) => {
                p.ty.coerce(l)
                    .map(Some)
                    .ok_or_else(|| format!("`{l}` is not a valid {} for `{}`", p.ty.name(), p.name))
            }
        })
        .collect()
}

fn proposal_of(
    line: &str,
    shape: &SeedShape,
    lib: &Library,
    round: usize,
) -> Result<ApplicationProposal, String> {
    let app = application_line(line)?;
    let f = lib
        .get(&app.fn_name)
        .ok_or_else(|| format!("unknown function `{}`", app.fn_name))?;
    let args = coerce_args(f, &app.args)?;
    let part_group = resolve_group(&app.parts, &shape.parts, GROUP_MATCH_TOL)?;
    Ok(ApplicationProposal {
        shape_id: shape.id.clone(),
        fn_name: app.fn_name,
        args,
        part_group,
        proposal_round: round,
        source: ProposalSource::Application,
    })
}

// ---------------------------------------------------------- implementations

/// An input/output pair shown to the model with every non-frame argument
/// hidden.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskedExample {
    pub fn_name: String,
    pub shape_id: String,
    pub part_group: Vec<usize>,
    pub frame: CoordFrame,
    pub arity: usize,
    pub output: Vec<Part>,
}

impl MaskedExample {
    pub fn input_text(&self) -> String {
        let mut args = vec![print_frame(&self.frame)];
        args.extend(std::iter::repeat_n("?".to_string(), self.arity));
        format!("{}({})", self.fn_name, args.join(", "))
    }
}

/// Up to `max` examples, taken round-robin across shapes (in seed-set order)
/// so they spread over the seed set.
pub fn masked_examples(
    f: &LibraryFunction,
    proposals: &[ApplicationProposal],
    shapes: &[SeedShape],
    max: usize,
) -> Vec<MaskedExample> {
    let mut per_shape: Vec<Vec<Vec<usize>>> = vec![Vec::new(); shapes.len()];
    for p in proposals.iter().filter(|p| p.fn_name == f.name) {
        let Some(si) = shapes.iter().position(|s| s.id == p.shape_id) else {
            continue;
        };
        let mut g = p.part_group.clone();
        g.sort_unstable();
        if g.iter().any(|&i| i >= shapes[si].parts.len()) || per_shape[si].contains(&g) {
            continue;
        }
        per_shape[si].push(g);
    }
    let mut out = Vec::new();
    let mut depth = 0;
    while out.len() < max && per_shape.iter().any(|g| g.len() > depth) {
        for (si, groups) in per_shape.iter().enumerate() {
            if out.len() == max {
                break;
            }
            let Some(g) = groups.get(depth) else { continue };
            let output = group_targets(&shapes[si], g);
            let Some(frame) = group_frame(&output) else {
                continue;
            };
            out.push(MaskedExample {
                fn_name: f.name.clone(),
                shape_id: shapes[si].id.clone(),
                part_group: g.clone(),
                frame,
                arity: f.params.len(),
                output,
            });
        }
        depth += 1;
    }
    out
}

fn render_examples(examples: &[MaskedExample]) -> String {
    let mut s = String::new();
    for (i, e) in examples.iter().enumerate() {
        let group: Vec<String> = e.part_group.iter().map(|g| g.to_string()).collect();
        s.push_str(&format!(
            "Example {} (shape {}, parts {}):\ninput: {}\noutput:\n",
            i + 1,
            e.shape_id,
            group.join(" "),
            e.input_text()
        ));
        for line in describe_parts(&e.output).lines() {
            let (_, rest) = line.split_once(": ").unwrap_or(("", line));
            let rest = rest
                .split_once(", part")
                .map(|(_, r)| format!("part{r}"))
                .unwrap_or_default();
            s.push_str(&format!("  {rest}\n"));
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub index: usize,
    pub source: String,
    pub error: Option<String>,
    pub retried: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ImplementationsOutcome {
    /// Parsed implementations, interface doc attached; `impl_index` into this list.
    pub bodies: Vec<LibraryFunction>,
    pub candidates: Vec<CandidateRecord>,
    pub reparameterizations: Vec<ApplicationProposal>,
    pub discarded_vectors: usize,
    pub examples: Vec<MaskedExample>,
}

fn implementation_of(
    resp: &str,
    f: &LibraryFunction,
    lib: &Library,
) -> Result<LibraryFunction, String> {
    let src = script_of(resp);
    let fns = parse_functions(&src).map_err(|e| e.to_string())?;
    let cand = fns
        .into_iter()
        .find(|c| c.name == f.name)
        .ok_or_else(|| format!("no definition of `{}`", f.name))?;
    if cand.frame_param.is_none() || cand.params != f.params || cand.return_type != f.return_type {
        return Err(format!(
            "signature of `{}` differs from the interface",
            f.name
        ));
    }
    let body = cand.body.clone().ok_or("definition has no body")?;
    let names = cand.params.iter().map(|p| p.name.as_str());
    if let Some(v) = check_body(&f.name, &body, names, lib).into_iter().next() {
        return Err(v.to_string());
    }
    Ok(LibraryFunction {
        doc: f.doc.clone(),
        body: Some(body),
        ..cand
    })
}

pub fn stage_implementations(
    f: &LibraryFunction,
    proposals: &[ApplicationProposal],
    shapes: &[SeedShape],
    lib: &Library,
    provider: &dyn Provider,
    k_i: usize,
) -> Result<ImplementationsOutcome, LlmError> {
    let examples = masked_examples(f, proposals, shapes, 4);
    if examples.is_empty() {
        return Err(LlmError::NoProposals(f.name.clone()));
    }
    let signature = print_function(&f.signature_only());
    let rendered = render_examples(&examples);
    let mut out = ImplementationsOutcome {
        examples,
        ..Default::default()
    };
    for c in 0..k_i {
        let candidate = (c + 1).to_string();
        let candidates = k_i.to_string();
        let prompt = Template::Implementations.render(&[
            ("fn_name", &f.name),
            ("candidate", &candidate),
            ("candidates", &candidates),
            ("signature", signature.trim_end()),
            ("examples", rendered.trim_end()),
        ]);
        let mut resp = ask(provider, Stage::Implementations, prompt)?;
        let mut parsed = implementation_of(&resp, f, lib);
        let mut retried = false;
        if let Err(e) = &parsed {
            retried = true;
            let prompt = Template::ImplementationRetry.render(&[
                ("fn_name", &f.name),
                ("candidate", &candidate),
                ("candidates", &candidates),
                ("error", e),
                ("previous", resp.trim_end()),
                ("signature", signature.trim_end()),
            ]);
            resp = ask(provider, Stage::ImplementationsRetry, prompt)?;
            parsed = implementation_of(&resp, f, lib);
        }
        for (idx, vals) in params_block(&resp) {
            let Some(ex) = idx.checked_sub(1).and_then(|i| out.examples.get(i)) else {
                out.discarded_vectors += 1;
                continue;
            };
            match coerce_args(f, &vals) {
                Ok(args) if args.iter().all(Option::is_some) => {
                    out.reparameterizations.push(ApplicationProposal {
                        shape_id: ex.shape_id.clone(),
                        fn_name: f.name.clone(),
                        args,
                        part_group: ex.part_group.clone(),
                        proposal_round: c,
                        source: ProposalSource::Reparameterization,
                    })
                }
                _ => out.discarded_vectors += 1,
            }
        }
        match parsed {
            Ok(body) => {
                out.candidates.push(CandidateRecord {
                    index: c,
                    source: print_function(&body),
                    error: None,
                    retried,
                });
                out.bodies.push(body);
            }
            Err(e) => {
                log::warn!("candidate {c} for `{}` unusable: {e}", f.name);
                out.candidates.push(CandidateRecord {
                    index: c,
                    source: script_of(&resp),
                    error: Some(e),
                    retried,
                });
            }
        }
    }
    if out.bodies.is_empty() {
        return Err(LlmError::AllCandidatesUnparseable(f.name.clone()));
    }
    Ok(out)
}

// ------------------------------------------------------------------ sampler

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SamplerOutcome {
    /// Distinct versions, renamed `sample_shape_v0`, `sample_shape_v1`, ...
    pub versions: Vec<Sampler>,
    /// Coverage of each authored version, in authoring order.
    pub coverage: Vec<CoverageReport>,
}

fn sampler_of(resp: &str, lib: &Library, frame: CoordFrame) -> Result<Sampler, String> {
    let all = parse_samplers(&script_of(resp), lib).map_err(|e| e.to_string())?;
    let s = all
        .iter()
        .find(|s| s.name == "sample_shape")
        .or(all.first())
        .cloned()
        .ok_or("no sampler defined")?;
    run_sampler(lib, &s, frame, 0, &ExecLimits::default())
        .map_err(|e| format!("sampler fails to run: {e}"))?;
    Ok(s)
}

pub struct SamplerContext<'a> {
    pub lib: &'a Library,
    pub seed_programs: &'a [(String, ShapeProgram)],
    pub structures: &'a [StructureRef],
    pub frame: CoordFrame,
    pub seed: u64,
}

pub fn stage_sampler(
    ctx: &SamplerContext<'_>,
    provider: &dyn Provider,
    cfg: &PipelineConfig,
) -> Result<SamplerOutcome, LlmError> {
    let library = print_library(ctx.lib);
    let programs: String = ctx
        .seed_programs
        .iter()
        .map(|(id, p)| format!("// {id}\n```shapescript\n{}```\n", print_program(p)))
        .collect();
    let resp = ask(
        provider,
        Stage::Sampler,
        Template::Sampler.render(&[
            ("library", library.trim_end()),
            ("programs", programs.trim_end()),
        ]),
    )?;
    let retry = |resp: &str, err: &str| -> Result<Sampler, LlmError> {
        let prompt = Template::SamplerRetry.render(&[
            ("error", err),
            ("previous", resp.trim_end()),
            ("library", print_library(&ctx.lib.interface()).trim_end()),
        ]);
        let again = ask(provider, Stage::SamplerRetry, prompt)?;
        sampler_of(&again, ctx.lib, ctx.frame).map_err(LlmError::SamplerUnparseable)
    };
    let mut current = match sampler_of(&resp, ctx.lib, ctx.frame) {
        Ok(s) => s,
        Err(e) => retry(&resp, &e)?,
    };

    let mut out = SamplerOutcome::default();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut keep = |s: &Sampler, out: &mut SamplerOutcome| {
        if seen.insert(print_sampler(s)) {
            let mut v = s.clone();
            v.name = format!("sample_shape_v{}", out.versions.len());
            out.versions.push(v);
        }
    };
    keep(&current, &mut out);
    let rounds = cfg.feedback_rounds;
    for round in 1..=rounds {
        let rep = coverage_report(
            std::slice::from_ref(&current),
            ctx.lib,
            ctx.frame,
            COVERAGE_DRAWS,
            ctx.seed.wrapping_add(round as u64),
            ctx.structures,
            cfg.tau_match,
        );
        let mut lines = rep.feedback_lines();
        if lines.is_empty() {
            lines.push("- none found; keep the coverage and add variety".into());
        }
        out.coverage.push(rep);
        let prompt = Template::SamplerFeedback.render(&[
            ("round", &round.to_string()),
            ("rounds", &rounds.to_string()),
            ("sampler", print_sampler(&current).trim_end()),
            ("draws", &COVERAGE_DRAWS.to_string()),
            ("feedback", &lines.join("\n")),
        ]);
        let resp = ask(provider, Stage::SamplerFeedback, prompt)?;
        let next = match sampler_of(&resp, ctx.lib, ctx.frame) {
            Ok(s) => Ok(s),
            Err(e) => retry(&resp, &e),
        };
        match next {
            Ok(s) => {
                keep(&s, &mut out);
                current = s;
            }
            Err(e) => log::warn!("feedback round {round} produced no usable sampler: {e}"),
        }
    }
    out.coverage.push(coverage_report(
        std::slice::from_ref(&current),
        ctx.lib,
        ctx.frame,
        COVERAGE_DRAWS,
        ctx.seed.wrapping_add(rounds as u64 + 1),
        ctx.structures,
        cfg.tau_match,
    ));
    Ok(out)
}

// --------------------------------------------------------------------- edit

/// A failed edit: the error plus the program as it was before.
#[derive(Debug, Clone, PartialEq)]
pub struct EditFailure {
    pub error: LlmError,
    pub original: ShapeProgram,
}

pub fn stage_edit(
    prog: &ShapeProgram,
    request: &str,
    lib: &Library,
    provider: &dyn Provider,
) -> Result<ShapeProgram, EditFailure> {
    let fail = |error| EditFailure {
        error,
        original: prog.clone(),
    };
    let request = request.trim();
    if request.is_empty() {
        return Err(fail(LlmError::EmptyRequest));
    }
    let library = print_library(&lib.interface());
    let program = print_program(prog);
    let prompt = Template::Edit.render(&[
        ("library", library.trim_end()),
        ("program", program.trim_end()),
        ("request", request),
    ]);
    let resp = ask(provider, Stage::Edit, prompt).map_err(fail)?;
    let src = script_of(&resp);
    let err = match parse_program(&src, lib) {
        Ok(p) => return Ok(p),
        Err(e) => e,
    };
    let prompt = Template::EditRepair.render(&[
        ("request", request),
        ("error", &err.to_string()),
        ("previous", src.trim_end()),
        ("library", library.trim_end()),
    ]);
    let resp = ask(provider, Stage::EditRepair, prompt).map_err(fail)?;
    parse_program(&script_of(&resp), lib)
        .map_err(|e| fail(LlmError::EditUnparseable(e.to_string())))
}

/// Statement-level differences between two programs, one line each.
pub fn diff_summary(before: &ShapeProgram, after: &ShapeProgram) -> Vec<String> {
    let mut out = Vec::new();
    let n = before.len().max(after.len());
    for i in 0..n {
        match (before.statements.get(i), after.statements.get(i)) {
            (Some(a), Some(b)) if a == b => {}
            (Some(a), Some(b)) => out.push(format!(
                "~ {}: {} -> {}",
                i,
                print_program_stmt(a).trim_end(),
                print_program_stmt(b).trim_end()
            )),
            (Some(a), None) => out.push(format!("- {}: {}", i, print_program_stmt(a).trim_end())),
            (None, Some(b)) => out.push(format!("+ {}: {}", i, print_program_stmt(b).trim_end())),
            (None, None) => {}
        }
    }
    out
}
