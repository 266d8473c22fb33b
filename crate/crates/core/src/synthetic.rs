//! Synthetic chairs from a hidden ground-truth library, and a scripted
//! provider that plays the language model against them.
//!
//! The provider answers every stage from the prompt headers: exact and noisy
//! application rounds, one correct and three broken implementations per
//! function, a sampler that improves under feedback, and simple edits. It
//! backs the end-to-end fixtures and tests.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::config::PipelineConfig;
use crate::deform::{save_obj, Mesh};
use crate::interpreter::rng::child_rng;
use crate::interpreter::{execute_function, ExecLimits};
use crate::llm::parse::code_block;
use crate::llm::prompts::header;
use crate::llm::{
    run_design, stage_edit, write_transcript, DesignOutput, Provider, ProviderError,
    RecordingProvider, Request, Stage, Transcript, TranscriptRecord,
};
use crate::seedset::{SeedSet, SeedShape};
use crate::shape::{CoordFrame, Part, Vec3};
use crate::shapescript::{
    format_float, parse_library, parse_program, print_function, print_program, quantize,
    quantize_frame, Library, Literal, ProgramStmt,
};

/// The library the pipeline is supposed to rediscover (arm rests excepted:
/// chairs carry them, but no implementation of them can validate).
pub const GROUND_TRUTH: &str = r#"
/// @description Four legs at the corners of the frame, optionally joined by two side stretchers.
/// @parts four legs, then two stretchers when requested
/// @valid_options [4, 6]
/// @param leg_size leg thickness as a fraction of frame width and depth
/// @param stretcher whether side stretchers join front and back legs
fn leg_base(cf: Frame, leg_size: float, stretcher: bool) -> PartList {
    let lw = leg_size * cf.w;
    let ld = leg_size * cf.d;
    let out = [];
    for i in 0..2 {
        for j in 0..2 {
            out = out + [part(lw, cf.h, ld, cf.min_x + lw / 2 + i * (cf.w - lw), cf.y, cf.min_z + ld / 2 + j * (cf.d - ld))];
        }
    }
    if stretcher {
        for i in 0..2 {
            out = out + [part(lw, lw, cf.d - 2 * ld, cf.min_x + lw / 2 + i * (cf.w - lw), cf.min_y + cf.h / 3, cf.z)];
        }
    }
    return out;
}

/// @description A ladder back: two side posts with horizontal slats hanging from the top.
/// @parts two posts, then the slats top to bottom
/// @valid_options [4, 5, 6]
/// @param n_slats number of slats
/// @param slat_ratio fraction of the back height spanned by slats and gaps
fn ladder_back(cf: Frame, n_slats: int, slat_ratio: float) -> PartList {
    let pw = cf.w / 10;
    let out = [part(pw, cf.h, cf.d, cf.min_x + pw / 2, cf.y, cf.z), part(pw, cf.h, cf.d, cf.max_x - pw / 2, cf.y, cf.z)];
    let sh = slat_ratio * cf.h / (2 * n_slats - 1);
    for i in 0..n_slats {
        out = out + [part(cf.w - 2 * pw, sh, cf.d / 2, cf.x, cf.max_y - sh / 2 - 2 * i * sh, cf.z)];
    }
    return out;
}

/// @description The seat: a front apron under a solid or split board.
/// @parts the apron, then one or two boards
/// @valid_options [2, 3]
/// @param style solid for one board, split for two half boards
fn seat(cf: Frame, style: enum(solid, split)) -> PartList {
    let bh = cf.h / 2;
    let out = [part(cf.w, bh, cf.d / 10, cf.x, cf.min_y + bh / 2, cf.max_z - cf.d / 20)];
    if style == "split" {
        out = out + [part(cf.w / 2, bh, cf.d, cf.min_x + cf.w / 4, cf.max_y - bh / 2, cf.z), part(cf.w / 2, bh, cf.d, cf.max_x - cf.w / 4, cf.max_y - bh / 2, cf.z)];
    } else {
        out = out + [part(cf.w, bh, cf.d, cf.x, cf.max_y - bh / 2, cf.z)];
    }
    return out;
}
"#;

const ARM_RESTS_SIGNATURE: &str = r#"
/// @description Two arm rests on either side of the seat.
/// @parts left and right arm rest
/// @valid_options [2]
/// @param height arm rest thickness as a fraction of the frame height
fn arm_rests(cf: Frame, height: float) -> PartList;
"#;

pub const DESCRIPTIONS: [&str; 4] = [
    "leg_base: four corner legs of a chair, optionally with side stretchers; the leg thickness varies.",
    "ladder_back: a chair back made of two posts with a variable number of horizontal slats.",
    "seat: a seat board over a front apron; the board is either solid or split in two halves.",
    "arm_rests: a pair of arm rests at the sides of the seat.",
];

/// One ground-truth call in a synthetic shape.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthApplication {
    pub fn_name: String,
    pub args: Vec<Literal>,
    pub part_group: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SyntheticChairs {
    pub library: Library,
    pub seed_set: SeedSet,
    pub truth: BTreeMap<String, Vec<TruthApplication>>,
}

pub fn ground_truth_library() -> Library {
    parse_library(GROUND_TRUTH).expect("ground truth parses")
}

pub fn descriptions() -> Vec<String> {
    DESCRIPTIONS.iter().map(|d| d.to_string()).collect()
}

fn round3(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

impl SyntheticChairs {
    /// `n` chairs; every third one (starting with the first) has arm rests.
    pub fn generate(n: usize, seed: u64) -> Self {
        let library = ground_truth_library();
        let limits = ExecLimits::default();
        let mut shapes = Vec::new();
        let mut truth = BTreeMap::new();
        for k in 0..n {
            let mut rng = child_rng(seed, &format!("chair:{k}"));
            let w = round3(rng.random_range(0.8..1.2));
            let d = round3(rng.random_range(0.8..1.1));
            let leg_h = round3(rng.random_range(0.8..1.0));
            let seat_t = round3(rng.random_range(0.1..0.16));
            let back_h = round3(rng.random_range(0.8..1.2));
            let back_d = round3(d * 0.12);

            let calls = [
                (
                    "leg_base",
                    CoordFrame::new(Vec3::new(0.0, leg_h / 2.0, 0.0), Vec3::new(w, leg_h, d)),
                    vec![
                        Literal::Float(round3(rng.random_range(0.08..0.15))),
                        Literal::Bool(rng.random_bool(0.5)),
                    ],
                    ["leg", "leg", "leg", "leg", "stretcher", "stretcher"].as_slice(),
                ),
                (
                    "seat",
                    CoordFrame::new(
                        Vec3::new(0.0, leg_h + seat_t / 2.0, 0.0),
                        Vec3::new(w, seat_t, d),
                    ),
                    vec![Literal::Str(
                        if rng.random_bool(0.5) {
                            "split"
                        } else {
                            "solid"
                        }
                        .into(),
                    )],
                    ["apron", "seat", "seat"].as_slice(),
                ),
                (
                    "ladder_back",
                    CoordFrame::new(
                        Vec3::new(0.0, leg_h + seat_t + back_h / 2.0, -d / 2.0 + back_d / 2.0),
                        Vec3::new(w, back_h, back_d),
                    ),
                    vec![
                        Literal::Int(rng.random_range(2..=4)),
                        Literal::Float(round3(rng.random_range(0.4..0.7))),
                    ],
                    [
                        "back_post",
                        "back_post",
                        "back_slat",
                        "back_slat",
                        "back_slat",
                        "back_slat",
                    ]
                    .as_slice(),
                ),
            ];
            let mut parts: Vec<Part> = Vec::new();
            let mut apps = Vec::new();
            for (name, frame, args, labels) in calls {
                let frame = quantize_frame(&frame);
                let out = execute_function(&library, name, frame, &args, &limits)
                    .expect("ground truth runs");
                let start = parts.len();
                for (i, p) in out.parts.into_iter().enumerate() {
                    parts.push(Part {
                        label: labels[i].into(),
                        ..p
                    });
                }
                apps.push(TruthApplication {
                    fn_name: name.into(),
                    args,
                    part_group: (start..parts.len()).collect(),
                });
            }
            if k % 3 == 0 {
                let y = leg_h + seat_t + 0.25;
                let start = parts.len();
                for sx in [-1.0, 1.0] {
                    parts.push(Part::new(
                        "arm",
                        Vec3::new(0.06, 0.05, quantize(d * 0.7)),
                        Vec3::new(sx * (w / 2.0 + 0.03), quantize(y), 0.05),
                    ));
                }
                apps.push(TruthApplication {
                    fn_name: "arm_rests".into(),
                    args: vec![Literal::Float(0.5)],
                    part_group: vec![start, start + 1],
                });
            }
            let id = format!("chair_{k:02}");
            let mut shape = SeedShape::new(id.clone(), parts);
            shape.description = Some(format!("a wooden chair ({} parts)", shape.parts.len()));
            shapes.push(shape);
            truth.insert(id, apps);
        }
        SyntheticChairs {
            library,
            seed_set: SeedSet { shapes },
            truth,
        }
    }

    pub fn oracle(&self) -> OracleProvider {
        OracleProvider::new(self)
    }
}

/// Scripted stand-in for the language model.
#[derive(Debug, Clone)]
pub struct OracleProvider {
    library: Library,
    normalized: BTreeMap<String, SeedShape>,
    truth: BTreeMap<String, Vec<TruthApplication>>,
}

fn err(msg: impl Into<String>) -> ProviderError {
    ProviderError::Malformed(msg.into())
}

fn fenced(lang: &str, body: &str) -> String {
    format!("```{lang}\n{}\n```\n", body.trim_end())
}

fn literal_text(l: &Literal) -> String {
    match l {
        Literal::Str(s) => s.clone(),
        other => other.to_string(),
    }
}

fn part_text(p: &Part) -> String {
    let v = [
        p.dims.x, p.dims.y, p.dims.z, p.center.x, p.center.y, p.center.z,
    ]
    .map(format_float);
    format!("part({})", v.join(", "))
}

/// The correct body with its frame swapped for a displaced, shrunken one.
fn displaced(src: &str, dx: &str, dy: &str, dz: &str) -> String {
    let open = src.find('{').expect("has body") + 1;
    let (head, body) = src.split_at(open);
    format!(
        "{head}\n    let g = frame(cf.w / 2, cf.h / 2, cf.d / 2, cf.x + {dx}, cf.y + {dy}, cf.z + {dz});{}",
        body.replace("cf.", "g.")
    )
}

fn with_runtime_error(src: &str) -> String {
    let open = src.find('{').expect("has body") + 1;
    let (head, body) = src.split_at(open);
    format!("{head}\n    let broken = cf.w / 0;{body}")
}

impl OracleProvider {
    pub fn new(chairs: &SyntheticChairs) -> Self {
        let (norm, _) = chairs.seed_set.normalized().expect("valid seed set");
        OracleProvider {
            library: chairs.library.clone(),
            normalized: norm.shapes.into_iter().map(|s| (s.id.clone(), s)).collect(),
            truth: chairs.truth.clone(),
        }
    }

    fn interface(&self, repair: bool) -> String {
        let mut src = String::new();
        for f in self.library.functions.values() {
            src.push_str(&print_function(&f.signature_only()));
            src.push('\n');
        }
        if repair {
            return format!("Fixed:\n{}", fenced("shapescript", ARM_RESTS_SIGNATURE));
        }
        // the first draft gets arm_rests' valid options wrong
        src.push_str(&ARM_RESTS_SIGNATURE.replace("[2]", "[1, 2]"));
        format!("Here is the interface.\n{}", fenced("shapescript", &src))
    }

    fn applications(&self, prompt: &str) -> Result<String, ProviderError> {
        let id = header(prompt, "Shape").ok_or_else(|| err("no shape header"))?;
        let round: usize = header(prompt, "Round")
            .and_then(|r| r.split_whitespace().next()?.parse().ok())
            .ok_or_else(|| err("no round header"))?;
        let shape = self
            .normalized
            .get(id)
            .ok_or_else(|| err(format!("unknown shape {id}")))?;
        let apps = self.truth.get(id).ok_or_else(|| err("no truth"))?;
        let mut rng = child_rng(round as u64, &format!("applications:{id}"));
        let noise = Normal::new(0.0, 0.02).expect("valid");
        let mut lines = Vec::new();
        for a in apps {
            let parts: Vec<String> = a
                .part_group
                .iter()
                .map(|&i| part_text(&shape.parts[i]))
                .collect();
            let args: Vec<String> = a
                .args
                .iter()
                .map(|l| match (round, l) {
                    (1, _) => literal_text(l),
                    (_, Literal::Float(v)) => format_float(round3(v + noise.sample(&mut rng))),
                    (3, _) => "?".into(),
                    _ => literal_text(l),
                })
                .collect();
            let mut line = format!("{}(group_parts([{}])", a.fn_name, parts.join(", "));
            for x in args {
                line.push_str(", ");
                line.push_str(&x);
            }
            line.push_str(");");
            lines.push(line);
        }
        match round {
            // a grouping that cannot be right: one part for a multi-part function
            4 => {
                let a = &apps[1];
                let p = part_text(&shape.parts[a.part_group[0]]);
                lines.push(format!("{}(group_parts([{p}]), solid);", a.fn_name));
            }
            5 => lines.push("the remaining parts look decorative".into()),
            _ => {}
        }
        Ok(format!(
            "Proposed calls:\n{}",
            fenced("shapescript", &lines.join("\n"))
        ))
    }

    fn params_for(&self, prompt: &str, fn_name: &str) -> Vec<String> {
        // example headers: "Example 1 (shape chair_03, parts 4 5 6 7):"
        let mut out = Vec::new();
        for line in prompt.lines() {
            let Some(rest) = line.strip_prefix("Example ") else {
                continue;
            };
            let Some((idx, rest)) = rest.split_once(" (shape ") else {
                continue;
            };
            let Some((shape, rest)) = rest.split_once(", parts ") else {
                continue;
            };
            let group: Vec<usize> = rest
                .trim_end_matches("):")
                .split_whitespace()
                .filter_map(|x| x.parse().ok())
                .collect();
            let truth = self.truth.get(shape).and_then(|apps| {
                apps.iter().find(|a| {
                    let mut g = a.part_group.clone();
                    g.sort_unstable();
                    a.fn_name == fn_name && g == group
                })
            });
            if let Some(t) = truth {
                let vals: Vec<String> = t.args.iter().map(literal_text).collect();
                out.push(format!("{idx}: {}", vals.join(", ")));
            }
        }
        out
    }

    fn implementation(&self, prompt: &str, retry: bool) -> Result<String, ProviderError> {
        let name = header(prompt, "Function").ok_or_else(|| err("no function header"))?;
        let candidate: usize = header(prompt, "Candidate")
            .and_then(|r| r.split_whitespace().next()?.parse().ok())
            .ok_or_else(|| err("no candidate header"))?;
        let mut params = self.params_for(prompt, name);
        let source = match self.library.get(name) {
            Some(f) => print_function(f),
            None => {
                // arm_rests: rests laid front and back instead of at the sides
                "fn arm_rests(cf: Frame, height: float) -> PartList {\n    let t = height * cf.h;\n    return [part(cf.w, t, cf.d / 10, cf.x, cf.y, cf.min_z), part(cf.w, t, cf.d / 10, cf.x, cf.y, cf.max_z)];\n}\n".to_string()
            }
        };
        let code = match (candidate, retry) {
            (1, _) => displaced(&source, "cf.w", "cf.h", "0"),
            (2, false) => format!("fn {name}(cf: Frame) -> PartList {{\n    let = ;\n}}\n"),
            (2, true) => with_runtime_error(&source),
            (3, _) if self.library.get(name).is_some() => source,
            (3, _) => displaced(&source, "0", "cf.h", "cf.d"),
            _ => {
                // wrong arity vector for the first example: discarded downstream
                params.push("1: 1".into());
                displaced(&source, "0", "0 - cf.h", "2 * cf.d")
            }
        };
        Ok(format!(
            "Implementation:\n{}\nParameters:\n{}",
            fenced("shapescript", &code),
            fenced("params", &params.join("\n"))
        ))
    }

    fn sampler(&self, version: usize) -> String {
        let stretcher = if version >= 2 {
            "bernoulli(0.5)"
        } else {
            "false"
        };
        let style = if version >= 1 {
            "choice([\"solid\", \"split\"])"
        } else {
            "\"solid\""
        };
        let src = format!(
            r#"fn sample_shape(cf: Frame) -> PartList {{
    let leg_h = uniform(0.36, 0.44) * cf.h;
    let seat_t = uniform(0.045, 0.07) * cf.h;
    let back_h = cf.h - leg_h - seat_t;
    let back_d = cf.d * 0.12;
    leg_base(frame(cf.w, leg_h, cf.d, cf.x, cf.min_y + leg_h / 2, cf.z), uniform(0.08, 0.15), {stretcher});
    seat(frame(cf.w, seat_t, cf.d, cf.x, cf.min_y + leg_h + seat_t / 2, cf.z), {style});
    ladder_back(frame(cf.w, back_h, back_d, cf.x, cf.max_y - back_h / 2, cf.min_z + back_d / 2), randint(2, 4), uniform(0.4, 0.7));
    return [];
}}
"#
        );
        format!("Sampler:\n{}", fenced("shapescript", &src))
    }

    fn edit(&self, prompt: &str) -> Result<String, ProviderError> {
        let request = header(prompt, "Request").unwrap_or("").to_ascii_lowercase();
        let after = prompt.split_once("Program:").map(|x| x.1).unwrap_or("");
        let src = code_block(after, "shapescript").ok_or_else(|| err("no program block"))?;
        let mut prog = parse_program(&src, &self.library).map_err(|e| err(e.to_string()))?;
        if request.contains("unknown") {
            return Ok(fenced("shapescript", "wings(frame(1, 1, 1, 0, 0, 0), 2);"));
        }
        let target = if request.contains("back") {
            Some("ladder_back")
        } else if request.contains("leg") {
            Some("leg_base")
        } else {
            None
        };
        let factor = if request.contains("taller") || request.contains("longer") {
            1.25
        } else if request.contains("shorter") {
            0.8
        } else {
            1.0
        };
        if let Some(t) = target {
            for stmt in &mut prog.statements {
                if let ProgramStmt::Call { fn_name, frame, .. } = stmt {
                    if fn_name == t {
                        // grow upward for the back, downward for the legs
                        let bottom = frame.center.y - frame.dims.y / 2.0;
                        let top = frame.center.y + frame.dims.y / 2.0;
                        let h = frame.dims.y * factor;
                        let cy = if t == "ladder_back" {
                            bottom + h / 2.0
                        } else {
                            top - h / 2.0
                        };
                        *frame = quantize_frame(&CoordFrame::new(
                            Vec3::new(frame.center.x, cy, frame.center.z),
                            Vec3::new(frame.dims.x, h, frame.dims.z),
                        ));
                    }
                }
            }
        }
        Ok(format!(
            "Edited:\n{}",
            fenced("shapescript", &print_program(&prog))
        ))
    }
}

impl Provider for OracleProvider {
    fn complete(&self, req: &Request) -> Result<String, ProviderError> {
        let p = &req.prompt;
        match req.stage {
            Stage::Interface => Ok(self.interface(false)),
            Stage::InterfaceRepair => Ok(self.interface(true)),
            Stage::ApplicationsPrimary | Stage::Applications => self.applications(p),
            Stage::Implementations => self.implementation(p, false),
            Stage::ImplementationsRetry => self.implementation(p, true),
            Stage::Sampler => Ok(self.sampler(0)),
            Stage::SamplerFeedback => {
                let round: usize = header(p, "Round")
                    .and_then(|r| r.split_whitespace().next()?.parse().ok())
                    .unwrap_or(1);
                Ok(self.sampler(round))
            }
            Stage::SamplerRetry => Ok(self.sampler(0)),
            Stage::Edit => self.edit(p),
            Stage::EditRepair => Ok(fenced("shapescript", "wings(frame(1, 1, 1, 0, 0, 0), 2);")),
        }
    }
}

/// Closed triangle mesh of the cuboids: 8 vertices and 12 faces each.
pub fn box_mesh(parts: &[Part]) -> Mesh {
    const FACES: [[usize; 3]; 12] = [
        [0, 2, 1],
        [0, 3, 2],
        [4, 5, 6],
        [4, 6, 7],
        [0, 1, 5],
        [0, 5, 4],
        [1, 2, 6],
        [1, 6, 5],
        [2, 3, 7],
        [2, 7, 6],
        [3, 0, 4],
        [3, 4, 7],
    ];
    let mut mesh = Mesh::default();
    for p in parts {
        let base = mesh.vertices.len();
        let h = p.dims * 0.5;
        for (sx, sy, sz) in [
            (-1., -1., -1.),
            (1., -1., -1.),
            (1., -1., 1.),
            (-1., -1., 1.),
            (-1., 1., -1.),
            (1., 1., -1.),
            (1., 1., 1.),
            (-1., 1., 1.),
        ] {
            mesh.vertices
                .push(p.center + Vec3::new(sx * h.x, sy * h.y, sz * h.z));
        }
        mesh.faces.extend(FACES.iter().map(|f| f.map(|i| base + i)));
    }
    mesh
}

/// Seed set, descriptions and a replayable transcript for the chair run.
pub const FIXTURE_SHAPES: usize = 10;
pub const FIXTURE_SEED: u64 = 11;
pub const FIXTURE_DESIGN_SEED: u64 = 5;
/// Edits of the first chair's seed program recorded alongside the design run.
pub const EDIT_REQUESTS: [&str; 3] = [
    "make the back taller",
    "make the legs shorter",
    "add unknown wings",
];

/// Record a full design run against the oracle and write the replay inputs
/// plus a few derived assets (a mesh and the seed program of the first chair)
/// into `dir`. Timestamps are zeroed so the files are reproducible.
pub fn write_fixtures(dir: &Path) -> Result<DesignOutput, Box<dyn std::error::Error>> {
    let chairs = SyntheticChairs::generate(FIXTURE_SHAPES, FIXTURE_SEED);
    let transcript = Arc::new(Transcript::new());
    let rec = RecordingProvider::new(chairs.oracle(), transcript.clone());
    let out = run_design(
        &chairs.seed_set,
        &descriptions(),
        &rec,
        &PipelineConfig::default(),
        FIXTURE_DESIGN_SEED,
    )?;
    let first = &out.seed_programs[0];
    for request in EDIT_REQUESTS {
        // the last request is meant to fail; its transcript drives the error path
        if let Err(f) = stage_edit(&first.program, request, &out.library, &rec) {
            log::info!("edit `{request}` failed: {}", f.error);
        }
    }
    std::fs::create_dir_all(dir)?;
    std::fs::write(
        dir.join("seed_set.json"),
        serde_json::to_string_pretty(&chairs.seed_set)? + "\n",
    )?;
    std::fs::write(
        dir.join("descriptions.txt"),
        descriptions().join("\n") + "\n",
    )?;
    let records: Vec<TranscriptRecord> = transcript
        .records()
        .into_iter()
        .map(|r| TranscriptRecord { timestamp: 0, ..r })
        .collect();
    write_transcript(&dir.join("transcript.jsonl"), &records)?;
    std::fs::write(dir.join("chair_00.ss"), print_program(&first.program))?;
    let (norm, _) = chairs.seed_set.normalized()?;
    save_obj(&box_mesh(&norm.shapes[0].parts), &dir.join("chair_00.obj"))?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::match_error;
    use crate::interpreter::execute_program;

    #[test]
    fn chairs_are_valid_and_deterministic() {
        let a = SyntheticChairs::generate(10, 7);
        let b = SyntheticChairs::generate(10, 7);
        a.seed_set.validate().unwrap();
        assert_eq!(a.seed_set, b.seed_set);
        assert_eq!(a.seed_set.shapes.len(), 10);
        let arms = a
            .truth
            .values()
            .filter(|t| t.iter().any(|x| x.fn_name == "arm_rests"))
            .count();
        assert_eq!(arms, 4);
    }

    #[test]
    fn truth_calls_reproduce_their_groups() {
        let c = SyntheticChairs::generate(10, 7);
        let limits = ExecLimits::default();
        for shape in &c.seed_set.shapes {
            for a in c.truth[&shape.id]
                .iter()
                .filter(|a| a.fn_name != "arm_rests")
            {
                let target: Vec<Part> = a
                    .part_group
                    .iter()
                    .map(|&i| shape.parts[i].clone())
                    .collect();
                let frame = crate::validation::group_frame(&target).unwrap();
                let out =
                    execute_function(&c.library, &a.fn_name, frame, &a.args, &limits).unwrap();
                assert!(
                    match_error(&out.parts, &target, 0.25).value() < 1e-5,
                    "{} {}",
                    shape.id,
                    a.fn_name
                );
            }
        }
    }

    #[test]
    fn oracle_edit_makes_back_taller() {
        let c = SyntheticChairs::generate(1, 0);
        let lib = &c.library;
        let prog = parse_program(
            "leg_base(frame(1, 0.9, 1, 0, 0.45, 0), 0.1, false);\nladder_back(frame(1, 1, 0.12, 0, 1.5, -0.44), 3, 0.5);",
            lib,
        )
        .unwrap();
        let edited =
            crate::llm::stage_edit(&prog, "make the back taller", lib, &c.oracle()).unwrap();
        assert_eq!(edited.statements[0], prog.statements[0]);
        let (a, b) = (prog.statements[1].frame(), edited.statements[1].frame());
        assert!((b.dims.y - 1.25).abs() < 1e-9);
        assert!(((b.center.y - b.dims.y / 2.0) - (a.center.y - a.dims.y / 2.0)).abs() < 1e-9);
        let before = execute_program(lib, &prog, &limits()).unwrap();
        let after = execute_program(lib, &edited, &limits()).unwrap();
        assert_eq!(before.parts.len(), after.parts.len());
        // only back parts moved
        for (p, q) in before.parts.iter().zip(&after.parts).take(4) {
            assert_eq!(p, q);
        }
    }

    fn limits() -> ExecLimits {
        ExecLimits::default()
    }
}
