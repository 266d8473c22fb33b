//! Loading the files commands take.

use std::path::Path;

use serde::Deserialize;

use shapekit::geometry::io::{decode_voxels, parse_xyz};
use shapekit::search::{SamplerSet, TargetObservation};
use shapekit::seedset::SeedSet;
use shapekit::shapescript::{parse_library, parse_program, parse_samplers, Library, ShapeProgram};
use shapekit::validation::LabelVoter;
use shapekit::{CoordFrame, Part, Vec3};

use crate::error::{exit, CliError, CliResult};

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn load_library(path: &Path) -> CliResult<Library> {
    Ok(parse_library(&read_text(path)?)?)
}

pub fn load_program(path: &Path, lib: &Library) -> CliResult<ShapeProgram> {
    Ok(parse_program(&read_text(path)?, lib)?)
}

pub fn load_seed_set(path: &Path) -> CliResult<SeedSet> {
    Ok(SeedSet::from_json(&read_text(path)?)?)
}

/// One description per non-empty line.
pub fn load_descriptions(path: &Path) -> CliResult<Vec<String>> {
    Ok(read_text(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}

/// `w,h,d,x,y,z`.
pub fn parse_frame(text: &str) -> CliResult<CoordFrame> {
    let v: Vec<f64> = text
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| {
            CliError::usage(format!(
                "frame `{text}`: expected six comma-separated numbers"
            ))
        })?;
    let arr: [f64; 6] = v
        .try_into()
        .map_err(|_| CliError::usage(format!("frame `{text}`: expected six numbers")))?;
    let f = CoordFrame::from_whd_xyz(arr);
    if !f.is_valid() {
        return Err(CliError::usage(format!(
            "frame `{text}` must have positive dimensions"
        )));
    }
    Ok(f)
}

/// Samplers plus their frame: `--frame` if given, else `sampler_frame.json`
/// beside the samplers file, else a unit cube at the origin.
pub fn load_sampler_set(path: &Path, lib: &Library, frame: Option<&str>) -> CliResult<SamplerSet> {
    let samplers = parse_samplers(&read_text(path)?, lib)?;
    let frame = match frame {
        Some(f) => parse_frame(f)?,
        None => {
            let side = path.with_file_name("sampler_frame.json");
            if side.exists() {
                serde_json::from_str(&read_text(&side)?)?
            } else {
                CoordFrame::new(Vec3::ZERO, Vec3::splat(1.0))
            }
        }
    };
    Ok(SamplerSet { samplers, frame })
}

pub fn load_voter(path: &Path) -> CliResult<LabelVoter> {
    Ok(serde_json::from_str(&read_text(path)?)?)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PartsFile {
    Bare(Vec<Part>),
    Wrapped { parts: Vec<Part> },
    Tagged(TargetObservation),
}

/// A target by extension: `.xyz` points, `.bin`/`.skvx` voxels, otherwise
/// JSON parts (a bare list, `{"parts": [...]}`, or a tagged observation).
pub fn load_target(path: &Path) -> CliResult<TargetObservation> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    match ext.as_str() {
        "xyz" => Ok(TargetObservation::Pointcloud(parse_xyz(&read_text(path)?)?)),
        "bin" | "skvx" | "vox" => {
            let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
            Ok(TargetObservation::Voxels(decode_voxels(&bytes)?))
        }
        _ => parse_target_json(&read_text(path)?),
    }
}

pub fn parse_target_json(text: &str) -> CliResult<TargetObservation> {
    let parsed: PartsFile = serde_json::from_str(text)
        .map_err(|e| CliError::new("InvalidTarget", format!("target JSON: {e}"), exit::CONFIG))?;
    Ok(match parsed {
        PartsFile::Bare(p) | PartsFile::Wrapped { parts: p } => TargetObservation::Primitives(p),
        PartsFile::Tagged(t) => t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frames_parse() {
        let f = parse_frame("1, 2, 3, 0, 0.5, -1").unwrap();
        assert_eq!(f.dims, Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(f.center, Vec3::new(0.0, 0.5, -1.0));
        for bad in ["1,2,3", "a,b,c,d,e,f", "0,1,1,0,0,0"] {
            assert_eq!(parse_frame(bad).unwrap_err().code, "Usage");
        }
    }

    #[test]
    fn target_json_shapes() {
        let bare = r#"[{"dims": [1, 1, 1], "center": [0, 0, 0]}]"#;
        let wrapped = r#"{"parts": [{"label": "a", "dims": [1, 1, 1], "center": [0, 0, 0]}]}"#;
        let tagged =
            r#"{"modality": "primitives", "payload": [{"dims": [1, 1, 1], "center": [0, 0, 0]}]}"#;
        for t in [bare, wrapped, tagged] {
            assert!(
                matches!(parse_target_json(t).unwrap(), TargetObservation::Primitives(p) if p.len() == 1)
            );
        }
        assert_eq!(parse_target_json("{}").unwrap_err().code, "InvalidTarget");
    }
}
