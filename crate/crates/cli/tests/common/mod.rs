#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use shapekit::llm::{run_design, DesignOutput, ReplayProvider};
use shapekit::seedset::SeedSet;
use shapekit::synthetic::{descriptions, FIXTURE_DESIGN_SEED};
use shapekit::PipelineConfig;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/chairs")
}

pub fn seed_set() -> SeedSet {
    SeedSet::from_json(&std::fs::read_to_string(fixtures().join("seed_set.json")).unwrap()).unwrap()
}

pub fn replay() -> ReplayProvider {
    ReplayProvider::from_path(&fixtures().join("transcript.jsonl")).unwrap()
}

/// The bundled design run, replayed once per test binary.
pub fn design() -> &'static DesignOutput {
    static OUT: OnceLock<DesignOutput> = OnceLock::new();
    OUT.get_or_init(|| {
        run_design(
            &seed_set(),
            &descriptions(),
            &replay(),
            &PipelineConfig::default(),
            FIXTURE_DESIGN_SEED,
        )
        .unwrap()
    })
}

/// Design artifacts written to `dir`, plus an asset store under `dir/data`.
pub fn workspace(dir: &Path) -> PathBuf {
    design().write_to(&dir.join("design")).unwrap();
    let data = dir.join("data");
    for sub in ["shapes", "programs", "meshes"] {
        std::fs::create_dir_all(data.join(sub)).unwrap();
    }
    std::fs::copy(
        fixtures().join("chair_00.ss"),
        data.join("programs/chair_00.ss"),
    )
    .unwrap();
    std::fs::copy(
        fixtures().join("chair_00.obj"),
        data.join("meshes/chair_00.obj"),
    )
    .unwrap();
    let shape = &seed_set().shapes[1];
    std::fs::write(
        data.join("shapes/chair_01.json"),
        serde_json::to_string(shape).unwrap(),
    )
    .unwrap();
    data
}

pub fn chair_program() -> String {
    std::fs::read_to_string(fixtures().join("chair_00.ss")).unwrap()
}
