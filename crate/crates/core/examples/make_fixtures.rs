//! Regenerate the bundled chair fixtures: `cargo run -p shapekit --example make_fixtures [dir]`.

use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/chairs"));
    let out = shapekit::synthetic::write_fixtures(&dir)?;
    println!(
        "{} functions validated; fixtures in {}",
        out.library.len(),
        dir.display()
    );
    Ok(())
}
