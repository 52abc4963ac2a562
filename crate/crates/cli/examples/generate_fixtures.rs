//! Writes the shipped fixtures: `cargo run -p rerank-explain --example generate_fixtures [dir]`.

use std::path::PathBuf;

fn main() -> anyhow::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    for (name, text) in rerank_explain::fixtures::all_files() {
        let path = dir.join(name);
        rerank_core::fsutil::write_atomic(&path, text.as_bytes())?;
        println!("{}", path.display());
    }
    Ok(())
}
