//! Measure the regression constants and write `baselines.json`.
//!
//! Run with `cargo run --release -p moblab-core --example record_baselines`.

use moblab_core::baseline::{default_path, Baselines};

fn main() -> moblab_core::Result<()> {
    let path = std::env::args().nth(1).map(Into::into).unwrap_or_else(default_path);
    let b = Baselines::record()?;
    b.save(&path)?;
    println!("{}", serde_json::to_string_pretty(&b)?);
    eprintln!("wrote {}", path.display());
    Ok(())
}
