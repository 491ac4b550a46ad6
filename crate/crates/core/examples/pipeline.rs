//! Runs CLI commands in-process into a temporary directory and lists the
//! manifest.
//!
//! ```sh
//! cargo run --release --example pipeline
//! ```

use parroll::config::RunConfig;
use parroll::pipeline::{run, Command};

fn main() -> parroll::Result<()> {
    let dir = std::env::temp_dir().join(format!("parroll-example-{}", std::process::id()));
    let mut cfg = RunConfig::example();
    cfg.run.realizations = 4;
    cfg.run.duration = 600.0;
    cfg.run.discard = 100.0;
    cfg.run.superposition_realizations = 2;

    for (cmd, sub) in [
        (Command::Spectrum, "spectrum"),
        (Command::Moments, "moments"),
        (Command::ExportClosures, "closures"),
        (Command::Simulate, "simulate"),
    ] {
        cfg.outputs.directory = dir.join(sub);
        let out = run(cmd, &cfg, None)?;
        println!("{cmd} ({:.2} s)", out.manifest.wall_time_s);
        for f in &out.manifest.files {
            println!("  {:<34} {:>9} B  {}", f.path, f.bytes, &f.sha256[..12]);
        }
    }
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}
