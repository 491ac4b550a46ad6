//! Roll of the synthetic C11-like ship driven two ways: the filter SDE
//! (Euler–Maruyama) and a random-phase superposition of the effective wave.
//!
//! ```sh
//! cargo run --release --example simulate_roll -- 20
//! ```

use parroll::config::RunConfig;
use parroll::moments::MultiIndex;
use parroll::pipeline::{resolve_filter, run_sde_ensemble, run_superposition_ensemble};

fn main() -> parroll::Result<()> {
    let realizations: usize = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(20);
    let mut cfg = RunConfig::example();
    cfg.run.realizations = realizations;
    cfg.run.superposition_realizations = realizations.min(10);
    cfg.run.series_to_write = 0;

    let filter = resolve_filter(&cfg)?;
    let t0 = std::time::Instant::now();
    let sde = run_sde_ensemble(&cfg, &filter)?;
    println!(
        "SDE: {realizations} × {} s at dt = {} s ({:.1?})",
        cfg.run.duration,
        cfg.run.dt,
        t0.elapsed()
    );
    for (e, name) in [
        ([2u8, 0, 0, 0, 0, 0, 0, 0], "E[X1²]"),
        ([0, 2, 0, 0, 0, 0, 0, 0], "E[X2²]"),
        ([0, 0, 2, 0, 0, 0, 0, 0], "E[X3²]"),
        ([4, 0, 0, 0, 0, 0, 0, 0], "E[X1⁴]"),
    ] {
        let m = sde
            .stats
            .get(&MultiIndex::new(e.to_vec()))
            .expect("recorded");
        println!("  {name} = {:.4e} ± {:.1e}", m.estimate, m.stderr);
    }

    let t0 = std::time::Instant::now();
    let sup = run_superposition_ensemble(&cfg)?;
    println!(
        "superposition: {} runs, {} components ({:.1?})",
        cfg.run.superposition_realizations,
        cfg.run.components,
        t0.elapsed()
    );
    for (e, name) in [
        ([2u8, 0, 0], "E[φ²]"),
        ([0, 2, 0], "E[φ̇²]"),
        ([0, 0, 2], "E[ζ²]"),
    ] {
        let m = sup
            .stats
            .get(&MultiIndex::new(e.to_vec()))
            .expect("recorded");
        println!("  {name} = {:.4e} ± {:.1e}", m.estimate, m.stderr);
    }

    let (h1, h2) = (sde.roll_histogram.density(), sup.roll_histogram.density());
    let l1: f64 = h1.iter().zip(&h2).map(|(a, b)| (a - b).abs()).sum::<f64>()
        * sde.roll_histogram.bin_width();
    println!("L1 distance between roll histograms: {l1:.3}");
    Ok(())
}
