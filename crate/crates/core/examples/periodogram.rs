//! Welch estimate of a simulated effective wave against the filter's
//! analytic spectrum.
//!
//! ```sh
//! cargo run --release --example periodogram
//! ```

use parroll::arma_fit::ArmaFilter;
use parroll::periodogram::periodogram;
use parroll::sim::{simulate_filter, RngSpec, StepConfig};
use parroll::spectra::{arma_density, spectral_moment};

fn main() -> parroll::Result<()> {
    let filter = ArmaFilter::reference();
    let cfg = StepConfig::new(20_000.0, 1e-3, 200)?;
    let series = simulate_filter(&filter, &cfg, RngSpec::new(7, 0))?;
    let est = periodogram(&series, 0, Some(2048))?;

    println!(
        "record dt {} s, {} samples, variance {:.4}",
        series.dt(),
        series.len(),
        series.variance(0)
    );
    println!("Welch m0 = {:.4}", spectral_moment(&est, 0)?);
    println!("\n omega   Welch     S_6");
    for w in [0.2, 0.3, 0.4, 0.5, 0.6, 0.8, 1.0] {
        println!(
            " {w:.2}   {:.4}   {:.4}",
            est.interpolate(w),
            arma_density(w, &filter)?
        );
    }
    Ok(())
}
