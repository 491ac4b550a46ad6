//! Fits the 6th-order ARMA filter to the effective-wave spectrum of a
//! 262 m ship in head seas and compares it with the published filter.
//!
//! ```sh
//! cargo run --release --example fit_filter
//! ```

use parroll::arma_fit::{fit_arma, ArmaFilter, FitOptions};
use parroll::spectra::{arma_spectrum, effective_spectrum, FrequencyGrid, SeaState, GRAVITY};

fn main() -> parroll::Result<()> {
    let grid = FrequencyGrid::default();
    let sea = SeaState::reference();
    let target = effective_spectrum(&grid, &sea, 262.0, GRAVITY)?;
    let opts = FitOptions::default();

    let t0 = std::time::Instant::now();
    let fit = fit_arma(&target, &opts)?;
    println!("effective-wave fit ({:.1?})", t0.elapsed());
    println!("  alpha    = {:.5?}", fit.filter.alpha);
    println!("  k        = {:.5}", fit.filter.k);
    println!(
        "  rel. L2  = {:.4} on {:?} rad/s",
        fit.residual, opts.report_band
    );
    for z in fit.filter.poles().as_slice() {
        println!("  pole     {:+.4} {:+.4}i", z.re, z.im);
    }

    let reference = ArmaFilter::reference();
    let t0 = std::time::Instant::now();
    let rt = fit_arma(&arma_spectrum(&grid, &reference)?, &opts)?;
    let worst = rt
        .filter
        .alpha
        .iter()
        .chain(std::iter::once(&rt.filter.k))
        .zip(reference.alpha.iter().chain(std::iter::once(&reference.k)))
        .map(|(a, b)| (a / b - 1.0).abs())
        .fold(0.0, f64::max);
    println!(
        "round trip on the published filter ({:.1?}): worst relative error {worst:.2e}",
        t0.elapsed()
    );
    Ok(())
}
