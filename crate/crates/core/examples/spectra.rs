//! ITTC, effective-wave and ARMA spectra for the reference sea state.
//!
//! ```sh
//! cargo run --release --example spectra
//! ```

use parroll::arma_fit::ArmaFilter;
use parroll::spectra::{
    arma_spectrum, effective_spectrum, grim_transfer, ittc_spectrum, spectral_moment,
    FrequencyGrid, SeaState, GRAVITY,
};

fn main() -> parroll::Result<()> {
    let grid = FrequencyGrid::default();
    let sea = SeaState::reference();
    let length = 262.0;

    let ittc = ittc_spectrum(&grid, &sea)?;
    let eff = effective_spectrum(&grid, &sea, length, GRAVITY)?;
    let arma = arma_spectrum(&grid, &ArmaFilter::reference())?;

    let h = sea.h13 / 4.0;
    println!(
        "ITTC       m0 = {:.5} (H/4)² = {:.5}, peak at {:.3} rad/s",
        spectral_moment(&ittc, 0)?,
        h * h,
        ittc.peak_omega()
    );
    println!(
        "effective  m0 = {:.5}, peak at {:.3} rad/s",
        spectral_moment(&eff, 0)?,
        eff.peak_omega()
    );
    println!(
        "ARMA       m0 = {:.5}, peak at {:.3} rad/s",
        spectral_moment(&arma, 0)?,
        arma.peak_omega()
    );

    println!("\n omega   S_w       |H|       S_eff     S_6");
    for w in [0.3, 0.4, 0.5, 0.6, 0.8, 1.0, 1.5] {
        println!(
            " {w:.2}   {:.5}   {:.5}   {:.5}   {:.5}",
            ittc.interpolate(w),
            grim_transfer(w, sea.chi, length, GRAVITY).abs(),
            eff.interpolate(w),
            arma.interpolate(w)
        );
    }
    Ok(())
}
