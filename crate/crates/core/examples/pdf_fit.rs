//! Moment-matched type 1 and type 2 roll densities.
//!
//! ```sh
//! cargo run --release --example pdf_fit
//! ```

use parroll::pdf_fit::{fit_pdf, targets_from_moments, MomentTargets, PdfFitOptions, PdfKind};

fn fmt4(v: [f64; 4]) -> String {
    v.iter()
        .map(|x| format!("{x:+.4e}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn show(label: &str, targets: &MomentTargets, opts: &PdfFitOptions) -> parroll::Result<()> {
    println!("{label}: targets [{}]", fmt4(targets.m));
    for kind in [PdfKind::Type1, PdfKind::Type2] {
        let fit = fit_pdf(targets, kind, opts)?;
        println!(
            "  {}  d = [{}]  C = {:.5}  residual {:.2e}",
            kind.name(),
            fmt4(fit.model.d),
            fit.model.c_norm,
            fit.residual
        );
    }
    Ok(())
}

fn main() -> parroll::Result<()> {
    let open = PdfFitOptions {
        support: None,
        ..PdfFitOptions::default()
    };
    show(
        "standard normal",
        &MomentTargets::new([0.0, 1.0, 0.0, 3.0], [1.0; 4])?,
        &open,
    )?;
    show(
        "Laplace b = 1",
        &MomentTargets::new([0.0, 2.0, 0.0, 24.0], [1.0; 4])?,
        &open,
    )?;
    // steady closure-2 roll moments of the example ship
    show(
        "roll, closure 2",
        &targets_from_moments(4.08e-4, 3.21e-2)?,
        &PdfFitOptions::default(),
    )?;
    Ok(())
}
