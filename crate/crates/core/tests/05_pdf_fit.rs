use parroll::pdf_fit::{
    default_starts, fit_pdf, fit_pdf_from_starts, pdf_density, pdf_moment, targets_from_moments,
    MomentTargets, PdfFitOptions, PdfKind, PdfModel, ROLL_SUPPORT,
};
use proptest::prelude::*;

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n)
        .map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    (f(a) + f(b) + inner) * h / 3.0
}

fn brute_moment(model: &PdfModel, n: i32, half: f64) -> f64 {
    simpson(
        |x| x.powi(n) * pdf_density(x, model).unwrap(),
        -half,
        half,
        200_000,
    )
}

#[test]
fn laplace_moments_match_closed_form() {
    for b in [0.3, 0.7, 1.0] {
        let model = PdfModel::new(PdfKind::Type2, [1.0 / b, 0.0, 0.0, 0.0], None).unwrap();
        assert!((pdf_moment(&model, 2).unwrap() / (2.0 * b * b) - 1.0).abs() < 1e-9);
        assert!((pdf_moment(&model, 4).unwrap() / (24.0 * b.powi(4)) - 1.0).abs() < 1e-9);
    }
}

#[test]
fn fitted_densities_integrate_to_one() {
    let targets = MomentTargets::new([0.004, 0.04, 0.0015, 0.0052], [1.0; 4]).unwrap();
    for kind in [PdfKind::Type1, PdfKind::Type2] {
        let fit = fit_pdf(&targets, kind, &PdfFitOptions::default()).unwrap();
        let mass = brute_moment(&fit.model, 0, ROLL_SUPPORT);
        assert!((mass - 1.0).abs() < 1e-8, "{kind:?}: {mass}");
        for n in 1..=4 {
            let lib = fit.fitted_moments[n - 1];
            let brute = brute_moment(&fit.model, n as i32, ROLL_SUPPORT);
            assert!(
                (lib - brute).abs() < 1e-9,
                "{kind:?} m{n}: {lib} vs {brute}"
            );
        }
    }
}

#[test]
fn gaussian_targets_are_recovered() {
    let s2: f64 = 0.032;
    let targets = targets_from_moments(0.0, s2).unwrap();
    let opts = PdfFitOptions {
        support: None,
        ..Default::default()
    };
    let fit = fit_pdf(&targets, PdfKind::Type1, &opts).unwrap();
    let d = fit.model.d;
    assert!((d[1] * 2.0 * s2 - 1.0).abs() < 1e-3, "{d:?}");
    assert!(
        d[0].abs() * s2.sqrt() < 1e-3 && d[2].abs() * s2.powf(1.5) < 1e-3 && d[3] * s2 * s2 < 1e-3
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn type2_odd_moments_vanish(m2 in 0.01..0.2f64, kurt in 2.0..5.0f64, m1 in -0.02..0.02f64) {
        let targets = MomentTargets::new([m1, m2, 0.0, kurt * m2 * m2], [1.0; 4]).unwrap();
        let fit = fit_pdf(&targets, PdfKind::Type2, &PdfFitOptions::default()).unwrap();
        prop_assert!(fit.fitted_moments[0].abs() < 1e-8);
        prop_assert!(fit.fitted_moments[2].abs() < 1e-8);
    }

    #[test]
    fn start_order_does_not_matter(seed in 0u64..1000, rot in 1usize..8) {
        let targets = MomentTargets::new([0.004, 0.04, 0.0015, 0.0052], [1.0; 4]).unwrap();
        let opts = PdfFitOptions { seed, ..Default::default() };
        let starts = default_starts(&opts);
        let mut shuffled = starts.clone();
        shuffled.rotate_left(rot);
        shuffled.reverse();
        for kind in [PdfKind::Type1, PdfKind::Type2] {
            let a = fit_pdf_from_starts(&targets, kind, &opts, &starts).unwrap();
            let b = fit_pdf_from_starts(&targets, kind, &opts, &shuffled).unwrap();
            prop_assert_eq!(a.model, b.model);
            prop_assert_eq!(a.residual.to_bits(), b.residual.to_bits());
        }
    }
}
