//! Sixth-order ARMA wave filter: pole analysis and stable spectral fitting.
//!
//! The filter is
//!
//! ```text
//! x⁽⁶⁾ + α₁x⁽⁵⁾ + α₂x⁽⁴⁾ + α₃x⁽³⁾ + α₄x⁽²⁾ + α₅x⁽¹⁾ + α₆x = √π·k·w⁽³⁾
//! ```
//!
//! driven by unit white noise `w`. Fitting optimizes the denominator as a
//! product of three damped quadratics `x² + 2ζω·x + ω²` with `ζ, ω > 0`, so
//! every iterate is Hurwitz by construction.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{nelder_mead, softplus, softplus_inv, SimplexOptions};
use crate::poly;
use crate::spectra::{arma_density, FrequencyGrid, SpectrumSamples};

/// Poles with real part at or above this are treated as unstable.
pub const STABILITY_MARGIN: f64 = -1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmaFilter {
    pub alpha: [f64; 6],
    pub k: f64,
}

impl ArmaFilter {
    pub fn new(alpha: [f64; 6], k: f64) -> Self {
        ArmaFilter { alpha, k }
    }

    /// Filter fitted to the effective wave of a 262 m ship in head seas at
    /// T01 = 9.99 s, H1/3 = 5 m.
    pub fn reference() -> Self {
        ArmaFilter {
            alpha: [0.828, 0.935, 0.424, 0.227, 0.0490, 0.0140],
            k: 0.0459,
        }
    }

    /// Builds the filter whose characteristic polynomial is
    /// `Π (x² + 2ζᵢωᵢx + ωᵢ²)`.
    pub fn from_quadratics(factors: &[(f64, f64); 3], k: f64) -> Self {
        let q: Vec<(f64, f64)> = factors
            .iter()
            .map(|&(zeta, omega)| (2.0 * zeta * omega, omega * omega))
            .collect();
        let tail = poly::expand_quadratics(&q);
        let mut alpha = [0.0; 6];
        alpha.copy_from_slice(&tail);
        ArmaFilter { alpha, k }
    }

    pub fn poles(&self) -> PoleSet {
        characteristic_poles(self)
    }

    pub fn is_stable(&self) -> bool {
        is_stable(self)
    }

    pub fn ensure_stable(&self) -> Result<()> {
        let p = self.poles();
        if p.max_real() < STABILITY_MARGIN {
            Ok(())
        } else {
            Err(Error::UnstableFilter {
                max_real: p.max_real(),
            })
        }
    }

    /// Drift matrix of the observable-canonical state-space form: row `i` is
    /// `dx_i = x_{i+1} − α_i·x_1`.
    pub fn state_matrix(&self) -> [[f64; 6]; 6] {
        let mut a = [[0.0; 6]; 6];
        for i in 0..6 {
            a[i][0] = -self.alpha[i];
            if i < 5 {
                a[i][i + 1] = 1.0;
            }
        }
        a
    }

    /// Diffusion coefficient on the third state.
    pub fn noise_gain(&self) -> f64 {
        std::f64::consts::PI.sqrt() * self.k
    }
}

/// The six roots of the characteristic polynomial, sorted by real part then
/// imaginary part.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleSet(pub Vec<Complex64>);

impl PoleSet {
    pub fn max_real(&self) -> f64 {
        self.0
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn as_pairs(&self) -> Vec<[f64; 2]> {
        self.0.iter().map(|z| [z.re, z.im]).collect()
    }
}

pub fn characteristic_poles(filter: &ArmaFilter) -> PoleSet {
    PoleSet(poly::monic_roots(&filter.alpha))
}

/// True when every pole has real part below [`STABILITY_MARGIN`].
pub fn is_stable(filter: &ArmaFilter) -> bool {
    filter.alpha.iter().all(|a| a.is_finite())
        && characteristic_poles(filter).max_real() < STABILITY_MARGIN
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitOptions {
    /// Frequency band of the objective, rad/s.
    pub band: (f64, f64),
    /// Band over which the reported relative L2 residual is computed.
    pub report_band: (f64, f64),
    /// Relative weights use `max(S_target, floor·max S_target)`.
    pub floor_fraction: f64,
    pub starts: usize,
    pub seed: u64,
    pub max_evals: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            band: (0.2, 2.0),
            report_band: (0.2, 1.5),
            floor_fraction: 0.1,
            starts: 16,
            seed: 0x5eed,
            max_evals: 60_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub filter: ArmaFilter,
    /// Relative L2 error `‖S₆ − S‖ / ‖S‖` over the report band.
    pub residual: f64,
    /// Final value of the weighted least-squares objective.
    pub objective: f64,
    /// Objective evaluations of the winning start.
    pub iterations: usize,
    pub start: usize,
    pub band: FrequencyGrid,
}

impl FitReport {
    /// `{"alpha":[...],"k":...,"residual":...,"poles":[[re,im],...]}`
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "alpha": self.filter.alpha,
            "k": self.filter.k,
            "residual": self.residual,
            "objective": self.objective,
            "iterations": self.iterations,
            "poles": self.filter.poles().as_pairs(),
        })
    }
}

/// Relative L2 misfit of `filter`'s spectrum against `target` on `[lo, hi]`.
pub fn relative_l2(filter: &ArmaFilter, target: &SpectrumSamples, band: (f64, f64)) -> Result<f64> {
    let sub = target.band(band.0, band.1)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (&w, &s) in sub.omegas().iter().zip(sub.density()) {
        let d = arma_density(w, filter)? - s;
        num += d * d;
        den += s * s;
    }
    if den == 0.0 {
        return Err(Error::InvalidInput(
            "target spectrum is zero on the report band".into(),
        ));
    }
    Ok((num / den).sqrt())
}

struct Objective {
    omegas: Vec<f64>,
    target: Vec<f64>,
    inv_weight: Vec<f64>,
}

impl Objective {
    fn new(target: &SpectrumSamples, opts: &FitOptions) -> Result<Self> {
        let sub = target.band(opts.band.0, opts.band.1)?;
        let floor = opts.floor_fraction * sub.max_density();
        Ok(Objective {
            omegas: sub.omegas().to_vec(),
            target: sub.density().to_vec(),
            inv_weight: sub.density().iter().map(|s| 1.0 / s.max(floor)).collect(),
        })
    }

    fn filter(p: &[f64]) -> ArmaFilter {
        let q = [
            (softplus(p[0]), softplus(p[1])),
            (softplus(p[2]), softplus(p[3])),
            (softplus(p[4]), softplus(p[5])),
        ];
        ArmaFilter::from_quadratics(&q, p[6].exp())
    }

    fn value(&self, p: &[f64]) -> f64 {
        let f = Self::filter(p);
        let mut acc = 0.0;
        for ((&w, &s), &iw) in self.omegas.iter().zip(&self.target).zip(&self.inv_weight) {
            let Ok(model) = arma_density(w, &f) else {
                return f64::INFINITY;
            };
            let r = (model - s) * iw;
            acc += r * r;
        }
        acc
    }
}

/// Fits a stable 6th-order ARMA filter to `target`.
///
/// Minimizes `Σ [(S₆ − S)/max(S, floor·max S)]²` over the fit band with a
/// seeded multi-start simplex search. Starts run in parallel; the winner is
/// chosen by `(objective, start index)`, so the result does not depend on the
/// thread count.
pub fn fit_arma(target: &SpectrumSamples, opts: &FitOptions) -> Result<FitReport> {
    if target.omegas().len() < 32 {
        return Err(Error::InvalidInput(format!(
            "ARMA fit needs at least 32 target samples (got {})",
            target.omegas().len()
        )));
    }
    if target.is_all_zero() {
        return Err(Error::InvalidInput(
            "ARMA fit target is identically zero".into(),
        ));
    }
    let objective = Objective::new(target, opts)?;
    if objective.target.iter().all(|s| *s == 0.0) {
        return Err(Error::InvalidInput(
            "ARMA fit target is zero on the fit band".into(),
        ));
    }
    let (lo, hi) = opts.band;
    let variance: f64 = objective
        .omegas
        .windows(2)
        .zip(objective.target.windows(2))
        .map(|(w, s)| 0.5 * (w[1] - w[0]) * (s[0] + s[1]))
        .sum();

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let starts: Vec<Vec<f64>> = (0..opts.starts.max(1))
        .map(|_| {
            let mut q = [(0.0, 0.0); 3];
            for pair in q.iter_mut() {
                let zeta = rng.random_range(0.05..0.5);
                let omega = rng.random_range(lo.max(0.05)..(0.5 * (lo + hi)).max(lo + 0.1));
                *pair = (zeta, omega);
            }
            // gain that reproduces the target variance for these poles
            let unit = ArmaFilter::from_quadratics(&q, 1.0);
            let unit_var = unit_variance(&unit, &objective.omegas);
            let k = if unit_var > 0.0 {
                (variance / unit_var).sqrt()
            } else {
                1.0
            };
            let mut p = Vec::with_capacity(7);
            for (z, w) in q {
                p.push(softplus_inv(z));
                p.push(softplus_inv(w));
            }
            p.push(k.max(1e-12).ln());
            p
        })
        .collect();

    let simplex = SimplexOptions {
        initial_step: 0.25,
        f_tol: 1e-22,
        x_tol: 1e-11,
        max_evals: opts.max_evals,
        restarts: 12,
    };
    let results: Vec<_> = starts
        .par_iter()
        .map(|x0| {
            let initial = objective.value(x0);
            let r = nelder_mead(|p| objective.value(p), x0, &simplex);
            (r, initial)
        })
        .collect();

    let (start, (best, initial)) = results
        .into_iter()
        .enumerate()
        .min_by(|a, b| a.1 .0.f.total_cmp(&b.1 .0.f).then(a.0.cmp(&b.0)))
        .expect("at least one start");
    debug_assert!(best.f <= initial);

    let filter = Objective::filter(&best.x);
    let report = FitReport {
        filter,
        residual: relative_l2(&filter, target, opts.report_band)?,
        objective: best.f,
        iterations: best.evals,
        start,
        band: FrequencyGrid::new(objective.omegas.clone())?,
    };
    if !report.filter.is_stable() {
        // cannot happen for finite parameters, but a softplus underflow would land here
        return Err(Error::UnstableFilter {
            max_real: report.filter.poles().max_real(),
        });
    }
    if !best.converged && !best.f.is_finite() {
        return Err(Error::FitNotConverged {
            best: Box::new(report),
        });
    }
    Ok(report)
}

fn unit_variance(filter: &ArmaFilter, omegas: &[f64]) -> f64 {
    omegas
        .windows(2)
        .map(|w| {
            let a = arma_density(w[0], filter).unwrap_or(0.0);
            let b = arma_density(w[1], filter).unwrap_or(0.0);
            0.5 * (w[1] - w[0]) * (a + b)
        })
        .sum()
}
