//! Moment-matched non-Gaussian roll-angle densities.
//!
//! Type 1 is `C·exp(−Σ dₙ xⁿ)`, type 2 is `C·exp(−Σ dₙ |x|ⁿ)`, n = 1…4.

use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{nelder_mead, softplus, softplus_inv, SimplexOptions};

/// Physical capsize range used as the default support for roll densities.
pub const ROLL_SUPPORT: f64 = FRAC_PI_2;

const NORM_TOL: f64 = 1e-12;
const MAX_INTERVALS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PdfKind {
    Type1,
    Type2,
}

impl PdfKind {
    pub fn name(self) -> &'static str {
        match self {
            PdfKind::Type1 => "type1",
            PdfKind::Type2 => "type2",
        }
    }
}

/// A normalized density. `support` is the symmetric truncation bound;
/// `None` means the whole real line.
#[derive(Debug, Clone, PartialEq)]
pub struct PdfModel {
    pub kind: PdfKind,
    pub d: [f64; 4],
    pub c_norm: f64,
    pub support: Option<f64>,
}

fn exponent(kind: PdfKind, d: &[f64; 4], x: f64) -> f64 {
    let t = match kind {
        PdfKind::Type1 => x,
        PdfKind::Type2 => x.abs(),
    };
    t * (d[0] + t * (d[1] + t * (d[2] + t * d[3])))
}

/// Leading-coefficient test for densities on the whole line.
fn check_integrable(kind: PdfKind, d: &[f64; 4]) -> Result<()> {
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotIntegrable(format!(
            "non-finite coefficients {d:?}"
        )));
    }
    let lead = (0..4).rev().find(|&i| d[i] != 0.0);
    let ok = match (kind, lead) {
        (_, None) => false,
        (PdfKind::Type1, Some(i)) => i % 2 == 1 && d[i] > 0.0,
        (PdfKind::Type2, Some(i)) => d[i] > 0.0,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::NotIntegrable(format!(
            "{} coefficients {d:?} diverge on the real line",
            kind.name()
        )))
    }
}

/// Half-width beyond which the integrand is below e⁻⁸⁰ of its peak.
fn tail_bound(kind: PdfKind, d: &[f64; 4], floor: f64) -> Result<f64> {
    let lead = (0..4).rev().find(|&i| d[i] != 0.0).expect("checked");
    let r = 1.0
        + (0..lead)
            .map(|i| (d[i] / d[lead]).abs())
            .fold(0.0, f64::max);
    let mut l = r.max(1.0);
    for _ in 0..60 {
        if exponent(kind, d, l) - floor > 80.0 && exponent(kind, d, -l) - floor > 80.0 {
            return Ok(l);
        }
        l *= 2.0;
    }
    Err(Error::NotIntegrable(format!(
        "no finite tail bound for {d:?}"
    )))
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// 15-point Kronrod estimate of `∫xⁱ f` for i = 0..5 and the Gauss–Kronrod
/// difference as error.
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> ([f64; 5], [f64; 5]) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = [0.0; 5];
    let mut g = [0.0; 5];
    let mut add = |x: f64, wk: f64, wg: f64| {
        let v = f(x);
        let mut p = v;
        for i in 0..5 {
            k[i] += wk * p;
            g[i] += wg * p;
            p *= x;
        }
    };
    for j in 0..7 {
        let wg = if j % 2 == 1 { WG[j / 2] } else { 0.0 };
        add(c - h * XGK[j], WGK[j], wg);
        add(c + h * XGK[j], WGK[j], wg);
    }
    add(c, WGK[7], WG[3]);
    let mut err = [0.0; 5];
    for i in 0..5 {
        k[i] *= h;
        g[i] *= h;
        err[i] = (k[i] - g[i]).abs();
    }
    (k, err)
}

/// Globally adaptive integration of `[1, x, …, x⁴]·f` over the breakpoints.
/// Stops when every component's error is below `tol·I₀`.
fn integrate_moments(f: impl Fn(f64) -> f64, breaks: &[f64], tol: f64) -> Result<[f64; 5]> {
    let mut parts: Vec<(f64, f64, [f64; 5], [f64; 5])> = breaks
        .windows(2)
        .map(|w| {
            let (v, e) = gk15(&f, w[0], w[1]);
            (w[0], w[1], v, e)
        })
        .collect();
    loop {
        let mut total = [0.0; 5];
        let mut errs = [0.0; 5];
        for p in &parts {
            for i in 0..5 {
                total[i] += p.2[i];
                errs[i] += p.3[i];
            }
        }
        if !total.iter().all(|v| v.is_finite()) || total[0] <= 0.0 {
            return Err(Error::NotIntegrable(format!(
                "quadrature gave {}",
                total[0]
            )));
        }
        let limit = tol * total[0];
        if errs.iter().all(|e| *e <= limit) {
            return Ok(total);
        }
        if parts.len() >= MAX_INTERVALS {
            return Err(Error::NotIntegrable(
                "quadrature did not reach tolerance".into(),
            ));
        }
        let worst = (0..parts.len())
            .max_by(|&i, &j| {
                let a = parts[i].3.iter().cloned().fold(0.0, f64::max);
                let b = parts[j].3.iter().cloned().fold(0.0, f64::max);
                a.total_cmp(&b)
            })
            .expect("non-empty");
        let (a, b, _, _) = parts.swap_remove(worst);
        let m = 0.5 * (a + b);
        for (lo, hi) in [(a, m), (m, b)] {
            let (v, e) = gk15(&f, lo, hi);
            parts.push((lo, hi, v, e));
        }
    }
}

/// Raw integrals `∫xⁱ exp(−E(x) + shift)` and the shift.
fn shifted_integrals(kind: PdfKind, d: &[f64; 4], support: Option<f64>) -> Result<(f64, [f64; 5])> {
    let half = match support {
        Some(s) if s > 0.0 && s.is_finite() => s,
        Some(s) => {
            return Err(Error::InvalidInput(format!(
                "support bound {s} must be positive"
            )))
        }
        None => {
            check_integrable(kind, d)?;
            let mut floor = f64::INFINITY;
            for i in 0..=400 {
                let x = -4.0 + 0.02 * i as f64;
                floor = floor.min(exponent(kind, d, x));
            }
            tail_bound(kind, d, floor)?
        }
    };
    let shift = (0..=2000)
        .map(|i| exponent(kind, d, -half + half * i as f64 / 1000.0))
        .fold(f64::INFINITY, f64::min);
    if !shift.is_finite() {
        return Err(Error::NotIntegrable(format!(
            "exponent not finite for {d:?}"
        )));
    }
    let breaks: Vec<f64> = (0..=8).map(|i| -half + half * i as f64 / 4.0).collect();
    let ints = integrate_moments(|x| (shift - exponent(kind, d, x)).exp(), &breaks, NORM_TOL)?;
    Ok((shift, ints))
}

/// `C = 1/∫exp(−Σdₙ·xⁿ)dx` over the support.
pub fn normalize(kind: PdfKind, d: [f64; 4], support: Option<f64>) -> Result<f64> {
    let (shift, ints) = shifted_integrals(kind, &d, support)?;
    let c = shift.exp() / ints[0];
    if c.is_finite() && c > 0.0 {
        Ok(c)
    } else {
        Err(Error::NotIntegrable(format!("normalization constant {c}")))
    }
}

impl PdfModel {
    pub fn new(kind: PdfKind, d: [f64; 4], support: Option<f64>) -> Result<Self> {
        let c_norm = normalize(kind, d, support)?;
        Ok(PdfModel {
            kind,
            d,
            c_norm,
            support,
        })
    }

    /// Moments n = 1…4 from a single quadrature pass.
    pub fn moments(&self) -> Result<[f64; 4]> {
        let (_, ints) = shifted_integrals(self.kind, &self.d, self.support)?;
        Ok(std::array::from_fn(|i| ints[i + 1] / ints[0]))
    }

    pub fn to_json(&self, residual: f64) -> serde_json::Value {
        serde_json::json!({
            "kind": self.kind.name(),
            "d": self.d,
            "C": self.c_norm,
            "residual": residual,
        })
    }

    /// `x,p` over `[−half, half]`.
    pub fn write_density_csv(&self, path: &Path, half: f64, points: usize) -> Result<()> {
        let mut out = String::from("x,p\n");
        let n = points.max(2);
        for i in 0..n {
            let x = -half + 2.0 * half * i as f64 / (n - 1) as f64;
            out.push_str(&format!("{x:.6e},{:.10e}\n", pdf_density(x, self)?));
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

pub fn pdf_density(x: f64, model: &PdfModel) -> Result<f64> {
    if !(model.c_norm > 0.0 && model.c_norm.is_finite()) {
        return Err(Error::InvalidInput(
            "density model is not normalized".into(),
        ));
    }
    if let Some(s) = model.support {
        if x.abs() > s {
            return Ok(0.0);
        }
    }
    Ok(model.c_norm * (-exponent(model.kind, &model.d, x)).exp())
}

/// `∫xⁿ P(x) dx`, n = 1…4.
pub fn pdf_moment(model: &PdfModel, n: usize) -> Result<f64> {
    if !(1..=4).contains(&n) {
        return Err(Error::InvalidInput(format!(
            "moment order {n} outside 1..=4"
        )));
    }
    Ok(model.moments()?[n - 1])
}

/// Target moments m₁…m₄ of roll angle with weights l₁…l₄.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentTargets {
    pub m: [f64; 4],
    pub weights: [f64; 4],
}

impl MomentTargets {
    pub fn new(m: [f64; 4], weights: [f64; 4]) -> Result<Self> {
        if m.iter().chain(&weights).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("targets must be finite".into()));
        }
        if m[1] <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "m2 = {} must be positive",
                m[1]
            )));
        }
        if m[3] < m[1] * m[1] {
            return Err(Error::InvalidInput(format!(
                "m4 = {} below m2² = {}",
                m[3],
                m[1] * m[1]
            )));
        }
        if weights.iter().any(|w| *w < 0.0) {
            return Err(Error::InvalidInput("weights must be non-negative".into()));
        }
        Ok(MomentTargets { m, weights })
    }

    /// `sᵢ = max(|mᵢ|, m₂^(i/2))`.
    pub fn scales(&self) -> [f64; 4] {
        std::array::from_fn(|i| self.m[i].abs().max(self.m[1].powf((i + 1) as f64 / 2.0)))
    }
}

/// Completes (m₁, m₂) with the second-order cumulant-neglect closure:
/// m₃ = 3m₁m₂ − 2m₁³, m₄ = 3m₂² − 2m₁⁴; unit weights.
pub fn targets_from_moments(first: f64, second: f64) -> Result<MomentTargets> {
    let var = second - first * first;
    if !(var > 1e-15 * second.abs().max(1e-300)) {
        return Err(Error::InvalidInput(format!(
            "degenerate variance {var:e} from m1 = {first}, m2 = {second}"
        )));
    }
    let m3 = 3.0 * first * second - 2.0 * first.powi(3);
    let m4 = 3.0 * second * second - 2.0 * first.powi(4);
    MomentTargets::new([first, second, m3, m4], [1.0; 4])
}

#[derive(Debug, Clone, Copy)]
pub struct PdfFitOptions {
    pub starts: usize,
    pub seed: u64,
    pub support: Option<f64>,
    /// When false, d₄ is pinned to 0 and d₂ carries the positivity constraint.
    pub quartic: bool,
    pub max_evals: usize,
}

impl Default for PdfFitOptions {
    fn default() -> Self {
        PdfFitOptions {
            starts: 8,
            seed: 0x9df,
            support: Some(ROLL_SUPPORT),
            quartic: true,
            max_evals: 6000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PdfFit {
    pub model: PdfModel,
    /// Final value of `Σ lᵢ (Jᵢ/sᵢ)²`.
    pub residual: f64,
    /// Signed `Jᵢ = ∫xⁱP − mᵢ`.
    pub moment_residuals: [f64; 4],
    pub fitted_moments: [f64; 4],
    pub start: usize,
    pub evals: usize,
}

impl PdfFit {
    pub fn to_json(&self) -> serde_json::Value {
        self.model.to_json(self.residual)
    }
}

/// Maps standardized parameters to `d`. The constrained slot goes through
/// softplus.
fn decode(theta: &[f64], sigma: f64, quartic: bool) -> [f64; 4] {
    let s = [sigma, sigma.powi(2), sigma.powi(3), sigma.powi(4)];
    if quartic {
        [
            theta[0] / s[0],
            theta[1] / s[1],
            theta[2] / s[2],
            softplus(theta[3]) / s[3],
        ]
    } else {
        [
            theta[0] / s[0],
            softplus(theta[1]) / s[1],
            theta[2] / s[2],
            0.0,
        ]
    }
}

fn objective(
    kind: PdfKind,
    d: &[f64; 4],
    targets: &MomentTargets,
    support: Option<f64>,
) -> Option<(f64, [f64; 4])> {
    let (_, ints) = shifted_integrals(kind, d, support).ok()?;
    let moments: [f64; 4] = std::array::from_fn(|i| ints[i + 1] / ints[0]);
    let scales = targets.scales();
    let cost = (0..4)
        .map(|i| targets.weights[i] * ((moments[i] - targets.m[i]) / scales[i]).powi(2))
        .sum::<f64>();
    cost.is_finite().then_some((cost, moments))
}

/// Simplex starting points in standardized coordinates `eₙ = dₙσⁿ` (the
/// constrained slot before softplus). The first is the Gaussian-equivalent
/// `(0, 1/2, 0, ε)`; the rest are seeded perturbations of it.
pub fn default_starts(opts: &PdfFitOptions) -> Vec<Vec<f64>> {
    let eps = 1e-2;
    let base: Vec<f64> = if opts.quartic {
        vec![0.0, 0.5, 0.0, softplus_inv(eps)]
    } else {
        vec![0.0, softplus_inv(0.5), 0.0]
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    (0..opts.starts.max(1))
        .map(|i| {
            if i == 0 {
                return base.clone();
            }
            let mut x = base.clone();
            x[0] += rng.random_range(-0.3..0.3);
            x[2] += rng.random_range(-0.1..0.1);
            if opts.quartic {
                x[1] *= rng.random_range(0.5..1.5);
                x[3] = softplus_inv(10f64.powf(rng.random_range(-3.0..-0.5)));
            } else {
                x[1] = softplus_inv(0.5 * rng.random_range(0.5..1.5));
            }
            x
        })
        .collect()
}

/// Minimizes `Σ lᵢ (Jᵢ/sᵢ)²` over d₁…d₄ with multi-start simplex searches
/// from [`default_starts`].
pub fn fit_pdf(targets: &MomentTargets, kind: PdfKind, opts: &PdfFitOptions) -> Result<PdfFit> {
    fit_pdf_from_starts(targets, kind, opts, &default_starts(opts))
}

/// As [`fit_pdf`] with explicit starts. The winner is the lowest residual,
/// ties broken by parameter vector, so the order of `starts` does not matter.
pub fn fit_pdf_from_starts(
    targets: &MomentTargets,
    kind: PdfKind,
    opts: &PdfFitOptions,
    starts: &[Vec<f64>],
) -> Result<PdfFit> {
    let t = MomentTargets::new(targets.m, targets.weights)?;
    let sigma = t.m[1].sqrt();
    let dim = if opts.quartic { 4 } else { 3 };
    if starts.is_empty() || starts.iter().any(|x| x.len() != dim) {
        return Err(Error::InvalidInput(format!(
            "need at least one start of length {dim}"
        )));
    }
    if kind == PdfKind::Type2 {
        let sc = t.scales();
        if t.m[0].abs() > 1e-3 * sc[0] || t.m[2].abs() > 1e-3 * sc[2] {
            log::warn!(
                "type2 densities are even; odd targets m1 = {:e}, m3 = {:e} cannot be matched",
                t.m[0],
                t.m[2]
            );
        }
    }
    let simplex = SimplexOptions {
        initial_step: 0.1,
        f_tol: 1e-22,
        x_tol: 1e-12,
        max_evals: opts.max_evals,
        restarts: 3,
    };
    let runs: Vec<(usize, Vec<f64>, f64, usize)> = starts
        .par_iter()
        .enumerate()
        .map(|(i, x0)| {
            let f = |th: &[f64]| {
                objective(kind, &decode(th, sigma, opts.quartic), &t, opts.support)
                    .map_or(f64::INFINITY, |(c, _)| c)
            };
            let r = nelder_mead(f, x0, &simplex);
            (i, r.x, r.f, r.evals)
        })
        .collect();

    // order-independent choice: lowest cost, ties by parameter vector
    let best = runs
        .into_iter()
        .filter(|r| r.2.is_finite())
        .min_by(|a, b| {
            a.2.total_cmp(&b.2).then_with(|| {
                a.1.iter()
                    .zip(&b.1)
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
        })
        .ok_or_else(|| {
            Error::Optimizer(format!(
                "{} fit: no start produced a finite residual",
                kind.name()
            ))
        })?;

    let d = decode(&best.1, sigma, opts.quartic);
    let model = PdfModel::new(kind, d, opts.support).map_err(|e| {
        Error::Optimizer(format!(
            "{} fit: best point d = {d:?} failed to normalize: {e}",
            kind.name()
        ))
    })?;
    let (residual, fitted) = objective(kind, &d, &t, opts.support).ok_or_else(|| {
        Error::Optimizer(format!(
            "{} fit: best point d = {d:?} not evaluable",
            kind.name()
        ))
    })?;
    Ok(PdfFit {
        model,
        residual,
        moment_residuals: std::array::from_fn(|i| fitted[i] - t.m[i]),
        fitted_moments: fitted,
        start: best.0,
        evals: best.3,
    })
}
