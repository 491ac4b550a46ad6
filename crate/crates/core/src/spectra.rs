//! Wave spectra on angular-frequency grids.
//!
//! All spectra are one-sided in angular frequency (m²·s), so the zeroth
//! spectral moment `∫ S(ω) dω` over `(0, ∞)` is the process variance.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::arma_fit::ArmaFilter;
use crate::error::{Error, Result};

/// Default gravitational acceleration, m/s².
pub const GRAVITY: f64 = 9.81;

/// Half-width of the band around `|u| = π` in which the effective-wave
/// transfer function switches to its Taylor expansion.
pub const GRIM_SINGULAR_BAND: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeaState {
    /// Mean wave period T01, s.
    pub t01: f64,
    /// Significant wave height H1/3, m.
    pub h13: f64,
    /// Wave heading, rad (π is head seas).
    pub chi: f64,
    /// Froude number.
    #[serde(rename = "fn", default)]
    pub froude: f64,
}

impl SeaState {
    pub fn new(t01: f64, h13: f64, chi: f64) -> Result<Self> {
        let sea = SeaState {
            t01,
            h13,
            chi,
            froude: 0.0,
        };
        sea.validate()?;
        Ok(sea)
    }

    /// Head seas at zero speed.
    pub fn head_seas(t01: f64, h13: f64) -> Result<Self> {
        Self::new(t01, h13, PI)
    }

    /// The reference sea state used throughout the examples:
    /// T01 = 9.99 s, H1/3 = 5 m, head seas.
    pub fn reference() -> Self {
        SeaState {
            t01: 9.99,
            h13: 5.0,
            chi: PI,
            froude: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t01 > 0.0 && self.t01.is_finite()) {
            return Err(Error::config("sea.t01", "mean wave period must be > 0"));
        }
        if !(self.h13 > 0.0 && self.h13.is_finite()) {
            return Err(Error::config(
                "sea.h13",
                "significant wave height must be > 0",
            ));
        }
        if !(0.0..2.0 * PI).contains(&self.chi) {
            return Err(Error::config("sea.chi", "heading must lie in [0, 2π)"));
        }
        Ok(())
    }
}

/// Strictly increasing list of positive angular frequencies, rad/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct FrequencyGrid {
    omegas: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(omegas: Vec<f64>) -> Result<Self> {
        if omegas.is_empty() {
            return Err(Error::InvalidInput("frequency grid is empty".into()));
        }
        if omegas.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidInput(
                "frequency grid entries must be finite and > 0".into(),
            ));
        }
        if omegas.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::InvalidInput(
                "frequency grid must be strictly increasing".into(),
            ));
        }
        Ok(FrequencyGrid { omegas })
    }

    /// `n` points spaced uniformly on `[lo, hi]`, endpoints included.
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 || !(hi > lo) {
            return Err(Error::InvalidInput(format!(
                "uniform grid needs n >= 2 and hi > lo (got n={n}, [{lo}, {hi}])"
            )));
        }
        let step = (hi - lo) / (n - 1) as f64;
        Self::new((0..n).map(|i| lo + step * i as f64).collect())
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.omegas[0]
    }

    pub fn last(&self) -> f64 {
        self.omegas[self.omegas.len() - 1]
    }

    /// Sub-grid of points inside `[lo, hi]`.
    pub fn band(&self, lo: f64, hi: f64) -> Result<Self> {
        Self::new(
            self.omegas
                .iter()
                .copied()
                .filter(|w| (lo..=hi).contains(w))
                .collect(),
        )
    }
}

impl Default for FrequencyGrid {
    /// 512 points on `[0.05, 3.0]` rad/s.
    fn default() -> Self {
        FrequencyGrid::uniform(0.05, 3.0, 512).expect("static grid")
    }
}

impl TryFrom<Vec<f64>> for FrequencyGrid {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        FrequencyGrid::new(v)
    }
}

impl From<FrequencyGrid> for Vec<f64> {
    fn from(g: FrequencyGrid) -> Self {
        g.omegas
    }
}

/// A spectral density sampled on a [`FrequencyGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSamples {
    grid: FrequencyGrid,
    density: Vec<f64>,
}

impl SpectrumSamples {
    pub fn new(grid: FrequencyGrid, density: Vec<f64>) -> Result<Self> {
        if density.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "density has {} samples for a grid of {}",
                density.len(),
                grid.len()
            )));
        }
        if density.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::InvalidInput(
                "spectral densities must be finite and >= 0".into(),
            ));
        }
        Ok(SpectrumSamples { grid, density })
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: FrequencyGrid, f: impl Fn(f64) -> Result<f64>) -> Result<Self> {
        let density = grid.omegas().iter().map(|&w| f(w)).collect::<Result<_>>()?;
        Self::new(grid, density)
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn omegas(&self) -> &[f64] {
        self.grid.omegas()
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn is_all_zero(&self) -> bool {
        self.density.iter().all(|s| *s == 0.0)
    }

    pub fn max_density(&self) -> f64 {
        self.density.iter().copied().fold(0.0, f64::max)
    }

    /// Frequency of the largest sample.
    pub fn peak_omega(&self) -> f64 {
        let (i, _) = self
            .density
            .iter()
            .enumerate()
            .fold(
                (0, f64::MIN),
                |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc },
            );
        self.grid.omegas[i]
    }

    /// Linear interpolation; zero outside the grid.
    pub fn interpolate(&self, omega: f64) -> f64 {
        let w = self.grid.omegas();
        if omega < w[0] || omega > w[w.len() - 1] {
            return 0.0;
        }
        let i = w.partition_point(|&x| x < omega);
        if i == 0 {
            return self.density[0];
        }
        if w[i] == omega {
            return self.density[i];
        }
        let t = (omega - w[i - 1]) / (w[i] - w[i - 1]);
        self.density[i - 1] * (1.0 - t) + self.density[i] * t
    }

    /// Restriction to `[lo, hi]`.
    pub fn band(&self, lo: f64, hi: f64) -> Result<Self> {
        let (w, s): (Vec<f64>, Vec<f64>) = self
            .grid
            .omegas()
            .iter()
            .zip(&self.density)
            .filter(|(w, _)| (lo..=hi).contains(*w))
            .map(|(w, s)| (*w, *s))
            .unzip();
        Self::new(FrequencyGrid::new(w)?, s)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.grid.clone(),
            self.density.iter().map(|s| s * factor).collect(),
        )
    }

    /// CSV with header `omega,density`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut buf = String::from("omega,density\n");
        for (w, s) in self.grid.omegas().iter().zip(&self.density) {
            buf.push_str(&format!("{w},{s}\n"));
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(buf.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// ITTC two-parameter spectrum.
pub fn ittc_density(omega: f64, sea: &SeaState) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!(
            "ITTC spectrum needs omega > 0 (got {omega})"
        )));
    }
    let t4 = sea.t01.powi(4);
    let w4 = omega.powi(4);
    Ok(173.0 * sea.h13 * sea.h13 / (t4 * w4 * omega) * (-691.0 / (t4 * w4)).exp())
}

/// Real part of the effective-wave transfer function. The imaginary part is
/// identically zero.
///
/// With `u = ω²L/(2g)·cosχ` this is `2u·sin(u)/(π² − u²)`, which has a
/// removable singularity at `u = ±π` where it equals 1.
pub fn grim_transfer(omega: f64, chi: f64, length: f64, g: f64) -> f64 {
    let u = omega * omega * length / (2.0 * g) * chi.cos();
    grim_shape(u)
}

pub(crate) fn grim_shape(u: f64) -> f64 {
    let a = u.abs();
    let delta = a - PI;
    if delta.abs() < GRIM_SINGULAR_BAND {
        // f is even in u; around |u| = π + δ:
        // f ≈ 1 + δ/(2π) − δ²·(1/(4π²) + 1/6)
        1.0 + delta / (2.0 * PI) - delta * delta * (1.0 / (4.0 * PI * PI) + 1.0 / 6.0)
    } else {
        2.0 * u * u.sin() / (PI * PI - u * u)
    }
}

/// Effective-wave spectrum `|H(ω, χ)|²·S_w(ω)`.
pub fn effective_density(omega: f64, sea: &SeaState, length: f64, g: f64) -> Result<f64> {
    if !(length > 0.0) {
        return Err(Error::Domain(format!(
            "ship length must be > 0 (got {length})"
        )));
    }
    let h = grim_transfer(omega, sea.chi, length, g);
    Ok(h * h * ittc_density(omega, sea)?)
}

/// Output spectrum of the 6th-order ARMA filter:
/// `k²ω⁶ / [(−ω⁶+α₂ω⁴−α₄ω²+α₆)² + (α₁ω⁵−α₃ω³+α₅ω)²]`.
pub fn arma_density(omega: f64, filter: &ArmaFilter) -> Result<f64> {
    let a = &filter.alpha;
    let w2 = omega * omega;
    let re = ((-w2 + a[1]) * w2 - a[3]) * w2 + a[5];
    let im = omega * ((a[0] * w2 - a[2]) * w2 + a[4]);
    let den = re * re + im * im;
    let num = filter.k * filter.k * w2 * w2 * w2;
    if den == 0.0 {
        if num == 0.0 && omega == 0.0 && a[5] != 0.0 {
            return Ok(0.0);
        }
        return Err(Error::Domain(format!(
            "ARMA spectrum denominator vanishes at omega = {omega}"
        )));
    }
    Ok(num / den)
}

/// `∫ ωⁿ S(ω) dω` by the trapezoid rule.
pub fn spectral_moment(samples: &SpectrumSamples, n: u32) -> Result<f64> {
    let w = samples.omegas();
    if w.is_empty() {
        return Err(Error::InvalidInput("empty spectrum".into()));
    }
    let f: Vec<f64> = w
        .iter()
        .zip(samples.density())
        .map(|(w, s)| w.powi(n as i32) * s)
        .collect();
    Ok(w.windows(2)
        .zip(f.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum())
}

pub fn ittc_spectrum(grid: &FrequencyGrid, sea: &SeaState) -> Result<SpectrumSamples> {
    SpectrumSamples::from_fn(grid.clone(), |w| ittc_density(w, sea))
}

pub fn effective_spectrum(
    grid: &FrequencyGrid,
    sea: &SeaState,
    length: f64,
    g: f64,
) -> Result<SpectrumSamples> {
    SpectrumSamples::from_fn(grid.clone(), |w| effective_density(w, sea, length, g))
}

pub fn arma_spectrum(grid: &FrequencyGrid, filter: &ArmaFilter) -> Result<SpectrumSamples> {
    SpectrumSamples::from_fn(grid.clone(), |w| arma_density(w, filter))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = 0.5 * (f(a) + f(b));
        for i in 1..n {
            s += f(a + h * i as f64);
        }
        s * h
    }

    #[test]
    fn ittc_hand_value() {
        let s = ittc_density(0.6, &SeaState::reference()).unwrap();
        assert!((s - 3.2695).abs() < 1e-3, "{s}");
    }

    #[test]
    fn ittc_limits_and_domain() {
        let sea = SeaState::reference();
        assert!(ittc_density(100.0, &sea).unwrap() < 1e-8);
        assert!(ittc_density(0.01, &sea).unwrap() == 0.0);
        assert!(ittc_density(0.0, &sea).is_err());
        assert!(ittc_density(-1.0, &sea).is_err());
    }

    #[test]
    fn ittc_zeroth_moment_matches_wave_height() {
        let sea = SeaState::reference();
        let m0 = trapezoid(|w| ittc_density(w, &sea).unwrap(), 0.1, 3.0, 200_000);
        assert!((m0 / 1.5625 - 1.0).abs() < 0.01, "{m0}");
        let grid = FrequencyGrid::default();
        let m0_grid = spectral_moment(&ittc_spectrum(&grid, &sea).unwrap(), 0).unwrap();
        assert!((m0_grid / 1.5625 - 1.0).abs() < 0.01, "{m0_grid}");
    }

    #[test]
    fn grim_zero_and_beam_seas() {
        assert_eq!(grim_transfer(0.0, PI, 262.0, GRAVITY), 0.0);
        for w in [0.1, 0.5, 1.3] {
            assert!(grim_transfer(w, PI / 2.0, 262.0, GRAVITY).abs() < 1e-15);
        }
    }

    #[test]
    fn grim_removable_singularity() {
        assert_eq!(grim_shape(PI), 1.0);
        assert_eq!(grim_shape(-PI), 1.0);
        for u in [PI - 1e-6, PI + 1e-6, -PI + 1e-6, -PI - 1e-6] {
            assert!((grim_shape(u) - 1.0).abs() < 1e-6, "{u}");
        }
        // both branches agree where they meet
        for u in [PI - 1.5e-4, PI + 1.5e-4, PI - 0.99e-4] {
            let direct = 2.0 * u * u.sin() / (PI * PI - u * u);
            assert!((grim_shape(u) - direct).abs() < 1e-9);
        }
        // ω at which u = π for L = 262, head seas
        let w = (2.0 * PI * GRAVITY / 262.0).sqrt();
        assert!((grim_transfer(w, PI, 262.0, GRAVITY) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn effective_density_hand_value() {
        let sea = SeaState::reference();
        let h = grim_transfer(0.6, PI, 262.0, GRAVITY);
        let s = effective_density(0.6, &sea, 262.0, GRAVITY).unwrap();
        assert!((s - h * h * 3.2695).abs() < 2e-3);
        let beam = SeaState::new(9.99, 5.0, PI / 2.0).unwrap();
        assert!(effective_density(0.6, &beam, 262.0, GRAVITY).unwrap() < 1e-30);
    }

    #[test]
    fn effective_variance_near_reference() {
        let sea = SeaState::reference();
        let v = trapezoid(
            |w| effective_density(w, &sea, 262.0, GRAVITY).unwrap(),
            0.2,
            2.0,
            100_000,
        );
        assert!((v / 0.786 - 1.0).abs() < 0.10, "{v}");
    }

    #[test]
    fn arma_density_hand_value_and_zero() {
        let f = ArmaFilter::reference();
        assert_eq!(arma_density(0.0, &f).unwrap(), 0.0);
        // hand evaluation at ω = 0.5
        let (w, a, k) = (0.5f64, f.alpha, f.k);
        let re = -w.powi(6) + a[1] * w.powi(4) - a[3] * w * w + a[5];
        let im = a[0] * w.powi(5) - a[2] * w.powi(3) + a[4] * w;
        let expect = k * k * w.powi(6) / (re * re + im * im);
        assert!((arma_density(0.5, &f).unwrap() / expect - 1.0).abs() < 1e-13);
        assert!((expect - 4.7746).abs() < 1e-3);
        let peak = arma_spectrum(&FrequencyGrid::default(), &f)
            .unwrap()
            .peak_omega();
        assert!((0.45..=0.6).contains(&peak), "{peak}");
    }

    #[test]
    fn spectral_moment_basics() {
        let g = FrequencyGrid::uniform(1.0, 2.0, 11).unwrap();
        let ones = SpectrumSamples::new(g.clone(), vec![1.0; 11]).unwrap();
        assert!((spectral_moment(&ones, 0).unwrap() - 1.0).abs() < 1e-14);
        let zeros = SpectrumSamples::new(g, vec![0.0; 11]).unwrap();
        assert_eq!(spectral_moment(&zeros, 3).unwrap(), 0.0);
        assert!(FrequencyGrid::new(vec![]).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(FrequencyGrid::new(vec![1.0, 1.0]).is_err());
        assert!(FrequencyGrid::new(vec![0.0, 1.0]).is_err());
        assert_eq!(FrequencyGrid::default().len(), 512);
        let s = SpectrumSamples::new(
            FrequencyGrid::uniform(1.0, 2.0, 3).unwrap(),
            vec![0.0, 2.0, 4.0],
        )
        .unwrap();
        assert_eq!(s.interpolate(1.25), 1.0);
        assert_eq!(s.interpolate(2.5), 0.0);
    }

    proptest! {
        #[test]
        fn spectra_nonnegative(t01 in 4.0f64..16.0, h13 in 0.5f64..12.0, chi in 0.0f64..std::f64::consts::TAU,
                               w in 0.05f64..3.0, len in 50.0f64..400.0) {
            let sea = SeaState::new(t01, h13, chi).unwrap();
            let sw = ittc_density(w, &sea).unwrap();
            let se = effective_density(w, &sea, len, GRAVITY).unwrap();
            prop_assert!(sw >= 0.0);
            prop_assert!(se >= 0.0);
            // |H| never exceeds its global supremum (attained near |u| ≈ 2.0)
            let sup = (0..20000).map(|i| grim_shape(i as f64 * 1e-3).abs()).fold(0.0, f64::max);
            prop_assert!(se <= sup * sup * sw * (1.0 + 1e-12));
        }

        #[test]
        fn arma_density_even(w in 0.01f64..3.0, scale in 0.5f64..2.0) {
            let mut f = ArmaFilter::reference();
            f.k *= scale;
            let pos = arma_density(w, &f).unwrap();
            let neg = arma_density(-w, &f).unwrap();
            prop_assert!((pos - neg).abs() <= 1e-14 * pos.max(1e-300));
            prop_assert!(pos >= 0.0);
        }
    }
}
