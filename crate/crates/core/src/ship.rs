//! Ship restoring, damping and GM-variation polynomials.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::horner_no_constant;

/// Roll model of a ship in longitudinal waves.
///
/// Roll acceleration is `−G(φ, φ̇) − F(ζ)·φ` with
/// `G = β₁φ̇ + β₃φ̇³ + ω₀² Σ γ₂ₙ₋₁ φ²ⁿ⁻¹` and `F = (ω₀²/GM) Σ ρₙ ζⁿ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShipModel {
    /// Metacentric height, m.
    pub gm: f64,
    /// Natural roll frequency, rad/s.
    pub omega0: f64,
    /// Linear damping, 1/s.
    pub beta1: f64,
    /// Cubic damping, s/rad².
    pub beta3: f64,
    /// GZ coefficients of φ, φ³, φ⁵, φ⁷, φ⁹ (multipliers of ω₀²).
    pub gamma: [f64; 5],
    /// ΔGM coefficients of ζ, ζ², …, ζ¹², m/mⁿ.
    pub rho: [f64; 12],
    /// Length between perpendiculars, m.
    pub length: f64,
    #[serde(rename = "fn", default)]
    pub froude: f64,
    /// Wave-amplitude range over which the ΔGM polynomial was fitted, m.
    #[serde(default = "default_zeta_range")]
    pub zeta_range: (f64, f64),
}

fn default_zeta_range() -> (f64, f64) {
    (-4.0, 4.0)
}

impl ShipModel {
    /// Synthetic stand-in for a C11-class post-Panamax containership
    /// (L = 262 m, GM = 1.965 m, T_φ = 25.1 s, β₁ = 3.64e-3, β₃ = 4.25).
    ///
    /// The GZ curve is within 10 % of linear up to 40° and vanishes near 75°.
    /// ΔGM is positive with the trough amidships, grows with |ζ| faster on
    /// the trough side and is monotone on [−4, 4] m. Its overall scale is set
    /// so that the roll SDE driven by the reference filter gives
    /// E[φ²] ≈ 4.6e-2 rad².
    pub fn c11_like() -> Self {
        let mut rho = [0.0; 12];
        rho[0] = 0.63;
        rho[1] = 0.07;
        rho[2] = 0.0056;
        ShipModel {
            gm: 1.965,
            omega0: 2.0 * std::f64::consts::PI / 25.1,
            beta1: 3.64e-3,
            beta3: 4.25,
            gamma: [1.0, -0.05, -0.3, 0.0, 0.0],
            rho,
            length: 262.0,
            froude: 0.0,
            zeta_range: default_zeta_range(),
        }
    }

    /// Linear oscillator with the same GM, ω₀, β₁ and length, no cubic
    /// damping, no GZ nonlinearity and no GM variation.
    pub fn linearized(&self) -> Self {
        ShipModel {
            beta3: 0.0,
            gamma: [1.0, 0.0, 0.0, 0.0, 0.0],
            rho: [0.0; 12],
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, field: &str, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::config(&format!("ship.{field}"), msg))
            }
        };
        check(self.gm > 0.0, "gm", "must be positive")?;
        check(self.omega0 > 0.0, "omega0", "must be positive")?;
        check(self.beta1 >= 0.0, "beta1", "must be non-negative")?;
        check(self.beta3.is_finite(), "beta3", "must be finite")?;
        check(self.length > 0.0, "length", "must be positive")?;
        check(
            self.gamma.iter().all(|g| g.is_finite()),
            "gamma",
            "must be finite",
        )?;
        check(
            self.rho.iter().all(|r| r.is_finite()),
            "rho",
            "must be finite",
        )?;
        check(
            self.zeta_range.0 < self.zeta_range.1,
            "zeta_range",
            "must be an increasing pair",
        )?;
        Ok(())
    }

    pub fn gm_curve(&self) -> GmCurve {
        GmCurve {
            rho: self.rho,
            range: self.zeta_range,
        }
    }

    /// Restoring coefficients of the odd powers φ¹…φ⁹ including ω₀².
    pub(crate) fn restoring_powers(&self) -> [(u8, f64); 5] {
        let w2 = self.omega0 * self.omega0;
        std::array::from_fn(|i| (2 * i as u8 + 1, w2 * self.gamma[i]))
    }

    /// Coefficients of ζ¹…ζ¹² in F, i.e. `ω₀²ρₙ/GM`.
    pub(crate) fn parametric_powers(&self) -> [(u8, f64); 12] {
        let s = self.omega0 * self.omega0 / self.gm;
        std::array::from_fn(|i| (i as u8 + 1, s * self.rho[i]))
    }
}

/// ΔGM as a polynomial in the wave amplitude amidships (positive with the
/// trough amidships).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmCurve {
    pub rho: [f64; 12],
    pub range: (f64, f64),
}

impl GmCurve {
    pub fn new(rho: [f64; 12], range: (f64, f64)) -> Self {
        GmCurve { rho, range }
    }
}

/// Damping plus restoring, `G(x₁, x₂)`, rad/s².
pub fn damping_restoring_g(x1: f64, x2: f64, ship: &ShipModel) -> f64 {
    let x1sq = x1 * x1;
    let odd = ship.gamma.iter().rev().fold(0.0, |acc, g| acc * x1sq + g) * x1;
    ship.beta1 * x2 + ship.beta3 * x2 * x2 * x2 + ship.omega0 * ship.omega0 * odd
}

/// Parametric stiffness `F(x₃)`, 1/s².
pub fn parametric_f(x3: f64, ship: &ShipModel) -> f64 {
    ship.omega0 * ship.omega0 / ship.gm * horner_no_constant(&ship.rho, x3)
}

/// `Σ ρₙ ζⁿ`. Outside the fitted range the amplitude is clamped to the
/// nearest end and a warning is logged.
pub fn delta_gm(zeta: f64, curve: &GmCurve) -> f64 {
    let (lo, hi) = curve.range;
    let z = if zeta < lo || zeta > hi {
        log::warn!("wave amplitude {zeta:.3} m outside the ΔGM fit range [{lo}, {hi}]; clamping");
        zeta.clamp(lo, hi)
    } else {
        zeta
    };
    horner_no_constant(&curve.rho, z)
}

/// Pointwise ΔGM of a scalar wave series.
pub fn gm_series(wave: &crate::sim::TimeSeries, curve: &GmCurve) -> Result<crate::sim::TimeSeries> {
    if wave.width() != 1 {
        return Err(Error::InvalidInput(format!(
            "gm_series needs a scalar wave series, got width {}",
            wave.width()
        )));
    }
    let values = wave.values().iter().map(|z| delta_gm(*z, curve)).collect();
    crate::sim::TimeSeries::new(wave.dt(), 1, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hand_ship() -> ShipModel {
        ShipModel {
            gamma: [1.0, 0.0, 0.0, 0.0, 0.0],
            rho: [0.0; 12],
            omega0: 0.2503,
            ..ShipModel::c11_like()
        }
    }

    #[test]
    fn g_hand_values() {
        let s = hand_ship();
        assert_eq!(damping_restoring_g(0.0, 0.0, &s), 0.0);
        let lin = ShipModel {
            beta3: 0.0,
            ..s.clone()
        };
        assert!((damping_restoring_g(0.0, 0.3, &lin) - 3.64e-3 * 0.3).abs() < 1e-15);
        let g = damping_restoring_g(0.1, 0.2, &s);
        let expect = 3.64e-3 * 0.2 + 4.25 * 0.008 + 0.2503f64.powi(2) * 0.1;
        assert!((g - expect).abs() < 1e-15);
        assert!((g - 0.0410).abs() < 5e-5);
    }

    #[test]
    fn g_is_odd() {
        let s = ShipModel::c11_like();
        for (a, b) in [(0.3, -0.1), (1.2, 0.7), (-0.05, 0.02)] {
            assert_eq!(
                damping_restoring_g(-a, -b, &s),
                -damping_restoring_g(a, b, &s)
            );
        }
    }

    #[test]
    fn f_values() {
        let s = ShipModel::c11_like();
        assert_eq!(parametric_f(0.0, &s), 0.0);
        let mut unit = s.clone();
        unit.rho = [0.0; 12];
        unit.rho[0] = unit.gm / (unit.omega0 * unit.omega0);
        for x in [-1.5, 0.3, 2.0] {
            assert!((parametric_f(x, &unit) - x).abs() < 1e-14);
        }
        // independent power-sum evaluation at x3 = 1
        let naive: f64 = s.rho.iter().sum::<f64>() * s.omega0.powi(2) / s.gm;
        assert!((parametric_f(1.0, &s) - naive).abs() < 1e-15);
    }

    #[test]
    fn delta_gm_values_and_sign() {
        let s = ShipModel::c11_like();
        let c = s.gm_curve();
        assert_eq!(delta_gm(0.0, &c), 0.0);
        let mut lin = [0.0; 12];
        lin[0] = 1.0;
        assert_eq!(delta_gm(0.5, &GmCurve::new(lin, (-4.0, 4.0))), 0.5);
        assert!(delta_gm(1.0, &c) > 0.0);
        assert!(delta_gm(-1.0, &c) < 0.0);
        // monotone over the fitted range
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=800 {
            let z = -4.0 + 0.01 * i as f64;
            let v = delta_gm(z, &c);
            assert!(v > prev);
            prev = v;
        }
        // clamped outside
        assert_eq!(delta_gm(9.0, &c), delta_gm(4.0, &c));
    }

    #[test]
    fn gz_nearly_linear_to_forty_degrees() {
        let s = ShipModel::c11_like();
        let w2 = s.omega0 * s.omega0;
        let phi = 40f64.to_radians();
        let ratio = damping_restoring_g(phi, 0.0, &s) / (w2 * phi);
        assert!(ratio > 0.9 && ratio <= 1.0, "{ratio}");
    }

    #[test]
    fn horner_matches_power_sum() {
        let rho: [f64; 12] = std::array::from_fn(|i| (i as f64 - 5.5) * 90.0);
        let curve = GmCurve::new(rho, (-10.0, 10.0));
        for z in [-1.3, -0.2, 0.7, 1.1] {
            let naive: f64 = rho
                .iter()
                .enumerate()
                .map(|(i, r)| r * f64::powi(z, i as i32 + 1))
                .sum();
            assert!((delta_gm(z, &curve) - naive).abs() <= 1e-12 * naive.abs().max(1.0));
        }
    }
}
