//! Real polynomial helpers: Horner evaluation, expansion from factors, and
//! root finding through companion-matrix eigenvalues.
//!
//! Coefficient vectors are stored highest power first and are monic unless
//! stated otherwise: `[1, c1, ..., cn]` is `xⁿ + c1·xⁿ⁻¹ + ... + cn`.

use nalgebra::linalg::Schur;
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Evaluates `Σ coeffs[i]·x^(i+1)` (no constant term) by Horner's rule.
pub fn horner_no_constant(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| (acc + c) * x)
}

/// Evaluates `Σ coeffs[i]·xⁱ` by Horner's rule.
pub fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn eval_monic(tail: &[f64], z: Complex64) -> (Complex64, Complex64) {
    // value and derivative of z^n + tail[0] z^(n-1) + ... + tail[n-1]
    let mut p = Complex64::new(1.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in tail {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Multiplies monic quadratics `x² + b·x + c` into a monic polynomial, returning
/// the coefficients after the leading 1.
pub fn expand_quadratics(factors: &[(f64, f64)]) -> Vec<f64> {
    let mut poly = vec![1.0];
    for &(b, c) in factors {
        let mut next = vec![0.0; poly.len() + 2];
        for (i, p) in poly.iter().enumerate() {
            next[i] += p;
            next[i + 1] += p * b;
            next[i + 2] += p * c;
        }
        poly = next;
    }
    poly.remove(0);
    poly
}

/// Real coefficients (after the leading 1) of `Π (x − r)`.
pub fn expand_roots(roots: &[Complex64]) -> Vec<f64> {
    let mut poly = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
        for (i, p) in poly.iter().enumerate() {
            next[i] += p;
            next[i + 1] -= p * r;
        }
        poly = next;
    }
    poly.iter().skip(1).map(|c| c.re).collect()
}

/// Roots of the monic polynomial `xⁿ + tail[0]·xⁿ⁻¹ + ... + tail[n−1]`.
///
/// Eigenvalues of the companion matrix, refined by a few Newton steps and
/// made exactly conjugate-symmetric. Sorted by real part, then imaginary part.
/// Symmetric root configurations such as `x⁶ + 1` can stall the unshifted
/// QR sweep; those fall back to Aberth iteration.
pub fn monic_roots(tail: &[f64]) -> Vec<Complex64> {
    let n = tail.len();
    if n == 0 {
        return Vec::new();
    }
    let mut companion = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        companion[(0, j)] = -tail[j];
    }
    for i in 1..n {
        companion[(i, i - 1)] = 1.0;
    }
    let eig: Vec<Complex64> = match Schur::try_new(companion, f64::EPSILON, 500) {
        Some(schur) => schur.complex_eigenvalues().iter().copied().collect(),
        None => aberth(tail),
    };
    let mut roots: Vec<Complex64> = eig.iter().map(|z| polish(tail, *z)).collect();
    symmetrize(&mut roots);
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    roots
}

fn aberth(tail: &[f64]) -> Vec<Complex64> {
    let n = tail.len();
    // Cauchy bound on root moduli
    let radius = 1.0 + tail.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let mut z: Vec<Complex64> = (0..n)
        .map(|i| {
            Complex64::from_polar(
                0.5 * radius,
                2.0 * std::f64::consts::PI * (i as f64 + 0.25) / n as f64,
            )
        })
        .collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..n {
            let (p, dp) = eval_monic(tail, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| (z[i] - z[j]).inv())
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            z[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved <= 1e-15 * radius {
            break;
        }
    }
    z
}

fn polish(tail: &[f64], mut z: Complex64) -> Complex64 {
    for _ in 0..8 {
        let (p, dp) = eval_monic(tail, z);
        if dp.norm() == 0.0 || p.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        let next = z - step;
        // keep the step only if it actually reduces the residual
        if eval_monic(tail, next).0.norm() >= p.norm() {
            break;
        }
        z = next;
    }
    z
}

fn symmetrize(roots: &mut [Complex64]) {
    let n = roots.len();
    let mut used = vec![false; n];
    let scale = roots.iter().map(|r| r.norm()).fold(1.0, f64::max);
    let tol = 1e-7 * scale;
    for i in 0..n {
        if used[i] {
            continue;
        }
        used[i] = true;
        if roots[i].im.abs() <= tol {
            // a lone root with tiny imaginary part is real
            let partner = (0..n)
                .filter(|&j| !used[j])
                .find(|&j| (roots[j] - roots[i].conj()).norm() <= tol && roots[j].im.abs() > 0.0);
            if partner.is_none() {
                roots[i].im = 0.0;
                continue;
            }
        }
        let target = roots[i].conj();
        let best = (0..n).filter(|&j| !used[j]).min_by(|&a, &b| {
            (roots[a] - target)
                .norm()
                .total_cmp(&(roots[b] - target).norm())
        });
        if let Some(j) = best {
            if (roots[j] - target).norm() <= tol.max(1e-6 * roots[i].norm()) {
                used[j] = true;
                let re = 0.5 * (roots[i].re + roots[j].re);
                let im = 0.5 * (roots[i].im.abs() + roots[j].im.abs());
                roots[i] = Complex64::new(re, im.copysign(roots[i].im));
                roots[j] = roots[i].conj();
            }
        }
    }
}

/// Largest `|p(z)|` over the given points, for the monic polynomial with
/// coefficients `tail`.
pub fn max_residual(tail: &[f64], roots: &[Complex64]) -> f64 {
    roots
        .iter()
        .map(|z| eval_monic(tail, *z).0.norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horner_matches_naive() {
        let c = [0.5, -2.0, 3.0, 0.25];
        let x = 1.7f64;
        let naive: f64 = c
            .iter()
            .enumerate()
            .map(|(i, a)| a * x.powi(i as i32 + 1))
            .sum();
        assert!((horner_no_constant(&c, x) - naive).abs() < 1e-12);
        let naive0: f64 = c
            .iter()
            .enumerate()
            .map(|(i, a)| a * x.powi(i as i32))
            .sum();
        assert!((horner(&c, x) - naive0).abs() < 1e-12);
    }

    #[test]
    fn repeated_root() {
        // (x + 1)^6
        let tail = [6.0, 15.0, 20.0, 15.0, 6.0, 1.0];
        let r = monic_roots(&tail);
        assert_eq!(r.len(), 6);
        for z in &r {
            // a sextuple root is only determined to about eps^(1/6)
            assert!((z - Complex64::new(-1.0, 0.0)).norm() < 5e-3, "{z}");
        }
        assert!(max_residual(&tail, &r) < 1e-9 * 20.0);
    }

    #[test]
    fn sixth_roots_of_minus_one() {
        let tail = [0.0, 0.0, 0.0, 0.0, 0.0, 1.0];
        let r = monic_roots(&tail);
        for z in &r {
            assert!((z.powu(6) + 1.0).norm() < 1e-12);
        }
        assert_eq!(r.iter().filter(|z| z.re > 0.0).count(), 2);
    }

    #[test]
    fn quadratic_expansion() {
        // (x² + 2x + 1)(x² + 1) = x⁴ + 2x³ + 2x² + 2x + 1
        assert_eq!(
            expand_quadratics(&[(2.0, 1.0), (0.0, 1.0)]),
            vec![2.0, 2.0, 2.0, 1.0]
        );
    }
}
