use nalgebra::{DMatrix, DVector};
use parroll::arma_fit::ArmaFilter;
use parroll::moment_odes::{build_system, rk4_integrate, MomentSystem, PolynomialSde};
use parroll::moments::MultiIndex;
use parroll::ship::ShipModel;

/// Stationary covariance from `AΣ + ΣAᵀ + bbᵀ = 0`, solved by fixed-point
/// iteration on the discretized map `Σ ← ΦΣΦᵀ + Q` with a matrix exponential
/// computed by scaling and squaring.
fn stationary_covariance(a: &[Vec<f64>], b: &[f64]) -> DMatrix<f64> {
    let n = a.len();
    let am = DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let h = 0.5;
    let expm = |m: DMatrix<f64>| {
        let s = 10;
        let x = m / 2f64.powi(s);
        let mut e = DMatrix::identity(n, n);
        let mut term = DMatrix::identity(n, n);
        for k in 1..20 {
            term = &term * &x / k as f64;
            e += &term;
        }
        for _ in 0..s {
            e = &e * &e;
        }
        e
    };
    let phi = expm(am.clone() * h);
    // Q = ∫₀ʰ e^{As} bbᵀ e^{Aᵀs} ds by composite Simpson
    let bb = DVector::from_column_slice(b) * DVector::from_column_slice(b).transpose();
    let steps = 64;
    let mut q = DMatrix::zeros(n, n);
    for k in 0..=steps {
        let s = h * k as f64 / steps as f64;
        let e = expm(am.clone() * s);
        let w = if k == 0 || k == steps {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        q += (&e * &bb * e.transpose()) * (w * h / (3.0 * steps as f64));
    }
    let mut sigma = DMatrix::zeros(n, n);
    for _ in 0..200_000 {
        let next = &phi * &sigma * phi.transpose() + &q;
        let done = (&next - &sigma).amax() <= 1e-15 * next.amax();
        sigma = next;
        if done {
            break;
        }
    }
    sigma
}

fn steady(system: &MomentSystem, duration: f64, dt: f64) -> Vec<f64> {
    rk4_integrate(system, &vec![0.0; system.len()], duration, dt, 1000)
        .unwrap()
        .last()
        .to_vec()
}

/// Linear roll driven through a term `−c·X₃` in the roll acceleration.
fn forced_linear_roll(c: f64) -> PolynomialSde {
    let base = PolynomialSde::roll(
        &ShipModel::c11_like().linearized(),
        &ArmaFilter::reference(),
    )
    .unwrap();
    let mut drift = base.drift().to_vec();
    drift[1].push((-c, MultiIndex::unit(8, 2)));
    PolynomialSde::new(drift, base.diffusion().to_vec()).unwrap()
}

#[test]
fn linear_system_matches_lyapunov() {
    let sde = forced_linear_roll(0.01);
    let system = MomentSystem::build(&sde, 2).unwrap();
    assert_eq!(system.len(), 44);
    let x = steady(&system, 8000.0, 0.02);
    let cov = stationary_covariance(&sde.linear_part().unwrap(), sde.diffusion());
    let scale = cov.amax();
    for (k, idx) in system.tracked().iter().enumerate() {
        let e = idx.exponents();
        let want = match idx.order() {
            1 => 0.0,
            _ => {
                let i = e.iter().position(|&v| v > 0).unwrap();
                let j = e.iter().rposition(|&v| v > 0).unwrap();
                cov[(i, j)]
            }
        };
        assert!(
            (x[k] - want).abs() < 1e-6 * scale,
            "{idx}: {} vs {want}",
            x[k]
        );
    }
    // roll variance is genuinely excited
    assert!(cov[(0, 0)] > 1e-4 * scale);
}

#[test]
fn unforced_linear_roll_leaves_the_filter_untouched() {
    let ship = ShipModel::c11_like().linearized();
    let filter = ArmaFilter::reference();
    let system = build_system(&ship, &filter, 2).unwrap();
    let x = steady(&system, 8000.0, 0.02);
    let fsde = PolynomialSde::filter(&filter).unwrap();
    let cov = stationary_covariance(&fsde.linear_part().unwrap(), fsde.diffusion());
    let x3 = system
        .position(&MultiIndex::new(vec![0, 0, 2, 0, 0, 0, 0, 0]))
        .unwrap();
    let x1 = system
        .position(&MultiIndex::new(vec![2, 0, 0, 0, 0, 0, 0, 0]))
        .unwrap();
    assert!(
        (x[x3] / cov[(0, 0)] - 1.0).abs() < 1e-6,
        "{} vs {}",
        x[x3],
        cov[(0, 0)]
    );
    assert!((x[x3] / 0.843 - 1.0).abs() < 0.02);
    assert!(x[x1].abs() < 1e-12);
}

#[test]
fn third_order_closure_is_exact_on_a_linear_system() {
    let sde = forced_linear_roll(0.01);
    let s2 = MomentSystem::build(&sde, 2).unwrap();
    let s3 = MomentSystem::build(&sde, 3).unwrap();
    assert_eq!(s3.len(), 164);
    let (x2, x3) = (steady(&s2, 3000.0, 0.02), steady(&s3, 3000.0, 0.02));
    let scale = x2.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (k, idx) in s2.tracked().iter().enumerate() {
        let j = s3.position(idx).unwrap();
        assert!((x2[k] - x3[j]).abs() < 1e-9 * scale, "{idx}");
    }
    // odd third moments stay at zero
    for (j, idx) in s3.tracked().iter().enumerate() {
        if idx.order() == 3 {
            assert!(x3[j].abs() < 1e-12 * scale, "{idx}: {}", x3[j]);
        }
    }
}

#[test]
fn halving_the_step_barely_moves_the_filter_moments() {
    let system =
        MomentSystem::build(&PolynomialSde::filter(&ArmaFilter::reference()).unwrap(), 2).unwrap();
    let init = vec![0.01; system.len()];
    let a = rk4_integrate(&system, &init, 400.0, 0.05, 1).unwrap();
    let b = rk4_integrate(&system, &init, 400.0, 0.025, 1).unwrap();
    for (u, v) in a.last().iter().zip(b.last()) {
        assert!((u - v).abs() <= 1e-6 * v.abs().max(1e-3), "{u} vs {v}");
    }
}

#[test]
fn structural_rows() {
    let filter = ArmaFilter::reference();
    let system = build_system(&ShipModel::c11_like(), &filter, 2).unwrap();
    let m = |v: [u8; 8]| MultiIndex::new(v.to_vec());
    let r1 = system.row_terms(system.position(&m([1, 0, 0, 0, 0, 0, 0, 0])).unwrap());
    assert_eq!(r1, &[(1.0, m([0, 1, 0, 0, 0, 0, 0, 0]))]);
    let r8 = system.row_terms(system.position(&m([0, 0, 0, 0, 0, 0, 0, 2])).unwrap());
    assert_eq!(r8, &[(-2.0 * filter.alpha[5], m([0, 0, 1, 0, 0, 0, 0, 1]))]);
}
