//! Closed moment equations of polynomial Itô SDEs and their integration.
//!
//! For `dX = a(X)dt + b dW` with polynomial drift and additive noise, Itô's
//! formula gives
//!
//! ```text
//! d E[X^C]/dt = Σₖ Cₖ E[X^(C−eₖ) aₖ(X)] + ½ Σᵢⱼ bᵢbⱼ E[∂ᵢ∂ⱼ X^C]
//! ```
//!
//! Every index of order up to the closure order is tracked; moments of
//! higher order on the right are closed by cumulant neglect.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::arma_fit::ArmaFilter;
use crate::error::{Error, Result};
use crate::moments::{ClosureProgram, MultiIndex};
use crate::ship::ShipModel;

/// `dX = a(X)dt + b dW` with polynomial drift and a single additive noise.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialSde {
    dim: usize,
    drift: Vec<Vec<(f64, MultiIndex)>>,
    diffusion: Vec<f64>,
}

impl PolynomialSde {
    /// `drift[k]` lists `(coefficient, exponent)` terms of `aₖ`.
    pub fn new(drift: Vec<Vec<(f64, MultiIndex)>>, diffusion: Vec<f64>) -> Result<Self> {
        let dim = drift.len();
        if dim == 0 || diffusion.len() != dim {
            return Err(Error::InvalidInput(
                "drift and diffusion must have the same nonzero length".into(),
            ));
        }
        if drift.iter().flatten().any(|(_, m)| m.width() != dim) {
            return Err(Error::InvalidInput(format!(
                "drift monomials must have width {dim}"
            )));
        }
        let drift = drift
            .into_iter()
            .map(|terms| terms.into_iter().filter(|(c, _)| *c != 0.0).collect())
            .collect();
        Ok(PolynomialSde {
            dim,
            drift,
            diffusion,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn drift(&self) -> &[Vec<(f64, MultiIndex)>] {
        &self.drift
    }

    pub fn diffusion(&self) -> &[f64] {
        &self.diffusion
    }

    /// The 8-state roll/filter system: `X₁` roll, `X₂` roll rate, `X₃…X₈`
    /// filter states with `X₃` the effective wave.
    pub fn roll(ship: &ShipModel, filter: &ArmaFilter) -> Result<Self> {
        const D: usize = 8;
        let e = |pairs: &[(usize, u8)]| {
            let mut v = vec![0u8; D];
            for &(i, p) in pairs {
                v[i] += p;
            }
            MultiIndex::new(v)
        };
        let mut drift = vec![Vec::new(); D];
        drift[0].push((1.0, e(&[(1, 1)])));
        drift[1].push((-ship.beta1, e(&[(1, 1)])));
        drift[1].push((-ship.beta3, e(&[(1, 3)])));
        for (p, c) in ship.restoring_powers() {
            drift[1].push((-c, e(&[(0, p)])));
        }
        for (p, c) in ship.parametric_powers() {
            drift[1].push((-c, e(&[(2, p), (0, 1)])));
        }
        filter_drift(filter, 2, D, &mut drift);
        let mut diffusion = vec![0.0; D];
        diffusion[4] = filter.noise_gain();
        PolynomialSde::new(drift, diffusion)
    }

    /// The six filter states alone.
    pub fn filter(filter: &ArmaFilter) -> Result<Self> {
        let mut drift = vec![Vec::new(); 6];
        filter_drift(filter, 0, 6, &mut drift);
        let mut diffusion = vec![0.0; 6];
        diffusion[2] = filter.noise_gain();
        PolynomialSde::new(drift, diffusion)
    }

    /// Drift matrix when every drift term is linear.
    pub fn linear_part(&self) -> Result<Vec<Vec<f64>>> {
        let mut a = vec![vec![0.0; self.dim]; self.dim];
        for (k, terms) in self.drift.iter().enumerate() {
            for (c, m) in terms {
                if m.order() != 1 {
                    return Err(Error::InvalidInput(format!(
                        "drift term {m} of state {} is not linear",
                        k + 1
                    )));
                }
                a[k][m.first_nonzero().expect("order 1")] += c;
            }
        }
        Ok(a)
    }
}

fn filter_drift(
    filter: &ArmaFilter,
    offset: usize,
    dim: usize,
    drift: &mut [Vec<(f64, MultiIndex)>],
) {
    for i in 0..6 {
        if i < 5 {
            drift[offset + i].push((1.0, MultiIndex::unit(dim, offset + i + 1)));
        }
        drift[offset + i].push((-filter.alpha[i], MultiIndex::unit(dim, offset)));
    }
}

/// Closed moment ODE system.
#[derive(Debug, Clone)]
pub struct MomentSystem {
    tracked: Vec<MultiIndex>,
    closure_order: u32,
    program: ClosureProgram,
    row_ranges: Vec<(u32, u32)>,
    row_terms: Vec<(f64, u32)>,
    raw_rows: Vec<Vec<(f64, MultiIndex)>>,
}

impl MomentSystem {
    pub fn build(sde: &PolynomialSde, closure_order: u32) -> Result<Self> {
        if closure_order == 0 {
            return Err(Error::InvalidInput(
                "closure order must be at least 1".into(),
            ));
        }
        let d = sde.dim;
        let tracked = MultiIndex::all_up_to(d, closure_order);
        let mut program = ClosureProgram::new(d, closure_order, &tracked)?;
        let mut raw_rows = Vec::with_capacity(tracked.len());
        let mut row_ranges = Vec::with_capacity(tracked.len());
        let mut row_terms = Vec::new();
        for c in &tracked {
            let mut acc: BTreeMap<MultiIndex, f64> = BTreeMap::new();
            for k in 0..d {
                let ck = c.get(k);
                if ck == 0 {
                    continue;
                }
                let base = c.with_delta(k, -1).expect("c_k > 0");
                for (coef, alpha) in &sde.drift[k] {
                    *acc.entry(base.plus(alpha)).or_insert(0.0) += ck as f64 * coef;
                }
            }
            for i in 0..d {
                for j in 0..d {
                    let bb = sde.diffusion[i] * sde.diffusion[j];
                    if bb == 0.0 {
                        continue;
                    }
                    let (ci, cj) = (c.get(i) as f64, c.get(j) as f64);
                    let (factor, target) = if i == j {
                        (ci * (ci - 1.0), c.with_delta(i, -2))
                    } else {
                        (
                            ci * cj,
                            c.with_delta(i, -1).and_then(|t| t.with_delta(j, -1)),
                        )
                    };
                    if let (true, Some(t)) = (factor != 0.0, target) {
                        *acc.entry(t).or_insert(0.0) += 0.5 * bb * factor;
                    }
                }
            }
            let raw: Vec<(f64, MultiIndex)> = acc
                .into_iter()
                .filter(|(_, v)| *v != 0.0)
                .map(|(k, v)| (v, k))
                .collect();
            let start = row_terms.len() as u32;
            for (coef, idx) in &raw {
                row_terms.push((*coef, program.slot_for(idx)?));
            }
            row_ranges.push((start, row_terms.len() as u32));
            raw_rows.push(raw);
        }
        log::debug!(
            "moment system: {} equations, closure order {closure_order}, {} program slots, {} ops",
            tracked.len(),
            program.slot_count(),
            program.op_count()
        );
        Ok(MomentSystem {
            tracked,
            closure_order,
            program,
            row_ranges,
            row_terms,
            raw_rows,
        })
    }

    pub fn tracked(&self) -> &[MultiIndex] {
        &self.tracked
    }

    pub fn len(&self) -> usize {
        self.tracked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracked.is_empty()
    }

    pub fn closure_order(&self) -> u32 {
        self.closure_order
    }

    pub fn position(&self, index: &MultiIndex) -> Option<usize> {
        self.tracked.iter().position(|t| t == index)
    }

    /// Unclosed right-hand side of row `i` as `(coefficient, E[X^index])` terms.
    pub fn row_terms(&self, i: usize) -> &[(f64, MultiIndex)] {
        &self.raw_rows[i]
    }

    /// Human-readable form of row `i`, e.g. `dE[X1]/dt = +1.0000e0 E[X2]`.
    pub fn describe_row(&self, i: usize) -> String {
        let rhs: Vec<String> = self.raw_rows[i]
            .iter()
            .map(|(c, m)| format!("{c:+.4e} {}", m.expectation()))
            .collect();
        let rhs = if rhs.is_empty() {
            "0".to_string()
        } else {
            rhs.join(" ")
        };
        format!("d{}/dt = {rhs}", self.tracked[i].expectation())
    }

    /// Evaluates the right-hand side at `state`.
    pub fn rhs(&self, state: &[f64], out: &mut [f64], scratch: &mut Vec<f64>) {
        self.program.eval_into(state, scratch);
        for (o, &(s, e)) in out.iter_mut().zip(&self.row_ranges) {
            *o = self.row_terms[s as usize..e as usize]
                .iter()
                .map(|(c, slot)| c * scratch[*slot as usize])
                .sum();
        }
    }
}

/// Builds the roll/filter moment system at closure order 2 or 3.
pub fn build_system(
    ship: &ShipModel,
    filter: &ArmaFilter,
    closure_order: u32,
) -> Result<MomentSystem> {
    if !(2..=3).contains(&closure_order) {
        return Err(Error::InvalidInput(format!(
            "closure order must be 2 or 3, got {closure_order}"
        )));
    }
    ship.validate()?;
    filter.ensure_stable()?;
    MomentSystem::build(&PolynomialSde::roll(ship, filter)?, closure_order)
}

/// Recorded rows of an integrated moment system.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTrajectory {
    pub tracked: Vec<MultiIndex>,
    /// Interval between recorded rows, s.
    pub dt: f64,
    rows: Vec<f64>,
}

impl MomentTrajectory {
    pub fn len(&self) -> usize {
        self.rows.len() / self.tracked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.tracked.len();
        &self.rows[i * w..(i + 1) * w]
    }

    pub fn last(&self) -> &[f64] {
        self.row(self.len() - 1)
    }

    pub fn series(&self, index: &MultiIndex) -> Option<Vec<f64>> {
        let j = self.tracked.iter().position(|t| t == index)?;
        Some((0..self.len()).map(|i| self.row(i)[j]).collect())
    }

    /// CSV `t,m_<index>,...`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let io = |e| Error::io(path, e);
        let header: Vec<String> = self.tracked.iter().map(|t| t.key()).collect();
        writeln!(w, "t,{}", header.join(",")).map_err(io)?;
        for i in 0..self.len() {
            write!(w, "{}", i as f64 * self.dt).map_err(io)?;
            for v in self.row(i) {
                write!(w, ",{v}").map_err(io)?;
            }
            writeln!(w).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

/// Classical fixed-step RK4 from `init`, keeping every `record_every`-th step.
pub fn rk4_integrate(
    system: &MomentSystem,
    init: &[f64],
    duration: f64,
    dt: f64,
    record_every: usize,
) -> Result<MomentTrajectory> {
    let n = system.len();
    if init.len() != n {
        return Err(Error::InvalidInput(format!(
            "initial state has {} entries, system has {n}",
            init.len()
        )));
    }
    if !(dt > 0.0) || !(duration >= dt) || record_every == 0 {
        return Err(Error::InvalidInput(format!(
            "need duration >= dt > 0 and record_every >= 1 (duration {duration}, dt {dt})"
        )));
    }
    let steps = (duration / dt).round() as usize;
    let mut rows = Vec::with_capacity((steps / record_every + 1) * n);
    let mut x = init.to_vec();
    rows.extend_from_slice(&x);
    let mut scratch = Vec::new();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
    );
    for step in 1..=steps {
        system.rhs(&x, &mut k1, &mut scratch);
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * dt * k1[i];
        }
        system.rhs(&tmp, &mut k2, &mut scratch);
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * dt * k2[i];
        }
        system.rhs(&tmp, &mut k3, &mut scratch);
        for i in 0..n {
            tmp[i] = x[i] + dt * k3[i];
        }
        system.rhs(&tmp, &mut k4, &mut scratch);
        for i in 0..n {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                time: step as f64 * dt,
            });
        }
        if step % record_every == 0 {
            rows.extend_from_slice(&x);
        }
    }
    Ok(MomentTrajectory {
        tracked: system.tracked.clone(),
        dt: dt * record_every as f64,
        rows,
    })
}

/// Mean and oscillation (max − min) of one moment over the steady window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyValue {
    pub mean: f64,
    pub oscillation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStats {
    pub values: BTreeMap<MultiIndex, SteadyValue>,
    /// Averaging window, s.
    pub window: (f64, f64),
}

impl SteadyStats {
    pub fn mean(&self, index: &MultiIndex) -> Option<f64> {
        self.values.get(index).map(|v| v.mean)
    }

    pub fn oscillation(&self, index: &MultiIndex) -> Option<f64> {
        self.values.get(index).map(|v| v.oscillation)
    }

    /// `{"window":[t0,t1],"moments":{"m_20000000":{"mean":..,"oscillation":..}}}`
    pub fn to_json(&self) -> serde_json::Value {
        let moments: serde_json::Map<String, serde_json::Value> = self
            .values
            .iter()
            .map(|(k, v)| {
                (
                    k.key(),
                    serde_json::json!({"mean": v.mean, "oscillation": v.oscillation}),
                )
            })
            .collect();
        serde_json::json!({"window": [self.window.0, self.window.1], "moments": moments})
    }
}

/// Averages the final `window_fraction` of the trajectory.
pub fn steady_state_stats(traj: &MomentTrajectory, window_fraction: f64) -> Result<SteadyStats> {
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "window fraction must lie in (0, 1], got {window_fraction}"
        )));
    }
    let n = traj.len();
    let count = ((n as f64) * window_fraction).floor() as usize;
    if count == 0 {
        return Err(Error::InvalidInput(
            "steady-state window holds no samples".into(),
        ));
    }
    let first = n - count;
    let mut values = BTreeMap::new();
    for (j, idx) in traj.tracked.iter().enumerate() {
        let (mut sum, mut lo, mut hi) = (0.0, f64::INFINITY, f64::NEG_INFINITY);
        for i in first..n {
            let v = traj.row(i)[j];
            sum += v;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        values.insert(
            idx.clone(),
            SteadyValue {
                mean: sum / count as f64,
                oscillation: hi - lo,
            },
        );
    }
    Ok(SteadyStats {
        values,
        window: (first as f64 * traj.dt, (n - 1) as f64 * traj.dt),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx8(pairs: &[(usize, u8)]) -> MultiIndex {
        let mut v = vec![0u8; 8];
        for &(i, p) in pairs {
            v[i] += p;
        }
        MultiIndex::new(v)
    }

    #[test]
    fn system_sizes() {
        let s = build_system(&ShipModel::c11_like(), &ArmaFilter::reference(), 2).unwrap();
        assert_eq!(s.len(), 44);
    }

    #[test]
    fn printed_rows() {
        let f = ArmaFilter::reference();
        let s = build_system(&ShipModel::c11_like(), &f, 2).unwrap();
        let i = s.position(&idx8(&[(0, 1)])).unwrap();
        assert_eq!(s.row_terms(i), &[(1.0, idx8(&[(1, 1)]))]);
        let i = s.position(&idx8(&[(7, 2)])).unwrap();
        assert_eq!(
            s.row_terms(i),
            &[(-2.0 * f.alpha[5], idx8(&[(2, 1), (7, 1)]))]
        );
        let i = s.position(&idx8(&[(4, 2)])).unwrap();
        let constant: Vec<_> = s
            .row_terms(i)
            .iter()
            .filter(|(_, m)| m.order() == 0)
            .collect();
        assert_eq!(constant.len(), 1);
        assert!((constant[0].0 - std::f64::consts::PI * f.k * f.k).abs() < 1e-15);
    }

    #[test]
    fn zero_state_is_an_equilibrium_without_noise() {
        let f = ArmaFilter {
            k: 0.0,
            ..ArmaFilter::reference()
        };
        let s = build_system(&ShipModel::c11_like().linearized(), &f, 2).unwrap();
        let traj = rk4_integrate(&s, &vec![0.0; s.len()], 10.0, 0.01, 100).unwrap();
        assert!((0..traj.len()).all(|i| traj.row(i).iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn steady_stats_of_constant() {
        let t = MomentTrajectory {
            tracked: vec![MultiIndex::from([1])],
            dt: 1.0,
            rows: vec![2.5; 10],
        };
        let s = steady_state_stats(&t, 0.5).unwrap();
        assert_eq!(s.mean(&MultiIndex::from([1])), Some(2.5));
        assert_eq!(s.oscillation(&MultiIndex::from([1])), Some(0.0));
        assert_eq!(s.window, (5.0, 9.0));
        assert!(steady_state_stats(&t, 0.01).is_err());
    }

    #[test]
    fn scalar_ou_process() {
        // dX = −θX dt + σ dW: E[X²] → σ²/(2θ)
        let sde = PolynomialSde::new(vec![vec![(-0.5, MultiIndex::from([1]))]], vec![0.8]).unwrap();
        let s = MomentSystem::build(&sde, 2).unwrap();
        let traj = rk4_integrate(&s, &[0.0, 0.0], 60.0, 0.01, 10).unwrap();
        assert!((traj.last()[1] - 0.64).abs() < 1e-9);
    }
}
