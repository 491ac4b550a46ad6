//! Wave and roll time series: random-phase superposition, Euler–Maruyama
//! integration of the filter and roll SDEs, and ensemble moment estimates.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arma_fit::ArmaFilter;
use crate::error::{Error, Result};
use crate::moments::MultiIndex;
use crate::ship::{damping_restoring_g, parametric_f, ShipModel};
use crate::spectra::SpectrumSamples;

/// Any state component beyond this magnitude aborts integration.
pub const BLOW_UP_THRESHOLD: f64 = 1e6;

/// Fixed-width samples at a uniform interval, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    dt: f64,
    width: usize,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(dt: f64, width: usize, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidInput(format!(
                "time step must be positive, got {dt}"
            )));
        }
        if width == 0 || values.is_empty() || !values.len().is_multiple_of(width) {
            return Err(Error::InvalidInput(format!(
                "{} values do not form a nonempty series of width {width}",
                values.len()
            )));
        }
        Ok(TimeSeries { dt, width, values })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.values.len() / self.width
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.width..(i + 1) * self.width]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.width)
    }

    pub fn column(&self, j: usize) -> TimeSeries {
        TimeSeries {
            dt: self.dt,
            width: 1,
            values: self.rows().map(|r| r[j]).collect(),
        }
    }

    pub fn duration(&self) -> f64 {
        (self.len() - 1) as f64 * self.dt
    }

    pub fn mean(&self, j: usize) -> f64 {
        self.rows().map(|r| r[j]).sum::<f64>() / self.len() as f64
    }

    pub fn variance(&self, j: usize) -> f64 {
        let m = self.mean(j);
        self.rows().map(|r| (r[j] - m).powi(2)).sum::<f64>() / self.len() as f64
    }

    /// CSV with a `t` column followed by `names`.
    pub fn write_csv(&self, path: &Path, names: &[&str]) -> Result<()> {
        if names.len() != self.width {
            return Err(Error::InvalidInput(format!(
                "{} column names for a series of width {}",
                names.len(),
                self.width
            )));
        }
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "t,{}", names.join(",")).map_err(io)?;
        for (i, row) in self.rows().enumerate() {
            write!(w, "{}", i as f64 * self.dt).map_err(io)?;
            for v in row {
                write!(w, ",{v}").map_err(io)?;
            }
            writeln!(w).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

/// Master seed plus realization index; each stream is an independent ChaCha
/// sequence, so realizations can run in any order on any thread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSpec {
    pub master_seed: u64,
    pub stream: u64,
}

impl RngSpec {
    pub fn new(master_seed: u64, stream: u64) -> Self {
        RngSpec {
            master_seed,
            stream,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Integration length, step and output decimation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepConfig {
    pub duration: f64,
    pub dt: f64,
    /// Keep every n-th integration step.
    pub record_every: usize,
}

impl StepConfig {
    pub fn new(duration: f64, dt: f64, record_every: usize) -> Result<Self> {
        let c = StepConfig {
            duration,
            dt,
            record_every,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.duration > self.dt) {
            return Err(Error::InvalidInput(format!(
                "need duration > dt > 0 (duration {}, dt {})",
                self.duration, self.dt
            )));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidInput(
                "record_every must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn record_dt(&self) -> f64 {
        self.dt * self.record_every as f64
    }
}

/// Random-phase sum `Σ aᵢ cos(ωᵢt + εᵢ)` evaluated by rotating phasors, with
/// an exact resynchronization every few thousand steps.
struct Superposition {
    omega: Vec<f64>,
    amp: Vec<f64>,
    phase: Vec<f64>,
    re: Vec<f64>,
    im: Vec<f64>,
    rot_re: Vec<f64>,
    rot_im: Vec<f64>,
    step: usize,
    h: f64,
}

impl Superposition {
    const RESYNC: usize = 2048;

    fn new(spectrum: &SpectrumSamples, n: usize, h: f64, rng: &mut ChaCha8Rng) -> Result<Self> {
        if n < 8 {
            return Err(Error::InvalidInput(format!(
                "need at least 8 components, got {n}"
            )));
        }
        let lo = spectrum.grid().first();
        let hi = spectrum.grid().last();
        let dw = (hi - lo) / (n - 1) as f64;
        let omega: Vec<f64> = (0..n).map(|i| lo + i as f64 * dw).collect();
        let amp: Vec<f64> = omega
            .iter()
            .map(|&w| (2.0 * spectrum.interpolate(w) * dw).sqrt())
            .collect();
        let phase: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        let mut s = Superposition {
            rot_re: omega.iter().map(|w| (w * h).cos()).collect(),
            rot_im: omega.iter().map(|w| (w * h).sin()).collect(),
            re: vec![0.0; n],
            im: vec![0.0; n],
            omega,
            amp,
            phase,
            step: 0,
            h,
        };
        s.resync();
        Ok(s)
    }

    fn resync(&mut self) {
        let t = self.step as f64 * self.h;
        for i in 0..self.omega.len() {
            let arg = self.omega[i] * t + self.phase[i];
            self.re[i] = self.amp[i] * arg.cos();
            self.im[i] = self.amp[i] * arg.sin();
        }
    }

    fn value(&self) -> f64 {
        self.re.iter().sum()
    }

    fn advance(&mut self) {
        self.step += 1;
        if self.step.is_multiple_of(Self::RESYNC) {
            self.resync();
            return;
        }
        for i in 0..self.re.len() {
            let (r, m) = (self.re[i], self.im[i]);
            self.re[i] = r * self.rot_re[i] - m * self.rot_im[i];
            self.im[i] = r * self.rot_im[i] + m * self.rot_re[i];
        }
    }
}

/// Wave elevation `ζ(t) = Σ √(2S(ωᵢ)Δω) cos(ωᵢt + εᵢ)` on `n_components`
/// equally spaced frequencies spanning the spectrum's grid, with phases
/// uniform on [0, 2π).
pub fn superpose_series(
    spectrum: &SpectrumSamples,
    duration: f64,
    dt: f64,
    rng: RngSpec,
    n_components: usize,
) -> Result<TimeSeries> {
    let cfg = StepConfig::new(duration, dt, 1)?;
    let mut r = rng.rng();
    let mut sp = Superposition::new(spectrum, n_components, dt, &mut r)?;
    let mut values = Vec::with_capacity(cfg.steps() + 1);
    for _ in 0..=cfg.steps() {
        values.push(sp.value());
        sp.advance();
    }
    TimeSeries::new(dt, 1, values)
}

fn check_state(state: &[f64], t: f64) -> Result<()> {
    if state.iter().all(|v| v.abs() <= BLOW_UP_THRESHOLD) {
        Ok(())
    } else {
        Err(Error::BlowUp { time: t })
    }
}

/// Euler–Maruyama path of the six filter states; `visit` sees every recorded
/// row.
pub fn simulate_filter_with(
    filter: &ArmaFilter,
    cfg: &StepConfig,
    rng: RngSpec,
    mut visit: impl FnMut(f64, &[f64]),
) -> Result<()> {
    filter.ensure_stable()?;
    cfg.validate()?;
    let mut r = rng.rng();
    let a = filter.alpha;
    let gain = filter.noise_gain() * cfg.dt.sqrt();
    let dt = cfg.dt;
    let mut x = [0.0f64; 6];
    visit(0.0, &x);
    for n in 1..=cfg.steps() {
        let dw: f64 = r.sample(StandardNormal);
        let x1 = x[0];
        let next = [
            x[0] + (x[1] - a[0] * x1) * dt,
            x[1] + (x[2] - a[1] * x1) * dt,
            x[2] + (x[3] - a[2] * x1) * dt + gain * dw,
            x[3] + (x[4] - a[3] * x1) * dt,
            x[4] + (x[5] - a[4] * x1) * dt,
            x[5] - a[5] * x1 * dt,
        ];
        x = next;
        if n % cfg.record_every == 0 {
            check_state(&x, n as f64 * dt)?;
            visit(n as f64 * dt, &x);
        }
    }
    Ok(())
}

/// Six-wide filter path; column 0 is the effective wave elevation.
pub fn simulate_filter(filter: &ArmaFilter, cfg: &StepConfig, rng: RngSpec) -> Result<TimeSeries> {
    let mut values = Vec::new();
    simulate_filter_with(filter, cfg, rng, |_, x| values.extend_from_slice(x))?;
    TimeSeries::new(cfg.record_dt(), 6, values)
}

#[inline]
fn roll_accel(ship: &ShipModel, x1: f64, x2: f64, x3: f64) -> f64 {
    -damping_restoring_g(x1, x2, ship) - parametric_f(x3, ship) * x1
}

/// Euler–Maruyama path of the 8-state roll/filter system
/// `(φ, φ̇, x₁…x₆)`; `visit` sees every recorded row.
pub fn simulate_roll_with(
    ship: &ShipModel,
    filter: &ArmaFilter,
    cfg: &StepConfig,
    rng: RngSpec,
    init: [f64; 8],
    mut visit: impl FnMut(f64, &[f64]),
) -> Result<()> {
    filter.ensure_stable()?;
    cfg.validate()?;
    let mut r = rng.rng();
    let a = filter.alpha;
    let gain = filter.noise_gain() * cfg.dt.sqrt();
    let dt = cfg.dt;
    let mut x = init;
    check_state(&x, 0.0)?;
    visit(0.0, &x);
    for n in 1..=cfg.steps() {
        let dw: f64 = r.sample(StandardNormal);
        let w = x[2];
        let next = [
            x[0] + x[1] * dt,
            x[1] + roll_accel(ship, x[0], x[1], w) * dt,
            x[2] + (x[3] - a[0] * w) * dt,
            x[3] + (x[4] - a[1] * w) * dt,
            x[4] + (x[5] - a[2] * w) * dt + gain * dw,
            x[5] + (x[6] - a[3] * w) * dt,
            x[6] + (x[7] - a[4] * w) * dt,
            x[7] - a[5] * w * dt,
        ];
        x = next;
        check_state(&x, n as f64 * dt)?;
        if n % cfg.record_every == 0 {
            visit(n as f64 * dt, &x);
        }
    }
    Ok(())
}

pub fn simulate_roll(
    ship: &ShipModel,
    filter: &ArmaFilter,
    cfg: &StepConfig,
    rng: RngSpec,
    init: [f64; 8],
) -> Result<TimeSeries> {
    let mut values = Vec::new();
    simulate_roll_with(ship, filter, cfg, rng, init, |_, x| {
        values.extend_from_slice(x)
    })?;
    TimeSeries::new(cfg.record_dt(), 8, values)
}

/// Roll driven by a superposed wave `ζ(t)`, integrated with classical RK4.
/// Rows are `(φ, φ̇, ζ)`.
pub fn simulate_roll_superposed_with(
    ship: &ShipModel,
    spectrum: &SpectrumSamples,
    n_components: usize,
    cfg: &StepConfig,
    rng: RngSpec,
    init: [f64; 2],
    mut visit: impl FnMut(f64, &[f64]),
) -> Result<()> {
    cfg.validate()?;
    let mut r = rng.rng();
    let dt = cfg.dt;
    // the wave is needed at half steps
    let mut wave = Superposition::new(spectrum, n_components, 0.5 * dt, &mut r)?;
    let f = |x: [f64; 2], z: f64| [x[1], roll_accel(ship, x[0], x[1], z)];
    let mut x = init;
    let mut z0 = wave.value();
    visit(0.0, &[x[0], x[1], z0]);
    for n in 1..=cfg.steps() {
        wave.advance();
        let zh = wave.value();
        wave.advance();
        let z1 = wave.value();
        let k1 = f(x, z0);
        let k2 = f([x[0] + 0.5 * dt * k1[0], x[1] + 0.5 * dt * k1[1]], zh);
        let k3 = f([x[0] + 0.5 * dt * k2[0], x[1] + 0.5 * dt * k2[1]], zh);
        let k4 = f([x[0] + dt * k3[0], x[1] + dt * k3[1]], z1);
        for i in 0..2 {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        z0 = z1;
        let t = n as f64 * dt;
        check_state(&x, t)?;
        if n % cfg.record_every == 0 {
            visit(t, &[x[0], x[1], z1]);
        }
    }
    Ok(())
}

/// Estimate and standard error of one moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

/// Time-and-ensemble moment averages after a discarded transient.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub moments: BTreeMap<MultiIndex, MomentEstimate>,
    pub realizations: usize,
    /// Discarded transient, s.
    pub discard: f64,
}

impl EnsembleStats {
    pub fn get(&self, index: &MultiIndex) -> Option<MomentEstimate> {
        self.moments.get(index).copied()
    }

    /// Builds statistics from per-realization time averages (`per_run[r][i]`
    /// is the average of `indices[i]` in realization `r`). The standard error
    /// is the between-realization standard deviation over `√R`, and zero for
    /// a single realization.
    pub fn from_run_means(
        indices: &[MultiIndex],
        per_run: &[Vec<f64>],
        discard: f64,
    ) -> Result<Self> {
        let r = per_run.len();
        if r == 0 {
            return Err(Error::InvalidInput(
                "ensemble needs at least one realization".into(),
            ));
        }
        let mut moments = BTreeMap::new();
        for (i, idx) in indices.iter().enumerate() {
            let mean = per_run.iter().map(|m| m[i]).sum::<f64>() / r as f64;
            let stderr = if r > 1 {
                let var =
                    per_run.iter().map(|m| (m[i] - mean).powi(2)).sum::<f64>() / (r - 1) as f64;
                (var / r as f64).sqrt()
            } else {
                0.0
            };
            moments.insert(
                idx.clone(),
                MomentEstimate {
                    estimate: mean,
                    stderr,
                },
            );
        }
        Ok(EnsembleStats {
            moments,
            realizations: r,
            discard,
        })
    }

    /// `{"realizations":..,"discard":..,"moments":{"m_20000000":{"estimate":..,"stderr":..}}}`
    pub fn to_json(&self) -> serde_json::Value {
        let moments: serde_json::Map<String, serde_json::Value> = self
            .moments
            .iter()
            .map(|(k, v)| {
                (
                    k.key(),
                    serde_json::json!({"estimate": v.estimate, "stderr": v.stderr}),
                )
            })
            .collect();
        serde_json::json!({
            "realizations": self.realizations,
            "discard": self.discard,
            "moments": moments,
        })
    }
}

/// Running time average of a set of monomials, skipping samples before
/// `discard`.
#[derive(Debug, Clone)]
pub struct MomentAccumulator {
    indices: Vec<MultiIndex>,
    discard: f64,
    sums: Vec<f64>,
    count: usize,
}

impl MomentAccumulator {
    pub fn new(indices: &[MultiIndex], discard: f64) -> Self {
        MomentAccumulator {
            indices: indices.to_vec(),
            discard,
            sums: vec![0.0; indices.len()],
            count: 0,
        }
    }

    pub fn push(&mut self, t: f64, state: &[f64]) {
        if t < self.discard {
            return;
        }
        for (s, idx) in self.sums.iter_mut().zip(&self.indices) {
            *s += monomial(state, idx);
        }
        self.count += 1;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn means(&self) -> Result<Vec<f64>> {
        if self.count == 0 {
            return Err(Error::InvalidInput(format!(
                "no samples after the {} s discard window",
                self.discard
            )));
        }
        Ok(self.sums.iter().map(|s| s / self.count as f64).collect())
    }
}

/// `Π state[i]^idx[i]`.
pub fn monomial(state: &[f64], idx: &MultiIndex) -> f64 {
    idx.exponents()
        .iter()
        .zip(state)
        .filter(|(e, _)| **e > 0)
        .map(|(e, x)| x.powi(*e as i32))
        .product()
}

/// Moment statistics of stored runs.
pub fn ensemble_stats(
    runs: &[TimeSeries],
    indices: &[MultiIndex],
    discard: f64,
) -> Result<EnsembleStats> {
    let first = runs
        .first()
        .ok_or_else(|| Error::InvalidInput("ensemble needs at least one run".into()))?;
    for r in runs {
        if r.dt() != first.dt() || r.width() != first.width() {
            return Err(Error::InvalidInput("runs must share dt and width".into()));
        }
        if discard >= r.duration() {
            return Err(Error::InvalidInput(format!(
                "discard window {discard} s is not shorter than the {} s run",
                r.duration()
            )));
        }
    }
    if let Some(bad) = indices.iter().find(|i| i.width() != first.width()) {
        return Err(Error::InvalidInput(format!(
            "index {bad} does not match series width {}",
            first.width()
        )));
    }
    let per_run = runs
        .iter()
        .map(|r| {
            let mut acc = MomentAccumulator::new(indices, discard);
            for (i, row) in r.rows().enumerate() {
                acc.push(i as f64 * r.dt(), row);
            }
            acc.means()
        })
        .collect::<Result<Vec<_>>>()?;
    EnsembleStats::from_run_means(indices, &per_run, discard)
}

/// Applies `f` to every stream `0..realizations` in parallel and returns
/// the results in stream order.
pub fn map_realizations<T, F>(realizations: usize, master_seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(RngSpec) -> Result<T> + Sync,
{
    if realizations == 0 {
        return Err(Error::InvalidInput(
            "ensemble needs at least one realization".into(),
        ));
    }
    (0..realizations as u64)
        .into_par_iter()
        .map(|stream| f(RngSpec::new(master_seed, stream)))
        .collect()
}

/// Runs `realizations` independent streams in parallel and averages the
/// monomials in `indices` without storing paths. `simulate` receives the
/// stream's [`RngSpec`] and a sample sink. Results are folded in stream
/// order, so they are identical for any thread count.
pub fn run_ensemble<S>(
    realizations: usize,
    master_seed: u64,
    indices: &[MultiIndex],
    discard: f64,
    simulate: S,
) -> Result<EnsembleStats>
where
    S: Fn(RngSpec, &mut dyn FnMut(f64, &[f64])) -> Result<()> + Sync,
{
    let per_run = map_realizations(realizations, master_seed, |rng| {
        let mut acc = MomentAccumulator::new(indices, discard);
        simulate(rng, &mut |t, x| acc.push(t, x))?;
        acc.means()
    })?;
    EnsembleStats::from_run_means(indices, &per_run, discard)
}

/// Fixed-range histogram with integer counts, so merged results do not
/// depend on merge order.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    lo: f64,
    hi: f64,
    counts: Vec<u64>,
    below: u64,
    above: u64,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if !(lo < hi) || bins == 0 || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidInput(format!(
                "bad histogram range [{lo}, {hi}] with {bins} bins"
            )));
        }
        Ok(Histogram {
            lo,
            hi,
            counts: vec![0; bins],
            below: 0,
            above: 0,
        })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn push(&mut self, x: f64) {
        let (lo, hi) = self.range();
        if x < lo {
            self.below += 1;
        } else if x >= hi {
            self.above += 1;
        } else {
            let n = self.counts.len();
            let i = (((x - lo) / (hi - lo)) * n as f64) as usize;
            self.counts[i.min(n - 1)] += 1;
        }
    }

    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if self.lo != other.lo || self.hi != other.hi || self.counts.len() != other.counts.len() {
            return Err(Error::InvalidInput("histograms have different bins".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.below += other.below;
        self.above += other.above;
        Ok(())
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Samples outside the range, (below, above).
    pub fn outside(&self) -> (u64, u64) {
        (self.below, self.above)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.below + self.above
    }

    pub fn bin_width(&self) -> f64 {
        let (lo, hi) = self.range();
        (hi - lo) / self.counts.len() as f64
    }

    pub fn centers(&self) -> Vec<f64> {
        let (lo, _) = self.range();
        let w = self.bin_width();
        (0..self.counts.len())
            .map(|i| lo + (i as f64 + 0.5) * w)
            .collect()
    }

    /// Counts over total samples (including those outside) per unit width.
    pub fn density(&self) -> Vec<f64> {
        let scale = 1.0 / (self.total().max(1) as f64 * self.bin_width());
        self.counts.iter().map(|c| *c as f64 * scale).collect()
    }

    /// CSV `x,p,count` at bin centres.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("x,p,count\n");
        for ((x, p), c) in self.centers().iter().zip(self.density()).zip(&self.counts) {
            out.push_str(&format!("{x:.6e},{p:.10e},{c}\n"));
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::FrequencyGrid;

    #[test]
    fn histogram_counts_and_density() {
        let mut h = Histogram::new(-1.0, 1.0, 4).unwrap();
        for x in [-2.0, -0.9, -0.1, 0.0, 0.2, 0.99, 1.0, 5.0] {
            h.push(x);
        }
        assert_eq!(h.counts(), &[1, 1, 2, 1]);
        assert_eq!(h.outside(), (1, 2));
        let mut g = h.clone();
        g.merge(&h).unwrap();
        assert_eq!(g.counts(), &[2, 2, 4, 2]);
        let mass: f64 = h.density().iter().sum::<f64>() * h.bin_width();
        assert!((mass - 5.0 / 8.0).abs() < 1e-15);
        assert!(g.merge(&Histogram::new(-1.0, 1.0, 5).unwrap()).is_err());
    }

    #[test]
    fn zero_spectrum_gives_zero_series() {
        let grid = FrequencyGrid::uniform(0.2, 2.0, 64).unwrap();
        let s = SpectrumSamples::new(grid, vec![0.0; 64]).unwrap();
        let ts = superpose_series(&s, 100.0, 0.1, RngSpec::new(1, 0), 16).unwrap();
        assert!(ts.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_bin_is_a_sinusoid() {
        let n = 9;
        let grid = FrequencyGrid::uniform(0.2, 1.0, n).unwrap();
        let mut d = vec![0.0; n];
        d[4] = 2.0; // ω = 0.6, Δω = 0.1
        let s = SpectrumSamples::new(grid, d).unwrap();
        let ts = superpose_series(&s, 5000.0, 0.05, RngSpec::new(3, 0), n).unwrap();
        let amp = (2.0f64 * 2.0 * 0.1).sqrt();
        let peak = ts.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((peak - amp).abs() < 1e-3 * amp, "{peak} vs {amp}");
        assert!((ts.variance(0) - amp * amp / 2.0).abs() < 1e-3);
    }

    #[test]
    fn zero_gain_filter_stays_at_rest() {
        let f = ArmaFilter {
            k: 0.0,
            ..ArmaFilter::reference()
        };
        let cfg = StepConfig::new(50.0, 0.01, 10).unwrap();
        let ts = simulate_filter(&f, &cfg, RngSpec::new(0, 0)).unwrap();
        assert!(ts.values().iter().all(|v| *v == 0.0));
        let roll = simulate_roll(
            &ShipModel::c11_like(),
            &f,
            &cfg,
            RngSpec::new(0, 0),
            [0.0; 8],
        )
        .unwrap();
        assert!(roll.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn filter_paths_scale_with_gain() {
        let f = ArmaFilter::reference();
        let g = ArmaFilter { k: 3.0 * f.k, ..f };
        let cfg = StepConfig::new(20.0, 0.01, 7).unwrap();
        let a = simulate_filter(&f, &cfg, RngSpec::new(9, 2)).unwrap();
        let b = simulate_filter(&g, &cfg, RngSpec::new(9, 2)).unwrap();
        let scale = b.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(scale > 0.1);
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((3.0 * x - y).abs() <= 1e-13 * scale);
        }
    }

    #[test]
    fn unstable_filter_rejected() {
        let f = ArmaFilter::new([0.0, 0.0, 0.0, 0.0, 0.0, 1.0], 1.0);
        let cfg = StepConfig::new(1.0, 0.01, 1).unwrap();
        assert!(matches!(
            simulate_filter(&f, &cfg, RngSpec::new(0, 0)),
            Err(Error::UnstableFilter { .. })
        ));
    }

    #[test]
    fn linear_free_decay() {
        let ship = ShipModel {
            beta1: 0.02,
            ..ShipModel::c11_like().linearized()
        };
        let f = ArmaFilter {
            k: 0.0,
            ..ArmaFilter::reference()
        };
        let cfg = StepConfig::new(100.0, 1e-4, 100).unwrap();
        let phi0 = 5f64.to_radians();
        let mut init = [0.0; 8];
        init[0] = phi0;
        let ts = simulate_roll(&ship, &f, &cfg, RngSpec::new(0, 0), init).unwrap();
        // closed form of φ'' + β₁φ' + ω₀²φ = 0
        let (w0, b) = (ship.omega0, ship.beta1);
        let wd = (w0 * w0 - b * b / 4.0).sqrt();
        for (i, row) in ts.rows().enumerate().step_by(50) {
            let t = i as f64 * ts.dt();
            let exact =
                phi0 * (-b * t / 2.0).exp() * ((wd * t).cos() + b / (2.0 * wd) * (wd * t).sin());
            assert!(
                (row[0] - exact).abs() < 2e-3 * phi0,
                "t={t}: {} vs {exact}",
                row[0]
            );
        }
    }

    #[test]
    fn blow_up_is_reported() {
        let ship = ShipModel {
            omega0: 0.25,
            gamma: [-1.0, 0.0, 0.0, 0.0, 0.0],
            beta3: 0.0,
            ..ShipModel::c11_like()
        };
        let f = ArmaFilter {
            k: 0.0,
            ..ArmaFilter::reference()
        };
        let cfg = StepConfig::new(2000.0, 0.01, 100).unwrap();
        let mut init = [0.0; 8];
        init[0] = 0.1;
        assert!(matches!(
            simulate_roll(&ship, &f, &cfg, RngSpec::new(0, 0), init),
            Err(Error::BlowUp { .. })
        ));
    }

    #[test]
    fn constant_series_stats() {
        let ts = TimeSeries::new(1.0, 2, [3.0, 1.0].repeat(10)).unwrap();
        let idx = MultiIndex::from([2, 0]);
        let st = ensemble_stats(&[ts.clone(), ts], std::slice::from_ref(&idx), 2.0).unwrap();
        let e = st.get(&idx).unwrap();
        assert_eq!(e.estimate, 9.0);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn discard_must_leave_samples() {
        let ts = TimeSeries::new(1.0, 1, vec![1.0; 10]).unwrap();
        assert!(ensemble_stats(&[ts], &[MultiIndex::from([1])], 9.0).is_err());
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<f64> = (0..4).map(|_| RngSpec::new(7, 1).rng().random()).collect();
        let b: Vec<f64> = (0..4).map(|_| RngSpec::new(7, 1).rng().random()).collect();
        assert_eq!(a, b);
        let mut r1 = RngSpec::new(7, 1).rng();
        let mut r2 = RngSpec::new(7, 2).rng();
        assert_ne!(r1.random::<u64>(), r2.random::<u64>());
    }
}
