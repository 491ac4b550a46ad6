//! Command implementations behind the `parroll` binary.
//!
//! Every command writes into the configured output directory and finishes
//! with `manifest.json`, which lists each emitted file with its size and
//! SHA-256. Data files depend only on the config and seed.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::arma_fit::{fit_arma, ArmaFilter, FitOptions};
use crate::config::{RunConfig, TargetSource};
use crate::error::{Error, Result};
use crate::moment_odes::{build_system, rk4_integrate, steady_state_stats, SteadyStats};
use crate::moments::{closure_polynomial, MultiIndex};
use crate::pdf_fit::{fit_pdf, pdf_density, targets_from_moments, MomentTargets, PdfFitOptions};
use crate::periodogram::periodogram;
use crate::ship::{delta_gm, GmCurve};
use crate::sim::{
    map_realizations, simulate_roll_superposed_with, simulate_roll_with, EnsembleStats, Histogram,
    MomentAccumulator, StepConfig, TimeSeries,
};
use crate::spectra::{arma_spectrum, effective_spectrum, ittc_spectrum, SpectrumSamples, GRAVITY};
use crate::validation;

/// Offset mixed into the seed of superposition runs so their streams differ
/// from the SDE streams.
const SUPERPOSITION_SEED_OFFSET: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    FitFilter,
    Simulate,
    Moments,
    FitPdf,
    ExportClosures,
    Validate,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Spectrum,
        Command::FitFilter,
        Command::Simulate,
        Command::Moments,
        Command::FitPdf,
        Command::ExportClosures,
        Command::Validate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::FitFilter => "fit-filter",
            Command::Simulate => "simulate",
            Command::Moments => "moments",
            Command::FitPdf => "fit-pdf",
            Command::ExportClosures => "export-closures",
            Command::Validate => "validate",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub wall_time_s: f64,
    pub files: Vec<FileEntry>,
}

/// What a command produced. `failed_checks` is only non-zero for `validate`.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub manifest: RunManifest,
    pub failed_checks: usize,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Tracks every file a command writes.
struct Emitter {
    dir: PathBuf,
    files: Vec<String>,
}

impl Emitter {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Emitter {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    fn json(&mut self, name: &str, value: &serde_json::Value) -> Result<()> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    fn finish(self, command: Command, cfg: &RunConfig, started: Instant) -> Result<RunManifest> {
        let mut files = Vec::new();
        for name in &self.files {
            let path = self.dir.join(name);
            let data = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
            files.push(FileEntry {
                path: name.clone(),
                bytes: data.len() as u64,
                sha256: hex(&Sha256::digest(&data)),
            });
        }
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.name().into(),
            config_sha256: hex(&Sha256::digest(cfg.to_json()?.as_bytes())),
            seed: cfg.run.seed,
            wall_time_s: started.elapsed().as_secs_f64(),
            files,
        };
        let path = self.dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(manifest)
    }
}

/// Runs `command` on a pool of `threads` workers (the global pool when
/// `None`) and writes into `cfg.outputs.directory`.
pub fn run(command: Command, cfg: &RunConfig, threads: Option<usize>) -> Result<Outcome> {
    cfg.validate()?;
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
            pool.install(|| dispatch(command, cfg))
        }
        None => dispatch(command, cfg),
    }
}

fn dispatch(command: Command, cfg: &RunConfig) -> Result<Outcome> {
    let started = Instant::now();
    let mut em = Emitter::new(&cfg.outputs.directory)?;
    let mut failed_checks = 0;
    match command {
        Command::Spectrum => cmd_spectrum(cfg, &mut em)?,
        Command::FitFilter => cmd_fit_filter(cfg, &mut em)?,
        Command::Simulate => cmd_simulate(cfg, &mut em)?,
        Command::Moments => cmd_moments(cfg, &mut em)?,
        Command::FitPdf => cmd_fit_pdf(cfg, &mut em)?,
        Command::ExportClosures => cmd_export_closures(cfg, &mut em)?,
        Command::Validate => failed_checks = cmd_validate(cfg, &mut em)?,
    }
    Ok(Outcome {
        manifest: em.finish(command, cfg, started)?,
        failed_checks,
    })
}

/// `PARROLL_THREADS` as a worker cap, if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var("PARROLL_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
}

fn effective(cfg: &RunConfig) -> Result<SpectrumSamples> {
    effective_spectrum(&cfg.run.grid.build()?, &cfg.sea, cfg.ship.length, GRAVITY)
}

/// The configured filter, or one fitted to the effective-wave spectrum.
pub fn resolve_filter(cfg: &RunConfig) -> Result<ArmaFilter> {
    if let Some(f) = cfg.filter {
        return Ok(f);
    }
    let report = fit_arma(&effective(cfg)?, &fit_options(cfg))?;
    log::info!(
        "no filter configured; fitted one with residual {:.4}",
        report.residual
    );
    Ok(report.filter)
}

fn fit_options(cfg: &RunConfig) -> FitOptions {
    FitOptions {
        seed: cfg.run.seed,
        ..FitOptions::default()
    }
}

fn cmd_spectrum(cfg: &RunConfig, em: &mut Emitter) -> Result<()> {
    let grid = cfg.run.grid.build()?;
    ittc_spectrum(&grid, &cfg.sea)?.write_csv(&em.path("spectrum_ittc.csv"))?;
    effective(cfg)?.write_csv(&em.path("spectrum_effective.csv"))?;
    if let Some(f) = &cfg.filter {
        arma_spectrum(&grid, f)?.write_csv(&em.path("spectrum_arma.csv"))?;
    }
    Ok(())
}

fn cmd_fit_filter(cfg: &RunConfig, em: &mut Emitter) -> Result<()> {
    let target = effective(cfg)?;
    let report = fit_arma(&target, &fit_options(cfg))?;
    em.json("fit_filter.json", &report.to_json())?;
    let fitted = arma_spectrum(target.grid(), &report.filter)?;
    let mut out = String::from("omega,target,fitted\n");
    for ((w, t), f) in target
        .omegas()
        .iter()
        .zip(target.density())
        .zip(fitted.density())
    {
        out.push_str(&format!("{w},{t},{f}\n"));
    }
    let path = em.path("fit_overlay.csv");
    std::fs::write(&path, out).map_err(|e| Error::io(&path, e))
}

/// Moments recorded by the SDE ensemble: everything up to order two plus
/// the third and fourth power of roll.
pub fn sde_indices() -> Vec<MultiIndex> {
    let mut v = MultiIndex::all_up_to(8, 2);
    for p in [3u8, 4] {
        let mut e = vec![0u8; 8];
        e[0] = p;
        v.push(MultiIndex::new(e));
    }
    v
}

fn superposition_indices() -> Vec<MultiIndex> {
    let mut v = MultiIndex::all_up_to(3, 2);
    v.push(MultiIndex::new(vec![3, 0, 0]));
    v.push(MultiIndex::new(vec![4, 0, 0]));
    v
}

/// Aggregated output of one ensemble.
pub struct EnsembleRun {
    pub stats: EnsembleStats,
    pub roll_histogram: Histogram,
    pub gm_histogram: Histogram,
    /// Full paths of the first `series_to_write` realizations.
    pub series: Vec<TimeSeries>,
    /// Samples whose wave amplitude fell outside the ΔGM fit range.
    pub clamped: u64,
}

struct RunPart {
    means: Vec<f64>,
    roll: Histogram,
    gm: Histogram,
    series: Option<TimeSeries>,
    clamped: u64,
}

fn gm_range(curve: &GmCurve) -> (f64, f64) {
    let (lo, hi) = curve.range;
    let (mut a, mut b) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..=800 {
        let v = delta_gm(lo + (hi - lo) * i as f64 / 800.0, curve);
        a = a.min(v);
        b = b.max(v);
    }
    let pad = 1e-9 * (b - a).max(1e-12);
    (a - pad, b + pad)
}

fn gm_histogram(cfg: &RunConfig, curve: &GmCurve) -> Result<Histogram> {
    let (lo, hi) = gm_range(curve);
    Histogram::new(lo, hi, cfg.run.histogram_bins)
}

fn collect(parts: Vec<RunPart>, indices: &[MultiIndex], discard: f64) -> Result<EnsembleRun> {
    let means: Vec<Vec<f64>> = parts.iter().map(|p| p.means.clone()).collect();
    let stats = EnsembleStats::from_run_means(indices, &means, discard)?;
    let mut iter = parts.into_iter();
    let first = iter.next().expect("at least one realization");
    let (mut roll, mut gm, mut clamped) = (first.roll, first.gm, first.clamped);
    let mut series: Vec<TimeSeries> = first.series.into_iter().collect();
    for p in iter {
        roll.merge(&p.roll)?;
        gm.merge(&p.gm)?;
        clamped += p.clamped;
        series.extend(p.series);
    }
    if clamped > 0 {
        log::warn!("{clamped} wave samples outside the ΔGM fit range were clamped");
    }
    Ok(EnsembleRun {
        stats,
        roll_histogram: roll,
        gm_histogram: gm,
        series,
        clamped,
    })
}

/// Euler–Maruyama ensemble of the 8-state roll/filter SDE.
pub fn run_sde_ensemble(cfg: &RunConfig, filter: &ArmaFilter) -> Result<EnsembleRun> {
    let r = &cfg.run;
    let step = StepConfig::new(r.duration, r.dt, cfg.record_every())?;
    let indices = sde_indices();
    let curve = cfg.ship.gm_curve();
    let (zlo, zhi) = curve.range;
    let mut init = [0.0; 8];
    init[0] = r.initial_roll_deg.to_radians();
    let support = r.pdf.support;
    let parts = map_realizations(r.realizations, r.seed, |rng| {
        let mut acc = MomentAccumulator::new(&indices, r.discard);
        let mut roll = Histogram::new(-support, support, r.histogram_bins)?;
        let mut gm = gm_histogram(cfg, &curve)?;
        let keep = (rng.stream as usize) < r.series_to_write;
        let mut values = Vec::new();
        let mut clamped = 0;
        simulate_roll_with(&cfg.ship, filter, &step, rng, init, |t, x| {
            acc.push(t, x);
            if t >= r.discard {
                roll.push(x[0]);
                let z = x[2].clamp(zlo, zhi);
                clamped += u64::from(z != x[2]);
                gm.push(delta_gm(z, &curve));
            }
            if keep {
                values.extend_from_slice(x);
            }
        })?;
        Ok(RunPart {
            means: acc.means()?,
            roll,
            gm,
            series: if keep {
                Some(TimeSeries::new(step.record_dt(), 8, values)?)
            } else {
                None
            },
            clamped,
        })
    })?;
    collect(parts, &indices, r.discard)
}

/// Roll driven by random-phase superposition of the effective wave,
/// integrated with RK4 at `record_dt`. Rows are `(φ, φ̇, ζ)`.
pub fn run_superposition_ensemble(cfg: &RunConfig) -> Result<EnsembleRun> {
    let r = &cfg.run;
    let spectrum = effective(cfg)?;
    let step = StepConfig::new(r.duration, r.record_dt, 1)?;
    let indices = superposition_indices();
    let curve = cfg.ship.gm_curve();
    let (zlo, zhi) = curve.range;
    let init = [r.initial_roll_deg.to_radians(), 0.0];
    let support = r.pdf.support;
    let seed = r.seed ^ SUPERPOSITION_SEED_OFFSET;
    let parts = map_realizations(r.superposition_realizations, seed, |rng| {
        let mut acc = MomentAccumulator::new(&indices, r.discard);
        let mut roll = Histogram::new(-support, support, r.histogram_bins)?;
        let mut gm = gm_histogram(cfg, &curve)?;
        let keep = (rng.stream as usize) < r.series_to_write;
        let mut values = Vec::new();
        let mut clamped = 0;
        simulate_roll_superposed_with(
            &cfg.ship,
            &spectrum,
            r.components,
            &step,
            rng,
            init,
            |t, x| {
                acc.push(t, x);
                if t >= r.discard {
                    roll.push(x[0]);
                    let z = x[2].clamp(zlo, zhi);
                    clamped += u64::from(z != x[2]);
                    gm.push(delta_gm(z, &curve));
                }
                if keep {
                    values.extend_from_slice(x);
                }
            },
        )?;
        Ok(RunPart {
            means: acc.means()?,
            roll,
            gm,
            series: if keep {
                Some(TimeSeries::new(step.record_dt(), 3, values)?)
            } else {
                None
            },
            clamped,
        })
    })?;
    collect(parts, &indices, r.discard)
}

/// The part of `series` at or after `t0`.
fn after(series: &TimeSeries, t0: f64) -> Result<TimeSeries> {
    let first = ((t0 / series.dt()).ceil() as usize).min(series.len());
    let w = series.width();
    TimeSeries::new(series.dt(), w, series.values()[first * w..].to_vec())
}

fn emit_ensemble(
    em: &mut Emitter,
    run: &EnsembleRun,
    tag: &str,
    names: &[&str],
    wave_col: usize,
    discard: f64,
) -> Result<()> {
    em.json(&format!("ensemble_{tag}.json"), &run.stats.to_json())?;
    run.roll_histogram
        .write_csv(&em.path(&format!("histogram_x1_{tag}.csv")))?;
    run.gm_histogram
        .write_csv(&em.path(&format!("histogram_gm_{tag}.csv")))?;
    for (i, s) in run.series.iter().enumerate() {
        s.write_csv(&em.path(&format!("series_{tag}_{i}.csv")), names)?;
    }
    if let Some(s) = run.series.first() {
        let steady = after(s, discard)?;
        periodogram(&steady, 0, None)?.write_csv(&em.path(&format!("periodogram_x1_{tag}.csv")))?;
        periodogram(&steady, wave_col, None)?
            .write_csv(&em.path(&format!("periodogram_wave_{tag}.csv")))?;
    }
    Ok(())
}

fn cmd_simulate(cfg: &RunConfig, em: &mut Emitter) -> Result<()> {
    let filter = resolve_filter(cfg)?;
    let sde = run_sde_ensemble(cfg, &filter)?;
    let names = ["X1", "X2", "X3", "X4", "X5", "X6", "X7", "X8"];
    emit_ensemble(em, &sde, "sde", &names, 2, cfg.run.discard)?;
    let sup = run_superposition_ensemble(cfg)?;
    emit_ensemble(
        em,
        &sup,
        "superposition",
        &["phi", "phidot", "zeta"],
        2,
        cfg.run.discard,
    )?;
    Ok(())
}

/// Integrates the moment system at `closure_order` from the configured
/// uniform initial value.
pub fn steady_moments(
    cfg: &RunConfig,
    filter: &ArmaFilter,
    closure_order: u32,
) -> Result<(crate::moment_odes::MomentTrajectory, SteadyStats)> {
    let m = &cfg.run.moments;
    let system = build_system(&cfg.ship, filter, closure_order)?;
    let init = vec![m.initial_value; system.len()];
    let traj = rk4_integrate(&system, &init, m.duration, m.dt, m.record_every)?;
    let stats = steady_state_stats(&traj, m.window_fraction)?;
    Ok((traj, stats))
}

fn cmd_moments(cfg: &RunConfig, em: &mut Emitter) -> Result<()> {
    let filter = resolve_filter(cfg)?;
    let p = cfg.run.closure_order;
    let (traj, stats) = steady_moments(cfg, &filter, p)?;
    traj.write_csv(&em.path(&format!("moments_p{p}.csv")))?;
    em.json(&format!("steady_p{p}.json"), &stats.to_json())
}

fn roll_index(power: u8) -> MultiIndex {
    let mut e = vec![0u8; 8];
    e[0] = power;
    MultiIndex::new(e)
}

fn cmd_fit_pdf(cfg: &RunConfig, em: &mut Emitter) -> Result<()> {
    let filter = resolve_filter(cfg)?;
    let pdf = &cfg.run.pdf;
    let sde = run_sde_ensemble(cfg, &filter)?;
    let targets = match pdf.targets_from {
        TargetSource::Moments => {
            let (_, stats) = steady_moments(cfg, &filter, cfg.run.closure_order)?;
            let m1 = stats.mean(&roll_index(1)).expect("tracked");
            let m2 = stats.mean(&roll_index(2)).expect("tracked");
            targets_from_moments(m1, m2)?
        }
        TargetSource::Sde => {
            let m: [f64; 4] = std::array::from_fn(|i| {
                sde.stats
                    .get(&roll_index(i as u8 + 1))
                    .expect("recorded")
                    .estimate
            });
            MomentTargets::new(m, [1.0; 4])?
        }
        TargetSource::File => {
            let path = pdf.targets_file.as_ref().expect("validated");
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let t: MomentTargets = serde_json::from_str(&text)
                .map_err(|e| Error::config("run.pdf.targets_file", e.to_string()))?;
            MomentTargets::new(t.m, t.weights)?
        }
    };
    em.json("pdf_targets.json", &serde_json::to_value(targets)?)?;
    let opts = PdfFitOptions {
        starts: pdf.starts,
        seed: cfg.run.seed,
        support: Some(pdf.support),
        ..PdfFitOptions::default()
    };
    let mut fits = Vec::new();
    for kind in &pdf.kinds {
        let fit = fit_pdf(&targets, *kind, &opts)?;
        em.json(&format!("pdf_{}.json", kind.name()), &fit.to_json())?;
        fit.model.write_density_csv(
            &em.path(&format!("pdf_{}_density.csv", kind.name())),
            pdf.support,
            401,
        )?;
        fits.push(fit);
    }
    let hist = &sde.roll_histogram;
    let mut header = vec!["x".to_string(), "sde".to_string()];
    header.extend(fits.iter().map(|f| f.model.kind.name().to_string()));
    let mut out = header.join(",") + "\n";
    for (x, p) in hist.centers().iter().zip(hist.density()) {
        out.push_str(&format!("{x:.6e},{p:.10e}"));
        for f in &fits {
            out.push_str(&format!(",{:.10e}", pdf_density(*x, &f.model)?));
        }
        out.push('\n');
    }
    let path = em.path("pdf_overlay.csv");
    std::fs::write(&path, out).map_err(|e| Error::io(&path, e))
}

fn closure_entry(target: &MultiIndex, p: u32) -> Result<serde_json::Value> {
    Ok(serde_json::json!({
        "target": target.key(),
        "expectation": target.expectation(),
        "polynomial": closure_polynomial(target, p)?.to_string(),
    }))
}

fn cmd_export_closures(cfg: &RunConfig, em: &mut Emitter) -> Result<()> {
    let filter = resolve_filter(cfg)?;
    let p = cfg.run.closure_order;
    let system = build_system(&cfg.ship, &filter, p)?;
    let closed: BTreeSet<MultiIndex> = (0..system.len())
        .flat_map(|i| system.row_terms(i).iter().map(|(_, m)| m.clone()))
        .filter(|m| m.order() > p)
        .collect();
    let entries = closed
        .iter()
        .map(|t| closure_entry(t, p))
        .collect::<Result<Vec<_>>>()?;
    em.json(
        &format!("closures_p{p}.json"),
        &serde_json::json!({"closure_order": p, "width": 8, "closures": entries}),
    )?;
    let supplement = validation::supplement_table()?
        .iter()
        .map(|f| closure_entry(&f.target, 2))
        .collect::<Result<Vec<_>>>()?;
    em.json(
        "closures_supplement.json",
        &serde_json::json!({"closure_order": 2, "closures": supplement}),
    )
}

fn cmd_validate(cfg: &RunConfig, em: &mut Emitter) -> Result<usize> {
    let checks = validation::run_all(cfg)?;
    for c in &checks {
        log::info!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    em.json(
        "validation.json",
        &serde_json::json!({"passed": checks.len() - failed, "failed": failed, "checks": checks}),
    )?;
    Ok(failed)
}
