//! Run configuration: a single JSON document.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::arma_fit::ArmaFilter;
use crate::error::{Error, Result};
use crate::pdf_fit::{PdfKind, ROLL_SUPPORT};
use crate::ship::ShipModel;
use crate::spectra::{FrequencyGrid, SeaState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub sea: SeaState,
    pub ship: ShipModel,
    /// Wave filter; fitted to the effective-wave spectrum when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<ArmaFilter>,
    #[serde(default)]
    pub run: RunSettings,
    #[serde(default)]
    pub outputs: Outputs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSettings {
    pub seed: u64,
    /// SDE ensemble size.
    pub realizations: usize,
    /// Length of each realization, s.
    pub duration: f64,
    /// Euler–Maruyama step, s.
    pub dt: f64,
    /// Interval between recorded samples, s.
    pub record_dt: f64,
    /// Transient excluded from statistics, s.
    pub discard: f64,
    /// Initial roll angle of every realization, deg.
    pub initial_roll_deg: f64,
    pub closure_order: u32,
    pub grid: GridSpec,
    /// Cosine components of the superposed wave.
    pub components: usize,
    /// Superposition ensemble size; these runs use RK4 at `record_dt`.
    pub superposition_realizations: usize,
    pub moments: MomentRun,
    pub pdf: PdfRun,
    /// Realizations written out as series CSVs.
    pub series_to_write: usize,
    /// Bins of the X₁ and ΔGM histograms.
    pub histogram_bins: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            seed: 42,
            realizations: 100,
            duration: 3600.0,
            dt: 1e-3,
            record_dt: 0.02,
            discard: 500.0,
            initial_roll_deg: 5.0,
            closure_order: 2,
            grid: GridSpec::default(),
            components: 1024,
            superposition_realizations: 20,
            moments: MomentRun::default(),
            pdf: PdfRun::default(),
            series_to_write: 1,
            histogram_bins: 80,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            lo: 0.05,
            hi: 3.0,
            points: 512,
        }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<FrequencyGrid> {
        FrequencyGrid::uniform(self.lo, self.hi, self.points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MomentRun {
    pub duration: f64,
    pub dt: f64,
    pub record_every: usize,
    /// Fraction of the trajectory averaged as steady state.
    pub window_fraction: f64,
    /// Initial value of every tracked moment.
    pub initial_value: f64,
}

impl Default for MomentRun {
    fn default() -> Self {
        MomentRun {
            duration: 2000.0,
            dt: 0.01,
            record_every: 100,
            window_fraction: 0.5,
            initial_value: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetSource {
    /// Steady moment-equation values completed by second-order closure.
    Moments,
    /// SDE ensemble m₁…m₄.
    Sde,
    /// A JSON file `{"m":[4],"weights":[4]}`.
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PdfRun {
    pub targets_from: TargetSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub targets_file: Option<PathBuf>,
    /// Families to fit.
    pub kinds: Vec<PdfKind>,
    pub support: f64,
    pub starts: usize,
}

impl Default for PdfRun {
    fn default() -> Self {
        PdfRun {
            targets_from: TargetSource::Moments,
            targets_file: None,
            kinds: vec![PdfKind::Type1, PdfKind::Type2],
            support: ROLL_SUPPORT,
            starts: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Outputs {
    pub directory: PathBuf,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs {
            directory: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    /// Reference sea state, synthetic C11-like ship and the reference filter.
    pub fn example() -> Self {
        RunConfig {
            sea: SeaState::reference(),
            ship: ShipModel::c11_like(),
            filter: Some(ArmaFilter::reference()),
            run: RunSettings::default(),
            outputs: Outputs::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Parses and validates. Parse failures are reported as config errors
    /// at `$` with serde's line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::config("$", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.sea.validate()?;
        self.ship.validate()?;
        if let Some(f) = &self.filter {
            if !f.alpha.iter().chain([&f.k]).all(|v| v.is_finite()) || f.k < 0.0 {
                return Err(Error::config(
                    "filter",
                    "coefficients must be finite with k >= 0",
                ));
            }
            if !f.is_stable() {
                return Err(Error::config(
                    "filter.alpha",
                    format!(
                        "unstable filter (max pole real part {:.3e})",
                        f.poles().max_real()
                    ),
                ));
            }
        }
        let r = &self.run;
        let check = |ok: bool, field: &str, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::config(&format!("run.{field}"), msg))
            }
        };
        check(r.realizations >= 1, "realizations", "must be at least 1")?;
        check(r.dt > 0.0 && r.dt.is_finite(), "dt", "must be positive")?;
        check(r.duration > r.dt, "duration", "must exceed dt")?;
        check(r.record_dt >= r.dt, "record_dt", "must be at least dt")?;
        let ratio = r.record_dt / r.dt;
        check(
            (ratio - ratio.round()).abs() < 1e-9 * ratio,
            "record_dt",
            "must be a multiple of dt",
        )?;
        check(
            r.discard >= 0.0 && r.discard < r.duration,
            "discard",
            "must lie in [0, duration)",
        )?;
        check(
            r.initial_roll_deg.abs() < 90.0,
            "initial_roll_deg",
            "must lie in (-90, 90)",
        )?;
        check(
            (2..=3).contains(&r.closure_order),
            "closure_order",
            "must be 2 or 3",
        )?;
        check(
            r.grid.lo > 0.0 && r.grid.hi > r.grid.lo && r.grid.points >= 2,
            "grid",
            "needs 0 < lo < hi and at least 2 points",
        )?;
        check(r.components >= 8, "components", "must be at least 8")?;
        check(
            r.superposition_realizations >= 1,
            "superposition_realizations",
            "must be at least 1",
        )?;
        let m = &r.moments;
        check(
            m.dt > 0.0 && m.duration > m.dt,
            "moments.duration",
            "must exceed moments.dt > 0",
        )?;
        check(
            m.record_every >= 1,
            "moments.record_every",
            "must be at least 1",
        )?;
        check(
            m.window_fraction > 0.0 && m.window_fraction <= 1.0,
            "moments.window_fraction",
            "must lie in (0, 1]",
        )?;
        check(
            m.initial_value.is_finite(),
            "moments.initial_value",
            "must be finite",
        )?;
        let p = &r.pdf;
        check(
            !p.kinds.is_empty(),
            "pdf.kinds",
            "must name at least one family",
        )?;
        check(
            p.support > 0.0 && p.support.is_finite(),
            "pdf.support",
            "must be positive",
        )?;
        check(p.starts >= 1, "pdf.starts", "must be at least 1")?;
        check(
            p.targets_from != TargetSource::File || p.targets_file.is_some(),
            "pdf.targets_file",
            "required when targets_from is \"file\"",
        )?;
        check(
            r.histogram_bins >= 2,
            "histogram_bins",
            "must be at least 2",
        )?;
        Ok(())
    }

    pub fn record_every(&self) -> usize {
        (self.run.record_dt / self.run.dt).round() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let cfg = RunConfig::example();
        let text = cfg.to_json().unwrap();
        let back = RunConfig::from_json(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_json().unwrap(), text);
    }

    #[test]
    fn defaults_fill_in() {
        let mut v = serde_json::to_value(RunConfig::example()).unwrap();
        v.as_object_mut().unwrap().remove("run");
        v.as_object_mut().unwrap().remove("filter");
        let cfg = RunConfig::from_json(&v.to_string()).unwrap();
        assert_eq!(cfg.run, RunSettings::default());
        assert!(cfg.filter.is_none());
        assert_eq!(cfg.run.grid.points, 512);
    }

    fn field_error(v: serde_json::Value) -> String {
        match RunConfig::from_json(&v.to_string()) {
            Err(Error::Config { path, .. }) => path,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn errors_name_the_field() {
        let base = serde_json::to_value(RunConfig::example()).unwrap();
        let mut v = base.clone();
        v["sea"]["h13"] = 0.0.into();
        assert_eq!(field_error(v), "sea.h13");
        let mut v = base.clone();
        v["filter"]["alpha"][0] = (-0.5).into();
        assert_eq!(field_error(v), "filter.alpha");
        let mut v = base.clone();
        v["run"]["closure_order"] = 4.into();
        assert_eq!(field_error(v), "run.closure_order");
        let mut v = base.clone();
        v["run"]["dt"] = 4000.0.into();
        assert_eq!(field_error(v), "run.duration");
        let mut v = base;
        v["run"]["bogus"] = 1.into();
        assert_eq!(field_error(v), "$");
    }
}
