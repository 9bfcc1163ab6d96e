//! TOML scenario configuration.
//!
//! ```toml
//! [probe]
//! alpha1 = 0.0
//! alpha2 = 3.1622776601683795
//! r = 1.7
//!
//! [truth]
//! phi_s = 0.7
//! phi_d = 1.1
//!
//! [lo]
//! mode = "tuned"      # tuned | explicit | offset
//! k = 0.25            # or k1, k2; theta1/theta2; offset1/offset2
//!
//! [run]
//! nu = 2000
//! repetitions = 200
//! seed = 1
//! estimator = "closed_form"   # or numeric_mle
//! weights = [0.6, 0.8]        # optional, custom runs only
//!
//! [sweep]
//! axis = "nu"         # nu | N | beta
//! values = [200, 500, 1000, 2000]
//!
//! [outputs]
//! directory = "out"
//! formats = ["csv", "json", "svg"]
//! ```
//!
//! For the `N` axis the probe is rebuilt at every point with
//! `N_s = N_c = N/2`, keeping the configured coherent split `β`. For the
//! `beta` axis `N_s` and `N_c` stay fixed and `β` varies.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::EstimateMethod;
use crate::gaussian::Probe;
use crate::homodyne::LoSetting;
use crate::interferometer::PhasePair;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub alpha1: f64,
    pub alpha2: f64,
    pub r: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            alpha1: 0.0,
            alpha2: 10f64.sqrt(),
            r: 1.7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruthConfig {
    pub phi_s: f64,
    pub phi_d: f64,
}

impl Default for TruthConfig {
    fn default() -> Self {
        Self { phi_s: 0.7, phi_d: 1.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoMode {
    Tuned,
    Explicit,
    Offset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoConfig {
    pub mode: LoMode,
    pub k: Option<f64>,
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub theta1: Option<f64>,
    pub theta2: Option<f64>,
    pub offset1: Option<f64>,
    pub offset2: Option<f64>,
}

impl Default for LoConfig {
    fn default() -> Self {
        Self {
            mode: LoMode::Tuned,
            k: None,
            k1: None,
            k2: None,
            theta1: None,
            theta2: None,
            offset1: None,
            offset2: None,
        }
    }
}

pub const DEFAULT_K: f64 = 0.25;

impl LoConfig {
    pub fn setting(&self) -> Result<LoSetting> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::Config(format!("lo.{name} is required for mode {:?}", self.mode)))
        };
        match self.mode {
            LoMode::Tuned => {
                if self.k.is_some() && (self.k1.is_some() || self.k2.is_some()) {
                    return Err(Error::Config("lo.k conflicts with lo.k1/lo.k2".into()));
                }
                let k = self.k.unwrap_or(DEFAULT_K);
                Ok(LoSetting::Tuned {
                    k1: self.k1.unwrap_or(k),
                    k2: self.k2.unwrap_or(k),
                })
            }
            LoMode::Explicit => Ok(LoSetting::Explicit {
                theta1: need(self.theta1, "theta1")?,
                theta2: need(self.theta2, "theta2")?,
            }),
            LoMode::Offset => Ok(LoSetting::Offset {
                offset1: need(self.offset1, "offset1")?,
                offset2: need(self.offset2, "offset2")?,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub nu: u64,
    pub repetitions: u32,
    pub seed: u64,
    pub estimator: Option<EstimateMethod>,
    /// Centre of the `φ_s` branch window; defaults to the true `φ_s`.
    pub reference_phi_s: Option<f64>,
    pub weights: Option<[f64; 2]>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            nu: 2000,
            repetitions: 200,
            seed: 20_170_901,
            estimator: None,
            reference_phi_s: None,
            weights: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    #[serde(rename = "nu")]
    Nu,
    #[serde(rename = "N")]
    Photons,
    #[serde(rename = "beta")]
    Beta,
}

impl SweepAxis {
    pub fn column(&self) -> &'static str {
        match self {
            SweepAxis::Nu => "nu",
            SweepAxis::Photons => "N",
            SweepAxis::Beta => "beta",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            axis: SweepAxis::Nu,
            values: vec![200.0, 500.0, 1000.0, 2000.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            formats: vec![OutputFormat::Csv, OutputFormat::Json, OutputFormat::Svg],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub probe: ProbeConfig,
    pub truth: TruthConfig,
    pub lo: LoConfig,
    pub run: RunConfig,
    pub sweep: SweepConfig,
    pub outputs: OutputConfig,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        for (name, v) in [
            ("probe.alpha1", self.probe.alpha1),
            ("probe.alpha2", self.probe.alpha2),
            ("probe.r", self.probe.r),
            ("truth.phi_s", self.truth.phi_s),
            ("truth.phi_d", self.truth.phi_d),
        ] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        if self.probe.r < 0.0 {
            return bad("probe.r must be non-negative".into());
        }
        self.lo.setting()?;
        if self.run.repetitions < 2 {
            return bad("run.repetitions must be at least 2".into());
        }
        if self.run.nu < 2 {
            return bad("run.nu must be at least 2".into());
        }
        if let Some(w) = self.run.weights {
            if !(w[0].is_finite() && w[1].is_finite()) || w == [0.0, 0.0] {
                return bad("run.weights must be finite and not both zero".into());
            }
        }
        let values = &self.sweep.values;
        if values.is_empty() {
            return bad("sweep.values is empty".into());
        }
        if values.windows(2).any(|w| !(w[1] > w[0])) {
            return bad("sweep.values must be strictly increasing".into());
        }
        match self.sweep.axis {
            SweepAxis::Nu => {
                if values.iter().any(|&v| v < 2.0 || v.fract() != 0.0 || v > u32::MAX as f64) {
                    return bad("sweep.values for axis nu must be integers ≥ 2".into());
                }
            }
            SweepAxis::Photons => {
                if values.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                    return bad("sweep.values for axis N must be positive".into());
                }
            }
            SweepAxis::Beta => {
                if values.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                    return bad("sweep.values for axis beta must lie in [0, 1]".into());
                }
            }
        }
        if self.outputs.formats.is_empty() {
            return bad("outputs.formats is empty".into());
        }
        Ok(())
    }

    pub fn truth(&self) -> PhasePair {
        PhasePair::new(self.truth.phi_s, self.truth.phi_d)
    }

    pub fn base_probe(&self) -> Probe {
        Probe::new(self.probe.alpha1, self.probe.alpha2, self.probe.r)
    }

    /// Probe and sample size at sweep value `x`.
    pub fn point(&self, x: f64) -> (Probe, u64) {
        let base = self.base_probe();
        match self.sweep.axis {
            SweepAxis::Nu => (base, x as u64),
            SweepAxis::Photons => (Probe::from_photons(0.5 * x, 0.5 * x, base.beta()), self.run.nu),
            SweepAxis::Beta => (
                Probe::from_photons(base.squeezed_photons(), base.coherent_photons(), x),
                self.run.nu,
            ),
        }
    }

    /// Content digest identifying this configuration.
    pub fn digest(&self) -> u64 {
        let json = serde_json::to_string(self).unwrap_or_default();
        crate::numeric::fnv1a(json.bytes().map(u64::from))
    }
}
