//! JSON run configuration with a strict schema.
//!
//! Units: energies eV, rates GHz, times ns, angles degrees.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use qbsim::model::{presets, DeviceParams, RateParams};
use qbsim::protocols::{Phase, CHARGE_SAMPLING, RELAX_SAMPLING};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DeviceSection {
    pub omega_c0: Option<f64>,
    pub n_eff: Option<f64>,
    pub omega_d: Option<f64>,
    pub omega_a: Option<f64>,
    pub omega_t: Option<f64>,
    pub j_d: Option<f64>,
    pub j_a: Option<f64>,
    pub j_t: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RatesSection {
    pub gamma_p: Option<f64>,
    pub gamma_c: Option<f64>,
    pub gamma_d: Option<f64>,
    pub gamma_a: Option<f64>,
    pub gamma_ic: Option<f64>,
    pub gamma_isc: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub theta_deg: Option<f64>,
    /// Fixed photon cutoff; omitted means automatic escalation.
    pub n_max: Option<usize>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PhaseSection {
    pub duration_ns: f64,
    pub pump: bool,
    #[serde(default = "default_true")]
    pub cavity_closed: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub phases: Vec<PhaseSection>,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "default_sweep_parameter")]
    pub parameter: String,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
    pub probe_time_ns: f64,
}

fn default_sweep_parameter() -> String {
    "omega_c0".into()
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    pub data: Option<PathBuf>,
    pub free: Option<Vec<String>>,
    #[serde(default)]
    pub bounds: BTreeMap<String, [f64; 2]>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub directory: Option<PathBuf>,
    /// Significant digits of every float written, 9 to 17.
    pub precision: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Device preset the `device` section overrides.
    pub preset: Option<String>,
    #[serde(default)]
    pub device: DeviceSection,
    #[serde(default)]
    pub rates: RatesSection,
    #[serde(default)]
    pub geometry: GeometrySection,
    pub scenario: Option<ScenarioSection>,
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub output: OutputSection,
}

pub const DEFAULT_PRECISION: usize = 17;

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    parse_config_str(&text).map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))
}

pub fn parse_config_str(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = serde_json::from_str(text)
        .map_err(|e| ConfigError(format!("line {}, column {}: {e}", e.line(), e.column())))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn device_preset(name: &str) -> Result<DeviceParams, ConfigError> {
    match name {
        "mechanism1" => Ok(presets::mechanism1()),
        "mechanism2" => Ok(presets::mechanism2()),
        _ => name.strip_prefix("cavity").and_then(|k| k.parse::<usize>().ok()).and_then(presets::cavity).ok_or_else(
            || {
                ConfigError(format!(
                    "unknown preset {name:?}; expected mechanism1, mechanism2, cavity1..cavity5 or rates-default"
                ))
            },
        ),
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if let Some(p) = &self.preset {
            device_preset(p)?;
        }
        if let Some(p) = self.output.precision {
            if !(9..=17).contains(&p) {
                return Err(ConfigError(format!("output.precision {p} outside 9..=17")));
            }
        }
        if let Some(s) = &self.sweep {
            if s.parameter != "omega_c0" {
                return Err(ConfigError(format!(
                    "sweep.parameter {:?} unsupported; only omega_c0 can be swept",
                    s.parameter
                )));
            }
            if s.steps == 0 || !(s.to >= s.from) || (s.steps > 1 && s.to == s.from) {
                return Err(ConfigError("sweep needs steps >= 1 and from < to (or from == to with one step)".into()));
            }
        }
        if let Some(sc) = &self.scenario {
            if sc.phases.is_empty() {
                return Err(ConfigError("scenario.phases is empty".into()));
            }
        }
        for (k, [lo, hi]) in &self.fit.bounds {
            if !(lo < hi) {
                return Err(ConfigError(format!("fit.bounds.{k}: lower bound {lo} not below upper {hi}")));
            }
        }
        let device = self.device_with(None)?;
        device.validate().map_err(|e| ConfigError(format!("device: {e}")))?;
        self.rates().validate().map_err(|e| ConfigError(format!("rates: {e}")))?;
        Ok(())
    }

    /// Device from `preset_override`, else the config preset, else mechanism 1,
    /// with the `device` section applied on top.
    pub fn device_with(&self, preset_override: Option<&str>) -> Result<DeviceParams, ConfigError> {
        let mut d = match preset_override.or(self.preset.as_deref()) {
            Some(p) => device_preset(p)?,
            None => presets::mechanism1(),
        };
        let s = &self.device;
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut d.omega_c0, s.omega_c0);
        set(&mut d.n_eff, s.n_eff);
        set(&mut d.omega_d, s.omega_d);
        set(&mut d.omega_a, s.omega_a);
        set(&mut d.omega_t, s.omega_t);
        set(&mut d.j_d, s.j_d);
        set(&mut d.j_a, s.j_a);
        set(&mut d.j_t, s.j_t);
        Ok(d)
    }

    /// Default operating rates with the `rates` section applied on top.
    pub fn rates(&self) -> RateParams {
        let mut r = presets::rates_default();
        let s = &self.rates;
        for (dst, v) in [
            (&mut r.gamma_p, s.gamma_p),
            (&mut r.gamma_c, s.gamma_c),
            (&mut r.gamma_d, s.gamma_d),
            (&mut r.gamma_a, s.gamma_a),
            (&mut r.gamma_ic, s.gamma_ic),
            (&mut r.gamma_isc, s.gamma_isc),
        ] {
            if let Some(v) = v {
                *dst = v;
            }
        }
        r
    }

    pub fn phases(&self) -> Option<Vec<Phase>> {
        self.scenario.as_ref().map(|s| {
            s.phases
                .iter()
                .map(|p| Phase {
                    duration: p.duration_ns,
                    pump: p.pump,
                    cavity_closed: p.cavity_closed,
                    sampling: if p.pump { CHARGE_SAMPLING } else { RELAX_SAMPLING },
                })
                .collect()
        })
    }

    pub fn precision(&self) -> usize {
        self.output.precision.unwrap_or(DEFAULT_PRECISION)
    }
}
