//! Scenario configuration.
//!
//! A scenario is a TOML document holding every physical parameter the
//! commands need. Unknown keys are rejected and every value is checked
//! against the library's own invariants before any command runs.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cavity_readout::bounds::{improved_scenario, CavityParams, ChannelAmplitudeTable, MirrorModel, ScenarioBase};
use cavity_readout::detection::{CavityResponse, Efficiencies, JumpModel};
use cavity_readout::lindblad::AtomCavitySpec;
use cavity_readout::scattering::{depump_prob_per_scatter, DepumpParams, SurvivalPoint};
use cavity_readout::zeno::ZenoConfig;
use cavity_readout::QubitState;
use serde::{Deserialize, Serialize};

use crate::CliError;

const PAPER_TOML: &str = include_str!("../scenarios/paper.toml");

/// Largest seed that survives a TOML round trip (TOML integers are `i64`).
pub const MAX_SEED: u64 = i64::MAX as u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioName {
    Paper,
    IdealFluorescence,
    ImprovedCavity,
    Custom,
}

impl ScenarioName {
    pub const BUILT_IN: [ScenarioName; 3] = [
        ScenarioName::Paper,
        ScenarioName::IdealFluorescence,
        ScenarioName::ImprovedCavity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::Paper => "paper",
            ScenarioName::IdealFluorescence => "ideal-fluorescence",
            ScenarioName::ImprovedCavity => "improved-cavity",
            ScenarioName::Custom => "custom",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            ScenarioName::Paper,
            ScenarioName::IdealFluorescence,
            ScenarioName::ImprovedCavity,
            ScenarioName::Custom,
        ]
        .into_iter()
        .find(|n| n.as_str() == s)
        .ok_or_else(|| format!("unknown scenario `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySection {
    pub g: f64,
    pub kappa: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub dark_percent: [f64; 6],
    pub bright_percent: [f64; 6],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionSection {
    pub t0: f64,
    pub t1: f64,
    pub r0: f64,
    pub r1: f64,
    pub eta_t: f64,
    pub eta_r: f64,
    pub jump_per_photon: f64,
    pub n_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    pub first_decade: i32,
    pub last_decade: i32,
    pub points_per_decade: u32,
}

/// Measured transfer probability after a pulse with `n` incident photons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferMeasurement {
    pub n: f64,
    pub transfer: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZenoSection {
    pub tau: f64,
    pub p_floor: f64,
    pub p_ceiling: f64,
    pub a0: f64,
    pub n_values: Vec<f64>,
    /// When present, `a0` is refitted from these points.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub measurements: Vec<TransferMeasurement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurvivalMeasurement {
    pub n: f64,
    pub survival: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepumpSection {
    pub nu: f64,
    pub gamma_ratio: f64,
    pub s_inf: f64,
    pub n_values: Vec<f64>,
    /// When present, `nu` and `s_inf` are refitted from these points.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub measurements: Vec<SurvivalMeasurement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LindbladSection {
    pub second_mode_detuning: f64,
    pub second_mode_coupling_scale: f64,
    pub drive_ratio: f64,
    pub n_max: usize,
    pub empty_transmission: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Figure4Section {
    /// Accessible exponent per incident photon with the real detectors. When
    /// absent it is computed from the detection section.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi_experiment: Option<f64>,
    /// Incident photons per scattered photon. When absent it follows from the
    /// depump section.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub photons_per_scatter: Option<f64>,
    pub m_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioName,
    pub seed: u64,
    pub trials: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub cavity: CavitySection,
    pub channels: ChannelSection,
    pub detection: DetectionSection,
    pub bounds: BoundsSection,
    pub zeno: ZenoSection,
    pub depump: DepumpSection,
    pub lindblad: LindbladSection,
    pub figure4: Figure4Section,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn in_section<T>(section: &str, r: cavity_readout::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| invalid(format!("[{section}] {e}")))
}

fn check_grid(section: &str, values: &[f64]) -> Result<(), CliError> {
    if values.is_empty() {
        return Err(invalid(format!("[{section}] grid must not be empty")));
    }
    if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(invalid(format!(
            "[{section}] grid values must be finite and >= 0, got {v}"
        )));
    }
    Ok(())
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| invalid(e.to_string()))
    }

    pub fn built_in(name: ScenarioName) -> Result<Self, CliError> {
        let paper = Self::parse(PAPER_TOML)?;
        match name {
            ScenarioName::Paper => Ok(paper),
            ScenarioName::IdealFluorescence => Ok(ideal_fluorescence(paper)),
            ScenarioName::ImprovedCavity => improved_cavity(paper),
            ScenarioName::Custom => Err(invalid("the custom scenario needs --config")),
        }
    }

    /// Text of the embedded reference scenario, comments included.
    pub fn paper_toml() -> &'static str {
        PAPER_TOML
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.seed > MAX_SEED {
            return Err(invalid(format!("seed must be <= {MAX_SEED}")));
        }
        if self.trials == 0 {
            return Err(invalid("trials must be > 0"));
        }
        self.cavity_params()?;
        self.channel_table()?;
        self.response()?;
        self.efficiencies()?;
        let jump = self.detection.jump_per_photon;
        if !(0.0..=1.0).contains(&jump) {
            return Err(invalid(format!(
                "[detection] jump_per_photon must lie in [0, 1], got {jump}"
            )));
        }
        check_grid("detection", &self.detection.n_values)?;

        let b = &self.bounds;
        if b.points_per_decade == 0 || b.first_decade > b.last_decade {
            return Err(invalid(
                "[bounds] need points_per_decade > 0 and first_decade <= last_decade",
            ));
        }
        if b.first_decade < -12 || b.last_decade > 12 {
            return Err(invalid("[bounds] decades must lie in [-12, 12]"));
        }

        self.zeno_config(QubitState::Bright)?;
        if !(self.zeno.a0 >= 0.0 && self.zeno.a0.is_finite()) {
            return Err(invalid(format!("[zeno] a0 must be >= 0, got {}", self.zeno.a0)));
        }
        check_grid("zeno", &self.zeno.n_values)?;
        if self.zeno.measurements.len() == 1 {
            return Err(invalid("[zeno] fitting a0 needs at least two measurements"));
        }
        for m in &self.zeno.measurements {
            if !(m.n >= 0.0 && m.sigma > 0.0 && (0.0..=1.0).contains(&m.transfer)) {
                return Err(invalid(format!("[zeno] invalid measurement {m:?}")));
            }
        }

        self.depump_params()?;
        check_grid("depump", &self.depump.n_values)?;
        if (1..3).contains(&self.depump.measurements.len()) {
            return Err(invalid(
                "[depump] fitting the survival curve needs at least three measurements",
            ));
        }
        for m in &self.depump.measurements {
            if !(m.n >= 0.0 && m.sigma > 0.0 && (0.0..=1.0).contains(&m.survival)) {
                return Err(invalid(format!("[depump] invalid measurement {m:?}")));
            }
        }

        self.atom_cavity_spec()?;

        let f = &self.figure4;
        for (key, v) in [
            ("xi_experiment", f.xi_experiment),
            ("photons_per_scatter", f.photons_per_scatter),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(invalid(format!("[figure4] {key} must be > 0, got {v}")));
                }
            }
        }
        check_grid("figure4", &f.m_values)?;
        Ok(())
    }

    pub fn cavity_params(&self) -> Result<CavityParams, CliError> {
        let c = &self.cavity;
        in_section("cavity", CavityParams::new(c.g, c.kappa, c.gamma))
    }

    pub fn channel_table(&self) -> Result<ChannelAmplitudeTable, CliError> {
        let c = &self.channels;
        in_section(
            "channels",
            ChannelAmplitudeTable::from_rounded_percent(c.dark_percent, c.bright_percent),
        )
    }

    pub fn response(&self) -> Result<CavityResponse, CliError> {
        let d = &self.detection;
        in_section("detection", CavityResponse::new(d.t0, d.t1, d.r0, d.r1))
    }

    pub fn efficiencies(&self) -> Result<Efficiencies, CliError> {
        in_section(
            "detection",
            Efficiencies::new(self.detection.eta_t, self.detection.eta_r),
        )
    }

    pub fn jump_model(&self) -> JumpModel {
        JumpModel {
            bright_to_dark_per_photon: self.detection.jump_per_photon,
        }
    }

    pub fn zeno_config(&self, initial: QubitState) -> Result<ZenoConfig, CliError> {
        let z = &self.zeno;
        in_section("zeno", ZenoConfig::pi_pulse(z.tau, z.p_floor, z.p_ceiling, initial))
    }

    pub fn depump_params(&self) -> Result<DepumpParams, CliError> {
        let d = &self.depump;
        in_section("depump", DepumpParams::new(d.nu, d.gamma_ratio, d.s_inf))
    }

    pub fn survival_points(&self) -> Vec<SurvivalPoint> {
        self.depump
            .measurements
            .iter()
            .map(|m| SurvivalPoint {
                n: m.n,
                survival: m.survival,
                sigma: m.sigma,
            })
            .collect()
    }

    pub fn atom_cavity_spec(&self) -> Result<AtomCavitySpec, CliError> {
        let l = &self.lindblad;
        let spec = AtomCavitySpec {
            cavity: self.cavity_params()?,
            second_mode_detuning: l.second_mode_detuning,
            second_mode_coupling_scale: l.second_mode_coupling_scale,
            drive_ratio: l.drive_ratio,
            n_max: l.n_max,
            empty_transmission: l.empty_transmission,
        };
        in_section("lindblad", spec.validate())?;
        Ok(spec)
    }

    /// Logarithmic photon-number grid of the bounds command, starting at 0.
    pub fn bounds_grid(&self) -> Vec<f64> {
        let b = &self.bounds;
        let ppd = b.points_per_decade as i32;
        std::iter::once(0.0)
            .chain((b.first_decade * ppd..=b.last_decade * ppd).map(|k| 10f64.powf(k as f64 / ppd as f64)))
            .collect()
    }
}

/// Dark state fully transmitted, bright state scattering everything into a
/// mode nobody detects, perfect counters and no depumping.
fn ideal_fluorescence(mut cfg: ScenarioConfig) -> ScenarioConfig {
    cfg.scenario = ScenarioName::IdealFluorescence;
    cfg.channels = ChannelSection {
        dark_percent: [100.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        bright_percent: [0.0, 0.0, 100.0, 0.0, 0.0, 0.0],
    };
    let d = &mut cfg.detection;
    (d.t0, d.t1, d.r0, d.r1) = (1.0, 0.0, 0.0, 0.0);
    (d.eta_t, d.eta_r) = (1.0, 1.0);
    d.jump_per_photon = 0.0;
    cfg.figure4.xi_experiment = None;
    cfg
}

/// Mirror losses reduced fourfold at fixed mirror transmission, detectors at
/// 70% and a single-mode atom response.
fn improved_cavity(mut cfg: ScenarioConfig) -> Result<ScenarioConfig, CliError> {
    const LOSS_SCALE: f64 = 0.25;
    const ETA: f64 = 0.7;
    let base = ScenarioBase::reference_single_mode();
    let outcome = in_section("improved-cavity", improved_scenario(LOSS_SCALE, ETA, ETA, &base))?;
    let mirrors = in_section("improved-cavity", base.mirrors.with_scaled_losses(LOSS_SCALE))?;
    let table = in_section("improved-cavity", mirrors.channel_table(outcome.cooperativity))?;
    let percent = |state| cavity_readout::bounds::Channel::ALL.map(|c| 100.0 * table.power(state, c));

    cfg.scenario = ScenarioName::ImprovedCavity;
    cfg.cavity.kappa *= mirrors.linewidth_relative_to(&MirrorModel::reference());
    cfg.channels = ChannelSection {
        dark_percent: percent(QubitState::Dark),
        bright_percent: percent(QubitState::Bright),
    };
    let r = outcome.response;
    let d = &mut cfg.detection;
    (d.t0, d.t1, d.r0, d.r1) = (r.t0, r.t1, r.r0, r.r1);
    (d.eta_t, d.eta_r) = (ETA, ETA);
    // Without the detuned mode every scattering event goes to free space.
    let depump_per_scatter = in_section("improved-cavity", depump_prob_per_scatter(0.0))?;
    d.jump_per_photon = depump_per_scatter / outcome.photons_per_scatter;
    cfg.depump.gamma_ratio = 0.0;
    cfg.depump.nu = d.jump_per_photon;
    cfg.lindblad.second_mode_coupling_scale = 0.0;
    cfg.lindblad.empty_transmission = mirrors.empty_transmission();
    cfg.figure4.xi_experiment = None;
    cfg.figure4.photons_per_scatter = Some(outcome.photons_per_scatter);
    cfg.validate()?;
    Ok(cfg)
}

/// Resolves the configuration from an explicit file or a built-in scenario
/// and applies command-line overrides.
pub fn resolve(
    path: Option<&Path>,
    scenario: Option<ScenarioName>,
    seed: Option<u64>,
    trials: Option<u64>,
) -> Result<ScenarioConfig, CliError> {
    let mut cfg = match (path, scenario) {
        (Some(_), Some(_)) => return Err(CliError::Usage("--config and --scenario are exclusive".into())),
        (Some(p), None) => ScenarioConfig::load(p)?,
        (None, s) => ScenarioConfig::built_in(s.unwrap_or(ScenarioName::Paper))?,
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(trials) = trials {
        cfg.trials = trials;
    }
    cfg.validate()?;
    Ok(cfg)
}
