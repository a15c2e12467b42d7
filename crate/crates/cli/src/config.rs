//! Design-config schema and its translation into library types.
//!
//! Configs quote every frequency in Hz, matching how designs are specified
//! in practice; the library works in rad/s throughout. The 2 pi conversion
//! happens here and in the exporters, nowhere else.

use std::path::Path;

use serde::{Deserialize, Serialize};

use purcell_filters::ldos::{calibrate_coupling, ldos_at};
use purcell_filters::network::{build_filter_network, CoupledModeNetwork, ModeRole};
use purcell_filters::prototype::{FilterSpec, PrototypeCoefficients};
use purcell_filters::purcell::{default_resonator_stage, Model, ReadoutChain, ResonatorCoupling};

use crate::error::{compute, config, CliError};

pub const TAU: f64 = std::f64::consts::TAU;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    pub filter: FilterConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub realization: Option<RealizationConfig>,
    #[serde(default)]
    pub sweeps: SweepsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    pub order: usize,
    pub insertion_loss_db: f64,
    pub center_frequency_hz: f64,
    pub bandwidth_hz: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub resonator_frequency_hz: f64,
    /// Filter stage the resonator couples to, 1-based. Defaults to stage 1
    /// for reflective filters and the middle stage for reflectionless ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resonator_stage: Option<usize>,
    /// Target resonator linewidth; the coupling is calibrated to hit it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resonator_kappa_hz: Option<f64>,
    /// Direct resonator-stage coupling rate; alternative to the above.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resonator_coupling_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubit_frequency_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubit_coupling_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelChoice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intrinsic_t1_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    Rwa,
    Full,
}

impl ModelChoice {
    pub fn to_model(self) -> Model {
        match self {
            ModelChoice::Rwa => Model::Rwa,
            ModelChoice::Full => Model::Full,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealizationConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z0_ohm: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detuning: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub start_hz: f64,
    pub stop_hz: f64,
    /// Number of points; 0 requests an empty sweep (headers only).
    pub points: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub stop_s: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orders: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub insertion_loss_db: Option<Vec<f64>>,
    /// Detuning-magnitude fit window in GHz, [low, high].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_ghz: Option<[f64; 2]>,
}

impl DesignConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn filter_spec(&self) -> Result<FilterSpec, CliError> {
        FilterSpec::new(
            self.filter.order,
            self.filter.insertion_loss_db,
            TAU * self.filter.center_frequency_hz,
            TAU * self.filter.bandwidth_hz,
        )
        .map_err(config)
    }

    pub fn prototype(&self) -> Result<PrototypeCoefficients, CliError> {
        self.filter_spec()?.synthesize().map_err(compute)
    }

    pub fn filter_network(&self) -> Result<CoupledModeNetwork, CliError> {
        let spec = self.filter_spec()?;
        build_filter_network(&spec.synthesize().map_err(compute)?, spec.center, spec.bandwidth)
            .map_err(compute)
    }

    pub fn z0_ohm(&self) -> f64 {
        self.realization
            .as_ref()
            .and_then(|r| r.z0_ohm)
            .unwrap_or(50.0)
    }

    /// Frequency sweep in rad/s; defaults to the filter band with margin.
    pub fn frequency_grid(&self) -> Result<Vec<f64>, CliError> {
        match &self.sweeps.frequency {
            Some(g) => build_grid(g, GridKind::Frequency),
            None => {
                let w0 = TAU * self.filter.center_frequency_hz;
                let dw = TAU * self.filter.bandwidth_hz;
                Ok(linear(w0 - dw, w0 + dw, 2001))
            }
        }
    }

    /// Detuning sweep in rad/s; defaults to the standard scaling grid.
    pub fn detuning_grid(&self) -> Result<Vec<f64>, CliError> {
        match &self.sweeps.detuning {
            Some(g) => build_grid(g, GridKind::Detuning),
            None => Ok(purcell_filters::purcell::default_detuning_grid()),
        }
    }
}

pub enum GridKind {
    Frequency,
    Detuning,
}

pub fn build_grid(g: &GridConfig, kind: GridKind) -> Result<Vec<f64>, CliError> {
    if g.points == 0 {
        return Ok(Vec::new());
    }
    if g.points == 1 {
        return Err(CliError::Config("a sweep needs 0 or >= 2 points".into()));
    }
    if g.points > 1_000_000 {
        return Err(CliError::Config("sweep limited to 1e6 points".into()));
    }
    let (a, b) = (TAU * g.start_hz, TAU * g.stop_hz);
    if !a.is_finite() || !b.is_finite() || a == b {
        return Err(CliError::Config("sweep endpoints must be finite and distinct".into()));
    }
    if matches!(kind, GridKind::Frequency) && (a <= 0.0 || b <= 0.0) {
        return Err(CliError::Config("frequency sweep must be positive".into()));
    }
    match g.spacing {
        Spacing::Linear => Ok(linear(a, b, g.points)),
        Spacing::Log => {
            if a * b <= 0.0 {
                return Err(CliError::Config(
                    "log spacing needs nonzero endpoints of the same sign".into(),
                ));
            }
            let sign = a.signum();
            let (la, lb) = (a.abs().ln(), b.abs().ln());
            let step = (lb - la) / (g.points - 1) as f64;
            Ok((0..g.points)
                .map(|i| sign * (la + step * i as f64).exp())
                .collect())
        }
    }
}

fn linear(a: f64, b: f64, n: usize) -> Vec<f64> {
    let step = (b - a) / (n - 1) as f64;
    (0..n).map(|i| a + step * i as f64).collect()
}

/// Readout-chain pieces shared by the decay and t1 commands, with the
/// resonator coupling already resolved to a rate.
pub struct ChainParts {
    pub filter_net: CoupledModeNetwork,
    /// 0-based stage index.
    pub stage: usize,
    pub resonator_frequency: f64,
    /// Resolved resonator-stage coupling, rad/s.
    pub coupling: f64,
    /// Effective resonator linewidth 2 pi c^2 rho at the resonator
    /// frequency, rad/s (equals the calibration target when one was given).
    pub kappa_r: f64,
    pub qubit: Option<(f64, f64)>,
    pub model: Model,
    pub intrinsic_t1_s: Option<f64>,
}

impl ChainParts {
    pub fn build(cfg: &DesignConfig, model_override: Option<ModelChoice>) -> Result<Self, CliError> {
        Self::build_for(cfg, cfg.filter.order, cfg.filter.insertion_loss_db, model_override)
    }

    /// Like `build` with the filter order and insertion loss overridden
    /// (the scaling command walks a grid of designs around one config).
    pub fn build_for(
        cfg: &DesignConfig,
        order: usize,
        insertion_loss_db: f64,
        model_override: Option<ModelChoice>,
    ) -> Result<Self, CliError> {
        let chain = cfg
            .chain
            .as_ref()
            .ok_or_else(|| CliError::Config("this command needs a [chain] section".into()))?;
        let spec = FilterSpec::new(
            order,
            insertion_loss_db,
            TAU * cfg.filter.center_frequency_hz,
            TAU * cfg.filter.bandwidth_hz,
        )
        .map_err(config)?;
        let filter_net =
            build_filter_network(&spec.synthesize().map_err(compute)?, spec.center, spec.bandwidth)
                .map_err(compute)?;
        let n = filter_net.num_modes();

        let wr = TAU * chain.resonator_frequency_hz;
        if !(wr > 0.0) || !wr.is_finite() {
            return Err(CliError::Config("resonator frequency must be positive".into()));
        }

        let qubit = match (chain.qubit_frequency_hz, chain.qubit_coupling_hz) {
            (Some(f), Some(c)) => {
                if !(f > 0.0) || !f.is_finite() || !c.is_finite() {
                    return Err(CliError::Config("qubit frequency/coupling invalid".into()));
                }
                Some((TAU * f, TAU * c))
            }
            (None, None) => None,
            _ => {
                return Err(CliError::Config(
                    "qubit_frequency_hz and qubit_coupling_hz go together".into(),
                ))
            }
        };

        let stage = match chain.resonator_stage {
            Some(s) => {
                if s < 1 || s > n {
                    return Err(CliError::Config(format!(
                        "resonator_stage {s} out of range 1..={n}"
                    )));
                }
                s - 1
            }
            None => {
                // tie-break frequency for the middle-stage rule: the qubit
                // if one is configured, otherwise the resonator itself
                let tie = qubit.map(|(wq, _)| wq).unwrap_or(wr);
                default_resonator_stage(&filter_net, insertion_loss_db, tie).map_err(compute)?
            }
        };

        let coupling = match (chain.resonator_kappa_hz, chain.resonator_coupling_hz) {
            (Some(kappa), None) => {
                if !(kappa > 0.0) || !kappa.is_finite() {
                    return Err(CliError::Config("resonator_kappa_hz must be positive".into()));
                }
                calibrate_coupling(&filter_net, stage, wr, TAU * kappa).map_err(compute)?
            }
            (None, Some(c)) => {
                if !(c > 0.0) || !c.is_finite() {
                    return Err(CliError::Config("resonator_coupling_hz must be positive".into()));
                }
                TAU * c
            }
            _ => {
                return Err(CliError::Config(
                    "give exactly one of resonator_kappa_hz or resonator_coupling_hz".into(),
                ))
            }
        };

        let rho = ldos_at(&filter_net, stage, wr).map_err(compute)?;
        let kappa_r = TAU * coupling * coupling * rho;

        let model = model_override
            .or(chain.model)
            .map(ModelChoice::to_model)
            .unwrap_or(Model::Full);

        Ok(ChainParts {
            filter_net,
            stage,
            resonator_frequency: wr,
            coupling,
            kappa_r,
            qubit,
            model,
            intrinsic_t1_s: chain.intrinsic_t1_s,
        })
    }

    /// Filter + resonator, for decay simulations.
    pub fn resonator_network(&self) -> Result<CoupledModeNetwork, CliError> {
        self.filter_net
            .attach_mode(
                self.resonator_frequency,
                self.stage,
                self.coupling,
                ModeRole::ReadoutResonator,
            )
            .map_err(compute)
    }

    /// Full chain for qubit-lifetime calculations; requires a qubit.
    pub fn readout_chain(&self) -> Result<ReadoutChain, CliError> {
        let (wq, cqr) = self.qubit.ok_or_else(|| {
            CliError::Config("this command needs qubit_frequency_hz and qubit_coupling_hz".into())
        })?;
        ReadoutChain::new(
            self.filter_net.clone(),
            self.resonator_frequency,
            self.stage,
            ResonatorCoupling::Direct(self.coupling),
            wq,
            cqr,
            self.model,
        )
        .map_err(config)
    }
}
