//! TOML run configuration.
//!
//! One file drives every CLI command; each command reads the sections it
//! needs and validates them against the domain invariants before any
//! computation starts. Unknown keys anywhere are rejected with the
//! offending key named.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::fit::{FitContext, FitSettings, FitWindow};
use crate::focp::{ControlBounds, CostWeights, SweepConfig};
use crate::model::{
    portugal_initial_conditions, CompartmentState, ContactReductionSchedule, Interpolation,
    ModelParams, ModelVariant,
};
use crate::solver::{FractionalOrder, TimeGrid};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelParams,
    pub simulation: SimulationSection,
    #[serde(default)]
    pub initial: Option<InitialSection>,
    #[serde(default)]
    pub schedule: Option<ScheduleSection>,
    #[serde(default)]
    pub fit: Option<FitSection>,
    #[serde(default)]
    pub sensitivity: Option<SensitivitySection>,
    #[serde(default)]
    pub control: Option<ControlSection>,
    #[serde(default)]
    pub report: Option<ReportSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    /// Derivative orders a command runs over (first entry is the default).
    pub alphas: Vec<f64>,
    /// Horizon in days.
    #[serde(default = "default_tf")]
    pub tf: f64,
    /// Solver step in days.
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default)]
    pub variant: ModelVariant,
}

fn default_tf() -> f64 {
    52.0
}

fn default_step() -> f64 {
    0.1
}

/// Explicit initial compartments; omit the section to use the built-in
/// Portugal third-wave values.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub susceptible: f64,
    pub exposed: f64,
    pub infectious: f64,
    pub super_spreader: f64,
    pub asymptomatic: f64,
    pub hospitalized: f64,
    pub recovered: f64,
    pub fatalities: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    #[serde(default)]
    pub interpolation: Interpolation,
    /// `[time_in_days, level]` pairs, strictly increasing in time.
    pub breakpoints: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    /// Case-data CSV (`date,confirmed_daily`), relative to the config file.
    pub data: PathBuf,
    pub window_start: String,
    pub window_end: String,
    #[serde(default = "default_start_alpha")]
    pub start_alpha: f64,
    #[serde(default = "default_start_s")]
    pub start_s: f64,
    #[serde(default = "default_alpha_restarts")]
    pub alpha_restarts: Vec<f64>,
    #[serde(default = "default_fit_iterations")]
    pub max_iterations: usize,
}

fn default_start_alpha() -> f64 {
    1.0
}

fn default_start_s() -> f64 {
    20.0
}

fn default_alpha_restarts() -> Vec<f64> {
    vec![1.0, 0.99, 0.95, 0.9]
}

fn default_fit_iterations() -> usize {
    400
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivitySection {
    #[serde(default = "default_alpha_grid")]
    pub alpha_grid: Vec<f64>,
    #[serde(default = "default_sensitivity_parameters")]
    pub parameters: Vec<String>,
}

fn default_alpha_grid() -> Vec<f64> {
    (0..=10).map(|k| 0.5 + 0.05 * k as f64).collect()
}

fn default_sensitivity_parameters() -> Vec<String> {
    ["beta", "rho1", "l", "gamma_i", "gamma_r"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSection {
    #[serde(default = "default_v_max")]
    pub v_max: f64,
    /// Maximum contact-reduction level; no built-in default, it mirrors the
    /// peak of the fitted schedule.
    pub m_max: f64,
    #[serde(default)]
    pub weights: CostWeights,
    #[serde(default = "default_relaxation")]
    pub relaxation: f64,
    #[serde(default = "default_sweep_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_sweep_iterations")]
    pub max_iterations: usize,
}

fn default_v_max() -> f64 {
    0.003
}

fn default_relaxation() -> f64 {
    0.5
}

fn default_sweep_tolerance() -> f64 {
    1e-3
}

fn default_sweep_iterations() -> usize {
    200
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    /// Per-person cost of vaccination.
    pub c1: f64,
    /// Per-person cost of preventive measures.
    pub c2: f64,
    /// Divisor applied to AV and TC for the scaled summary columns.
    pub scale: f64,
}

impl Default for ReportSection {
    fn default() -> Self {
        ReportSection {
            c1: 1.0,
            c2: 1.0,
            scale: 1.0,
        }
    }
}

impl RunConfig {
    /// Parses and validates a config file. All sections present are
    /// checked against the domain invariants immediately.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: RunConfig =
            toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        // Paths inside the config are relative to the config file.
        if let (Some(fit), Some(dir)) = (&mut config.fit, path.parent()) {
            if fit.data.is_relative() {
                fit.data = dir.join(&fit.data);
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn from_str_for_tests(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.model
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.simulation.alphas.is_empty() {
            return Err(Error::Config("simulation.alphas must not be empty".into()));
        }
        for &alpha in &self.simulation.alphas {
            FractionalOrder::new(alpha).map_err(|e| Error::Config(e.to_string()))?;
        }
        self.grid().map_err(|e| Error::Config(e.to_string()))?;
        self.contact_schedule()
            .map_err(|e| Error::Config(e.to_string()))?;
        if let Some(fit) = &self.fit {
            self.fit_window(fit).map_err(|e| Error::Config(e.to_string()))?;
            FractionalOrder::new(fit.start_alpha).map_err(|e| Error::Config(e.to_string()))?;
            for &alpha in &fit.alpha_restarts {
                FractionalOrder::new(alpha).map_err(|e| Error::Config(e.to_string()))?;
            }
            if !(fit.start_s > 0.0) {
                return Err(Error::Config(format!(
                    "fit.start_s must be positive, got {}",
                    fit.start_s
                )));
            }
        }
        if let Some(sens) = &self.sensitivity {
            if sens.alpha_grid.is_empty() {
                return Err(Error::Config("sensitivity.alpha_grid must not be empty".into()));
            }
            for &alpha in &sens.alpha_grid {
                FractionalOrder::new(alpha).map_err(|e| Error::Config(e.to_string()))?;
            }
            for name in &sens.parameters {
                name.parse::<crate::model::ParamName>()
                    .map_err(|e| Error::Config(e.to_string()))?;
            }
        }
        if let Some(control) = &self.control {
            self.sweep_config(control)
                .validate()
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Some(report) = &self.report {
            if !(report.scale > 0.0 && report.scale.is_finite()) {
                return Err(Error::Config(format!(
                    "report.scale must be positive, got {}",
                    report.scale
                )));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(0.0, self.simulation.tf, self.simulation.step)
    }

    /// Initial state: explicit `[initial]` section, or the built-in
    /// Portugal third-wave values for the configured population.
    pub fn initial_state(&self) -> Result<CompartmentState> {
        match &self.initial {
            Some(section) => Ok(CompartmentState {
                susceptible: section.susceptible,
                exposed: section.exposed,
                infectious: section.infectious,
                super_spreader: section.super_spreader,
                asymptomatic: section.asymptomatic,
                hospitalized: section.hospitalized,
                recovered: section.recovered,
                fatalities: section.fatalities,
            }),
            None => portugal_initial_conditions(self.model.population),
        }
    }

    /// Contact-reduction schedule; the all-zero schedule when absent.
    pub fn contact_schedule(&self) -> Result<ContactReductionSchedule> {
        match &self.schedule {
            Some(section) => {
                ContactReductionSchedule::new(section.breakpoints.clone(), section.interpolation)
            }
            None => Ok(ContactReductionSchedule::zero()),
        }
    }

    pub fn fit_section(&self) -> Result<&FitSection> {
        self.fit
            .as_ref()
            .ok_or_else(|| Error::Config("missing section `fit`".into()))
    }

    pub fn sensitivity_section(&self) -> Result<&SensitivitySection> {
        self.sensitivity
            .as_ref()
            .ok_or_else(|| Error::Config("missing section `sensitivity`".into()))
    }

    pub fn control_section(&self) -> Result<&ControlSection> {
        self.control
            .as_ref()
            .ok_or_else(|| Error::Config("missing section `control`".into()))
    }

    pub fn report_section(&self) -> ReportSection {
        self.report.clone().unwrap_or_default()
    }

    fn fit_window(&self, fit: &FitSection) -> Result<FitWindow> {
        let parse = |label: &str, s: &str| -> Result<NaiveDate> {
            s.parse::<NaiveDate>().map_err(|e| {
                Error::Config(format!("fit.{label}: bad date `{s}`: {e}"))
            })
        };
        let start = parse("window_start", &fit.window_start)?;
        let end = parse("window_end", &fit.window_end)?;
        if end <= start {
            return Err(Error::InvalidWindow(format!(
                "fit window {start}..{end} is empty"
            )));
        }
        Ok(FitWindow { start, end })
    }

    /// Assembles the fitting context from the `[fit]`, `[model]`,
    /// `[schedule]` and `[simulation]` sections.
    pub fn fit_context(&self) -> Result<(FitContext, FitSettings, PathBuf)> {
        let fit = self.fit_section()?;
        let window = self.fit_window(fit)?;
        let context = FitContext {
            params: self.model,
            variant: self.simulation.variant,
            schedule: self.contact_schedule()?,
            initial: self.initial_state()?,
            window,
            step: self.simulation.step,
        };
        let settings = FitSettings {
            start_alpha: fit.start_alpha,
            start_s: fit.start_s,
            alpha_restarts: fit.alpha_restarts.clone(),
            max_iterations: fit.max_iterations,
        };
        Ok((context, settings, fit.data.clone()))
    }

    pub fn sweep_config(&self, control: &ControlSection) -> SweepConfig {
        SweepConfig {
            bounds: ControlBounds {
                v_max: control.v_max,
                m_max: control.m_max,
            },
            weights: control.weights,
            relaxation: control.relaxation,
            tolerance: control.tolerance,
            max_iterations: control.max_iterations,
        }
    }
}
