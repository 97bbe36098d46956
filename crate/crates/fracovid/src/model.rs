//! The eight-compartment SEIPAHRF model with alpha-exponentiated rates,
//! its reproduction numbers, and the Portugal third-wave initial state.
//!
//! Compartments, in fixed order: susceptible `S`, exposed `E`, symptomatic
//! infectious `I`, super-spreader `P`, asymptomatic `A`, hospitalized `H`,
//! recovered `R`, fatalities `F`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::FractionalOrder;

pub const N_COMPARTMENTS: usize = 8;

/// Column labels used by every trajectory CSV.
pub const COMPARTMENT_NAMES: [&str; N_COMPARTMENTS] = ["S", "E", "I", "P", "A", "H", "R", "F"];

// Slice indices for the hot paths.
pub(crate) const S: usize = 0;
pub(crate) const E: usize = 1;
pub(crate) const I: usize = 2;
pub(crate) const P: usize = 3;
pub(crate) const A: usize = 4;
pub(crate) const H: usize = 5;
pub(crate) const R: usize = 6;
pub(crate) const F: usize = 7;

/// Epidemiological rate constants plus the population size.
///
/// Defaults are the first-wave values re-used for the third wave:
/// `beta = 2.55`, `l = 1.56`, `beta_prime = 7.65`, `kappa = 0.25`,
/// `rho1 = 0.58`, `rho2 = 0.001`, `gamma_a = 0.94`, `gamma_i = 0.27`,
/// `gamma_r = 0.5`, `delta_i = delta_p = delta_h = 1/23`,
/// `population = 10_280_000`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Human-to-human transmission coefficient (1/day).
    pub beta: f64,
    /// Relative transmissibility of hospitalized patients (dimensionless).
    pub l: f64,
    /// Transmission coefficient of super-spreaders (1/day).
    pub beta_prime: f64,
    /// Rate of leaving the exposed class (1/day).
    pub kappa: f64,
    /// Proportion of exposed progressing to symptomatic infectious.
    pub rho1: f64,
    /// Proportion of exposed progressing to super-spreader.
    pub rho2: f64,
    /// Hospitalization rate of symptomatic and super-spreaders (1/day).
    pub gamma_a: f64,
    /// Recovery rate without hospitalization (1/day).
    pub gamma_i: f64,
    /// Recovery rate of hospitalized patients (1/day).
    pub gamma_r: f64,
    /// Disease-induced death rate, symptomatic (1/day).
    pub delta_i: f64,
    /// Disease-induced death rate, super-spreaders (1/day).
    pub delta_p: f64,
    /// Disease-induced death rate, hospitalized (1/day).
    pub delta_h: f64,
    /// Total population (individuals).
    pub population: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            beta: 2.55,
            l: 1.56,
            beta_prime: 7.65,
            kappa: 0.25,
            rho1: 0.58,
            rho2: 0.001,
            gamma_a: 0.94,
            gamma_i: 0.27,
            gamma_r: 0.5,
            delta_i: 1.0 / 23.0,
            delta_p: 1.0 / 23.0,
            delta_h: 1.0 / 23.0,
            population: 10_280_000.0,
        }
    }
}

/// Parameter names accepted by the sensitivity operations and the C API.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamName {
    Beta,
    L,
    BetaPrime,
    Kappa,
    Rho1,
    Rho2,
    GammaA,
    GammaI,
    GammaR,
    DeltaI,
    DeltaP,
    DeltaH,
    Population,
}

impl ParamName {
    pub const ALL: [ParamName; 13] = [
        ParamName::Beta,
        ParamName::L,
        ParamName::BetaPrime,
        ParamName::Kappa,
        ParamName::Rho1,
        ParamName::Rho2,
        ParamName::GammaA,
        ParamName::GammaI,
        ParamName::GammaR,
        ParamName::DeltaI,
        ParamName::DeltaP,
        ParamName::DeltaH,
        ParamName::Population,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ParamName::Beta => "beta",
            ParamName::L => "l",
            ParamName::BetaPrime => "beta_prime",
            ParamName::Kappa => "kappa",
            ParamName::Rho1 => "rho1",
            ParamName::Rho2 => "rho2",
            ParamName::GammaA => "gamma_a",
            ParamName::GammaI => "gamma_i",
            ParamName::GammaR => "gamma_r",
            ParamName::DeltaI => "delta_i",
            ParamName::DeltaP => "delta_p",
            ParamName::DeltaH => "delta_h",
            ParamName::Population => "population",
        }
    }

    /// Whether the parameter appears in the reproduction-number formula.
    /// `kappa` and `population` cancel out of it entirely.
    pub fn in_r0_support(self) -> bool {
        !matches!(self, ParamName::Kappa | ParamName::Population)
    }
}

impl std::str::FromStr for ParamName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ParamName::ALL
            .iter()
            .copied()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::UnknownParameter { name: s.into() })
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let positive: [(&'static str, f64); 10] = [
            ("beta", self.beta),
            ("l", self.l),
            ("beta_prime", self.beta_prime),
            ("kappa", self.kappa),
            ("gamma_a", self.gamma_a),
            ("gamma_i", self.gamma_i),
            ("gamma_r", self.gamma_r),
            ("delta_i", self.delta_i),
            ("delta_p", self.delta_p),
            ("delta_h", self.delta_h),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be a positive finite rate, got {value}"),
                });
            }
        }
        if !(self.rho1 >= 0.0 && self.rho2 >= 0.0 && self.rho1 + self.rho2 <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "rho1/rho2",
                reason: format!(
                    "need rho1, rho2 >= 0 and rho1 + rho2 <= 1, got {} and {}",
                    self.rho1, self.rho2
                ),
            });
        }
        if !(self.population > 0.0 && self.population.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "population",
                reason: format!("must be positive, got {}", self.population),
            });
        }
        Ok(())
    }

    pub fn get(&self, name: ParamName) -> f64 {
        match name {
            ParamName::Beta => self.beta,
            ParamName::L => self.l,
            ParamName::BetaPrime => self.beta_prime,
            ParamName::Kappa => self.kappa,
            ParamName::Rho1 => self.rho1,
            ParamName::Rho2 => self.rho2,
            ParamName::GammaA => self.gamma_a,
            ParamName::GammaI => self.gamma_i,
            ParamName::GammaR => self.gamma_r,
            ParamName::DeltaI => self.delta_i,
            ParamName::DeltaP => self.delta_p,
            ParamName::DeltaH => self.delta_h,
            ParamName::Population => self.population,
        }
    }

    pub fn set(&mut self, name: ParamName, value: f64) {
        match name {
            ParamName::Beta => self.beta = value,
            ParamName::L => self.l = value,
            ParamName::BetaPrime => self.beta_prime = value,
            ParamName::Kappa => self.kappa = value,
            ParamName::Rho1 => self.rho1 = value,
            ParamName::Rho2 => self.rho2 = value,
            ParamName::GammaA => self.gamma_a = value,
            ParamName::GammaI => self.gamma_i = value,
            ParamName::GammaR => self.gamma_r = value,
            ParamName::DeltaI => self.delta_i = value,
            ParamName::DeltaP => self.delta_p = value,
            ParamName::DeltaH => self.delta_h = value,
            ParamName::Population => self.population = value,
        }
    }

    /// Rates with the derivative order applied per the dimension-consistent
    /// system: every rate constant is raised to `alpha`, while the
    /// dimensionless `l`, `rho1`, `rho2` pass through unchanged.
    pub fn alpha_rates(&self, order: FractionalOrder) -> EffectiveRates {
        self.effective_rates(order, ModelVariant::DimensionConsistent)
    }

    pub fn effective_rates(&self, order: FractionalOrder, variant: ModelVariant) -> EffectiveRates {
        let a = order.value();
        let raise = |x: f64| match variant {
            ModelVariant::DimensionConsistent => x.powf(a),
            ModelVariant::Uncorrected => x,
        };
        EffectiveRates {
            beta: raise(self.beta),
            beta_prime: raise(self.beta_prime),
            kappa: raise(self.kappa),
            gamma_a: raise(self.gamma_a),
            gamma_i: raise(self.gamma_i),
            gamma_r: raise(self.gamma_r),
            delta_i: raise(self.delta_i),
            delta_p: raise(self.delta_p),
            delta_h: raise(self.delta_h),
            l: self.l,
            rho1: self.rho1,
            rho2: self.rho2,
            population: self.population,
        }
    }
}

/// Which right-hand side to integrate.
///
/// `DimensionConsistent` (the default) exponentiates all rate constants by
/// the derivative order so both sides of the equations carry
/// `(time)^-alpha`. `Uncorrected` keeps the raw rates for comparison with
/// the earlier, dimensionally inconsistent formulation; the two coincide at
/// `alpha = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelVariant {
    #[default]
    DimensionConsistent,
    Uncorrected,
}

/// Sign convention for the controlled reproduction number.
///
/// `AsPrinted` evaluates the published closed form verbatim, including its
/// `(m - 1)` factors (negative for `m < 1`). `SignCorrected` substitutes
/// `(1 - m)`, flipping the overall sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControlledR0Variant {
    #[default]
    AsPrinted,
    SignCorrected,
}

/// Model rates after the derivative order has been applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveRates {
    pub beta: f64,
    pub beta_prime: f64,
    pub kappa: f64,
    pub gamma_a: f64,
    pub gamma_i: f64,
    pub gamma_r: f64,
    pub delta_i: f64,
    pub delta_p: f64,
    pub delta_h: f64,
    pub l: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub population: f64,
}

impl EffectiveRates {
    /// Uncontrolled right-hand sides. `m` scales all transmission terms by
    /// `(1 - m)`; both the `beta` terms (including the hospital `l * beta`
    /// term) and the `beta_prime` term carry the factor.
    pub fn rhs_uncontrolled(&self, y: &[f64], m: f64, dydt: &mut [f64]) {
        self.rhs_controlled(y, 0.0, m, dydt);
    }

    /// Controlled right-hand sides: transmission scaled by `(1 - m)` and a
    /// vaccination flux `v * S` moved from `S` to `R`.
    pub fn rhs_controlled(&self, y: &[f64], v: f64, m: f64, dydt: &mut [f64]) {
        let force = (1.0 - m)
            * (self.beta * y[I] + self.l * self.beta * y[H] + self.beta_prime * y[P])
            * y[S]
            / self.population;
        let vaccination = v * y[S];
        let leaving_e = self.kappa * y[E];
        let out_i = (self.gamma_a + self.gamma_i + self.delta_i) * y[I];
        let out_p = (self.gamma_a + self.gamma_i + self.delta_p) * y[P];

        dydt[S] = -force - vaccination;
        dydt[E] = force - leaving_e;
        dydt[I] = self.kappa * self.rho1 * y[E] - out_i;
        dydt[P] = self.kappa * self.rho2 * y[E] - out_p;
        dydt[A] = self.kappa * (1.0 - self.rho1 - self.rho2) * y[E];
        dydt[H] = self.gamma_a * (y[I] + y[P]) - (self.gamma_r + self.delta_h) * y[H];
        dydt[R] = self.gamma_i * (y[I] + y[P]) + self.gamma_r * y[H] + vaccination;
        dydt[F] = self.delta_i * y[I] + self.delta_p * y[P] + self.delta_h * y[H];
    }

    fn loss_terms(&self) -> (f64, f64, f64) {
        let a_i = self.gamma_a + self.gamma_i + self.delta_i;
        let a_p = self.gamma_a + self.gamma_i + self.delta_p;
        let a_h = self.gamma_r + self.delta_h;
        (a_i, a_p, a_h)
    }

    /// Basic reproduction number of the uncontrolled system.
    pub fn r0(&self) -> f64 {
        let (a_i, a_p, a_h) = self.loss_terms();
        self.beta * self.rho1 * (self.gamma_a * self.l + a_h) / (a_i * a_h)
            + (self.beta * self.gamma_a * self.l + self.beta_prime * a_h) * self.rho2 / (a_p * a_h)
    }

    /// Reproduction number with the controls treated as parameters.
    ///
    /// Evaluates the printed closed form, which divides by `v` and carries
    /// `(m - 1)` factors; `v = 0` is a singularity of that expression.
    pub fn controlled_r0(&self, v: f64, m: f64, variant: ControlledR0Variant) -> Result<f64> {
        if v == 0.0 {
            return Err(Error::Singular(
                "controlled R0 divides by the vaccination rate v".into(),
            ));
        }
        let (a_i, a_p, a_h) = self.loss_terms();
        let m_factor = match variant {
            ControlledR0Variant::AsPrinted => m - 1.0,
            ControlledR0Variant::SignCorrected => 1.0 - m,
        };
        Ok(
            (a_h + self.gamma_a * self.l) * self.beta * m_factor * self.rho1 / (a_h * a_i * v)
                + (a_h * self.beta_prime + self.beta * self.gamma_a * self.l)
                    * m_factor
                    * self.rho2
                    / (a_h * a_p * v),
        )
    }
}

/// Time-varying contact-reduction level `m(t)` used during the fitting
/// window. Levels live in `[0, 1]`; evaluation clamps to the nearest
/// breakpoint outside the covered range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactReductionSchedule {
    breakpoints: Vec<(f64, f64)>,
    interpolation: Interpolation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    PiecewiseConstant,
    #[default]
    PiecewiseLinear,
}

impl ContactReductionSchedule {
    pub fn new(breakpoints: Vec<(f64, f64)>, interpolation: Interpolation) -> Result<Self> {
        for window in breakpoints.windows(2) {
            if window[1].0 <= window[0].0 {
                return Err(Error::InvalidParameter {
                    name: "schedule",
                    reason: format!(
                        "breakpoint times must be strictly increasing ({} then {})",
                        window[0].0, window[1].0
                    ),
                });
            }
        }
        for &(t, level) in &breakpoints {
            if !t.is_finite() || !(0.0..=1.0).contains(&level) {
                return Err(Error::InvalidParameter {
                    name: "schedule",
                    reason: format!("level at t = {t} must lie in [0, 1], got {level}"),
                });
            }
        }
        Ok(ContactReductionSchedule {
            breakpoints,
            interpolation,
        })
    }

    /// The all-zero schedule: no contact reduction.
    pub fn zero() -> Self {
        ContactReductionSchedule {
            breakpoints: Vec::new(),
            interpolation: Interpolation::PiecewiseLinear,
        }
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    pub fn level_at(&self, t: f64) -> f64 {
        let pts = &self.breakpoints;
        if pts.is_empty() {
            return 0.0;
        }
        if t <= pts[0].0 {
            return pts[0].1;
        }
        if t >= pts[pts.len() - 1].0 {
            return pts[pts.len() - 1].1;
        }
        let idx = pts.partition_point(|&(bt, _)| bt <= t);
        let (t0, l0) = pts[idx - 1];
        let (t1, l1) = pts[idx];
        match self.interpolation {
            Interpolation::PiecewiseConstant => l0,
            Interpolation::PiecewiseLinear => l0 + (l1 - l0) * (t - t0) / (t1 - t0),
        }
    }

    pub fn max_level(&self) -> f64 {
        self.breakpoints
            .iter()
            .map(|&(_, l)| l)
            .fold(0.0, f64::max)
    }
}

/// Population counts of the eight compartments at one time instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompartmentState {
    pub susceptible: f64,
    pub exposed: f64,
    pub infectious: f64,
    pub super_spreader: f64,
    pub asymptomatic: f64,
    pub hospitalized: f64,
    pub recovered: f64,
    pub fatalities: f64,
}

impl CompartmentState {
    pub fn to_array(self) -> [f64; N_COMPARTMENTS] {
        [
            self.susceptible,
            self.exposed,
            self.infectious,
            self.super_spreader,
            self.asymptomatic,
            self.hospitalized,
            self.recovered,
            self.fatalities,
        ]
    }

    pub fn from_slice(y: &[f64]) -> Self {
        CompartmentState {
            susceptible: y[S],
            exposed: y[E],
            infectious: y[I],
            super_spreader: y[P],
            asymptomatic: y[A],
            hospitalized: y[H],
            recovered: y[R],
            fatalities: y[F],
        }
    }

    /// Sum of all eight compartments.
    pub fn total(&self) -> f64 {
        self.to_array().iter().sum()
    }
}

/// Uncontrolled right-hand sides of the dimension-consistent system at one
/// point, with the contact-reduction schedule applied to the transmission
/// terms. Passing the all-zero schedule recovers the plain system.
pub fn rhs_uncontrolled(
    t: f64,
    y: &CompartmentState,
    params: &ModelParams,
    order: FractionalOrder,
    schedule: &ContactReductionSchedule,
) -> [f64; N_COMPARTMENTS] {
    let rates = params.alpha_rates(order);
    let mut dydt = [0.0; N_COMPARTMENTS];
    rates.rhs_uncontrolled(&y.to_array(), schedule.level_at(t), &mut dydt);
    dydt
}

/// Basic reproduction number of the dimension-consistent system.
pub fn basic_reproduction_number(params: &ModelParams, order: FractionalOrder) -> f64 {
    params.alpha_rates(order).r0()
}

/// Controlled reproduction number with `v` and `m` treated as parameters.
pub fn controlled_r0(
    params: &ModelParams,
    order: FractionalOrder,
    v: f64,
    m: f64,
    variant: ControlledR0Variant,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&m) {
        return Err(Error::InvalidParameter {
            name: "m",
            reason: format!("preventive-measures level must lie in [0, 1], got {m}"),
        });
    }
    params.alpha_rates(order).controlled_r0(v, m, variant)
}

const RECOVERED_INITIAL: f64 = 278_776.0;
const EXPOSED_INITIAL: f64 = 92_069.0;
const DETECTED_POOL_INITIAL: f64 = 68_208.0;
const SUPER_SPREADER_SHARE: f64 = 0.1;
const ASYMPTOMATIC_DETECTION_RATIO: f64 = 0.15;
const FATALITIES_INITIAL: f64 = 34.0;
const HOSPITALIZED_INITIAL: f64 = 2_366.0;

/// Portugal third-wave initial conditions for a population of `n`.
///
/// 10% of the detected pool of 68,208 are super-spreaders and the
/// asymptomatic count is that pool divided by 0.15. The susceptible
/// residual is `n - R - E - P - I - A - H`; the 34 initial fatalities are
/// deliberately left out of that balance, so the eight compartments total
/// `n + 34` while the seven non-fatality compartments total exactly `n`.
pub fn portugal_initial_conditions(n: f64) -> Result<CompartmentState> {
    let super_spreader = DETECTED_POOL_INITIAL * SUPER_SPREADER_SHARE;
    let infectious = DETECTED_POOL_INITIAL * (1.0 - SUPER_SPREADER_SHARE);
    let asymptomatic = DETECTED_POOL_INITIAL / ASYMPTOMATIC_DETECTION_RATIO;
    let susceptible = n
        - RECOVERED_INITIAL
        - EXPOSED_INITIAL
        - super_spreader
        - infectious
        - asymptomatic
        - HOSPITALIZED_INITIAL;
    if susceptible < 0.0 {
        return Err(Error::InvalidPopulation {
            population: n,
            susceptible,
        });
    }
    Ok(CompartmentState {
        susceptible,
        exposed: EXPOSED_INITIAL,
        infectious,
        super_spreader,
        asymptomatic,
        hospitalized: HOSPITALIZED_INITIAL,
        recovered: RECOVERED_INITIAL,
        fatalities: FATALITIES_INITIAL,
    })
}
