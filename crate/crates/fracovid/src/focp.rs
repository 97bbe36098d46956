//! Fractional optimal control of the epidemic: vaccination `v(t)` and
//! preventive measures `m(t)`.
//!
//! The running cost is `k1 I + k2 P + k3 v^2 + k4 m^2`. Pontryagin's
//! principle yields an adjoint system that, written in reversed time
//! `t' = tf - t`, is itself a left-Caputo initial value problem with zero
//! initial data (the transversality conditions). The sweep alternates a
//! forward PECE solve of the state system, a backward PECE solve of the
//! adjoint system, and a relaxed update of the projected optimal controls
//! until all variables stop changing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CompartmentState, EffectiveRates, ModelParams, N_COMPARTMENTS};
use crate::solver::{pece_solve, pece_solve_reversed, FractionalOrder, TimeGrid, Trajectory};

pub const N_ADJOINTS: usize = 8;

/// Co-state labels used by the sweep CSV.
pub const ADJOINT_NAMES: [&str; N_ADJOINTS] =
    ["xi1", "xi2", "xi3", "xi4", "xi5", "xi6", "xi7", "xi8"];

/// Weights of the cost functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostWeights {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights {
            k1: 1.0,
            k2: 5.0,
            k3: 1.0,
            k4: 10.0,
        }
    }
}

impl CostWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("k1", self.k1),
            ("k2", self.k2),
            ("k3", self.k3),
            ("k4", self.k4),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "weights",
                    reason: format!("{name} must be finite and non-negative, got {v}"),
                });
            }
        }
        Ok(())
    }
}

/// Box bounds of the admissible control set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlBounds {
    /// Maximum effective daily vaccination rate (fraction of S per day).
    pub v_max: f64,
    /// Maximum contact-reduction level.
    pub m_max: f64,
}

impl ControlBounds {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_max >= 0.0 && self.v_max.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "v_max",
                reason: format!("must be finite and non-negative, got {}", self.v_max),
            });
        }
        if !(0.0..=1.0).contains(&self.m_max) {
            return Err(Error::InvalidParameter {
                name: "m_max",
                reason: format!("must lie in [0, 1], got {}", self.m_max),
            });
        }
        Ok(())
    }
}

/// Discretized control functions on a solver grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSchedule {
    grid: TimeGrid,
    pub v: Vec<f64>,
    pub m: Vec<f64>,
}

impl ControlSchedule {
    pub fn zeros(grid: TimeGrid) -> Self {
        let n = grid.n_nodes();
        ControlSchedule {
            grid,
            v: vec![0.0; n],
            m: vec![0.0; n],
        }
    }

    pub fn new(grid: TimeGrid, v: Vec<f64>, m: Vec<f64>) -> Result<Self> {
        if v.len() != grid.n_nodes() || m.len() != grid.n_nodes() {
            return Err(Error::GridMismatch(format!(
                "control vectors of length {}/{} on a grid with {} nodes",
                v.len(),
                m.len(),
                grid.n_nodes()
            )));
        }
        Ok(ControlSchedule { grid, v, m })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Node-wise values at the grid node nearest to `t`.
    pub fn at(&self, t: f64) -> (f64, f64) {
        let j = self.grid.nearest_node(t);
        (self.v[j], self.m[j])
    }
}

/// Which controls the sweep is allowed to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    #[default]
    BothControls,
    /// Vaccination only (`m` forced to zero).
    OnlyVaccination,
    /// Preventive measures only (`v` forced to zero).
    OnlyPreventive,
}

impl Scenario {
    fn effective_bounds(self, bounds: ControlBounds) -> ControlBounds {
        match self {
            Scenario::BothControls => bounds,
            Scenario::OnlyVaccination => ControlBounds {
                m_max: 0.0,
                ..bounds
            },
            Scenario::OnlyPreventive => ControlBounds {
                v_max: 0.0,
                ..bounds
            },
        }
    }
}

/// Sweep iteration settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub bounds: ControlBounds,
    pub weights: CostWeights,
    /// Convex-combination weight on the newly characterized controls.
    pub relaxation: f64,
    /// Relative sup-norm change below which the sweep stops.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.bounds.validate()?;
        self.weights.validate()?;
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "relaxation",
                reason: format!("must lie in (0, 1], got {}", self.relaxation),
            });
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter {
                name: "tolerance",
                reason: format!("must be positive, got {}", self.tolerance),
            });
        }
        Ok(())
    }
}

/// Converged (or best-effort) sweep output.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub states: Trajectory,
    pub adjoints: Trajectory,
    pub controls: ControlSchedule,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest relative change over the final iteration.
    pub final_change: f64,
}

/// Hamiltonian of the control problem: running cost plus the co-states
/// dotted with the controlled right-hand sides.
pub fn hamiltonian(
    y: &[f64],
    xi: &[f64],
    v: f64,
    m: f64,
    rates: &EffectiveRates,
    weights: &CostWeights,
) -> f64 {
    let mut dydt = [0.0; N_COMPARTMENTS];
    rates.rhs_controlled(y, v, m, &mut dydt);
    let running = weights.k1 * y[2] + weights.k2 * y[3] + weights.k3 * v * v + weights.k4 * m * m;
    running + xi.iter().zip(dydt.iter()).map(|(a, b)| a * b).sum::<f64>()
}

/// Adjoint right-hand sides in reversed time `t' = tf - t`.
///
/// The frozen state and controls must be supplied at the matching original
/// time `t`. Rows 5, 7, 8 (`xi5`, `xi7`, `xi8`) are identically zero.
#[allow(clippy::too_many_arguments)]
pub fn adjoint_rhs(
    xi: &[f64],
    susceptible: f64,
    infectious: f64,
    super_spreader: f64,
    hospitalized: f64,
    v: f64,
    m: f64,
    rates: &EffectiveRates,
    weights: &CostWeights,
    dxi: &mut [f64],
) {
    let n = rates.population;
    let foi = (m - 1.0)
        * (rates.beta * (infectious + rates.l * hospitalized)
            + rates.beta_prime * super_spreader)
        / n;
    let xi_gap = xi[0] - xi[1];
    let out_ip = rates.gamma_a + rates.gamma_i;

    dxi[0] = foi * xi_gap + (xi[6] - xi[0]) * v;
    dxi[1] = rates.kappa
        * (-xi[1] + xi[2] * rates.rho1 + xi[3] * rates.rho2
            - xi[4] * (rates.rho1 + rates.rho2 - 1.0));
    dxi[2] = weights.k1 - out_ip * xi[2]
        + rates.gamma_a * xi[5]
        + rates.gamma_i * xi[6]
        + rates.delta_i * (xi[7] - xi[2])
        + rates.beta * (m - 1.0) * xi_gap * susceptible / n;
    dxi[3] = weights.k2 - out_ip * xi[3]
        + rates.gamma_a * xi[5]
        + rates.gamma_i * xi[6]
        + rates.delta_p * (xi[7] - xi[3])
        + rates.beta_prime * (m - 1.0) * xi_gap * susceptible / n;
    dxi[4] = 0.0;
    // The hospital row follows the same gradient pattern as the I and P
    // rows: the transmission term is + l beta (m-1)(xi1 - xi2) S / N,
    // matching dH/dH of the Hamiltonian above.
    dxi[5] = rates.gamma_r * (xi[6] - xi[5])
        + rates.delta_h * (xi[7] - xi[5])
        + rates.l * rates.beta * (m - 1.0) * xi_gap * susceptible / n;
    dxi[6] = 0.0;
    dxi[7] = 0.0;
}

/// Adjoint right-hand sides at reversed time `t_prime`, reading the frozen
/// state and control trajectories at `t = tf - t_prime` by nearest-node
/// lookup. Errors when the time falls outside the stored range.
pub fn adjoint_rhs_at(
    t_prime: f64,
    xi: &[f64],
    states: &Trajectory,
    controls: &ControlSchedule,
    rates: &EffectiveRates,
    weights: &CostWeights,
    dxi: &mut [f64],
) -> Result<()> {
    let t = states.grid().tf() - t_prime;
    let y = states.row_at(t)?;
    let (v, m) = controls.at(t);
    adjoint_rhs(xi, y[0], y[2], y[3], y[5], v, m, rates, weights, dxi);
    Ok(())
}

/// Pointwise control characterization with projection onto the box bounds.
pub fn optimal_controls(
    y: &[f64],
    xi: &[f64],
    rates: &EffectiveRates,
    weights: &CostWeights,
    bounds: ControlBounds,
) -> (f64, f64) {
    let v = ((xi[0] - xi[6]) * y[0] / (2.0 * weights.k3)).clamp(0.0, bounds.v_max);
    let m = ((rates.beta * (y[2] + rates.l * y[5]) + rates.beta_prime * y[3])
        * (xi[1] - xi[0])
        * y[0]
        / (2.0 * weights.k4 * rates.population))
        .clamp(0.0, bounds.m_max);
    (v, m)
}

/// Trapezoidal quadrature of the running cost over the horizon.
pub fn cost_functional(
    states: &Trajectory,
    controls: &ControlSchedule,
    weights: &CostWeights,
) -> Result<f64> {
    if states.grid() != controls.grid() {
        return Err(Error::GridMismatch(
            "state trajectory and control schedule use different grids".into(),
        ));
    }
    let n = states.n_nodes();
    let h = states.grid().h();
    let mut total = 0.0;
    for j in 0..n {
        let row = states.row(j);
        let integrand = weights.k1 * row[2]
            + weights.k2 * row[3]
            + weights.k3 * controls.v[j] * controls.v[j]
            + weights.k4 * controls.m[j] * controls.m[j];
        let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
        total += w * integrand;
    }
    Ok(total * h)
}

fn relative_change(new: &[f64], old: &[f64]) -> f64 {
    let mut diff = 0.0f64;
    let mut scale = 0.0f64;
    for (a, b) in new.iter().zip(old) {
        diff = diff.max((a - b).abs());
        scale = scale.max(a.abs());
    }
    diff / scale.max(1e-12)
}

fn solve_states(
    rates: &EffectiveRates,
    order: FractionalOrder,
    y0: &[f64; N_COMPARTMENTS],
    controls: &ControlSchedule,
    grid: TimeGrid,
) -> Result<Trajectory> {
    pece_solve(
        |t, y, dydt| {
            let (v, m) = controls.at(t);
            rates.rhs_controlled(y, v, m, dydt);
        },
        y0,
        order,
        grid,
    )
}

fn solve_adjoints(
    rates: &EffectiveRates,
    order: FractionalOrder,
    states: &Trajectory,
    controls: &ControlSchedule,
    weights: &CostWeights,
    grid: TimeGrid,
) -> Result<Trajectory> {
    let tf = grid.tf();
    pece_solve_reversed(
        |t_prime, xi, dxi| {
            let t = tf - t_prime;
            let j = grid.nearest_node(t);
            let y = states.row(j);
            adjoint_rhs(
                xi,
                y[0],
                y[2],
                y[3],
                y[5],
                controls.v[j],
                controls.m[j],
                rates,
                weights,
                dxi,
            );
        },
        &[0.0; N_ADJOINTS],
        order,
        grid,
    )
}

/// Forward-backward sweep from the transversality conditions.
///
/// Starting from `initial_guess` (zero controls when `None`), iterates the
/// forward state solve, the backward adjoint solve, the pointwise control
/// characterization, and the relaxed update until the largest relative
/// change across states, adjoints, and controls drops below the tolerance.
/// A run that exhausts `max_iterations` is returned with
/// `converged = false` rather than as an error.
pub fn forward_backward_sweep(
    params: &ModelParams,
    order: FractionalOrder,
    y0: &CompartmentState,
    grid: TimeGrid,
    config: &SweepConfig,
    initial_guess: Option<ControlSchedule>,
    scenario: Scenario,
) -> Result<SweepResult> {
    config.validate()?;
    let bounds = scenario.effective_bounds(config.bounds);
    let rates = params.alpha_rates(order);
    let y0 = y0.to_array();
    let omega = config.relaxation;

    let mut controls = match initial_guess {
        Some(guess) => {
            if guess.grid() != &grid {
                return Err(Error::GridMismatch(
                    "initial control guess does not match the sweep grid".into(),
                ));
            }
            let mut guess = guess;
            for v in &mut guess.v {
                *v = v.clamp(0.0, bounds.v_max);
            }
            for m in &mut guess.m {
                *m = m.clamp(0.0, bounds.m_max);
            }
            guess
        }
        None => ControlSchedule::zeros(grid),
    };

    let mut states: Option<Trajectory> = None;
    let mut adjoints: Option<Trajectory> = None;
    let mut iterations = 0;
    let mut converged = false;
    let mut final_change = f64::INFINITY;

    while iterations < config.max_iterations {
        iterations += 1;

        let new_states = solve_states(&rates, order, &y0, &controls, grid)?;
        let new_adjoints =
            solve_adjoints(&rates, order, &new_states, &controls, &config.weights, grid)?;

        let mut new_v = Vec::with_capacity(grid.n_nodes());
        let mut new_m = Vec::with_capacity(grid.n_nodes());
        for j in 0..grid.n_nodes() {
            let (v_star, m_star) = optimal_controls(
                new_states.row(j),
                new_adjoints.row(j),
                &rates,
                &config.weights,
                bounds,
            );
            // Relaxed update; the convex combination of two admissible
            // values stays admissible, the final clamp guards rounding.
            new_v.push(
                (omega * v_star + (1.0 - omega) * controls.v[j]).clamp(0.0, bounds.v_max),
            );
            new_m.push(
                (omega * m_star + (1.0 - omega) * controls.m[j]).clamp(0.0, bounds.m_max),
            );
        }

        let mut change = relative_change(&new_v, &controls.v)
            .max(relative_change(&new_m, &controls.m));
        if let (Some(prev_states), Some(prev_adjoints)) = (&states, &adjoints) {
            change = change
                .max(relative_change(new_states.values(), prev_states.values()))
                .max(relative_change(new_adjoints.values(), prev_adjoints.values()));
        }

        controls = ControlSchedule::new(grid, new_v, new_m)?;
        states = Some(new_states);
        adjoints = Some(new_adjoints);
        final_change = change;

        if change <= config.tolerance {
            converged = true;
            break;
        }
    }

    // Re-solve both systems under the final controls so the returned
    // trajectories are consistent with them.
    let states = solve_states(&rates, order, &y0, &controls, grid)?;
    let adjoints = solve_adjoints(&rates, order, &states, &controls, &config.weights, grid)?;
    let cost = cost_functional(&states, &controls, &config.weights)?;

    log::debug!(
        "sweep finished: {iterations} iterations, converged = {converged}, residual = {final_change:.3e}, J = {cost:.6e}"
    );

    Ok(SweepResult {
        states,
        adjoints,
        controls,
        cost,
        iterations,
        converged,
        final_change,
    })
}
