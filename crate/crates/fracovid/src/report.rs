//! Post-optimal cost-effectiveness measures.
//!
//! With `i*(t) = I*(t) + P*(t)` the controlled infectious pool and
//! `i(0)` its initial value:
//!
//! - efficacy `E_f(t) = 1 - i*(t)/i(0)`
//! - averted cases `AV = tf * i(0) - integral of i*`
//! - effectiveness `F_bar = AV / (i(0) * tf)`
//! - total cost `TC = integral of C1 v S + C2 m i*`
//! - `ACER = TC / AV`
//!
//! All integrals are trapezoidal on the solver grid. Raw values carry
//! individual-day units; the report also emits the same measures divided by
//! a configurable reporting scale, since the summary-table convention those
//! magnitudes are usually quoted in is not derivable from the dynamics.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::focp::ControlSchedule;
use crate::solver::Trajectory;

fn infectious_pool(states: &Trajectory, j: usize) -> f64 {
    let row = states.row(j);
    row[2] + row[3]
}

fn trapezoid<F: Fn(usize) -> f64>(n_nodes: usize, h: f64, f: F) -> f64 {
    let mut total = 0.0;
    for j in 0..n_nodes {
        let w = if j == 0 || j == n_nodes - 1 { 0.5 } else { 1.0 };
        total += w * f(j);
    }
    total * h
}

/// Efficacy time series `(t, 1 - i*(t)/i(0))`.
pub fn efficacy(states: &Trajectory, i0: f64) -> Result<Vec<(f64, f64)>> {
    if i0 <= 0.0 {
        return Err(Error::UndefinedEfficacy);
    }
    let grid = states.grid();
    Ok((0..states.n_nodes())
        .map(|j| (grid.node(j), 1.0 - infectious_pool(states, j) / i0))
        .collect())
}

/// Total cases averted over the horizon: `tf * i(0) - integral of i*`.
pub fn averted_cases(states: &Trajectory, i0: f64) -> f64 {
    let grid = states.grid();
    let integral = trapezoid(states.n_nodes(), grid.h(), |j| infectious_pool(states, j));
    grid.span() * i0 - integral
}

/// Proportion of cases averted: `AV / (i(0) * tf)`.
pub fn effectiveness(states: &Trajectory, i0: f64) -> f64 {
    averted_cases(states, i0) / (i0 * states.grid().span())
}

/// Intervention cost `integral of C1 v(t) S(t) + C2 m(t) i*(t)`.
pub fn total_cost(
    states: &Trajectory,
    controls: &ControlSchedule,
    c1: f64,
    c2: f64,
) -> Result<f64> {
    if states.grid() != controls.grid() {
        return Err(Error::GridMismatch(
            "state trajectory and control schedule use different grids".into(),
        ));
    }
    let h = states.grid().h();
    Ok(trapezoid(states.n_nodes(), h, |j| {
        c1 * controls.v[j] * states.row(j)[0] + c2 * controls.m[j] * infectious_pool(states, j)
    }))
}

/// Average cost-effectiveness ratio `TC / AV`.
pub fn acer(tc: f64, av: f64) -> Result<f64> {
    if av == 0.0 {
        return Err(Error::AcerUndefined);
    }
    Ok(tc / av)
}

/// Summary of one controlled run.
#[derive(Debug, Clone)]
pub struct EffectivenessReport {
    pub alpha: f64,
    /// Raw averted cases (individual-days).
    pub averted: f64,
    /// Raw intervention cost.
    pub total_cost: f64,
    /// `TC / AV`; `None` when no cases were averted.
    pub acer: Option<f64>,
    /// Proportion of cases averted (dimensionless).
    pub effectiveness: f64,
    pub efficacy_curve: Vec<(f64, f64)>,
    /// Divisor applied to AV and TC for the scaled columns.
    pub reporting_scale: f64,
}

impl EffectivenessReport {
    pub fn build(
        alpha: f64,
        states: &Trajectory,
        controls: &ControlSchedule,
        c1: f64,
        c2: f64,
        reporting_scale: f64,
    ) -> Result<Self> {
        let i0 = infectious_pool(states, 0);
        if i0 <= 0.0 {
            return Err(Error::UndefinedEfficacy);
        }
        let averted = averted_cases(states, i0);
        let cost = total_cost(states, controls, c1, c2)?;
        Ok(EffectivenessReport {
            alpha,
            averted,
            total_cost: cost,
            acer: acer(cost, averted).ok(),
            effectiveness: effectiveness(states, i0),
            efficacy_curve: efficacy(states, i0)?,
            reporting_scale,
        })
    }

    pub fn averted_scaled(&self) -> f64 {
        self.averted / self.reporting_scale
    }

    pub fn total_cost_scaled(&self) -> f64 {
        self.total_cost / self.reporting_scale
    }

    /// One `alpha,AV,TC,ACER,F_bar` CSV row (scaled units).
    pub fn write_csv_row<W: Write>(&self, mut w: W) -> io::Result<()> {
        match self.acer {
            Some(acer) => writeln!(
                w,
                "{},{},{},{},{}",
                self.alpha,
                self.averted_scaled(),
                self.total_cost_scaled(),
                acer,
                self.effectiveness
            ),
            None => writeln!(
                w,
                "{},{},{},,{}",
                self.alpha,
                self.averted_scaled(),
                self.total_cost_scaled(),
                self.effectiveness
            ),
        }
    }
}
