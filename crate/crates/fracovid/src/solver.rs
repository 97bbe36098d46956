//! Adams–Bashforth–Moulton PECE solver for left-Caputo fractional initial
//! value problems on uniform grids.
//!
//! For `0 < alpha <= 1` the scheme advances
//!
//! ```text
//! C0_D^alpha y(t) = f(t, y),    y(t0) = y0
//! ```
//!
//! through its Volterra form. The predictor uses the fractional rectangle
//! weights `b_{j,n+1} = (h^alpha/alpha) ((n+1-j)^alpha - (n-j)^alpha)` and
//! the corrector the fractional trapezoid weights; the full history enters
//! every step (no short-memory truncation). At `alpha = 1` the method
//! reduces to the classical Adams–Bashforth predictor with an
//! Adams–Moulton (trapezoidal) corrector.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::special::gamma;

/// Caputo derivative order, restricted to `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionalOrder(f64);

impl FractionalOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha.is_finite() && alpha > 0.0 && alpha <= 1.0 {
            Ok(FractionalOrder(alpha))
        } else {
            Err(Error::InvalidParameter {
                name: "alpha",
                reason: format!("derivative order must satisfy 0 < alpha <= 1, got {alpha}"),
            })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Uniform time grid with nodes `t_j = t0 + j h`, `j = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    tf: f64,
    h: f64,
    n_steps: usize,
}

impl TimeGrid {
    /// Builds the grid, requiring `h` to divide `tf - t0` to within a
    /// relative slack of 1e-9 so the final node lands on `tf`.
    pub fn new(t0: f64, tf: f64, h: f64) -> Result<Self> {
        if !(t0.is_finite() && tf.is_finite() && h.is_finite()) {
            return Err(Error::InvalidGrid("non-finite bounds or step".into()));
        }
        if tf <= t0 {
            return Err(Error::InvalidGrid(format!("tf = {tf} must exceed t0 = {t0}")));
        }
        if h <= 0.0 {
            return Err(Error::InvalidGrid(format!("step h = {h} must be positive")));
        }
        let span = tf - t0;
        let n_steps = (span / h).round() as usize;
        if n_steps == 0 {
            return Err(Error::InvalidGrid(format!(
                "step h = {h} exceeds the span {span}"
            )));
        }
        if (n_steps as f64 * h - span).abs() > 1e-9 * span.max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "step h = {h} does not divide the span {span}"
            )));
        }
        Ok(TimeGrid { t0, tf, h, n_steps })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn tf(&self) -> f64 {
        self.tf
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of grid nodes, `n_steps + 1`.
    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }

    pub fn node(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.h
    }

    pub fn span(&self) -> f64 {
        self.tf - self.t0
    }

    /// Index of the grid node nearest to `t` (clamped to the grid).
    pub fn nearest_node(&self, t: f64) -> usize {
        let j = ((t - self.t0) / self.h).round();
        if j <= 0.0 {
            0
        } else {
            (j as usize).min(self.n_steps)
        }
    }
}

/// State samples on a [`TimeGrid`], one row per node.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    dim: usize,
    values: Vec<f64>, // row-major, n_nodes x dim
}

impl Trajectory {
    pub(crate) fn from_values(grid: TimeGrid, dim: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n_nodes() * dim);
        Trajectory { grid, dim, values }
    }

    /// Builds a trajectory from row-major samples, one row per grid node.
    pub fn from_rows(grid: TimeGrid, dim: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_nodes() * dim {
            return Err(Error::GridMismatch(format!(
                "{} samples for {} nodes of dimension {dim}",
                values.len(),
                grid.n_nodes()
            )));
        }
        Ok(Trajectory { grid, dim, values })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_nodes(&self) -> usize {
        self.grid.n_nodes()
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.dim..(j + 1) * self.dim]
    }

    /// All samples, row-major.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn column(&self, c: usize) -> impl Iterator<Item = f64> + '_ {
        assert!(c < self.dim);
        self.values.iter().skip(c).step_by(self.dim).copied()
    }

    /// Row at the node nearest to `t`; errors when `t` lies outside the
    /// grid by more than half a step.
    pub fn row_at(&self, t: f64) -> Result<&[f64]> {
        let half = 0.5 * self.grid.h();
        if t < self.grid.t0() - half || t > self.grid.tf() + half {
            return Err(Error::OutOfRange {
                t,
                t0: self.grid.t0(),
                tf: self.grid.tf(),
            });
        }
        Ok(self.row(self.grid.nearest_node(t)))
    }

    /// Same samples indexed in reverse time order on `grid`.
    pub(crate) fn time_reversed(&self, grid: TimeGrid) -> Trajectory {
        debug_assert_eq!(grid.n_nodes(), self.n_nodes());
        let n = self.n_nodes();
        let mut values = Vec::with_capacity(self.values.len());
        for j in (0..n).rev() {
            values.extend_from_slice(self.row(j));
        }
        Trajectory {
            grid,
            dim: self.dim,
            values,
        }
    }

    /// Writes `t,<names...>` CSV rows with full float precision.
    pub fn write_csv<W: Write>(&self, names: &[&str], mut w: W) -> io::Result<()> {
        assert_eq!(names.len(), self.dim, "one column name per component");
        write!(w, "t")?;
        for name in names {
            write!(w, ",{name}")?;
        }
        writeln!(w)?;
        for j in 0..self.n_nodes() {
            write!(w, "{}", self.grid.node(j))?;
            for v in self.row(j) {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Solves the left-Caputo IVP forward over `grid` with one
/// predict-evaluate-correct-evaluate pass per step.
///
/// `rhs(t, y, dydt)` writes the vector field into `dydt`. The corrector at
/// step `n` convolves the whole history, so the cost is quadratic in the
/// number of steps.
pub fn pece_solve<F>(
    mut rhs: F,
    y0: &[f64],
    order: FractionalOrder,
    grid: TimeGrid,
) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let alpha = order.value();
    let dim = y0.len();
    let n = grid.n_steps();
    let h = grid.h();

    if y0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "y0",
            reason: "initial state must be finite".into(),
        });
    }

    let h_alpha = h.powf(alpha);
    let predictor_scale = h_alpha / gamma(alpha + 1.0);
    let corrector_scale = h_alpha / gamma(alpha + 2.0);

    // k^alpha and k^(alpha+1) tables shared by every step's weights.
    let mut pow_a = vec![0.0; n + 2];
    let mut pow_a1 = vec![0.0; n + 2];
    for (k, (pa, pa1)) in pow_a.iter_mut().zip(pow_a1.iter_mut()).enumerate() {
        let kf = k as f64;
        *pa = kf.powf(alpha);
        *pa1 = kf.powf(alpha + 1.0);
    }

    let mut values = vec![0.0; (n + 1) * dim];
    values[..dim].copy_from_slice(y0);

    let mut f_node = vec![0.0; dim];
    let mut predictor = vec![0.0; dim];
    let mut corrector_sum = vec![0.0; dim];

    for step in 0..n {
        let next = step + 1;
        predictor.fill(0.0);
        corrector_sum.fill(0.0);

        for j in 0..=step {
            rhs(grid.node(j), &values[j * dim..(j + 1) * dim], &mut f_node);
            let k = step - j;
            let b = pow_a[k + 1] - pow_a[k];
            let a = if j == 0 {
                let nf = step as f64;
                pow_a1[step] - (nf - alpha) * pow_a[step + 1]
            } else {
                pow_a1[k + 2] - 2.0 * pow_a1[k + 1] + pow_a1[k]
            };
            for i in 0..dim {
                predictor[i] += b * f_node[i];
                corrector_sum[i] += a * f_node[i];
            }
        }

        let t_next = grid.node(next);
        for i in 0..dim {
            predictor[i] = y0[i] + predictor_scale * predictor[i];
        }
        rhs(t_next, &predictor, &mut f_node);

        let row = &mut values[next * dim..(next + 1) * dim];
        for i in 0..dim {
            row[i] = y0[i] + corrector_scale * (corrector_sum[i] + f_node[i]);
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::IntegrationDiverged {
                step: next,
                t: t_next,
            });
        }
    }

    Ok(Trajectory::from_values(grid, dim, values))
}

/// Solves a terminal value problem by the substitution `t' = tf - t`.
///
/// `rhs` is the vector field already written in reversed time: it receives
/// `t'` and the state, and the left-Caputo IVP in `t'` is integrated
/// forward from `terminal_value`. The returned trajectory is re-indexed to
/// original time, so its last row equals `terminal_value`.
pub fn pece_solve_reversed<F>(
    rhs: F,
    terminal_value: &[f64],
    order: FractionalOrder,
    grid: TimeGrid,
) -> Result<Trajectory>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let reversed_grid = TimeGrid::new(0.0, grid.span(), grid.h())?;
    let forward = pece_solve(rhs, terminal_value, order, reversed_grid)?;
    Ok(forward.time_reversed(grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::mittag_leffler;
    use approx::assert_relative_eq;
    use std::cell::Cell;

    fn order(a: f64) -> FractionalOrder {
        FractionalOrder::new(a).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(0.0, 1.0, 0.1).is_ok());
        assert!(TimeGrid::new(1.0, 1.0, 0.1).is_err());
        assert!(TimeGrid::new(0.0, 1.0, -0.1).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0.3).is_err()); // does not divide
        assert!(TimeGrid::new(0.0, 1.0, 2.0).is_err()); // zero steps
        let g = TimeGrid::new(0.0, 5.0, 0.01).unwrap();
        assert_eq!(g.n_steps(), 500);
        assert_relative_eq!(g.node(500), 5.0, max_relative = 1e-12);
    }

    #[test]
    fn classical_exponential_growth() {
        // D^1 y = y, y(0) = 1 -> y(1) = e.
        let grid = TimeGrid::new(0.0, 1.0, 0.01).unwrap();
        let traj = pece_solve(|_t, y, dy| dy[0] = y[0], &[1.0], order(1.0), grid).unwrap();
        let y1 = traj.row(traj.n_nodes() - 1)[0];
        assert!((y1 - std::f64::consts::E).abs() < 1e-3, "y(1) = {y1}");
    }

    #[test]
    fn zero_field_is_constant_for_every_order() {
        for &alpha in &[0.1, 0.4, 0.75, 0.99, 1.0] {
            let grid = TimeGrid::new(0.0, 2.0, 0.05).unwrap();
            let traj = pece_solve(|_t, _y, dy| dy.fill(0.0), &[3.25, -1.5], order(alpha), grid)
                .unwrap();
            for j in 0..traj.n_nodes() {
                assert_eq!(traj.row(j), &[3.25, -1.5], "alpha = {alpha}, node {j}");
            }
        }
    }

    #[test]
    fn fractional_relaxation_matches_mittag_leffler() {
        // D^0.99 y = -y, y(0) = 1  ->  y(t) = E_0.99(-t^0.99).
        let alpha = 0.99;
        let grid = TimeGrid::new(0.0, 1.0, 0.01).unwrap();
        let traj = pece_solve(|_t, y, dy| dy[0] = -y[0], &[1.0], order(alpha), grid).unwrap();
        let mut max_err = 0.0f64;
        for j in 0..traj.n_nodes() {
            let t = grid.node(j);
            let exact = mittag_leffler(alpha, -t.powf(alpha)).unwrap();
            max_err = max_err.max((traj.row(j)[0] - exact).abs());
        }
        assert!(max_err < 1e-4, "max error {max_err}");
    }

    #[test]
    fn classical_convergence_order_at_least_1_9() {
        // D^1 y = -y against exp(-t).
        let err_for = |h: f64| {
            let grid = TimeGrid::new(0.0, 2.0, h).unwrap();
            let traj = pece_solve(|_t, y, dy| dy[0] = -y[0], &[1.0], order(1.0), grid).unwrap();
            (0..traj.n_nodes())
                .map(|j| (traj.row(j)[0] - (-grid.node(j)).exp()).abs())
                .fold(0.0f64, f64::max)
        };
        let e1 = err_for(0.02);
        let e2 = err_for(0.01);
        let observed_order = (e1 / e2).log2();
        assert!(observed_order >= 1.9, "observed order {observed_order}");
    }

    #[test]
    fn fractional_convergence_order_at_least_1() {
        let alpha = 0.99;
        let err_for = |h: f64| {
            let grid = TimeGrid::new(0.0, 1.0, h).unwrap();
            let traj = pece_solve(|_t, y, dy| dy[0] = -y[0], &[1.0], order(alpha), grid).unwrap();
            (0..traj.n_nodes())
                .map(|j| {
                    let exact = mittag_leffler(alpha, -grid.node(j).powf(alpha)).unwrap();
                    (traj.row(j)[0] - exact).abs()
                })
                .fold(0.0f64, f64::max)
        };
        let ratio = err_for(0.02) / err_for(0.01);
        assert!(ratio >= 2.0, "halving h reduced the error only {ratio}x");
    }

    #[test]
    fn identical_inputs_give_bit_identical_trajectories() {
        let grid = TimeGrid::new(0.0, 3.0, 0.05).unwrap();
        let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = -0.7 * y[0] + 0.1 * y[1];
            dy[1] = 0.3 * y[0] - 0.2 * y[1] + (0.5 * t).sin();
        };
        let a = pece_solve(rhs, &[1.0, -2.0], order(0.9), grid).unwrap();
        let b = pece_solve(rhs, &[1.0, -2.0], order(0.9), grid).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn corrector_reads_the_full_history() {
        // Each step revisits every prior node, so rhs invocations grow
        // quadratically: sum_{s=0}^{n-1} (s + 2) = n(n+3)/2.
        let count_calls = |n: usize| {
            let calls = Cell::new(0usize);
            let grid = TimeGrid::new(0.0, n as f64 * 0.05, 0.05).unwrap();
            pece_solve(
                |_t, y, dy| {
                    calls.set(calls.get() + 1);
                    dy[0] = -y[0];
                },
                &[1.0],
                order(0.8),
                grid,
            )
            .unwrap();
            calls.get()
        };
        let expected = |n: usize| n * (n + 3) / 2;
        assert_eq!(count_calls(40), expected(40));
        assert_eq!(count_calls(80), expected(80));
        let ratio = count_calls(80) as f64 / count_calls(40) as f64;
        assert!(ratio > 3.5 && ratio < 4.5, "growth not quadratic: {ratio}");
    }

    #[test]
    fn divergence_reports_failing_step() {
        let grid = TimeGrid::new(0.0, 1.0, 0.1).unwrap();
        let result = pece_solve(
            |_t, y, dy| dy[0] = y[0] * y[0] * 1e250,
            &[1e200],
            order(1.0),
            grid,
        );
        match result {
            Err(Error::IntegrationDiverged { step, .. }) => assert_eq!(step, 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    // Classical RK4 used as the backward-integration oracle.
    fn rk4<F: Fn(f64, &[f64], &mut [f64])>(
        rhs: F,
        y0: &[f64],
        t0: f64,
        tf: f64,
        n: usize,
    ) -> Vec<Vec<f64>> {
        let dim = y0.len();
        let h = (tf - t0) / n as f64;
        let mut out = Vec::with_capacity(n + 1);
        let mut y = y0.to_vec();
        out.push(y.clone());
        let (mut k1, mut k2, mut k3, mut k4) = (
            vec![0.0; dim],
            vec![0.0; dim],
            vec![0.0; dim],
            vec![0.0; dim],
        );
        let mut tmp = vec![0.0; dim];
        for s in 0..n {
            let t = t0 + s as f64 * h;
            rhs(t, &y, &mut k1);
            for i in 0..dim {
                tmp[i] = y[i] + 0.5 * h * k1[i];
            }
            rhs(t + 0.5 * h, &tmp, &mut k2);
            for i in 0..dim {
                tmp[i] = y[i] + 0.5 * h * k2[i];
            }
            rhs(t + 0.5 * h, &tmp, &mut k3);
            for i in 0..dim {
                tmp[i] = y[i] + h * k3[i];
            }
            rhs(t + h, &tmp, &mut k4);
            for i in 0..dim {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            out.push(y.clone());
        }
        out
    }

    #[test]
    fn reversed_zero_field_stays_zero() {
        let grid = TimeGrid::new(0.0, 4.0, 0.1).unwrap();
        let traj =
            pece_solve_reversed(|_t, _y, dy| dy.fill(0.0), &[0.0, 0.0], order(0.9), grid).unwrap();
        for j in 0..traj.n_nodes() {
            assert_eq!(traj.row(j), &[0.0, 0.0]);
        }
        assert_eq!(traj.row(traj.n_nodes() - 1), &[0.0, 0.0]);
    }

    #[test]
    fn reversed_linear_system_matches_classical_backward_solve() {
        // In reversed time: dz/dt' = A z. The equivalent original-time
        // problem integrates d xi/dt = -A xi backward from xi(tf).
        let a = [[-0.5, 0.2], [0.1, -0.3]];
        let rhs_rev = move |_t: f64, z: &[f64], dz: &mut [f64]| {
            dz[0] = a[0][0] * z[0] + a[0][1] * z[1];
            dz[1] = a[1][0] * z[0] + a[1][1] * z[1];
        };
        let grid = TimeGrid::new(0.0, 2.0, 0.001).unwrap();
        let terminal = [1.0, -0.5];
        let traj = pece_solve_reversed(rhs_rev, &terminal, order(1.0), grid).unwrap();

        // Oracle: RK4 forward in t' at a finer step, then re-indexed.
        let oracle = rk4(rhs_rev, &terminal, 0.0, 2.0, 20000);
        let n = traj.n_nodes() - 1;
        let mut max_err = 0.0f64;
        for j in 0..=n {
            let z = &oracle[(n - j) * 10];
            for i in 0..2 {
                max_err = max_err.max((traj.row(j)[i] - z[i]).abs());
            }
        }
        assert!(max_err < 1e-6, "max error vs classical backward solve {max_err}");
        assert_eq!(traj.row(n), &terminal);
    }

    #[test]
    fn reversing_twice_is_the_identity() {
        let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = -y[0] + (t * 0.7).cos();
            dy[1] = 0.2 * y[0] - 0.1 * y[1];
        };
        let grid = TimeGrid::new(0.0, 1.5, 0.05).unwrap();
        let v = [0.8, -0.2];
        let reversed = pece_solve_reversed(rhs, &v, order(0.85), grid).unwrap();
        let forward = pece_solve(rhs, &v, order(0.85), grid).unwrap();
        let n = forward.n_nodes();
        for j in 0..n {
            for i in 0..2 {
                assert!(
                    (reversed.row(n - 1 - j)[i] - forward.row(j)[i]).abs() < 1e-12,
                    "row {j} differs"
                );
            }
        }
    }

    #[test]
    fn csv_round_trips_header_and_first_row() {
        let grid = TimeGrid::new(0.0, 0.2, 0.1).unwrap();
        let traj = pece_solve(|_t, _y, dy| dy.fill(0.0), &[1.5, 2.5], order(1.0), grid).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&["x", "y"], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,x,y"));
        assert_eq!(lines.next(), Some("0,1.5,2.5"));
    }
}
