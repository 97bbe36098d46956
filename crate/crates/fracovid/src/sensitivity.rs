//! Normalized forward sensitivity indices of the basic reproduction number.
//!
//! The index of a parameter `p` is the elasticity
//! `Upsilon_p = (dR0/dp) * (p / R0)`, computed by central finite
//! differences with a relative step of 1e-6 on `p`. Parameters that do not
//! appear in the reproduction-number formula (`kappa`, `population`) report
//! an index of exactly zero.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::model::{basic_reproduction_number, ModelParams, ParamName};
use crate::solver::FractionalOrder;

const RELATIVE_STEP: f64 = 1e-6;
const ALPHA_STEP: f64 = 1e-6;

/// Sensitivity indices of one parameter over a grid of derivative orders.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    pub parameter: String,
    pub alpha_grid: Vec<f64>,
    pub indices: Vec<f64>,
}

impl SensitivityReport {
    /// Writes `alpha,index` CSV rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "alpha,index")?;
        for (alpha, index) in self.alpha_grid.iter().zip(&self.indices) {
            writeln!(w, "{alpha},{index}")?;
        }
        Ok(())
    }
}

/// Elasticity of R0 with respect to the parameter `p` at the given order.
pub fn sensitivity_index(
    p: ParamName,
    params: &ModelParams,
    order: FractionalOrder,
) -> Result<f64> {
    if !p.in_r0_support() {
        return Ok(0.0);
    }
    let r0 = basic_reproduction_number(params, order);
    if r0 == 0.0 {
        return Err(Error::UndefinedIndex);
    }
    let value = params.get(p);
    if value == 0.0 {
        // The elasticity carries a factor of p itself.
        return Ok(0.0);
    }
    let step = RELATIVE_STEP * value;
    let mut upper = *params;
    upper.set(p, value + step);
    let mut lower = *params;
    lower.set(p, value - step);
    let derivative = (basic_reproduction_number(&upper, order)
        - basic_reproduction_number(&lower, order))
        / (2.0 * step);
    Ok(derivative * value / r0)
}

/// [`sensitivity_index`] evaluated elementwise over an alpha grid.
pub fn sensitivity_vs_alpha(
    p: ParamName,
    params: &ModelParams,
    alpha_grid: &[f64],
) -> Result<SensitivityReport> {
    let mut indices = Vec::with_capacity(alpha_grid.len());
    for &alpha in alpha_grid {
        let order = FractionalOrder::new(alpha)?;
        indices.push(sensitivity_index(p, params, order)?);
    }
    Ok(SensitivityReport {
        parameter: p.as_str().to_string(),
        alpha_grid: alpha_grid.to_vec(),
        indices,
    })
}

/// Elasticity of R0 with respect to the derivative order itself.
///
/// Central difference with an absolute step of 1e-6; at the upper boundary
/// `alpha = 1` a second-order one-sided backward stencil is used instead,
/// since orders above one are outside the domain.
pub fn r0_alpha_sensitivity(params: &ModelParams, order: FractionalOrder) -> Result<f64> {
    let alpha = order.value();
    let r0 = basic_reproduction_number(params, order);
    if r0 == 0.0 {
        return Err(Error::UndefinedIndex);
    }
    let at = |a: f64| -> Result<f64> {
        Ok(basic_reproduction_number(params, FractionalOrder::new(a)?))
    };
    let derivative = if alpha + ALPHA_STEP <= 1.0 {
        (at(alpha + ALPHA_STEP)? - at(alpha - ALPHA_STEP)?) / (2.0 * ALPHA_STEP)
    } else {
        // Grouped as differences so an alpha-independent R0 cancels exactly.
        let back1 = at(alpha - ALPHA_STEP)?;
        let back2 = at(alpha - 2.0 * ALPHA_STEP)?;
        (3.0 * (r0 - back1) - (back1 - back2)) / (2.0 * ALPHA_STEP)
    };
    Ok(derivative * alpha / r0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn order(a: f64) -> FractionalOrder {
        FractionalOrder::new(a).unwrap()
    }

    fn alpha_grid() -> Vec<f64> {
        (0..=10).map(|k| 0.5 + 0.05 * k as f64).collect()
    }

    #[test]
    fn kappa_and_population_report_exactly_zero() {
        let params = ModelParams::default();
        for &alpha in &[0.5, 0.75, 1.0] {
            assert_eq!(
                sensitivity_index(ParamName::Kappa, &params, order(alpha)).unwrap(),
                0.0
            );
            assert_eq!(
                sensitivity_index(ParamName::Population, &params, order(alpha)).unwrap(),
                0.0
            );
        }
        let report =
            sensitivity_vs_alpha(ParamName::Kappa, &ModelParams::default(), &alpha_grid())
                .unwrap();
        assert!(report.indices.iter().all(|&u| u == 0.0));
    }

    #[test]
    fn beta_elasticity_is_alpha_when_rho2_vanishes() {
        // With rho2 = 0, R0 is proportional to beta^alpha, so the
        // elasticity equals alpha in closed form.
        let mut params = ModelParams::default();
        params.rho2 = 0.0;
        for alpha in alpha_grid() {
            let ups = sensitivity_index(ParamName::Beta, &params, order(alpha)).unwrap();
            assert!((ups - alpha).abs() < 1e-8, "alpha {alpha}: got {ups}");
        }
        // Scale invariance of the elasticity: rescaling beta leaves it at alpha.
        for &beta in &[0.255, 2.55, 25.5] {
            let mut scaled = params;
            scaled.beta = beta;
            let ups = sensitivity_index(ParamName::Beta, &scaled, order(0.8)).unwrap();
            assert!((ups - 0.8).abs() < 1e-8);
        }
    }

    /// Richardson-extrapolated central differences, used as the oracle for
    /// the frozen index values below.
    fn richardson_index(p: ParamName, params: &ModelParams, alpha: f64) -> f64 {
        let r0 = basic_reproduction_number(params, order(alpha));
        let value = params.get(p);
        let d_at = |rel: f64| {
            let step = rel * value;
            let mut hi = *params;
            hi.set(p, value + step);
            let mut lo = *params;
            lo.set(p, value - step);
            (basic_reproduction_number(&hi, order(alpha))
                - basic_reproduction_number(&lo, order(alpha)))
                / (2.0 * step)
        };
        let d1 = d_at(1e-4);
        let d2 = d_at(5e-5);
        (d2 + (d2 - d1) / 3.0) * value / r0
    }

    #[test]
    fn table_values_match_the_richardson_oracle() {
        let params = ModelParams::default();
        let named = [
            (ParamName::Beta, 0.9986050665648844),
            (ParamName::Rho1, 0.9973504745928089),
            (ParamName::L, 0.7289179357758660),
            (ParamName::GammaI, -0.2154006243496358),
            (ParamName::GammaR, -0.6706045009137967),
        ];
        for (p, frozen) in named {
            let fd = sensitivity_index(p, &params, order(1.0)).unwrap();
            let oracle = richardson_index(p, &params, 1.0);
            assert_relative_eq!(fd, oracle, max_relative = 1e-7);
            assert_relative_eq!(fd, frozen, max_relative = 1e-7);
        }
    }

    #[test]
    fn beta_rho1_l_are_the_leading_positive_indices_at_alpha_one() {
        let params = ModelParams::default();
        let mut indexed: Vec<(ParamName, f64)> = ParamName::ALL
            .iter()
            .map(|&p| (p, sensitivity_index(p, &params, order(1.0)).unwrap()))
            .collect();
        indexed.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        let top: Vec<ParamName> = indexed.iter().take(3).map(|&(p, _)| p).collect();
        assert!(top.contains(&ParamName::Beta), "top three: {top:?}");
        assert!(top.contains(&ParamName::Rho1), "top three: {top:?}");
        assert!(top.contains(&ParamName::L), "top three: {top:?}");
        assert!(indexed[0].1 > 0.0 && indexed[2].1 > 0.0);
    }

    #[test]
    fn beta_magnitude_shrinks_with_the_order() {
        let params = ModelParams::default();
        let report = sensitivity_vs_alpha(ParamName::Beta, &params, &alpha_grid()).unwrap();
        assert_eq!(report.indices.len(), report.alpha_grid.len());
        for pair in report.indices.windows(2) {
            assert!(
                pair[0].abs() <= pair[1].abs() + 1e-12,
                "|Upsilon_beta| not shrinking toward small alpha: {pair:?}"
            );
        }
    }

    #[test]
    fn alpha_elasticity_vanishes_for_unit_rates() {
        // Every rate at 1 makes x^alpha = 1, so R0 does not depend on the
        // order at all.
        let mut params = ModelParams::default();
        for p in [
            ParamName::Beta,
            ParamName::BetaPrime,
            ParamName::Kappa,
            ParamName::GammaA,
            ParamName::GammaI,
            ParamName::GammaR,
            ParamName::DeltaI,
            ParamName::DeltaP,
            ParamName::DeltaH,
        ] {
            params.set(p, 1.0);
        }
        for &alpha in &[0.5, 0.9, 1.0] {
            assert_eq!(r0_alpha_sensitivity(&params, order(alpha)).unwrap(), 0.0);
        }
    }

    #[test]
    fn alpha_elasticity_matches_oracle_and_decreases_with_alpha() {
        let params = ModelParams::default();
        // Frozen 40-digit reference at alpha = 1 (one-sided derivative).
        let at_one = r0_alpha_sensitivity(&params, order(1.0)).unwrap();
        assert_relative_eq!(at_one, 1.9773832546056617, max_relative = 1e-6);
        let mut previous = f64::NEG_INFINITY;
        for alpha in alpha_grid() {
            let ups = r0_alpha_sensitivity(&params, order(alpha)).unwrap();
            assert!(
                ups >= previous - 1e-9,
                "Upsilon_alpha not increasing with alpha at {alpha}"
            );
            previous = ups;
        }
    }

    #[test]
    fn undefined_index_when_r0_is_zero() {
        let mut params = ModelParams::default();
        params.rho1 = 0.0;
        params.rho2 = 0.0;
        assert!(matches!(
            sensitivity_index(ParamName::Beta, &params, order(0.9)),
            Err(Error::UndefinedIndex)
        ));
        assert!(matches!(
            r0_alpha_sensitivity(&params, order(0.9)),
            Err(Error::UndefinedIndex)
        ));
    }

    #[test]
    fn report_serializes_to_alpha_index_csv() {
        let report = SensitivityReport {
            parameter: "beta".into(),
            alpha_grid: vec![0.5, 1.0],
            indices: vec![0.25, 1.0],
        };
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "alpha,index\n0.5,0.25\n1,1\n"
        );
    }
}
