//! Four-state rate-model predictions for Lindblad results.

use anyhow::{bail, Context, Result};
use autostab_core::model::SidebandColor;
use autostab_core::rates::{refilling_rate, steady_fidelity};
use autostab_core::units::{deg_to_rad, mhz_to_angular};
use serde::Serialize;

use crate::config::{BellDrives, Noise, Parity, Scenario, ScenarioKind};
use crate::runner::Table;

/// Rate-model steady-state fidelity of Ψ_θ. The refilling rate averages the
/// two resonator channels; qubit dephasing is not part of the model.
pub fn psi_rate_model_fidelity(even: &BellDrives, noise: &Noise, theta: f64) -> Result<f64> {
    let spec = noise.spec();
    let g1 = refilling_rate(mhz_to_angular(even.w1_mhz), spec.kappa1, theta, SidebandColor::Blue)?;
    let g2 = refilling_rate(mhz_to_angular(even.w2_mhz), spec.kappa2, theta, SidebandColor::Blue)?;
    Ok(steady_fidelity(0.5 * (g1 + g2), spec.mean_qubit_decay(), theta, SidebandColor::Blue)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonRow {
    /// Name of the swept quantity.
    pub x_name: String,
    pub x: f64,
    pub lindblad: f64,
    pub rate_model: f64,
    pub abs_diff: f64,
}

/// Pairs every successful Ψ_θ row of a result table with the rate-model
/// prediction for the same parameters.
pub fn compare_analytic(scenario: &Scenario, table: &Table) -> Result<Vec<ComparisonRow>> {
    let even = scenario.even.as_ref().with_context(|| {
        format!("{} has no psi_theta rows to compare; use a scenario with the even family", scenario.kind)
    })?;
    let theta_param = deg_to_rad(scenario.target.theta_deg.unwrap_or(90.0));
    let status = table.texts("status")?;
    let family = table.texts("family").ok();
    let is_psi = |i: usize| status[i] == "ok" && family.as_ref().is_none_or(|f| f[i] == Parity::Even.family().label());
    let fid = table.numbers("fidelity")?;

    let mut out = vec![];
    let mut push = |x_name: &str, x: f64, lindblad: f64, noise: &Noise, theta: f64| -> Result<()> {
        let rate_model = psi_rate_model_fidelity(even, noise, theta)?;
        out.push(ComparisonRow { x_name: x_name.into(), x, lindblad, rate_model, abs_diff: (lindblad - rate_model).abs() });
        Ok(())
    };
    match scenario.kind {
        ScenarioKind::TimeDomain => {
            let t = table.numbers("t_us")?;
            let last = (0..t.len()).filter(|&i| is_psi(i)).max_by(|&a, &b| t[a].total_cmp(&t[b]));
            let i = last.context("no successful psi_theta rows")?;
            push("t_us", t[i], fid[i], &scenario.noise, theta_param)?;
        }
        ScenarioKind::ThetaSpectroscopy | ScenarioKind::RateModelCompare => {
            let th = table.numbers("theta_deg")?;
            for i in (0..th.len()).filter(|&i| is_psi(i)) {
                push("theta_deg", th[i], fid[i], &scenario.noise, deg_to_rad(th[i]))?;
            }
        }
        ScenarioKind::TphiSweep => {
            let tp = table.numbers("tphi_us")?;
            for i in (0..tp.len()).filter(|&i| is_psi(i)) {
                push("tphi_us", tp[i], fid[i], &scenario.noise.with_tphi(Some(tp[i])), theta_param)?;
            }
        }
        ScenarioKind::KappaSweep => {
            let r = table.numbers("kappa_over_w")?;
            let k = table.numbers("kappa_mhz")?;
            for i in (0..r.len()).filter(|&i| is_psi(i)) {
                push("kappa_over_w", r[i], fid[i], &scenario.noise.with_kappa([k[i]; 2]), theta_param)?;
            }
        }
        kind => bail!("{kind} has no steady-state psi_theta rows to compare"),
    }
    if out.is_empty() {
        bail!("no successful psi_theta rows in the result");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::defaults;

    #[test]
    fn pi_row_is_exact() {
        let f = psi_rate_model_fidelity(&defaults::TIME_DOMAIN_EVEN, &defaults::TIME_DOMAIN_NOISE, std::f64::consts::PI).unwrap();
        assert!((f - 1.0).abs() < 1e-15);
    }

    #[test]
    fn averages_the_two_channels() {
        let n = Noise { kappa_mhz: [0.5, 0.5], ..defaults::TIME_DOMAIN_NOISE };
        let a = psi_rate_model_fidelity(&defaults::TIME_DOMAIN_EVEN, &n, 1.0).unwrap();
        let spec = n.spec();
        let g = refilling_rate(mhz_to_angular(0.47), spec.kappa1, 1.0, SidebandColor::Blue).unwrap();
        let b = steady_fidelity(g, spec.mean_qubit_decay(), 1.0, SidebandColor::Blue).unwrap();
        assert!((a - b).abs() < 1e-15);
    }
}
