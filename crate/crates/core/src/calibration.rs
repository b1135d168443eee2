//! Effective sideband rates of the inductively coupled device and the
//! device reference table.
//!
//! Josephson energies and frequencies may be given in any consistent unit;
//! rates come out in the unit of `omega_q*` (rad/µs by convention).

use alloc::format;

use core::f64::consts::PI;


use crate::{Error, Result};
#[allow(unused_imports)]
use num_traits::Float;

/// Coupler-to-qubit Josephson energy ratio required for adiabatic
/// elimination of the coupler.
pub const ADIABATIC_RATIO: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircuitParams {
    pub ej1: f64,
    pub ej2: f64,
    pub ejc: f64,
    /// DC flux phase in radians.
    pub phi_dc: f64,
    /// Flux-modulation amplitude (dimensionless).
    pub epsilon: f64,
    pub omega_q1: f64,
    pub omega_q2: f64,
    pub g_qr: f64,
    /// Qubit–resonator frequency difference.
    pub delta_qr: f64,
    pub epsilon_q: f64,
    pub c_q1: f64,
    pub c_q2: f64,
    pub c_q12: f64,
}

impl CircuitParams {
    pub fn adiabatic_ratio(&self) -> f64 {
        self.ejc / self.ej1.max(self.ej2)
    }

    pub fn is_adiabatic(&self) -> bool {
        self.adiabatic_ratio() > ADIABATIC_RATIO
    }

    fn check(&self) -> Result<f64> {
        if !self.is_adiabatic() {
            return Err(Error::NotAdiabatic(self.adiabatic_ratio()));
        }
        let c = self.phi_dc.cos();
        if c.abs() < 1e-12 {
            return Err(Error::FluxSingularity);
        }
        Ok(c)
    }

    /// √(E_j1 E_j2)/(2 E_jc) · √(ω_q1 ω_q2)
    fn inductive_prefactor(&self) -> f64 {
        (self.ej1 * self.ej2).sqrt() / (2.0 * self.ejc) * (self.omega_q1 * self.omega_q2).sqrt()
    }
}

/// First-order modulation amplitude of g1 under flux modulation ε:
/// ε·√(E_j1E_j2)/(2E_jc)·√(ω_q1ω_q2)·tan(φ_dc)/cos(φ_dc).
pub fn qq_sideband_rate(p: &CircuitParams) -> Result<f64> {
    let c = p.check()?;
    Ok(p.epsilon * p.inductive_prefactor() * p.phi_dc.tan() / c)
}

/// Flux-modulation amplitude that yields QQ sideband rate `rate`.
pub fn epsilon_for_qq_rate(p: &CircuitParams, rate: f64) -> Result<f64> {
    let unit = qq_sideband_rate(&CircuitParams { epsilon: 1.0, ..*p })?;
    if unit == 0.0 {
        return Err(Error::InvalidParameter("QQ rate vanishes at this bias point".into()));
    }
    Ok(rate / unit)
}

/// Static couplings (g1, g2) at the DC bias point.
pub fn static_couplings(p: &CircuitParams) -> Result<(f64, f64)> {
    let c = p.check()?;
    let g1 = p.inductive_prefactor() / c;
    let g2 = (p.c_q1 * p.c_q2).sqrt() / (2.0 * p.c_q12) * (p.omega_q1 * p.omega_q2).sqrt();
    Ok((g1, g2))
}

/// QR blue rate from a charge drive at half the transition frequency:
/// W = 16 g³ ε_q² / Δ⁴.
pub fn qr_blue_rate(g_qr: f64, epsilon_q: f64, delta_qr: f64) -> Result<f64> {
    if !(g_qr > 0.0 && epsilon_q > 0.0 && delta_qr > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "QR blue rate needs positive inputs (g = {g_qr}, eps = {epsilon_q}, delta = {delta_qr})"
        )));
    }
    Ok(16.0 * g_qr.powi(3) * epsilon_q * epsilon_q / delta_qr.powi(4))
}

/// Smallest QR blue rate (rad/µs) demonstrated on the device, 2π·0.5 MHz.
pub const ACHIEVABLE_QR_BLUE: f64 = 2.0 * PI * 0.5;

pub fn qr_blue_achievable(w: f64) -> bool {
    w >= ACHIEVABLE_QR_BLUE * (1.0 - 1e-12)
}

/// κ = 1/T1 of a resonator (T1 in µs, κ in 1/µs).
pub fn kappa_from_resonator_t1(t1_res: f64) -> Result<f64> {
    if !(t1_res > 0.0) {
        return Err(Error::InvalidParameter(format!("resonator T1 {t1_res} must be positive")));
    }
    Ok(1.0 / t1_res)
}

/// Coherence times (µs) of one qubit at one bias point. Missing entries are
/// `None`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitCoherence {
    pub t1: f64,
    pub t_ramsey: f64,
    pub t_echo: Option<f64>,
}

/// Coherence at one coupler bias point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BiasPoint {
    /// φ_dc/π
    pub phi_dc_over_pi: f64,
    pub q1: QubitCoherence,
    pub q2: QubitCoherence,
    /// Resonator lifetimes in µs, where measured.
    pub r1_t1: Option<f64>,
    pub r2_t1: Option<f64>,
}

/// Coupler circuit constants quoted with the device.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplerConstants {
    /// GHz
    pub ej1: f64,
    pub ej2: f64,
    pub ejc: f64,
}

/// Device reference table: frequencies, coherence and readout figures.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeviceTable {
    pub version: u32,
    /// ω/2π in GHz.
    pub qubit_freq_ghz: [f64; 2],
    /// α/2π in MHz.
    pub anharmonicity_mhz: [f64; 2],
    pub readout_freq_ghz: [f64; 2],
    /// Static ZZ/2π in kHz; recorded only, never applied.
    pub zz_khz: f64,
    pub readout_fidelity: [f64; 2],
    /// Operating point used for stabilization.
    pub operating: BiasPoint,
    /// Coupler sweet spot.
    pub sweet_spot: BiasPoint,
    pub coupler: CouplerConstants,
}

impl DeviceTable {
    /// Qubit angular frequencies in rad/µs.
    pub fn omega_q(&self) -> [f64; 2] {
        self.qubit_freq_ghz.map(|f| 2.0 * PI * f * 1e3)
    }

    /// Resonator decay rates at the operating point.
    pub fn kappas(&self) -> Result<[f64; 2]> {
        let t = [self.operating.r1_t1, self.operating.r2_t1];
        let mut out = [0.0; 2];
        for (o, t) in out.iter_mut().zip(t) {
            let t = t.ok_or_else(|| Error::InvalidParameter("resonator lifetime missing at operating point".into()))?;
            *o = kappa_from_resonator_t1(t)?;
        }
        Ok(out)
    }

    /// Circuit parameters at the operating bias with a given modulation
    /// amplitude; the capacitive and QR entries are left at 1 for the caller
    /// to fill in.
    pub fn circuit(&self, epsilon: f64) -> CircuitParams {
        let [w1, w2] = self.omega_q();
        CircuitParams {
            ej1: self.coupler.ej1,
            ej2: self.coupler.ej2,
            ejc: self.coupler.ejc,
            phi_dc: self.operating.phi_dc_over_pi * PI,
            epsilon,
            omega_q1: w1,
            omega_q2: w2,
            g_qr: 1.0,
            delta_qr: 1.0,
            epsilon_q: 1.0,
            c_q1: 1.0,
            c_q2: 1.0,
            c_q12: 1.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> CircuitParams {
        CircuitParams {
            ej1: 12.2,
            ej2: 12.3,
            ejc: 1700.0,
            phi_dc: 0.3795 * PI,
            epsilon: 0.01,
            omega_q1: 2.0 * PI * 3204.6,
            omega_q2: 2.0 * PI * 3662.4,
            g_qr: 2.0 * PI * 60.0,
            delta_qr: 2.0 * PI * 1790.0,
            epsilon_q: 2.0 * PI * 100.0,
            c_q1: 70.0,
            c_q2: 72.0,
            c_q12: 5.0,
        }
    }

    #[test]
    fn qq_rate_examples() {
        let p = params();
        assert_eq!(qq_sideband_rate(&CircuitParams { phi_dc: 0.0, ..p }).unwrap(), 0.0);
        let r1 = qq_sideband_rate(&p).unwrap();
        let r2 = qq_sideband_rate(&CircuitParams { epsilon: 0.02, ..p }).unwrap();
        assert!((r2 / r1 - 2.0).abs() < 1e-14);
        let eps = epsilon_for_qq_rate(&p, 2.0 * PI * 2.0).unwrap();
        assert!((qq_sideband_rate(&CircuitParams { epsilon: eps, ..p }).unwrap() - 2.0 * PI * 2.0).abs() < 1e-12);
        assert!(eps > 0.0 && eps < 0.05, "{eps}");
    }

    #[test]
    fn qq_rate_is_first_order_flux_coefficient() {
        let p = params();
        let eps = 1e-4;
        let g1 = |phi: f64| static_couplings(&CircuitParams { phi_dc: phi, ..p }).unwrap().0;
        let numeric = (g1(p.phi_dc + eps) - g1(p.phi_dc)) / eps;
        let analytic = qq_sideband_rate(&CircuitParams { epsilon: 1.0, ..p }).unwrap();
        assert!((numeric / analytic - 1.0).abs() < 1e-3);
    }

    #[test]
    fn singular_and_non_adiabatic_bias() {
        let p = params();
        assert_eq!(qq_sideband_rate(&CircuitParams { phi_dc: PI / 2.0, ..p }).unwrap_err(), Error::FluxSingularity);
        assert!(matches!(qq_sideband_rate(&CircuitParams { ejc: 50.0, ..p }), Err(Error::NotAdiabatic(_))));
    }

    #[test]
    fn qr_blue_scaling() {
        let w = qr_blue_rate(1.0, 0.3, 2.0).unwrap();
        assert!((qr_blue_rate(1.0, 0.6, 2.0).unwrap() / w - 4.0).abs() < 1e-14);
        assert!((w / qr_blue_rate(1.0, 0.3, 4.0).unwrap() - 16.0).abs() < 1e-12);
        assert!(qr_blue_rate(0.0, 0.3, 2.0).is_err());
        assert!(qr_blue_achievable(2.0 * PI * 0.5));
        assert!(!qr_blue_achievable(2.0 * PI * 0.4));
    }

    #[test]
    fn kappa_examples() {
        let k = kappa_from_resonator_t1(0.48).unwrap();
        assert!((k / (2.0 * PI) - 0.332).abs() < 5e-4);
        let k = kappa_from_resonator_t1(0.37).unwrap();
        assert!((k / (2.0 * PI) - 0.430).abs() < 5e-4);
        assert!(kappa_from_resonator_t1(1e300).unwrap() < 1e-299);
    }

    #[test]
    fn static_coupling_properties() {
        let p = params();
        let (g_sweet, _) = static_couplings(&CircuitParams { phi_dc: 0.0, ..p }).unwrap();
        for k in 1..20 {
            let phi = k as f64 * 0.07;
            assert!(static_couplings(&CircuitParams { phi_dc: phi, ..p }).unwrap().0 >= g_sweet);
        }
        let (a, _) = static_couplings(&p).unwrap();
        let (b, _) = static_couplings(&CircuitParams { ej1: p.ej2, ej2: p.ej1, ..p }).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
    }
}
