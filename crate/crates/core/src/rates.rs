//! Four-state classical rate model of the stabilization flow.
//!
//! States are ordered (Ψ_θ, ge, eg, Ψ_{θ−π}) with populations (w, x, y, z).
//! Two processes move population: the two-step refilling at rate Γ_t
//! (ge, eg → Ψ_θ and Ψ_{θ−π} → ge, eg) and single-qubit decay γ, split by
//! the |gg⟩ and |ee⟩ content of the two entangled states.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{lu_solve, CMatrix};
use crate::model::SidebandColor;
use crate::{Error, Result, C64};
#[allow(unused_imports)]
use num_traits::Float;

fn half_angle(theta: f64) -> (f64, f64) {
    let (s, c) = (theta / 2.0).sin_cos();
    (s * s, c * c)
}

/// Two-step refilling rate W²c²κ/(κ² + W²c²) with c = cos(θ/2) for blue QR
/// sidebands and c = sin(θ/2) for red ones.
pub fn refilling_rate(w: f64, kappa: f64, theta: f64, color: SidebandColor) -> Result<f64> {
    if !(w >= 0.0 && w.is_finite()) || !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidParameter(format!("refilling rate needs W >= 0 and kappa > 0 (got {w}, {kappa})")));
    }
    let (s2, c2) = half_angle(theta);
    let eff = w * w * match color {
        SidebandColor::Blue => c2,
        SidebandColor::Red => s2,
    };
    Ok(eff * kappa / (kappa * kappa + eff))
}

/// Resonator decay rate that maximizes [`refilling_rate`] at fixed W.
pub fn optimal_kappa(w: f64, theta: f64, color: SidebandColor) -> f64 {
    let (s, c) = (theta / 2.0).sin_cos();
    match color {
        SidebandColor::Blue => w * c.abs(),
        SidebandColor::Red => w * s.abs(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Populations {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Populations {
    pub fn as_array(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn from_array(p: [f64; 4]) -> Self {
        Self { w: p[0], x: p[1], y: p[2], z: p[3] }
    }

    pub fn total(&self) -> f64 {
        self.w + self.x + self.y + self.z
    }
}

fn check_rates(gamma_t: f64, gamma: f64) -> Result<()> {
    if !(gamma_t >= 0.0 && gamma >= 0.0 && gamma_t.is_finite() && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!("rates must be finite and >= 0 (got {gamma_t}, {gamma})")));
    }
    if gamma_t + gamma == 0.0 {
        return Err(Error::ReducibleChain);
    }
    Ok(())
}

/// Closed-form steady-state populations.
pub fn steady_populations(gamma_t: f64, gamma: f64, theta: f64) -> Result<Populations> {
    check_rates(gamma_t, gamma)?;
    let (s2, c2) = half_angle(theta);
    let fill = gamma_t + gamma * s2;
    let w = (fill / (gamma_t + gamma)).powi(2);
    let x = w * gamma * c2 / (gamma_t + gamma - gamma * c2);
    Ok(Populations { w, x, y: x, z: x * gamma * c2 / fill })
}

/// Closed-form steady-state fidelity. For blue QR sidebands `gamma_t` is the
/// blue refilling rate; for red ones pass the red rate, and the decay split
/// uses cos²(θ/2) in place of sin²(θ/2).
pub fn steady_fidelity(gamma_t: f64, gamma: f64, theta: f64, color: SidebandColor) -> Result<f64> {
    check_rates(gamma_t, gamma)?;
    let (s2, c2) = half_angle(theta);
    let split = match color {
        SidebandColor::Blue => s2,
        SidebandColor::Red => c2,
    };
    Ok(((gamma_t + gamma * split) / (gamma_t + gamma)).powi(2))
}

/// The analytic model for one parameter set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateModel {
    pub gamma_t: f64,
    pub gamma: f64,
    pub theta: f64,
    pub populations: Populations,
}

impl RateModel {
    pub fn new(gamma_t: f64, gamma: f64, theta: f64) -> Result<Self> {
        Ok(Self { gamma_t, gamma, theta, populations: steady_populations(gamma_t, gamma, theta)? })
    }

    pub fn fidelity(&self) -> f64 {
        self.populations.w
    }

    /// `rates[i][j]` is the transition rate from state i to state j.
    pub fn transition_rates(&self) -> [[f64; 4]; 4] {
        transition_rates(self.gamma_t, self.gamma, self.theta)
    }
}

/// Transition-rate table of the model; `rates[i][j]` is i → j.
pub fn transition_rates(gamma_t: f64, gamma: f64, theta: f64) -> [[f64; 4]; 4] {
    let (s2, c2) = half_angle(theta);
    let fill = gamma_t + gamma * s2;
    let leak = gamma * c2;
    [
        [0.0, leak, leak, 0.0],
        [fill, 0.0, 0.0, leak],
        [fill, 0.0, 0.0, leak],
        [0.0, fill, fill, 0.0],
    ]
}

/// Which form of the balance equations to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BalanceForm {
    /// As printed: the Ψ_{θ−π} inflow carries a factor 2, so the four rate
    /// equations do not sum to zero.
    Printed,
    /// The inflow into Ψ_{θ−π} is cos²(θ/2)γ(x + y), matching the outflow of
    /// the ge/eg equations.
    Corrected,
}

/// Residuals of the five balance equations (four rate equations plus
/// normalization).
pub fn balance_residuals(gamma_t: f64, gamma: f64, theta: f64, p: &Populations, form: BalanceForm) -> [f64; 5] {
    let (s2, c2) = half_angle(theta);
    let fill = gamma_t + s2 * gamma;
    let inflow_z = match form {
        BalanceForm::Printed => 2.0 * c2 * gamma,
        BalanceForm::Corrected => c2 * gamma,
    };
    [
        fill * (p.x + p.y) - 2.0 * c2 * gamma * p.w,
        fill * p.z + c2 * gamma * p.w - (gamma_t + gamma) * p.x,
        fill * p.z + c2 * gamma * p.w - (gamma_t + gamma) * p.y,
        inflow_z * (p.x + p.y) - 2.0 * fill * p.z,
        p.total() - 1.0,
    ]
}

/// Unique stationary distribution of a continuous-time Markov chain given
/// by its transition rates (`rates[i][j]`, i → j; diagonal ignored).
///
/// Transient states are allowed; the chain must have exactly one closed
/// communicating class.
pub fn rate_matrix_steady_state<const N: usize>(rates: &[[f64; N]; N]) -> Result<[f64; N]> {
    for row in rates {
        for &r in row {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::InvalidParameter(format!("transition rate {r} must be finite and >= 0")));
            }
        }
    }
    if closed_classes(rates) != 1 {
        return Err(Error::ReducibleChain);
    }
    // Stationarity: Σ_i π_i Q_ij = 0 for each j, with one equation replaced
    // by normalization.
    let scale = rates.iter().flatten().fold(0.0f64, |a, &b| a.max(b)).max(f64::MIN_POSITIVE);
    let mut a = CMatrix::zeros(N);
    for j in 0..N {
        for i in 0..N {
            let q = if i == j {
                -(0..N).filter(|&k| k != i).map(|k| rates[i][k]).sum::<f64>()
            } else {
                rates[i][j]
            };
            a[(j, i)] = C64::new(q / scale, 0.0);
        }
    }
    for i in 0..N {
        a[(0, i)] = C64::new(1.0, 0.0);
    }
    let mut b = vec![C64::new(0.0, 0.0); N];
    b[0] = C64::new(1.0, 0.0);
    let pi = lu_solve(a, b, 1e-13).map_err(|_| Error::ReducibleChain)?;
    let mut out = [0.0; N];
    for (o, z) in out.iter_mut().zip(pi) {
        *o = z.re.max(0.0);
    }
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= total);
    Ok(out)
}

fn closed_classes<const N: usize>(rates: &[[f64; N]; N]) -> usize {
    let mut reach = [[false; N]; N];
    for i in 0..N {
        reach[i][i] = true;
        for j in 0..N {
            if i != j && rates[i][j] > 0.0 {
                reach[i][j] = true;
            }
        }
    }
    for k in 0..N {
        for i in 0..N {
            for j in 0..N {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    // A class is closed when everything reachable from it reaches back.
    let mut seen: Vec<usize> = Vec::new();
    let mut count = 0;
    for i in 0..N {
        if seen.contains(&i) {
            continue;
        }
        let class: Vec<usize> = (0..N).filter(|&j| reach[i][j] && reach[j][i]).collect();
        let closed = (0..N).all(|j| !reach[i][j] || reach[j][i]);
        seen.extend(&class);
        if closed {
            count += 1;
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    const TAU: f64 = 2.0 * PI;

    #[test]
    fn refilling_examples() {
        assert!(refilling_rate(1.0, 0.5, PI, SidebandColor::Blue).unwrap().abs() < 1e-30);
        let (w, theta) = (1.7, 1.1);
        let k = optimal_kappa(w, theta, SidebandColor::Blue);
        let g = refilling_rate(w, k, theta, SidebandColor::Blue).unwrap();
        assert!((g - w * (theta / 2.0).cos() / 2.0).abs() < 1e-14);
        let g = refilling_rate(TAU * 0.47, TAU * 0.33, PI / 2.0, SidebandColor::Blue).unwrap();
        assert!((g / TAU - 0.17).abs() < 0.01, "{}", g / TAU);
        assert!(refilling_rate(1.0, 0.0, 1.0, SidebandColor::Blue).is_err());
    }

    #[test]
    fn optimal_kappa_examples() {
        let w = 3.0;
        assert!((optimal_kappa(w, PI / 2.0, SidebandColor::Blue) - w / 2f64.sqrt()).abs() < 1e-15);
        assert!(optimal_kappa(w, PI, SidebandColor::Blue).abs() < 1e-15);
        assert!((optimal_kappa(w, 0.0, SidebandColor::Red)).abs() < 1e-15);
    }

    #[test]
    fn populations_limits() {
        let p = steady_populations(1e12, 1.0, 1.0).unwrap();
        assert!((p.w - 1.0).abs() < 1e-10 && p.x < 1e-10 && p.z < 1e-10);
        let p = steady_populations(0.0, 1.0, PI).unwrap();
        assert!((p.w - 1.0).abs() < 1e-15 && p.x.abs() < 1e-15);
    }

    #[test]
    fn closed_form_solves_corrected_balance() {
        let (gt, g, th) = (1.0, 0.05, PI / 2.0);
        let p = steady_populations(gt, g, th).unwrap();
        let r = balance_residuals(gt, g, th, &p, BalanceForm::Corrected);
        assert!(r.iter().all(|v| v.abs() < 1e-12), "{r:?}");
    }

    #[test]
    fn printed_balance_is_inconsistent() {
        let (gt, g, th) = (1.0, 0.05, PI / 2.0);
        let p = steady_populations(gt, g, th).unwrap();
        let r = balance_residuals(gt, g, th, &p, BalanceForm::Printed);
        // The fourth equation is off by exactly the extra inflow cos²γ(x+y).
        let (_, c2) = half_angle(th);
        assert!((r[3] - c2 * g * (p.x + p.y)).abs() < 1e-15);
        // The printed rate equations do not sum to zero, so no population
        // vector other than zero satisfies them all.
        let probe = Populations { w: 0.4, x: 0.2, y: 0.3, z: 0.1 };
        let sum: f64 = balance_residuals(gt, g, th, &probe, BalanceForm::Printed)[..4].iter().sum();
        assert!(sum.abs() > 1e-3);
        let sum: f64 = balance_residuals(gt, g, th, &probe, BalanceForm::Corrected)[..4].iter().sum();
        assert!(sum.abs() < 1e-15);
    }

    #[test]
    fn fidelity_examples() {
        assert_eq!(steady_fidelity(0.3, 0.0, 1.0, SidebandColor::Blue).unwrap(), 1.0);
        assert!((steady_fidelity(0.3, 0.2, PI, SidebandColor::Blue).unwrap() - 1.0).abs() < 1e-15);
        assert!((steady_fidelity(0.3, 0.2, 0.0, SidebandColor::Red).unwrap() - 1.0).abs() < 1e-15);
        let gt = refilling_rate(TAU * 0.47, TAU * 0.33, PI / 2.0, SidebandColor::Blue).unwrap();
        let gamma = 0.5 * (1.0 / 25.0 + 1.0 / 12.0);
        let f = steady_fidelity(gt, gamma, PI / 2.0, SidebandColor::Blue).unwrap();
        assert!((f - 0.95).abs() < 0.01, "{f}");
        let m = RateModel::new(gt, gamma, PI / 2.0).unwrap();
        assert_eq!(m.fidelity(), f);
        let oracle = rate_matrix_steady_state(&m.transition_rates()).unwrap();
        assert!((oracle[0] - f).abs() < 1e-12);
    }

    #[test]
    fn markov_oracle_examples() {
        // Symmetric pair with two transient states feeding it.
        let rates = [
            [0.0, 2.0, 0.0, 0.0],
            [2.0, 0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 3.0, 0.0],
        ];
        let p = rate_matrix_steady_state(&rates).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-14 && (p[1] - 0.5).abs() < 1e-14 && p[2] == 0.0 && p[3] == 0.0);

        // Pure decay toward the lowest state.
        let decay = [[0.0; 4], [1.0, 0.0, 0.0, 0.0], [0.5, 0.7, 0.0, 0.0], [0.0, 0.1, 0.2, 0.0]];
        let p = rate_matrix_steady_state(&decay).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-14);

        let split = [[0.0; 4], [0.0; 4], [1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]];
        assert_eq!(rate_matrix_steady_state(&split).unwrap_err(), Error::ReducibleChain);
    }
}
