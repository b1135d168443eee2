//! Families of stabilizable two-qubit states and state metrics.
//!
//! Amplitudes are in the basis (gg, ge, eg, ee).

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::hilbert::{eigendecompose, DensityMatrix, SpaceLayout};
use crate::linalg::{self, fix_phase};
use crate::model::{build_qubit_block, DetuningPlacement, DriveSet, SidebandColor};
use crate::{Error, Result, C64};
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TargetFamily {
    /// sin(θ/2)|gg⟩ − cos(θ/2)|ee⟩
    PsiTheta { theta: f64 },
    /// sin(θ/2)|ge⟩ − cos(θ/2)|eg⟩
    PhiTheta { theta: f64 },
    Product { phi1: f64, phi2: f64 },
    /// cos(θ1/2)Ψ− + sin(θ1/2)Φ−
    DressedParity { theta1: f64 },
    RabiDressed { delta: f64, a1: f64, omega: f64 },
    /// Lowest eigenvector of an arbitrary qubit block.
    Eigenstate,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilizationTarget {
    pub family: TargetFamily,
    pub amplitudes: [C64; 4],
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

impl StabilizationTarget {
    /// Normalizes `amplitudes`; the phase is left untouched.
    pub fn new(family: TargetFamily, amplitudes: [C64; 4]) -> Result<Self> {
        let norm = linalg::vec_norm(&amplitudes);
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidState("target amplitudes must be non-zero and finite".into()));
        }
        Ok(Self { family, amplitudes: amplitudes.map(|z| z / norm) })
    }

    /// Target from an eigenvector, with the phase convention applied.
    pub fn eigenstate(v: &[C64]) -> Result<Self> {
        let amps: [C64; 4] = v
            .try_into()
            .map_err(|_| Error::DimensionMismatch { expected: 4, got: v.len() })?;
        let mut t = Self::new(TargetFamily::Eigenstate, amps)?;
        fix_phase(&mut t.amplitudes);
        Ok(t)
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::pure(SpaceLayout::qubit_pair(), &self.amplitudes).expect("targets are normalized")
    }

    /// |⟨self|other⟩|²
    pub fn overlap(&self, other: &Self) -> f64 {
        linalg::inner(&self.amplitudes, &other.amplitudes).norm_sqr()
    }
}

pub fn psi_theta(theta: f64) -> StabilizationTarget {
    let (s, c) = (theta / 2.0).sin_cos();
    StabilizationTarget { family: TargetFamily::PsiTheta { theta }, amplitudes: [re(s), re(0.0), re(0.0), re(-c)] }
}

pub fn phi_theta(theta: f64) -> StabilizationTarget {
    let (s, c) = (theta / 2.0).sin_cos();
    StabilizationTarget { family: TargetFamily::PhiTheta { theta }, amplitudes: [re(0.0), re(s), re(-c), re(0.0)] }
}

/// Ψ− = (|gg⟩ − |ee⟩)/√2
pub fn psi_minus() -> StabilizationTarget {
    psi_theta(PI / 2.0)
}

/// Φ− = (|ge⟩ − |eg⟩)/√2
pub fn phi_minus() -> StabilizationTarget {
    phi_theta(PI / 2.0)
}

/// θ = 2·atan((δ+Δ)/Ω), Δ = √(Ω²+δ²).
pub fn blending_angle(omega: f64, delta: f64) -> Result<f64> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidParameter(format!("blending angle needs omega > 0, got {omega}")));
    }
    let big = omega.hypot(delta);
    // δ + Δ loses all digits for large negative δ; use Ω²/(Δ − δ) there.
    let sum = if delta >= 0.0 { delta + big } else { omega * omega / (big - delta) };
    Ok(2.0 * (sum / omega).atan())
}

/// QQ detuning that produces blending angle θ ∈ (0, π):
/// δ = Ω(tan(θ/2) − cot(θ/2))/2.
pub fn detuning_for_angle(omega: f64, theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < PI) {
        return Err(Error::InvalidParameter(format!("blending angle {theta} outside (0, pi)")));
    }
    let t = (theta / 2.0).tan();
    Ok(omega * (t - 1.0 / t) / 2.0)
}

/// (cos(φ1/2)|g⟩ + sin(φ1/2)|e⟩) ⊗ (cos(φ2/2)|g⟩ + sin(φ2/2)|e⟩)
pub fn product_state(phi1: f64, phi2: f64) -> StabilizationTarget {
    let (s1, c1) = (phi1 / 2.0).sin_cos();
    let (s2, c2) = (phi2 / 2.0).sin_cos();
    StabilizationTarget {
        family: TargetFamily::Product { phi1, phi2 },
        amplitudes: [re(c1 * c2), re(c1 * s2), re(s1 * c2), re(s1 * s2)],
    }
}

pub fn dressed_parity_state(theta1: f64) -> StabilizationTarget {
    let (s, c) = (theta1 / 2.0).sin_cos();
    let h = core::f64::consts::FRAC_1_SQRT_2;
    StabilizationTarget {
        family: TargetFamily::DressedParity { theta1 },
        amplitudes: [re(c * h), re(s * h), re(-s * h), re(-c * h)],
    }
}

/// Dressing angle of the dressed-parity family for a QQ sideband of the
/// given color plus a resonant Rabi drive A1 on q1.
pub fn dressing_angle(omega: f64, a1: f64, color: SidebandColor) -> Result<f64> {
    if !(omega > 0.0) || !(a1 >= 0.0) {
        return Err(Error::InvalidParameter(format!("dressing angle needs omega > 0, a1 >= 0 (got {omega}, {a1})")));
    }
    let blue = 2.0 * (2.0 * a1 / (omega + (4.0 * a1 * a1 + omega * omega).sqrt())).atan();
    Ok(match color {
        SidebandColor::Blue => blue,
        SidebandColor::Red => PI - blue,
    })
}

/// Closed-form coefficients of the Rabi-dressed family together with the
/// residual ‖H ξ − λ_min ξ‖ of the normalized closed-form vector against the
/// Rabi-dressed block.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RabiDressedCoefficients {
    pub x: f64,
    pub y: f64,
    pub e00: f64,
    pub e01: f64,
    pub e10: f64,
    pub residual: f64,
}

impl RabiDressedCoefficients {
    /// Normalized (E00, E01, E10, −1).
    pub fn amplitudes(&self) -> [C64; 4] {
        let v = [self.e00, self.e01, self.e10, -1.0];
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.map(|a| re(a / n))
    }
}

/// Block with a QQ blue sideband (rate Ω, detuning δ split ±δ/2) and a
/// resonant Rabi drive A1 on q1.
pub fn rabi_dressed_drives(delta: f64, a1: f64, omega: f64) -> Result<DriveSet> {
    Ok(DriveSet::new()
        .with_qq(SidebandColor::Blue, omega, delta)?
        .with_rabi_q1(a1, 0.0)
        .with_placement(DetuningPlacement::Symmetric))
}

/// Returns the closed-form coefficients and the numerically determined lowest
/// eigenstate of the Rabi-dressed block, which is the stabilized target.
pub fn rabi_dressed_state(delta: f64, a1: f64, omega: f64) -> Result<(RabiDressedCoefficients, StabilizationTarget)> {
    if !(omega > 0.0) {
        return Err(Error::InvalidParameter(format!("Rabi-dressed family needs omega > 0, got {omega}")));
    }
    let h = build_qubit_block(&rabi_dressed_drives(delta, a1, omega)?)?;
    let eig = eigendecompose(&h)?;
    let mut target = StabilizationTarget::eigenstate(&eig.vector(0))?;
    target.family = TargetFamily::RabiDressed { delta, a1, omega };

    let (d2, a2, o2) = (delta * delta, a1 * a1, omega * omega);
    let x = (4.0 * d2 * a2 + 4.0 * a2 * o2 + o2 * o2).sqrt();
    let y = (d2 + 2.0 * (2.0 * a2 + o2 + x)).sqrt();
    let denom = 2.0 * a2 + o2 + x;
    let common = d2 + o2 + x + delta * y;
    let mut c = RabiDressedCoefficients {
        x,
        y,
        e00: (delta - y) * common / (2.0 * omega * denom),
        e01: a1 * (delta - y) / denom,
        e10: -a1 * common / (omega * denom),
        residual: 0.0,
    };
    let xi = c.amplitudes();
    let hxi = h.matrix().mul_vec(&xi);
    let lambda = eig.values[0];
    c.residual = hxi.iter().zip(&xi).map(|(a, b)| (a - b * lambda).norm_sqr()).sum::<f64>().sqrt();
    Ok((c, target))
}

fn check_two_qubit(rho: &DensityMatrix) -> Result<()> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, got: rho.dim() });
    }
    Ok(())
}

/// ⟨ψ|ρ|ψ⟩ for a two-qubit state; clamped to [0, 1] against roundoff.
pub fn fidelity(rho: &DensityMatrix, target: &StabilizationTarget) -> Result<f64> {
    check_two_qubit(rho)?;
    let rpsi = rho.matrix().mul_vec(&target.amplitudes);
    Ok(linalg::inner(&target.amplitudes, &rpsi).re.clamp(0.0, 1.0))
}

/// Tr ρ²
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.matrix().as_slice().iter().map(|z| z.norm_sqr()).sum()
}

/// 2(|⟨ee|ρ|gg⟩| − |⟨ge|ρ|eg⟩|)
pub fn parity_signature(rho: &DensityMatrix) -> Result<f64> {
    check_two_qubit(rho)?;
    Ok(2.0 * (rho.get(3, 0).norm() - rho.get(1, 2).norm()))
}

/// Fidelity, purity and parity signature in one pass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateMetrics {
    pub fidelity: f64,
    pub purity: f64,
    pub parity: f64,
}

pub fn state_metrics(rho: &DensityMatrix, target: &StabilizationTarget) -> Result<StateMetrics> {
    Ok(StateMetrics { fidelity: fidelity(rho, target)?, purity: purity(rho), parity: parity_signature(rho)? })
}

/// Lowest eigenvector of a 4×4 block as a target, or the corresponding
/// `k`-th eigenvector.
pub fn block_eigenstates(block: &crate::hilbert::ComplexOperator) -> Result<Vec<StabilizationTarget>> {
    let eig = eigendecompose(block)?;
    (0..eig.len()).map(|k| StabilizationTarget::eigenstate(&eig.vector(k))).collect()
}
