//! Rotating-frame Hamiltonians and Lindblad problems for every supported
//! drive combination.
//!
//! Drive terms are all real and positive. Blue sidebands pump pairs
//! (`a b + h.c.`), red sidebands exchange (`a† b + h.c.`). A QR sideband's
//! `detuning` is the coefficient of the resonator number operator in the
//! rotating frame, i.e. the photon energy the scheme assigns to that
//! resonator.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::hilbert::{
    annihilation, eigendecompose, number, ComplexOperator, EigenSystem, SpaceLayout, Subsystem,
};
use crate::targets::StabilizationTarget;
use crate::{Error, Result};
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SidebandColor {
    Red,
    Blue,
}

impl SidebandColor {
    pub fn label(self) -> &'static str {
        match self {
            SidebandColor::Red => "red",
            SidebandColor::Blue => "blue",
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            SidebandColor::Red => SidebandColor::Blue,
            SidebandColor::Blue => SidebandColor::Red,
        }
    }
}

impl fmt::Display for SidebandColor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SidebandColor {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "red" => Ok(SidebandColor::Red),
            "blue" => Ok(SidebandColor::Blue),
            other => Err(Error::InvalidParameter(format!("unknown sideband color {other:?}"))),
        }
    }
}

/// Qubit–qubit sideband: rate Ω and detuning δ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QqSideband {
    pub color: SidebandColor,
    pub rate: f64,
    pub detuning: f64,
}

/// Qubit–resonator sideband: rate W and the resonator's rotating-frame
/// photon energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QrSideband {
    pub color: SidebandColor,
    pub rate: f64,
    pub detuning: f64,
}

/// Single-qubit Rabi drive: rate A and detuning.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RabiDrive {
    pub rate: f64,
    pub detuning: f64,
}

/// Where the QQ detuning δ enters the qubit block.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DetuningPlacement {
    /// `δ a†_q1 a_q1`, as in the even/odd-parity Hamiltonians.
    #[default]
    Qubit1,
    /// Split as ±δ/2 so that the two states joined by the QQ sideband sit at
    /// ∓δ/2: `δ(n_q2 − ½)` for blue, `δ(n_q1 − ½)` for red. This is the
    /// convention of the Rabi-dressed block.
    Symmetric,
}

/// Every drive that can be on at once. Rates are angular (rad/µs).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DriveSet {
    pub qq: Option<QqSideband>,
    pub qr1: Option<QrSideband>,
    pub qr2: Option<QrSideband>,
    pub rabi_q1: Option<RabiDrive>,
    pub rabi_q2: Option<RabiDrive>,
    pub placement: DetuningPlacement,
}

impl DriveSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds the QQ sideband; only one may be active.
    pub fn with_qq(mut self, color: SidebandColor, rate: f64, detuning: f64) -> Result<Self> {
        if self.qq.is_some() {
            return Err(Error::MultipleQqSidebands);
        }
        self.qq = Some(QqSideband { color, rate, detuning });
        Ok(self)
    }

    pub fn with_qr1(mut self, color: SidebandColor, rate: f64, detuning: f64) -> Self {
        self.qr1 = Some(QrSideband { color, rate, detuning });
        self
    }

    pub fn with_qr2(mut self, color: SidebandColor, rate: f64, detuning: f64) -> Self {
        self.qr2 = Some(QrSideband { color, rate, detuning });
        self
    }

    pub fn with_rabi_q1(mut self, rate: f64, detuning: f64) -> Self {
        self.rabi_q1 = Some(RabiDrive { rate, detuning });
        self
    }

    pub fn with_rabi_q2(mut self, rate: f64, detuning: f64) -> Self {
        self.rabi_q2 = Some(RabiDrive { rate, detuning });
        self
    }

    pub fn with_placement(mut self, placement: DetuningPlacement) -> Self {
        self.placement = placement;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let rates = self
            .qq
            .map(|d| (d.rate, d.detuning))
            .into_iter()
            .chain(self.qr1.map(|d| (d.rate, d.detuning)))
            .chain(self.qr2.map(|d| (d.rate, d.detuning)))
            .chain(self.rabi_q1.map(|d| (d.rate, d.detuning)))
            .chain(self.rabi_q2.map(|d| (d.rate, d.detuning)));
        for (rate, detuning) in rates {
            if !(rate >= 0.0 && rate.is_finite()) {
                return Err(Error::InvalidParameter(format!("drive rate {rate} must be finite and >= 0")));
            }
            if !detuning.is_finite() {
                return Err(Error::InvalidParameter(format!("drive detuning {detuning} must be finite")));
            }
        }
        Ok(())
    }

    /// Drives acting on the qubits only (QQ sideband and Rabi drives).
    pub fn qubit_part(&self) -> Self {
        Self { qr1: None, qr2: None, ..self.clone() }
    }

    /// Full rotating-frame Hamiltonian on `layout`.
    pub fn hamiltonian(&self, layout: &SpaceLayout) -> Result<ComplexOperator> {
        self.validate()?;
        let mut h = ComplexOperator::zero(layout);
        for (q, rabi) in [(Subsystem::Q1, self.rabi_q1), (Subsystem::Q2, self.rabi_q2)] {
            if let Some(d) = rabi {
                let a = annihilation(layout, q)?;
                h = &h + &a.plus_hc().scale(d.rate / 2.0);
                if d.detuning != 0.0 {
                    h = &h + &number(layout, q)?.scale(d.detuning);
                }
            }
        }
        if let Some(qq) = self.qq {
            let a1 = annihilation(layout, Subsystem::Q1)?;
            let a2 = annihilation(layout, Subsystem::Q2)?;
            let coupling = match qq.color {
                SidebandColor::Blue => &a1 * &a2,
                SidebandColor::Red => &a1.dagger() * &a2,
            };
            h = &h + &coupling.plus_hc().scale(qq.rate / 2.0);
            if qq.detuning != 0.0 {
                let shift = match self.placement {
                    DetuningPlacement::Qubit1 => number(layout, Subsystem::Q1)?,
                    DetuningPlacement::Symmetric => {
                        let q = match qq.color {
                            SidebandColor::Blue => Subsystem::Q2,
                            SidebandColor::Red => Subsystem::Q1,
                        };
                        &number(layout, q)? + &ComplexOperator::identity(layout).scale(-0.5)
                    }
                };
                h = &h + &shift.scale(qq.detuning);
            }
        }
        for (q, r, drive) in [(Subsystem::Q1, Subsystem::R1, self.qr1), (Subsystem::Q2, Subsystem::R2, self.qr2)] {
            if let Some(d) = drive {
                let aq = annihilation(layout, q)?;
                let ar = annihilation(layout, r)?;
                let coupling = match d.color {
                    SidebandColor::Blue => &aq * &ar,
                    SidebandColor::Red => &aq.dagger() * &ar,
                };
                h = &h + &coupling.plus_hc().scale(d.rate / 2.0);
                h = &h + &number(layout, r)?.scale(d.detuning);
            }
        }
        Ok(h)
    }
}

/// Δ = √(Ω² + δ²)
pub fn big_delta(omega: f64, delta: f64) -> f64 {
    omega.hypot(delta)
}

/// 4×4 two-qubit block in basis (gg, ge, eg, ee); QR sidebands are ignored.
pub fn build_qubit_block(drives: &DriveSet) -> Result<ComplexOperator> {
    drives.qubit_part().hamiltonian(&SpaceLayout::qubit_pair())
}

/// Drives that stabilize Ψ_θ with a detuned QQ blue sideband and two QR blue
/// sidebands.
///
/// QR1 sits at (Δ−δ)/2 and QR2 at (Δ+δ)/2. With δ on q1 this is the
/// assignment that puts |ge00⟩ ↔ |Ψ_θ10⟩ and |eg00⟩ ↔ |Ψ_θ01⟩ on resonance.
pub fn even_parity_drives(omega: f64, delta: f64, w1: f64, w2: f64) -> Result<DriveSet> {
    let big = big_delta(omega, delta);
    Ok(DriveSet::new()
        .with_qq(SidebandColor::Blue, omega, delta)?
        .with_qr1(SidebandColor::Blue, w1, (big - delta) / 2.0)
        .with_qr2(SidebandColor::Blue, w2, (big + delta) / 2.0))
}

pub fn build_even_parity_system(
    omega: f64,
    delta: f64,
    w1: f64,
    w2: f64,
    layout: &SpaceLayout,
) -> Result<ComplexOperator> {
    even_parity_drives(omega, delta, w1, w2)?.hamiltonian(layout)
}

/// QR color arrangement for the odd-parity family.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OddParityColors {
    /// QR1 red at (Δ+δ)/2, QR2 blue at (Δ−δ)/2. Refilling runs through the
    /// |ge⟩ amplitude of Φ_θ, so it weakens as θ → 0.
    #[default]
    Standard,
    /// QR1 blue at (Δ−δ)/2, QR2 red at (Δ+δ)/2: colors and detunings of the
    /// two QR sidebands exchanged. Refilling runs through the |eg⟩
    /// amplitude, so it weakens as θ → π.
    Swapped,
}

impl OddParityColors {
    pub fn label(self) -> &'static str {
        match self {
            OddParityColors::Standard => "standard",
            OddParityColors::Swapped => "swapped",
        }
    }
}

/// Drives that stabilize Φ_θ with a detuned QQ red sideband.
pub fn odd_parity_drives(omega: f64, delta: f64, w3: f64, w4: f64, colors: OddParityColors) -> Result<DriveSet> {
    let big = big_delta(omega, delta);
    let base = DriveSet::new().with_qq(SidebandColor::Red, omega, delta)?;
    Ok(match colors {
        OddParityColors::Standard => base
            .with_qr1(SidebandColor::Red, w3, (big + delta) / 2.0)
            .with_qr2(SidebandColor::Blue, w4, (big - delta) / 2.0),
        OddParityColors::Swapped => base
            .with_qr1(SidebandColor::Blue, w3, (big - delta) / 2.0)
            .with_qr2(SidebandColor::Red, w4, (big + delta) / 2.0),
    })
}

pub fn build_odd_parity_system(
    omega: f64,
    delta: f64,
    w3: f64,
    w4: f64,
    layout: &SpaceLayout,
) -> Result<ComplexOperator> {
    odd_parity_drives(omega, delta, w3, w4, OddParityColors::Standard)?.hamiltonian(layout)
}

/// QR color/detuning variants of the even-parity scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ColorVariant {
    /// Two QR blue sidebands ([`even_parity_drives`]).
    BlueBlue,
    /// Two QR red sidebands at (Δ+δ)/2 on R1 and (Δ−δ)/2 on R2; refills
    /// through the |gg⟩ amplitude and still stabilizes Ψ_θ.
    RedRed,
    /// QR blue sidebands with negative photon energies −(Δ+δ)/2 on R1 and
    /// −(Δ−δ)/2 on R2; the flow goes to the top eigenstate Ψ_{θ−π}.
    OppositeDetuning,
}

impl ColorVariant {
    pub fn label(self) -> &'static str {
        match self {
            ColorVariant::BlueBlue => "blue_blue",
            ColorVariant::RedRed => "red_red",
            ColorVariant::OppositeDetuning => "opposite_detuning",
        }
    }
}

impl FromStr for ColorVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "blue_blue" => Ok(ColorVariant::BlueBlue),
            "red_red" => Ok(ColorVariant::RedRed),
            "opposite_detuning" => Ok(ColorVariant::OppositeDetuning),
            other => Err(Error::InvalidParameter(format!("unknown color variant {other:?}"))),
        }
    }
}

pub fn color_variant_drives(omega: f64, delta: f64, w1: f64, w2: f64, variant: ColorVariant) -> Result<DriveSet> {
    let big = big_delta(omega, delta);
    let base = DriveSet::new().with_qq(SidebandColor::Blue, omega, delta)?;
    Ok(match variant {
        ColorVariant::BlueBlue => return even_parity_drives(omega, delta, w1, w2),
        ColorVariant::RedRed => base
            .with_qr1(SidebandColor::Red, w1, (big + delta) / 2.0)
            .with_qr2(SidebandColor::Red, w2, (big - delta) / 2.0),
        ColorVariant::OppositeDetuning => base
            .with_qr1(SidebandColor::Blue, w1, -(big + delta) / 2.0)
            .with_qr2(SidebandColor::Blue, w2, -(big - delta) / 2.0),
    })
}

pub fn build_color_variant(
    omega: f64,
    delta: f64,
    w1: f64,
    w2: f64,
    variant: ColorVariant,
    layout: &SpaceLayout,
) -> Result<ComplexOperator> {
    color_variant_drives(omega, delta, w1, w2, variant)?.hamiltonian(layout)
}

/// Absolute and relative violation of E_A + E_D = E_B + E_C.
pub fn energy_mismatch(values: &[f64]) -> (f64, f64) {
    assert_eq!(values.len(), 4, "energy matching is defined for four levels");
    let mismatch = (values[0] + values[3] - values[1] - values[2]).abs();
    let scale = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let relative = if scale > 0.0 { mismatch / scale } else { 0.0 };
    (mismatch, relative)
}

/// Relative energy-matching violation beyond which a block is rejected.
pub const ENERGY_MATCH_TOL: f64 = 1e-6;

/// Which eigen-gap each resonator takes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GapAssignment {
    /// R1 ← E_B − E_A, R2 ← E_C − E_A.
    #[default]
    Ascending,
    /// R1 ← E_C − E_A, R2 ← E_B − E_A.
    Swapped,
}

/// A qubit block together with the resonator detunings that make its lowest
/// eigenstate the dissipative fixed point.
#[derive(Clone, Debug)]
pub struct StabilizationPlan {
    pub hqq: ComplexOperator,
    pub eigen: EigenSystem,
    /// E_D − E_A; equals √(Ω²+δ²) for a bare QQ sideband.
    pub delta_big: f64,
    pub qr1: QrSideband,
    pub qr2: QrSideband,
    pub target: StabilizationTarget,
}

impl StabilizationPlan {
    pub fn qr1_detuning(&self) -> f64 {
        self.qr1.detuning
    }

    pub fn qr2_detuning(&self) -> f64 {
        self.qr2.detuning
    }

    /// Full-system Hamiltonian: block ⊗ I plus both QR sidebands.
    pub fn hamiltonian(&self, layout: &SpaceLayout) -> Result<ComplexOperator> {
        let qr = DriveSet { qr1: Some(self.qr1), qr2: Some(self.qr2), ..DriveSet::default() };
        let embedded = ComplexOperator::embed_qubit_block(&self.hqq, layout)?;
        Ok(&embedded + &qr.hamiltonian(layout)?)
    }
}

pub fn plan_stabilization(
    hqq: &ComplexOperator,
    w1: f64,
    w2: f64,
    colors: [SidebandColor; 2],
    assignment: GapAssignment,
) -> Result<StabilizationPlan> {
    if hqq.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, got: hqq.dim() });
    }
    for w in [w1, w2] {
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::InvalidParameter(format!("QR rate {w} must be finite and >= 0")));
        }
    }
    let eigen = eigendecompose(hqq)?;
    let (mismatch, relative) = energy_mismatch(&eigen.values);
    if relative > ENERGY_MATCH_TOL {
        return Err(Error::EnergyMismatch { mismatch, relative });
    }
    let e = &eigen.values;
    let (gap_b, gap_c) = (e[1] - e[0], e[2] - e[0]);
    let (d1, d2) = match assignment {
        GapAssignment::Ascending => (gap_b, gap_c),
        GapAssignment::Swapped => (gap_c, gap_b),
    };
    let target = StabilizationTarget::eigenstate(&eigen.vector(0))?;
    Ok(StabilizationPlan {
        hqq: hqq.clone(),
        delta_big: e[3] - e[0],
        qr1: QrSideband { color: colors[0], rate: w1, detuning: d1 },
        qr2: QrSideband { color: colors[1], rate: w2, detuning: d2 },
        eigen,
        target,
    })
}

/// Resonator loss rates and qubit coherence times.
///
/// `kappa*` are energy-decay rates in 1/µs (κ = 1/T1 of the resonator);
/// `t1_*` and `tphi_*` are in µs and may be infinite to switch the channel
/// off.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    pub kappa1: f64,
    pub kappa2: f64,
    pub t1_q1: f64,
    pub t1_q2: f64,
    pub tphi_q1: f64,
    pub tphi_q2: f64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, k) in [("kappa1", self.kappa1), ("kappa2", self.kappa2)] {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} = {k} must be positive")));
            }
        }
        for (name, t) in
            [("t1_q1", self.t1_q1), ("t1_q2", self.t1_q2), ("tphi_q1", self.tphi_q1), ("tphi_q2", self.tphi_q2)]
        {
            if !(t > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} = {t} must be positive")));
            }
        }
        Ok(())
    }

    /// Same noise with pure dephasing switched off.
    pub fn without_dephasing(self) -> Self {
        Self { tphi_q1: f64::INFINITY, tphi_q2: f64::INFINITY, ..self }
    }

    /// Arithmetic mean of the two qubit decay rates 1/T1.
    pub fn mean_qubit_decay(&self) -> f64 {
        0.5 * (1.0 / self.t1_q1 + 1.0 / self.t1_q2)
    }
}

/// Hamiltonian plus collapse operators, all on one layout.
#[derive(Clone, Debug)]
pub struct LindbladProblem {
    pub hamiltonian: ComplexOperator,
    pub collapse_ops: Vec<ComplexOperator>,
}

impl LindbladProblem {
    pub fn new(hamiltonian: ComplexOperator, collapse_ops: Vec<ComplexOperator>) -> Result<Self> {
        if !hamiltonian.is_hermitian() {
            return Err(Error::NotHermitian(hamiltonian.matrix().hermitian_defect()));
        }
        if let Some(bad) = collapse_ops.iter().find(|c| c.layout() != hamiltonian.layout()) {
            return Err(Error::LayoutMismatch(format!(
                "collapse operator on {:?}, Hamiltonian on {:?}",
                bad.layout(),
                hamiltonian.layout()
            )));
        }
        Ok(Self { hamiltonian, collapse_ops })
    }

    pub fn layout(&self) -> &SpaceLayout {
        self.hamiltonian.layout()
    }
}

/// Standard Lindblad channels: √κ_j a_rj, √(1/T1) a_qj and √(2/Tφ) a†_qj a_qj.
/// Channels for subsystems missing from the layout, or with infinite times,
/// are skipped.
pub fn build_lindblad(h: &ComplexOperator, noise: &NoiseSpec) -> Result<LindbladProblem> {
    noise.validate()?;
    let layout = h.layout();
    let mut ops = Vec::new();
    for (r, kappa) in [(Subsystem::R1, noise.kappa1), (Subsystem::R2, noise.kappa2)] {
        if layout.contains(r) {
            ops.push(annihilation(layout, r)?.scale(kappa.sqrt()));
        }
    }
    for (q, t1, tphi) in [(Subsystem::Q1, noise.t1_q1, noise.tphi_q1), (Subsystem::Q2, noise.t1_q2, noise.tphi_q2)] {
        if !layout.contains(q) {
            continue;
        }
        if t1.is_finite() {
            ops.push(annihilation(layout, q)?.scale((1.0 / t1).sqrt()));
        }
        if tphi.is_finite() {
            ops.push(number(layout, q)?.scale((2.0 / tphi).sqrt()));
        }
    }
    LindbladProblem::new(h.clone(), ops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMatrix;
    use crate::targets::{phi_theta, psi_theta};
    use crate::units::mhz_to_angular;
    use crate::C64;
    use alloc::vec;

    fn basis(layout: &SpaceLayout, levels: [usize; 4]) -> usize {
        layout.index(&levels)
    }

    /// ⟨a ⊗ res_a| H |b ⊗ res_b⟩ for two-qubit amplitudes a, b.
    fn element(h: &ComplexOperator, a: &[C64; 4], ra: [usize; 2], b: &[C64; 4], rb: [usize; 2]) -> C64 {
        let l = h.layout();
        let mut acc = C64::new(0.0, 0.0);
        for (qa, &ca) in a.iter().enumerate() {
            for (qb, &cb) in b.iter().enumerate() {
                let i = basis(l, [qa / 2, qa % 2, ra[0], ra[1]]);
                let j = basis(l, [qb / 2, qb % 2, rb[0], rb[1]]);
                acc += ca.conj() * h.get(i, j) * cb;
            }
        }
        acc
    }

    fn ket(idx: usize) -> [C64; 4] {
        let mut k = [C64::new(0.0, 0.0); 4];
        k[idx] = C64::new(1.0, 0.0);
        k
    }

    #[test]
    fn even_parity_resonator_terms_at_zero_detuning() {
        let l = SpaceLayout::default();
        let omega = mhz_to_angular(2.0);
        let h = build_even_parity_system(omega, 0.0, 1.0, 1.0, &l).unwrap();
        let r1 = basis(&l, [0, 0, 1, 0]);
        let r2 = basis(&l, [0, 0, 0, 1]);
        assert!((h.get(r1, r1).re - mhz_to_angular(1.0)).abs() < 1e-12);
        assert!((h.get(r2, r2).re - mhz_to_angular(1.0)).abs() < 1e-12);
        assert!(h.is_hermitian());
    }

    #[test]
    fn all_zero_rates_give_zero_operator() {
        let l = SpaceLayout::default();
        let h = build_even_parity_system(0.0, 0.0, 0.0, 0.0, &l).unwrap();
        assert_eq!(h.matrix().max_abs(), 0.0);
    }

    #[test]
    fn even_parity_refill_couplings_are_resonant() {
        let l = SpaceLayout::default();
        let (omega, delta, w) = (2.0, 0.7, 0.3);
        let h = build_even_parity_system(omega, delta, w, w, &l).unwrap();
        let theta = crate::targets::blending_angle(omega, delta).unwrap();
        let psi = psi_theta(theta).amplitudes;
        // |ge00⟩ ↔ |Ψ_θ 10⟩ through QR1 and |eg00⟩ ↔ |Ψ_θ 01⟩ through QR2.
        let c = element(&h, &psi, [1, 0], &ket(1), [0, 0]);
        assert!((c.norm() - w / 2.0 * (theta / 2.0).cos()).abs() < 1e-12);
        let e_psi10 = element(&h, &psi, [1, 0], &psi, [1, 0]).re;
        let e_ge00 = element(&h, &ket(1), [0, 0], &ket(1), [0, 0]).re;
        assert!((e_psi10 - e_ge00).abs() < 1e-12);
        let e_psi01 = element(&h, &psi, [0, 1], &psi, [0, 1]).re;
        let e_eg00 = element(&h, &ket(2), [0, 0], &ket(2), [0, 0]).re;
        assert!((e_psi01 - e_eg00).abs() < 1e-12);
        assert!(element(&h, &psi, [0, 1], &ket(2), [0, 0]).norm() > 0.0);
    }

    #[test]
    fn psi_half_pi_couples_to_ge00() {
        let l = SpaceLayout::default();
        let h = build_even_parity_system(2.0, 0.0, 0.5, 0.5, &l).unwrap();
        let psi = psi_theta(core::f64::consts::FRAC_PI_2).amplitudes;
        assert!(element(&h, &psi, [0, 1], &ket(2), [0, 0]).norm() > 1e-3);
        assert!(element(&h, &psi, [1, 0], &ket(1), [0, 0]).norm() > 1e-3);
    }

    #[test]
    fn zero_photon_spectrum_of_even_parity_block() {
        let (omega, delta) = (1.3, -0.4);
        let drives = even_parity_drives(omega, delta, 0.0, 0.0).unwrap();
        let e = eigendecompose(&build_qubit_block(&drives).unwrap()).unwrap();
        let big = big_delta(omega, delta);
        let mut expected = vec![(delta - big) / 2.0, 0.0, delta, (delta + big) / 2.0];
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in e.values.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn odd_parity_resonators_and_couplings() {
        let l = SpaceLayout::default();
        let omega = mhz_to_angular(3.0);
        let h = build_odd_parity_system(omega, 0.0, 0.0, 0.0, &l).unwrap();
        let r1 = basis(&l, [0, 0, 1, 0]);
        let r2 = basis(&l, [0, 0, 0, 1]);
        assert!((h.get(r1, r1).re - mhz_to_angular(1.5)).abs() < 1e-12);
        assert!((h.get(r2, r2).re - mhz_to_angular(1.5)).abs() < 1e-12);
        // no QR drive: nothing connects different photon numbers
        for i in 0..16 {
            for j in 0..16 {
                let (di, dj) = (l.digits(i), l.digits(j));
                if di[2] + di[3] != dj[2] + dj[3] {
                    assert_eq!(h.get(i, j), C64::new(0.0, 0.0));
                }
            }
        }
        let h = build_odd_parity_system(omega, 0.0, 0.4, 0.4, &l).unwrap();
        let phi = phi_theta(core::f64::consts::FRAC_PI_2).amplitudes;
        assert!(element(&h, &phi, [0, 1], &ket(0), [0, 0]).norm() > 1e-3);
        assert!(element(&h, &phi, [1, 0], &ket(3), [0, 0]).norm() > 1e-3);
    }

    #[test]
    fn color_variants() {
        let l = SpaceLayout::default();
        let blue = build_color_variant(2.0, 0.3, 0.0, 0.0, ColorVariant::BlueBlue, &l).unwrap();
        let red = build_color_variant(2.0, 0.3, 0.0, 0.0, ColorVariant::RedRed, &l).unwrap();
        // Without QR drive the variants differ only in the photon energies.
        let opp = build_color_variant(2.0, 0.3, 0.0, 0.0, ColorVariant::OppositeDetuning, &l).unwrap();
        assert!(blue.matrix().max_abs_diff(&build_even_parity_system(2.0, 0.3, 0.0, 0.0, &l).unwrap().matrix().clone()) == 0.0);
        let r1 = basis(&l, [0, 0, 1, 0]);
        assert!((red.get(r1, r1).re + opp.get(r1, r1).re).abs() < 1e-12);
        assert!("green".parse::<ColorVariant>().is_err());
    }

    #[test]
    fn qubit_block_product_spectrum() {
        let drives = DriveSet::new().with_rabi_q1(1.0, 0.0).with_rabi_q2(1.0, 0.0);
        let e = eigendecompose(&build_qubit_block(&drives).unwrap()).unwrap();
        for (a, b) in e.values.iter().zip([-1.0, 0.0, 0.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn qubit_block_matches_printed_dressed_parity_matrix() {
        let (omega, a1) = (1.7, 0.6);
        let drives = DriveSet::new().with_qq(SidebandColor::Blue, omega, 0.0).unwrap().with_rabi_q1(a1, 0.0);
        let hb = build_qubit_block(&drives).unwrap();
        let (o, a) = (omega / 2.0, a1 / 2.0);
        let printed = CMatrix::from_real_rows(&[
            &[0.0, 0.0, a, o],
            &[0.0, 0.0, 0.0, a],
            &[a, 0.0, 0.0, 0.0],
            &[o, a, 0.0, 0.0],
        ]);
        assert_eq!(hb.matrix().max_abs_diff(&printed), 0.0);

        let drives = DriveSet::new().with_qq(SidebandColor::Red, omega, 0.0).unwrap().with_rabi_q1(a1, 0.0);
        let hr = build_qubit_block(&drives).unwrap();
        let printed = CMatrix::from_real_rows(&[
            &[0.0, 0.0, a, 0.0],
            &[0.0, 0.0, o, a],
            &[a, o, 0.0, 0.0],
            &[0.0, a, 0.0, 0.0],
        ]);
        assert_eq!(hr.matrix().max_abs_diff(&printed), 0.0);
    }

    #[test]
    fn qubit_block_product_and_rabi_dressed_layouts() {
        let (a1, a2, d1, d2) = (0.4, 0.9, 0.3, -0.2);
        let hp = build_qubit_block(&DriveSet::new().with_rabi_q1(a1, d1).with_rabi_q2(a2, d2)).unwrap();
        let printed = CMatrix::from_real_rows(&[
            &[0.0, a2 / 2.0, a1 / 2.0, 0.0],
            &[a2 / 2.0, d2, 0.0, a1 / 2.0],
            &[a1 / 2.0, 0.0, d1, a2 / 2.0],
            &[0.0, a1 / 2.0, a2 / 2.0, d1 + d2],
        ]);
        assert!(hp.matrix().max_abs_diff(&printed) < 1e-15);

        let (omega, delta) = (2.0, 0.8);
        let hg = build_qubit_block(
            &DriveSet::new()
                .with_qq(SidebandColor::Blue, omega, delta)
                .unwrap()
                .with_rabi_q1(a1, 0.0)
                .with_placement(DetuningPlacement::Symmetric),
        )
        .unwrap();
        let (o, a, h) = (omega / 2.0, a1 / 2.0, delta / 2.0);
        let printed = CMatrix::from_real_rows(&[
            &[-h, 0.0, a, o],
            &[0.0, h, 0.0, a],
            &[a, 0.0, -h, 0.0],
            &[o, a, 0.0, h],
        ]);
        assert!(hg.matrix().max_abs_diff(&printed) < 1e-15);

        let hg0 = build_qubit_block(
            &DriveSet::new()
                .with_qq(SidebandColor::Blue, omega, 0.0)
                .unwrap()
                .with_placement(DetuningPlacement::Symmetric),
        )
        .unwrap();
        let e = eigendecompose(&hg0).unwrap();
        let v = e.vector(0);
        let s = 1.0 / 2f64.sqrt();
        assert!((v[0].re - s).abs() < 1e-12 && (v[3].re + s).abs() < 1e-12);
    }

    #[test]
    fn only_one_qq_sideband() {
        let d = DriveSet::new().with_qq(SidebandColor::Blue, 1.0, 0.0).unwrap();
        assert_eq!(d.with_qq(SidebandColor::Red, 1.0, 0.0).unwrap_err(), Error::MultipleQqSidebands);
    }

    #[test]
    fn negative_rate_rejected() {
        let d = DriveSet::new().with_rabi_q1(-1.0, 0.0);
        assert!(d.hamiltonian(&SpaceLayout::default()).is_err());
    }

    #[test]
    fn plan_for_even_parity_block() {
        let omega = mhz_to_angular(2.0);
        let hqq = build_qubit_block(&even_parity_drives(omega, 0.0, 0.0, 0.0).unwrap()).unwrap();
        let plan =
            plan_stabilization(&hqq, 1.0, 1.0, [SidebandColor::Blue; 2], GapAssignment::Ascending).unwrap();
        assert!((plan.qr1_detuning() - mhz_to_angular(1.0)).abs() < 1e-9);
        assert!((plan.qr2_detuning() - mhz_to_angular(1.0)).abs() < 1e-9);
        assert!((plan.delta_big - omega).abs() < 1e-9);
        let h = plan.hamiltonian(&SpaceLayout::default()).unwrap();
        let direct = build_even_parity_system(omega, 0.0, 1.0, 1.0, &SpaceLayout::default()).unwrap();
        assert!(h.matrix().max_abs_diff(direct.matrix()) < 1e-9);
    }

    #[test]
    fn plan_rejects_unmatched_block() {
        let mut m = build_qubit_block(&DriveSet::new().with_rabi_q1(1.0, 0.2).with_rabi_q2(0.7, 0.1))
            .unwrap()
            .into_matrix();
        m[(0, 0)] += C64::new(0.35, 0.0);
        let op = ComplexOperator::new(SpaceLayout::qubit_pair(), m).unwrap();
        assert!(matches!(
            plan_stabilization(&op, 1.0, 1.0, [SidebandColor::Blue; 2], GapAssignment::Ascending),
            Err(Error::EnergyMismatch { .. })
        ));
    }

    #[test]
    fn lindblad_channels() {
        let l = SpaceLayout::default();
        let h = ComplexOperator::zero(&l);
        let noise = NoiseSpec {
            kappa1: mhz_to_angular(0.33),
            kappa2: mhz_to_angular(0.43),
            t1_q1: 25.0,
            t1_q2: 12.0,
            tphi_q1: f64::INFINITY,
            tphi_q2: f64::INFINITY,
        };
        let p = build_lindblad(&h, &noise).unwrap();
        assert_eq!(p.collapse_ops.len(), 4);
        let p = build_lindblad(&h, &NoiseSpec { tphi_q1: 25.0, tphi_q2: 25.0, ..noise }).unwrap();
        assert_eq!(p.collapse_ops.len(), 6);
        assert!(build_lindblad(&h, &NoiseSpec { kappa1: 0.0, ..noise }).is_err());
        assert!(build_lindblad(&h, &NoiseSpec { t1_q1: -1.0, ..noise }).is_err());
    }
}
