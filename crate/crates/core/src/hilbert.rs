//! Composite Hilbert space of two qubits and their readout resonators.
//!
//! States are indexed as |Q1 Q2 R1 R2⟩ in mixed radix, most significant
//! factor first: `index = ((iq1·d_q2 + iq2)·d_r1 + ir1)·d_r2 + ir2`. A layout
//! may hold any ordered subset of the four factors, which is handy for
//! single-qubit checks.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_complex::Complex64 as C64;

use crate::linalg::{self, CMatrix};
use crate::{Error, Result};
#[allow(unused_imports)]
use num_traits::Float;

/// Tolerance used to set the Hermitian flag on operators.
pub const HERMITIAN_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Subsystem {
    Q1,
    Q2,
    R1,
    R2,
}

impl Subsystem {
    pub const ALL: [Subsystem; 4] = [Subsystem::Q1, Subsystem::Q2, Subsystem::R1, Subsystem::R2];

    pub fn label(self) -> &'static str {
        match self {
            Subsystem::Q1 => "q1",
            Subsystem::Q2 => "q2",
            Subsystem::R1 => "r1",
            Subsystem::R2 => "r2",
        }
    }

    pub fn is_qubit(self) -> bool {
        matches!(self, Subsystem::Q1 | Subsystem::Q2)
    }
}

impl fmt::Display for Subsystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Subsystem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "q1" => Ok(Subsystem::Q1),
            "q2" => Ok(Subsystem::Q2),
            "r1" => Ok(Subsystem::R1),
            "r2" => Ok(Subsystem::R2),
            other => Err(Error::InvalidLayout(format!("unknown subsystem label {other:?}"))),
        }
    }
}

/// Ordered tensor factors of the simulated space.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpaceLayout {
    factors: Vec<(Subsystem, usize)>,
}

impl SpaceLayout {
    pub fn new(factors: impl IntoIterator<Item = (Subsystem, usize)>) -> Result<Self> {
        let factors: Vec<_> = factors.into_iter().collect();
        if factors.is_empty() {
            return Err(Error::InvalidLayout("layout has no factors".into()));
        }
        for w in factors.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(Error::InvalidLayout(format!(
                    "factors must be unique and ordered q1, q2, r1, r2 (got {} before {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some((s, d)) = factors.iter().find(|(_, d)| *d < 2) {
            return Err(Error::InvalidLayout(format!("{s} has dimension {d} < 2")));
        }
        Ok(Self { factors })
    }

    /// Two qubits and two resonators truncated at `resonator_dim` levels.
    pub fn with_resonator_dim(resonator_dim: usize) -> Result<Self> {
        Self::new([
            (Subsystem::Q1, 2),
            (Subsystem::Q2, 2),
            (Subsystem::R1, resonator_dim),
            (Subsystem::R2, resonator_dim),
        ])
    }

    /// The two-qubit space in basis order (gg, ge, eg, ee).
    pub fn qubit_pair() -> Self {
        Self { factors: vec![(Subsystem::Q1, 2), (Subsystem::Q2, 2)] }
    }

    pub fn factors(&self) -> &[(Subsystem, usize)] {
        &self.factors
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().map(|(_, d)| d).product()
    }

    pub fn position(&self, s: Subsystem) -> Option<usize> {
        self.factors.iter().position(|(l, _)| *l == s)
    }

    pub fn contains(&self, s: Subsystem) -> bool {
        self.position(s).is_some()
    }

    pub fn dim_of(&self, s: Subsystem) -> Option<usize> {
        self.position(s).map(|p| self.factors[p].1)
    }

    /// Per-factor digits of a flat basis index.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.factors.len()];
        for (slot, (_, d)) in out.iter_mut().zip(&self.factors).rev() {
            *slot = index % d;
            index /= d;
        }
        out
    }

    /// Flat index from per-factor digits.
    pub fn index(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.factors.len());
        digits.iter().zip(&self.factors).fold(0, |acc, (&x, (_, d))| acc * d + x)
    }

    /// Index of the product basis state with the given local levels; factors
    /// that are not mentioned sit in their ground level.
    pub fn basis_index(&self, levels: &[(Subsystem, usize)]) -> Result<usize> {
        let mut digits = vec![0; self.factors.len()];
        for &(s, level) in levels {
            let p = self.position(s).ok_or(Error::UnknownSubsystem(s))?;
            if level >= self.factors[p].1 {
                return Err(Error::InvalidParameter(format!("level {level} out of range for {s}")));
            }
            digits[p] = level;
        }
        Ok(self.index(&digits))
    }

    /// Whether the layout starts with two two-level qubits, as required by
    /// anything that embeds a 4×4 qubit block.
    pub fn has_qubit_pair(&self) -> bool {
        self.factors.len() >= 2
            && self.factors[0] == (Subsystem::Q1, 2)
            && self.factors[1] == (Subsystem::Q2, 2)
    }

    /// Product of the dimensions of every factor after the two qubits.
    pub fn resonator_dim(&self) -> usize {
        self.factors.iter().skip(2).map(|(_, d)| d).product()
    }
}

impl Default for SpaceLayout {
    fn default() -> Self {
        Self::with_resonator_dim(2).expect("default layout is valid")
    }
}

/// Dense operator on a [`SpaceLayout`].
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexOperator {
    layout: SpaceLayout,
    matrix: CMatrix,
    hermitian: bool,
}

impl ComplexOperator {
    pub fn new(layout: SpaceLayout, matrix: CMatrix) -> Result<Self> {
        if matrix.dim() != layout.dim() {
            return Err(Error::DimensionMismatch { expected: layout.dim(), got: matrix.dim() });
        }
        let hermitian = matrix.hermitian_defect() < HERMITIAN_TOL;
        Ok(Self { layout, matrix, hermitian })
    }

    fn from_parts(layout: SpaceLayout, matrix: CMatrix) -> Self {
        let hermitian = matrix.hermitian_defect() < HERMITIAN_TOL;
        Self { layout, matrix, hermitian }
    }

    pub fn zero(layout: &SpaceLayout) -> Self {
        Self { matrix: CMatrix::zeros(layout.dim()), layout: layout.clone(), hermitian: true }
    }

    pub fn identity(layout: &SpaceLayout) -> Self {
        Self { matrix: CMatrix::identity(layout.dim()), layout: layout.clone(), hermitian: true }
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.matrix[(i, j)]
    }

    pub fn dagger(&self) -> Self {
        Self { layout: self.layout.clone(), matrix: self.matrix.dagger(), hermitian: self.hermitian }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { layout: self.layout.clone(), matrix: self.matrix.scale_real(s), hermitian: self.hermitian }
    }

    fn check_layout(&self, other: &Self) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch(format!("{:?} vs {:?}", self.layout, other.layout)));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_layout(other)?;
        Ok(Self::from_parts(self.layout.clone(), &self.matrix + &other.matrix))
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_layout(other)?;
        Ok(Self::from_parts(self.layout.clone(), self.matrix.matmul(&other.matrix)))
    }

    /// `self + self†`, the "h.c." completion used by every drive term.
    pub fn plus_hc(&self) -> Self {
        Self::from_parts(self.layout.clone(), &self.matrix + &self.matrix.dagger())
    }

    /// Embeds a 4×4 operator on (q1, q2) as `block ⊗ I` on the remaining
    /// factors of `layout`.
    pub fn embed_qubit_block(block: &ComplexOperator, layout: &SpaceLayout) -> Result<Self> {
        if block.dim() != 4 {
            return Err(Error::DimensionMismatch { expected: 4, got: block.dim() });
        }
        if !layout.has_qubit_pair() {
            return Err(Error::InvalidLayout("layout must start with two-level q1 and q2".into()));
        }
        let rest = CMatrix::identity(layout.resonator_dim());
        Ok(Self::from_parts(layout.clone(), block.matrix.kron(&rest)))
    }
}

impl core::ops::Add<&ComplexOperator> for &ComplexOperator {
    type Output = ComplexOperator;

    /// Panics on layout mismatch; see [`ComplexOperator::try_add`].
    fn add(self, rhs: &ComplexOperator) -> ComplexOperator {
        self.try_add(rhs).expect("operator layouts differ")
    }
}

impl core::ops::Mul<&ComplexOperator> for &ComplexOperator {
    type Output = ComplexOperator;

    /// Panics on layout mismatch; see [`ComplexOperator::try_mul`].
    fn mul(self, rhs: &ComplexOperator) -> ComplexOperator {
        self.try_mul(rhs).expect("operator layouts differ")
    }
}

/// Lowering operator of `subsystem`, identity on every other factor.
pub fn annihilation(layout: &SpaceLayout, subsystem: Subsystem) -> Result<ComplexOperator> {
    let pos = layout.position(subsystem).ok_or(Error::UnknownSubsystem(subsystem))?;
    let n = layout.dim();
    let mut m = CMatrix::zeros(n);
    for col in 0..n {
        let mut digits = layout.digits(col);
        let level = digits[pos];
        if level == 0 {
            continue;
        }
        digits[pos] = level - 1;
        let row = layout.index(&digits);
        m[(row, col)] = C64::new((level as f64).sqrt(), 0.0);
    }
    Ok(ComplexOperator { layout: layout.clone(), matrix: m, hermitian: false })
}

/// a†a for `subsystem`.
pub fn number(layout: &SpaceLayout, subsystem: Subsystem) -> Result<ComplexOperator> {
    let pos = layout.position(subsystem).ok_or(Error::UnknownSubsystem(subsystem))?;
    let diag: Vec<f64> = (0..layout.dim()).map(|i| layout.digits(i)[pos] as f64).collect();
    Ok(ComplexOperator { layout: layout.clone(), matrix: CMatrix::diagonal(&diag), hermitian: true })
}

/// Spectrum of a Hermitian operator.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    /// Ascending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns.
    pub vectors: CMatrix,
}

impl EigenSystem {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn eigendecompose(op: &ComplexOperator) -> Result<EigenSystem> {
    if !op.is_hermitian() {
        return Err(Error::NotHermitian(op.matrix.hermitian_defect()));
    }
    let e = linalg::eigh(&op.matrix);
    Ok(EigenSystem { values: e.values, vectors: e.vectors })
}

/// Trace tolerance of a validated [`DensityMatrix`].
pub const TRACE_TOL: f64 = 1e-9;
/// Most negative eigenvalue a validated [`DensityMatrix`] may have.
pub const POSITIVITY_TOL: f64 = 1e-8;

/// Validated quantum state.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    layout: SpaceLayout,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates with the default tolerances (Hermitian 1e-9, trace 1e-9,
    /// eigenvalues ≥ −1e-8).
    pub fn new(layout: SpaceLayout, matrix: CMatrix) -> Result<Self> {
        Self::with_tolerance(layout, matrix, TRACE_TOL, POSITIVITY_TOL)
    }

    /// Validates with caller-chosen trace and positivity tolerances.
    pub fn with_tolerance(layout: SpaceLayout, matrix: CMatrix, trace_tol: f64, eig_tol: f64) -> Result<Self> {
        if matrix.dim() != layout.dim() {
            return Err(Error::DimensionMismatch { expected: layout.dim(), got: matrix.dim() });
        }
        if matrix.as_slice().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite entries".into()));
        }
        let defect = matrix.hermitian_defect();
        if defect > HERMITIAN_TOL.max(trace_tol) {
            return Err(Error::InvalidState(format!("not Hermitian (defect {defect:e})")));
        }
        let tr = matrix.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > trace_tol {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min_eig = linalg::eigvalsh(&matrix).first().copied().unwrap_or(0.0);
        if min_eig < -eig_tol {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(Self { layout, matrix })
    }

    pub(crate) fn from_trusted(layout: SpaceLayout, matrix: CMatrix) -> Self {
        debug_assert_eq!(layout.dim(), matrix.dim());
        Self { layout, matrix }
    }

    /// |ψ⟩⟨ψ| for a (not necessarily normalized) state vector.
    pub fn pure(layout: SpaceLayout, psi: &[C64]) -> Result<Self> {
        if psi.len() != layout.dim() {
            return Err(Error::DimensionMismatch { expected: layout.dim(), got: psi.len() });
        }
        let norm = linalg::vec_norm(psi);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let unit: Vec<C64> = psi.iter().map(|z| z / norm).collect();
        Ok(Self { matrix: CMatrix::outer(&unit, &unit), layout })
    }

    pub fn basis_state(layout: SpaceLayout, index: usize) -> Result<Self> {
        if index >= layout.dim() {
            return Err(Error::DimensionMismatch { expected: layout.dim(), got: index });
        }
        let mut m = CMatrix::zeros(layout.dim());
        m[(index, index)] = C64::new(1.0, 0.0);
        Ok(Self { layout, matrix: m })
    }

    /// All factors in their ground level (|gg00⟩ for the default layout).
    pub fn ground(layout: SpaceLayout) -> Self {
        Self::basis_state(layout, 0).expect("index 0 always exists")
    }

    pub fn maximally_mixed(layout: SpaceLayout) -> Self {
        let n = layout.dim();
        Self { matrix: CMatrix::identity(n).scale_real(1.0 / n as f64), layout }
    }

    /// Convex combination `p·self + (1−p)·other`.
    pub fn mix(&self, other: &Self, p: f64) -> Result<Self> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch("cannot mix states on different layouts".into()));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("mixing weight {p} outside [0, 1]")));
        }
        let m = &self.matrix.scale_real(p) + &other.matrix.scale_real(1.0 - p);
        Ok(Self { layout: self.layout.clone(), matrix: m })
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.matrix[(i, j)]
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::eigvalsh(&self.matrix).first().copied().unwrap_or(0.0)
    }

    /// ½‖ρ − σ‖₁
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch("trace distance across layouts".into()));
        }
        let diff = &self.matrix - &other.matrix;
        Ok(0.5 * linalg::eigvalsh(&diff).iter().map(|v| v.abs()).sum::<f64>())
    }

    pub fn population(&self, index: usize) -> f64 {
        self.matrix[(index, index)].re
    }
}

/// Reduced state on the `keep` factors (kept in layout order).
pub fn partial_trace(rho: &DensityMatrix, keep: &[Subsystem]) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(Error::EmptyKeepSet);
    }
    let layout = rho.layout();
    for &s in keep {
        if !layout.contains(s) {
            return Err(Error::UnknownSubsystem(s));
        }
    }
    let kept: Vec<usize> = (0..layout.factors().len()).filter(|&p| keep.contains(&layout.factors()[p].0)).collect();
    if kept.len() == layout.factors().len() {
        return Ok(rho.clone());
    }
    let reduced = SpaceLayout::new(kept.iter().map(|&p| layout.factors()[p]))?;
    let traced: Vec<usize> = (0..layout.factors().len()).filter(|p| !kept.contains(p)).collect();
    let traced_dim: usize = traced.iter().map(|&p| layout.factors()[p].1).product();
    let traced_layout_dims: Vec<usize> = traced.iter().map(|&p| layout.factors()[p].1).collect();

    let n = reduced.dim();
    let mut out = CMatrix::zeros(n);
    let mut full = vec![0usize; layout.factors().len()];
    for i in 0..n {
        let di = reduced.digits(i);
        for j in 0..n {
            let dj = reduced.digits(j);
            let mut acc = C64::new(0.0, 0.0);
            for t in 0..traced_dim {
                // expand t over the traced factors
                let mut rem = t;
                let mut tdig = vec![0usize; traced.len()];
                for (slot, d) in tdig.iter_mut().zip(&traced_layout_dims).rev() {
                    *slot = rem % d;
                    rem /= d;
                }
                for (k, &p) in kept.iter().enumerate() {
                    full[p] = di[k];
                }
                for (k, &p) in traced.iter().enumerate() {
                    full[p] = tdig[k];
                }
                let row = layout.index(&full);
                for (k, &p) in kept.iter().enumerate() {
                    full[p] = dj[k];
                }
                let col = layout.index(&full);
                acc += rho.matrix[(row, col)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(DensityMatrix { layout: reduced, matrix: out })
}

/// Tr(ρ·op).
pub fn expectation(rho: &DensityMatrix, op: &ComplexOperator) -> Result<C64> {
    if rho.layout() != op.layout() {
        return Err(Error::LayoutMismatch("state and operator live on different layouts".into()));
    }
    let n = rho.dim();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += rho.matrix[(i, j)] * op.matrix[(j, i)];
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn local_lowering_operator() {
        let l = SpaceLayout::new([(Subsystem::Q1, 2)]).unwrap();
        let a = annihilation(&l, Subsystem::Q1).unwrap();
        assert_eq!(a.matrix(), &CMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]));
        assert!(a.try_mul(&a).unwrap().matrix().max_abs() == 0.0);
    }

    #[test]
    fn resonator_ladder_entries() {
        let l = SpaceLayout::new([(Subsystem::R1, 4)]).unwrap();
        let a = annihilation(&l, Subsystem::R1).unwrap();
        for m in 0..3 {
            assert!((a.get(m, m + 1) - c(((m + 1) as f64).sqrt())).norm() < 1e-15);
        }
    }

    #[test]
    fn lowering_q1_matrix_element_in_default_layout() {
        // Oracle: index arithmetic by hand. |eg00⟩ has iq1 = 1 → index 8.
        let l = SpaceLayout::default();
        let a = annihilation(&l, Subsystem::Q1).unwrap();
        let gg00 = 0;
        let eg00 = ((1 * 2 + 0) * 2 + 0) * 2 + 0;
        assert_eq!(eg00, 8);
        assert_eq!(a.get(gg00, eg00), c(1.0));
        assert_eq!(l.basis_index(&[(Subsystem::Q1, 1)]).unwrap(), eg00);
    }

    #[test]
    fn number_operators_are_hermitian() {
        let l = SpaceLayout::with_resonator_dim(3).unwrap();
        for s in Subsystem::ALL {
            let a = annihilation(&l, s).unwrap();
            let n = a.dagger().try_mul(&a).unwrap();
            assert!(n.matrix().hermitian_defect() < 1e-12);
            assert!(n.matrix().max_abs_diff(number(&l, s).unwrap().matrix()) < 1e-12);
        }
    }

    #[test]
    fn unknown_subsystem_is_rejected() {
        let l = SpaceLayout::qubit_pair();
        assert_eq!(annihilation(&l, Subsystem::R1).unwrap_err(), Error::UnknownSubsystem(Subsystem::R1));
    }

    #[test]
    fn layout_validation() {
        assert!(SpaceLayout::new([(Subsystem::Q2, 2), (Subsystem::Q1, 2)]).is_err());
        assert!(SpaceLayout::new([(Subsystem::Q1, 1)]).is_err());
        assert!(SpaceLayout::new([(Subsystem::Q1, 2), (Subsystem::Q1, 2)]).is_err());
        assert_eq!(SpaceLayout::default().dim(), 16);
    }

    #[test]
    fn eigendecompose_examples() {
        let l = SpaceLayout::new([(Subsystem::Q1, 3)]).unwrap();
        let d = ComplexOperator::new(l, CMatrix::diagonal(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(eigendecompose(&d).unwrap().values, vec![1.0, 2.0, 3.0]);

        let l = SpaceLayout::new([(Subsystem::Q1, 2)]).unwrap();
        let (omega, delta) = (2.0, 0.0);
        let block = CMatrix::from_real_rows(&[&[0.0, omega / 2.0], &[omega / 2.0, delta]]);
        let e = eigendecompose(&ComplexOperator::new(l.clone(), block).unwrap()).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);

        let a = annihilation(&l, Subsystem::Q1).unwrap();
        assert!(matches!(eigendecompose(&a), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn partial_trace_examples() {
        let l = SpaceLayout::default();
        let gg00 = DensityMatrix::ground(l.clone());
        let r = partial_trace(&gg00, &[Subsystem::Q1, Subsystem::Q2]).unwrap();
        assert_eq!(r.layout(), &SpaceLayout::qubit_pair());
        assert_eq!(r.get(0, 0), c(1.0));

        let mixed = DensityMatrix::maximally_mixed(l.clone());
        let r = partial_trace(&mixed, &[Subsystem::Q1, Subsystem::Q2]).unwrap();
        assert!(r.matrix().max_abs_diff(&CMatrix::identity(4).scale_real(0.25)) < 1e-15);

        // Ψ− ⊗ |00⟩ traced down to q1. Oracle: explicit sum over the traced
        // indices of the 16-dim matrix.
        let mut psi = vec![c(0.0); 16];
        psi[0] = c(1.0 / 2f64.sqrt());
        psi[l.basis_index(&[(Subsystem::Q1, 1), (Subsystem::Q2, 1)]).unwrap()] = c(-1.0 / 2f64.sqrt());
        let rho = DensityMatrix::pure(l.clone(), &psi).unwrap();
        let r = partial_trace(&rho, &[Subsystem::Q1]).unwrap();
        let mut oracle = CMatrix::zeros(2);
        for a in 0..2 {
            for b in 0..2 {
                for rest in 0..8 {
                    oracle[(a, b)] += rho.get(a * 8 + rest, b * 8 + rest);
                }
            }
        }
        assert!(r.matrix().max_abs_diff(&oracle) < 1e-15);
        assert!(r.matrix().max_abs_diff(&CMatrix::identity(2).scale_real(0.5)) < 1e-15);

        assert_eq!(partial_trace(&rho, &[]).unwrap_err(), Error::EmptyKeepSet);
        assert_eq!(partial_trace(&rho, &Subsystem::ALL).unwrap(), rho);
    }

    #[test]
    fn expectation_examples() {
        let l = SpaceLayout::new([(Subsystem::Q1, 2)]).unwrap();
        let n = number(&l, Subsystem::Q1).unwrap();
        let excited = DensityMatrix::basis_state(l.clone(), 1).unwrap();
        assert_eq!(expectation(&excited, &n).unwrap(), c(1.0));
        assert_eq!(expectation(&excited, &ComplexOperator::identity(&l)).unwrap(), c(1.0));
        let p = 0.3;
        let thermal = DensityMatrix::ground(l.clone()).mix(&excited, p).unwrap();
        assert!((expectation(&thermal, &n).unwrap() - c(1.0 - p)).norm() < 1e-15);

        let other = SpaceLayout::qubit_pair();
        assert!(expectation(&DensityMatrix::ground(other), &n).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        let l = SpaceLayout::qubit_pair();
        let bad = CMatrix::diagonal(&[1.2, -0.2, 0.0, 0.0]);
        assert!(DensityMatrix::new(l.clone(), bad).is_err());
        let bad_trace = CMatrix::diagonal(&[0.5, 0.2, 0.0, 0.0]);
        assert!(DensityMatrix::new(l, bad_trace).is_err());
    }
}
