//! Two-qubit state tomography: simulated readout with shot noise and
//! symmetric readout error, and linear-inversion reconstruction.
//!
//! Pre-rotations are X90 = exp(−iπσx/4) and Y90 = exp(−iπσy/4), applied
//! before a computational-basis readout. With this convention X90 maps +σy
//! onto the readout axis and Y90 maps −σx.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hilbert::{DensityMatrix, SpaceLayout};
use crate::linalg::{self, CMatrix};
use crate::{Error, Result, C64};
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PreRotation {
    I,
    X90,
    Y90,
}

impl PreRotation {
    pub const ALL: [PreRotation; 3] = [PreRotation::I, PreRotation::X90, PreRotation::Y90];

    pub fn label(self) -> &'static str {
        match self {
            PreRotation::I => "I",
            PreRotation::X90 => "X90",
            PreRotation::Y90 => "Y90",
        }
    }

    pub fn unitary(self) -> CMatrix {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let (r, i) = (C64::new(h, 0.0), C64::new(0.0, -h));
        match self {
            PreRotation::I => CMatrix::identity(2),
            PreRotation::X90 => CMatrix::from_row_major(vec![r, i, i, r]),
            PreRotation::Y90 => CMatrix::from_row_major(vec![r, C64::new(-h, 0.0), C64::new(h, 0.0), r]),
        }
    }

    /// Pauli index (1 = X, 2 = Y, 3 = Z) and sign of U†σzU.
    pub fn measured_pauli(self) -> (usize, f64) {
        let u = self.unitary();
        let m = u.dagger().matmul(&pauli(3)).matmul(&u);
        for k in 1..4 {
            let c = m.matmul(&pauli(k)).trace().re / 2.0;
            if c.abs() > 0.5 {
                return (k, c.signum());
            }
        }
        unreachable!("a rotated Pauli is a Pauli")
    }
}

impl fmt::Display for PreRotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Single-qubit Pauli: 0 = I, 1 = X, 2 = Y, 3 = Z.
pub fn pauli(k: usize) -> CMatrix {
    let (o, z, i) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0));
    CMatrix::from_row_major(match k {
        0 => vec![o, z, z, o],
        1 => vec![z, o, o, z],
        2 => vec![z, -i, i, z],
        3 => vec![o, z, z, -o],
        _ => panic!("Pauli index {k} out of range"),
    })
}

/// Pre-rotation on (q1, q2).
pub type Setting = [PreRotation; 2];

pub fn setting_label(s: &Setting) -> String {
    format!("{}-{}", s[0], s[1])
}

pub const OUTCOMES: [&str; 4] = ["gg", "ge", "eg", "ee"];

/// The nine settings {I, X90, Y90}⊗{I, X90, Y90}.
pub fn default_settings() -> Vec<Setting> {
    PreRotation::ALL.iter().flat_map(|&a| PreRotation::ALL.iter().map(move |&b| [a, b])).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TomographySettings {
    pub shots_per_setting: u64,
    pub pre_rotations: Vec<Setting>,
    pub readout_fidelity_q1: f64,
    pub readout_fidelity_q2: f64,
    pub rng_seed: u64,
}

impl Default for TomographySettings {
    fn default() -> Self {
        Self {
            shots_per_setting: 5000,
            pre_rotations: default_settings(),
            readout_fidelity_q1: 1.0,
            readout_fidelity_q2: 1.0,
            rng_seed: 0,
        }
    }
}

impl TomographySettings {
    pub fn validate(&self) -> Result<()> {
        if self.shots_per_setting == 0 {
            return Err(Error::InvalidParameter("shots_per_setting must be positive".into()));
        }
        if self.pre_rotations.is_empty() {
            return Err(Error::InvalidParameter("no pre-rotation settings".into()));
        }
        for f in [self.readout_fidelity_q1, self.readout_fidelity_q2] {
            if !(f > 0.5 && f <= 1.0) {
                return Err(Error::SingularConfusion(f));
            }
        }
        Ok(())
    }

    fn fidelities(&self) -> [f64; 2] {
        [self.readout_fidelity_q1, self.readout_fidelity_q2]
    }
}

/// Counts per setting over outcomes (gg, ge, eg, ee).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountsTable {
    pub settings: Vec<Setting>,
    pub counts: Vec<[u64; 4]>,
}

impl CountsTable {
    /// (setting label, outcome label, count) rows in setting-major order.
    pub fn rows(&self) -> impl Iterator<Item = (String, &'static str, u64)> + '_ {
        self.settings.iter().zip(&self.counts).flat_map(|(s, c)| {
            let label = setting_label(s);
            OUTCOMES.iter().zip(c).map(move |(o, &n)| (label.clone(), *o, n))
        })
    }

    pub fn shots(&self, index: usize) -> u64 {
        self.counts[index].iter().sum()
    }
}

/// RNG for trial `index` of a seeded batch; distinct indices give
/// independent streams.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn two_qubit(rho: &DensityMatrix) -> Result<()> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch { expected: 4, got: rho.dim() });
    }
    Ok(())
}

/// Readout probabilities for every setting, including readout error.
pub fn outcome_probabilities(rho: &DensityMatrix, s: &TomographySettings) -> Result<Vec<[f64; 4]>> {
    two_qubit(rho)?;
    s.validate()?;
    let f = s.fidelities();
    Ok(s.pre_rotations
        .iter()
        .map(|setting| {
            let u = setting[0].unitary().kron(&setting[1].unitary());
            let rotated = u.matmul(rho.matrix()).matmul(&u.dagger());
            let ideal: [f64; 4] = core::array::from_fn(|k| rotated[(k, k)].re.max(0.0));
            confuse(&ideal, f)
        })
        .collect())
}

/// Applies independent symmetric bit flips with probability 1 − f per qubit.
fn confuse(p: &[f64; 4], f: [f64; 2]) -> [f64; 4] {
    let c = |fid: f64, a: usize, b: usize| if a == b { fid } else { 1.0 - fid };
    core::array::from_fn(|out| {
        let (o1, o2) = (out >> 1, out & 1);
        (0..4).map(|inp| c(f[0], o1, inp >> 1) * c(f[1], o2, inp & 1) * p[inp]).sum()
    })
}

fn unconfuse(q: &[f64; 4], f: [f64; 2]) -> [f64; 4] {
    // Inverse of [[f, 1−f], [1−f, f]] is [[f, f−1], [f−1, f]]/(2f − 1).
    let c = |fid: f64, a: usize, b: usize| (if a == b { fid } else { fid - 1.0 }) / (2.0 * fid - 1.0);
    core::array::from_fn(|out| {
        let (o1, o2) = (out >> 1, out & 1);
        (0..4).map(|inp| c(f[0], o1, inp >> 1) * c(f[1], o2, inp & 1) * q[inp]).sum()
    })
}

/// Samples `shots_per_setting` single shots per setting from the Born
/// probabilities (after readout error), using the settings' seed.
pub fn simulate_tomography(rho: &DensityMatrix, s: &TomographySettings) -> Result<CountsTable> {
    let mut rng = ChaCha8Rng::seed_from_u64(s.rng_seed);
    simulate_tomography_with(rho, s, &mut rng)
}

pub fn simulate_tomography_with<R: Rng>(rho: &DensityMatrix, s: &TomographySettings, rng: &mut R) -> Result<CountsTable> {
    let probs = outcome_probabilities(rho, s)?;
    let counts = probs
        .iter()
        .map(|p| {
            let total: f64 = p.iter().sum();
            let mut cdf = [0.0; 4];
            let mut acc = 0.0;
            for (c, v) in cdf.iter_mut().zip(p) {
                acc += v / total;
                *c = acc;
            }
            let mut n = [0u64; 4];
            for _ in 0..s.shots_per_setting {
                let u: f64 = rng.random();
                let k = cdf.iter().position(|&c| u < c).unwrap_or(3);
                n[k] += 1;
            }
            n
        })
        .collect();
    Ok(CountsTable { settings: s.pre_rotations.clone(), counts })
}

/// Readout-corrected outcome frequencies per setting.
pub fn corrected_frequencies(counts: &CountsTable, s: &TomographySettings) -> Result<Vec<[f64; 4]>> {
    s.validate()?;
    if counts.settings.len() != counts.counts.len() {
        return Err(Error::DimensionMismatch { expected: counts.settings.len(), got: counts.counts.len() });
    }
    let f = s.fidelities();
    counts
        .counts
        .iter()
        .map(|c| {
            let n: u64 = c.iter().sum();
            if n == 0 {
                return Err(Error::InvalidParameter("setting with zero shots".into()));
            }
            let q = c.map(|k| k as f64 / n as f64);
            Ok(unconfuse(&q, f))
        })
        .collect()
}

/// Expectation values ⟨σ_a ⊗ σ_b⟩ indexed `4a + b` from readout-corrected
/// frequencies; entry 0 is 1. Each Pauli is averaged over every setting that
/// measures it.
pub fn pauli_expectations(settings: &[Setting], freqs: &[[f64; 4]]) -> Result<[f64; 16]> {
    let measured: Vec<[(usize, f64); 2]> =
        settings.iter().map(|s| [s[0].measured_pauli(), s[1].measured_pauli()]).collect();
    let mut out = [0.0; 16];
    out[0] = 1.0;
    for a in 0..4 {
        for b in 0..4 {
            if a == 0 && b == 0 {
                continue;
            }
            let mut sum = 0.0;
            let mut hits = 0usize;
            for (m, q) in measured.iter().zip(freqs) {
                let ok1 = a == 0 || m[0].0 == a;
                let ok2 = b == 0 || m[1].0 == b;
                if !(ok1 && ok2) {
                    continue;
                }
                let sign = (if a == 0 { 1.0 } else { m[0].1 }) * (if b == 0 { 1.0 } else { m[1].1 });
                let parity: f64 = (0..4)
                    .map(|k| {
                        let s1 = if a != 0 && (k >> 1) == 1 { -1.0 } else { 1.0 };
                        let s2 = if b != 0 && (k & 1) == 1 { -1.0 } else { 1.0 };
                        s1 * s2 * q[k]
                    })
                    .sum();
                sum += sign * parity;
                hits += 1;
            }
            if hits == 0 {
                const P: [&str; 4] = ["I", "X", "Y", "Z"];
                return Err(Error::IncompleteSettings(format!("{}{}", P[a], P[b])));
            }
            out[4 * a + b] = sum / hits as f64;
        }
    }
    Ok(out)
}

/// ρ = Σ c_ab σ_a⊗σ_b / 4 without any positivity projection.
pub fn linear_inversion(expectations: &[f64; 16]) -> CMatrix {
    let mut m = CMatrix::zeros(4);
    for a in 0..4 {
        for b in 0..4 {
            let p = pauli(a).kron(&pauli(b)).scale_real(expectations[4 * a + b] / 4.0);
            m += &p;
        }
    }
    m
}

/// Clips negative eigenvalues and renormalizes the trace.
pub fn project_to_state(m: &CMatrix) -> Result<DensityMatrix> {
    let e = linalg::eigh(&m.hermitian_part());
    let n = m.dim();
    let clipped: Vec<f64> = e.values.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidState("reconstruction has no positive part".into()));
    }
    let mut out = CMatrix::zeros(n);
    for (k, &w) in clipped.iter().enumerate() {
        if w > 0.0 {
            let v = e.vectors.column(k);
            out += &CMatrix::outer(&v, &v).scale_real(w / total);
        }
    }
    DensityMatrix::new(SpaceLayout::qubit_pair(), out.hermitian_part())
}

/// Readout-corrected linear inversion followed by eigenvalue clipping.
pub fn reconstruct(counts: &CountsTable, s: &TomographySettings) -> Result<DensityMatrix> {
    let freqs = corrected_frequencies(counts, s)?;
    reconstruct_from_frequencies(&counts.settings, &freqs)
}

/// Reconstruction from readout-corrected frequencies (e.g. exact
/// probabilities for an infinite-shot check).
pub fn reconstruct_from_frequencies(settings: &[Setting], freqs: &[[f64; 4]]) -> Result<DensityMatrix> {
    let c = pauli_expectations(settings, freqs)?;
    project_to_state(&linear_inversion(&c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::{phi_minus, psi_minus};

    fn perfect(shots: u64, seed: u64) -> TomographySettings {
        TomographySettings { shots_per_setting: shots, rng_seed: seed, ..Default::default() }
    }

    #[test]
    fn rotation_conventions() {
        assert_eq!(PreRotation::I.measured_pauli(), (3, 1.0));
        assert_eq!(PreRotation::X90.measured_pauli(), (2, 1.0));
        assert_eq!(PreRotation::Y90.measured_pauli(), (1, -1.0));
        assert_eq!(default_settings().len(), 9);
    }

    #[test]
    fn ground_state_identity_setting() {
        let rho = DensityMatrix::ground(SpaceLayout::qubit_pair());
        let c = simulate_tomography(&rho, &perfect(1000, 3)).unwrap();
        assert_eq!(c.counts[0], [1000, 0, 0, 0]);
        assert!(c.counts.iter().all(|n| n.iter().sum::<u64>() == 1000));
    }

    #[test]
    fn mixed_state_counts_are_uniform() {
        let rho = DensityMatrix::maximally_mixed(SpaceLayout::qubit_pair());
        let shots = 20_000u64;
        let c = simulate_tomography(&rho, &perfect(shots, 11)).unwrap();
        let sigma = (shots as f64 * 0.25 * 0.75).sqrt();
        for n in c.counts.iter().flatten() {
            assert!((*n as f64 - shots as f64 / 4.0).abs() < 5.0 * sigma);
        }
    }

    #[test]
    fn readout_error_distribution() {
        let s = TomographySettings {
            shots_per_setting: 1_000_000,
            readout_fidelity_q1: 0.8887,
            readout_fidelity_q2: 0.8176,
            pre_rotations: vec![[PreRotation::I, PreRotation::I]],
            rng_seed: 5,
        };
        let rho = psi_minus().density();
        let c = simulate_tomography(&rho, &s).unwrap();
        // Ψ− in the Z basis: gg and ee with probability 1/2 each.
        let (f1, f2) = (0.8887, 0.8176);
        let p = [
            0.5 * (f1 * f2 + (1.0 - f1) * (1.0 - f2)),
            0.5 * (f1 * (1.0 - f2) + (1.0 - f1) * f2),
            0.5 * ((1.0 - f1) * f2 + f1 * (1.0 - f2)),
            0.5 * ((1.0 - f1) * (1.0 - f2) + f1 * f2),
        ];
        let n = 1e6f64;
        for (k, &pk) in p.iter().enumerate() {
            let sigma = (n * pk * (1.0 - pk)).sqrt();
            assert!((c.counts[0][k] as f64 - n * pk).abs() < 5.0 * sigma);
        }
    }

    #[test]
    fn exact_frequencies_reconstruct_exactly() {
        for target in [psi_minus(), phi_minus()] {
            let rho = DensityMatrix::maximally_mixed(SpaceLayout::qubit_pair()).mix(&target.density(), 0.3).unwrap();
            let s = TomographySettings { readout_fidelity_q1: 0.9, readout_fidelity_q2: 0.8, ..Default::default() };
            let probs = outcome_probabilities(&rho, &s).unwrap();
            let f = s.fidelities();
            let freqs: Vec<[f64; 4]> = probs.iter().map(|q| unconfuse(q, f)).collect();
            let est = reconstruct_from_frequencies(&s.pre_rotations, &freqs).unwrap();
            assert!(est.matrix().max_abs_diff(rho.matrix()) < 1e-12);
        }
    }

    #[test]
    fn sampled_reconstruction_is_close() {
        let rho = psi_minus().density();
        let mut good = 0;
        for trial in 0..40 {
            let s = perfect(5000, 0);
            let c = simulate_tomography_with(&rho, &s, &mut trial_rng(99, trial)).unwrap();
            let est = reconstruct(&c, &s).unwrap();
            if (est.matrix() - rho.matrix()).frobenius_norm() < 0.05 {
                good += 1;
            }
        }
        assert!(good >= 38, "{good}/40");
    }

    #[test]
    fn singular_confusion_rejected() {
        let s = TomographySettings { readout_fidelity_q1: 0.5, ..Default::default() };
        let rho = psi_minus().density();
        assert_eq!(simulate_tomography(&rho, &s).unwrap_err(), Error::SingularConfusion(0.5));
    }

    #[test]
    fn incomplete_settings_rejected() {
        let settings = vec![[PreRotation::I, PreRotation::I]];
        assert!(matches!(
            reconstruct_from_frequencies(&settings, &[[1.0, 0.0, 0.0, 0.0]]),
            Err(Error::IncompleteSettings(_))
        ));
    }

    #[test]
    fn seeded_sampling_is_deterministic() {
        let rho = psi_minus().density();
        let a = simulate_tomography(&rho, &perfect(500, 17)).unwrap();
        let b = simulate_tomography(&rho, &perfect(500, 17)).unwrap();
        let c = simulate_tomography(&rho, &perfect(500, 18)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.rows().count(), 36);
    }
}
