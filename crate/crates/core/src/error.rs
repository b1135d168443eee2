use alloc::string::String;

use crate::hilbert::Subsystem;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("subsystem {0} is not part of the layout")]
    UnknownSubsystem(Subsystem),
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("operator is not Hermitian (max |M - M^†| = {0:e})")]
    NotHermitian(f64),
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("partial trace needs at least one kept subsystem")]
    EmptyKeepSet,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("only one QQ sideband may be active at a time")]
    MultipleQqSidebands,
    #[error("energy matching violated: |E_A + E_D - E_B - E_C| = {mismatch:e} (relative {relative:e})")]
    EnergyMismatch { mismatch: f64, relative: f64 },
    #[error("integration failed at t = {time} us: {reason}")]
    StepFailure { time: f64, reason: String },
    #[error("steady state is not unique (pivot ratio {0:e})")]
    DegenerateKernel(f64),
    #[error("rate chain has no unique steady state")]
    ReducibleChain,
    #[error("exponential fit did not converge: {0}")]
    FitFailed(String),
    #[error("coupler bias at the cos(phi_dc) = 0 singularity")]
    FluxSingularity,
    #[error("coupler is outside the adiabatic regime (E_jc / E_j = {0})")]
    NotAdiabatic(f64),
    #[error("readout fidelity {0} gives a singular confusion matrix")]
    SingularConfusion(f64),
    #[error("tomography settings do not cover Pauli {0}")]
    IncompleteSettings(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
