//! Scenario configuration: the JSON schema, per-kind defaults and resolution
//! into a fully specified [`Scenario`].
//!
//! Frequencies are ordinary frequencies in MHz (ω/2π) and times are in µs.

use std::fmt;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use autostab_core::model::{NoiseSpec, OddParityColors, SidebandColor};
use autostab_core::units::mhz_to_angular;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::device::builtin_device_table;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    TimeDomain,
    ThetaSpectroscopy,
    ParitySwitch,
    TphiSweep,
    KappaSweep,
    OmegaKappaMap,
    DressedParitySweep,
    RabiDressedMap,
    RateModelCompare,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 9] = [
        ScenarioKind::TimeDomain,
        ScenarioKind::ThetaSpectroscopy,
        ScenarioKind::ParitySwitch,
        ScenarioKind::TphiSweep,
        ScenarioKind::KappaSweep,
        ScenarioKind::OmegaKappaMap,
        ScenarioKind::DressedParitySweep,
        ScenarioKind::RabiDressedMap,
        ScenarioKind::RateModelCompare,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ScenarioKind::TimeDomain => "time_domain",
            ScenarioKind::ThetaSpectroscopy => "theta_spectroscopy",
            ScenarioKind::ParitySwitch => "parity_switch",
            ScenarioKind::TphiSweep => "tphi_sweep",
            ScenarioKind::KappaSweep => "kappa_sweep",
            ScenarioKind::OmegaKappaMap => "omega_kappa_map",
            ScenarioKind::DressedParitySweep => "dressed_parity_sweep",
            ScenarioKind::RabiDressedMap => "rabi_dressed_map",
            ScenarioKind::RateModelCompare => "rate_model_compare",
        }
    }

    /// The published figure the scenario mirrors.
    pub fn figure(self) -> &'static str {
        match self {
            ScenarioKind::TimeDomain => "Fig. 2",
            ScenarioKind::ThetaSpectroscopy => "Fig. 3",
            ScenarioKind::ParitySwitch => "Fig. 4",
            ScenarioKind::TphiSweep => "Fig. 6(a)",
            ScenarioKind::KappaSweep => "Fig. 6(b)",
            ScenarioKind::OmegaKappaMap => "Fig. 6(c)",
            ScenarioKind::DressedParitySweep => "Fig. 5",
            ScenarioKind::RabiDressedMap => "Fig. 7",
            ScenarioKind::RateModelCompare => "Fig. 3 (analytic overlay)",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ScenarioKind::TimeDomain => "Bell-state fidelity versus time from |gg00>, with simulated tomography",
            ScenarioKind::ThetaSpectroscopy => "Psi_theta / Phi_theta fidelity across the blending angle",
            ScenarioKind::ParitySwitch => "parity signature under alternating even/odd drive segments",
            ScenarioKind::TphiSweep => "steady-state Bell fidelity versus qubit dephasing time",
            ScenarioKind::KappaSweep => "steady-state Bell fidelity versus kappa/W without dephasing",
            ScenarioKind::OmegaKappaMap => "steady-state Bell fidelity over QQ rate and kappa with W = kappa",
            ScenarioKind::DressedParitySweep => "dressed-parity family versus Rabi rate, blue and red QQ sidebands",
            ScenarioKind::RabiDressedMap => "Rabi-dressed family over (delta/Omega, A1/Omega)",
            ScenarioKind::RateModelCompare => "Lindblad steady state against the four-state rate model",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn label(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        }
    }

    pub fn family(self) -> Family {
        match self {
            Parity::Even => Family::PsiTheta,
            Parity::Odd => Family::PhiTheta,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    PsiTheta,
    PhiTheta,
    /// Both Bell families, each with its own drive set.
    BellPairs,
    DressedParity,
    RabiDressed,
}

impl Family {
    pub fn label(self) -> &'static str {
        match self {
            Family::PsiTheta => "psi_theta",
            Family::PhiTheta => "phi_theta",
            Family::BellPairs => "bell_pairs",
            Family::DressedParity => "dressed_parity",
            Family::RabiDressed => "rabi_dressed",
        }
    }

    pub fn parities(self) -> Vec<Parity> {
        match self {
            Family::PsiTheta => vec![Parity::Even],
            Family::PhiTheta => vec![Parity::Odd],
            Family::BellPairs => vec![Parity::Even, Parity::Odd],
            Family::DressedParity | Family::RabiDressed => vec![],
        }
    }
}

/// QR color arrangement for the odd family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QrColors {
    Standard,
    Swapped,
}

impl From<QrColors> for OddParityColors {
    fn from(c: QrColors) -> Self {
        match c {
            QrColors::Standard => OddParityColors::Standard,
            QrColors::Swapped => OddParityColors::Swapped,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QqColor {
    Blue,
    Red,
}

impl From<QqColor> for SidebandColor {
    fn from(c: QqColor) -> Self {
        match c {
            QqColor::Blue => SidebandColor::Blue,
            QqColor::Red => SidebandColor::Red,
        }
    }
}

/// How the robustness-sweep parameter list is read: the printed numbers are
/// either W itself or W/2.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WReading {
    ListedIsW,
    #[default]
    ListedIsHalfW,
}

impl WReading {
    fn factor(self) -> f64 {
        match self {
            WReading::ListedIsW => 1.0,
            WReading::ListedIsHalfW => 2.0,
        }
    }
}

// ---------------------------------------------------------------- raw schema

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub kind: ScenarioKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drives: Option<DrivesConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resonator_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<Evaluation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tomography: Option<TomographyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numerics: Option<Numerics>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrivesConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub even: Option<BellDrivesConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub odd: Option<BellDrivesConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dressed: Option<DressedDrivesConfig>,
    /// Applies to the default W of the robustness sweeps only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_reading: Option<WReading>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BellDrivesConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w1_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w2_mhz: Option<f64>,
    /// Odd family only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qr_colors: Option<QrColors>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DressedDrivesConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w1_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w2_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qq_colors: Option<Vec<QqColor>>,
}

/// A per-qubit time given once for both qubits or as a pair.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerQubit {
    Same(f64),
    Each([f64; 2]),
}

impl PerQubit {
    fn pair(self) -> [f64; 2] {
        match self {
            PerQubit::Same(v) => [v, v],
            PerQubit::Each(p) => p,
        }
    }
}

/// Dephasing times, or the string "none" to switch dephasing off.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DephasingConfig {
    Same(f64),
    Each([f64; 2]),
    Off(String),
}

impl DephasingConfig {
    fn pair(&self) -> Result<[Option<f64>; 2]> {
        Ok(match self {
            DephasingConfig::Same(v) => [Some(*v); 2],
            DephasingConfig::Each([a, b]) => [Some(*a), Some(*b)],
            DephasingConfig::Off(s) if s == "none" => [None; 2],
            DephasingConfig::Off(s) => bail!("noise.tphi_us: expected a number, a pair or \"none\", got \"{s}\""),
        })
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa1_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa2_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1_us: Option<PerQubit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tphi_us: Option<DephasingConfig>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<TargetParams>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_deg: Option<f64>,
}

/// A sweep axis: an explicit list, an inclusive range with a step, or an
/// inclusive range with a point count.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    List(Vec<f64>),
    Step { start: f64, stop: f64, step: f64 },
    Count { start: f64, stop: f64, count: usize },
}

impl Axis {
    pub fn values(&self, name: &str) -> Result<Vec<f64>> {
        let v = match self {
            Axis::List(v) => v.clone(),
            Axis::Step { start, stop, step } => {
                ensure!(*step > 0.0 && step.is_finite(), "grid.{name}: step must be positive");
                ensure!(stop >= start, "grid.{name}: stop must not precede start");
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                (0..=n).map(|i| round_grid(start + i as f64 * step)).collect()
            }
            Axis::Count { start, stop, count } => match count {
                0 => vec![],
                1 => vec![*start],
                _ => (0..*count)
                    .map(|i| round_grid(start + (stop - start) * i as f64 / (*count - 1) as f64))
                    .collect(),
            },
        };
        ensure!(!v.is_empty(), "grid.{name} is empty");
        ensure!(v.iter().all(|x| x.is_finite()), "grid.{name} contains non-finite values");
        Ok(v)
    }
}

/// Removes accumulated binary noise (e.g. 0.30000000000000004 → 0.3).
fn round_grid(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentConfig {
    pub parity: Parity,
    pub duration_us: f64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segments: Option<Vec<SegmentConfig>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_deg: Option<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tphi_us: Option<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_over_w: Option<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_mhz: Option<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_mhz: Option<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a1_over_omega: Option<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_over_omega: Option<Axis>,
}

/// Where a sweep point is evaluated: the Liouvillian steady state, or the
/// state reached from |gg00⟩ after a fixed time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evaluation {
    SteadyState,
    AtTime { at_us: f64 },
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomographyConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enabled: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub readout_fidelity: Option<[f64; 2]>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    /// Re-run every time evolution with half the step and report the drift.
    #[serde(default)]
    pub step_halving_check: bool,
}

// ---------------------------------------------------------- resolved form

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellDrives {
    pub omega_mhz: f64,
    pub w1_mhz: f64,
    pub w2_mhz: f64,
    pub qr_colors: QrColors,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DressedDrives {
    pub omega_mhz: f64,
    pub w1_mhz: f64,
    pub w2_mhz: f64,
    pub qq_colors: Vec<QqColor>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Noise {
    pub kappa_mhz: [f64; 2],
    pub t1_us: [f64; 2],
    /// `None` switches dephasing off.
    pub tphi_us: [Option<f64>; 2],
}

impl Noise {
    pub fn spec(&self) -> NoiseSpec {
        let tphi = self.tphi_us.map(|t| t.unwrap_or(f64::INFINITY));
        NoiseSpec {
            kappa1: mhz_to_angular(self.kappa_mhz[0]),
            kappa2: mhz_to_angular(self.kappa_mhz[1]),
            t1_q1: self.t1_us[0],
            t1_q2: self.t1_us[1],
            tphi_q1: tphi[0],
            tphi_q2: tphi[1],
        }
    }

    pub fn with_kappa(self, kappa_mhz: [f64; 2]) -> Self {
        Self { kappa_mhz, ..self }
    }

    pub fn with_tphi(self, tphi_us: Option<f64>) -> Self {
        Self { tphi_us: [tphi_us; 2], ..self }
    }

    pub fn without_dephasing(self) -> Self {
        self.with_tphi(None)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub family: Family,
    pub theta_deg: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub parity: Parity,
    pub duration_us: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub times_us: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segments: Option<Vec<Segment>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_deg: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tphi_us: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_over_w: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_mhz: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_mhz: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a1_over_omega: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_over_omega: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tomography {
    pub shots: u64,
    pub readout_fidelity: [f64; 2],
}

/// A fully specified scenario. Sections a kind does not use are `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub name: String,
    pub seed: u64,
    pub resonator_dim: usize,
    pub noise: Noise,
    pub target: Target,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub even: Option<BellDrives>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub odd: Option<BellDrives>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dressed: Option<DressedDrives>,
    pub grid: Grid,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<Evaluation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tomography: Option<Tomography>,
    pub numerics: Numerics,
}

impl Scenario {
    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn config_hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("scenario serializes");
        Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn bell(&self, parity: Parity) -> Result<&BellDrives> {
        match parity {
            Parity::Even => self.even.as_ref(),
            Parity::Odd => self.odd.as_ref(),
        }
        .with_context(|| format!("scenario has no {} drive set", parity.label()))
    }

    pub fn axis(&self, name: &str) -> Result<&[f64]> {
        let g = &self.grid;
        let v = match name {
            "times_us" => &g.times_us,
            "theta_deg" => &g.theta_deg,
            "tphi_us" => &g.tphi_us,
            "kappa_over_w" => &g.kappa_over_w,
            "omega_mhz" => &g.omega_mhz,
            "kappa_mhz" => &g.kappa_mhz,
            "a1_over_omega" => &g.a1_over_omega,
            "delta_over_omega" => &g.delta_over_omega,
            _ => bail!("unknown grid axis {name}"),
        };
        v.as_deref().with_context(|| format!("grid.{name} is required for {}", self.kind))
    }
}

// ------------------------------------------------------------- defaults

/// Default drive and noise parameters for each scenario kind.
pub mod defaults {
    use super::*;

    pub const TIME_DOMAIN_EVEN: BellDrives = BellDrives { omega_mhz: 2.0, w1_mhz: 0.47, w2_mhz: 0.47, qr_colors: QrColors::Standard };
    pub const TIME_DOMAIN_ODD: BellDrives = BellDrives { omega_mhz: 3.0, w1_mhz: 0.36, w2_mhz: 0.36, qr_colors: QrColors::Standard };
    pub const TIME_DOMAIN_NOISE: Noise =
        Noise { kappa_mhz: [0.33, 0.43], t1_us: [25.0, 12.0], tphi_us: [Some(25.0), Some(25.0)] };

    /// Robustness-sweep list values {Ω, W1, W2} as printed.
    pub const ROBUST_EVEN_LISTED: [f64; 3] = [1.4, 0.35, 0.35];
    pub const ROBUST_ODD_LISTED: [f64; 3] = [3.0, 0.32, 0.32];
    pub const ROBUST_KAPPA_MHZ: [f64; 2] = [0.30, 0.33];
    pub const ROBUST_T1_US: [f64; 2] = [21.0, 9.0];

    /// Parameters shared by the dressed-parity and Rabi-dressed maps.
    pub const DRESSED_OMEGA_MHZ: f64 = 5.0;
    pub const DRESSED_W_MHZ: f64 = 0.5;
    pub const DRESSED_NOISE: Noise =
        Noise { kappa_mhz: [0.3, 0.33], t1_us: [30.0, 30.0], tphi_us: [Some(30.0), Some(30.0)] };

    pub const SPECTROSCOPY_AT_US: f64 = 40.0;
    pub const TIME_DOMAIN_END_US: f64 = 49.0;
    pub const TOMOGRAPHY_SHOTS: u64 = 5000;

    pub fn switch_segments() -> Vec<Segment> {
        [(Parity::Even, 20.0), (Parity::Odd, 20.0), (Parity::Even, 20.0), (Parity::Odd, 25.0)]
            .into_iter()
            .map(|(parity, duration_us)| Segment { parity, duration_us })
            .collect()
    }
}

const DEFAULT_SEED: u64 = 1;
const DEFAULT_RESONATOR_DIM: usize = 2;

fn step_axis(start: f64, stop: f64, step: f64) -> Axis {
    Axis::Step { start, stop, step }
}

fn merge_bell(base: BellDrives, cfg: Option<&BellDrivesConfig>, parity: Parity) -> Result<BellDrives> {
    let Some(c) = cfg else { return Ok(base) };
    if parity == Parity::Even && c.qr_colors.is_some() {
        bail!("drives.even.qr_colors is not used; the even family always uses blue QR sidebands");
    }
    Ok(BellDrives {
        omega_mhz: c.omega_mhz.unwrap_or(base.omega_mhz),
        w1_mhz: c.w1_mhz.unwrap_or(base.w1_mhz),
        w2_mhz: c.w2_mhz.unwrap_or(base.w2_mhz),
        qr_colors: c.qr_colors.unwrap_or(base.qr_colors),
    })
}

fn robust_bell(listed: [f64; 3], reading: WReading, colors: QrColors) -> BellDrives {
    let f = reading.factor();
    BellDrives { omega_mhz: listed[0], w1_mhz: listed[1] * f, w2_mhz: listed[2] * f, qr_colors: colors }
}

fn merge_noise(base: Noise, cfg: Option<&NoiseConfig>) -> Result<Noise> {
    let Some(c) = cfg else { return Ok(base) };
    Ok(Noise {
        kappa_mhz: [c.kappa1_mhz.unwrap_or(base.kappa_mhz[0]), c.kappa2_mhz.unwrap_or(base.kappa_mhz[1])],
        t1_us: c.t1_us.map(PerQubit::pair).unwrap_or(base.t1_us),
        tphi_us: c.tphi_us.as_ref().map(DephasingConfig::pair).transpose()?.unwrap_or(base.tphi_us),
    })
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    ensure!(v > 0.0 && v.is_finite(), "{name} = {v} must be positive and finite");
    Ok(())
}

fn check_non_negative(name: &str, v: f64) -> Result<()> {
    ensure!(v >= 0.0 && v.is_finite(), "{name} = {v} must be finite and >= 0");
    Ok(())
}

fn validate_bell(name: &str, b: &BellDrives) -> Result<()> {
    check_positive(&format!("drives.{name}.omega_mhz"), b.omega_mhz)?;
    check_non_negative(&format!("drives.{name}.w1_mhz"), b.w1_mhz)?;
    check_non_negative(&format!("drives.{name}.w2_mhz"), b.w2_mhz)
}

fn validate_noise(n: &Noise) -> Result<()> {
    for (i, k) in n.kappa_mhz.iter().enumerate() {
        check_positive(&format!("noise.kappa{}_mhz", i + 1), *k)?;
    }
    for (i, t) in n.t1_us.iter().enumerate() {
        check_positive(&format!("noise.t1_us[{i}]"), *t)?;
    }
    for (i, t) in n.tphi_us.iter().enumerate() {
        if let Some(t) = t {
            check_positive(&format!("noise.tphi_us[{i}]"), *t)?;
        }
    }
    Ok(())
}

fn check_theta(name: &str, theta: f64, allow_pi: bool) -> Result<()> {
    let ok = theta > 0.0 && (theta < 180.0 || (allow_pi && theta == 180.0));
    let range = if allow_pi { "(0, 180]" } else { "(0, 180)" };
    ensure!(ok, "{name} = {theta} must lie in {range} degrees");
    Ok(())
}

/// Which config sections each kind reads; anything else is rejected.
struct Uses {
    families: &'static [Family],
    default_family: Family,
    theta_param: bool,
    bell: bool,
    dressed: bool,
    evaluation: Option<Evaluation>,
    tomography: bool,
    axes: &'static [&'static str],
    times: bool,
    segments: bool,
}

fn uses(kind: ScenarioKind) -> Uses {
    use ScenarioKind::*;
    const BELL: &[Family] = &[Family::PsiTheta, Family::PhiTheta, Family::BellPairs];
    let base = Uses {
        families: BELL,
        default_family: Family::BellPairs,
        theta_param: true,
        bell: true,
        dressed: false,
        evaluation: Some(Evaluation::SteadyState),
        tomography: false,
        axes: &[],
        times: false,
        segments: false,
    };
    match kind {
        TimeDomain => Uses { evaluation: None, tomography: true, times: true, ..base },
        ThetaSpectroscopy => Uses {
            theta_param: false,
            evaluation: Some(Evaluation::AtTime { at_us: defaults::SPECTROSCOPY_AT_US }),
            axes: &["theta_deg"],
            ..base
        },
        ParitySwitch => {
            Uses { families: &[Family::BellPairs], evaluation: None, times: true, segments: true, ..base }
        }
        TphiSweep => Uses { axes: &["tphi_us"], ..base },
        KappaSweep => Uses { axes: &["kappa_over_w"], ..base },
        OmegaKappaMap => Uses { bell: false, axes: &["omega_mhz", "kappa_mhz"], ..base },
        DressedParitySweep => Uses {
            families: &[Family::DressedParity],
            default_family: Family::DressedParity,
            theta_param: false,
            bell: false,
            dressed: true,
            axes: &["a1_over_omega"],
            ..base
        },
        RabiDressedMap => Uses {
            families: &[Family::RabiDressed],
            default_family: Family::RabiDressed,
            theta_param: false,
            bell: false,
            dressed: true,
            axes: &["delta_over_omega", "a1_over_omega"],
            ..base
        },
        RateModelCompare => Uses {
            families: &[Family::PsiTheta],
            default_family: Family::PsiTheta,
            theta_param: false,
            axes: &["theta_deg"],
            ..base
        },
    }
}

fn default_axis(kind: ScenarioKind, name: &str) -> Axis {
    use ScenarioKind::*;
    match (kind, name) {
        (ThetaSpectroscopy, "theta_deg") => step_axis(5.0, 175.0, 5.0),
        (RateModelCompare, "theta_deg") => step_axis(5.0, 180.0, 5.0),
        (TphiSweep, "tphi_us") => Axis::List(vec![1.0, 2.0, 5.0, 10.0, 20.0, 30.0, 50.0, 100.0, 200.0, 500.0, 1000.0]),
        (KappaSweep, "kappa_over_w") => step_axis(0.1, 4.0, 0.1),
        (OmegaKappaMap, "omega_mhz") => step_axis(1.0, 11.0, 0.5),
        (OmegaKappaMap, "kappa_mhz") => step_axis(0.1, 2.1, 0.1),
        (DressedParitySweep, "a1_over_omega") => step_axis(0.0, 3.0, 0.1),
        (RabiDressedMap, "a1_over_omega") => step_axis(0.0, 2.0, 0.1),
        (RabiDressedMap, "delta_over_omega") => step_axis(0.0, 2.0, 0.1),
        _ => unreachable!("no default axis {name} for {kind}"),
    }
}

fn default_noise(kind: ScenarioKind) -> Noise {
    use ScenarioKind::*;
    match kind {
        TimeDomain | ThetaSpectroscopy | ParitySwitch | RateModelCompare => defaults::TIME_DOMAIN_NOISE,
        TphiSweep | KappaSweep | OmegaKappaMap => Noise {
            kappa_mhz: defaults::ROBUST_KAPPA_MHZ,
            t1_us: defaults::ROBUST_T1_US,
            tphi_us: match kind {
                TphiSweep => [Some(30.0); 2],
                _ => [None; 2],
            },
        },
        DressedParitySweep | RabiDressedMap => defaults::DRESSED_NOISE,
    }
}

fn default_bell(kind: ScenarioKind, reading: WReading) -> (BellDrives, BellDrives) {
    use ScenarioKind::*;
    match kind {
        TphiSweep | KappaSweep => (
            robust_bell(defaults::ROBUST_EVEN_LISTED, reading, QrColors::Standard),
            robust_bell(defaults::ROBUST_ODD_LISTED, reading, QrColors::Standard),
        ),
        // The exchanged odd colors are the ones that collapse near 180 deg in
        // the spectroscopy figure; the time-domain colors collapse near 0.
        ThetaSpectroscopy => (defaults::TIME_DOMAIN_EVEN, BellDrives { qr_colors: QrColors::Swapped, ..defaults::TIME_DOMAIN_ODD }),
        _ => (defaults::TIME_DOMAIN_EVEN, defaults::TIME_DOMAIN_ODD),
    }
}

fn section_error(kind: ScenarioKind, section: &str) -> anyhow::Error {
    anyhow::anyhow!("{section} is not used by {kind}")
}

/// Fills every unset field from the defaults of `cfg.kind` and
/// validates the result.
pub fn resolve(cfg: &ConfigFile) -> Result<Scenario> {
    let kind = cfg.kind;
    let u = uses(kind);

    // target
    let tc = cfg.target.clone().unwrap_or_default();
    let family = tc.family.unwrap_or(u.default_family);
    ensure!(
        u.families.contains(&family),
        "target.family {} is not supported by {kind} (allowed: {})",
        family.label(),
        u.families.iter().map(|f| f.label()).collect::<Vec<_>>().join(", ")
    );
    let theta_cfg = tc.params.as_ref().and_then(|p| p.theta_deg);
    if theta_cfg.is_some() && !u.theta_param {
        return Err(section_error(kind, "target.params.theta_deg"));
    }
    let theta_deg = u.theta_param.then(|| theta_cfg.unwrap_or(90.0));
    if let Some(t) = theta_deg {
        check_theta("target.params.theta_deg", t, false)?;
    }

    // drives
    let dc = cfg.drives.clone().unwrap_or_default();
    let reading = dc.w_reading.unwrap_or_default();
    if !u.bell && (dc.even.is_some() || dc.odd.is_some()) {
        return Err(section_error(kind, "drives.even / drives.odd"));
    }
    if !u.dressed && dc.dressed.is_some() {
        return Err(section_error(kind, "drives.dressed"));
    }
    let (mut even, mut odd) = (None, None);
    if u.bell {
        let (de, dodd) = default_bell(kind, reading);
        let parities = family.parities();
        if parities.contains(&Parity::Even) {
            let b = merge_bell(de, dc.even.as_ref(), Parity::Even)?;
            validate_bell("even", &b)?;
            even = Some(b);
        } else if dc.even.is_some() {
            bail!("drives.even is set but target.family {} has no even member", family.label());
        }
        if parities.contains(&Parity::Odd) {
            let b = merge_bell(dodd, dc.odd.as_ref(), Parity::Odd)?;
            validate_bell("odd", &b)?;
            odd = Some(b);
        } else if dc.odd.is_some() {
            bail!("drives.odd is set but target.family {} has no odd member", family.label());
        }
        if kind == ScenarioKind::KappaSweep {
            for (name, b) in [("even", &even), ("odd", &odd)] {
                if let Some(b) = b {
                    ensure!(b.w1_mhz == b.w2_mhz && b.w1_mhz > 0.0, "kappa_sweep needs drives.{name}.w1_mhz = w2_mhz > 0");
                }
            }
        }
    }
    let dressed = if u.dressed {
        let c = dc.dressed.clone().unwrap_or_default();
        let d = DressedDrives {
            omega_mhz: c.omega_mhz.unwrap_or(defaults::DRESSED_OMEGA_MHZ),
            w1_mhz: c.w1_mhz.unwrap_or(defaults::DRESSED_W_MHZ),
            w2_mhz: c.w2_mhz.unwrap_or(defaults::DRESSED_W_MHZ),
            qq_colors: c.qq_colors.unwrap_or_else(|| match kind {
                ScenarioKind::DressedParitySweep => vec![QqColor::Blue, QqColor::Red],
                _ => vec![QqColor::Blue],
            }),
        };
        check_positive("drives.dressed.omega_mhz", d.omega_mhz)?;
        check_non_negative("drives.dressed.w1_mhz", d.w1_mhz)?;
        check_non_negative("drives.dressed.w2_mhz", d.w2_mhz)?;
        ensure!(!d.qq_colors.is_empty(), "drives.dressed.qq_colors is empty");
        if kind == ScenarioKind::RabiDressedMap {
            ensure!(d.qq_colors == [QqColor::Blue], "rabi_dressed_map supports only the blue QQ sideband");
        }
        Some(d)
    } else {
        None
    };

    // noise
    let noise = merge_noise(default_noise(kind), cfg.noise.as_ref())?;
    validate_noise(&noise)?;

    // grid
    let gc = cfg.grid.clone().unwrap_or_default();
    let mut grid = Grid::default();
    let given: [(&str, &Option<Axis>); 8] = [
        ("theta_deg", &gc.theta_deg),
        ("tphi_us", &gc.tphi_us),
        ("kappa_over_w", &gc.kappa_over_w),
        ("omega_mhz", &gc.omega_mhz),
        ("kappa_mhz", &gc.kappa_mhz),
        ("a1_over_omega", &gc.a1_over_omega),
        ("delta_over_omega", &gc.delta_over_omega),
        ("segments", &None),
    ];
    for (name, axis) in given {
        if axis.is_some() && !u.axes.contains(&name) {
            return Err(section_error(kind, &format!("grid.{name}")));
        }
    }
    for &name in u.axes {
        let axis = given.iter().find(|(n, _)| *n == name).and_then(|(_, a)| (*a).clone());
        let values = axis.unwrap_or_else(|| default_axis(kind, name)).values(name)?;
        let slot = match name {
            "theta_deg" => &mut grid.theta_deg,
            "tphi_us" => &mut grid.tphi_us,
            "kappa_over_w" => &mut grid.kappa_over_w,
            "omega_mhz" => &mut grid.omega_mhz,
            "kappa_mhz" => &mut grid.kappa_mhz,
            "a1_over_omega" => &mut grid.a1_over_omega,
            "delta_over_omega" => &mut grid.delta_over_omega,
            _ => unreachable!(),
        };
        *slot = Some(values);
    }
    if let Some(th) = &grid.theta_deg {
        for &t in th {
            check_theta("grid.theta_deg", t, kind == ScenarioKind::RateModelCompare)?;
        }
    }
    for (name, values, lower_ok) in [
        ("tphi_us", &grid.tphi_us, false),
        ("kappa_over_w", &grid.kappa_over_w, false),
        ("omega_mhz", &grid.omega_mhz, false),
        ("kappa_mhz", &grid.kappa_mhz, false),
        ("a1_over_omega", &grid.a1_over_omega, true),
        ("delta_over_omega", &grid.delta_over_omega, true),
    ] {
        for &v in values.iter().flatten() {
            if lower_ok {
                ensure!(v.is_finite(), "grid.{name} contains {v}");
                if name == "a1_over_omega" {
                    check_non_negative("grid.a1_over_omega", v)?;
                }
            } else {
                check_positive(&format!("grid.{name}"), v)?;
            }
        }
    }
    if !u.times && (gc.t_end_us.is_some() || gc.dt_us.is_some()) {
        return Err(section_error(kind, "grid.t_end_us / grid.dt_us"));
    }
    if !u.segments && gc.segments.is_some() {
        return Err(section_error(kind, "grid.segments"));
    }
    if u.segments {
        let segs: Vec<Segment> = match &gc.segments {
            Some(s) => s.iter().map(|s| Segment { parity: s.parity, duration_us: s.duration_us }).collect(),
            None => defaults::switch_segments(),
        };
        ensure!(!segs.is_empty(), "grid.segments is empty");
        for s in &segs {
            check_positive("grid.segments[].duration_us", s.duration_us)?;
        }
        grid.segments = Some(segs);
    }
    if u.times {
        let total = grid.segments.as_ref().map(|s| s.iter().map(|s| s.duration_us).sum::<f64>());
        let t_end = match (gc.t_end_us, total) {
            (Some(t), Some(total)) => {
                ensure!(t <= total + 1e-9, "grid.t_end_us = {t} exceeds the schedule length {total}");
                t
            }
            (Some(t), None) => t,
            (None, Some(total)) => total,
            (None, None) => defaults::TIME_DOMAIN_END_US,
        };
        let dt = gc.dt_us.unwrap_or(if kind == ScenarioKind::ParitySwitch { 0.1 } else { 0.5 });
        check_positive("grid.t_end_us", t_end)?;
        check_positive("grid.dt_us", dt)?;
        let n = (t_end / dt + 1e-9).floor() as usize;
        let mut times: Vec<f64> = (0..=n).map(|i| round_grid(i as f64 * dt)).collect();
        if t_end - times[times.len() - 1] > 1e-9 {
            times.push(t_end);
        }
        grid.times_us = Some(times);
    }

    // evaluation
    let evaluation = match (u.evaluation, cfg.evaluation) {
        (None, Some(_)) => return Err(section_error(kind, "evaluation")),
        (None, None) => None,
        (Some(d), e) => {
            let e = e.unwrap_or(d);
            if let Evaluation::AtTime { at_us } = e {
                check_positive("evaluation.at_time.at_us", at_us)?;
            }
            Some(e)
        }
    };

    // tomography
    let tomography = match (u.tomography, &cfg.tomography) {
        (false, Some(_)) => return Err(section_error(kind, "tomography")),
        (false, None) => None,
        (true, t) => {
            let t = t.clone().unwrap_or_default();
            if t.enabled == Some(false) {
                None
            } else {
                let readout = t.readout_fidelity.unwrap_or_else(|| builtin_device_table().readout_fidelity);
                for (i, f) in readout.iter().enumerate() {
                    ensure!(*f > 0.5 && *f <= 1.0, "tomography.readout_fidelity[{i}] = {f} must lie in (0.5, 1]");
                }
                let shots = t.shots.unwrap_or(defaults::TOMOGRAPHY_SHOTS);
                ensure!(shots > 0, "tomography.shots must be positive");
                Some(Tomography { shots, readout_fidelity: readout })
            }
        }
    };

    let resonator_dim = cfg.resonator_dim.unwrap_or(DEFAULT_RESONATOR_DIM);
    ensure!((2..=6).contains(&resonator_dim), "resonator_dim = {resonator_dim} must lie in 2..=6");

    Ok(Scenario {
        kind,
        name: cfg.name.clone().unwrap_or_else(|| kind.label().to_string()),
        seed: cfg.seed.unwrap_or(DEFAULT_SEED),
        resonator_dim,
        noise,
        target: Target { family, theta_deg },
        even,
        odd,
        dressed,
        grid,
        evaluation,
        tomography,
        numerics: cfg.numerics.unwrap_or_default(),
    })
}

pub fn parse_config(text: &str) -> Result<ConfigFile> {
    serde_json::from_str(text).context("config does not match the schema")
}

pub fn load_config(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in {}", path.display()))
}

/// The config that selects `kind` with every default.
pub fn default_config(kind: ScenarioKind) -> ConfigFile {
    ConfigFile {
        kind,
        name: None,
        drives: None,
        noise: None,
        target: None,
        grid: None,
        seed: None,
        resonator_dim: None,
        evaluation: None,
        tomography: None,
        numerics: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(json: &str) -> Result<Scenario> {
        resolve(&parse_config(json)?)
    }

    #[test]
    fn every_kind_resolves_with_defaults() {
        for kind in ScenarioKind::ALL {
            let s = resolve(&default_config(kind)).unwrap();
            assert_eq!(s.kind, kind);
            assert!(!kind.figure().is_empty());
        }
    }

    #[test]
    fn unknown_kind_and_fields_are_rejected() {
        assert!(parse(r#"{"kind": "fig9"}"#).is_err());
        assert!(parse(r#"{"kind": "time_domain", "colour": 1}"#).is_err());
        assert!(parse(r#"{"kind": "time_domain", "noise": {"kappa_mhz": 1}}"#).is_err());
    }

    #[test]
    fn empty_grid_is_rejected() {
        let e = parse(r#"{"kind": "theta_spectroscopy", "grid": {"theta_deg": []}}"#).unwrap_err();
        assert!(format!("{e:#}").contains("empty"), "{e:#}");
        assert!(parse(r#"{"kind": "kappa_sweep", "grid": {"kappa_over_w": {"start": 1, "stop": 0, "step": 0.1}}}"#)
            .is_err());
    }

    #[test]
    fn sections_outside_the_kind_are_rejected() {
        assert!(parse(r#"{"kind": "tphi_sweep", "tomography": {"shots": 10}}"#).is_err());
        assert!(parse(r#"{"kind": "time_domain", "grid": {"theta_deg": [10]}}"#).is_err());
        assert!(parse(r#"{"kind": "rabi_dressed_map", "drives": {"even": {"omega_mhz": 1}}}"#).is_err());
        assert!(parse(r#"{"kind": "rate_model_compare", "target": {"family": "phi_theta"}}"#).is_err());
        assert!(parse(r#"{"kind": "time_domain", "drives": {"even": {"qr_colors": "swapped"}}}"#).is_err());
    }

    #[test]
    fn axes_expand_inclusively() {
        let a = Axis::Step { start: 0.1, stop: 0.5, step: 0.1 }.values("x").unwrap();
        assert_eq!(a, vec![0.1, 0.2, 0.3, 0.4, 0.5]);
        let a = Axis::Count { start: 0.0, stop: 1.0, count: 3 }.values("x").unwrap();
        assert_eq!(a, vec![0.0, 0.5, 1.0]);
        let s = resolve(&default_config(ScenarioKind::ThetaSpectroscopy)).unwrap();
        assert_eq!(s.axis("theta_deg").unwrap().len(), 35);
        let s = resolve(&default_config(ScenarioKind::RabiDressedMap)).unwrap();
        assert_eq!(s.axis("a1_over_omega").unwrap().len(), 21);
        assert_eq!(s.axis("delta_over_omega").unwrap().len(), 21);
    }

    #[test]
    fn noise_overrides() {
        let s = parse(r#"{"kind": "time_domain", "noise": {"t1_us": 30, "tphi_us": "none", "kappa2_mhz": 1.0}}"#)
            .unwrap();
        assert_eq!(s.noise.t1_us, [30.0, 30.0]);
        assert_eq!(s.noise.tphi_us, [None, None]);
        assert_eq!(s.noise.kappa_mhz, [0.33, 1.0]);
        assert!(s.noise.spec().tphi_q1.is_infinite());
        assert!(parse(r#"{"kind": "time_domain", "noise": {"tphi_us": "off"}}"#).is_err());
        assert!(parse(r#"{"kind": "time_domain", "noise": {"t1_us": [-1, 2]}}"#).is_err());
    }

    #[test]
    fn w_reading_scales_only_defaults() {
        let s = resolve(&default_config(ScenarioKind::TphiSweep)).unwrap();
        assert_eq!(s.even.unwrap().w1_mhz, 0.70);
        let s = parse(r#"{"kind": "tphi_sweep", "drives": {"w_reading": "listed_is_w"}}"#).unwrap();
        assert_eq!(s.even.unwrap().w1_mhz, 0.35);
        assert_eq!(s.odd.unwrap().w1_mhz, 0.32);
        let s = parse(r#"{"kind": "tphi_sweep", "drives": {"even": {"w1_mhz": 0.2}}}"#).unwrap();
        assert_eq!(s.even.unwrap().w1_mhz, 0.2);
        assert_eq!(s.even.unwrap().w2_mhz, 0.70);
    }

    #[test]
    fn time_grid_covers_the_schedule() {
        let s = resolve(&default_config(ScenarioKind::ParitySwitch)).unwrap();
        let t = s.axis("times_us").unwrap();
        assert_eq!(t.len(), 851);
        assert_eq!(*t.last().unwrap(), 85.0);
        let s = parse(r#"{"kind": "time_domain", "grid": {"t_end_us": 1.25, "dt_us": 0.5}}"#).unwrap();
        assert_eq!(s.axis("times_us").unwrap(), &[0.0, 0.5, 1.0, 1.25]);
    }

    #[test]
    fn hash_depends_on_content_only() {
        let a = parse(r#"{"kind": "kappa_sweep"}"#).unwrap();
        let b = parse("{\n  \"kind\" : \"kappa_sweep\", \"seed\": 1\n}").unwrap();
        assert_eq!(a.config_hash(), b.config_hash());
        let c = parse(r#"{"kind": "kappa_sweep", "seed": 2}"#).unwrap();
        assert_ne!(a.config_hash(), c.config_hash());
        assert_eq!(a.config_hash().len(), 64);
    }

    #[test]
    fn theta_must_be_open_interval() {
        assert!(parse(r#"{"kind": "time_domain", "target": {"family": "phi_theta", "params": {"theta_deg": 180}}}"#)
            .is_err());
        assert!(parse(r#"{"kind": "time_domain", "target": {"family": "psi_theta", "params": {"theta_deg": 180}}}"#)
            .is_err());
        assert!(parse(r#"{"kind": "rate_model_compare", "grid": {"theta_deg": [90, 180]}}"#).is_ok());
        assert!(parse(r#"{"kind": "theta_spectroscopy", "grid": {"theta_deg": [0, 10]}}"#).is_err());
    }
}
