//! Loader for the device reference table.

use std::path::Path;

use anyhow::{bail, Context, Result};
use autostab_core::calibration::{BiasPoint, CouplerConstants, DeviceTable, QubitCoherence};
use serde::Deserialize;

/// The table shipped with the crate.
pub const BUILTIN_DEVICE_TABLE: &str = include_str!("../data/device_table.toml");

const MISSING: &str = "not measured";

/// A quantity that is either a number or explicitly marked as not measured.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum Measured {
    Value(f64),
    Marker(String),
}

impl Measured {
    fn resolve(&self, field: &str) -> Result<Option<f64>> {
        match self {
            Measured::Value(v) => Ok(Some(*v)),
            Measured::Marker(s) if s == MISSING => Ok(None),
            Measured::Marker(s) => bail!("{field}: expected a number or \"{MISSING}\", got \"{s}\""),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTable {
    version: u32,
    frequencies: RawFrequencies,
    readout: RawReadout,
    coupler: RawCoupler,
    operating: RawBias,
    sweet_spot: RawBias,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFrequencies {
    qubit_ghz: [f64; 2],
    anharmonicity_mhz: [f64; 2],
    readout_ghz: [f64; 2],
    zz_khz: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReadout {
    fidelity: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoupler {
    ej1_ghz: f64,
    ej2_ghz: f64,
    ejc_ghz: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBias {
    phi_dc_over_pi: f64,
    r1_t1_us: Measured,
    r2_t1_us: Measured,
    q1: RawQubit,
    q2: RawQubit,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQubit {
    t1_us: f64,
    t_ramsey_us: f64,
    t_echo_us: Measured,
}

fn positive(field: &str, v: f64) -> Result<f64> {
    if !(v > 0.0 && v.is_finite()) {
        bail!("{field} = {v} must be positive and finite");
    }
    Ok(v)
}

fn positive_opt(field: &str, v: &Measured) -> Result<Option<f64>> {
    v.resolve(field)?.map(|x| positive(field, x)).transpose()
}

fn qubit(prefix: &str, q: &RawQubit) -> Result<QubitCoherence> {
    Ok(QubitCoherence {
        t1: positive(&format!("{prefix}.t1_us"), q.t1_us)?,
        t_ramsey: positive(&format!("{prefix}.t_ramsey_us"), q.t_ramsey_us)?,
        t_echo: positive_opt(&format!("{prefix}.t_echo_us"), &q.t_echo_us)?,
    })
}

fn bias(prefix: &str, b: &RawBias) -> Result<BiasPoint> {
    if !b.phi_dc_over_pi.is_finite() {
        bail!("{prefix}.phi_dc_over_pi must be finite");
    }
    Ok(BiasPoint {
        phi_dc_over_pi: b.phi_dc_over_pi,
        q1: qubit(&format!("{prefix}.q1"), &b.q1)?,
        q2: qubit(&format!("{prefix}.q2"), &b.q2)?,
        r1_t1: positive_opt(&format!("{prefix}.r1_t1_us"), &b.r1_t1_us)?,
        r2_t1: positive_opt(&format!("{prefix}.r2_t1_us"), &b.r2_t1_us)?,
    })
}

/// Parses and validates a device table. Every field must be present.
pub fn parse_device_table(text: &str) -> Result<DeviceTable> {
    let raw: RawTable = toml::from_str(text).context("device table")?;
    if raw.version != 1 {
        bail!("unsupported device table version {}", raw.version);
    }
    let f = &raw.frequencies;
    for (i, v) in f.qubit_ghz.iter().chain(&f.readout_ghz).enumerate() {
        positive(&format!("frequency #{i}"), *v)?;
    }
    if f.anharmonicity_mhz.iter().chain([&f.zz_khz]).any(|v| !v.is_finite()) {
        bail!("anharmonicities and zz_khz must be finite");
    }
    for (i, &p) in raw.readout.fidelity.iter().enumerate() {
        if !(p > 0.5 && p <= 1.0) {
            bail!("readout.fidelity[{i}] = {p} must lie in (0.5, 1]");
        }
    }
    let operating = bias("operating", &raw.operating)?;
    if operating.r1_t1.is_none() || operating.r2_t1.is_none() {
        bail!("resonator lifetimes are required at the operating point");
    }
    Ok(DeviceTable {
        version: raw.version,
        qubit_freq_ghz: f.qubit_ghz,
        anharmonicity_mhz: f.anharmonicity_mhz,
        readout_freq_ghz: f.readout_ghz,
        zz_khz: f.zz_khz,
        readout_fidelity: raw.readout.fidelity,
        operating,
        sweet_spot: bias("sweet_spot", &raw.sweet_spot)?,
        coupler: CouplerConstants {
            ej1: positive("coupler.ej1_ghz", raw.coupler.ej1_ghz)?,
            ej2: positive("coupler.ej2_ghz", raw.coupler.ej2_ghz)?,
            ejc: positive("coupler.ejc_ghz", raw.coupler.ejc_ghz)?,
        },
    })
}

pub fn load_device_table(path: &Path) -> Result<DeviceTable> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_device_table(&text).with_context(|| format!("in {}", path.display()))
}

pub fn builtin_device_table() -> DeviceTable {
    parse_device_table(BUILTIN_DEVICE_TABLE).expect("bundled device table is valid")
}
