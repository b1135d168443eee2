//! Unit conversions. Internally every rate and energy is an angular frequency
//! in rad/µs and every time is in µs; configuration files quote ordinary
//! frequencies in MHz (ω/2π).

use core::f64::consts::PI;

/// ω = 2π·f for f in MHz.
pub fn mhz_to_angular(f_mhz: f64) -> f64 {
    2.0 * PI * f_mhz
}

pub fn angular_to_mhz(omega: f64) -> f64 {
    omega / (2.0 * PI)
}

pub fn deg_to_rad(deg: f64) -> f64 {
    deg * PI / 180.0
}

pub fn rad_to_deg(rad: f64) -> f64 {
    rad * 180.0 / PI
}
