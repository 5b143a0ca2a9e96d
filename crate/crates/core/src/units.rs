//! Laboratory-unit conversions.
//!
//! Everything inside the crate is SI with frequencies in angular units
//! (rad/s). Configuration files and datasets speak GHz, mV, nW and ms; every
//! crossing between the two goes through this module.

use std::f64::consts::PI;

/// Planck constant (J s).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Cyclic frequency in Hz to angular frequency in rad/s.
#[inline]
pub fn hz_to_angular(hz: f64) -> f64 {
    2.0 * PI * hz
}

/// Angular frequency in rad/s to cyclic frequency in Hz.
#[inline]
pub fn angular_to_hz(omega: f64) -> f64 {
    omega / (2.0 * PI)
}

#[inline]
pub fn ghz_to_angular(ghz: f64) -> f64 {
    hz_to_angular(ghz * 1e9)
}

#[inline]
pub fn angular_to_ghz(omega: f64) -> f64 {
    angular_to_hz(omega) * 1e-9
}

#[inline]
pub fn mv_to_volts(mv: f64) -> f64 {
    mv * 1e-3
}

#[inline]
pub fn volts_to_mv(v: f64) -> f64 {
    v * 1e3
}

#[inline]
pub fn nw_to_watts(nw: f64) -> f64 {
    nw * 1e-9
}

#[inline]
pub fn watts_to_nw(w: f64) -> f64 {
    w * 1e9
}

#[inline]
pub fn ms_to_seconds(ms: f64) -> f64 {
    ms * 1e-3
}

#[inline]
pub fn nm_to_meters(nm: f64) -> f64 {
    nm * 1e-9
}

#[inline]
pub fn deg_to_rad(deg: f64) -> f64 {
    deg.to_radians()
}

/// Energy of one photon at `wavelength` (m), in joules.
#[inline]
pub fn photon_energy(wavelength: f64) -> f64 {
    PLANCK * SPEED_OF_LIGHT / wavelength
}

/// Photon flux (photons/s) carried by `power` (W) at `wavelength` (m).
#[inline]
pub fn photon_flux(power: f64, wavelength: f64) -> f64 {
    power / photon_energy(wavelength)
}
