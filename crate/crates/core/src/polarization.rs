//! Jones-calculus propagation through the dot and balanced polarimetry.
//!
//! Amplitudes are kept in the circular basis with unit vectors
//! `ê± = (x̂ ∓ iŷ)/√2`. In this convention a linear polarization at angle θ
//! to x̂ has `a± = e^{±iθ}/√2`, so a relative phase between the σ⁺ and σ⁻
//! components rotates the polarization by `(arg a₊ − arg a₋)/2`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::params::TrionParameters;
use crate::physics::{
    check_polarization, response_for_spin, ComplexResponse, ProbeField, SpinState,
};
use crate::units;

const NORM_TOLERANCE: f64 = 1e-12;

/// Polarization state as two complex amplitudes in the circular basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JonesVector {
    pub sigma_plus: Complex64,
    pub sigma_minus: Complex64,
}

impl JonesVector {
    pub fn new(sigma_plus: Complex64, sigma_minus: Complex64) -> Self {
        Self {
            sigma_plus,
            sigma_minus,
        }
    }

    /// Horizontal (x̂) linear polarization, the probe's reference state.
    pub fn linear_x() -> Self {
        let a = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Self::new(a, a)
    }

    /// Linear polarization at `angle` (rad) from x̂.
    pub fn linear(angle: f64) -> Self {
        Self::new(
            Complex64::from_polar(FRAC_1_SQRT_2, angle),
            Complex64::from_polar(FRAC_1_SQRT_2, -angle),
        )
    }

    pub fn sigma_plus() -> Self {
        Self::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
    }

    pub fn sigma_minus() -> Self {
        Self::new(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0))
    }

    /// From Cartesian components (E_x, E_y).
    pub fn from_linear_basis(ex: Complex64, ey: Complex64) -> Self {
        let i = Complex64::i();
        Self::new((ex + i * ey) * FRAC_1_SQRT_2, (ex - i * ey) * FRAC_1_SQRT_2)
    }

    /// Cartesian components (E_x, E_y).
    pub fn to_linear_basis(&self) -> (Complex64, Complex64) {
        let i = Complex64::i();
        (
            (self.sigma_plus + self.sigma_minus) * FRAC_1_SQRT_2,
            -i * (self.sigma_plus - self.sigma_minus) * FRAC_1_SQRT_2,
        )
    }

    pub fn norm_sqr(&self) -> f64 {
        self.sigma_plus.norm_sqr() + self.sigma_minus.norm_sqr()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOLERANCE
    }

    /// Scales to unit norm. Already-normalized vectors are returned unchanged
    /// so that exact states such as [`JonesVector::linear_x`] stay exact.
    pub fn normalized(self) -> Result<Self> {
        let n2 = self.norm_sqr();
        if !(n2.is_finite() && n2 > 0.0) {
            return Err(Error::Domain(
                "Jones vector has zero or non-finite norm".into(),
            ));
        }
        if self.is_normalized() {
            return Ok(self);
        }
        let k = 1.0 / n2.sqrt();
        Ok(Self::new(self.sigma_plus * k, self.sigma_minus * k))
    }

    pub fn with_global_phase(&self, phase: f64) -> Self {
        let w = Complex64::from_polar(1.0, phase);
        Self::new(self.sigma_plus * w, self.sigma_minus * w)
    }
}

/// Apply the dot's response: `(t₊·a₊, t₋·a₋)`.
pub fn propagate(input: &JonesVector, response: &ComplexResponse) -> JonesVector {
    JonesVector::new(
        response.t_plus * input.sigma_plus,
        response.t_minus * input.sigma_minus,
    )
}

/// Faraday rotation angle `(arg t₊ − arg t₋)/2` of a linear probe.
pub fn faraday_angle(response: &ComplexResponse) -> f64 {
    0.5 * (response.t_plus.arg() - response.t_minus.arg())
}

/// Photodiode pair behind a polarizing beam splitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detector {
    /// Quantum efficiency, in (0, 1].
    pub efficiency: f64,
    /// Orientation of the analysis basis relative to x̂ (rad). π/4 balances
    /// the two detectors for an x̂-polarized probe.
    pub analysis_angle: f64,
}

impl Default for Detector {
    fn default() -> Self {
        Self {
            efficiency: 0.1,
            analysis_angle: FRAC_PI_4,
        }
    }
}

impl Detector {
    pub fn validate(&self) -> Result<()> {
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(invalid(
                "efficiency",
                format!("must lie in (0, 1], got {}", self.efficiency),
            ));
        }
        if !self.analysis_angle.is_finite() {
            return Err(invalid("analysis_angle", "must be finite"));
        }
        Ok(())
    }
}

/// Detected intensities of one polarimeter measurement (photons/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarimeterReading {
    pub i_x: f64,
    pub i_y: f64,
    /// `i_x + i_y`, the absorptive channel.
    pub sum: f64,
    /// `i_x − i_y`, the dispersive channel.
    pub diff: f64,
    /// Rotation angle extracted from `diff/sum` (rad).
    pub theta: f64,
    /// Ellipticity angle ½·asin(S₃/S₀) (rad).
    pub ellipticity: f64,
    /// Detected σ⁺ minus σ⁻ intensity (photons/s); S₃ in flux units.
    pub circular: f64,
    /// Incident flux times efficiency: the detected flux with no dot.
    pub incident: f64,
}

impl PolarimeterReading {
    fn from_channels(
        sum: f64,
        diff: f64,
        circular: f64,
        incident: f64,
        analysis_angle: f64,
    ) -> Self {
        let i_x = 0.5 * (sum + diff);
        let i_y = 0.5 * (sum - diff);
        let (theta, ellipticity) = if sum > 0.0 {
            (
                analysis_angle - FRAC_PI_4 + 0.5 * (diff / sum).clamp(-1.0, 1.0).asin(),
                0.5 * (circular / sum).clamp(-1.0, 1.0).asin(),
            )
        } else {
            (0.0, 0.0)
        };
        Self {
            i_x,
            i_y,
            sum,
            diff,
            theta,
            ellipticity,
            circular,
            incident,
        }
    }

    /// Population-weighted average of readings, channel by channel, with the
    /// angles re-extracted from the averaged channels.
    pub fn weighted_mean(parts: &[(f64, PolarimeterReading)], analysis_angle: f64) -> Self {
        let mut acc = [0.0; 4];
        for (w, r) in parts {
            acc[0] += w * r.sum;
            acc[1] += w * r.diff;
            acc[2] += w * r.circular;
            acc[3] += w * r.incident;
        }
        Self::from_channels(acc[0], acc[1], acc[2], acc[3], analysis_angle)
    }

    /// `diff` normalized by the detected flux without the dot.
    pub fn diff_contrast(&self) -> f64 {
        if self.incident > 0.0 {
            self.diff / self.incident
        } else {
            0.0
        }
    }
}

/// Split `field` on a polarizing beam splitter oriented at `analysis_angle`
/// and detect both ports.
pub fn detect(
    field: &JonesVector,
    analysis_angle: f64,
    flux_in: f64,
    efficiency: f64,
) -> Result<PolarimeterReading> {
    Detector {
        efficiency,
        analysis_angle,
    }
    .validate()?;
    if !(flux_in >= 0.0 && flux_in.is_finite()) {
        return Err(Error::Domain(format!("flux must be >= 0, got {flux_in}")));
    }
    let scale = efficiency * flux_in;
    let plus = field.sigma_plus.norm_sqr();
    let minus = field.sigma_minus.norm_sqr();
    // Port difference is 2·Re(a₊ā₋·e^{−2ia}). Writing a = π/4 + offset keeps
    // e^{−2ia} exactly −i in the balanced configuration.
    let offset = analysis_angle - FRAC_PI_4;
    let (s, c) = (2.0 * offset).sin_cos();
    let basis = Complex64::new(-s, -c);
    let coherence = field.sigma_plus * field.sigma_minus.conj() * basis;
    let sum = scale * (plus + minus);
    let diff = scale * 2.0 * coherence.re;
    Ok(PolarimeterReading::from_channels(
        sum,
        diff,
        scale * (plus - minus),
        scale,
        analysis_angle,
    ))
}

/// Reading for a definite spin state (or singlet).
pub fn pure_reading(
    spin: SpinState,
    probe: &ProbeField,
    gate_voltage: f64,
    b_field: f64,
    params: &TrionParameters,
    detector: &Detector,
) -> Result<PolarimeterReading> {
    let response = response_for_spin(spin, probe, gate_voltage, b_field, params)?;
    let out = propagate(&probe.polarization, &response);
    let flux = units::photon_flux(probe.power, params.wavelength);
    detect(&out, detector.analysis_angle, flux, detector.efficiency)
}

/// Reading for a classically mixed spin of polarization `rho`: the two pure
/// readings averaged with weights (1 ± ρ)/2. Outside the plateau this is the
/// singlet reading.
pub fn mixed_reading(
    rho: f64,
    probe: &ProbeField,
    gate_voltage: f64,
    b_field: f64,
    params: &TrionParameters,
    detector: &Detector,
) -> Result<PolarimeterReading> {
    check_polarization(rho)?;
    if !params.in_plateau(gate_voltage) {
        return pure_reading(
            SpinState::Singlet,
            probe,
            gate_voltage,
            b_field,
            params,
            detector,
        );
    }
    let up = pure_reading(
        SpinState::Up,
        probe,
        gate_voltage,
        b_field,
        params,
        detector,
    )?;
    let down = pure_reading(
        SpinState::Down,
        probe,
        gate_voltage,
        b_field,
        params,
        detector,
    )?;
    if rho == 1.0 {
        return Ok(up);
    }
    if rho == -1.0 {
        return Ok(down);
    }
    Ok(PolarimeterReading::weighted_mean(
        &[((1.0 + rho) / 2.0, up), ((1.0 - rho) / 2.0, down)],
        detector.analysis_angle,
    ))
}

/// Reading for any spin state, dispatching mixed states to [`mixed_reading`].
pub fn reading_for_state(
    spin: SpinState,
    probe: &ProbeField,
    gate_voltage: f64,
    b_field: f64,
    params: &TrionParameters,
    detector: &Detector,
) -> Result<PolarimeterReading> {
    match spin {
        SpinState::Mixed(rho) => mixed_reading(rho, probe, gate_voltage, b_field, params, detector),
        other => pure_reading(other, probe, gate_voltage, b_field, params, detector),
    }
}
