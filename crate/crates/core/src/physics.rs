//! Steady-state optical response of the two spin-selective trion lines.
//!
//! The spin-up electron couples only to the σ⁺ trion line and the spin-down
//! electron only to σ⁻. Under a magnetic field the σ⁺ line sits Δ_Z/2 above
//! the bare transition and σ⁻ sits Δ_Z/2 below it; gate voltage shifts both
//! lines together.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::TrionParameters;
use crate::polarization::JonesVector;

/// One of the two circularly polarized trion transitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transition {
    /// σ⁺ line, addressed from spin up.
    SigmaPlus,
    /// σ⁻ line, addressed from spin down.
    SigmaMinus,
}

impl Transition {
    /// The ground spin state this line starts from.
    pub fn spin(self) -> PureSpin {
        match self {
            Transition::SigmaPlus => PureSpin::Up,
            Transition::SigmaMinus => PureSpin::Down,
        }
    }

    /// Sign of the Zeeman offset of this line relative to the bare transition.
    fn zeeman_sign(self) -> f64 {
        match self {
            Transition::SigmaPlus => 1.0,
            Transition::SigmaMinus => -1.0,
        }
    }

    /// Angular frequency of the line relative to the bare transition at the
    /// reference voltage.
    pub fn line_offset(self, gate_voltage: f64, b_field: f64, params: &TrionParameters) -> f64 {
        self.zeeman_sign() * params.zeeman_splitting(b_field) / 2.0
            + params.stark_shift(gate_voltage)
    }
}

/// A definite spin projection of the resident electron.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PureSpin {
    Up,
    Down,
}

impl PureSpin {
    pub fn transition(self) -> Transition {
        match self {
            PureSpin::Up => Transition::SigmaPlus,
            PureSpin::Down => Transition::SigmaMinus,
        }
    }

    pub fn flipped(self) -> PureSpin {
        match self {
            PureSpin::Up => PureSpin::Down,
            PureSpin::Down => PureSpin::Up,
        }
    }

    /// +1 for up, -1 for down.
    pub fn polarization(self) -> f64 {
        match self {
            PureSpin::Up => 1.0,
            PureSpin::Down => -1.0,
        }
    }
}

/// Ground-state occupation of the dot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpinState {
    Up,
    Down,
    /// Classical mixture with polarization ρ = P↑ − P↓.
    Mixed(f64),
    /// Two electrons in a singlet: no trion transition is available.
    Singlet,
}

impl From<PureSpin> for SpinState {
    fn from(s: PureSpin) -> Self {
        match s {
            PureSpin::Up => SpinState::Up,
            PureSpin::Down => SpinState::Down,
        }
    }
}

impl SpinState {
    /// Populations (P↑, P↓), or `None` for the singlet.
    pub fn populations(&self) -> Result<Option<(f64, f64)>> {
        match *self {
            SpinState::Up => Ok(Some((1.0, 0.0))),
            SpinState::Down => Ok(Some((0.0, 1.0))),
            SpinState::Mixed(rho) => {
                check_polarization(rho)?;
                Ok(Some(((1.0 + rho) / 2.0, (1.0 - rho) / 2.0)))
            }
            SpinState::Singlet => Ok(None),
        }
    }
}

pub(crate) fn check_polarization(rho: f64) -> Result<()> {
    if rho.is_finite() && rho.abs() <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "spin polarization must lie in [-1, 1], got {rho}"
        )))
    }
}

/// A probe laser at the dot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeField {
    /// Probe angular frequency minus the bare transition at zero field and the
    /// reference voltage (rad/s).
    pub detuning: f64,
    /// Optical power at the dot (W).
    pub power: f64,
    /// Ω_L for the full power (rad/s); each line sees Ω_L·|a_σ|.
    pub rabi: f64,
    pub polarization: JonesVector,
}

impl ProbeField {
    pub fn new(
        detuning: f64,
        power: f64,
        polarization: JonesVector,
        params: &TrionParameters,
    ) -> Result<Self> {
        if !detuning.is_finite() {
            return Err(Error::Domain(format!(
                "probe detuning not finite: {detuning}"
            )));
        }
        if !(power >= 0.0 && power.is_finite()) {
            return Err(Error::Domain(format!(
                "probe power must be >= 0, got {power}"
            )));
        }
        let polarization = polarization.normalized()?;
        Ok(Self {
            detuning,
            power,
            rabi: params.rabi_for_power(power),
            polarization,
        })
    }

    /// Probe placed `detuning_from_line` above `line` at the given voltage and
    /// field.
    pub fn relative_to_line(
        line: Transition,
        detuning_from_line: f64,
        gate_voltage: f64,
        b_field: f64,
        power: f64,
        polarization: JonesVector,
        params: &TrionParameters,
    ) -> Result<Self> {
        let offset = line.line_offset(gate_voltage, b_field, params);
        Self::new(detuning_from_line + offset, power, polarization, params)
    }

    /// Rabi frequency driving `line`, from the power in its circular component.
    pub fn component_rabi(&self, line: Transition) -> f64 {
        let amp = match line {
            Transition::SigmaPlus => self.polarization.sigma_plus,
            Transition::SigmaMinus => self.polarization.sigma_minus,
        };
        self.rabi * amp.norm()
    }
}

/// Complex amplitude transmission of the σ⁺ and σ⁻ field components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexResponse {
    pub t_plus: Complex64,
    pub t_minus: Complex64,
}

impl ComplexResponse {
    pub const IDENTITY: ComplexResponse = ComplexResponse {
        t_plus: Complex64::new(1.0, 0.0),
        t_minus: Complex64::new(1.0, 0.0),
    };
}

/// s = (Ω²/2) / (δ² + Γ²/4); on resonance s = 2Ω²/Γ².
pub fn saturation_parameter(rabi: f64, delta: f64, gamma: f64) -> f64 {
    0.5 * rabi * rabi / (delta * delta + 0.25 * gamma * gamma)
}

/// Weak-probe amplitude transmission of one trion line,
/// `t = 1 − (α₀/2)·1/(1+s)·1/(1 − 2iδ/Γ)`.
pub fn complex_transmission(
    delta: f64,
    params: &TrionParameters,
    saturation_s: f64,
) -> Result<Complex64> {
    if !delta.is_finite() {
        return Err(Error::Domain(format!("detuning not finite: {delta}")));
    }
    if saturation_s.is_nan() || saturation_s < 0.0 {
        return Err(Error::Domain(format!(
            "saturation parameter must be >= 0, got {saturation_s}"
        )));
    }
    let x = 2.0 * delta / params.gamma;
    let strength = 0.5 * params.alpha0 / (1.0 + saturation_s);
    // 1/(1 - ix) = (1 + ix)/(1 + x²)
    let denom = 1.0 + x * x;
    let one_minus_t = Complex64::new(strength / denom, strength * x / denom);
    Ok(Complex64::new(1.0, 0.0) - one_minus_t)
}

/// Probe detunings (δ⁺, δ⁻) from the σ⁺ and σ⁻ lines (rad/s).
pub fn transition_detunings(
    probe_freq_offset: f64,
    gate_voltage: f64,
    b_field: f64,
    params: &TrionParameters,
) -> (f64, f64) {
    (
        probe_freq_offset - Transition::SigmaPlus.line_offset(gate_voltage, b_field, params),
        probe_freq_offset - Transition::SigmaMinus.line_offset(gate_voltage, b_field, params),
    )
}

/// Amplitude response for a definite spin (or singlet).
///
/// Pauli blockade leaves only the line belonging to the resident spin active.
/// Outside the charging plateau the dot is treated as a singlet. A mixed spin
/// has no single amplitude response; average observables instead (see
/// [`crate::polarization::mixed_reading`]).
pub fn response_for_spin(
    spin: SpinState,
    probe: &ProbeField,
    gate_voltage: f64,
    b_field: f64,
    params: &TrionParameters,
) -> Result<ComplexResponse> {
    if !gate_voltage.is_finite() {
        return Err(Error::Domain(format!(
            "gate voltage not finite: {gate_voltage}"
        )));
    }
    let line = match spin {
        SpinState::Mixed(_) => return Err(Error::Contract(
            "a mixed spin has no single amplitude response; average readings over the pure states"
                .into(),
        )),
        _ if !params.in_plateau(gate_voltage) => return Ok(ComplexResponse::IDENTITY),
        SpinState::Singlet => return Ok(ComplexResponse::IDENTITY),
        SpinState::Up => Transition::SigmaPlus,
        SpinState::Down => Transition::SigmaMinus,
    };
    let (delta_plus, delta_minus) =
        transition_detunings(probe.detuning, gate_voltage, b_field, params);
    let delta = match line {
        Transition::SigmaPlus => delta_plus,
        Transition::SigmaMinus => delta_minus,
    };
    let s = saturation_parameter(probe.component_rabi(line), delta, params.gamma);
    let t = complex_transmission(delta, params, s)?;
    Ok(match line {
        Transition::SigmaPlus => ComplexResponse {
            t_plus: t,
            t_minus: Complex64::new(1.0, 0.0),
        },
        Transition::SigmaMinus => ComplexResponse {
            t_plus: Complex64::new(1.0, 0.0),
            t_minus: t,
        },
    })
}

/// Photon scattering rate R = (Γ/2)·s/(1+s) of a line driven at Rabi
/// frequency `rabi` and detuning `delta`.
pub fn scattering_rate(rabi: f64, delta: f64, params: &TrionParameters) -> f64 {
    let s = saturation_parameter(rabi, delta, params.gamma);
    0.5 * params.gamma * s / (1.0 + s)
}

/// Rate at which the probe scatters photons off the line of `spin`.
pub fn probe_scattering_rate(
    spin: PureSpin,
    probe: &ProbeField,
    gate_voltage: f64,
    b_field: f64,
    params: &TrionParameters,
) -> f64 {
    if !params.in_plateau(gate_voltage) {
        return 0.0;
    }
    let line = spin.transition();
    let (delta_plus, delta_minus) =
        transition_detunings(probe.detuning, gate_voltage, b_field, params);
    let delta = match line {
        Transition::SigmaPlus => delta_plus,
        Transition::SigmaMinus => delta_minus,
    };
    scattering_rate(probe.component_rabi(line), delta, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::ghz_to_angular;

    fn params() -> TrionParameters {
        TrionParameters::default()
    }

    #[test]
    fn on_resonance_transmission_is_real() {
        let p = params();
        let t = complex_transmission(0.0, &p, 0.0).unwrap();
        assert_eq!(t.im, 0.0);
        assert!((t.re - (1.0 - p.alpha0 / 2.0)).abs() < 1e-15);
        let contrast = 1.0 - t.norm_sqr();
        assert!((contrast - p.alpha0).abs() < p.alpha0 * p.alpha0);
    }

    #[test]
    fn saturated_contrast_calibrates_alpha0() {
        // Ω = Γ on resonance gives s = 2, so 0.15 % observed contrast means α₀ = 0.45 %.
        let p = params();
        let s = saturation_parameter(p.gamma, 0.0, p.gamma);
        assert!((s - 2.0).abs() < 1e-12);
        let t = complex_transmission(0.0, &p, s).unwrap();
        let contrast = 1.0 - t.norm_sqr();
        assert!((contrast - 0.0015).abs() < 1e-5, "{contrast}");
    }

    #[test]
    fn phase_follows_inverse_detuning() {
        let p = params();
        for n in [50.0, 100.0, 306.0, 1000.0] {
            let d = n * p.gamma;
            let a1 = complex_transmission(d, &p, 0.0).unwrap().arg();
            let a2 = complex_transmission(2.0 * d, &p, 0.0).unwrap().arg();
            assert!((a2 / a1 - 0.5).abs() < 5e-4, "n={n}: {}", a2 / a1);
            let asym = -p.alpha0 * p.gamma / (4.0 * d);
            assert!((a1 / asym - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn non_finite_detuning_is_domain_error() {
        assert!(matches!(
            complex_transmission(f64::NAN, &params(), 0.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn zeeman_split_and_degeneracy() {
        let p = params();
        let (dp, dm) = transition_detunings(0.0, 0.415, 1.0, &p);
        assert!((dp - dm + ghz_to_angular(26.0)).abs() < 1e-3);
        for v in [0.39, 0.415, 0.44] {
            let (dp, dm) = transition_detunings(1e10, v, 0.0, &p);
            assert_eq!(dp, dm);
        }
    }

    #[test]
    fn probe_92ghz_above_line_is_306_linewidths() {
        let p = params();
        let probe = ProbeField::relative_to_line(
            Transition::SigmaPlus,
            ghz_to_angular(92.0),
            p.resonance_voltage_prep,
            1.0,
            1e-6,
            JonesVector::linear_x(),
            &p,
        )
        .unwrap();
        let (dp, _) = transition_detunings(probe.detuning, p.resonance_voltage_prep, 1.0, &p);
        let ratio = dp / p.gamma;
        assert!((ratio - 306.0).abs() / 306.0 < 5e-3, "{ratio}");
    }

    #[test]
    fn singlet_and_outside_plateau_are_identity() {
        let p = params();
        let probe =
            ProbeField::new(ghz_to_angular(30.0), 1e-6, JonesVector::linear_x(), &p).unwrap();
        let r = response_for_spin(SpinState::Singlet, &probe, 0.415, 1.0, &p).unwrap();
        assert_eq!(r, ComplexResponse::IDENTITY);
        for spin in [SpinState::Up, SpinState::Down, SpinState::Singlet] {
            let r = response_for_spin(spin, &probe, 0.460, 1.0, &p).unwrap();
            assert_eq!(r, ComplexResponse::IDENTITY);
        }
    }

    #[test]
    fn pauli_blockade_selects_one_line() {
        let p = params();
        let probe = ProbeField::relative_to_line(
            Transition::SigmaMinus,
            2.0 * p.gamma,
            0.415,
            1.0,
            20e-9,
            JonesVector::linear_x(),
            &p,
        )
        .unwrap();
        let down = response_for_spin(SpinState::Down, &probe, 0.415, 1.0, &p).unwrap();
        assert_ne!(down.t_minus, Complex64::new(1.0, 0.0));
        assert_eq!(down.t_plus, Complex64::new(1.0, 0.0));
        let up = response_for_spin(SpinState::Up, &probe, 0.415, 1.0, &p).unwrap();
        assert_eq!(up.t_minus, Complex64::new(1.0, 0.0));
        assert_ne!(up.t_plus, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn mixed_response_is_contract_error() {
        let p = params();
        let probe = ProbeField::new(0.0, 1e-9, JonesVector::linear_x(), &p).unwrap();
        assert!(matches!(
            response_for_spin(SpinState::Mixed(0.2), &probe, 0.415, 1.0, &p),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn scattering_rate_limits() {
        let p = params();
        assert_eq!(scattering_rate(0.0, 0.0, &p), 0.0);
        // Strong drive saturates at Γ/2.
        let r = scattering_rate(1e3 * p.gamma, 0.0, &p);
        assert!((r / (0.5 * p.gamma) - 1.0).abs() < 1e-5);
    }

    #[test]
    fn scattering_interval_at_1uw_306_linewidths() {
        // Full-power drive (Ω² = 50Γ²): 1/R ≈ 3.97 µs.
        let p = params();
        let rabi = p.rabi_for_power(1e-6);
        assert!((rabi * rabi / (p.gamma * p.gamma) - 50.0).abs() < 1e-9);
        let r = scattering_rate(rabi, 306.0 * p.gamma, &p);
        let interval = 1.0 / r;
        assert!((2e-6..18e-6).contains(&interval), "{interval}");
        let flip = interval / 1e-4;
        assert!((20e-3..180e-3).contains(&flip), "{flip}");
    }
}
