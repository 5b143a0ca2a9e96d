//! Static physics of one singly charged dot.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::units;

/// Published (detuning in GHz, detuning in linewidths) pairs used to calibrate
/// the transition linewidth.
pub const LINEWIDTH_CALIBRATION_PAIRS: [(f64, f64); 4] =
    [(30.0, 100.0), (56.0, 185.0), (66.0, 220.0), (92.0, 306.0)];

/// Cotunneling spin randomization near the edges of the charging plateau.
///
/// The rate is `edge_rate * (exp(-(V - v_min)/w) + exp(-(v_max - V)/w))`, so
/// it is large within a few `edge_width` of either edge and negligible in the
/// plateau centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CotunnelingProfile {
    /// Spin randomization rate right at a plateau edge (1/s).
    pub edge_rate: f64,
    /// Decay length of the rate into the plateau (V).
    pub edge_width: f64,
}

impl Default for CotunnelingProfile {
    fn default() -> Self {
        Self {
            edge_rate: 1e9,
            edge_width: 1e-3,
        }
    }
}

/// All static physics of one singly charged quantum dot.
///
/// Frequencies are angular (rad/s) except the two slopes, which are kept in Hz
/// per unit as they are usually quoted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrionParameters {
    /// Transition linewidth Γ (rad/s), the FWHM of the weak-probe power
    /// contrast.
    pub gamma: f64,
    /// Peak resonant extinction of a weak circularly polarized probe.
    pub alpha0: f64,
    /// Zeeman splitting between the two trion lines per tesla (Hz/T).
    pub zeeman_split_per_tesla: f64,
    /// Common DC-Stark shift of both lines (Hz/V).
    pub stark_slope: f64,
    /// Gate voltage at which the preparation laser hits its line (V). Also the
    /// voltage at which probe detunings are referenced.
    pub resonance_voltage_prep: f64,
    /// Single-electron charging window `[v_min, v_max]` (V).
    pub plateau: [f64; 2],
    /// Spin-flip Raman branching ratio.
    pub branching_ratio: f64,
    /// Probe wavelength (m); only used to convert power to photon flux.
    pub wavelength: f64,
    /// Power at which a fully σ-polarized field drives its line with Ω = Γ (W).
    pub saturation_power: f64,
    /// Natural spin lifetime T₁ (s). `f64::INFINITY` disables natural flips.
    pub t1_natural: f64,
    pub cotunneling: CotunnelingProfile,
}

impl Default for TrionParameters {
    fn default() -> Self {
        Self {
            gamma: units::ghz_to_angular(0.30),
            alpha0: 0.0045,
            zeeman_split_per_tesla: 26e9,
            // 15 GHz over the 35 mV between the preparation resonance and the
            // end of the plateau.
            stark_slope: 15e9 / 35e-3,
            resonance_voltage_prep: 0.415,
            plateau: [0.390, 0.450],
            branching_ratio: 1e-4,
            wavelength: 950e-9,
            saturation_power: 20e-9,
            t1_natural: 1e-3,
            cotunneling: CotunnelingProfile::default(),
        }
    }
}

impl TrionParameters {
    pub fn validate(&self) -> Result<()> {
        let finite = |name: &'static str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("must be finite, got {v}")))
            }
        };
        finite("gamma", self.gamma)?;
        finite("alpha0", self.alpha0)?;
        finite("zeeman_split_per_tesla", self.zeeman_split_per_tesla)?;
        finite("stark_slope", self.stark_slope)?;
        finite("resonance_voltage_prep", self.resonance_voltage_prep)?;
        finite("plateau", self.plateau[0])?;
        finite("plateau", self.plateau[1])?;
        finite("branching_ratio", self.branching_ratio)?;
        finite("wavelength", self.wavelength)?;
        finite("saturation_power", self.saturation_power)?;

        if self.gamma <= 0.0 {
            return Err(invalid("gamma", "must be > 0"));
        }
        if !(self.alpha0 > 0.0 && self.alpha0 < 1.0) {
            return Err(invalid(
                "alpha0",
                format!("must lie in (0, 1), got {}", self.alpha0),
            ));
        }
        if !(self.branching_ratio > 0.0 && self.branching_ratio < 1.0) {
            return Err(invalid(
                "branching_ratio",
                format!("must lie in (0, 1), got {}", self.branching_ratio),
            ));
        }
        let [v_min, v_max] = self.plateau;
        if !(v_min < self.resonance_voltage_prep && self.resonance_voltage_prep < v_max) {
            return Err(invalid(
                "resonance_voltage_prep",
                format!(
                    "must lie strictly inside the plateau [{v_min}, {v_max}] V, got {}",
                    self.resonance_voltage_prep
                ),
            ));
        }
        if self.wavelength <= 0.0 {
            return Err(invalid("wavelength", "must be > 0"));
        }
        if self.saturation_power <= 0.0 {
            return Err(invalid("saturation_power", "must be > 0"));
        }
        if self.t1_natural.is_nan() || self.t1_natural <= 0.0 {
            return Err(invalid("t1_natural", "must be > 0 (inf allowed)"));
        }
        if !(self.cotunneling.edge_rate >= 0.0 && self.cotunneling.edge_rate.is_finite()) {
            return Err(invalid("cotunneling.edge_rate", "must be finite and >= 0"));
        }
        if !(self.cotunneling.edge_width > 0.0 && self.cotunneling.edge_width.is_finite()) {
            return Err(invalid("cotunneling.edge_width", "must be finite and > 0"));
        }
        Ok(())
    }

    /// Γ/2π in Hz.
    pub fn gamma_hz(&self) -> f64 {
        units::angular_to_hz(self.gamma)
    }

    /// Zeeman splitting Δ_Z(B) in rad/s. Negative fields swap the lines.
    pub fn zeeman_splitting(&self, b_field: f64) -> f64 {
        units::hz_to_angular(self.zeeman_split_per_tesla * b_field)
    }

    /// Common Stark shift of both lines relative to the reference voltage (rad/s).
    pub fn stark_shift(&self, gate_voltage: f64) -> f64 {
        units::hz_to_angular(self.stark_slope * (gate_voltage - self.resonance_voltage_prep))
    }

    /// Whether the dot holds exactly one excess electron at this gate voltage.
    pub fn in_plateau(&self, gate_voltage: f64) -> bool {
        gate_voltage >= self.plateau[0] && gate_voltage <= self.plateau[1]
    }

    /// Cotunneling spin randomization rate at `gate_voltage` (1/s, each way).
    pub fn cotunneling_rate(&self, gate_voltage: f64) -> f64 {
        if !self.in_plateau(gate_voltage) {
            return 0.0;
        }
        let CotunnelingProfile {
            edge_rate,
            edge_width,
        } = self.cotunneling;
        let [v_min, v_max] = self.plateau;
        edge_rate
            * (f64::exp(-(gate_voltage - v_min) / edge_width)
                + f64::exp(-(v_max - gate_voltage) / edge_width))
    }

    /// Natural relaxation rate 1/(2T₁), each way.
    pub fn natural_flip_rate(&self) -> f64 {
        0.5 / self.t1_natural
    }

    /// Total spin-randomizing rate per direction: cotunneling plus 1/(2T₁).
    pub fn relaxation_rate(&self, gate_voltage: f64) -> f64 {
        self.cotunneling_rate(gate_voltage) + self.natural_flip_rate()
    }

    /// Rabi frequency of a field of `power` (W) fully polarized along one line.
    pub fn rabi_for_power(&self, power: f64) -> f64 {
        self.gamma * (power.max(0.0) / self.saturation_power).sqrt()
    }
}

/// Result of fitting the linewidth to published (GHz, multiples-of-Γ) pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct LinewidthFit {
    /// Least-squares Γ/2π in GHz for the model `ghz = Γ · n`.
    pub gamma_ghz: f64,
    /// Relative residual `(ghz_i / n_i - Γ) / Γ` per pair.
    pub relative_residuals: Vec<f64>,
}

impl LinewidthFit {
    pub fn max_abs_residual(&self) -> f64 {
        self.relative_residuals
            .iter()
            .fold(0.0_f64, |m, r| m.max(r.abs()))
    }
}

/// Least-squares linewidth through the origin: Γ = Σ gᵢnᵢ / Σ nᵢ².
pub fn fit_linewidth(pairs: &[(f64, f64)]) -> Result<LinewidthFit> {
    if pairs.is_empty() {
        return Err(crate::Error::Domain("no calibration pairs".into()));
    }
    let (num, den) = pairs.iter().fold((0.0, 0.0), |(num, den), &(ghz, n)| {
        (num + ghz * n, den + n * n)
    });
    if den <= 0.0 {
        return Err(crate::Error::Domain(
            "calibration multiples must not all be zero".into(),
        ));
    }
    let gamma_ghz = num / den;
    let relative_residuals = pairs
        .iter()
        .map(|&(ghz, n)| (ghz / n - gamma_ghz) / gamma_ghz)
        .collect();
    Ok(LinewidthFit {
        gamma_ghz,
        relative_residuals,
    })
}
