//! Shot-noise readout budget and back-action accounting.
//!
//! Conventions: a balanced polarimeter collecting N photons sees a difference
//! signal 2θN against shot noise √N, so SNR = 2|θ|·√(F·t) for a detected flux
//! F. Every spin-flip Raman event is one back-action event; they occur at the
//! probe scattering rate times the branching ratio.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::TrionParameters;
use crate::physics::{probe_scattering_rate, response_for_spin, ProbeField, PureSpin, SpinState};
use crate::polarization::faraday_angle;
use crate::units;

/// Human-readable statement of the SNR convention, printed with every report.
pub const SNR_CONVENTION: &str =
    "SNR = 2|theta| sqrt(F t): signal 2 theta N, shot noise sqrt(N), N = F t";

/// Detected photon flux (photons/s) for `power` (W) at `wavelength` (m).
pub fn detected_flux(power: f64, wavelength: f64, efficiency: f64) -> f64 {
    efficiency * units::photon_flux(power, wavelength)
}

/// Shot-noise-limited SNR of a balanced rotation measurement.
pub fn snr(theta: f64, detected_flux: f64, t_meas: f64) -> f64 {
    2.0 * theta.abs() * (detected_flux * t_meas).sqrt()
}

/// Measurement time needed to reach `target` SNR. Infinite when there is no
/// rotation or no light.
pub fn time_to_snr(target: f64, theta: f64, detected_flux: f64) -> f64 {
    let rate = 4.0 * theta * theta * detected_flux;
    if rate > 0.0 {
        target * target / rate
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub spin: PureSpin,
    pub branching_ratio: f64,
    /// Mean time between scattered probe photons (s).
    pub photon_scatter_interval: f64,
    /// Mean time between probe-induced spin flips (s).
    pub spin_flip_interval: f64,
    /// Faraday rotation of the probe (rad).
    pub theta: f64,
    /// Detected photon flux (photons/s).
    pub detected_flux: f64,
    /// Time to reach SNR = 1 (s).
    pub t_snr1: f64,
    /// Expected back-action events within `t_snr1`.
    pub n_backaction_at_snr1: f64,
    /// (σ_peak/A_spot)·η/β; above one, back-action evasion is feasible.
    pub qnd_margin: f64,
}

impl BudgetReport {
    /// The constant C with `qnd_margin > 1 ⟺ n_backaction_at_snr1 < C` when
    /// only the branching ratio varies (n ∝ β, margin ∝ 1/β).
    pub fn qnd_threshold_constant(&self) -> f64 {
        self.n_backaction_at_snr1 * self.qnd_margin
    }

    /// Flat `key = value` block; the SNR convention is the first line.
    pub fn to_key_value(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for BudgetReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let spin = match self.spin {
            PureSpin::Up => "up",
            PureSpin::Down => "down",
        };
        writeln!(f, "snr_convention = {SNR_CONVENTION}")?;
        writeln!(f, "spin = {spin}")?;
        writeln!(f, "branching_ratio = {:e}", self.branching_ratio)?;
        writeln!(
            f,
            "photon_scatter_interval_s = {:e}",
            self.photon_scatter_interval
        )?;
        writeln!(f, "spin_flip_interval_s = {:e}", self.spin_flip_interval)?;
        writeln!(f, "theta_rad = {:e}", self.theta)?;
        writeln!(f, "detected_flux_per_s = {:e}", self.detected_flux)?;
        writeln!(f, "t_snr1_s = {:e}", self.t_snr1)?;
        writeln!(f, "n_backaction_at_snr1 = {:e}", self.n_backaction_at_snr1)?;
        writeln!(f, "qnd_margin = {:e}", self.qnd_margin)?;
        writeln!(
            f,
            "qnd_threshold_constant = {:e}",
            self.qnd_threshold_constant()
        )
    }
}

/// Assemble the readout budget for a probe acting on a definite spin.
pub fn backaction_budget(
    probe: &ProbeField,
    spin: SpinState,
    gate_voltage: f64,
    b_field: f64,
    params: &TrionParameters,
    efficiency: f64,
) -> Result<BudgetReport> {
    let pure = match spin {
        SpinState::Up => PureSpin::Up,
        SpinState::Down => PureSpin::Down,
        other => {
            return Err(Error::Contract(format!(
                "the readout budget needs a pure up or down spin, got {other:?}"
            )))
        }
    };
    if !(efficiency > 0.0 && efficiency <= 1.0) {
        return Err(crate::error::invalid(
            "efficiency",
            format!("must lie in (0, 1], got {efficiency}"),
        ));
    }
    let response = response_for_spin(spin, probe, gate_voltage, b_field, params)?;
    let theta = faraday_angle(&response);
    let flux = detected_flux(probe.power, params.wavelength, efficiency);
    let scatter = probe_scattering_rate(pure, probe, gate_voltage, b_field, params);
    let photon_scatter_interval = 1.0 / scatter;
    let spin_flip_interval = photon_scatter_interval / params.branching_ratio;
    let t_snr1 = time_to_snr(1.0, theta, flux);
    Ok(BudgetReport {
        spin: pure,
        branching_ratio: params.branching_ratio,
        photon_scatter_interval,
        spin_flip_interval,
        theta,
        detected_flux: flux,
        t_snr1,
        n_backaction_at_snr1: t_snr1 / spin_flip_interval,
        qnd_margin: params.alpha0 * efficiency / params.branching_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::Transition;
    use crate::polarization::JonesVector;

    fn default_budget(
        params: &TrionParameters,
        delta_lw: f64,
        power: f64,
        eta: f64,
    ) -> BudgetReport {
        let v = params.resonance_voltage_prep;
        let probe = ProbeField::relative_to_line(
            Transition::SigmaMinus,
            delta_lw * params.gamma,
            v,
            1.0,
            power,
            JonesVector::linear_x(),
            params,
        )
        .unwrap();
        backaction_budget(&probe, SpinState::Down, v, 1.0, params, eta).unwrap()
    }

    #[test]
    fn flux_at_one_microwatt() {
        assert_eq!(detected_flux(0.0, 950e-9, 0.1), 0.0);
        let f = detected_flux(1e-6, 950e-9, 0.1);
        assert!((f / 4.78e11 - 1.0).abs() < 2e-3, "{f}");
        assert_eq!(detected_flux(1e-6, 950e-9, 0.2), 2.0 * f);
    }

    #[test]
    fn snr_scaling_and_inversion() {
        assert_eq!(snr(0.0, 1e12, 1.0), 0.0);
        let s1 = snr(1e-6, 4.78e11, 0.1);
        assert!((snr(1e-6, 4.78e11, 0.4) - 2.0 * s1).abs() < 1e-12);
        let t = time_to_snr(1.0, 1e-6, 4.78e11);
        assert!((t - 0.523).abs() < 1e-3, "{t}");
        assert!((snr(1e-6, 4.78e11, t) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn report_identities_hold_exactly() {
        let p = TrionParameters::default();
        let r = default_budget(&p, 306.0, 1e-6, 0.1);
        assert_eq!(
            r.spin_flip_interval,
            r.photon_scatter_interval / p.branching_ratio
        );
        assert_eq!(r.n_backaction_at_snr1, r.t_snr1 / r.spin_flip_interval);
        assert!(r.theta > 0.0);
    }

    #[test]
    fn budget_brackets_published_intervals() {
        let p = TrionParameters::default();
        let r = default_budget(&p, 306.0, 1e-6, 0.1);
        assert!((2e-6..18e-6).contains(&r.photon_scatter_interval), "{r}");
        assert!((20e-3..180e-3).contains(&r.spin_flip_interval), "{r}");
    }

    #[test]
    fn n_backaction_scales_with_branching_ratio() {
        let p = TrionParameters::default();
        let a = default_budget(&p, 306.0, 1e-6, 0.1);
        let p10 = TrionParameters {
            branching_ratio: 1e-3,
            ..p
        };
        let b = default_budget(&p10, 306.0, 1e-6, 0.1);
        assert!((b.n_backaction_at_snr1 / a.n_backaction_at_snr1 - 10.0).abs() < 1e-9);
    }

    #[test]
    fn t_snr1_quadruples_when_detuning_doubles() {
        let p = TrionParameters::default();
        let a = default_budget(&p, 300.0, 1e-6, 0.1);
        let b = default_budget(&p, 600.0, 1e-6, 0.1);
        assert!((b.t_snr1 / a.t_snr1 / 4.0 - 1.0).abs() < 0.02);
    }

    #[test]
    fn n_backaction_independent_of_power() {
        let p = TrionParameters::default();
        let base = default_budget(&p, 306.0, 1e-7, 0.1).n_backaction_at_snr1;
        for power in [1e-6, 1e-5] {
            let n = default_budget(&p, 306.0, power, 0.1).n_backaction_at_snr1;
            assert!((n / base - 1.0).abs() < 0.02, "{power}: {n} vs {base}");
        }
    }

    #[test]
    fn perfect_detection_clears_qnd_margin() {
        let p = TrionParameters::default();
        let r = default_budget(&p, 306.0, 1e-6, 1.0);
        assert!(r.qnd_margin > 1.0, "{}", r.qnd_margin);
    }

    #[test]
    fn mixed_and_singlet_are_rejected() {
        let p = TrionParameters::default();
        let probe = ProbeField::new(0.0, 1e-6, JonesVector::linear_x(), &p).unwrap();
        for s in [SpinState::Mixed(0.0), SpinState::Singlet] {
            assert!(matches!(
                backaction_budget(&probe, s, 0.415, 1.0, &p, 0.1),
                Err(Error::Contract(_))
            ));
        }
    }
}
