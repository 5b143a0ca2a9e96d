//! Optical spin pumping and quantum-jump trajectories of the resident spin.
//!
//! The trion is eliminated adiabatically: the spin is a two-state Markov jump
//! process whose rates collect probe-induced Raman flips, natural relaxation,
//! cotunneling and optical pumping. Detector counts are Poisson samples of
//! the occupancy-weighted mean intensities within each bin.
//!
//! Trajectories use ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64`), so a
//! seed reproduces the same trajectory on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::params::TrionParameters;
use crate::physics::{
    probe_scattering_rate, scattering_rate, ProbeField, PureSpin, SpinState, Transition,
};
use crate::polarization::{pure_reading, Detector};

/// A circularly polarized preparation laser tuned near one trion line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpLaser {
    /// The line being pumped. Pumping σ⁻ empties spin down (ρ → +1).
    pub line: Transition,
    /// Laser detuning from its line at the preparation resonance voltage (rad/s).
    pub detuning: f64,
    /// Rabi frequency on the pumped line (rad/s).
    pub rabi: f64,
}

impl PumpLaser {
    /// Detuning from the pumped line at `gate_voltage`; the laser frequency is
    /// fixed while the Stark shift moves the line.
    pub fn detuning_at(&self, gate_voltage: f64, params: &TrionParameters) -> f64 {
        self.detuning - params.stark_shift(gate_voltage)
    }

    /// Spin-flip rate R_p out of the pumped spin state (1/s).
    pub fn pump_rate(&self, gate_voltage: f64, params: &TrionParameters) -> f64 {
        if !params.in_plateau(gate_voltage) {
            return 0.0;
        }
        params.branching_ratio
            * scattering_rate(self.rabi, self.detuning_at(gate_voltage, params), params)
    }
}

/// ρ = ±R_p/(R_p + 2κ) for pumping rate R_p against relaxation κ each way.
pub fn steady_state_polarization(pump_rate: f64, relaxation_rate: f64, line: Transition) -> f64 {
    let total = pump_rate + 2.0 * relaxation_rate;
    if total <= 0.0 {
        return 0.0;
    }
    let magnitude = pump_rate / total;
    // Pumping a line empties its spin state.
    -line.spin().polarization() * magnitude
}

/// Steady-state spin polarization under optical pumping at `gate_voltage`.
///
/// Relaxation combines cotunneling (from the plateau-edge profile) and the
/// natural 1/(2T₁). Outside the plateau there is no resident spin and 0 is
/// returned.
pub fn preparation_steady_state(
    pump: &PumpLaser,
    gate_voltage: f64,
    params: &TrionParameters,
) -> Result<f64> {
    if !gate_voltage.is_finite()
        || !pump.detuning.is_finite()
        || pump.rabi.is_nan()
        || pump.rabi < 0.0
    {
        return Err(Error::Domain(
            "pump settings and gate voltage must be finite".into(),
        ));
    }
    if !params.in_plateau(gate_voltage) {
        return Ok(0.0);
    }
    Ok(steady_state_polarization(
        pump.pump_rate(gate_voltage, params),
        params.relaxation_rate(gate_voltage),
        pump.line,
    ))
}

/// Total spin-flip rates of the two-state jump process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSet {
    pub flip_up_to_down: f64,
    pub flip_down_to_up: f64,
    pub t1_natural: f64,
}

impl RateSet {
    pub fn new(flip_up_to_down: f64, flip_down_to_up: f64, t1_natural: f64) -> Result<Self> {
        for (name, r) in [
            ("flip_up_to_down", flip_up_to_down),
            ("flip_down_to_up", flip_down_to_up),
        ] {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(invalid(
                    name,
                    format!("rate must be finite and >= 0, got {r}"),
                ));
            }
        }
        Ok(Self {
            flip_up_to_down,
            flip_down_to_up,
            t1_natural,
        })
    }

    pub fn symmetric(rate: f64) -> Result<Self> {
        Self::new(rate, rate, f64::INFINITY)
    }

    /// Rates at an operating point: probe-induced Raman flips out of each
    /// spin, relaxation (natural plus cotunneling) both ways, and pumping out
    /// of the state addressed by the preparation laser. Probe and pump rates
    /// add independently.
    pub fn at_operating_point(
        params: &TrionParameters,
        probe: Option<&ProbeField>,
        pump: Option<&PumpLaser>,
        gate_voltage: f64,
        b_field: f64,
    ) -> Result<Self> {
        let relax = params.relaxation_rate(gate_voltage);
        let beta = params.branching_ratio;
        let mut up_to_down = relax;
        let mut down_to_up = relax;
        if let Some(probe) = probe {
            up_to_down +=
                beta * probe_scattering_rate(PureSpin::Up, probe, gate_voltage, b_field, params);
            down_to_up +=
                beta * probe_scattering_rate(PureSpin::Down, probe, gate_voltage, b_field, params);
        }
        if let Some(pump) = pump {
            let rp = pump.pump_rate(gate_voltage, params);
            match pump.line.spin() {
                PureSpin::Up => up_to_down += rp,
                PureSpin::Down => down_to_up += rp,
            }
        }
        Self::new(up_to_down, down_to_up, params.t1_natural)
    }

    pub fn rate_out_of(&self, spin: PureSpin) -> f64 {
        match spin {
            PureSpin::Up => self.flip_up_to_down,
            PureSpin::Down => self.flip_down_to_up,
        }
    }

    /// Stationary polarization P↑ − P↓ of the jump process.
    pub fn stationary_polarization(&self) -> f64 {
        let total = self.flip_up_to_down + self.flip_down_to_up;
        if total > 0.0 {
            (self.flip_down_to_up - self.flip_up_to_down) / total
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryBin {
    pub t_start: f64,
    /// Spin occupying the larger part of the bin.
    pub hidden_spin: PureSpin,
    /// Fraction of the bin spent in spin up.
    pub up_fraction: f64,
    /// Difference of the two detector counts.
    pub diff_count: i64,
    /// Sum of the two detector counts.
    pub sum_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub bin_duration: f64,
    pub seed: u64,
    pub initial_spin: PureSpin,
    pub bins: Vec<TrajectoryBin>,
    /// Times of every spin flip.
    pub jump_times: Vec<f64>,
}

impl Trajectory {
    pub fn duration(&self) -> f64 {
        self.bin_duration * self.bins.len() as f64
    }

    /// Fraction of the total time spent in spin up.
    pub fn up_occupancy(&self) -> f64 {
        if self.bins.is_empty() {
            return 0.0;
        }
        self.bins.iter().map(|b| b.up_fraction).sum::<f64>() / self.bins.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySettings {
    /// Total simulated time (s).
    pub duration: f64,
    /// Bin width (s).
    pub bin: f64,
    pub seed: u64,
    /// Starting spin; `None` draws it from the stationary distribution.
    pub initial: Option<PureSpin>,
}

/// Simulate a quantum-jump trajectory with Poisson-sampled polarimeter counts.
///
/// Bins are split exactly at jump times; each detector's count in a bin is a
/// Poisson sample whose mean is the occupancy-weighted pure-state intensity
/// integrated over the bin.
pub fn simulate_trajectory(
    params: &TrionParameters,
    probe: &ProbeField,
    gate_voltage: f64,
    b_field: f64,
    rates: &RateSet,
    settings: &TrajectorySettings,
    detector: &Detector,
) -> Result<Trajectory> {
    let bin = settings.bin;
    if !(bin > 0.0 && bin.is_finite()) {
        return Err(invalid(
            "bin",
            format!("bin duration must be > 0, got {bin}"),
        ));
    }
    if !(settings.duration >= bin && settings.duration.is_finite()) {
        return Err(invalid(
            "duration",
            format!(
                "duration must be >= bin ({bin} s), got {}",
                settings.duration
            ),
        ));
    }
    detector.validate()?;
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

    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let initial = settings.initial.unwrap_or_else(|| {
        let p_up = 0.5 * (1.0 + rates.stationary_polarization());
        if rng.random::<f64>() < p_up {
            PureSpin::Up
        } else {
            PureSpin::Down
        }
    });

    let n_bins = (settings.duration / bin).floor() as usize;
    let mut bins = Vec::with_capacity(n_bins);
    let mut jump_times = Vec::new();
    let mut spin = initial;
    let mut next_jump = draw_jump(&mut rng, 0.0, rates.rate_out_of(spin));

    for k in 0..n_bins {
        let t0 = k as f64 * bin;
        let t1 = t0 + bin;
        let start_spin = spin;
        let mut t = t0;
        let mut up_time = 0.0;
        while next_jump < t1 {
            if spin == PureSpin::Up {
                up_time += next_jump - t;
            }
            t = next_jump;
            jump_times.push(t);
            spin = spin.flipped();
            next_jump = draw_jump(&mut rng, t, rates.rate_out_of(spin));
        }
        if spin == PureSpin::Up {
            up_time += t1 - t;
        }
        let up_fraction = if t == t0 {
            // No jump in this bin: exactly one spin.
            if spin == PureSpin::Up {
                1.0
            } else {
                0.0
            }
        } else {
            (up_time / bin).clamp(0.0, 1.0)
        };
        let hidden_spin = if up_fraction > 0.5 {
            PureSpin::Up
        } else if up_fraction < 0.5 {
            PureSpin::Down
        } else {
            start_spin
        };
        let mean_x = bin * (up_fraction * up.i_x + (1.0 - up_fraction) * down.i_x);
        let mean_y = bin * (up_fraction * up.i_y + (1.0 - up_fraction) * down.i_y);
        let nx = poisson(&mut rng, mean_x)?;
        let ny = poisson(&mut rng, mean_y)?;
        bins.push(TrajectoryBin {
            t_start: t0,
            hidden_spin,
            up_fraction,
            diff_count: nx as i64 - ny as i64,
            sum_count: nx + ny,
        });
    }

    Ok(Trajectory {
        bin_duration: bin,
        seed: settings.seed,
        initial_spin: initial,
        bins,
        jump_times,
    })
}

fn draw_jump(rng: &mut ChaCha8Rng, now: f64, rate: f64) -> f64 {
    if rate > 0.0 {
        let e: f64 = Exp1.sample(rng);
        now + e / rate
    } else {
        f64::INFINITY
    }
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> Result<u64> {
    if mean <= 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean)
        .map_err(|e| Error::Domain(format!("cannot sample Poisson({mean}): {e}")))?;
    Ok(dist.sample(rng) as u64)
}

/// How to place the classification threshold on `diff_count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Fixed(f64),
    /// Search for the threshold maximizing agreement with the hidden spin.
    Optimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityEstimate {
    /// Fraction of bins classified correctly, in [0.5, 1].
    pub fidelity: f64,
    pub threshold: f64,
    /// Spin assigned to bins with `diff_count > threshold`.
    pub above_threshold: PureSpin,
    /// Set when the hidden spin never changes; fidelity is then reported as 1.
    pub degenerate: bool,
}

/// Fraction of bins whose thresholded `diff_count` matches the hidden spin,
/// with the spin-to-sign assignment chosen to agree best with the data.
pub fn estimate_readout_fidelity(
    traj: &Trajectory,
    threshold: Threshold,
) -> Result<FidelityEstimate> {
    let n = traj.bins.len();
    if n < 100 {
        return Err(Error::Contract(format!(
            "fidelity estimation needs at least 100 bins, got {n}"
        )));
    }
    let n_up = traj
        .bins
        .iter()
        .filter(|b| b.hidden_spin == PureSpin::Up)
        .count();
    if n_up == 0 || n_up == n {
        return Ok(FidelityEstimate {
            fidelity: 1.0,
            threshold: match threshold {
                Threshold::Fixed(t) => t,
                Threshold::Optimal => 0.0,
            },
            above_threshold: traj.bins[0].hidden_spin,
            degenerate: true,
        });
    }

    // `agree` counts bins consistent with "above threshold means down".
    let finish = |agree: usize, thr: f64| {
        let (correct, above) = if 2 * agree >= n {
            (agree, PureSpin::Down)
        } else {
            (n - agree, PureSpin::Up)
        };
        FidelityEstimate {
            fidelity: correct as f64 / n as f64,
            threshold: thr,
            above_threshold: above,
            degenerate: false,
        }
    };

    match threshold {
        Threshold::Fixed(thr) => {
            let agree = traj
                .bins
                .iter()
                .filter(|b| (b.diff_count as f64 > thr) == (b.hidden_spin == PureSpin::Down))
                .count();
            Ok(finish(agree, thr))
        }
        Threshold::Optimal => {
            let mut sorted: Vec<(i64, PureSpin)> = traj
                .bins
                .iter()
                .map(|b| (b.diff_count, b.hidden_spin))
                .collect();
            sorted.sort_by_key(|&(d, _)| d);
            // Everything above the lowest threshold: agreement = number of downs.
            let mut agree = n - n_up;
            let mut best = finish(agree, sorted[0].0 as f64 - 0.5);
            for i in 0..n {
                // Move bin i below the threshold.
                match sorted[i].1 {
                    PureSpin::Up => agree += 1,
                    PureSpin::Down => agree -= 1,
                }
                if i + 1 < n && sorted[i + 1].0 == sorted[i].0 {
                    continue;
                }
                let thr = if i + 1 < n {
                    0.5 * (sorted[i].0 as f64 + sorted[i + 1].0 as f64)
                } else {
                    sorted[i].0 as f64 + 0.5
                };
                let candidate = finish(agree, thr);
                if candidate.fidelity > best.fidelity {
                    best = candidate;
                }
            }
            Ok(best)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polarization::JonesVector;
    use crate::units::ghz_to_angular;

    fn pump(line: Transition, detuning: f64, params: &TrionParameters) -> PumpLaser {
        PumpLaser {
            line,
            detuning,
            rabi: params.rabi_for_power(100e-9),
        }
    }

    #[test]
    fn far_detuned_pump_leaves_spin_mixed() {
        let p = TrionParameters::default();
        let rho =
            preparation_steady_state(&pump(Transition::SigmaMinus, 1e4 * p.gamma, &p), 0.415, &p)
                .unwrap();
        assert!(rho.abs() < 1e-3, "{rho}");
    }

    #[test]
    fn resonant_pumping_prepares_near_unity() {
        let p = TrionParameters::default();
        let up =
            preparation_steady_state(&pump(Transition::SigmaMinus, 0.0, &p), 0.415, &p).unwrap();
        assert!(up > 0.98, "{up}");
        let down =
            preparation_steady_state(&pump(Transition::SigmaPlus, 0.0, &p), 0.415, &p).unwrap();
        assert!(down < -0.98, "{down}");
    }

    #[test]
    fn cotunneling_defeats_pumping_at_plateau_edge() {
        let p = TrionParameters::default();
        let pl = PumpLaser {
            detuning: p.stark_shift(0.391),
            ..pump(Transition::SigmaMinus, 0.0, &p)
        };
        let rho = preparation_steady_state(&pl, 0.391, &p).unwrap();
        assert!(rho.abs() < 0.01, "{rho}");
    }

    #[test]
    fn stationary_polarization_matches_preparation() {
        let p = TrionParameters::default();
        let pl = pump(Transition::SigmaMinus, 2.0 * p.gamma, &p);
        let rates = RateSet::at_operating_point(&p, None, Some(&pl), 0.415, 1.0).unwrap();
        let rho = preparation_steady_state(&pl, 0.415, &p).unwrap();
        assert!((rates.stationary_polarization() - rho).abs() < 1e-12);
    }

    fn probe(p: &TrionParameters) -> ProbeField {
        ProbeField::relative_to_line(
            Transition::SigmaMinus,
            ghz_to_angular(56.0),
            0.415,
            1.0,
            1e-6,
            JonesVector::linear_x(),
            p,
        )
        .unwrap()
    }

    #[test]
    fn trajectory_is_reproducible() {
        let p = TrionParameters::default();
        let rates = RateSet::symmetric(50.0).unwrap();
        let settings = TrajectorySettings {
            duration: 1.0,
            bin: 1e-3,
            seed: 7,
            initial: None,
        };
        let det = Detector::default();
        let a = simulate_trajectory(&p, &probe(&p), 0.415, 1.0, &rates, &settings, &det).unwrap();
        let b = simulate_trajectory(&p, &probe(&p), 0.415, 1.0, &rates, &settings, &det).unwrap();
        assert_eq!(a, b);
        let c = simulate_trajectory(
            &p,
            &probe(&p),
            0.415,
            1.0,
            &rates,
            &TrajectorySettings {
                seed: 8,
                ..settings
            },
            &det,
        )
        .unwrap();
        assert_ne!(a, c);
        assert_eq!(a.bins.len(), 1000);
    }

    #[test]
    fn frozen_spin_never_jumps() {
        let p = TrionParameters::default();
        let rates = RateSet::symmetric(0.0).unwrap();
        let settings = TrajectorySettings {
            duration: 0.1,
            bin: 1e-3,
            seed: 1,
            initial: Some(PureSpin::Down),
        };
        let t = simulate_trajectory(
            &p,
            &probe(&p),
            0.415,
            1.0,
            &rates,
            &settings,
            &Detector::default(),
        )
        .unwrap();
        assert!(t.jump_times.is_empty());
        assert!(t
            .bins
            .iter()
            .all(|b| b.hidden_spin == PureSpin::Down && b.up_fraction == 0.0));
    }

    #[test]
    fn bad_bins_are_rejected() {
        let p = TrionParameters::default();
        let rates = RateSet::symmetric(0.0).unwrap();
        let det = Detector::default();
        for (duration, bin) in [(1.0, 0.0), (1.0, -1.0), (0.5, 1.0)] {
            let s = TrajectorySettings {
                duration,
                bin,
                seed: 0,
                initial: None,
            };
            assert!(simulate_trajectory(&p, &probe(&p), 0.415, 1.0, &rates, &s, &det).is_err());
        }
    }

    fn synthetic(bins: Vec<(PureSpin, i64)>) -> Trajectory {
        Trajectory {
            bin_duration: 1.0,
            seed: 0,
            initial_spin: bins[0].0,
            bins: bins
                .into_iter()
                .enumerate()
                .map(|(i, (s, d))| TrajectoryBin {
                    t_start: i as f64,
                    hidden_spin: s,
                    up_fraction: if s == PureSpin::Up { 1.0 } else { 0.0 },
                    diff_count: d,
                    sum_count: 1000,
                })
                .collect(),
            jump_times: vec![],
        }
    }

    #[test]
    fn perfectly_separated_bins_give_unit_fidelity() {
        let bins = (0..200)
            .map(|i| {
                if i % 3 == 0 {
                    (PureSpin::Up, -50 - i)
                } else {
                    (PureSpin::Down, 40 + i)
                }
            })
            .collect();
        let t = synthetic(bins);
        let f = estimate_readout_fidelity(&t, Threshold::Optimal).unwrap();
        assert_eq!(f.fidelity, 1.0);
        assert_eq!(f.above_threshold, PureSpin::Down);
        assert!(f.threshold > -50.0 && f.threshold < 40.0);
        let fixed = estimate_readout_fidelity(&t, Threshold::Fixed(0.0)).unwrap();
        assert_eq!(fixed.fidelity, 1.0);
        // Reversed polarity is found as well.
        let inverted = estimate_readout_fidelity(&t, Threshold::Fixed(1e9)).unwrap();
        assert!(inverted.fidelity >= 0.5);
    }

    #[test]
    fn degenerate_and_short_trajectories() {
        let t = synthetic((0..150).map(|i| (PureSpin::Down, i)).collect());
        let f = estimate_readout_fidelity(&t, Threshold::Optimal).unwrap();
        assert!(f.degenerate);
        assert_eq!(f.fidelity, 1.0);
        let short = synthetic((0..50).map(|i| (PureSpin::Down, i)).collect());
        assert!(estimate_readout_fidelity(&short, Threshold::Optimal).is_err());
    }
}
