//! Invariant suite run by `faraday selfcheck`.

use faraday_core::budget::{detected_flux, snr, time_to_snr};
use faraday_core::polarization::pure_reading;
use faraday_core::units::{ghz_to_angular, photon_flux};
use faraday_core::*;
use num_complex::Complex64;

use crate::config::RunConfig;
use crate::error::CliError;

type Check = (
    &'static str,
    Box<dyn Fn(&Ctx) -> std::result::Result<(bool, String), faraday_core::Error>>,
);

struct Ctx {
    p: TrionParameters,
    v: f64,
    b: f64,
    det: Detector,
}

impl Ctx {
    fn probe(
        &self,
        line: Transition,
        linewidths: f64,
        power: f64,
    ) -> std::result::Result<ProbeField, faraday_core::Error> {
        ProbeField::relative_to_line(
            line,
            linewidths * self.p.gamma,
            self.v,
            self.b,
            power,
            JonesVector::linear_x(),
            &self.p,
        )
    }

    fn sweep(
        &self,
        axis1: Axis,
        axis2: Option<Axis>,
        base: OperatingPoint,
        noise: Noise,
        t: f64,
    ) -> SweepSpec {
        SweepSpec {
            axis1,
            axis2,
            base,
            measurement_time: t,
            noise,
            seed: 99,
        }
    }
}

fn checks() -> Vec<Check> {
    vec![
        (
            "linewidth calibration",
            Box::new(|_| {
                let fit = fit_linewidth(&params::LINEWIDTH_CALIBRATION_PAIRS)?;
                let res = fit.max_abs_residual();
                Ok((
                    format!("{:.2}", fit.gamma_ghz) == "0.30" && res < 0.02,
                    format!(
                        "gamma/2pi = {:.4} GHz, max residual {:.2} %",
                        fit.gamma_ghz,
                        100.0 * res
                    ),
                ))
            }),
        ),
        (
            "lineshape parity",
            Box::new(|c| {
                let one = Complex64::new(1.0, 0.0);
                let mut worst: f64 = 0.0;
                for k in 0..1000 {
                    let d = (k as f64 - 499.5) * 0.7 * c.p.gamma;
                    let a = one - complex_transmission(d, &c.p, 0.2)?;
                    let b = one - complex_transmission(-d, &c.p, 0.2)?;
                    worst = worst.max((a.re - b.re).abs()).max((a.im + b.im).abs());
                }
                Ok((worst < 1e-12, format!("max asymmetry {worst:.2e}")))
            }),
        ),
        (
            "transmission bounds",
            Box::new(|c| {
                let mut ok = true;
                for k in -200..=200 {
                    for s in [0.0, 0.5, 5.0] {
                        let t = complex_transmission(k as f64 * 0.1 * c.p.gamma, &c.p, s)?;
                        ok &= t.norm() <= 1.0 && t.norm_sqr() >= 1.0 - c.p.alpha0 - 1e-15;
                    }
                }
                Ok((ok, "1 - alpha0 <= |t|^2 <= 1".into()))
            }),
        ),
        (
            "dispersive dominance at 340 linewidths",
            Box::new(|c| {
                let x =
                    Complex64::new(1.0, 0.0) - complex_transmission(340.0 * c.p.gamma, &c.p, 0.0)?;
                let r = (x.im / x.re).abs();
                Ok(((r / 680.0 - 1.0).abs() < 1e-6, format!("|Im/Re| = {r:.6}")))
            }),
        ),
        (
            "circular probe null",
            Box::new(|c| {
                let base = OperatingPoint {
                    gate_voltage: c.v,
                    b_field: c.b,
                    probe: ProbeSetup {
                        detuning: 0.0,
                        reference: ProbeReference::SigmaMinus,
                        power: 20e-9,
                        polarization: JonesVector::sigma_minus(),
                    },
                    prep: Preparation::Fixed { rho: -0.5 },
                    detector: c.det,
                };
                let g = c.p.gamma_hz() * 1e-9;
                let d = run_sweep(
                    &c.sweep(
                        Axis::new(SweepParam::ProbeDetuning, -10.0 * g, 10.0 * g, 201),
                        None,
                        base,
                        Noise::None,
                        1.0,
                    ),
                    &c.p,
                )?;
                let worst = d
                    .records
                    .iter()
                    .map(|r| r.diff.abs() / r.sum)
                    .fold(0.0, f64::max);
                Ok((worst < 1e-12, format!("max |diff|/sum = {worst:.2e}")))
            }),
        ),
        (
            "flux accounting",
            Box::new(|c| {
                let mut worst: f64 = 0.0;
                for lw in [-50.0, -1.0, 0.0, 0.5, 3.0, 306.0] {
                    for rho in [-1.0, 0.3, 1.0] {
                        let probe = c.probe(Transition::SigmaMinus, lw, 20e-9)?;
                        let flux = photon_flux(probe.power, c.p.wavelength);
                        let lost = |spin| -> std::result::Result<f64, faraday_core::Error> {
                            let r = response_for_spin(spin, &probe, c.v, c.b, &c.p)?;
                            Ok(flux
                                * 0.5
                                * ((1.0 - r.t_plus.norm_sqr()) + (1.0 - r.t_minus.norm_sqr())))
                        };
                        let reading = mixed_reading(rho, &probe, c.v, c.b, &c.p, &c.det)?;
                        let scattered = 0.5 * (1.0 + rho) * lost(SpinState::Up)?
                            + 0.5 * (1.0 - rho) * lost(SpinState::Down)?;
                        worst = worst
                            .max(((reading.sum / c.det.efficiency + scattered) / flux - 1.0).abs());
                    }
                }
                Ok((worst < 1e-9, format!("max relative imbalance {worst:.2e}")))
            }),
        ),
        (
            "sign conditionality and singlet zone",
            Box::new(|c| {
                let [v_min, v_max] = c.p.plateau;
                let axis = Axis::new(SweepParam::GateVoltage, v_min * 1e3, v_max * 1e3 + 10.0, 71);
                let base = |rho| OperatingPoint {
                    gate_voltage: c.v,
                    b_field: c.b,
                    probe: ProbeSetup {
                        detuning: ghz_to_angular(30.0),
                        reference: ProbeReference::SigmaPlus,
                        power: 1e-6,
                        polarization: JonesVector::linear_x(),
                    },
                    prep: Preparation::Fixed { rho },
                    detector: c.det,
                };
                let up = run_sweep(&c.sweep(axis, None, base(1.0), Noise::None, 1.0), &c.p)?;
                let down = run_sweep(&c.sweep(axis, None, base(-1.0), Noise::None, 1.0), &c.p)?;
                let mut ok = true;
                for (i, &mv) in up.axes[0].values.iter().enumerate() {
                    let (a, b) = (up.records[i].diff, down.records[i].diff);
                    ok &= if mv * 1e-3 > v_max {
                        a == 0.0 && b == 0.0
                    } else {
                        a * b < 0.0
                    };
                }
                Ok((
                    ok,
                    "opposite signs inside the plateau, exactly zero beyond it".into(),
                ))
            }),
        ),
        (
            "mirror symmetry",
            Box::new(|c| {
                let base = OperatingPoint {
                    gate_voltage: c.v,
                    b_field: c.b,
                    probe: ProbeSetup {
                        detuning: ghz_to_angular(40.0),
                        reference: ProbeReference::Bare,
                        power: 1e-6,
                        polarization: JonesVector::linear_x(),
                    },
                    prep: Preparation::Pump {
                        line: Transition::SigmaMinus,
                        detuning: 0.0,
                        power: 100e-9,
                    },
                    detector: c.det,
                };
                let spec = c.sweep(
                    Axis::new(SweepParam::GateVoltage, 400.0, 460.0, 31),
                    Some(Axis::new(SweepParam::ProbeDetuning, 30.0, 50.0, 11)),
                    base,
                    Noise::None,
                    1.0,
                );
                let mut mirrored = spec.clone();
                mirrored.base.prep = base.prep.mirrored();
                mirrored.base.b_field = -base.b_field;
                let a = run_map(&spec, &c.p)?;
                let b = run_map(&mirrored, &c.p)?;
                let worst = a
                    .records
                    .iter()
                    .zip(&b.records)
                    .map(|(x, y)| (x.diff + y.diff).abs() / x.sum)
                    .fold(0.0, f64::max);
                Ok((
                    worst < 1e-12,
                    format!("max |diff + diff_mirrored|/sum = {worst:.2e}"),
                ))
            }),
        ),
        (
            "determinism across runs and thread counts",
            Box::new(|c| {
                let spec = c.sweep(
                    Axis::new(SweepParam::GateVoltage, 400.0, 460.0, 31),
                    Some(Axis::new(SweepParam::ProbeDetuning, 40.0, 70.0, 16)),
                    OperatingPoint {
                        detector: c.det,
                        ..OperatingPoint::default()
                    },
                    Noise::Shot,
                    0.1,
                );
                let run = |threads| -> std::result::Result<Dataset, faraday_core::Error> {
                    let pool = rayon::ThreadPoolBuilder::new()
                        .num_threads(threads)
                        .build()
                        .map_err(|e| faraday_core::Error::Contract(e.to_string()))?;
                    pool.install(|| run_map(&spec, &c.p))
                };
                let (a, b, again) = (run(1)?, run(4)?, run(4)?);
                let same = |x: &Dataset, y: &Dataset| {
                    x.records.iter().zip(&y.records).all(|(r, s)| {
                        r.diff.to_bits() == s.diff.to_bits() && r.sum.to_bits() == s.sum.to_bits()
                    })
                };
                Ok((
                    same(&a, &b) && same(&b, &again),
                    "1 and 4 threads, repeated run".into(),
                ))
            }),
        ),
        (
            "budget intervals",
            Box::new(|c| {
                let probe = c.probe(Transition::SigmaMinus, 306.0, 1e-6)?;
                let r =
                    backaction_budget(&probe, SpinState::Down, c.v, c.b, &c.p, c.det.efficiency)?;
                let ok = (2e-6..=18e-6).contains(&r.photon_scatter_interval)
                    && (20e-3..=180e-3).contains(&r.spin_flip_interval);
                Ok((
                    ok,
                    format!(
                        "scatter {:.2} us in [2, 18], flip {:.1} ms in [20, 180]",
                        r.photon_scatter_interval * 1e6,
                        r.spin_flip_interval * 1e3
                    ),
                ))
            }),
        ),
        (
            "back-action count at beta endpoints",
            Box::new(|c| {
                let probe = c.probe(Transition::SigmaMinus, 306.0, 1e-6)?;
                let n = |beta| -> std::result::Result<f64, faraday_core::Error> {
                    let q = TrionParameters {
                        branching_ratio: beta,
                        ..c.p
                    };
                    Ok(
                        backaction_budget(&probe, SpinState::Down, c.v, c.b, &q, c.det.efficiency)?
                            .n_backaction_at_snr1,
                    )
                };
                let (lo, hi) = (n(1e-4)?, n(1e-3)?);
                let ok = (0.3..=30.0).contains(&lo)
                    && (0.3..=30.0).contains(&hi)
                    && ((hi / lo) / 10.0 - 1.0).abs() < 1e-12;
                Ok((
                    ok,
                    format!("n(1e-4) = {lo:.3}, n(1e-3) = {hi:.3}, both in [0.3, 30], ratio 10"),
                ))
            }),
        ),
        (
            "QND constant",
            Box::new(|c| {
                let probe = c.probe(Transition::SigmaMinus, 306.0, 1e-6)?;
                let r =
                    backaction_budget(&probe, SpinState::Down, c.v, c.b, &c.p, c.det.efficiency)?;
                let k = r.qnd_threshold_constant();
                let ideal = backaction_budget(&probe, SpinState::Down, c.v, c.b, &c.p, 1.0)?;
                Ok((
                    (0.1..=10.0).contains(&k) && ideal.qnd_margin > 1.0,
                    format!(
                        "C = {k:.3}; margin at unit efficiency {:.2}",
                        ideal.qnd_margin
                    ),
                ))
            }),
        ),
        (
            "inverse detuning law",
            Box::new(|c| {
                let mut pts = Vec::new();
                for (lw, line, spin) in [
                    (100.0, Transition::SigmaPlus, SpinState::Up),
                    (185.0, Transition::SigmaMinus, SpinState::Down),
                    (220.0, Transition::SigmaPlus, SpinState::Up),
                    (306.0, Transition::SigmaMinus, SpinState::Down),
                ] {
                    let probe = c.probe(line, lw, 1e-12)?;
                    pts.push((
                        lw,
                        faraday_angle(&response_for_spin(spin, &probe, c.v, c.b, &c.p)?).abs(),
                    ));
                }
                let a = pts.iter().map(|(d, t)| t / d).sum::<f64>()
                    / pts.iter().map(|(d, _)| 1.0 / (d * d)).sum::<f64>();
                let worst = pts
                    .iter()
                    .map(|(d, t)| (t * d / a - 1.0).abs())
                    .fold(0.0, f64::max);
                let t_ratio = {
                    let t = |lw| -> std::result::Result<f64, faraday_core::Error> {
                        let probe = c.probe(Transition::SigmaMinus, lw, 1e-6)?;
                        Ok(backaction_budget(
                            &probe,
                            SpinState::Down,
                            c.v,
                            c.b,
                            &c.p,
                            c.det.efficiency,
                        )?
                        .t_snr1)
                    };
                    t(612.0)? / t(306.0)?
                };
                Ok((
                    worst < 0.01 && (t_ratio / 4.0 - 1.0).abs() < 0.02,
                    format!(
                        "A/delta residual {:.1e}, t_snr1(2d)/t_snr1(d) = {t_ratio:.4}",
                        worst
                    ),
                ))
            }),
        ),
        (
            "shot-noise SNR and trajectory replay",
            Box::new(|c| {
                let probe = c.probe(Transition::SigmaMinus, 20.0, 1e-6)?;
                let theta =
                    faraday_angle(&response_for_spin(SpinState::Down, &probe, c.v, c.b, &c.p)?);
                let flux = detected_flux(probe.power, c.p.wavelength, c.det.efficiency);
                let bin = time_to_snr(3.0, theta, flux);
                let settings = TrajectorySettings {
                    duration: 1e4 * bin,
                    bin,
                    seed: 5,
                    initial: Some(PureSpin::Down),
                };
                let rates = RateSet::symmetric(0.0)?;
                let traj = simulate_trajectory(&c.p, &probe, c.v, c.b, &rates, &settings, &c.det)?;
                let again = simulate_trajectory(&c.p, &probe, c.v, c.b, &rates, &settings, &c.det)?;
                let xs: Vec<f64> = traj.bins.iter().map(|b| b.diff_count as f64).collect();
                let n = xs.len() as f64;
                let mean = xs.iter().sum::<f64>() / n;
                let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
                let rel = (mean / sd) / snr(theta, flux, bin) - 1.0;
                Ok((
                    rel.abs() < 0.05 && traj == again,
                    format!("empirical/analytic SNR - 1 = {rel:.4}; replay identical"),
                ))
            }),
        ),
        (
            "pure spin readings",
            Box::new(|c| {
                let probe = c.probe(Transition::SigmaPlus, 100.0, 1e-6)?;
                let up = pure_reading(SpinState::Up, &probe, c.v, c.b, &c.p, &c.det)?;
                let down = pure_reading(SpinState::Down, &probe, c.v, c.b, &c.p, &c.det)?;
                let ok = mixed_reading(1.0, &probe, c.v, c.b, &c.p, &c.det)? == up
                    && mixed_reading(-1.0, &probe, c.v, c.b, &c.p, &c.det)? == down;
                Ok((ok, "Mixed(+1) = Up, Mixed(-1) = Down".into()))
            }),
        ),
    ]
}

/// Run every property, print one PASS/FAIL line each, and fail if any did.
pub fn run(cfg: &RunConfig) -> std::result::Result<(), CliError> {
    let op = cfg.operating_point();
    let ctx = Ctx {
        p: cfg.params(),
        v: cfg.params().resonance_voltage_prep,
        b: op.b_field,
        det: op.detector,
    };
    let all = checks();
    let mut failed = 0;
    for (name, check) in &all {
        let (ok, detail) = match check(&ctx) {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!("[{}] {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::SelfcheckFailed(failed, all.len()))
    }
}
