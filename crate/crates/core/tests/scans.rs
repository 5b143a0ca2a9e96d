mod common;

use common::*;
use faraday_core::polarization::pure_reading;
use faraday_core::units::ghz_to_angular;
use faraday_core::*;

fn max_step(xs: &[f64]) -> f64 {
    xs.windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0, f64::max)
}

fn same_bits(a: &Dataset, b: &Dataset) -> bool {
    a.records.len() == b.records.len()
        && a.records.iter().zip(&b.records).all(|(x, y)| {
            x.sum.to_bits() == y.sum.to_bits()
                && x.diff.to_bits() == y.diff.to_bits()
                && x.theta.to_bits() == y.theta.to_bits()
                && x.rho_prepared.to_bits() == y.rho_prepared.to_bits()
        })
}

#[test]
fn circular_probe_spectrum_is_a_broadened_lorentzian() {
    let p = params();
    let power = 20e-9;
    let spec = SweepSpec {
        axis1: Axis::new(SweepParam::ProbeDetuning, -3.0, 3.0, 4001),
        axis2: None,
        base: OperatingPoint {
            probe: ProbeSetup {
                detuning: 0.0,
                reference: ProbeReference::SigmaMinus,
                power,
                polarization: JonesVector::sigma_minus(),
            },
            prep: Preparation::Fixed { rho: -1.0 },
            ..OperatingPoint::default()
        },
        measurement_time: 1.0,
        noise: Noise::None,
        seed: 1,
    };
    let d = run_sweep(&spec, &p).unwrap();
    assert!(d.records.iter().all(|r| r.diff == 0.0));

    // Full width at half depth of the absorption dip.
    let incident =
        faraday_core::units::photon_flux(power, p.wavelength) * Detector::default().efficiency;
    let dip: Vec<f64> = d.records.iter().map(|r| 1.0 - r.sum / incident).collect();
    let x = &d.axes[0].values;
    let depth = dip.iter().cloned().fold(0.0, f64::max);
    let centre = dip.iter().position(|&v| v == depth).unwrap();
    let crossing = |range: Box<dyn Iterator<Item = usize>>| {
        let mut prev = centre;
        for i in range {
            if dip[i] < depth / 2.0 {
                let f = (dip[prev] - depth / 2.0) / (dip[prev] - dip[i]);
                return x[prev] + f * (x[i] - x[prev]);
            }
            prev = i;
        }
        panic!("no half-depth crossing");
    };
    let fwhm_ghz = crossing(Box::new(centre + 1..x.len())) - crossing(Box::new((0..centre).rev()));
    let s0 = 2.0 * (p.rabi_for_power(power) / p.gamma).powi(2);
    let expected = p.gamma_hz() * 1e-9 * (1.0 + s0).sqrt();
    assert!(
        (fwhm_ghz / expected - 1.0).abs() < 0.01,
        "FWHM {fwhm_ghz} GHz vs {expected}"
    );
    assert!(x[centre].abs() < 2e-3);
}

#[test]
fn gate_sweep_with_preparation() {
    let p = params();
    let d = run_sweep(&gate_sweep(pump(Transition::SigmaMinus)), &p).unwrap();
    let v = &d.axes[0].values;
    let at = |mv: f64| v.iter().position(|&x| (x - mv).abs() < 1e-9).unwrap();
    let probe = OperatingPoint::default().probe.field(B, &p).unwrap();
    let full = pure_reading(SpinState::Up, &probe, V_PREP, B, &p, &Detector::default()).unwrap();
    let r415 = &d.records[at(415.0)];
    assert!(r415.rho_prepared > 0.98);
    assert!((r415.diff / full.diff - 1.0).abs() < 0.05);
    // Away from the pump resonance the spin is thermal.
    assert!(d.records[at(400.0)].rho_prepared.abs() < 0.05);
    for (i, &mv) in v.iter().enumerate() {
        if mv > 450.0 {
            assert_eq!(d.records[i].diff, 0.0);
            assert_eq!(d.records[i].theta, 0.0);
        }
    }
}

#[test]
fn opposite_preparations_at_the_pump_resonance() {
    let p = params();
    let sm = run_sweep(&gate_sweep(pump(Transition::SigmaMinus)), &p).unwrap();
    let sp = run_sweep(&gate_sweep(pump(Transition::SigmaPlus)), &p).unwrap();
    let i = sm.axes[0]
        .values
        .iter()
        .position(|&x| (x - 415.0).abs() < 1e-9)
        .unwrap();
    let (a, b) = (sm.records[i].diff, sp.records[i].diff);
    assert!(a * b < 0.0);
    // The σ⁺ pump prepares spin down, read 26 GHz further away.
    assert!(b.abs() < a.abs());
    let ratio = b.abs() / a.abs();
    assert!((ratio - 100.0 / 185.0).abs() < 0.05, "{ratio}");
}

#[test]
fn preparation_survey_matches_inverse_detuning() {
    let p = params();
    let probes = [ghz_to_angular(30.0), ghz_to_angular(66.0)];
    let preps: Vec<f64> = (-40..=40)
        .map(|k| k as f64 * 0.25 * p.gamma)
        .chain([1e3 * p.gamma])
        .collect();
    let base = OperatingPoint::default();
    let survey = rotation_vs_preparation(&probes, &preps, &base, &p).unwrap();

    let mut on_res = survey.on_resonance_theta();
    on_res.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (got, want) in on_res.iter().zip([100.0, 185.0, 220.0, 306.0]) {
        assert!((got.0 - want).abs() < 2.0, "{} vs {want}", got.0);
    }
    for w in on_res.windows(2) {
        assert!(w[0].1.abs() > w[1].1.abs());
    }

    // Same spin (up, via the σ⁻ pump) at 100 Γ and 220 Γ.
    let theta_at = |lw: f64| on_res.iter().find(|x| (x.0 - lw).abs() < 2.0).unwrap().1;
    let ratio = theta_at(100.0) / theta_at(220.0);
    let oracle = {
        let th = |ghz: f64| {
            let probe = probe_from_line_ghz(&p, Transition::SigmaPlus, ghz, 1e-12);
            faraday_angle(&response_for_spin(SpinState::Up, &probe, V_PREP, B, &p).unwrap())
        };
        th(30.0) / th(66.0)
    };
    assert!((oracle / 2.2 - 1.0).abs() < 0.02, "oracle {oracle}");
    assert!((ratio / 2.2 - 1.0).abs() < 0.02, "survey {ratio}");

    // Far-detuned preparation leaves the unprepared offset.
    let far = preps.len() - 1;
    for (k, s) in survey.series.iter().enumerate() {
        let offset = survey.unprepared_theta[k / 2];
        assert!(
            (s.theta[far] - offset).abs()
                < 1e-3 * s.theta.iter().fold(0.0f64, |m, t| m.max(t.abs()))
        );
    }
    assert_eq!(survey.singlet_theta, 0.0);
}

#[test]
fn survey_rejects_probe_inside_linear_response_limit() {
    let p = params();
    let err = rotation_vs_preparation(&[5.0 * p.gamma], &[0.0], &OperatingPoint::default(), &p);
    assert!(matches!(err, Err(Error::Domain(_))));
}

#[test]
fn map_is_continuous_under_refinement() {
    let p = params();
    let steps = |n: usize| {
        let spec = SweepSpec {
            axis1: Axis::new(SweepParam::GateVoltage, 392.0, 448.0, n),
            ..gate_sweep(pump(Transition::SigmaMinus))
        };
        let d = run_sweep(&spec, &p).unwrap();
        max_step(&d.records.iter().map(|r| r.diff).collect::<Vec<_>>())
    };
    let (a, b, c) = (steps(401), steps(801), steps(1601));
    assert!(b < 0.6 * a && c < 0.6 * b, "{a} {b} {c}");

    // Along the detuning axis of a map.
    let along = |n: usize| {
        let mut spec = detuning_map(56.0, pump(Transition::SigmaPlus), Noise::None, 0.1);
        spec.axis1 = Axis::new(SweepParam::GateVoltage, 415.0, 415.0 + 1e-9, 2);
        spec.axis2 = Some(Axis::new(SweepParam::ProbeDetuning, 40.0, 70.0, n));
        let d = run_map(&spec, &p).unwrap();
        max_step(&d.records[..n].iter().map(|r| r.diff).collect::<Vec<_>>())
    };
    let (a, b) = (along(201), along(401));
    assert!(b < 0.6 * a, "{a} {b}");
}

#[test]
fn plateau_edge_is_the_only_discontinuity() {
    let p = params();
    let spec = SweepSpec {
        axis1: Axis::new(SweepParam::GateVoltage, 440.0, 460.0, 2001),
        base: OperatingPoint {
            prep: Preparation::Fixed { rho: 1.0 },
            ..OperatingPoint::default()
        },
        ..gate_sweep(Preparation::Off)
    };
    let d = run_sweep(&spec, &p).unwrap();
    let diffs: Vec<f64> = d.records.iter().map(|r| r.diff).collect();
    let jumps: Vec<usize> = diffs
        .windows(2)
        .enumerate()
        .filter(|(_, w)| (w[1] - w[0]).abs() > 0.5 * w[0].abs().max(w[1].abs()))
        .map(|(i, _)| i)
        .collect();
    assert_eq!(jumps.len(), 1);
    let v = &d.axes[0].values;
    assert!(v[jumps[0]] <= 450.0 && v[jumps[0] + 1] > 450.0);
}

#[test]
fn mirror_symmetry() {
    let p = params();
    for prep in [
        pump(Transition::SigmaMinus),
        Preparation::Fixed { rho: 0.4 },
        Preparation::Off,
    ] {
        let mut spec = detuning_map(40.0, prep, Noise::None, 0.1);
        spec.base.probe.reference = ProbeReference::Bare;
        let mut mirrored = spec.clone();
        mirrored.base.prep = prep.mirrored();
        mirrored.base.b_field = -spec.base.b_field;
        let a = run_map(&spec, &p).unwrap();
        let b = run_map(&mirrored, &p).unwrap();
        for (x, y) in a.records.iter().zip(&b.records) {
            assert!(
                (x.diff + y.diff).abs() <= 1e-12 * x.sum,
                "{} vs {}",
                x.diff,
                y.diff
            );
            assert!((x.sum - y.sum).abs() <= 1e-12 * x.sum);
        }
    }
}

#[test]
fn dataset_is_a_pure_function_of_its_inputs() {
    let p = params();
    let spec = detuning_map(56.0, pump(Transition::SigmaMinus), Noise::Shot, 0.1);
    let a = run_map(&spec, &p).unwrap();
    let b = run_map(&spec, &p).unwrap();
    assert_eq!(a, b);
    assert!(same_bits(&a, &b));
    assert_eq!(a.shape(), vec![61, 9]);
}

#[test]
fn thread_count_does_not_change_results() {
    let p = params();
    let spec = detuning_map(56.0, pump(Transition::SigmaMinus), Noise::Shot, 0.1);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_map(&spec, &p).unwrap())
    };
    let one = run(1);
    let four = run(4);
    assert!(same_bits(&one, &four));
}

#[test]
fn shot_noise_scales_with_measurement_time() {
    let p = params();
    let map = |noise, t, seed| {
        let mut spec = detuning_map(56.0, pump(Transition::SigmaMinus), noise, t);
        spec.axis1 = Axis::new(SweepParam::GateVoltage, 400.0, 450.0, 51);
        spec.axis2 = Some(Axis::new(SweepParam::ProbeDetuning, 46.0, 66.0, 41));
        spec.seed = seed;
        run_map(&spec, &p).unwrap()
    };
    let clean = map(Noise::None, 1.0, 0);
    let rms = |noisy: &Dataset| {
        let n = noisy.records.len() as f64;
        (noisy
            .records
            .iter()
            .zip(&clean.records)
            .map(|(a, b)| (a.diff - b.diff).powi(2))
            .sum::<f64>()
            / n)
            .sqrt()
    };
    let ratio = rms(&map(Noise::Shot, 0.1, 5)) / rms(&map(Noise::Shot, 60.0, 6));
    assert!((ratio / 600f64.sqrt() - 1.0).abs() < 0.1, "{ratio}");
}

#[test]
fn singlet_zone_is_dark_in_maps() {
    let p = params();
    let d = run_map(
        &detuning_map(92.0, pump(Transition::SigmaMinus), Noise::None, 0.1),
        &p,
    )
    .unwrap();
    for (i, r) in d.records.iter().enumerate() {
        if d.coords(i)[0] > 450.0 {
            assert_eq!(r.diff, 0.0);
        }
    }
}

#[test]
fn sweep_mode_is_recorded() {
    let p = params();
    let d = run_sweep(&gate_sweep(Preparation::Off), &p).unwrap();
    assert_eq!(d.mode, scan::SweepMode::Voltage);
    let m = run_map(&detuning_map(56.0, Preparation::Off, Noise::None, 0.1), &p).unwrap();
    assert_eq!(m.mode, scan::SweepMode::LaserAndVoltage);
}
