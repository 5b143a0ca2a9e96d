#![allow(dead_code)]

use faraday_core::units::ghz_to_angular;
use faraday_core::*;

pub const V_PREP: f64 = 0.415;
pub const B: f64 = 1.0;

pub fn params() -> TrionParameters {
    TrionParameters::default()
}

/// x̂-polarized probe `lw` linewidths above `line` at the preparation voltage.
pub fn probe_from_line(p: &TrionParameters, line: Transition, lw: f64, power: f64) -> ProbeField {
    ProbeField::relative_to_line(
        line,
        lw * p.gamma,
        V_PREP,
        B,
        power,
        JonesVector::linear_x(),
        p,
    )
    .unwrap()
}

pub fn probe_from_line_ghz(
    p: &TrionParameters,
    line: Transition,
    ghz: f64,
    power: f64,
) -> ProbeField {
    ProbeField::relative_to_line(
        line,
        ghz_to_angular(ghz),
        V_PREP,
        B,
        power,
        JonesVector::linear_x(),
        p,
    )
    .unwrap()
}

/// Standard normal CDF.
pub fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

pub fn mean_std(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Gate sweep: probe 30 GHz above the σ⁺ line, 390 → 460 mV.
pub fn gate_sweep(prep: Preparation) -> SweepSpec {
    SweepSpec {
        axis1: Axis::new(SweepParam::GateVoltage, 390.0, 460.0, 71),
        axis2: None,
        base: OperatingPoint {
            prep,
            ..OperatingPoint::default()
        },
        measurement_time: 60.0,
        noise: Noise::None,
        seed: 11,
    }
}

/// Map: voltage 400 → 460 mV against probe detuning ±2 GHz
/// around `center_ghz` above the σ⁻ line.
pub fn detuning_map(center_ghz: f64, prep: Preparation, noise: Noise, t: f64) -> SweepSpec {
    SweepSpec {
        axis1: Axis::new(SweepParam::GateVoltage, 400.0, 460.0, 61),
        axis2: Some(Axis::new(
            SweepParam::ProbeDetuning,
            center_ghz - 2.0,
            center_ghz + 2.0,
            9,
        )),
        base: OperatingPoint {
            probe: ProbeSetup {
                detuning: ghz_to_angular(center_ghz),
                reference: ProbeReference::SigmaMinus,
                ..OperatingPoint::default().probe
            },
            prep,
            ..OperatingPoint::default()
        },
        measurement_time: t,
        noise,
        seed: 2024,
    }
}

pub fn pump(line: Transition) -> Preparation {
    Preparation::Pump {
        line,
        detuning: 0.0,
        power: 100e-9,
    }
}
