//! One- and two-dimensional parameter sweeps producing plot-ready datasets.
//!
//! Points are evaluated in parallel and collected in grid order (axis 1
//! outer, axis 2 inner). Shot noise for point `i` is drawn from a ChaCha8
//! stream seeded with the master seed and set to stream `i`, so results do
//! not depend on thread count or evaluation order.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{preparation_steady_state, PumpLaser};
use crate::error::{invalid, Error, Result};
use crate::params::TrionParameters;
use crate::physics::{transition_detunings, ProbeField, Transition};
use crate::polarization::{mixed_reading, Detector, JonesVector, PolarimeterReading};
use crate::units;

/// Frequency reference for the probe detuning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeReference {
    /// Bare transition (zero field).
    Bare,
    /// σ⁺ line at the reference voltage.
    SigmaPlus,
    /// σ⁻ line at the reference voltage.
    SigmaMinus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSetup {
    /// Detuning from the reference line (rad/s).
    pub detuning: f64,
    pub reference: ProbeReference,
    /// Power at the dot (W).
    pub power: f64,
    pub polarization: JonesVector,
}

impl ProbeSetup {
    /// Resolve into a [`ProbeField`]; the laser frequency is pinned to the
    /// reference line at the preparation resonance voltage.
    pub fn field(&self, b_field: f64, params: &TrionParameters) -> Result<ProbeField> {
        let v_ref = params.resonance_voltage_prep;
        let offset = match self.reference {
            ProbeReference::Bare => 0.0,
            ProbeReference::SigmaPlus => Transition::SigmaPlus.line_offset(v_ref, b_field, params),
            ProbeReference::SigmaMinus => {
                Transition::SigmaMinus.line_offset(v_ref, b_field, params)
            }
        };
        ProbeField::new(
            self.detuning + offset,
            self.power,
            self.polarization,
            params,
        )
    }
}

/// Spin preparation at each sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Preparation {
    /// No preparation laser: the spin is thermalized (ρ = 0).
    Off,
    /// Optical pumping on `line`, `detuning` (rad/s) from it at the resonance
    /// voltage, with `power` (W).
    Pump {
        line: Transition,
        detuning: f64,
        power: f64,
    },
    /// A fixed polarization, as if prepared perfectly.
    Fixed { rho: f64 },
}

impl Preparation {
    /// The same preparation addressing the other Zeeman line.
    pub fn mirrored(&self) -> Self {
        match *self {
            Preparation::Pump {
                line,
                detuning,
                power,
            } => Preparation::Pump {
                line: match line {
                    Transition::SigmaPlus => Transition::SigmaMinus,
                    Transition::SigmaMinus => Transition::SigmaPlus,
                },
                detuning,
                power,
            },
            Preparation::Fixed { rho } => Preparation::Fixed { rho: -rho },
            Preparation::Off => Preparation::Off,
        }
    }
}

/// Everything that is held fixed unless an axis overrides it.
///
/// The default is the readout geometry used throughout: 415 mV, 1 T, a 1 µW
/// x̂-polarized probe 30 GHz above the σ⁺ line, and a 100 nW pump resonant
/// with the σ⁻ line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    /// Gate voltage (V).
    pub gate_voltage: f64,
    /// Magnetic field along the growth axis (T).
    pub b_field: f64,
    pub probe: ProbeSetup,
    pub prep: Preparation,
    pub detector: Detector,
}

impl Default for OperatingPoint {
    fn default() -> Self {
        Self {
            gate_voltage: 0.415,
            b_field: 1.0,
            probe: ProbeSetup {
                detuning: units::ghz_to_angular(30.0),
                reference: ProbeReference::SigmaPlus,
                power: 1e-6,
                polarization: JonesVector::linear_x(),
            },
            prep: Preparation::Pump {
                line: Transition::SigmaMinus,
                detuning: 0.0,
                power: 100e-9,
            },
            detector: Detector::default(),
        }
    }
}

impl OperatingPoint {
    /// Spin polarization established by the preparation at this point.
    pub fn prepared_rho(&self, params: &TrionParameters) -> Result<f64> {
        match self.prep {
            Preparation::Off => Ok(0.0),
            Preparation::Fixed { rho } => {
                crate::physics::check_polarization(rho)?;
                Ok(rho)
            }
            Preparation::Pump {
                line,
                detuning,
                power,
            } => {
                let pump = PumpLaser {
                    line,
                    detuning,
                    rabi: params.rabi_for_power(power),
                };
                preparation_steady_state(&pump, self.gate_voltage, params)
            }
        }
    }

    /// Evaluate the noiseless polarimeter reading and prepared polarization.
    pub fn evaluate(&self, params: &TrionParameters) -> Result<(PolarimeterReading, f64)> {
        let probe = self.probe.field(self.b_field, params)?;
        let rho = if params.in_plateau(self.gate_voltage) {
            self.prepared_rho(params)?
        } else {
            0.0
        };
        let reading = mixed_reading(
            rho,
            &probe,
            self.gate_voltage,
            self.b_field,
            params,
            &self.detector,
        )?;
        Ok((reading, rho))
    }
}

/// Parameters that a sweep axis may vary. Axis values are in the laboratory
/// units carried by the name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParam {
    GateVoltage,
    BField,
    ProbeDetuning,
    ProbePower,
    PrepDetuning,
    PrepPower,
    AnalysisAngle,
}

impl SweepParam {
    pub const ALL: [SweepParam; 7] = [
        SweepParam::GateVoltage,
        SweepParam::BField,
        SweepParam::ProbeDetuning,
        SweepParam::ProbePower,
        SweepParam::PrepDetuning,
        SweepParam::PrepPower,
        SweepParam::AnalysisAngle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::GateVoltage => "operating.gate_voltage_mv",
            SweepParam::BField => "operating.b_field_t",
            SweepParam::ProbeDetuning => "probe.detuning_ghz",
            SweepParam::ProbePower => "probe.power_nw",
            SweepParam::PrepDetuning => "prep.detuning_ghz",
            SweepParam::PrepPower => "prep.power_nw",
            SweepParam::AnalysisAngle => "detector.analysis_angle_deg",
        }
    }

    pub fn valid_names() -> Vec<&'static str> {
        Self::ALL.iter().map(|p| p.name()).collect()
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == name)
            .ok_or_else(|| Error::UnknownParameter {
                name: name.to_string(),
                valid: Self::valid_names(),
            })
    }

    /// Set this parameter on `point` from a value in laboratory units.
    pub fn apply(self, point: &mut OperatingPoint, value: f64) -> Result<()> {
        match self {
            SweepParam::GateVoltage => point.gate_voltage = units::mv_to_volts(value),
            SweepParam::BField => point.b_field = value,
            SweepParam::ProbeDetuning => point.probe.detuning = units::ghz_to_angular(value),
            SweepParam::ProbePower => point.probe.power = units::nw_to_watts(value),
            SweepParam::AnalysisAngle => point.detector.analysis_angle = units::deg_to_rad(value),
            SweepParam::PrepDetuning | SweepParam::PrepPower => match &mut point.prep {
                Preparation::Pump {
                    detuning, power, ..
                } => {
                    if self == SweepParam::PrepDetuning {
                        *detuning = units::ghz_to_angular(value);
                    } else {
                        *power = units::nw_to_watts(value);
                    }
                }
                _ => {
                    return Err(Error::Contract(format!(
                        "`{}` can only be swept with an optical preparation pump",
                        self.name()
                    )))
                }
            },
        }
        Ok(())
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for SweepParam {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for SweepParam {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        SweepParam::from_name(&name).map_err(serde::de::Error::custom)
    }
}

/// A linear grid along one parameter, in laboratory units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub param: SweepParam,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(param: SweepParam, start: f64, stop: f64, points: usize) -> Self {
        Self {
            param,
            start,
            stop,
            points,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(invalid(
                "axis",
                format!("range of `{}` must be finite", self.param),
            ));
        }
        if self.points < 2 {
            return Err(invalid(
                "axis",
                format!(
                    "`{}` needs at least 2 points, got {}",
                    self.param, self.points
                ),
            ));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let n = self.points;
        let step = (self.stop - self.start) / (n - 1) as f64;
        (0..n)
            .map(|i| {
                if i == n - 1 {
                    self.stop
                } else {
                    self.start + step * i as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Noise {
    None,
    /// Shot noise on the difference channel for the given measurement time.
    Shot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis1: Axis,
    pub axis2: Option<Axis>,
    pub base: OperatingPoint,
    /// Integration time per point (s).
    pub measurement_time: f64,
    pub noise: Noise,
    pub seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.axis1.validate()?;
        if let Some(a2) = &self.axis2 {
            a2.validate()?;
            if a2.param == self.axis1.param {
                return Err(invalid(
                    "axis2",
                    format!("duplicates axis1 parameter `{}`", a2.param),
                ));
            }
        }
        if !(self.measurement_time > 0.0 && self.measurement_time.is_finite()) {
            return Err(invalid("measurement_time", "must be finite and > 0"));
        }
        self.base.detector.validate()?;
        Ok(())
    }

    pub fn axes(&self) -> Vec<Axis> {
        std::iter::once(self.axis1).chain(self.axis2).collect()
    }

    pub fn mode(&self) -> SweepMode {
        let axes = self.axes();
        let laser = axes.iter().any(|a| a.param == SweepParam::ProbeDetuning);
        let voltage = axes.iter().any(|a| a.param == SweepParam::GateVoltage);
        match (laser, voltage) {
            (true, true) => SweepMode::LaserAndVoltage,
            (true, false) => SweepMode::Laser,
            (false, true) => SweepMode::Voltage,
            (false, false) => SweepMode::Other,
        }
    }
}

/// Whether the probe detuning is varied by tuning the laser, by Stark-shifting
/// the dot with the gate, or both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    Laser,
    Voltage,
    LaserAndVoltage,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    /// Detected sum channel (photons/s).
    pub sum: f64,
    /// Detected difference channel (photons/s).
    pub diff: f64,
    /// `diff` over the detected flux without the dot.
    pub diff_contrast: f64,
    /// Rotation angle extracted from the reading (rad).
    pub theta: f64,
    /// Spin polarization established by the preparation.
    pub rho_prepared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisGrid {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub mode: SweepMode,
    pub axes: Vec<AxisGrid>,
    /// Row-major over the axes: index `i1 * len(axis2) + i2`.
    pub records: Vec<PointRecord>,
    pub spec: SweepSpec,
    pub params: TrionParameters,
}

impl Dataset {
    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.values.len()).collect()
    }

    /// Coordinates of record `index`, one per axis.
    pub fn coords(&self, index: usize) -> Vec<f64> {
        let shape = self.shape();
        let mut rem = index;
        let mut out = vec![0.0; shape.len()];
        for (k, axis) in self.axes.iter().enumerate().rev() {
            out[k] = axis.values[rem % shape[k]];
            rem /= shape[k];
        }
        out
    }

    pub fn at(&self, i1: usize, i2: usize) -> &PointRecord {
        let n2 = self.axes.get(1).map_or(1, |a| a.values.len());
        &self.records[i1 * n2 + i2]
    }
}

/// Run a 1D or 2D sweep.
pub fn run_sweep(spec: &SweepSpec, params: &TrionParameters) -> Result<Dataset> {
    spec.validate()?;
    params.validate()?;
    let axes = spec.axes();
    let grids: Vec<Vec<f64>> = axes.iter().map(Axis::values).collect();
    let n2 = grids.get(1).map_or(1, Vec::len);
    let total = grids[0].len() * n2;

    let records = (0..total)
        .into_par_iter()
        .map(|index| {
            let mut point = spec.base;
            let idx = [index / n2, index % n2];
            for (k, axis) in axes.iter().enumerate() {
                axis.param.apply(&mut point, grids[k][idx[k]])?;
            }
            evaluate_point(&point, params, spec, index as u64)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(Dataset {
        mode: spec.mode(),
        axes: axes
            .iter()
            .zip(grids)
            .map(|(a, values)| AxisGrid {
                name: a.param.name().to_string(),
                values,
            })
            .collect(),
        records,
        spec: spec.clone(),
        params: *params,
    })
}

fn evaluate_point(
    point: &OperatingPoint,
    params: &TrionParameters,
    spec: &SweepSpec,
    index: u64,
) -> Result<PointRecord> {
    let (mut reading, rho) = point.evaluate(params)?;
    if spec.noise == Noise::Shot && reading.sum > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(index);
        let z: f64 = StandardNormal.sample(&mut rng);
        let sigma = (reading.sum / spec.measurement_time).sqrt();
        reading = PolarimeterReading::weighted_mean(
            &[(
                1.0,
                PolarimeterReading {
                    diff: reading.diff + sigma * z,
                    ..reading
                },
            )],
            point.detector.analysis_angle,
        );
    }
    Ok(PointRecord {
        sum: reading.sum,
        diff: reading.diff,
        diff_contrast: reading.diff_contrast(),
        theta: reading.theta,
        rho_prepared: rho,
    })
}

/// Two-dimensional map over gate voltage and probe detuning.
pub fn run_map(spec: &SweepSpec, params: &TrionParameters) -> Result<Dataset> {
    let Some(axis2) = spec.axis2 else {
        return Err(Error::Contract(
            "a map needs two axes; axis2 is missing".into(),
        ));
    };
    let mut params_on_axes = [spec.axis1.param, axis2.param];
    params_on_axes.sort_by_key(|p| p.name());
    let mut expected = [SweepParam::GateVoltage, SweepParam::ProbeDetuning];
    expected.sort_by_key(|p| p.name());
    if params_on_axes != expected {
        return Err(Error::Contract(format!(
            "a map sweeps `{}` and `{}`, got `{}` and `{}`",
            SweepParam::GateVoltage,
            SweepParam::ProbeDetuning,
            spec.axis1.param,
            axis2.param
        )));
    }
    run_sweep(spec, params)
}

/// Rotation angle against preparation detuning for one probe frequency and
/// one pumped line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparationSeries {
    /// Probe detuning from the σ⁺ line (rad/s).
    pub probe_detuning: f64,
    pub pumped_line: Transition,
    /// Probe detuning from the line of the spin this pump prepares, in units
    /// of Γ.
    pub probe_detuning_from_prepared_line: f64,
    /// Extracted θ (rad) at each preparation detuning.
    pub theta: Vec<f64>,
    pub rho: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparationSurvey {
    /// Preparation detunings from the pumped line (rad/s).
    pub prep_detunings: Vec<f64>,
    pub series: Vec<PreparationSeries>,
    /// θ with no preparation, one per probe detuning.
    pub unprepared_theta: Vec<f64>,
    /// θ with the dot charged to a two-electron singlet.
    pub singlet_theta: f64,
}

impl PreparationSurvey {
    /// θ at the preparation detuning closest to resonance for each series.
    pub fn on_resonance_theta(&self) -> Vec<(f64, f64)> {
        let k = self
            .prep_detunings
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map_or(0, |(k, _)| k);
        self.series
            .iter()
            .map(|s| (s.probe_detuning_from_prepared_line, s.theta[k]))
            .collect()
    }
}

/// Faraday rotation as a function of preparation-laser detuning, for each
/// probe detuning (measured from the σ⁺ line) and for pumping on either line.
///
/// The base operating point supplies voltage, field, powers and detector; its
/// probe detuning and preparation are replaced.
pub fn rotation_vs_preparation(
    probe_detunings: &[f64],
    prep_detunings: &[f64],
    base: &OperatingPoint,
    params: &TrionParameters,
) -> Result<PreparationSurvey> {
    params.validate()?;
    let prep_power = match base.prep {
        Preparation::Pump { power, .. } => power,
        _ => {
            return Err(Error::Contract(
                "rotation_vs_preparation needs a pump preparation for its laser power".into(),
            ))
        }
    };
    let v = base.gate_voltage;
    let b = base.b_field;
    let mut series = Vec::new();
    let mut unprepared_theta = Vec::new();
    for &probe_detuning in probe_detunings {
        let probe = ProbeSetup {
            detuning: probe_detuning,
            reference: ProbeReference::SigmaPlus,
            ..base.probe
        };
        let field = probe.field(b, params)?;
        let (dp, dm) = transition_detunings(field.detuning, v, b, params);
        if dp.abs().min(dm.abs()) <= 10.0 * params.gamma {
            return Err(Error::Domain(format!(
                "probe detuning {:.1} Γ from the nearest line is inside the linear-response limit of 10 Γ",
                dp.abs().min(dm.abs()) / params.gamma
            )));
        }
        let unprepared = OperatingPoint {
            probe,
            prep: Preparation::Off,
            ..*base
        };
        unprepared_theta.push(unprepared.evaluate(params)?.0.theta);

        for line in [Transition::SigmaMinus, Transition::SigmaPlus] {
            let prepared = line.spin().flipped();
            let from_line = match prepared.transition() {
                Transition::SigmaPlus => dp,
                Transition::SigmaMinus => dm,
            };
            let (theta, rho): (Vec<f64>, Vec<f64>) = prep_detunings
                .par_iter()
                .map(|&d| {
                    let point = OperatingPoint {
                        probe,
                        prep: Preparation::Pump {
                            line,
                            detuning: d,
                            power: prep_power,
                        },
                        ..*base
                    };
                    point.evaluate(params).map(|(r, rho)| (r.theta, rho))
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .unzip();
            series.push(PreparationSeries {
                probe_detuning,
                pumped_line: line,
                probe_detuning_from_prepared_line: from_line / params.gamma,
                theta,
                rho,
            });
        }
    }
    let singlet = OperatingPoint {
        gate_voltage: params.plateau[1] + 0.010,
        prep: Preparation::Off,
        ..*base
    };
    Ok(PreparationSurvey {
        prep_detunings: prep_detunings.to_vec(),
        series,
        unprepared_theta,
        singlet_theta: singlet.evaluate(params)?.0.theta,
    })
}
