//! Run configuration: a TOML file in laboratory units, merged over the bundled
//! defaults, with `--set` overrides applied on top.

use std::collections::BTreeSet;
use std::path::Path;

use faraday_core::scan::SweepParam;
use faraday_core::units::{deg_to_rad, ghz_to_angular, mv_to_volts, nm_to_meters, nw_to_watts};
use faraday_core::{
    Axis, CotunnelingProfile, Detector, JonesVector, Noise, OperatingPoint, Preparation,
    ProbeReference, ProbeSetup, PureSpin, SweepSpec, Transition, TrionParameters,
};
use serde::{Deserialize, Serialize};
use toml::Value;

use crate::error::CliError;

pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub dot: DotConfig,
    pub operating: OperatingConfig,
    pub probe: ProbeConfig,
    pub prep: PrepConfig,
    pub detector: DetectorConfig,
    pub sweep: SweepConfig,
    pub budget: BudgetConfig,
    pub prepare: PrepareConfig,
    pub trajectory: TrajectoryConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DotConfig {
    pub gamma_ghz: f64,
    pub alpha0: f64,
    pub zeeman_ghz_per_t: f64,
    pub stark_ghz_per_v: f64,
    pub resonance_voltage_mv: f64,
    pub plateau_min_mv: f64,
    pub plateau_max_mv: f64,
    pub branching_ratio: f64,
    pub wavelength_nm: f64,
    pub saturation_power_nw: f64,
    pub t1_ms: f64,
    pub cotunneling_edge_rate_per_s: f64,
    pub cotunneling_edge_width_mv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatingConfig {
    pub gate_voltage_mv: f64,
    pub b_field_t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolarizationChoice {
    Linear,
    Circular,
    SigmaPlus,
    SigmaMinus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub detuning_ghz: f64,
    pub reference: ProbeReference,
    pub power_nw: f64,
    pub polarization: PolarizationChoice,
    /// Orientation of a linear polarization, from x̂.
    pub polarization_angle_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrepMode {
    Off,
    Pump,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrepConfig {
    pub mode: PrepMode,
    pub line: Transition,
    pub detuning_ghz: f64,
    pub power_nw: f64,
    /// Polarization used when `mode = "fixed"`.
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub efficiency: f64,
    pub analysis_angle_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub param: String,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub measurement_time_s: f64,
    pub noise: Noise,
    pub axis1: AxisConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis2: Option<AxisConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpinChoice {
    Up,
    Down,
}

impl From<SpinChoice> for PureSpin {
    fn from(s: SpinChoice) -> Self {
        match s {
            SpinChoice::Up => PureSpin::Up,
            SpinChoice::Down => PureSpin::Down,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    pub spin: SpinChoice,
    pub beta_sweep_min: f64,
    pub beta_sweep_max: f64,
    pub beta_sweep_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrepareConfig {
    /// Probe detunings above the σ⁺ line.
    pub probe_detunings_ghz: Vec<f64>,
    pub prep_detuning_start_ghz: f64,
    pub prep_detuning_stop_ghz: f64,
    pub prep_detuning_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialSpin {
    Stationary,
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdChoice {
    /// Halfway between the pure-spin mean counts.
    Midpoint,
    Optimal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub duration_s: f64,
    pub bin_s: f64,
    pub initial: InitialSpin,
    pub threshold: ThresholdChoice,
    /// Keep the preparation pump on during the record (only with prep.mode = "pump").
    pub pump_on: bool,
}

/// Every dotted key a config may contain.
pub fn valid_keys() -> Vec<String> {
    let mut full = defaults();
    full.sweep.axis2 = Some(full.sweep.axis1.clone());
    let value = Value::try_from(&full).expect("config serializes");
    let mut keys = BTreeSet::new();
    leaf_keys(&value, "", &mut keys);
    keys.into_iter().collect()
}

fn leaf_keys(v: &Value, prefix: &str, out: &mut BTreeSet<String>) {
    match v {
        Value::Table(t) => {
            for (k, child) in t {
                let path = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                leaf_keys(child, &path, out);
            }
        }
        _ => {
            out.insert(prefix.to_string());
        }
    }
}

fn is_section(key: &str) -> bool {
    valid_keys()
        .iter()
        .any(|k| k.starts_with(key) && k[key.len()..].starts_with('.'))
}

/// The valid key closest to `key`, by edit distance on the full path and on
/// the last component.
pub fn nearest_key(key: &str) -> String {
    let leaf = |k: &str| k.rsplit('.').next().unwrap_or(k).to_string();
    let score = |k: &str| {
        strsim::normalized_damerau_levenshtein(key, k)
            .max(strsim::normalized_damerau_levenshtein(&leaf(key), &leaf(k)))
    };
    valid_keys()
        .into_iter()
        .max_by(|a, b| score(a).total_cmp(&score(b)))
        .unwrap_or_default()
}

fn check_keys(value: &Value, origin: &str) -> Result<(), CliError> {
    let valid = valid_keys();
    let mut found = BTreeSet::new();
    leaf_keys(value, "", &mut found);
    for key in found {
        if !valid.contains(&key) {
            // Whole tables written where a scalar belongs are caught by serde.
            let mut parent = key.as_str();
            let mut ok = false;
            while let Some((head, _)) = parent.rsplit_once('.') {
                if valid.contains(&head.to_string()) {
                    ok = true;
                    break;
                }
                parent = head;
            }
            if !ok {
                return Err(CliError::UnknownKey {
                    suggestion: nearest_key(&key),
                    key,
                    origin: origin.to_string(),
                });
            }
        }
    }
    Ok(())
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Table(b), Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(existing) if existing.is_table() && v.is_table() => merge(existing, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

pub fn defaults() -> RunConfig {
    toml::from_str(DEFAULT_CONFIG).expect("bundled default config parses")
}

/// Parse the right-hand side of `--set KEY=VALUE` as a TOML value, falling back
/// to a bare string (so `probe.polarization=circular` works unquoted).
fn parse_override_value(raw: &str) -> Value {
    let raw = raw.trim();
    match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").unwrap_or(Value::String(raw.to_string())),
        Err(_) => Value::String(raw.to_string()),
    }
}

fn set_dotted(root: &mut Value, key: &str, value: Value) -> Result<(), CliError> {
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let Value::Table(t) = node else {
            return Err(CliError::Parse(format!(
                "`{key}`: `{}` is not a table",
                parts[..i].join(".")
            )));
        };
        if i + 1 == parts.len() {
            t.insert(part.to_string(), value);
            return Ok(());
        }
        node = t
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(toml::Table::new()));
    }
    Ok(())
}

/// Load a run configuration from an optional file plus `KEY=VALUE` overrides.
///
/// A file must state its seed; without a file the bundled default (and its
/// seed) is used. `seed_override` replaces the seed either way.
pub fn load(
    path: Option<&Path>,
    overrides: &[String],
    seed_override: Option<u64>,
) -> Result<RunConfig, CliError> {
    let mut value =
        Value::Table(toml::from_str(DEFAULT_CONFIG).expect("bundled default config parses"));
    if let Some(path) = path {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let file: toml::Table = toml::from_str(&text)
            .map_err(|e| CliError::Parse(format!("{}: {}", path.display(), e.message())))?;
        let file = Value::Table(file);
        check_keys(&file, &path.display().to_string())?;
        let has_seed = file.get("seed").is_some();
        if !has_seed && seed_override.is_none() {
            return Err(CliError::Parse(format!(
                "{}: `seed` is required (set it in the file or pass --seed)",
                path.display()
            )));
        }
        merge(&mut value, file);
    }
    for item in overrides {
        let Some((key, raw)) = item.split_once('=') else {
            return Err(CliError::Usage(format!(
                "--set expects KEY=VALUE, got `{item}`"
            )));
        };
        let key = key.trim();
        if !valid_keys().iter().any(|k| k == key) {
            if is_section(key) {
                return Err(CliError::Parse(format!(
                    "`{key}` is a section; set one of its keys"
                )));
            }
            return Err(CliError::UnknownKey {
                suggestion: nearest_key(key),
                key: key.to_string(),
                origin: "--set".into(),
            });
        }
        set_dotted(&mut value, key, parse_override_value(raw))?;
    }
    let mut cfg: RunConfig = value
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Parse(e.message().to_string()))?;
    if let Some(seed) = seed_override {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parse a fully resolved config (as embedded in an output file).
pub fn from_resolved(text: &str) -> Result<RunConfig, CliError> {
    let value = Value::Table(
        toml::from_str(text)
            .map_err(|e| CliError::Parse(format!("embedded config: {}", e.message())))?,
    );
    check_keys(&value, "embedded config")?;
    let cfg: RunConfig = value.try_into().map_err(|e: toml::de::Error| {
        CliError::Parse(format!("embedded config: {}", e.message()))
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Map a core parameter name back to the config key that sets it.
fn config_key(core_name: &str) -> &'static str {
    match core_name {
        "gamma" => "dot.gamma_ghz",
        "alpha0" => "dot.alpha0",
        "zeeman_split_per_tesla" => "dot.zeeman_ghz_per_t",
        "stark_slope" => "dot.stark_ghz_per_v",
        "resonance_voltage_prep" => "dot.resonance_voltage_mv",
        "plateau" => "dot.plateau_min_mv/dot.plateau_max_mv",
        "branching_ratio" => "dot.branching_ratio",
        "wavelength" => "dot.wavelength_nm",
        "saturation_power" => "dot.saturation_power_nw",
        "t1_natural" => "dot.t1_ms",
        "cotunneling.edge_rate" => "dot.cotunneling_edge_rate_per_s",
        "cotunneling.edge_width" => "dot.cotunneling_edge_width_mv",
        "efficiency" => "detector.efficiency",
        "analysis_angle" => "detector.analysis_angle_deg",
        "measurement_time" => "sweep.measurement_time_s",
        "bin" => "trajectory.bin_s",
        "duration" => "trajectory.duration_s",
        _ => "",
    }
}

pub fn constraint(err: faraday_core::Error) -> CliError {
    match err {
        faraday_core::Error::InvalidParameter { name, reason } => {
            let key = config_key(name);
            CliError::Constraint {
                key: if key.is_empty() {
                    name.to_string()
                } else {
                    key.to_string()
                },
                reason: if key.is_empty() || key.ends_with(name) {
                    reason
                } else {
                    format!("{reason} ({name})")
                },
            }
        }
        faraday_core::Error::UnknownParameter { name, valid } => CliError::Constraint {
            key: "sweep.axis*.param".into(),
            reason: format!(
                "unknown sweep parameter `{name}`; valid: {}",
                valid.join(", ")
            ),
        },
        other => CliError::Constraint {
            key: "config".into(),
            reason: other.to_string(),
        },
    }
}

fn check(key: &str, ok: bool, reason: impl Into<String>) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Constraint {
            key: key.into(),
            reason: reason.into(),
        })
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        self.params().validate().map_err(constraint)?;
        self.detector().validate().map_err(constraint)?;
        let finite =
            |key: &str, v: f64| check(key, v.is_finite(), format!("must be finite, got {v}"));
        finite("operating.gate_voltage_mv", self.operating.gate_voltage_mv)?;
        finite("operating.b_field_t", self.operating.b_field_t)?;
        finite("probe.detuning_ghz", self.probe.detuning_ghz)?;
        finite(
            "probe.polarization_angle_deg",
            self.probe.polarization_angle_deg,
        )?;
        finite("prep.detuning_ghz", self.prep.detuning_ghz)?;
        check(
            "probe.power_nw",
            self.probe.power_nw >= 0.0 && self.probe.power_nw.is_finite(),
            format!("must be finite and >= 0, got {}", self.probe.power_nw),
        )?;
        check(
            "prep.power_nw",
            self.prep.power_nw >= 0.0 && self.prep.power_nw.is_finite(),
            format!("must be finite and >= 0, got {}", self.prep.power_nw),
        )?;
        check(
            "prep.rho",
            self.prep.rho.abs() <= 1.0,
            format!("must lie in [-1, 1], got {}", self.prep.rho),
        )?;
        check(
            "sweep.measurement_time_s",
            self.sweep.measurement_time_s > 0.0 && self.sweep.measurement_time_s.is_finite(),
            format!(
                "must be finite and > 0, got {}",
                self.sweep.measurement_time_s
            ),
        )?;
        for (name, axis) in [
            ("sweep.axis1", Some(&self.sweep.axis1)),
            ("sweep.axis2", self.sweep.axis2.as_ref()),
        ] {
            let Some(axis) = axis else { continue };
            SweepParam::from_name(&axis.param).map_err(|e| match e {
                faraday_core::Error::UnknownParameter { valid, .. } => CliError::Constraint {
                    key: format!("{name}.param"),
                    reason: format!(
                        "`{}` is not a sweepable key; valid: {}",
                        axis.param,
                        valid.join(", ")
                    ),
                },
                other => constraint(other),
            })?;
            check(
                &format!("{name}.points"),
                axis.points >= 2,
                format!("needs at least 2 points, got {}", axis.points),
            )?;
            check(
                &format!("{name}.start"),
                axis.start.is_finite() && axis.stop.is_finite(),
                "range must be finite",
            )?;
        }
        if let Some(a2) = &self.sweep.axis2 {
            check(
                "sweep.axis2.param",
                a2.param != self.sweep.axis1.param,
                "duplicates sweep.axis1.param",
            )?;
        }
        let b = &self.budget;
        check(
            "budget.beta_sweep_min",
            b.beta_sweep_min > 0.0
                && b.beta_sweep_min <= b.beta_sweep_max
                && b.beta_sweep_max < 1.0,
            format!(
                "need 0 < min <= max < 1, got [{}, {}]",
                b.beta_sweep_min, b.beta_sweep_max
            ),
        )?;
        check(
            "budget.beta_sweep_points",
            b.beta_sweep_points >= 2,
            "needs at least 2 points",
        )?;
        let p = &self.prepare;
        check(
            "prepare.probe_detunings_ghz",
            !p.probe_detunings_ghz.is_empty(),
            "needs at least one detuning",
        )?;
        check(
            "prepare.prep_detuning_points",
            p.prep_detuning_points >= 2,
            "needs at least 2 points",
        )?;
        check(
            "prepare.prep_detuning_start_ghz",
            p.prep_detuning_start_ghz.is_finite() && p.prep_detuning_stop_ghz.is_finite(),
            "range must be finite",
        )?;
        let t = &self.trajectory;
        check(
            "trajectory.bin_s",
            t.bin_s > 0.0 && t.bin_s.is_finite(),
            format!("must be finite and > 0, got {}", t.bin_s),
        )?;
        check(
            "trajectory.duration_s",
            t.duration_s >= t.bin_s && t.duration_s.is_finite(),
            format!(
                "must be finite and >= trajectory.bin_s, got {}",
                t.duration_s
            ),
        )?;
        check(
            "trajectory.duration_s",
            t.duration_s / t.bin_s <= 1e8,
            "more than 1e8 bins requested",
        )?;
        Ok(())
    }

    pub fn params(&self) -> TrionParameters {
        let d = &self.dot;
        TrionParameters {
            gamma: ghz_to_angular(d.gamma_ghz),
            alpha0: d.alpha0,
            zeeman_split_per_tesla: d.zeeman_ghz_per_t * 1e9,
            stark_slope: d.stark_ghz_per_v * 1e9,
            resonance_voltage_prep: mv_to_volts(d.resonance_voltage_mv),
            plateau: [mv_to_volts(d.plateau_min_mv), mv_to_volts(d.plateau_max_mv)],
            branching_ratio: d.branching_ratio,
            wavelength: nm_to_meters(d.wavelength_nm),
            saturation_power: nw_to_watts(d.saturation_power_nw),
            t1_natural: faraday_core::units::ms_to_seconds(d.t1_ms),
            cotunneling: CotunnelingProfile {
                edge_rate: d.cotunneling_edge_rate_per_s,
                edge_width: mv_to_volts(d.cotunneling_edge_width_mv),
            },
        }
    }

    pub fn detector(&self) -> Detector {
        Detector {
            efficiency: self.detector.efficiency,
            analysis_angle: deg_to_rad(self.detector.analysis_angle_deg),
        }
    }

    pub fn polarization(&self) -> JonesVector {
        match self.probe.polarization {
            PolarizationChoice::Linear => {
                JonesVector::linear(deg_to_rad(self.probe.polarization_angle_deg))
            }
            PolarizationChoice::Circular | PolarizationChoice::SigmaMinus => {
                JonesVector::sigma_minus()
            }
            PolarizationChoice::SigmaPlus => JonesVector::sigma_plus(),
        }
    }

    pub fn preparation(&self) -> Preparation {
        match self.prep.mode {
            PrepMode::Off => Preparation::Off,
            PrepMode::Fixed => Preparation::Fixed { rho: self.prep.rho },
            PrepMode::Pump => Preparation::Pump {
                line: self.prep.line,
                detuning: ghz_to_angular(self.prep.detuning_ghz),
                power: nw_to_watts(self.prep.power_nw),
            },
        }
    }

    pub fn operating_point(&self) -> OperatingPoint {
        OperatingPoint {
            gate_voltage: mv_to_volts(self.operating.gate_voltage_mv),
            b_field: self.operating.b_field_t,
            probe: ProbeSetup {
                detuning: ghz_to_angular(self.probe.detuning_ghz),
                reference: self.probe.reference,
                power: nw_to_watts(self.probe.power_nw),
                polarization: self.polarization(),
            },
            prep: self.preparation(),
            detector: self.detector(),
        }
    }

    fn axis(a: &AxisConfig) -> Result<Axis, CliError> {
        let param = SweepParam::from_name(&a.param).map_err(constraint)?;
        Ok(Axis::new(param, a.start, a.stop, a.points))
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec, CliError> {
        Ok(SweepSpec {
            axis1: Self::axis(&self.sweep.axis1)?,
            axis2: self.sweep.axis2.as_ref().map(Self::axis).transpose()?,
            base: self.operating_point(),
            measurement_time: self.sweep.measurement_time_s,
            noise: self.sweep.noise,
            seed: self.seed,
        })
    }

    /// The resolved configuration as TOML, as embedded in output files.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
