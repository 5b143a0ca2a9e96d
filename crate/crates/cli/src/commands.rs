use faraday_core::dynamics::{estimate_readout_fidelity, Threshold};
use faraday_core::polarization::pure_reading;
use faraday_core::units::{angular_to_ghz, ghz_to_angular};
use faraday_core::{
    backaction_budget, rotation_vs_preparation, run_map, run_sweep, simulate_trajectory, Dataset,
    Preparation, PumpLaser, PureSpin, RateSet, SpinState, TrajectorySettings, TrionParameters,
};

use crate::config::{InitialSpin, RunConfig, ThresholdChoice};
use crate::error::CliError;
use crate::output::{Cell, Table};

fn spin_name(s: PureSpin) -> &'static str {
    match s {
        PureSpin::Up => "up",
        PureSpin::Down => "down",
    }
}

fn line_name(t: faraday_core::Transition) -> &'static str {
    match t {
        faraday_core::Transition::SigmaPlus => "sigma_plus",
        faraday_core::Transition::SigmaMinus => "sigma_minus",
    }
}

fn common_meta(table: &mut Table, cfg: &RunConfig, p: &TrionParameters) {
    table.meta_f64("gamma_ghz", p.gamma_hz() * 1e-9);
    table.meta_f64(
        "zeeman_splitting_ghz",
        angular_to_ghz(p.zeeman_splitting(cfg.operating.b_field_t)),
    );
}

fn dataset_table(command: &str, cfg: &RunConfig, p: &TrionParameters, d: &Dataset) -> Table {
    let mut columns: Vec<&str> = d.axes.iter().map(|a| a.name.as_str()).collect();
    columns.extend([
        "sum_per_s",
        "diff_per_s",
        "diff_contrast",
        "theta_urad",
        "rho_prepared",
    ]);
    let mut t = Table::new(command, cfg.seed, cfg.to_toml(), &columns);
    common_meta(&mut t, cfg, p);
    t.meta("sweep_mode", format!("{:?}", d.mode).to_lowercase());
    t.meta(
        "shape",
        d.shape()
            .iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
            .join("x"),
    );
    t.meta(
        "columns",
        "sum/diff are detected photon rates; diff_contrast = diff / detected flux without the dot; theta from asin(diff/sum)/2",
    );
    for (i, r) in d.records.iter().enumerate() {
        let mut row: Vec<Cell> = d.coords(i).into_iter().map(Cell::from).collect();
        row.extend([
            Cell::from(r.sum),
            Cell::from(r.diff),
            Cell::from(r.diff_contrast),
            Cell::from(r.theta * 1e6),
            Cell::from(r.rho_prepared),
        ]);
        t.push(row);
    }
    t
}

pub fn spectrum(cfg: &RunConfig) -> Result<Table, CliError> {
    if cfg.sweep.axis2.is_some() {
        return Err(CliError::Usage(
            "spectrum is one-dimensional; remove [sweep.axis2] or use `map`".into(),
        ));
    }
    let p = cfg.params();
    let d = run_sweep(&cfg.sweep_spec()?, &p)?;
    Ok(dataset_table("spectrum", cfg, &p, &d))
}

pub fn map(cfg: &RunConfig) -> Result<Table, CliError> {
    if cfg.sweep.axis2.is_none() {
        return Err(CliError::Usage(
            "map needs a second axis: add [sweep.axis2] (see configs/map.toml)".into(),
        ));
    }
    let p = cfg.params();
    let d = run_map(&cfg.sweep_spec()?, &p).map_err(|e| match e {
        faraday_core::Error::Contract(msg) => CliError::Usage(msg),
        other => other.into(),
    })?;
    Ok(dataset_table("map", cfg, &p, &d))
}

pub fn budget(cfg: &RunConfig) -> Result<Table, CliError> {
    let p = cfg.params();
    let op = cfg.operating_point();
    let probe = op.probe.field(op.b_field, &p)?;
    let spin = SpinState::from(PureSpin::from(cfg.budget.spin));
    let at = |beta: f64| {
        let q = TrionParameters {
            branching_ratio: beta,
            ..p
        };
        backaction_budget(
            &probe,
            spin,
            op.gate_voltage,
            op.b_field,
            &q,
            op.detector.efficiency,
        )
    };
    let report = at(p.branching_ratio)?;
    let mut t = Table::new(
        "budget",
        cfg.seed,
        cfg.to_toml(),
        &[
            "branching_ratio",
            "photon_scatter_interval_s",
            "spin_flip_interval_s",
            "theta_rad",
            "detected_flux_per_s",
            "t_snr1_s",
            "n_backaction_at_snr1",
            "qnd_margin",
            "qnd_threshold_constant",
        ],
    );
    common_meta(&mut t, cfg, &p);
    t.meta_f64("probe_detuning_from_line_linewidths", {
        let (dp, dm) =
            faraday_core::transition_detunings(probe.detuning, op.gate_voltage, op.b_field, &p);
        (if spin == SpinState::Up { dp } else { dm }) / p.gamma
    });
    for line in report.to_key_value().lines() {
        if let Some((k, v)) = line.split_once(" = ") {
            t.meta(&format!("report.{k}"), v);
        }
    }
    let b = &cfg.budget;
    let n = b.beta_sweep_points;
    for i in 0..n {
        let beta = if i == n - 1 {
            b.beta_sweep_max
        } else {
            b.beta_sweep_min * (b.beta_sweep_max / b.beta_sweep_min).powf(i as f64 / (n - 1) as f64)
        };
        let r = at(beta)?;
        t.push(vec![
            beta.into(),
            r.photon_scatter_interval.into(),
            r.spin_flip_interval.into(),
            r.theta.into(),
            r.detected_flux.into(),
            r.t_snr1.into(),
            r.n_backaction_at_snr1.into(),
            r.qnd_margin.into(),
            r.qnd_threshold_constant().into(),
        ]);
    }
    eprint!("{report}");
    Ok(t)
}

pub fn prepare(cfg: &RunConfig) -> Result<Table, CliError> {
    let base = cfg.operating_point();
    if !matches!(base.prep, Preparation::Pump { .. }) {
        return Err(CliError::Usage(
            "prepare scans the optical pump; set prep.mode = \"pump\"".into(),
        ));
    }
    let p = cfg.params();
    let probes: Vec<f64> = cfg
        .prepare
        .probe_detunings_ghz
        .iter()
        .map(|&g| ghz_to_angular(g))
        .collect();
    let pc = &cfg.prepare;
    let prep_ghz = faraday_core::Axis::new(
        faraday_core::SweepParam::PrepDetuning,
        pc.prep_detuning_start_ghz,
        pc.prep_detuning_stop_ghz,
        pc.prep_detuning_points,
    )
    .values();
    let preps: Vec<f64> = prep_ghz.iter().map(|&g| ghz_to_angular(g)).collect();
    let survey = rotation_vs_preparation(&probes, &preps, &base, &p)?;
    let mut t = Table::new(
        "prepare",
        cfg.seed,
        cfg.to_toml(),
        &[
            "probe_detuning_ghz",
            "pumped_line",
            "probe_from_prepared_line_linewidths",
            "prep_detuning_ghz",
            "theta_urad",
            "rho",
        ],
    );
    common_meta(&mut t, cfg, &p);
    t.meta(
        "probe_reference",
        "probe_detuning_ghz is measured from the sigma_plus line",
    );
    for (g, th) in cfg
        .prepare
        .probe_detunings_ghz
        .iter()
        .zip(&survey.unprepared_theta)
    {
        t.meta_f64(&format!("unprepared_theta_urad@{g}ghz"), th * 1e6);
    }
    t.meta_f64("singlet_theta_urad", survey.singlet_theta * 1e6);
    for (lw, th) in survey.on_resonance_theta() {
        t.meta_f64(
            &format!("on_resonance_theta_urad@{:.0}linewidths", lw),
            th * 1e6,
        );
    }
    for (s, &probe_ghz) in survey.series.iter().zip(&cfg.prepare.probe_detunings_ghz) {
        for (k, &d) in prep_ghz.iter().enumerate() {
            t.push(vec![
                probe_ghz.into(),
                line_name(s.pumped_line).into(),
                s.probe_detuning_from_prepared_line.into(),
                d.into(),
                (s.theta[k] * 1e6).into(),
                s.rho[k].into(),
            ]);
        }
    }
    Ok(t)
}

pub fn trajectory(cfg: &RunConfig) -> Result<Table, CliError> {
    let p = cfg.params();
    let op = cfg.operating_point();
    let probe = op.probe.field(op.b_field, &p)?;
    let pump = match op.prep {
        Preparation::Pump {
            line,
            detuning,
            power,
        } if cfg.trajectory.pump_on => Some(PumpLaser {
            line,
            detuning,
            rabi: p.rabi_for_power(power),
        }),
        _ => None,
    };
    let rates =
        RateSet::at_operating_point(&p, Some(&probe), pump.as_ref(), op.gate_voltage, op.b_field)?;
    let tc = &cfg.trajectory;
    let settings = TrajectorySettings {
        duration: tc.duration_s,
        bin: tc.bin_s,
        seed: cfg.seed,
        initial: match tc.initial {
            InitialSpin::Stationary => None,
            InitialSpin::Up => Some(PureSpin::Up),
            InitialSpin::Down => Some(PureSpin::Down),
        },
    };
    let traj = simulate_trajectory(
        &p,
        &probe,
        op.gate_voltage,
        op.b_field,
        &rates,
        &settings,
        &op.detector,
    )?;

    let mut t = Table::new(
        "trajectory",
        cfg.seed,
        cfg.to_toml(),
        &[
            "t_start_s",
            "hidden_spin",
            "up_fraction",
            "diff_count",
            "sum_count",
        ],
    );
    common_meta(&mut t, cfg, &p);
    t.meta("rng", "ChaCha8 seeded from `seed`");
    t.meta_f64("flip_up_to_down_per_s", rates.flip_up_to_down);
    t.meta_f64("flip_down_to_up_per_s", rates.flip_down_to_up);
    t.meta("initial_spin", spin_name(traj.initial_spin));
    t.meta("jumps", traj.jump_times.len());
    t.meta_f64("up_occupancy", traj.up_occupancy());

    let up = pure_reading(
        SpinState::Up,
        &probe,
        op.gate_voltage,
        op.b_field,
        &p,
        &op.detector,
    )?;
    let down = pure_reading(
        SpinState::Down,
        &probe,
        op.gate_voltage,
        op.b_field,
        &p,
        &op.detector,
    )?;
    let midpoint = 0.5 * (up.diff + down.diff) * traj.bin_duration;
    let threshold = match tc.threshold {
        ThresholdChoice::Midpoint => Threshold::Fixed(midpoint),
        ThresholdChoice::Optimal => Threshold::Optimal,
    };
    match estimate_readout_fidelity(&traj, threshold) {
        Ok(f) => {
            t.meta_f64("fidelity", f.fidelity);
            t.meta_f64("threshold_counts", f.threshold);
            t.meta("above_threshold_spin", spin_name(f.above_threshold));
            t.meta("degenerate", f.degenerate);
            if f.degenerate {
                eprintln!("faraday: warning: hidden spin never changed; fidelity reported as 1");
            }
        }
        Err(e) => t.meta("fidelity", format!("not estimated: {e}")),
    }

    for b in &traj.bins {
        t.push(vec![
            b.t_start.into(),
            spin_name(b.hidden_spin).into(),
            b.up_fraction.into(),
            Cell::Int(b.diff_count),
            Cell::Int(b.sum_count as i64),
        ]);
    }
    Ok(t)
}
