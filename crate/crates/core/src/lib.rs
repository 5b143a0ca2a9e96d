//! Simulator for all-optical dispersive readout of a single quantum-dot
//! electron spin through conditional Faraday rotation.
//!
//! - [`physics`]: trion selection rules and the complex transmission of each
//!   circular component.
//! - [`polarization`]: Jones propagation and balanced polarimetry.
//! - [`budget`]: shot-noise SNR, measurement time and back-action budget.
//! - [`dynamics`]: optical spin pumping and quantum-jump trajectories.
//! - [`scan`]: parameter sweeps and maps.

pub mod budget;
pub mod dynamics;
mod error;
pub mod params;
pub mod physics;
pub mod polarization;
pub mod scan;
pub mod units;

pub use budget::{backaction_budget, detected_flux, snr, time_to_snr, BudgetReport};
pub use dynamics::{
    estimate_readout_fidelity, preparation_steady_state, simulate_trajectory, FidelityEstimate,
    PumpLaser, RateSet, Threshold, Trajectory, TrajectoryBin, TrajectorySettings,
};
pub use error::{Error, Result};
pub use params::{fit_linewidth, CotunnelingProfile, LinewidthFit, TrionParameters};
pub use physics::{
    complex_transmission, response_for_spin, scattering_rate, transition_detunings,
    ComplexResponse, ProbeField, PureSpin, SpinState, Transition,
};
pub use polarization::{
    detect, faraday_angle, mixed_reading, propagate, Detector, JonesVector, PolarimeterReading,
};
pub use scan::{
    rotation_vs_preparation, run_map, run_sweep, Axis, Dataset, Noise, OperatingPoint, Preparation,
    ProbeReference, ProbeSetup, SweepParam, SweepSpec,
};
