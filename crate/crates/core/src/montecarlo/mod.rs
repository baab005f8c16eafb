//! Stochastic realisation of the detector clicks produced by a pumped
//! photon-pair source: pulse-synchronous or CW pairs, saturable or power-law
//! photoluminescence, dark counts, detector dead time and time gating.

mod coincidence;
mod config;
mod sources;
mod stream;
mod sweep;

pub use coincidence::{count_coincidences, count_with_rule, CoincidenceCounter, PairingRule};
pub use config::{DetectorConfig, Gate, PumpConfig, PumpMode, SimOptions};
pub use sources::saturable_emission_times;
pub use stream::{apply_dead_time, apply_gate, pulse_phase, EventStream};
pub use sweep::{simulate_streams, simulate_sweep, Simulator, SweepRecord};
