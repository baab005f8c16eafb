use crate::error::{invalid, Result};
use crate::model::{DEFAULT_DARK_RATE, DEFAULT_REP_RATE};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PumpMode {
    Pulsed,
    Cw,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpConfig {
    pub mode: PumpMode,
    /// Pulse repetition rate (Hz), ignored for CW.
    pub rep_rate: f64,
    /// Average power before the in-coupling optics (µW).
    pub average_power: f64,
    /// Pump wavelength (nm); informational.
    pub wavelength: f64,
}

impl PumpConfig {
    pub fn pulsed(average_power: f64) -> Self {
        PumpConfig {
            mode: PumpMode::Pulsed,
            rep_rate: DEFAULT_REP_RATE,
            average_power,
            wavelength: 763.0,
        }
    }

    pub fn cw(average_power: f64) -> Self {
        PumpConfig {
            mode: PumpMode::Cw,
            ..Self::pulsed(average_power)
        }
    }

    pub fn with_power(&self, average_power: f64) -> Self {
        PumpConfig { average_power, ..*self }
    }

    /// Pulse period in seconds, `None` for a CW pump.
    pub fn period(&self) -> Option<f64> {
        match self.mode {
            PumpMode::Pulsed => Some(1.0 / self.rep_rate),
            PumpMode::Cw => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode == PumpMode::Pulsed && !(self.rep_rate > 0.0 && self.rep_rate.is_finite()) {
            return Err(invalid(format!("rep_rate must be > 0, got {}", self.rep_rate)));
        }
        if !(self.average_power >= 0.0 && self.average_power.is_finite()) {
            return Err(invalid(format!(
                "average_power must be >= 0, got {}",
                self.average_power
            )));
        }
        Ok(())
    }
}

/// Detection window relative to the pulse clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gate {
    /// Start of the window after each pulse (s).
    pub offset: f64,
    /// Window width (s).
    pub width: f64,
}

impl Gate {
    pub fn at_pulse(width: f64) -> Self {
        Gate { offset: 0.0, width }
    }

    pub fn validate(&self, period: f64) -> Result<()> {
        if !(self.width > 0.0) {
            return Err(invalid(format!("gate width must be > 0, got {}", self.width)));
        }
        // 1 ppb slack so that a gate built from 1/rep_rate passes
        if self.width > period * (1.0 + 1e-9) {
            return Err(invalid(format!(
                "gate width {} s exceeds the repetition period {} s",
                self.width, period
            )));
        }
        if !self.offset.is_finite() {
            return Err(invalid("gate offset must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    /// Dark count rate (s⁻¹).
    pub dark_rate: f64,
    /// Non-paralyzable detector dead time (s).
    pub dead_time: f64,
    pub gate: Option<Gate>,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            dark_rate: DEFAULT_DARK_RATE,
            dead_time: 0.0,
            gate: None,
        }
    }
}

impl DetectorConfig {
    pub fn gated(width: f64) -> Self {
        DetectorConfig {
            gate: Some(Gate::at_pulse(width)),
            ..Default::default()
        }
    }

    pub fn validate(&self, pump: &PumpConfig) -> Result<()> {
        if !(self.dark_rate >= 0.0 && self.dark_rate.is_finite()) {
            return Err(invalid(format!("dark_rate must be >= 0, got {}", self.dark_rate)));
        }
        if !(self.dead_time >= 0.0 && self.dead_time.is_finite()) {
            return Err(invalid(format!("dead_time must be >= 0, got {}", self.dead_time)));
        }
        if let Some(gate) = &self.gate {
            match pump.period() {
                Some(period) => gate.validate(period)?,
                None => return Err(invalid("a detection gate requires a pulsed pump")),
            }
        }
        Ok(())
    }
}

/// Knobs of the stochastic realisation that do not enter the rate model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// Number of independent emitters sharing the photoluminescence
    /// excitation in the saturation model.
    pub emitters: usize,
    /// Mean radiative delay of power-law photoluminescence (s).
    pub pl_lifetime: f64,
    /// Target number of events per processing block.
    pub block_events: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            emitters: 32,
            pl_lifetime: 8e-9,
            block_events: 1 << 18,
        }
    }
}

impl SimOptions {
    pub fn validate(&self) -> Result<()> {
        if self.emitters == 0 {
            return Err(invalid("emitters must be >= 1"));
        }
        if !(self.pl_lifetime >= 0.0 && self.pl_lifetime.is_finite()) {
            return Err(invalid("pl_lifetime must be >= 0"));
        }
        if self.block_events == 0 {
            return Err(invalid("block_events must be >= 1"));
        }
        Ok(())
    }
}
