//! Closed-form rate model of a photon-pair source with photoluminescence.
//!
//! Powers are average pump powers in µW measured before the in-coupling
//! optics, rates are in s⁻¹ and times in seconds. The pair generation
//! efficiency `xi` therefore carries units of pairs·s⁻¹·µW⁻¹.
//!
//! Detected singles on either channel are
//! `R = η·(ξP + f(P)) + R_bg` and detected coincidences are
//! `R_c = η_s·η_i·ξP + τ_c·R_s·R_i`, where `f(P)` is the photoluminescence
//! generation rate given by a [`NoiseModel`].

use crate::error::{invalid, Result};

/// `h·c` in eV·nm (CODATA).
pub const HC_EV_NM: f64 = 1239.841984;

/// Repetition rate of the pulsed pump laser (Hz).
pub const DEFAULT_REP_RATE: f64 = 76.2e6;

/// Mean detector dark rate per channel (s⁻¹).
pub const DEFAULT_DARK_RATE: f64 = 300.0;

/// Upper bound on the power-law exponent.
pub const MAX_ALPHA: f64 = 3.0;

/// Photoluminescence generation as a function of pump power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    None,
    /// `f(P) = γ_P·P^α`
    PowerLaw { gamma_p: f64, alpha: f64 },
    /// `f(P) = γ_S·P / (1 + β·γ_S·P)`, a non-paralyzable dead-time law
    /// with effective emitter lifetime `beta` (s).
    Saturation { gamma_s: f64, beta: f64 },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::None => Ok(()),
            NoiseModel::PowerLaw { gamma_p, alpha } => {
                if !(gamma_p >= 0.0 && gamma_p.is_finite()) {
                    return Err(invalid(format!("gamma_p must be >= 0, got {gamma_p}")));
                }
                if !(alpha > 0.0 && alpha <= MAX_ALPHA) {
                    return Err(invalid(format!("alpha must lie in (0, 3], got {alpha}")));
                }
                Ok(())
            }
            NoiseModel::Saturation { gamma_s, beta } => {
                if !(gamma_s >= 0.0 && gamma_s.is_finite()) {
                    return Err(invalid(format!("gamma_s must be >= 0, got {gamma_s}")));
                }
                if !(beta >= 0.0 && beta.is_finite()) {
                    return Err(invalid(format!("beta must be >= 0, got {beta}")));
                }
                Ok(())
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            NoiseModel::None => "none",
            NoiseModel::PowerLaw { .. } => "powerlaw",
            NoiseModel::Saturation { .. } => "saturation",
        }
    }
}

/// Detector channel of a photon pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Signal,
    Idler,
}

impl Channel {
    pub fn name(self) -> &'static str {
        match self {
            Channel::Signal => "signal",
            Channel::Idler => "idler",
        }
    }
}

/// Parameters of the coupled singles/coincidence rate model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceParams {
    /// Pair generation efficiency (pairs·s⁻¹·µW⁻¹).
    pub xi: f64,
    /// Klyshko efficiency of the signal channel.
    pub eta_s: f64,
    /// Klyshko efficiency of the idler channel.
    pub eta_i: f64,
    /// Background rate per channel (s⁻¹), dark counts included.
    pub r_bg: f64,
    /// Coincidence window (s).
    pub tau_c: f64,
    pub noise: NoiseModel,
}

impl SourceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.xi >= 0.0 && self.xi.is_finite()) {
            return Err(invalid(format!("xi must be >= 0, got {}", self.xi)));
        }
        for (name, eta) in [("eta_s", self.eta_s), ("eta_i", self.eta_i)] {
            if !(0.0..=1.0).contains(&eta) {
                return Err(invalid(format!("{name} must lie in [0, 1], got {eta}")));
            }
        }
        if !(self.r_bg >= 0.0 && self.r_bg.is_finite()) {
            return Err(invalid(format!("r_bg must be >= 0, got {}", self.r_bg)));
        }
        if !(self.tau_c > 0.0 && self.tau_c.is_finite()) {
            return Err(invalid(format!("tau_c must be > 0, got {}", self.tau_c)));
        }
        self.noise.validate()
    }

    pub fn eta(&self, channel: Channel) -> f64 {
        match channel {
            Channel::Signal => self.eta_s,
            Channel::Idler => self.eta_i,
        }
    }
}

/// Photoluminescence rate `f(P)` (photons·s⁻¹).
pub fn noise_rate(model: &NoiseModel, power: f64) -> f64 {
    if power <= 0.0 {
        return 0.0;
    }
    match *model {
        NoiseModel::None => 0.0,
        NoiseModel::PowerLaw { gamma_p, alpha } => gamma_p * power.powf(alpha),
        NoiseModel::Saturation { gamma_s, beta } => {
            let excitation = gamma_s * power;
            excitation / (1.0 + beta * excitation)
        }
    }
}

/// Singles rate on `channel` given an explicit photoluminescence rate.
pub fn singles_with_noise(params: &SourceParams, channel: Channel, power: f64, noise: f64) -> f64 {
    params.eta(channel) * (params.xi * power + noise) + params.r_bg
}

/// Detected singles rate `η·(ξP + f(P)) + R_bg` on one channel.
pub fn singles_rate(params: &SourceParams, channel: Channel, power: f64) -> f64 {
    singles_with_noise(params, channel, power, noise_rate(&params.noise, power))
}

/// Accidental coincidence rate `τ_c·R_s·R_i`.
pub fn accidentals(r_s: f64, r_i: f64, tau_c: f64) -> f64 {
    tau_c * r_s * r_i
}

/// Rate of genuine pair coincidences `η_s·η_i·ξP`.
pub fn true_coincidence_rate(params: &SourceParams, power: f64) -> f64 {
    params.eta_s * params.eta_i * params.xi * power
}

/// Coincidence rate given an explicit photoluminescence rate and window.
pub fn coincidences_with_noise(params: &SourceParams, power: f64, noise: f64, tau_c: f64) -> f64 {
    let r_s = singles_with_noise(params, Channel::Signal, power, noise);
    let r_i = singles_with_noise(params, Channel::Idler, power, noise);
    true_coincidence_rate(params, power) + accidentals(r_s, r_i, tau_c)
}

/// Detected coincidence rate including accidentals.
pub fn coincidence_rate(params: &SourceParams, power: f64) -> f64 {
    coincidences_with_noise(params, power, noise_rate(&params.noise, power), params.tau_c)
}

/// Coincidence-to-accidentals ratio given an explicit noise rate and window.
pub fn car_with_noise(params: &SourceParams, power: f64, noise: f64, tau_c: f64) -> f64 {
    let r_s = singles_with_noise(params, Channel::Signal, power, noise);
    let r_i = singles_with_noise(params, Channel::Idler, power, noise);
    let acc = accidentals(r_s, r_i, tau_c);
    if acc <= 0.0 {
        // no background and no power: no events at all
        return 1.0;
    }
    1.0 + true_coincidence_rate(params, power) / acc
}

/// Coincidence-to-accidentals ratio, total coincidences over accidentals.
pub fn car(params: &SourceParams, power: f64) -> f64 {
    car_with_noise(params, power, noise_rate(&params.noise, power), params.tau_c)
}

/// `R(P) = A·P^α + R_0`, the singles rate of a detuned pump where no pairs
/// are generated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffsetPowerLaw {
    pub a: f64,
    pub alpha: f64,
    pub r0: f64,
}

pub fn offset_power_law_rate(p: &OffsetPowerLaw, power: f64) -> f64 {
    if power <= 0.0 {
        return p.r0;
    }
    p.a * power.powf(p.alpha) + p.r0
}

/// Lorentzian resonance of the photoluminescence generation rate versus
/// photon energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzianParams {
    /// Peak value (photons·s⁻¹·µW⁻¹).
    pub n: f64,
    /// Half width at half maximum (eV).
    pub sigma: f64,
    /// Resonance energy (eV).
    pub e_g: f64,
}

impl LorentzianParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.n > 0.0 && self.sigma > 0.0 && self.e_g > 0.0) {
            return Err(invalid(format!(
                "lorentzian parameters must be positive, got n={} sigma={} e_g={}",
                self.n, self.sigma, self.e_g
            )));
        }
        Ok(())
    }
}

pub fn lorentzian_rate(p: &LorentzianParams, photon_energy: f64) -> f64 {
    let x = (photon_energy - p.e_g) / p.sigma;
    p.n / (1.0 + x * x)
}

/// Photon energy (eV) of a vacuum wavelength in nm.
pub fn wavelength_to_energy(lambda_nm: f64) -> f64 {
    HC_EV_NM / lambda_nm
}

pub fn energy_to_wavelength(energy_ev: f64) -> f64 {
    HC_EV_NM / energy_ev
}
