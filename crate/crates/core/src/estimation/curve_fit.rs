//! Single-observable fits: the off-resonant offset power law and the
//! Lorentzian resonance of the noise generation rate.

use super::engine::{Fit, Model, Obs, ParamSpec, WeightRule};
use super::lm::LmConfig;
use super::result::FitResult;
use super::transform::Bound;
use crate::error::{invalid, Error, Result};
use crate::model::{LorentzianParams, OffsetPowerLaw, MAX_ALPHA};

pub const OFFSET_POWER_LAW: &str = "offset-powerlaw";
pub const LORENTZIAN: &str = "lorentzian";

/// One singles measurement of an off-resonant sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    /// µW
    pub power: f64,
    /// s⁻¹
    pub rate: f64,
    /// Raw counts behind `rate`; sets the Poisson weight.
    pub counts: u64,
}

impl RatePoint {
    fn duration(&self) -> f64 {
        if self.rate > 0.0 && self.counts > 0 {
            self.counts as f64 / self.rate
        } else {
            1.0
        }
    }
}

struct PowerLawModel {
    powers: Vec<f64>,
}

impl Model for PowerLawModel {
    fn eval(&self, theta: &[f64], k: usize, grad: &mut [f64]) -> f64 {
        let p = self.powers[k];
        let pa = if p > 0.0 { p.powf(theta[1]) } else { 0.0 };
        grad[0] = pa;
        grad[1] = if p > 0.0 { theta[0] * pa * p.ln() } else { 0.0 };
        grad[2] = 1.0;
        theta[0] * pa + theta[2]
    }
}

const POWER_LAW_SPECS: [ParamSpec; 3] = [
    ParamSpec { name: "a", unit: "1/s/uW^alpha", bound: Bound::Positive },
    ParamSpec { name: "alpha", unit: "1", bound: Bound::Interval(0.0, MAX_ALPHA) },
    ParamSpec { name: "r0", unit: "1/s", bound: Bound::Positive },
];

/// Poisson-weighted fit of `R = A·P^α + R_0` to singles data. `guess`
/// replaces the built-in starting points.
pub fn fit_offset_power_law(data: &[RatePoint], guess: Option<OffsetPowerLaw>) -> Result<FitResult> {
    if data.len() < 4 {
        return Err(Error::InsufficientData { points: data.len(), params: 3 });
    }
    if data.iter().any(|d| !(d.power >= 0.0) || !d.rate.is_finite()) {
        return Err(invalid("powers must be non-negative and rates finite"));
    }
    let obs: Vec<Obs> = data
        .iter()
        .map(|d| Obs { observable: "rate", x: d.power, y: d.rate, scale: d.duration() })
        .collect();
    let p_max = data.iter().map(|d| d.power).fold(0.0, f64::max);
    let r_min = data.iter().map(|d| d.rate).fold(f64::INFINITY, f64::min);
    let r_max = data.iter().map(|d| d.rate).fold(0.0, f64::max);
    let r0 = (0.5 * r_min).max(1e-3);
    let starts: Vec<Vec<f64>> = match guess {
        Some(g) => vec![vec![g.a, g.alpha, g.r0]],
        None => [0.5, 1.0, 1.5]
            .into_iter()
            .map(|alpha| vec![((r_max - r0).max(1e-3)) / p_max.max(1.0).powf(alpha), alpha, r0])
            .collect(),
    };
    let model = PowerLawModel { powers: data.iter().map(|d| d.power).collect() };
    Fit {
        label: OFFSET_POWER_LAW.to_string(),
        model: &model,
        specs: &POWER_LAW_SPECS,
        fixed: &[None; 3],
        obs: &obs,
        rule: WeightRule::Poisson,
        lm: LmConfig::default(),
    }
    .solve(&starts)
}

struct LorentzModel {
    energies: Vec<f64>,
}

impl Model for LorentzModel {
    fn eval(&self, theta: &[f64], k: usize, grad: &mut [f64]) -> f64 {
        let (n, s, e0) = (theta[0], theta[1], theta[2]);
        let z = (self.energies[k] - e0) / s;
        let d = 1.0 + z * z;
        grad[0] = 1.0 / d;
        grad[1] = n * 2.0 * z * z / (s * d * d);
        grad[2] = n * 2.0 * z / (s * d * d);
        n / d
    }
}

const LORENTZ_SPECS: [ParamSpec; 3] = [
    ParamSpec { name: "n", unit: "photons/s/uW", bound: Bound::Positive },
    ParamSpec { name: "sigma", unit: "eV", bound: Bound::Positive },
    ParamSpec { name: "e_g", unit: "eV", bound: Bound::Free },
];

/// `1/σ²`-weighted Lorentzian fit to `(photon energy eV, value, stderr)` points.
pub fn fit_lorentzian(points: &[(f64, f64, f64)]) -> Result<FitResult> {
    if points.len() < 4 {
        return Err(Error::InsufficientData { points: points.len(), params: 3 });
    }
    if points.iter().any(|p| !(p.2 > 0.0) || !p.0.is_finite() || !p.1.is_finite()) {
        return Err(invalid("every point needs a finite value and a positive uncertainty"));
    }
    let obs: Vec<Obs> = points
        .iter()
        .map(|&(e, a, s)| Obs { observable: "generation_rate", x: e, y: a, scale: s })
        .collect();
    let (e_peak, a_peak) = points
        .iter()
        .map(|p| (p.0, p.1))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty");
    let e_lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let e_hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let span = (e_hi - e_lo).max(1e-3);
    let mut starts = Vec::new();
    for shift in [0.0, 0.05, 0.2, 0.5] {
        for width in [0.02, 0.1, 0.5] {
            let sigma = width * span;
            // the peak may sit beyond the sampled range
            let e_g = e_peak + shift * span * if e_peak >= 0.5 * (e_lo + e_hi) { 1.0 } else { -1.0 };
            let n = a_peak.max(f64::MIN_POSITIVE) * (1.0 + ((e_peak - e_g) / sigma).powi(2));
            starts.push(vec![n, sigma, e_g]);
        }
    }
    let model = LorentzModel { energies: points.iter().map(|p| p.0).collect() };
    Fit {
        label: LORENTZIAN.to_string(),
        model: &model,
        specs: &LORENTZ_SPECS,
        fixed: &[None; 3],
        obs: &obs,
        rule: WeightRule::Sigma,
        lm: LmConfig::default(),
    }
    .solve(&starts)
}

pub fn fitted_offset_power_law(fit: &FitResult) -> Result<OffsetPowerLaw> {
    if fit.model != OFFSET_POWER_LAW {
        return Err(invalid(format!("'{}' is not an offset power law fit", fit.model)));
    }
    Ok(OffsetPowerLaw {
        a: fit.params[0].value,
        alpha: fit.params[1].value,
        r0: fit.params[2].value,
    })
}

pub fn fitted_lorentzian(fit: &FitResult) -> Result<LorentzianParams> {
    if fit.model != LORENTZIAN {
        return Err(invalid(format!("'{}' is not a Lorentzian fit", fit.model)));
    }
    Ok(LorentzianParams {
        n: fit.params[0].value,
        sigma: fit.params[1].value,
        e_g: fit.params[2].value,
    })
}
