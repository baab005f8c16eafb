//! What-if predictions for modified devices: CAR curves with reduced
//! photoluminescence or narrow gates, the effect of moving the pump
//! wavelength or the aluminium content relative to the resonance, and the
//! pair rate inside the waveguide.

use crate::error::{invalid, Result};
use crate::model::{car_with_noise, lorentzian_rate, noise_rate, wavelength_to_energy, LorentzianParams, SourceParams};

/// Aluminium fractions for which the bandgap formula holds (direct gap).
pub const ALGAAS_X_RANGE: (f64, f64) = (0.0, 0.45);

#[derive(Debug, Clone, PartialEq)]
pub struct DesignScenario {
    pub base: SourceParams,
    /// Multiplier on the photoluminescence term.
    pub pl_scale: f64,
    /// Gate width (s); replaces the coincidence window when present.
    pub gate: Option<f64>,
    pub label: String,
}

impl DesignScenario {
    pub fn new(base: SourceParams, label: impl Into<String>) -> Self {
        DesignScenario {
            base,
            pl_scale: 1.0,
            gate: None,
            label: label.into(),
        }
    }

    pub fn with_pl_scale(mut self, pl_scale: f64) -> Self {
        self.pl_scale = pl_scale;
        self
    }

    pub fn with_gate(mut self, width: f64) -> Self {
        self.gate = Some(width);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if !(self.pl_scale >= 0.0) || !self.pl_scale.is_finite() {
            return Err(invalid(format!("pl_scale must be >= 0, got {}", self.pl_scale)));
        }
        if let Some(w) = self.gate {
            if !(w > 0.0) || !w.is_finite() {
                return Err(invalid(format!("gate width must be > 0, got {w}")));
            }
        }
        Ok(())
    }

    pub fn window(&self) -> f64 {
        self.gate.unwrap_or(self.base.tau_c)
    }

    pub fn car_at(&self, power: f64) -> f64 {
        let noise = self.pl_scale * noise_rate(&self.base.noise, power);
        car_with_noise(&self.base, power, noise, self.window())
    }
}

/// `(power, CAR)` pairs of a scenario.
pub fn predict_car_curve(scenario: &DesignScenario, powers: &[f64]) -> Result<Vec<(f64, f64)>> {
    scenario.validate()?;
    if let Some(p) = powers.iter().find(|p| !(**p > 0.0) || !p.is_finite()) {
        return Err(invalid(format!("powers must be positive, got {p}")));
    }
    Ok(powers.iter().map(|&p| (p, scenario.car_at(p))).collect())
}

/// Power above `reference_power` at which `improved` falls back to the CAR
/// that `baseline` reaches at `reference_power`. `None` if it never does
/// below 10⁹ µW or already starts below it.
pub fn equal_car_power(baseline: &DesignScenario, improved: &DesignScenario, reference_power: f64) -> Result<Option<f64>> {
    baseline.validate()?;
    improved.validate()?;
    if !(reference_power > 0.0) {
        return Err(invalid("reference power must be positive"));
    }
    let target = baseline.car_at(reference_power);
    let excess = |p: f64| improved.car_at(p) - target;
    if excess(reference_power) < 0.0 {
        return Ok(None);
    }
    let mut lo = reference_power;
    let mut hi = reference_power;
    loop {
        hi *= 1.25;
        if hi > 1e9 {
            return Ok(None);
        }
        if excess(hi) < 0.0 {
            break;
        }
        lo = hi;
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if excess(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-14 {
            break;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

fn check_wavelength(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(invalid(format!("wavelength must be positive, got {lambda} nm")));
    }
    Ok(())
}

/// Fraction of photoluminescence removed by moving the pump from
/// `lambda_from` to `lambda_to` (nm). Negative when the move approaches the
/// resonance and the noise grows.
pub fn pl_reduction_wavelength(lor: &LorentzianParams, lambda_from: f64, lambda_to: f64) -> Result<f64> {
    lor.validate()?;
    check_wavelength(lambda_from)?;
    check_wavelength(lambda_to)?;
    let before = lorentzian_rate(lor, wavelength_to_energy(lambda_from));
    let after = lorentzian_rate(lor, wavelength_to_energy(lambda_to));
    Ok(1.0 - after / before)
}

/// Bandgap of Al_xGa_(1-x)As in eV, `1.424 + 1.247·x`.
pub fn algaas_bandgap(x_al: f64) -> Result<f64> {
    let (lo, hi) = ALGAAS_X_RANGE;
    if !(lo..=hi).contains(&x_al) {
        return Err(invalid(format!("aluminium fraction {x_al} outside [{lo}, {hi}]")));
    }
    Ok(1.424 + 1.247 * x_al)
}

/// Fraction of photoluminescence removed at `pump_lambda` (nm) when the
/// aluminium fraction moves from `x_from` to `x_to`, shifting the resonance
/// by the bandgap difference.
pub fn pl_reduction_composition(lor: &LorentzianParams, x_from: f64, x_to: f64, pump_lambda: f64) -> Result<f64> {
    lor.validate()?;
    check_wavelength(pump_lambda)?;
    let shift = algaas_bandgap(x_to)? - algaas_bandgap(x_from)?;
    let shifted = LorentzianParams {
        e_g: lor.e_g + shift,
        ..*lor
    };
    let e = wavelength_to_energy(pump_lambda);
    Ok(1.0 - lorentzian_rate(&shifted, e) / lorentzian_rate(lor, e))
}

/// Total fraction removed by independent reductions applied in sequence.
pub fn combine_reductions(reductions: &[f64]) -> f64 {
    1.0 - reductions.iter().map(|r| 1.0 - r).product::<f64>()
}

/// Optical elements between the pump laser and the phase-matched mode.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CouplingChain {
    pub stages: Vec<(String, f64)>,
}

impl CouplingChain {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stage(mut self, name: impl Into<String>, transmission: f64) -> Self {
        self.stages.push((name.into(), transmission));
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, t) in &self.stages {
            if !(0.0..=1.0).contains(t) {
                return Err(invalid(format!("transmission of '{name}' must lie in [0, 1], got {t}")));
            }
            if *t == 0.0 {
                return Err(invalid(format!("transmission of '{name}' is zero; the pair rate is unidentifiable")));
            }
        }
        Ok(())
    }

    pub fn transmission(&self) -> f64 {
        self.stages.iter().map(|(_, t)| t).product()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OnchipRate {
    /// pairs·s⁻¹·µW⁻¹ referred to the power in the pump mode
    pub xi_true: f64,
    /// pairs·s⁻¹
    pub pair_rate: f64,
}

/// Pair-generation coefficient referred to the waveguide mode, and the pair
/// rate for `internal_power` µW of laser power.
pub fn onchip_rate(xi_measured: f64, chain: &CouplingChain, internal_power: f64) -> Result<OnchipRate> {
    chain.validate()?;
    if !(internal_power >= 0.0) {
        return Err(invalid(format!("internal power must be >= 0, got {internal_power}")));
    }
    let xi_true = xi_measured / chain.transmission();
    Ok(OnchipRate {
        xi_true,
        pair_rate: xi_true * internal_power,
    })
}
