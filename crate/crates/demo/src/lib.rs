//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every exported function returns flat `f64` arrays so the page can plot
//! them without any glue beyond the generated bindings. The plain-Rust
//! versions (without the `js_` prefix) are what the native tests exercise.

use pdc_noise::design::{
    combine_reductions, equal_car_power, pl_reduction_composition, pl_reduction_wavelength, predict_car_curve,
    DesignScenario,
};
use pdc_noise::model::{lorentzian_rate, noise_rate, singles_rate, wavelength_to_energy, Channel, SourceParams};
use pdc_noise::presets::{log_powers, Condition, FITTED_RESONANCE};
use wasm_bindgen::prelude::*;

fn condition(preset: &str) -> Result<Condition, String> {
    match preset {
        "no-filter-pulsed" => Ok(Condition::NoFilterPulsed),
        "bandpass-40-pulsed" => Ok(Condition::Bandpass40Pulsed),
        "no-filter-cw" => Ok(Condition::NoFilterCw),
        other => Err(format!("unknown preset '{other}'")),
    }
}

fn source(preset: &str, noise: &str) -> Result<SourceParams, String> {
    let c = condition(preset)?;
    match noise {
        "none" => Ok(c.noise_free()),
        "powerlaw" => Ok(c.power_law()),
        "saturation" => Ok(c.saturation()),
        other => Err(format!("unknown noise law '{other}'")),
    }
}

/// `points` log-spaced powers (µW).
pub fn powers(p_min: f64, p_max: f64, points: usize) -> Result<Vec<f64>, String> {
    if !(p_min > 0.0 && p_max >= p_min) {
        return Err("need 0 < min <= max".into());
    }
    if points == 0 {
        return Err("need at least one point".into());
    }
    Ok(log_powers(p_min, p_max, points))
}

/// CAR at each power for the preset with its photoluminescence scaled by
/// `pl_scale`. A positive `gate_ns` replaces the coincidence window.
pub fn car_curve(preset: &str, noise: &str, pl_scale: f64, gate_ns: f64, powers: &[f64]) -> Result<Vec<f64>, String> {
    let mut sc = DesignScenario::new(source(preset, noise)?, "demo").with_pl_scale(pl_scale);
    if gate_ns > 0.0 {
        sc = sc.with_gate(gate_ns * 1e-9);
    }
    let curve = predict_car_curve(&sc, powers).map_err(|e| e.to_string())?;
    Ok(curve.into_iter().map(|(_, c)| c).collect())
}

/// Power at which the scaled device reaches the CAR the preset has at
/// `reference_power`; NaN when the curves never meet.
pub fn equal_car(preset: &str, noise: &str, pl_scale: f64, reference_power: f64) -> Result<f64, String> {
    let base = DesignScenario::new(source(preset, noise)?, "measured");
    let better = base.clone().with_pl_scale(pl_scale);
    equal_car_power(&base, &better, reference_power)
        .map(|p| p.unwrap_or(f64::NAN))
        .map_err(|e| e.to_string())
}

/// Photoluminescence rate and signal singles for the power-law and the
/// saturation law of a preset: `[f_pl.., f_sat.., singles_pl.., singles_sat..]`.
pub fn noise_curves(preset: &str, powers: &[f64]) -> Result<Vec<f64>, String> {
    let c = condition(preset)?;
    let (pl, sat) = (c.power_law(), c.saturation());
    let mut out = Vec::with_capacity(4 * powers.len());
    for src in [&pl, &sat] {
        out.extend(powers.iter().map(|&p| noise_rate(&src.noise, p)));
    }
    for src in [&pl, &sat] {
        out.extend(powers.iter().map(|&p| singles_rate(src, Channel::Signal, p)));
    }
    Ok(out)
}

/// Relative photoluminescence of the built-in resonance at each wavelength.
pub fn resonance_curve(lambdas_nm: &[f64]) -> Vec<f64> {
    lambdas_nm
        .iter()
        .map(|&l| lorentzian_rate(&FITTED_RESONANCE, wavelength_to_energy(l)) / FITTED_RESONANCE.n)
        .collect()
}

/// `[by wavelength, by composition, combined]` reductions of the built-in
/// resonance.
pub fn reductions(from_nm: f64, to_nm: f64, x_from: f64, x_to: f64) -> Result<Vec<f64>, String> {
    let wl = pl_reduction_wavelength(&FITTED_RESONANCE, from_nm, to_nm).map_err(|e| e.to_string())?;
    let comp = pl_reduction_composition(&FITTED_RESONANCE, x_from, x_to, to_nm).map_err(|e| e.to_string())?;
    Ok(vec![wl, comp, combine_reductions(&[wl, comp])])
}

fn js(r: Result<Vec<f64>, String>) -> Result<Vec<f64>, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = powers)]
pub fn js_powers(p_min: f64, p_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    js(powers(p_min, p_max, points))
}

#[wasm_bindgen(js_name = carCurve)]
pub fn js_car_curve(preset: &str, noise: &str, pl_scale: f64, gate_ns: f64, powers: &[f64]) -> Result<Vec<f64>, JsError> {
    js(car_curve(preset, noise, pl_scale, gate_ns, powers))
}

#[wasm_bindgen(js_name = equalCar)]
pub fn js_equal_car(preset: &str, noise: &str, pl_scale: f64, reference_power: f64) -> Result<f64, JsError> {
    equal_car(preset, noise, pl_scale, reference_power).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = noiseCurves)]
pub fn js_noise_curves(preset: &str, powers: &[f64]) -> Result<Vec<f64>, JsError> {
    js(noise_curves(preset, powers))
}

#[wasm_bindgen(js_name = resonanceCurve)]
pub fn js_resonance_curve(lambdas_nm: &[f64]) -> Vec<f64> {
    resonance_curve(lambdas_nm)
}

#[wasm_bindgen(js_name = reductions)]
pub fn js_reductions(from_nm: f64, to_nm: f64, x_from: f64, x_to: f64) -> Result<Vec<f64>, JsError> {
    js(reductions(from_nm, to_nm, x_from, x_to))
}
