//! Acceptance criteria. Runs as a plain binary and prints one PASS/FAIL
//! line per criterion; exits non-zero if any criterion fails.

use std::io::Write;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use pdc_noise::design::{
    combine_reductions, equal_car_power, onchip_rate, pl_reduction_composition, pl_reduction_wavelength,
    CouplingChain, DesignScenario,
};
use pdc_noise::estimation::{fit_lorentzian, fit_rate_model, fitted_lorentzian, FitProblem, FitResult, RateModelKind};
use pdc_noise::model::{
    coincidence_rate, noise_rate, singles_rate, Channel, NoiseModel, SourceParams,
};
use pdc_noise::montecarlo::{saturable_emission_times, DetectorConfig, PumpConfig, Simulator, SweepRecord};
use pdc_noise::presets::{generation_rate_points, log_powers, Condition, NARROW_GATE};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within_budget(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

// Hand-computed with 30-digit arithmetic:
// (column, P, f(P), R_s, R_i, R_c) with tau_c = 1/76.2 MHz and R_bg = 300/s.
const ORACLE: [(&str, f64, f64, f64, f64, f64); 15] = [
    ("nf_pl", 10.0, 10990817.477152491, 3338.2553206589733, 2698.6226215728737, 0.26072429560257628),
    ("nf_pl", 100.0, 60399034.408040324, 21275.816537527662, 16859.855161206049, 6.1324433761037893),
    ("nf_pl", 1000.0, 331917381.48751213, 158364.3024826273, 125087.60722312682, 274.21603237678913),
    ("nf_sat", 10.0, 3875968.992248062, 2518.4341085271318, 2051.3953488372093, 0.29009926530952155),
    ("nf_sat", 100.0, 30303030.303030303, 20877.575757575758, 16545.454545454545, 6.7561887233104126),
    ("nf_sat", 1000.0, 95238095.238095238, 166595.2380952381, 131585.71428571429, 309.91442783937722),
    ("bp40", 10.0, 0.0, 594.0, 810.0, 0.25621417322834646),
    ("bp40", 100.0, 0.0, 3240.0, 5400.0, 2.7286062992125984),
    ("bp40", 1000.0, 0.0, 29700.0, 51300.0, 44.98488188976378),
    ("cw_pl", 10.0, 42600914.858318144, 12676.237863162717, 15532.292754661806, 2.9998718834432012),
    ("cw_pl", 100.0, 213510346.67831431, 68812.69013636172, 84623.310937060579, 80.579392044946711),
    ("cw_pl", 1000.0, 1070086600.0250421, 408522.51600651095, 502727.71200801348, 2736.8177135919989),
    ("cw_sat", 10.0, 22222222.222222222, 9717.7777777777778, 11891.111111111111, 2.681272116911312),
    ("cw_sat", 100.0, 111111111.11111111, 65588.888888888889, 80655.555555555556, 81.071993065681605),
    ("cw_sat", 1000.0, 185185185.18518519, 412448.14814814815, 507559.25925925926, 2863.7487212195183),
];

fn column(name: &str) -> SourceParams {
    match name {
        "nf_pl" => Condition::NoFilterPulsed.power_law(),
        "nf_sat" => Condition::NoFilterPulsed.saturation(),
        "bp40" => Condition::Bandpass40Pulsed.noise_free(),
        "cw_pl" => Condition::NoFilterCw.power_law(),
        "cw_sat" => Condition::NoFilterCw.saturation(),
        _ => unreachable!(),
    }
}

fn rate_equations() -> Outcome {
    let mut worst = 0.0f64;
    for &(name, p, f, rs, ri, rc) in &ORACLE {
        let src = column(name);
        let rel = |a: f64, b: f64| if b == 0.0 { a.abs() } else { ((a - b) / b).abs() };
        for e in [
            rel(noise_rate(&src.noise, p), f),
            rel(singles_rate(&src, Channel::Signal, p), rs),
            rel(singles_rate(&src, Channel::Idler, p), ri),
            rel(coincidence_rate(&src, p), rc),
        ] {
            worst = worst.max(e);
        }
    }
    outcome(worst < 1e-9, format!("max relative error {worst:.2e} over 60 values"))
}

/// Counts against closed-form expectations in units of the Poisson error.
fn z_score(observed: u64, expected: f64) -> f64 {
    (observed as f64 - expected) / expected.sqrt()
}

fn monte_carlo_rates() -> Outcome {
    let src = Condition::NoFilterPulsed.saturation();
    let powers = log_powers(10.0, 2000.0, 8);
    // long enough for at least 1.2e4 expected counts in every observable
    let durations: Vec<f64> = powers
        .iter()
        .map(|&p| {
            let slowest = singles_rate(&src, Channel::Signal, p)
                .min(singles_rate(&src, Channel::Idler, p))
                .min(coincidence_rate(&src, p));
            1.2e4 / slowest
        })
        .collect();
    let det = DetectorConfig::default();
    let sim = Simulator::new(PumpConfig::pulsed(1.0), src, det, det);
    let recs = sim.sweep(&powers, &durations, 20_240_611).expect("valid simulation");
    let mut worst = 0.0f64;
    let mut min_count = u64::MAX;
    for r in &recs {
        let t = r.duration;
        for (obs, exp) in [
            (r.singles_s, singles_rate(&src, Channel::Signal, r.power) * t),
            (r.singles_i, singles_rate(&src, Channel::Idler, r.power) * t),
            (r.coincidences, coincidence_rate(&src, r.power) * t),
        ] {
            worst = worst.max(z_score(obs, exp).abs());
            min_count = min_count.min(obs);
        }
    }
    let sim_time: f64 = durations.iter().sum();
    outcome(
        worst < 3.0 && min_count >= 10_000,
        format!("max |z| {worst:.2}, smallest count {min_count}, {sim_time:.0} s simulated"),
    )
}

fn dead_time_law() -> Outcome {
    let beta = 8e-9;
    let mut worst = 0.0f64;
    let xs = log_powers(0.01, 100.0, 13);
    for (k, &x) in xs.iter().enumerate() {
        let excitation = x / beta;
        let law = excitation / (1.0 + x);
        let duration = 2e6 / law;
        let n = saturable_emission_times(excitation, beta, 32, duration, 77 + k as u64).len();
        worst = worst.max(z_score(n as u64, law * duration).abs());
    }
    outcome(worst < 3.0, format!("max |z| {worst:.2} over 13 excitation levels, x in [0.01, 100]"))
}

fn true_value(src: &SourceParams, name: &str) -> f64 {
    match (name, src.noise) {
        ("xi", _) => src.xi,
        ("eta_s", _) => src.eta_s,
        ("eta_i", _) => src.eta_i,
        ("r_bg", _) => src.r_bg,
        ("tau_c", _) => src.tau_c,
        ("gamma_p", NoiseModel::PowerLaw { gamma_p, .. }) => gamma_p,
        ("alpha", NoiseModel::PowerLaw { alpha, .. }) => alpha,
        ("gamma_s", NoiseModel::Saturation { gamma_s, .. }) => gamma_s,
        ("beta", NoiseModel::Saturation { beta, .. }) => beta,
        _ => panic!("no true value for {name}"),
    }
}

fn round_trip() -> Outcome {
    const TRIALS: u64 = 50;
    let columns = [
        ("no filter pulsed, power law", "nf_pl", true, RateModelKind::PowerLaw),
        ("no filter pulsed, saturation", "nf_sat", true, RateModelKind::Saturation),
        ("40 nm bandpass pulsed", "bp40", true, RateModelKind::NoNoise),
        ("no filter CW, power law", "cw_pl", false, RateModelKind::PowerLaw),
        ("no filter CW, saturation", "cw_sat", false, RateModelKind::Saturation),
    ];
    let powers = log_powers(10.0, 2000.0, 12);
    let det = DetectorConfig::default();
    let mut pass = true;
    let mut lines = Vec::new();
    for (label, name, pulsed, kind) in columns {
        let src = column(name);
        let pump = if pulsed { PumpConfig::pulsed(1.0) } else { PumpConfig::cw(1.0) };
        let sim = Simulator::new(pump, src, det, det);
        let mut hits: Vec<(String, u64)> = Vec::new();
        let mut min_r2 = f64::INFINITY;
        let mut failures = 0;
        for trial in 0..TRIALS {
            let recs = sim.sweep(&powers, &[4.0], 5_000 + trial).expect("valid simulation");
            let fit = match fit_rate_model(&FitProblem::new(recs, kind)) {
                Ok(f) => f,
                Err(_) => {
                    failures += 1;
                    continue;
                }
            };
            min_r2 = min_r2.min(fit.r_squared);
            for p in fit.params.iter().filter(|p| !p.fixed) {
                let ok = (p.value - true_value(&src, &p.name)).abs() <= 2.0 * p.stderr;
                match hits.iter_mut().find(|(n, _)| *n == p.name) {
                    Some(h) => h.1 += ok as u64,
                    None => hits.push((p.name.clone(), ok as u64)),
                }
            }
        }
        let col_pass = failures == 0 && min_r2 > 0.95 && hits.iter().all(|(_, h)| *h * 5 >= TRIALS * 4);
        pass &= col_pass;
        let cover: Vec<String> = hits.iter().map(|(n, h)| format!("{n} {h}/{TRIALS}")).collect();
        lines.push(format!(
            "    {label}: {} min R^2 {min_r2:.4}, {failures} failed fits; within 2 se: {}",
            if col_pass { "ok" } else { "FAIL" },
            cover.join(", ")
        ));
    }
    outcome(pass, format!("5 columns x {TRIALS} trials\n{}", lines.join("\n")))
}

fn lorentzian_center() -> Outcome {
    let pts = generation_rate_points();
    match fit_lorentzian(&pts).and_then(|f| fitted_lorentzian(&f)) {
        Ok(lor) => outcome(
            (lor.e_g - 1.654).abs() <= 0.02,
            format!("E_g = {:.4} eV, sigma = {:.4} eV", lor.e_g, lor.sigma),
        ),
        Err(e) => outcome(false, format!("fit failed: {e}")),
    }
}

fn design_numbers() -> Outcome {
    let pts = generation_rate_points();
    let lor = fitted_lorentzian(&fit_lorentzian(&pts).expect("fit")).expect("params");
    let wl = pl_reduction_wavelength(&lor, 767.0, 780.0).expect("reduction");
    let comp = pl_reduction_composition(&lor, 0.20, 0.22, 780.0).expect("reduction");
    let total = combine_reductions(&[wl, comp]);
    let chain = CouplingChain::new()
        .stage("lens", 0.70)
        .stage("in-coupling", 0.35)
        .stage("mode", 0.04);
    let on = onchip_rate(0.5e6, &chain, 1000.0).expect("rate");
    let ratio = on.xi_true / 5e7;
    let pass = (0.55..=0.85).contains(&wl)
        && (0.80..=0.97).contains(&total)
        && (1.0 / 1.2..=1.2).contains(&ratio)
        && on.pair_rate >= 5e9;
    outcome(
        pass,
        format!(
            "wavelength {wl:.3}, composition {comp:.3}, combined {total:.3}, xi_true {:.3e}, rate at 1 mW {:.3e}/s",
            on.xi_true, on.pair_rate
        ),
    )
}

fn noise_free_fit(recs: Vec<SweepRecord>) -> Result<FitResult, String> {
    fit_rate_model(&FitProblem::new(recs, RateModelKind::NoNoise)).map_err(|e| e.to_string())
}

fn gating_property() -> Outcome {
    let src = Condition::NoFilterPulsed.saturation();
    let powers = log_powers(10.0, 2000.0, 12);
    let pump = PumpConfig::pulsed(1.0);
    let gated = DetectorConfig::gated(NARROW_GATE);
    let open = DetectorConfig::default();
    let run = |det: DetectorConfig| {
        let recs = Simulator::new(pump, src, det, det)
            .sweep(&powers, &[10.0], 31_415)
            .expect("valid simulation");
        noise_free_fit(recs)
    };
    match (run(gated), run(open)) {
        (Ok(g), Ok(u)) => {
            let per_obs = |f: &FitResult| {
                let r2: Vec<String> = f.observables.iter().map(|o| format!("{} {:.4}", o.name, o.r_squared)).collect();
                format!(
                    "{}; chi2/dof {:.1}, pooled runs p {:.3}",
                    r2.join(", "),
                    f.chi2 / f.dof.max(1) as f64,
                    f.runs_p()
                )
            };
            outcome(
                g.r_squared > 0.95 && u.r_squared <= 0.95,
                format!(
                    "noise-free model R^2: gated {:.4} ({}), ungated {:.4} ({})",
                    g.r_squared,
                    per_obs(&g),
                    u.r_squared,
                    per_obs(&u)
                ),
            )
        }
        (g, u) => outcome(false, format!("fit error: gated {:?}, ungated {:?}", g.err(), u.err())),
    }
}

fn equal_car() -> Outcome {
    let base = DesignScenario::new(Condition::NoFilterPulsed.saturation(), "measured");
    let cleaner = base.clone().with_pl_scale(0.1);
    match equal_car_power(&base, &cleaner, 100.0) {
        Ok(Some(p)) => outcome(
            (150.0..=250.0).contains(&p),
            format!("CAR at 100 uW is matched at {p:.1} uW with 10% of the photoluminescence"),
        ),
        other => outcome(false, format!("no crossing: {other:?}")),
    }
}

fn main() -> ExitCode {
    // `cargo test -- --list` is not meaningful here
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    // numeric arguments select criteria: `cargo test --test acceptance -- 2 4`
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(&str, f64, fn() -> Outcome); 8] = [
        ("1 rate equations match hand oracle", 1.0, rate_equations),
        ("2 Monte Carlo rates within 3 se of closed form", 60.0, monte_carlo_rates),
        ("3 saturable emitter follows dead-time law", 30.0, dead_time_law),
        ("4 simulate-fit round trip", 600.0, round_trip),
        ("5 Lorentzian centre", 5.0, lorentzian_center),
        ("6 design arithmetic", 5.0, design_numbers),
        ("7 gating removes need for noise model", 60.0, gating_property),
        ("8 equal-CAR power near 200 uW", 5.0, equal_car),
    ];
    let mut failed = 0;
    let mut ran = 0;
    let mut out = std::io::stdout().lock();
    for (k, (name, budget, f)) in criteria.into_iter().enumerate() {
        if !selected.is_empty() && !selected.contains(&(k + 1)) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let res = f();
        let elapsed = start.elapsed();
        let in_time = within_budget(elapsed, budget);
        let pass = res.pass && in_time;
        failed += !pass as usize;
        let _ = writeln!(
            out,
            "{} criterion {name} [{:.2} s of {budget} s]: {}",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            res.detail
        );
        let _ = out.flush();
    }
    let _ = writeln!(out, "{} of {ran} criteria passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
