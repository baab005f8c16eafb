//! Goodness-of-fit statistics.

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use super::result::FitResult;

/// `1 − SS_res / SS_tot`. A constant observable that is reproduced exactly
/// has R² = 1.
pub fn r_squared(observed: &[f64], fitted: &[f64]) -> f64 {
    let n = observed.len() as f64;
    if observed.is_empty() {
        return f64::NAN;
    }
    let mean = observed.iter().sum::<f64>() / n;
    let ss_tot: f64 = observed.iter().map(|y| (y - mean).powi(2)).sum();
    let ss_res: f64 = observed.iter().zip(fitted).map(|(y, f)| (y - f).powi(2)).sum();
    if ss_tot == 0.0 {
        return if ss_res == 0.0 { 1.0 } else { f64::NEG_INFINITY };
    }
    1.0 - ss_res / ss_tot
}

/// Two-sided p-value of `estimate / stderr` under a Student t law with
/// `dof` degrees of freedom (normal law when `dof` is 0).
pub fn t_test_p_value(estimate: f64, stderr: f64, dof: usize) -> f64 {
    if !(stderr > 0.0) || !stderr.is_finite() {
        return if estimate == 0.0 || stderr.is_infinite() { 1.0 } else { 0.0 };
    }
    let t = (estimate / stderr).abs();
    let tail = if dof > 0 {
        let dist = StudentsT::new(0.0, 1.0, dof as f64).expect("positive dof");
        dist.sf(t)
    } else {
        Normal::standard().sf(t)
    };
    (2.0 * tail).clamp(0.0, 1.0)
}

/// Wald–Wolfowitz runs test on the signs of residuals in their natural
/// order. Returns the two-sided p-value of the normal approximation; zero
/// residuals are ignored. Too few residuals of either sign give `1.0`.
pub fn runs_test(residuals: &[f64]) -> f64 {
    let signs: Vec<bool> = residuals.iter().filter(|r| **r != 0.0).map(|r| *r > 0.0).collect();
    let n_pos = signs.iter().filter(|s| **s).count() as f64;
    let n_neg = signs.len() as f64 - n_pos;
    if n_pos < 1.0 || n_neg < 1.0 {
        // all residuals on one side: maximal structure unless tiny sample
        return if signs.len() < 3 { 1.0 } else { 0.5f64.powi(signs.len() as i32 - 1) };
    }
    let runs = 1 + signs.windows(2).filter(|w| w[0] != w[1]).count();
    let n = n_pos + n_neg;
    let mean = 2.0 * n_pos * n_neg / n + 1.0;
    let var = 2.0 * n_pos * n_neg * (2.0 * n_pos * n_neg - n) / (n * n * (n - 1.0));
    if !(var > 0.0) {
        return 1.0;
    }
    let z = (runs as f64 - mean) / var.sqrt();
    (2.0 * Normal::standard().sf(z.abs())).clamp(0.0, 1.0)
}

/// One runs test over several residual sequences: runs are counted within
/// each sequence and their totals compared with the summed expectation and
/// variance. Sequences with a single sign carry no information under the
/// conditional law and are skipped; if every sequence is like that the
/// smallest per-sequence [`runs_test`] value is returned.
pub fn pooled_runs_test(groups: &[Vec<f64>]) -> f64 {
    let (mut runs, mut mean, mut var, mut used) = (0.0, 0.0, 0.0, 0);
    for g in groups {
        let signs: Vec<bool> = g.iter().filter(|r| **r != 0.0).map(|r| *r > 0.0).collect();
        let n_pos = signs.iter().filter(|s| **s).count() as f64;
        let n_neg = signs.len() as f64 - n_pos;
        if n_pos < 1.0 || n_neg < 1.0 {
            continue;
        }
        let n = n_pos + n_neg;
        runs += (1 + signs.windows(2).filter(|w| w[0] != w[1]).count()) as f64;
        mean += 2.0 * n_pos * n_neg / n + 1.0;
        var += 2.0 * n_pos * n_neg * (2.0 * n_pos * n_neg - n) / (n * n * (n - 1.0));
        used += 1;
    }
    if used == 0 {
        return groups.iter().map(|g| runs_test(g)).fold(1.0, f64::min);
    }
    if !(var > 0.0) {
        return 1.0;
    }
    let z = (runs - mean) / var.sqrt();
    (2.0 * Normal::standard().sf(z.abs())).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Goodness {
    pub r_squared: f64,
    /// `(parameter name, p-value)` of every free parameter.
    pub p_values: Vec<(String, f64)>,
}

/// R² and parameter p-values of a fit, recomputed from its residuals and
/// estimates.
pub fn goodness(fit: &FitResult) -> Goodness {
    let r2 = fit
        .observables
        .iter()
        .map(|o| {
            let (y, f): (Vec<f64>, Vec<f64>) = fit
                .residuals
                .iter()
                .filter(|r| r.observable == o.name)
                .map(|r| (r.observed, r.fitted))
                .unzip();
            r_squared(&y, &f)
        })
        .fold(f64::INFINITY, f64::min);
    let p_values = fit
        .params
        .iter()
        .filter(|p| !p.fixed)
        .map(|p| (p.name.clone(), t_test_p_value(p.value, p.stderr, fit.dof)))
        .collect();
    Goodness { r_squared: r2, p_values }
}
