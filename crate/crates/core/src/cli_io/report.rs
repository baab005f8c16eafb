//! Fit reports: a fixed-width table for people and CSV files for programs.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimation::{FitResult, WEAK_P_VALUE};

pub const PARAMS_HEADER: [&str; 7] = ["model", "parameter", "unit", "value", "stderr", "p_value", "fixed"];
pub const RESIDUALS_HEADER: [&str; 5] = ["observable", "x", "observed", "fitted", "weight"];

fn csv_bytes<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

/// Parameter estimates, one row per parameter.
pub fn params_csv(fit: &FitResult) -> String {
    csv_bytes(
        &PARAMS_HEADER,
        fit.params.iter().map(|p| {
            vec![
                fit.model.clone(),
                p.name.clone(),
                p.unit.clone(),
                p.value.to_string(),
                p.stderr.to_string(),
                p.p_value.map_or_else(String::new, |v| v.to_string()),
                p.fixed.to_string(),
            ]
        }),
    )
}

/// Goodness-of-fit summary as `quantity,value` rows.
pub fn summary_csv(fit: &FitResult, seed: u64) -> String {
    let mut rows = vec![
        ("model".to_string(), fit.model.clone()),
        ("converged".to_string(), fit.converged.to_string()),
        ("iterations".to_string(), fit.iterations.to_string()),
        ("chi2".to_string(), fit.chi2.to_string()),
        ("dof".to_string(), fit.dof.to_string()),
        ("r_squared".to_string(), fit.r_squared.to_string()),
    ];
    for o in &fit.observables {
        rows.push((format!("r_squared_{}", o.name), o.r_squared.to_string()));
        rows.push((format!("runs_p_{}", o.name), o.runs_p.to_string()));
    }
    rows.push(("seed".to_string(), seed.to_string()));
    csv_bytes(&["quantity", "value"], rows.into_iter().map(|(k, v)| vec![k, v]))
}

pub fn residuals_csv(fit: &FitResult) -> String {
    csv_bytes(
        &RESIDUALS_HEADER,
        fit.residuals.iter().map(|r| {
            vec![
                r.observable.clone(),
                r.x.to_string(),
                r.observed.to_string(),
                r.fitted.to_string(),
                r.weight.to_string(),
            ]
        }),
    )
}

/// Value with its uncertainty in the `1.23(4)e5` style.
pub fn format_uncertain(value: f64, stderr: f64) -> String {
    if !(stderr > 0.0) || !stderr.is_finite() || value == 0.0 {
        return format!("{value:.6e}");
    }
    let exp = value.abs().log10().floor() as i32;
    let mantissa = value / 10f64.powi(exp);
    let err = stderr / 10f64.powi(exp);
    // one significant digit of uncertainty
    let digits = (-(err.log10().floor()) as i32).clamp(0, 12) as usize;
    let scaled_err = (err * 10f64.powi(digits as i32)).round() as u64;
    if exp == 0 {
        format!("{mantissa:.digits$}({scaled_err})")
    } else {
        format!("{mantissa:.digits$}({scaled_err})e{exp}")
    }
}

/// Human-readable report.
pub fn fit_table(fit: &FitResult, seed: u64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "model       {}", fit.model);
    let _ = writeln!(
        s,
        "status      {} after {} iterations",
        if fit.converged { "converged" } else { "NOT CONVERGED" },
        fit.iterations
    );
    let _ = writeln!(s, "chi2/dof    {:.4} ({} dof)", fit.chi2 / fit.dof.max(1) as f64, fit.dof);
    let _ = writeln!(s, "R^2 (min)   {:.6}", fit.r_squared);
    let _ = writeln!(s, "seed        {seed}");
    let _ = writeln!(s);
    let _ = writeln!(s, "{:<10} {:<22} {:>16} {:>12} {:>10}", "parameter", "unit", "estimate", "stderr", "p-value");
    for p in &fit.params {
        let p_str = match p.p_value {
            None => "fixed".to_string(),
            Some(v) if v > WEAK_P_VALUE => format!("{v:.3} *"),
            Some(v) => format!("{v:.2e}"),
        };
        let _ = writeln!(
            s,
            "{:<10} {:<22} {:>16} {:>12} {:>10}",
            p.name,
            p.unit,
            format_uncertain(p.value, p.stderr),
            format!("{:.3e}", p.stderr),
            p_str
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "{:<14} {:>6} {:>12} {:>10}", "observable", "points", "R^2", "runs p");
    for o in &fit.observables {
        let _ = writeln!(s, "{:<14} {:>6} {:>12.6} {:>10.4}", o.name, o.points, o.r_squared, o.runs_p);
    }
    if !fit.weak_params(WEAK_P_VALUE).is_empty() {
        let _ = writeln!(s, "\n* p-value above {WEAK_P_VALUE}");
    }
    s
}

/// Reads back a parameter CSV: the model label and `(name, value)` pairs.
pub fn read_params_csv(path: &Path) -> Result<(String, Vec<(String, f64)>)> {
    let origin = path.display().to_string();
    let perr = |line: usize, msg: String| Error::Parse {
        path: origin.clone(),
        line,
        msg,
    };
    let mut rd = csv::Reader::from_path(path).map_err(|e| perr(0, e.to_string()))?;
    let header = rd.headers().map_err(|e| perr(1, e.to_string()))?.clone();
    if header.iter().ne(PARAMS_HEADER) {
        return Err(perr(1, format!("expected header '{}'", PARAMS_HEADER.join(","))));
    }
    let mut model: Option<String> = None;
    let mut params = Vec::new();
    for row in rd.records() {
        let row = row.map_err(|e| perr(e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        match &model {
            None => model = Some(row[0].to_string()),
            Some(m) if m != &row[0] => return Err(perr(line, format!("mixed models '{m}' and '{}'", &row[0]))),
            _ => {}
        }
        let value: f64 = row[3]
            .parse()
            .map_err(|_| perr(line, format!("value '{}' is not a number", &row[3])))?;
        params.push((row[1].to_string(), value));
    }
    let model = model.ok_or_else(|| perr(2, "no parameter rows".to_string()))?;
    Ok((model, params))
}
