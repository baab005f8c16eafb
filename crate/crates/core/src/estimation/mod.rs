//! Weighted nonlinear least squares for the rate models, the off-resonant
//! power law and the Lorentzian resonance, with covariance, p-values,
//! goodness of fit and model ranking.

mod compare;
mod curve_fit;
mod engine;
mod goodness;
pub mod lm;
mod rate_fit;
mod result;
pub mod transform;

pub use compare::{compare_models, ComparisonReport, RankedFit, RUNS_LEVEL, WEAK_P_VALUE};
pub use curve_fit::{
    fit_lorentzian, fit_offset_power_law, fitted_lorentzian, fitted_offset_power_law, RatePoint, LORENTZIAN,
    OFFSET_POWER_LAW,
};
pub use goodness::{goodness, pooled_runs_test, r_squared, runs_test, t_test_p_value, Goodness};
pub use rate_fit::{
    expected_sweep, fit_rate_model, fitted_source, source_from_vector, FitProblem, RateModelKind, Weighting,
};
pub use result::{FitResult, ObservableStats, ParamEstimate, Residual};
