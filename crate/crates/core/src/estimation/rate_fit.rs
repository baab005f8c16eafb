//! Joint fit of both singles rates and the coincidence rate of a power sweep.

use nalgebra::{DMatrix, DVector};

use super::engine::{Fit, Model, Obs, ParamSpec, WeightRule};
use super::lm::LmConfig;
use super::result::FitResult;
use super::transform::Bound;
use crate::error::{invalid, Error, Result};
use crate::model::{Channel, NoiseModel, SourceParams};
use crate::montecarlo::SweepRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateModelKind {
    NoNoise,
    PowerLaw,
    Saturation,
}

impl RateModelKind {
    pub const ALL: [RateModelKind; 3] = [RateModelKind::NoNoise, RateModelKind::PowerLaw, RateModelKind::Saturation];

    pub fn name(self) -> &'static str {
        match self {
            RateModelKind::NoNoise => "none",
            RateModelKind::PowerLaw => "powerlaw",
            RateModelKind::Saturation => "saturation",
        }
    }

    /// Parameter names in fit order.
    pub fn param_names(self) -> Vec<&'static str> {
        specs(self).iter().map(|s| s.name).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    /// Weights from the model's own Poisson variance, iterated to self-consistency.
    #[default]
    Poisson,
    /// Weights from the observed counts.
    Observed,
    /// Unweighted least squares.
    Uniform,
}

impl Weighting {
    fn rule(self) -> WeightRule {
        match self {
            Weighting::Poisson => WeightRule::Poisson,
            Weighting::Observed => WeightRule::Observed,
            Weighting::Uniform => WeightRule::Uniform,
        }
    }
}

/// A rate-model fit request. `tau_c` is always held fixed; it defaults to
/// the coincidence window stored with the records.
#[derive(Debug, Clone)]
pub struct FitProblem {
    pub data: Vec<SweepRecord>,
    pub model: RateModelKind,
    pub fixed: Vec<(String, f64)>,
    pub guesses: Vec<(String, f64)>,
    /// Replaces the default domain of a parameter with `(lo, hi)`.
    pub bounds: Vec<(String, f64, f64)>,
    pub weighting: Weighting,
    pub lm: LmConfig,
}

impl FitProblem {
    pub fn new(data: Vec<SweepRecord>, model: RateModelKind) -> Self {
        FitProblem {
            data,
            model,
            fixed: Vec::new(),
            guesses: Vec::new(),
            bounds: Vec::new(),
            weighting: Weighting::Poisson,
            lm: LmConfig::default(),
        }
    }

    pub fn fix(mut self, name: &str, value: f64) -> Self {
        self.fixed.push((name.to_string(), value));
        self
    }

    pub fn guess(mut self, name: &str, value: f64) -> Self {
        self.guesses.push((name.to_string(), value));
        self
    }

    pub fn bound(mut self, name: &str, lo: f64, hi: f64) -> Self {
        self.bounds.push((name.to_string(), lo, hi));
        self
    }

    pub fn weighting(mut self, weighting: Weighting) -> Self {
        self.weighting = weighting;
        self
    }
}

const XI: usize = 0;
const ETA_S: usize = 1;
const ETA_I: usize = 2;
const R_BG: usize = 3;
const TAU_C: usize = 4;
const N1: usize = 5;
const N2: usize = 6;

fn specs(kind: RateModelKind) -> Vec<ParamSpec> {
    let mut v = vec![
        ParamSpec { name: "xi", unit: "pairs/s/uW", bound: Bound::Positive },
        ParamSpec { name: "eta_s", unit: "1", bound: Bound::UNIT },
        ParamSpec { name: "eta_i", unit: "1", bound: Bound::UNIT },
        ParamSpec { name: "r_bg", unit: "1/s", bound: Bound::Positive },
        ParamSpec { name: "tau_c", unit: "s", bound: Bound::Positive },
    ];
    match kind {
        RateModelKind::NoNoise => {}
        RateModelKind::PowerLaw => {
            v.push(ParamSpec { name: "gamma_p", unit: "photons/s/uW^alpha", bound: Bound::Positive });
            v.push(ParamSpec { name: "alpha", unit: "1", bound: Bound::Interval(0.0, crate::model::MAX_ALPHA) });
        }
        RateModelKind::Saturation => {
            v.push(ParamSpec { name: "gamma_s", unit: "photons/s/uW", bound: Bound::Positive });
            v.push(ParamSpec { name: "beta", unit: "s", bound: Bound::Positive });
        }
    }
    v
}

/// Builds source parameters from a natural parameter vector in fit order.
pub fn source_from_vector(kind: RateModelKind, theta: &[f64]) -> SourceParams {
    let noise = match kind {
        RateModelKind::NoNoise => NoiseModel::None,
        RateModelKind::PowerLaw => NoiseModel::PowerLaw { gamma_p: theta[N1], alpha: theta[N2] },
        RateModelKind::Saturation => NoiseModel::Saturation { gamma_s: theta[N1], beta: theta[N2] },
    };
    SourceParams {
        xi: theta[XI],
        eta_s: theta[ETA_S],
        eta_i: theta[ETA_I],
        r_bg: theta[R_BG],
        tau_c: theta[TAU_C],
        noise,
    }
}

/// Source parameters carried by a finished rate fit.
pub fn fitted_source(fit: &FitResult) -> Result<SourceParams> {
    let kind = RateModelKind::ALL
        .into_iter()
        .find(|k| k.name() == fit.model)
        .ok_or_else(|| invalid(format!("'{}' is not a rate model fit", fit.model)))?;
    let theta: Vec<f64> = fit.params.iter().map(|p| p.value).collect();
    Ok(source_from_vector(kind, &theta))
}

pub(crate) struct RateModel {
    kind: RateModelKind,
    powers: Vec<f64>,
}

impl RateModel {
    /// Noise rate and its derivatives with respect to the two noise parameters.
    fn noise(&self, theta: &[f64], p: f64) -> (f64, f64, f64) {
        match self.kind {
            RateModelKind::NoNoise => (0.0, 0.0, 0.0),
            RateModelKind::PowerLaw => {
                if p <= 0.0 {
                    return (0.0, 0.0, 0.0);
                }
                let pa = p.powf(theta[N2]);
                (theta[N1] * pa, pa, theta[N1] * pa * p.ln())
            }
            RateModelKind::Saturation => {
                let (g, b) = (theta[N1], theta[N2]);
                let d = 1.0 + b * g * p;
                (g * p / d, p / (d * d), -(g * p).powi(2) / (d * d))
            }
        }
    }
}

impl Model for RateModel {
    fn eval(&self, theta: &[f64], k: usize, grad: &mut [f64]) -> f64 {
        let p = self.powers[k / 3];
        let (xi, es, ei, bg, tau) = (theta[XI], theta[ETA_S], theta[ETA_I], theta[R_BG], theta[TAU_C]);
        let (f, f1, f2) = self.noise(theta, p);
        let s = xi * p + f;
        let rs = es * s + bg;
        let ri = ei * s + bg;
        grad.iter_mut().for_each(|g| *g = 0.0);
        match k % 3 {
            0 | 1 => {
                let eta = if k % 3 == 0 { es } else { ei };
                grad[XI] = eta * p;
                grad[if k % 3 == 0 { ETA_S } else { ETA_I }] = s;
                grad[R_BG] = 1.0;
                if grad.len() > N1 {
                    grad[N1] = eta * f1;
                    grad[N2] = eta * f2;
                }
                eta * s + bg
            }
            _ => {
                grad[XI] = es * ei * p + tau * (es * p * ri + rs * ei * p);
                grad[ETA_S] = ei * xi * p + tau * s * ri;
                grad[ETA_I] = es * xi * p + tau * rs * s;
                grad[R_BG] = tau * (rs + ri);
                grad[TAU_C] = rs * ri;
                if grad.len() > N1 {
                    let df = tau * (es * ri + rs * ei);
                    grad[N1] = df * f1;
                    grad[N2] = df * f2;
                }
                es * ei * xi * p + tau * rs * ri
            }
        }
    }
}

fn lookup(specs: &[ParamSpec], name: &str) -> Result<usize> {
    specs
        .iter()
        .position(|s| s.name == name)
        .ok_or_else(|| invalid(format!("unknown parameter '{name}'")))
}

/// Weighted linear least squares of `y` on the given basis columns.
fn linear_fit(cols: &[Vec<f64>], y: &[f64], w: &[f64]) -> Option<(Vec<f64>, f64)> {
    let (n, m) = (y.len(), cols.len());
    let norms: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300)).collect();
    let a = DMatrix::from_fn(n, m, |r, c| w[r].sqrt() * cols[c][r] / norms[c]);
    let b = DVector::from_iterator(n, (0..n).map(|r| w[r].sqrt() * y[r]));
    let sol = a.clone().svd(true, true).solve(&b, 1e-13).ok()?;
    let sse = (a * &sol - b).norm_squared();
    let coef: Vec<f64> = (0..m).map(|c| sol[c] / norms[c]).collect();
    coef.iter().all(|v| v.is_finite()).then_some((coef, sse))
}

/// Starting points from a profile over the noise shape: for a fixed
/// exponent (or saturation scale) both singles channels are linear in the
/// pair slope, the noise amplitude and the background, and the accidental-
/// subtracted coincidences fix the product of both efficiencies and `xi`.
fn starts(kind: RateModelKind, data: &[SweepRecord], tau: f64, alpha: Option<f64>) -> Vec<Vec<f64>> {
    let p: Vec<f64> = data.iter().map(|r| r.power).collect();
    let rs: Vec<f64> = data.iter().map(|r| r.r_s()).collect();
    let ri: Vec<f64> = data.iter().map(|r| r.r_i()).collect();
    let ws: Vec<f64> = data.iter().map(|r| r.duration / r.r_s().max(1.0 / r.duration)).collect();
    let wi: Vec<f64> = data.iter().map(|r| r.duration / r.r_i().max(1.0 / r.duration)).collect();
    let p_max = p.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let p_min = p.iter().copied().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min).min(p_max);

    // slope of the true coincidences through the origin
    let (mut num, mut den) = (0.0, 0.0);
    for r in data {
        let w = r.duration / r.r_c().max(1.0 / r.duration);
        num += w * (r.r_c() - tau * r.r_s() * r.r_i()) * r.power;
        den += w * r.power * r.power;
    }
    let k_true = num / den.max(f64::MIN_POSITIVE);

    let shapes: Vec<f64> = match kind {
        RateModelKind::NoNoise => vec![f64::NAN],
        RateModelKind::PowerLaw => match alpha {
            Some(a) => vec![a],
            None => (1..=60).map(|j| 0.05 * j as f64).collect(),
        },
        RateModelKind::Saturation => {
            let (lo, hi) = ((0.01 / p_max).ln(), (100.0 / p_min).ln());
            (0..60).map(|j| (lo + (hi - lo) * j as f64 / 59.0).exp()).collect()
        }
    };
    let shape_col = |s: f64| -> Vec<f64> {
        match kind {
            RateModelKind::NoNoise => Vec::new(),
            RateModelKind::PowerLaw => p.iter().map(|&x| if x > 0.0 { x.powf(s) } else { 0.0 }).collect(),
            RateModelKind::Saturation => p.iter().map(|&x| x / (1.0 + s * x)).collect(),
        }
    };
    let ones = vec![1.0; p.len()];

    // second family: no pair term in the singles, for sources whose pair
    // slope sits at the boundary
    let mut profile: Vec<Profiled> = Vec::new();
    let mut null_profile: Vec<Profiled> = Vec::new();
    for (&s, with_pairs) in shapes.iter().flat_map(|s| [(s, true), (s, false)]) {
        if !with_pairs && kind == RateModelKind::NoNoise {
            continue;
        }
        let mut cols = vec![ones.clone()];
        if with_pairs {
            cols.insert(0, p.clone());
        }
        if kind != RateModelKind::NoNoise {
            cols.push(shape_col(s));
        }
        let (Some((mut cs, es)), Some((mut ci, ei))) = (linear_fit(&cols, &rs, &ws), linear_fit(&cols, &ri, &wi))
        else {
            continue;
        };
        if !with_pairs {
            cs.insert(0, 0.0);
            ci.insert(0, 0.0);
        }
        let slope_s = cs[0].max(1e-9 * rs[rs.len() - 1] / p_max);
        let slope_i = ci[0].max(1e-9 * ri[ri.len() - 1] / p_max);
        let bg = (0.5 * (cs[1] + ci[1])).max(1e-3);
        let k = k_true.max(1e-12 * slope_s * slope_i);
        // slope_s = eta_s xi, slope_i = eta_i xi, k = eta_s eta_i xi
        let eta_s = (k / slope_i).clamp(1e-9, 0.99);
        let eta_i = (k / slope_s).clamp(1e-9, 0.99);
        let xi = slope_s / eta_s;
        let mut theta = vec![xi, eta_s, eta_i, bg, tau];
        match kind {
            RateModelKind::NoNoise => {}
            RateModelKind::PowerLaw => {
                let g = (0.5 * (cs[2] / eta_s + ci[2] / eta_i)).max(1e-6 * xi);
                theta.extend([g, s]);
            }
            RateModelKind::Saturation => {
                let g = (0.5 * (cs[2] / eta_s + ci[2] / eta_i)).max(1e-6 * xi);
                theta.extend([g, s / g]);
            }
        }
        // a negative noise amplitude or pair slope cannot be represented
        let feasible = (kind == RateModelKind::NoNoise || (cs[2] > 0.0 && ci[2] > 0.0)) && cs[0] >= 0.0 && ci[0] >= 0.0;
        if with_pairs { &mut profile } else { &mut null_profile }.push(Profiled { score: es + ei, feasible, theta });
    }
    if profile.is_empty() {
        let mut theta = vec![1.0, 0.01, 0.01, 1.0, tau];
        if kind != RateModelKind::NoNoise {
            theta.extend([1.0, 1.0]);
        }
        return vec![theta];
    }
    let mut out = profile_minima(&profile, 3);
    out.extend(profile_minima(&null_profile, 1));
    out
}

struct Profiled {
    score: f64,
    feasible: bool,
    theta: Vec<f64>,
}

/// Local minima of a profile, best first. Infeasible shapes only count when
/// nothing else is available.
fn profile_minima(profile: &[Profiled], keep: usize) -> Vec<Vec<f64>> {
    let score = |j: usize| {
        if profile[j].feasible || profile.iter().all(|p| !p.feasible) {
            profile[j].score
        } else {
            f64::INFINITY
        }
    };
    let mut minima: Vec<usize> = (0..profile.len())
        .filter(|&j| score(j).is_finite())
        .filter(|&j| {
            let left = j == 0 || score(j - 1) >= score(j);
            let right = j + 1 == profile.len() || score(j + 1) >= score(j);
            left && right
        })
        .collect();
    minima.sort_by(|a, b| score(*a).total_cmp(&score(*b)));
    minima.truncate(keep);
    minima.into_iter().map(|j| profile[j].theta.clone()).collect()
}

/// Weighted fit of the coupled singles/coincidence model to a power sweep.
///
/// Residuals of both singles rates and the coincidence rate at every power
/// are fitted jointly. `converged` is false when the iteration cap was hit.
pub fn fit_rate_model(problem: &FitProblem) -> Result<FitResult> {
    let data = &problem.data;
    let mut specs = specs(problem.model);
    let mut fixed: Vec<Option<f64>> = vec![None; specs.len()];

    let mut powers: Vec<f64> = data.iter().map(|r| r.power).collect();
    for r in data {
        if !(r.power >= 0.0) || !(r.duration > 0.0) {
            return Err(invalid(format!("record at {} uW has invalid power or duration", r.power)));
        }
    }
    powers.sort_by(f64::total_cmp);
    if powers.windows(2).any(|w| w[0] == w[1]) {
        return Err(invalid("powers must be distinct"));
    }

    let mut tau = data.first().map(|r| r.tau_c);
    for (name, value) in &problem.fixed {
        let idx = lookup(&specs, name)?;
        fixed[idx] = Some(*value);
        if idx == TAU_C {
            tau = Some(*value);
        }
    }
    let tau = match tau {
        Some(t) if problem.fixed.iter().any(|(n, _)| n == "tau_c") => t,
        Some(t) if data.iter().all(|r| r.tau_c == t) => t,
        _ => return Err(invalid("records disagree on the coincidence window; fix tau_c explicitly")),
    };
    if !(tau > 0.0) {
        return Err(invalid("tau_c must be positive"));
    }
    fixed[TAU_C] = Some(tau);
    for (name, lo, hi) in &problem.bounds {
        if !(lo < hi) {
            return Err(invalid(format!("bound for '{name}' is empty")));
        }
        let idx = lookup(&specs, name)?;
        specs[idx].bound = Bound::Interval(*lo, *hi);
    }

    let n_free = fixed.iter().filter(|f| f.is_none()).count();
    if data.len() < n_free + 1 || data.len() < 2 {
        return Err(Error::InsufficientData {
            points: data.len(),
            params: n_free,
        });
    }

    let alpha = (problem.model == RateModelKind::PowerLaw).then(|| fixed[N2]).flatten();
    let mut starts = starts(problem.model, data, tau, alpha);
    for (name, value) in &problem.guesses {
        let idx = lookup(&specs, name)?;
        for s in &mut starts {
            s[idx] = *value;
        }
    }

    let mut obs = Vec::with_capacity(3 * data.len());
    for r in data {
        obs.push(Obs { observable: "singles_s", x: r.power, y: r.r_s(), scale: r.duration });
        obs.push(Obs { observable: "singles_i", x: r.power, y: r.r_i(), scale: r.duration });
        obs.push(Obs { observable: "coincidences", x: r.power, y: r.r_c(), scale: r.duration });
    }
    let model = RateModel {
        kind: problem.model,
        powers: data.iter().map(|r| r.power).collect(),
    };
    Fit {
        label: problem.model.name().to_string(),
        model: &model,
        specs: &specs,
        fixed: &fixed,
        obs: &obs,
        rule: problem.weighting.rule(),
        lm: problem.lm,
    }
    .solve(&starts)
}

/// Expected-value sweep: the closed-form rates times each duration, rounded
/// to whole counts. Useful as noise-free fixture data.
pub fn expected_sweep(params: &SourceParams, powers: &[f64], duration: f64) -> Vec<SweepRecord> {
    powers
        .iter()
        .map(|&p| SweepRecord {
            power: p,
            duration,
            gate: None,
            tau_c: params.tau_c,
            singles_s: (crate::model::singles_rate(params, Channel::Signal, p) * duration).round() as u64,
            singles_i: (crate::model::singles_rate(params, Channel::Idler, p) * duration).round() as u64,
            coincidences: (crate::model::coincidence_rate(params, p) * duration).round() as u64,
        })
        .collect()
}
