//! Shared machinery behind every fit: transformed coordinates, fixed
//! parameters, reweighting, multi-start and the final covariance.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::goodness::{r_squared, runs_test, t_test_p_value};
use super::lm::{minimize, LeastSquares, LmConfig};
use super::result::{FitResult, ObservableStats, ParamEstimate, Residual};
use super::transform::Bound;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub(crate) struct ParamSpec {
    pub name: &'static str,
    pub unit: &'static str,
    pub bound: Bound,
}

/// Prediction for observation `k` at natural parameters `theta`; `grad`
/// receives `∂prediction/∂theta` for every parameter.
pub(crate) trait Model {
    fn eval(&self, theta: &[f64], k: usize, grad: &mut [f64]) -> f64;
}

#[derive(Debug, Clone)]
pub(crate) struct Obs {
    pub observable: &'static str,
    pub x: f64,
    pub y: f64,
    /// Counting time for rate data, or the standard error for [`WeightRule::Sigma`].
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum WeightRule {
    /// Variance of a rate is model/duration; refreshed until self-consistent.
    Poisson,
    /// Variance from the observed counts.
    Observed,
    Uniform,
    /// `1/σ²` with `σ` stored in [`Obs::scale`].
    Sigma,
}

impl WeightRule {
    fn weight(self, o: &Obs, model: f64) -> f64 {
        match self {
            WeightRule::Poisson => o.scale / model.max(1.0 / o.scale),
            WeightRule::Observed => o.scale / o.y.max(1.0 / o.scale),
            WeightRule::Uniform => 1.0,
            WeightRule::Sigma => 1.0 / (o.scale * o.scale),
        }
    }
}

const MAX_REWEIGHTS: usize = 50;

struct Weighted<'a, M> {
    model: &'a M,
    specs: &'a [ParamSpec],
    obs: &'a [Obs],
    free: &'a [usize],
    base: &'a [f64],
    sqrt_w: Vec<f64>,
}

impl<M: Model> Weighted<'_, M> {
    fn natural(&self, u: &[f64]) -> Vec<f64> {
        let mut theta = self.base.to_vec();
        for (j, &p) in self.free.iter().enumerate() {
            theta[p] = self.specs[p].bound.to_natural(u[j]);
        }
        theta
    }
}

impl<M: Model> LeastSquares for Weighted<'_, M> {
    fn n_params(&self) -> usize {
        self.free.len()
    }

    fn n_residuals(&self) -> usize {
        self.obs.len()
    }

    fn residuals(&self, u: &[f64]) -> DVector<f64> {
        let theta = self.natural(u);
        let mut grad = vec![0.0; theta.len()];
        DVector::from_iterator(
            self.obs.len(),
            self.obs
                .iter()
                .enumerate()
                .map(|(k, o)| self.sqrt_w[k] * (self.model.eval(&theta, k, &mut grad) - o.y)),
        )
    }

    fn jacobian(&self, u: &[f64]) -> DMatrix<f64> {
        let theta = self.natural(u);
        let mut grad = vec![0.0; theta.len()];
        let mut j = DMatrix::zeros(self.obs.len(), self.free.len());
        for k in 0..self.obs.len() {
            self.model.eval(&theta, k, &mut grad);
            for (c, &p) in self.free.iter().enumerate() {
                j[(k, c)] = self.sqrt_w[k] * grad[p] * self.specs[p].bound.derivative(u[c]);
            }
        }
        j
    }
}

struct Candidate {
    theta: Vec<f64>,
    cost: f64,
    iterations: usize,
    converged: bool,
}

pub(crate) struct Fit<'a, M> {
    pub label: String,
    pub model: &'a M,
    pub specs: &'a [ParamSpec],
    /// `Some(value)` pins a parameter.
    pub fixed: &'a [Option<f64>],
    pub obs: &'a [Obs],
    pub rule: WeightRule,
    pub lm: LmConfig,
}

impl<M: Model> Fit<'_, M> {
    fn free(&self) -> Vec<usize> {
        (0..self.specs.len()).filter(|p| self.fixed[*p].is_none()).collect()
    }

    fn weights(&self, theta: &[f64]) -> Vec<f64> {
        let mut grad = vec![0.0; theta.len()];
        self.obs
            .iter()
            .enumerate()
            .map(|(k, o)| self.rule.weight(o, self.model.eval(theta, k, &mut grad)))
            .collect()
    }

    fn run_start(&self, start: &[f64], free: &[usize]) -> Candidate {
        let mut theta: Vec<f64> = start
            .iter()
            .enumerate()
            .map(|(p, v)| self.fixed[p].unwrap_or_else(|| self.specs[p].bound.clamp_start(*v)))
            .collect();
        let mut u: Vec<f64> = free.iter().map(|&p| self.specs[p].bound.to_internal(theta[p])).collect();
        let mut iterations = 0;
        let mut converged = false;
        let mut cost = f64::INFINITY;
        let rounds = if self.rule == WeightRule::Poisson { MAX_REWEIGHTS } else { 1 };
        for round in 0..rounds {
            let w = self.weights(&theta);
            let problem = Weighted {
                model: self.model,
                specs: self.specs,
                obs: self.obs,
                free,
                base: &theta,
                sqrt_w: w.iter().map(|w| w.sqrt()).collect(),
            };
            let out = minimize(&problem, &u, &self.lm);
            iterations += out.iterations;
            let next = problem.natural(&out.params);
            cost = out.cost;
            let settled = free.iter().all(|&p| {
                let (a, b) = (theta[p], next[p]);
                (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
            });
            theta = next;
            u = out.params;
            converged = out.converged;
            if !cost.is_finite() {
                break;
            }
            if round > 0 && settled {
                break;
            }
            if round + 1 == rounds && rounds > 1 {
                converged = false;
            }
        }
        if self.rule == WeightRule::Poisson {
            // cost under the weights implied by the final estimate
            let w = self.weights(&theta);
            let mut grad = vec![0.0; theta.len()];
            cost = self
                .obs
                .iter()
                .enumerate()
                .map(|(k, o)| w[k] * (self.model.eval(&theta, k, &mut grad) - o.y).powi(2))
                .sum();
        }
        Candidate {
            theta,
            cost,
            iterations,
            converged,
        }
    }

    pub fn solve(&self, starts: &[Vec<f64>]) -> Result<FitResult> {
        let free = self.free();
        if self.obs.len() <= free.len() {
            return Err(Error::InsufficientData {
                points: self.obs.len(),
                params: free.len(),
            });
        }
        let best = starts
            .iter()
            .map(|s| self.run_start(s, &free))
            .filter(|c| c.cost.is_finite() && c.theta.iter().all(|v| v.is_finite()))
            .min_by(|a, b| a.cost.total_cmp(&b.cost))
            .ok_or_else(|| Error::DivergedFit(format!("{}: no start produced a finite objective", self.label)))?;
        self.finish(best, &free)
    }

    fn finish(&self, best: Candidate, free: &[usize]) -> Result<FitResult> {
        let theta = &best.theta;
        let n = self.obs.len();
        let w = self.weights(theta);
        let mut grad = vec![0.0; theta.len()];
        let mut fitted = Vec::with_capacity(n);
        let mut j = DMatrix::zeros(n, free.len());
        for k in 0..n {
            fitted.push(self.model.eval(theta, k, &mut grad));
            let sw = w[k].sqrt();
            for (c, &p) in free.iter().enumerate() {
                j[(k, c)] = sw * grad[p];
            }
        }
        let chi2: f64 = (0..n).map(|k| w[k] * (fitted[k] - self.obs[k].y).powi(2)).sum();
        let dof = n - free.len();
        let fisher = j.transpose() * &j;
        check_identifiable(&fisher, free, self.specs)?;
        let inv = fisher
            .clone()
            .cholesky()
            .map(|c| c.inverse())
            .ok_or_else(|| Error::SingularJacobian {
                params: free.iter().map(|&p| self.specs[p].name.to_string()).collect(),
            })?;
        let covariance = inv * (chi2 / dof as f64);

        let mut col = 0;
        let params = self
            .specs
            .iter()
            .enumerate()
            .map(|(p, spec)| {
                let fixed = self.fixed[p].is_some();
                let (stderr, p_value) = if fixed {
                    (0.0, None)
                } else {
                    let se = covariance[(col, col)].max(0.0).sqrt();
                    col += 1;
                    (se, Some(t_test_p_value(theta[p], se, dof)))
                };
                ParamEstimate {
                    name: spec.name.to_string(),
                    unit: spec.unit.to_string(),
                    value: theta[p],
                    stderr,
                    p_value,
                    fixed,
                }
            })
            .collect();

        let mut names: Vec<&'static str> = Vec::new();
        for o in self.obs {
            if !names.contains(&o.observable) {
                names.push(o.observable);
            }
        }
        let mut residuals = Vec::with_capacity(n);
        let mut observables = Vec::with_capacity(names.len());
        for name in names {
            let mut idx: Vec<usize> = (0..n).filter(|k| self.obs[*k].observable == name).collect();
            idx.sort_by(|a, b| self.obs[*a].x.total_cmp(&self.obs[*b].x));
            let y: Vec<f64> = idx.iter().map(|k| self.obs[*k].y).collect();
            let f: Vec<f64> = idx.iter().map(|k| fitted[*k]).collect();
            let raw: Vec<f64> = y.iter().zip(&f).map(|(y, f)| y - f).collect();
            observables.push(ObservableStats {
                name: name.to_string(),
                points: idx.len(),
                r_squared: r_squared(&y, &f),
                runs_p: runs_test(&raw),
            });
            residuals.extend(idx.iter().map(|&k| Residual {
                observable: name.to_string(),
                x: self.obs[k].x,
                observed: self.obs[k].y,
                fitted: fitted[k],
                weight: w[k],
            }));
        }
        let r2 = observables.iter().map(|o| o.r_squared).fold(f64::INFINITY, f64::min);

        Ok(FitResult {
            model: self.label.clone(),
            params,
            covariance,
            r_squared: r2,
            observables,
            residuals,
            chi2,
            dof,
            converged: best.converged,
            iterations: best.iterations,
        })
    }
}

/// Rejects a Fisher matrix with a (numerically) flat direction and names
/// the parameters spanning it.
fn check_identifiable(fisher: &DMatrix<f64>, free: &[usize], specs: &[ParamSpec]) -> Result<()> {
    let k = free.len();
    let scale: Vec<f64> = (0..k).map(|c| fisher[(c, c)].sqrt()).collect();
    let dead: Vec<String> = (0..k)
        .filter(|c| !(scale[*c] > 0.0) || !scale[*c].is_finite())
        .map(|c| specs[free[c]].name.to_string())
        .collect();
    if !dead.is_empty() {
        return Err(Error::SingularJacobian { params: dead });
    }
    let scaled = DMatrix::from_fn(k, k, |a, b| fisher[(a, b)] / (scale[a] * scale[b]));
    let eig = SymmetricEigen::new(scaled);
    let top = eig.eigenvalues.amax();
    let mut involved = Vec::new();
    for (e, lambda) in eig.eigenvalues.iter().enumerate() {
        if *lambda <= 1e-12 * top {
            for c in 0..k {
                let name = specs[free[c]].name.to_string();
                if eig.eigenvectors[(c, e)].abs() > 0.1 && !involved.contains(&name) {
                    involved.push(name);
                }
            }
        }
    }
    if involved.is_empty() {
        Ok(())
    } else {
        Err(Error::SingularJacobian { params: involved })
    }
}
