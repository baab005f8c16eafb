//! Levenberg–Marquardt minimisation of `½·Σ r_k(u)²`.

use nalgebra::{DMatrix, DVector};

pub trait LeastSquares {
    fn n_params(&self) -> usize;
    fn n_residuals(&self) -> usize;
    /// Residual vector at `u`.
    fn residuals(&self, u: &[f64]) -> DVector<f64>;
    /// Jacobian `∂r_k/∂u_j` at `u`.
    fn jacobian(&self, u: &[f64]) -> DMatrix<f64>;
}

#[derive(Debug, Clone, Copy)]
pub struct LmConfig {
    pub max_iterations: usize,
    /// Relative step tolerance.
    pub xtol: f64,
    /// Relative cost-reduction tolerance.
    pub ftol: f64,
    /// Gradient tolerance (max |Jᵀr| scaled by the cost).
    pub gtol: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig {
            max_iterations: 500,
            xtol: 1e-10,
            ftol: 1e-15,
            gtol: 1e-14,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    /// `Σ r_k²` at `params`.
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn sum_sq(r: &DVector<f64>) -> f64 {
    r.iter().map(|x| x * x).sum()
}

pub fn minimize<P: LeastSquares + ?Sized>(problem: &P, start: &[f64], cfg: &LmConfig) -> LmOutcome {
    let n = problem.n_params();
    let mut u = DVector::from_column_slice(start);
    let mut r = problem.residuals(u.as_slice());
    let mut cost = sum_sq(&r);
    if !cost.is_finite() {
        return LmOutcome {
            params: start.to_vec(),
            cost,
            iterations: 0,
            converged: false,
        };
    }
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    'outer: while iterations < cfg.max_iterations {
        iterations += 1;
        let j = problem.jacobian(u.as_slice());
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &r;
        if g.amax() <= cfg.gtol * cost.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
        // Marquardt scaling with a floor so that flat directions stay damped
        let diag_max = jtj.diagonal().amax().max(f64::MIN_POSITIVE);
        let diag: Vec<f64> = (0..n).map(|k| jtj[(k, k)].max(1e-12 * diag_max)).collect();

        loop {
            let mut a = jtj.clone();
            for (k, d) in diag.iter().enumerate() {
                a[(k, k)] += lambda * d;
            }
            let step = match a.cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => {
                    lambda *= 10.0;
                    if lambda > 1e16 {
                        break 'outer;
                    }
                    continue;
                }
            };
            let trial = &u + &step;
            let r_trial = problem.residuals(trial.as_slice());
            let cost_trial = sum_sq(&r_trial);
            // gain ratio against the linearised model
            let predicted = -(2.0 * g.dot(&step) + (&j * &step).norm_squared());
            let actual = cost - cost_trial;
            if cost_trial.is_finite() && actual > 0.0 {
                let rho = if predicted > 0.0 { actual / predicted } else { 1.0 };
                let small_step = step.norm() <= cfg.xtol * (u.norm() + cfg.xtol);
                let small_gain = actual <= cfg.ftol * cost;
                u = trial;
                r = r_trial;
                cost = cost_trial;
                lambda *= if rho > 0.75 {
                    1.0 / 3.0
                } else if rho < 0.25 {
                    2.0
                } else {
                    1.0
                };
                lambda = lambda.max(1e-15);
                if small_step || small_gain {
                    converged = true;
                    break 'outer;
                }
                break;
            }
            if step.norm() <= cfg.xtol * (u.norm() + cfg.xtol) {
                converged = true;
                break 'outer;
            }
            lambda *= 4.0;
            if lambda > 1e16 {
                // no descent direction left at machine precision
                converged = true;
                break 'outer;
            }
        }
    }

    LmOutcome {
        params: u.iter().copied().collect(),
        cost,
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rosenbrock;

    impl LeastSquares for Rosenbrock {
        fn n_params(&self) -> usize {
            2
        }
        fn n_residuals(&self) -> usize {
            2
        }
        fn residuals(&self, u: &[f64]) -> DVector<f64> {
            DVector::from_vec(vec![10.0 * (u[1] - u[0] * u[0]), 1.0 - u[0]])
        }
        fn jacobian(&self, u: &[f64]) -> DMatrix<f64> {
            DMatrix::from_row_slice(2, 2, &[-20.0 * u[0], 10.0, -1.0, 0.0])
        }
    }

    struct Exponential {
        t: Vec<f64>,
        y: Vec<f64>,
    }

    impl LeastSquares for Exponential {
        fn n_params(&self) -> usize {
            2
        }
        fn n_residuals(&self) -> usize {
            self.t.len()
        }
        fn residuals(&self, u: &[f64]) -> DVector<f64> {
            DVector::from_iterator(
                self.t.len(),
                self.t.iter().zip(&self.y).map(|(t, y)| u[0] * (-u[1] * t).exp() - y),
            )
        }
        fn jacobian(&self, u: &[f64]) -> DMatrix<f64> {
            let mut j = DMatrix::zeros(self.t.len(), 2);
            for (k, t) in self.t.iter().enumerate() {
                let e = (-u[1] * t).exp();
                j[(k, 0)] = e;
                j[(k, 1)] = -u[0] * t * e;
            }
            j
        }
    }

    #[test]
    fn solves_rosenbrock() {
        let out = minimize(&Rosenbrock, &[-1.2, 1.0], &LmConfig::default());
        assert!(out.converged);
        assert!((out.params[0] - 1.0).abs() < 1e-8 && (out.params[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn recovers_exponential_decay() {
        let t: Vec<f64> = (0..20).map(|k| k as f64 * 0.25).collect();
        let y = t.iter().map(|t| 3.0 * (-0.7 * t).exp()).collect();
        let out = minimize(&Exponential { t, y }, &[1.0, 0.1], &LmConfig::default());
        assert!((out.params[0] - 3.0).abs() < 1e-9);
        assert!((out.params[1] - 0.7).abs() < 1e-9);
        assert!(out.cost < 1e-20);
    }

    #[test]
    fn iteration_cap_reports_not_converged() {
        let cfg = LmConfig { max_iterations: 2, ..Default::default() };
        let out = minimize(&Rosenbrock, &[-1.2, 1.0], &cfg);
        assert!(!out.converged);
        assert_eq!(out.iterations, 2);
    }
}
