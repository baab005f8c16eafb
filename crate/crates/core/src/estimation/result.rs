use nalgebra::DMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct ParamEstimate {
    pub name: String,
    pub unit: String,
    pub value: f64,
    /// Zero for fixed parameters.
    pub stderr: f64,
    /// Two-sided t-test against zero; `None` for fixed parameters.
    pub p_value: Option<f64>,
    pub fixed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub observable: String,
    /// Abscissa of the observation (pump power or photon energy).
    pub x: f64,
    pub observed: f64,
    pub fitted: f64,
    pub weight: f64,
}

impl Residual {
    pub fn raw(&self) -> f64 {
        self.observed - self.fitted
    }

    pub fn normalized(&self) -> f64 {
        self.raw() * self.weight.sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservableStats {
    pub name: String,
    pub points: usize,
    pub r_squared: f64,
    /// Runs-test p-value of the residual signs ordered by abscissa.
    pub runs_p: f64,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: String,
    /// Every parameter of the model, fixed ones included, in model order.
    pub params: Vec<ParamEstimate>,
    /// Covariance of the free parameters, in the order of [`FitResult::free_names`].
    pub covariance: DMatrix<f64>,
    /// Smallest R² over the fitted observables.
    pub r_squared: f64,
    pub observables: Vec<ObservableStats>,
    /// Ordered by observable, then abscissa.
    pub residuals: Vec<Residual>,
    pub chi2: f64,
    pub dof: usize,
    pub converged: bool,
    pub iterations: usize,
}

impl FitResult {
    pub fn param(&self, name: &str) -> Option<&ParamEstimate> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.param(name).map(|p| p.value)
    }

    pub fn stderr(&self, name: &str) -> Option<f64> {
        self.param(name).map(|p| p.stderr)
    }

    pub fn free_names(&self) -> Vec<&str> {
        self.params.iter().filter(|p| !p.fixed).map(|p| p.name.as_str()).collect()
    }

    /// Runs test pooled over the observables, each ordered by abscissa.
    pub fn runs_p(&self) -> f64 {
        let groups: Vec<Vec<f64>> = self
            .observables
            .iter()
            .map(|o| self.residuals.iter().filter(|r| r.observable == o.name).map(Residual::raw).collect())
            .collect();
        super::goodness::pooled_runs_test(&groups)
    }

    /// `1 − χ² / SS_tot` with the fit weights, each observable centred on its
    /// own weighted mean. Unlike the raw per-observable R² this is not
    /// dominated by whichever observable has the most scatter.
    pub fn weighted_r_squared(&self) -> f64 {
        let (mut ss_res, mut ss_tot) = (0.0, 0.0);
        for o in &self.observables {
            let rs: Vec<&Residual> = self.residuals.iter().filter(|r| r.observable == o.name).collect();
            let w: f64 = rs.iter().map(|r| r.weight).sum();
            if !(w > 0.0) {
                continue;
            }
            let mean = rs.iter().map(|r| r.weight * r.observed).sum::<f64>() / w;
            ss_res += rs.iter().map(|r| r.weight * r.raw().powi(2)).sum::<f64>();
            ss_tot += rs.iter().map(|r| r.weight * (r.observed - mean).powi(2)).sum::<f64>();
        }
        if ss_tot == 0.0 {
            return if ss_res == 0.0 { 1.0 } else { f64::NEG_INFINITY };
        }
        1.0 - ss_res / ss_tot
    }

    /// Free parameters whose p-value exceeds `threshold`.
    pub fn weak_params(&self, threshold: f64) -> Vec<&str> {
        self.params
            .iter()
            .filter(|p| p.p_value.is_some_and(|v| v > threshold))
            .map(|p| p.name.as_str())
            .collect()
    }
}
