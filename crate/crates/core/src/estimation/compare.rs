//! Ranking of competing fits to the same data.

use super::result::FitResult;

/// Free parameters above this p-value are flagged as weakly determined.
pub const WEAK_P_VALUE: f64 = 0.01;
/// Residual sign structure below this runs-test p-value counts as systematic.
pub const RUNS_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct RankedFit {
    pub model: String,
    /// Smallest raw R² over the observables.
    pub r_squared: f64,
    /// Poisson-weighted R², used for the ordering.
    pub weighted_r_squared: f64,
    pub runs_p: f64,
    pub residuals_random: bool,
    /// Parameters with p-value above [`WEAK_P_VALUE`].
    pub flagged: Vec<String>,
    /// Position in the input list.
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    /// Best first.
    pub ranking: Vec<RankedFit>,
}

impl ComparisonReport {
    pub fn best(&self) -> Option<&RankedFit> {
        self.ranking.first()
    }
}

/// Orders fits by whether their residuals look random, then by weighted R².
pub fn compare_models(fits: &[FitResult]) -> ComparisonReport {
    let mut ranking: Vec<RankedFit> = fits
        .iter()
        .enumerate()
        .map(|(index, f)| {
            let runs_p = f.runs_p();
            RankedFit {
                model: f.model.clone(),
                r_squared: f.r_squared,
                weighted_r_squared: f.weighted_r_squared(),
                runs_p,
                residuals_random: runs_p >= RUNS_LEVEL,
                flagged: f.weak_params(WEAK_P_VALUE).into_iter().map(String::from).collect(),
                index,
            }
        })
        .collect();
    ranking.sort_by(|a, b| {
        b.residuals_random
            .cmp(&a.residuals_random)
            .then(b.weighted_r_squared.total_cmp(&a.weighted_r_squared))
    });
    ComparisonReport { ranking }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::result::{ObservableStats, ParamEstimate, Residual};
    use nalgebra::DMatrix;

    const MIXED: [f64; 15] = [1.0, -1.0, -1.0, 1.0, 1.0, -1.0, 1.0, -1.0, -1.0, 1.0, 1.0, 1.0, -1.0, -1.0, 1.0];

    /// Residuals of size `scale` on a straight line; `blocks` gives them
    /// long runs of one sign.
    fn fake(model: &str, scale: f64, blocks: bool, p_values: &[f64]) -> FitResult {
        let residuals: Vec<Residual> = (0..15)
            .map(|k| {
                let sign = if blocks { if k < 8 { 1.0 } else { -1.0 } } else { MIXED[k] };
                Residual {
                    observable: "y".into(),
                    x: k as f64,
                    observed: k as f64,
                    fitted: k as f64 - scale * sign,
                    weight: 1.0,
                }
            })
            .collect();
        let r2 = crate::estimation::r_squared(
            &residuals.iter().map(|r| r.observed).collect::<Vec<_>>(),
            &residuals.iter().map(|r| r.fitted).collect::<Vec<_>>(),
        );
        FitResult {
            model: model.to_string(),
            params: p_values
                .iter()
                .enumerate()
                .map(|(k, p)| ParamEstimate {
                    name: format!("p{k}"),
                    unit: String::new(),
                    value: 1.0,
                    stderr: 0.1,
                    p_value: Some(*p),
                    fixed: false,
                })
                .collect(),
            covariance: DMatrix::identity(p_values.len(), p_values.len()),
            r_squared: r2,
            observables: vec![ObservableStats {
                name: "y".into(),
                points: 15,
                r_squared: r2,
                runs_p: 0.0,
            }],
            residuals,
            chi2: 1.0,
            dof: 5,
            converged: true,
            iterations: 3,
        }
    }

    #[test]
    fn single_fit_passes_through() {
        let r = compare_models(&[fake("a", 1.0, false, &[0.001])]);
        assert_eq!(r.ranking.len(), 1);
        assert_eq!(r.best().unwrap().model, "a");
    }

    #[test]
    fn flags_only_weak_parameters() {
        let r = compare_models(&[fake("a", 0.5, false, &[0.001, 0.002]), fake("b", 1.0, false, &[0.001, 0.1])]);
        let a = r.ranking.iter().find(|f| f.model == "a").unwrap();
        let b = r.ranking.iter().find(|f| f.model == "b").unwrap();
        assert!(a.flagged.is_empty());
        assert_eq!(b.flagged, vec!["p1".to_string()]);
    }

    #[test]
    fn structured_residuals_rank_last() {
        let r = compare_models(&[fake("tight", 0.1, true, &[0.0]), fake("loose", 2.0, false, &[0.0])]);
        assert!(r.ranking[1].runs_p < RUNS_LEVEL && r.ranking[0].runs_p >= RUNS_LEVEL);
        assert_eq!(r.best().unwrap().model, "loose");
    }

    #[test]
    fn smaller_residuals_rank_first_when_both_look_random() {
        let r = compare_models(&[fake("loose", 2.0, false, &[0.0]), fake("tight", 0.5, false, &[0.0])]);
        assert_eq!(r.best().unwrap().model, "tight");
        assert!(r.ranking[0].weighted_r_squared > r.ranking[1].weighted_r_squared);
    }
}
