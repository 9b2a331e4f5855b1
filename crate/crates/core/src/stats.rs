//! Two-group comparison of entropy values: Welch's t-test, a Welch
//! t-based confidence interval for the difference in means, and Cohen's d
//! with the pooled standard deviation.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyStats {
    pub mean_correct: f64,
    pub mean_incorrect: f64,
    pub n_correct: usize,
    pub n_incorrect: usize,
    /// Signed so that a positive value means incorrect answers carry more
    /// entropy.
    pub t_statistic: f64,
    pub degrees_of_freedom: f64,
    /// Two-sided.
    pub p_value: f64,
    pub cohens_d: f64,
    /// 95% interval for `mean_incorrect - mean_correct`.
    pub ci95: (f64, f64),
}

impl EntropyStats {
    pub fn gap(&self) -> f64 {
        self.mean_incorrect - self.mean_correct
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
fn variance(xs: &[f64], mean: f64) -> f64 {
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn compare_groups(correct: &[f64], incorrect: &[f64]) -> Result<EntropyStats, EvalError> {
    if correct.len() < 2 || incorrect.len() < 2 {
        return Err(EvalError::InsufficientGroups {
            correct: correct.len(),
            incorrect: incorrect.len(),
        });
    }
    if correct.iter().chain(incorrect).any(|x| !x.is_finite()) {
        return Err(EvalError::Other("entropy values must be finite".into()));
    }
    let (n1, n2) = (correct.len() as f64, incorrect.len() as f64);
    let (m1, m2) = (mean(correct), mean(incorrect));
    let (v1, v2) = (variance(correct, m1), variance(incorrect, m2));
    let gap = m2 - m1;

    let (a, b) = (v1 / n1, v2 / n2);
    let se = (a + b).sqrt();
    let pooled_sd = (((n1 - 1.0) * v1 + (n2 - 1.0) * v2) / (n1 + n2 - 2.0)).sqrt();

    let ratio = |num: f64, den: f64| {
        if den > 0.0 {
            num / den
        } else if num == 0.0 {
            0.0
        } else {
            num.signum() * f64::INFINITY
        }
    };
    let t = ratio(gap, se);
    let d = ratio(gap, pooled_sd);

    let df = if se > 0.0 {
        (a + b).powi(2) / (a * a / (n1 - 1.0) + b * b / (n2 - 1.0))
    } else {
        n1 + n2 - 2.0
    };
    let dist = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| EvalError::Other(format!("t distribution with df={df}: {e}")))?;
    let p = if t.is_infinite() {
        0.0
    } else {
        (2.0 * dist.sf(t.abs())).min(1.0)
    };
    let half_width = dist.inverse_cdf(0.975) * se;

    Ok(EntropyStats {
        mean_correct: m1,
        mean_incorrect: m2,
        n_correct: correct.len(),
        n_incorrect: incorrect.len(),
        t_statistic: t,
        degrees_of_freedom: df,
        p_value: p,
        cohens_d: d,
        ci95: (gap - half_width, gap + half_width),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_groups() {
        let s = compare_groups(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.t_statistic, 0.0);
        assert_eq!(s.cohens_d, 0.0);
        assert!((s.p_value - 1.0).abs() < 1e-12);
        assert!(s.ci95.0 < 0.0 && s.ci95.1 > 0.0);
    }

    #[test]
    fn constant_groups() {
        let s = compare_groups(&[1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert_eq!((s.t_statistic, s.cohens_d, s.p_value), (0.0, 0.0, 1.0));
        let s = compare_groups(&[1.0, 1.0], &[2.0, 2.0]).unwrap();
        assert_eq!(s.t_statistic, f64::INFINITY);
        assert_eq!(s.p_value, 0.0);
        assert_eq!(s.ci95, (1.0, 1.0));
    }

    #[test]
    fn group_size_checked() {
        assert!(matches!(
            compare_groups(&[1.0], &[1.0, 2.0]),
            Err(EvalError::InsufficientGroups { correct: 1, incorrect: 2 })
        ));
    }
}
