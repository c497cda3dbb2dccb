//! Univariate least squares on z-scored variables.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandardizedFit {
    /// Slope of z(y) on z(x); equals the Pearson correlation.
    pub slope: f64,
    pub std_error: f64,
    pub t_stat: f64,
    /// Two-sided p-value of the slope t-statistic with `n - 2` degrees of
    /// freedom.
    pub p_value: f64,
    pub n: usize,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample z-scores (`n - 1` denominator).
pub fn z_scores(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.len() < 2 {
        return Err(Error::InsufficientData("z-scores need >= 2 values".into()));
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    if var <= 1e-14 * m.abs().max(1.0).powi(2) {
        return Err(Error::ZeroVariance);
    }
    let sd = var.sqrt();
    Ok(xs.iter().map(|x| (x - m) / sd).collect())
}

/// Regresses z(y) on z(x) by ordinary least squares.
pub fn standardized_ols(x: &[f64], y: &[f64]) -> Result<StandardizedFit> {
    if x.len() != y.len() {
        return Err(Error::InvalidConfig(format!(
            "regressor has {} values, outcome has {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!("regression needs >= 3 observations, got {n}")));
    }
    let zx = z_scores(x)?;
    let zy = z_scores(y)?;
    let sxx: f64 = zx.iter().map(|v| v * v).sum();
    let sxy: f64 = zx.iter().zip(&zy).map(|(a, b)| a * b).sum();
    let slope = sxy / sxx;
    // z-scored data have zero mean, so the intercept is zero.
    let rss: f64 = zx.iter().zip(&zy).map(|(a, b)| (b - slope * a).powi(2)).sum();
    let df = (n - 2) as f64;
    let std_error = (rss / df / sxx).sqrt();
    let (t_stat, p_value) = if std_error == 0.0 {
        (f64::INFINITY.copysign(slope), 0.0)
    } else {
        let t = slope / std_error;
        let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
        (t, (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0))
    };
    Ok(StandardizedFit {
        slope,
        std_error,
        t_stat,
        p_value,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_line_has_unit_slope() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let up: Vec<f64> = x.iter().map(|v| 3.0 * v + 1.0).collect();
        let down: Vec<f64> = x.iter().map(|v| -0.5 * v).collect();
        let f = standardized_ols(&x, &up).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-12);
        assert!(f.p_value < 1e-6);
        let f = standardized_ols(&x, &down).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-12);
    }

    #[test]
    fn slope_is_pearson_correlation() {
        let x = [0.3, 1.2, 2.2, 2.9, 4.4, 5.1, 6.0];
        let y = [1.0, 0.7, 1.9, 1.4, 2.8, 2.1, 3.3];
        let f = standardized_ols(&x, &y).unwrap();
        // direct formula
        let (mx, my) = (mean(&x), mean(&y));
        let cov: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
        assert!((f.slope - cov / (vx * vy).sqrt()).abs() < 1e-12);
        // t = r sqrt(n-2) / sqrt(1-r^2)
        let r = f.slope;
        assert!((f.t_stat - r * 5f64.sqrt() / (1.0 - r * r).sqrt()).abs() < 1e-9);
        assert!((0.0..=1.0).contains(&f.p_value));
    }

    #[test]
    fn p_value_matches_reference() {
        // scipy.stats.pearsonr([1,2,3,4,5], [1,3,2,5,4]) = (0.8, 0.10409)
        let f = standardized_ols(&[1.0, 2.0, 3.0, 4.0, 5.0], &[1.0, 3.0, 2.0, 5.0, 4.0]).unwrap();
        assert!((f.slope - 0.8).abs() < 1e-12);
        assert!((f.p_value - 0.10409).abs() < 1e-4, "{}", f.p_value);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(standardized_ols(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(Error::ZeroVariance)));
        assert!(matches!(standardized_ols(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]), Err(Error::ZeroVariance)));
        assert!(standardized_ols(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(standardized_ols(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
    }
}
