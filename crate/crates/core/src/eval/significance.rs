//! Two-sample t-tests with two-tailed p-values.
//!
//! Welch's unequal-variance test is the default; a paired test over
//! per-item differences is available for matched designs.

use serde::Serialize;
use statrs::function::beta::beta_reg;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TestError {
    #[error("each sample needs at least 2 values (got {0} and {1})")]
    TooSmall(usize, usize),
    #[error("paired samples differ in length ({0} vs {1})")]
    Unpaired(usize, usize),
    #[error("both samples have zero variance but different means; p is 0")]
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Two-tailed p-value of Student's t distribution: `I_{df/(df+t^2)}(df/2, 1/2)`.
pub fn two_tailed_p(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    beta_reg(df / 2.0, 0.5, df / (df + t * t))
}

pub fn welch(a: &[f64], b: &[f64]) -> Result<TTest, TestError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(TestError::TooSmall(a.len(), b.len()));
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (sa, sb) = (va / a.len() as f64, vb / b.len() as f64);
    let se2 = sa + sb;
    if se2 == 0.0 {
        return if ma == mb {
            Ok(TTest {
                t: 0.0,
                df: (a.len() + b.len() - 2) as f64,
                p_value: 1.0,
            })
        } else {
            Err(TestError::Degenerate)
        };
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (a.len() - 1) as f64 + sb * sb / (b.len() - 1) as f64);
    Ok(TTest {
        t,
        df,
        p_value: two_tailed_p(t, df),
    })
}

pub fn paired(a: &[f64], b: &[f64]) -> Result<TTest, TestError> {
    if a.len() != b.len() {
        return Err(TestError::Unpaired(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(TestError::TooSmall(a.len(), b.len()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let (md, vd) = mean_var(&d);
    let df = (d.len() - 1) as f64;
    if vd == 0.0 {
        return if md == 0.0 {
            Ok(TTest { t: 0.0, df, p_value: 1.0 })
        } else {
            Err(TestError::Degenerate)
        };
    }
    let t = md / (vd / d.len() as f64).sqrt();
    Ok(TTest {
        t,
        df,
        p_value: two_tailed_p(t, df),
    })
}

pub fn significance_test(a: &[f64], b: &[f64], paired_design: bool) -> Result<f64, TestError> {
    let r = if paired_design { paired(a, b)? } else { welch(a, b)? };
    Ok(r.p_value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples() {
        let a = [3.0, 4.0, 5.0, 4.0];
        assert_eq!(welch(&a, &a).unwrap().p_value, 1.0);
        assert_eq!(paired(&a, &a).unwrap().p_value, 1.0);
        assert_eq!(welch(&[2.0, 2.0], &[2.0, 2.0]).unwrap().p_value, 1.0);
    }

    #[test]
    fn extreme_separation() {
        let a = [1.0, 1.001, 0.999, 1.0];
        let b = [5.0, 5.001, 4.999, 5.0];
        let p = welch(&a, &b).unwrap().p_value;
        assert!(p > 0.0 && p < 0.001, "{p}");
    }

    #[test]
    fn errors() {
        assert_eq!(welch(&[1.0], &[1.0, 2.0]), Err(TestError::TooSmall(1, 2)));
        assert_eq!(welch(&[1.0, 1.0], &[2.0, 2.0]), Err(TestError::Degenerate));
        assert_eq!(paired(&[1.0, 2.0], &[1.0]), Err(TestError::Unpaired(2, 1)));
    }

    #[test]
    fn symmetric() {
        let a = [3.1, 4.2, 3.9, 4.4, 3.0];
        let b = [4.0, 4.8, 4.1, 4.9];
        assert_eq!(welch(&a, &b).unwrap().p_value, welch(&b, &a).unwrap().p_value);
    }
}
