//! Global statistics combining per-point p-values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default truncation point of the truncated product.
pub const DEFAULT_TAU: f64 = 0.05;

/// Statistic used to combine the per-point p-values. Small values are
/// evidence against the global null for both.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Combiner {
    /// Truncated product of the p-values at or below `tau`.
    Tpm { tau: f64 },
    /// Arithmetic mean of the p-values.
    Qbar,
}

impl Combiner {
    pub const fn tpm() -> Self {
        Self::Tpm { tau: DEFAULT_TAU }
    }

    pub fn statistic(&self, pvals: &[f64]) -> Result<f64> {
        match *self {
            Self::Tpm { tau } => tpm_statistic(pvals, tau),
            Self::Qbar => qbar_statistic(pvals),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Tpm { .. } => "tpm",
            Self::Qbar => "qbar",
        }
    }
}

fn check_pvalues(pvals: &[f64]) -> Result<()> {
    if pvals.is_empty() {
        return Err(Error::Empty);
    }
    match pvals.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        Some(&p) => Err(Error::PValueOutOfRange(p)),
        None => Ok(()),
    }
}

/// `prod p_k^{I(p_k <= tau)}`, accumulated in log space.
pub fn tpm_statistic(pvals: &[f64], tau: f64) -> Result<f64> {
    check_pvalues(pvals)?;
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::InvalidParameter(format!("tau {tau} not in (0, 1]")));
    }
    let mut log_w = 0.0;
    for &p in pvals.iter().filter(|&&p| p <= tau) {
        if p == 0.0 {
            return Ok(0.0);
        }
        log_w += p.ln();
    }
    Ok(log_w.exp())
}

pub fn qbar_statistic(pvals: &[f64]) -> Result<f64> {
    check_pvalues(pvals)?;
    Ok(pvals.iter().sum::<f64>() / pvals.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn tpm_examples() {
        assert_eq!(tpm_statistic(&[0.2, 0.3, 0.9], 0.05).unwrap(), 1.0);
        assert_relative_eq!(tpm_statistic(&[0.01, 0.04, 0.5], 0.05).unwrap(), 0.0004, epsilon = 1e-15);
        assert_relative_eq!(tpm_statistic(&[0.2, 0.5, 0.1], 1.0).unwrap(), 0.01, epsilon = 1e-15);
        assert_eq!(tpm_statistic(&[0.0, 0.3], 0.05).unwrap(), 0.0);
        assert!(tpm_statistic(&[0.1], 0.0).is_err());
        assert!(tpm_statistic(&[0.1], 1.5).is_err());
        assert_eq!(tpm_statistic(&[], 0.05), Err(Error::Empty));
    }

    #[test]
    fn qbar_examples() {
        assert_eq!(qbar_statistic(&[0.05]).unwrap(), 0.05);
        assert_eq!(qbar_statistic(&[0.0, 1.0]).unwrap(), 0.5);
        assert_relative_eq!(qbar_statistic(&[0.01, 0.04, 0.5]).unwrap(), 0.55 / 3.0, epsilon = 1e-15);
        assert_eq!(qbar_statistic(&[0.3, -0.1]), Err(Error::PValueOutOfRange(-0.1)));
    }

    #[test]
    fn combiner_dispatch() {
        let p = [0.01, 0.04, 0.5];
        assert_eq!(Combiner::tpm().statistic(&p).unwrap(), tpm_statistic(&p, 0.05).unwrap());
        assert_eq!(Combiner::Qbar.statistic(&p).unwrap(), qbar_statistic(&p).unwrap());
        assert_eq!(Combiner::Qbar.label(), "qbar");
    }
}
