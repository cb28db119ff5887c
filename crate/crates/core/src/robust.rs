//! Univariate robust estimators: trimmed means, Winsorizing, Yuen's
//! two-sample test for trimmed means, Hochberg's step-up procedure and the
//! ideal fourths.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

/// Trimming proportion applied to each tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrimConfig {
    gamma: f64,
}

impl TrimConfig {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&gamma) {
            return Err(Error::InvalidParameter(format!(
                "trimming proportion {gamma} not in [0, 0.5)"
            )));
        }
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Number of observations trimmed from each tail, `floor(gamma * n)`.
    pub fn trim_count(&self, n: usize) -> usize {
        (self.gamma * n as f64).floor() as usize
    }

    /// Observations left after trimming both tails.
    pub fn retained(&self, n: usize) -> usize {
        n.saturating_sub(2 * self.trim_count(n))
    }
}

impl Default for TrimConfig {
    fn default() -> Self {
        Self { gamma: 0.2 }
    }
}

/// Outcome of Yuen's test. `t_stat` is signed as group 1 minus group 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YuenResult {
    pub t_stat: f64,
    pub df: f64,
    pub p_value: f64,
    pub trimmed_mean_1: f64,
    pub trimmed_mean_2: f64,
    pub d1: f64,
    pub d2: f64,
}

fn sorted_copy(ys: &[f64]) -> Vec<f64> {
    let mut v = ys.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn check_trimmable(n: usize, cfg: TrimConfig) -> Result<usize> {
    if n == 0 {
        return Err(Error::Empty);
    }
    let g = cfg.trim_count(n);
    if n < 2 * g + 1 {
        return Err(Error::InsufficientAfterTrim { n, g });
    }
    Ok(g)
}

pub fn trimmed_mean(ys: &[f64], cfg: TrimConfig) -> Result<f64> {
    let g = check_trimmable(ys.len(), cfg)?;
    let sorted = sorted_copy(ys);
    let kept = &sorted[g..sorted.len() - g];
    Ok(kept.iter().sum::<f64>() / kept.len() as f64)
}

/// Winsorized sample; output order matches input order.
pub fn winsorize(ys: &[f64], cfg: TrimConfig) -> Result<Vec<f64>> {
    let g = check_trimmable(ys.len(), cfg)?;
    let sorted = sorted_copy(ys);
    let lo = sorted[g];
    let hi = sorted[sorted.len() - 1 - g];
    Ok(ys.iter().map(|&y| y.clamp(lo, hi)).collect())
}

pub fn winsorized_variance(ys: &[f64], cfg: TrimConfig) -> Result<f64> {
    if ys.len() < 2 {
        return Err(Error::TooFew { needed: 2, got: ys.len() });
    }
    let w = winsorize(ys, cfg)?;
    Ok(sample_variance(&w))
}

/// Sample variance with divisor `n - 1`. Caller guarantees `n >= 2`.
pub(crate) fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Usual sample median; even lengths average the two central order statistics.
pub fn median(xs: &[f64]) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::Empty);
    }
    let s = sorted_copy(xs);
    Ok(median_of_sorted(&s))
}

pub(crate) fn median_of_sorted(s: &[f64]) -> f64 {
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Yuen's heteroscedastic test comparing the trimmed means of two samples.
pub fn yuen_test(y1: &[f64], y2: &[f64], cfg: TrimConfig) -> Result<YuenResult> {
    let (m1, d1, h1) = yuen_parts(y1, cfg)?;
    let (m2, d2, h2) = yuen_parts(y2, cfg)?;
    let dsum = d1 + d2;
    if dsum <= 0.0 {
        return Err(Error::ZeroWinsorizedVariance);
    }
    let t_stat = (m1 - m2) / dsum.sqrt();
    let df = dsum * dsum / (d1 * d1 / (h1 - 1.0) + d2 * d2 / (h2 - 1.0));
    let p_value = student_t_sf(t_stat, df)?;
    Ok(YuenResult {
        t_stat,
        df,
        p_value,
        trimmed_mean_1: m1,
        trimmed_mean_2: m2,
        d1,
        d2,
    })
}

/// Trimmed mean, squared standard error term `d` and `h` for one group.
fn yuen_parts(ys: &[f64], cfg: TrimConfig) -> Result<(f64, f64, f64)> {
    let n = ys.len();
    let h = cfg.retained(n);
    if h < 2 {
        return Err(Error::GroupTooSmall { h });
    }
    let mean = trimmed_mean(ys, cfg)?;
    let sw2 = winsorized_variance(ys, cfg)?;
    let h = h as f64;
    let d = (n as f64 - 1.0) * sw2 / (h * (h - 1.0));
    Ok((mean, d, h))
}

/// Two-sided tail probability `P(|T_df| >= |t|)` of Student's t.
pub fn student_t_sf(t: f64, df: f64) -> Result<f64> {
    if !(df > 0.0) || df.is_infinite() {
        return Err(Error::InvalidParameter(format!("degrees of freedom {df}")));
    }
    if t.is_nan() {
        return Err(Error::NonFinite);
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    // P(|T| >= |t|) = I_x(df/2, 1/2) with x = df / (df + t^2).
    let x = df / (df + t * t);
    Ok(beta_reg(0.5 * df, 0.5, x).clamp(0.0, 1.0))
}

/// Hochberg's step-up procedure. Returns rejection decisions in input order.
pub fn hochberg(pvals: &[f64], alpha: f64) -> Result<Vec<bool>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha {alpha} not in (0, 1)")));
    }
    if let Some(&p) = pvals.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::PValueOutOfRange(p));
    }
    let k_total = pvals.len();
    let mut order: Vec<usize> = (0..k_total).collect();
    order.sort_by(|&a, &b| pvals[a].total_cmp(&pvals[b]));

    // Largest 1-based rank k with p_(k) <= alpha / (K - k + 1).
    let cutoff = (1..=k_total)
        .rev()
        .find(|&k| pvals[order[k - 1]] <= alpha / (k_total - k + 1) as f64)
        .unwrap_or(0);

    let mut reject = vec![false; k_total];
    for &idx in &order[..cutoff] {
        reject[idx] = true;
    }
    Ok(reject)
}

/// Lower and upper ideal fourths (Frigge, Hoaglin and Iglewicz).
pub fn ideal_fourths(xs: &[f64]) -> Result<(f64, f64)> {
    if xs.len() < 3 {
        return Err(Error::TooFew { needed: 3, got: xs.len() });
    }
    let s = sorted_copy(xs);
    Ok(ideal_fourths_sorted(&s))
}

/// Ideal fourths of an already ascending slice with at least 3 entries.
pub(crate) fn ideal_fourths_sorted(s: &[f64]) -> (f64, f64) {
    let n = s.len();
    let pos = n as f64 / 4.0 + 5.0 / 12.0;
    let j = pos.floor() as usize;
    let h = pos - j as f64;
    // 1-based order statistics x_(j), x_(j+1); upper end mirrors with k = n - j + 1.
    let q1 = (1.0 - h) * s[j - 1] + h * s[j];
    let k = n - j + 1;
    let q2 = (1.0 - h) * s[k - 1] + h * s[k - 2];
    (q1, q2)
}
