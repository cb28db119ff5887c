//! The g-and-h family: transforms of a standard normal with skewness
//! controlled by `g` and tail heaviness by `h`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GHParams {
    pub g: f64,
    pub h: f64,
}

impl GHParams {
    pub fn new(g: f64, h: f64) -> Result<Self> {
        if !(g >= 0.0 && h >= 0.0) || !g.is_finite() || !h.is_finite() {
            return Err(Error::InvalidParameter(format!("g-and-h needs g, h >= 0 (got g = {g}, h = {h})")));
        }
        Ok(Self { g, h })
    }

    pub const fn normal() -> Self {
        Self { g: 0.0, h: 0.0 }
    }
}

pub fn gh_transform(z: f64, params: GHParams) -> f64 {
    let tail = (params.h * z * z / 2.0).exp();
    if params.g > 0.0 {
        (params.g * z).exp_m1() / params.g * tail
    } else {
        z * tail
    }
}

pub fn gh_sample<R: Rng + ?Sized>(params: GHParams, n: usize, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| gh_transform(rng.sample(StandardNormal), params))
        .collect()
}

/// `E[V^k]` under the standard normal base measure; requires `k h < 1`.
fn raw_moment(k: u32, params: GHParams) -> f64 {
    let GHParams { g, h } = params;
    let shrink = 1.0 - k as f64 * h;
    if g == 0.0 {
        if k % 2 == 1 {
            return 0.0;
        }
        // E[Z^k exp(k h Z^2 / 2)] = (k - 1)!! (1 - k h)^{-(k + 1) / 2}
        let double_fact: f64 = (1..k).step_by(2).map(f64::from).product();
        return double_fact * shrink.powf(-(k as f64 + 1.0) / 2.0);
    }
    // Expand (exp(gZ) - 1)^k and use E[exp(aZ + bZ^2/2)] = exp(a^2 / (2(1-b))) / sqrt(1-b).
    let mut binom = 1.0;
    let mut sum = 0.0;
    for i in 0..=k {
        let a = (k - i) as f64 * g;
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * binom * (a * a / (2.0 * shrink)).exp();
        binom = binom * (k - i) as f64 / (i + 1) as f64;
    }
    sum / (g.powi(k as i32) * shrink.sqrt())
}

/// Population skewness and kurtosis (not excess) of the g-and-h distribution.
pub fn gh_moments(params: GHParams) -> Result<(f64, f64)> {
    if params.h >= 0.25 {
        return Err(Error::MomentUndefined(params.h));
    }
    let [m1, m2, m3, m4] = [1, 2, 3, 4].map(|k| raw_moment(k, params));
    let var = m2 - m1 * m1;
    let c3 = m3 - 3.0 * m1 * m2 + 2.0 * m1.powi(3);
    let c4 = m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1.powi(4);
    Ok((c3 / var.powf(1.5), c4 / (var * var)))
}
