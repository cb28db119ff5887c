//! Monte Carlo critical values for the global test (method M2) and the test
//! itself.
//!
//! The null distribution of a combined statistic is approximated by running
//! the full M2 pipeline on data where outcome and both covariates are
//! independent standard normals in each group, `B` times. The critical value
//! is the order statistic of rank `round(alpha * B)`.

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ancova::{m2_point_tests, tested_pvalues, AncovaConfig, GroupData, PointTest, COVARIATES};
use crate::combine::Combiner;
use crate::depth::{OutlierRule, PointCloud};
use crate::error::{Error, Result};
use crate::rng::{stream, Stream, DOMAIN_CALIBRATION};

/// Bumped whenever a change could alter calibrated values.
pub const ALGORITHM_VERSION: &str = "rancova-m2-calibration/1";

/// Redraws allowed per calibration replicate, on average, before giving up.
pub const REDRAW_FACTOR: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationKey {
    pub n1: usize,
    pub n2: usize,
    pub alpha: f64,
    pub replicates: usize,
    pub combiner: Combiner,
    pub seed: u64,
    pub gamma: f64,
    pub span: f64,
    pub min_neighbors: usize,
    pub outlier_rule: OutlierRule,
    pub version: String,
}

impl CalibrationKey {
    pub fn new(n1: usize, n2: usize, alpha: f64, replicates: usize, combiner: Combiner, cfg: &AncovaConfig, seed: u64) -> Self {
        Self {
            n1,
            n2,
            alpha,
            replicates,
            combiner,
            seed,
            gamma: cfg.trim.gamma(),
            span: cfg.span,
            min_neighbors: cfg.min_neighbors,
            outlier_rule: cfg.outlier_rule,
            version: ALGORITHM_VERSION.to_string(),
        }
    }

    /// Whether a table built under this key may serve an analysis with the
    /// given sizes and settings. The seed is not part of the contract.
    fn serves(&self, n1: usize, n2: usize, alpha: f64, combiner: Combiner, cfg: &AncovaConfig) -> bool {
        let wanted = Self::new(n1, n2, alpha, self.replicates, combiner, cfg, self.seed);
        *self == wanted
    }

    /// Short label, unique per key.
    pub fn describe(&self) -> String {
        let comb = match self.combiner {
            Combiner::Tpm { tau } => format!("tpm{tau}"),
            Combiner::Qbar => "qbar".to_string(),
        };
        format!(
            "n{}-{}_a{}_B{}_{}_s{}_g{}_f{}_m{}_{:?}",
            self.n1, self.n2, self.alpha, self.replicates, comb, self.seed, self.gamma, self.span,
            self.min_neighbors, self.outlier_rule
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTable {
    pub key: CalibrationKey,
    /// Simulated null statistics, ascending.
    pub sorted_stats: Vec<f64>,
    pub critical: f64,
    /// Replicates redrawn because no design point was comparable.
    pub redraws: usize,
}

impl CalibrationTable {
    /// 1-based rank `k = round(alpha * B)`, kept within `1..=B`.
    pub fn critical_rank(&self) -> usize {
        critical_rank(self.key.alpha, self.sorted_stats.len())
    }

    /// Fraction of null statistics at or below `observed`.
    pub fn p_value(&self, observed: f64) -> f64 {
        let count = self.sorted_stats.partition_point(|&s| s <= observed);
        count as f64 / self.sorted_stats.len() as f64
    }
}

fn critical_rank(alpha: f64, b: usize) -> usize {
    ((alpha * b as f64).round() as usize).clamp(1, b)
}

/// Draws both groups with independent standard normal outcome and covariates.
pub fn draw_null_groups<R: Rng + ?Sized>(n1: usize, n2: usize, rng: &mut R) -> Result<(GroupData, GroupData)> {
    let mut group = |n: usize| {
        let mut y = Vec::with_capacity(n);
        let mut x = Vec::with_capacity(n * COVARIATES);
        for _ in 0..n {
            y.push(rng.sample::<f64, _>(StandardNormal));
            for _ in 0..COVARIATES {
                x.push(rng.sample::<f64, _>(StandardNormal));
            }
        }
        GroupData::new(y, PointCloud::new(COVARIATES, x)?)
    };
    let g1 = group(n1)?;
    let g2 = group(n2)?;
    Ok((g1, g2))
}

fn check_inputs(n1: usize, n2: usize, alpha: f64, replicates: usize, cfg: &AncovaConfig) -> Result<()> {
    cfg.validate()?;
    for n in [n1, n2] {
        if n < cfg.min_neighbors {
            return Err(Error::GroupTooSmallForComparability { n, min: cfg.min_neighbors });
        }
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha {alpha} not in (0, 1)")));
    }
    if replicates < 100 {
        return Err(Error::InvalidParameter(format!("B = {replicates} (need at least 100)")));
    }
    Ok(())
}

pub fn calibrate(
    n1: usize,
    n2: usize,
    alpha: f64,
    replicates: usize,
    combiner: Combiner,
    cfg: &AncovaConfig,
    seed: u64,
) -> Result<CalibrationTable> {
    let mut tables = calibrate_many(n1, n2, alpha, replicates, &[combiner], cfg, seed)?;
    Ok(tables.remove(0))
}

/// Calibrates several combiners from the same simulated replicates. Each
/// returned table equals what [`calibrate`] gives for that combiner alone.
pub fn calibrate_many(
    n1: usize,
    n2: usize,
    alpha: f64,
    replicates: usize,
    combiners: &[Combiner],
    cfg: &AncovaConfig,
    seed: u64,
) -> Result<Vec<CalibrationTable>> {
    check_inputs(n1, n2, alpha, replicates, cfg)?;
    let limit = REDRAW_FACTOR * replicates;
    let total_redraws = AtomicUsize::new(0);

    let per_rep: Vec<(Vec<f64>, usize)> = (0..replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, DOMAIN_CALIBRATION, n1 as u64 * 1_000_003 + n2 as u64, b as u64);
            null_replicate(n1, n2, combiners, cfg, &mut rng, &total_redraws, limit, replicates)
        })
        .collect::<Result<_>>()?;

    let redraws: usize = per_rep.iter().map(|r| r.1).sum();
    if redraws > limit {
        return Err(Error::CalibrationFailure { limit, b: replicates });
    }
    let k = critical_rank(alpha, replicates);
    Ok(combiners
        .iter()
        .enumerate()
        .map(|(c, &combiner)| {
            let mut stats: Vec<f64> = per_rep.iter().map(|r| r.0[c]).collect();
            stats.sort_by(f64::total_cmp);
            CalibrationTable {
                key: CalibrationKey::new(n1, n2, alpha, replicates, combiner, cfg, seed),
                critical: stats[k - 1],
                sorted_stats: stats,
                redraws,
            }
        })
        .collect())
}

#[allow(clippy::too_many_arguments)]
fn null_replicate(
    n1: usize,
    n2: usize,
    combiners: &[Combiner],
    cfg: &AncovaConfig,
    rng: &mut Stream,
    total_redraws: &AtomicUsize,
    limit: usize,
    replicates: usize,
) -> Result<(Vec<f64>, usize)> {
    let mut redraws = 0;
    loop {
        let (g1, g2) = draw_null_groups(n1, n2, rng)?;
        let pvals = tested_pvalues(&m2_point_tests(&g1, &g2, cfg)?);
        if !pvals.is_empty() {
            let stats = combiners.iter().map(|c| c.statistic(&pvals)).collect::<Result<_>>()?;
            return Ok((stats, redraws));
        }
        redraws += 1;
        if total_redraws.fetch_add(1, Ordering::Relaxed) + 1 > limit {
            return Err(Error::CalibrationFailure { limit, b: replicates });
        }
    }
}

/// Outcome of the global test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalResult {
    pub combiner: Combiner,
    pub observed: f64,
    pub critical: f64,
    pub p_value: f64,
    pub reject: bool,
    /// Number of design points selected before the comparability filter.
    pub k: usize,
    /// Number of design points actually tested.
    pub k_used: usize,
    pub point_tests: Vec<PointTest>,
}

/// Method M2: global test over the deepest half of the group-1 covariate
/// points, combining the per-point Yuen p-values with `combiner`.
pub fn method_m2(
    g1: &GroupData,
    g2: &GroupData,
    cfg: &AncovaConfig,
    alpha: f64,
    combiner: Combiner,
    calib: &CalibrationTable,
) -> Result<GlobalResult> {
    if !calib.key.serves(g1.len(), g2.len(), alpha, combiner, cfg) {
        let requested = CalibrationKey::new(g1.len(), g2.len(), alpha, calib.key.replicates, combiner, cfg, calib.key.seed);
        return Err(Error::CalibrationMismatch {
            table: calib.key.describe(),
            requested: requested.describe(),
        });
    }
    let point_tests = m2_point_tests(g1, g2, cfg)?;
    let pvals = tested_pvalues(&point_tests);
    if pvals.is_empty() {
        return Err(Error::NoComparablePoints);
    }
    let observed = combiner.statistic(&pvals)?;
    Ok(GlobalResult {
        combiner,
        observed,
        critical: calib.critical,
        p_value: calib.p_value(observed),
        reject: observed <= calib.critical,
        k: point_tests.len(),
        k_used: pvals.len(),
        point_tests,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> AncovaConfig {
        AncovaConfig::default()
    }

    #[test]
    fn rank_rounding() {
        assert_eq!(critical_rank(0.05, 4000), 200);
        assert_eq!(critical_rank(0.05, 1000), 50);
        assert_eq!(critical_rank(0.05, 110), 6); // 5.5 rounds away from zero
        assert_eq!(critical_rank(0.001, 100), 1);
    }

    #[test]
    fn calibration_is_deterministic_and_monotone() {
        let a = calibrate(50, 50, 0.05, 120, Combiner::Qbar, &cfg(), 11).unwrap();
        let b = calibrate(50, 50, 0.05, 120, Combiner::Qbar, &cfg(), 11).unwrap();
        assert_eq!(a, b);
        assert!(a.sorted_stats.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(a.critical, a.sorted_stats[5]);
        let c = calibrate(50, 50, 0.10, 120, Combiner::Qbar, &cfg(), 11).unwrap();
        assert!(a.critical <= c.critical);
    }

    #[test]
    fn joint_calibration_matches_single() {
        let both = calibrate_many(50, 50, 0.05, 100, &[Combiner::tpm(), Combiner::Qbar], &cfg(), 3).unwrap();
        let tpm = calibrate(50, 50, 0.05, 100, Combiner::tpm(), &cfg(), 3).unwrap();
        let qbar = calibrate(50, 50, 0.05, 100, Combiner::Qbar, &cfg(), 3).unwrap();
        assert_eq!(both[0], tpm);
        assert_eq!(both[1], qbar);
    }

    #[test]
    fn input_checks() {
        assert!(matches!(
            calibrate(10, 50, 0.05, 100, Combiner::Qbar, &cfg(), 1),
            Err(Error::GroupTooSmallForComparability { .. })
        ));
        assert!(calibrate(50, 50, 0.05, 99, Combiner::Qbar, &cfg(), 1).is_err());
        assert!(calibrate(50, 50, 1.0, 100, Combiner::Qbar, &cfg(), 1).is_err());
    }

    #[test]
    fn never_comparable_fails() {
        let strict = AncovaConfig { min_neighbors: 14, span: 0.05, ..cfg() };
        assert_eq!(
            calibrate(14, 14, 0.05, 100, Combiner::Qbar, &strict, 1),
            Err(Error::CalibrationFailure { limit: 1000, b: 100 })
        );
    }

    #[test]
    fn m2_rejects_large_shift_and_checks_key() {
        let tables = calibrate_many(50, 50, 0.05, 200, &[Combiner::tpm(), Combiner::Qbar], &cfg(), 5).unwrap();
        let mut rng = stream(77, 0, 0, 0);
        let (g1, g2) = draw_null_groups(50, 50, &mut rng).unwrap();
        let g2 = g2.map_y(|y| y + 5.0).unwrap();
        for t in &tables {
            let r = method_m2(&g1, &g2, &cfg(), 0.05, t.key.combiner, t).unwrap();
            assert!(r.reject);
            assert_eq!(r.k, 25);
            assert!(r.k_used <= r.k && r.k_used > 0);
            assert_eq!(r.p_value, 0.0);
        }
        let err = method_m2(&g1, &g2, &cfg(), 0.05, Combiner::Qbar, &tables[0]).unwrap_err();
        assert!(matches!(err, Error::CalibrationMismatch { .. }));
        let (s1, s2) = draw_null_groups(49, 50, &mut rng).unwrap();
        assert!(method_m2(&s1, &s2, &cfg(), 0.05, Combiner::Qbar, &tables[1]).is_err());
    }

    #[test]
    fn decision_and_p_value_agree_with_ranks() {
        let t = calibrate(50, 50, 0.05, 150, Combiner::Qbar, &cfg(), 3).unwrap();
        let k = t.critical_rank();
        let s = &t.sorted_stats;
        let mut probes: Vec<f64> = s.clone();
        probes.extend(s.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        probes.extend([0.0, 1.0]);
        for obs in probes {
            let below = s.iter().filter(|&&v| v < obs).count();
            let at_most = s.iter().filter(|&&v| v <= obs).count();
            assert_eq!(obs <= t.critical, below < k);
            assert_eq!(t.p_value(obs), at_most as f64 / s.len() as f64);
        }
    }
}
