//! Pointwise comparison of two regression surfaces at empirically chosen
//! covariate points, and the familywise-controlled method built on it.
//!
//! For a design point `x`, each group's neighborhood is the set of its
//! covariate rows within robust Mahalanobis distance `span` of `x`, measured
//! with that group's skipped covariance. The groups are comparable at `x`
//! when both neighborhoods hold at least `min_neighbors` rows; Yuen's test is
//! then applied to the outcomes in the two neighborhoods.

use serde::{Deserialize, Serialize};

use crate::depth::{
    projection_distances, skipped_covariance_with, Mahalanobis, OutlierRule, PointCloud,
};
use crate::error::{Error, Result};
use crate::robust::{hochberg, trimmed_mean, yuen_test, TrimConfig};

/// Smallest neighborhood size at which a group takes part in a comparison.
pub const MIN_COMPARABLE: usize = 12;

/// Default neighborhood radius in robust Mahalanobis units.
pub const DEFAULT_SPAN: f64 = 1.0;

/// Number of covariates handled by the ANCOVA procedures.
pub const COVARIATES: usize = 2;

/// One group's outcomes and the matching `n x 2` covariate rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupData {
    y: Vec<f64>,
    x: PointCloud,
}

impl GroupData {
    pub fn new(y: Vec<f64>, x: PointCloud) -> Result<Self> {
        if x.dim() != COVARIATES {
            return Err(Error::DimensionMismatch { expected: COVARIATES, got: x.dim() });
        }
        if y.len() != x.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { y, x })
    }

    /// Builds a group from `(y, x1, x2)` records.
    pub fn from_records(records: &[(f64, f64, f64)]) -> Result<Self> {
        let y = records.iter().map(|r| r.0).collect();
        let x = records.iter().flat_map(|r| [r.1, r.2]).collect();
        Self::new(y, PointCloud::new(COVARIATES, x)?)
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self) -> &PointCloud {
        &self.x
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Same covariates, outcomes replaced by `f(y)`.
    pub fn map_y(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.y.iter().map(|&v| f(v)).collect(), self.x.clone())
    }

    fn require_comparable_size(&self, min: usize) -> Result<()> {
        if self.len() < min {
            return Err(Error::GroupTooSmallForComparability { n: self.len(), min });
        }
        Ok(())
    }
}

/// How the `.5` depth contour is turned into design points for method M1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ContourRule {
    /// Vertices of the convex polygon enclosing the deepest half of the points.
    #[default]
    HullOfDeepestHalf,
    /// Points whose depth is closest to the median depth, ties included.
    MedianDepthBand,
}

/// Tuning shared by every procedure in this module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AncovaConfig {
    pub trim: TrimConfig,
    pub span: f64,
    pub min_neighbors: usize,
    pub outlier_rule: OutlierRule,
    pub contour: ContourRule,
}

impl Default for AncovaConfig {
    fn default() -> Self {
        Self {
            trim: TrimConfig::default(),
            span: DEFAULT_SPAN,
            min_neighbors: MIN_COMPARABLE,
            outlier_rule: OutlierRule::default(),
            contour: ContourRule::default(),
        }
    }
}

impl AncovaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.span > 0.0 && self.span.is_finite()) {
            return Err(Error::InvalidParameter(format!("span {} must be positive", self.span)));
        }
        if self.min_neighbors < 2 {
            return Err(Error::InvalidParameter("min_neighbors must be at least 2".into()));
        }
        Ok(())
    }
}

/// Result of comparing the groups at one design point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointTest {
    pub point: [f64; 2],
    pub n1: usize,
    pub n2: usize,
    pub est1: Option<f64>,
    pub est2: Option<f64>,
    /// `est1 - est2`.
    pub diff: Option<f64>,
    pub t_stat: Option<f64>,
    pub df: Option<f64>,
    pub p_value: Option<f64>,
    pub comparable: bool,
}

/// Row indices (into group 1) of the M1 design points: the deepest point
/// followed by the points on the `.5` depth contour.
pub fn select_points_m1(g1: &GroupData, rule: ContourRule) -> Result<Vec<usize>> {
    let report = projection_distances(g1.x())?;
    let depth = &report.depth;
    let deepest = report.deepest();
    let mut med = depth.clone();
    med.sort_by(f64::total_cmp);
    let median = crate::robust::median_of_sorted(&med);

    let contour: Vec<usize> = match rule {
        ContourRule::HullOfDeepestHalf => {
            let central: Vec<usize> = (0..depth.len()).filter(|&i| depth[i] >= median).collect();
            convex_hull(g1.x(), &central)
        }
        ContourRule::MedianDepthBand => {
            let gap = |i: usize| (depth[i] - median).abs();
            let best = (0..depth.len()).map(gap).fold(f64::INFINITY, f64::min);
            (0..depth.len()).filter(|&i| gap(i) == best).collect()
        }
    };

    let mut picked = vec![deepest];
    for i in contour {
        if !picked.iter().any(|&j| g1.x().row(j) == g1.x().row(i)) {
            picked.push(i);
        }
    }
    Ok(picked)
}

/// Counter-clockwise hull vertices (collinear points dropped) of the
/// selected rows, via Andrew's monotone chain.
fn convex_hull(cloud: &PointCloud, idx: &[usize]) -> Vec<usize> {
    let mut pts: Vec<usize> = idx.to_vec();
    let at = |i: usize| (cloud.row(i)[0], cloud.row(i)[1]);
    pts.sort_by(|&a, &b| {
        let (pa, pb) = (at(a), at(b));
        pa.0.total_cmp(&pb.0).then(pa.1.total_cmp(&pb.1)).then(a.cmp(&b))
    });
    pts.dedup_by(|a, b| at(*a) == at(*b));
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: usize, a: usize, b: usize| {
        let (o, a, b) = (at(o), at(a), at(b));
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<usize> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &usize>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Row indices (into group 1) of the deepest half of the group-1 covariate
/// points, ordered by decreasing depth with ties broken by row index.
pub fn select_points_m2(g1: &GroupData) -> Result<Vec<usize>> {
    if g1.len() < 4 {
        return Err(Error::TooFew { needed: 4, got: g1.len() });
    }
    let report = projection_distances(g1.x())?;
    let mut order: Vec<usize> = (0..g1.len()).collect();
    order.sort_by(|&a, &b| report.depth[b].total_cmp(&report.depth[a]).then(a.cmp(&b)));
    order.truncate(g1.len().div_ceil(2));
    Ok(order)
}

/// Per-group neighborhood machinery, built once per group.
struct GroupMetric<'a> {
    group: &'a GroupData,
    metric: Mahalanobis,
}

impl<'a> GroupMetric<'a> {
    fn new(group: &'a GroupData, cfg: &AncovaConfig) -> Result<Self> {
        let cov = skipped_covariance_with(group.x(), cfg.outlier_rule)?;
        Ok(Self { group, metric: Mahalanobis::new(&cov)? })
    }

    fn outcomes_near(&self, x: &[f64], span: f64) -> Vec<f64> {
        self.metric
            .neighborhood(x, self.group.x(), span)
            .indices
            .into_iter()
            .map(|i| self.group.y()[i])
            .collect()
    }
}

/// Compares the groups at every design point.
pub fn pointwise_tests(
    g1: &GroupData,
    g2: &GroupData,
    points: &PointCloud,
    cfg: &AncovaConfig,
) -> Result<Vec<PointTest>> {
    cfg.validate()?;
    if points.dim() != COVARIATES {
        return Err(Error::DimensionMismatch { expected: COVARIATES, got: points.dim() });
    }
    let m1 = GroupMetric::new(g1, cfg)?;
    let m2 = GroupMetric::new(g2, cfg)?;
    points
        .rows()
        .map(|x| {
            let y1 = m1.outcomes_near(x, cfg.span);
            let y2 = m2.outcomes_near(x, cfg.span);
            let est = |ys: &[f64]| if ys.is_empty() { Ok(None) } else { trimmed_mean(ys, cfg.trim).map(Some) };
            let (est1, est2) = (est(&y1)?, est(&y2)?);
            let comparable = y1.len() >= cfg.min_neighbors && y2.len() >= cfg.min_neighbors;
            let yuen = if comparable {
                match yuen_test(&y1, &y2, cfg.trim) {
                    Ok(r) => Some(r),
                    Err(Error::ZeroWinsorizedVariance) => None,
                    Err(e) => return Err(e),
                }
            } else {
                None
            };
            Ok(PointTest {
                point: [x[0], x[1]],
                n1: y1.len(),
                n2: y2.len(),
                est1,
                est2,
                diff: est1.zip(est2).map(|(a, b)| a - b),
                t_stat: yuen.map(|r| r.t_stat),
                df: yuen.map(|r| r.df),
                p_value: yuen.map(|r| r.p_value),
                comparable,
            })
        })
        .collect()
}

/// P-values of the points where a test was actually carried out.
pub fn tested_pvalues(tests: &[PointTest]) -> Vec<f64> {
    tests.iter().filter_map(|t| t.p_value).collect()
}

/// A design point of method M1 with its Hochberg decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct M1Point {
    pub test: PointTest,
    pub reject: bool,
}

/// Method M1: Yuen tests at the deepest point and the `.5` depth contour of
/// group 1, with Hochberg's familywise control over the tested points.
pub fn method_m1(g1: &GroupData, g2: &GroupData, cfg: &AncovaConfig, alpha: f64) -> Result<Vec<M1Point>> {
    g1.require_comparable_size(cfg.min_neighbors)?;
    g2.require_comparable_size(cfg.min_neighbors)?;
    let idx = select_points_m1(g1, cfg.contour)?;
    let tests = pointwise_tests(g1, g2, &g1.x().select(&idx), cfg)?;
    let pvals = tested_pvalues(&tests);
    if pvals.is_empty() {
        return Err(Error::NoComparablePoints);
    }
    let mut decisions = hochberg(&pvals, alpha)?.into_iter();
    Ok(tests
        .into_iter()
        .map(|test| {
            let reject = test.p_value.is_some() && decisions.next().unwrap_or(false);
            M1Point { test, reject }
        })
        .collect())
}

/// The per-point test outcomes behind the M2 global test.
pub fn m2_point_tests(g1: &GroupData, g2: &GroupData, cfg: &AncovaConfig) -> Result<Vec<PointTest>> {
    g1.require_comparable_size(cfg.min_neighbors)?;
    g2.require_comparable_size(cfg.min_neighbors)?;
    let idx = select_points_m2(g1)?;
    pointwise_tests(g1, g2, &g1.x().select(&idx), cfg)
}

/// One row of the estimated-difference / p-value surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRow {
    pub x1: f64,
    pub x2: f64,
    pub n1: usize,
    pub n2: usize,
    pub est1: Option<f64>,
    pub est2: Option<f64>,
    pub diff: Option<f64>,
    pub p_value: Option<f64>,
    pub comparable: bool,
}

pub fn difference_surface(point_tests: &[PointTest]) -> Vec<SurfaceRow> {
    point_tests
        .iter()
        .map(|t| SurfaceRow {
            x1: t.point[0],
            x2: t.point[1],
            n1: t.n1,
            n2: t.n2,
            est1: t.est1,
            est2: t.est2,
            diff: t.diff,
            p_value: t.p_value,
            comparable: t.comparable,
        })
        .collect()
}
