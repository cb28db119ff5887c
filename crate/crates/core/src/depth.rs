//! Projection depth of points in a multivariate cloud, projection-type
//! outlier detection, the skipped covariance and robust Mahalanobis
//! neighborhoods.
//!
//! Directions are the residuals `U_i = Z_i - center` of the data points
//! themselves, with the marginal medians as center. Every point is projected
//! onto every direction; the absolute projected lengths along direction `i`
//! are standardized by their ideal-fourth spread and the projection distance
//! of a point is the largest standardized length over all directions.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::robust::{ideal_fourths_sorted, median_of_sorted};

/// An `n x p` matrix of points stored row-major, one point per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    dim: usize,
    data: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim * (data.len() / dim + 1),
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).ok_or(Error::Empty)?;
        let mut data = Vec::with_capacity(dim * rows.len());
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        Self::new(dim, data)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Sub-cloud made of the given rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self { dim: self.dim, data }
    }

    /// Applies `f` to every row.
    pub fn map_rows(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Result<Self> {
        let rows: Vec<Vec<f64>> = self.rows().map(&mut f).collect();
        Self::from_rows(&rows)
    }
}

/// Per-point projection distances and depths of a cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthReport {
    pub center: Vec<f64>,
    pub proj_distance: Vec<f64>,
    pub depth: Vec<f64>,
}

impl DepthReport {
    /// Row index of the deepest point; the first one wins on ties.
    pub fn deepest(&self) -> usize {
        let mut best = 0;
        for (i, &d) in self.depth.iter().enumerate() {
            if d > self.depth[best] {
                best = i;
            }
        }
        best
    }
}

/// Indices into a group's covariate rows that fall within the span.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Neighborhood {
    pub indices: Vec<usize>,
}

impl Neighborhood {
    pub fn size(&self) -> usize {
        self.indices.len()
    }
}

pub fn marginal_medians(cloud: &PointCloud) -> Result<Vec<f64>> {
    if cloud.is_empty() {
        return Err(Error::Empty);
    }
    let n = cloud.len();
    let mut col = Vec::with_capacity(n);
    Ok((0..cloud.dim())
        .map(|k| {
            col.clear();
            col.extend(cloud.rows().map(|r| r[k]));
            col.sort_by(f64::total_cmp);
            median_of_sorted(&col)
        })
        .collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One retained projection direction.
#[derive(Debug, Clone)]
struct Direction {
    /// Row of the cloud whose residual defines the direction.
    row: usize,
    /// The residual `U_i` defining the direction.
    residual: Vec<f64>,
    /// `sqrt(C_i)`, the length of `U_i`.
    norm: f64,
    median: f64,
    spread: f64,
}

impl Direction {
    /// `|| T_ij ||`: absolute length of `u` projected onto this direction.
    fn project(&self, u: &[f64]) -> f64 {
        dot(&self.residual, u).abs() / self.norm
    }
}

/// Center, residuals and the directions that survive the degeneracy checks.
struct Projection {
    center: Vec<f64>,
    residuals: Vec<Vec<f64>>,
    directions: Vec<Direction>,
    /// Absolute projected lengths, one row per retained direction.
    lengths: Vec<Vec<f64>>,
}

impl Projection {
    fn build(cloud: &PointCloud) -> Result<Self> {
        let n = cloud.len();
        if n < 3 {
            return Err(Error::TooFew { needed: 3, got: n });
        }
        let center = marginal_medians(cloud)?;
        let residuals: Vec<Vec<f64>> = cloud
            .rows()
            .map(|r| r.iter().zip(&center).map(|(z, c)| z - c).collect())
            .collect();

        let mut directions = Vec::new();
        let mut lengths = Vec::new();
        let mut sorted = Vec::with_capacity(n);
        for (i, u) in residuals.iter().enumerate() {
            let c = dot(u, u);
            if c <= 0.0 {
                continue;
            }
            let mut dir = Direction { row: i, residual: u.clone(), norm: c.sqrt(), median: 0.0, spread: 0.0 };
            let row: Vec<f64> = residuals.iter().map(|v| dir.project(v)).collect();
            sorted.clear();
            sorted.extend_from_slice(&row);
            sorted.sort_by(f64::total_cmp);
            let (q1, q2) = ideal_fourths_sorted(&sorted);
            let spread = q2 - q1;
            if spread <= 0.0 {
                continue;
            }
            dir.median = median_of_sorted(&sorted);
            dir.spread = spread;
            directions.push(dir);
            lengths.push(row);
        }
        if directions.is_empty() {
            return Err(Error::DegenerateCloud);
        }
        Ok(Self { center, residuals, directions, lengths })
    }

    fn proj_distances(&self) -> Vec<f64> {
        let n = self.residuals.len();
        let mut pd = vec![0.0_f64; n];
        for (dir, row) in self.directions.iter().zip(&self.lengths) {
            for (p, len) in pd.iter_mut().zip(row) {
                *p = p.max(len / dir.spread);
            }
        }
        pd
    }
}

/// Projection distances and depths `1 / (1 + p_d)` of every row.
pub fn projection_distances(cloud: &PointCloud) -> Result<DepthReport> {
    let proj = Projection::build(cloud)?;
    let proj_distance = proj.proj_distances();
    let depth = proj_distance.iter().map(|p| 1.0 / (1.0 + p)).collect();
    Ok(DepthReport { center: proj.center, proj_distance, depth })
}

/// Standardized projected distances `d_ij = D_ij / (q2_i - q1_i)`, one row
/// per retained direction, tagged with the index of the row `i` that defines
/// it.
pub fn standardized_distances(cloud: &PointCloud) -> Result<Vec<(usize, Vec<f64>)>> {
    let proj = Projection::build(cloud)?;
    Ok(proj
        .directions
        .iter()
        .zip(&proj.lengths)
        .map(|(dir, row)| (dir.row, row.iter().map(|len| len / dir.spread).collect()))
        .collect())
}

/// Depth of an arbitrary point, with directions and quartiles taken from the
/// cloud's own rows.
pub fn depth_of_point(x: &[f64], cloud: &PointCloud) -> Result<f64> {
    if x.len() != cloud.dim() {
        return Err(Error::DimensionMismatch { expected: cloud.dim(), got: x.len() });
    }
    let proj = Projection::build(cloud)?;
    let u: Vec<f64> = x.iter().zip(&proj.center).map(|(a, c)| a - c).collect();
    let pd = proj
        .directions
        .iter()
        .map(|d| d.project(&u) / d.spread)
        .fold(0.0_f64, f64::max);
    Ok(1.0 / (1.0 + pd))
}

/// Rule used to flag a point as a multivariate outlier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum OutlierRule {
    /// Boxplot rule along every direction: flag when the projected length
    /// exceeds `median + sqrt(chi2_{.975,p}) * (q2 - q1)`.
    #[default]
    Boxplot,
    /// Flag when `p_d * 1.34898` (interquartile range of the standard normal)
    /// exceeds `sqrt(chi2_{.975,p})`.
    NormalizedDistance,
}

/// Interquartile range of the standard normal distribution.
pub const NORMAL_IQR: f64 = 1.348_979_500_392_163;

/// `sqrt` of the .975 quantile of the chi-squared distribution with `p` df.
pub fn outlier_cutoff(p: usize) -> f64 {
    ChiSquared::new(p as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975)
        .sqrt()
}

pub fn detect_outliers(cloud: &PointCloud) -> Result<Vec<bool>> {
    detect_outliers_with(cloud, OutlierRule::default())
}

pub fn detect_outliers_with(cloud: &PointCloud, rule: OutlierRule) -> Result<Vec<bool>> {
    let proj = Projection::build(cloud)?;
    let cutoff = outlier_cutoff(cloud.dim());
    let n = cloud.len();
    Ok(match rule {
        OutlierRule::Boxplot => {
            let mut flags = vec![false; n];
            for (dir, row) in proj.directions.iter().zip(&proj.lengths) {
                let limit = dir.median + cutoff * dir.spread;
                for (f, &len) in flags.iter_mut().zip(row) {
                    *f |= len > limit;
                }
            }
            flags
        }
        OutlierRule::NormalizedDistance => proj
            .proj_distances()
            .into_iter()
            .map(|pd| pd * NORMAL_IQR > cutoff)
            .collect(),
    })
}

/// Sample covariance (divisor `n - 1`) of all rows.
pub fn covariance(cloud: &PointCloud) -> Result<DMatrix<f64>> {
    let n = cloud.len();
    let p = cloud.dim();
    if n < 2 {
        return Err(Error::TooFew { needed: 2, got: n });
    }
    let mut mean = vec![0.0; p];
    for r in cloud.rows() {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = DMatrix::zeros(p, p);
    for r in cloud.rows() {
        for a in 0..p {
            for b in a..p {
                cov[(a, b)] += (r[a] - mean[a]) * (r[b] - mean[b]);
            }
        }
    }
    for a in 0..p {
        for b in a..p {
            let v = cov[(a, b)] / (n as f64 - 1.0);
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    Ok(cov)
}

/// Covariance of the rows left after removing projection-flagged outliers.
pub fn skipped_covariance(cloud: &PointCloud) -> Result<DMatrix<f64>> {
    skipped_covariance_with(cloud, OutlierRule::default())
}

pub fn skipped_covariance_with(cloud: &PointCloud, rule: OutlierRule) -> Result<DMatrix<f64>> {
    let flags = detect_outliers_with(cloud, rule)?;
    let keep: Vec<usize> = (0..cloud.len()).filter(|&i| !flags[i]).collect();
    if keep.len() < cloud.dim() + 1 {
        return Err(Error::TooFew { needed: cloud.dim() + 1, got: keep.len() });
    }
    covariance(&cloud.select(&keep))
}

/// Mahalanobis metric induced by a covariance matrix.
#[derive(Debug, Clone)]
pub struct Mahalanobis {
    precision: DMatrix<f64>,
}

impl Mahalanobis {
    pub fn new(cov: &DMatrix<f64>) -> Result<Self> {
        let p = cov.nrows();
        if p == 0 || cov.ncols() != p {
            return Err(Error::DimensionMismatch { expected: p, got: cov.ncols() });
        }
        if cov.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let chol = cov.clone().cholesky().ok_or(Error::SingularCovariance)?;
        let scale = cov.diagonal().max();
        let min_pivot = chol.l_dirty().diagonal().iter().fold(f64::INFINITY, |m, v| m.min(v * v));
        if !(scale > 0.0) || min_pivot <= 1e-12 * scale {
            return Err(Error::SingularCovariance);
        }
        Ok(Self { precision: chol.inverse() })
    }

    pub fn dim(&self) -> usize {
        self.precision.nrows()
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let diff = DVector::from_iterator(a.len(), a.iter().zip(b).map(|(x, y)| x - y));
        let q = diff.dot(&(&self.precision * &diff));
        q.max(0.0).sqrt()
    }

    /// Rows of `cloud` within distance `span` of `x` (closed ball).
    pub fn neighborhood(&self, x: &[f64], cloud: &PointCloud, span: f64) -> Neighborhood {
        let indices = cloud
            .rows()
            .enumerate()
            .filter(|(_, r)| self.distance(r, x) <= span)
            .map(|(i, _)| i)
            .collect();
        Neighborhood { indices }
    }
}

pub fn neighborhood(
    x: &[f64],
    cloud: &PointCloud,
    cov: &DMatrix<f64>,
    span: f64,
) -> Result<Neighborhood> {
    if !(span > 0.0) {
        return Err(Error::InvalidParameter(format!("span {span} must be positive")));
    }
    if x.len() != cloud.dim() || cov.nrows() != cloud.dim() {
        return Err(Error::DimensionMismatch { expected: cloud.dim(), got: x.len() });
    }
    Ok(Mahalanobis::new(cov)?.neighborhood(x, cloud, span))
}
