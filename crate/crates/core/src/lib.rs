//! Robust heteroscedastic ANCOVA for two independent groups and two
//! covariates.
//!
//! Regression surfaces are compared at covariate points chosen by projection
//! depth. Method M1 tests each point with Yuen's test and controls the
//! familywise error rate with Hochberg's procedure. Method M2 tests the
//! global hypothesis of no difference over the deepest half of the group-1
//! covariate points by combining the per-point p-values, either as a
//! truncated product or as their mean, with critical values calibrated by
//! simulation under normality.

pub mod ancova;
pub mod calibrate;
pub mod combine;
pub mod depth;
pub mod error;
pub mod gh;
pub mod rng;
pub mod robust;
pub mod sim;

pub use ancova::{
    difference_surface, m2_point_tests, method_m1, pointwise_tests, select_points_m1, select_points_m2,
    AncovaConfig, ContourRule, GroupData, M1Point, PointTest, SurfaceRow,
};
pub use calibrate::{calibrate, calibrate_many, method_m2, CalibrationKey, CalibrationTable, GlobalResult};
pub use combine::{qbar_statistic, tpm_statistic, Combiner};
pub use depth::{DepthReport, OutlierRule, PointCloud};
pub use error::{Error, Result};
pub use robust::{TrimConfig, YuenResult};
