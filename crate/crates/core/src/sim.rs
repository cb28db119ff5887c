//! Simulation studies of Type I error and power for the global tests and
//! method M1.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ancova::{method_m1, AncovaConfig, GroupData, COVARIATES};
use crate::calibrate::{calibrate_many, method_m2, CalibrationTable};
use crate::combine::{Combiner, DEFAULT_TAU};
use crate::depth::PointCloud;
use crate::error::{Error, Result};
use crate::gh::{gh_sample, GHParams};
use crate::rng::{stream, DOMAIN_SIMULATION};

/// Association between outcome and covariates, shared by both groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Association {
    /// No association.
    S1,
    /// Linear with unit slope.
    S2,
    /// Quadratic.
    S3,
}

/// Which covariates enter the S2/S3 surfaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurfaceForm {
    /// `x1` (S2) or `x1^2` (S3).
    #[default]
    FirstCovariate,
    /// `x1 + x2` (S2) or `x1^2 + x2^2` (S3).
    AllCovariates,
}

impl Association {
    pub fn surface(&self, form: SurfaceForm, x: &[f64]) -> f64 {
        let used = match form {
            SurfaceForm::FirstCovariate => &x[..1],
            SurfaceForm::AllCovariates => x,
        };
        match self {
            Self::S1 => 0.0,
            Self::S2 => used.iter().sum(),
            Self::S3 => used.iter().map(|v| v * v).sum(),
        }
    }

    pub fn number(&self) -> u8 {
        match self {
            Self::S1 => 1,
            Self::S2 => 2,
            Self::S3 => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimCondition {
    pub gh: GHParams,
    pub assoc: Association,
    pub n1: usize,
    pub n2: usize,
    /// Added to every group-1 outcome.
    pub shift: f64,
    pub cov_correlation: f64,
    pub form: SurfaceForm,
}

impl SimCondition {
    pub fn new(gh: GHParams, assoc: Association, shift: f64) -> Self {
        Self { gh, assoc, n1: 50, n2: 50, shift, cov_correlation: 0.0, form: SurfaceForm::default() }
    }

    fn validate(&self, min: usize) -> Result<()> {
        if self.n1 < min || self.n2 < min {
            return Err(Error::GroupTooSmallForComparability { n: self.n1.min(self.n2), min });
        }
        if !(self.cov_correlation.abs() < 1.0) {
            return Err(Error::InvalidParameter(format!("covariate correlation {}", self.cov_correlation)));
        }
        if !self.shift.is_finite() {
            return Err(Error::NonFinite);
        }
        GHParams::new(self.gh.g, self.gh.h)?;
        Ok(())
    }
}

/// The 12 `(g, h, S)` cells in table order.
pub fn standard_conditions(shift: f64) -> Vec<SimCondition> {
    let mut out = Vec::with_capacity(12);
    for (g, h) in [(0.0, 0.0), (0.0, 0.2), (0.2, 0.0), (0.2, 0.2)] {
        for assoc in [Association::S1, Association::S2, Association::S3] {
            out.push(SimCondition::new(GHParams { g, h }, assoc, shift));
        }
    }
    out
}

fn draw_group<R: Rng + ?Sized>(cond: &SimCondition, n: usize, shift: f64, rng: &mut R) -> Result<GroupData> {
    let rho = cond.cov_correlation;
    let tail = (1.0 - rho * rho).sqrt();
    let mut x = Vec::with_capacity(n * COVARIATES);
    for _ in 0..n {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        x.extend_from_slice(&[z1, rho * z1 + tail * z2]);
    }
    let errors = gh_sample(cond.gh, n, rng);
    let y = x
        .chunks_exact(COVARIATES)
        .zip(errors)
        .map(|(row, e)| cond.assoc.surface(cond.form, row) + e + shift)
        .collect();
    GroupData::new(y, PointCloud::new(COVARIATES, x)?)
}

/// Draws one data set: group 1 then group 2 from the same stream.
pub fn generate_replicate<R: Rng + ?Sized>(cond: &SimCondition, rng: &mut R) -> Result<(GroupData, GroupData)> {
    let g1 = draw_group(cond, cond.n1, cond.shift, rng)?;
    let g2 = draw_group(cond, cond.n2, 0.0, rng)?;
    Ok((g1, g2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudySettings {
    pub reps: usize,
    pub alpha: f64,
    /// Calibration replicates.
    pub calibration_reps: usize,
    pub seed: u64,
    pub tau: f64,
    pub ancova: AncovaConfig,
}

impl Default for StudySettings {
    fn default() -> Self {
        Self {
            reps: 1000,
            alpha: 0.05,
            calibration_reps: 1000,
            seed: 1,
            tau: DEFAULT_TAU,
            ancova: AncovaConfig::default(),
        }
    }
}

/// An estimated rejection rate with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub rejections: usize,
    pub trials: usize,
}

impl Rate {
    pub fn value(&self) -> f64 {
        if self.trials == 0 {
            f64::NAN
        } else {
            self.rejections as f64 / self.trials as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        let r = self.value();
        (r * (1.0 - r) / self.trials as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub condition: SimCondition,
    pub replications: usize,
    pub qbar: Rate,
    pub tpm: Rate,
    pub m1: Rate,
    /// Replicates where no M2 design point was comparable.
    pub skipped: usize,
    /// Replicates where no M1 design point was comparable.
    pub skipped_m1: usize,
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    qbar: usize,
    tpm: usize,
    m1: usize,
    skipped: usize,
    skipped_m1: usize,
}

/// Runs every condition, calibrating once per distinct `(n1, n2)`.
pub fn run_study(conditions: &[SimCondition], settings: &StudySettings) -> Result<Vec<SimReport>> {
    if settings.reps < 100 {
        return Err(Error::InvalidParameter(format!("reps = {} (need at least 100)", settings.reps)));
    }
    let combiners = [Combiner::Tpm { tau: settings.tau }, Combiner::Qbar];
    let cfg = &settings.ancova;
    let mut tables: BTreeMap<(usize, usize), Vec<CalibrationTable>> = BTreeMap::new();

    let mut reports = Vec::with_capacity(conditions.len());
    for (index, cond) in conditions.iter().enumerate() {
        let tag = |e: Error| Error::InCondition { index, source: Box::new(e) };
        cond.validate(cfg.min_neighbors).map_err(tag)?;
        let sizes = (cond.n1, cond.n2);
        if !tables.contains_key(&sizes) {
            let built = calibrate_many(
                cond.n1,
                cond.n2,
                settings.alpha,
                settings.calibration_reps,
                &combiners,
                cfg,
                settings.seed,
            )
            .map_err(tag)?;
            tables.insert(sizes, built);
        }
        let cal = &tables[&sizes];
        let tally = (0..settings.reps)
            .into_par_iter()
            .map(|r| {
                let mut rng = stream(settings.seed, DOMAIN_SIMULATION, index as u64, r as u64);
                replicate_outcome(cond, settings, cal, &mut rng)
            })
            .collect::<Result<Vec<Tally>>>()
            .map_err(tag)?
            .into_iter()
            .fold(Tally::default(), |a, b| Tally {
                qbar: a.qbar + b.qbar,
                tpm: a.tpm + b.tpm,
                m1: a.m1 + b.m1,
                skipped: a.skipped + b.skipped,
                skipped_m1: a.skipped_m1 + b.skipped_m1,
            });
        let m2_trials = settings.reps - tally.skipped;
        reports.push(SimReport {
            condition: *cond,
            replications: settings.reps,
            qbar: Rate { rejections: tally.qbar, trials: m2_trials },
            tpm: Rate { rejections: tally.tpm, trials: m2_trials },
            m1: Rate { rejections: tally.m1, trials: settings.reps - tally.skipped_m1 },
            skipped: tally.skipped,
            skipped_m1: tally.skipped_m1,
        });
    }
    Ok(reports)
}

fn replicate_outcome<R: Rng + ?Sized>(
    cond: &SimCondition,
    settings: &StudySettings,
    tables: &[CalibrationTable],
    rng: &mut R,
) -> Result<Tally> {
    let cfg = &settings.ancova;
    let (g1, g2) = generate_replicate(cond, rng)?;
    let mut tally = Tally::default();
    for table in tables {
        match method_m2(&g1, &g2, cfg, settings.alpha, table.key.combiner, table) {
            Ok(res) => {
                let hit = usize::from(res.reject);
                match table.key.combiner {
                    Combiner::Tpm { .. } => tally.tpm += hit,
                    Combiner::Qbar => tally.qbar += hit,
                }
            }
            Err(Error::NoComparablePoints) => {
                // the same points feed both combiners
                tally.skipped = 1;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    match method_m1(&g1, &g2, cfg, settings.alpha) {
        Ok(points) => tally.m1 = usize::from(points.iter().any(|p| p.reject)),
        Err(Error::NoComparablePoints) => tally.skipped_m1 = 1,
        Err(e) => return Err(e),
    }
    Ok(tally)
}

const CSV_HEADER: &str = "g,h,S,Qbar,TPM,M1,se_Qbar,se_TPM,se_M1,shift,n1,n2,reps,skipped,skipped_m1";

/// Tables laid out like the published ones: rows ordered by `(g, h, S)`.
/// Returns `(csv, aligned_text)`.
pub fn report_tables(reports: &[SimReport]) -> (String, String) {
    let mut sorted: Vec<&SimReport> = reports.iter().collect();
    sorted.sort_by(|a, b| {
        let (ca, cb) = (&a.condition, &b.condition);
        ca.gh.g
            .total_cmp(&cb.gh.g)
            .then(ca.gh.h.total_cmp(&cb.gh.h))
            .then(ca.assoc.cmp(&cb.assoc))
            .then(ca.shift.total_cmp(&cb.shift))
    });

    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    let mut text = format!(
        "{:>4} {:>4} {:>2} {:>7} {:>7} {:>7} {:>6} {:>6} {:>6}\n",
        "g", "h", "S", "Qbar", "TPM", "M1", "se_Q", "se_T", "se_M1"
    );
    for r in sorted {
        let c = &r.condition;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.gh.g,
            c.gh.h,
            c.assoc.number(),
            r.qbar.value(),
            r.tpm.value(),
            r.m1.value(),
            r.qbar.stderr(),
            r.tpm.stderr(),
            r.m1.stderr(),
            c.shift,
            c.n1,
            c.n2,
            r.replications,
            r.skipped,
            r.skipped_m1
        );
        let _ = writeln!(
            text,
            "{:>4.1} {:>4.1} {:>2} {:>7.3} {:>7.3} {:>7.3} {:>6.3} {:>6.3} {:>6.3}",
            c.gh.g,
            c.gh.h,
            c.assoc.number(),
            r.qbar.value(),
            r.tpm.value(),
            r.m1.value(),
            r.qbar.stderr(),
            r.tpm.stderr(),
            r.m1.stderr()
        );
    }
    (csv, text)
}
