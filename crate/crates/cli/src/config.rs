//! Declarative simulation study files (TOML).
//!
//! ```toml
//! reps = 1000
//! calibration_reps = 1000
//! seed = 1
//! suite = "null"          # or "power", or list [[condition]] tables
//!
//! [[condition]]
//! g = 0.2
//! h = 0.2
//! assoc = "S3"
//! shift = 0.5
//! ```

use std::path::Path;

use rancova::ancova::DEFAULT_SPAN;
use rancova::combine::DEFAULT_TAU;
use rancova::gh::GHParams;
use rancova::sim::{standard_conditions, Association, SimCondition, StudySettings, SurfaceForm};
use rancova::{AncovaConfig, TrimConfig};
use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    /// All twelve distribution/association cells with no shift.
    Null,
    /// All twelve cells with a .5 shift in group 1.
    Power,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionSpec {
    pub g: f64,
    pub h: f64,
    pub assoc: Association,
    #[serde(default)]
    pub shift: f64,
    #[serde(default = "default_n")]
    pub n1: usize,
    #[serde(default = "default_n")]
    pub n2: usize,
    #[serde(default)]
    pub correlation: f64,
    #[serde(default)]
    pub form: SurfaceForm,
}

fn default_n() -> usize {
    50
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default = "defaults::reps")]
    pub reps: usize,
    #[serde(default = "defaults::alpha")]
    pub alpha: f64,
    #[serde(default = "defaults::reps")]
    pub calibration_reps: usize,
    #[serde(default = "defaults::seed")]
    pub seed: u64,
    #[serde(default = "defaults::tau")]
    pub tau: f64,
    #[serde(default = "defaults::span")]
    pub span: f64,
    #[serde(default = "defaults::gamma")]
    pub gamma: f64,
    pub suite: Option<Suite>,
    #[serde(default, rename = "condition")]
    pub conditions: Vec<ConditionSpec>,
}

mod defaults {
    pub fn reps() -> usize {
        1000
    }
    pub fn alpha() -> f64 {
        0.05
    }
    pub fn seed() -> u64 {
        1
    }
    pub fn tau() -> f64 {
        super::DEFAULT_TAU
    }
    pub fn span() -> f64 {
        super::DEFAULT_SPAN
    }
    pub fn gamma() -> f64 {
        0.2
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of the `index`-th `[[condition]]` header, for diagnostics.
fn condition_line(text: &str, index: usize) -> usize {
    text.lines()
        .enumerate()
        .filter(|(_, l)| l.trim_start().starts_with("[[condition]]"))
        .nth(index)
        .map_or(1, |(i, _)| i + 1)
}

impl StudyConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            line: e.span().map_or(1, |s| line_of(text, s.start)),
            message: e.message().to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<(Self, Vec<SimCondition>, StudySettings)> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
        let cfg = Self::parse(&text, path)?;
        let (conditions, settings) = cfg.resolve(&text, path)?;
        Ok((cfg, conditions, settings))
    }

    /// Validated conditions and settings; `text` is only used to point
    /// diagnostics at the offending line.
    pub fn resolve(&self, text: &str, path: &Path) -> Result<(Vec<SimCondition>, StudySettings)> {
        let bad = |line: usize, message: String| CliError::Config { path: path.to_path_buf(), line, message };
        let top = |key: &str| {
            text.lines()
                .position(|l| l.trim_start().starts_with(key))
                .map_or(1, |i| i + 1)
        };
        let trim = TrimConfig::new(self.gamma).map_err(|e| bad(top("gamma"), e.to_string()))?;
        let ancova = AncovaConfig { trim, span: self.span, ..AncovaConfig::default() };
        ancova.validate().map_err(|e| bad(top("span"), e.to_string()))?;
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(bad(top("alpha"), format!("alpha {} must lie in (0, 1)", self.alpha)));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(bad(top("tau"), format!("tau {} must lie in (0, 1]", self.tau)));
        }
        if self.calibration_reps == 0 {
            return Err(bad(top("calibration_reps"), "calibration_reps must be positive".into()));
        }

        let mut conditions = match self.suite {
            Some(Suite::Null) => standard_conditions(0.0),
            Some(Suite::Power) => standard_conditions(0.5),
            None => Vec::new(),
        };
        for (i, c) in self.conditions.iter().enumerate() {
            let line = condition_line(text, i);
            let gh = GHParams::new(c.g, c.h).map_err(|e| bad(line, e.to_string()))?;
            if !(c.correlation > -1.0 && c.correlation < 1.0) {
                return Err(bad(line, format!("correlation {} must lie in (-1, 1)", c.correlation)));
            }
            if c.n1 < ancova.min_neighbors || c.n2 < ancova.min_neighbors {
                return Err(bad(line, format!("n1 and n2 must be at least {}", ancova.min_neighbors)));
            }
            if !c.shift.is_finite() {
                return Err(bad(line, "shift must be finite".into()));
            }
            conditions.push(SimCondition {
                n1: c.n1,
                n2: c.n2,
                cov_correlation: c.correlation,
                form: c.form,
                ..SimCondition::new(gh, c.assoc, c.shift)
            });
        }
        if conditions.is_empty() {
            return Err(bad(1, "no conditions: set `suite` or add [[condition]] tables".into()));
        }
        if self.reps < 100 {
            return Err(bad(top("reps"), format!("reps = {} (need at least 100)", self.reps)));
        }
        let settings = StudySettings {
            reps: self.reps,
            alpha: self.alpha,
            calibration_reps: self.calibration_reps,
            seed: self.seed,
            tau: self.tau,
            ancova,
        };
        Ok((conditions, settings))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(text: &str) -> Result<(Vec<SimCondition>, StudySettings)> {
        let p = Path::new("study.toml");
        StudyConfig::parse(text, p)?.resolve(text, p)
    }

    #[test]
    fn suite_and_extra_conditions() {
        let (c, s) = resolve("suite = \"null\"\nseed = 9\n[[condition]]\ng = 0.2\nh = 0.0\nassoc = \"S2\"\nshift = 0.5\n").unwrap();
        assert_eq!(c.len(), 13);
        assert_eq!(c[12].shift, 0.5);
        assert_eq!(s.seed, 9);
        assert_eq!(s.reps, 1000);
    }

    #[test]
    fn syntax_error_reports_line() {
        let err = resolve("reps = 200\nseed = \"x\"\n").unwrap_err();
        match err {
            CliError::Config { line, .. } => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_and_bad_values_report_line() {
        let err = resolve("reps = 200\n\n[[condition]]\ng = 0\nh = 0\nassoc = \"S1\"\nwidth = 3\n").unwrap_err();
        assert!(matches!(err, CliError::Config { line: 7, .. }), "{err:?}");
        let err = resolve("reps = 200\n[[condition]]\ng = 0\nh = 0\nassoc = \"S1\"\n[[condition]]\ng = -1\nh = 0\nassoc = \"S1\"\n")
            .unwrap_err();
        assert!(matches!(err, CliError::Config { line: 6, .. }), "{err:?}");
        assert!(resolve("reps = 200\n").is_err());
        assert!(resolve("reps = 20\nsuite = \"power\"\n").is_err());
    }
}
