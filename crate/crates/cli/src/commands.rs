use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use rancova::ancova::DEFAULT_SPAN;
use rancova::combine::DEFAULT_TAU;
use rancova::sim::{report_tables, run_study, SimReport};
use rancova::{
    difference_surface, m2_point_tests, method_m1, method_m2, AncovaConfig, Combiner, M1Point, SurfaceRow, TrimConfig,
};
use serde::Serialize;

use crate::cache::{CalibrationCache, Origin};
use crate::config::StudyConfig;
use crate::data::{read_dataset, ColumnMap, DroppedRow};
use crate::error::{CliError, Result};
use crate::surface::write_surface;

pub const RESULTS_FILE: &str = "results.json";
pub const SURFACE_FILE: &str = "surface.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const STUDY_CSV: &str = "study.csv";
pub const STUDY_TEXT: &str = "study.txt";

/// Calibration replicates used when none are requested.
pub const DEFAULT_REPLICATES: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    M1,
    M2Tpm,
    M2Qbar,
    All,
}

impl Method {
    fn runs_m1(self) -> bool {
        matches!(self, Self::M1 | Self::All)
    }

    fn combiners(self, tau: f64) -> Vec<Combiner> {
        match self {
            Self::M1 => vec![],
            Self::M2Tpm => vec![Combiner::Tpm { tau }],
            Self::M2Qbar => vec![Combiner::Qbar],
            Self::All => vec![Combiner::Tpm { tau }, Combiner::Qbar],
        }
    }
}

/// Settings shared by analysis and calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tuning {
    pub alpha: f64,
    pub span: f64,
    pub gamma: f64,
    pub tau: f64,
    pub replicates: usize,
    pub seed: u64,
}

impl Default for Tuning {
    fn default() -> Self {
        Self { alpha: 0.05, span: DEFAULT_SPAN, gamma: 0.2, tau: DEFAULT_TAU, replicates: DEFAULT_REPLICATES, seed: 1 }
    }
}

impl Tuning {
    fn ancova(&self) -> Result<AncovaConfig> {
        let cfg = AncovaConfig { trim: TrimConfig::new(self.gamma)?, span: self.span, ..AncovaConfig::default() };
        cfg.validate()?;
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CliError::Usage(format!("--alpha {} must lie in (0, 1)", self.alpha)));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(CliError::Usage(format!("--tau {} must lie in (0, 1]", self.tau)));
        }
        if self.replicates == 0 {
            return Err(CliError::Usage("--B must be positive".into()));
        }
        Ok(cfg)
    }
}

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        None => f(),
        Some(0) => Err(CliError::Usage("--threads must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?
            .install(f),
    }
}

/// Six significant digits.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    format!("{x:.5e}").parse::<f64>().expect("formatted float parses").to_string()
}

fn opt6(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), sig6)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))
}

#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    pub data: PathBuf,
    pub columns: ColumnMap,
    pub out_dir: PathBuf,
    pub method: Method,
    pub tuning: Tuning,
    pub cache_dir: PathBuf,
    pub force: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DataSummary {
    pub path: String,
    pub n1: usize,
    pub n2: usize,
    pub dropped: Vec<DroppedRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct M1Summary {
    pub tested: usize,
    pub rejected: usize,
    pub points: Vec<M1Point>,
}

#[derive(Debug, Clone, Serialize)]
pub struct M2Summary {
    pub combiner: Combiner,
    pub statistic: f64,
    pub critical: f64,
    pub p_value: f64,
    pub reject: bool,
    /// Design points selected.
    pub k: usize,
    /// Design points tested.
    pub k_used: usize,
    pub calibration_redraws: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SurfaceSummary {
    pub source: &'static str,
    pub points: usize,
    pub tested: usize,
    pub p_at_most_05: usize,
    pub fraction_p_at_most_05: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub data: DataSummary,
    pub method: Method,
    pub settings: Tuning,
    pub m1: Option<M1Summary>,
    pub m2: Vec<M2Summary>,
    pub surface: SurfaceSummary,
}

fn surface_summary(source: &'static str, rows: &[SurfaceRow]) -> SurfaceSummary {
    let tested = rows.iter().filter(|r| r.p_value.is_some()).count();
    let small = rows.iter().filter(|r| r.p_value.is_some_and(|p| p <= 0.05)).count();
    SurfaceSummary {
        source,
        points: rows.len(),
        tested,
        p_at_most_05: small,
        fraction_p_at_most_05: if tested == 0 { 0.0 } else { small as f64 / tested as f64 },
    }
}

/// Runs the requested methods on a two-group data file and writes
/// `results.json`, `surface.csv` and `summary.txt` into `out_dir`.
pub fn cmd_analyze(opts: &AnalyzeOptions) -> Result<AnalysisReport> {
    let cfg = opts.tuning.ancova()?;
    let t = &opts.tuning;
    let dataset = read_dataset(&opts.data, &opts.columns)?;
    let (n1, n2) = dataset.group_sizes();
    let (g1, g2) = dataset.split()?;

    let m1 = if opts.method.runs_m1() {
        let points = method_m1(&g1, &g2, &cfg, t.alpha)?;
        Some(M1Summary {
            tested: points.iter().filter(|p| p.test.p_value.is_some()).count(),
            rejected: points.iter().filter(|p| p.reject).count(),
            points,
        })
    } else {
        None
    };

    let combiners = opts.method.combiners(t.tau);
    let mut m2 = Vec::new();
    let surface_rows;
    let source;
    if combiners.is_empty() {
        source = "m1";
        let tests: Vec<_> = m1.as_ref().map(|m| m.points.iter().map(|p| p.test.clone()).collect()).unwrap_or_default();
        surface_rows = difference_surface(&tests);
    } else {
        source = "m2";
        surface_rows = difference_surface(&m2_point_tests(&g1, &g2, &cfg)?);
        let cache = CalibrationCache::new(&opts.cache_dir);
        let tables = cache.get_or_build(n1, n2, t.alpha, t.replicates, &combiners, &cfg, t.seed, opts.force)?;
        for (table, path, origin) in &tables {
            if *origin == Origin::Built {
                eprintln!("calibrated {} -> {}", table.key.describe(), path.display());
            }
            let r = method_m2(&g1, &g2, &cfg, t.alpha, table.key.combiner, table)?;
            m2.push(M2Summary {
                combiner: r.combiner,
                statistic: r.observed,
                critical: r.critical,
                p_value: r.p_value,
                reject: r.reject,
                k: r.k,
                k_used: r.k_used,
                calibration_redraws: table.redraws,
            });
        }
    }

    let report = AnalysisReport {
        data: DataSummary { path: opts.data.display().to_string(), n1, n2, dropped: dataset.dropped.clone() },
        method: opts.method,
        settings: *t,
        m1,
        m2,
        surface: surface_summary(source, &surface_rows),
    };

    create_dir(&opts.out_dir)?;
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    write_file(&opts.out_dir.join(RESULTS_FILE), &json)?;
    write_surface(&opts.out_dir.join(SURFACE_FILE), &surface_rows)?;
    write_file(&opts.out_dir.join(SUMMARY_FILE), &summary_text(&report))?;
    Ok(report)
}

pub fn summary_text(r: &AnalysisReport) -> String {
    let mut s = String::new();
    let t = &r.settings;
    let _ = writeln!(s, "data: {} (n1 = {}, n2 = {}, dropped rows = {})", r.data.path, r.data.n1, r.data.n2, r.data.dropped.len());
    for d in &r.data.dropped {
        let _ = writeln!(s, "  line {}: {}", d.line, d.reason);
    }
    let _ = writeln!(
        s,
        "settings: alpha = {}, span = {}, gamma = {}, tau = {}, B = {}, seed = {}",
        sig6(t.alpha),
        sig6(t.span),
        sig6(t.gamma),
        sig6(t.tau),
        t.replicates,
        t.seed
    );
    if let Some(m1) = &r.m1 {
        let _ = writeln!(
            s,
            "\nM1: {} design points, {} tested, {} rejected (Hochberg, alpha = {})",
            m1.points.len(),
            m1.tested,
            m1.rejected,
            sig6(t.alpha)
        );
        let _ = writeln!(s, "  {:>12} {:>12} {:>4} {:>4} {:>12} {:>12} reject", "x1", "x2", "n1", "n2", "diff", "p");
        for p in &m1.points {
            let x = &p.test;
            let _ = writeln!(
                s,
                "  {:>12} {:>12} {:>4} {:>4} {:>12} {:>12} {}",
                sig6(x.point[0]),
                sig6(x.point[1]),
                x.n1,
                x.n2,
                opt6(x.diff),
                opt6(x.p_value),
                if p.reject { "yes" } else { "no" }
            );
        }
    }
    for m in &r.m2 {
        let name = match m.combiner {
            Combiner::Tpm { tau } => format!("TPM, tau = {}", sig6(tau)),
            Combiner::Qbar => "Qbar".to_string(),
        };
        let _ = writeln!(
            s,
            "\nM2 ({name}): statistic = {}, critical = {}, p-value = {}, {} ({} of {} points tested)",
            sig6(m.statistic),
            sig6(m.critical),
            sig6(m.p_value),
            if m.reject { "reject" } else { "do not reject" },
            m.k_used,
            m.k
        );
    }
    let sf = &r.surface;
    let _ = writeln!(
        s,
        "\nsurface ({}): {} points, {} tested, {} with p <= .05 ({}%)",
        sf.source,
        sf.points,
        sf.tested,
        sf.p_at_most_05,
        sig6(100.0 * sf.fraction_p_at_most_05)
    );
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Tpm,
    Qbar,
    Both,
}

#[derive(Debug, Clone)]
pub struct CalibrateOptions {
    pub n1: usize,
    pub n2: usize,
    pub kind: Kind,
    pub tuning: Tuning,
    pub cache_dir: PathBuf,
    pub force: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOutcome {
    pub path: PathBuf,
    pub combiner: Combiner,
    pub critical: f64,
    pub origin: Origin,
}

/// Builds (or reuses) calibration tables in the cache directory.
pub fn cmd_calibrate(opts: &CalibrateOptions) -> Result<Vec<CalibrationOutcome>> {
    let cfg = opts.tuning.ancova()?;
    let t = &opts.tuning;
    if opts.n1 < cfg.min_neighbors || opts.n2 < cfg.min_neighbors {
        return Err(rancova::Error::GroupTooSmallForComparability { n: opts.n1.min(opts.n2), min: cfg.min_neighbors }.into());
    }
    let combiners = match opts.kind {
        Kind::Tpm => vec![Combiner::Tpm { tau: t.tau }],
        Kind::Qbar => vec![Combiner::Qbar],
        Kind::Both => vec![Combiner::Tpm { tau: t.tau }, Combiner::Qbar],
    };
    let cache = CalibrationCache::new(&opts.cache_dir);
    Ok(cache
        .get_or_build(opts.n1, opts.n2, t.alpha, t.replicates, &combiners, &cfg, t.seed, opts.force)?
        .into_iter()
        .map(|(table, path, origin)| CalibrationOutcome {
            path,
            combiner: table.key.combiner,
            critical: table.critical,
            origin,
        })
        .collect())
}

/// Runs the study described by a config file and writes `study.csv` and
/// `study.txt` into `out_dir`.
pub fn cmd_simulate(config: &Path, out_dir: &Path) -> Result<Vec<SimReport>> {
    let (_, conditions, settings) = StudyConfig::load(config)?;
    let reports = run_study(&conditions, &settings)?;
    let (csv, text) = report_tables(&reports);
    create_dir(out_dir)?;
    write_file(&out_dir.join(STUDY_CSV), &csv)?;
    write_file(&out_dir.join(STUDY_TEXT), &text)?;
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.000_428_213_478_486), "0.000428213");
        assert_eq!(sig6(1.0), "1");
        assert_eq!(sig6(123_456_789.0), "123457000");
        assert_eq!(sig6(-2.123_456_789), "-2.12346");
    }

    #[test]
    fn thread_pool_rejects_zero() {
        assert!(with_threads(Some(0), || Ok(())).is_err());
        assert_eq!(with_threads(Some(2), || Ok(rayon::current_num_threads())).unwrap(), 2);
    }
}
