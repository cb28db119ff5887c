//! On-disk cache of calibration tables.
//!
//! Each table lives in its own JSON file named after its key. A file whose
//! embedded key differs from the requested one, including the algorithm
//! version, is rebuilt rather than reused.

use std::fs;
use std::path::{Path, PathBuf};

use rancova::{calibrate_many, AncovaConfig, CalibrationKey, CalibrationTable, Combiner};

use crate::error::{CliError, Result};

/// Where a table came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Cached,
    Built,
}

pub struct CalibrationCache {
    dir: PathBuf,
}

impl CalibrationCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &CalibrationKey) -> PathBuf {
        self.dir.join(format!("{}.json", key.describe()))
    }

    fn load(&self, key: &CalibrationKey) -> Option<CalibrationTable> {
        let text = fs::read_to_string(self.path_for(key)).ok()?;
        let table: CalibrationTable = serde_json::from_str(&text).ok()?;
        (table.key == *key).then_some(table)
    }

    fn store(&self, table: &CalibrationTable) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir).map_err(|e| CliError::io(format!("creating {}", self.dir.display()), e))?;
        let path = self.path_for(&table.key);
        let mut text = serde_json::to_string_pretty(table).expect("tables serialize");
        text.push('\n');
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, text).map_err(|e| CliError::io(format!("writing {}", tmp.display()), e))?;
        fs::rename(&tmp, &path).map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
        Ok(path)
    }

    /// Tables for every combiner, in order, reusing matching cached files
    /// unless `force` is set. Missing tables are simulated together and
    /// written back.
    #[allow(clippy::too_many_arguments)]
    pub fn get_or_build(
        &self,
        n1: usize,
        n2: usize,
        alpha: f64,
        replicates: usize,
        combiners: &[Combiner],
        cfg: &AncovaConfig,
        seed: u64,
        force: bool,
    ) -> Result<Vec<(CalibrationTable, PathBuf, Origin)>> {
        let keys: Vec<CalibrationKey> = combiners
            .iter()
            .map(|&c| CalibrationKey::new(n1, n2, alpha, replicates, c, cfg, seed))
            .collect();
        let mut found: Vec<Option<CalibrationTable>> =
            keys.iter().map(|k| if force { None } else { self.load(k) }).collect();
        let missing: Vec<Combiner> =
            combiners.iter().zip(&found).filter(|(_, f)| f.is_none()).map(|(&c, _)| c).collect();
        let mut built = if missing.is_empty() {
            Vec::new()
        } else {
            calibrate_many(n1, n2, alpha, replicates, &missing, cfg, seed)?
        }
        .into_iter();

        let mut out = Vec::with_capacity(keys.len());
        for (key, slot) in keys.iter().zip(found.iter_mut()) {
            match slot.take() {
                Some(table) => out.push((table, self.path_for(key), Origin::Cached)),
                None => {
                    let table = built.next().expect("one built table per missing key");
                    let path = self.store(&table)?;
                    out.push((table, path, Origin::Built));
                }
            }
        }
        Ok(out)
    }
}
