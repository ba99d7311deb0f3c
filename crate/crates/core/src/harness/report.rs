use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::wave_solver::LIFESPAN_CAVEAT;

use super::sweep::{GridPolicy, LifespanFit, SweepPlan};

pub const CSV_HEADER: &str = "epsilon,T_num,outcome,predicted_T";
pub const RECORD_FILE: &str = "fit.json";
pub const CSV_FILE: &str = "sweep.csv";

/// Direction of the bound the fitted slope is compared against.
pub const INEQUALITY_NOTE: &str = "the predicted line C eps^s is an upper bound on the lifespan (T_eps <= C eps^s); \
     T_num is compared against its exponent only";

/// Hex SHA-256 of `text`.
pub fn config_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Everything persisted about a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord<T> {
    pub software: String,
    pub version: String,
    pub config_hash: String,
    pub config: String,
    pub grid_policy: GridPolicy<T>,
    pub inequality_note: String,
    pub caveat: String,
    pub fit: LifespanFit<T>,
}

impl<T: Real> SweepRecord<T> {
    pub fn new(plan: &SweepPlan<T>, fit: LifespanFit<T>) -> Self {
        let config = plan.canonical();
        Self {
            software: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: config_hash(&config),
            config,
            grid_policy: plan.grid,
            inequality_note: INEQUALITY_NOTE.into(),
            caveat: LIFESPAN_CAVEAT.into(),
            fit,
        }
    }
}

fn num<T: Real>(x: Option<T>) -> String {
    x.map(|v| format!("{:.16e}", v.as_f64())).unwrap_or_default()
}

/// Plot-ready rows; empty cells for missing values.
pub fn sweep_csv<T: Real>(fit: &LifespanFit<T>) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &fit.rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            num(Some(r.epsilon)),
            num(r.t_num),
            r.outcome,
            num(fit.predicted_t(r.epsilon))
        ));
    }
    out
}

/// Paths written by [`emit_report`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportPaths {
    pub record: PathBuf,
    pub csv: PathBuf,
}

/// Writes `fit.json` and `sweep.csv` into `dir`, creating it if needed.
///
/// Existing files are left alone unless `force` is set.
pub fn emit_report<T: Real + Serialize>(record: &SweepRecord<T>, dir: &Path, force: bool) -> Result<ReportPaths> {
    let paths = ReportPaths {
        record: dir.join(RECORD_FILE),
        csv: dir.join(CSV_FILE),
    };
    if !force {
        for p in [&paths.record, &paths.csv] {
            if p.exists() {
                return Err(Error::OutputExists(p.clone()));
            }
        }
    }
    fs::create_dir_all(dir)?;
    let mut json = serde_json::to_string_pretty(record)?;
    json.push('\n');
    fs::write(&paths.record, json)?;
    fs::write(&paths.csv, sweep_csv(&record.fit))?;
    Ok(paths)
}

pub fn read_record<T: DeserializeOwned>(path: &Path) -> Result<SweepRecord<T>> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}
