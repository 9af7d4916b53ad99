use serde::{Deserialize, Serialize};
use weakdr::driver::{RunBudget, SolveReport};
use weakdr::fwg::FwgConfig;

use crate::instance::Source;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveReportFile {
    pub schema_version: u32,
    pub library_version: String,
    pub instance_hash: String,
    /// Absent under `--no-timestamp`.
    pub wall_time_seconds: Option<f64>,
    pub created_unix_seconds: Option<u64>,
    pub gamma: f64,
    pub gamma_source: Source,
    pub smoothness: f64,
    pub smoothness_source: Source,
    pub config: FwgConfig,
    pub budget: RunBudget,
    pub seed: u64,
    pub report: SolveReport,
}

impl SolveReportFile {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize") + "\n"
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        let file: SolveReportFile = serde_json::from_str(text)?;
        if file.schema_version != REPORT_SCHEMA_VERSION {
            return Err(serde::de::Error::custom(format!(
                "unsupported report schema version {}",
                file.schema_version
            )));
        }
        Ok(file)
    }
}
