//! JSON-lines report: one record per check sorted by `check_id`, then a summary line.

use super::config::RunConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub check_id: String,
    pub group: String,
    /// Which identity or property the check measures.
    pub identity: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_sites: Option<usize>,
    pub inputs_digest: String,
    /// `None` when the check could not be constructed.
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flag: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub errors: usize,
    pub seed: u64,
    pub sizes: Vec<usize>,
    pub config: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub records: Vec<Record>,
    pub summary: Summary,
}

#[derive(Serialize)]
struct SummaryLine<'a> {
    summary: &'a Summary,
}

/// Process exit status for a finished run.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_TOLERANCE: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

impl Report {
    pub fn new(mut records: Vec<Record>, config: &RunConfig, sizes: Vec<usize>, wall_time_ms: Option<f64>) -> Self {
        records.sort_by(|a, b| a.check_id.cmp(&b.check_id));
        let count = |s: Status| records.iter().filter(|r| r.status == s).count();
        let summary = Summary {
            total: records.len(),
            passed: count(Status::Pass),
            failed: count(Status::Fail),
            errors: count(Status::Error),
            seed: config.seed,
            sizes,
            config: config.clone(),
            wall_time_ms,
        };
        Report { records, summary }
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out.push_str(&serde_json::to_string(&SummaryLine { summary: &self.summary }).expect("summary serializes"));
        out.push('\n');
        out
    }

    pub fn exit_code(&self) -> i32 {
        if self.summary.errors > 0 {
            EXIT_INTERNAL
        } else if self.summary.failed > 0 {
            EXIT_TOLERANCE
        } else {
            EXIT_PASS
        }
    }

    pub fn first_problem(&self) -> Option<&Record> {
        self.records.iter().find(|r| r.status != Status::Pass)
    }
}

/// Hex SHA-256 of the canonical JSON of `inputs`.
pub fn digest<T: Serialize>(inputs: &T) -> String {
    let bytes = serde_json::to_vec(inputs).expect("inputs serialize");
    hex::encode(Sha256::digest(&bytes))
}

/// Per-check seed from the run seed and the check id.
pub fn derive_seed(seed: u64, check_id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(check_id.as_bytes());
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("8 bytes"))
}
