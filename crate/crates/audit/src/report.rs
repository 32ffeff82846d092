use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub const REPORT_FORMAT: &str = "multiplicity-audit-report";
pub const REPORT_VERSION: u32 = 1;
/// The only field that differs between identical runs.
pub const TIMESTAMP_FIELD: &str = "generated_at_unix";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub format: String,
    pub report_version: u32,
    pub toolkit_version: String,
    pub generated_at_unix: u64,
    pub config_fingerprint: String,
    pub flag_threshold: f64,
    pub data: DataSummary,
    pub rashomon: SetSummary,
    pub standard_ambiguity: f64,
    pub curve: Vec<CurvePoint>,
    pub flagged_count: usize,
    pub flagged: Vec<FlaggedRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub source: String,
    pub n_train: usize,
    pub n_test: usize,
    pub n_threshold_rows: usize,
    pub features: Vec<String>,
    pub test_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetSummary {
    pub strategy: String,
    pub score: String,
    pub epsilon: f64,
    pub baseline_score: f64,
    pub baseline_accuracy: f64,
    pub threshold: f64,
    pub candidate_count: usize,
    pub member_count: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub delta: f64,
    pub ambiguity: f64,
}

/// A row whose conflict exceeds the flag threshold, with every member's
/// vote so the decision can be reviewed by hand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedRow {
    pub row_id: u64,
    pub n0: u32,
    pub n1: u32,
    pub conflict: f64,
    pub ballot: String,
}

impl AuditReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// Human-readable summary. Every number is read from `self`; the
    /// timestamp is left out.
    pub fn render_text(&self) -> String {
        let r = &self.rashomon;
        let d = &self.data;
        let mut s = String::new();
        let _ = writeln!(s, "Predictive multiplicity audit");
        let _ = writeln!(s, "flag threshold: conflict > {}", self.flag_threshold);
        let _ = writeln!(s, "config fingerprint: {}", self.config_fingerprint);
        let _ = writeln!(s, "toolkit version: {}", self.toolkit_version);
        let _ = writeln!(s);
        let _ = writeln!(s, "data: {}", d.source);
        let _ = writeln!(s, "  training rows: {}", d.n_train);
        let _ = writeln!(s, "  audited rows: {}", d.n_test);
        let _ = writeln!(s, "  rows scored for the threshold: {}", d.n_threshold_rows);
        let _ = writeln!(s, "  features: {}", d.features.join(", "));
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "rashomon set: {} strategy, score {}",
            r.strategy, r.score
        );
        let _ = writeln!(s, "  baseline score: {}", r.baseline_score);
        let _ = writeln!(s, "  baseline accuracy: {}", r.baseline_accuracy);
        let _ = writeln!(s, "  epsilon: {}", r.epsilon);
        let _ = writeln!(s, "  threshold: {}", r.threshold);
        let _ = writeln!(
            s,
            "  members: {} of {} candidates",
            r.member_count, r.candidate_count
        );
        for w in &r.warnings {
            let _ = writeln!(s, "  warning: {w}");
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "standard ambiguity: {}", self.standard_ambiguity);
        let _ = writeln!(s, "ambiguity curve:");
        for p in &self.curve {
            let _ = writeln!(s, "  delta {:<6} {}", p.delta, p.ambiguity);
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "flagged rows: {}", self.flagged_count);
        for f in &self.flagged {
            let _ = writeln!(
                s,
                "  row {}: n0 {} n1 {} conflict {}",
                f.row_id, f.n0, f.n1, f.conflict
            );
        }
        s
    }
}

/// Replaces the timestamp value in rendered report JSON with 0.
pub fn mask_timestamp(json: &str) -> String {
    json.lines()
        .map(|line| {
            let key = format!("\"{TIMESTAMP_FIELD}\":");
            match line.find(&key) {
                Some(at) => {
                    let rest = &line[at + key.len()..];
                    let comma = if rest.trim_end().ends_with(',') {
                        ","
                    } else {
                        ""
                    };
                    format!("{}{key} 0{comma}", &line[..at])
                }
                None => line.to_string(),
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
        + if json.ends_with('\n') { "\n" } else { "" }
}
