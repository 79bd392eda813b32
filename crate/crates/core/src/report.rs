//! Budget-sweep metrics: avoided worst-case lost load and excluded scenarios
//! per protection budget, as plot-ready JSON and CSV tables.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cas::CasList;
use crate::error::{Error, Result};
use crate::protect::{ProtectionPlan, RemainingWorstCase, ALL_EXCLUDED};

pub const CSV_HEADER: &str =
    "x_max,avoided_lost_load_pct,excluded_cas_count,consecutive_excluded,remaining_worst_case_mw,runtime_s";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub x_max: usize,
    pub avoided_lost_load_pct: f64,
    pub excluded_cas_count: usize,
    pub consecutive_excluded: usize,
    pub remaining_worst_case_mw: RemainingWorstCase,
    pub runtime_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotation: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub grid: String,
    pub configuration_labels: Vec<String>,
    /// Worst-case lost load without protection (rank-1 scenario).
    pub baseline_lost_load_mw: f64,
    pub identified_cas: usize,
    pub complete: bool,
    pub rows: Vec<SweepRow>,
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// Builds the report rows for `plans` against the unprotected `baseline`.
pub fn compute_metrics(baseline: &CasList, plans: &[ProtectionPlan]) -> Result<SweepReport> {
    let base = baseline
        .top_lost_load_mw()
        .ok_or_else(|| Error::InvalidInput("baseline CAS list is empty".into()))?;

    let rows = plans
        .iter()
        .map(|plan| {
            let (avoided, annotation) = match plan.remaining_worst_case_mw {
                RemainingWorstCase::Value(_) if base <= 0.0 => (0.0, None),
                RemainingWorstCase::Value(v) => (round6((100.0 * (1.0 - v / base)).clamp(0.0, 100.0)), None),
                RemainingWorstCase::AllExcluded { upper_bound_mw } => {
                    let note = (!baseline.complete).then(|| match upper_bound_mw {
                        Some(bound) => format!(
                            "all identified CAS excluded; remaining worst case unknown (at most {bound} MW)"
                        ),
                        None => "all identified CAS excluded; remaining worst case unknown".to_string(),
                    });
                    (100.0, note)
                }
            };
            SweepRow {
                x_max: plan.budget,
                avoided_lost_load_pct: avoided,
                excluded_cas_count: plan.total_excluded,
                consecutive_excluded: plan.consecutive_excluded,
                remaining_worst_case_mw: plan.remaining_worst_case_mw,
                runtime_s: 0.0,
                annotation,
            }
        })
        .collect();

    Ok(SweepReport {
        grid: baseline.source_grid.clone(),
        configuration_labels: baseline.configuration_labels(),
        baseline_lost_load_mw: base,
        identified_cas: baseline.len(),
        complete: baseline.complete,
        rows,
    })
}

impl SweepReport {
    pub fn with_runtimes(mut self, runtimes_s: &[f64]) -> Self {
        for (row, &t) in self.rows.iter_mut().zip(runtimes_s) {
            row.runtime_s = t;
        }
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization is infallible")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let remaining = match r.remaining_worst_case_mw {
                RemainingWorstCase::Value(v) => v.to_string(),
                RemainingWorstCase::AllExcluded { .. } => ALL_EXCLUDED.to_string(),
            };
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.x_max,
                r.avoided_lost_load_pct,
                r.excluded_cas_count,
                r.consecutive_excluded,
                remaining,
                r.runtime_s
            )
            .unwrap();
        }
        out
    }
}
