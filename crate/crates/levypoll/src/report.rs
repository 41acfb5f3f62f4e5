//! JSON report bodies and CSV helpers.

use levypoll_core::{Analysis, Matrix, StabilityReport, StationaryMeans};
use serde::Serialize;

/// Fixed 12-significant-digit rendering used in every CSV value column.
pub fn fmt(x: f64) -> String {
    format!("{x:.11e}")
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilitySection {
    pub rate_matrix: Vec<Vec<f64>>,
    pub rho_a: f64,
    pub rate_matrix_irreducible: bool,
    pub mean_matrix: Vec<Vec<f64>>,
    pub rho_m: f64,
    pub perron_vector: Vec<f64>,
    pub verdict: &'static str,
}

impl From<&StabilityReport> for StabilitySection {
    fn from(s: &StabilityReport) -> Self {
        let rows = |m: &Matrix| m.rows();
        StabilitySection {
            rate_matrix: rows(&s.rate_matrix),
            rho_a: s.rho_a,
            rate_matrix_irreducible: s.rate_irreducible,
            mean_matrix: rows(&s.mean_matrix),
            rho_m: s.rho_m,
            perron_vector: s.perron_vector_m.clone(),
            verdict: s.verdict.as_str(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentsSection {
    pub immigration_mean: Vec<f64>,
    pub polling_mean: Vec<f64>,
    pub own_queue_at_polling: Vec<f64>,
    pub visit_time_per_unit: Vec<f64>,
    pub mean_cycle: f64,
    pub mean_cycle_from_load: Option<f64>,
}

impl From<&StationaryMeans> for MomentsSection {
    fn from(m: &StationaryMeans) -> Self {
        MomentsSection {
            immigration_mean: m.immigration.clone(),
            polling_mean: m.polling.clone(),
            own_queue_at_polling: m.own_at_polling.clone(),
            visit_time_per_unit: m.visit_time_per_unit.clone(),
            mean_cycle: m.mean_cycle,
            mean_cycle_from_load: m.mean_cycle_unit_rate,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeReport<'a, C: Serialize> {
    pub stability: StabilitySection,
    /// Present only for stable models.
    pub moments: Option<MomentsSection>,
    pub config: &'a C,
}

impl<'a, C: Serialize> AnalyzeReport<'a, C> {
    pub fn new(stability: &StabilityReport, analysis: Option<&Analysis>, config: &'a C) -> Self {
        AnalyzeReport {
            stability: stability.into(),
            moments: analysis.map(|a| a.means().into()),
            config,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }
}
