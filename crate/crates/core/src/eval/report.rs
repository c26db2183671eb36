//! Metrics report with the protocol parameters that produced it.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ReportParams {
    /// Distance threshold for precision/recall, meters.
    #[serde(default)]
    pub threshold_d: Option<f64>,
    /// Segment lengths for the relative errors, meters.
    #[serde(default)]
    pub segment_lengths_m: Option<Vec<f64>>,
    /// Alignment applied before evaluation ("sim3", "none", ...).
    pub alignment: String,
}

/// Trajectory and reconstruction metrics; absent metrics stay null.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MetricsReport {
    pub ate_m: Option<f64>,
    pub rre_deg_per_100m: Option<f64>,
    pub rte_m_per_100m: Option<f64>,
    pub chamfer: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub params: ReportParams,
}

impl MetricsReport {
    pub fn empty(alignment: &str) -> Self {
        MetricsReport {
            ate_m: None,
            rre_deg_per_100m: None,
            rte_m_per_100m: None,
            chamfer: None,
            precision: None,
            recall: None,
            f1: None,
            params: ReportParams {
                threshold_d: None,
                segment_lengths_m: None,
                alignment: alignment.to_string(),
            },
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| CoreError::input(format!("report serialization: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CoreError::parse(1, format!("report json: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_json_with_nulls() {
        let mut r = MetricsReport::empty("sim3");
        r.ate_m = Some(0.125);
        r.params.segment_lengths_m = Some(vec![100.0, 200.0]);
        let text = r.to_json().unwrap();
        assert!(text.contains("\"ate_m\""));
        assert!(text.contains("\"chamfer\": null"));
        let back = MetricsReport::from_json(&text).unwrap();
        assert_eq!(back, r);
    }
}
