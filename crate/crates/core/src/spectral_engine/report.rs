use serde::Serialize;

use super::bound_states::BoundStateReport;
use super::mourre::MourreCheck;
use crate::assumption_checker::AssumptionReport;
use crate::cross_section::{Exactness, ThresholdSet};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdSummary {
    pub nu: Vec<f64>,
    pub exact: Vec<bool>,
}

impl From<&ThresholdSet> for ThresholdSummary {
    fn from(t: &ThresholdSet) -> Self {
        Self {
            nu: t.nu.clone(),
            exact: t.exactness.iter().map(|e| *e == Exactness::Analytic).collect(),
        }
    }
}

/// Everything one pipeline run learned about the spectrum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralReport {
    pub essential_spectrum_onset: f64,
    pub thresholds: ThresholdSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_states: Option<BoundStateReport>,
    pub mourre_checks: Vec<MourreCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assumptions: Option<AssumptionReport>,
    pub limitations: Vec<String>,
}

impl SpectralReport {
    pub fn new(thresholds: &ThresholdSet) -> Self {
        Self {
            essential_spectrum_onset: thresholds.nu1(),
            thresholds: thresholds.into(),
            bound_states: None,
            mourre_checks: vec![],
            assumptions: None,
            limitations: vec![
                "eigenvalues embedded in [nu1, inf) cannot be told apart from the discretized continuum".into(),
                "accumulation of eigenvalues at thresholds is neither claimed nor excluded".into(),
            ],
        }
    }

    /// Every reported bound state clears ν₁ by more than its error bar and every
    /// Mourre window passed.
    pub fn is_sound(&self) -> bool {
        self.bound_states.as_ref().is_none_or(|b| b.is_sound()) && self.mourre_checks.iter().all(|m| m.pass)
    }

    /// The bound-state table as CSV: `index,value,error,order,flagged,ladder…`.
    pub fn spectrum_csv(&self) -> String {
        let mut out = String::from("index,value,error,order,flagged,below_threshold,ladder\n");
        if let Some(b) = &self.bound_states {
            for (state, below) in b.states.iter().map(|s| (s, true)).chain(b.candidates.iter().map(|s| (s, false))) {
                let ladder: Vec<String> = state.ladder.iter().map(|v| format!("{v:.15e}")).collect();
                out.push_str(&format!(
                    "{},{:.15e},{:.3e},{},{},{},{}\n",
                    state.index,
                    state.value,
                    state.error,
                    state.order.map_or("nan".to_string(), |p| format!("{p:.4}")),
                    state.order_flagged,
                    below,
                    ladder.join(";")
                ));
            }
        }
        out
    }

    pub fn mourre_csv(&self) -> String {
        let mut out = String::from("lambda,epsilon,count,kept,measured,two_rho,tolerance,pass\n");
        for m in &self.mourre_checks {
            out.push_str(&format!(
                "{:.12e},{:.6e},{},{},{:.12e},{:.12e},{:.6e},{}\n",
                m.window.lambda,
                m.window.epsilon,
                m.count,
                m.kept,
                m.measured,
                m.expected,
                m.tolerance,
                if m.pass { "PASS" } else { "FAIL" }
            ));
        }
        out
    }
}
