use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::metrics::{
    collides_with_recorded, collision_rate, l2_pair, score_language, score_risk, L2Mode,
};
use super::response::{parse_response, StageStatus};
use crate::annotator::{AnnotationRecord, GtSource};
use crate::config::PlannerConfig;
use crate::risk::RiskClass;
use crate::scenario::Scenario;

/// Per-sample scores. Unscored samples carry the reason and no metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleScore {
    pub sample_id: String,
    pub scored: bool,
    pub error: Option<String>,
    pub status: Option<[StageStatus; 5]>,
    pub language: Option<f64>,
    pub risk_pred: Option<RiskClass>,
    pub risk_gt: RiskClass,
    pub gt_source: GtSource,
    pub l2_1s: Option<f64>,
    pub l2_3s: Option<f64>,
    pub collided: Option<bool>,
}

impl SampleScore {
    pub fn unscored(gt: &AnnotationRecord, reason: impl Into<String>) -> Self {
        Self {
            sample_id: gt.sample_id.clone(),
            scored: false,
            error: Some(reason.into()),
            status: None,
            language: None,
            risk_pred: None,
            risk_gt: gt.stage3_risk,
            gt_source: gt.provenance.gt_source,
            l2_1s: None,
            l2_3s: None,
            collided: None,
        }
    }
}

/// Score one response text against its ground truth. `scenario` supplies
/// the logged neighbor futures for the collision check.
pub fn score_sample(
    text: &str,
    gt: &AnnotationRecord,
    scenario: &Scenario,
    cfg: &PlannerConfig,
    mode: L2Mode,
) -> SampleScore {
    let resp = parse_response(text);
    let mut score = SampleScore {
        scored: true,
        error: None,
        status: Some(resp.status),
        language: Some(score_language(&resp, gt)),
        risk_pred: resp.stage3,
        ..SampleScore::unscored(gt, "")
    };
    if let Some(plan) = &resp.stage5 {
        match l2_pair(&plan.waypoints, &gt.stage5_plan.waypoints, mode) {
            Ok((a, b)) => {
                score.l2_1s = Some(a);
                score.l2_3s = Some(b);
            }
            Err(e) => score.error = Some(e.to_string()),
        }
        match collides_with_recorded(&plan.waypoints, scenario, gt.analysis_time, cfg) {
            Ok(c) => score.collided = Some(c),
            Err(e) => score.error = Some(e.to_string()),
        }
    }
    score
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub l2_mode: L2Mode,
    /// SHA-256 of the resolved run configuration.
    pub config_hash: String,
    pub response_source: String,
}

/// Aggregate metrics in percent (L2 in meters). Aggregates are `None` when
/// no scored sample contributes to them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub header: ReportHeader,
    pub n_submitted: usize,
    pub n_samples: usize,
    pub n_unscored: usize,
    pub language_acc: Option<f64>,
    pub risk_acc: Option<f64>,
    pub risk_recall: Option<f64>,
    pub l2_1s: Option<f64>,
    pub l2_3s: Option<f64>,
    pub collision_rate: Option<f64>,
    pub samples: Vec<SampleScore>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl MetricsReport {
    pub fn from_samples(header: ReportHeader, samples: Vec<SampleScore>) -> Self {
        let scored: Vec<&SampleScore> = samples.iter().filter(|s| s.scored).collect();
        let risk = score_risk(
            &scored
                .iter()
                .map(|s| (s.risk_pred, s.risk_gt))
                .collect::<Vec<_>>(),
        )
        .ok();
        let collided: Vec<bool> = scored.iter().filter_map(|s| s.collided).collect();
        Self {
            header,
            n_submitted: samples.len(),
            n_samples: scored.len(),
            n_unscored: samples.len() - scored.len(),
            language_acc: mean(scored.iter().filter_map(|s| s.language)).map(|f| 100.0 * f),
            risk_acc: risk.map(|r| r.accuracy),
            risk_recall: risk.and_then(|r| r.recall),
            l2_1s: mean(scored.iter().filter_map(|s| s.l2_1s)),
            l2_3s: mean(scored.iter().filter_map(|s| s.l2_3s)),
            collision_rate: collision_rate(&collided).ok(),
            samples,
        }
    }

    pub fn to_json(&self) -> Vec<u8> {
        crate::json::to_fixed_json(self).expect("report serialization is infallible")
    }

    /// Aligned plain-text table in the column order
    /// Language Acc, Risk Acc, Risk Rec, L2@1s, L2@3s, Coll.
    pub fn to_table(&self) -> String {
        let cell = |v: Option<f64>| v.map_or_else(|| "N/A".to_string(), |x| format!("{x:.2}"));
        let mut out = String::new();
        let _ = writeln!(
            out,
            "L2 mode: {} | config sha256: {} | responses: {}",
            match self.header.l2_mode {
                L2Mode::Average => "average",
                L2Mode::PointAtHorizon => "point_at_horizon",
            },
            self.header.config_hash,
            self.header.response_source
        );
        let _ = writeln!(
            out,
            "samples: {} scored, {} unscored, {} submitted",
            self.n_samples, self.n_unscored, self.n_submitted
        );
        let headers = ["Language Acc (%)", "Risk Acc (%)", "Risk Rec (%)", "L2@1s (m)", "L2@3s (m)", "Coll. (%)"];
        let values = [
            cell(self.language_acc),
            cell(self.risk_acc),
            cell(self.risk_recall),
            cell(self.l2_1s),
            cell(self.l2_3s),
            cell(self.collision_rate),
        ];
        let widths: Vec<usize> = headers.iter().zip(&values).map(|(h, v)| h.len().max(v.len())).collect();
        let row = |cells: Vec<String>| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect::<Vec<_>>()
                .join("  ")
        };
        let _ = writeln!(out, "{}", row(headers.iter().map(|h| h.to_string()).collect()));
        let _ = writeln!(out, "{}", row(values.to_vec()));
        out
    }

    /// Per-sample plot data: sample_id, l2_1s, l2_3s, collided, risk_pred, risk_gt.
    pub fn to_csv(&self) -> String {
        let num = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.6}"));
        let mut out = String::from("sample_id,l2_1s,l2_3s,collided,risk_pred,risk_gt\n");
        for s in &self.samples {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                s.sample_id,
                num(s.l2_1s),
                num(s.l2_3s),
                s.collided.map_or(String::new(), |c| c.to_string()),
                s.risk_pred.map_or("", RiskClass::as_str),
                s.risk_gt.as_str()
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotator::build_record;
    use crate::eval::render_response;
    use crate::synthetic;

    fn header() -> ReportHeader {
        ReportHeader {
            l2_mode: L2Mode::Average,
            config_hash: "abc".into(),
            response_source: "oracle".into(),
        }
    }

    #[test]
    fn oracle_report_is_perfect() {
        let cfg = PlannerConfig::default();
        let s = synthetic::lead_vehicle_collision("lv", 2.0);
        // Records are scored as stored on disk, at six decimals.
        let gt = AnnotationRecord::from_json(&build_record(&s, 2.0, &cfg).unwrap().to_json()).unwrap();
        let score = score_sample(&render_response(&gt), &gt, &s, &cfg, L2Mode::Average);
        let r = MetricsReport::from_samples(header(), vec![score]);
        assert_eq!(r.language_acc, Some(100.0));
        assert_eq!(r.risk_acc, Some(100.0));
        assert_eq!(r.risk_recall, Some(100.0));
        assert_eq!((r.l2_1s, r.l2_3s), (Some(0.0), Some(0.0)));
        assert_eq!(r.collision_rate, Some(0.0));
    }

    #[test]
    fn unscored_accounting_and_rendering() {
        let cfg = PlannerConfig::default();
        let s = synthetic::constant_speed("c", 8.0);
        let gt = build_record(&s, 4.0, &cfg).unwrap();
        let samples = vec![
            score_sample(&render_response(&gt), &gt, &s, &cfg, L2Mode::Average),
            SampleScore::unscored(&gt, "request timed out"),
            score_sample("no idea", &gt, &s, &cfg, L2Mode::Average),
        ];
        let r = MetricsReport::from_samples(header(), samples);
        assert_eq!((r.n_submitted, r.n_samples, r.n_unscored), (3, 2, 1));
        assert_eq!(r.risk_acc, Some(50.0));
        assert_eq!(r.risk_recall, None);
        assert!((r.language_acc.unwrap() - 50.0).abs() < 1e-9);
        let table = r.to_table();
        let cols = ["Language Acc", "Risk Acc", "Risk Rec", "L2@1s", "L2@3s", "Coll."];
        let pos: Vec<usize> = cols.iter().map(|c| table.find(c).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
        assert!(table.contains("N/A"));
        assert_eq!(r.to_csv().lines().count(), 4);
        let back: MetricsReport = serde_json::from_slice(&r.to_json()).unwrap();
        assert_eq!(back.n_unscored, 1);
    }
}
