//! JSON reports written by `cross-validate` and `evaluate`.

use serde::{Deserialize, Serialize};
use wetmap_core::folds::{CvReport, FoldResult};
use wetmap_core::metrics::{Agreement, AgreementMap, Confusion, MetricsError, Scores};
use wetmap_core::optim::EpochStats;
use wetmap_core::postproc::AreaReport;

use crate::geojson::GENERATOR;

/// Scores, or why they are undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreBlock {
    pub confusion: Confusion,
    pub scores: Option<Scores>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub undefined: Option<String>,
}

impl ScoreBlock {
    pub fn new(confusion: Confusion, scores: &Result<Scores, MetricsError>) -> Self {
        ScoreBlock {
            confusion,
            scores: scores.as_ref().ok().copied(),
            undefined: scores.as_ref().err().map(|e| e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldEntry {
    pub fold: usize,
    pub tiles_evaluated: usize,
    pub best_epoch: u32,
    pub best_validation_loss: f64,
    #[serde(flatten)]
    pub result: ScoreBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaBlock {
    #[serde(flatten)]
    pub report: AreaReport,
    /// Signed percentage at one decimal, e.g. `+0.3%`.
    pub difference: String,
}

impl From<AreaReport> for AreaBlock {
    fn from(report: AreaReport) -> Self {
        AreaBlock {
            difference: report.percent_display(),
            report,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvMetrics {
    pub generator: String,
    pub folds: Vec<FoldEntry>,
    /// Confusion summed over every held-out pixel.
    pub pooled: ScoreBlock,
    /// Unweighted mean over folds whose scores are defined.
    pub macro_scores: Option<Scores>,
    pub tiles_evaluated: usize,
    /// Filtered out-of-fold polygons against the reference polygons.
    pub area: Option<AreaBlock>,
}

fn fold_entry(f: &FoldResult) -> FoldEntry {
    FoldEntry {
        fold: f.fold,
        tiles_evaluated: f.evaluated.len(),
        best_epoch: f.checkpoint.meta.epoch,
        best_validation_loss: f.checkpoint.meta.validation_loss,
        result: ScoreBlock::new(f.confusion, &f.scores),
    }
}

impl CvMetrics {
    pub fn new(report: &CvReport, area: Option<AreaReport>) -> Self {
        CvMetrics {
            generator: GENERATOR.to_string(),
            folds: report.folds.iter().map(fold_entry).collect(),
            pooled: ScoreBlock::new(report.pooled, &report.pooled_scores),
            macro_scores: report.macro_scores,
            tiles_evaluated: report.evaluation_counts.iter().map(|&c| c as usize).sum(),
            area: area.map(AreaBlock::from),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgreementCounts {
    pub agree: u64,
    pub false_positive: u64,
    pub false_negative: u64,
    pub background: u64,
    pub no_data: u64,
}

impl From<&AgreementMap> for AgreementCounts {
    fn from(m: &AgreementMap) -> Self {
        AgreementCounts {
            agree: m.count(Agreement::Agree),
            false_positive: m.count(Agreement::FalsePositive),
            false_negative: m.count(Agreement::FalseNegative),
            background: m.count(Agreement::Background),
            no_data: m.count(Agreement::NoData),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub generator: String,
    #[serde(flatten)]
    pub result: ScoreBlock,
    pub agreement: AgreementCounts,
    pub agreement_map: String,
    pub area: Option<AreaBlock>,
}

/// One line of `history.jsonl`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryLine {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_loss: f64,
    /// Seconds since training started.
    pub wall_time_s: f64,
}

impl HistoryLine {
    pub fn new(s: &EpochStats, wall_time_s: f64) -> Self {
        HistoryLine {
            epoch: s.epoch,
            train_loss: s.train_loss,
            validation_loss: s.validation_loss,
            wall_time_s,
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}
