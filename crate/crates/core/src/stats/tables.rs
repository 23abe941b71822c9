use std::collections::HashMap;

use serde::Serialize;

use crate::features::{FeatureVector, FEATURE_LABELS};
use crate::grader::{AnalyticScoreTable, AspectId, PromptCondition};

use super::{spearman, PairedSeries};

/// Row order of the aspect × feature correlation tables.
pub const TABLE_ASPECT_ORDER: [AspectId; 9] = [
    AspectId::GeneralLinguisticRange,
    AspectId::GrammaticalAccuracy,
    AspectId::OrthographicControl,
    AspectId::VocabularyControl,
    AspectId::VocabularyRange,
    AspectId::PropositionalPrecision,
    AspectId::CoherenceCohesion,
    AspectId::Flexibility,
    AspectId::ThematicDevelopment,
];

/// One Spearman correlation; `value` is absent when it cannot be computed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationCell {
    pub value: Option<f64>,
    pub n: usize,
    pub dropped: usize,
    pub note: Option<String>,
}

impl CorrelationCell {
    pub fn compute(ids: &[String], x: Vec<Option<f64>>, y: Vec<Option<f64>>) -> CorrelationCell {
        let absent = x.iter().zip(&y).filter(|(a, b)| a.is_none() || b.is_none()).count();
        match PairedSeries::from_options(ids.to_vec(), x, y) {
            Ok(series) => match spearman(&series) {
                Ok(v) => CorrelationCell {
                    value: Some(v),
                    n: series.len(),
                    dropped: series.dropped,
                    note: None,
                },
                Err(e) => CorrelationCell {
                    value: None,
                    n: series.len(),
                    dropped: series.dropped,
                    note: Some(e.to_string()),
                },
            },
            Err(e) => CorrelationCell {
                value: None,
                n: ids.len() - absent,
                dropped: absent,
                note: Some(e.to_string()),
            },
        }
    }

    pub fn absent(note: &str) -> CorrelationCell {
        CorrelationCell {
            value: None,
            n: 0,
            dropped: 0,
            note: Some(note.to_string()),
        }
    }
}

/// Aspect × feature SRC table: rows are the nine aspects and `holistic`;
/// columns are the nine features and `holistic`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub condition: PromptCondition,
    pub row_labels: Vec<String>,
    pub column_labels: Vec<String>,
    pub cells: Vec<Vec<CorrelationCell>>,
    /// Top two aspect cells per feature column.
    pub bold: Vec<Vec<bool>>,
}

fn top_two(column: &[Option<f64>]) -> Vec<bool> {
    let mut present: Vec<f64> = column.iter().flatten().copied().collect();
    present.sort_by(|a, b| b.total_cmp(a));
    let Some(&threshold) = present.get(1).or(present.first()) else {
        return vec![false; column.len()];
    };
    column.iter().map(|v| v.is_some_and(|v| v >= threshold)).collect()
}

/// Spearman correlations between aspect bands, features and ground-truth
/// holistic scores over the essays of `scores`.
pub fn correlation_matrix(
    scores: &AnalyticScoreTable,
    features: &[(String, FeatureVector)],
    holistic_gt: &HashMap<String, f64>,
) -> CorrelationReport {
    let ids: Vec<String> = scores.rows.iter().map(|r| r.id.clone()).collect();
    let by_id: HashMap<&str, &FeatureVector> = features.iter().map(|(id, f)| (id.as_str(), f)).collect();
    let feature_column = |j: usize| -> Vec<Option<f64>> {
        ids.iter()
            .map(|id| by_id.get(id.as_str()).and_then(|f| f.values()[j]))
            .collect()
    };
    let gt: Vec<Option<f64>> = ids.iter().map(|id| holistic_gt.get(id).copied()).collect();
    let mut series: Vec<Vec<Option<f64>>> = TABLE_ASPECT_ORDER
        .iter()
        .map(|&a| {
            scores
                .rows
                .iter()
                .map(|r| r.level(a).map(|b| b.numeric() as f64))
                .collect()
        })
        .collect();
    series.push(gt.clone());

    let mut columns: Vec<Vec<Option<f64>>> = (0..FEATURE_LABELS.len()).map(feature_column).collect();
    columns.push(gt);

    let cells: Vec<Vec<CorrelationCell>> = series
        .iter()
        .map(|row| {
            columns
                .iter()
                .map(|col| CorrelationCell::compute(&ids, row.clone(), col.clone()))
                .collect()
        })
        .collect();

    let n_rows = cells.len();
    let n_cols = columns.len();
    let mut bold = vec![vec![false; n_cols]; n_rows];
    for j in 0..FEATURE_LABELS.len() {
        let col: Vec<Option<f64>> = cells[..TABLE_ASPECT_ORDER.len()].iter().map(|r| r[j].value).collect();
        for (i, b) in top_two(&col).into_iter().enumerate() {
            bold[i][j] = b;
        }
    }

    let mut row_labels: Vec<String> = TABLE_ASPECT_ORDER.iter().map(|a| a.short_label().to_string()).collect();
    row_labels.push("holistic".into());
    let mut column_labels: Vec<String> = FEATURE_LABELS.iter().map(|s| s.to_string()).collect();
    column_labels.push("holistic".into());
    CorrelationReport {
        condition: scores.condition,
        row_labels,
        column_labels,
        cells,
        bold,
    }
}

/// SRC between per-essay mean aspect band and each holistic reference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructionGrid {
    /// Prompt condition per row.
    pub conditions: Vec<PromptCondition>,
    /// Columns: ground-truth reference, predicted reference.
    pub cells: Vec<[CorrelationCell; 2]>,
}

/// One row per supplied score table, columns = (ground truth, predicted).
pub fn reconstruction_correlations(
    tables: &[&AnalyticScoreTable],
    holistic_gt: &HashMap<String, f64>,
    holistic_pred: &HashMap<String, f64>,
) -> ReconstructionGrid {
    let mut conditions = Vec::new();
    let mut cells = Vec::new();
    for table in tables {
        let ids: Vec<String> = table.rows.iter().map(|r| r.id.clone()).collect();
        let means: Vec<Option<f64>> = table.rows.iter().map(|r| r.mean().ok()).collect();
        let column = |reference: &HashMap<String, f64>, what: &str| {
            if reference.is_empty() {
                return CorrelationCell::absent(&format!("no {what} holistic scores"));
            }
            let refs = ids.iter().map(|id| reference.get(id).copied()).collect();
            CorrelationCell::compute(&ids, means.clone(), refs)
        };
        conditions.push(table.condition);
        cells.push([column(holistic_gt, "ground-truth"), column(holistic_pred, "predicted")]);
    }
    ReconstructionGrid { conditions, cells }
}
