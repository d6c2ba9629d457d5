use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{PositionScore, TransitionScore};
use crate::reaction::normalize_name;

/// Confusion-matrix bucket for unclassified reactions.
pub const MISCELLANEOUS: &str = "Miscellaneous";

/// `100 * num / den` rounded to two decimals; 0 when `den` is 0.
pub fn percent(num: usize, den: usize) -> f64 {
    if den == 0 {
        return 0.0;
    }
    round2(100.0 * num as f64 / den as f64)
}

/// Half-up to two decimals. The nudge keeps exact ties such as 0.125 from
/// flipping with summation order (0.75 / 6 is a hair below 0.125).
fn round2(x: f64) -> f64 {
    (x * 100.0 + 1e-9).round() / 100.0
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionRow {
    pub id: String,
    #[serde(flatten)]
    pub score: PositionScore,
    /// Why no candidates were scored: a parse failure class, `gateway:<kind>` or `render`.
    pub failure: Option<String>,
    pub gt_name: String,
    pub gt_class: String,
    /// Candidate picked for the confusion matrices.
    pub pred_name: Option<String>,
    pub pred_class: Option<String>,
    pub pred_in_ontology: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRow {
    pub id: String,
    #[serde(flatten)]
    pub score: TransitionScore,
    pub failure: Option<String>,
    pub reaction_name: Option<String>,
    pub library_size: usize,
}

/// Rows are ground truth, columns are predictions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_pairs(pairs: &[(String, String)]) -> ConfusionMatrix {
        let labels: Vec<String> = pairs
            .iter()
            .flat_map(|(a, b)| [a.clone(), b.clone()])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let index: BTreeMap<&str, usize> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let mut counts = vec![vec![0u64; labels.len()]; labels.len()];
        for (gt, pred) in pairs {
            counts[index[gt.as_str()]][index[pred.as_str()]] += 1;
        }
        ConfusionMatrix { labels, counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["ground_truth \\ predicted".to_string()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for (label, row) in self.labels.iter().zip(&self.counts) {
            let mut rec = vec![label.clone()];
            rec.extend(row.iter().map(u64::to_string));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionReport {
    pub examples: usize,
    pub partial_match: f64,
    pub exact_match: f64,
    /// Name matches over all examples.
    pub reaction_accuracy: f64,
    /// Name matches over partial-match examples.
    pub reaction_accuracy_conditional: f64,
    /// As `reaction_accuracy`, counting only in-ontology names.
    pub reaction_accuracy_in_ontology: f64,
    pub mean_best_jaccard: f64,
    pub avg_number_of_predictions: f64,
    pub total_predictions: usize,
    pub failed_predictions: usize,
    pub failure_breakdown: BTreeMap<String, usize>,
    pub confusion_class: ConfusionMatrix,
    pub confusion_name: ConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionReport {
    pub examples: usize,
    pub template_accuracy: f64,
    pub reactant_accuracy: f64,
    pub combined_accuracy: f64,
    pub template_accuracy_gt_share: f64,
    pub avg_number_of_predictions: f64,
    pub total_predictions: usize,
    pub failed_predictions: usize,
    pub failure_breakdown: BTreeMap<String, usize>,
}

fn breakdown<'a>(failures: impl Iterator<Item = &'a Option<String>>) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for f in failures.flatten() {
        *out.entry(f.clone()).or_default() += 1;
    }
    out
}

fn bucket(name_or_class: &str, name: &str, unclassified: &str) -> String {
    if name_or_class.trim().is_empty() || normalize_name(name) == normalize_name(unclassified) {
        MISCELLANEOUS.to_string()
    } else {
        name_or_class.trim().to_string()
    }
}

/// Accuracies use every example as denominator (failures count as misses);
/// the prediction average skips failed examples. Confusion matrices use
/// partial-match examples whose picked candidate is in the ontology.
pub fn aggregate_position(rows: &[PositionRow], unclassified_label: &str) -> PositionReport {
    let n = rows.len();
    let count = |f: &dyn Fn(&PositionRow) -> bool| rows.iter().filter(|r| f(r)).count();
    let partial = count(&|r| r.score.partial_match);
    let live: Vec<&PositionRow> = rows.iter().filter(|r| !r.score.failed).collect();
    let mut class_pairs = Vec::new();
    let mut name_pairs = Vec::new();
    for r in rows
        .iter()
        .filter(|r| r.score.partial_match && r.pred_in_ontology == Some(true))
    {
        let (Some(pn), Some(pc)) = (&r.pred_name, &r.pred_class) else {
            continue;
        };
        class_pairs.push((
            bucket(&r.gt_class, &r.gt_name, unclassified_label),
            bucket(pc, pn, unclassified_label),
        ));
        name_pairs.push((
            bucket(&r.gt_name, &r.gt_name, unclassified_label),
            bucket(pn, pn, unclassified_label),
        ));
    }
    PositionReport {
        examples: n,
        partial_match: percent(partial, n),
        exact_match: percent(count(&|r| r.score.exact_match), n),
        reaction_accuracy: percent(count(&|r| r.score.reaction_match == Some(true)), n),
        reaction_accuracy_conditional: percent(
            count(&|r| r.score.reaction_match == Some(true)),
            partial,
        ),
        reaction_accuracy_in_ontology: percent(
            count(&|r| r.score.reaction_match_in_ontology == Some(true)),
            n,
        ),
        mean_best_jaccard: round2(mean(rows.iter().map(|r| r.score.best_jaccard))),
        avg_number_of_predictions: round2(mean(live.iter().map(|r| r.score.n_predictions as f64))),
        total_predictions: rows.iter().map(|r| r.score.n_predictions).sum(),
        failed_predictions: n - live.len(),
        failure_breakdown: breakdown(rows.iter().map(|r| &r.failure)),
        confusion_class: ConfusionMatrix::from_pairs(&class_pairs),
        confusion_name: ConfusionMatrix::from_pairs(&name_pairs),
    }
}

pub fn aggregate_transition(rows: &[TransitionRow]) -> TransitionReport {
    let n = rows.len();
    let count = |f: &dyn Fn(&TransitionScore) -> bool| rows.iter().filter(|r| f(&r.score)).count();
    let live: Vec<&TransitionRow> = rows.iter().filter(|r| !r.score.failed).collect();
    TransitionReport {
        examples: n,
        template_accuracy: percent(count(&|s| s.template_acc), n),
        reactant_accuracy: percent(count(&|s| s.reactant_acc), n),
        combined_accuracy: percent(count(&|s| s.combined_acc), n),
        template_accuracy_gt_share: percent(count(&|s| s.template_acc_gt_share), n),
        avg_number_of_predictions: round2(mean(live.iter().map(|r| r.score.n_predictions as f64))),
        total_predictions: rows.iter().map(|r| r.score.n_predictions).sum(),
        failed_predictions: n - live.len(),
        failure_breakdown: breakdown(rows.iter().map(|r| &r.failure)),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub position: Option<PositionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transition: Option<TransitionReport>,
}

fn csv_text(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

pub fn position_rows_csv(rows: &[PositionRow]) -> String {
    csv_text(
        &[
            "id",
            "failed",
            "failure",
            "n_predictions",
            "partial_match",
            "exact_match",
            "best_jaccard",
            "reaction_match",
            "reaction_match_in_ontology",
            "gt_name",
            "gt_class",
            "pred_name",
            "pred_class",
            "pred_in_ontology",
        ],
        rows.iter().map(|r| {
            vec![
                r.id.clone(),
                r.score.failed.to_string(),
                opt(&r.failure),
                r.score.n_predictions.to_string(),
                r.score.partial_match.to_string(),
                r.score.exact_match.to_string(),
                format!("{:.4}", r.score.best_jaccard),
                opt(&r.score.reaction_match),
                opt(&r.score.reaction_match_in_ontology),
                r.gt_name.clone(),
                r.gt_class.clone(),
                opt(&r.pred_name),
                opt(&r.pred_class),
                opt(&r.pred_in_ontology),
            ]
        }),
    )
}

pub fn transition_rows_csv(rows: &[TransitionRow]) -> String {
    csv_text(
        &[
            "id",
            "failed",
            "failure",
            "n_predictions",
            "reactant_acc",
            "template_acc",
            "combined_acc",
            "template_acc_gt_share",
            "reaction_name",
            "library_size",
        ],
        rows.iter().map(|r| {
            vec![
                r.id.clone(),
                r.score.failed.to_string(),
                opt(&r.failure),
                r.score.n_predictions.to_string(),
                r.score.reactant_acc.to_string(),
                r.score.template_acc.to_string(),
                r.score.combined_acc.to_string(),
                r.score.template_acc_gt_share.to_string(),
                opt(&r.reaction_name),
                r.library_size.to_string(),
            ]
        }),
    )
}

impl EvaluationReport {
    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        if let Some(p) = &self.position {
            let _ = writeln!(s, "Position model ({} examples)", p.examples);
            let lines: [(&str, String); 10] = [
                ("partial match accuracy", format!("{:.2}", p.partial_match)),
                ("exact match accuracy", format!("{:.2}", p.exact_match)),
                ("reaction accuracy", format!("{:.2}", p.reaction_accuracy)),
                (
                    "reaction accuracy | partial",
                    format!("{:.2}", p.reaction_accuracy_conditional),
                ),
                (
                    "reaction accuracy (ontology)",
                    format!("{:.2}", p.reaction_accuracy_in_ontology),
                ),
                ("mean best jaccard", format!("{:.2}", p.mean_best_jaccard)),
                (
                    "avg number of predictions",
                    format!("{:.2}", p.avg_number_of_predictions),
                ),
                ("total predictions", p.total_predictions.to_string()),
                ("failed predictions", p.failed_predictions.to_string()),
                ("confusion entries", p.confusion_class.total().to_string()),
            ];
            for (k, v) in lines {
                let _ = writeln!(s, "  {k:<30} {v:>8}");
            }
        }
        if let Some(t) = &self.transition {
            if !s.is_empty() {
                s.push('\n');
            }
            let _ = writeln!(s, "Transition model ({} examples)", t.examples);
            let lines: [(&str, String); 7] = [
                ("reactant accuracy", format!("{:.2}", t.reactant_accuracy)),
                ("template accuracy", format!("{:.2}", t.template_accuracy)),
                ("combined accuracy", format!("{:.2}", t.combined_accuracy)),
                (
                    "template accuracy (gt share)",
                    format!("{:.2}", t.template_accuracy_gt_share),
                ),
                (
                    "avg number of predictions",
                    format!("{:.2}", t.avg_number_of_predictions),
                ),
                ("total predictions", t.total_predictions.to_string()),
                ("failed predictions", t.failed_predictions.to_string()),
            ];
            for (k, v) in lines {
                let _ = writeln!(s, "  {k:<30} {v:>8}");
            }
        }
        s
    }
}
