//! Prediction metrics (accuracy / precision / recall / F1, with per-source
//! sub-reports) and per-page coverage recall.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::context::ExampleSource;
use crate::error::{Error, Result};

/// Binary confusion counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn from_pairs(predictions: &[u8], labels: &[u8]) -> Self {
        let mut c = ConfusionCounts::default();
        for (&p, &y) in predictions.iter().zip(labels) {
            match (p, y) {
                (1, 1) => c.tp += 1,
                (1, 0) => c.fp += 1,
                (0, 1) => c.fn_ += 1,
                _ => c.tn += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Accuracy, precision, recall, and F1. A metric whose denominator is zero
/// is reported as absent, never as 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BinaryMetrics {
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

impl BinaryMetrics {
    pub fn from_counts(c: &ConfusionCounts) -> Self {
        let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
        let accuracy = ratio(c.tp + c.tn, c.total());
        let precision = ratio(c.tp, c.tp + c.fp);
        let recall = ratio(c.tp, c.tp + c.fn_);
        let f1 = match (precision, recall) {
            (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
            _ => None,
        };
        BinaryMetrics {
            accuracy,
            precision,
            recall,
            f1,
        }
    }
}

/// Convenience: F1 of a prediction/label pairing, 0 when undefined (used as
/// a training monitor where "no positives predicted" must rank worst).
pub fn f1_score(predictions: &[u8], labels: &[u8]) -> f64 {
    BinaryMetrics::from_counts(&ConfusionCounts::from_pairs(predictions, labels))
        .f1
        .unwrap_or(0.0)
}

/// Per-page coverage: recall per page, their unweighted mean, the population
/// standard deviation, and the pooled recall over all pages.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerPageReport {
    pub pages: Vec<(String, f64)>,
    pub avg_recall: f64,
    pub recall_std: f64,
    pub pooled_recall: f64,
    /// Pages dropped because they had no positive ground truth.
    pub skipped_pages: Vec<String>,
}

/// Full metric report for a labeled evaluation set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    pub overall: BinaryMetrics,
    pub counts: ConfusionCounts,
    /// Metrics over manually labeled samples only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manual: Option<BinaryMetrics>,
    /// Recall over externally annotated (positive-only) samples.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub llm_recall: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_page: Option<PerPageReport>,
}

/// Standard binary-classification metrics, with per-source sub-reports when
/// sources are supplied. Externally annotated samples are positive-only, so
/// only their recall is reported.
pub fn compute_metrics(
    predictions: &[u8],
    labels: &[u8],
    sources: Option<&[ExampleSource]>,
) -> Result<MetricReport> {
    if predictions.is_empty() {
        return Err(Error::Eval("empty evaluation set".into()));
    }
    if predictions.len() != labels.len() {
        return Err(Error::Eval(format!(
            "{} predictions vs {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let counts = ConfusionCounts::from_pairs(predictions, labels);
    let overall = BinaryMetrics::from_counts(&counts);

    let mut manual = None;
    let mut llm_recall = None;
    if let Some(sources) = sources {
        if sources.len() != predictions.len() {
            return Err(Error::Eval("sources length mismatch".into()));
        }
        let subset = |want: ExampleSource| -> (Vec<u8>, Vec<u8>) {
            predictions
                .iter()
                .zip(labels)
                .zip(sources)
                .filter(|&(_, &s)| s == want)
                .map(|((&p, &y), _)| (p, y))
                .unzip()
        };
        let (mp, ml) = subset(ExampleSource::Manual);
        if !mp.is_empty() {
            manual = Some(BinaryMetrics::from_counts(&ConfusionCounts::from_pairs(
                &mp, &ml,
            )));
        }
        let (gp, gl) = subset(ExampleSource::Llm);
        if !gp.is_empty() {
            llm_recall = BinaryMetrics::from_counts(&ConfusionCounts::from_pairs(&gp, &gl)).recall;
        }
    }

    Ok(MetricReport {
        overall,
        counts,
        manual,
        llm_recall,
        per_page: None,
    })
}

/// Recall per biography page. Pages with zero positive ground-truth items
/// are excluded with a warning. Returns the per-page list (sorted by page
/// id), the unweighted mean, population standard deviation, and the pooled
/// recall over all counted pages.
pub fn per_page_recall(items: &[(String, u8, u8)]) -> Result<PerPageReport> {
    if items.is_empty() {
        return Err(Error::Eval("empty per-page evaluation set".into()));
    }
    let mut by_page: BTreeMap<&str, (usize, usize)> = BTreeMap::new(); // (tp, positives)
    for (page, pred, label) in items {
        let entry = by_page.entry(page.as_str()).or_default();
        if *label == 1 {
            entry.1 += 1;
            if *pred == 1 {
                entry.0 += 1;
            }
        }
    }
    let mut pages = Vec::new();
    let mut skipped = Vec::new();
    let (mut pooled_tp, mut pooled_pos) = (0usize, 0usize);
    for (page, (tp, pos)) in &by_page {
        if *pos == 0 {
            log::warn!("page {page} has no positive ground truth; excluded from coverage");
            skipped.push(page.to_string());
            continue;
        }
        pages.push((page.to_string(), *tp as f64 / *pos as f64));
        pooled_tp += tp;
        pooled_pos += pos;
    }
    if pages.is_empty() {
        return Err(Error::Eval(
            "no page with positive ground truth in the coverage set".into(),
        ));
    }
    let n = pages.len() as f64;
    let avg = pages.iter().map(|(_, r)| r).sum::<f64>() / n;
    let var = pages.iter().map(|(_, r)| (r - avg) * (r - avg)).sum::<f64>() / n;
    Ok(PerPageReport {
        avg_recall: avg,
        recall_std: var.sqrt(),
        pooled_recall: pooled_tp as f64 / pooled_pos as f64,
        pages,
        skipped_pages: skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_case_tp2_fp1_fn1_tn6() {
        // predictions/labels with TP=2, FP=1, FN=1, TN=6
        let preds = vec![1, 1, 1, 0, 0, 0, 0, 0, 0, 0];
        let labels = vec![1, 1, 0, 1, 0, 0, 0, 0, 0, 0];
        let report = compute_metrics(&preds, &labels, None).unwrap();
        let two_thirds = 2.0 / 3.0;
        assert!((report.overall.accuracy.unwrap() - 0.8).abs() < 1e-12);
        assert!((report.overall.precision.unwrap() - two_thirds).abs() < 1e-12);
        assert!((report.overall.recall.unwrap() - two_thirds).abs() < 1e-12);
        assert!((report.overall.f1.unwrap() - two_thirds).abs() < 1e-12);
    }

    #[test]
    fn all_correct_is_all_ones() {
        let preds = vec![1, 0, 1, 0];
        let report = compute_metrics(&preds, &preds, None).unwrap();
        for m in [
            report.overall.accuracy,
            report.overall.precision,
            report.overall.recall,
            report.overall.f1,
        ] {
            assert_eq!(m, Some(1.0));
        }
    }

    #[test]
    fn zero_denominator_is_undefined_not_zero() {
        // no predicted positives -> precision undefined
        let report = compute_metrics(&[0, 0], &[1, 0], None).unwrap();
        assert_eq!(report.overall.precision, None);
        assert_eq!(report.overall.recall, Some(0.0));
        assert_eq!(report.overall.f1, None);
        // no actual positives -> recall undefined
        let report = compute_metrics(&[0, 1], &[0, 0], None).unwrap();
        assert_eq!(report.overall.recall, None);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(compute_metrics(&[], &[], None).is_err());
    }

    #[test]
    fn matches_confusion_matrix_oracle_on_random_fixtures() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let n = rng.random_range(1..=50);
            let preds: Vec<u8> = (0..n).map(|_| rng.random_range(0..2) as u8).collect();
            let labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2) as u8).collect();
            // independent loop oracle
            let (mut tp, mut fp, mut fnn, mut tn) = (0, 0, 0, 0);
            for i in 0..n {
                if preds[i] == 1 && labels[i] == 1 {
                    tp += 1;
                } else if preds[i] == 1 {
                    fp += 1;
                } else if labels[i] == 1 {
                    fnn += 1;
                } else {
                    tn += 1;
                }
            }
            let report = compute_metrics(&preds, &labels, None).unwrap();
            assert_eq!(
                report.counts,
                ConfusionCounts {
                    tp,
                    fp,
                    fn_: fnn,
                    tn
                }
            );
            let acc = (tp + tn) as f64 / n as f64;
            assert!((report.overall.accuracy.unwrap() - acc).abs() < 1e-12);
            if tp + fp > 0 {
                let p = tp as f64 / (tp + fp) as f64;
                assert!((report.overall.precision.unwrap() - p).abs() < 1e-12);
            } else {
                assert!(report.overall.precision.is_none());
            }
        }
    }

    #[test]
    fn source_subreports() {
        let preds = vec![1, 0, 1, 1];
        let labels = vec![1, 1, 1, 0];
        let sources = vec![
            ExampleSource::Manual,
            ExampleSource::Llm,
            ExampleSource::Llm,
            ExampleSource::Manual,
        ];
        let report = compute_metrics(&preds, &labels, Some(&sources)).unwrap();
        // manual subset: (1,1), (1,0) -> P=1/2, R=1
        let manual = report.manual.unwrap();
        assert!((manual.precision.unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(manual.recall, Some(1.0));
        // llm subset: (0,1), (1,1) -> recall 1/2, and only recall is surfaced
        assert!((report.llm_recall.unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn per_page_two_pages() {
        let items = vec![
            ("a".to_string(), 1, 1),
            ("a".to_string(), 1, 1),
            ("b".to_string(), 1, 1),
            ("b".to_string(), 0, 1),
        ];
        let report = per_page_recall(&items).unwrap();
        assert!((report.avg_recall - 0.75).abs() < 1e-12);
        assert!((report.recall_std - 0.25).abs() < 1e-12);
        assert!((report.pooled_recall - 0.75).abs() < 1e-12);
    }

    #[test]
    fn single_page_has_zero_std() {
        let items = vec![("a".to_string(), 1, 1), ("a".to_string(), 0, 1)];
        let report = per_page_recall(&items).unwrap();
        assert_eq!(report.recall_std, 0.0);
        assert!((report.avg_recall - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_positive_page_is_skipped() {
        let items = vec![
            ("empty".to_string(), 1, 0),
            ("full".to_string(), 1, 1),
        ];
        let report = per_page_recall(&items).unwrap();
        assert_eq!(report.pages.len(), 1);
        assert_eq!(report.skipped_pages, vec!["empty".to_string()]);
    }

    #[test]
    fn per_page_matches_loop_oracle_and_pooled_identity() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(37);
        let mut items = Vec::new();
        for page in 0..10 {
            let count = rng.random_range(1..=8);
            let mut has_pos = false;
            for _ in 0..count {
                let label = rng.random_range(0..2) as u8;
                has_pos |= label == 1;
                items.push((format!("page{page}"), rng.random_range(0..2) as u8, label));
            }
            if !has_pos {
                items.push((format!("page{page}"), 1, 1));
            }
        }
        let report = per_page_recall(&items).unwrap();
        // loop oracle
        let mut page_recalls = Vec::new();
        let (mut ptp, mut ppos) = (0.0, 0.0);
        for page in 0..10 {
            let id = format!("page{page}");
            let pos: Vec<_> = items.iter().filter(|(p, _, y)| *p == id && *y == 1).collect();
            let tp = pos.iter().filter(|(_, pred, _)| *pred == 1).count();
            page_recalls.push(tp as f64 / pos.len() as f64);
            ptp += tp as f64;
            ppos += pos.len() as f64;
        }
        let avg = page_recalls.iter().sum::<f64>() / page_recalls.len() as f64;
        assert!((report.avg_recall - avg).abs() < 1e-12);
        assert!((report.pooled_recall - ptp / ppos).abs() < 1e-12);
        // pooled recall is the positive-count-weighted mean of page recalls
        let weighted: f64 = items
            .iter()
            .filter(|(_, _, y)| *y == 1)
            .map(|(p, _, _)| {
                let idx: usize = p.trim_start_matches("page").parse().unwrap();
                page_recalls[idx]
            })
            .sum::<f64>()
            / ppos;
        assert!((report.pooled_recall - weighted).abs() < 1e-12);
    }

    #[test]
    fn metrics_are_permutation_invariant() {
        let preds = vec![1, 0, 1, 1, 0];
        let labels = vec![1, 1, 0, 1, 0];
        let base = compute_metrics(&preds, &labels, None).unwrap();
        let perm = [4, 2, 0, 3, 1];
        let p2: Vec<u8> = perm.iter().map(|&i| preds[i]).collect();
        let l2: Vec<u8> = perm.iter().map(|&i| labels[i]).collect();
        let shuffled = compute_metrics(&p2, &l2, None).unwrap();
        assert_eq!(base.counts, shuffled.counts);
    }

    #[test]
    fn f1_bounded_by_precision_and_recall() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        for _ in 0..50 {
            let n = rng.random_range(2..=30);
            let preds: Vec<u8> = (0..n).map(|_| rng.random_range(0..2) as u8).collect();
            let labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2) as u8).collect();
            let m = compute_metrics(&preds, &labels, None).unwrap().overall;
            if let (Some(p), Some(r), Some(f1)) = (m.precision, m.recall, m.f1) {
                assert!(f1 <= p.max(r) + 1e-12);
                assert!(f1 >= p.min(r) - 1e-12);
            }
        }
    }
}
