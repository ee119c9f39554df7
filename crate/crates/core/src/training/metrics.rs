//! Classification metrics. Binary problems treat class 1 as positive;
//! multiclass problems macro-average one-vs-rest scores.

use crate::error::{DaqcError, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub auc: f64,
    pub acc: f64,
    pub specificity: f64,
    pub sensitivity: f64,
    pub f1: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<u64>>,
    pub n_samples: usize,
}

/// Area under the ROC curve as the Mann–Whitney rank statistic: the fraction of
/// (positive, negative) pairs ranked correctly, ties counting one half.
pub fn auc(scores: &[f64], positive: &[bool]) -> Result<f64> {
    if scores.len() != positive.len() {
        return Err(DaqcError::Shape(format!(
            "{} scores for {} labels",
            scores.len(),
            positive.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(DaqcError::Numeric("NaN score".into()));
    }
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(DaqcError::AucUndefined(format!(
            "{n_pos} positives and {n_neg} negatives"
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // sum of midranks (1-based) of the positives
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += mid * order[i..=j].iter().filter(|&&k| positive[k]).count() as f64;
        i = j + 1;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Metrics from per-sample class probabilities (or any per-class scores whose
/// argmax is the prediction).
pub fn classification_report(
    probs: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
) -> Result<MetricsReport> {
    if probs.len() != labels.len() {
        return Err(DaqcError::Shape(format!(
            "{} predictions for {} labels",
            probs.len(),
            labels.len()
        )));
    }
    if probs.is_empty() {
        return Err(DaqcError::Data("cannot evaluate an empty split".into()));
    }
    if n_classes < 2 {
        return Err(DaqcError::Config("need at least two classes".into()));
    }
    let mut confusion = vec![vec![0u64; n_classes]; n_classes];
    for (p, &y) in probs.iter().zip(labels) {
        if p.len() != n_classes {
            return Err(DaqcError::Shape(format!(
                "score row of length {} for {n_classes} classes",
                p.len()
            )));
        }
        if y >= n_classes {
            return Err(DaqcError::Label(format!("label {y} outside {n_classes} classes")));
        }
        // first maximum wins, so ties resolve deterministically
        let pred = p
            .iter()
            .enumerate()
            .fold(0, |best, (c, &v)| if v > p[best] { c } else { best });
        confusion[y][pred] += 1;
    }
    let total = labels.len() as u64;
    let correct: u64 = (0..n_classes).map(|c| confusion[c][c]).sum();

    let one_vs_rest = |c: usize| -> Result<[f64; 4]> {
        let tp = confusion[c][c];
        let fn_: u64 = confusion[c].iter().sum::<u64>() - tp;
        let fp: u64 = (0..n_classes).map(|r| confusion[r][c]).sum::<u64>() - tp;
        let tn = total - tp - fn_ - fp;
        let scores: Vec<f64> = probs.iter().map(|p| p[c]).collect();
        let pos: Vec<bool> = labels.iter().map(|&y| y == c).collect();
        Ok([
            auc(&scores, &pos)?,
            ratio(tn, tn + fp),
            ratio(tp, tp + fn_),
            ratio(2 * tp, 2 * tp + fp + fn_),
        ])
    };
    let [auc, specificity, sensitivity, f1] = if n_classes == 2 {
        one_vs_rest(1)?
    } else {
        let mut acc = [0.0; 4];
        for c in 0..n_classes {
            let v = one_vs_rest(c)?;
            for (a, x) in acc.iter_mut().zip(v) {
                *a += x / n_classes as f64;
            }
        }
        acc
    };
    Ok(MetricsReport {
        auc,
        acc: correct as f64 / total as f64,
        specificity,
        sensitivity,
        f1,
        confusion,
        n_samples: labels.len(),
    })
}
