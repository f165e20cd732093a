//! ROC AUC from the Mann–Whitney rank statistic.

use crate::error::{Error, Result};

/// Area under the ROC curve of `scores` against binary `labels`, with tied
/// scores given their average rank.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("scores"));
    }
    let positives = labels.iter().filter(|l| **l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::invalid("AUC needs at least one positive and one negative"));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && scores[order[end + 1]] == scores[order[start]] {
            end += 1;
        }
        // 1-based ranks start+1..=end+1 share their mean.
        let avg = (start + end) as f64 / 2.0 + 1.0;
        rank_sum += avg * order[start..=end].iter().filter(|&&i| labels[i]).count() as f64;
        start = end + 1;
    }
    let p = positives as f64;
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * negatives as f64))
}

/// AUC over all ordered pairs `i != j` of square score and 0/1 truth
/// matrices.
pub fn edge_auc(scores: &[Vec<f64>], truth: &[Vec<bool>]) -> Result<f64> {
    let m = scores.len();
    let square = scores.iter().all(|r| r.len() == m) && truth.iter().all(|r| r.len() == m);
    if truth.len() != m || !square {
        return Err(Error::invalid("score and truth matrices must be square and of equal size"));
    }
    let (s, l): (Vec<f64>, Vec<bool>) = (0..m)
        .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| (scores[i][j], truth[i][j]))
        .unzip();
    roc_auc(&s, &l)
}
