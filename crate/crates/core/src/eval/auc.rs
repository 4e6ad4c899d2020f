use crate::error::{shape_err, Error, Result};

/// Scores with binary ground truth; `true` marks the positive (abnormal) class.
#[derive(Debug, Clone, Copy)]
pub struct ScoredSet<'a> {
    pub scores: &'a [f64],
    pub positive: &'a [bool],
}

/// ROC-AUC as the Mann–Whitney probability that a random positive
/// outscores a random negative, ties counting one half.
///
/// Computed from mid-ranks. Twice the U statistic is an integer, so the
/// result is exactly `(wins + ties/2) / (P·N)`.
pub fn auc(set: ScoredSet<'_>) -> Result<f64> {
    let n = set.scores.len();
    if set.positive.len() != n {
        return Err(shape_err("auc ground truth", n, set.positive.len()));
    }
    if let Some(i) = set.scores.iter().position(|s| s.is_nan()) {
        return Err(Error::Domain(format!("score {i} is NaN")));
    }
    let pos = set.positive.iter().filter(|&&p| p).count();
    let neg = n - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Domain(format!(
            "AUC needs both classes, got {pos} positive and {neg} negative"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| set.scores[a].total_cmp(&set.scores[b]));

    // Sum of doubled mid-ranks (1-based) over positives.
    let mut twice_rank_sum: u128 = 0;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && set.scores[order[end]] == set.scores[order[start]] {
            end += 1;
        }
        // Ranks start+1 ..= end share the mid-rank (start + 1 + end) / 2.
        let twice_mid = (start + 1 + end) as u128;
        let positives = order[start..end].iter().filter(|&&i| set.positive[i]).count() as u128;
        twice_rank_sum += twice_mid * positives;
        start = end;
    }
    let p = pos as u128;
    let twice_u = twice_rank_sum - p * (p + 1);
    Ok((twice_u as f64 * 0.5) / (pos as f64 * neg as f64))
}
