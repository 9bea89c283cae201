//! Ranking and classification metrics over one positive versus its sampled
//! negatives.
//!
//! Ties: MRR ranks a positive at `1 + #(neg > pos) + #(neg = pos)/2`,
//! Hits@P ranks it pessimistically at `1 + #(neg >= pos)`, and AUC gives
//! half credit to tied pairs.

use serde::Serialize;

use crate::{Error, Result};

/// A positive score and the scores of the negatives it is ranked against.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedQueryScores {
    pub pos_score: f64,
    pub neg_scores: Vec<f64>,
}

impl RankedQueryScores {
    pub fn new(pos_score: f64, neg_scores: Vec<f64>) -> Self {
        Self {
            pos_score,
            neg_scores,
        }
    }

    fn counts(&self) -> (usize, usize) {
        let above = self
            .neg_scores
            .iter()
            .filter(|&&s| s > self.pos_score)
            .count();
        let tied = self
            .neg_scores
            .iter()
            .filter(|&&s| s == self.pos_score)
            .count();
        (above, tied)
    }

    /// Tie-averaged rank of the positive (1-based).
    pub fn rank(&self) -> f64 {
        let (above, tied) = self.counts();
        1.0 + above as f64 + tied as f64 / 2.0
    }

    /// Rank with every tied negative placed ahead of the positive.
    pub fn pessimistic_rank(&self) -> usize {
        let (above, tied) = self.counts();
        1 + above + tied
    }
}

/// One emitted metric line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRecord {
    pub metric: String,
    pub value: f64,
    pub n_queries: usize,
    /// Number of exact score ties that touched the result.
    pub ties: usize,
}

fn check_batch(batch: &[RankedQueryScores]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::validation("empty evaluation batch"));
    }
    for (i, q) in batch.iter().enumerate() {
        if q.neg_scores.is_empty() {
            return Err(Error::validation(format!("query {i} has no negatives")));
        }
        if !q.pos_score.is_finite() || q.neg_scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::validation(format!(
                "query {i} has non-finite scores"
            )));
        }
    }
    Ok(())
}

/// Mean reciprocal rank.
pub fn mrr(batch: &[RankedQueryScores]) -> Result<f64> {
    check_batch(batch)?;
    Ok(batch.iter().map(|q| 1.0 / q.rank()).sum::<f64>() / batch.len() as f64)
}

/// Fraction of positives whose pessimistic rank is within the top `p`.
pub fn hits_at(batch: &[RankedQueryScores], p: usize) -> Result<f64> {
    if p == 0 {
        return Err(Error::validation("Hits@P needs P >= 1"));
    }
    check_batch(batch)?;
    let hits = batch.iter().filter(|q| q.pessimistic_rank() <= p).count();
    Ok(hits as f64 / batch.len() as f64)
}

/// Number of negatives tied with their positive, over the batch.
pub fn count_rank_ties(batch: &[RankedQueryScores]) -> usize {
    batch.iter().map(|q| q.counts().1).sum()
}

/// ROC-AUC as the Mann–Whitney statistic `P(pos > neg) + P(pos = neg)/2`,
/// computed from tie-averaged ranks.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::validation("scores and labels differ in length"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::validation("non-finite score"));
    }
    let n_pos = labels.iter().filter(|&&y| y).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::validation(
            "AUC needs both positive and negative labels",
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut pos_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1..=j+1 share their mean.
        let mean_rank = (i + j) as f64 / 2.0 + 1.0;
        let pos_in_run = order[i..=j].iter().filter(|&&t| labels[t]).count();
        pos_rank_sum += mean_rank * pos_in_run as f64;
        i = j + 1;
    }
    let u = pos_rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Number of score values shared by at least two entries.
pub fn count_score_ties(scores: &[f64]) -> usize {
    let mut s = scores.to_vec();
    s.sort_by(f64::total_cmp);
    s.windows(2).filter(|w| w[0] == w[1]).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn best_and_worst_positive() {
        let best = [RankedQueryScores::new(2.0, vec![1.0, 0.5, -3.0])];
        assert_eq!(mrr(&best).unwrap(), 1.0);
        assert_eq!(hits_at(&best, 1).unwrap(), 1.0);
        let worst = [RankedQueryScores::new(-5.0, vec![1.0, 0.5, -3.0])];
        assert_eq!(mrr(&worst).unwrap(), 0.25);
        assert_eq!(hits_at(&worst, 3).unwrap(), 0.0);
        assert_eq!(hits_at(&worst, 4).unwrap(), 1.0);
    }

    #[test]
    fn tie_rules() {
        let q = [RankedQueryScores::new(1.0, vec![1.0, 0.0])];
        assert_eq!(mrr(&q).unwrap(), 1.0 / 1.5);
        assert_eq!(hits_at(&q, 1).unwrap(), 0.0);
        assert_eq!(hits_at(&q, 2).unwrap(), 1.0);
        assert_eq!(count_rank_ties(&q), 1);
    }

    #[test]
    fn invalid_batches() {
        assert!(mrr(&[]).is_err());
        assert!(mrr(&[RankedQueryScores::new(1.0, vec![])]).is_err());
        assert!(hits_at(&[RankedQueryScores::new(1.0, vec![0.0])], 0).is_err());
        assert!(mrr(&[RankedQueryScores::new(f64::NAN, vec![0.0])]).is_err());
    }

    #[test]
    fn auc_cases() {
        assert_eq!(
            auc(&[0.9, 0.8, 0.1, 0.2], &[true, true, false, false]).unwrap(),
            1.0
        );
        assert_eq!(
            auc(&[0.3; 6], &[true, false, true, false, false, true]).unwrap(),
            0.5
        );
        assert_eq!(auc(&[0.1, 0.9], &[true, false]).unwrap(), 0.0);
        assert!(auc(&[0.1, 0.2], &[true, true]).is_err());
        assert!(auc(&[0.1], &[true, false]).is_err());
        assert_eq!(count_score_ties(&[1.0, 2.0, 1.0, 1.0]), 2);
    }
}
