//! Ranking metrics over groups of binary labels listed in ranked order.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankMetrics {
    pub map: f64,
    pub mrr: f64,
    pub p_at_1: f64,
}

/// MAP, MRR, and P@1 over ranked label lists. Groups that are entirely
/// correct or entirely incorrect carry no ranking signal and are excluded
/// before averaging.
pub fn eval_rank(groups: &[Vec<u8>]) -> Result<RankMetrics> {
    let survivors: Vec<&Vec<u8>> = groups
        .iter()
        .filter(|g| g.iter().any(|&l| l == 1) && g.iter().any(|&l| l == 0))
        .collect();
    if survivors.is_empty() {
        return Err(Error::Data(
            "every group was all-correct or all-incorrect".into(),
        ));
    }
    let mut map = 0.0;
    let mut mrr = 0.0;
    let mut p1 = 0.0;
    for labels in &survivors {
        let mut hits = 0usize;
        let mut ap = 0.0;
        for (rank0, &label) in labels.iter().enumerate() {
            if label == 1 {
                hits += 1;
                ap += hits as f64 / (rank0 + 1) as f64;
                if hits == 1 {
                    mrr += 1.0 / (rank0 + 1) as f64;
                }
            }
        }
        map += ap / hits as f64;
        if labels[0] == 1 {
            p1 += 1.0;
        }
    }
    let n = survivors.len() as f64;
    Ok(RankMetrics {
        map: map / n,
        mrr: mrr / n,
        p_at_1: p1 / n,
    })
}
