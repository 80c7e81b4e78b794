//! ROC/AUC and rank statistics shared by the contextual and temporal
//! evaluators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A scored instance; `positive` is the ground-truth class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scored {
    pub score: f64,
    pub positive: bool,
}

impl Scored {
    pub fn new(score: f64, positive: bool) -> Self {
        Self { score, positive }
    }
}

/// One operating point. `threshold` is the lowest score still predicted
/// positive; the `(0, 0)` sentinel has no threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: Option<f64>,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocResult {
    pub points: Vec<RocPoint>,
    pub auc: f64,
    pub n_pos: usize,
    pub n_neg: usize,
}

impl RocResult {
    /// `threshold,fpr,tpr` lines with a header; the sentinel threshold is
    /// written as `inf`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,fpr,tpr\n");
        for p in &self.points {
            match p.threshold {
                Some(t) => out.push_str(&format!("{t},{},{}\n", p.fpr, p.tpr)),
                None => out.push_str(&format!("inf,{},{}\n", p.fpr, p.tpr)),
            }
        }
        out
    }
}

fn class_counts(scores: &[Scored]) -> Result<(usize, usize)> {
    if let Some(s) = scores.iter().find(|s| !s.score.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite score {}", s.score)));
    }
    let n_pos = scores.iter().filter(|s| s.positive).count();
    let n_neg = scores.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass(format!(
            "ROC needs both classes, got {n_pos} positive and {n_neg} negative"
        )));
    }
    Ok((n_pos, n_neg))
}

/// Sweep every distinct score from high to low. Tied scores move FPR and
/// TPR together in one step, so the trapezoid area equals the Mann–Whitney
/// statistic with half credit for ties.
pub fn roc_from_scores(scores: &[Scored]) -> Result<RocResult> {
    let (n_pos, n_neg) = class_counts(scores)?;
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| b.score.total_cmp(&a.score));

    let mut points = vec![RocPoint {
        threshold: None,
        fpr: 0.0,
        tpr: 0.0,
    }];
    // Twice the area in units of one (pos, neg) cell, kept as an integer.
    let mut twice_area: u128 = 0;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < sorted.len() {
        let threshold = sorted[i].score;
        let (tp_prev, fp_prev) = (tp, fp);
        while i < sorted.len() && sorted[i].score == threshold {
            if sorted[i].positive {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        twice_area += ((fp - fp_prev) * (tp + tp_prev)) as u128;
        points.push(RocPoint {
            threshold: Some(threshold),
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
        });
    }
    let auc = twice_area as f64 / (2.0 * n_pos as f64 * n_neg as f64);
    Ok(RocResult {
        points,
        auc,
        n_pos,
        n_neg,
    })
}

/// Trapezoidal area under a list of ROC points.
pub fn trapezoid_area(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum()
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half, by direct enumeration of all pairs.
pub fn auc_mannwhitney(scores: &[Scored]) -> Result<f64> {
    let (n_pos, n_neg) = class_counts(scores)?;
    let mut twice_wins: u128 = 0;
    for p in scores.iter().filter(|s| s.positive) {
        for n in scores.iter().filter(|s| !s.positive) {
            if p.score > n.score {
                twice_wins += 2;
            } else if p.score == n.score {
                twice_wins += 1;
            }
        }
    }
    Ok(twice_wins as f64 / (2.0 * n_pos as f64 * n_neg as f64))
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        // Positions i..=j hold ranks i+1..=j+1.
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Spearman's rho: Pearson correlation of average ranks.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "Spearman correlation needs at least 3 points, got {}",
            x.len()
        )));
    }
    if let Some(v) = x.iter().chain(y).find(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite value {v}")));
    }
    for (name, v) in [("x", x), ("y", y)] {
        if v.iter().all(|a| *a == v[0]) {
            return Err(Error::ConstantVector(format!(
                "Spearman correlation undefined: {name} is constant"
            )));
        }
    }
    Ok(pearson(&average_ranks(x), &average_ranks(y)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labelled(pos: &[f64], neg: &[f64]) -> Vec<Scored> {
        pos.iter()
            .map(|&s| Scored::new(s, true))
            .chain(neg.iter().map(|&s| Scored::new(s, false)))
            .collect()
    }

    #[test]
    fn perfect_and_inverted() {
        let r = roc_from_scores(&labelled(&[2.0], &[1.0])).unwrap();
        let pts: Vec<(f64, f64)> = r.points.iter().map(|p| (p.fpr, p.tpr)).collect();
        assert_eq!(pts, vec![(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)]);
        assert_eq!(r.auc, 1.0);
        assert_eq!(roc_from_scores(&labelled(&[1.0], &[2.0])).unwrap().auc, 0.0);
    }

    #[test]
    fn three_of_four_concordant() {
        let s = labelled(&[0.9, 0.7], &[0.8, 0.6]);
        assert_eq!(roc_from_scores(&s).unwrap().auc, 0.75);
        assert_eq!(auc_mannwhitney(&s).unwrap(), 0.75);
    }

    #[test]
    fn ties_get_half_credit() {
        let s = labelled(&[1.0], &[1.0]);
        assert_eq!(auc_mannwhitney(&s).unwrap(), 0.5);
        let r = roc_from_scores(&s).unwrap();
        assert_eq!(r.auc, 0.5);
        assert_eq!(r.points.len(), 2);
    }

    #[test]
    fn single_class_is_undefined() {
        let err = roc_from_scores(&labelled(&[1.0, 2.0], &[])).unwrap_err();
        assert!(err.is_evaluation_undefined());
        assert!(auc_mannwhitney(&labelled(&[], &[1.0])).is_err());
    }

    #[test]
    fn non_finite_score_rejected() {
        let s = labelled(&[f64::NAN], &[1.0]);
        assert!(matches!(roc_from_scores(&s), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn points_are_monotone_with_endpoints() {
        let s = labelled(&[0.3, 0.3, 0.9, 0.1], &[0.3, 0.5, 0.0]);
        let r = roc_from_scores(&s).unwrap();
        assert_eq!((r.points[0].fpr, r.points[0].tpr), (0.0, 0.0));
        let last = r.points.last().unwrap();
        assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        assert!(r
            .points
            .windows(2)
            .all(|w| w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr));
        assert!((trapezoid_area(&r.points) - r.auc).abs() < 1e-12);
    }

    #[test]
    fn roc_csv_layout() {
        let r = roc_from_scores(&labelled(&[2.0], &[1.0])).unwrap();
        assert_eq!(r.to_csv(), "threshold,fpr,tpr\ninf,0,0\n2,0,1\n1,1,1\n");
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(average_ranks(&[1.0, 2.0, 2.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(average_ranks(&[3.0, 1.0, 2.0]), vec![3.0, 1.0, 2.0]);
    }

    #[test]
    fn spearman_examples() {
        assert!((spearman_rho(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman_rho(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        // ranks x = [1, 2.5, 2.5, 4], y = [1, 3, 2, 4]; centered sums:
        // Σxy = 4.5, Σxx = 4.5, Σyy = 5, so rho = 4.5 / sqrt(22.5) = sqrt(0.9).
        let rho = spearman_rho(&[1.0, 2.0, 2.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((rho - 0.9f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn spearman_errors() {
        let err = spearman_rho(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap_err();
        assert!(err.is_evaluation_undefined());
        assert!(spearman_rho(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(spearman_rho(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
    }
}
