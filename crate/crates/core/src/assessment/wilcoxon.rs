//! Wilcoxon signed-rank test on paired samples.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::paired::{describe, PairedTestReport, RankCounts, TestKind};
use super::{check_finite, StatsError};

/// Largest number of non-zero differences tested exactly.
pub const EXACT_MAX_N: usize = 12;
const MIN_NON_ZERO: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMethod {
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonDetail {
    pub method: WilcoxonMethod,
    /// Non-zero differences that were ranked.
    pub n_effective: usize,
    /// Rank sum of positive `pre - post` differences.
    pub r_plus: f64,
    pub r_minus: f64,
    /// Standardized statistic, reported for the normal approximation.
    pub z: Option<f64>,
}

/// Average ranks (1-based) of `values`, ties sharing their mean rank.
pub(crate) fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[order[k]] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Sizes of tie groups among `values`.
fn tie_groups(values: &[f64]) -> Vec<usize> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mut groups = Vec::new();
    let mut i = 0;
    while i < v.len() {
        let mut j = i;
        while j + 1 < v.len() && v[j + 1] == v[i] {
            j += 1;
        }
        groups.push(j - i + 1);
        i = j + 1;
    }
    groups
}

/// Exact two-sided p over all 2^n sign assignments of the given ranks.
///
/// Ranks are doubled so that tied (half-integer) ranks stay integral; the
/// null distribution of the positive rank sum is then a subset-sum count.
pub(crate) fn exact_p(ranks: &[f64], r_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; total + 1];
    counts[0] = 1.0;
    for &r in &doubled {
        for s in (r..=total).rev() {
            counts[s] += counts[s - r];
        }
    }
    let observed = (r_plus * 2.0).round() as usize;
    let all = 2f64.powi(ranks.len() as i32);
    let lower: f64 = counts[..=observed].iter().sum::<f64>() / all;
    let upper: f64 = counts[observed..].iter().sum::<f64>() / all;
    (2.0 * lower.min(upper)).min(1.0)
}

/// Signed-rank test on `pre - post`. Zero differences are dropped before
/// ranking but still reported as ties.
pub fn wilcoxon_signed_rank(pre: &[f64], post: &[f64]) -> Result<PairedTestReport, StatsError> {
    if pre.len() != post.len() {
        return Err(StatsError::LengthMismatch { left: pre.len(), right: post.len() });
    }
    check_finite(pre)?;
    check_finite(post)?;
    let d: Vec<f64> = pre.iter().zip(post).map(|(a, b)| a - b).collect();
    let rank_counts = RankCounts {
        positive: d.iter().filter(|v| **v < 0.0).count(),
        negative: d.iter().filter(|v| **v > 0.0).count(),
        ties: d.iter().filter(|v| **v == 0.0).count(),
    };
    let nonzero: Vec<f64> = d.iter().copied().filter(|v| *v != 0.0).collect();
    let n = nonzero.len();
    if n < MIN_NON_ZERO {
        return Err(StatsError::TooFewNonZero { n });
    }
    let abs: Vec<f64> = nonzero.iter().map(|v| v.abs()).collect();
    let ranks = average_ranks(&abs);
    let r_plus: f64 = ranks.iter().zip(&nonzero).filter(|(_, v)| **v > 0.0).map(|(r, _)| r).sum();
    let nf = n as f64;
    let r_minus = nf * (nf + 1.0) / 2.0 - r_plus;

    let (method, statistic, p, z) = if n <= EXACT_MAX_N {
        (WilcoxonMethod::Exact, r_plus, exact_p(&ranks, r_plus), None)
    } else {
        let mu = nf * (nf + 1.0) / 4.0;
        let ties: f64 = tie_groups(&abs).iter().map(|&t| (t * t * t - t) as f64).sum();
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - ties / 48.0;
        let z = (r_plus - mu) / var.sqrt();
        let p = (2.0 * Normal::standard().sf(z.abs())).min(1.0);
        (WilcoxonMethod::NormalApprox, z, p, Some(z))
    };

    let mut report = describe(pre, post, TestKind::WilcoxonSignedRank);
    report.statistic = statistic;
    report.p_two_sided = p;
    report.rank_counts = Some(rank_counts);
    report.wilcoxon = Some(WilcoxonDetail { method, n_effective: n, r_plus, r_minus, z });
    Ok(report)
}
