use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::normality::{shapiro_wilk, Normality, NormalityResult};
use super::wilcoxon::{wilcoxon_signed_rank, WilcoxonDetail};
use super::{check_finite, mean, sd, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    PairedT,
    WilcoxonSignedRank,
}

/// Direction of change per participant. `positive` counts post > pre.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankCounts {
    pub positive: usize,
    pub negative: usize,
    pub ties: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalityPair {
    pub pre: NormalityResult,
    pub post: NormalityResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedTestReport {
    pub n: usize,
    pub mean_pre: f64,
    pub sd_pre: f64,
    pub mean_post: f64,
    pub sd_post: f64,
    pub test: TestKind,
    /// t for the t-test; Z (approximate) or R+ (exact) for Wilcoxon.
    pub statistic: f64,
    pub df: Option<f64>,
    pub p_two_sided: f64,
    pub ci95: Option<[f64; 2]>,
    pub cohen_d: Option<f64>,
    pub rank_counts: Option<RankCounts>,
    pub wilcoxon: Option<WilcoxonDetail>,
    pub normality: Option<NormalityPair>,
    pub rationale: Option<String>,
}

/// Descriptive part of a report; test fields are left for the caller.
pub(crate) fn describe(pre: &[f64], post: &[f64], test: TestKind) -> PairedTestReport {
    PairedTestReport {
        n: pre.len(),
        mean_pre: mean(pre),
        sd_pre: sd(pre),
        mean_post: mean(post),
        sd_post: sd(post),
        test,
        statistic: f64::NAN,
        df: None,
        p_two_sided: f64::NAN,
        ci95: None,
        cohen_d: None,
        rank_counts: None,
        wilcoxon: None,
        normality: None,
        rationale: None,
    }
}

/// Paired-samples t-test on `d = pre - post`.
pub fn paired_t_test(pre: &[f64], post: &[f64]) -> Result<PairedTestReport, StatsError> {
    if pre.len() != post.len() {
        return Err(StatsError::LengthMismatch { left: pre.len(), right: post.len() });
    }
    if pre.len() < 2 {
        return Err(StatsError::SampleTooSmall { n: pre.len(), min: 2 });
    }
    check_finite(pre)?;
    check_finite(post)?;
    let d: Vec<f64> = pre.iter().zip(post).map(|(a, b)| a - b).collect();
    let n = d.len() as f64;
    let md = mean(&d);
    let sdd = sd(&d);
    // Also catches NaN from non-finite input.
    if sdd.is_nan() || sdd <= 1e-12 * md.abs().max(1.0) {
        return Err(StatsError::DegenerateVariance);
    }
    let se = sdd / n.sqrt();
    let t = md / se;
    let df = n - 1.0;
    let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    let crit = dist.inverse_cdf(0.975);

    let mut report = describe(pre, post, TestKind::PairedT);
    report.statistic = t;
    report.df = Some(df);
    report.p_two_sided = p;
    report.ci95 = Some([md - crit * se, md + crit * se]);
    report.cohen_d = Some(md / sdd);
    Ok(report)
}

/// The paired t-test iff both samples look normal.
pub fn select_test(pre: &NormalityResult, post: &NormalityResult) -> TestKind {
    if pre.verdict == Normality::Normal && post.verdict == Normality::Normal {
        TestKind::PairedT
    } else {
        TestKind::WilcoxonSignedRank
    }
}

/// Checks both samples for normality, then runs the matching paired test.
pub fn choose_paired_test(pre: &[f64], post: &[f64]) -> Result<PairedTestReport, StatsError> {
    if pre.len() != post.len() {
        return Err(StatsError::LengthMismatch { left: pre.len(), right: post.len() });
    }
    let sw_pre = shapiro_wilk(pre)?;
    let sw_post = shapiro_wilk(post)?;
    let test = select_test(&sw_pre, &sw_post);
    let mut report = match test {
        TestKind::PairedT => paired_t_test(pre, post)?,
        TestKind::WilcoxonSignedRank => wilcoxon_signed_rank(pre, post)?,
    };
    report.rationale = Some(match test {
        TestKind::PairedT => format!(
            "both samples normal (Shapiro-Wilk p = {:.3} and {:.3}, alpha 0.05): paired t-test",
            sw_pre.p, sw_post.p
        ),
        TestKind::WilcoxonSignedRank => {
            let which = match (sw_pre.verdict, sw_post.verdict) {
                (Normality::NonNormal, Normality::NonNormal) => "pre and post samples are",
                (Normality::NonNormal, _) => "pre sample is",
                _ => "post sample is",
            };
            format!(
                "{which} non-normal (Shapiro-Wilk p = {:.3} and {:.3}, alpha 0.05): Wilcoxon signed-rank test",
                sw_pre.p, sw_post.p
            )
        }
    });
    report.normality = Some(NormalityPair { pre: sw_pre, post: sw_post });
    Ok(report)
}
