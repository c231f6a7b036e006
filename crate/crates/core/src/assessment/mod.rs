//! In-game votes, survey scoring and paired pre/post statistics.
//!
//! Differences are always `pre - post`, so an improvement after play gives
//! a negative t statistic, Cohen's d and Wilcoxon Z.

use thiserror::Error;

mod correlation;
mod heatmap;
mod normality;
mod paired;
mod survey;
mod vote;
mod wilcoxon;

pub use correlation::{pearson, Pearson};
pub use heatmap::{voting_heatmap, HeatmapRow, VotingHeatmap};
pub use normality::{shapiro_wilk, Normality, NormalityResult, NORMALITY_ALPHA};
pub use paired::{
    choose_paired_test, paired_t_test, select_test, NormalityPair, PairedTestReport, RankCounts, TestKind,
};
pub use survey::{
    parse_survey_csv, score_scale, survey_csv_header, PairedScores, Phase, Scale, SurveyError, SurveyResponse,
    SurveyRow, GEB_ITEMS, NEP_ITEMS,
};
pub use vote::{record_vote, VoteError, VoteRecord, MAX_VOTES};
pub use wilcoxon::{wilcoxon_signed_rank, WilcoxonDetail, WilcoxonMethod, EXACT_MAX_N};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("sample of {n} is too small (minimum {min})")]
    SampleTooSmall { n: usize, min: usize },
    #[error("sample of {n} is too large (maximum {max})")]
    SampleTooLarge { n: usize, max: usize },
    #[error("sample has zero variance")]
    ZeroVariance,
    #[error("samples differ in length: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("differences have zero variance")]
    DegenerateVariance,
    #[error("only {n} non-zero differences (minimum 5)")]
    TooFewNonZero { n: usize },
    #[error("sample contains a non-finite value")]
    NonFinite,
}

pub(crate) fn check_finite(xs: &[f64]) -> Result<(), StatsError> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub(crate) fn sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() as f64 - 1.0)).sqrt()
}
