//! Offline analysis over stored sessions and survey files.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assessment::{
    choose_paired_test, pearson, voting_heatmap, PairedScores, PairedTestReport, Pearson, Scale, StatsError,
    SurveyError, SurveyRow, VotingHeatmap,
};
use crate::game::SessionState;
use crate::store::{SessionStore, StoreError};

pub const REPORT_FILE: &str = "report.json";
pub const HEATMAP_FILE: &str = "heatmap.csv";
pub const NORMALITY_FILE: &str = "normality.txt";

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Survey(#[from] SurveyError),
    #[error("{scale:?}: {source}")]
    Stats {
        scale: Scale,
        #[source]
        source: StatsError,
    },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleAnalysis {
    pub scale: Scale,
    pub participants: usize,
    /// Participants missing one of the two phases.
    pub incomplete: Vec<String>,
    pub report: PairedTestReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub sessions: usize,
    pub scales: Vec<ScaleAnalysis>,
    /// Pre-test NEP against pre-test GEB scores.
    pub pearson_nep_geb_pre: Option<Pearson>,
    pub notes: Vec<String>,
    pub heatmap: VotingHeatmap,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisOptions {
    pub nep_reverse_mask: Vec<bool>,
    pub geb_reverse_mask: Vec<bool>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            nep_reverse_mask: Scale::Nep.default_reverse_mask(),
            geb_reverse_mask: Scale::Geb.default_reverse_mask(),
        }
    }
}

/// All sessions in a store, folded from their logs.
pub fn load_sessions(store: &SessionStore) -> Result<Vec<SessionState>, StoreError> {
    store.list_sessions()?.iter().map(|id| store.load_session(id)).collect()
}

pub fn analyze(
    sessions: &[SessionState],
    surveys: &[SurveyRow],
    options: &AnalysisOptions,
) -> Result<AnalysisReport, AnalysisError> {
    if surveys.is_empty() {
        return Err(SurveyError::Empty.into());
    }
    let mut scales = Vec::new();
    let mut notes = Vec::new();
    let mut pre_by_scale = Vec::new();
    for (scale, mask) in [(Scale::Nep, &options.nep_reverse_mask), (Scale::Geb, &options.geb_reverse_mask)] {
        let paired = PairedScores::from_rows(surveys, scale, mask)?;
        let report =
            choose_paired_test(&paired.pre, &paired.post).map_err(|source| AnalysisError::Stats { scale, source })?;
        if !paired.incomplete.is_empty() {
            notes.push(format!(
                "{}: {} participant(s) without both phases excluded",
                scale.label(),
                paired.incomplete.len()
            ));
        }
        pre_by_scale.push(paired.pre.clone());
        scales.push(ScaleAnalysis {
            scale,
            participants: paired.participants.len(),
            incomplete: paired.incomplete,
            report,
        });
    }
    let pearson_nep_geb_pre = match pearson(&pre_by_scale[0], &pre_by_scale[1]) {
        Ok(p) => Some(p),
        Err(e) => {
            notes.push(format!("Pearson NEP-pre vs GEB-pre not computed: {e}"));
            None
        }
    };
    Ok(AnalysisReport {
        sessions: sessions.len(),
        scales,
        pearson_nep_geb_pre,
        notes,
        heatmap: voting_heatmap(sessions),
    })
}

/// Normality results in the usual reporting layout: one row per scale
/// and phase with W, p and the verdict.
pub fn normality_table(report: &AnalysisReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<6} {:<10} {:>7} {:>7}  Result", "Scale", "Test", "W", "p");
    for s in &report.scales {
        let Some(n) = &s.report.normality else { continue };
        for (phase, r) in [("Pre-test", &n.pre), ("Post-test", &n.post)] {
            let _ = writeln!(
                out,
                "{:<6} {:<10} {:>7.3} {:>7.3}  {}",
                s.scale.label(),
                phase,
                r.w,
                r.p,
                r.verdict.label()
            );
        }
    }
    out
}

/// Writes `report.json`, `heatmap.csv` and `normality.txt` into `out_dir`.
pub fn write_report(report: &AnalysisReport, out_dir: &Path) -> Result<Vec<PathBuf>, AnalysisError> {
    let io_err = |path: &Path| {
        let path = path.to_owned();
        move |source| AnalysisError::Io { path, source }
    };
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let files = [
        (REPORT_FILE, serde_json::to_string_pretty(report).expect("report serializes") + "\n"),
        (HEATMAP_FILE, report.heatmap.to_csv()),
        (NORMALITY_FILE, normality_table(report)),
    ];
    let mut written = Vec::new();
    for (name, body) in files {
        let path = out_dir.join(name);
        fs::write(&path, body).map_err(io_err(&path))?;
        written.push(path);
    }
    Ok(written)
}
