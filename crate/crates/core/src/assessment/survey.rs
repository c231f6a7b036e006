//! Pre/post questionnaire files and scale scoring.
//!
//! One CSV row per participant and phase:
//! `participant_id,phase,nep_1..nep_11,geb_1..geb_6`, scores 1 to 5.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const NEP_ITEMS: usize = 11;
pub const GEB_ITEMS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Pre,
    Post,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Scale {
    /// Environmental attitudes.
    Nep,
    /// Self-reported ecological behaviour.
    Geb,
}

impl Scale {
    pub fn item_count(self) -> usize {
        match self {
            Scale::Nep => NEP_ITEMS,
            Scale::Geb => GEB_ITEMS,
        }
    }

    /// Reverse-scored items by default: the even NEP items, no GEB items.
    pub fn default_reverse_mask(self) -> Vec<bool> {
        match self {
            Scale::Nep => (1..=NEP_ITEMS).map(|i| i % 2 == 0).collect(),
            Scale::Geb => vec![false; GEB_ITEMS],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Scale::Nep => "NEP",
            Scale::Geb => "GEB",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SurveyError {
    #[error("{scale:?} expects {expected} item scores, got {found}")]
    ItemCount { scale: Scale, expected: usize, found: usize },
    #[error("item {item} score {score} is outside 1..=5")]
    ScoreOutOfRange { item: usize, score: u8 },
    #[error("reverse mask has {found} flags, expected {expected}")]
    MaskLength { expected: usize, found: usize },
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("malformed survey file: {0}")]
    Csv(String),
    #[error("participant `{participant}` has more than one {phase:?} row")]
    Duplicate { participant: String, phase: Phase },
    #[error("survey file has no rows")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyResponse {
    pub participant_id: String,
    pub phase: Phase,
    pub scale: Scale,
    pub item_scores: Vec<u8>,
    pub reverse_mask: Vec<bool>,
}

impl SurveyResponse {
    pub fn new(
        participant_id: impl Into<String>,
        phase: Phase,
        scale: Scale,
        item_scores: Vec<u8>,
        reverse_mask: Vec<bool>,
    ) -> Result<Self, SurveyError> {
        let expected = scale.item_count();
        if item_scores.len() != expected {
            return Err(SurveyError::ItemCount { scale, expected, found: item_scores.len() });
        }
        if reverse_mask.len() != expected {
            return Err(SurveyError::MaskLength { expected, found: reverse_mask.len() });
        }
        if let Some((i, s)) = item_scores.iter().enumerate().find(|(_, s)| !(1..=5).contains(*s)) {
            return Err(SurveyError::ScoreOutOfRange { item: i + 1, score: *s });
        }
        Ok(Self { participant_id: participant_id.into(), phase, scale, item_scores, reverse_mask })
    }
}

/// Mean item score after mapping reversed items `s -> 6 - s`.
pub fn score_scale(r: &SurveyResponse) -> f64 {
    let total: u32 = r
        .item_scores
        .iter()
        .zip(&r.reverse_mask)
        .map(|(s, rev)| u32::from(if *rev { 6 - s } else { *s }))
        .sum();
    f64::from(total) / r.item_scores.len() as f64
}

/// One parsed CSV row, holding both scales.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyRow {
    pub participant_id: String,
    pub phase: Phase,
    pub nep: Vec<u8>,
    pub geb: Vec<u8>,
}

impl SurveyRow {
    pub fn response(&self, scale: Scale, reverse_mask: &[bool]) -> Result<SurveyResponse, SurveyError> {
        let scores = match scale {
            Scale::Nep => self.nep.clone(),
            Scale::Geb => self.geb.clone(),
        };
        SurveyResponse::new(self.participant_id.clone(), self.phase, scale, scores, reverse_mask.to_vec())
    }
}

pub fn survey_csv_header() -> Vec<String> {
    let mut h = vec!["participant_id".to_owned(), "phase".to_owned()];
    h.extend((1..=NEP_ITEMS).map(|i| format!("nep_{i}")));
    h.extend((1..=GEB_ITEMS).map(|i| format!("geb_{i}")));
    h
}

/// Parses a survey file. Every malformed row is reported with its line.
pub fn parse_survey_csv(reader: impl Read) -> Result<Vec<SurveyRow>, SurveyError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| SurveyError::Csv(e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header != survey_csv_header() {
        return Err(SurveyError::Csv(format!(
            "expected header `{}`",
            survey_csv_header().join(",")
        )));
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| SurveyError::Csv(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let row_err = |message: String| SurveyError::Row { line, message };
        let participant_id = record[0].to_owned();
        if participant_id.is_empty() {
            return Err(row_err("empty participant_id".into()));
        }
        let phase = match record[1].to_ascii_lowercase().as_str() {
            "pre" => Phase::Pre,
            "post" => Phase::Post,
            other => return Err(row_err(format!("phase must be `pre` or `post`, got `{other}`"))),
        };
        let mut scores = Vec::with_capacity(NEP_ITEMS + GEB_ITEMS);
        for (col, field) in record.iter().enumerate().skip(2) {
            let score: u8 = field
                .parse()
                .ok()
                .filter(|s| (1..=5).contains(s))
                .ok_or_else(|| row_err(format!("{}: `{field}` is not a score 1-5", header[col])))?;
            scores.push(score);
        }
        let geb = scores.split_off(NEP_ITEMS);
        rows.push(SurveyRow { participant_id, phase, nep: scores, geb });
    }
    if rows.is_empty() {
        return Err(SurveyError::Empty);
    }
    Ok(rows)
}

/// Scale scores of the participants who answered both phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedScores {
    pub scale: Scale,
    pub participants: Vec<String>,
    pub pre: Vec<f64>,
    pub post: Vec<f64>,
    /// Participants with only one phase, left out of `pre`/`post`.
    pub incomplete: Vec<String>,
}

impl PairedScores {
    /// Pairs pre and post rows by participant, sorted by participant id.
    pub fn from_rows(rows: &[SurveyRow], scale: Scale, reverse_mask: &[bool]) -> Result<Self, SurveyError> {
        let mut by_id: BTreeMap<&str, [Option<f64>; 2]> = BTreeMap::new();
        for row in rows {
            let score = score_scale(&row.response(scale, reverse_mask)?);
            let slot = &mut by_id.entry(row.participant_id.as_str()).or_default()[row.phase as usize];
            if slot.is_some() {
                return Err(SurveyError::Duplicate { participant: row.participant_id.clone(), phase: row.phase });
            }
            *slot = Some(score);
        }
        let mut out = PairedScores {
            scale,
            participants: Vec::new(),
            pre: Vec::new(),
            post: Vec::new(),
            incomplete: Vec::new(),
        };
        for (id, [pre, post]) in by_id {
            match (pre, post) {
                (Some(a), Some(b)) => {
                    out.participants.push(id.to_owned());
                    out.pre.push(a);
                    out.post.push(b);
                }
                _ => out.incomplete.push(id.to_owned()),
            }
        }
        Ok(out)
    }
}
