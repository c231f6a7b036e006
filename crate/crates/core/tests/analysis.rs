mod common;

use ecoecho_core::analysis::{analyze, normality_table, write_report, AnalysisError, AnalysisOptions};
use ecoecho_core::assessment::{parse_survey_csv, Normality, Scale, SurveyError, TestKind};
use ecoecho_core::playthrough::{bundled_script, play, Clock};
use serde::Deserialize;

const SURVEYS: &str = include_str!("fixtures/surveys_synthetic.csv");

#[derive(Deserialize)]
struct Verdicts {
    nep_pre: [f64; 2],
    nep_post: [f64; 2],
    geb_pre: [f64; 2],
    geb_post: [f64; 2],
    pearson_nep_geb_pre: [f64; 2],
}

fn verdicts() -> Verdicts {
    serde_json::from_str(include_str!("fixtures/surveys_synthetic.json")).unwrap()
}

fn close(label: &str, got: f64, want: f64) {
    assert!((got - want).abs() < 1e-3, "{label}: {got} vs {want}");
}

#[test]
fn normal_scale_uses_t_and_skewed_scale_uses_wilcoxon() {
    let rows = parse_survey_csv(SURVEYS.as_bytes()).unwrap();
    let report = analyze(&[], &rows, &AnalysisOptions::default()).unwrap();
    let v = verdicts();

    let nep = &report.scales[0];
    assert_eq!((nep.scale, nep.participants), (Scale::Nep, 23));
    let n = nep.report.normality.unwrap();
    close("NEP pre W", n.pre.w, v.nep_pre[0]);
    close("NEP pre p", n.pre.p, v.nep_pre[1]);
    close("NEP post W", n.post.w, v.nep_post[0]);
    close("NEP post p", n.post.p, v.nep_post[1]);
    assert_eq!(nep.report.test, TestKind::PairedT);

    let geb = &report.scales[1];
    let n = geb.report.normality.unwrap();
    close("GEB pre p", n.pre.p, v.geb_pre[1]);
    close("GEB post W", n.post.w, v.geb_post[0]);
    close("GEB post p", n.post.p, v.geb_post[1]);
    assert_eq!(n.post.verdict, Normality::NonNormal);
    assert_eq!(geb.report.test, TestKind::WilcoxonSignedRank);
    assert!(geb.report.rank_counts.is_some());

    let r = report.pearson_nep_geb_pre.unwrap();
    close("pearson r", r.r, v.pearson_nep_geb_pre[0]);
    close("pearson p", r.p, v.pearson_nep_geb_pre[1]);
}

#[test]
fn report_files_are_reproducible() {
    let engine = common::engine();
    let sessions: Vec<_> = (0..2)
        .map(|i| {
            let script = bundled_script("bad_ending").unwrap();
            play(&engine, format!("s{i}").into(), &script, Clock::Fixed(common::epoch())).unwrap().0.state
        })
        .collect();
    let rows = parse_survey_csv(SURVEYS.as_bytes()).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [a.path(), b.path()] {
        let report = analyze(&sessions, &rows, &AnalysisOptions::default()).unwrap();
        assert_eq!(report.heatmap.dimensions(), (2, 4));
        write_report(&report, dir).unwrap();
    }
    for name in ["report.json", "heatmap.csv", "normality.txt"] {
        assert_eq!(std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn normality_table_layout() {
    let rows = parse_survey_csv(SURVEYS.as_bytes()).unwrap();
    let table = normality_table(&analyze(&[], &rows, &AnalysisOptions::default()).unwrap());
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("NEP") && lines[1].contains("Pre-test") && lines[1].ends_with("Normal"));
    assert!(lines[4].starts_with("GEB") && lines[4].contains("Post-test") && lines[4].ends_with("Non-normal"));
}

#[test]
fn empty_and_malformed_surveys() {
    let header = SURVEYS.lines().next().unwrap();
    assert!(matches!(parse_survey_csv(format!("{header}\n").as_bytes()), Err(SurveyError::Empty)));
    assert!(matches!(
        analyze(&[], &[], &AnalysisOptions::default()),
        Err(AnalysisError::Survey(SurveyError::Empty))
    ));
    let bad = format!("{header}\np01,pre,1,2,3,4,5,1,2,3,4,5,9,1,1,1,1,1,1\n");
    let err = parse_survey_csv(bad.as_bytes()).unwrap_err();
    assert!(err.to_string().contains("line"), "{err}");
}
