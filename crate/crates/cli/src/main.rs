use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use chrono::{DateTime, Utc};
use clap::{Parser, Subcommand};

use ecoecho_core::analysis::{analyze, load_sessions, normality_table, write_report, AnalysisOptions};
use ecoecho_core::assessment::{parse_survey_csv, VoteError};
use ecoecho_core::engine::EngineError;
use ecoecho_core::llm::StubScript;
use ecoecho_core::playthrough::{bundled_script, run_playthrough, Clock, PlayerScript, PlaythroughError};
use ecoecho_core::scenario::{bundled_ecoecho, load_scenario, validate_scenario, ScenarioError, Severity};
use ecoecho_core::store::SessionStore;
use ecoecho_core::dialogue::DialogueError;
use ecoecho_core::ScenarioDefinition;

#[derive(Debug, Parser)]
#[command(name = "ecoecho", version, about = "Headless driver for the EcoEcho game engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Play a scripted session against the stub provider.
    RunPlaythrough {
        /// Scenario file. Defaults to the bundled scenario.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Player script file, or the name of a bundled script
        /// (`bad-ending`, `alternate-ending`).
        #[arg(long)]
        script: String,
        /// Stub provider script. Defaults to the bundled one.
        #[arg(long)]
        stub: Option<PathBuf>,
        /// Output directory for the session log and summary.
        #[arg(long, env = "ECOECHO_DATA_DIR", default_value = "data")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Stamp events from this instant, one second per step, instead
        /// of the wall clock.
        #[arg(long)]
        fixed_clock: Option<DateTime<Utc>>,
    },
    /// Run the pre/post analysis over stored sessions and survey files.
    Analyze {
        /// Data directory holding `sessions/`.
        #[arg(long, env = "ECOECHO_DATA_DIR", default_value = "data")]
        sessions: PathBuf,
        /// Survey CSV files. Rows from all files are combined.
        #[arg(long, required = true, num_args = 1..)]
        surveys: Vec<PathBuf>,
        /// Report directory. Defaults to `<sessions>/report`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a scenario file and list its diagnostics.
    Validate { path: PathBuf },
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn read_text(path: &Path) -> Result<String> {
    String::from_utf8(read(path)?).with_context(|| format!("{} is not UTF-8", path.display()))
}

fn scenario(path: Option<&Path>) -> Result<ScenarioDefinition> {
    match path {
        None => Ok(bundled_ecoecho()),
        Some(p) => load_scenario(&read(p)?).with_context(|| format!("loading {}", p.display())),
    }
}

fn script(arg: &str) -> Result<PlayerScript> {
    let path = Path::new(arg);
    if path.is_file() {
        return PlayerScript::from_toml_str(&read_text(path)?).with_context(|| format!("parsing {arg}"));
    }
    bundled_script(arg).with_context(|| format!("`{arg}` is neither a file nor a bundled script"))
}

/// Error variant name for failures a script author can fix.
fn step_error_kind(e: &PlaythroughError) -> Option<&'static str> {
    let source = match e {
        PlaythroughError::Step { source, .. } => source,
        PlaythroughError::NoPendingVote { .. } => return Some("NoPendingVote"),
        _ => return None,
    };
    Some(match source {
        EngineError::Vote(VoteError::OutOfRange { .. }) => "OutOfRange",
        EngineError::Vote(VoteError::WrongRound { .. }) => "WrongRound",
        EngineError::Vote(VoteError::Game(_)) | EngineError::Game(_) => "WrongStage",
        EngineError::Dialogue(d) => match d {
            DialogueError::EmptyInput => "EmptyInput",
            DialogueError::Oversize { .. } => "Oversize",
            DialogueError::UnknownNpc(_) => "UnknownNpc",
            DialogueError::WrongStage { .. } | DialogueError::Game(_) => "WrongStage",
            DialogueError::UnknownIntent(_) => "UnknownIntent",
            DialogueError::ProviderUnavailable(_) => "ProviderUnavailable",
        },
        EngineError::Fold(_) | EngineError::ScenarioMismatch { .. } => return None,
    })
}

fn run_playthrough_cmd(
    scenario_path: Option<&Path>,
    script_arg: &str,
    stub: Option<&Path>,
    out: &Path,
    seed: u64,
    fixed_clock: Option<DateTime<Utc>>,
) -> Result<()> {
    let scenario = Arc::new(scenario(scenario_path)?);
    let script = script(script_arg)?;
    let stub = match stub {
        None => StubScript::bundled(),
        Some(p) => StubScript::from_toml_str(&read_text(p)?).with_context(|| format!("parsing {}", p.display()))?,
    };
    let clock = fixed_clock.map_or(Clock::System, Clock::Fixed);
    let summary = match run_playthrough(scenario, &script, stub, seed, out, clock) {
        Ok(s) => s,
        Err(e) => match step_error_kind(&e) {
            Some(kind) => bail!("illegal script step ({kind}): {e}"),
            None => return Err(e).context("playthrough failed"),
        },
    };
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn analyze_cmd(sessions: &Path, surveys: &[PathBuf], out: Option<&Path>) -> Result<()> {
    let store = SessionStore::open(sessions).with_context(|| format!("opening {}", sessions.display()))?;
    let states = load_sessions(&store).context("loading sessions")?;
    let mut rows = Vec::new();
    for path in surveys {
        let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        rows.extend(parse_survey_csv(file).with_context(|| format!("parsing {}", path.display()))?);
    }
    let report = analyze(&states, &rows, &AnalysisOptions::default())?;
    let out = out.map_or_else(|| sessions.join("report"), Path::to_path_buf);
    let written = write_report(&report, &out)?;
    print!("{}", normality_table(&report));
    for s in &report.scales {
        let r = &s.report;
        println!("{}: {:?}, statistic {:.4}, p {:.4}", s.scale.label(), r.test, r.statistic, r.p_two_sided);
    }
    for note in &report.notes {
        println!("note: {note}");
    }
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

/// Prints every diagnostic. Returns whether the file is clean.
fn validate_cmd(path: &Path) -> Result<bool> {
    let diags = match load_scenario(&read(path)?) {
        Ok(s) => validate_scenario(&s),
        Err(ScenarioError::Validation(d)) => d,
        Err(e @ ScenarioError::Schema(_)) => {
            println!("error: {e}");
            return Ok(false);
        }
    };
    for d in &diags {
        println!("{d}");
    }
    let errors = diags.iter().filter(|d| d.severity == Severity::Error).count();
    println!("{}: {errors} error(s), {} warning(s)", path.display(), diags.len() - errors);
    Ok(diags.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::RunPlaythrough { scenario, script, stub, out, seed, fixed_clock } => {
            run_playthrough_cmd(scenario.as_deref(), script, stub.as_deref(), out, *seed, *fixed_clock).map(|()| true)
        }
        Command::Analyze { sessions, surveys, out } => analyze_cmd(sessions, surveys, out.as_deref()).map(|()| true),
        Command::Validate { path } => validate_cmd(path),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
