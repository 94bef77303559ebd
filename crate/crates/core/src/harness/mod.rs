//! Experiment runs over recorded inputs, the summary measures computed from
//! their transcripts, and authoring of the canonical recordings.

use crate::agent::{Agent, Condition, SessionConfig, SessionError, Transcript};
use crate::instructor::{OracleInstructor, Script, ScriptRecorder, ScriptedInstructor};
use crate::knowledge::KnowledgeStore;
use crate::lexicon::Lexicon;
use crate::llm::{Cassette, CassetteClient, LlmClient, SyntheticModel};
use crate::world::WorldFixture;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// The five summary measures plus the counts they come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measures {
    pub completion_rate: f64,
    /// `None` when no yes/no question was asked.
    pub relevance_pct: Option<f64>,
    pub n_instructions: usize,
    pub n_words: usize,
    pub n_yesno: usize,
    pub n_yes: usize,
    pub achieved: usize,
    pub total: usize,
}

impl Measures {
    /// Measures from raw tallies. `utterances` counts open answers and
    /// scripted intro lines; yes/no answers count as instructions too.
    pub fn from_counts(
        achieved: usize,
        total: usize,
        yes: usize,
        yesno: usize,
        utterances: usize,
        words: usize,
    ) -> Measures {
        let pct = |n: usize, d: usize| if d == 0 { 0.0 } else { 100.0 * n as f64 / d as f64 };
        Measures {
            completion_rate: pct(achieved, total),
            relevance_pct: (yesno > 0).then(|| pct(yes, yesno)),
            n_instructions: utterances + yesno,
            n_words: words,
            n_yesno: yesno,
            n_yes: yes,
            achieved,
            total,
        }
    }
}

pub fn compute_measures(transcript: &Transcript) -> Measures {
    let c = transcript.counters();
    Measures::from_counts(
        c.goals_achieved,
        c.goals_total,
        c.yes_answers,
        c.yesno_questions,
        c.utterances,
        c.words,
    )
}

/// One-decimal percentage as reported in tables.
pub fn format_pct(p: f64) -> String {
    format!("{p:.1}")
}

/// Replays `cassette` and `script` through a fresh agent.
pub fn run_condition(
    condition: Condition,
    fixture: &WorldFixture,
    cassette: Cassette,
    script: Script,
) -> Result<(Transcript, Measures), SessionError> {
    let mut client = CassetteClient::replay(cassette);
    let mut instructor = ScriptedInstructor::new(script);
    let transcript = run_with(condition, fixture, &mut instructor, &mut client)?;
    let measures = compute_measures(&transcript);
    Ok((transcript, measures))
}

/// Runs one session with arbitrary sources.
pub fn run_with(
    condition: Condition,
    fixture: &WorldFixture,
    instructor: &mut dyn crate::instructor::Instructor,
    client: &mut dyn LlmClient,
) -> Result<Transcript, SessionError> {
    let mut agent = Agent::new(
        SessionConfig::for_condition(condition),
        fixture.state.clone(),
        KnowledgeStore::new(),
        instructor,
        client,
    );
    agent.learn_task(fixture)
}

/// Produces the cassette and script a condition needs, by running the
/// agent against the synthetic model and the answer-key instructor.
pub fn author(
    condition: Condition,
    fixture: &WorldFixture,
    model: SyntheticModel,
) -> Result<(Cassette, Script, Transcript), SessionError> {
    let mut client = CassetteClient::record(Box::new(model));
    let oracle = OracleInstructor::new(fixture, Lexicon::builtin())?;
    let mut recorder = ScriptRecorder::new(oracle);
    let transcript = run_with(condition, fixture, &mut recorder, &mut client)?;
    Ok((client.into_cassette(), recorder.into_script(), transcript))
}

/// Where the canonical artifacts for a condition live under `data_dir`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArtifactPaths {
    pub cassette: PathBuf,
    pub script: PathBuf,
}

impl ArtifactPaths {
    pub fn for_condition(data_dir: impl AsRef<Path>, condition: Condition) -> ArtifactPaths {
        let d = data_dir.as_ref();
        ArtifactPaths {
            cassette: d.join("cassettes").join(format!("{}.jsonl", condition.slug())),
            script: d.join("scripts").join(format!("{}.json", condition.slug())),
        }
    }

    pub fn named(data_dir: impl AsRef<Path>, name: &str) -> ArtifactPaths {
        let d = data_dir.as_ref();
        ArtifactPaths {
            cassette: d.join("cassettes").join(format!("{name}.jsonl")),
            script: d.join("scripts").join(format!("{name}.json")),
        }
    }

    pub fn load(&self) -> Result<(Cassette, Script), String> {
        Ok((Cassette::load(&self.cassette)?, Script::load(&self.script)?))
    }

    pub fn save(&self, cassette: &Cassette, script: &Script) -> std::io::Result<()> {
        for p in [&self.cassette, &self.script] {
            if let Some(dir) = p.parent() {
                std::fs::create_dir_all(dir)?;
            }
        }
        cassette.save(&self.cassette)?;
        script.save(&self.script)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub condition: Condition,
    pub measures: Measures,
}

const HEADERS: [&str; 6] = [
    "condition",
    "completion_pct",
    "relevance_pct",
    "instructions",
    "words",
    "yesno",
];

fn row(r: &ConditionResult) -> [String; 6] {
    let m = &r.measures;
    [
        r.condition.name().to_string(),
        format_pct(m.completion_rate),
        m.relevance_pct.map(format_pct).unwrap_or_else(|| "-".into()),
        m.n_instructions.to_string(),
        m.n_words.to_string(),
        m.n_yesno.to_string(),
    ]
}

pub fn report_csv(results: &[ConditionResult]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADERS).expect("in-memory csv");
    for r in results {
        w.write_record(row(r)).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

pub fn parse_report_csv(text: &str) -> Result<Vec<[String; 6]>, String> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let cells: Vec<String> = rec.iter().map(str::to_string).collect();
        out.push(cells.try_into().map_err(|_| "expected six columns".to_string())?);
    }
    Ok(out)
}

/// Fixed-width table with the same columns as the CSV.
pub fn report_table(results: &[ConditionResult]) -> String {
    let rows: Vec<[String; 6]> = results.iter().map(row).collect();
    let mut widths = HEADERS.map(str::len);
    for r in &rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: &[String]| {
        for (i, (cell, w)) in cells.iter().zip(widths).enumerate() {
            if i == 0 {
                let _ = write!(out, "{cell:<w$}");
            } else {
                let _ = write!(out, "  {cell:>w$}");
            }
        }
        out.push('\n');
    };
    line(&mut out, &HEADERS.map(String::from));
    line(&mut out, &widths.map(|w| "-".repeat(w)));
    for r in &rows {
        line(&mut out, r);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measure_arithmetic() {
        let m = Measures::from_counts(19, 35, 0, 0, 4, 10);
        assert_eq!(format_pct(m.completion_rate), "54.3");
        assert_eq!(m.relevance_pct, None);
        let m = Measures::from_counts(35, 35, 52, 88, 30, 200);
        assert_eq!(m.relevance_pct.map(format_pct).as_deref(), Some("59.1"));
        assert_eq!(m.n_instructions, 118);
    }

    #[test]
    fn csv_round_trip_and_table() {
        let results = vec![
            ConditionResult {
                condition: Condition::Instruction,
                measures: Measures::from_counts(35, 35, 0, 0, 100, 757),
            },
            ConditionResult {
                condition: Condition::InstructionSearch2Llm,
                measures: Measures::from_counts(35, 35, 27, 67, 40, 300),
            },
        ];
        let rows = parse_report_csv(&report_csv(&results)).unwrap();
        assert_eq!(rows[0][2], "-");
        assert_eq!(rows[1][2], "40.3");
        let table = report_table(&results);
        assert!(table.lines().nth(3).unwrap().starts_with("instruction+search2+llm"));
    }
}
