//! One line per acceptance criterion; exits non-zero if any fails.

mod common;

use common::*;
use itl_core::agent::{Condition, Event};
use itl_core::harness::{compute_measures, format_pct, run_condition};
use itl_core::lexicon::Lexicon;
use itl_core::llm::{
    get_unique_responses, keep_first_word, ClientError, LlmClient, LlmQuery, LlmResponse, QueryKind, TokenLogprob,
};
use proptest::test_runner::{Config, TestRunner};
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn golden_episode() -> Outcome {
    let start = Instant::now();
    let (cassette, script) = plate_artifacts();
    let (t, _) =
        run_condition(Condition::InstructionSearch2Llm, &plate(), cassette, script).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let actions: Vec<_> = t.executed_actions().into_iter().map(|(a, _)| a).collect();
    ensure(actions == golden_actions(), format!("actions {actions:?}"))?;
    let lines: Vec<String> = t.dialogue().iter().map(|d| d.line()).collect();
    ensure(lines == golden_dialogue(), "dialogue differs")?;
    ensure(elapsed < Duration::from_secs(1), format!("took {elapsed:?}"))?;
    Ok(format!("4 actions, {} turns, {elapsed:.2?} (limit 1 s)", lines.len()))
}

fn planner_oracle() -> Outcome {
    let start = Instant::now();
    let mut runner = TestRunner::new_with_rng(
        Config {
            cases: 200,
            failure_persistence: None,
            ..Config::default()
        },
        proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    );
    let mut solvable = [0usize; 8];
    let mut cases = 0;
    for _ in 0..200 {
        let tree = proptest::strategy::Strategy::new_tree(&random_case(), &mut runner).map_err(|e| e.to_string())?;
        let case = proptest::strategy::ValueTree::current(&tree);
        ensure(case.fixture.state.objects().count() <= 8, "fixture too large")?;
        check_planner(&case)?;
        solvable[bfs_oracle(&case, 6).unwrap_or(7)] += 1;
        cases += 1;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), format!("took {elapsed:?}"))?;
    Ok(format!(
        "{cases} fixtures agree at depths 1-6, optimal lengths 0..6 {:?}, unsolvable {}, {elapsed:.2?} (limit 30 s)",
        &solvable[..7],
        solvable[7]
    ))
}

fn word_survivors() -> Outcome {
    let expected = [
        ("Open", 0.549, true),
        ("Pick", 0.206, true),
        ("Check", 0.067, false),
        ("Go", 0.065, false),
        ("If", 0.027, false),
    ];
    let known = Lexicon::builtin().known_verbs();
    for (w, p, kept) in expected {
        ensure(
            keep_first_word(w, p, &known) == kept,
            format!("filter got {w} {p} wrong"),
        )?;
    }
    let t = golden_plate();
    let words = t
        .events
        .iter()
        .find_map(|e| match e {
            Event::LlmFirstWords { words } => Some(words.clone()),
            _ => None,
        })
        .ok_or("no first-word event")?;
    let got: Vec<(String, String, bool)> = words
        .iter()
        .map(|w| (w.word.clone(), format!("{:.3}", w.probability), w.kept))
        .collect();
    let want: Vec<(String, String, bool)> = expected
        .iter()
        .map(|(w, p, k)| (w.to_string(), format!("{p:.3}"), *k))
        .collect();
    ensure(got == want, format!("episode words {got:?}"))?;
    Ok("kept Open 0.549, Pick 0.206; dropped Check 0.067, Go 0.065, If 0.027".into())
}

struct Repeat(Vec<f64>);

impl LlmClient for Repeat {
    fn send(&mut self, q: &LlmQuery) -> Result<LlmResponse, ClientError> {
        self.0.push(q.temperature);
        Ok(LlmResponse::new(
            "same",
            vec![TokenLogprob::new("same", -0.1)],
            q.temperature,
            vec![],
        ))
    }
}

fn temperature_schedule() -> Outcome {
    let mut goal = Repeat(vec![]);
    get_unique_responses("p", 3, 10, QueryKind::Goal, &mut goal).map_err(|e| e.to_string())?;
    let mut want = vec![0.0];
    want.extend([0.9; 4]);
    want.extend([1.0; 5]);
    ensure(goal.0 == want, format!("goal temperatures {:?}", goal.0))?;
    let mut action = Repeat(vec![]);
    get_unique_responses("p", 2, 5, QueryKind::Action, &mut action).map_err(|e| e.to_string())?;
    ensure(
        action.0 == [0.0, 0.9, 0.9, 0.9, 0.9],
        format!("action temperatures {:?}", action.0),
    )?;
    for max in 1..=12 {
        for kind in [QueryKind::Goal, QueryKind::Action] {
            let mut c = Repeat(vec![]);
            get_unique_responses("p", 3, max, kind, &mut c).map_err(|e| e.to_string())?;
            ensure(c.0.len() <= max, format!("{} calls for max {max}", c.0.len()))?;
        }
    }
    Ok("goals [0.0, 0.9 x4, 1.0 x5] of 10; actions [0.0, 0.9 x4] of 5".into())
}

fn transfer() -> Outcome {
    let t = fork_transfer();
    let c = t.counters();
    let action_questions = t
        .events
        .iter()
        .filter(|e| {
            matches!(
                e,
                Event::InstructorYesno {
                    topic: itl_core::instructor::Topic::Action,
                    ..
                } | Event::InstructorUtterance {
                    topic: itl_core::instructor::Topic::Action,
                    ..
                }
            )
        })
        .count();
    ensure(
        c.llm_queries == 0 && c.searches == 0 && action_questions == 0,
        format!("fork used {c:?}"),
    )?;
    ensure(
        c.goals_achieved == c.goals_total && t.executed_actions().len() == 4,
        "fork not placed",
    )?;
    let (_, again) = kitchen_rerun(Condition::InstructionSearch2Llm);
    let n = external_queries(&again);
    let rc = again.counters();
    ensure(n == 0, format!("{n} external queries on rerun"))?;
    ensure(rc.goals_achieved == rc.goals_total, "rerun incomplete")?;
    Ok(format!(
        "fork: 0 model, 0 search, 0 instructor; kitchen rerun: {}/{} goals with 0 external queries",
        rc.goals_achieved, rc.goals_total
    ))
}

fn measure_arithmetic() -> Outcome {
    let completion = compute_measures(&transcript_from_tallies(19, 35, 0, 0));
    ensure(format_pct(completion.completion_rate) == "54.3", "19/35")?;
    for (yes, n, want) in [(52, 88, "59.1"), (27, 67, "40.3"), (13, 43, "30.2")] {
        let m = compute_measures(&transcript_from_tallies(35, 35, yes, n));
        let got = m.relevance_pct.map(format_pct);
        ensure(got.as_deref() == Some(want), format!("{yes}/{n} gave {got:?}"))?;
    }
    Ok("19/35 = 54.3, 52/88 = 59.1, 27/67 = 40.3, 13/43 = 30.2".into())
}

fn six_conditions() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    for c in Condition::ALL {
        let a = compute_measures(&run_shipped(c));
        let b = compute_measures(&run_shipped(c));
        ensure(a == b, format!("{c} differs between runs"))?;
        let full = a.achieved == a.total;
        if c.instructor_enabled() {
            ensure(full, format!("{c} at {}", format_pct(a.completion_rate)))?;
        } else {
            ensure(!full, format!("{c} reached 100%"))?;
        }
        parts.push(format!("{c} {}", format_pct(a.completion_rate)));
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), format!("took {elapsed:?}"))?;
    Ok(format!(
        "{}; two passes in {elapsed:.2?} (limit 60 s)",
        parts.join(", ")
    ))
}

fn replay_determinism() -> Outcome {
    let mut bytes = 0;
    for c in Condition::ALL {
        let a = run_shipped(c).to_json();
        let b = run_shipped(c).to_json();
        ensure(a == b, format!("{c} transcripts differ"))?;
        bytes += a.len();
    }
    ensure(
        golden_plate().to_json() == golden_plate().to_json(),
        "plate transcripts differ",
    )?;
    Ok(format!(
        "6 conditions and the plate, {bytes} transcript bytes identical"
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("golden episode", golden_episode),
        ("planner oracle", planner_oracle),
        ("first-word survivors", word_survivors),
        ("temperature schedule", temperature_schedule),
        ("one-shot transfer", transfer),
        ("measure arithmetic", measure_arithmetic),
        ("six-condition run", six_conditions),
        ("replay determinism", replay_determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match std::panic::catch_unwind(check) {
            Ok(Ok(detail)) => println!("PASS  {name:<22} {detail}"),
            Ok(Err(why)) => {
                failed += 1;
                println!("FAIL  {name:<22} {why}");
            }
            Err(_) => {
                failed += 1;
                println!("FAIL  {name:<22} panicked");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
