//! `itl` command line: run conditions, build reports, re-render measures
//! from transcripts, and serve interactive sessions.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use itl_core::agent::{Condition, SessionError, Transcript};
use itl_core::harness::{
    compute_measures, report_csv, report_table, run_with, ArtifactPaths, ConditionResult, Measures,
};
use itl_core::instructor::server::{serve, Hub};
use itl_core::instructor::{InstructorError, Script, ScriptedInstructor, TerminalInstructor};
use itl_core::llm::{Cassette, CassetteClient, ClientError, LiveClient, LiveConfig};
use itl_core::world::WorldFixture;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

const DATA_DIR: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data");

#[derive(Parser)]
#[command(name = "itl", version, about = "Interactive task learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one condition, or all six, and write transcripts and measures.
    Run(RunArgs),
    /// Summarize transcripts as a CSV file and a table.
    Report {
        /// Transcript files or directories containing `*.transcript.json`.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Recompute measures from a saved transcript.
    Replay { transcript: PathBuf },
    /// Start an interactive session for the console (or the terminal).
    Serve(ServeArgs),
}

#[derive(Args)]
struct RunArgs {
    /// One of the six condition names; omit with --all.
    #[arg(long, required_unless_present = "all")]
    condition: Option<Condition>,
    #[arg(long, conflicts_with_all = ["condition", "cassette", "script"])]
    all: bool,
    #[arg(long, default_value = concat!(env!("CARGO_MANIFEST_DIR"), "/data/worlds/tidy_kitchen.json"))]
    fixture: PathBuf,
    /// Defaults to the shipped cassette for the condition.
    #[arg(long)]
    cassette: Option<PathBuf>,
    /// Defaults to the shipped script for the condition.
    #[arg(long)]
    script: Option<PathBuf>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value = "instruction+search2+llm")]
    condition: Condition,
    #[arg(long, default_value = concat!(env!("CARGO_MANIFEST_DIR"), "/data/worlds/tidy_kitchen.json"))]
    fixture: PathBuf,
    /// Replay model responses from this cassette.
    #[arg(long, conflicts_with = "live")]
    cassette: Option<PathBuf>,
    /// Query a live model configured by this TOML file.
    #[arg(long)]
    live: Option<PathBuf>,
    /// With --live, record every response to this cassette.
    #[arg(long, requires = "live")]
    record: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8765")]
    addr: String,
    /// Talk on stdin/stdout instead of serving a WebSocket.
    #[arg(long)]
    terminal: bool,
    /// Seconds to wait for each console answer.
    #[arg(long, default_value_t = 600)]
    timeout_secs: u64,
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

/// Exit codes: 1 generic, 3 script gap, 4 cassette mismatch.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<SessionError>() {
        Some(SessionError::Instructor(InstructorError::ScriptGap { .. })) => 3,
        Some(SessionError::Llm(ClientError::Mismatch(_))) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Report { inputs, csv } => report(&inputs, csv.as_deref()),
        Command::Replay { transcript } => replay(&transcript),
        Command::Serve(args) => serve_cmd(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn print_measures(condition: Condition, m: &Measures) {
    let relevance = m
        .relevance_pct
        .map(|r| format!("{r:.1}%"))
        .unwrap_or_else(|| "-".into());
    println!(
        "{condition:<24} completion {:>5.1}% ({}/{})  relevance {relevance:>6}  instructions {:>3}  words {:>4}  yes/no {:>3}",
        m.completion_rate, m.achieved, m.total, m.n_instructions, m.n_words, m.n_yesno
    );
}

fn write_outputs(out: &Path, condition: Condition, transcript: &Transcript, m: &Measures) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let base = out.join(condition.slug());
    transcript.save(base.with_extension("transcript.json"))?;
    std::fs::write(
        base.with_extension("measures.json"),
        serde_json::to_string_pretty(m)? + "\n",
    )?;
    Ok(())
}

fn run(args: RunArgs) -> Result<()> {
    let fixture = WorldFixture::from_path(&args.fixture)?;
    let conditions: Vec<Condition> = match args.condition {
        Some(c) => vec![c],
        None => Condition::ALL.to_vec(),
    };
    let mut results = Vec::new();
    for condition in conditions {
        let defaults = ArtifactPaths::for_condition(DATA_DIR, condition);
        let cassette_path = args.cassette.clone().unwrap_or(defaults.cassette);
        let script_path = args.script.clone().unwrap_or(defaults.script);
        let cassette = Cassette::load(&cassette_path).map_err(anyhow::Error::msg)?;
        let script = Script::load(&script_path).map_err(anyhow::Error::msg)?;
        let mut client = CassetteClient::replay(cassette);
        let mut instructor = ScriptedInstructor::new(script);
        let transcript = run_with(condition, &fixture, &mut instructor, &mut client)
            .with_context(|| format!("condition {condition}"))?;
        let m = compute_measures(&transcript);
        write_outputs(&args.out, condition, &transcript, &m)?;
        print_measures(condition, &m);
        results.push(ConditionResult { condition, measures: m });
    }
    if results.len() > 1 {
        std::fs::write(args.out.join("report.csv"), report_csv(&results))?;
    }
    Ok(())
}

fn collect_transcripts(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            for entry in std::fs::read_dir(input)? {
                let p = entry?.path();
                if p.to_string_lossy().ends_with(".transcript.json") {
                    files.push(p);
                }
            }
        } else {
            files.push(input.clone());
        }
    }
    Ok(files)
}

fn report(inputs: &[PathBuf], csv: Option<&Path>) -> Result<()> {
    let mut results = Vec::new();
    for path in collect_transcripts(inputs)? {
        let t = Transcript::load(&path).map_err(anyhow::Error::msg)?;
        let Some(condition) = t.condition else {
            bail!("{} was not produced by a condition run", path.display());
        };
        results.push(ConditionResult {
            condition,
            measures: compute_measures(&t),
        });
    }
    if results.is_empty() {
        bail!("no transcripts found");
    }
    results.sort_by_key(|r| r.condition);
    print!("{}", report_table(&results));
    if let Some(path) = csv {
        std::fs::write(path, report_csv(&results))?;
    }
    Ok(())
}

fn replay(path: &Path) -> Result<()> {
    let t = Transcript::load(path).map_err(anyhow::Error::msg)?;
    let m = compute_measures(&t);
    match t.condition {
        Some(c) => print_measures(c, &m),
        None => println!("{}", serde_json::to_string_pretty(&m)?),
    }
    Ok(())
}

fn model_client(args: &ServeArgs) -> Result<CassetteClient> {
    if let Some(cfg) = &args.live {
        let config = LiveConfig::from_path(cfg).map_err(anyhow::Error::msg)?;
        let live = Box::new(LiveClient::new(config)?);
        return Ok(match args.record {
            Some(_) => CassetteClient::record(live),
            None => CassetteClient::passthrough(live),
        });
    }
    let path = args
        .cassette
        .clone()
        .unwrap_or_else(|| ArtifactPaths::for_condition(DATA_DIR, args.condition).cassette);
    Ok(CassetteClient::replay(
        Cassette::load(&path).map_err(anyhow::Error::msg)?,
    ))
}

fn finish_session(args: &ServeArgs, client: CassetteClient, transcript: &Transcript) -> Result<Measures> {
    let m = compute_measures(transcript);
    write_outputs(&args.out, args.condition, transcript, &m)?;
    if let Some(path) = &args.record {
        client.into_cassette().save(path)?;
    }
    print_measures(args.condition, &m);
    Ok(m)
}

fn serve_cmd(args: ServeArgs) -> Result<()> {
    let fixture = WorldFixture::from_path(&args.fixture)?;
    if args.terminal {
        let mut client = model_client(&args)?;
        let mut instructor = TerminalInstructor::stdio();
        let transcript = run_with(args.condition, &fixture, &mut instructor, &mut client)?;
        finish_session(&args, client, &transcript)?;
        return Ok(());
    }
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&args.addr)
            .await
            .with_context(|| format!("binding {}", args.addr))?;
        println!("console endpoint: ws://{}/session", listener.local_addr()?);
        let hub = Hub::new(fixture.name.clone());
        let server = tokio::spawn(serve(listener, hub.clone()));
        let agent_hub = hub.clone();
        let session = tokio::task::spawn_blocking(move || -> Result<(Transcript, Measures)> {
            // blocking HTTP clients must be built off the async runtime
            let mut client = model_client(&args)?;
            let mut instructor = agent_hub.instructor(Duration::from_secs(args.timeout_secs));
            let transcript = run_with(args.condition, &fixture, &mut instructor, &mut client)?;
            let m = finish_session(&args, client, &transcript)?;
            Ok((transcript, m))
        })
        .await?;
        let (_, m) = match session {
            Ok(x) => x,
            Err(e) => {
                hub.close(format!("{e:#}"));
                return Err(e);
            }
        };
        hub.finish(serde_json::to_value(&m)?);
        // give the console a moment to receive the summary
        for _ in 0..50 {
            if !hub.console_attached() {
                break;
            }
            tokio::time::sleep(Duration::from_millis(100)).await;
        }
        server.abort();
        Ok(())
    })
}
