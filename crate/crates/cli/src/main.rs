//! `revy`: command-line front end for the rollback calculus workbench.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::Value;

use revy_core::lts::{build_graph, set_state_cap, GraphOptions, DEFAULT_STATE_CAP};
use revy_core::preorders::{liveness_leq_refusal, safety_leq, RefusalBounds, Verdict};
use revy_core::syntax::{parse_configuration, parse_process, parse_system, Configuration, Process, System};
use revy_core::testing::{gen_liveness_test, gen_safety_test, may_pass, shd_pass, TestStatus, TestVerdict};
use revy_core::verify::{run_suite, Suite};
use revy_core::Error;

const EXIT_FAILS: u8 = 1;
const EXIT_CAPACITY: u8 = 2;
const EXIT_INCONCLUSIVE: u8 = 3;
const EXIT_INPUT: u8 = 4;

#[derive(Parser)]
#[command(name = "revy", version, about = "Explore and compare CCS terms with rollback")]
struct Cli {
    /// Forward-step bound for every exploration.
    #[arg(long, global = true, default_value_t = 6, value_parser = clap::value_parser!(u64).range(1..))]
    depth: u64,
    /// Maximum number of states in one explored graph.
    #[arg(long, global = true, env = "REVY_STATE_CAP", default_value_t = DEFAULT_STATE_CAP as u64,
          value_parser = clap::value_parser!(u64).range(1..))]
    state_cap: u64,
    /// Maximum number of refusals examined by a liveness check.
    #[arg(long, global = true, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    refusal_budget: u64,
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Output::Text)]
    output: Output,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Text,
    Json,
    Dot,
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckKind {
    Safety,
    Liveness,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    May,
    Shd,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a term and print it in normal layout.
    Fmt { file: PathBuf },
    /// Dump the transition graph of a system or configuration.
    Lts {
        file: PathBuf,
        /// Add rollback edges.
        #[arg(long)]
        backward: bool,
        /// Same as `--output dot`.
        #[arg(long)]
        dot: bool,
    },
    /// Decide whether A is below B in the safety or liveness preorder.
    Check {
        #[arg(value_enum)]
        kind: CheckKind,
        a: PathBuf,
        b: PathBuf,
    },
    /// Run a test process against a system.
    RunTest {
        file: PathBuf,
        test: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Shd)]
        mode: Mode,
    },
    /// Run a randomised property suite.
    Verify {
        #[arg(long)]
        suite: Suite,
        #[arg(long, default_value_t = 200)]
        n: usize,
    },
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = match error.downcast_ref::<Error>() {
            Some(Error::Capacity(_)) => EXIT_CAPACITY,
            _ => EXIT_INPUT,
        };
        Failure { code, error }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_system(path: &Path) -> anyhow::Result<System> {
    let text = read(path)?;
    parse_system(&text).map_err(Error::from).with_context(|| format!("in {}", path.display()))
}

fn load_configuration(path: &Path) -> anyhow::Result<Configuration> {
    let text = read(path)?;
    let parsed = if text.contains("|-") {
        parse_configuration(&text)
    } else {
        parse_system(&text).map(Configuration::initial)
    };
    parsed.map_err(Error::from).with_context(|| format!("in {}", path.display()))
}

fn load_test(path: &Path) -> anyhow::Result<Process> {
    let text = read(path)?;
    parse_process(&text).map_err(Error::from).with_context(|| format!("in {}", path.display()))
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json values print")
}

fn cmd_fmt(path: &Path) -> Result<(String, u8), Failure> {
    let text = read(path).map_err(|e| Failure { code: EXIT_FAILS, error: e })?;
    let printed = if text.contains("|-") {
        parse_configuration(&text).map(|c| c.to_string())
    } else {
        match parse_system(&text) {
            Ok(m) => Ok(m.to_string()),
            Err(system_err) => parse_process(&text).map(|p| p.to_string()).map_err(|_| system_err),
        }
    };
    match printed {
        Ok(s) => Ok((s, 0)),
        Err(e) => Err(Failure { code: EXIT_FAILS, error: anyhow::Error::from(e).context(format!("in {}", path.display())) }),
    }
}

fn cmd_lts(cli: &Cli, path: &Path, backward: bool, dot: bool) -> Result<(String, u8), Failure> {
    let c = load_configuration(path)?;
    let mut opts = GraphOptions::lts(cli.depth as usize);
    opts.include_backward = backward;
    let g = build_graph(&c, &opts)?;
    let out = match (dot, cli.output) {
        (true, _) | (false, Output::Dot) => g.to_dot(),
        (false, Output::Json) => pretty(&g.to_json()),
        (false, Output::Text) => {
            let mut s = String::new();
            let _ = writeln!(s, "states: {}", g.len());
            let _ = writeln!(s, "edges: {}", g.edge_count());
            let _ = writeln!(s, "truncated: {}", g.truncated);
            for (i, st) in g.states.iter().enumerate() {
                let _ = writeln!(s, "  [{i}] {st}");
            }
            for (i, es) in g.forward.iter().enumerate() {
                for (l, j) in es {
                    let _ = writeln!(s, "  {i} --{l}--> {j}");
                }
            }
            for (i, es) in g.backward.iter().enumerate() {
                for (k, j) in es {
                    let _ = writeln!(s, "  {i} ..roll {k}..> {j}");
                }
            }
            s.trim_end().to_string()
        }
    };
    Ok((out, 0))
}

fn verdict_code<W>(v: &Verdict<W>) -> u8 {
    match v {
        Verdict::Holds => 0,
        Verdict::Fails(_) => EXIT_FAILS,
        Verdict::Inconclusive(_) => EXIT_INCONCLUSIVE,
    }
}

/// `check safety A B` asks whether every safety test passed by A is passed
/// by B, which holds iff the traces of B are traces of A. Liveness is the
/// same with refusal sets.
fn cmd_check(cli: &Cli, kind: CheckKind, a: &Path, b: &Path) -> Result<(String, u8), Failure> {
    let (ma, mb) = (load_system(a)?, load_system(b)?);
    let depth = cli.depth as usize;
    let (text, json, code) = match kind {
        CheckKind::Safety => {
            let v = safety_leq(&mb, &ma, depth)?;
            let mut json = v.to_json();
            let mut text = format!("safety {} <= {}: {}", a.display(), b.display(), v.status());
            match &v {
                Verdict::Fails(t) => {
                    let test = gen_safety_test(t);
                    let _ = write!(text, "\nwitness trace: {}\ndistinguishing test: {test}", t.action_string());
                    json["test"] = Value::String(test.to_string());
                }
                Verdict::Inconclusive(reason) => {
                    let _ = write!(text, " ({reason})");
                }
                Verdict::Holds => {}
            }
            (text, json, verdict_code(&v))
        }
        CheckKind::Liveness => {
            let bounds = RefusalBounds { budget: cli.refusal_budget as usize, ..RefusalBounds::default() };
            let v = liveness_leq_refusal(&mb, &ma, depth, None, &bounds)?;
            let mut json = v.to_json();
            let mut text = format!("liveness {} <= {}: {}", a.display(), b.display(), v.status());
            match &v {
                Verdict::Fails(r) => {
                    let test = gen_liveness_test(r);
                    let _ = write!(text, "\nwitness refusal: {r}\ndistinguishing test: {test}");
                    json["test"] = Value::String(test.to_string());
                }
                Verdict::Inconclusive(reason) => {
                    let _ = write!(text, " ({reason})");
                }
                Verdict::Holds => {}
            }
            (text, json, verdict_code(&v))
        }
    };
    Ok((if cli.output == Output::Json { pretty(&json) } else { text }, code))
}

fn test_code(v: &TestVerdict) -> u8 {
    match v.status {
        TestStatus::Pass => 0,
        TestStatus::Fail => EXIT_FAILS,
        TestStatus::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

fn cmd_run_test(cli: &Cli, file: &Path, test: &Path, mode: Mode) -> Result<(String, u8), Failure> {
    let m = load_system(file)?;
    let t = load_test(test)?;
    let depth = cli.depth as usize;
    let v = match mode {
        Mode::May => may_pass(&m, &t, depth)?,
        Mode::Shd => shd_pass(&m, &t, depth)?,
    };
    let code = test_code(&v);
    if cli.output == Output::Json {
        return Ok((pretty(&v.to_json()), code));
    }
    let mut s = format!("{} ({} states{})", v.status.as_str(), v.states, if v.truncated { ", truncated" } else { "" });
    if let Some(run) = &v.witness_run {
        s.push_str("\nrun to a state that cannot reach omega:");
        if run.is_empty() {
            s.push_str("\n  (initial state)");
        }
        for step in run {
            let _ = write!(s, "\n  {} {}: {}", step.direction, step.key, step.state);
        }
    }
    Ok((s, code))
}

fn cmd_verify(cli: &Cli, suite: Suite, n: usize) -> Result<(String, u8), Failure> {
    let r = run_suite(suite, n, cli.seed);
    let code = if r.violations() == 0 { 0 } else { EXIT_FAILS };
    let out = if cli.output == Output::Json { pretty(&r.to_json()) } else { r.to_string() };
    Ok((out, code))
}

fn run(cli: &Cli) -> Result<(String, u8), Failure> {
    set_state_cap(cli.state_cap as usize);
    match &cli.command {
        Command::Fmt { file } => cmd_fmt(file),
        Command::Lts { file, backward, dot } => cmd_lts(cli, file, *backward, *dot),
        Command::Check { kind, a, b } => cmd_check(cli, *kind, a, b),
        Command::RunTest { file, test, mode } => cmd_run_test(cli, file, test, *mode),
        Command::Verify { suite, n } => cmd_verify(cli, *suite, *n),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((out, code)) => {
            println!("{out}");
            ExitCode::from(code)
        }
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}
