//! `dyadic` command-line front-end.
//!
//! Exit codes: 0 success, 1 malformed input, 2 I/O failure, 3 conflicts found.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use dyadic_core::dsl::ParseError;
use dyadic_core::perception::{perceive_entities, FixtureProvider, HttpProvider, PerceptionProvider};
use dyadic_core::{
    detect_conflicts, explain, export, export_reports, judge, load_profile, parse_scenario, CultureProfile,
    DyadicGraph, ExportFormat, Judgment,
};

const PROFILE_ENV: &str = "DYADIC_PROFILE";
const HTTP_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Parser)]
#[command(name = "dyadic", version)]
#[command(about = "Judge harm scenarios as agent-patient dyads")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ProfileArg {
    /// Culture profile file. Falls back to $DYADIC_PROFILE, then built-in defaults.
    #[arg(long, env = PROFILE_ENV)]
    profile: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PerceptionArgs {
    /// Re-derive intentionality and vulnerability of entities that carry a
    /// descriptor: `fixture` for the bundled table, or an http(s) URL.
    #[arg(long, value_name = "SOURCE")]
    perceive: Option<String>,

    /// Persona or community context passed to the perception source.
    #[arg(long, requires = "perceive")]
    persona: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Judge one or more scenario files.
    Judge {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        #[command(flatten)]
        profile: ProfileArg,
        #[command(flatten)]
        perception: PerceptionArgs,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Append the step-by-step explanation.
        #[arg(long)]
        trace: bool,
        /// Scenario files evaluated in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Report obligation conflicts; exits 3 when any are found.
    Lint {
        scenario: PathBuf,
        #[command(flatten)]
        profile: ProfileArg,
    },
    /// Validate a profile and print it with every default filled in.
    ProfileCheck { profile: PathBuf },
    /// Judge a scenario and print only the explanation.
    Explain {
        scenario: PathBuf,
        #[command(flatten)]
        profile: ProfileArg,
        #[command(flatten)]
        perception: PerceptionArgs,
    },
}

/// A failed command: exit code plus diagnostics for standard error.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    fn io(path: &Path, err: std::io::Error) -> Self {
        Self {
            code: 2,
            message: format!("{}: {err}", path.display()),
        }
    }

    fn parse(path: &Path, errors: &[ParseError]) -> Self {
        let mut message = String::new();
        for e in errors {
            let _ = writeln!(message, "{}:{e}", path.display());
        }
        Self::input(message.trim_end())
    }
}

/// Standard output text plus exit code for a successful run.
struct Outcome {
    stdout: String,
    code: u8,
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

fn resolve_profile(arg: &ProfileArg) -> Result<CultureProfile, Failure> {
    match &arg.profile {
        Some(path) => read_profile(path),
        None => Ok(CultureProfile::default()),
    }
}

fn read_profile(path: &Path) -> Result<CultureProfile, Failure> {
    let source = read(path)?;
    load_profile(&source).map_err(|e| Failure::parse(path, &e))
}

fn read_scenario(path: &Path) -> Result<DyadicGraph, Failure> {
    let source = read(path)?;
    parse_scenario(&source).map_err(|e| Failure::parse(path, &e))
}

fn provider(source: &str) -> Result<Box<dyn PerceptionProvider>, Failure> {
    if source == "fixture" {
        Ok(Box::new(FixtureProvider))
    } else if source.starts_with("http://") || source.starts_with("https://") {
        Ok(Box::new(HttpProvider::new(source, HTTP_TIMEOUT)))
    } else {
        Err(Failure::input(format!(
            "--perceive expects `fixture` or an http(s) URL, got `{source}`"
        )))
    }
}

fn judge_file(
    path: &Path,
    profile: &CultureProfile,
    perception: Option<(&dyn PerceptionProvider, Option<&str>)>,
) -> Result<Judgment, Failure> {
    let mut graph = read_scenario(path)?;
    let mut pre_trace = Vec::new();
    if let Some((p, context)) = perception {
        let (g, t) = perceive_entities(&graph, p, context).map_err(|e| Failure {
            code: 2,
            message: format!("{}: {e}", path.display()),
        })?;
        graph = g;
        pre_trace = t;
    }
    let mut j = judge(&graph, profile).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    pre_trace.append(&mut j.trace);
    j.trace = pre_trace;
    Ok(j)
}

fn run(command: Command) -> Result<Outcome, Failure> {
    match command {
        Command::Judge {
            scenarios,
            profile,
            perception,
            format,
            trace,
            jobs,
        } => {
            let profile = resolve_profile(&profile)?;
            let provider = perception.perceive.as_deref().map(provider).transpose()?;
            let context = perception.persona.as_deref();
            let format = match format {
                Format::Text => ExportFormat::Text,
                Format::Json => ExportFormat::Json,
            };
            let render = |path: &PathBuf| -> Result<String, Failure> {
                let j = judge_file(path, &profile, provider.as_deref().map(|p| (p, context)))?;
                let mut out = export(&j, format, false);
                if trace {
                    out.push_str(&explain(&j));
                }
                Ok(out)
            };
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.max(1))
                .build()
                .map_err(|e| Failure::input(format!("cannot start {jobs} jobs: {e}")))?;
            let results: Vec<Result<String, Failure>> = pool.install(|| scenarios.par_iter().map(render).collect());

            let mut stdout = String::new();
            let mut failures = Vec::new();
            for (path, result) in scenarios.iter().zip(results) {
                match result {
                    Ok(text) => {
                        if scenarios.len() > 1 {
                            let _ = writeln!(stdout, "==> {} <==", path.display());
                        }
                        stdout.push_str(&text);
                    }
                    Err(f) => failures.push(f),
                }
            }
            match failures.iter().map(|f| f.code).max() {
                None => Ok(Outcome { stdout, code: 0 }),
                Some(code) => {
                    // Successful files still print before the failure is reported.
                    print!("{stdout}");
                    let message = failures.into_iter().map(|f| f.message).collect::<Vec<_>>().join("\n");
                    Err(Failure { code, message })
                }
            }
        }
        Command::Lint { scenario, profile } => {
            let profile = resolve_profile(&profile)?;
            let graph = read_scenario(&scenario)?;
            let reports = detect_conflicts(&graph.obligations, &graph, &profile)
                .map_err(|e| Failure::input(format!("{}: {e}", scenario.display())))?;
            Ok(Outcome {
                code: if reports.is_empty() { 0 } else { 3 },
                stdout: export_reports(&reports),
            })
        }
        Command::ProfileCheck { profile } => {
            let p = read_profile(&profile)?;
            let problems = p.violations();
            if !problems.is_empty() {
                return Err(Failure::input(format!("{}: {}", profile.display(), problems.join("; "))));
            }
            Ok(Outcome {
                stdout: p.dump(),
                code: 0,
            })
        }
        Command::Explain {
            scenario,
            profile,
            perception,
        } => {
            let profile = resolve_profile(&profile)?;
            let provider = perception.perceive.as_deref().map(provider).transpose()?;
            let j = judge_file(
                &scenario,
                &profile,
                provider.as_deref().map(|p| (p, perception.persona.as_deref())),
            )?;
            Ok(Outcome {
                stdout: explain(&j),
                code: 0,
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Outcome { stdout, code }) => {
            let mut out = std::io::stdout().lock();
            if out.write_all(stdout.as_bytes()).and_then(|_| out.flush()).is_err() {
                return ExitCode::from(2);
            }
            ExitCode::from(code)
        }
        Err(f) => {
            eprintln!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}
