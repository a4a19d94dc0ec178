//! `planglow`: generate, lint, validate, export, serve and replay study
//! plans from the terminal.
//!
//! Exit codes: 0 ok, 1 domain failure, 2 usage. Failures print one JSON
//! line `{"error":{"code":..,"message":..}}` on stderr.

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use planglow_core::plan::codec::canonical_json;
use planglow_core::plan::markdown::render_markdown;
use planglow_core::plan::{
    deserialize_plan, diff_plans, lint_plan, serialize_plan, BackgroundLevel, LearnerProfile,
    LintConfig,
};
use planglow_core::resources::{auto_replace, resolve_resources};
use planglow_core::StudyPlan;
use planglow_service::config::{
    ADDR_ENV, CATALOG_ENV, DATA_DIR_ENV, DEFAULT_ADDR, DEFAULT_DATA_DIR, MODE_ENV,
    TEMPLATE_DIR_ENV, TRANSCRIPT_ENV,
};
use planglow_service::{AppState, Config, Engine, Mode};
use serde_json::json;
use similar::TextDiff;
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(
    name = "planglow",
    version,
    about = "Personalized study plans from the terminal"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// `live` or `test`; test mode runs on fixtures with network egress denied.
    #[arg(long, global = true, env = MODE_ENV, default_value = "live", value_parser = parse_mode)]
    mode: Mode,
    #[arg(long, global = true, env = DATA_DIR_ENV, default_value = DEFAULT_DATA_DIR)]
    data_dir: PathBuf,
    /// Prompt template directory; the built-in set is used when absent.
    #[arg(long, global = true, env = TEMPLATE_DIR_ENV)]
    template_dir: Option<PathBuf>,
    /// Recorded provider transcript (test mode).
    #[arg(long, global = true, env = TRANSCRIPT_ENV)]
    transcript: Option<PathBuf>,
    /// Mock catalog JSON (test mode).
    #[arg(long, global = true, env = CATALOG_ENV)]
    catalog: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a plan and write it with its trace to the data directory.
    Generate {
        #[arg(long)]
        subject: String,
        #[arg(long)]
        goal: String,
        #[arg(long, value_parser = parse_level)]
        level: BackgroundLevel,
        #[arg(long)]
        weeks: u32,
        #[arg(long)]
        daily_minutes: u32,
    },
    /// Print the Q1..Q5 quality report; exits 1 when any question fails.
    Lint { plan: PathBuf },
    /// Check every resource against the catalog and rewrite the plan with
    /// replacements; exits 1 when an invalid resource has no replacement.
    ValidateResources { plan: PathBuf },
    /// Render a plan as Markdown on stdout.
    Export { plan: PathBuf },
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = ADDR_ENV, default_value = DEFAULT_ADDR)]
        addr: SocketAddr,
    },
    /// Regenerate the golden plan from a transcript and diff it against the
    /// stored file; exits 1 on any difference.
    Replay {
        #[arg(long)]
        golden: PathBuf,
    },
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
        .map_err(|e: planglow_service::config::ConfigError| e.to_string())
}

fn parse_level(s: &str) -> Result<BackgroundLevel, String> {
    s.parse()
        .map_err(|e: planglow_core::plan::UnknownVariant| e.to_string())
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{message}")]
    Failed { code: &'static str, message: String },
    /// The command ran and its verdict is negative; output is already printed.
    #[error("{0}")]
    Verdict(String),
}

impl CliError {
    fn failed(code: &'static str, e: impl std::fmt::Display) -> Self {
        CliError::Failed {
            code,
            message: e.to_string(),
        }
    }

    fn code(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Failed { code, .. } => code,
            CliError::Verdict(_) => "verdict",
        }
    }

    fn exit(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            _ => ExitCode::from(1),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            return fail(&CliError::Usage(
                e.kind().to_string() + ": " + first_line(&e.to_string()),
            ))
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}

fn first_line(s: &str) -> &str {
    s.lines()
        .next()
        .unwrap_or_default()
        .trim_start_matches("error: ")
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!(
        "{}",
        json!({"error": {"code": e.code(), "message": e.to_string()}})
    );
    e.exit()
}

fn config(global: &GlobalArgs) -> Config {
    Config {
        mode: global.mode,
        data_dir: global.data_dir.clone(),
        template_dir: global.template_dir.clone(),
        transcript: global.transcript.clone(),
        catalog: global.catalog.clone(),
        ..Config::default()
    }
}

fn engine(config: &Config) -> Result<Engine, CliError> {
    config.check().map_err(|e| CliError::Usage(e.to_string()))?;
    config.engine().map_err(|e| CliError::failed("config", e))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = config(&cli.global);
    match cli.command {
        Command::Generate {
            subject,
            goal,
            level,
            weeks,
            daily_minutes,
        } => {
            let profile = LearnerProfile {
                subject,
                goal,
                background_level: level,
                duration_weeks: weeks,
                daily_minutes,
                preferred_media: None,
            };
            if let Some(v) = profile.violations().first() {
                return Err(CliError::Usage(v.to_string()));
            }
            let engine = engine(&config)?;
            let (plan, trace) = generate(&engine, &profile)?;
            fs::create_dir_all(&config.data_dir).map_err(|e| CliError::failed("io", e))?;
            let path = config.data_dir.join(format!("{}.json", plan.plan_id));
            write(&path, &to_doc(&plan)?)?;
            write(
                &config.data_dir.join(format!("{}.trace.json", plan.plan_id)),
                &trace,
            )?;
            println!("{}", path.display());
            Ok(())
        }
        Command::Lint { plan } => {
            let plan = read_plan(&plan)?;
            let report = lint_plan(&plan, &LintConfig::default()).map_err(|v| {
                CliError::failed(
                    "invalid_plan",
                    v.iter()
                        .map(|v| v.to_string())
                        .collect::<Vec<_>>()
                        .join("; "),
                )
            })?;
            println!("{report}");
            if report.has_failure() {
                return Err(CliError::Verdict(
                    "at least one quality question failed".into(),
                ));
            }
            Ok(())
        }
        Command::ValidateResources { plan: path } => {
            let plan = read_plan(&path)?;
            let engine = engine(&config)?;
            let (out, report) = auto_replace(&plan, &engine.catalog)
                .map_err(|e| CliError::failed("resources", e))?;
            write(&path, &to_doc(&out)?)?;
            for r in &report.replacements {
                println!("{} {} -> {}", r.path, r.old_external_id, r.new_external_id);
            }
            for f in &report.findings {
                println!("{} {} unresolved: {}", f.path, f.external_id, f.message);
            }
            if !report.findings.is_empty() {
                return Err(CliError::Verdict(format!(
                    "{} invalid resource(s) have no replacement",
                    report.findings.len()
                )));
            }
            Ok(())
        }
        Command::Export { plan } => {
            print!("{}", render_markdown(&read_plan(&plan)?));
            Ok(())
        }
        Command::Serve { addr } => {
            tracing_subscriber::fmt().init();
            // Live adapters own blocking clients; build them before the runtime.
            let engine = engine(&config)?;
            let state = AppState::open(engine, &config.data_dir)
                .map_err(|e| CliError::failed("store", e))?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::failed("io", e))?;
            rt.block_on(planglow_service::serve(state, addr))
                .map_err(|e| CliError::failed("serve", e))
        }
        Command::Replay { golden } => {
            let config = Config {
                mode: Mode::Test,
                ..config
            };
            let stored_doc = read(&golden)?;
            let stored =
                deserialize_plan(&stored_doc).map_err(|e| CliError::failed("invalid_plan", e))?;
            let engine = engine(&config)?;
            let (fresh, _) = generate(&engine, &stored.profile)?;
            let fresh_doc = to_doc(&fresh)?;
            if fresh_doc == stored_doc {
                println!("replay matches {}", golden.display());
                return Ok(());
            }
            let stored_name = golden.display().to_string();
            let (before, after) = (pretty(&stored_doc), pretty(&fresh_doc));
            let diff = TextDiff::from_lines(&before, &after);
            print!(
                "{}",
                diff.unified_diff()
                    .context_radius(3)
                    .header(&stored_name, "replayed")
            );
            println!();
            for change in diff_plans(&stored, &fresh) {
                println!(
                    "changed {}: {} -> {}",
                    change.path, change.before, change.after
                );
            }
            Err(CliError::Verdict(format!(
                "replay differs from {stored_name}"
            )))
        }
    }
}

fn generate(engine: &Engine, profile: &LearnerProfile) -> Result<(StudyPlan, String), CliError> {
    let (plan, trace) = engine
        .pipeline
        .generate_plan(profile, &engine.provider)
        .map_err(|f| match f.error.stage() {
            Some(stage) => CliError::failed("pipeline", format!("{stage} stage: {}", f.error)),
            None => CliError::failed("pipeline", f.error),
        })?;
    let (plan, _, _) =
        resolve_resources(&plan, &engine.catalog).map_err(|e| CliError::failed("resources", e))?;
    Ok((plan, canonical_json(&trace)))
}

/// Canonical document plus a trailing newline, as plan files are stored.
fn to_doc(plan: &StudyPlan) -> Result<String, CliError> {
    serialize_plan(plan)
        .map(|d| d + "\n")
        .map_err(|e| CliError::failed("invalid_plan", e))
}

/// One field per line so the unified diff points at the changed field.
fn pretty(doc: &str) -> String {
    serde_json::from_str::<serde_json::Value>(doc)
        .and_then(|v| serde_json::to_string_pretty(&v))
        .map(|s| s + "\n")
        .unwrap_or_else(|_| doc.to_string())
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::failed("io", format!("{}: {e}", path.display())))
}

fn read_plan(path: &Path) -> Result<StudyPlan, CliError> {
    deserialize_plan(&read(path)?)
        .map_err(|e| CliError::failed("invalid_plan", format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| CliError::failed("io", format!("{}: {e}", path.display())))
}
