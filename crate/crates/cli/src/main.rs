//! `csfsim`: run, explain, and validate cognitive social frame scenarios.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, IsTerminal, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use csf_core::frames::DeploymentPolicy;
use csf_core::scenario::{
    builtin_source, check_document, parse_scenario, ParamOverrides, Scenario, ScenarioError,
    Severity, BUILTINS,
};
use csf_core::trace::{self, Stage, TraceEvent};
use csf_core::{run, EngineError};

#[derive(Parser)]
#[command(name = "csfsim", version, about = "Cognitive social frame simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario, write its trace, and print a summary.
    Run(RunArgs),
    /// Show every frame's salience decision for one agent at one tick.
    Explain(ExplainArgs),
    /// Check a scenario document and print its diagnostics.
    Validate(ValidateArgs),
    /// List the built-in scenarios.
    List,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file, or `builtin:NAME`.
    #[arg(long, value_name = "PATH")]
    scenario: Option<String>,
    #[arg(long, default_value_t = 10)]
    ticks: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "F")]
    epsilon: Option<f64>,
    #[arg(long, value_name = "F")]
    alpha: Option<f64>,
    #[arg(long, value_parser = parse_policy)]
    policy: Option<DeploymentPolicy>,
    #[arg(long, value_name = "F")]
    lambda: Option<f64>,
    #[arg(long, value_name = "F")]
    theta: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: ScenarioArgs,
    #[arg(long, value_name = "PATH", default_value = "trace.jsonl")]
    trace: PathBuf,
}

#[derive(Args)]
struct ExplainArgs {
    #[command(flatten)]
    common: ScenarioArgs,
    /// Read this trace instead of re-running the scenario.
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
    #[arg(long)]
    tick: u64,
    #[arg(long)]
    agent: String,
}

#[derive(Args)]
struct ValidateArgs {
    /// Scenario file, or `builtin:NAME`.
    #[arg(long, value_name = "PATH")]
    scenario: Option<String>,
    #[arg(value_name = "PATH", conflicts_with = "scenario")]
    path: Option<String>,
}

fn parse_policy(s: &str) -> Result<DeploymentPolicy, String> {
    s.parse()
}

/// Failure carrying its exit code.
enum Failure {
    /// Domain or validation problem (exit 1).
    Domain(String),
    /// Unreadable input or unwritable output (exit 2).
    Io(String),
    /// Already reported; exit with the code only.
    Reported(u8),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Domain(_) => 1,
            Failure::Io(_) => 2,
            Failure::Reported(code) => *code,
        }
    }

    fn message(&self) -> Option<&str> {
        match self {
            Failure::Domain(m) | Failure::Io(m) => Some(m),
            Failure::Reported(_) => None,
        }
    }
}

struct Style {
    enabled: bool,
}

impl Style {
    fn detect(stream_is_terminal: bool) -> Self {
        Self {
            enabled: stream_is_terminal && std::env::var_os("CSFSIM_NO_COLOR").is_none(),
        }
    }

    fn paint(&self, code: &str, text: &str) -> String {
        if self.enabled {
            format!("\x1b[{code}m{text}\x1b[0m")
        } else {
            text.to_string()
        }
    }

    fn bold(&self, text: &str) -> String {
        self.paint("1", text)
    }

    fn severity(&self, severity: Severity) -> String {
        match severity {
            Severity::Error => self.paint("1;31", "error"),
            Severity::Warning => self.paint("1;33", "warning"),
        }
    }
}

/// Loads the document text named by a scenario specifier.
fn read_document(source: &str) -> Result<String, Failure> {
    if let Some(name) = source.strip_prefix("builtin:") {
        return builtin_source(name)
            .map(str::to_string)
            .ok_or_else(|| Failure::Domain(format!("unknown built-in scenario `{name}`")));
    }
    fs::read_to_string(source).map_err(|e| Failure::Io(format!("cannot read `{source}`: {e}")))
}

fn scenario_error(source: &str, err: ScenarioError) -> Failure {
    if let ScenarioError::Parse {
        line,
        column,
        message,
    } = &err
    {
        return Failure::Domain(format!("{source}:{line}:{column}: syntax error: {message}"));
    }
    let at = err
        .location()
        .map(|l| format!("{source}:{l}: "))
        .unwrap_or_else(|| format!("{source}: "));
    Failure::Domain(format!("{at}{err}"))
}

fn load(args: &ScenarioArgs) -> Result<Scenario, Failure> {
    let source = args
        .scenario
        .as_deref()
        .ok_or_else(|| Failure::Domain("missing --scenario".into()))?;
    let text = read_document(source)?;
    let mut scenario = parse_scenario(&text).map_err(|e| scenario_error(source, e))?;
    scenario.apply_overrides(&ParamOverrides {
        epsilon: args.epsilon,
        alpha: args.alpha,
        policy: args.policy,
        lambda: args.lambda,
        theta: args.theta,
    });
    Ok(scenario)
}

fn engine_error(err: EngineError) -> Failure {
    match err {
        EngineError::Validation(diagnostics) => {
            let mut msg = String::from("scenario is invalid after overrides");
            for d in diagnostics {
                let _ = write!(msg, "\n  {d}");
            }
            Failure::Domain(msg)
        }
        other => Failure::Domain(other.to_string()),
    }
}

fn counts_line(counts: &BTreeMap<String, usize>) -> String {
    if counts.is_empty() {
        return "(none)".into();
    }
    counts
        .iter()
        .map(|(k, v)| format!("{k} {v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn summary(
    scenario: &Scenario,
    ticks: u64,
    seed: u64,
    path: &str,
    events: &[TraceEvent],
    style: &Style,
) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} ({ticks} ticks, seed {seed})",
        style.bold("scenario"),
        scenario.name
    );
    let _ = writeln!(
        out,
        "trace {path}: {} events, sha256 {}",
        events.len(),
        trace::digest(events)
    );
    for agent in &scenario.agents {
        let mine = || events.iter().filter(move |e| e.agent == agent.id);
        let mut salient: BTreeMap<String, usize> = BTreeMap::new();
        let mut actions: BTreeMap<String, usize> = BTreeMap::new();
        let mut conflicts = 0usize;
        let mut resource_ticks = 0usize;
        let mut sensory_reads = 0u64;
        let mut last_deployed = Vec::new();
        for event in mine() {
            if let Some(u) = event.update() {
                for f in &u.salient {
                    *salient.entry(f.to_string()).or_default() += 1;
                }
                resource_ticks += u.deployed.len();
                last_deployed = u.deployed.keys().map(|r| r.to_string()).collect();
            }
            if let Some(i) = event.interpret() {
                conflicts += i.conflicts.len();
            }
            if let Some(x) = event.execute() {
                sensory_reads += x.sensory_reads;
                for a in x.actions.iter().chain(&x.finalizers) {
                    *actions.entry(a.verb.clone()).or_default() += 1;
                }
            }
        }
        let _ = writeln!(out, "{} {}", style.bold("agent"), agent.id);
        let _ = writeln!(out, "  salient frames (ticks): {}", counts_line(&salient));
        let _ = writeln!(
            out,
            "  deployed resources: {resource_ticks} resource-ticks; at end: {}",
            if last_deployed.is_empty() {
                "(none)".to_string()
            } else {
                last_deployed.join(", ")
            }
        );
        let _ = writeln!(out, "  actions: {}", counts_line(&actions));
        let _ = writeln!(out, "  conflicts: {conflicts}");
        let _ = writeln!(out, "  resource sensory reads: {sensory_reads}");
    }
    out
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let scenario = load(&args.common)?;
    let events = run(&scenario, args.common.ticks, args.common.seed).map_err(engine_error)?;
    let file = fs::File::create(&args.trace)
        .map_err(|e| Failure::Io(format!("cannot write `{}`: {e}", args.trace.display())))?;
    trace::write_jsonl(&events, io::BufWriter::new(file))
        .map_err(|e| Failure::Io(format!("cannot write `{}`: {e}", args.trace.display())))?;
    let style = Style::detect(io::stdout().is_terminal());
    print!(
        "{}",
        summary(
            &scenario,
            args.common.ticks,
            args.common.seed,
            &args.trace.display().to_string(),
            &events,
            &style
        )
    );
    Ok(())
}

fn cmd_explain(args: ExplainArgs) -> Result<(), Failure> {
    let events = match (&args.trace, &args.common.scenario) {
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Io(format!("cannot read `{}`: {e}", path.display())))?;
            trace::parse_jsonl(&text)
                .map_err(|(line, e)| Failure::Domain(format!("{}:{line}: {e}", path.display())))?
        }
        (None, Some(_)) => {
            let scenario = load(&args.common)?;
            run(&scenario, args.common.ticks, args.common.seed).map_err(engine_error)?
        }
        _ => {
            return Err(Failure::Domain(
                "give exactly one of --scenario or --trace".into(),
            ))
        }
    };
    let update = events
        .iter()
        .find(|e| e.tick == args.tick && e.agent.as_str() == args.agent && e.stage == Stage::Update)
        .and_then(TraceEvent::update)
        .ok_or_else(|| {
            Failure::Domain(format!(
                "no update for agent `{}` at tick {}",
                args.agent, args.tick
            ))
        })?;

    let style = Style::detect(io::stdout().is_terminal());
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} tick {}, agent {}: epsilon {}, alpha {}",
        style.bold("explain"),
        args.tick,
        args.agent,
        update.epsilon,
        update.alpha
    );
    let width = update
        .scores
        .iter()
        .map(|s| s.frame.as_str().len())
        .max()
        .unwrap_or(5)
        .max(5);
    let _ = writeln!(
        out,
        "{:width$}  {:>22}  {:>22}  {:>22}  verdict",
        "frame", "fitness", "preference", "salience"
    );
    for s in &update.scores {
        let verdict = if s.salient {
            format!("salient (> {})", update.epsilon)
        } else {
            format!("not salient (<= {})", update.epsilon)
        };
        let _ = writeln!(
            out,
            "{:width$}  {:>22}  {:>22}  {:>22}  {verdict}",
            s.frame.as_str(),
            s.fitness,
            s.preference,
            s.salience
        );
    }
    let deployed = if update.deployed.is_empty() {
        "(none)".to_string()
    } else {
        update
            .deployed
            .iter()
            .map(|(r, v)| format!("{r} ({v})"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let _ = writeln!(out, "deployed: {deployed}");
    print!("{out}");
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> Result<(), Failure> {
    let source = args
        .scenario
        .or(args.path)
        .ok_or_else(|| Failure::Domain("missing scenario path".into()))?;
    let text = read_document(&source)?;
    let style = Style::detect(io::stderr().is_terminal());
    let checked = match check_document(&text) {
        Ok(checked) => checked,
        Err(ScenarioError::Parse {
            line,
            column,
            message,
        }) => {
            eprintln!(
                "{source}:{line}:{column}: {}[syntax] {message}",
                style.severity(Severity::Error)
            );
            println!("{source}: 1 error(s), 0 warning(s)");
            return Err(Failure::Reported(1));
        }
        Err(e) => return Err(scenario_error(&source, e)),
    };
    let mut err = io::stderr().lock();
    for d in &checked.diagnostics {
        let at = d.location.map(|l| format!(":{l}")).unwrap_or_default();
        let _ = writeln!(
            err,
            "{source}{at}: {}[{}] {}: {}",
            style.severity(d.severity),
            d.code.as_str(),
            d.path,
            d.message
        );
    }
    let errors = checked.errors().count();
    let warnings = checked.diagnostics.len() - errors;
    if errors > 0 {
        println!("{source}: {errors} error(s), {warnings} warning(s)");
        return Err(Failure::Reported(1));
    }
    println!("{source}: no errors, {warnings} warning(s)");
    Ok(())
}

fn cmd_list() -> Result<(), Failure> {
    for (name, description, _) in BUILTINS {
        println!("builtin:{name}  {description}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Explain(a) => cmd_explain(a),
        Command::Validate(a) => cmd_validate(a),
        Command::List => cmd_list(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            if let Some(message) = failure.message() {
                let style = Style::detect(io::stderr().is_terminal());
                eprintln!("{}: {message}", style.severity(Severity::Error));
            }
            ExitCode::from(failure.code())
        }
    }
}
