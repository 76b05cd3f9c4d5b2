use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use storymin::error::{Error, ErrorRecord, ValidationReport};
use storymin::instance::{count_crossings, parse_instance, parse_solution, validate_instance, MlcmInstance, Solution};
use storymin::maxcut::build_maxcut;
use storymin::model::{build_model, identify_variables};
use storymin::oracle::{brute_force_optimum, DEFAULT_BUDGET};
use storymin::render::{render_svg, RenderOptions};
use storymin::solver::{heuristic_only, solve, OptResult, SolveConfig, SolveStats, SolveStatus};
use storymin::story::{parse_story_with, validate_story, StoryMode};
use storymin::transform::{build_instance, merge_layers};

// stdout may be a closed pipe; output errors are ignored
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

macro_rules! put {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = write!(std::io::stdout(), $($t)*);
    }};
}

const EXIT_VALIDATION: u8 = 1;
const EXIT_TIMEOUT: u8 = 2;
const EXIT_INTERNAL: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "storymin", version, about = "Exact crossing minimization for storyline layouts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a story or instance file (and optionally a solution) for errors
    Validate {
        #[command(flatten)]
        input: InputArgs,
        /// Solution file to check against the instance
        #[arg(long)]
        solution: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Turn a story into an instance file
    Convert {
        #[command(flatten)]
        input: InputArgs,
        /// Skip merging of redundant layers
        #[arg(long)]
        no_merge: bool,
        /// Write the instance here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Minimize crossings
    Solve {
        #[command(flatten)]
        input: InputArgs,
        /// Time limit in seconds
        #[arg(long, env = "STORYMIN_TIME_LIMIT", default_value_t = 3600.0)]
        time_limit: f64,
        /// Stop after the barycenter heuristic
        #[arg(long)]
        heuristic_only: bool,
        /// Write solver statistics as JSON to this path
        #[arg(long)]
        stats_json: Option<PathBuf>,
        /// Worker threads for the branch-and-cut search
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
        threads: u32,
        /// Solve the unmerged instance
        #[arg(long)]
        no_merge: bool,
        /// Write the solution file here
        #[arg(long)]
        solution_out: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Barycenter heuristic only
    Heuristic {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 20)]
        sweeps: usize,
        #[arg(long)]
        solution_out: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Exhaustive optimum over all tree-consistent orderings (small inputs)
    Oracle {
        #[command(flatten)]
        input: InputArgs,
        /// Maximum number of ordering combinations examined
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Draw an SVG storyline
    Render {
        #[command(flatten)]
        input: InputArgs,
        /// Solution file; solved on the fly when absent
        #[arg(long)]
        solution: Option<PathBuf>,
        /// Column width between layers
        #[arg(long, default_value_t = 80.0)]
        width: f64,
        #[arg(long, default_value_t = 12.0)]
        row_height: f64,
        /// Cubic curves instead of polylines
        #[arg(long)]
        smooth: bool,
        #[arg(long, env = "STORYMIN_TIME_LIMIT", default_value_t = 3600.0)]
        time_limit: f64,
        /// Write the SVG here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Instance and model sizes
    Stats {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Args)]
struct InputArgs {
    /// Story JSON or instance text file
    input: PathBuf,
    /// Treat story scenes as an ordered sequence, ignoring their times
    #[arg(long)]
    book_mode: bool,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

/// Terminal outcomes other than success.
enum Failure {
    Invalid { records: Vec<ErrorRecord>, text: String },
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::LimitExceeded(_) => Failure::Internal(e.to_string()),
            _ => Failure::Invalid {
                text: e.to_string(),
                records: vec![e.record()],
            },
        }
    }
}

impl From<ValidationReport> for Failure {
    fn from(report: ValidationReport) -> Self {
        Failure::Invalid {
            text: report.to_string().trim_end().to_string(),
            records: report
                .violations
                .iter()
                .map(|v| ErrorRecord {
                    code: v.code.clone(),
                    message: v.message.clone(),
                    location: None,
                })
                .collect(),
        }
    }
}

type CmdResult = Result<u8, Failure>;

enum Kind {
    Story,
    Instance,
}

impl Kind {
    fn name(&self) -> &'static str {
        match self {
            Kind::Story => "story",
            Kind::Instance => "instance",
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Internal(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Internal(format!("cannot write {}: {e}", path.display())))
}

fn kind_of(text: &str) -> Kind {
    if text.trim_start().starts_with('{') {
        Kind::Story
    } else {
        Kind::Instance
    }
}

fn mode(input: &InputArgs) -> StoryMode {
    if input.book_mode {
        StoryMode::Book
    } else {
        StoryMode::Timed
    }
}

/// Reads either format and returns a validated instance.
fn load(input: &InputArgs) -> Result<MlcmInstance, Failure> {
    let text = read(&input.input)?;
    let instance = match kind_of(&text) {
        Kind::Story => {
            let story = parse_story_with(&text, mode(input))?;
            let report = validate_story(&story);
            if !report.is_empty() {
                return Err(report.into());
            }
            build_instance(&story)?.0
        }
        Kind::Instance => parse_instance(&text)?,
    };
    let report = validate_instance(&instance);
    if !report.is_empty() {
        return Err(report.into());
    }
    Ok(instance)
}

fn print_json<T: Serialize>(value: &T) {
    say!("{}", serde_json::to_string_pretty(value).expect("output serializes"));
}

fn labeled(instance: &MlcmInstance, sol: &Solution) -> Vec<Vec<String>> {
    sol.perms
        .iter()
        .enumerate()
        .map(|(r, pi)| pi.iter().map(|&v| instance.layers[r].labels[v].clone()).collect())
        .collect()
}

fn validate(input: &InputArgs, solution: Option<&Path>, format: Format) -> CmdResult {
    let text = read(&input.input)?;
    let kind = kind_of(&text);
    let outcome: Result<Option<MlcmInstance>, Failure> = match kind {
        Kind::Story => parse_story_with(&text, mode(input)).map_err(Failure::from).and_then(|story| {
            let report = validate_story(&story);
            if report.is_empty() {
                Ok(Some(build_instance(&story)?.0))
            } else {
                Err(report.into())
            }
        }),
        Kind::Instance => parse_instance(&text).map_err(Failure::from).and_then(|inst| {
            let report = validate_instance(&inst);
            if report.is_empty() {
                Ok(Some(inst))
            } else {
                Err(report.into())
            }
        }),
    };
    let outcome = match (outcome, solution) {
        (Ok(Some(inst)), Some(path)) => {
            let sol_text = read(path)?;
            parse_solution(&inst, &sol_text)
                .and_then(|(sol, claimed)| {
                    sol.check_consistent(&inst)?;
                    let actual = count_crossings(&inst, &sol)?;
                    match claimed {
                        Some(c) if c != actual => {
                            Err(Error::InvalidInput(format!("solution claims {c} crossings, actual count is {actual}")))
                        }
                        _ => Ok(()),
                    }
                })
                .map(|_| None)
                .map_err(Failure::from)
        }
        (other, _) => other,
    };
    match outcome {
        Ok(_) => {
            match format {
                Format::Json => print_json(&json!({"valid": true, "kind": kind.name(), "errors": []})),
                Format::Text => say!("ok"),
            }
            Ok(0)
        }
        Err(Failure::Invalid { records, text }) => {
            match format {
                Format::Json => print_json(&json!({"valid": false, "kind": kind.name(), "errors": records})),
                Format::Text => say!("{text}"),
            }
            Ok(EXIT_VALIDATION)
        }
        Err(f) => Err(f),
    }
}

fn convert(input: &InputArgs, no_merge: bool, out: Option<&Path>, format: Format) -> CmdResult {
    let text = read(&input.input)?;
    if !matches!(kind_of(&text), Kind::Story) {
        return Err(Failure::Invalid {
            text: "convert expects a story JSON file".into(),
            records: vec![ErrorRecord {
                code: "invalid_input".into(),
                message: "convert expects a story JSON file".into(),
                location: None,
            }],
        });
    }
    let built = load(input)?;
    let original_layers = built.p();
    let instance = if no_merge { built } else { merge_layers(&built).0 };
    let body = instance.to_text();
    if let Some(path) = out {
        write(path, &body)?;
    }
    match format {
        Format::Json => print_json(&json!({
            "layers": instance.p(),
            "layers_before_merge": original_layers,
            "nodes": instance.node_count(),
            "edges": instance.edge_count(),
            "instance": body,
        })),
        Format::Text if out.is_none() => put!("{body}"),
        Format::Text => say!(
            "wrote {} layers, {} nodes, {} edges",
            instance.p(),
            instance.node_count(),
            instance.edge_count()
        ),
    }
    Ok(0)
}

#[derive(Serialize)]
struct SolveOutput {
    status: SolveStatus,
    crossings: Option<u64>,
    lower_bound: u64,
    stats: SolveStats,
    solution: Option<Vec<Vec<String>>>,
}

fn report_result(instance: &MlcmInstance, res: OptResult, solution_out: Option<&Path>, format: Format) -> CmdResult {
    if res.status == SolveStatus::InfeasibleInput {
        let message = res.message.unwrap_or_default();
        return Err(Failure::Invalid {
            records: vec![ErrorRecord {
                code: "invalid_input".into(),
                message: message.clone(),
                location: None,
            }],
            text: message,
        });
    }
    let (Some(sol), Some(k)) = (res.solution.as_ref(), res.crossings) else {
        return Err(Failure::Internal("solver returned no solution".into()));
    };
    if let Some(path) = solution_out {
        write(path, &sol.to_text(instance, k))?;
    }
    match format {
        Format::Json => print_json(&SolveOutput {
            status: res.status,
            crossings: res.crossings,
            lower_bound: res.lower_bound,
            stats: res.stats.clone(),
            solution: Some(labeled(instance, sol)),
        }),
        Format::Text => {
            let status = serde_json::to_value(res.status).unwrap();
            say!("status: {}", status.as_str().unwrap());
            say!("crossings: {k}");
            say!("lower bound: {}", res.lower_bound);
            let s = &res.stats;
            say!(
                "n_var={} n_oddc={} n_trans={} n_sub={} n_LPs={} time={:.3}s",
                s.n_var, s.n_oddc, s.n_trans, s.n_sub, s.n_lps, s.time
            );
            put!("{}", sol.to_text(instance, k));
        }
    }
    Ok(if res.status == SolveStatus::Timeout { EXIT_TIMEOUT } else { 0 })
}

fn seconds(limit: f64) -> Result<Duration, Failure> {
    Duration::try_from_secs_f64(limit).map_err(|_| Failure::Internal(format!("invalid time limit {limit}")))
}

#[allow(clippy::too_many_arguments)]
fn solve_cmd(
    input: &InputArgs,
    time_limit: f64,
    heuristic: bool,
    stats_json: Option<&Path>,
    threads: u32,
    no_merge: bool,
    solution_out: Option<&Path>,
    format: Format,
) -> CmdResult {
    let instance = load(input)?;
    let config = SolveConfig {
        time_limit: seconds(time_limit)?,
        threads: threads as usize,
        merge_layers: !no_merge,
        ..SolveConfig::default()
    };
    let res = if heuristic { heuristic_only(&instance, &config) } else { solve(&instance, &config) };
    if let Some(path) = stats_json {
        write(path, &serde_json::to_string_pretty(&res.stats).expect("stats serialize"))?;
    }
    report_result(&instance, res, solution_out, format)
}

fn heuristic_cmd(input: &InputArgs, sweeps: usize, solution_out: Option<&Path>, format: Format) -> CmdResult {
    let instance = load(input)?;
    let config = SolveConfig {
        heuristic_sweeps: sweeps,
        ..SolveConfig::default()
    };
    report_result(&instance, heuristic_only(&instance, &config), solution_out, format)
}

fn oracle_cmd(input: &InputArgs, budget: u64, format: Format) -> CmdResult {
    let instance = load(input)?;
    let (k, sol) = brute_force_optimum(&instance, budget)?;
    match format {
        Format::Json => print_json(&json!({
            "crossings": k,
            "solution": labeled(&instance, &sol),
        })),
        Format::Text => put!("{}", sol.to_text(&instance, k)),
    }
    Ok(0)
}

struct RenderArgs<'a> {
    solution: Option<&'a Path>,
    options: RenderOptions,
    time_limit: f64,
    out: Option<&'a Path>,
}

fn render_cmd(input: &InputArgs, args: RenderArgs<'_>, format: Format) -> CmdResult {
    let instance = load(input)?;
    let (sol, status) = match args.solution {
        Some(path) => (parse_solution(&instance, &read(path)?)?.0, None),
        None => {
            let config = SolveConfig {
                time_limit: seconds(args.time_limit)?,
                ..SolveConfig::default()
            };
            let res = solve(&instance, &config);
            match res.solution {
                Some(sol) => (sol, Some(res.status)),
                None => return Err(Failure::Internal("solver returned no solution".into())),
            }
        }
    };
    let svg = render_svg(&instance, &sol, &args.options)?;
    let crossings = count_crossings(&instance, &sol)?;
    if let Some(path) = args.out {
        write(path, &svg)?;
    }
    match format {
        Format::Json => {
            let mut value = json!({"crossings": crossings, "layers": instance.p()});
            match args.out {
                Some(path) => value["out"] = json!(path.display().to_string()),
                None => value["svg"] = json!(svg),
            }
            print_json(&value);
        }
        Format::Text if args.out.is_none() => put!("{svg}"),
        Format::Text => say!("wrote {} (crossings: {crossings})", args.out.unwrap().display()),
    }
    Ok(if status == Some(SolveStatus::Timeout) { EXIT_TIMEOUT } else { 0 })
}

fn stats_cmd(input: &InputArgs, format: Format) -> CmdResult {
    let instance = load(input)?;
    let (merged, _) = merge_layers(&instance);
    let model = build_model(&merged);
    let reduced = identify_variables(&model);
    let graph = build_maxcut(&reduced);
    let value = json!({
        "p": instance.p(),
        "nodes": instance.node_count(),
        "edges": instance.edge_count(),
        "merged_p": merged.p(),
        "merged_nodes": merged.node_count(),
        "merged_edges": merged.edge_count(),
        "ordering_variables": model.var_count(),
        "variable_classes": reduced.class_count(),
        "crossing_terms": reduced.terms.len(),
        "transitivity_triples": reduced.triples.len(),
        "maxcut_edges": graph.edge_count(),
    });
    match format {
        Format::Json => print_json(&value),
        Format::Text => {
            for (k, v) in value.as_object().unwrap() {
                say!("{k}: {v}");
            }
        }
    }
    Ok(0)
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Validate { input, solution, out } => validate(&input, solution.as_deref(), out.format),
        Command::Convert {
            input,
            no_merge,
            out,
            output,
        } => convert(&input, no_merge, out.as_deref(), output.format),
        Command::Solve {
            input,
            time_limit,
            heuristic_only,
            stats_json,
            threads,
            no_merge,
            solution_out,
            out,
        } => solve_cmd(
            &input,
            time_limit,
            heuristic_only,
            stats_json.as_deref(),
            threads,
            no_merge,
            solution_out.as_deref(),
            out.format,
        ),
        Command::Heuristic {
            input,
            sweeps,
            solution_out,
            out,
        } => heuristic_cmd(&input, sweeps, solution_out.as_deref(), out.format),
        Command::Oracle { input, budget, out } => oracle_cmd(&input, budget, out.format),
        Command::Render {
            input,
            solution,
            width,
            row_height,
            smooth,
            time_limit,
            out,
            output,
        } => render_cmd(
            &input,
            RenderArgs {
                solution: solution.as_deref(),
                options: RenderOptions {
                    column_width: width,
                    row_height,
                    smooth,
                    ..RenderOptions::default()
                },
                time_limit,
                out: out.as_deref(),
            },
            output.format,
        ),
        Command::Stats { input, out } => stats_cmd(&input, out.format),
    }
}

fn format_of(cli: &Cli) -> Format {
    match &cli.command {
        Command::Validate { out, .. }
        | Command::Solve { out, .. }
        | Command::Heuristic { out, .. }
        | Command::Oracle { out, .. }
        | Command::Stats { out, .. } => out.format,
        Command::Convert { output, .. } | Command::Render { output, .. } => output.format,
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
            let _ = e.print();
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let format = format_of(&cli);
    let code = match run(cli) {
        Ok(code) => code,
        Err(Failure::Invalid { records, text }) => {
            match format {
                Format::Json => print_json(&json!({"valid": false, "errors": records})),
                Format::Text => eprintln!("{text}"),
            }
            EXIT_VALIDATION
        }
        Err(Failure::Internal(message)) => {
            match format {
                Format::Json => print_json(&json!({"error": message})),
                Format::Text => eprintln!("error: {message}"),
            }
            EXIT_INTERNAL
        }
    };
    ExitCode::from(code)
}
