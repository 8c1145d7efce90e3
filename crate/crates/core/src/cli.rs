//! Command-line front end.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use indexmap::IndexMap;
use serde::Serialize;
use thiserror::Error;

use crate::datamodel::{parse_dataset, DataError, Dataset, ModelKind, ParseOptions, TeamId};
use crate::estimation::{
    check_likelihood_equations, fit, log_likelihood, probability_matrix, EstimationError,
    FitOptions, FitResult, Parameters, ProbEstimate, ProbMatrix, ResidualReport,
};
use crate::separation::{render_dot, saturate, DotOptions, SeparationError, SeparationResult};
use crate::summary::{render_table, summarize, PointSystem, RoundRobinSummary, SummaryError};

/// Exit status for unreadable or invalid input and bad option values.
pub const EXIT_INPUT: i32 = 3;
/// Exit status when the fitting iteration fails to converge.
pub const EXIT_CONVERGENCE: i32 = 4;
/// Exit status for internal inconsistencies.
pub const EXIT_INTERNAL: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "btsep", version, about = "Separation analysis and maximum-likelihood fits for Bradley-Terry models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the model and print outcome probabilities.
    Fit(RunConfig),
    /// Print the equivalence classes and dominance relations.
    Separate(RunConfig),
    /// Print round-robin standings.
    Rank(RunConfig),
    /// Print the class diagram in DOT, ordered by RRWP.
    Diagram(DiagramConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
    Dot,
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Game file: one `first,second,outcome` row per game.
    pub input: PathBuf,
    /// basic, single-order, team-order, single-tie or team-tie.
    #[arg(long, default_value = "basic")]
    pub model: ModelKind,
    /// Count each tie as half a win for each side (win/loss models only).
    #[arg(long)]
    pub half_win: bool,
    /// Points per win, loss and tie, e.g. `3,0,1`.
    #[arg(long, value_parser = parse_points)]
    pub points: Option<PointSystem>,
    /// Stop when no log-parameter changes by more than this.
    #[arg(long = "tol", default_value_t = 1e-10, value_parser = parse_tolerance)]
    pub tolerance: f64,
    #[arg(long = "max-iter", default_value_t = 100_000)]
    pub max_iterations: usize,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Include the step-numbered relation table.
    #[arg(long)]
    pub provenance: bool,
}

#[derive(Debug, Clone, Args)]
pub struct DiagramConfig {
    #[command(flatten)]
    pub run: RunConfig,
    /// Label classes larger than this collectively.
    #[arg(long)]
    pub collective_threshold: Option<usize>,
    #[arg(long, default_value = "Others")]
    pub collective_name: String,
}

fn parse_points(s: &str) -> Result<PointSystem, String> {
    let values: Vec<f64> = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}")))
        .collect::<Result<_, _>>()?;
    match values[..] {
        [win, loss, tie] => PointSystem::new(win, loss, tie).map_err(|e| e.to_string()),
        _ => Err("expected three comma-separated values".into()),
    }
}

fn parse_tolerance(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(_) => Err("tolerance must be positive".into()),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Separation(#[from] SeparationError),
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Summary(#[from] SummaryError),
    #[error("format `{0}` is not available for this command")]
    Format(&'static str),
    #[error("cannot write output: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. }
            | CliError::Data(_)
            | CliError::Separation(_)
            | CliError::Summary(_)
            | CliError::Format(_) => EXIT_INPUT,
            CliError::Estimation(EstimationError::NotConverged { .. })
            | CliError::Estimation(EstimationError::Diverged { .. }) => EXIT_CONVERGENCE,
            CliError::Estimation(_) | CliError::Output(_) => EXIT_INTERNAL,
        }
    }
}

fn format_name(format: Format) -> &'static str {
    match format {
        Format::Table => "table",
        Format::Json => "json",
        Format::Dot => "dot",
    }
}

struct Pipeline {
    dataset: Dataset,
    separation: SeparationResult,
}

fn load(config: &RunConfig) -> Result<Pipeline, CliError> {
    let text = std::fs::read_to_string(&config.input).map_err(|source| CliError::Io {
        path: config.input.clone(),
        source,
    })?;
    let options = ParseOptions::new(config.model).with_half_win(config.half_win);
    let dataset = parse_dataset(&text, options)?;
    let separation = saturate(&dataset, config.model)?;
    Ok(Pipeline {
        dataset,
        separation,
    })
}

fn run_fit(config: &RunConfig, pipeline: &Pipeline, diag: &mut dyn Write) -> Result<FitResult, CliError> {
    let options = FitOptions {
        tolerance: config.tolerance,
        max_iterations: config.max_iterations,
        ..FitOptions::default()
    };
    let result = fit(&pipeline.dataset, config.model, &pipeline.separation, options)?;
    let _ = writeln!(
        diag,
        "fit: {} iterations, max residual {:.3e}",
        result.iterations, result.max_residual
    );
    Ok(result)
}

fn describe_separation(sep: &SeparationResult, diag: &mut dyn Write) {
    let _ = writeln!(
        diag,
        "separation: {} ({} classes, {} saturation passes)",
        sep.classification(),
        sep.classes().len(),
        sep.iterations()
    );
}

fn class_names(sep: &SeparationResult) -> Vec<Vec<String>> {
    sep.classes()
        .iter()
        .map(|class| class.iter().map(|&k| sep.item_label(k)).collect())
        .collect()
}

#[derive(Serialize)]
struct SeparationExport {
    model: ModelKind,
    classification: String,
    passes: u32,
    classes: Vec<Vec<String>>,
    /// Pairs `[upper, lower]` of class indices, transitive edges omitted.
    dominance: Vec<(usize, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    provenance: Option<Vec<ProvenanceBlock>>,
}

#[derive(Serialize)]
struct ProvenanceBlock {
    items: Vec<String>,
    steps: Vec<Vec<String>>,
}

fn provenance_blocks(sep: &SeparationResult) -> Vec<ProvenanceBlock> {
    sep.blocks()
        .iter()
        .enumerate()
        .map(|(b, range)| ProvenanceBlock {
            items: range.clone().map(|k| sep.item_label(k)).collect(),
            steps: sep.provenance_table(b),
        })
        .collect()
}

fn separation_table(sep: &SeparationResult, provenance: bool) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "model: {}", sep.model());
    let _ = writeln!(out, "classification: {}", sep.classification());
    let names = class_names(sep);
    let levels = sep.assign_levels();
    let _ = writeln!(out, "classes:");
    for (c, members) in names.iter().enumerate() {
        let level = levels[sep.classes()[c][0]];
        let _ = writeln!(out, "  c{c} (level {level}): {}", members.join(", "));
    }
    let edges = sep.class_edges_reduced();
    if !edges.is_empty() {
        let _ = writeln!(out, "dominance:");
        for (a, b) in edges {
            let _ = writeln!(out, "  c{a} >> c{b}");
        }
    }
    if provenance {
        let _ = writeln!(out, "relations:");
        out.push_str(&sep.render_provenance());
    }
    out
}

fn estimate_text(e: ProbEstimate) -> String {
    match e {
        ProbEstimate::Determined(p) => format!("{p:.3}"),
        ProbEstimate::One => "1".into(),
        ProbEstimate::Zero => "0".into(),
        ProbEstimate::Arbitrary => "arb".into(),
    }
}

fn probability_table(matrix: &ProbMatrix) -> String {
    let t = matrix.team_count();
    let labels = matrix.labels();
    let width = labels.iter().map(|l| l.chars().count()).max().unwrap_or(1).max(2);
    let ties = matrix.model().allows_ties();
    let mut out = String::new();
    let _ = write!(out, "{:<width$}  {:<width$}  {:>6}  {:>6}", "i", "j", "p_ij1", "p_ij2");
    if ties {
        out.push_str("   p_ij0");
    }
    out.push('\n');
    for i in 0..t {
        for j in 0..t {
            let ordered = matrix.model().has_order_effect();
            if i == j || (!ordered && j < i) {
                continue;
            }
            let entry = matrix.entry(TeamId(i), TeamId(j)).expect("entry");
            let _ = write!(
                out,
                "{:<width$}  {:<width$}  {:>6}  {:>6}",
                labels[i],
                labels[j],
                estimate_text(entry[0]),
                estimate_text(entry[1])
            );
            if ties {
                let _ = write!(out, "  {:>6}", estimate_text(entry[2]));
            }
            out.push('\n');
        }
    }
    out
}

fn parameter_table(params: &Parameters, labels: &[String]) -> String {
    let mut out = String::new();
    for (i, label) in labels.iter().enumerate() {
        let _ = write!(out, "pi[{label}] = {:.6}", params.strengths[i]);
        if let Some(road) = &params.road_strengths {
            let _ = write!(out, "  road = {:.6}", road[i]);
        }
        if let Some(nu) = params.tie_params() {
            let _ = write!(out, "  nu = {:.6}", nu[i]);
        }
        out.push('\n');
    }
    if let Some(gamma) = params.order_param {
        let _ = writeln!(out, "gamma = {gamma:.6}");
    }
    if let Some(nu) = params.tie_param {
        let _ = writeln!(out, "nu = {nu:.6}");
    }
    out
}

#[derive(Serialize)]
struct FitExport<'a> {
    model: ModelKind,
    classification: String,
    iterations: usize,
    log_likelihood: f64,
    parameters: ParameterExport<'a>,
    probabilities: IndexMap<String, IndexMap<String, IndexMap<String, ProbEstimate>>>,
    residuals: &'a ResidualReport,
}

#[derive(Serialize)]
struct ParameterExport<'a> {
    strengths: IndexMap<&'a str, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    road_strengths: Option<IndexMap<&'a str, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    team_tie_params: Option<IndexMap<&'a str, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    order_param: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tie_param: Option<f64>,
}

fn parameter_export<'a>(params: &Parameters, labels: &'a [String]) -> ParameterExport<'a> {
    let keyed = |values: &[f64]| -> IndexMap<&'a str, f64> {
        labels.iter().map(String::as_str).zip(values.iter().copied()).collect()
    };
    ParameterExport {
        strengths: keyed(&params.strengths),
        road_strengths: params.road_strengths.as_deref().map(keyed),
        team_tie_params: params.tie_params().as_deref().map(keyed),
        order_param: params.order_param,
        tie_param: params.tie_param,
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Output(e.to_string()))
}

fn summary_for(config: &RunConfig, pipeline: &Pipeline, diag: &mut dyn Write) -> Result<(FitResult, RoundRobinSummary), CliError> {
    let result = run_fit(config, pipeline, diag)?;
    let matrix = probability_matrix(&result);
    let summary = summarize(&matrix, &pipeline.dataset, config.points)?;
    Ok((result, summary))
}

fn execute(command: &Command, diag: &mut dyn Write) -> Result<String, CliError> {
    match command {
        Command::Separate(config) => {
            let pipeline = load(config)?;
            let sep = &pipeline.separation;
            describe_separation(sep, diag);
            match config.format {
                Format::Table => Ok(separation_table(sep, config.provenance)),
                Format::Json => to_json(&SeparationExport {
                    model: config.model,
                    classification: sep.classification().to_string(),
                    passes: sep.iterations(),
                    classes: class_names(sep),
                    dominance: sep.class_edges_reduced(),
                    provenance: config.provenance.then(|| provenance_blocks(sep)),
                }),
                Format::Dot => Ok(render_dot(sep, &DotOptions::default(), None)),
            }
        }
        Command::Fit(config) => {
            let pipeline = load(config)?;
            describe_separation(&pipeline.separation, diag);
            let result = run_fit(config, &pipeline, diag)?;
            let matrix = probability_matrix(&result);
            let loglik = log_likelihood(&result, &pipeline.dataset)?;
            match config.format {
                Format::Table => {
                    let mut out = probability_table(&matrix);
                    out.push('\n');
                    out.push_str(&parameter_table(&result.parameters, pipeline.dataset.labels()));
                    let _ = writeln!(out, "log-likelihood = {loglik:.6}");
                    if config.provenance {
                        out.push('\n');
                        out.push_str(&pipeline.separation.render_provenance());
                    }
                    Ok(out)
                }
                Format::Json => {
                    let residuals = check_likelihood_equations(&result, &pipeline.dataset)?;
                    to_json(&FitExport {
                        model: config.model,
                        classification: pipeline.separation.classification().to_string(),
                        iterations: result.iterations,
                        log_likelihood: loglik,
                        parameters: parameter_export(&result.parameters, pipeline.dataset.labels()),
                        probabilities: matrix.to_export(),
                        residuals: &residuals,
                    })
                }
                Format::Dot => Err(CliError::Format(format_name(Format::Dot))),
            }
        }
        Command::Rank(config) => {
            let pipeline = load(config)?;
            describe_separation(&pipeline.separation, diag);
            let (_, summary) = summary_for(config, &pipeline, diag)?;
            match config.format {
                Format::Table => Ok(render_table(&summary)),
                Format::Json => to_json(&summary),
                Format::Dot => Err(CliError::Format(format_name(Format::Dot))),
            }
        }
        Command::Diagram(diagram) => {
            let config = &diagram.run;
            if config.format == Format::Json {
                return Err(CliError::Format(format_name(Format::Json)));
            }
            let pipeline = load(config)?;
            describe_separation(&pipeline.separation, diag);
            let (_, summary) = summary_for(config, &pipeline, diag)?;
            let rrwp: Vec<f64> = summary.teams.iter().map(|t| t.rrwp).collect();
            let options = DotOptions {
                collective_threshold: diagram.collective_threshold,
                collective_name: diagram.collective_name.clone(),
            };
            Ok(render_dot(&pipeline.separation, &options, Some(&rrwp)))
        }
    }
}

/// Runs one command, writing the artifact to `out` and diagnostics to
/// `diag`. Returns the process exit status.
pub fn run(cli: &Cli, out: &mut dyn Write, diag: &mut dyn Write) -> i32 {
    match execute(&cli.command, diag) {
        Ok(text) => match out.write_all(text.as_bytes()) {
            Ok(()) => 0,
            Err(e) => {
                let _ = writeln!(diag, "error: cannot write output: {e}");
                EXIT_INTERNAL
            }
        },
        Err(e) => {
            let _ = writeln!(diag, "error: {e}");
            e.exit_code()
        }
    }
}
