//! Command-line front end.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::competing::{fit_competing, CauseSpec};
use crate::cox::{fit_cox, CoxFit, FitControls, TieMethod};
use crate::diagnostics::{
    grambsch_therneau_test, scale_residuals, schoenfeld_residuals, GTransform, PhTestReport,
};
use crate::error::Error;
use crate::panel::{build_design, load_panel, save_panel, summarize_panel, CovariateRecipe};
use crate::records::IntervalRecord;
use crate::render;
use crate::synth::{generate, Scenario};

#[derive(Debug, Parser)]
#[command(
    name = "stagesurv",
    version,
    about = "Survival analysis of staged financing panels"
)]
pub struct Cli {
    /// Panel file (tab- or comma-separated).
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Where to write results (stdout when omitted; required by `simulate`).
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Tsv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Tsv,
    Structured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TiesArg {
    Breslow,
    Efron,
}

impl From<TiesArg> for TieMethod {
    fn from(t: TiesArg) -> Self {
        match t {
            TiesArg::Breslow => TieMethod::Breslow,
            TiesArg::Efron => TieMethod::Efron,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GArg {
    Identity,
    Log,
    Km,
}

impl From<GArg> for GTransform {
    fn from(g: GArg) -> Self {
        match g {
            GArg::Identity => GTransform::Identity,
            GArg::Log => GTransform::Log,
            GArg::Km => GTransform::Km,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Descriptive tables of a panel.
    Summarize,
    /// Risk-oblivious Cox model.
    Fit {
        #[arg(long, value_enum, default_value_t = TiesArg::Breslow)]
        ties: TiesArg,
        /// Test proportionality, then refit with the roundNumber x yearsSinceFirst
        /// and weeksSinceFirst x weeksSinceLast interactions.
        #[arg(long)]
        augment_time_interactions: bool,
        /// JSON covariate recipe (a simulation sidecar also works).
        #[arg(long)]
        recipe: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = GArg::Identity)]
        g: GArg,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Grambsch-Therneau test on the risk-oblivious model.
    Diagnose {
        #[arg(long, value_enum, default_value_t = TiesArg::Breslow)]
        ties: TiesArg,
        #[arg(long)]
        recipe: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = GArg::Identity)]
        g: GArg,
        /// Write raw Schoenfeld residuals here.
        #[arg(long)]
        residuals_out: Option<PathBuf>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// One Cox model per cause, other causes censored.
    Compete {
        /// `name=KIND[,KIND...]` with kinds VE, MA, IPO; repeat per cause.
        #[arg(long = "cause", required = true)]
        causes: Vec<String>,
        #[arg(long, value_enum, default_value_t = TiesArg::Breslow)]
        ties: TiesArg,
        #[arg(long)]
        recipe: Option<PathBuf>,
    },
    /// Generate a synthetic panel and its ground-truth sidecar.
    Simulate {
        /// Scenario JSON; inline flags override its fields.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        baseline_rate: Option<f64>,
        /// Comma-separated coefficients of the first cause.
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<String>,
        #[arg(long)]
        censor_horizon: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

/// Failure with the exit status it maps to.
#[derive(Debug)]
pub struct CliError {
    pub message: String,
    pub code: i32,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError {
            message: format!("error: {e}"),
            code: 1,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError {
        message: format!("error: {}", msg.into()),
        code: 2,
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
        .into()
    })
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|source| {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
        .into()
    })
}

fn records(cli: &Cli) -> CliResult<Vec<IntervalRecord>> {
    let path = cli
        .input
        .as_ref()
        .ok_or_else(|| usage("--input is required"))?;
    let panel = load_panel(path)?;
    if !panel.rejections.is_empty() {
        return Err(CliError {
            message: format!("error: {}: {}", path.display(), panel.rejections),
            code: 1,
        });
    }
    Ok(panel.records)
}

fn recipe(path: &Option<PathBuf>) -> CliResult<CovariateRecipe> {
    match path {
        None => Ok(CovariateRecipe::default()),
        Some(p) => Ok(CovariateRecipe::from_json(&read_text(p)?)?),
    }
}

fn check_alpha(alpha: f64) -> CliResult<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(usage(format!("--alpha {alpha} must be in (0, 1)")))
    }
}

const OBLIVIOUS: &str = "Risk-oblivious Cox model";
const AUGMENTED: &str = "Cox model with time interactions";

enum Doc {
    Tsv(String),
    Json(Value),
}

fn emit(cli: &Cli, doc: Doc) -> CliResult<()> {
    let text = match doc {
        Doc::Tsv(s) => s,
        Doc::Json(v) => {
            let mut s = serde_json::to_string_pretty(&v).expect("json");
            s.push('\n');
            s
        }
    };
    match &cli.output {
        Some(p) => write_text(p, &text),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError {
                message: format!("error: writing stdout: {e}"),
                code: 1,
            }),
    }
}

fn ph_test(
    design: &crate::design::DesignMatrix,
    fit: &CoxFit,
    g: GTransform,
) -> CliResult<(crate::diagnostics::ResidualMatrix, PhTestReport)> {
    let resid = schoenfeld_residuals(design, fit)?;
    let scaled = scale_residuals(&resid, fit)?;
    let report = grambsch_therneau_test(&scaled, fit, g)?;
    Ok((resid, report))
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let controls = FitControls::default();
    match &cli.command {
        Command::Summarize => {
            let recs = records(cli)?;
            let s = summarize_panel(&recs)?;
            emit(
                cli,
                match cli.format {
                    Format::Tsv => Doc::Tsv(render::summary_tsv(&s)),
                    Format::Structured => Doc::Json(render::summary_json(&s)),
                },
            )
        }
        Command::Fit {
            ties,
            augment_time_interactions,
            recipe: recipe_path,
            g,
            alpha,
        } => {
            check_alpha(*alpha)?;
            let recs = records(cli)?;
            let recipe = recipe(recipe_path)?;
            let design = build_design(&recs, &recipe)?;
            let fit = fit_cox(&design, (*ties).into(), &controls)?;
            let notes = design.notes();
            if !augment_time_interactions {
                return emit(
                    cli,
                    match cli.format {
                        Format::Tsv => Doc::Tsv(render::fit_table_tsv(OBLIVIOUS, &fit, &notes)),
                        Format::Structured => {
                            Doc::Json(json!({ "model": render::fit_json(OBLIVIOUS, &fit, &notes) }))
                        }
                    },
                );
            }
            let (_, report) = ph_test(&design, &fit, (*g).into())?;
            let aug_design = build_design(&recs, &recipe.clone().with_standard_interactions())?;
            let aug_fit = fit_cox(&aug_design, (*ties).into(), &controls)?;
            let aug_notes = aug_design.notes();
            emit(
                cli,
                match cli.format {
                    Format::Tsv => Doc::Tsv(format!(
                        "{}\n{}\n{}",
                        render::fit_table_tsv(OBLIVIOUS, &fit, &notes),
                        render::ph_report_tsv(&report, *alpha),
                        render::fit_table_tsv(AUGMENTED, &aug_fit, &aug_notes)
                    )),
                    Format::Structured => Doc::Json(json!({
                        "model": render::fit_json(OBLIVIOUS, &fit, &notes),
                        "ph_test": render::ph_report_json(&report, *alpha),
                        "augmented_model": render::fit_json(AUGMENTED, &aug_fit, &aug_notes),
                    })),
                },
            )
        }
        Command::Diagnose {
            ties,
            recipe: recipe_path,
            g,
            residuals_out,
            alpha,
        } => {
            check_alpha(*alpha)?;
            let recs = records(cli)?;
            let design = build_design(&recs, &recipe(recipe_path)?)?;
            let fit = fit_cox(&design, (*ties).into(), &controls)?;
            let (resid, report) = ph_test(&design, &fit, (*g).into())?;
            if let Some(p) = residuals_out {
                write_text(p, &render::residuals_tsv(&resid))?;
            }
            emit(
                cli,
                match cli.format {
                    Format::Tsv => Doc::Tsv(render::ph_report_tsv(&report, *alpha)),
                    Format::Structured => Doc::Json(render::ph_report_json(&report, *alpha)),
                },
            )
        }
        Command::Compete {
            causes,
            ties,
            recipe: recipe_path,
        } => {
            let causes = causes
                .iter()
                .map(|c| c.parse::<CauseSpec>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| usage(e.to_string()))?;
            let recs = records(cli)?;
            let recipe = recipe(recipe_path)?;
            let report = fit_competing(&recs, &recipe, &causes, (*ties).into(), &controls)
                .map_err(|e| match e {
                    Error::InvalidArgument(m)
                        if m.contains("overlap") || m.contains("used twice") =>
                    {
                        usage(m)
                    }
                    other => other.into(),
                })?;
            emit(
                cli,
                match cli.format {
                    Format::Tsv => Doc::Tsv(render::competing_tsv(&report)),
                    Format::Structured => Doc::Json(render::competing_json(&report)),
                },
            )
        }
        Command::Simulate {
            scenario,
            n,
            baseline_rate,
            beta,
            censor_horizon,
            seed,
        } => {
            let out = cli
                .output
                .as_ref()
                .ok_or_else(|| usage("simulate needs --output for the panel file"))?;
            let mut sc = match scenario {
                Some(p) => Scenario::from_json(&read_text(p)?)?,
                None => Scenario::default(),
            };
            if let Some(n) = n {
                sc.n_subjects = *n;
            }
            if let Some(r) = baseline_rate {
                sc.baseline_rate = *r;
            }
            if let Some(h) = censor_horizon {
                sc.censor_horizon = *h;
            }
            if let Some(s) = seed {
                sc.seed = *s;
            }
            if let Some(b) = beta {
                let values = b
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| {
                        usage(format!(
                            "--beta `{b}` is not a comma-separated list of numbers"
                        ))
                    })?;
                match sc.causes.first_mut() {
                    Some(c) => c.beta = values,
                    None => return Err(usage("scenario has no cause to attach --beta to")),
                }
            }
            sc.validate().map_err(|e| usage(e.to_string()))?;
            let (recs, truth) = generate(&sc)?;
            save_panel(out, &recs)?;
            let mut sidecar = serde_json::to_string_pretty(&truth).expect("json");
            sidecar.push('\n');
            write_text(&sidecar_path(out), &sidecar)
        }
    }
}

/// `dir/name.tsv` -> `dir/name.truth.json`.
pub fn sidecar_path(panel: &Path) -> PathBuf {
    let stem = panel
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    panel.with_file_name(format!("{stem}.truth.json"))
}
