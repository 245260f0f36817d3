//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when a hypothesis is refused or a verification
//! fails, 2 for usage and I/O errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::error::Error;
use crate::generators::{
    adversarial_pair, random_operator, random_relative_perturbation, s_alpha, AdversarialKind, GenSpec,
};
use crate::hypothesis::{check_relative_bound, check_stewart_hypotheses, estimate_lambda1, DEFAULT_SAMPLES};
use crate::linalg::{Matrix, Tolerances};
use crate::matrix_market::{read_matrix, write_matrix, MtxError, MtxLayout};
use crate::perturb::{
    error_bound_lambda2_zero, error_bound_stewart, gamma_continuity_bound, neumann_pinv,
    norm_bounds_ding_huang, update_relative_surjective, update_stewart, update_stewart_right, DingHuangCase,
    NeumannOptions,
};
use crate::pinv::{pseudoinverse, verify_mp_axioms};
use crate::report::{to_json_string, to_text, to_value, Report};
use crate::reverse_order::reverse_order_pinv;
use crate::verify::{run_verify, VerifyConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_REFUSED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "pinvpert", version, about = "Pseudoinverse perturbation toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Absolute slack for identities.
    #[arg(long, global = true, env = "PINVPERT_TOL_ABS")]
    pub tol_abs: Option<f64>,
    /// Relative slack for identities.
    #[arg(long, global = true, env = "PINVPERT_TOL_REL")]
    pub tol_rel: Option<f64>,
    /// Relative singular-value cutoff for numerical rank.
    #[arg(long, global = true, env = "PINVPERT_RANK_REL")]
    pub rank_rel: Option<f64>,
    /// Margin below 1 required of strict norm conditions.
    #[arg(long, global = true, env = "PINVPERT_MARGIN")]
    pub margin: Option<f64>,
    /// Emit the report (or error) as JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    /// Seed for every randomized step.
    #[arg(long, global = true, env = "PINVPERT_SEED")]
    pub seed: Option<u64>,
}

impl GlobalArgs {
    fn tolerances(&self) -> Result<Tolerances, Error> {
        let d = Tolerances::default();
        let tol = Tolerances {
            rank_rel: self.rank_rel.unwrap_or(d.rank_rel),
            eq_abs: self.tol_abs.unwrap_or(d.eq_abs),
            eq_rel: self.tol_rel.unwrap_or(d.eq_rel),
            margin_strict: self.margin.unwrap_or(d.margin_strict),
        };
        tol.validate()?;
        Ok(tol)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pseudoinverse, reduced minimum modulus and axiom residuals.
    Pinv { t: PathBuf },
    /// Full hypothesis report for a pair (T, S).
    Check {
        t: PathBuf,
        s: PathBuf,
        /// Hypothesis family whose failure makes the command exit 1.
        #[arg(long, value_enum, default_value_t = Requirement::Stewart)]
        require: Requirement,
        /// Also probe ‖Sx‖ ≤ λ₁‖Tx‖ + λ₂‖(S+T)x‖ with this λ₁.
        #[arg(long)]
        lambda1: Option<f64>,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        lambda2: f64,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
    },
    /// Closed-form pseudoinverse of T+S, or the Neumann series for S†.
    Update {
        t: PathBuf,
        s: PathBuf,
        #[arg(long, value_enum)]
        method: UpdateKind,
        /// Right form T†(I+ST†)⁻¹ instead of (I+T†S)⁻¹T† (stewart only).
        #[arg(long)]
        right: bool,
        /// λ₁ for the relative method; defaults to ‖ST†‖.
        #[arg(long)]
        lambda1: Option<f64>,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        lambda2: f64,
        #[arg(long)]
        eps_series: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        max_terms: usize,
        /// Write the computed pseudoinverse here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Every applicable a-priori bound against the measured truth.
    Bounds { t: PathBuf, s: PathBuf },
    /// Reverse-order law for A = FG.
    Rol { f: PathBuf, g: PathBuf },
    /// Write generated fixtures.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Randomized invariant suite; exit 0 iff every check passes.
    Verify {
        #[arg(long, default_value_t = VerifyConfig::default().trials)]
        trials: usize,
        #[arg(long, default_value_t = VerifyConfig::default().max_dim)]
        max_dim: usize,
        /// Run trials on this many threads.
        #[arg(long)]
        jobs: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
pub enum GenCommand {
    /// Operator with prescribed shape, rank, γ and norm.
    Operator {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long)]
        rank: usize,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 1.0)]
        norm: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Layout::Array)]
        layout: Layout,
    },
    /// S_α = αT(I+T*T)⁻¹ for a given T.
    Salpha {
        t: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Layout::Array)]
        layout: Layout,
    },
    /// S = λ₁WT for a random contraction W.
    Relperturb {
        t: PathBuf,
        #[arg(long)]
        lambda1: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Layout::Array)]
        layout: Layout,
    },
    /// A pair (T, S) violating exactly one Stewart hypothesis.
    Adversarial {
        #[arg(long, value_enum)]
        kind: AdversarialArg,
        #[arg(long)]
        out_t: PathBuf,
        #[arg(long)]
        out_s: PathBuf,
        #[arg(long, value_enum, default_value_t = Layout::Array)]
        layout: Layout,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Requirement {
    Stewart,
    NormGamma,
    Relative,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UpdateKind {
    Stewart,
    Relative,
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Layout {
    Array,
    Coordinate,
}

impl From<Layout> for MtxLayout {
    fn from(l: Layout) -> Self {
        match l {
            Layout::Array => MtxLayout::Array,
            Layout::Coordinate => MtxLayout::Coordinate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AdversarialArg {
    Range,
    Null,
    Norm,
}

impl From<AdversarialArg> for AdversarialKind {
    fn from(k: AdversarialArg) -> Self {
        match k {
            AdversarialArg::Range => AdversarialKind::RangeViolation,
            AdversarialArg::Null => AdversarialKind::NullViolation,
            AdversarialArg::Norm => AdversarialKind::NormViolation,
        }
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(MtxError),
    Core(Error),
    /// The report is complete but a required verdict is negative.
    Failed(Box<Report>),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<MtxError> for CliError {
    fn from(e: MtxError) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => EXIT_USAGE,
            CliError::Core(e) if e.is_refusal() => EXIT_REFUSED,
            CliError::Core(Error::SvdNoConvergence { .. }) => EXIT_REFUSED,
            CliError::Core(_) => EXIT_USAGE,
            CliError::Failed(_) => EXIT_REFUSED,
        }
    }

    fn to_json(&self, command: &str) -> serde_json::Value {
        let (kind, message, extra) = match self {
            CliError::Usage(m) => ("usage", m.clone(), json!({})),
            CliError::Io(e) => ("io", e.to_string(), json!({})),
            CliError::Core(e) => {
                let extra = match e {
                    Error::Refused { condition, value } => json!({ "condition": condition, "value": value }),
                    Error::InvariantViolation { name, value, limit } => {
                        json!({ "condition": name, "value": value, "limit": limit })
                    }
                    Error::Singular { sigma_min, cutoff } => json!({ "value": sigma_min, "limit": cutoff }),
                    _ => json!({}),
                };
                (error_kind(e), e.to_string(), extra)
            }
            CliError::Failed(_) => ("failed", "verification failed".to_string(), json!({})),
        };
        let mut err = json!({ "kind": kind, "message": message });
        if let (Some(obj), serde_json::Value::Object(more)) = (err.as_object_mut(), extra) {
            obj.extend(more);
        }
        json!({ "command": command, "exit_code": self.exit_code(), "error": err })
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Refused { .. } => "refused",
        Error::InvariantViolation { .. } => "invariant_violation",
        Error::Singular { .. } => "singular",
        Error::SvdNoConvergence { .. } => "svd_no_convergence",
        Error::DimensionMismatch { .. } => "dimension_mismatch",
        Error::EntryCount { .. } | Error::NonFinite { .. } | Error::NotOrthonormal { .. } => "invalid_input",
        Error::InvalidArgument(_) => "invalid_argument",
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return EXIT_OK;
            }
            if args.iter().any(|a| a == "--json") {
                let err = CliError::Usage(e.to_string());
                let _ = writeln!(stdout, "{}", to_json_string(&err.to_json("")));
            } else {
                let _ = write!(stderr, "{e}");
            }
            return EXIT_USAGE;
        }
    };
    let name = command_name(&cli.command);
    let json = cli.global.json;
    let result = cli
        .global
        .tolerances()
        .map_err(|e| CliError::Usage(e.to_string()))
        .and_then(|tol| dispatch(&cli, tol));
    match result {
        Ok(report) => {
            emit(&report, json, stdout);
            EXIT_OK
        }
        Err(CliError::Failed(report)) => {
            emit(&report, json, stdout);
            EXIT_REFUSED
        }
        Err(err) => {
            if json {
                let _ = writeln!(stdout, "{}", to_json_string(&err.to_json(name)));
            } else {
                let msg = match &err {
                    CliError::Usage(m) => m.clone(),
                    CliError::Io(e) => e.to_string(),
                    CliError::Core(e) => e.to_string(),
                    CliError::Failed(_) => unreachable!("handled above"),
                };
                let _ = writeln!(stderr, "pinvpert {name}: {msg}");
            }
            err.exit_code()
        }
    }
}

fn emit(report: &Report, json: bool, out: &mut dyn Write) {
    let _ = if json {
        writeln!(out, "{}", report.to_json())
    } else {
        write!(out, "{}", to_text(report))
    };
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Pinv { .. } => "pinv",
        Command::Check { .. } => "check",
        Command::Update { .. } => "update",
        Command::Bounds { .. } => "bounds",
        Command::Rol { .. } => "rol",
        Command::Gen(_) => "gen",
        Command::Verify { .. } => "verify",
    }
}

fn load(report: &mut Report, key: &str, path: &Path) -> Result<Matrix, CliError> {
    report.input(key, path.display().to_string());
    Ok(read_matrix(path)?)
}

fn save(report: &mut Report, key: &str, m: &Matrix, path: &Path, layout: MtxLayout) -> Result<(), CliError> {
    write_matrix(m, path, layout)?;
    report.verdict(key, path.display().to_string());
    Ok(())
}

fn dispatch(cli: &Cli, tol: Tolerances) -> Result<Report, CliError> {
    let seed = cli.global.seed.unwrap_or(0);
    let mut report = Report::new(command_name(&cli.command), tol);
    match &cli.command {
        Command::Pinv { t } => {
            let t = load(&mut report, "t", t)?;
            let p = report.timed("pseudoinverse", || pseudoinverse(&t, &tol))?;
            let axioms = report.timed("axioms", || verify_mp_axioms(&t, &p.pinv, &tol))?;
            report
                .verdict("rank", p.rank)
                .verdict("gamma", p.gamma)
                .verdict("norm", p.norm())
                .verdict("pinv_norm", p.pinv_norm())
                .verdict("sigma", &p.sigma)
                .verdict("axioms", axioms)
                .verdict("pinv", &p.pinv);
            if !axioms.passed {
                return Err(CliError::Failed(Box::new(report)));
            }
        }
        Command::Check {
            t,
            s,
            require,
            lambda1,
            lambda2,
            samples,
        } => {
            let t = load(&mut report, "t", t)?;
            let s = load(&mut report, "s", s)?;
            let h = report.timed("hypotheses", || check_stewart_hypotheses(&t, &s, &tol))?;
            report.verdict("hypotheses", &h);
            if let Some((condition, value)) = h.stewart_failure(&tol) {
                report.verdict("stewart_failure", json!({ "condition": condition, "value": value }));
            }
            let mut relative_ok = h.verdict_relative;
            if let Some(l1) = lambda1 {
                report.input("lambda1", l1).input("lambda2", lambda2).input("samples", samples);
                let rb = report.timed("relative_bound", || {
                    check_relative_bound(&t, &s, *l1, *lambda2, *samples, &tol)
                })?;
                relative_ok = rb.holds;
                report.verdict("relative_bound", rb);
            }
            let satisfied = match require {
                Requirement::Stewart => h.verdict_stewart,
                Requirement::NormGamma => h.verdict_norm_gamma,
                Requirement::Relative => relative_ok,
                Requirement::None => true,
            };
            report
                .input("require", format!("{require:?}").to_lowercase())
                .verdict("required_satisfied", satisfied);
            if !satisfied {
                return Err(CliError::Failed(Box::new(report)));
            }
        }
        Command::Update {
            t,
            s,
            method,
            right,
            lambda1,
            lambda2,
            eps_series,
            max_terms,
            out,
        } => {
            let t = load(&mut report, "t", t)?;
            let s = load(&mut report, "s", s)?;
            report.input("method", format!("{method:?}").to_lowercase());
            let pinv = match method {
                UpdateKind::Stewart => {
                    let r = report.timed("update", || {
                        if *right {
                            update_stewart_right(&t, &s, &tol)
                        } else {
                            update_stewart(&t, &s, &tol)
                        }
                    })?;
                    report.verdict("update", &r);
                    r.pinv_updated
                }
                UpdateKind::Relative => {
                    let l1 = match lambda1 {
                        Some(l) => *l,
                        None => estimate_lambda1(&t, &s, &tol)?.ok_or_else(|| {
                            Error::refused("N(T) ⊄ N(S): no λ₁ bounds ‖Sx‖ by ‖Tx‖", f64::NAN)
                        })?,
                    };
                    report.input("lambda1", l1).input("lambda2", lambda2);
                    let r = report.timed("update", || update_relative_surjective(&t, &s, l1, *lambda2, &tol))?;
                    report.verdict("update", &r);
                    r.pinv_updated
                }
                UpdateKind::Neumann => {
                    let opts = NeumannOptions {
                        eps_series: *eps_series,
                        max_terms: *max_terms,
                    };
                    report.input("max_terms", max_terms);
                    if let Some(e) = eps_series {
                        report.input("eps_series", e);
                    }
                    let r = report.timed("neumann", || neumann_pinv(&t, &s, &opts, &tol))?;
                    report.verdict("neumann", &r);
                    r.pinv_s
                }
            };
            if let Some(path) = out {
                save(&mut report, "written", &pinv, path, MtxLayout::Array)?;
            }
        }
        Command::Bounds { t, s } => {
            let t = load(&mut report, "t", t)?;
            let s = load(&mut report, "s", s)?;
            let (entries, count) = report.timed("bounds", || bounds(&t, &s, &tol))?;
            report.verdict("bounds", entries).verdict("applicable", count);
            if count == 0 {
                return Err(CliError::Failed(Box::new(report)));
            }
        }
        Command::Rol { f, g } => {
            let f = load(&mut report, "f", f)?;
            let g = load(&mut report, "g", g)?;
            let r = report.timed("reverse_order", || reverse_order_pinv(&f, &g, &tol))?;
            report.verdict("factored", r);
        }
        Command::Gen(cmd) => gen(&mut report, cmd, seed, &tol)?,
        Command::Verify { trials, max_dim, jobs } => {
            let config = VerifyConfig {
                trials: *trials,
                seed,
                max_dim: *max_dim,
            };
            report
                .input("trials", trials)
                .input("seed", seed)
                .input("max_dim", max_dim);
            let summary = report.timed("verify", || run_verify(&config, *jobs, &tol))?;
            let passed = summary.all_passed;
            report.verdict("checks", &summary.checks).verdict("all_passed", passed);
            if !passed {
                return Err(CliError::Failed(Box::new(report)));
            }
        }
    }
    Ok(report)
}

/// Runs every bound; refusals are recorded as not applicable, while an
/// invariant violation aborts. Returns the entries and how many applied.
fn bounds(t: &Matrix, s: &Matrix, tol: &Tolerances) -> Result<(serde_json::Value, usize), CliError> {
    let mut entries = serde_json::Map::new();
    let mut applicable = 0;
    let mut record = |name: &str, outcome: Result<serde_json::Value, Error>| -> Result<(), CliError> {
        let value = match outcome {
            Ok(v) => {
                applicable += 1;
                v
            }
            Err(Error::Refused { condition, value }) => {
                json!({ "applicable": false, "condition": condition, "value": value })
            }
            Err(e) => return Err(e.into()),
        };
        entries.insert(name.to_string(), value);
        Ok(())
    };

    let t_pinv = pseudoinverse(t, tol)?;
    let sum_pinv = pseudoinverse(&t.checked_add(s)?, tol)?;
    let measured = crate::linalg::distance(&sum_pinv.pinv, &t_pinv.pinv)?;

    record(
        "stewart",
        check_stewart_hypotheses(t, s, tol).and_then(|h| match h.stewart_failure(tol) {
            Some((c, v)) => Err(Error::refused(c, v)),
            None => error_bound_stewart(t, s, tol).map(|b| {
                json!({ "applicable": true, "bound": b, "measured": measured, "holds": measured <= b + tol.slack(1.0) })
            }),
        }),
    )?;
    record(
        "lambda2_zero",
        error_bound_lambda2_zero(t, s, tol).map(|b| {
            json!({
                "applicable": true,
                "bound": b.bound,
                "measured": measured,
                "holds": measured <= b.bound + tol.slack(1.0),
                "inverse_norm": b.inverse_norm,
                "inverse_norm_bound": b.inverse_norm_bound,
            })
        }),
    )?;
    record(
        "gamma_continuity",
        gamma_continuity_bound(t, s, tol).map(|g| {
            let mut v = to_value(g);
            v["applicable"] = json!(true);
            v
        }),
    )?;
    for (name, case) in [
        ("ding_huang_injective", DingHuangCase::Injective),
        ("ding_huang_surjective", DingHuangCase::Surjective),
        ("ding_huang_general", DingHuangCase::General),
    ] {
        record(
            name,
            norm_bounds_ding_huang(t, s, case, tol).map(|b| {
                let mut v = to_value(b);
                v["applicable"] = json!(true);
                v
            }),
        )?;
    }
    Ok((serde_json::Value::Object(entries), applicable))
}

fn gen(report: &mut Report, cmd: &GenCommand, seed: u64, tol: &Tolerances) -> Result<(), CliError> {
    match cmd {
        GenCommand::Operator {
            rows,
            cols,
            rank,
            gamma,
            norm,
            out,
            layout,
        } => {
            let spec = GenSpec {
                rows: *rows,
                cols: *cols,
                rank: *rank,
                gamma_target: *gamma,
                norm_target: *norm,
                seed,
            };
            report.input("spec", spec);
            let t = random_operator(&spec).map_err(|e| CliError::Usage(e.to_string()))?;
            save(report, "t", &t, out, (*layout).into())?;
        }
        GenCommand::Salpha { t, alpha, out, layout } => {
            let t = load(report, "t", t)?;
            report.input("alpha", alpha);
            let s = s_alpha(&t, *alpha, tol)?;
            save(report, "s", &s, out, (*layout).into())?;
        }
        GenCommand::Relperturb { t, lambda1, out, layout } => {
            let t = load(report, "t", t)?;
            report.input("lambda1", lambda1).input("seed", seed);
            let s = random_relative_perturbation(&t, *lambda1, seed)?;
            save(report, "s", &s, out, (*layout).into())?;
        }
        GenCommand::Adversarial {
            kind,
            out_t,
            out_s,
            layout,
        } => {
            let kind: AdversarialKind = (*kind).into();
            report.input("kind", kind).input("seed", seed);
            let (t, s) = adversarial_pair(kind, seed)?;
            save(report, "t", &t, out_t, (*layout).into())?;
            save(report, "s", &s, out_s, (*layout).into())?;
        }
    }
    Ok(())
}
