//! `tendonhand` command-line front end.
//!
//! Exit codes:
//!
//! | code | meaning                                  |
//! |------|------------------------------------------|
//! | 0    | success                                  |
//! | 1    | file could not be read or written        |
//! | 2    | bad command line                         |
//! | 3    | design, problem or catalog syntax error  |
//! | 4    | validation failure                       |
//! | 5    | quasi-static solver failure              |
//! | 6    | `check` found the qualified zone violated |
//! | 7    | optimization or spring selection failure |

use std::ffi::OsString;
use std::fs;
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use tendonhand::cancellation::{check_qualified_zone, select_adduction_springs, torque_profile, DEFAULT_PRELOAD_STEP};
use tendonhand::closing::{motor_grid, simulate_closing, ScheduledContact};
use tendonhand::design_file::{design_to_toml, read_catalog, read_design, read_problem};
use tendonhand::model::{classify_paradigm, default_iss_hand, iss_spring_catalog, validate_design, HandDesign};
use tendonhand::synergy::optimize_design;
use tendonhand::table::{self, format_number};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;
pub const EXIT_SOLVER: i32 = 5;
pub const EXIT_CHECK_FAILED: i32 = 6;
pub const EXIT_OPTIMIZATION: i32 = 7;

#[derive(Debug, Parser)]
#[command(
    name = "tendonhand",
    version,
    about = "Quasi-static analysis and design of tendon-driven hands"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct DesignArg {
    /// Design file; the built-in three-finger hand when omitted.
    #[arg(long, value_name = "FILE")]
    pub design: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OutArg {
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the agonist/coupling cell of every tendon.
    Classify(DesignArg),
    /// Check a design against the validation rules.
    Validate(DesignArg),
    /// Sweep the motor range with scheduled contacts; writes trace.csv and events.csv.
    Simulate {
        #[command(flatten)]
        design: DesignArg,
        #[command(flatten)]
        out: OutArg,
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(2..))]
        samples: u32,
        /// JOINT@MOTOR=CAP: from motor angle MOTOR on, JOINT is capped at CAP.
        #[arg(long, value_name = "JOINT@MOTOR=CAP")]
        contact: Vec<String>,
    },
    /// Free-motion shaft torques over the motor range; writes torque_profile.csv.
    Profile {
        #[command(flatten)]
        design: DesignArg,
        #[command(flatten)]
        out: OutArg,
        #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u32).range(2..))]
        samples: u32,
        /// Override the motor stiction, N·mm.
        #[arg(long)]
        stiction: Option<f64>,
    },
    /// Test the net shaft torque against the stiction band; exit 6 when violated.
    Check {
        #[command(flatten)]
        design: DesignArg,
        #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u32).range(2..))]
        samples: u32,
        /// Override the motor stiction, N·mm.
        #[arg(long)]
        stiction: Option<f64>,
    },
    /// Pick adduction springs from a catalog; writes spring_selection.csv and design.toml.
    SelectSprings {
        #[command(flatten)]
        design: DesignArg,
        #[command(flatten)]
        out: OutArg,
        /// Spring catalog file; the built-in ten-entry catalog when omitted.
        #[arg(long, value_name = "FILE")]
        catalog: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_PRELOAD_STEP)]
        preload_step: f64,
        #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u32).range(2..))]
        samples: u32,
        /// Override the motor stiction, N·mm.
        #[arg(long)]
        stiction: Option<f64>,
    },
    /// Fit design parameters to target grasps.
    Optimize {
        #[arg(long, value_name = "FILE")]
        problem: PathBuf,
        #[command(flatten)]
        out: OutArg,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        budget: Option<u64>,
    },
    /// Write the built-in design file to stdout or to --out FILE.
    ExportDefault {
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Core(#[from] tendonhand::Error),
    #[error("{0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use tendonhand::Error as E;
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io { .. } => EXIT_IO,
            CliError::CheckFailed(_) => EXIT_CHECK_FAILED,
            CliError::Core(e) => match e.root() {
                E::Io { .. } => EXIT_IO,
                E::Parse { .. } => EXIT_PARSE,
                E::InvalidDesign(_)
                | E::InvalidInput(_)
                | E::UnknownJoint(_)
                | E::UnknownTendon(_)
                | E::JointOutOfRange { .. }
                | E::MotorOutOfRange { .. } => EXIT_VALIDATION,
                E::BudgetTooSmall { .. } | E::NoValidCandidate => EXIT_OPTIMIZATION,
                _ => EXIT_SOLVER,
            },
        }
    }
}

type CliResult<T> = Result<T, CliError>;

struct Style {
    color: bool,
}

impl Style {
    fn verdict(&self, pass: bool) -> String {
        let (text, code) = if pass { ("PASS", "32") } else { ("FAIL", "31") };
        if self.color {
            format!("\x1b[1;{code}m{text}\x1b[0m")
        } else {
            text.to_string()
        }
    }
}

fn load_design(arg: &DesignArg) -> CliResult<HandDesign> {
    match &arg.design {
        Some(path) => Ok(read_design(path)?),
        None => Ok(default_iss_hand()),
    }
}

fn with_stiction(mut design: HandDesign, stiction: Option<f64>) -> CliResult<HandDesign> {
    if let Some(s) = stiction {
        if !(s.is_finite() && s >= 0.0) {
            return Err(CliError::Usage(format!(
                "--stiction must be a finite nonnegative number, got {s}"
            )));
        }
        design.motor.stiction = s;
    }
    Ok(design)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> CliResult<PathBuf> {
    let io = |path: &Path, e: std::io::Error| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| io(&path, e))?;
    Ok(path)
}

fn parse_contact(design: &HandDesign, arg: &str) -> CliResult<ScheduledContact> {
    let bad = || CliError::Usage(format!("--contact expects JOINT@MOTOR=CAP, got `{arg}`"));
    let (joint, rest) = arg.split_once('@').ok_or_else(bad)?;
    let (motor, cap) = rest.split_once('=').ok_or_else(bad)?;
    let motor: f64 = motor.trim().parse().map_err(|_| bad())?;
    let cap: f64 = cap.trim().parse().map_err(|_| bad())?;
    design.joint_index(joint.trim())?;
    Ok(ScheduledContact::new(motor, joint.trim(), cap))
}

fn emit(out: &mut dyn Write, text: &str) -> CliResult<()> {
    out.write_all(text.as_bytes()).map_err(|e| CliError::Io {
        path: "<stdout>".into(),
        message: e.to_string(),
    })
}

fn execute(cli: Cli, out: &mut dyn Write, style: &Style) -> CliResult<()> {
    match cli.command {
        Command::Classify(arg) => {
            let design = load_design(&arg)?;
            let mut text = String::from("tendon\trole\tstops\tcell\n");
            for tendon in &design.tendons {
                let c = classify_paradigm(&design, &tendon.id)?;
                let stops: Vec<&str> = tendon.stops.iter().map(|s| s.joint.as_str()).collect();
                text += &format!("{}\t{}\t{}\t{}\n", tendon.id, tendon.role, stops.join(","), c.cell);
            }
            emit(out, &text)
        }
        Command::Validate(arg) => {
            let path = arg.design.clone();
            let design = match &path {
                Some(p) => match read_design(p) {
                    Err(tendonhand::Error::InvalidDesign(v)) => {
                        let text: String = v.iter().map(|v| format!("{v}\n")).collect();
                        emit(out, &text)?;
                        return Err(tendonhand::Error::InvalidDesign(v).into());
                    }
                    other => other?,
                },
                None => default_iss_hand(),
            };
            let violations = validate_design(&design);
            if violations.is_empty() {
                emit(
                    out,
                    &format!(
                        "valid: {} joints, {} tendons\n",
                        design.joints.len(),
                        design.tendons.len()
                    ),
                )
            } else {
                Err(tendonhand::Error::InvalidDesign(violations).into())
            }
        }
        Command::Simulate {
            design,
            out: dir,
            samples,
            contact,
        } => {
            let design = load_design(&design)?;
            let schedule = contact
                .iter()
                .map(|c| parse_contact(&design, c))
                .collect::<CliResult<Vec<_>>>()?;
            let grid = motor_grid(&design, samples as usize);
            let (trace, stall) = match simulate_closing(&design, &grid, &schedule) {
                Err(tendonhand::Error::AtSample { index, source })
                    if index > 0 && matches!(*source, tendonhand::Error::Infeasible(_)) =>
                {
                    (simulate_closing(&design, &grid[..index], &schedule)?, Some(grid[index]))
                }
                other => (other?, None),
            };
            write_file(&dir.out, "trace.csv", &table::trace_csv(&design, &trace))?;
            write_file(&dir.out, "events.csv", &table::events_csv(&trace))?;
            let mut text = format!("{} samples, {} events\n", trace.samples.len(), trace.events.len());
            if let Some(m) = stall {
                text += &format!("  motor stalls before motor angle {}\n", format_number(m));
            }
            for e in &trace.events {
                text += &format!(
                    "  {} {} at motor angle {}\n",
                    e.kind,
                    e.subject,
                    format_number(e.motor_angle)
                );
            }
            emit(out, &text)
        }
        Command::Profile {
            design,
            out: dir,
            samples,
            stiction,
        } => {
            let design = with_stiction(load_design(&design)?, stiction)?;
            let profile = torque_profile(&design, samples as usize)?;
            write_file(&dir.out, "torque_profile.csv", &table::profile_csv(&profile))?;
            emit(
                out,
                &format!(
                    "{} samples, max |net| = {} N·mm, stiction {} N·mm\n",
                    profile.len(),
                    format_number(profile.max_abs_net()),
                    format_number(profile.stiction)
                ),
            )
        }
        Command::Check {
            design,
            samples,
            stiction,
        } => {
            let design = with_stiction(load_design(&design)?, stiction)?;
            let profile = torque_profile(&design, samples as usize)?;
            let zone = check_qualified_zone(&profile)?;
            let text = format!(
                "max |net| < {} N·mm: {}\nworst |net| = {} N·mm at motor angle {} rad, margin {} N·mm\n",
                format_number(profile.stiction),
                style.verdict(zone.pass),
                format_number(profile.max_abs_net()),
                format_number(zone.worst_angle),
                format_number(-zone.worst_violation),
            );
            emit(out, &text)?;
            if zone.pass {
                Ok(())
            } else {
                Err(CliError::CheckFailed(format!(
                    "net shaft torque leaves the stiction band by {} N·mm",
                    format_number(zone.worst_violation)
                )))
            }
        }
        Command::SelectSprings {
            design,
            out: dir,
            catalog,
            preload_step,
            samples,
            stiction,
        } => {
            let design = with_stiction(load_design(&design)?, stiction)?;
            let catalog = match catalog {
                Some(path) => read_catalog(&path)?,
                None => iss_spring_catalog(),
            };
            let s = select_adduction_springs(&design, &catalog, preload_step, samples as usize)?;
            let report = format!(
                "catalog_index,stiffness,preload,max_abs_net,stiction,pass,candidates\n{},{},{},{},{},{},{}\n",
                s.catalog_index,
                format_number(s.stiffness),
                format_number(s.preload),
                format_number(s.max_abs_net),
                format_number(design.motor.stiction),
                s.pass,
                s.candidates_evaluated
            );
            write_file(&dir.out, "spring_selection.csv", &report)?;
            write_file(&dir.out, "design.toml", &design_to_toml(&s.design))?;
            emit(
                out,
                &format!(
                    "chose catalog entry {} (k = {} N·mm/rad, preload {} rad) from {} candidates\nmax |net| < {} N·mm: {} (max |net| = {} N·mm)\n",
                    s.catalog_index,
                    format_number(s.stiffness),
                    format_number(s.preload),
                    s.candidates_evaluated,
                    format_number(design.motor.stiction),
                    style.verdict(s.pass),
                    format_number(s.max_abs_net)
                ),
            )
        }
        Command::Optimize {
            problem,
            out: dir,
            seed,
            budget,
        } => {
            let mut problem = read_problem(&problem)?;
            if let Some(seed) = seed {
                problem.seed = seed;
            }
            if let Some(budget) = budget {
                problem.budget =
                    usize::try_from(budget).map_err(|_| CliError::Usage("--budget is too large".into()))?;
            }
            let result = optimize_design(&problem)?;
            write_file(&dir.out, "optimized_design.toml", &design_to_toml(&result.design))?;
            write_file(&dir.out, "restarts.csv", &table::restarts_csv(&result))?;
            write_file(&dir.out, "residuals.csv", &table::residuals_csv(&result))?;
            write_file(&dir.out, "history.csv", &table::history_csv(&result))?;
            write_file(&dir.out, "parameters.csv", &table::parameters_csv(&problem, &result))?;
            emit(
                out,
                &format!(
                    "objective {} -> {} in {} evaluations over {} restarts\n",
                    format_number(result.initial_objective),
                    format_number(result.objective),
                    result.evaluations,
                    result.restarts.len()
                ),
            )
        }
        Command::ExportDefault { out: path } => {
            let text = design_to_toml(&default_iss_hand());
            match path {
                Some(path) => {
                    let dir = path
                        .parent()
                        .filter(|p| !p.as_os_str().is_empty())
                        .unwrap_or(Path::new("."));
                    let name = path
                        .file_name()
                        .ok_or_else(|| CliError::Usage(format!("`{}` is not a file path", path.display())))?;
                    write_file(dir, &name.to_string_lossy(), &text)?;
                    Ok(())
                }
                None => emit(out, &text),
            }
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Reports go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let style = Style {
        color: std::io::stdout().is_terminal() && std::env::var_os("NO_COLOR").is_none(),
    };
    match execute(cli, out, &style) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
