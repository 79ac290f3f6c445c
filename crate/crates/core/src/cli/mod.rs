//! Batch verification harness behind the `hlpweak` binary.
//!
//! Every subcommand takes `key=value` parameters, optionally preloaded from a
//! `--config` file of `key = value` lines; command-line values win. Exit codes:
//! 0 when every check passes, 1 when any fails, 2 on usage or domain errors.

pub mod commands;
pub mod params;
pub mod report;
pub mod verify;

use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::quad::QuadratureConfig;

pub use params::Params;
pub use report::{Format, Reference, Relation, VerificationReport};
pub use verify::{RunContext, VerifyOutput};

#[derive(Debug, Parser)]
#[command(
    name = "hlpweak",
    version,
    about = "Weak-type norms and sharp constants of HLP and multilinear kernel operators on radial functions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Emit JSON.
    #[arg(long, global = true, conflicts_with_all = ["csv", "human"])]
    pub json: bool,

    /// Emit CSV.
    #[arg(long, global = true, conflicts_with = "human")]
    pub csv: bool,

    /// Emit a readable table (default).
    #[arg(long, global = true)]
    pub human: bool,

    /// Relative tolerance for all quadratures.
    #[arg(long, global = true, value_name = "TOL")]
    pub rel_tol: Option<f64>,

    /// Seed for Monte Carlo estimates.
    #[arg(long, global = true, value_name = "SEED")]
    pub mc_seed: Option<u64>,

    /// Omit the timestamp and report every runtime as 0 ms.
    #[arg(long, global = true)]
    pub no_timestamp: bool,

    /// File of `key = value` lines; command-line parameters override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Theorem {
    Thm21,
    Thm22,
    Thm31,
}

impl Theorem {
    fn as_str(self) -> &'static str {
        match self {
            Theorem::Thm21 => "thm21",
            Theorem::Thm22 => "thm22",
            Theorem::Thm31 => "thm31",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print every closed-form constant for a parameter set.
    Constants {
        #[arg(value_name = "KEY=VALUE")]
        params: Vec<String>,
    },
    /// Run a full verification pipeline.
    Verify {
        theorem: Theorem,
        #[arg(value_name = "KEY=VALUE")]
        params: Vec<String>,
    },
    /// Apply an operator: hlp, hlp-quad, hlp-symbolic or kernel.
    Apply {
        operator: String,
        #[arg(value_name = "KEY=VALUE")]
        params: Vec<String>,
    },
    /// Weak norm and distribution curve of a power-log function.
    WeakNorm {
        #[arg(value_name = "KEY=VALUE")]
        params: Vec<String>,
    },
    /// Maximise the weak-to-strong ratio over an extremal family.
    Probe {
        #[arg(value_name = "KEY=VALUE")]
        params: Vec<String>,
    },
}

/// What the binary prints and returns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub exit_code: i32,
}

impl Cli {
    pub fn format(&self) -> Format {
        if self.json {
            Format::Json
        } else if self.csv {
            Format::Csv
        } else {
            Format::Human
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run_from_args<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                Outcome {
                    stdout: String::new(),
                    stderr: text,
                    exit_code: 2,
                }
            } else {
                Outcome {
                    stdout: text,
                    stderr: String::new(),
                    exit_code: 0,
                }
            }
        }
    }
}

pub fn run(cli: &Cli) -> Outcome {
    match execute(cli) {
        Ok((stdout, failed)) => Outcome {
            stdout,
            stderr: String::new(),
            exit_code: i32::from(failed),
        },
        Err(e) => Outcome {
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
            exit_code: 2,
        },
    }
}

fn context(cli: &Cli, params: &Params) -> Result<RunContext> {
    let mut cfg = QuadratureConfig::default();
    let rel_tol = match cli.rel_tol {
        Some(t) => Some(t),
        None => params.opt_f64("rel_tol")?,
    };
    if let Some(t) = rel_tol {
        cfg.rel_tol = t;
    }
    if let Some(seed) = cli.mc_seed.or(params.u64_opt("mc_seed")?) {
        cfg.mc_seed = seed;
    }
    cfg.validate()?;
    Ok(RunContext {
        cfg,
        rel_tol_set: rel_tol.is_some(),
        no_timestamp: cli.no_timestamp,
    })
}

fn execute(cli: &Cli) -> Result<(String, bool)> {
    let raw = match &cli.command {
        Command::Constants { params }
        | Command::Verify { params, .. }
        | Command::Apply { params, .. }
        | Command::WeakNorm { params }
        | Command::Probe { params } => params,
    };
    let file = match &cli.config {
        Some(path) => Params::from_config_file(path)?,
        None => Params::default(),
    };
    let params = file.overridden_by(Params::from_args(raw)?);
    let ctx = context(cli, &params)?;
    let start = Instant::now();

    let (name, rendered) = match &cli.command {
        Command::Verify { theorem, .. } => {
            let out = verify::verify(theorem.as_str(), &params, &ctx)?;
            let failed = !out.all_pass();
            let json = serde_json::to_value(&out).map_err(json_err)?;
            let r = commands::Rendered {
                json,
                csv: report::reports_csv(&out.reports),
                human: verify_human(&out),
                failed,
            };
            (format!("verify {}", theorem.as_str()), r)
        }
        Command::Constants { .. } => ("constants".to_string(), commands::constants(&params, &ctx)?),
        Command::Apply { operator, .. } => (
            format!("apply {operator}"),
            commands::apply(operator, &params, &ctx)?,
        ),
        Command::WeakNorm { .. } => ("weak-norm".to_string(), commands::weak_norm_cmd(&params, &ctx)?),
        Command::Probe { .. } => ("probe".to_string(), commands::probe(&params, &ctx)?),
    };
    let text = match cli.format() {
        Format::Json => {
            let mut env = json!({
                "command": name,
                "params": params.as_map(),
                "rel_tol": ctx.cfg.rel_tol,
                "mc_seed": ctx.cfg.mc_seed,
                "result": rendered.json,
                "all_pass": !rendered.failed,
                "runtime_ms": ctx.elapsed_ms(start),
            });
            if !cli.no_timestamp {
                let secs = SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0);
                env["timestamp_unix"] = Value::from(secs);
            }
            let mut s = serde_json::to_string_pretty(&env).map_err(json_err)?;
            s.push('\n');
            s
        }
        Format::Csv => rendered.csv,
        Format::Human => rendered.human,
    };
    Ok((text, rendered.failed))
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Parse(format!("cannot serialise output: {e}"))
}

fn verify_human(out: &VerifyOutput) -> String {
    let mut s = format!("verify {}\n", out.theorem);
    if let Some(h) = &out.hypotheses {
        for c in &h.checks {
            s.push_str(&format!(
                "  hypothesis {:<48} {} {} {}  {}\n",
                c.name,
                c.lhs,
                c.relation,
                c.rhs,
                if c.pass { "ok" } else { "VIOLATED" }
            ));
        }
        if !h.overall {
            s.push_str("  hypothesis-violated: running anyway\n");
        }
    }
    s.push_str(&report::reports_human(&out.reports));
    s
}
