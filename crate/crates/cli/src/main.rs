// `!(x > 0.0)` is used on purpose so that NaN fails range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use thiserror::Error;

use cvdistill::analysis::bounds::{find_lambda_opt, find_tl};
use cvdistill::analysis::sweep::{figure_report, meta, point, sweep, Figure, SweepSpec};
use cvdistill::analysis::validate::{ValidateOptions, Validator};
use cvdistill::analysis::{Cell, EvalOptions, EvalPath, Report, Table};
use cvdistill::detector::{DetectorModel, Scenario};
use cvdistill::error::Error as CoreError;
use cvdistill::fock::{FockCutoff, MAX_N_MAX};
use cvdistill::params::{ProtocolParams, SeriesTolerance};

const EXIT_VALIDATION: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("cannot write output: {0}")]
    Io(#[from] io::Error),
    #[error("{failed} validation check(s) failed")]
    Validation { failed: usize },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(e) if e.is_usage() => EXIT_USAGE,
            CliError::Core(e) if e.is_numerical() => EXIT_NUMERICAL,
            _ => EXIT_VALIDATION,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "cvdistill",
    version,
    about = "Photon-subtraction distillation of lossy two-mode squeezed vacuum"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// E_N and teleportation fidelity of the lossy state before distillation.
    Before {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        eta: f64,
        #[command(flatten)]
        common: Common,
    },
    /// One distillation point.
    Distill {
        #[command(flatten)]
        point: PointArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Full grid over λ, η, T and detectors. Grids are comma lists or start:stop:count.
    Sweep {
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        #[arg(long, default_value = "1")]
        eta: String,
        #[arg(long, default_value = "0.9")]
        t: String,
        /// Comma list; `before` is accepted too.
        #[arg(long, default_value = "onoff")]
        detector: String,
        #[command(flatten)]
        common: Common,
    },
    /// Smallest subtraction transmittance that still raises E_N.
    Tl {
        #[arg(long)]
        lambda: String,
        #[arg(long, default_value = "1")]
        eta: String,
        #[arg(long, default_value = "onoff")]
        detector: String,
        #[command(flatten)]
        common: Common,
    },
    /// Squeezing that maximizes E_N after distillation.
    LambdaOpt {
        #[arg(long, default_value = "1")]
        eta: String,
        #[arg(long)]
        t: String,
        #[arg(long, default_value = "onoff")]
        detector: String,
        #[command(flatten)]
        common: Common,
    },
    /// Teleportation fidelity after distillation.
    Fidelity {
        #[command(flatten)]
        point: PointArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Data behind one of the figure presets.
    Figure {
        name: String,
        #[command(flatten)]
        common: Common,
    },
    /// Run the acceptance suite; exits 1 if any check fails.
    Validate {
        /// Flip the sign of ξ_{n,m} (mutation canary), given as n,m.
        #[arg(long)]
        xi_flip: Option<String>,
        /// Multiplies every upper-bound tolerance.
        #[arg(long, default_value_t = 1.0)]
        tolerance_scale: f64,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
struct PointArgs {
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    eta: f64,
    #[arg(long)]
    t: f64,
    #[arg(long, default_value = "onoff")]
    detector: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct Common {
    /// Detector efficiency applied to every detector.
    #[arg(long)]
    det_eff: Option<f64>,
    /// Fixed Fock cutoff n_max for the oracle.
    #[arg(long)]
    cutoff: Option<usize>,
    /// Largest block index K of the analytic family.
    #[arg(long)]
    kmax: Option<usize>,
    /// Relative truncation tolerance of the block series.
    #[arg(long)]
    tol: Option<f64>,
    /// analytic, oracle, both, or auto (analytic where available).
    #[arg(long, default_value = "auto")]
    path: String,
    #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
    out: OutFormat,
    #[arg(long)]
    output: Option<PathBuf>,
}

impl Common {
    fn options(&self) -> CliResult<EvalOptions> {
        let mut o = EvalOptions::default();
        if let Some(n) = self.cutoff {
            if n == 0 || n > MAX_N_MAX {
                return Err(CliError::Usage(format!(
                    "--cutoff must be in 1..={MAX_N_MAX}"
                )));
            }
            o.cutoff = Some(FockCutoff::new(n));
        }
        if let Some(k) = self.kmax {
            o.family.k_cap = k;
        }
        if let Some(tol) = self.tol {
            if !(tol > 0.0 && tol < 1.0) {
                return Err(CliError::Usage("--tol must be in (0, 1)".into()));
            }
            o.family.eps_k = tol;
            o.family.series = SeriesTolerance::with_rel_tol(tol)?;
        }
        Ok(o)
    }

    fn path(&self) -> CliResult<EvalPath> {
        Ok(self.path.parse()?)
    }

    fn detector(&self, s: &str) -> CliResult<Scenario> {
        if s.trim().eq_ignore_ascii_case("before") {
            return Ok(Scenario::Before);
        }
        let mut d: DetectorModel = s.parse()?;
        if let Some(e) = self.det_eff {
            d = d.with_efficiency(e)?;
        }
        Ok(Scenario::Distilled(d))
    }

    fn detectors(&self, list: &str) -> CliResult<Vec<Scenario>> {
        list.split(',').map(|s| self.detector(s)).collect()
    }

    fn params(&self) -> Value {
        json!({
            "det_eff": self.det_eff,
            "cutoff": self.cutoff,
            "kmax": self.kmax,
            "tol": self.tol,
            "path": self.path,
        })
    }
}

/// `0.1,0.2` or `start:stop:count` (inclusive).
fn parse_grid(flag: &str, s: &str) -> CliResult<Vec<f64>> {
    let bad = |why: &str| CliError::Usage(format!("--{flag} `{s}`: {why}"));
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| bad("not a number"));
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts.as_slice() else {
            return Err(bad("expected start:stop:count"));
        };
        let n: usize = n
            .trim()
            .parse()
            .map_err(|_| bad("count must be a positive integer"))?;
        if n == 0 {
            return Err(bad("count must be a positive integer"));
        }
        return Ok(cvdistill::analysis::sweep::linspace(num(a)?, num(b)?, n));
    }
    let v = s.split(',').map(num).collect::<CliResult<Vec<_>>>()?;
    if v.is_empty() {
        return Err(bad("empty grid"));
    }
    Ok(v)
}

fn single<T>(rows: Vec<CliResult<T>>) -> CliResult<Vec<CliResult<T>>> {
    // a lone point reports its error through the exit code
    if rows.len() == 1 {
        if let Some(Err(_)) = rows.first() {
            return Err(rows
                .into_iter()
                .next()
                .and_then(|r| r.err())
                .expect("checked above"));
        }
    }
    Ok(rows)
}

fn error_text<T>(r: &CliResult<T>) -> Cell {
    match r {
        Ok(_) => Cell::Empty,
        Err(e) => Cell::Text(e.to_string()),
    }
}

fn emit(report: &Report, common: &Common) -> CliResult<()> {
    let text = match common.out {
        OutFormat::Csv => report.to_csv(),
        OutFormat::Json => report.to_json(),
    };
    match &common.output {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Before {
            lambda,
            eta,
            common,
        } => {
            let opts = common.options()?;
            let p = ProtocolParams::before(lambda, eta)?;
            let mut t = point(&Scenario::Before, &p, common.path()?, &opts)?;
            t.name = "before".into();
            let params = json!({ "lambda": lambda, "eta": eta, "common": common.params() });
            emit(
                &Report::new(meta("before", params, &opts), vec![t]),
                &common,
            )
        }
        Command::Distill { point: a, common } => {
            let opts = common.options()?;
            let p = ProtocolParams::new(a.lambda, a.eta, a.t)?;
            let s = common.detector(&a.detector)?;
            let mut t = point(&s, &p, common.path()?, &opts)?;
            t.name = "distill".into();
            let params = json!({ "lambda": a.lambda, "eta": a.eta, "t": a.t, "detector": s.to_string(), "common": common.params() });
            emit(
                &Report::new(meta("distill", params, &opts), vec![t]),
                &common,
            )
        }
        Command::Fidelity { point: a, common } => {
            let opts = EvalOptions {
                with_fidelity: true,
                ..common.options()?
            };
            let p = ProtocolParams::new(a.lambda, a.eta, a.t)?;
            let s = common.detector(&a.detector)?;
            let full = point(&s, &p, common.path()?, &opts)?;
            let keep = [
                "detector",
                "lambda",
                "eta",
                "t",
                "path",
                "fidelity",
                "f_before",
                "fidelity_cutoff_bound",
            ];
            let mut t = Table::new("fidelity", keep.to_vec());
            for row in &full.rows {
                t.push(
                    keep.iter()
                        .map(|c| row[full.column(c).expect("sweep column")].clone())
                        .collect(),
                );
            }
            let params = json!({ "lambda": a.lambda, "eta": a.eta, "t": a.t, "detector": s.to_string(), "common": common.params() });
            emit(
                &Report::new(meta("fidelity", params, &opts), vec![t]),
                &common,
            )
        }
        Command::Sweep {
            lambda,
            eta,
            t,
            detector,
            common,
        } => {
            let opts = common.options()?;
            let spec = SweepSpec {
                lambdas: parse_grid("lambda", &lambda)?,
                etas: parse_grid("eta", &eta)?,
                ts: parse_grid("t", &t)?,
                scenarios: common.detectors(&detector)?,
                path: common.path()?,
                options: opts,
            };
            let table = sweep(&spec)?;
            let params = json!({
                "lambda": spec.lambdas, "eta": spec.etas, "t": spec.ts,
                "detector": spec.scenarios.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
                "common": common.params(),
            });
            emit(
                &Report::new(meta("sweep", params, &opts), vec![table]),
                &common,
            )
        }
        Command::Tl {
            lambda,
            eta,
            detector,
            common,
        } => {
            let opts = common.options()?;
            let (lambdas, etas, dets) = (
                parse_grid("lambda", &lambda)?,
                parse_grid("eta", &eta)?,
                common.detectors(&detector)?,
            );
            let mut keys = Vec::new();
            for s in &dets {
                for &e in &etas {
                    for &l in &lambdas {
                        keys.push((*s, e, l));
                    }
                }
            }
            let results = single(
                keys.iter()
                    .map(|(s, e, l)| Ok(find_tl(*l, *e, s, &opts)?))
                    .collect(),
            )?;
            let mut t = Table::new(
                "t_l",
                vec![
                    "detector",
                    "eta",
                    "lambda",
                    "t_l",
                    "method",
                    "bracket_lo",
                    "bracket_hi",
                    "residual",
                    "single_crossing",
                    "error",
                ],
            );
            for ((s, e, l), r) in keys.iter().zip(&results) {
                let mut row = vec![Cell::Text(s.to_string()), Cell::Num(*e), Cell::Num(*l)];
                match r {
                    Ok(b) => row.extend([
                        Cell::Num(b.t_l),
                        Cell::Text(
                            serde_json::to_value(b.method)
                                .ok()
                                .and_then(|v| v.as_str().map(String::from))
                                .unwrap_or_default(),
                        ),
                        Cell::Num(b.bracket.0),
                        Cell::Num(b.bracket.1),
                        Cell::Num(b.residual),
                        Cell::Text(b.single_crossing.to_string()),
                    ]),
                    Err(_) => row.extend(std::iter::repeat_n(Cell::Empty, 6)),
                }
                row.push(error_text(r));
                t.push(row);
            }
            let params = json!({ "lambda": lambdas, "eta": etas, "detector": dets.iter().map(|s| s.to_string()).collect::<Vec<_>>(), "common": common.params() });
            emit(&Report::new(meta("tl", params, &opts), vec![t]), &common)
        }
        Command::LambdaOpt {
            eta,
            t,
            detector,
            common,
        } => {
            let opts = common.options()?;
            let (etas, ts, dets) = (
                parse_grid("eta", &eta)?,
                parse_grid("t", &t)?,
                common.detectors(&detector)?,
            );
            let mut keys = Vec::new();
            for s in &dets {
                for &e in &etas {
                    for &tt in &ts {
                        keys.push((*s, e, tt));
                    }
                }
            }
            let results = single(
                keys.iter()
                    .map(|(s, e, tt)| Ok(find_lambda_opt(*e, *tt, s, &opts)?))
                    .collect(),
            )?;
            let mut table = Table::new(
                "lambda_opt",
                vec![
                    "detector",
                    "eta",
                    "t",
                    "lambda_opt",
                    "en_max",
                    "plateau_lo",
                    "plateau_hi",
                    "error",
                ],
            );
            for ((s, e, tt), r) in keys.iter().zip(&results) {
                let mut row = vec![Cell::Text(s.to_string()), Cell::Num(*e), Cell::Num(*tt)];
                match r {
                    Ok(o) => row.extend([
                        Cell::Num(o.lambda_opt),
                        Cell::Num(o.en_max),
                        Cell::opt(o.plateau.map(|p| p.0)),
                        Cell::opt(o.plateau.map(|p| p.1)),
                    ]),
                    Err(_) => row.extend(std::iter::repeat_n(Cell::Empty, 4)),
                }
                row.push(error_text(r));
                table.push(row);
            }
            let params = json!({ "eta": etas, "t": ts, "detector": dets.iter().map(|s| s.to_string()).collect::<Vec<_>>(), "common": common.params() });
            emit(
                &Report::new(meta("lambda-opt", params, &opts), vec![table]),
                &common,
            )
        }
        Command::Figure { name, common } => {
            let fig: Figure = name.parse()?;
            let report = figure_report(fig, &common.options()?)?;
            emit(&report, &common)
        }
        Command::Validate {
            xi_flip,
            tolerance_scale,
            common,
        } => {
            let xi_flip = xi_flip
                .map(|s| {
                    let bad =
                        || CliError::Usage(format!("--xi-flip `{s}`: expected n,m with m ≤ n"));
                    let (n, m) = s.split_once(',').ok_or_else(bad)?;
                    let (n, m): (usize, usize) = (
                        n.trim().parse().map_err(|_| bad())?,
                        m.trim().parse().map_err(|_| bad())?,
                    );
                    if m > n {
                        return Err(bad());
                    }
                    Ok((n, m))
                })
                .transpose()?;
            if !(tolerance_scale > 0.0) {
                return Err(CliError::Usage("--tolerance-scale must be positive".into()));
            }
            let n_max = common.cutoff.unwrap_or(ValidateOptions::default().n_max);
            if n_max == 0 || n_max > MAX_N_MAX {
                return Err(CliError::Usage(format!(
                    "--cutoff must be in 1..={MAX_N_MAX}"
                )));
            }
            if let Some((n, _)) = xi_flip {
                if n > n_max {
                    return Err(CliError::Usage(format!(
                        "--xi-flip row {n} is beyond the cutoff {n_max}"
                    )));
                }
            }
            let vopts = ValidateOptions {
                xi_flip,
                tolerance_scale,
                n_max,
            };
            let report = Validator::new(vopts).run_all();
            for c in &report.checks {
                eprintln!("{}", c.line());
            }
            let params =
                json!({ "xi_flip": xi_flip, "tolerance_scale": tolerance_scale, "n_max": n_max });
            emit(
                &Report::new(
                    meta("validate", params, &EvalOptions::default()),
                    vec![report.to_table()],
                ),
                &common,
            )?;
            let failed = report
                .checks
                .iter()
                .filter(|c| !c.passed && !c.informational)
                .count();
            if failed > 0 {
                return Err(CliError::Validation { failed });
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
