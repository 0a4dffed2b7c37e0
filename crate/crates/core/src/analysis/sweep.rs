//! Parameter sweeps and the figure presets built on them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::bounds::{find_lambda_opt, find_tl, tl_closed_form};
use super::eval::{evaluate, EvalOptions, EvalPath};
use super::table::{Cell, Report, Table};
use crate::closed::{self, en_before, f_before};
use crate::detector::{DetectorModel, Scenario};
use crate::error::{Error, Result};
use crate::params::ProtocolParams;

/// A full grid λ × η × T × detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub lambdas: Vec<f64>,
    pub etas: Vec<f64>,
    pub ts: Vec<f64>,
    pub scenarios: Vec<Scenario>,
    pub path: EvalPath,
    pub options: EvalOptions,
}

impl SweepSpec {
    /// Rejects empty or out-of-domain grids before anything is computed.
    pub fn validate(&self) -> Result<()> {
        for (name, g) in [("λ", &self.lambdas), ("η", &self.etas), ("T", &self.ts)] {
            if g.is_empty() {
                return Err(Error::InvalidSpec(format!("empty {name} grid")));
            }
        }
        if self.scenarios.is_empty() {
            return Err(Error::InvalidSpec("empty detector list".into()));
        }
        for &l in &self.lambdas {
            for &e in &self.etas {
                for &t in &self.ts {
                    ProtocolParams::new(l, e, t)?;
                }
            }
        }
        Ok(())
    }

    /// Grid points in output order: detector, then η, then T, then λ.
    pub fn points(&self) -> Vec<(Scenario, ProtocolParams)> {
        let mut out = Vec::new();
        for s in &self.scenarios {
            for &e in &self.etas {
                for &t in &self.ts {
                    for &l in &self.lambdas {
                        let t = if *s == Scenario::Before { 1.0 } else { t };
                        out.push((*s, ProtocolParams::new(l, e, t).expect("validated grid")));
                    }
                }
            }
        }
        out
    }
}

pub const SWEEP_COLUMNS: [&str; 22] = [
    "index",
    "detector",
    "lambda",
    "eta",
    "t",
    "path",
    "en_before",
    "en_after",
    "p_succ",
    "fidelity",
    "f_before",
    "en_analytic",
    "en_oracle",
    "p_analytic",
    "p_oracle",
    "max_path_diff",
    "k_max",
    "tail_mass",
    "n_max",
    "norm_deficit",
    "fidelity_cutoff_bound",
    "error",
];

fn sweep_row(index: usize, s: &Scenario, p: &ProtocolParams, spec: &SweepSpec) -> Vec<Cell> {
    result_row(
        index,
        s,
        p,
        spec.path,
        &evaluate(p, s, spec.path, &spec.options),
    )
}

fn result_row(
    index: usize,
    s: &Scenario,
    p: &ProtocolParams,
    path: EvalPath,
    result: &Result<super::eval::DistillationResult>,
) -> Vec<Cell> {
    let mut row = vec![
        Cell::Int(index as i64),
        Cell::Text(s.to_string()),
        Cell::Num(p.lambda()),
        Cell::Num(p.eta()),
        Cell::Num(p.t()),
    ];
    let base = (
        en_before(p.lambda(), p.eta()).ok(),
        f_before(p.lambda(), p.eta()).ok(),
    );
    match result {
        Ok(r) => {
            let main = r.primary();
            let d = r.diagnostics;
            row.extend([
                Cell::Text(r.path().to_string()),
                Cell::opt(base.0),
                Cell::Num(main.log_negativity),
                Cell::Num(main.probability),
                Cell::opt(main.fidelity),
                Cell::opt(base.1),
                Cell::opt(r.analytic.map(|a| a.log_negativity)),
                Cell::opt(r.oracle.map(|o| o.log_negativity)),
                Cell::opt(r.analytic.map(|a| a.probability)),
                Cell::opt(r.oracle.map(|o| o.probability)),
                Cell::opt(r.max_path_discrepancy()),
                Cell::opt_int(d.k_max),
                Cell::opt(d.tail_mass),
                Cell::opt_int(d.n_max),
                Cell::opt(d.norm_deficit),
                Cell::opt(d.fidelity_cutoff_bound),
                Cell::Empty,
            ]);
        }
        Err(e) => {
            row.push(Cell::Text(path.to_string()));
            row.push(Cell::opt(base.0));
            row.extend(std::iter::repeat_n(Cell::Empty, 3));
            row.push(Cell::opt(base.1));
            row.extend(std::iter::repeat_n(Cell::Empty, 10));
            row.push(Cell::Text(e.to_string()));
        }
    }
    row
}

/// Evaluates every grid point in parallel; rows come back in grid order and
/// failed points keep their row with the error text.
pub fn sweep(spec: &SweepSpec) -> Result<Table> {
    spec.validate()?;
    let rows: Vec<Vec<Cell>> = spec
        .points()
        .par_iter()
        .enumerate()
        .map(|(i, (s, p))| sweep_row(i, s, p, spec))
        .collect();
    let mut t = Table::new("sweep", SWEEP_COLUMNS.to_vec());
    for r in rows {
        t.push(r);
    }
    Ok(t)
}

/// One protocol point as a single-row sweep table; unlike [`sweep`], an
/// evaluation error is returned instead of recorded.
pub fn point(
    s: &Scenario,
    p: &ProtocolParams,
    path: EvalPath,
    options: &EvalOptions,
) -> Result<Table> {
    let r = evaluate(p, s, path, options);
    if let Err(e) = &r {
        return Err(e.clone());
    }
    let mut t = Table::new("point", SWEEP_COLUMNS.to_vec());
    t.push(result_row(0, s, p, path, &r));
    Ok(t)
}

/// Metadata block shared by every report.
pub fn meta(command: &str, params: Value, options: &EvalOptions) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("command".into(), Value::from(command));
    m.insert("parameters".into(), params);
    m.insert(
        "tolerances".into(),
        serde_json::to_value(options).expect("options serialize"),
    );
    m.insert(
        "versions".into(),
        json!({ "cvdistill": env!("CARGO_PKG_VERSION"), "format": 1 }),
    );
    m
}

/// Evenly spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Figures whose data the presets reproduce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Figure {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
}

impl std::str::FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fig2" => Ok(Figure::Fig2),
            "fig3" => Ok(Figure::Fig3),
            "fig4" => Ok(Figure::Fig4),
            "fig5" => Ok(Figure::Fig5),
            "fig6" => Ok(Figure::Fig6),
            "fig7" => Ok(Figure::Fig7),
            "fig8" => Ok(Figure::Fig8),
            _ => Err(Error::InvalidSpec(format!(
                "unknown figure `{s}` (expected fig2 … fig8)"
            ))),
        }
    }
}

impl std::fmt::Display for Figure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let n = match self {
            Figure::Fig2 => 2,
            Figure::Fig3 => 3,
            Figure::Fig4 => 4,
            Figure::Fig5 => 5,
            Figure::Fig6 => 6,
            Figure::Fig7 => 7,
            Figure::Fig8 => 8,
        };
        write!(f, "fig{n}")
    }
}

fn onoff() -> Scenario {
    Scenario::Distilled(DetectorModel::on_off())
}

fn pnr(l: usize) -> Scenario {
    Scenario::Distilled(DetectorModel::pnr(l).expect("ℓ ≥ 1"))
}

fn threshold(m: usize) -> Scenario {
    Scenario::Distilled(DetectorModel::threshold(m).expect("m ≥ 1"))
}

/// E_N and P against λ for several T, plus λ_opt and E_N max against T.
fn onoff_panels(eta: f64, opts: &EvalOptions) -> Result<Vec<Table>> {
    let curves = sweep(&SweepSpec {
        lambdas: linspace(0.01, 0.99, 99),
        etas: vec![eta],
        ts: vec![0.1, 0.5, 0.7, 0.9, 0.99],
        scenarios: vec![onoff()],
        path: EvalPath::Analytic,
        options: EvalOptions {
            with_fidelity: false,
            ..*opts
        },
    })?;
    let mut curves = curves;
    curves.name = "en_and_probability".into();

    let ts: Vec<f64> = (2..=19).map(|i| i as f64 * 0.05).chain([0.99]).collect();
    let rows: Vec<Vec<Cell>> = ts
        .par_iter()
        .map(|&t| {
            let limit = (1.0 / (1.0 - t)).log2();
            match find_lambda_opt(eta, t, &onoff(), opts) {
                Ok(r) => vec![
                    Cell::Num(t),
                    Cell::Num(r.lambda_opt),
                    Cell::Num(r.en_max),
                    Cell::Num(limit),
                    Cell::Empty,
                ],
                Err(e) => vec![
                    Cell::Num(t),
                    Cell::Empty,
                    Cell::Empty,
                    Cell::Num(limit),
                    Cell::Text(e.to_string()),
                ],
            }
        })
        .collect();
    let mut opt = Table::new(
        "lambda_opt",
        vec!["t", "lambda_opt", "en_max", "en_limit_lambda_to_1", "error"],
    );
    for r in rows {
        opt.push(r);
    }
    Ok(vec![curves, opt])
}

/// T_L against λ for each (η, detector).
pub fn tl_panel(
    etas: &[f64],
    scenarios: &[Scenario],
    lambdas: &[f64],
    opts: &EvalOptions,
) -> Table {
    let mut points = Vec::new();
    for s in scenarios {
        for &e in etas {
            for &l in lambdas {
                points.push((*s, e, l));
            }
        }
    }
    let rows: Vec<Vec<Cell>> = points
        .par_iter()
        .map(|(s, e, l)| {
            let closed = (*s == onoff() && *e == 1.0)
                .then(|| tl_closed_form(*l).ok().map(|r| r.t_l))
                .flatten();
            let mut row = vec![Cell::Text(s.to_string()), Cell::Num(*e), Cell::Num(*l)];
            match find_tl(*l, *e, s, opts) {
                Ok(r) => row.extend([
                    Cell::Num(r.t_l),
                    Cell::opt(closed),
                    Cell::Num(r.residual),
                    Cell::Empty,
                ]),
                Err(err) => row.extend([
                    Cell::Empty,
                    Cell::opt(closed),
                    Cell::Empty,
                    Cell::Text(err.to_string()),
                ]),
            }
            row
        })
        .collect();
    let mut t = Table::new(
        "t_l",
        vec![
            "detector",
            "eta",
            "lambda",
            "t_l",
            "t_l_closed",
            "residual",
            "error",
        ],
    );
    for r in rows {
        t.push(r);
    }
    t
}

/// The data behind one figure, as one or more tables.
pub fn figure(fig: Figure, opts: &EvalOptions) -> Result<Vec<Table>> {
    let no_fid = EvalOptions {
        with_fidelity: false,
        ..*opts
    };
    let fig4_etas = [0.01, 0.1, 0.5, 1.0];
    match fig {
        Figure::Fig2 => onoff_panels(1.0, opts),
        Figure::Fig3 => onoff_panels(0.5, opts),
        Figure::Fig4 => Ok(vec![tl_panel(
            &fig4_etas,
            &[onoff()],
            &linspace(0.02, 0.98, 49),
            &no_fid,
        )]),
        Figure::Fig5 => {
            let mut curves = sweep(&SweepSpec {
                lambdas: linspace(0.01, 0.99, 99),
                etas: vec![0.5],
                ts: vec![0.95],
                scenarios: vec![onoff(), pnr(1), pnr(2), pnr(3), pnr(4)],
                path: EvalPath::Analytic,
                options: no_fid,
            })?;
            curves.name = "en_and_probability".into();
            // success probability against squeezing strength r = artanh λ
            let mut by_r = Table::new(
                "probability_vs_r",
                vec!["detector", "r", "lambda", "p_succ"],
            );
            for s in [onoff(), pnr(1), pnr(2), pnr(3), pnr(4)] {
                for r in linspace(0.05, 5.0, 100) {
                    let l = r.tanh();
                    let p = match s {
                        Scenario::Distilled(DetectorModel {
                            kind: crate::detector::DetectorKind::Pnr(n),
                            ..
                        }) => closed::p_pnr(l, 0.5, 0.95, n),
                        _ => closed::p_onoff(l, 0.5, 0.95),
                    };
                    by_r.push(vec![
                        Cell::Text(s.to_string()),
                        Cell::Num(r),
                        Cell::Num(l),
                        Cell::opt(p.ok()),
                    ]);
                }
            }
            Ok(vec![curves, by_r])
        }
        Figure::Fig6 => Ok(vec![tl_panel(
            &fig4_etas,
            &[pnr(1), pnr(2), pnr(3), pnr(4)],
            &linspace(0.02, 0.98, 49),
            &no_fid,
        )]),
        Figure::Fig7 => {
            let mut curves = sweep(&SweepSpec {
                lambdas: linspace(0.05, 0.8, 16),
                etas: vec![0.5],
                ts: vec![0.95],
                scenarios: vec![threshold(1), threshold(2), threshold(3)],
                path: EvalPath::Oracle,
                options: no_fid,
            })?;
            curves.name = "en_and_probability".into();
            let bounds = tl_panel(
                &[0.5],
                &[threshold(1), threshold(2), threshold(3)],
                &[0.1, 0.3, 0.5],
                &no_fid,
            );
            Ok(vec![curves, bounds])
        }
        Figure::Fig8 => {
            let mut curves = sweep(&SweepSpec {
                lambdas: linspace(0.02, 0.8, 40),
                etas: vec![0.5],
                ts: vec![0.95],
                scenarios: vec![Scenario::Before, pnr(1), pnr(2), pnr(3)],
                path: EvalPath::Analytic,
                options: EvalOptions {
                    with_fidelity: true,
                    ..*opts
                },
            })?;
            curves.name = "fidelity".into();
            Ok(vec![curves])
        }
    }
}

/// A figure wrapped with metadata.
pub fn figure_report(fig: Figure, opts: &EvalOptions) -> Result<Report> {
    let tables = figure(fig, opts)?;
    Ok(Report::new(
        meta("figure", json!({ "figure": fig.to_string() }), opts),
        tables,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_grid_is_rejected() {
        let spec = SweepSpec {
            lambdas: vec![],
            etas: vec![0.5],
            ts: vec![0.9],
            scenarios: vec![onoff()],
            path: EvalPath::Analytic,
            options: EvalOptions::default(),
        };
        assert!(matches!(sweep(&spec), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn failed_points_keep_their_row() {
        let spec = SweepSpec {
            lambdas: vec![0.0, 0.5],
            etas: vec![0.5],
            ts: vec![0.9],
            scenarios: vec![onoff()],
            path: EvalPath::Analytic,
            options: EvalOptions::default(),
        };
        let t = sweep(&spec).unwrap();
        assert_eq!(t.rows.len(), 2);
        let err = t.column("error").unwrap();
        assert!(matches!(t.rows[0][err], Cell::Text(_)));
        assert_eq!(t.rows[1][err], Cell::Empty);
    }

    #[test]
    fn grid_order_is_lambda_fastest() {
        let spec = SweepSpec {
            lambdas: vec![0.1, 0.2],
            etas: vec![0.5, 1.0],
            ts: vec![0.9],
            scenarios: vec![onoff()],
            path: EvalPath::Analytic,
            options: EvalOptions::default(),
        };
        let pts = spec.points();
        assert_eq!(pts[1].1.lambda(), 0.2);
        assert_eq!(pts[2].1.eta(), 1.0);
    }
}
