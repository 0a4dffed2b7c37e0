//! The acceptance suite: every cross-check between the closed forms, the
//! block series and the Fock oracle, with pinned tolerances.

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bounds::{find_lambda_opt, find_tl};
use super::eval::{closed_form_values, en_after, EvalOptions};
use super::table::{Cell, Table};
use crate::blocks::{block_family, FamilyOptions};
use crate::centro::{centro_decompose, check_double_symmetric, negativity_skew, SkewOptions};
use crate::closed;
use crate::detector::{DetectorModel, Scenario};
use crate::error::{Error, Result};
use crate::fock::{
    make_tmss, negativity_eigen, run_oracle_with, BeamsplitterCoeffs, BsUnitary, FockCutoff,
    OracleConfig, OracleOutcome, EIGEN_CLAMP_REL,
};
use crate::params::{ProtocolParams, SeriesTolerance};
use crate::teleport::{fidelity_from_blocks, fidelity_oracle, of_gamma_block};

pub const GRID_LAMBDAS: [f64; 4] = [0.1, 0.3, 0.5, 0.7];
pub const GRID_ETAS: [f64; 2] = [0.5, 1.0];
pub const GRID_TS: [f64; 3] = [0.7, 0.9, 0.95];
/// Fock cutoff the suite compares against.
pub const ORACLE_N_MAX: usize = 30;

pub fn grid_detectors() -> [DetectorModel; 3] {
    [
        DetectorModel::on_off(),
        DetectorModel::pnr(1).expect("ℓ = 1"),
        DetectorModel::pnr(2).expect("ℓ = 2"),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidateOptions {
    /// Flip the sign of ξ_{n,m} in every beamsplitter table (mutation canary).
    pub xi_flip: Option<(usize, usize)>,
    /// Multiplies every upper-bound tolerance.
    pub tolerance_scale: f64,
    pub n_max: usize,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            xi_flip: None,
            tolerance_scale: 1.0,
            n_max: ORACLE_N_MAX,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    /// Passes when residual < tolerance.
    Below,
    /// Passes when residual > tolerance.
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    /// Criterion number plus a letter for sub-checks, e.g. "6b".
    pub id: String,
    pub name: String,
    pub passed: bool,
    pub residual: f64,
    pub relation: Relation,
    pub tolerance: f64,
    /// Informational checks are reported but never fail the suite.
    pub informational: bool,
    pub detail: String,
}

impl CheckResult {
    fn below(id: &str, name: &str, residual: f64, tolerance: f64, detail: String) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
            passed: residual < tolerance,
            residual,
            relation: Relation::Below,
            tolerance,
            informational: false,
            detail,
        }
    }

    fn above(id: &str, name: &str, residual: f64, threshold: f64, detail: String) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
            passed: residual > threshold,
            residual,
            relation: Relation::Above,
            tolerance: threshold,
            informational: false,
            detail,
        }
    }

    fn failed(id: &str, name: &str, err: &Error) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
            passed: false,
            residual: f64::NAN,
            relation: Relation::Below,
            tolerance: f64::NAN,
            informational: false,
            detail: format!("error: {err}"),
        }
    }

    fn informational(mut self) -> Self {
        self.informational = true;
        self
    }

    /// `PASS 1a  name  residual=… < tol=…  detail`
    pub fn line(&self) -> String {
        let status = match (self.passed, self.informational) {
            (true, _) => "PASS",
            (false, true) => "INFO",
            (false, false) => "FAIL",
        };
        let rel = match self.relation {
            Relation::Below => "<",
            Relation::Above => ">",
        };
        format!(
            "{status} {:<4} {}: residual={:.3e} {rel} {:.1e}  [{}]",
            self.id, self.name, self.residual, self.tolerance, self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || c.informational)
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(
            "validate",
            vec![
                "id",
                "name",
                "status",
                "residual",
                "relation",
                "tolerance",
                "detail",
            ],
        );
        for c in &self.checks {
            let status = match (c.passed, c.informational) {
                (true, _) => "pass",
                (false, true) => "info",
                (false, false) => "fail",
            };
            t.push(vec![
                Cell::Text(c.id.clone()),
                Cell::Text(c.name.clone()),
                Cell::Text(status.into()),
                Cell::Num(c.residual),
                Cell::Text(
                    if c.relation == Relation::Below {
                        "<"
                    } else {
                        ">"
                    }
                    .into(),
                ),
                Cell::Num(c.tolerance),
                Cell::Text(c.detail.clone()),
            ]);
        }
        t
    }
}

/// Everything the grid criteria need about one point.
#[derive(Debug, Clone)]
struct GridPoint {
    label: String,
    closed_en: f64,
    closed_p: f64,
    oracle_en: f64,
    oracle_p: f64,
    fidelity_oracle: f64,
    fidelity_oracle_blocks: f64,
    symmetry_dev: f64,
    skew_en: f64,
    eigen_en: f64,
    indefinite_blocks: usize,
    /// Threshold(1) oracle minus on-off oracle, for on-off points.
    threshold_gap: Option<(f64, f64)>,
}

/// Runs the suite, caching the expensive grid between criteria.
pub struct Validator {
    opts: ValidateOptions,
    grid: OnceLock<std::result::Result<Vec<GridPoint>, Error>>,
}

fn max_by<'a, T>(
    items: impl IntoIterator<Item = &'a T>,
    f: impl Fn(&T) -> f64,
) -> (f64, Option<&'a T>)
where
    T: 'a,
{
    let mut best = (f64::NEG_INFINITY, None);
    for it in items {
        let v = f(it);
        if v > best.0 || v.is_nan() {
            best = (v, Some(it));
        }
    }
    best
}

impl Validator {
    pub fn new(opts: ValidateOptions) -> Self {
        Self {
            opts,
            grid: OnceLock::new(),
        }
    }

    pub fn options(&self) -> &ValidateOptions {
        &self.opts
    }

    fn tol(&self, t: f64) -> f64 {
        t * self.opts.tolerance_scale
    }

    fn cutoff(&self) -> FockCutoff {
        FockCutoff::new(self.opts.n_max)
    }

    /// Beamsplitter with the optional mutation applied.
    fn unitary(&self, tau: f64, cutoff: FockCutoff) -> Result<BsUnitary> {
        let mut xi = BeamsplitterCoeffs::new(tau, cutoff)?;
        if let Some((n, m)) = self.opts.xi_flip {
            xi.flip_sign(n, m);
        }
        Ok(BsUnitary::from_coeffs(&xi))
    }

    fn oracle(
        &self,
        p: &ProtocolParams,
        s: &Scenario,
        cutoff: FockCutoff,
    ) -> Result<OracleOutcome> {
        let cfg = OracleConfig {
            tail_tol: 1.0,
            ..OracleConfig::new(cutoff)
        };
        run_oracle_with(
            p,
            s,
            &cfg,
            &self.unitary(p.eta(), cutoff)?,
            &self.unitary(p.t(), cutoff)?,
        )
    }

    fn grid_point(&self, l: f64, e: f64, t: f64, det: DetectorModel) -> Result<GridPoint> {
        let p = ProtocolParams::new(l, e, t)?;
        let s = Scenario::Distilled(det);
        let (closed_en, closed_p) = closed_form_values(&p, &s)?;
        let fam = block_family(&p, &s, &FamilyOptions::default())?;
        let mut symmetry_dev = 0.0f64;
        let mut indefinite_blocks = 0;
        for c in fam.blocks() {
            symmetry_dev = symmetry_dev.max(check_double_symmetric(c, 1.0).deviation);
            let split = centro_decompose(c, 1.0)?;
            if !split.is_split_definite(EIGEN_CLAMP_REL * c.amax()) {
                indefinite_blocks += 1;
            }
        }
        let skew = negativity_skew(
            &fam,
            &SkewOptions {
                symmetry_tol: 1.0,
                check_definiteness: false,
            },
        )?;
        let eigen = negativity_eigen(&fam)?;
        let o = self.oracle(&p, &s, self.cutoff())?;
        let threshold_gap = if det == DetectorModel::on_off() {
            let th = self.oracle(
                &p,
                &Scenario::Distilled(DetectorModel::threshold(1)?),
                self.cutoff(),
            )?;
            Some((
                (th.negativity.log_negativity - o.negativity.log_negativity).abs(),
                (th.probability - o.probability).abs(),
            ))
        } else {
            None
        };
        Ok(GridPoint {
            label: format!("λ={l} η={e} T={t} {det}"),
            closed_en,
            closed_p,
            oracle_en: o.negativity.log_negativity,
            oracle_p: o.probability,
            fidelity_oracle: fidelity_oracle(&o.state)?.fidelity,
            fidelity_oracle_blocks: fidelity_from_blocks(&o.blocks)?,
            symmetry_dev,
            skew_en: skew.negativity.log_negativity,
            eigen_en: eigen.log_negativity,
            indefinite_blocks,
            threshold_gap,
        })
    }

    fn grid(&self) -> std::result::Result<&[GridPoint], &Error> {
        self.grid
            .get_or_init(|| {
                let mut pts = Vec::new();
                for &l in &GRID_LAMBDAS {
                    for &e in &GRID_ETAS {
                        for &t in &GRID_TS {
                            for d in grid_detectors() {
                                pts.push((l, e, t, d));
                            }
                        }
                    }
                }
                pts.par_iter()
                    .map(|&(l, e, t, d)| self.grid_point(l, e, t, d))
                    .collect()
            })
            .as_ref()
            .map(|v| v.as_slice())
    }

    fn grid_check(
        &self,
        id: &str,
        name: &str,
        tol: f64,
        f: impl Fn(&GridPoint) -> f64,
    ) -> CheckResult {
        match self.grid() {
            Ok(g) => {
                let (worst, at) = max_by(g, &f);
                let detail = format!("worst at {}", at.map_or("-", |p| p.label.as_str()));
                CheckResult::below(id, name, worst, self.tol(tol), detail)
            }
            Err(e) => CheckResult::failed(id, name, e),
        }
    }

    /// Criterion 1: closed forms against the Fock oracle on the grid.
    pub fn criterion1(&self) -> Vec<CheckResult> {
        vec![
            self.grid_check("1a", "E_N closed form vs oracle", 1e-6, |p| {
                (p.closed_en - p.oracle_en).abs()
            }),
            self.grid_check("1b", "P closed form vs oracle", 1e-8, |p| {
                (p.closed_p - p.oracle_p).abs()
            }),
        ]
    }

    /// Criterion 2: before-distillation E_N against the symplectic route.
    pub fn criterion2(&self) -> Vec<CheckResult> {
        let mut worst = (0.0f64, String::new());
        for i in 0..20 {
            for j in 0..20 {
                let (l, e) = (i as f64 / 20.0, j as f64 / 19.0);
                let d = match (closed::en_before(l, e), closed::gaussian_en(l, e)) {
                    (Ok(a), Ok(b)) => (a - b).abs(),
                    _ => f64::NAN,
                };
                if d > worst.0 || d.is_nan() {
                    worst = (d, format!("λ={l} η={e:.4}"));
                }
            }
        }
        vec![CheckResult::below(
            "2",
            "closed-form vs symplectic E_N (20x20)",
            worst.0,
            self.tol(1e-12),
            format!("worst at {}", worst.1),
        )]
    }

    /// Criterion 3: double symmetry, skew trace and definiteness.
    pub fn criterion3(&self) -> Vec<CheckResult> {
        let mut out = vec![
            self.grid_check("3a", "double symmetry of conditioned blocks", 1e-12, |p| {
                p.symmetry_dev
            }),
            self.grid_check("3b", "skew-trace vs eigen E_N", 1e-10, |p| {
                (p.skew_en - p.eigen_en).abs()
            }),
            self.grid_check("3c", "indefinite centro splits (count)", 1.0, |p| {
                p.indefinite_blocks as f64
            }),
        ];
        // the same for the states before distillation
        let mut dev = (0.0f64, String::new());
        let mut gap = (0.0f64, String::new());
        let mut bad = 0usize;
        let mut err = None;
        for &l in &GRID_LAMBDAS {
            for &e in &GRID_ETAS {
                let r = (|| -> Result<()> {
                    let fam = block_family(
                        &ProtocolParams::before(l, e)?,
                        &Scenario::Before,
                        &FamilyOptions::default(),
                    )?;
                    for c in fam.blocks() {
                        let d = check_double_symmetric(c, 1.0).deviation;
                        if d > dev.0 {
                            dev = (d, format!("λ={l} η={e}"));
                        }
                        if !centro_decompose(c, 1.0)?.is_split_definite(EIGEN_CLAMP_REL * c.amax())
                        {
                            bad += 1;
                        }
                    }
                    let s = negativity_skew(
                        &fam,
                        &SkewOptions {
                            symmetry_tol: 1.0,
                            check_definiteness: false,
                        },
                    )?;
                    let g = (s.negativity.log_negativity - negativity_eigen(&fam)?.log_negativity)
                        .abs();
                    if g > gap.0 {
                        gap = (g, format!("λ={l} η={e}"));
                    }
                    Ok(())
                })();
                if let Err(e) = r {
                    err = Some(e);
                }
            }
        }
        if let Some(e) = err {
            out.push(CheckResult::failed("3d", "before-distillation blocks", &e));
        } else {
            out.push(CheckResult::below(
                "3d",
                "double symmetry of before blocks",
                dev.0,
                self.tol(1e-12),
                dev.1,
            ));
            out.push(CheckResult::below(
                "3e",
                "skew-trace vs eigen E_N, before",
                gap.0,
                self.tol(1e-10),
                gap.1,
            ));
            out.push(CheckResult::below(
                "3f",
                "indefinite before splits (count)",
                bad as f64,
                1.0,
                String::new(),
            ));
        }
        out
    }

    /// Criterion 4: the block family before distillation has unit trace.
    pub fn criterion4(&self) -> Vec<CheckResult> {
        let mut worst = (0.0f64, String::new());
        for &l in &GRID_LAMBDAS {
            for &e in &GRID_ETAS {
                let d = ProtocolParams::before(l, e)
                    .and_then(|p| block_family(&p, &Scenario::Before, &FamilyOptions::default()))
                    .map_or(f64::NAN, |f| (f.total_trace() - 1.0).abs());
                if d > worst.0 || d.is_nan() {
                    worst = (d, format!("λ={l} η={e}"));
                }
            }
        }
        vec![CheckResult::below(
            "4",
            "Σ Tr C_K = 1 before distillation",
            worst.0,
            self.tol(1e-10),
            worst.1,
        )]
    }

    /// Criterion 5: pinned values, each also checked against the oracle.
    pub fn criterion5(&self) -> Vec<CheckResult> {
        let onoff = Scenario::Distilled(DetectorModel::on_off());
        let pnr1 = Scenario::Distilled(DetectorModel::pnr(1).expect("ℓ = 1"));
        type Oracle<'a> = Box<dyn Fn() -> Result<f64> + 'a>;
        // id, name, closed-form value, target, tolerance, oracle
        type Pin<'a> = (&'a str, &'a str, Result<f64>, f64, f64, Oracle<'a>);
        let oracle_en = |l: f64, e: f64, t: f64, s: Scenario| -> Oracle {
            Box::new(move || {
                Ok(self
                    .oracle(&ProtocolParams::new(l, e, t)?, &s, self.cutoff())?
                    .negativity
                    .log_negativity)
            })
        };
        let oracle_p = |l: f64, e: f64, t: f64, s: Scenario| -> Oracle {
            Box::new(move || {
                Ok(self
                    .oracle(&ProtocolParams::new(l, e, t)?, &s, self.cutoff())?
                    .probability)
            })
        };
        let oracle_f = |l: f64, e: f64| -> Oracle {
            Box::new(move || {
                let o = self.oracle(
                    &ProtocolParams::before(l, e)?,
                    &Scenario::Before,
                    self.cutoff(),
                )?;
                Ok(fidelity_oracle(&o.state)?.fidelity)
            })
        };
        let pins: Vec<Pin> = vec![
            (
                "5a",
                "en_before(0.5, 0.5) = log2(1.5)",
                closed::en_before(0.5, 0.5),
                1.5f64.log2(),
                1e-9,
                oracle_en(0.5, 0.5, 1.0, Scenario::Before),
            ),
            (
                "5b",
                "en_pure(0.5, 0.9)",
                closed::en_pure(0.5, 0.9),
                2.0597,
                1e-4,
                oracle_en(0.5, 1.0, 0.9, onoff),
            ),
            (
                "5c",
                "p_pure(0.5, 0.5)",
                closed::p_pure(0.5, 0.5),
                0.0857143,
                1e-7,
                oracle_p(0.5, 1.0, 0.5, onoff),
            ),
            (
                "5d",
                "p_pnr(0.5, 0.5, 0.95, 1)",
                closed::p_pnr(0.5, 0.5, 0.95, 1),
                3.2736e-4,
                1e-8,
                oracle_p(0.5, 0.5, 0.95, pnr1),
            ),
            (
                "5e",
                "en_pnr(0.5, 0.5, 0.95, 1)",
                closed::en_pnr(0.5, 0.5, 0.95, 1),
                0.7220,
                1e-4,
                oracle_en(0.5, 0.5, 0.95, pnr1),
            ),
            (
                "5f",
                "f_before(0.5, 0.5)",
                closed::f_before(0.5, 0.5),
                0.600,
                1e-9,
                oracle_f(0.5, 0.5),
            ),
            (
                "5g",
                "f_before(0.5, 1)",
                closed::f_before(0.5, 1.0),
                0.75,
                1e-12,
                oracle_f(0.5, 1.0),
            ),
        ];
        let mut out = Vec::new();
        for (id, name, value, target, tol, oracle) in pins {
            match value {
                Ok(v) => {
                    out.push(CheckResult::below(
                        id,
                        name,
                        (v - target).abs(),
                        self.tol(tol),
                        format!("value {v:.10} vs {target}"),
                    ));
                    let oid = format!("{id}'");
                    let oname = format!("{name} oracle agreement");
                    match oracle() {
                        Ok(o) => out.push(CheckResult::below(
                            &oid,
                            &oname,
                            (o - v).abs(),
                            self.tol(tol),
                            format!("oracle {o:.10}"),
                        )),
                        Err(e) => out.push(CheckResult::failed(&oid, &oname, &e)),
                    }
                }
                Err(e) => out.push(CheckResult::failed(id, name, &e)),
            }
        }
        out
    }

    /// Criterion 6: the on-off and PNR bounds T_L.
    pub fn criterion6(&self) -> Vec<CheckResult> {
        let mut out = Vec::new();
        let grid: Vec<f64> = (1..=99).map(|i| i as f64 / 100.0).collect();
        match grid
            .iter()
            .map(|&l| closed::tl_onoff_closed(l))
            .collect::<Result<Vec<_>>>()
        {
            Ok(v) => {
                let (step, at) = v
                    .windows(2)
                    .zip(&grid)
                    .map(|(w, l)| (w[1] - w[0], *l))
                    .fold((f64::INFINITY, 0.0), |a, b| if b.0 < a.0 { b } else { a });
                out.push(CheckResult::above(
                    "6a",
                    "T_L closed form increasing on [0.01, 0.99]",
                    step,
                    0.0,
                    format!("smallest step after λ={at}"),
                ));
            }
            Err(e) => out.push(CheckResult::failed("6a", "T_L closed form increasing", &e)),
        }
        for (id, l, limit, informational) in [
            ("6b", 0.01, 0.5, false),
            ("6c", 0.99, 1.0, false),
            ("6b*", 1e-3, 0.5, true),
            ("6c*", 0.999, 1.0, true),
        ] {
            let name = format!("T_L({l}) near its limit {limit}");
            match closed::tl_onoff_closed(l) {
                Ok(v) => {
                    let c = CheckResult::below(
                        id,
                        &name,
                        (v - limit).abs(),
                        self.tol(1e-3),
                        format!("T_L = {v:.8}"),
                    );
                    out.push(if informational { c.informational() } else { c });
                }
                Err(e) => out.push(CheckResult::failed(id, &name, &e)),
            }
        }
        let onoff = Scenario::Distilled(DetectorModel::on_off());
        let opts = EvalOptions::default();
        let mut worst = (0.0f64, String::new());
        let mut err = None;
        for l in [0.1, 0.3, 0.5, 0.7, 0.9] {
            match (find_tl(l, 1.0, &onoff, &opts), closed::tl_onoff_closed(l)) {
                (Ok(b), Ok(c)) => {
                    let d = (b.t_l - c).abs();
                    if d > worst.0 {
                        worst = (d, format!("λ={l}"));
                    }
                }
                (Err(e), _) | (_, Err(e)) => err = Some(e),
            }
        }
        out.push(match err {
            Some(e) => CheckResult::failed("6d", "bisection vs closed-form T_L at η=1", &e),
            None => CheckResult::below(
                "6d",
                "bisection vs closed-form T_L at η=1",
                worst.0,
                self.tol(1e-6),
                worst.1,
            ),
        });
        for (k, l) in [1usize, 2, 3].into_iter().enumerate() {
            let id = format!("6{}", ['e', 'f', 'g'][k]);
            let name = format!("PNR({l}) T_L at λ=0.01 near 1/{}", l + 1);
            let s = Scenario::Distilled(DetectorModel::pnr(l).expect("ℓ ≥ 1"));
            let target = 1.0 / (l + 1) as f64;
            let mut worst = (0.0f64, String::new());
            let mut err = None;
            for e in [0.01, 0.1, 0.5, 1.0] {
                match find_tl(0.01, e, &s, &opts) {
                    Ok(b) => {
                        let d = (b.t_l - target).abs();
                        if d > worst.0 {
                            worst = (d, format!("η={e}: T_L = {:.6}", b.t_l));
                        }
                    }
                    Err(x) => err = Some(x),
                }
            }
            out.push(match err {
                Some(x) => CheckResult::failed(&id, &name, &x),
                None => CheckResult::below(&id, &name, worst.0, self.tol(1e-3), worst.1),
            });
        }
        out
    }

    /// Criterion 7: threshold detectors reduce to on-off at m = 1.
    pub fn criterion7(&self) -> Vec<CheckResult> {
        let tol = SeriesTolerance::default();
        let mut worst = (0.0f64, String::new());
        for &l in &GRID_LAMBDAS {
            for &e in &GRID_ETAS {
                for &t in &GRID_TS {
                    let d = match (closed::p_mixed(l, e, t, 1, &tol), closed::p_onoff(l, e, t)) {
                        (Ok(a), Ok(b)) => (a - b).abs(),
                        _ => f64::NAN,
                    };
                    if d > worst.0 || d.is_nan() {
                        worst = (d, format!("λ={l} η={e} T={t}"));
                    }
                }
            }
        }
        let mut out = vec![CheckResult::below(
            "7a",
            "p_mixed(m=1) vs p_onoff",
            worst.0,
            self.tol(1e-12),
            worst.1,
        )];
        out.push(
            self.grid_check("7b", "oracle Threshold(1) vs OnOff, E_N", 1e-12, |p| {
                p.threshold_gap.map_or(0.0, |g| g.0)
            }),
        );
        out.push(
            self.grid_check("7c", "oracle Threshold(1) vs OnOff, P", 1e-12, |p| {
                p.threshold_gap.map_or(0.0, |g| g.1)
            }),
        );
        match closed::p_mixed(0.99, 0.5, 0.95, 1, &tol) {
            Ok(v) => out.push(CheckResult::above(
                "7d",
                "p_mixed(0.99, 0.5, 0.95, 1) exceeds 0.9",
                v,
                0.9,
                String::new(),
            )),
            Err(e) => out.push(CheckResult::failed("7d", "p_mixed at λ=0.99", &e)),
        }
        out
    }

    /// Criterion 8: E_N after on-off distillation peaks below λ = 1.
    pub fn criterion8(&self) -> Vec<CheckResult> {
        let s = Scenario::Distilled(DetectorModel::on_off());
        let opts = EvalOptions::default();
        let r = find_lambda_opt(1.0, 0.9, &s, &opts).and_then(|o| {
            Ok((
                o,
                en_after(&ProtocolParams::new(0.999, 1.0, 0.9)?, &s, &opts)?,
            ))
        });
        match r {
            Ok((o, near_one)) => {
                let limit = 10f64.log2();
                vec![
                    CheckResult::above(
                        "8a",
                        "E_N(λ_opt) exceeds E_N(0.999)",
                        o.en_max - near_one,
                        0.0,
                        format!(
                            "λ_opt = {:.6}, E_N max = {:.6}, E_N(0.999) = {near_one:.6}",
                            o.lambda_opt, o.en_max
                        ),
                    ),
                    CheckResult::below(
                        "8b",
                        "E_N(0.999) within 5% of log2(10)",
                        (near_one - limit).abs() / limit,
                        self.tol(0.05),
                        String::new(),
                    ),
                ]
            }
            Err(e) => vec![CheckResult::failed("8", "λ_opt search", &e)],
        }
    }

    /// Criterion 9: fidelity identities and the PNR improvement.
    pub fn criterion9(&self) -> Vec<CheckResult> {
        let mut out =
            vec![
                self.grid_check("9a", "fidelity from blocks vs oracle operator", 1e-8, |p| {
                    (p.fidelity_oracle - p.fidelity_oracle_blocks).abs()
                }),
            ];
        let mut worst = 0.0f64;
        for k in 0..=20 {
            let m = of_gamma_block(k).matrix;
            let v = crate::teleport::FidelityOperatorBlock::factor(k);
            worst = worst
                .max((m.trace() - 0.5).abs())
                .max((&m - &v * v.transpose()).amax());
        }
        out.push(CheckResult::below(
            "9b",
            "O^Γ(K) rank one with trace 1/2, K ≤ 20",
            worst,
            self.tol(1e-12),
            String::new(),
        ));
        let s = Scenario::Distilled(DetectorModel::pnr(1).expect("ℓ = 1"));
        let lambdas: Vec<f64> = (1..=14).map(|i| i as f64 * 0.05).collect();
        let margins: Result<Vec<(f64, f64)>> = lambdas
            .iter()
            .map(|&l| {
                let p = ProtocolParams::new(l, 0.5, 0.95)?;
                let f = fidelity_from_blocks(&block_family(&p, &s, &FamilyOptions::default())?)?;
                Ok((f - closed::f_before(l, 0.5)?, l))
            })
            .collect();
        match margins {
            Ok(m) => {
                let (gap, at) =
                    m.into_iter()
                        .fold((f64::INFINITY, 0.0), |a, b| if b.0 < a.0 { b } else { a });
                out.push(CheckResult::above(
                    "9c",
                    "PNR(1) fidelity exceeds f_before for λ ≤ 0.7",
                    gap,
                    0.0,
                    format!("smallest margin at λ={at:.2}"),
                ));
            }
            Err(e) => out.push(CheckResult::failed("9c", "PNR(1) fidelity", &e)),
        }
        out
    }

    /// Beamsplitter sanity and truncation convergence.
    pub fn extras(&self) -> Vec<CheckResult> {
        let cutoff = self.cutoff();
        let mut unit = 0.0f64;
        let mut cols = 0.0f64;
        let mut err = None;
        for tau in [0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 0.95, 1.0] {
            match (
                self.unitary(tau, cutoff),
                BeamsplitterCoeffs::new(tau, cutoff),
            ) {
                (Ok(u), Ok(reference)) => {
                    unit = unit.max(u.unitarity_error());
                    cols = cols
                        .max(u.column_mismatch(&reference))
                        .max(u.generator_gap());
                }
                (Err(e), _) | (_, Err(e)) => err = Some(e),
            }
        }
        let mut out = match err {
            Some(e) => vec![CheckResult::failed("U1", "beamsplitter unitarity", &e)],
            None => vec![
                CheckResult::below(
                    "U1",
                    "beamsplitter unitary per photon-number subspace",
                    unit,
                    self.tol(1e-12),
                    format!("n_max = {}", cutoff.n_max()),
                ),
                CheckResult::below(
                    "U2",
                    "beamsplitter columns reproduce ξ",
                    cols,
                    self.tol(1e-12),
                    String::new(),
                ),
            ],
        };

        // E_N and P from n_max = 25 to 30
        let mut points = Vec::new();
        for &l in &GRID_LAMBDAS {
            for &e in &GRID_ETAS {
                for d in grid_detectors() {
                    points.push((l, e, d));
                }
            }
        }
        let diffs: Result<Vec<(f64, f64, String)>> = points
            .par_iter()
            .map(|&(l, e, d)| {
                let p = ProtocolParams::new(l, e, 0.9)?;
                let s = Scenario::Distilled(d);
                let a = self.oracle(&p, &s, FockCutoff::new(25))?;
                let b = self.oracle(&p, &s, FockCutoff::new(30))?;
                Ok((
                    (a.negativity.log_negativity - b.negativity.log_negativity).abs(),
                    (a.probability - b.probability).abs(),
                    format!("λ={l} η={e} T=0.9 {d}"),
                ))
            })
            .collect();
        match diffs {
            Ok(d) => {
                let (en, at_en) = max_by(&d, |x| x.0);
                let (p, at_p) = max_by(&d, |x| x.1);
                out.push(CheckResult::below(
                    "T1",
                    "oracle E_N change, n_max 25 → 30",
                    en,
                    self.tol(1e-8),
                    at_en.map_or(String::new(), |x| x.2.clone()),
                ));
                out.push(CheckResult::below(
                    "T2",
                    "oracle P change, n_max 25 → 30",
                    p,
                    self.tol(1e-8),
                    at_p.map_or(String::new(), |x| x.2.clone()),
                ));
            }
            Err(e) => out.push(CheckResult::failed("T1", "truncation convergence", &e)),
        }

        // positivity of a lossy state and its photon-number correlation
        let rho = make_tmss(0.5, cutoff).and_then(|s| {
            let u = self.unitary(0.5, cutoff)?;
            crate::fock::lossy_channel_with(&s, &u, 1.0)
        });
        match rho {
            Ok(r) => {
                out.push(CheckResult::above(
                    "S1",
                    "lossy state min eigenvalue",
                    r.min_eigenvalue(),
                    -1e-10,
                    "λ=0.5 η=0.5".into(),
                ));
                out.push(CheckResult::below(
                    "S2",
                    "cross-sector coherence of lossy state",
                    r.photon_correlation_violation(),
                    self.tol(1e-14),
                    "λ=0.5 η=0.5".into(),
                ));
            }
            Err(e) => out.push(CheckResult::failed("S1", "lossy state", &e)),
        }
        out
    }

    pub fn criterion(&self, n: usize) -> Vec<CheckResult> {
        match n {
            1 => self.criterion1(),
            2 => self.criterion2(),
            3 => self.criterion3(),
            4 => self.criterion4(),
            5 => self.criterion5(),
            6 => self.criterion6(),
            7 => self.criterion7(),
            8 => self.criterion8(),
            9 => self.criterion9(),
            _ => Vec::new(),
        }
    }

    pub fn run_all(&self) -> ValidationReport {
        let mut checks: Vec<CheckResult> = (1..=9).flat_map(|n| self.criterion(n)).collect();
        checks.extend(self.extras());
        ValidationReport { checks }
    }
}

/// Runs the whole suite.
pub fn validate(opts: &ValidateOptions) -> ValidationReport {
    Validator::new(*opts).run_all()
}
