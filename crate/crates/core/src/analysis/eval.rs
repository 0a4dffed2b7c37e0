use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::blocks::{block_family, BlockKind, FamilyOptions};
use crate::centro::SkewOptions;
use crate::closed;
use crate::detector::Scenario;
use crate::error::{Error, Result};
use crate::fock::{run_oracle, FockCutoff, OracleConfig, DEFAULT_PROB_FLOOR, DEFAULT_TAIL_TOL};
use crate::params::ProtocolParams;
use crate::teleport::{fidelity_from_blocks, fidelity_oracle};

/// Which machinery evaluates a protocol point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalPath {
    /// Closed forms, plus block series for the fidelity.
    Analytic,
    /// Truncated Fock-space simulation.
    Oracle,
    Both,
    /// Analytic where a series exists, oracle otherwise.
    Auto,
}

impl EvalPath {
    /// Whether the analytic path runs for scenario `s`.
    pub fn analytic_for(&self, s: &Scenario) -> bool {
        match self {
            EvalPath::Analytic => true,
            EvalPath::Both | EvalPath::Auto => has_analytic_path(s),
            EvalPath::Oracle => false,
        }
    }

    /// Whether the oracle runs for scenario `s`.
    pub fn oracle_for(&self, s: &Scenario) -> bool {
        match self {
            EvalPath::Oracle | EvalPath::Both => true,
            EvalPath::Auto => !has_analytic_path(s),
            EvalPath::Analytic => false,
        }
    }
}

impl fmt::Display for EvalPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalPath::Analytic => "analytic",
            EvalPath::Oracle => "oracle",
            EvalPath::Both => "both",
            EvalPath::Auto => "auto",
        })
    }
}

impl FromStr for EvalPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "analytic" => Ok(EvalPath::Analytic),
            "oracle" => Ok(EvalPath::Oracle),
            "both" => Ok(EvalPath::Both),
            "auto" => Ok(EvalPath::Auto),
            _ => Err(Error::InvalidSpec(format!(
                "unknown path `{s}` (expected analytic, oracle, both or auto)"
            ))),
        }
    }
}

/// Knobs shared by every evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub family: FamilyOptions,
    pub skew: SkewOptions,
    /// Fixed Fock cutoff; chosen from λ and `tail_tol` when absent.
    pub cutoff: Option<FockCutoff>,
    pub tail_tol: f64,
    pub prob_floor: f64,
    /// Also compute the teleportation fidelity (needs the block family on the analytic path).
    pub with_fidelity: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            family: FamilyOptions::default(),
            skew: SkewOptions::default(),
            cutoff: None,
            tail_tol: DEFAULT_TAIL_TOL,
            prob_floor: DEFAULT_PROB_FLOOR,
            with_fidelity: true,
        }
    }
}

impl EvalOptions {
    pub fn oracle_config(&self, lambda: f64) -> Result<OracleConfig> {
        let cutoff = match self.cutoff {
            Some(c) => c,
            None => FockCutoff::for_lambda(lambda, self.tail_tol)?,
        };
        Ok(OracleConfig {
            cutoff,
            tail_tol: self.tail_tol,
            prob_floor: self.prob_floor,
        })
    }
}

/// Quantities produced by one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathValues {
    /// Heralding probability (1 before distillation).
    pub probability: f64,
    /// Logarithmic negativity of the normalized state.
    pub log_negativity: f64,
    pub fidelity: Option<f64>,
}

/// Truncation bookkeeping of both paths.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Number of blocks in the analytic family.
    pub k_max: Option<usize>,
    pub tail_mass: Option<f64>,
    pub n_max: Option<usize>,
    pub norm_deficit: Option<f64>,
    pub fidelity_cutoff_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistillationResult {
    pub params: ProtocolParams,
    pub scenario: Scenario,
    pub analytic: Option<PathValues>,
    pub oracle: Option<PathValues>,
    pub diagnostics: Diagnostics,
}

impl DistillationResult {
    /// Analytic values when present, oracle values otherwise.
    pub fn primary(&self) -> &PathValues {
        self.analytic
            .as_ref()
            .or(self.oracle.as_ref())
            .expect("a result carries at least one path")
    }

    pub fn path(&self) -> EvalPath {
        match (self.analytic.is_some(), self.oracle.is_some()) {
            (true, true) => EvalPath::Both,
            (true, false) => EvalPath::Analytic,
            _ => EvalPath::Oracle,
        }
    }

    /// Largest |analytic − oracle| over E_N, probability and fidelity.
    pub fn max_path_discrepancy(&self) -> Option<f64> {
        let (a, o) = (self.analytic?, self.oracle?);
        let mut d = (a.log_negativity - o.log_negativity)
            .abs()
            .max((a.probability - o.probability).abs());
        if let (Some(x), Some(y)) = (a.fidelity, o.fidelity) {
            d = d.max((x - y).abs());
        }
        Some(d)
    }
}

/// Whether the analytic machinery covers a scenario.
pub fn has_analytic_path(s: &Scenario) -> bool {
    BlockKind::for_scenario(s).is_ok()
}

/// E_N and probability from the closed forms.
pub fn closed_form_values(p: &ProtocolParams, s: &Scenario) -> Result<(f64, f64)> {
    let (l, e, t) = (p.lambda(), p.eta(), p.t());
    match BlockKind::for_scenario(s)? {
        BlockKind::Before => Ok((closed::en_before(l, e)?, 1.0)),
        BlockKind::OnOff => Ok((closed::en_onoff(l, e, t)?, closed::p_onoff(l, e, t)?)),
        BlockKind::Pnr(n) => Ok((closed::en_pnr(l, e, t, n)?, closed::p_pnr(l, e, t, n)?)),
    }
}

fn analytic(
    p: &ProtocolParams,
    s: &Scenario,
    opts: &EvalOptions,
    diag: &mut Diagnostics,
) -> Result<PathValues> {
    let (log_negativity, probability) = closed_form_values(p, s)?;
    let fidelity = if !opts.with_fidelity {
        None
    } else if *s == Scenario::Before {
        Some(closed::f_before(p.lambda(), p.eta())?)
    } else {
        let fam = block_family(p, s, &opts.family)?;
        diag.k_max = Some(fam.len() - 1);
        diag.tail_mass = Some(fam.tail_mass());
        Some(fidelity_from_blocks(&fam)?)
    };
    Ok(PathValues {
        probability,
        log_negativity,
        fidelity,
    })
}

fn oracle(
    p: &ProtocolParams,
    s: &Scenario,
    opts: &EvalOptions,
    diag: &mut Diagnostics,
) -> Result<PathValues> {
    let cfg = opts.oracle_config(p.lambda())?;
    let out = run_oracle(p, s, &cfg)?;
    diag.n_max = Some(cfg.cutoff.n_max());
    diag.norm_deficit = Some(out.state.norm_deficit());
    let fidelity = if opts.with_fidelity {
        let f = fidelity_oracle(&out.state)?;
        diag.fidelity_cutoff_bound = Some(f.cutoff_bound);
        Some(f.fidelity)
    } else {
        None
    };
    Ok(PathValues {
        probability: if *s == Scenario::Before {
            1.0
        } else {
            out.probability
        },
        log_negativity: out.negativity.log_negativity,
        fidelity,
    })
}

/// Evaluates one protocol point.
///
/// With [`EvalPath::Both`], scenarios without a series (threshold detectors,
/// finite efficiency) silently fall back to the oracle alone; asking for
/// [`EvalPath::Analytic`] on them is an error.
pub fn evaluate(
    p: &ProtocolParams,
    s: &Scenario,
    path: EvalPath,
    opts: &EvalOptions,
) -> Result<DistillationResult> {
    let mut diag = Diagnostics::default();
    let analytic = path
        .analytic_for(s)
        .then(|| analytic(p, s, opts, &mut diag))
        .transpose()?;
    let oracle = path
        .oracle_for(s)
        .then(|| oracle(p, s, opts, &mut diag))
        .transpose()?;
    Ok(DistillationResult {
        params: *p,
        scenario: *s,
        analytic,
        oracle,
        diagnostics: diag,
    })
}

/// E_N after distillation, via closed forms where they exist, else the oracle.
pub fn en_after(p: &ProtocolParams, s: &Scenario, opts: &EvalOptions) -> Result<f64> {
    if has_analytic_path(s) {
        return Ok(closed_form_values(p, s)?.0);
    }
    let o = EvalOptions {
        with_fidelity: false,
        ..*opts
    };
    Ok(evaluate(p, s, EvalPath::Oracle, &o)?
        .primary()
        .log_negativity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::DetectorModel;

    #[test]
    fn both_paths_agree_at_moderate_squeezing() {
        let p = ProtocolParams::new(0.3, 0.5, 0.9).unwrap();
        let s = Scenario::Distilled(DetectorModel::on_off());
        let r = evaluate(&p, &s, EvalPath::Both, &EvalOptions::default()).unwrap();
        assert!(r.max_path_discrepancy().unwrap() < 1e-10);
        assert_eq!(r.path(), EvalPath::Both);
    }

    #[test]
    fn threshold_falls_back_to_oracle() {
        let p = ProtocolParams::new(0.3, 0.5, 0.9).unwrap();
        let s = Scenario::Distilled(DetectorModel::threshold(2).unwrap());
        let r = evaluate(&p, &s, EvalPath::Both, &EvalOptions::default()).unwrap();
        assert_eq!(r.path(), EvalPath::Oracle);
        assert!(evaluate(&p, &s, EvalPath::Analytic, &EvalOptions::default()).is_err());
        let auto = evaluate(&p, &s, EvalPath::Auto, &EvalOptions::default()).unwrap();
        assert_eq!(auto.path(), EvalPath::Oracle);
    }

    #[test]
    fn path_labels_round_trip() {
        for p in [
            EvalPath::Analytic,
            EvalPath::Oracle,
            EvalPath::Both,
            EvalPath::Auto,
        ] {
            assert_eq!(p.to_string().parse::<EvalPath>().unwrap(), p);
        }
        assert!("fast".parse::<EvalPath>().is_err());
    }
}
