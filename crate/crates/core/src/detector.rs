//! Detector models and outcome labels.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DetectorKind {
    /// Binary vacuum / non-vacuum detector; heralds on "on".
    OnOff,
    /// Photon-number-resolving detector heralding on exactly ℓ counts.
    Pnr(usize),
    /// PNR detector post-selected as "on" for ≥ m counts; m = 1 is on-off.
    Threshold(usize),
}

/// One detector label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Off,
    On,
    Count(usize),
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Off => write!(f, "off"),
            Outcome::On => write!(f, "on"),
            Outcome::Count(k) => write!(f, "{k}"),
        }
    }
}

/// Detector kind plus efficiency η_d ∈ (0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub kind: DetectorKind,
    pub efficiency: f64,
}

impl DetectorModel {
    pub fn on_off() -> Self {
        Self {
            kind: DetectorKind::OnOff,
            efficiency: 1.0,
        }
    }

    pub fn pnr(count: usize) -> Result<Self> {
        check_range("ℓ", count as f64, count >= 1, "ℓ ≥ 1")?;
        Ok(Self {
            kind: DetectorKind::Pnr(count),
            efficiency: 1.0,
        })
    }

    pub fn threshold(m: usize) -> Result<Self> {
        check_range("m", m as f64, m >= 1, "m ≥ 1")?;
        Ok(Self {
            kind: DetectorKind::Threshold(m),
            efficiency: 1.0,
        })
    }

    pub fn with_efficiency(self, efficiency: f64) -> Result<Self> {
        check_range(
            "η_d",
            efficiency,
            efficiency > 0.0 && efficiency <= 1.0,
            "(0, 1]",
        )?;
        Ok(Self { efficiency, ..self })
    }

    pub fn is_ideal(&self) -> bool {
        self.efficiency == 1.0
    }

    /// The outcome both detectors must report for a successful run.
    pub fn herald(&self) -> Outcome {
        match self.kind {
            DetectorKind::OnOff | DetectorKind::Threshold(_) => Outcome::On,
            DetectorKind::Pnr(l) => Outcome::Count(l),
        }
    }

    /// Every label of the detector when photon numbers are bounded by `n_max`.
    pub fn outcomes(&self, n_max: usize) -> Vec<Outcome> {
        match self.kind {
            DetectorKind::OnOff | DetectorKind::Threshold(_) => vec![Outcome::Off, Outcome::On],
            DetectorKind::Pnr(_) => (0..=n_max).map(Outcome::Count).collect(),
        }
    }

    /// Probability that the detector reports `outcome` when `k` photons arrive.
    pub fn response(&self, outcome: Outcome, k: usize) -> Result<f64> {
        let eff = self.efficiency;
        // P(count = c | k photons) after binomial thinning
        let count_prob = |c: usize| -> f64 {
            if c > k {
                0.0
            } else if eff == 1.0 {
                if c == k {
                    1.0
                } else {
                    0.0
                }
            } else {
                crate::combin::binomial(k, c)
                    * eff.powi(c as i32)
                    * (1.0 - eff).powi((k - c) as i32)
            }
        };
        let off_below = |m: usize| -> f64 { (0..m.min(k + 1)).map(count_prob).sum() };
        match (self.kind, outcome) {
            (DetectorKind::OnOff, Outcome::Off) => Ok((1.0 - eff).powi(k as i32)),
            (DetectorKind::OnOff, Outcome::On) => Ok(1.0 - (1.0 - eff).powi(k as i32)),
            (DetectorKind::Threshold(m), Outcome::Off) => Ok(off_below(m)),
            (DetectorKind::Threshold(m), Outcome::On) => Ok(1.0 - off_below(m)),
            (DetectorKind::Pnr(_), Outcome::Count(c)) => Ok(count_prob(c)),
            _ => Err(Error::InvalidOutcome {
                outcome: outcome.to_string(),
                detector: self.to_string(),
            }),
        }
    }
}

impl fmt::Display for DetectorModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            DetectorKind::OnOff => write!(f, "onoff")?,
            DetectorKind::Pnr(l) => write!(f, "pnr:{l}")?,
            DetectorKind::Threshold(m) => write!(f, "threshold:{m}")?,
        }
        if !self.is_ideal() {
            write!(f, "@{}", self.efficiency)?;
        }
        Ok(())
    }
}

impl FromStr for DetectorModel {
    type Err = Error;

    /// Parses `onoff`, `pnr:<L>` or `threshold:<M>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidSpec(format!(
                "unknown detector `{s}` (expected onoff, pnr:<L> or threshold:<M>)"
            ))
        };
        let s = s.trim();
        if s.eq_ignore_ascii_case("onoff") || s.eq_ignore_ascii_case("on-off") {
            return Ok(Self::on_off());
        }
        let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
        let n: usize = arg.trim().parse().map_err(|_| bad())?;
        match kind.trim().to_ascii_lowercase().as_str() {
            "pnr" => Self::pnr(n),
            "threshold" => Self::threshold(n),
            _ => Err(bad()),
        }
    }
}

/// What happens after the lossy channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Scenario {
    /// No subtraction: the amplitude-damped state itself.
    Before,
    /// Photon subtraction on both arms, heralded by identical detectors.
    Distilled(DetectorModel),
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scenario::Before => write!(f, "before"),
            Scenario::Distilled(d) => write!(f, "{d}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_cli_labels() {
        assert_eq!(
            "onoff".parse::<DetectorModel>().unwrap(),
            DetectorModel::on_off()
        );
        assert_eq!(
            "pnr:3".parse::<DetectorModel>().unwrap().kind,
            DetectorKind::Pnr(3)
        );
        assert_eq!(
            "threshold:2".parse::<DetectorModel>().unwrap().kind,
            DetectorKind::Threshold(2)
        );
        assert!("pnr:0".parse::<DetectorModel>().is_err());
        assert!("pnr".parse::<DetectorModel>().is_err());
        assert!("apd".parse::<DetectorModel>().is_err());
    }

    #[test]
    fn display_round_trips() {
        for s in ["onoff", "pnr:2", "threshold:3"] {
            assert_eq!(s.parse::<DetectorModel>().unwrap().to_string(), s);
        }
    }

    #[test]
    fn thinned_on_weight() {
        let d = DetectorModel::on_off().with_efficiency(0.5).unwrap();
        assert!((d.response(Outcome::On, 2).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(d.response(Outcome::On, 0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_foreign_labels() {
        assert!(DetectorModel::on_off()
            .response(Outcome::Count(1), 1)
            .is_err());
        assert!(DetectorModel::pnr(1)
            .unwrap()
            .response(Outcome::On, 1)
            .is_err());
        assert!(DetectorModel::on_off().with_efficiency(0.0).is_err());
    }
}
